//! Legacy ASCII VTK export of voxel fields (STRUCTURED_POINTS).
//!
//! Voxel values are written as point data at cell centers, x fastest, which
//! matches the grid's storage order. Void voxels get the caller's fill
//! value. Floats are printed with Rust's shortest round-trip formatting, so
//! a read-back reproduces every value bit-exactly.

use std::io::Write as _;
use std::path::Path;

use crate::field::ScalarField;
use crate::grid::VoxelGrid;

use super::IoError;

pub fn write_vtk(
    path: &Path,
    grid: &VoxelGrid,
    field: &ScalarField,
    fill: f64,
) -> Result<(), IoError> {
    assert!(field.matches_grid(grid), "field/grid mismatch");
    let f = std::fs::File::create(path).map_err(|e| IoError::file(path, e))?;
    let mut w = std::io::BufWriter::new(f);
    let err = |e| IoError::file(path, e);

    let h = grid.spacing_nm as f64;
    writeln!(w, "# vtk DataFile Version 3.0").map_err(err)?;
    writeln!(w, "voxel field (lengths in nm)").map_err(err)?;
    writeln!(w, "ASCII").map_err(err)?;
    writeln!(w, "DATASET STRUCTURED_POINTS").map_err(err)?;
    writeln!(
        w,
        "DIMENSIONS {} {} {}",
        grid.dims[0], grid.dims[1], grid.dims[2]
    )
    .map_err(err)?;
    writeln!(
        w,
        "ORIGIN {} {} {}",
        grid.origin_nm[0] as f64 + 0.5 * h,
        grid.origin_nm[1] as f64 + 0.5 * h,
        grid.origin_nm[2] as f64 + 0.5 * h
    )
    .map_err(err)?;
    writeln!(w, "SPACING {h} {h} {h}").map_err(err)?;
    writeln!(w, "POINT_DATA {}", grid.voxel_count()).map_err(err)?;
    writeln!(w, "SCALARS {} double 1", field.unit.tag()).map_err(err)?;
    writeln!(w, "LOOKUP_TABLE default").map_err(err)?;

    let mut col = 0;
    for idx in 0..grid.voxel_count() {
        let v = match grid.active_rank(idx) {
            Some(r) => field.values[r],
            None => fill,
        };
        if col > 0 {
            write!(w, " ").map_err(err)?;
        }
        write!(w, "{v}").map_err(err)?;
        col += 1;
        if col == 8 {
            writeln!(w).map_err(err)?;
            col = 0;
        }
    }
    if col > 0 {
        writeln!(w).map_err(err)?;
    }
    w.flush().map_err(err)
}

/// Parsed VTK volume, for tests and tooling.
#[derive(Debug)]
pub struct VtkVolume {
    pub dims: [usize; 3],
    pub origin: [f64; 3],
    pub spacing: [f64; 3],
    pub scalar_name: String,
    pub values: Vec<f64>,
}

pub fn read_vtk(path: &Path) -> Result<VtkVolume, IoError> {
    let raw = std::fs::read_to_string(path).map_err(|e| IoError::file(path, e))?;
    let mut dims = None;
    let mut origin = None;
    let mut spacing = None;
    let mut scalar_name = None;
    let mut n_points = None;
    let mut values = Vec::new();
    let mut in_data = false;

    let bad = |m: &str| IoError::MalformedVtk(m.to_string());
    let three = |rest: &str, what: &str| -> Result<[f64; 3], IoError> {
        let v: Vec<f64> = rest
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| IoError::MalformedVtk(format!("bad {what} line")))?;
        if v.len() != 3 {
            return Err(IoError::MalformedVtk(format!("bad {what} line")));
        }
        Ok([v[0], v[1], v[2]])
    };

    for line in raw.lines() {
        let line = line.trim();
        if in_data {
            if line.starts_with("LOOKUP_TABLE") {
                continue;
            }
            for tok in line.split_whitespace() {
                values.push(tok.parse::<f64>().map_err(|_| bad("bad scalar value"))?);
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix("DIMENSIONS") {
            let d = three(rest, "DIMENSIONS")?;
            dims = Some([d[0] as usize, d[1] as usize, d[2] as usize]);
        } else if let Some(rest) = line.strip_prefix("ORIGIN") {
            origin = Some(three(rest, "ORIGIN")?);
        } else if let Some(rest) = line.strip_prefix("SPACING") {
            spacing = Some(three(rest, "SPACING")?);
        } else if let Some(rest) = line.strip_prefix("POINT_DATA") {
            n_points = Some(
                rest.trim()
                    .parse::<usize>()
                    .map_err(|_| bad("bad POINT_DATA line"))?,
            );
        } else if let Some(rest) = line.strip_prefix("SCALARS") {
            scalar_name = rest.split_whitespace().next().map(str::to_string);
            in_data = true;
        }
    }

    let dims = dims.ok_or_else(|| bad("missing DIMENSIONS"))?;
    let n = n_points.ok_or_else(|| bad("missing POINT_DATA"))?;
    if values.len() != n || n != dims[0] * dims[1] * dims[2] {
        return Err(bad("scalar count does not match DIMENSIONS"));
    }
    Ok(VtkVolume {
        dims,
        origin: origin.ok_or_else(|| bad("missing ORIGIN"))?,
        spacing: spacing.ok_or_else(|| bad("missing SPACING"))?,
        scalar_name: scalar_name.ok_or_else(|| bad("missing SCALARS"))?,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Unit;
    use crate::geometry::{voxelize, Block, FaceDir, Scenario, SinkPatch, SourceSchedule};
    use crate::materials::builtin_library;

    #[test]
    fn round_trip_bit_exact() {
        let s = Scenario {
            spacing_nm: 2,
            boxes: vec![
                Block::new([0, 0, 0], [4, 4, 4], "W", "a"),
                Block::new([4, 4, 4], [4, 4, 4], "Ti", "b"),
            ],
            sinks: vec![SinkPatch {
                min: [0, 0, 0],
                size: [8, 8, 8],
                face: Some(FaceDir::ZMin),
                temperature: 300.0,
            }],
            sources: vec![],
            schedule: SourceSchedule::default(),
            electrical: None,
            material_overrides: vec![],
        };
        let g = voxelize(&s, &builtin_library()).unwrap();
        let mut vals = Vec::new();
        let mut seed = 7u64;
        for _ in 0..g.n_active() {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            vals.push(300.0 + (seed >> 40) as f64 * 1e-3 + 1.0 / 3.0);
        }
        let f = ScalarField::new(&g, Unit::Kelvin, vals.clone());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.vtk");
        write_vtk(&path, &g, &f, 300.0).unwrap();

        let vol = read_vtk(&path).unwrap();
        assert_eq!(vol.dims, g.dims);
        assert_eq!(vol.scalar_name, "temperature_K");
        assert_eq!(vol.spacing, [2.0, 2.0, 2.0]);
        assert_eq!(vol.origin, [1.0, 1.0, 1.0]);
        for idx in 0..g.voxel_count() {
            let expect = match g.active_rank(idx) {
                Some(r) => vals[r],
                None => 300.0,
            };
            assert_eq!(vol.values[idx].to_bits(), expect.to_bits(), "voxel {idx}");
        }
    }

    #[test]
    fn malformed_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.vtk");
        std::fs::write(&path, "# vtk DataFile Version 3.0\njunk\n").unwrap();
        assert!(matches!(read_vtk(&path), Err(IoError::MalformedVtk(_))));
    }
}
