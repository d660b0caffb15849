//! Post-processing: hotspot reports, run-to-run comparison, tier profiles.

use thiserror::Error;

use crate::field::{ScalarField, Unit};
use crate::grid::VoxelGrid;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("expected a {expected:?} field, got {got:?}")]
    UnitMismatch { expected: Unit, got: Unit },
    #[error("field does not belong to this grid")]
    FieldMismatch,
    #[error("ambient {ambient} K is not below the peak {peak} K; rise-based metrics are undefined")]
    AmbientMismatch { ambient: f64, peak: f64 },
    #[error("field has no active voxels")]
    EmptyField,
}

fn check(grid: &VoxelGrid, field: &ScalarField, expected: Unit) -> Result<(), AnalysisError> {
    if field.unit != expected {
        return Err(AnalysisError::UnitMismatch {
            expected,
            got: field.unit,
        });
    }
    if !field.matches_grid(grid) {
        return Err(AnalysisError::FieldMismatch);
    }
    if field.values.is_empty() {
        return Err(AnalysisError::EmptyField);
    }
    Ok(())
}

/// Location and context of the hottest voxel.
#[derive(Debug, Clone)]
pub struct Hotspot {
    pub temperature: f64,
    pub voxel: [usize; 3],
    /// Center of the voxel in nm.
    pub position_nm: [f64; 3],
    pub label: String,
    pub material: String,
}

#[derive(Debug, Clone)]
pub struct HotspotReport {
    pub peak: Hotspot,
    /// Maximum temperature per z layer, sink side first.
    pub per_z_layer_max: Vec<f64>,
    /// Maximum temperature per labeled region (unlabeled voxels excluded),
    /// in label-table order.
    pub per_region_max: Vec<(String, f64)>,
    /// Total volumetric source power (W).
    pub source_power: f64,
    /// Heat flow into the Dirichlet sinks (W).
    pub sink_flux: f64,
    /// |source - sink| / max(source, 1e-30).
    pub balance_residual: f64,
}

/// Build a hotspot report from a temperature field, the source density it
/// was solved with, and the measured sink flux.
///
/// Ties on the peak temperature resolve to the smallest (z, y, x), so the
/// report is deterministic.
pub fn hotspot_report(
    grid: &VoxelGrid,
    temperature: &ScalarField,
    density: &ScalarField,
    sink_flux: f64,
) -> Result<HotspotReport, AnalysisError> {
    check(grid, temperature, Unit::Kelvin)?;
    check(grid, density, Unit::WattsPerCubicMeter)?;

    let mut peak_rank = 0usize;
    let mut peak_t = f64::NEG_INFINITY;
    let mut per_z = vec![f64::NEG_INFINITY; grid.dims[2]];
    let mut per_label = vec![f64::NEG_INFINITY; grid.label_names.len()];
    for (rank, &vox) in grid.active_voxels().iter().enumerate() {
        let t = temperature.values[rank];
        // voxel ids increase in (z, y, x) lexicographic order, so strict
        // comparison keeps the first (smallest-coordinate) peak
        if t > peak_t {
            peak_t = t;
            peak_rank = rank;
        }
        let (_, _, z) = grid.coords(vox as usize);
        per_z[z] = per_z[z].max(t);
        let l = grid.label_index(vox as usize) as usize;
        per_label[l] = per_label[l].max(t);
    }

    let vox = grid.active_voxels()[peak_rank] as usize;
    let (x, y, z) = grid.coords(vox);
    let h = grid.spacing_nm as f64;
    let peak = Hotspot {
        temperature: peak_t,
        voxel: [x, y, z],
        position_nm: [
            grid.origin_nm[0] as f64 + (x as f64 + 0.5) * h,
            grid.origin_nm[1] as f64 + (y as f64 + 0.5) * h,
            grid.origin_nm[2] as f64 + (z as f64 + 0.5) * h,
        ],
        label: grid.label_at(vox).to_string(),
        material: grid.material_at(vox).name.clone(),
    };

    let per_region_max = grid
        .label_names
        .iter()
        .enumerate()
        .skip(1)
        .filter(|&(i, _)| per_label[i] > f64::NEG_INFINITY)
        .map(|(i, name)| (name.clone(), per_label[i]))
        .collect();

    let source_power = density.values.iter().sum::<f64>() * grid.voxel_volume();
    let balance_residual = (source_power - sink_flux).abs() / source_power.abs().max(1e-30);
    Ok(HotspotReport {
        peak,
        per_z_layer_max: per_z,
        per_region_max,
        source_power,
        sink_flux,
        balance_residual,
    })
}

/// Peak temperature of a field.
pub fn peak_temperature(
    grid: &VoxelGrid,
    temperature: &ScalarField,
) -> Result<f64, AnalysisError> {
    check(grid, temperature, Unit::Kelvin)?;
    Ok(temperature
        .values
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Comparison of two temperature solutions against a shared ambient.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub ambient: f64,
    pub peak_a: f64,
    pub peak_b: f64,
    /// peak_a - peak_b (positive when B runs cooler).
    pub delta_peak: f64,
    /// Reduction of the rise above ambient, percent of A's rise.
    pub rise_reduction_pct: f64,
    /// Reduction of the absolute peak, percent of A's peak.
    pub peak_reduction_pct: f64,
}

/// Compare solution B against baseline A. The fields may live on different
/// grids (e.g. with and without extraction features).
pub fn compare(
    grid_a: &VoxelGrid,
    temp_a: &ScalarField,
    grid_b: &VoxelGrid,
    temp_b: &ScalarField,
    ambient: f64,
) -> Result<Comparison, AnalysisError> {
    let peak_a = peak_temperature(grid_a, temp_a)?;
    let peak_b = peak_temperature(grid_b, temp_b)?;
    if !(ambient < peak_a) || !(ambient < peak_b) {
        return Err(AnalysisError::AmbientMismatch {
            ambient,
            peak: peak_a.min(peak_b),
        });
    }
    Ok(Comparison {
        ambient,
        peak_a,
        peak_b,
        delta_peak: peak_a - peak_b,
        rise_reduction_pct: 100.0 * (peak_a - peak_b) / (peak_a - ambient),
        peak_reduction_pct: 100.0 * (peak_a - peak_b) / peak_a,
    })
}

/// Per-region statistics for a stack of regions (e.g. device tiers).
#[derive(Debug, Clone)]
pub struct TierStat {
    pub selector: String,
    pub voxels: usize,
    /// Volume-weighted mean temperature; uniform voxels make this the
    /// plain mean.
    pub mean: f64,
    pub max: f64,
}

/// Mean and max temperature per selector. Selectors matching no voxels
/// yield `voxels == 0` entries (mean/max are NaN) rather than an error so
/// a generic tier list can be applied across fabrics.
pub fn tier_profile(
    grid: &VoxelGrid,
    temperature: &ScalarField,
    selectors: &[String],
) -> Result<Vec<TierStat>, AnalysisError> {
    check(grid, temperature, Unit::Kelvin)?;
    Ok(selectors
        .iter()
        .map(|sel| {
            let voxels = grid.voxels_with_label(sel);
            if voxels.is_empty() {
                return TierStat {
                    selector: sel.clone(),
                    voxels: 0,
                    mean: f64::NAN,
                    max: f64::NAN,
                };
            }
            let mut sum = 0.0;
            let mut max = f64::NEG_INFINITY;
            for &v in &voxels {
                let t = temperature.values[grid.active_rank(v as usize).unwrap()];
                sum += t;
                max = max.max(t);
            }
            TierStat {
                selector: sel.clone(),
                voxels: voxels.len(),
                mean: sum / voxels.len() as f64,
                max,
            }
        })
        .collect())
}

/// First time (ns) at which the probe rise reaches `frac` of its final
/// rise above `ambient`, with linear interpolation between samples.
/// None when the series never heats above ambient.
pub fn rise_settling_time_ns(
    times_ns: &[f64],
    series: &[f64],
    ambient: f64,
    frac: f64,
) -> Option<f64> {
    let last = *series.last()?;
    let rise = last - ambient;
    if !(rise > 0.0) {
        return None;
    }
    let target = ambient + frac * rise;
    for i in 1..series.len() {
        if series[i] >= target {
            let (t0, t1) = (times_ns[i - 1], times_ns[i]);
            let (v0, v1) = (series[i - 1], series[i]);
            if v1 == v0 {
                return Some(t1);
            }
            return Some(t0 + (t1 - t0) * (target - v0) / (v1 - v0));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{voxelize, Block, FaceDir, Scenario, SinkPatch, SourceSchedule};
    use crate::materials::builtin_library;

    fn two_region_grid() -> (Scenario, VoxelGrid) {
        let s = Scenario {
            spacing_nm: 2,
            boxes: vec![
                Block::new([0, 0, 0], [8, 8, 4], "W", "lower"),
                Block::new([0, 0, 4], [8, 8, 4], "Ti", "upper"),
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
        (s, g)
    }

    fn field_with_peak_at(grid: &VoxelGrid, voxels: &[usize], value: f64) -> ScalarField {
        let mut vals = vec![300.0; grid.n_active()];
        for &v in voxels {
            vals[grid.active_rank(v).unwrap()] = value;
        }
        ScalarField::new(grid, Unit::Kelvin, vals)
    }

    #[test]
    fn peak_tie_breaks_to_smallest_zyx() {
        let (_, g) = two_region_grid();
        // two voxels share the peak; the one with smaller z must win
        let a = g.index(3, 2, 1);
        let b = g.index(1, 1, 3);
        let t = field_with_peak_at(&g, &[b, a], 350.0);
        let q = ScalarField::constant(&g, Unit::WattsPerCubicMeter, 0.0);
        let rep = hotspot_report(&g, &t, &q, 0.0).unwrap();
        assert_eq!(rep.peak.voxel, [3, 2, 1]);
        assert_eq!(rep.peak.label, "lower");
        assert_eq!(rep.peak.material, "W");
        assert_eq!(rep.peak.position_nm, [7.0, 5.0, 3.0]);
    }

    #[test]
    fn per_layer_and_region_max() {
        let (_, g) = two_region_grid();
        let hot = g.index(2, 2, 3);
        let t = field_with_peak_at(&g, &[hot], 340.0);
        let q = ScalarField::constant(&g, Unit::WattsPerCubicMeter, 1e15);
        let rep = hotspot_report(&g, &t, &q, 0.0).unwrap();
        assert_eq!(rep.per_z_layer_max.len(), 4);
        assert_eq!(rep.per_z_layer_max[3], 340.0);
        assert_eq!(rep.per_z_layer_max[0], 300.0);
        let regions: std::collections::HashMap<_, _> =
            rep.per_region_max.iter().cloned().collect();
        assert_eq!(regions["lower"], 300.0);
        assert_eq!(regions["upper"], 340.0);
        // power = q * total volume; zero sink flux makes the residual 1
        let vol = g.n_active() as f64 * g.voxel_volume();
        assert!((rep.source_power - 1e15 * vol).abs() < 1e-3);
        assert!((rep.balance_residual - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unit_mismatch_rejected() {
        let (_, g) = two_region_grid();
        let t = ScalarField::constant(&g, Unit::Volts, 0.0);
        let q = ScalarField::constant(&g, Unit::WattsPerCubicMeter, 0.0);
        assert!(matches!(
            hotspot_report(&g, &t, &q, 0.0),
            Err(AnalysisError::UnitMismatch { .. })
        ));
    }

    #[test]
    fn comparison_metrics() {
        let (_, g) = two_region_grid();
        let a = field_with_peak_at(&g, &[g.index(0, 0, 0)], 400.0);
        let b = field_with_peak_at(&g, &[g.index(0, 0, 0)], 350.0);
        let c = compare(&g, &a, &g, &b, 300.0).unwrap();
        assert_eq!(c.delta_peak, 50.0);
        assert!((c.rise_reduction_pct - 50.0).abs() < 1e-12);
        assert!((c.peak_reduction_pct - 12.5).abs() < 1e-12);
        assert!(matches!(
            compare(&g, &a, &g, &b, 360.0),
            Err(AnalysisError::AmbientMismatch { .. })
        ));
    }

    #[test]
    fn tier_profile_means() {
        let (_, g) = two_region_grid();
        let mut vals = vec![300.0; g.n_active()];
        for &v in g.active_voxels() {
            let (_, _, z) = g.coords(v as usize);
            if z >= 1 {
                vals[g.active_rank(v as usize).unwrap()] = 320.0;
            }
        }
        let t = ScalarField::new(&g, Unit::Kelvin, vals);
        let stats = tier_profile(
            &g,
            &t,
            &["lower".to_string(), "upper".to_string(), "none".to_string()],
        )
        .unwrap();
        assert_eq!(stats[0].voxels, 4 * 4 * 2);
        assert!((stats[0].mean - 310.0).abs() < 1e-12);
        assert_eq!(stats[0].max, 320.0);
        assert!((stats[1].mean - 320.0).abs() < 1e-12);
        assert_eq!(stats[2].voxels, 0);
        assert!(stats[2].mean.is_nan());
    }

    #[test]
    fn settling_time_interpolates() {
        let times = [0.0, 1.0, 2.0, 3.0];
        let series = [300.0, 350.0, 390.0, 400.0];
        // final rise 100, 99% target 399, crossed between t=2 and t=3
        let t = rise_settling_time_ns(&times, &series, 300.0, 0.99).unwrap();
        assert!((t - 2.9).abs() < 1e-12);
        assert!(rise_settling_time_ns(&times, &[300.0; 4], 300.0, 0.99).is_none());
    }
}
