//! Scenario description and voxelization.
//!
//! A scenario is an ordered list of axis-aligned material boxes on a nm
//! lattice, plus sinks, heat sources, a source schedule and an optional
//! electrical block. Later boxes overwrite earlier ones (paint order).

pub mod presets;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::VoxelGrid;
use crate::materials::{Material, MaterialDB, MaterialError, AMBIENT_VOID};

/// Hard cap on total voxel count; keeps dense per-voxel arrays addressable.
pub const MAX_VOXELS: usize = 1 << 29;

/// Axis-aligned material box. Corners and sizes are integer nm.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub min: [i64; 3],
    pub size: [i64; 3],
    pub material: String,
    #[serde(default)]
    pub label: String,
}

impl Block {
    pub fn new(min: [i64; 3], size: [i64; 3], material: &str, label: &str) -> Self {
        Self {
            min,
            size,
            material: material.to_string(),
            label: label.to_string(),
        }
    }

    pub fn max(&self) -> [i64; 3] {
        [
            self.min[0] + self.size[0],
            self.min[1] + self.size[1],
            self.min[2] + self.size[2],
        ]
    }

    /// Half-open overlap test.
    pub fn overlaps(&self, other: &Block) -> bool {
        let a_max = self.max();
        let b_max = other.max();
        (0..3).all(|i| self.min[i] < b_max[i] && other.min[i] < a_max[i])
    }

    pub fn volume_nm3(&self) -> i64 {
        self.size[0] * self.size[1] * self.size[2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaceDir {
    XMin,
    XMax,
    YMin,
    YMax,
    ZMin,
    ZMax,
}

/// Dirichlet patch: either a whole box of clamped voxels, or one face of a
/// box where the boundary temperature is imposed through half-cell
/// conductances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinkPatch {
    pub min: [i64; 3],
    pub size: [i64; 3],
    /// When present the patch is the given face of the box; when absent all
    /// voxels inside the box are clamped.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub face: Option<FaceDir>,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceMode {
    /// Uniform volumetric density P/V over the region.
    PrescribedPower { power: f64 },
    /// Density taken from the Joule heating of the electrical solve.
    Joule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatSource {
    pub region_label: String,
    pub mode: SourceMode,
}

/// Periodic on/off source gating; the source is active during
/// `[0, duty*period)` of each period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSchedule {
    pub period_ns: f64,
    pub duty: f64,
}

impl Default for SourceSchedule {
    fn default() -> Self {
        Self {
            period_ns: 100.0,
            duty: 0.5,
        }
    }
}

impl SourceSchedule {
    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.period_ns > 0.0) || !(self.duty > 0.0 && self.duty <= 1.0) {
            return Err(GeometryError::InvalidSchedule {
                period_ns: self.period_ns,
                duty: self.duty,
            });
        }
        Ok(())
    }

    /// Whether the source is on at time t (ns).
    pub fn is_on(&self, t_ns: f64) -> bool {
        if self.duty >= 1.0 {
            return true;
        }
        let phase = t_ns.rem_euclid(self.period_ns);
        phase < self.duty * self.period_ns - 1e-9
    }
}

/// Voltage terminal for the electrical solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Terminal {
    pub min: [i64; 3],
    pub size: [i64; 3],
    pub voltage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElectricalSpec {
    pub terminals: Vec<Terminal>,
}

/// Complete simulation input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub spacing_nm: u32,
    pub boxes: Vec<Block>,
    pub sinks: Vec<SinkPatch>,
    #[serde(default)]
    pub sources: Vec<HeatSource>,
    #[serde(default)]
    pub schedule: SourceSchedule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub electrical: Option<ElectricalSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub material_overrides: Vec<Material>,
}

impl Scenario {
    /// Bounding xy extent (nm) of the circuit proper: support structures
    /// (heat sink, substrate, dielectric fill) and appended heat-extraction
    /// features are excluded.
    pub fn footprint_nm(&self) -> Option<(i64, i64)> {
        const EXCLUDED: &[&str] = &[
            "heat_sink",
            "substrate",
            "dielectric_medium",
            "thermal_junction",
            "metal_connector",
            "heat_pillar",
        ];
        let mut lo = [i64::MAX; 2];
        let mut hi = [i64::MIN; 2];
        let mut seen = false;
        for b in &self.boxes {
            if EXCLUDED.contains(&b.label.as_str()) {
                continue;
            }
            seen = true;
            for i in 0..2 {
                lo[i] = lo[i].min(b.min[i]);
                hi[i] = hi[i].max(b.min[i] + b.size[i]);
            }
        }
        seen.then(|| (hi[0] - lo[0], hi[1] - lo[1]))
    }

    /// Bounding box of all boxes: (min, max) in nm.
    pub fn bounds_nm(&self) -> Option<([i64; 3], [i64; 3])> {
        let mut lo = [i64::MAX; 3];
        let mut hi = [i64::MIN; 3];
        for b in &self.boxes {
            let bmax = b.max();
            for i in 0..3 {
                lo[i] = lo[i].min(b.min[i]);
                hi[i] = hi[i].max(bmax[i]);
            }
        }
        if self.boxes.is_empty() {
            None
        } else {
            Some((lo, hi))
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.boxes.is_empty() {
            return Err(GeometryError::EmptyScenario);
        }
        if self.spacing_nm == 0 {
            return Err(GeometryError::InvalidSpacing(self.spacing_nm));
        }
        if self.sinks.is_empty() {
            return Err(GeometryError::NoSink);
        }
        self.schedule.validate()?;
        let labels: std::collections::HashSet<&str> =
            self.boxes.iter().map(|b| b.label.as_str()).collect();
        for s in &self.sources {
            let found = labels
                .iter()
                .any(|l| crate::grid::label_matches(&s.region_label, l));
            if !found {
                return Err(GeometryError::UnknownSourceRegion(s.region_label.clone()));
            }
            if let SourceMode::PrescribedPower { power } = s.mode {
                if !(power >= 0.0) || !power.is_finite() {
                    return Err(GeometryError::NegativePower(s.region_label.clone()));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("scenario has no boxes")]
    EmptyScenario,
    #[error("scenario defines no Dirichlet sink patch")]
    NoSink,
    #[error("invalid grid spacing {0} nm")]
    InvalidSpacing(u32),
    #[error("invalid source schedule: period {period_ns} ns, duty {duty}")]
    InvalidSchedule { period_ns: f64, duty: f64 },
    #[error("box '{label}' ({material}) is not aligned to the {spacing_nm} nm grid")]
    AlignmentError {
        label: String,
        material: String,
        spacing_nm: u32,
    },
    #[error("box '{label}' has non-positive size")]
    DegenerateBox { label: String },
    #[error("heat source references unknown region label '{0}'")]
    UnknownSourceRegion(String),
    #[error("heat source on region '{0}' has negative power")]
    NegativePower(String),
    #[error("grid of {0} voxels exceeds the {MAX_VOXELS} voxel guard")]
    GridTooLarge(usize),
    #[error("preset cannot be built at {spacing_nm} nm spacing: {why}")]
    PresetSpacingError { spacing_nm: u32, why: String },
    #[error("extraction placement failed: {0}")]
    PlacementError(String),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error("scenario uses more than {0} distinct materials")]
    TooManyMaterials(usize),
    #[error("scenario uses more than {0} distinct labels")]
    TooManyLabels(usize),
}

/// Rasterize a scenario onto a uniform voxel grid.
///
/// Later boxes overwrite earlier ones. Voxels not covered by any box get
/// the `ambient_void` material and are excluded from all solves.
pub fn voxelize(scenario: &Scenario, db: &MaterialDB) -> Result<VoxelGrid, GeometryError> {
    scenario.validate()?;
    let db = db.merge_overrides(&scenario.material_overrides)?;
    let h = scenario.spacing_nm as i64;

    for b in &scenario.boxes {
        if b.size.iter().any(|&s| s <= 0) {
            return Err(GeometryError::DegenerateBox {
                label: b.label.clone(),
            });
        }
        let aligned = (0..3).all(|i| b.min[i].rem_euclid(h) == 0 && b.size[i] % h == 0);
        if !aligned {
            return Err(GeometryError::AlignmentError {
                label: b.label.clone(),
                material: b.material.clone(),
                spacing_nm: scenario.spacing_nm,
            });
        }
        db.lookup(&b.material)?;
    }

    let (lo, hi) = scenario.bounds_nm().ok_or(GeometryError::EmptyScenario)?;
    let dims = [
        ((hi[0] - lo[0]) / h) as usize,
        ((hi[1] - lo[1]) / h) as usize,
        ((hi[2] - lo[2]) / h) as usize,
    ];
    let n = dims[0]
        .checked_mul(dims[1])
        .and_then(|v| v.checked_mul(dims[2]))
        .ok_or(GeometryError::GridTooLarge(usize::MAX))?;
    if n > MAX_VOXELS {
        return Err(GeometryError::GridTooLarge(n));
    }

    // Local material table: void first, then referenced materials in first-use order.
    let void = db.lookup(AMBIENT_VOID)?.clone();
    let mut materials: Vec<Material> = vec![void];
    let mut mat_ids: std::collections::HashMap<String, u16> = Default::default();
    mat_ids.insert(AMBIENT_VOID.to_string(), 0);
    let mut label_names: Vec<String> = vec![String::new()];
    let mut label_ids: std::collections::HashMap<String, u16> = Default::default();
    label_ids.insert(String::new(), 0);

    let mut box_mat: Vec<u16> = Vec::with_capacity(scenario.boxes.len());
    let mut box_label: Vec<u16> = Vec::with_capacity(scenario.boxes.len());
    for b in &scenario.boxes {
        let mid = match mat_ids.get(b.material.as_str()) {
            Some(&id) => id,
            None => {
                if materials.len() >= u16::MAX as usize {
                    return Err(GeometryError::TooManyMaterials(u16::MAX as usize));
                }
                let id = materials.len() as u16;
                materials.push(db.lookup(&b.material)?.clone());
                mat_ids.insert(b.material.clone(), id);
                id
            }
        };
        box_mat.push(mid);
        let lid = match label_ids.get(b.label.as_str()) {
            Some(&id) => id,
            None => {
                if label_names.len() >= u16::MAX as usize {
                    return Err(GeometryError::TooManyLabels(u16::MAX as usize));
                }
                let id = label_names.len() as u16;
                label_names.push(b.label.clone());
                label_ids.insert(b.label.clone(), id);
                id
            }
        };
        box_label.push(lid);
    }

    let mut material = vec![0u16; n];
    let mut label = vec![0u16; n];
    for (bi, b) in scenario.boxes.iter().enumerate() {
        let x0 = ((b.min[0] - lo[0]) / h) as usize;
        let y0 = ((b.min[1] - lo[1]) / h) as usize;
        let z0 = ((b.min[2] - lo[2]) / h) as usize;
        let x1 = x0 + (b.size[0] / h) as usize;
        let y1 = y0 + (b.size[1] / h) as usize;
        let z1 = z0 + (b.size[2] / h) as usize;
        let (m, l) = (box_mat[bi], box_label[bi]);
        for z in z0..z1 {
            for y in y0..y1 {
                let row = dims[0] * (y + dims[1] * z);
                material[row + x0..row + x1].fill(m);
                label[row + x0..row + x1].fill(l);
            }
        }
    }

    Ok(VoxelGrid::new(
        scenario.spacing_nm,
        lo,
        dims,
        material,
        label,
        materials,
        label_names,
        Some(0),
    ))
}
