//! Material property database.
//!
//! Thermal conductivities of the built-in set follow the device material
//! table shipped in `data/materials.json`; density, specific heat and
//! electrical conductivity are handbook defaults and can be overridden
//! through a material override file.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Material name used for voxels not covered by any box. Voxels carrying
/// this material are excluded from every linear system; all their faces
/// behave adiabatically.
pub const AMBIENT_VOID: &str = "ambient_void";

/// Thermal and electrical properties of one material.
///
/// Units: `k` in W/(m·K), `rho` in kg/m³, `cp` in J/(kg·K), `sigma` in S/m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Material {
    pub name: String,
    pub k: f64,
    pub rho: f64,
    pub cp: f64,
    pub sigma: f64,
}

impl Material {
    pub fn validate(&self) -> Result<(), MaterialError> {
        let bad = |field: &str, value: f64| MaterialError::InvalidProperty {
            name: self.name.clone(),
            field: field.to_string(),
            value,
        };
        if !(self.k > 0.0) || !self.k.is_finite() {
            return Err(bad("k", self.k));
        }
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(bad("rho", self.rho));
        }
        if !(self.cp > 0.0) || !self.cp.is_finite() {
            return Err(bad("cp", self.cp));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(bad("sigma", self.sigma));
        }
        Ok(())
    }

    /// Volumetric heat capacity rho*cp in J/(m³·K).
    pub fn rho_cp(&self) -> f64 {
        self.rho * self.cp
    }
}

#[derive(Debug, Error)]
pub enum MaterialError {
    #[error("unknown material '{0}' (check scenario file spelling)")]
    UnknownMaterial(String),
    #[error("invalid property for material '{name}': {field} = {value}")]
    InvalidProperty {
        name: String,
        field: String,
        value: f64,
    },
    #[error("material data file is malformed: {0}")]
    Malformed(String),
}

/// Ordered, name-unique collection of materials.
///
/// Immutable after construction; `merge_overrides` returns a new database
/// in which user records shadow same-named built-ins.
#[derive(Debug, Clone)]
pub struct MaterialDB {
    records: Vec<Material>,
    index: HashMap<String, usize>,
}

#[derive(Deserialize)]
struct LibraryFile {
    #[allow(dead_code)]
    version: u32,
    #[allow(dead_code)]
    #[serde(default)]
    comment: String,
    materials: Vec<Material>,
}

/// The built-in library, deserialized from the versioned data file.
pub fn builtin_library() -> MaterialDB {
    let raw = include_str!("../data/materials.json");
    let file: LibraryFile =
        serde_json::from_str(raw).expect("embedded material library must parse");
    MaterialDB::from_records(file.materials)
        .expect("embedded material library must satisfy invariants")
}

impl MaterialDB {
    pub fn from_records(records: Vec<Material>) -> Result<Self, MaterialError> {
        let mut index = HashMap::new();
        for (i, m) in records.iter().enumerate() {
            m.validate()?;
            if index.insert(m.name.clone(), i).is_some() {
                return Err(MaterialError::Malformed(format!(
                    "duplicate material name '{}'",
                    m.name
                )));
            }
        }
        Ok(Self { records, index })
    }

    pub fn lookup(&self, name: &str) -> Result<&Material, MaterialError> {
        self.index
            .get(name)
            .map(|&i| &self.records[i])
            .ok_or_else(|| MaterialError::UnknownMaterial(name.to_string()))
    }

    pub fn lookup_index(&self, name: &str) -> Result<usize, MaterialError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| MaterialError::UnknownMaterial(name.to_string()))
    }

    pub fn get(&self, idx: usize) -> &Material {
        &self.records[idx]
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[Material] {
        &self.records
    }

    /// User records shadow same-named entries; new names are appended.
    pub fn merge_overrides(&self, user: &[Material]) -> Result<MaterialDB, MaterialError> {
        for m in user {
            m.validate()?;
        }
        let mut records = self.records.clone();
        let mut index = self.index.clone();
        for m in user {
            match index.get(&m.name) {
                Some(&i) => records[i] = m.clone(),
                None => {
                    index.insert(m.name.clone(), records.len());
                    records.push(m.clone());
                }
            }
        }
        Ok(MaterialDB { records, index })
    }
}
