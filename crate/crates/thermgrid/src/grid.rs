//! Structured voxel grid with per-voxel material and region labels.
//!
//! Convention: z increases away from the heat sink. Voxel values live at
//! cell centers; voxel (x,y,z) spans `origin + [x,x+1)*spacing` etc.
//! Storage is C-order with x fastest, matching the VTK exporter.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::materials::Material;

static NEXT_STAMP: AtomicU64 = AtomicU64::new(1);

/// Immutable voxelized structure. Built by `geometry::voxelize`.
#[derive(Debug)]
pub struct VoxelGrid {
    pub spacing_nm: u32,
    /// Grid origin in nm (min corner of voxel (0,0,0)).
    pub origin_nm: [i64; 3],
    pub dims: [usize; 3],
    /// Per-voxel material index into `materials`.
    material: Vec<u16>,
    /// Per-voxel label index into `label_names`; 0 is the unlabeled tag "".
    label: Vec<u16>,
    /// Resolved material records referenced by `material`.
    pub materials: Vec<Material>,
    pub label_names: Vec<String>,
    /// Sorted voxel ids of active (non-void) voxels.
    active: Vec<u32>,
    /// Material index treated as void, if present in `materials`.
    void_material: Option<u16>,
    /// Unique identity used to detect fields paired with the wrong grid.
    stamp: u64,
}

impl VoxelGrid {
    pub(crate) fn new(
        spacing_nm: u32,
        origin_nm: [i64; 3],
        dims: [usize; 3],
        material: Vec<u16>,
        label: Vec<u16>,
        materials: Vec<Material>,
        label_names: Vec<String>,
        void_material: Option<u16>,
    ) -> Self {
        let n = dims[0] * dims[1] * dims[2];
        assert_eq!(material.len(), n);
        assert_eq!(label.len(), n);
        let active = match void_material {
            Some(v) => (0..n as u32).filter(|&i| material[i as usize] != v).collect(),
            None => (0..n as u32).collect(),
        };
        Self {
            spacing_nm,
            origin_nm,
            dims,
            material,
            label,
            materials,
            label_names,
            active,
            void_material,
            stamp: NEXT_STAMP.fetch_add(1, Ordering::Relaxed),
        }
    }

    pub fn stamp(&self) -> u64 {
        self.stamp
    }

    pub fn spacing_m(&self) -> f64 {
        self.spacing_nm as f64 * 1e-9
    }

    /// Face area in m².
    pub fn face_area(&self) -> f64 {
        let h = self.spacing_m();
        h * h
    }

    /// Voxel volume in m³.
    pub fn voxel_volume(&self) -> f64 {
        let h = self.spacing_m();
        h * h * h
    }

    pub fn voxel_count(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize, usize) {
        let x = idx % self.dims[0];
        let y = (idx / self.dims[0]) % self.dims[1];
        let z = idx / (self.dims[0] * self.dims[1]);
        (x, y, z)
    }

    #[inline]
    pub fn material_index(&self, idx: usize) -> u16 {
        self.material[idx]
    }

    #[inline]
    pub fn material_at(&self, idx: usize) -> &Material {
        &self.materials[self.material[idx] as usize]
    }

    #[inline]
    pub fn label_index(&self, idx: usize) -> u16 {
        self.label[idx]
    }

    pub fn label_at(&self, idx: usize) -> &str {
        &self.label_names[self.label[idx] as usize]
    }

    #[inline]
    pub fn is_active(&self, idx: usize) -> bool {
        match self.void_material {
            Some(v) => self.material[idx] != v,
            None => true,
        }
    }

    /// Sorted ids of active voxels.
    pub fn active_voxels(&self) -> &[u32] {
        &self.active
    }

    pub fn n_active(&self) -> usize {
        self.active.len()
    }

    /// Rank of a voxel id within the active list, if active.
    pub fn active_rank(&self, idx: usize) -> Option<usize> {
        self.active.binary_search(&(idx as u32)).ok()
    }

    /// Voxel ids (active only) whose region label matches `selector`.
    /// A trailing `*` matches any label with the given prefix.
    pub fn voxels_with_label(&self, selector: &str) -> Vec<u32> {
        let matching: Vec<bool> = self
            .label_names
            .iter()
            .map(|name| label_matches(selector, name))
            .collect();
        self.active
            .iter()
            .copied()
            .filter(|&i| matching[self.label[i as usize] as usize])
            .collect()
    }

    /// The six face neighbors of a voxel, in -x,+x,-y,+y,-z,+z order.
    #[inline]
    pub fn neighbors(&self, idx: usize) -> [Option<usize>; 6] {
        let (x, y, z) = self.coords(idx);
        let [nx, ny, nz] = self.dims;
        [
            (x > 0).then(|| idx - 1),
            (x + 1 < nx).then(|| idx + 1),
            (y > 0).then(|| idx - nx),
            (y + 1 < ny).then(|| idx + nx),
            (z > 0).then(|| idx - nx * ny),
            (z + 1 < nz).then(|| idx + nx * ny),
        ]
    }
}

/// Label selector match: exact, or prefix when the selector ends in `*`.
pub fn label_matches(selector: &str, label: &str) -> bool {
    match selector.strip_suffix('*') {
        Some(prefix) => label.starts_with(prefix),
        None => selector == label,
    }
}
