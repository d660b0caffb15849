//! Per-voxel scalar fields over the active voxels of a grid.

use crate::grid::VoxelGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Kelvin,
    Volts,
    WattsPerCubicMeter,
}

impl Unit {
    /// Name used for the VTK scalar array.
    pub fn tag(self) -> &'static str {
        match self {
            Unit::Kelvin => "temperature_K",
            Unit::Volts => "potential_V",
            Unit::WattsPerCubicMeter => "heat_density_W_per_m3",
        }
    }
}

/// One value per active voxel, in active-list order.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub unit: Unit,
    pub values: Vec<f64>,
    grid_stamp: u64,
}

impl ScalarField {
    pub fn new(grid: &VoxelGrid, unit: Unit, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.n_active());
        Self {
            unit,
            values,
            grid_stamp: grid.stamp(),
        }
    }

    pub fn constant(grid: &VoxelGrid, unit: Unit, value: f64) -> Self {
        Self::new(grid, unit, vec![value; grid.n_active()])
    }

    pub fn matches_grid(&self, grid: &VoxelGrid) -> bool {
        self.grid_stamp == grid.stamp() && self.values.len() == grid.n_active()
    }

    /// Value at an active voxel id; None for void voxels.
    pub fn at_voxel(&self, grid: &VoxelGrid, voxel: usize) -> Option<f64> {
        grid.active_rank(voxel).map(|r| self.values[r])
    }
}
