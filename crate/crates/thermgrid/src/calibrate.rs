//! Power calibration: scale all prescribed sources so the steady peak hits
//! a target temperature. The discrete operator is linear, so the rise field
//! scales exactly with power; one probe solve fixes the scale and one
//! confirming solve (warm-started) verifies it.

use thiserror::Error;

use crate::analysis::peak_temperature;
use crate::field::{ScalarField, Unit};
use crate::geometry::presets::{scale_sources, total_prescribed_power};
use crate::geometry::{voxelize, GeometryError, Scenario};
use crate::grid::VoxelGrid;
use crate::materials::MaterialDB;
use crate::thermal::{solve_steady, source_density, SteadySolution, ThermalError};

#[derive(Debug, Error)]
pub enum CalibrateError {
    #[error("scenario has no prescribed source power to scale")]
    NoPower,
    #[error("target peak {target} K is not above the ambient {ambient} K")]
    TargetBelowAmbient { target: f64, ambient: f64 },
    #[error("probe solve produced no temperature rise; sources are ineffective")]
    NoRise,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Thermal(#[from] ThermalError),
}

#[derive(Debug)]
pub struct Calibration {
    /// Factor applied to every prescribed source power.
    pub scale: f64,
    /// Total calibrated power (W), written into reports for provenance.
    pub power: f64,
    /// Peak of the confirming solve.
    pub peak: f64,
    pub ambient: f64,
    pub grid: VoxelGrid,
    pub density: ScalarField,
    pub solution: SteadySolution,
}

/// Calibrate `scenario`'s sources so the steady peak equals `target` K.
/// Returns the rescaled scenario together with the confirming solution.
pub fn calibrate_to_peak(
    scenario: &Scenario,
    db: &MaterialDB,
    target: f64,
    tol: f64,
) -> Result<(Scenario, Calibration), CalibrateError> {
    let p0 = total_prescribed_power(scenario);
    if p0 <= 0.0 {
        return Err(CalibrateError::NoPower);
    }
    let ambient = scenario
        .sinks
        .first()
        .map(|p| p.temperature)
        .unwrap_or(300.0);
    if !(target > ambient) {
        return Err(CalibrateError::TargetBelowAmbient { target, ambient });
    }

    let grid = voxelize(scenario, db)?;
    let density0 = source_density(&grid, &scenario.sources, None)?;
    // the probe only fixes the scale factor; a mildly relaxed tolerance is
    // ample because the confirming solve below runs at the requested one
    let probe_tol = tol.max(1e-8);
    let probe = solve_steady(&grid, &scenario.sinks, &density0, probe_tol, None)?;
    let peak0 = peak_temperature(&grid, &probe.temperature).expect("kelvin field");
    if !(peak0 > ambient) {
        return Err(CalibrateError::NoRise);
    }

    let scale = (target - ambient) / (peak0 - ambient);
    let mut calibrated = scenario.clone();
    scale_sources(&mut calibrated, scale);

    // confirming solve, warm-started from the scaled probe solution
    let density = ScalarField::new(
        &grid,
        Unit::WattsPerCubicMeter,
        density0.values.iter().map(|q| q * scale).collect(),
    );
    let warm = SteadySolution {
        x: probe.x.iter().map(|t| ambient + (t - ambient) * scale).collect(),
        ..probe
    };
    let solution = solve_steady(&grid, &calibrated.sinks, &density, tol, Some(&warm))?;
    let peak = peak_temperature(&grid, &solution.temperature).expect("kelvin field");

    Ok((
        calibrated,
        Calibration {
            scale,
            power: p0 * scale,
            peak,
            ambient,
            grid,
            density,
            solution,
        },
    ))
}
