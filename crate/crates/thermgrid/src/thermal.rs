//! Steady and transient heat conduction on the voxel grid.
//!
//! Steady state solves div(k grad T) + q = 0 with the sink patches as
//! Dirichlet data. Transient stepping is backward Euler on
//! C dT/dt = -A T + q with C the lumped voxel heat capacity, which is
//! unconditionally stable and keeps the stepping matrix SPD.

use thiserror::Error;

use crate::assembly::{
    assemble_diffusion, resolve_dirichlet, AssemblyError, DiffusionSystem, UnreachablePolicy,
};
use crate::field::{ScalarField, Unit};
use crate::geometry::{HeatSource, SinkPatch, SourceMode, SourceSchedule};
use crate::grid::VoxelGrid;
use crate::sparse::{cg_jacobi, Csr, SolveStats, SolverError};

/// Per-iteration cap for the conjugate gradient solver, as a multiple of
/// the unknown count.
pub const CG_ITER_FACTOR: usize = 50;
/// Default relative-residual tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum ThermalError {
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error("thermal solve diverged: {0}")]
    Solver(SolverError),
    #[error("heat source region '{0}' matches no voxels")]
    EmptyRegion(String),
    #[error("Joule source requested but no heat-density field was supplied")]
    MissingJouleField,
    #[error("field does not belong to this grid")]
    FieldMismatch,
    #[error("invalid transient step: dt = {0} ns")]
    InvalidStep(f64),
}

/// Volumetric heat density (W/m³) per active voxel from the scenario's
/// source list. Prescribed powers are spread uniformly over their region;
/// Joule sources copy the supplied density field over their region.
/// Overlapping sources add.
pub fn source_density(
    grid: &VoxelGrid,
    sources: &[HeatSource],
    joule: Option<&ScalarField>,
) -> Result<ScalarField, ThermalError> {
    if let Some(j) = joule {
        if !j.matches_grid(grid) {
            return Err(ThermalError::FieldMismatch);
        }
    }
    let mut q = vec![0.0; grid.n_active()];
    for s in sources {
        let voxels = grid.voxels_with_label(&s.region_label);
        if voxels.is_empty() {
            return Err(ThermalError::EmptyRegion(s.region_label.clone()));
        }
        match s.mode {
            SourceMode::PrescribedPower { power } => {
                let density = power / (voxels.len() as f64 * grid.voxel_volume());
                for &v in &voxels {
                    q[grid.active_rank(v as usize).unwrap()] += density;
                }
            }
            SourceMode::Joule => {
                let j = joule.ok_or(ThermalError::MissingJouleField)?;
                for &v in &voxels {
                    let r = grid.active_rank(v as usize).unwrap();
                    q[r] += j.values[r];
                }
            }
        }
    }
    Ok(ScalarField::new(grid, Unit::WattsPerCubicMeter, q))
}

/// Total power (W) represented by a density field.
pub fn total_power(grid: &VoxelGrid, density: &ScalarField) -> f64 {
    density.values.iter().sum::<f64>() * grid.voxel_volume()
}

#[derive(Debug)]
pub struct SteadySolution {
    pub temperature: ScalarField,
    pub stats: SolveStats,
    /// Assembled system, retained for flux and balance reporting.
    pub system: DiffusionSystem,
    /// Solution restricted to the unknown rows (for flux accounting and
    /// warm starts).
    pub x: Vec<f64>,
}

impl SteadySolution {
    /// Heat flow (W) out of the domain into the Dirichlet sinks.
    pub fn sink_flux(&self) -> f64 {
        self.system.dirichlet_flux(&self.x)
    }
}

fn thermal_rhs(system: &DiffusionSystem, grid: &VoxelGrid, density: &ScalarField) -> Vec<f64> {
    let vol = system.voxel_volume;
    let mut rhs = system.rhs_dirichlet.clone();
    for (row, &vox) in system.unknowns.iter().enumerate() {
        rhs[row] += density.values[grid.active_rank(vox as usize).unwrap()] * vol;
    }
    rhs
}

/// Solve the steady conduction problem.
pub fn solve_steady(
    grid: &VoxelGrid,
    sinks: &[SinkPatch],
    density: &ScalarField,
    tol: f64,
    warm: Option<&SteadySolution>,
) -> Result<SteadySolution, ThermalError> {
    if !density.matches_grid(grid) {
        return Err(ThermalError::FieldMismatch);
    }
    let dirichlet = resolve_dirichlet(grid, sinks);
    let system = assemble_diffusion(
        grid,
        |m| grid.materials[m].k,
        &dirichlet,
        UnreachablePolicy::Error,
    )?;
    let mut rhs = thermal_rhs(&system, grid, density);
    // solve for the rise above the mean sink temperature: shifting by a
    // constant only touches the Dirichlet couplings (interior row sums
    // cancel), and it keeps CG's relative tolerance measured against the
    // source vector instead of a right-hand side dominated by the absolute
    // sink temperature
    let shift = dirichlet
        .value_range()
        .map(|(lo, hi)| 0.5 * (lo + hi))
        .unwrap_or(0.0);
    if shift != 0.0 {
        let mut row_sums = vec![0.0; system.n_unknowns()];
        system
            .matrix
            .mul(&vec![1.0; system.n_unknowns()], &mut row_sums);
        for (r, s) in rhs.iter_mut().zip(&row_sums) {
            *r -= shift * s;
        }
    }
    let shifted_warm;
    let x0 = match warm.filter(|w| w.x.len() == system.n_unknowns()) {
        Some(w) => {
            shifted_warm = w.x.iter().map(|t| t - shift).collect::<Vec<_>>();
            Some(shifted_warm.as_slice())
        }
        None => None,
    };
    let max_iter = CG_ITER_FACTOR * system.n_unknowns().max(1);
    let (mut x, stats) = cg_jacobi(&system.matrix, &rhs, x0, tol, max_iter)
        .map_err(ThermalError::Solver)?;
    for t in &mut x {
        *t += shift;
    }
    let values = system.scatter(grid, &x, f64::NAN);
    Ok(SteadySolution {
        temperature: ScalarField::new(grid, Unit::Kelvin, values),
        stats,
        system,
        x,
    })
}

/// A region whose per-step maximum temperature is recorded.
#[derive(Debug, Clone)]
pub struct Probe {
    pub name: String,
    pub selector: String,
}

/// Time series produced by a transient run. `times_ns[i]` pairs with
/// `series[p][i]` for probe `p`; index 0 is the initial condition.
#[derive(Debug, Clone)]
pub struct TransientTrace {
    pub probe_names: Vec<String>,
    pub times_ns: Vec<f64>,
    pub series: Vec<Vec<f64>>,
}

impl TransientTrace {
    pub fn probe(&self, name: &str) -> Option<&[f64]> {
        self.probe_names
            .iter()
            .position(|n| n == name)
            .map(|i| self.series[i].as_slice())
    }
}

#[derive(Debug, Clone)]
pub struct TransientOptions {
    pub dt_ns: f64,
    pub t_end_ns: f64,
    pub tol: f64,
    /// Initial uniform temperature.
    pub ambient: f64,
}

#[derive(Debug)]
pub struct TransientSolution {
    pub temperature: ScalarField,
    pub trace: TransientTrace,
    pub steps: usize,
    pub total_cg_iterations: usize,
}

/// Backward-Euler transient run with periodic source gating.
///
/// `density_on` is the heat density while the schedule is on; the source is
/// zero while it is off. Probes record the maximum temperature over their
/// region after every step.
pub fn run_transient(
    grid: &VoxelGrid,
    sinks: &[SinkPatch],
    density_on: &ScalarField,
    schedule: &SourceSchedule,
    probes: &[Probe],
    opts: &TransientOptions,
) -> Result<TransientSolution, ThermalError> {
    if !density_on.matches_grid(grid) {
        return Err(ThermalError::FieldMismatch);
    }
    if !(opts.dt_ns > 0.0) || !(opts.t_end_ns > 0.0) {
        return Err(ThermalError::InvalidStep(opts.dt_ns));
    }
    let dirichlet = resolve_dirichlet(grid, sinks);
    let system = assemble_diffusion(
        grid,
        |m| grid.materials[m].k,
        &dirichlet,
        UnreachablePolicy::Error,
    )?;
    let n = system.n_unknowns();
    let dt_s = opts.dt_ns * 1e-9;

    // Lumped capacities C_i = rho*cp*V and the stepping matrix A + C/dt.
    let cap: Vec<f64> = system
        .unknowns
        .iter()
        .map(|&v| grid.material_at(v as usize).rho_cp() * system.voxel_volume)
        .collect();
    let mut step_matrix: Csr = system.matrix.clone();
    for (row, &c) in cap.iter().enumerate() {
        for k in step_matrix.row_ptr[row]..step_matrix.row_ptr[row + 1] {
            if step_matrix.col[k] as usize == row {
                step_matrix.val[k] += c / dt_s;
            }
        }
    }

    let rhs_on = thermal_rhs(&system, grid, density_on);
    let rhs_off = system.rhs_dirichlet.clone();

    // Probe bookkeeping: each probe is a list of unknown rows plus the
    // largest clamped value inside the region, if any.
    struct ProbeRows {
        rows: Vec<usize>,
        clamped_max: f64,
    }
    let probe_rows: Vec<ProbeRows> = probes
        .iter()
        .map(|p| {
            let voxels = grid.voxels_with_label(&p.selector);
            if voxels.is_empty() {
                return Err(ThermalError::EmptyRegion(p.selector.clone()));
            }
            let mut rows = Vec::new();
            let mut clamped_max = f64::NEG_INFINITY;
            for &v in &voxels {
                if let Some(r) = system.rank_of(v) {
                    rows.push(r);
                } else if let Some(val) = dirichlet.clamp_value(v) {
                    clamped_max = clamped_max.max(val);
                }
            }
            Ok(ProbeRows { rows, clamped_max })
        })
        .collect::<Result<_, _>>()?;
    let eval_probe = |pr: &ProbeRows, x: &[f64]| -> f64 {
        pr.rows
            .iter()
            .map(|&r| x[r])
            .fold(pr.clamped_max, f64::max)
    };

    let mut x = vec![opts.ambient; n];
    let mut trace = TransientTrace {
        probe_names: probes.iter().map(|p| p.name.clone()).collect(),
        times_ns: vec![0.0],
        series: probe_rows
            .iter()
            .map(|pr| vec![eval_probe(pr, &x)])
            .collect(),
    };

    let steps = (opts.t_end_ns / opts.dt_ns).round().max(1.0) as usize;
    let max_iter = CG_ITER_FACTOR * n.max(1);
    let mut rhs = vec![0.0; n];
    let mut total_iters = 0;
    for s in 0..steps {
        let t = s as f64 * opts.dt_ns;
        let base = if schedule.is_on(t) { &rhs_on } else { &rhs_off };
        for i in 0..n {
            rhs[i] = base[i] + cap[i] / dt_s * x[i];
        }
        let (x_new, stats) = cg_jacobi(&step_matrix, &rhs, Some(&x), opts.tol, max_iter)
            .map_err(ThermalError::Solver)?;
        x = x_new;
        total_iters += stats.iterations;
        trace.times_ns.push((s + 1) as f64 * opts.dt_ns);
        for (p, pr) in probe_rows.iter().enumerate() {
            trace.series[p].push(eval_probe(pr, &x));
        }
    }

    let values = system.scatter(grid, &x, f64::NAN);
    Ok(TransientSolution {
        temperature: ScalarField::new(grid, Unit::Kelvin, values),
        trace,
        steps,
        total_cg_iterations: total_iters,
    })
}
