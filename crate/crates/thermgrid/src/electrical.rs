//! Static electrical potential and Joule heat extraction.
//!
//! The potential solves div(sigma grad V) = 0 with terminal boxes as
//! Dirichlet data, on the same 7-point harmonic-mean stencil as the thermal
//! operator. Conducting voxels with no path to any terminal are masked out
//! (they float and carry no current).

use thiserror::Error;

use crate::assembly::{
    assemble_diffusion, face_conductance, resolve_dirichlet, AssemblyError, DiffusionSystem,
    UnreachablePolicy,
};
use crate::field::{ScalarField, Unit};
use crate::geometry::{ElectricalSpec, SinkPatch};
use crate::grid::VoxelGrid;
use crate::sparse::{cg_jacobi, SolveStats, SolverError};
use crate::thermal::{CG_ITER_FACTOR};

#[derive(Debug, Error)]
pub enum ElectricalError {
    #[error("electrical solve requested but the scenario defines no terminals")]
    NoTerminals,
    #[error("terminal {index} covers no conducting voxels")]
    EmptyTerminal { index: usize },
    #[error("electrical solve diverged: {0}")]
    Solver(SolverError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error("potential field does not belong to this grid")]
    FieldMismatch,
}

/// Solved potential. `defined` marks active voxels that carry a meaningful
/// potential (conducting and connected to a terminal); everywhere else the
/// field holds 0 and carries no current.
#[derive(Debug)]
pub struct PotentialSolution {
    pub potential: ScalarField,
    pub defined: Vec<bool>,
    pub stats: SolveStats,
    pub system: DiffusionSystem,
    x: Vec<f64>,
}

impl PotentialSolution {
    /// Net current (A) out of the solution into all terminals combined;
    /// zero up to solver tolerance by charge conservation.
    pub fn net_terminal_current(&self) -> f64 {
        self.system.dirichlet_flux(&self.x)
    }
}

/// Solve for the static potential field.
pub fn solve_potential(
    grid: &VoxelGrid,
    spec: &ElectricalSpec,
    tol: f64,
) -> Result<PotentialSolution, ElectricalError> {
    if spec.terminals.is_empty() {
        return Err(ElectricalError::NoTerminals);
    }
    // Terminals are full-box Dirichlet patches for the potential.
    let patches: Vec<SinkPatch> = spec
        .terminals
        .iter()
        .map(|t| SinkPatch {
            min: t.min,
            size: t.size,
            face: None,
            temperature: t.voltage,
        })
        .collect();
    let dirichlet = resolve_dirichlet(grid, &patches);
    // Every terminal must pin at least one conducting voxel.
    for i in 0..spec.terminals.len() {
        let one = resolve_dirichlet(grid, std::slice::from_ref(&patches[i]));
        let conducts = one
            .clamped
            .iter()
            .any(|&(v, _)| grid.material_at(v as usize).sigma > 0.0);
        if !conducts {
            return Err(ElectricalError::EmptyTerminal { index: i });
        }
    }

    let system = assemble_diffusion(
        grid,
        |m| grid.materials[m].sigma,
        &dirichlet,
        UnreachablePolicy::Mask,
    )?;
    let max_iter = CG_ITER_FACTOR * system.n_unknowns().max(1);
    let (x, stats) = cg_jacobi(
        &system.matrix,
        &system.rhs_dirichlet,
        None,
        tol,
        max_iter,
    )
    .map_err(ElectricalError::Solver)?;

    let values = system.scatter(grid, &x, 0.0);
    let mut defined = vec![false; grid.n_active()];
    for &v in &system.unknowns {
        defined[grid.active_rank(v as usize).unwrap()] = true;
    }
    for &(v, _) in &system.clamped {
        if let Some(r) = grid.active_rank(v as usize) {
            defined[r] = true;
        }
    }
    Ok(PotentialSolution {
        potential: ScalarField::new(grid, Unit::Volts, values),
        defined,
        stats,
        system,
        x,
    })
}

/// Joule heat density (W/m³) from a solved potential.
///
/// Each conducting face dissipates g (dV)²; the power is split between the
/// two voxels in proportion to their share of the face resistance, so a
/// face between unlike conductors deposits more heat in the poorer
/// conductor. Total density times volume equals the terminal input power
/// exactly (discrete energy balance).
pub fn joule_heat(
    grid: &VoxelGrid,
    sol: &PotentialSolution,
) -> Result<ScalarField, ElectricalError> {
    if !sol.potential.matches_grid(grid) {
        return Err(ElectricalError::FieldMismatch);
    }
    let h = grid.spacing_m();
    let vol = grid.voxel_volume();
    let mut q = vec![0.0; grid.n_active()];

    for &vox in grid.active_voxels() {
        let vi = vox as usize;
        let ra = grid.active_rank(vi).unwrap();
        if !sol.defined[ra] {
            continue;
        }
        let sa = grid.material_at(vi).sigma;
        if sa <= 0.0 {
            continue;
        }
        let va = sol.potential.values[ra];
        // +x, +y, +z neighbors so every face is visited exactly once
        let nbs = grid.neighbors(vi);
        for &nb in [nbs[1], nbs[3], nbs[5]].iter().flatten() {
            if !grid.is_active(nb) {
                continue;
            }
            let rb = grid.active_rank(nb).unwrap();
            if !sol.defined[rb] {
                continue;
            }
            let sb = grid.material_at(nb).sigma;
            let g = face_conductance(sa, sb, h);
            if g == 0.0 {
                continue;
            }
            let dv = va - sol.potential.values[rb];
            let p = g * dv * dv;
            // resistance-weighted split: share_a = (1/sa) / (1/sa + 1/sb)
            let share_a = sb / (sa + sb);
            q[ra] += p * share_a / vol;
            q[rb] += p * (1.0 - share_a) / vol;
        }
    }
    Ok(ScalarField::new(grid, Unit::WattsPerCubicMeter, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{
        voxelize, Block, ElectricalSpec, FaceDir, Scenario, SinkPatch, SourceSchedule, Terminal,
    };
    use crate::materials::{builtin_library, Material};

    fn bar_with_terminals(sigma: f64, v: f64) -> (Scenario, ElectricalSpec) {
        let spec = ElectricalSpec {
            terminals: vec![
                Terminal {
                    min: [0, 0, 0],
                    size: [4, 4, 2],
                    voltage: 0.0,
                },
                Terminal {
                    min: [0, 0, 38],
                    size: [4, 4, 2],
                    voltage: v,
                },
            ],
        };
        let s = Scenario {
            spacing_nm: 2,
            boxes: vec![Block::new([0, 0, 0], [4, 4, 40], "cond", "bar")],
            sinks: vec![SinkPatch {
                min: [0, 0, 0],
                size: [4, 4, 40],
                face: Some(FaceDir::ZMin),
                temperature: 300.0,
            }],
            sources: vec![],
            schedule: SourceSchedule::default(),
            electrical: Some(spec.clone()),
            material_overrides: vec![Material {
                name: "cond".into(),
                k: 100.0,
                rho: 1000.0,
                cp: 100.0,
                sigma,
            }],
        };
        (s, spec)
    }

    #[test]
    fn uniform_bar_field_and_power() {
        // sigma = 1e4 S/m, 1 V over clamped-center distance:
        // terminals clamp the end voxels, so the resistive length is the
        // 36 nm between the inner clamped faces... the discrete answer is
        // linear between clamped cell centers (z = 1 nm and z = 39 nm apart
        // minus clamping): clamped layers span 2 voxels each in z? size 2nm
        // = 1 voxel layer. Gradient spans 38 nm between clamped centers.
        let sigma = 1e4;
        let (s, spec) = bar_with_terminals(sigma, 1.0);
        let g = voxelize(&s, &builtin_library()).unwrap();
        let sol = solve_potential(&g, &spec, 1e-12).unwrap();
        // linear profile between clamped cell centers at z=1nm and z=39nm
        let dz = 38e-9;
        for z in 0..20 {
            let idx = g.index(1, 1, z);
            let zc = (2 * z + 1) as f64 * 1e-9;
            let expect = ((zc - 1e-9) / dz).clamp(0.0, 1.0);
            let got = sol.potential.at_voxel(&g, idx).unwrap();
            assert!((got - expect).abs() < 1e-9, "z={z}: {got} vs {expect}");
        }
        // dissipated power = V^2 / R, R = L / (sigma A) with L = 38 nm
        let area = 4e-9 * 4e-9;
        let r = dz / (sigma * area);
        let p_expect = 1.0 / r;
        let qf = joule_heat(&g, &sol).unwrap();
        let p_total: f64 = qf.values.iter().sum::<f64>() * g.voxel_volume();
        assert!(
            ((p_total - p_expect) / p_expect).abs() < 1e-9,
            "{p_total} vs {p_expect}"
        );
        // uniform density in the interior: E = 1V / 38nm, q = sigma E^2
        let e = 1.0 / dz;
        let q_expect = sigma * e * e;
        let mid = g.index(1, 1, 10);
        let got = qf.at_voxel(&g, mid).unwrap();
        assert!(((got - q_expect) / q_expect).abs() < 1e-9);
        // charge conservation
        assert!(sol.net_terminal_current().abs() < 1e-9 * p_expect);
    }

    #[test]
    fn no_terminals_rejected() {
        let (s, _) = bar_with_terminals(1e4, 1.0);
        let g = voxelize(&s, &builtin_library()).unwrap();
        let empty = ElectricalSpec { terminals: vec![] };
        assert!(matches!(
            solve_potential(&g, &empty, 1e-10),
            Err(ElectricalError::NoTerminals)
        ));
    }

    #[test]
    fn terminal_on_insulator_rejected() {
        let (mut s, spec) = bar_with_terminals(1e4, 1.0);
        // insulating slab under the bar; move terminal 0 onto it
        s.boxes
            .push(Block::new([0, 0, 0], [4, 4, 2], "Al2O3", "plug"));
        let g = voxelize(&s, &builtin_library()).unwrap();
        assert!(matches!(
            solve_potential(&g, &spec, 1e-10),
            Err(ElectricalError::EmptyTerminal { index: 0 })
        ));
    }

    #[test]
    fn disconnected_conductor_is_masked() {
        let (mut s, spec) = bar_with_terminals(1e4, 1.0);
        // isolated conducting cube, not touching the bar
        s.boxes
            .push(Block::new([20, 0, 0], [4, 4, 4], "cond", "island"));
        let g = voxelize(&s, &builtin_library()).unwrap();
        let sol = solve_potential(&g, &spec, 1e-12).unwrap();
        assert_eq!(sol.system.masked.len(), 2 * 2 * 2);
        let island = g.index(10, 0, 0);
        let r = g.active_rank(island).unwrap();
        assert!(!sol.defined[r]);
        // masked voxels produce no Joule heat
        let qf = joule_heat(&g, &sol).unwrap();
        assert_eq!(qf.values[r], 0.0);
    }

    #[test]
    fn heat_splits_toward_poor_conductor() {
        // two conductors in series; the poorer conductor must receive the
        // larger share of the interface face power
        let spec = ElectricalSpec {
            terminals: vec![
                Terminal {
                    min: [0, 0, 0],
                    size: [2, 2, 2],
                    voltage: 0.0,
                },
                Terminal {
                    min: [0, 0, 38],
                    size: [2, 2, 2],
                    voltage: 1.0,
                },
            ],
        };
        let s = Scenario {
            spacing_nm: 2,
            boxes: vec![
                Block::new([0, 0, 0], [2, 2, 20], "good", "a"),
                Block::new([0, 0, 20], [2, 2, 20], "poor", "b"),
            ],
            sinks: vec![SinkPatch {
                min: [0, 0, 0],
                size: [2, 2, 40],
                face: Some(FaceDir::ZMin),
                temperature: 300.0,
            }],
            sources: vec![],
            schedule: SourceSchedule::default(),
            electrical: Some(spec.clone()),
            material_overrides: vec![
                Material {
                    name: "good".into(),
                    k: 100.0,
                    rho: 1.0,
                    cp: 1.0,
                    sigma: 1e5,
                },
                Material {
                    name: "poor".into(),
                    k: 100.0,
                    rho: 1.0,
                    cp: 1.0,
                    sigma: 1e3,
                },
            ],
        };
        let g = voxelize(&s, &builtin_library()).unwrap();
        let sol = solve_potential(&g, &spec, 1e-13).unwrap();
        let qf = joule_heat(&g, &sol).unwrap();
        // voxels straddling the interface at z index 9 (good) and 10 (poor)
        let q_good = qf.at_voxel(&g, g.index(0, 0, 9)).unwrap();
        let q_poor = qf.at_voxel(&g, g.index(0, 0, 10)).unwrap();
        assert!(q_poor > 10.0 * q_good, "poor {q_poor} good {q_good}");
        // energy balance against analytic series resistance
        let area = 2e-9 * 2e-9;
        // clamped centers at z=1nm and 39nm; interface at 20nm
        let r = 19e-9 / (1e5 * area) + 19e-9 / (1e3 * area);
        let p_expect = 1.0 / r;
        let p_total: f64 = qf.values.iter().sum::<f64>() * g.voxel_volume();
        assert!(
            ((p_total - p_expect) / p_expect).abs() < 1e-9,
            "{p_total} vs {p_expect}"
        );
    }
}
