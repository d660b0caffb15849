//! Finite-volume assembly of diffusion operators on the voxel grid.
//!
//! Both the thermal conduction and the electrical potential solves are
//! discrete forms of div(c grad u) with a 7-point stencil and
//! harmonic-mean face conductances; this module builds the SPD system for
//! either coefficient. Dirichlet values enter by row elimination: clamped
//! voxels are removed from the unknown set, face patches couple boundary
//! voxels to the imposed value through half-cell conductances.

use std::collections::HashMap;

use thiserror::Error;

use crate::geometry::{FaceDir, SinkPatch};
use crate::grid::VoxelGrid;
use crate::sparse::{Csr, CsrBuilder};

/// Harmonic-mean conductance of the face between materials with
/// conductivities `c_a`, `c_b` on a grid with the given spacing (m).
/// This is area * c_harm / spacing = c_harm * spacing; zero whenever either
/// side does not conduct, which makes the face adiabatic.
#[inline]
pub fn face_conductance(c_a: f64, c_b: f64, spacing_m: f64) -> f64 {
    if c_a <= 0.0 || c_b <= 0.0 {
        return 0.0;
    }
    let c_harm = 2.0 * c_a * c_b / (c_a + c_b);
    c_harm * spacing_m
}

/// Resolved Dirichlet data in voxel terms.
#[derive(Debug, Clone, Default)]
pub struct Dirichlet {
    /// Voxels whose value is imposed directly (box patches); sorted, deduped.
    pub clamped: Vec<(u32, f64)>,
    /// (voxel, imposed value) couplings through one voxel face with a
    /// half-cell conductance (face patches). A voxel may appear repeatedly.
    pub face_links: Vec<(u32, f64)>,
}

impl Dirichlet {
    pub fn is_empty(&self) -> bool {
        self.clamped.is_empty() && self.face_links.is_empty()
    }

    pub fn clamp_value(&self, voxel: u32) -> Option<f64> {
        self.clamped
            .binary_search_by_key(&voxel, |&(v, _)| v)
            .ok()
            .map(|i| self.clamped[i].1)
    }

    pub fn value_range(&self) -> Option<(f64, f64)> {
        let mut range: Option<(f64, f64)> = None;
        for &(_, v) in self.clamped.iter().chain(self.face_links.iter()) {
            range = Some(match range {
                None => (v, v),
                Some((lo, hi)) => (lo.min(v), hi.max(v)),
            });
        }
        range
    }
}

/// Map sink patches onto grid voxels. Patches that miss the grid entirely
/// contribute nothing (the caller checks for an empty result).
pub fn resolve_dirichlet(grid: &VoxelGrid, patches: &[SinkPatch]) -> Dirichlet {
    let h = grid.spacing_nm as i64;
    let mut clamped: Vec<(u32, f64)> = Vec::new();
    let mut face_links: Vec<(u32, f64)> = Vec::new();

    for p in patches {
        let lo = [
            (p.min[0] - grid.origin_nm[0]).div_euclid(h),
            (p.min[1] - grid.origin_nm[1]).div_euclid(h),
            (p.min[2] - grid.origin_nm[2]).div_euclid(h),
        ];
        let hi = [
            lo[0] + (p.size[0] + h - 1).div_euclid(h),
            lo[1] + (p.size[1] + h - 1).div_euclid(h),
            lo[2] + (p.size[2] + h - 1).div_euclid(h),
        ];
        let clip = |v: i64, n: usize| v.clamp(0, n as i64) as usize;
        let (x0, x1) = (clip(lo[0], grid.dims[0]), clip(hi[0], grid.dims[0]));
        let (y0, y1) = (clip(lo[1], grid.dims[1]), clip(hi[1], grid.dims[1]));
        let (z0, z1) = (clip(lo[2], grid.dims[2]), clip(hi[2], grid.dims[2]));
        if x0 >= x1 || y0 >= y1 || z0 >= z1 {
            continue;
        }

        let (fx, fy, fz) = match p.face {
            None => ((x0, x1), (y0, y1), (z0, z1)),
            Some(FaceDir::XMin) => ((x0, x0 + 1), (y0, y1), (z0, z1)),
            Some(FaceDir::XMax) => ((x1 - 1, x1), (y0, y1), (z0, z1)),
            Some(FaceDir::YMin) => ((x0, x1), (y0, y0 + 1), (z0, z1)),
            Some(FaceDir::YMax) => ((x0, x1), (y1 - 1, y1), (z0, z1)),
            Some(FaceDir::ZMin) => ((x0, x1), (y0, y1), (z0, z0 + 1)),
            Some(FaceDir::ZMax) => ((x0, x1), (y0, y1), (z1 - 1, z1)),
        };
        for z in fz.0..fz.1 {
            for y in fy.0..fy.1 {
                for x in fx.0..fx.1 {
                    let idx = grid.index(x, y, z) as u32;
                    if !grid.is_active(idx as usize) {
                        continue;
                    }
                    match p.face {
                        None => clamped.push((idx, p.temperature)),
                        Some(_) => face_links.push((idx, p.temperature)),
                    }
                }
            }
        }
    }

    clamped.sort_unstable_by_key(|&(v, _)| v);
    clamped.dedup_by_key(|&mut (v, _)| v);
    Dirichlet {
        clamped,
        face_links,
    }
}

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error(
        "floating component: {voxels} conducting voxels have no path to any \
         Dirichlet patch"
    )]
    FloatingComponent { voxels: usize },
    #[error("no Dirichlet data resolved onto the grid")]
    NoDirichlet,
}

/// What to do with conducting voxels that cannot reach a Dirichlet patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnreachablePolicy {
    /// Fail assembly (thermal steady state).
    Error,
    /// Drop them from the system (electrical components with no terminal).
    Mask,
    /// Keep them; valid only when a mass term will make the system SPD
    /// (transient stepping).
    Keep,
}

/// Assembled SPD system over the unknown voxels.
#[derive(Debug)]
pub struct DiffusionSystem {
    pub matrix: Csr,
    /// Dirichlet contribution to the right-hand side (no volumetric sources).
    pub rhs_dirichlet: Vec<f64>,
    /// Sorted voxel ids of the unknowns (active, conducting, not clamped).
    pub unknowns: Vec<u32>,
    /// (row, conductance, imposed value) for every unknown-to-Dirichlet
    /// coupling; used for boundary flux accounting.
    pub dirichlet_couplings: Vec<(u32, f64, f64)>,
    pub clamped: Vec<(u32, f64)>,
    /// Conducting voxels dropped under `UnreachablePolicy::Mask`.
    pub masked: Vec<u32>,
    /// Voxel volume (m³), for source scaling.
    pub voxel_volume: f64,
}

impl DiffusionSystem {
    pub fn n_unknowns(&self) -> usize {
        self.unknowns.len()
    }

    pub fn rank_of(&self, voxel: u32) -> Option<usize> {
        self.unknowns.binary_search(&voxel).ok()
    }

    /// Net flux (W) out of the solution into the Dirichlet boundary.
    pub fn dirichlet_flux(&self, x: &[f64]) -> f64 {
        self.dirichlet_couplings
            .iter()
            .map(|&(row, g, v)| g * (x[row as usize] - v))
            .sum()
    }

    /// Scatter a solution over unknowns into a per-active-voxel vector.
    /// Clamped voxels get their imposed value, masked voxels `fill`.
    pub fn scatter(&self, grid: &VoxelGrid, x: &[f64], fill: f64) -> Vec<f64> {
        let mut out = vec![fill; grid.n_active()];
        for (r, &vox) in self.unknowns.iter().enumerate() {
            out[grid.active_rank(vox as usize).unwrap()] = x[r];
        }
        for &(vox, v) in &self.clamped {
            if let Some(rank) = grid.active_rank(vox as usize) {
                out[rank] = v;
            }
        }
        out
    }
}

/// Build the diffusion system for per-material coefficient `coeff`
/// (thermal conductivity or electrical conductivity).
pub fn assemble_diffusion(
    grid: &VoxelGrid,
    coeff: impl Fn(usize) -> f64,
    dirichlet: &Dirichlet,
    policy: UnreachablePolicy,
) -> Result<DiffusionSystem, AssemblyError> {
    let h = grid.spacing_m();
    let coeff_by_mat: Vec<f64> = (0..grid.materials.len()).map(coeff).collect();
    let cof = |vox: usize| coeff_by_mat[grid.material_index(vox) as usize];

    // Clamped voxels that actually conduct participate as boundary data.
    let clamped: Vec<(u32, f64)> = dirichlet
        .clamped
        .iter()
        .copied()
        .filter(|&(v, _)| grid.is_active(v as usize) && cof(v as usize) > 0.0)
        .collect();

    let mut face_link_map: HashMap<u32, Vec<f64>> = HashMap::new();
    for &(v, val) in &dirichlet.face_links {
        if grid.is_active(v as usize)
            && cof(v as usize) > 0.0
            && dirichlet.clamp_value(v).is_none()
        {
            face_link_map.entry(v).or_default().push(val);
        }
    }

    if clamped.is_empty() && face_link_map.is_empty() && policy != UnreachablePolicy::Keep {
        return Err(AssemblyError::NoDirichlet);
    }

    // Unknowns: active conducting voxels that are not clamped.
    let mut unknowns: Vec<u32> = grid
        .active_voxels()
        .iter()
        .copied()
        .filter(|&v| cof(v as usize) > 0.0 && dirichlet.clamp_value(v).is_none())
        .collect();

    // Reachability from the Dirichlet boundary over conducting faces.
    let masked = if policy == UnreachablePolicy::Keep {
        Vec::new()
    } else {
        let rank = |unk: &[u32], v: u32| unk.binary_search(&v).ok();
        let mut reached = vec![false; unknowns.len()];
        let mut queue: Vec<u32> = Vec::new();
        for &(v, _) in &clamped {
            for nb in grid.neighbors(v as usize).into_iter().flatten() {
                if grid.is_active(nb)
                    && face_conductance(cof(v as usize), cof(nb), h) > 0.0
                {
                    if let Some(r) = rank(&unknowns, nb as u32) {
                        if !reached[r] {
                            reached[r] = true;
                            queue.push(nb as u32);
                        }
                    }
                }
            }
        }
        for &v in face_link_map.keys() {
            if let Some(r) = rank(&unknowns, v) {
                if !reached[r] {
                    reached[r] = true;
                    queue.push(v);
                }
            }
        }
        while let Some(v) = queue.pop() {
            for nb in grid.neighbors(v as usize).into_iter().flatten() {
                if face_conductance(cof(v as usize), cof(nb), h) > 0.0 {
                    if let Some(r) = rank(&unknowns, nb as u32) {
                        if !reached[r] {
                            reached[r] = true;
                            queue.push(nb as u32);
                        }
                    }
                }
            }
        }
        let unreachable: Vec<u32> = unknowns
            .iter()
            .enumerate()
            .filter(|&(r, _)| !reached[r])
            .map(|(_, &v)| v)
            .collect();
        if !unreachable.is_empty() {
            match policy {
                UnreachablePolicy::Error => {
                    return Err(AssemblyError::FloatingComponent {
                        voxels: unreachable.len(),
                    })
                }
                UnreachablePolicy::Mask => {
                    let drop: std::collections::HashSet<u32> =
                        unreachable.iter().copied().collect();
                    unknowns.retain(|v| !drop.contains(v));
                }
                UnreachablePolicy::Keep => unreachable!(),
            }
        }
        unreachable
    };

    let n = unknowns.len();
    let mut builder = CsrBuilder::with_capacity(n, n * 7);
    let mut rhs = vec![0.0; n];
    let mut couplings: Vec<(u32, f64, f64)> = Vec::new();
    let mut entries: Vec<(u32, f64)> = Vec::with_capacity(7);

    for (row, &vox) in unknowns.iter().enumerate() {
        let vi = vox as usize;
        let ci = cof(vi);
        let mut diag = 0.0;
        entries.clear();
        for nb in grid.neighbors(vi).into_iter().flatten() {
            if !grid.is_active(nb) {
                continue;
            }
            let g = face_conductance(ci, cof(nb), h);
            if g == 0.0 {
                continue;
            }
            if let Some(val) = dirichlet.clamp_value(nb as u32) {
                diag += g;
                rhs[row] += g * val;
                couplings.push((row as u32, g, val));
            } else if let Ok(r) = unknowns.binary_search(&(nb as u32)) {
                diag += g;
                entries.push((r as u32, -g));
            }
            // neighbors that are conducting but masked contribute nothing
        }
        if let Some(vals) = face_link_map.get(&vox) {
            // half-cell conductance: c * A / (h/2)
            let g = 2.0 * ci * h;
            for &val in vals {
                diag += g;
                rhs[row] += g * val;
                couplings.push((row as u32, g, val));
            }
        }
        entries.push((row as u32, diag));
        entries.sort_unstable_by_key(|&(c, _)| c);
        builder.push_row(&entries);
    }

    Ok(DiffusionSystem {
        matrix: builder.finish(),
        rhs_dirichlet: rhs,
        unknowns,
        dirichlet_couplings: couplings,
        clamped,
        masked,
        voxel_volume: grid.voxel_volume(),
    })
}
