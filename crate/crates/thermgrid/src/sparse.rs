//! Sparse symmetric systems and the Jacobi-preconditioned conjugate
//! gradient solver.

use thiserror::Error;

/// Compressed sparse row matrix. Rows are stored fully (both triangles),
/// so `mul` is a plain CSR product.
#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<u32>,
    pub val: Vec<f64>,
}

impl Csr {
    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn mul(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(out.len(), self.n);
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.val[k] * x[self.col[k] as usize];
            }
            out[i] = acc;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.col[k] as usize == i {
                    d[i] = self.val[k];
                }
            }
        }
        d
    }

    /// Exact structural+numerical symmetry check; O(nnz log nnz), intended
    /// for small grids in tests.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col[k] as usize;
                let mut found = false;
                for k2 in self.row_ptr[j]..self.row_ptr[j + 1] {
                    if self.col[k2] as usize == i {
                        if (self.val[k2] - self.val[k]).abs()
                            > tol * self.val[k].abs().max(1.0)
                        {
                            return false;
                        }
                        found = true;
                        break;
                    }
                }
                if !found && self.val[k] != 0.0 {
                    return false;
                }
            }
        }
        true
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iterations: usize,
    pub rel_residual: f64,
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(
        "conjugate gradient failed to reach tolerance: {iterations} iterations, \
         relative residual {rel_residual:.3e}"
    )]
    Divergence {
        iterations: usize,
        rel_residual: f64,
        /// Best iterate reached, for diagnostics.
        best: Vec<f64>,
    },
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned CG for SPD systems. `x0` seeds a warm start.
pub fn cg_jacobi(
    a: &Csr,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveStats), SolverError> {
    let n = a.n;
    assert_eq!(b.len(), n);
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveStats {
                iterations: 0,
                rel_residual: 0.0,
            },
        ));
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 0.0 })
        .collect();

    let mut x = match x0 {
        Some(v) => v.to_vec(),
        None => vec![0.0; n],
    };
    let mut r = vec![0.0; n];
    a.mul(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];

    let mut best = x.clone();
    let mut best_res = dot(&r, &r).sqrt() / b_norm;
    if best_res <= tol {
        return Ok((
            x,
            SolveStats {
                iterations: 0,
                rel_residual: best_res,
            },
        ));
    }

    for it in 1..=max_iter {
        a.mul(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(SolverError::Divergence {
                iterations: it,
                rel_residual: best_res,
                best,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let res = dot(&r, &r).sqrt() / b_norm;
        if res < best_res {
            best_res = res;
            best.copy_from_slice(&x);
        }
        if res <= tol {
            return Ok((
                x,
                SolveStats {
                    iterations: it,
                    rel_residual: res,
                },
            ));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(SolverError::Divergence {
        iterations: max_iter,
        rel_residual: best_res,
        best,
    })
}

/// Incremental CSR builder for stencil matrices.
pub struct CsrBuilder {
    row_ptr: Vec<usize>,
    col: Vec<u32>,
    val: Vec<f64>,
}

impl CsrBuilder {
    pub fn with_capacity(rows: usize, nnz: usize) -> Self {
        let mut row_ptr = Vec::with_capacity(rows + 1);
        row_ptr.push(0);
        Self {
            row_ptr,
            col: Vec::with_capacity(nnz),
            val: Vec::with_capacity(nnz),
        }
    }

    pub fn push_row(&mut self, entries: &[(u32, f64)]) {
        for &(c, v) in entries {
            self.col.push(c);
            self.val.push(v);
        }
        self.row_ptr.push(self.col.len());
    }

    pub fn finish(self) -> Csr {
        Csr {
            n: self.row_ptr.len() - 1,
            row_ptr: self.row_ptr,
            col: self.col,
            val: self.val,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_to_csr(m: &[Vec<f64>]) -> Csr {
        let mut b = CsrBuilder::with_capacity(m.len(), m.len() * m.len());
        for row in m {
            let entries: Vec<(u32, f64)> = row
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(j, &v)| (j as u32, v))
                .collect();
            b.push_row(&entries);
        }
        b.finish()
    }

    #[test]
    fn identity_solve() {
        let m = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        let a = dense_to_csr(&m);
        let b = vec![3.0, -1.0, 2.5];
        let (x, _) = cg_jacobi(&a, &b, None, 1e-12, 100).unwrap();
        for i in 0..3 {
            assert!((x[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn spd_matches_dense_cholesky() {
        // random-ish SPD: A = B^T B + I
        let n = 5;
        let mut seed = 42u64;
        let mut rnd = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        let bmat: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rnd()).collect())
            .collect();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    a[i][j] += bmat[k][i] * bmat[k][j];
                }
            }
            a[i][i] += 1.0;
        }
        let rhs: Vec<f64> = (0..n).map(|_| rnd()).collect();

        // dense Cholesky oracle
        let mut l = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = a[i][j];
                for k in 0..j {
                    s -= l[i][k] * l[j][k];
                }
                if i == j {
                    l[i][j] = s.sqrt();
                } else {
                    l[i][j] = s / l[j][j];
                }
            }
        }
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = rhs[i];
            for k in 0..i {
                s -= l[i][k] * y[k];
            }
            y[i] = s / l[i][i];
        }
        let mut x_ref = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l[k][i] * x_ref[k];
            }
            x_ref[i] = s / l[i][i];
        }

        let csr = dense_to_csr(&a);
        let (x, _) = cg_jacobi(&csr, &rhs, None, 1e-14, 1000).unwrap();
        for i in 0..n {
            assert!((x[i] - x_ref[i]).abs() < 1e-9, "{} vs {}", x[i], x_ref[i]);
        }
    }

    #[test]
    fn divergence_reports_best_iterate() {
        let m = vec![vec![2.0, 1.0], vec![1.0, 2.0]];
        let a = dense_to_csr(&m);
        let b = vec![1.0, 0.0];
        match cg_jacobi(&a, &b, None, 1e-30, 1) {
            Err(SolverError::Divergence { best, .. }) => assert_eq!(best.len(), 2),
            other => panic!("expected divergence, got {:?}", other.map(|_| ())),
        }
    }
}
