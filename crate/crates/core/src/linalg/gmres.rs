//! Restarted GMRES with an ILU(0) right preconditioner.

use super::csr::{norm2, SparseMatrix};
use crate::error::{Error, Result};

/// Incomplete LU with the sparsity pattern of the input matrix.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    lu: SparseMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension { expected: n, got: a.ncols() });
        }
        let row_ptr = a.row_ptr().to_vec();
        let col = a.col_idx().to_vec();
        let mut val = a.values().to_vec();
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            for k in row_ptr[i]..row_ptr[i + 1] {
                if col[k] == i {
                    diag[i] = k;
                }
            }
            if diag[i] == usize::MAX {
                return Err(Error::Factorization(format!("ILU(0): row {i} has no diagonal entry")));
            }
        }
        // position lookup for the current row
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            for k in row_ptr[i]..row_ptr[i + 1] {
                pos[col[k]] = k;
            }
            for k in row_ptr[i]..row_ptr[i + 1] {
                let j = col[k];
                if j >= i {
                    break;
                }
                let pivot = val[diag[j]];
                if pivot == 0.0 {
                    return Err(Error::Factorization(format!("ILU(0): zero pivot in row {j}")));
                }
                let factor = val[k] / pivot;
                val[k] = factor;
                for kk in diag[j] + 1..row_ptr[j + 1] {
                    let p = pos[col[kk]];
                    if p != usize::MAX {
                        val[p] -= factor * val[kk];
                    }
                }
            }
            for k in row_ptr[i]..row_ptr[i + 1] {
                pos[col[k]] = usize::MAX;
            }
            if val[diag[i]] == 0.0 {
                return Err(Error::Factorization(format!("ILU(0): zero pivot in row {i}")));
            }
        }
        let triplets: Vec<(usize, usize, f64)> = (0..n)
            .flat_map(|i| (row_ptr[i]..row_ptr[i + 1]).map(move |k| (i, k)))
            .map(|(i, k)| (i, col[k], val[k]))
            .collect();
        Ok(Ilu0 { lu: SparseMatrix::from_triplets(n, n, &triplets)?, diag })
    }

    /// Applies `(LU)^{-1}` to `r`.
    pub fn apply(&self, r: &[f64]) -> Vec<f64> {
        let n = r.len();
        let rp = self.lu.row_ptr();
        let col = self.lu.col_idx();
        let val = self.lu.values();
        let mut y = r.to_vec();
        for i in 0..n {
            for k in rp[i]..self.diag[i] {
                y[i] -= val[k] * y[col[k]];
            }
        }
        for i in (0..n).rev() {
            for k in self.diag[i] + 1..rp[i + 1] {
                y[i] -= val[k] * y[col[k]];
            }
            y[i] /= val[self.diag[i]];
        }
        y
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOptions {
    pub restart: usize,
    pub tol: f64,
    pub max_iter: usize,
}

/// Solves `A x = b` from a zero initial guess; `tol` is relative to `|b|`.
pub fn gmres(a: &SparseMatrix, b: &[f64], precond: &Ilu0, opts: GmresOptions) -> Result<Vec<f64>> {
    let n = a.nrows();
    if b.len() != n {
        return Err(Error::Dimension { expected: n, got: b.len() });
    }
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let m = opts.restart.max(1).min(n.max(1));
    let mut iters = 0;
    let mut res;
    while iters < opts.max_iter {
        let ax = a.spmv(&x)?;
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm2(&r);
        res = beta / bnorm;
        if res <= opts.tol {
            return Ok(x);
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut h = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            iters += 1;
            let z = precond.apply(&basis[k]);
            let mut w = a.spmv(&z)?;
            for (j, vj) in basis.iter().enumerate() {
                let hij: f64 = w.iter().zip(vj).map(|(a, b)| a * b).sum();
                h[j][k] = hij;
                for (wi, vi) in w.iter_mut().zip(vj) {
                    *wi -= hij * vi;
                }
            }
            let wn = norm2(&w);
            h[k + 1][k] = wn;
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let denom = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if denom == 0.0 {
                return Err(Error::Solver { iterations: iters, residual: res });
            }
            cs[k] = h[k][k] / denom;
            sn[k] = h[k + 1][k] / denom;
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            res = g[k + 1].abs() / bnorm;
            if res <= opts.tol || wn == 0.0 || iters >= opts.max_iter {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        let mut update = vec![0.0; n];
        for (yj, vj) in y.iter().zip(&basis) {
            for (u, v) in update.iter_mut().zip(vj) {
                *u += yj * v;
            }
        }
        let dz = precond.apply(&update);
        for (xi, d) in x.iter_mut().zip(dz) {
            *xi += d;
        }
    }
    let ax = a.spmv(&x)?;
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let true_res = norm2(&r) / bnorm;
    if true_res <= opts.tol {
        Ok(x)
    } else {
        Err(Error::Solver { iterations: iters, residual: true_res })
    }
}
