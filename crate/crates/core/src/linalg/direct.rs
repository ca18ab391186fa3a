//! Sparse LU through faer.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use super::csr::{norm2, SparseMatrix};
use crate::error::{Error, Result};

const REFINEMENT_STEPS: usize = 3;

// Sequential factorization keeps results bit-reproducible.
static SEQUENTIAL: std::sync::Once = std::sync::Once::new();

/// A factorized square matrix, reusable across right-hand sides.
pub struct LuFactor {
    matrix: SparseMatrix,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl std::fmt::Debug for LuFactor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LuFactor").field("n", &self.matrix.nrows()).finish()
    }
}

impl LuFactor {
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        SEQUENTIAL.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension { expected: n, got: a.ncols() });
        }
        let triplets: Vec<Triplet<usize, usize, f64>> =
            a.triplets().into_iter().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        let csc = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        let lu = csc.sp_lu().map_err(|e| Error::Factorization(format!("{e:?}")))?;
        Ok(LuFactor { matrix: a.clone(), lu })
    }

    /// Solves `A x = b`, applying a few steps of iterative refinement when
    /// the relative residual exceeds `tol`.
    pub fn solve(&self, b: &[f64], tol: f64) -> Result<Vec<f64>> {
        let n = self.matrix.nrows();
        if b.len() != n {
            return Err(Error::Dimension { expected: n, got: b.len() });
        }
        let bnorm = norm2(b);
        if bnorm == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let mut x = self.apply(b);
        let mut res = 0.0;
        for _ in 0..=REFINEMENT_STEPS {
            let ax = self.matrix.spmv(&x)?;
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            res = norm2(&r) / bnorm;
            if !res.is_finite() {
                break;
            }
            if res <= tol {
                return Ok(x);
            }
            let dx = self.apply(&r);
            for (xi, d) in x.iter_mut().zip(dx) {
                *xi += d;
            }
        }
        Err(Error::Solver { iterations: REFINEMENT_STEPS, residual: res })
    }

    fn apply(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Mat::<f64>::from_fn(b.len(), 1, |i, _| b[i]);
        let sol = self.lu.solve(&rhs);
        (0..b.len()).map(|i| sol[(i, 0)]).collect()
    }
}
