use crate::error::{Error, Result};

/// Row-compressed sparse matrix with sorted, unique column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triplets. Duplicates are summed in the
    /// order they appear, so a fixed insertion order gives bit-identical
    /// values.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::arg(format!("entry ({r}, {c}) outside {nrows}x{ncols}")));
            }
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        // Bucket by row, keeping insertion order inside each row.
        let mut next = counts.clone();
        let mut bucket = vec![(0usize, 0.0f64); triplets.len()];
        for &(r, c, v) in triplets {
            bucket[next[r]] = (c, v);
            next[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        for r in 0..nrows {
            let row = &mut bucket[counts[r]..counts[r + 1]];
            row.sort_by_key(|&(c, _)| c); // stable
            for &(c, v) in row.iter() {
                if col_idx.len() > row_ptr[r] && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(SparseMatrix { nrows, ncols, row_ptr, col_idx, values })
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut t = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(Error::Dimension { expected: ncols, got: row.len() });
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        SparseMatrix::from_triplets(rows.len(), ncols, &t)
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of one row.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |k| vals[k])
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::Dimension { expected: self.ncols, got: x.len() });
        }
        Ok((0..self.nrows)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(|(&c, v)| v * x[c]).sum()
            })
            .collect())
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                row[c] = v;
            }
        }
        d
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            t.extend(cols.iter().zip(vals).map(|(&c, &v)| (i, c, v)));
        }
        t
    }

    /// Submatrix with the given rows and columns (both as full-to-sub maps
    /// where `usize::MAX` drops the index).
    pub fn select(&self, row_map: &[usize], col_map: &[usize], nrows: usize, ncols: usize) -> Result<Self> {
        if row_map.len() != self.nrows || col_map.len() != self.ncols {
            return Err(Error::Dimension { expected: self.nrows, got: row_map.len() });
        }
        let mut t = Vec::new();
        for i in 0..self.nrows {
            let ri = row_map[i];
            if ri == usize::MAX {
                continue;
            }
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                let cj = col_map[c];
                if cj != usize::MAX {
                    t.push((ri, cj, v));
                }
            }
        }
        SparseMatrix::from_triplets(nrows, ncols, &t)
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
