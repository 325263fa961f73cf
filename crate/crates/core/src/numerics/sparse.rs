//! Compressed sparse rows, an envelope Cholesky factorization and a
//! Jacobi-preconditioned conjugate-gradient solver.
//!
//! The meshes and grids in this crate are numbered ring by ring (or column by
//! column), so their matrices are banded and the envelope factor stays small.

use crate::error::{Error, Result};

/// Accumulates (row, col, value) entries; duplicates are summed.
#[derive(Debug, Default, Clone)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: Vec::new(),
        }
    }

    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n && col < self.n);
        self.entries.push((row, col, value));
    }

    pub fn build(mut self) -> CsrMatrix {
        self.entries.sort_by_key(|e| (e.0, e.1));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut cols = Vec::with_capacity(self.entries.len());
        let mut vals: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            n: self.n,
            row_ptr,
            cols,
            vals,
        }
    }
}

/// Square sparse matrix in CSR form with sorted column indices.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let s = self.row_ptr[i];
        let e = self.row_ptr[i + 1];
        self.cols[s..e]
            .iter()
            .copied()
            .zip(self.vals[s..e].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(c, v)| v * x[c]).sum();
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Removes row and column `k`, replacing them with the identity.
    pub fn pin(&self, k: usize) -> CsrMatrix {
        let mut b = TripletBuilder::new(self.n);
        for i in 0..self.n {
            if i == k {
                continue;
            }
            for (c, v) in self.row(i) {
                if c != k {
                    b.add(i, c, v);
                }
            }
        }
        b.add(k, k, 1.0);
        b.build()
    }
}

/// Lower-triangular Cholesky factor stored by row envelope.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    first: Vec<usize>,
    offset: Vec<usize>,
    data: Vec<f64>,
}

impl EnvelopeCholesky {
    /// Factors a symmetric positive-definite matrix (lower triangle is read).
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.dim();
        let mut first = vec![0usize; n];
        let mut offset = vec![0usize; n + 1];
        for i in 0..n {
            first[i] = a
                .row(i)
                .map(|(c, _)| c)
                .filter(|&c| c <= i)
                .min()
                .unwrap_or(i);
            offset[i + 1] = offset[i] + (i - first[i] + 1);
        }
        let mut data = vec![0.0; offset[n]];
        for i in 0..n {
            for (c, v) in a.row(i) {
                if c <= i {
                    data[offset[i] + c - first[i]] = v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            let (before, row_i) = data.split_at_mut(offset[i]);
            let row_i = &mut row_i[..i - fi + 1];
            for j in fi..i {
                let fj = first[j];
                let row_j = &before[offset[j]..offset[j] + (j - fj + 1)];
                let k0 = fi.max(fj);
                let mut s = row_i[j - fi];
                let ri = &row_i[k0 - fi..j - fi];
                let rj = &row_j[k0 - fj..j - fj];
                s -= ri.iter().zip(rj).map(|(a, b)| a * b).sum::<f64>();
                row_i[j - fi] = s / row_j[j - fj];
            }
            let d = row_i[i - fi] - row_i[..i - fi].iter().map(|v| v * v).sum::<f64>();
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::Singular(format!(
                    "non-positive pivot {d:e} at row {i}"
                )));
            }
            row_i[i - fi] = d.sqrt();
        }
        Ok(Self {
            first,
            offset,
            data,
        })
    }

    pub fn fill(&self) -> usize {
        self.data.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.first.len();
        let mut y = b.to_vec();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.offset[i]..self.offset[i + 1]];
            let s: f64 = row[..i - fi]
                .iter()
                .zip(&y[fi..i])
                .map(|(l, v)| l * v)
                .sum();
            y[i] = (y[i] - s) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.offset[i]..self.offset[i + 1]];
            y[i] /= row[i - fi];
            let yi = y[i];
            for (k, l) in row[..i - fi].iter().enumerate() {
                y[fi + k] -= l * yi;
            }
        }
        y
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CgOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned CG. With `zero_mean` the iterates are kept
/// orthogonal to the constant vector, which solves consistent singular
/// Neumann systems.
pub fn pcg(
    a: &CsrMatrix,
    b: &[f64],
    tol: f64,
    max_iter: usize,
    zero_mean: bool,
) -> Result<(Vec<f64>, CgOutcome)> {
    let n = a.dim();
    let project = |v: &mut [f64]| {
        if zero_mean {
            let m = v.iter().sum::<f64>() / n as f64;
            v.iter_mut().for_each(|x| *x -= m);
        }
    };
    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut rhs = b.to_vec();
    project(&mut rhs);
    let bnorm = norm(&rhs);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((
            x,
            CgOutcome {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let mut r = rhs;
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    project(&mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        a.mul_vec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::Singular(
                "matrix is not positive definite on the search space".into(),
            ));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = norm(&r) / bnorm;
        if rel <= tol {
            project(&mut x);
            return Ok((
                x,
                CgOutcome {
                    iterations: it,
                    relative_residual: rel,
                },
            ));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        project(&mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residual: norm(&r) / bnorm,
    })
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
