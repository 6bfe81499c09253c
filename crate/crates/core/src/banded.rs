//! Square banded matrices and the exponential of a banded generator.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Entries this small on the outermost diagonals are dropped after products.
const TRIM: f64 = 1e-18;

/// `n x n` matrix with entries only for `|i - j| <= bw`, stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        let bw = bw.min(n.saturating_sub(1));
        BandedMatrix {
            n,
            bw,
            data: vec![0.0; n * (2 * bw + 1)],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, 0);
        m.data.iter_mut().for_each(|x| *x = 1.0);
        m
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        BandedMatrix {
            n: d.len(),
            bw: 0,
            data: d.to_vec(),
        }
    }

    /// Symmetric tridiagonal matrix from its diagonal and off-diagonal.
    pub fn from_tridiagonal(diag: &[f64], off: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, 1);
        for i in 0..n {
            m.set(i, i, diag[i]);
            if i + 1 < n {
                m.set(i, i + 1, off[i]);
                m.set(i + 1, i, off[i]);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    fn width(&self) -> usize {
        2 * self.bw + 1
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let d = j as isize - i as isize;
        if d.unsigned_abs() > self.bw {
            None
        } else {
            Some(i * self.width() + (d + self.bw as isize) as usize)
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// Panics if `(i, j)` is outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j).expect("entry outside band");
        self.data[s] = v;
    }

    fn cols(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.bw)..(i + self.bw + 1).min(self.n)
    }

    /// Nonzero-pattern entries `(j, value)` of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.cols(i).map(move |j| (j, self.get(i, j)))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        let mut col = vec![0.0; self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                col[j] += v.abs();
            }
        }
        col.into_iter().fold(0.0, f64::max)
    }

    pub fn scale(&mut self, c: f64) {
        self.data.iter_mut().for_each(|x| *x *= c);
    }

    fn widened(&self, bw: usize) -> BandedMatrix {
        let mut out = BandedMatrix::zeros(self.n, bw.max(self.bw));
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                out.set(i, j, v);
            }
        }
        out
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: f64, other: &BandedMatrix) -> BandedMatrix {
        let mut out = self.widened(other.bw);
        for i in 0..other.n {
            for (j, v) in other.row(i) {
                let s = out.slot(i, j).unwrap();
                out.data[s] += c * v;
            }
        }
        out
    }

    pub fn matmul(&self, other: &BandedMatrix) -> Result<BandedMatrix> {
        if self.n != other.n {
            return Err(Error::domain(format!(
                "dimension mismatch {} vs {}",
                self.n, other.n
            )));
        }
        let mut out = BandedMatrix::zeros(self.n, self.bw + other.bw);
        for i in 0..self.n {
            for (k, a) in self.row(i) {
                if a == 0.0 {
                    continue;
                }
                for (j, b) in other.row(k) {
                    let s = out.slot(i, j).unwrap();
                    out.data[s] += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> BandedMatrix {
        let mut out = BandedMatrix::zeros(self.n, self.bw);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                out.set(j, i, v);
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// Drops outer diagonals whose entries are all below `tol`.
    pub fn trim(&mut self, tol: f64) {
        let mut bw = self.bw;
        while bw > 0 {
            let outer = (0..self.n).any(|i| {
                let hi = i + bw;
                (hi < self.n && self.get(i, hi).abs() >= tol)
                    || (i >= bw && self.get(i, i - bw).abs() >= tol)
            });
            if outer {
                break;
            }
            bw -= 1;
        }
        if bw < self.bw {
            let mut out = BandedMatrix::zeros(self.n, bw);
            for i in 0..self.n {
                for j in out.cols(i) {
                    let v = self.get(i, j);
                    out.set(i, j, v);
                }
            }
            *self = out;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }
}

/// `exp(K)` by Taylor expansion of `K / 2^s` followed by `s` squarings,
/// with `s` chosen so that `||K / 2^s||_1 <= 1/2`.
pub fn expm(k: &BandedMatrix) -> Result<BandedMatrix> {
    let norm = k.norm1();
    if !norm.is_finite() {
        return Err(Error::domain("non-finite generator"));
    }
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let mut a = k.clone();
    a.scale(0.5f64.powi(s));
    let mut sum = BandedMatrix::identity(k.dim());
    let mut term = BandedMatrix::identity(k.dim());
    for p in 1..=40 {
        term = term.matmul(&a)?;
        term.scale(1.0 / p as f64);
        term.trim(TRIM);
        sum = sum.add_scaled(1.0, &term);
        if term.max_abs() < TRIM {
            break;
        }
    }
    sum.trim(TRIM);
    for _ in 0..s {
        sum = sum.matmul(&sum)?;
        sum.trim(TRIM);
    }
    Ok(sum)
}

fn taylor_steps(k: &BandedMatrix, x: &[f64], steps: usize) -> Vec<f64> {
    let h = 1.0 / steps as f64;
    let mut y = x.to_vec();
    for _ in 0..steps {
        let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let mut term = y.clone();
        let mut acc = y.clone();
        for p in 1..=60 {
            term = k.mul_vec(&term);
            let c = h / p as f64;
            term.iter_mut().for_each(|t| *t *= c);
            acc.iter_mut().zip(&term).for_each(|(a, t)| *a += t);
            if term.iter().fold(0.0f64, |m, v| m.max(v.abs())) < 1e-18 * scale {
                break;
            }
        }
        y = acc;
    }
    y
}

/// `exp(K) x` by repeated Taylor steps of size `h <= 1/||K||_1`, repeated with
/// halved step; returns the fine result and the difference between the two.
pub fn expm_action(k: &BandedMatrix, x: &[f64]) -> (Vec<f64>, f64) {
    let steps = (k.norm1().ceil() as usize).max(1);
    let coarse = taylor_steps(k, x, steps);
    let fine = taylor_steps(k, x, 2 * steps);
    let diff = coarse
        .iter()
        .zip(&fine)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    (fine, diff)
}
