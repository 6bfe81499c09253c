//! Eigenvalues of finite tridiagonal sections by Sturm counting and bisection.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelSpec;

/// Default absolute bisection tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Target for the truncation-doubling stabilization of `spectrum_of_j`.
pub const TRUNCATION_TARGET: f64 = 1e-8;

/// Cap on section doublings under the default policy.
pub const MAX_DOUBLINGS: usize = 6;

/// A finite symmetric tridiagonal section with global index offset.
///
/// Row `i` (0-based) corresponds to global index `offset + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalWindow {
    offset: i64,
    diag: Vec<f64>,
    offdiag: Vec<f64>,
    truncation_margin: usize,
}

impl TridiagonalWindow {
    pub fn new(offset: i64, diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::domain("empty tridiagonal window"));
        }
        if offdiag.len() + 1 != diag.len() {
            return Err(Error::domain(format!(
                "offdiag length {} does not match diag length {}",
                offdiag.len(),
                diag.len()
            )));
        }
        if diag.iter().chain(&offdiag).any(|x| !x.is_finite()) {
            return Err(Error::domain("non-finite matrix entry"));
        }
        Ok(TridiagonalWindow {
            offset,
            diag,
            offdiag,
            truncation_margin: 0,
        })
    }

    /// Leading `size x size` section of `J` (global indices `1..=size`).
    pub fn leading_section(spec: &ModelSpec, size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::domain("section size must be positive"));
        }
        let diag = (1..=size as i64).map(|k| spec.diag(k)).collect();
        let offdiag = (1..size as i64).map(|k| spec.a(k)).collect();
        Self::new(1, diag, offdiag)
    }

    pub fn with_margin(mut self, margin: usize) -> Self {
        self.truncation_margin = margin;
        self
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn truncation_margin(&self) -> usize {
        self.truncation_margin
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn sturm_count(&self, x: f64) -> Result<usize> {
        if x.is_nan() {
            return Err(Error::domain("sturm_count at NaN"));
        }
        Ok(self.count_below(x))
    }

    fn pivmin(&self) -> f64 {
        let emax = self.offdiag.iter().fold(1.0f64, |m, e| m.max(e * e));
        f64::MIN_POSITIVE * emax
    }

    fn count_below(&self, x: f64) -> usize {
        let pivmin = self.pivmin();
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.diag.len() {
            q = if i == 0 {
                self.diag[0] - x
            } else {
                let e = self.offdiag[i - 1];
                self.diag[i] - x - e * e / q
            };
            if q.abs() < pivmin {
                q = if q < 0.0 { -pivmin } else { pivmin };
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.offdiag[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.offdiag[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    /// `lambda_j` (1-based, nondecreasing) to absolute tolerance `tol`.
    pub fn eigenvalue_by_index(&self, j: usize, tol: f64) -> Result<f64> {
        if j == 0 || j > self.dim() {
            return Err(Error::Index {
                index: j,
                len: self.dim(),
            });
        }
        let (lo, hi) = self.gershgorin();
        Ok(self.bisect(j, lo, hi, tol))
    }

    fn bisect(&self, j: usize, lo: f64, hi: f64, tol: f64) -> f64 {
        let pad = tol + 4.0 * f64::EPSILON * lo.abs().max(hi.abs());
        let mut lo = lo - pad;
        let mut hi = hi + pad;
        // Invariant: count(lo) < j <= count(hi).
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) >= j {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Eigenvalues for several local indices, evaluated in parallel.
    pub fn eigenvalues_by_index(&self, indices: &[usize], tol: f64) -> Result<Vec<f64>> {
        if let Some(&bad) = indices.iter().find(|&&j| j == 0 || j > self.dim()) {
            return Err(Error::Index {
                index: bad,
                len: self.dim(),
            });
        }
        let (lo, hi) = self.gershgorin();
        Ok(indices
            .par_iter()
            .map(|&j| self.bisect(j, lo, hi, tol))
            .collect())
    }

    /// All eigenvalues in `[lo, hi)`, sorted.
    pub fn eigenvalues_in(&self, lo: f64, hi: f64, tol: f64) -> Vec<f64> {
        let first = self.count_below(lo) + 1;
        let last = self.count_below(hi);
        let (glo, ghi) = self.gershgorin();
        (first..=last)
            .filter(|j| *j >= 1)
            .map(|j| self.bisect(j, glo, ghi, tol))
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            if i + 1 < n {
                m[(i, i + 1)] = self.offdiag[i];
                m[(i + 1, i)] = self.offdiag[i];
            }
        }
        m
    }
}

/// All eigenvalues of a dense symmetric matrix, ascending.
pub fn dense_symmetric_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Dense oracle for a tridiagonal window.
pub fn dense_eigenvalues(w: &TridiagonalWindow) -> Vec<f64> {
    dense_symmetric_eigenvalues(w.to_dense())
}

/// How eigenvalue labels were assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Labeling {
    /// `lambda_n` is the `n`-th smallest eigenvalue of the semi-infinite operator.
    NondecreasingCount,
    /// Labels fixed by the unique eigenvalue in the anchoring interval.
    WindowAnchored,
}

/// Labeled eigenvalues over `n_lo..=n_hi`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumSlice {
    pub n_lo: u64,
    pub n_hi: u64,
    pub lambda: Vec<f64>,
    pub labeling: Labeling,
    pub truncation_size: usize,
    pub est_truncation_error: f64,
}

impl SpectrumSlice {
    pub fn from_values(n_lo: u64, lambda: Vec<f64>, labeling: Labeling) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::domain("empty spectrum slice"));
        }
        Ok(SpectrumSlice {
            n_lo,
            n_hi: n_lo + lambda.len() as u64 - 1,
            lambda,
            labeling,
            truncation_size: 0,
            est_truncation_error: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    pub fn get(&self, n: u64) -> Option<f64> {
        if n < self.n_lo || n > self.n_hi {
            return None;
        }
        self.lambda.get((n - self.n_lo) as usize).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.lambda
            .iter()
            .enumerate()
            .map(move |(i, l)| (self.n_lo + i as u64, *l))
    }

    /// Restriction to `lo..=hi`.
    pub fn slice(&self, lo: u64, hi: u64) -> Result<SpectrumSlice> {
        if lo < self.n_lo || hi > self.n_hi || lo > hi {
            return Err(Error::domain(format!(
                "range {lo}..={hi} not inside {}..={}",
                self.n_lo, self.n_hi
            )));
        }
        let a = (lo - self.n_lo) as usize;
        let b = (hi - self.n_lo) as usize;
        Ok(SpectrumSlice {
            n_lo: lo,
            n_hi: hi,
            lambda: self.lambda[a..=b].to_vec(),
            ..self.clone()
        })
    }
}

/// Section-size policy for `spectrum_of_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TruncationPolicy {
    /// Start at `2 n_hi + 200` and double until the slice moves by less
    /// than [`TRUNCATION_TARGET`].
    #[default]
    Double,
    /// Use exactly this size; the error estimate compares against twice it.
    Fixed(usize),
}

impl std::str::FromStr for TruncationPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "double" {
            return Ok(TruncationPolicy::Double);
        }
        if let Some(m) = s.strip_prefix("fixed:") {
            let m: usize = m
                .parse()
                .map_err(|_| Error::domain(format!("bad truncation size in '{s}'")))?;
            return Ok(TruncationPolicy::Fixed(m));
        }
        Err(Error::domain(format!(
            "truncation policy must be 'double' or 'fixed:M', got '{s}'"
        )))
    }
}

fn section_values(spec: &ModelSpec, size: usize, n_lo: u64, n_hi: u64, tol: f64) -> Result<Vec<f64>> {
    let w = TridiagonalWindow::leading_section(spec, size)?;
    let idx: Vec<usize> = (n_lo as usize..=n_hi as usize).collect();
    w.eigenvalues_by_index(&idx, tol)
}

fn max_shift(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// `lambda_n(J)` for `n_lo..=n_hi` from leading finite sections.
pub fn spectrum_of_j(
    spec: &ModelSpec,
    n_lo: u64,
    n_hi: u64,
    policy: TruncationPolicy,
    tol: f64,
) -> Result<SpectrumSlice> {
    if n_lo == 0 || n_lo > n_hi {
        return Err(Error::domain(format!("need 1 <= n_lo <= n_hi, got {n_lo}..={n_hi}")));
    }
    let (size, values, err) = match policy {
        TruncationPolicy::Fixed(m) => {
            if (m as u64) < n_hi {
                return Err(Error::domain(format!("section size {m} < n_hi = {n_hi}")));
            }
            let a = section_values(spec, m, n_lo, n_hi, tol)?;
            let b = section_values(spec, 2 * m, n_lo, n_hi, tol)?;
            let err = max_shift(&a, &b);
            (m, a, err)
        }
        TruncationPolicy::Double => {
            let mut m = 2 * n_hi as usize + 200;
            let mut prev = section_values(spec, m, n_lo, n_hi, tol)?;
            let mut shift = f64::INFINITY;
            for _ in 0..MAX_DOUBLINGS {
                let next = section_values(spec, 2 * m, n_lo, n_hi, tol)?;
                shift = max_shift(&prev, &next);
                m *= 2;
                prev = next;
                if shift < TRUNCATION_TARGET {
                    break;
                }
            }
            if shift >= TRUNCATION_TARGET {
                return Err(Error::Truncation {
                    size: m,
                    last_shift: shift,
                    target: TRUNCATION_TARGET,
                });
            }
            (m, prev, shift)
        }
    };
    Ok(SpectrumSlice {
        n_lo,
        n_hi,
        lambda: values,
        labeling: Labeling::NondecreasingCount,
        truncation_size: size,
        est_truncation_error: err,
    })
}

/// Labels eigenvalues of a two-sided window operator by anchoring: the
/// label `anchor` goes to the unique eigenvalue in `[center - 1/2, center + 1/2)`,
/// neighbours are labeled by order. Returns labels `anchor + j_lo ..= anchor + j_hi`.
pub fn spectrum_of_window_operator(
    op: &TridiagonalWindow,
    anchor: u64,
    center: f64,
    j_lo: i64,
    j_hi: i64,
) -> Result<SpectrumSlice> {
    if j_lo > j_hi || anchor as i64 + j_lo < 1 {
        return Err(Error::domain(format!("bad label range {j_lo}..={j_hi} around {anchor}")));
    }
    let lo = center - 0.5;
    let hi = center + 0.5;
    let below = op.count_below(lo);
    let contents = op.eigenvalues_in(lo, hi, DEFAULT_TOL);
    if contents.len() != 1 {
        return Err(Error::Labeling {
            lo,
            hi,
            count: contents.len(),
            contents,
        });
    }
    let pos = below + 1;
    let first = pos as i64 + j_lo;
    let last = pos as i64 + j_hi;
    if first < 1 || last > op.dim() as i64 {
        return Err(Error::Window(format!(
            "labels {j_lo}..={j_hi} around local index {pos} exceed window dimension {}",
            op.dim()
        )));
    }
    let idx: Vec<usize> = (first as usize..=last as usize).collect();
    let lambda = op.eigenvalues_by_index(&idx, DEFAULT_TOL)?;
    Ok(SpectrumSlice {
        n_lo: (anchor as i64 + j_lo) as u64,
        n_hi: (anchor as i64 + j_hi) as u64,
        lambda,
        labeling: Labeling::WindowAnchored,
        truncation_size: op.dim(),
        est_truncation_error: f64::NAN,
    })
}
