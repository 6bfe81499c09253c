//! Cut-off regularized sequences and the auxiliary window operators
//!
//! ```text
//! v_n(k) = v(k) theta_{n,n}(k)^2,   a_n(k) = (a(n) + (k-n) delta a(n)) theta_{2n,n}(k),
//! J_n = Lambda + v_n + a_n S^-1 + S a_n,    Q = exp(K),  K(k,k+1) = -a_n(k) = -K(k+1,k),
//! V~_n = Q v_n Q^T,  g_n(k) = V~_n(k,k),  l_n(k) = k + a_n(k-1)^2 - a_n(k)^2,
//! L_n = l_n + V~_n.
//! ```
//!
//! The model's mean `alpha0` is removed before construction and recorded.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::banded::{expm, BandedMatrix};
use crate::eigensolve::{dense_symmetric_eigenvalues, TridiagonalWindow};
use crate::error::{Error, Result};
use crate::model::ModelSpec;

/// Smallest anchor index accepted by [`build_auxiliary`].
pub const DEFAULT_N0: u64 = 8;

const PLATEAU: f64 = 1.0 / 6.0;
const SUPPORT: f64 = 1.0 / 5.0;

/// Fixed smooth cut-off `theta0`: 1 on `|t| <= 1/6`, 0 on `|t| >= 1/5`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CutoffProfile;

fn glue(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

impl CutoffProfile {
    pub fn theta0(&self, t: f64) -> f64 {
        let t = t.abs();
        if t <= PLATEAU {
            return 1.0;
        }
        if t >= SUPPORT {
            return 0.0;
        }
        let x = (t - PLATEAU) / (SUPPORT - PLATEAU);
        let f = glue(x);
        1.0 - f / (f + glue(1.0 - x))
    }

    /// `theta_{tau,n}(s) = theta0((s - n) / tau)`.
    pub fn theta(&self, tau: f64, n: f64, s: f64) -> f64 {
        self.theta0((s - n) / tau)
    }
}

/// `ceil(max(15 n^gamma, n/2 + 8))`.
pub fn default_half_width(n: u64, gamma: f64) -> usize {
    let nf = n as f64;
    (15.0 * nf.powf(gamma)).max(nf / 2.0 + 8.0).ceil() as usize
}

/// Smallest half-width that contains the support of `a_n`.
pub fn min_half_width(n: u64) -> usize {
    (2.0 * n as f64 / 5.0).ceil() as usize + 2
}

/// The auxiliary objects on the window `[n - W, n + W]`.
#[derive(Debug, Clone)]
pub struct AuxiliaryOperators {
    n: u64,
    half_width: usize,
    alpha0: f64,
    vn: Vec<f64>,
    an: Vec<f64>,
    an_before: f64,
    q: BandedMatrix,
    vtilde: BandedMatrix,
    ln: Vec<f64>,
    gn: Vec<f64>,
}

pub fn build_auxiliary(spec: &ModelSpec, n: u64, half_width: usize) -> Result<AuxiliaryOperators> {
    build_auxiliary_with(spec, n, half_width, &CutoffProfile, DEFAULT_N0)
}

pub fn build_auxiliary_with(
    spec: &ModelSpec,
    n: u64,
    half_width: usize,
    cutoff: &CutoffProfile,
    n0: u64,
) -> Result<AuxiliaryOperators> {
    if n < n0 {
        return Err(Error::domain(format!("anchor n = {n} below n0 = {n0}")));
    }
    if half_width < min_half_width(n) {
        return Err(Error::domain(format!(
            "half-width {half_width} does not contain the support of a_n (need >= {})",
            min_half_width(n)
        )));
    }
    let centered = spec.centered();
    let nf = n as f64;
    let ni = n as i64;
    let a_n = centered.a(ni);
    let da = centered.delta_a(ni);
    let a_reg = |k: i64| (a_n + (k - ni) as f64 * da) * cutoff.theta(2.0 * nf, nf, k as f64);
    let first = ni - half_width as i64;
    let ks: Vec<i64> = (first..=ni + half_width as i64).collect();
    let vn: Vec<f64> = ks
        .iter()
        .map(|&k| {
            let th = cutoff.theta(nf, nf, k as f64);
            centered.potential().value(k) * th * th
        })
        .collect();
    let an: Vec<f64> = ks.iter().map(|&k| a_reg(k)).collect();
    let an_before = a_reg(first - 1);

    let m = ks.len();
    let mut gen = BandedMatrix::zeros(m, 1);
    for i in 0..m - 1 {
        gen.set(i, i + 1, -an[i]);
        gen.set(i + 1, i, an[i]);
    }
    let q = expm(&gen)?;
    let vtilde = q
        .matmul(&BandedMatrix::from_diagonal(&vn))?
        .matmul(&q.transpose())?;
    let ln: Vec<f64> = ks
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let prev = if i == 0 { an_before } else { an[i - 1] };
            k as f64 + (prev - an[i]) * (prev + an[i])
        })
        .collect();
    let gn: Vec<f64> = (0..m).map(|i| vtilde.get(i, i)).collect();
    Ok(AuxiliaryOperators {
        n,
        half_width,
        alpha0: spec.alpha0(),
        vn,
        an,
        an_before,
        q,
        vtilde,
        ln,
        gn,
    })
}

/// Builds with [`default_half_width`].
pub fn build_auxiliary_default(spec: &ModelSpec, n: u64) -> Result<AuxiliaryOperators> {
    build_auxiliary(spec, n, default_half_width(n, spec.gamma()))
}

impl AuxiliaryOperators {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    /// Mean of the potential, removed before construction.
    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    /// Global index of the first window row.
    pub fn first_index(&self) -> i64 {
        self.n as i64 - self.half_width as i64
    }

    pub fn dim(&self) -> usize {
        self.vn.len()
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> {
        self.first_index()..self.first_index() + self.dim() as i64
    }

    fn local(&self, k: i64) -> Result<usize> {
        let i = k - self.first_index();
        if i < 0 || i >= self.dim() as i64 {
            return Err(Error::Window(format!("index {k} outside the window")));
        }
        Ok(i as usize)
    }

    pub fn vn(&self) -> &[f64] {
        &self.vn
    }

    pub fn an(&self) -> &[f64] {
        &self.an
    }

    pub fn ln(&self) -> &[f64] {
        &self.ln
    }

    pub fn gn(&self) -> &[f64] {
        &self.gn
    }

    pub fn ln_at(&self, k: i64) -> Result<f64> {
        Ok(self.ln[self.local(k)?])
    }

    /// `l~_n(k) = l_n(k) + g_n(k)` over the window.
    pub fn ltilde(&self) -> Vec<f64> {
        self.ln.iter().zip(&self.gn).map(|(l, g)| l + g).collect()
    }

    /// `exp(i B_n)` as a real orthogonal banded matrix.
    pub fn conjugator(&self) -> &BandedMatrix {
        &self.q
    }

    pub fn vtilde(&self) -> &BandedMatrix {
        &self.vtilde
    }

    /// `a_n(k)` for `k = first - 1` (the coupling entering `l_n` at the first row).
    pub fn an_before(&self) -> f64 {
        self.an_before
    }

    /// `J_n` on the window.
    pub fn jn_window(&self) -> Result<TridiagonalWindow> {
        let diag = self
            .indices()
            .zip(&self.vn)
            .map(|(k, v)| k as f64 + v)
            .collect();
        let off = self.an[..self.dim() - 1].to_vec();
        TridiagonalWindow::new(self.first_index(), diag, off)
    }

    /// `L_n = l_n + V~_n` as a dense matrix.
    pub fn ln_dense(&self) -> DMatrix<f64> {
        let mut m = self.vtilde.to_dense();
        for (i, l) in self.ln.iter().enumerate() {
            m[(i, i)] += l;
        }
        m
    }

    pub fn ln_eigenvalues(&self) -> Vec<f64> {
        dense_symmetric_eigenvalues(self.ln_dense())
    }

    /// Spectral norm of `Q J_n Q^T - L_n` restricted to rows and columns
    /// with `|k - n| <= radius`.
    pub fn conjugation_residual(&self, radius: usize) -> Result<f64> {
        let jn = self.jn_window()?;
        let j = BandedMatrix::from_tridiagonal(jn.diag(), jn.offdiag());
        let conj = self.q.matmul(&j)?.matmul(&self.q.transpose())?;
        let c = self.half_width as isize;
        let r = radius.min(self.half_width) as isize;
        let lo = (c - r) as usize;
        let size = (2 * r + 1) as usize;
        let block = DMatrix::from_fn(size, size, |a, b| {
            let (i, j) = (lo + a, lo + b);
            let mut x = conj.get(i, j) - self.vtilde.get(i, j);
            if i == j {
                x -= self.ln[i];
            }
            x
        });
        Ok(dense_symmetric_eigenvalues(block)
            .into_iter()
            .fold(0.0, |m, x| m.max(x.abs())))
    }

    /// `||Q^T Q - I||_max`.
    pub fn orthogonality_defect(&self) -> Result<f64> {
        let p = self.q.transpose().matmul(&self.q)?;
        Ok(p.add_scaled(-1.0, &BandedMatrix::identity(self.dim())).max_abs())
    }
}

/// `g_n(k) = V~_n(k, k)`; `k` must be at distance `>= 5` from the window edges.
pub fn gn_diagonal(aux: &AuxiliaryOperators, k: i64) -> Result<f64> {
    let i = aux.local(k)?;
    if i < 5 || i + 5 >= aux.dim() {
        return Err(Error::Window(format!(
            "index {k} is within 5 of the window edge"
        )));
    }
    Ok(aux.gn[i])
}

/// Test function for [`trace_functional`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TestFunction {
    Zero,
    Gaussian { sigma: f64 },
}

impl TestFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TestFunction::Zero => 0.0,
            TestFunction::Gaussian { sigma } => (-0.5 * (x / sigma).powi(2)).exp(),
        }
    }
}

impl std::str::FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "zero" {
            return Ok(TestFunction::Zero);
        }
        let sigma = s
            .strip_prefix("gaussian:")
            .and_then(|x| x.parse::<f64>().ok())
            .ok_or_else(|| Error::domain(format!("test function must be gaussian:SIGMA, got '{s}'")))?;
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::domain("gaussian width must be > 0"));
        }
        Ok(TestFunction::Gaussian { sigma })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LeakageStatus {
    Ok,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceReport {
    pub value: f64,
    /// Size of the test function at the spectral edges of the window.
    pub leakage: f64,
    pub status: LeakageStatus,
}

/// Tolerated leakage before the report is flagged.
pub const LEAKAGE_TOL: f64 = 1e-12;

/// `sum_k chi(lambda_k(L_n) - l_n(n)) - chi(l~_n(k) - l_n(n))` over the window.
pub fn trace_functional(aux: &AuxiliaryOperators, chi: &TestFunction, ln_spectrum: &[f64]) -> Result<TraceReport> {
    if ln_spectrum.len() != aux.dim() {
        return Err(Error::domain("spectrum length does not match the window"));
    }
    if *chi == TestFunction::Zero {
        return Ok(TraceReport {
            value: 0.0,
            leakage: 0.0,
            status: LeakageStatus::Ok,
        });
    }
    let c = aux.ln_at(aux.n as i64)?;
    let lt = aux.ltilde();
    let mut a: Vec<f64> = ln_spectrum.iter().map(|l| chi.eval(l - c)).collect();
    let mut b: Vec<f64> = lt.iter().map(|l| chi.eval(l - c)).collect();
    // Sorted summation keeps cancellation of the two sums symmetric.
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let value: f64 = a.iter().zip(&b).map(|(x, y)| x - y).sum();
    let edge = |xs: &[f64]| {
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        chi.eval(lo - c).max(chi.eval(hi - c))
    };
    let leakage = edge(ln_spectrum).max(edge(&lt));
    Ok(TraceReport {
        value,
        leakage,
        status: if leakage > LEAKAGE_TOL {
            LeakageStatus::Warning
        } else {
            LeakageStatus::Ok
        },
    })
}

/// Writes `values` as little-endian f64 to `path` and `metadata` to `path.json`.
pub fn write_fixture(path: &Path, values: &[f64], metadata: &serde_json::Value) -> Result<()> {
    let mut f = fs::File::create(path)?;
    for v in values {
        f.write_all(&v.to_le_bytes())?;
    }
    fs::write(sidecar(path), serde_json::to_string_pretty(metadata)?)?;
    Ok(())
}

pub fn read_fixture(path: &Path) -> Result<(Vec<f64>, serde_json::Value)> {
    let bytes = fs::read(path)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Io(format!("{}: length not a multiple of 8", path.display())));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let meta = serde_json::from_str(&fs::read_to_string(sidecar(path))?)?;
    Ok((values, meta))
}

fn sidecar(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::banded::expm_action;
    use crate::model::{OffDiagonalProfile, PeriodicPotential};

    #[test]
    fn cutoff_plateau_and_support() {
        let c = CutoffProfile;
        for t in [0.0, 0.1, 1.0 / 6.0, -1.0 / 6.0] {
            assert_eq!(c.theta0(t), 1.0);
        }
        for t in [0.2, -0.2, 0.3, 5.0] {
            assert_eq!(c.theta0(t), 0.0);
        }
        let mut prev = 1.0;
        for i in 0..=200 {
            let t = 1.0 / 6.0 + i as f64 * (1.0 / 30.0) / 200.0;
            let v = c.theta0(t);
            assert!((0.0..=1.0).contains(&v));
            assert!(v <= prev);
            prev = v;
        }
        assert!((c.theta0(11.0 / 60.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_potential_gives_zero_vtilde() {
        let spec = ModelSpec::h0(1.0, 0.0).unwrap();
        let aux = build_auxiliary(&spec, 50, 40).unwrap();
        assert_eq!(aux.vtilde().max_abs(), 0.0);
        assert!(aux.gn().iter().all(|g| *g == 0.0));
        assert_eq!(aux.ltilde(), aux.ln().to_vec());
    }

    #[test]
    fn zero_coupling_gives_identity_conjugation() {
        let spec = ModelSpec::h0(0.0, 0.3).unwrap();
        let aux = build_auxiliary(&spec, 50, 40).unwrap();
        for (i, k) in aux.indices().enumerate() {
            assert_eq!(aux.gn()[i], aux.vn()[i]);
            if (k - 50).abs() <= 8 {
                assert_eq!(gn_diagonal(&aux, k).unwrap(), spec.potential().value(k));
            }
        }
    }

    #[test]
    fn window_checks() {
        let spec = ModelSpec::h0(1.0, 0.25).unwrap();
        assert!(matches!(build_auxiliary(&spec, 100, 41), Err(Error::Domain(_))));
        assert!(matches!(build_auxiliary(&spec, 4, 40), Err(Error::Domain(_))));
        let aux = build_auxiliary(&spec, 100, 42).unwrap();
        assert!(matches!(gn_diagonal(&aux, 100 - 40), Err(Error::Window(_))));
        assert!(matches!(gn_diagonal(&aux, 100 + 42), Err(Error::Window(_))));
        assert!(matches!(gn_diagonal(&aux, 100 + 50), Err(Error::Window(_))));
        assert!(gn_diagonal(&aux, 100 + 36).is_ok());
    }

    #[test]
    fn regularized_sequences_follow_definitions() {
        let spec = ModelSpec::h0(1.0, 0.25).unwrap();
        let aux = build_auxiliary(&spec, 200, 180).unwrap();
        let c = CutoffProfile;
        for (i, k) in aux.indices().enumerate() {
            let th1 = c.theta(200.0, 200.0, k as f64);
            let th2 = c.theta(400.0, 200.0, k as f64);
            assert_eq!(aux.vn()[i], spec.potential().value(k) * th1 * th1);
            let lin = spec.a(200) + (k - 200) as f64 * spec.delta_a(200);
            assert!((aux.an()[i] - lin * th2).abs() < 1e-12);
            if (k - 200).abs() >= 80 {
                assert_eq!(aux.an()[i], 0.0);
            }
        }
        assert!(aux.orthogonality_defect().unwrap() < 1e-10);
        let v = aux.vtilde().to_dense();
        assert!((&v - v.transpose()).abs().max() < 1e-12);
        let norm = dense_symmetric_eigenvalues(v).into_iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(norm <= 0.25 + 1e-9);
    }

    #[test]
    fn gn_matches_independent_exponential() {
        let spec = ModelSpec::h0(1.0, 0.25).unwrap();
        let aux = build_auxiliary(&spec, 200, 180).unwrap();
        let m = aux.dim();
        // Row k of Q is exp(-K) e_k.
        let mut neg = BandedMatrix::zeros(m, 1);
        for i in 0..m - 1 {
            neg.set(i, i + 1, aux.an()[i]);
            neg.set(i + 1, i, -aux.an()[i]);
        }
        for k in [190i64, 200, 215] {
            let i = (k - aux.first_index()) as usize;
            let mut e = vec![0.0; m];
            e[i] = 1.0;
            let (row, diff) = expm_action(&neg, &e);
            assert!(diff < 1e-11);
            let g: f64 = row.iter().zip(aux.vn()).map(|(q, v)| q * q * v).sum();
            assert!((g - gn_diagonal(&aux, k).unwrap()).abs() < 1e-12, "{k}");
        }
    }

    #[test]
    fn alpha0_is_removed_and_recorded() {
        let base = PeriodicPotential::fourier_decompose(&[0.2, -0.1, -0.1]).unwrap();
        let shifted = PeriodicPotential::fourier_decompose(&[1.2, 0.9, 0.9]).unwrap();
        let prof = OffDiagonalProfile::new(1.0, 0.5, 0.0).unwrap();
        let a = build_auxiliary(&ModelSpec::h12(prof, base), 64, 40).unwrap();
        let b = build_auxiliary(&ModelSpec::h12(prof, shifted), 64, 40).unwrap();
        assert!((b.alpha0() - 1.0).abs() < 1e-15);
        for (x, y) in a.gn().iter().zip(b.gn()) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn trace_functional_trivial_cases() {
        let spec = ModelSpec::h0(1.0, 0.0).unwrap();
        let aux = build_auxiliary(&spec, 60, 40).unwrap();
        let ev = aux.ln_eigenvalues();
        let chi = TestFunction::Gaussian { sigma: 1.0 };
        assert!(trace_functional(&aux, &chi, &ev).unwrap().value.abs() < 1e-12);
        let spec = ModelSpec::h0(1.0, 0.25).unwrap();
        let aux = build_auxiliary(&spec, 60, 40).unwrap();
        let ev = aux.ln_eigenvalues();
        let r = trace_functional(&aux, &TestFunction::Zero, &ev).unwrap();
        assert_eq!(r.value, 0.0);
        let r = trace_functional(&aux, &chi, &ev).unwrap();
        assert_eq!(r.status, LeakageStatus::Ok);
    }

    #[test]
    fn test_function_parsing() {
        assert_eq!("gaussian:2".parse::<TestFunction>().unwrap(), TestFunction::Gaussian { sigma: 2.0 });
        assert!("gaussian:-1".parse::<TestFunction>().is_err());
        assert!("box:1".parse::<TestFunction>().is_err());
    }

    #[test]
    fn fixture_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.bin");
        let vals = vec![1.0, -2.5, f64::MIN_POSITIVE, 1e300];
        let meta = serde_json::json!({"n": 200, "what": "diag"});
        write_fixture(&p, &vals, &meta).unwrap();
        let (v, m) = read_fixture(&p).unwrap();
        assert_eq!(v, vals);
        assert_eq!(m, meta);
    }
}
