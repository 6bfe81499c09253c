//! Closed-form large-`n` eigenvalue predictions and residual fits.
//!
//! Three-term formula: `lambda_n = n + a(n-1)^2 - a(n)^2 + alpha0 + r(n)` with
//!
//! ```text
//! r(n) = sum_m alpha_m A_m cos(phi_m) + sum_m alpha~_m A_m sin(phi_m),
//! A_m  = cos(4 a sin(m pi/N) - pi/4) / sqrt(2 pi a sin(m pi/N)),
//! phi_m = 2 pi m n / N + 2 a delta_a sin(2 pi m / N),   a = a(n), delta_a = a(n+1) - a(n).
//! ```

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigensolve::SpectrumSlice;
use crate::error::{Error, Result};
use crate::model::{Mode, ModelSpec};
use crate::oscillatory;
use crate::transform;

/// Which prediction formula to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    /// Three-term formula, `N = 2`, `a(k) = a1 sqrt(k)`.
    E0,
    /// Three-term formula for general `N` and power-law `a`.
    E2,
    /// Two-term formula.
    Y0,
    /// Two-term formula plus the diagonal correction `g_n(n)`.
    #[serde(rename = "GRWA")]
    Grwa,
}

impl std::str::FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "E0" => Ok(Source::E0),
            "E2" => Ok(Source::E2),
            "Y0" => Ok(Source::Y0),
            "GRWA" => Ok(Source::Grwa),
            _ => Err(Error::domain(format!("unknown source '{s}' (E0|E2|Y0|GRWA)"))),
        }
    }
}

/// Provider of the diagonal correction `g_n(n)` for [`Source::Grwa`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GnMethod {
    /// Diagonal of the conjugated window operator.
    Exp,
    /// Stationary-phase approximation.
    Oscillatory,
}

impl std::str::FromStr for GnMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp" => Ok(GnMethod::Exp),
            "oscillatory" => Ok(GnMethod::Oscillatory),
            _ => Err(Error::domain(format!("unknown g_n method '{s}' (exp|oscillatory)"))),
        }
    }
}

/// `g_n(n)` by the chosen method.
pub fn gn_at_anchor(spec: &ModelSpec, n: u64, method: GnMethod) -> Result<f64> {
    match method {
        GnMethod::Exp => {
            let aux = transform::build_auxiliary_default(spec, n)?;
            transform::gn_diagonal(&aux, n as i64)
        }
        GnMethod::Oscillatory => {
            if spec.period() == 2 {
                oscillatory::g_frak(spec, n, n as i64)
            } else {
                oscillatory::g_frak_general_n(spec, n)
            }
        }
    }
}

/// Oscillatory term `r(n)` for any period.
pub fn r_of_n(spec: &ModelSpec, n: u64) -> f64 {
    let pot = spec.potential();
    if pot.cos_coeffs().iter().chain(pot.sin_coeffs()).all(|c| *c == 0.0) {
        return 0.0;
    }
    let nn = spec.period();
    let a = spec.a(n as i64);
    let da = spec.delta_a(n as i64);
    let mut r = 0.0;
    let terms = pot
        .cos_coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| (i + 1, *c, true))
        .chain(pot.sin_coeffs().iter().enumerate().map(|(i, c)| (i + 1, *c, false)));
    for (m, coeff, is_cos) in terms {
        if coeff == 0.0 {
            continue;
        }
        let s = (m as f64 * PI / nn as f64).sin();
        let amp = (4.0 * a * s - PI / 4.0).cos() / (2.0 * PI * a * s).sqrt();
        let sin_omega = if 2 * m == nn {
            0.0
        } else {
            (2.0 * PI * m as f64 / nn as f64).sin()
        };
        let phase = 2.0 * PI * ((m as u64 * n) % nn as u64) as f64 / nn as f64
            + 2.0 * a * da * sin_omega;
        r += coeff * amp * if is_cos { phase.cos() } else { phase.sin() };
    }
    r
}

/// `r(n) = (-1)^n rho cos(4 a1 sqrt(n) - pi/4) / sqrt(2 pi a1) n^(-1/4)`.
pub fn r_of_n_h0(a1: f64, rho: f64, n: u64) -> f64 {
    if rho == 0.0 {
        return 0.0;
    }
    let nf = n as f64;
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    sign * rho * (4.0 * a1 * nf.sqrt() - PI / 4.0).cos() / (2.0 * PI * a1).sqrt() * nf.powf(-0.25)
}

/// Upper bound on `|r(n)|` read off the amplitudes.
pub fn r_amplitude_bound(spec: &ModelSpec, n: u64) -> f64 {
    let pot = spec.potential();
    let total: f64 = pot.cos_coeffs().iter().chain(pot.sin_coeffs()).map(|c| c.abs()).sum();
    total / (2.0 * PI * spec.a(n as i64) * (PI / spec.period() as f64).sin()).sqrt()
}

/// One row of a prediction table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PredictionRow {
    pub n: u64,
    pub leading: f64,
    /// `a(n-1)^2 - a(n)^2 + alpha0`.
    pub offset: f64,
    /// `r(n)` for three-term sources, `g_n(n)` for GRWA, 0 for the two-term source.
    pub oscillatory: f64,
    pub prediction: f64,
    pub remainder_exponent: f64,
    pub source: Source,
    pub gn_method: Option<GnMethod>,
}

fn two_term_offset(spec: &ModelSpec, n: u64) -> f64 {
    let drop = match spec.mode() {
        Mode::H0 => {
            let a1 = spec.offdiag().a1();
            -a1 * a1
        }
        Mode::H12 => spec.offdiag().square_drop(n as i64),
    };
    drop + spec.alpha0()
}

fn is_h0_compatible(spec: &ModelSpec) -> bool {
    spec.period() == 2 && spec.gamma() == 0.5 && spec.offdiag().a1prime() == 0.0
}

/// Assembles a single prediction.
pub fn predict(spec: &ModelSpec, n: u64, source: Source, gn: Option<GnMethod>) -> Result<PredictionRow> {
    if n == 0 {
        return Err(Error::domain("n must be >= 1"));
    }
    let offset = two_term_offset(spec, n);
    let (osc, method) = match source {
        Source::E0 => {
            if !is_h0_compatible(spec) {
                return Err(Error::domain("E0 needs N = 2, gamma = 1/2, a1prime = 0"));
            }
            (r_of_n_h0(spec.offdiag().a1(), spec.rho().unwrap(), n), None)
        }
        Source::E2 => (r_of_n(spec, n), None),
        Source::Y0 => (0.0, None),
        Source::Grwa => {
            let m = gn.ok_or_else(|| Error::Dependency("GRWA needs a g_n provider".into()))?;
            (gn_at_anchor(spec, n, m)?, Some(m))
        }
    };
    let leading = n as f64;
    let remainder_exponent = match source {
        Source::Y0 => -spec.gamma() / 2.0,
        _ => -spec.gamma(),
    };
    Ok(PredictionRow {
        n,
        leading,
        offset,
        oscillatory: osc,
        prediction: leading + offset + osc,
        remainder_exponent,
        source,
        gn_method: method,
    })
}

/// Predictions for several `n`, evaluated in parallel.
pub fn predict_many(spec: &ModelSpec, ns: &[u64], source: Source, gn: Option<GnMethod>) -> Result<Vec<PredictionRow>> {
    ns.par_iter().map(|&n| predict(spec, n, source, gn)).collect()
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Slope of `log |y|` against `log n`.
pub fn log_log_slope(ns: &[f64], ys: &[f64]) -> f64 {
    let xs: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let ls: Vec<f64> = ys.iter().map(|y| y.abs().ln()).collect();
    linear_fit(&xs, &ls).0
}

pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

/// Envelope fit: the range is split into `blocks` geometric blocks, each
/// contributing `(log geometric-centre, log max |y|)`. Returns `(slope, intercept)`.
pub fn envelope_fit(ns: &[f64], ys: &[f64], blocks: usize) -> (f64, f64) {
    let lo = ns.iter().copied().fold(f64::INFINITY, f64::min).ln();
    let hi = ns.iter().copied().fold(f64::NEG_INFINITY, f64::max).ln();
    let blocks = blocks.max(1);
    let width = (hi - lo) / blocks as f64;
    let mut xs = Vec::new();
    let mut ls = Vec::new();
    for b in 0..blocks {
        let (a, c) = (lo + b as f64 * width, lo + (b + 1) as f64 * width);
        let last = b + 1 == blocks;
        let members: Vec<(f64, f64)> = ns
            .iter()
            .zip(ys)
            .filter(|(n, _)| {
                let l = n.ln();
                l >= a && (l < c || (last && l <= c + 1e-12))
            })
            .map(|(n, y)| (n.ln(), y.abs()))
            .collect();
        if members.is_empty() {
            continue;
        }
        let lmin = members.iter().map(|m| m.0).fold(f64::INFINITY, f64::min);
        let lmax = members.iter().map(|m| m.0).fold(f64::NEG_INFINITY, f64::max);
        let ymax = members.iter().map(|m| m.1).fold(0.0, f64::max);
        xs.push(0.5 * (lmin + lmax));
        ls.push(ymax.ln());
    }
    linear_fit(&xs, &ls)
}

/// Maximum of `|y|` over a sliding index window of half-width `half(n)`,
/// evaluated at every sample.
pub fn local_envelope(ns: &[u64], ys: &[f64], half: impl Fn(u64) -> u64) -> Vec<f64> {
    ns.iter()
        .map(|&n| {
            let h = half(n);
            ns.iter()
                .zip(ys)
                .filter(|(m, _)| m.abs_diff(n) <= h)
                .map(|(_, y)| y.abs())
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Residuals below this are treated as exact agreement.
pub const EXACT_TOL: f64 = 1e-8;

const FIT_BLOCKS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitReport {
    ExactToTolerance {
        max_abs_residual: f64,
        count: usize,
    },
    Slope {
        /// Envelope slope (block maxima).
        slope: f64,
        intercept: f64,
        /// Slope of every residual point.
        pointwise_slope: f64,
        /// Correlation of `lambda_n - two-term` with `r(n)`.
        correlation: f64,
        count: usize,
    },
}

impl FitReport {
    pub fn slope(&self) -> Option<f64> {
        match self {
            FitReport::Slope { slope, .. } => Some(*slope),
            FitReport::ExactToTolerance { .. } => None,
        }
    }
}

/// Residual series `lambda_n - prediction` over the indices present in both.
pub fn residuals(lambdas: &SpectrumSlice, preds: &[PredictionRow]) -> Vec<(u64, f64, PredictionRow)> {
    preds
        .iter()
        .filter_map(|p| lambdas.get(p.n).map(|l| (p.n, l - p.prediction, *p)))
        .collect()
}

/// Log-log slope fit of `|lambda_n - prediction|`.
pub fn residual_fit(spec: &ModelSpec, lambdas: &SpectrumSlice, preds: &[PredictionRow]) -> Result<FitReport> {
    let res = residuals(lambdas, preds);
    if res.len() < 8 {
        return Err(Error::domain(format!("need >= 8 matched indices, got {}", res.len())));
    }
    let nmin = res.iter().map(|r| r.0).min().unwrap();
    let nmax = res.iter().map(|r| r.0).max().unwrap();
    if (nmax as f64) < 4.0 * nmin as f64 {
        return Err(Error::domain(format!("indices {nmin}..{nmax} span less than a factor 4")));
    }
    let max_abs = res.iter().map(|r| r.1.abs()).fold(0.0, f64::max);
    if max_abs <= EXACT_TOL {
        return Ok(FitReport::ExactToTolerance {
            max_abs_residual: max_abs,
            count: res.len(),
        });
    }
    let ns: Vec<f64> = res.iter().map(|r| r.0 as f64).collect();
    let ys: Vec<f64> = res.iter().map(|r| r.1).collect();
    let blocks = FIT_BLOCKS.min(res.len());
    let (slope, intercept) = envelope_fit(&ns, &ys, blocks);
    let nonzero: Vec<(f64, f64)> = ns.iter().zip(&ys).filter(|(_, y)| **y != 0.0).map(|(n, y)| (*n, *y)).collect();
    let (pn, py): (Vec<f64>, Vec<f64>) = nonzero.into_iter().unzip();
    let pointwise_slope = log_log_slope(&pn, &py);
    let two_term: Vec<f64> = res
        .iter()
        .map(|(n, _, p)| lambdas.get(*n).unwrap() - (p.leading + p.offset))
        .collect();
    let rs: Vec<f64> = res.iter().map(|(n, _, _)| r_of_n(spec, *n)).collect();
    Ok(FitReport::Slope {
        slope,
        intercept,
        pointwise_slope,
        correlation: correlation(&two_term, &rs),
        count: res.len(),
    })
}
