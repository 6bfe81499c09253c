//! Recovery of `(omega, E, g)` from the two branch spectra.
//!
//! Model fitted jointly to both branches, in units of `hbar`:
//!
//! ```text
//! lambda_n / hbar = p1 n + p2 + p3 s_b T_n(a1),
//! T_n(a1) = (-1)^n n^{-1/4} cos(4 a1 sqrt(n) - pi/4) / sqrt(2 pi a1),
//! ```
//!
//! so `omega = p1`, `a1^2 = -p2/p1 - 1/2`, `rho = p3/p1`. The filter
//! frequency `a1` is found by a grid scan followed by golden-section
//! refinement of the residual norm. This estimator is an independent
//! design built from the three-term formula alone.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::eigensolve::SpectrumSlice;
use crate::error::{Error, Result};
use crate::model::{Branch, RabiParams};

/// Relative change in median spacing between halves that counts as a trend.
pub const TREND_TOL: f64 = 0.05;

/// Amplitudes below this many standard errors are reported as zero.
pub const NOISE_FLOOR_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recovery {
    pub params: RabiParams,
    pub a1: f64,
    pub rho: f64,
    /// One standard error of `rho`.
    pub rho_se: f64,
    /// True when `rho` fell under the noise floor and was set to 0.
    pub rho_below_floor: bool,
    /// Median-of-differences spacing estimate (before the joint fit).
    pub omega_median: f64,
    /// Largest relative spacing drift between halves of a branch.
    pub trend: f64,
    /// RMS of the joint fit residual, physical units.
    pub rms: f64,
}

/// The oscillatory template `T_n(a1)`.
pub fn template(a1: f64, n: u64) -> f64 {
    let nf = n as f64;
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    sign * nf.powf(-0.25) * (4.0 * a1 * nf.sqrt() - PI / 4.0).cos() / (2.0 * PI * a1).sqrt()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Median of `(lambda_{n+2} - lambda_n)/2`; second differences cancel the
/// alternating sign of the oscillation.
fn spacing(points: &[(u64, f64)]) -> Vec<f64> {
    points
        .windows(3)
        .filter(|w| w[2].0 == w[0].0 + 2)
        .map(|w| 0.5 * (w[2].1 - w[0].1))
        .collect()
}

struct Sample {
    n: u64,
    sign: f64,
    y: f64,
}

struct Fit {
    coef: [f64; 3],
    rss: f64,
    p3_se: f64,
}

fn solve(samples: &[Sample], a1: f64) -> Result<Fit> {
    let m = samples.len();
    let x = DMatrix::from_fn(m, 3, |i, j| match j {
        0 => samples[i].n as f64,
        1 => 1.0,
        _ => samples[i].sign * template(a1, samples[i].n),
    });
    let y = DVector::from_iterator(m, samples.iter().map(|s| s.y));
    let svd = x.clone().svd(true, true);
    let c = svd
        .solve(&y, 1e-14)
        .map_err(|e| Error::Accuracy(format!("least squares failed: {e}")))?;
    let r = &y - &x * &c;
    let rss = r.norm_squared();
    // Standard error of the amplitude from (X^T X)^{-1}.
    let xtx = x.transpose() * &x;
    let dof = (m as f64 - 3.0).max(1.0);
    let p3_se = xtx
        .try_inverse()
        .map(|inv| (inv[(2, 2)].max(0.0) * rss / dof).sqrt())
        .unwrap_or(f64::INFINITY);
    Ok(Fit { coef: [c[0], c[1], c[2]], rss, p3_se })
}

fn golden(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn check_slice(s: &SpectrumSlice, name: &str) -> Result<()> {
    if s.len() < 16 {
        return Err(Error::domain(format!("{name} spectrum has fewer than 16 points")));
    }
    if s.n_lo == 0 || (s.n_hi as f64) < 4.0 * s.n_lo as f64 {
        return Err(Error::domain(format!(
            "{name} spectrum must span n_max/n_min >= 4 with n_min >= 1"
        )));
    }
    Ok(())
}

/// Recovers the physical parameters from branch spectra `plus` and `minus`
/// (physical units).
pub fn recover_parameters(plus: &SpectrumSlice, minus: &SpectrumSlice, hbar: f64) -> Result<Recovery> {
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(Error::domain("hbar must be positive"));
    }
    check_slice(plus, "plus")?;
    check_slice(minus, "minus")?;

    let mut trend = 0.0f64;
    let mut all_spacings = Vec::new();
    let mut samples = Vec::new();
    for (slice, branch) in [(plus, Branch::Plus), (minus, Branch::Minus)] {
        let pts: Vec<(u64, f64)> = slice.iter().map(|(n, l)| (n, l / hbar)).collect();
        let sp = spacing(&pts);
        if sp.len() < 8 {
            return Err(Error::domain("spectrum too sparse to estimate spacing"));
        }
        let (lo, hi) = sp.split_at(sp.len() / 2);
        let (ml, mh) = (median(lo.to_vec()), median(hi.to_vec()));
        trend = trend.max((ml - mh).abs() / mh.abs().max(f64::MIN_POSITIVE));
        all_spacings.extend(sp);
        samples.extend(pts.into_iter().map(|(n, y)| Sample { n, sign: branch.sign(), y }));
    }
    if trend > TREND_TOL {
        return Err(Error::ModelMismatch(format!(
            "level spacing drifts by {trend:.3} between halves (limit {TREND_TOL})"
        )));
    }
    let omega_median = median(all_spacings);
    if !(omega_median > 0.0) {
        return Err(Error::ModelMismatch("non-positive level spacing".into()));
    }

    // Initial a1 from the offset alone.
    let n_max = samples.iter().map(|s| s.n).max().unwrap() as f64;
    let base = {
        let m = samples.len();
        let x = DMatrix::from_fn(m, 2, |i, j| if j == 0 { samples[i].n as f64 } else { 1.0 });
        let y = DVector::from_iterator(m, samples.iter().map(|s| s.y));
        x.svd(true, true)
            .solve(&y, 1e-14)
            .map_err(|e| Error::Accuracy(format!("least squares failed: {e}")))?
    };
    let a1_sq0 = -base[1] / base[0] - 0.5;
    if !(a1_sq0 > 0.0) {
        return Err(Error::ModelMismatch(format!(
            "offset implies a1^2 = {a1_sq0:.3e} <= 0"
        )));
    }
    let a10 = a1_sq0.sqrt();

    // Grid fine enough to resolve the phase 4 a1 sqrt(n_max).
    let half = (0.2 * a10).max(0.05);
    let step = 0.25 * PI / (4.0 * n_max.sqrt());
    let count = (2.0 * half / step).ceil() as usize + 1;
    let lo = (a10 - half).max(1e-3);
    let grid: Vec<f64> = (0..count).map(|i| lo + i as f64 * step).collect();
    let scores: Vec<f64> = grid
        .par_iter()
        .map(|&a| solve(&samples, a).map(|f| f.rss).unwrap_or(f64::INFINITY))
        .collect();
    let best = scores
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    let a_lo = grid[best.saturating_sub(1)];
    let a_hi = grid[(best + 1).min(grid.len() - 1)];
    let a_filter = golden(
        |a| solve(&samples, a).map(|f| f.rss).unwrap_or(f64::INFINITY),
        a_lo,
        a_hi,
        1e-10,
    );

    let fit = solve(&samples, a_filter)?;
    let [p1, p2, p3] = fit.coef;
    let a1_sq = -p2 / p1 - 0.5;
    if !(a1_sq > 0.0) {
        return Err(Error::ModelMismatch(format!("offset implies a1^2 = {a1_sq:.3e} <= 0")));
    }
    let a1 = a1_sq.sqrt();
    let mut rho = p3 / p1;
    let rho_se = fit.p3_se / p1;
    let rho_below_floor = p3.abs() < NOISE_FLOOR_SIGMAS * fit.p3_se;
    if rho_below_floor {
        rho = 0.0;
    }
    // The sign of rho is not identifiable from E >= 0 conventions; report |rho|.
    let rho = rho.abs();
    let omega = p1;
    let rms = hbar * (fit.rss / samples.len() as f64).sqrt();
    let params = RabiParams {
        omega,
        energy: 2.0 * hbar * omega * rho,
        coupling: a1 * omega,
        hbar,
    };
    Ok(Recovery {
        params,
        a1,
        rho,
        rho_se: rho_se.abs(),
        rho_below_floor,
        omega_median,
        trend,
        rms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::r_of_n_h0;
    use crate::eigensolve::Labeling;

    fn synth(omega: f64, e: f64, g: f64, hbar: f64, lo: u64, hi: u64) -> (SpectrumSlice, SpectrumSlice) {
        let a1 = g / omega;
        let rho = e / (2.0 * hbar * omega);
        let make = |s: f64| {
            let v: Vec<f64> = (lo..=hi)
                .map(|n| {
                    let nf = n as f64;
                    -hbar * omega / 2.0 + hbar * omega * (nf - a1 * a1 + r_of_n_h0(a1, s * rho, n))
                })
                .collect();
            SpectrumSlice::from_values(lo, v, Labeling::NondecreasingCount).unwrap()
        };
        (make(1.0), make(-1.0))
    }

    #[test]
    fn exact_when_rho_vanishes() {
        let (p, m) = synth(1.7, 0.0, 2.1, 1.0, 50, 400);
        let r = recover_parameters(&p, &m, 1.0).unwrap();
        assert!((r.params.omega - 1.7).abs() < 1e-10);
        assert!((r.params.coupling - 2.1).abs() < 1e-9);
        assert!(r.params.energy.abs() < 1e-9);
    }

    #[test]
    fn closed_loop_formula_spectrum() {
        let (p, m) = synth(1.0, 0.5, 1.0, 1.0, 100, 4000);
        let r = recover_parameters(&p, &m, 1.0).unwrap();
        assert!((r.params.omega - 1.0).abs() < 1e-2);
        assert!((r.params.coupling - 1.0).abs() < 1e-2);
        assert!((r.params.energy - 0.5).abs() / 0.5 < 1e-2, "{r:?}");
    }

    #[test]
    fn hbar_scaling() {
        let (p, m) = synth(1.3, 0.4, 0.9, 1.0, 100, 1200);
        let r1 = recover_parameters(&p, &m, 1.0).unwrap();
        let c = 2.5;
        let scale = |s: &SpectrumSlice| {
            SpectrumSlice::from_values(s.n_lo, s.lambda.iter().map(|x| c * x).collect(), Labeling::NondecreasingCount).unwrap()
        };
        let r2 = recover_parameters(&scale(&p), &scale(&m), c).unwrap();
        assert!((r1.params.omega - r2.params.omega).abs() < 1e-9);
        assert!((r1.params.coupling - r2.params.coupling).abs() < 1e-9);
        assert!((c * r1.params.energy - r2.params.energy).abs() < 1e-8);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(16))]
        #[test]
        fn exact_two_term_spectra_invert(omega in 0.3f64..3.0, a1 in 0.3f64..2.5, hbar in 0.5f64..2.0) {
            let (p, m) = synth(omega, 0.0, a1 * omega, hbar, 40, 200);
            let r = recover_parameters(&p, &m, hbar).unwrap();
            proptest::prop_assert!((r.params.omega - omega).abs() < 1e-8 * omega);
            proptest::prop_assert!((r.params.coupling - a1 * omega).abs() < 1e-7 * a1 * omega);
        }
    }

    #[test]
    fn trend_is_model_mismatch() {
        let v: Vec<f64> = (10..=200).map(|n| (n as f64).powf(1.5)).collect();
        let s = SpectrumSlice::from_values(10, v, Labeling::NondecreasingCount).unwrap();
        assert!(matches!(recover_parameters(&s, &s, 1.0), Err(Error::ModelMismatch(_))));
    }

    #[test]
    fn short_range_is_domain_error() {
        let (p, m) = synth(1.0, 0.5, 1.0, 1.0, 100, 300);
        assert!(matches!(recover_parameters(&p, &m, 1.0), Err(Error::Domain(_))));
    }
}
