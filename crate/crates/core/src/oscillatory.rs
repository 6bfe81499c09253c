//! Oscillatory integrals on the circle and on intervals.
//!
//! ```text
//! I(b, mu, eta0) = (1/2pi) int_0^{2pi} exp(i mu cos(eta - eta0)) b(e^{i eta}) d eta
//! J(b, t1, t2, zeta, mu) = int_{t1}^{t2} exp(i mu sqrt(w(t))) w(t)^(-1/4) b(t) dt,
//!     w(t) = 4 sin^2(t/2) + zeta^2
//! ```

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::quadrature::{adaptive_gk, composite_gauss, gauss_legendre, periodic_trapezoid};

/// Relative tolerance of [`integral_i`].
pub const PERIODIC_TOL: f64 = 1e-12;

/// Absolute tolerance (per unit of `M(b)`) of [`integral_j`].
pub const ADAPTIVE_TOL: f64 = 1e-9;

/// Constant in `|I - main| <= C0 ||b||_{C^2} / mu`. Calibrated on
/// [`calibration_family`] with `mu` from 5 to 2e4 and three values of
/// `eta0` (observed maximum 0.0986, see `examples/calibrate.rs`), times 1.5.
pub const STATIONARY_PHASE_C0: f64 = 0.15;

/// Constant in `|J| <= C (1 + sqrt(zeta)) M(b) / sqrt(|mu|)`. Calibrated on
/// 2000 draws from [`corput_draw`] with seed 2024 (observed maximum 2.04),
/// times 1.5.
pub const CORPUT_C: f64 = 3.0;

const NORM_GRID: usize = 4096;

/// A smooth function on the unit circle, parametrized by the angle.
pub trait PeriodicSymbol: Send + Sync {
    /// `b(e^{i eta})`.
    fn value(&self, eta: f64) -> Complex64;
    /// First derivative in `eta`.
    fn d1(&self, eta: f64) -> Complex64;
    /// Second derivative in `eta`.
    fn d2(&self, eta: f64) -> Complex64;

    /// `sup|b| + sup|b'| + sup|b''|` sampled on a uniform grid.
    fn c2_norm(&self) -> f64 {
        let (mut s0, mut s1, mut s2) = (0.0f64, 0.0f64, 0.0f64);
        for j in 0..NORM_GRID {
            let eta = 2.0 * PI * j as f64 / NORM_GRID as f64;
            s0 = s0.max(self.value(eta).norm());
            s1 = s1.max(self.d1(eta).norm());
            s2 = s2.max(self.d2(eta).norm());
        }
        s0 + s1 + s2
    }

    /// `|b(0+) - b(2pi-)|`.
    fn periodicity_defect(&self) -> f64 {
        (self.value(0.0) - self.value(2.0 * PI)).norm()
    }
}

/// Concrete symbols; serializable so that families can be read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SymbolSpec {
    Constant { re: f64, im: f64 },
    /// `sum_j c_j e^{i k_j eta}`, entries `[k, re, im]`.
    Trig { terms: Vec<(i32, f64, f64)> },
    /// `e^{i mode eta} exp(i amp sin(freq eta + shift))`.
    Modulated { mode: i32, amp: f64, freq: i32, shift: f64 },
}

impl SymbolSpec {
    pub fn constant(c: Complex64) -> Self {
        SymbolSpec::Constant { re: c.re, im: c.im }
    }

    pub fn exp_phase(amp: f64, freq: i32, shift: f64) -> Self {
        SymbolSpec::Modulated {
            mode: 0,
            amp,
            freq,
            shift,
        }
    }

    /// `(q, q', q'')` for the modulated phase.
    fn phase(mode: i32, amp: f64, freq: i32, shift: f64, eta: f64) -> (f64, f64, f64) {
        let f = freq as f64;
        let arg = f * eta + shift;
        (
            mode as f64 * eta + amp * arg.sin(),
            mode as f64 + amp * f * arg.cos(),
            -amp * f * f * arg.sin(),
        )
    }
}

impl PeriodicSymbol for SymbolSpec {
    fn value(&self, eta: f64) -> Complex64 {
        match self {
            SymbolSpec::Constant { re, im } => Complex64::new(*re, *im),
            SymbolSpec::Trig { terms } => terms
                .iter()
                .map(|(k, re, im)| Complex64::new(*re, *im) * Complex64::from_polar(1.0, *k as f64 * eta))
                .sum(),
            SymbolSpec::Modulated { mode, amp, freq, shift } => {
                Complex64::from_polar(1.0, Self::phase(*mode, *amp, *freq, *shift, eta).0)
            }
        }
    }

    fn d1(&self, eta: f64) -> Complex64 {
        let i = Complex64::i();
        match self {
            SymbolSpec::Constant { .. } => Complex64::new(0.0, 0.0),
            SymbolSpec::Trig { terms } => terms
                .iter()
                .map(|(k, re, im)| {
                    Complex64::new(*re, *im) * i * *k as f64 * Complex64::from_polar(1.0, *k as f64 * eta)
                })
                .sum(),
            SymbolSpec::Modulated { mode, amp, freq, shift } => {
                let (q, q1, _) = Self::phase(*mode, *amp, *freq, *shift, eta);
                i * q1 * Complex64::from_polar(1.0, q)
            }
        }
    }

    fn d2(&self, eta: f64) -> Complex64 {
        let i = Complex64::i();
        match self {
            SymbolSpec::Constant { .. } => Complex64::new(0.0, 0.0),
            SymbolSpec::Trig { terms } => terms
                .iter()
                .map(|(k, re, im)| {
                    let kf = *k as f64;
                    -Complex64::new(*re, *im) * kf * kf * Complex64::from_polar(1.0, kf * eta)
                })
                .sum(),
            SymbolSpec::Modulated { mode, amp, freq, shift } => {
                let (q, q1, q2) = Self::phase(*mode, *amp, *freq, *shift, eta);
                (i * q2 - q1 * q1) * Complex64::from_polar(1.0, q)
            }
        }
    }
}

/// `(1/2pi) int exp(i mu cos(eta - eta0)) b(e^{i eta}) d eta` by the
/// trapezoid rule with grid doubling.
pub fn integral_i(b: &dyn PeriodicSymbol, mu: f64, eta0: f64) -> Result<Complex64> {
    if !(mu.is_finite() && eta0.is_finite()) {
        return Err(Error::domain("mu and eta0 must be finite"));
    }
    let start = ((1.5 * mu.abs()) as usize).max(64);
    let f = |eta: f64| Complex64::from_polar(1.0, mu * (eta - eta0).cos()) * b.value(eta);
    periodic_trapezoid(f, start, PERIODIC_TOL).map(|(v, _)| v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationaryPhase {
    pub main_term: Complex64,
    pub remainder_bound: f64,
}

/// `sum_{kappa = +-1} e^{i kappa (mu - pi/4)} / sqrt(2 pi mu) b(kappa e^{i eta0})`
/// with the bound `C0 ||b||_{C^2} / mu`.
pub fn stationary_phase(b: &dyn PeriodicSymbol, mu: f64, eta0: f64) -> Result<StationaryPhase> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::domain(format!("stationary phase needs mu > 0, got {mu}")));
    }
    let main_term = stationary_main(mu, b.value(eta0), b.value(eta0 + PI));
    Ok(StationaryPhase {
        main_term,
        remainder_bound: STATIONARY_PHASE_C0 * b.c2_norm() / mu,
    })
}

fn stationary_main(mu: f64, b_plus: Complex64, b_minus: Complex64) -> Complex64 {
    let s = 1.0 / (2.0 * PI * mu).sqrt();
    (Complex64::from_polar(s, mu - PI / 4.0) * b_plus) + (Complex64::from_polar(s, -(mu - PI / 4.0)) * b_minus)
}

/// `g~_n(k) = (-1)^k rho Re I(b, 4A, -pi/2)`, `A = a(n) + (k - n) delta a(n)`,
/// `b(e^{i xi}) = exp(-4 i A delta a(n) sin 2 xi)`; period-2 models only.
pub fn g_frak(spec: &ModelSpec, n: u64, k: i64) -> Result<f64> {
    let rho = spec
        .rho()
        .ok_or_else(|| Error::domain("g_frak needs a period-2 model"))?;
    let nf = n as f64;
    if ((k - n as i64).abs() as f64) > nf.powf(spec.gamma()) {
        return Err(Error::domain(format!("|k - n| > n^gamma for k = {k}, n = {n}")));
    }
    let centered = spec.centered();
    let rho = centered.rho().unwrap_or(rho);
    if rho == 0.0 {
        return Ok(0.0);
    }
    let da = centered.delta_a(n as i64);
    let big_a = centered.a(n as i64) + (k - n as i64) as f64 * da;
    let b = SymbolSpec::exp_phase(-4.0 * big_a * da, 2, 0.0);
    let i = integral_i(&b, 4.0 * big_a, -PI / 2.0)?;
    let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    Ok(sign * rho * i.re)
}

/// Stationary-phase approximation of `g_n(n)` for any period: for each
/// `omega = 2 pi m / N` the main term with `mu = 4 a(n) sin(omega/2)`,
/// `eta0 = pi + omega/2` and constant symbol `exp(i(omega n + 2 a delta_a sin omega))`.
pub fn g_frak_general_n(spec: &ModelSpec, n: u64) -> Result<f64> {
    let pot = spec.potential();
    let nn = spec.period();
    let a = spec.a(n as i64);
    let da = spec.delta_a(n as i64);
    let mut total = 0.0;
    for m in 1..=nn / 2 {
        let alpha = pot.cos_coeffs().get(m - 1).copied().unwrap_or(0.0);
        let alpha_t = pot.sin_coeffs().get(m - 1).copied().unwrap_or(0.0);
        if alpha == 0.0 && alpha_t == 0.0 {
            continue;
        }
        let omega = 2.0 * PI * m as f64 / nn as f64;
        let sin_omega = if 2 * m == nn { 0.0 } else { omega.sin() };
        let reduced = 2.0 * PI * ((m as u64 * n) % nn as u64) as f64 / nn as f64;
        let c = Complex64::from_polar(1.0, reduced + 2.0 * a * da * sin_omega);
        let mu = 4.0 * a * (PI * m as f64 / nn as f64).sin();
        let sp = stationary_phase(&SymbolSpec::constant(c), mu, PI + omega / 2.0)?;
        total += alpha * sp.main_term.re + alpha_t * sp.main_term.im;
    }
    Ok(total)
}

/// Data of the interval integral `J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorputIntegrand {
    pub b: SymbolSpec,
    pub t1: f64,
    pub t2: f64,
    pub zeta: f64,
    pub mu: f64,
}

impl CorputIntegrand {
    pub fn new(b: SymbolSpec, t1: f64, t2: f64, zeta: f64, mu: f64) -> Result<Self> {
        if !(t1.is_finite() && t2.is_finite() && t1 <= t2) {
            return Err(Error::domain("need finite t1 <= t2"));
        }
        if !(zeta.is_finite() && zeta >= 0.0) {
            return Err(Error::domain("zeta must be >= 0"));
        }
        if !(mu.is_finite() && mu != 0.0) {
            return Err(Error::domain("mu must be finite and nonzero"));
        }
        Ok(CorputIntegrand { b, t1, t2, zeta, mu })
    }

    fn weight(&self, t: f64) -> f64 {
        let s = (0.5 * t).sin();
        4.0 * s * s + self.zeta * self.zeta
    }

    pub fn integrand(&self, t: f64) -> Complex64 {
        let w = self.weight(t);
        Complex64::from_polar(w.powf(-0.25), self.mu * w.sqrt()) * self.b.value(t)
    }

    /// `M(b) = sup|b| + int |b'|` over `[t1, t2]`.
    pub fn m_norm(&self) -> f64 {
        if self.t1 == self.t2 {
            return self.b.value(self.t1).norm();
        }
        let samples = 4096;
        let h = (self.t2 - self.t1) / samples as f64;
        let sup = (0..=samples)
            .map(|j| self.b.value(self.t1 + j as f64 * h).norm())
            .fold(0.0, f64::max);
        let rule = gauss_legendre(10);
        let var = composite_gauss(
            &|t| Complex64::new(self.b.d1(t).norm(), 0.0),
            self.t1,
            self.t2,
            256,
            &rule,
        );
        sup + var.re
    }

    /// Points `2 pi j` in `[t1, t2]` where `w` vanishes when `zeta = 0`.
    fn singular_points(&self) -> Vec<f64> {
        let lo = (self.t1 / (2.0 * PI)).ceil() as i64;
        let hi = (self.t2 / (2.0 * PI)).floor() as i64;
        (lo..=hi).map(|j| 2.0 * PI * j as f64).collect()
    }

    /// Sub-intervals with at most one (near-)singular endpoint each,
    /// returned as `(start, end, singular_at_start)`; the singular end is
    /// always `start`, so `end` may be less than `start`.
    fn pieces(&self) -> Vec<(f64, f64, bool)> {
        let mut cuts = vec![self.t1];
        let sing = self.singular_points();
        for s in &sing {
            if *s > self.t1 && *s < self.t2 {
                cuts.push(*s);
            }
        }
        cuts.push(self.t2);
        let is_sing = |x: f64| sing.iter().any(|s| (s - x).abs() < 1e-14);
        let mut out = Vec::new();
        for w in cuts.windows(2) {
            let (l, r) = (w[0], w[1]);
            if l == r {
                continue;
            }
            let mid = 0.5 * (l + r);
            match (is_sing(l), is_sing(r)) {
                (false, false) => out.push((l, r, false)),
                (true, false) => out.push((l, r, true)),
                (false, true) => out.push((r, l, true)),
                (true, true) => {
                    out.push((l, mid, true));
                    out.push((r, mid, true));
                }
            }
        }
        out
    }
}

const GRADING_LEVELS: i32 = 90;
const MAX_PANELS: usize = 2_000_000;

/// `J` by adaptive Gauss-Kronrod with a geometrically graded mesh towards
/// the points where `w` can vanish.
pub fn integral_j(ci: &CorputIntegrand) -> Result<Complex64> {
    if ci.t1 == ci.t2 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let tol = ADAPTIVE_TOL * ci.m_norm().max(1.0);
    let total = ci.t2 - ci.t1;
    let f = |t: f64| ci.integrand(t);
    let mut acc = Complex64::new(0.0, 0.0);
    let oscillatory_panels = |len: f64| ((ci.mu.abs() * len / PI).ceil() as usize).max(1);
    let panel = |l: f64, r: f64, acc: &mut Complex64| -> Result<()> {
        let (a, b) = if l < r { (l, r) } else { (r, l) };
        let sign = if l < r { 1.0 } else { -1.0 };
        let k = oscillatory_panels(b - a);
        let h = (b - a) / k as f64;
        for j in 0..k {
            let x0 = a + j as f64 * h;
            let x1 = if j + 1 == k { b } else { x0 + h };
            *acc += sign * adaptive_gk(&f, x0, x1, tol * h / total, MAX_PANELS)?;
        }
        Ok(())
    };
    for (start, end, singular) in ci.pieces() {
        if !singular {
            panel(start, end, &mut acc)?;
            continue;
        }
        let len = end - start;
        let mut outer = end;
        for level in 1..=GRADING_LEVELS {
            let inner = start + len * 0.5f64.powi(level);
            panel(inner, outer, &mut acc)?;
            outer = inner;
        }
        // Remaining sliver: |w|^{-1/4} ~ |t - s|^{-1/2} (or zeta^{-1/2}).
        let eps = (outer - start).abs();
        let sliver = if ci.zeta > 0.0 {
            (2.0 * eps.sqrt()).min(eps / ci.zeta.sqrt())
        } else {
            2.0 * eps.sqrt()
        };
        acc += ci.b.value(start) * sliver * len.signum();
    }
    Ok(acc)
}

/// Oracle for [`integral_j`]: near every singular endpoint `s` the
/// substitution `t = s + u^2` removes the singularity; all pieces are then
/// integrated with uniform composite Gauss-Legendre.
pub fn integral_j_substitution(ci: &CorputIntegrand, panels_per_unit: usize) -> Complex64 {
    let rule = gauss_legendre(20);
    let mut acc = Complex64::new(0.0, 0.0);
    let per = |len: f64| ((panels_per_unit as f64 * len.abs()).ceil() as usize).max(4);
    for (start, end, singular) in ci.pieces() {
        if !singular {
            let f = |t: f64| ci.integrand(t);
            acc += composite_gauss(&f, start, end, per(end - start) * (1 + ci.mu.abs() as usize / 8), &rule);
            continue;
        }
        let dir = (end - start).signum();
        let umax = (end - start).abs().sqrt();
        let g = |u: f64| ci.integrand(start + dir * u * u) * (2.0 * u * dir);
        acc += composite_gauss(&g, 0.0, umax, per(umax) * (1 + ci.mu.abs() as usize / 8), &rule);
    }
    acc
}

/// `C (1 + sqrt(zeta)) M(b) / sqrt(|mu|)`.
pub fn corput_bound(ci: &CorputIntegrand) -> f64 {
    CORPUT_C * (1.0 + ci.zeta.sqrt()) * ci.m_norm() / ci.mu.abs().sqrt()
}

/// Validation family of 20 smooth symbols used by the stationary-phase check.
pub fn validation_family() -> Vec<SymbolSpec> {
    let mut fam = vec![
        SymbolSpec::Constant { re: 1.0, im: 0.0 },
        SymbolSpec::Constant { re: 0.3, im: -0.7 },
        SymbolSpec::Trig { terms: vec![(1, 1.0, 0.0)] },
        SymbolSpec::Trig { terms: vec![(-1, 0.0, 1.0)] },
        SymbolSpec::Trig { terms: vec![(2, 0.5, 0.0), (-2, 0.5, 0.0)] },
        SymbolSpec::Trig { terms: vec![(0, 1.0, 0.0), (1, 0.25, 0.25), (3, -0.1, 0.0)] },
        SymbolSpec::Trig { terms: vec![(1, 0.5, 0.0), (-1, -0.5, 0.0)] },
        SymbolSpec::Trig { terms: vec![(4, 0.2, 0.1), (-3, 0.0, -0.3), (0, 0.4, 0.0)] },
        SymbolSpec::Trig { terms: vec![(5, 0.1, 0.0), (2, 0.0, 0.2), (-1, 0.7, 0.0)] },
    ];
    for (mode, amp, freq, shift) in [
        (0, 0.1, 2, 0.0),
        (0, -0.5, 2, 0.0),
        (0, 1.0, 1, 0.3),
        (0, 2.0, 2, 1.0),
        (1, 0.3, 2, 0.0),
        (-1, 0.8, 1, -0.5),
        (2, 0.2, 3, 0.7),
        (0, 0.05, 4, 0.0),
        (3, 0.0, 1, 0.0),
        (-2, 1.5, 2, 2.0),
        (1, -1.0, 3, 0.1),
    ] {
        fam.push(SymbolSpec::Modulated { mode, amp, freq, shift });
    }
    fam
}

/// Separate family used once to calibrate [`STATIONARY_PHASE_C0`].
pub fn calibration_family() -> Vec<SymbolSpec> {
    vec![
        SymbolSpec::Constant { re: 0.0, im: 1.0 },
        SymbolSpec::Trig { terms: vec![(1, 0.6, -0.2), (-2, 0.3, 0.0)] },
        SymbolSpec::Trig { terms: vec![(3, 0.0, 0.5), (0, 0.5, 0.0)] },
        SymbolSpec::Modulated { mode: 0, amp: 0.7, freq: 2, shift: 0.4 },
        SymbolSpec::Modulated { mode: 1, amp: 1.2, freq: 1, shift: 0.0 },
        SymbolSpec::Modulated { mode: -1, amp: 0.4, freq: 2, shift: -1.0 },
        SymbolSpec::Modulated { mode: 2, amp: 2.5, freq: 2, shift: 0.0 },
        SymbolSpec::Modulated { mode: 0, amp: -3.0, freq: 1, shift: 0.9 },
    ]
}

/// One randomized integrand for the interval-integral bound check:
/// `zeta in [0, 3]`, `mu in [10, 1e4]` (log-uniform), `[t1, t2] in [-pi, pi]`.
pub fn corput_draw(rng: &mut impl rand::Rng) -> CorputIntegrand {
    let zeta = if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..3.0) };
    let mu = 10f64.powf(rng.gen_range(1.0..4.0));
    let mut t1 = rng.gen_range(-PI..PI);
    let mut t2 = rng.gen_range(-PI..PI);
    if t1 > t2 {
        std::mem::swap(&mut t1, &mut t2);
    }
    if rng.gen_bool(0.2) {
        t1 = 0.0f64.min(t2);
        t2 = t2.max(0.0);
    }
    let b = match rng.gen_range(0..3) {
        0 => SymbolSpec::Constant { re: rng.gen_range(-1.0..1.0), im: rng.gen_range(-1.0..1.0) },
        1 => SymbolSpec::Trig {
            terms: (0..3)
                .map(|_| (rng.gen_range(-3..=3), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect(),
        },
        _ => SymbolSpec::Modulated {
            mode: rng.gen_range(-2..=2),
            amp: rng.gen_range(-2.0..2.0),
            freq: rng.gen_range(1..=3),
            shift: rng.gen_range(0.0..2.0 * PI),
        },
    };
    CorputIntegrand { b, t1, t2, zeta, mu }
}

/// A family file for sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SymbolFamily {
    Stationary {
        #[serde(default)]
        eta0: f64,
        symbols: Vec<SymbolSpec>,
    },
    Corput {
        zeta: f64,
        t1: f64,
        t2: f64,
        symbols: Vec<SymbolSpec>,
    },
}

/// One line of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub mu: f64,
    pub zeta: f64,
    pub value: Complex64,
    pub bound: f64,
    /// Stationary case: `|I - main| / bound`; interval case: `|J| / bound`.
    pub ratio: f64,
}

pub fn sweep(family: &SymbolFamily, mus: &[f64]) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    match family {
        SymbolFamily::Stationary { eta0, symbols } => {
            for b in symbols {
                for &mu in mus {
                    let v = integral_i(b, mu, *eta0)?;
                    let sp = stationary_phase(b, mu, *eta0)?;
                    rows.push(SweepRow {
                        mu,
                        zeta: f64::NAN,
                        value: v,
                        bound: sp.remainder_bound,
                        ratio: (v - sp.main_term).norm() / sp.remainder_bound,
                    });
                }
            }
        }
        SymbolFamily::Corput { zeta, t1, t2, symbols } => {
            for b in symbols {
                for &mu in mus {
                    let ci = CorputIntegrand::new(b.clone(), *t1, *t2, *zeta, mu)?;
                    let v = integral_j(&ci)?;
                    let bound = corput_bound(&ci);
                    rows.push(SweepRow {
                        mu,
                        zeta: *zeta,
                        value: v,
                        bound,
                        ratio: v.norm() / bound,
                    });
                }
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel;
    use crate::model::{OffDiagonalProfile, PeriodicPotential};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_symbol_gives_bessel_j0() {
        let one = SymbolSpec::Constant { re: 1.0, im: 0.0 };
        for mu in [0.5, 5.0, 37.0, 1000.0] {
            for eta0 in [0.0, 1.3, -2.0] {
                let v = integral_i(&one, mu, eta0).unwrap();
                assert!((v.re - bessel::j0(mu)).abs() < 1e-12, "{mu}");
                assert!(v.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_frequency_gives_mean() {
        let b = SymbolSpec::Trig { terms: vec![(0, 0.4, -0.2), (1, 3.0, 0.0), (-2, 1.0, 1.0)] };
        let v = integral_i(&b, 0.0, 0.7).unwrap();
        assert!((v - Complex64::new(0.4, -0.2)).norm() < 1e-14);
    }

    #[test]
    fn first_mode_gives_i_j1() {
        let b = SymbolSpec::Trig { terms: vec![(1, 1.0, 0.0)] };
        let v = integral_i(&b, 5.0, 0.0).unwrap();
        assert!((v - Complex64::new(0.0, bessel::j1(5.0))).norm() < 1e-12);
    }

    #[test]
    fn rotation_invariance() {
        let b = SymbolSpec::Modulated { mode: 1, amp: 0.6, freq: 2, shift: 0.2 };
        let c = 0.9;
        let rotated = SymbolSpec::Modulated { mode: 1, amp: 0.6, freq: 2, shift: 0.2 - 2.0 * c };
        // b(eta - c) = e^{-i c} * rotated(eta)
        let lhs = integral_i(&b, 30.0, 0.4 - c).unwrap();
        let rhs = integral_i(&rotated, 30.0, 0.4).unwrap() * Complex64::from_polar(1.0, -c);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn stationary_phase_examples() {
        let one = SymbolSpec::Constant { re: 1.0, im: 0.0 };
        let mu = 100.0;
        let sp = stationary_phase(&one, mu, 0.3).unwrap();
        let expect = 2.0 * (mu - PI / 4.0).cos() / (2.0 * PI * mu).sqrt();
        assert!((sp.main_term - Complex64::new(expect, 0.0)).norm() < 1e-15);
        let v = integral_i(&one, mu, 0.3).unwrap();
        assert!((v - sp.main_term).norm() <= sp.remainder_bound);

        // vanishing at both stationary points
        let odd = SymbolSpec::Trig { terms: vec![(1, 0.5, 0.0), (-1, 0.5, 0.0)] };
        let sp = stationary_phase(&odd, 50.0, PI / 2.0).unwrap();
        assert!(sp.main_term.norm() < 1e-15);

        assert!(matches!(stationary_phase(&one, 0.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn symbol_derivatives_match_finite_differences() {
        for b in validation_family() {
            assert!(b.periodicity_defect() <= 1e-12);
            for eta in [0.1, 1.7, 4.0] {
                let h = 1e-5;
                let fd1 = (b.value(eta + h) - b.value(eta - h)) / (2.0 * h);
                let fd2 = (b.value(eta + h) - 2.0 * b.value(eta) + b.value(eta - h)) / (h * h);
                assert!((fd1 - b.d1(eta)).norm() < 1e-7 * (1.0 + b.d1(eta).norm()));
                assert!((fd2 - b.d2(eta)).norm() < 1e-3 * (1.0 + b.d2(eta).norm()));
            }
        }
        assert_eq!(validation_family().len(), 20);
    }

    #[test]
    fn g_frak_basics() {
        let spec = ModelSpec::h0(1.0, 0.0).unwrap();
        assert_eq!(g_frak(&spec, 100, 100).unwrap(), 0.0);
        let spec = ModelSpec::h0(1.0, 0.25).unwrap();
        assert!(matches!(g_frak(&spec, 100, 111), Err(Error::Domain(_))));
        // Direct evaluation of the defining integral.
        let n = 400u64;
        let a = spec.a(n as i64);
        let da = spec.delta_a(n as i64);
        let m = 8192;
        let s: f64 = (0..m)
            .map(|j| {
                let xi = 2.0 * PI * j as f64 / m as f64;
                (-4.0 * a * (xi.sin() + da * (2.0 * xi).sin())).cos()
            })
            .sum::<f64>()
            / m as f64;
        assert!((g_frak(&spec, n, n as i64).unwrap() - 0.25 * s).abs() < 1e-12);
    }

    #[test]
    fn general_n_reduces_for_period_two() {
        for (a1, rho) in [(1.0, 0.25), (0.7, -0.3)] {
            let spec = ModelSpec::h0(a1, rho).unwrap();
            for n in [50u64, 301, 4096] {
                let a = spec.a(n as i64);
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                let expect = sign * rho * (4.0 * a - PI / 4.0).cos() / (2.0 * PI * a).sqrt();
                assert!((g_frak_general_n(&spec, n).unwrap() - expect).abs() < 1e-14);
            }
        }
        let zero = ModelSpec::h0(1.0, 0.0).unwrap();
        assert_eq!(g_frak_general_n(&zero, 100).unwrap(), 0.0);
    }

    #[test]
    fn general_n_matches_closed_form_r() {
        let spec = ModelSpec::h12(
            OffDiagonalProfile::new(1.0, 0.5, 0.0).unwrap(),
            PeriodicPotential::from_fourier(3, 0.0, &[1.0], &[]).unwrap(),
        );
        let r = crate::asymptotics::r_of_n(&spec, 729);
        assert!((g_frak_general_n(&spec, 729).unwrap() - r).abs() < 1e-13);
    }

    #[test]
    fn corput_trivial_and_mesh_independence() {
        let zero = CorputIntegrand::new(SymbolSpec::Constant { re: 0.0, im: 0.0 }, 0.0, PI, 1.0, 50.0).unwrap();
        assert_eq!(integral_j(&zero).unwrap(), Complex64::new(0.0, 0.0));
        let ci = CorputIntegrand::new(SymbolSpec::Constant { re: 1.0, im: 0.0 }, 0.0, PI, 0.0, 50.0).unwrap();
        let a = integral_j(&ci).unwrap();
        let b = integral_j_substitution(&ci, 64);
        assert!(a.norm().is_finite());
        assert!((a - b).norm() < 1e-8, "{a} {b}");
    }

    #[test]
    fn corput_additivity() {
        let b = SymbolSpec::Modulated { mode: 1, amp: 0.5, freq: 2, shift: 0.3 };
        for zeta in [0.0, 0.4] {
            let whole = integral_j(&CorputIntegrand::new(b.clone(), -2.0, 2.5, zeta, 300.0).unwrap()).unwrap();
            let left = integral_j(&CorputIntegrand::new(b.clone(), -2.0, 0.7, zeta, 300.0).unwrap()).unwrap();
            let right = integral_j(&CorputIntegrand::new(b.clone(), 0.7, 2.5, zeta, 300.0).unwrap()).unwrap();
            assert!((whole - left - right).norm() < 1e-8);
        }
    }

    #[test]
    fn corput_scaled_sweep_is_bounded() {
        let one = SymbolSpec::Constant { re: 1.0, im: 0.0 };
        let vals: Vec<f64> = [10.0, 100.0, 1000.0, 10000.0]
            .iter()
            .map(|mu| integral_j(&CorputIntegrand::new(one.clone(), 0.0, PI, 1.0, *mu).unwrap()).unwrap().norm() * mu.sqrt())
            .collect();
        let max = vals.iter().copied().fold(0.0, f64::max);
        assert!(max < 5.0, "{vals:?}");
    }

    #[test]
    fn corput_domain_errors() {
        let one = SymbolSpec::Constant { re: 1.0, im: 0.0 };
        assert!(CorputIntegrand::new(one.clone(), 1.0, 0.0, 0.0, 1.0).is_err());
        assert!(CorputIntegrand::new(one.clone(), 0.0, 1.0, -1.0, 1.0).is_err());
        assert!(CorputIntegrand::new(one, 0.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn family_json_round_trip() {
        let fam = SymbolFamily::Stationary { eta0: 0.5, symbols: validation_family() };
        let s = serde_json::to_string(&fam).unwrap();
        let back: SymbolFamily = serde_json::from_str(&s).unwrap();
        assert_eq!(back, fam);
        let rows = sweep(&back, &[10.0, 100.0]).unwrap();
        assert_eq!(rows.len(), 40);
        assert!(rows.iter().all(|r| r.ratio <= 1.0));
    }

    #[test]
    fn corput_draws_reproducible() {
        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(corput_draw(&mut a), corput_draw(&mut b));
    }
}
