//! Phase-function algebra on the circle.
//!
//! Conventions: functions on the circle are functions of the angle,
//! `(f o tau_w)(xi) = f(xi - w)` and `(f o theta_n)(eta) = f(xi_n(eta))`,
//! where `xi_n` inverts `eta_n(xi) = xi - phi_n(xi)`.
//!
//! ```text
//! z(w; t) = (e^{-iw} - 1) e^{-it},   z(w..; t..) = z(w'; t') e^{-i w_nu} + z(w_nu; t_nu)
//! h(t, z) = sqrt(4 |z| sin^2(t/2) + (1 - |z|)^2)
//! psi1^{w,t}(xi) = -4 a sin(w/2) cos(xi - t - w/2) = 2 a Im(z(w; t) e^{i xi})
//! phi_n(xi) = 2 da (1 - da cos xi) sin xi,   psi2(xi) = -a da sin 2xi
//! ```

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelSpec;

const OMEGA_TOL: f64 = 1e-9;

/// `2 pi m / N` for `m = 1..N-1`.
pub fn omega_star(period: usize) -> Vec<f64> {
    (1..period).map(|m| 2.0 * PI * m as f64 / period as f64).collect()
}

fn check_omega(omega: f64, period: usize) -> Result<()> {
    let m = omega * period as f64 / (2.0 * PI);
    let r = m.round();
    if (m - r).abs() > OMEGA_TOL || r < 1.0 || r > (period - 1) as f64 {
        return Err(Error::domain(format!("omega = {omega} is not 2 pi m / {period}")));
    }
    Ok(())
}

/// `z(w; t)` for a single pair.
pub fn z_single(omega: f64, t: f64) -> Complex64 {
    (Complex64::from_polar(1.0, -omega) - 1.0) * Complex64::from_polar(1.0, -t)
}

/// Distance to `2 pi Z`.
pub fn dist_2pi(x: f64) -> f64 {
    let r = x.rem_euclid(2.0 * PI);
    r.min(2.0 * PI - r)
}

/// Complex state `z(w..; t..)` with its polar data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseState {
    pub period: usize,
    pub omegas: Vec<f64>,
    pub times: Vec<f64>,
    pub z: Complex64,
    /// `arg z` in `[0, 2 pi)`.
    pub alpha: f64,
    /// `z' / (2 sin(w_nu / 2))`, `nu >= 2` only.
    pub zhat: Option<Complex64>,
    /// `arg z' - w_nu/2 - pi/2`, `nu >= 2` only.
    pub alphahat: Option<f64>,
}

impl PhaseState {
    pub fn nu(&self) -> usize {
        self.omegas.len()
    }

    pub fn modulus(&self) -> f64 {
        self.z.norm()
    }
}

fn arg_0_2pi(z: Complex64) -> f64 {
    z.arg().rem_euclid(2.0 * PI)
}

fn z_recursive(omegas: &[f64], times: &[f64]) -> Complex64 {
    let mut z = Complex64::new(0.0, 0.0);
    for (w, t) in omegas.iter().zip(times) {
        z = z * Complex64::from_polar(1.0, -w) + z_single(*w, *t);
    }
    z
}

pub fn z_state(omegas: &[f64], times: &[f64], period: usize) -> Result<PhaseState> {
    if omegas.is_empty() || omegas.len() != times.len() {
        return Err(Error::domain("omegas and times must be nonempty and of equal length"));
    }
    if period < 2 {
        return Err(Error::domain("period must be >= 2"));
    }
    for w in omegas {
        check_omega(*w, period)?;
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::domain("non-finite time"));
    }
    let nu = omegas.len();
    let z = z_recursive(omegas, times);
    let (zhat, alphahat) = if nu >= 2 {
        let zp = z_recursive(&omegas[..nu - 1], &times[..nu - 1]);
        let w = omegas[nu - 1];
        let s = 2.0 * (0.5 * w).sin();
        (Some(zp / s), Some(arg_0_2pi(zp) - 0.5 * w - 0.5 * PI))
    } else {
        (None, None)
    };
    Ok(PhaseState {
        period,
        omegas: omegas.to_vec(),
        times: times.to_vec(),
        z,
        alpha: arg_0_2pi(z),
        zhat,
        alphahat,
    })
}

/// Random state with `omega` drawn from `Omega*` and `t` from `[-10, 10]`.
pub fn random_state(rng: &mut impl Rng, period: usize, nu: usize) -> PhaseState {
    let omegas: Vec<f64> = (0..nu)
        .map(|_| 2.0 * PI * rng.gen_range(1..period) as f64 / period as f64)
        .collect();
    let times: Vec<f64> = (0..nu).map(|_| rng.gen_range(-10.0..10.0)).collect();
    z_state(&omegas, &times, period).expect("valid by construction")
}

pub fn h_frak(t: f64, z: Complex64) -> f64 {
    let r = z.norm();
    let s = (0.5 * t).sin();
    (4.0 * r * s * s + (1.0 - r) * (1.0 - r)).sqrt()
}

/// Outcome of the inequality checks on one state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    /// `| |z| - 2 sin(w/2) h(t + alphahat, zhat) |`.
    pub modulus_identity_error: f64,
    /// `|z| - (2 sin(w/2)/pi) |t + alphahat|_{2pi}` (must be >= 0).
    pub lower_bound_margin: f64,
    /// `6/|z| - |d/dt e^{i alpha}|`, `None` when skipped.
    pub derivative_margin: Option<f64>,
    /// `|D(h) - Richardson|` of the finite difference.
    pub richardson_gap: Option<f64>,
    pub skipped: Option<String>,
}

/// Finite-difference step for the derivative in the last time.
pub const FD_STEP: f64 = 1e-6;

/// Below this modulus the argument derivative is not evaluated.
pub const Z_ZERO: f64 = 1e-9;

pub fn z_bounds_check(state: &PhaseState) -> Result<BoundsReport> {
    let nu = state.nu();
    if nu < 2 {
        return Err(Error::domain("bounds check needs nu >= 2"));
    }
    let w = state.omegas[nu - 1];
    let t = state.times[nu - 1];
    let s2 = 2.0 * (0.5 * w).sin();
    let ah = state.alphahat.unwrap();
    let zh = state.zhat.unwrap();
    let r = state.modulus();
    let modulus_identity_error = (r - s2 * h_frak(t + ah, zh)).abs();
    let lower_bound_margin = r - s2 / PI * dist_2pi(t + ah);
    if r < Z_ZERO {
        return Ok(BoundsReport {
            modulus_identity_error,
            lower_bound_margin,
            derivative_margin: None,
            richardson_gap: None,
            skipped: Some(format!("|z| = {r:e} too small for the argument derivative")),
        });
    }
    let unit = |tt: f64| {
        let mut times = state.times.clone();
        times[nu - 1] = tt;
        let z = z_recursive(&state.omegas, &times);
        z / z.norm()
    };
    let d = |h: f64| (unit(t + h) - unit(t - h)) / (2.0 * h);
    let d1 = d(FD_STEP);
    let d2 = d(0.5 * FD_STEP);
    let rich = (4.0 * d2 - d1) / 3.0;
    Ok(BoundsReport {
        modulus_identity_error,
        lower_bound_margin,
        derivative_margin: Some(6.0 / r - rich.norm()),
        richardson_gap: Some((d1 - rich).norm()),
        skipped: None,
    })
}

/// Solves `xi - f(xi) = eta` for `xi`, given `sup |f| <= bound` and
/// `|f'| <= 1/2`, by Newton steps safeguarded with bisection.
pub fn invert_shift(f: &dyn Fn(f64) -> f64, df: &dyn Fn(f64) -> f64, bound: f64, eta: f64) -> f64 {
    let g = |x: f64| x - f(x) - eta;
    let mut lo = eta - bound - 1e-15;
    let mut hi = eta + bound + 1e-15;
    let mut x = eta + f(eta);
    for _ in 0..200 {
        let gx = g(x);
        if gx == 0.0 {
            return x;
        }
        if gx < 0.0 {
            lo = lo.max(x);
        } else {
            hi = hi.min(x);
        }
        let step = gx / (1.0 - df(x));
        let mut next = x - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-16 * (1.0 + x.abs()) || hi - lo <= 1e-16 * (1.0 + x.abs()) {
            return next;
        }
        x = next;
    }
    x
}

/// The model-dependent phase objects at anchor `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseField {
    pub n: u64,
    pub gamma: f64,
    pub a: f64,
    pub da: f64,
}

impl PhaseField {
    /// Requires `||phi_n||_{C^2} <= 1/2`.
    pub fn new(spec: &ModelSpec, n: u64) -> Result<Self> {
        let f = PhaseField {
            n,
            gamma: spec.gamma(),
            a: spec.a(n as i64),
            da: spec.delta_a(n as i64),
        };
        let norm = f.phi_c2_norm();
        if norm > 0.5 {
            return Err(Error::domain(format!(
                "n = {n} too small: ||phi_n||_C2 = {norm} > 1/2"
            )));
        }
        Ok(f)
    }

    /// Field with explicit `a(n)`, `delta a(n)` (no `C^2` check).
    pub fn from_values(n: u64, gamma: f64, a: f64, da: f64) -> Self {
        PhaseField { n, gamma, a, da }
    }

    pub fn phi(&self, xi: f64) -> f64 {
        2.0 * self.da * (1.0 - self.da * xi.cos()) * xi.sin()
    }

    pub fn phi_d1(&self, xi: f64) -> f64 {
        2.0 * self.da * (xi.cos() - self.da * (2.0 * xi).cos())
    }

    pub fn phi_d2(&self, xi: f64) -> f64 {
        2.0 * self.da * (-xi.sin() + 2.0 * self.da * (2.0 * xi).sin())
    }

    /// `sup|phi| + sup|phi'| + sup|phi''|` on a 4096-point grid.
    pub fn phi_c2_norm(&self) -> f64 {
        let (mut a, mut b, mut c) = (0.0f64, 0.0f64, 0.0f64);
        for j in 0..4096 {
            let x = 2.0 * PI * j as f64 / 4096.0;
            a = a.max(self.phi(x).abs());
            b = b.max(self.phi_d1(x).abs());
            c = c.max(self.phi_d2(x).abs());
        }
        a + b + c
    }

    pub fn eta(&self, xi: f64) -> f64 {
        xi - self.phi(xi)
    }

    /// `xi_n(eta)`: the angle of `theta_n(e^{i eta})`.
    pub fn theta(&self, eta: f64) -> f64 {
        if self.da == 0.0 {
            return eta;
        }
        let bound = 2.0 * self.da.abs() * (1.0 + self.da.abs());
        invert_shift(&|x| self.phi(x), &|x| self.phi_d1(x), bound, eta)
    }

    pub fn psi1(&self, omega: f64, t: f64, xi: f64) -> f64 {
        -4.0 * self.a * (0.5 * omega).sin() * (xi - t - 0.5 * omega).cos()
    }

    /// `2 a Im(z e^{i xi})`.
    pub fn psi1_from_z(&self, z: Complex64, xi: f64) -> f64 {
        2.0 * self.a * (z * Complex64::from_polar(1.0, xi)).im
    }

    /// `psi1^{w..,t..}` by the shift recursion.
    pub fn psi1_recursive(&self, omegas: &[f64], times: &[f64], xi: f64) -> f64 {
        let nu = omegas.len();
        if nu == 0 {
            return 0.0;
        }
        let w = omegas[nu - 1];
        self.psi1_recursive(&omegas[..nu - 1], &times[..nu - 1], xi - w) + self.psi1(w, times[nu - 1], xi)
    }

    pub fn psi2(&self, xi: f64) -> f64 {
        -self.a * self.da * (2.0 * xi).sin()
    }

    /// `psi_I^w = psi2 o tau_w - psi2`, closed form.
    pub fn psi_i(&self, omega: f64, xi: f64) -> f64 {
        2.0 * self.a * self.da * omega.sin() * (2.0 * xi - omega).cos()
    }

    /// `psi_I^w` as the defining difference.
    pub fn psi_i_direct(&self, omega: f64, xi: f64) -> f64 {
        self.psi2(xi - omega) - self.psi2(xi)
    }

    /// `psi_II^w = psi1^{w,0} o theta_n - psi1^{w,0}`.
    pub fn psi_ii(&self, omega: f64, xi: f64) -> f64 {
        self.psi1(omega, 0.0, self.theta(xi)) - self.psi1(omega, 0.0, xi)
    }

    /// `r_n^w = psi_I^w o theta_n - psi_I^w`.
    pub fn r_omega(&self, omega: f64, xi: f64) -> f64 {
        self.psi_i(omega, self.theta(xi)) - self.psi_i(omega, xi)
    }

    /// `psi2^{w,t} = (psi_II^w + psi_I^w o theta_n) o tau_t`.
    pub fn psi2_single(&self, omega: f64, t: f64, xi: f64) -> f64 {
        let x = xi - t;
        self.psi_ii(omega, x) + self.psi_i(omega, self.theta(x))
    }

    /// `sup_xi |r_n^w|` on a uniform grid.
    pub fn r_omega_sup(&self, omega: f64, grid: usize) -> f64 {
        (0..grid)
            .map(|j| self.r_omega(omega, 2.0 * PI * j as f64 / grid as f64).abs())
            .fold(0.0, f64::max)
    }
}

/// Maximum over a `grid`-point circle of `|psi1 recursion - Im form|`, and
/// whether it is below `1e-10 a(n)`.
pub fn psi1_recursion_check(omegas: &[f64], times: &[f64], spec: &ModelSpec, n: u64, grid: usize) -> Result<(f64, bool)> {
    let state = z_state(omegas, times, spec.period().max(max_period_hint(omegas)))?;
    let field = PhaseField::from_values(n, spec.gamma(), spec.a(n as i64), spec.delta_a(n as i64));
    let dev = (0..grid)
        .map(|j| {
            let xi = 2.0 * PI * j as f64 / grid as f64;
            (field.psi1_recursive(omegas, times, xi) - field.psi1_from_z(state.z, xi)).abs()
        })
        .fold(0.0, f64::max);
    Ok((dev, dev < 1e-10 * field.a.max(f64::MIN_POSITIVE)))
}

/// Smallest period `N <= 64` for which every omega lies in `Omega*`.
fn max_period_hint(omegas: &[f64]) -> usize {
    (2..=64)
        .find(|&p| omegas.iter().all(|w| check_omega(*w, p).is_ok()))
        .unwrap_or(2)
}

/// Quantities of the decay check at anchor `n`:
/// `(sup |r_n^w|, |psi_II^w(e^{i w/2})|, |psi_II^w(-e^{i w/2})|)`.
pub fn decay_quantities(spec: &ModelSpec, n: u64, omega: f64) -> Result<(f64, f64, f64)> {
    let f = PhaseField::new(spec, n)?;
    Ok((
        f.r_omega_sup(omega, 4096),
        f.psi_ii(omega, 0.5 * omega).abs(),
        f.psi_ii(omega, 0.5 * omega + PI).abs(),
    ))
}

/// One line of a check report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub check: String,
    pub n: Option<u64>,
    pub omegas: Vec<f64>,
    pub times: Vec<f64>,
    pub margin: f64,
    pub pass: bool,
}

/// Deeper composition objects for `nu >= 2`.
#[cfg(feature = "proof-exploration")]
pub mod exploration {
    use super::*;

    fn neg(omega: f64) -> f64 {
        2.0 * PI - omega
    }

    impl PhaseField {
        /// `phi_{n,1}^{w,t} = (phi_n o tau_w - phi_n) o theta_n o tau_t`.
        pub fn phi1_single(&self, omega: f64, t: f64, xi: f64) -> f64 {
            let x = self.theta(xi - t);
            self.phi(x - omega) - self.phi(x)
        }

        /// `phi_{n,1}^{w..,t..} = (phi_{n,1}^{w',t'} - phi_{n,1}^{-w,t}) o tau_w`.
        pub fn phi1(&self, omegas: &[f64], times: &[f64], xi: f64) -> f64 {
            let nu = omegas.len();
            let (w, t) = (omegas[nu - 1], times[nu - 1]);
            if nu == 1 {
                return self.phi1_single(w, t, xi);
            }
            let x = xi - w;
            self.phi1(&omegas[..nu - 1], &times[..nu - 1], x) - self.phi1_single(neg(w), t, x)
        }

        /// `xi_n^{w,t}(eta)`: inverse of `xi - phi_{n,1}^{w,t}(xi)`.
        pub fn theta_wt(&self, omega: f64, t: f64, eta: f64) -> f64 {
            let f = |x: f64| self.phi1_single(omega, t, x);
            let h = 1e-6;
            let df = |x: f64| (f(x + h) - f(x - h)) / (2.0 * h);
            let bound = (0..512)
                .map(|j| f(2.0 * PI * j as f64 / 512.0).abs())
                .fold(0.0, f64::max)
                * 1.01
                + 1e-12;
            invert_shift(&f, &df, bound, eta)
        }

        fn psi1_vec(&self, omegas: &[f64], times: &[f64], xi: f64) -> f64 {
            self.psi1_recursive(omegas, times, xi)
        }

        /// `psi_{n,2}^{w..,t..}`; `nu = 1` is the single-pair formula and
        /// `nu >= 2` follows the induction over the last pair.
        pub fn psi2_vec(&self, omegas: &[f64], times: &[f64], xi: f64) -> f64 {
            let nu = omegas.len();
            let (w, t) = (omegas[nu - 1], times[nu - 1]);
            if nu == 1 {
                return self.psi2_single(w, t, xi);
            }
            let (wp, tp) = (&omegas[..nu - 1], &times[..nu - 1]);
            let x = xi - w;
            let th = self.theta_wt(w, t, x);
            self.psi1(neg(w), t, x) - self.psi1(neg(w), t, th) + self.psi2_vec(wp, tp, x)
                - self.psi2_single(neg(w), t, x)
                + self.psi1_vec(wp, tp, th)
                - self.psi1_vec(wp, tp, x)
        }
    }

}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn z_examples() {
        let s = z_state(&[PI], &[0.0], 2).unwrap();
        assert!((s.z - Complex64::new(-2.0, 0.0)).norm() < 1e-15);
        assert!((s.modulus() - 2.0).abs() < 1e-15);
        for c in [0.0, 1.3, -7.0] {
            let s = z_state(&[PI, PI], &[c, c], 2).unwrap();
            assert!(s.modulus() < 1e-15);
        }
        assert!(matches!(z_state(&[1.0], &[0.0], 3), Err(Error::Domain(_))));
        assert!(matches!(z_state(&[PI], &[0.0, 1.0], 2), Err(Error::Domain(_))));
    }

    #[test]
    fn single_pair_modulus() {
        for p in 2..=6 {
            for w in omega_star(p) {
                let s = z_state(&[w], &[0.37], p).unwrap();
                assert!((s.modulus() - 2.0 * (0.5 * w).sin()).abs() < 1e-15);
                assert!((s.z - s.modulus() * Complex64::from_polar(1.0, s.alpha)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn h_frak_examples() {
        for t in [0.0, 0.4, 3.0] {
            assert!((h_frak(t, Complex64::from_polar(1.0, 0.3)) - 2.0 * (0.5 * t).sin().abs()).abs() < 1e-15);
        }
        assert!((h_frak(0.0, Complex64::new(0.3, 0.0)) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn bounds_example() {
        let s = z_state(&[PI, PI], &[0.0, PI], 2).unwrap();
        assert!((s.modulus() - 4.0).abs() < 1e-14);
        let r = z_bounds_check(&s).unwrap();
        assert!(r.lower_bound_margin >= 2.0 - 1e-12);
        assert!(r.modulus_identity_error < 1e-12);
        assert!(r.derivative_margin.unwrap() >= 0.0);
        let zero = z_state(&[PI, PI], &[1.0, 1.0], 2).unwrap();
        assert!(z_bounds_check(&zero).unwrap().skipped.is_some());
        assert!(z_bounds_check(&z_state(&[PI], &[0.0], 2).unwrap()).is_err());
    }

    #[test]
    fn random_states_satisfy_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let p = rng.gen_range(2..=6);
            let nu = rng.gen_range(2..=6);
            let s = random_state(&mut rng, p, nu);
            let r = z_bounds_check(&s).unwrap();
            assert!(r.modulus_identity_error < 1e-12);
            assert!(r.lower_bound_margin >= -1e-12);
            if let Some(m) = r.derivative_margin {
                assert!(m >= 0.0);
            }
        }
    }

    #[test]
    fn psi1_forms_agree() {
        let spec = ModelSpec::h0(1.0, 0.25).unwrap();
        let f = PhaseField::new(&spec, 100).unwrap();
        for w in omega_star(5) {
            for xi in [0.0, 0.5, 2.0, 4.0] {
                let a = f.psi1(w, 0.7, xi);
                let b = f.psi1_from_z(z_single(w, 0.7), xi);
                assert!((a - b).abs() < 1e-12);
                // symmetry under w -> 2 pi - w
                let c = -f.psi1(2.0 * PI - w, 0.7, xi - w);
                assert!((a - c).abs() < 1e-12);
            }
        }
        let (dev, ok) = psi1_recursion_check(&[PI, PI], &[0.4, 0.4], &spec, 100, 256).unwrap();
        assert!(ok && dev < 1e-12);
        let (dev, ok) = psi1_recursion_check(&[PI], &[0.4], &spec, 100, 256).unwrap();
        assert!(ok && dev < 1e-12);
    }

    #[test]
    fn flat_profile_has_trivial_fields() {
        let f = PhaseField::from_values(100, 0.5, 10.0, 0.0);
        for xi in [0.0, 1.0, 3.0] {
            assert_eq!(f.phi(xi), 0.0);
            assert_eq!(f.theta(xi), xi);
            assert_eq!(f.psi_ii(1.0, xi), 0.0);
            assert_eq!(f.r_omega(1.0, xi), 0.0);
        }
    }

    #[test]
    fn psi_i_closed_form() {
        let f = PhaseField::new(&ModelSpec::h0(1.3, 0.2).unwrap(), 200).unwrap();
        for w in omega_star(4) {
            for j in 0..50 {
                let xi = j as f64 * 0.13;
                assert!((f.psi_i(w, xi) - f.psi_i_direct(w, xi)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn theta_round_trip() {
        let f = PhaseField::new(&ModelSpec::h0(1.0, 0.25).unwrap(), 64).unwrap();
        for j in 0..4096 {
            let xi = 2.0 * PI * j as f64 / 4096.0;
            assert!((f.theta(f.eta(xi)) - xi).abs() < 1e-11);
        }
    }

    #[test]
    fn small_n_is_rejected() {
        let spec = ModelSpec::h0(1.0, 0.25).unwrap();
        assert!(matches!(PhaseField::new(&spec, 4), Err(Error::Domain(_))));
    }

    proptest::proptest! {
        #[test]
        fn modulus_identity_and_lower_bound(
            p in 2usize..=6,
            ms in proptest::collection::vec(1usize..6, 2..=6),
            ts in proptest::collection::vec(-10.0f64..10.0, 6),
        ) {
            let ws: Vec<f64> = ms.iter().map(|m| 2.0 * PI * (1 + (m - 1) % (p - 1)) as f64 / p as f64).collect();
            let s = z_state(&ws, &ts[..ws.len()], p).unwrap();
            let r = z_bounds_check(&s).unwrap();
            proptest::prop_assert!(r.modulus_identity_error < 1e-12);
            proptest::prop_assert!(r.lower_bound_margin >= -1e-12);
            proptest::prop_assert!(r.derivative_margin.map_or(true, |m| m >= 0.0));
        }

        #[test]
        fn theta_inverts_eta(n in 32u64..5000, xi in -10.0f64..10.0) {
            let f = PhaseField::new(&ModelSpec::h0(1.0, 0.25).unwrap(), n).unwrap();
            proptest::prop_assert!((f.eta(f.theta(xi)) - xi).abs() < 1e-12);
        }
    }

    #[test]
    fn decomposition_of_psi2() {
        let f = PhaseField::new(&ModelSpec::h0(1.0, 0.25).unwrap(), 256).unwrap();
        for w in omega_star(3) {
            for xi in [0.1, 1.7, 3.3] {
                let lhs = f.psi2_single(w, 0.0, xi);
                let rhs = f.psi_i(w, xi) + f.psi_ii(w, xi) + f.r_omega(w, xi);
                assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }
}
