//! Model specifications: entry generators of the Jacobi operator
//!
//! ```text
//! (J x)(k) = d(k) x(k) + a(k) x(k+1) + a(k-1) x(k-1),   x(0) = a(0) = 0,
//! d(k) = k + v(k),   a(k) = a1 k^gamma + a1' k^(gamma-1),
//! ```
//!
//! with `v` periodic of period `N`, and the reduction of the quantum Rabi
//! Hamiltonian to a pair of such operators.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coupling constants below this are flushed to an exact zero so that a
/// "vanishing coupling" model is exactly diagonal.
const COUPLING_FLUSH: f64 = 1e-150;

/// Physical parameters of the quantum Rabi Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RabiParams {
    pub omega: f64,
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "g")]
    pub coupling: f64,
    pub hbar: f64,
}

impl RabiParams {
    pub fn new(omega: f64, energy: f64, coupling: f64, hbar: f64) -> Result<Self> {
        let p = RabiParams {
            omega,
            energy,
            coupling,
            hbar,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, x) in [
            ("omega", self.omega),
            ("E", self.energy),
            ("g", self.coupling),
            ("hbar", self.hbar),
        ] {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::domain(format!("{name} must be finite and > 0, got {x}")));
            }
        }
        Ok(())
    }
}

/// A real `N`-periodic sequence together with its real Fourier data.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicPotential {
    values: Vec<f64>,
    mean: f64,
    cos_coeffs: Vec<f64>,
    sin_coeffs: Vec<f64>,
    rho_n: f64,
}

impl PeriodicPotential {
    /// Real discrete Fourier decomposition of `v(1..=N)`.
    ///
    /// `values[0]` is `v(1)`. The cosine coefficients are indexed by
    /// `m = 1..=N/2`, the sine coefficients by `m = 1..=(N-1)/2`.
    pub fn fourier_decompose(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::domain(format!("period must be >= 2, got {n}")));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite potential value {bad}")));
        }
        let nf = n as f64;
        let mean = values.iter().sum::<f64>() / nf;
        let mut cos_coeffs = Vec::with_capacity(n / 2);
        for m in 1..=n / 2 {
            let s: f64 = values
                .iter()
                .enumerate()
                .map(|(i, v)| v * angle(m, i + 1, n).cos())
                .sum();
            // The Nyquist mode (2m = N) appears once in the expansion.
            let weight = if 2 * m == n { 1.0 / nf } else { 2.0 / nf };
            cos_coeffs.push(weight * s);
        }
        let mut sin_coeffs = Vec::with_capacity((n - 1) / 2);
        for m in 1..=(n - 1) / 2 {
            let s: f64 = values
                .iter()
                .enumerate()
                .map(|(i, v)| v * angle(m, i + 1, n).sin())
                .sum();
            sin_coeffs.push(2.0 / nf * s);
        }
        let rho_n = values
            .iter()
            .map(|v| (v - mean).abs())
            .fold(0.0, f64::max);
        Ok(PeriodicPotential {
            values: values.to_vec(),
            mean,
            cos_coeffs,
            sin_coeffs,
            rho_n,
        })
    }

    /// Builds the potential from Fourier data (`alpha0`, cosine and sine
    /// coefficients) by sampling the expansion at `k = 1..=N`.
    pub fn from_fourier(period: usize, alpha0: f64, cos: &[f64], sin: &[f64]) -> Result<Self> {
        if period < 2 {
            return Err(Error::domain(format!("period must be >= 2, got {period}")));
        }
        if cos.len() > period / 2 || sin.len() > (period - 1) / 2 {
            return Err(Error::domain("too many Fourier coefficients for the period"));
        }
        let values: Vec<f64> = (1..=period)
            .map(|k| {
                alpha0
                    + cos
                        .iter()
                        .enumerate()
                        .map(|(i, a)| a * angle(i + 1, k, period).cos())
                        .sum::<f64>()
                    + sin
                        .iter()
                        .enumerate()
                        .map(|(i, a)| a * angle(i + 1, k, period).sin())
                        .sum::<f64>()
            })
            .collect();
        Self::fourier_decompose(&values)
    }

    pub fn period(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `v(k)` for any integer `k`, extended periodically.
    pub fn value(&self, k: i64) -> f64 {
        let n = self.values.len() as i64;
        self.values[(k - 1).rem_euclid(n) as usize]
    }

    /// Mean value `alpha0 = <v>`.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// `alpha_m`, `m = 1..=N/2`.
    pub fn cos_coeffs(&self) -> &[f64] {
        &self.cos_coeffs
    }

    /// `alpha~_m`, `m = 1..=(N-1)/2`.
    pub fn sin_coeffs(&self) -> &[f64] {
        &self.sin_coeffs
    }

    /// `max_k |v(k) - <v>|`.
    pub fn rho_n(&self) -> f64 {
        self.rho_n
    }

    /// Smallness threshold on `rho_N` under which the general asymptotic
    /// formula is asserted.
    pub fn rho_threshold(&self) -> f64 {
        if self.period() == 2 {
            0.5
        } else {
            1.0 / (PI * (self.period() as f64).sqrt())
        }
    }

    pub fn satisfies_rho_condition(&self) -> bool {
        self.rho_n < self.rho_threshold()
    }

    /// Evaluates the Fourier expansion at `k`.
    pub fn reconstruct(&self, k: i64) -> f64 {
        let n = self.period();
        let kk = k.rem_euclid(n as i64) as usize;
        let c: f64 = self
            .cos_coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| a * angle(i + 1, kk, n).cos())
            .sum();
        let s: f64 = self
            .sin_coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| a * angle(i + 1, kk, n).sin())
            .sum();
        self.mean + c + s
    }

    /// The same potential with its mean removed.
    pub fn centered(&self) -> PeriodicPotential {
        let values: Vec<f64> = self.values.iter().map(|v| v - self.mean).collect();
        PeriodicPotential {
            values,
            mean: 0.0,
            cos_coeffs: self.cos_coeffs.clone(),
            sin_coeffs: self.sin_coeffs.clone(),
            rho_n: self.rho_n,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }
}

/// `2 pi m k / N`, reduced before conversion to keep the angle small.
fn angle(m: usize, k: usize, n: usize) -> f64 {
    2.0 * PI * ((m * k) % n) as f64 / n as f64
}

/// `(k+1)^p - k^p` without cancellation.
fn forward_power_difference(k: f64, p: f64) -> f64 {
    k.powf(p) * (p * (1.0 / k).ln_1p()).exp_m1()
}

/// Off-diagonal profile `a(k) = a1 k^gamma + a1' k^(gamma-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffDiagonalProfile {
    a1: f64,
    gamma: f64,
    a1prime: f64,
}

/// Constants of the growth/regularity hypotheses, certified by sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HypothesisConstants {
    /// First index from which the bounds hold.
    pub k0: u64,
    pub c: f64,
    pub big_c: f64,
    pub c_prime: f64,
    pub c_second: f64,
    /// True when `c > 0` and every sampled ratio is finite.
    pub holds: bool,
}

impl OffDiagonalProfile {
    pub fn new(a1: f64, gamma: f64, a1prime: f64) -> Result<Self> {
        if !(a1.is_finite() && a1 >= 0.0) {
            return Err(Error::domain(format!("a1 must be finite and >= 0, got {a1}")));
        }
        if !(gamma > 0.0 && gamma <= 0.5) {
            return Err(Error::domain(format!("gamma must lie in (0, 1/2], got {gamma}")));
        }
        if !a1prime.is_finite() {
            return Err(Error::domain("a1prime must be finite"));
        }
        let a1 = if a1 < COUPLING_FLUSH { 0.0 } else { a1 };
        Ok(OffDiagonalProfile { a1, gamma, a1prime })
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn a1prime(&self) -> f64 {
        self.a1prime
    }

    /// `a(k)`; zero for `k <= 0`.
    pub fn value(&self, k: i64) -> f64 {
        if k <= 0 {
            return 0.0;
        }
        let kf = k as f64;
        let lead = if self.a1 == 0.0 { 0.0 } else { self.a1 * kf.powf(self.gamma) };
        let next = if self.a1prime == 0.0 {
            0.0
        } else {
            self.a1prime * kf.powf(self.gamma - 1.0)
        };
        lead + next
    }

    /// `delta a(k) = a(k+1) - a(k)`, evaluated without cancellation for `k >= 1`.
    pub fn delta(&self, k: i64) -> f64 {
        if k <= 0 {
            return self.value(k + 1) - self.value(k);
        }
        let kf = k as f64;
        let mut d = 0.0;
        if self.a1 != 0.0 {
            d += self.a1 * forward_power_difference(kf, self.gamma);
        }
        if self.a1prime != 0.0 {
            d += self.a1prime * forward_power_difference(kf, self.gamma - 1.0);
        }
        d
    }

    /// `delta^2 a(k) = a(k+2) - 2 a(k+1) + a(k)`.
    pub fn delta2(&self, k: i64) -> f64 {
        self.delta(k + 1) - self.delta(k)
    }

    /// `a(n-1)^2 - a(n)^2`, factored as `-delta a(n-1) (a(n-1) + a(n))`.
    pub fn square_drop(&self, n: i64) -> f64 {
        -self.delta(n - 1) * (self.value(n - 1) + self.value(n))
    }

    /// Samples `k = k0..=k_max` and combines the samples with the limits of
    /// the ratios `a/k^g`, `delta a/k^(g-1)`, `delta^2 a/k^(g-2)`, which the
    /// power-law family approaches monotonically for large `k`.
    pub fn hypothesis_constants(&self, k_max: u64) -> HypothesisConstants {
        let g = self.gamma;
        let k0 = if self.a1prime >= 0.0 || self.a1 == 0.0 {
            1
        } else {
            (-self.a1prime / self.a1).ceil() as u64 + 1
        };
        let mut c = self.a1;
        let mut big_c = self.a1;
        let mut c_prime = (self.a1 * g).abs();
        let mut c_second = (self.a1 * g * (g - 1.0)).abs();
        let mut finite = true;
        for k in k0..=k_max.max(k0) {
            let kf = k as f64;
            let ki = k as i64;
            let r0 = self.value(ki) / kf.powf(g);
            let r1 = self.delta(ki).abs() / kf.powf(g - 1.0);
            let r2 = self.delta2(ki).abs() / kf.powf(g - 2.0);
            finite &= r0.is_finite() && r1.is_finite() && r2.is_finite();
            c = c.min(r0);
            big_c = big_c.max(r0);
            c_prime = c_prime.max(r1);
            c_second = c_second.max(r2);
        }
        HypothesisConstants {
            k0,
            c,
            big_c,
            c_prime,
            c_second,
            holds: finite && c > 0.0,
        }
    }
}

/// Which hypothesis block a model is stated under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Quantum Rabi case: `N = 2`, `v(k) = (-1)^k rho`, `gamma = 1/2`,
    /// no restriction on `rho`.
    H0,
    /// General power-law off-diagonal with an `N`-periodic diagonal shift.
    H12,
}

/// Complete description of a Jacobi operator of the family.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    offdiag: OffDiagonalProfile,
    potential: PeriodicPotential,
    mode: Mode,
}

impl ModelSpec {
    /// `d(k) = k + (-1)^k rho`, `a(k) = a1 sqrt(k)`.
    pub fn h0(a1: f64, rho: f64) -> Result<Self> {
        if !rho.is_finite() {
            return Err(Error::domain("rho must be finite"));
        }
        Ok(ModelSpec {
            offdiag: OffDiagonalProfile::new(a1, 0.5, 0.0)?,
            potential: PeriodicPotential::fourier_decompose(&[-rho, rho])?,
            mode: Mode::H0,
        })
    }

    pub fn h12(offdiag: OffDiagonalProfile, potential: PeriodicPotential) -> Self {
        ModelSpec {
            offdiag,
            potential,
            mode: Mode::H12,
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn offdiag(&self) -> &OffDiagonalProfile {
        &self.offdiag
    }

    pub fn potential(&self) -> &PeriodicPotential {
        &self.potential
    }

    pub fn period(&self) -> usize {
        self.potential.period()
    }

    pub fn gamma(&self) -> f64 {
        self.offdiag.gamma
    }

    /// The `N = 2` amplitude `rho` with `v(k) = (-1)^k rho + alpha0`;
    /// `None` for other periods.
    pub fn rho(&self) -> Option<f64> {
        (self.period() == 2).then(|| self.potential.cos_coeffs()[0])
    }

    /// Mean shift `alpha0` removed internally by the asymptotic machinery.
    pub fn alpha0(&self) -> f64 {
        self.potential.mean()
    }

    /// Copy of the model with `alpha0` removed from the diagonal.
    pub fn centered(&self) -> ModelSpec {
        ModelSpec {
            offdiag: self.offdiag,
            potential: self.potential.centered(),
            mode: self.mode,
        }
    }

    /// Whether the asymptotic claims are asserted for this model.
    pub fn asymptotics_asserted(&self) -> bool {
        match self.mode {
            Mode::H0 => true,
            Mode::H12 => self.potential.satisfies_rho_condition(),
        }
    }

    pub fn diag(&self, k: i64) -> f64 {
        k as f64 + self.potential.value(k)
    }

    pub fn a(&self, k: i64) -> f64 {
        self.offdiag.value(k)
    }

    pub fn delta_a(&self, k: i64) -> f64 {
        self.offdiag.delta(k)
    }

    /// `(d(k), a(k))` for every `k` in the range; `a(0) = 0`.
    pub fn entries(&self, range: RangeInclusive<i64>) -> Vec<(f64, f64)> {
        range.map(|k| (self.diag(k), self.a(k))).collect()
    }
}

/// Branch of the Rabi Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

/// Result of reducing `H_Rabi` restricted to one parity sector to a Jacobi
/// operator: `lambda(H) = offset + scale * lambda(J)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RabiReduction {
    pub spec: ModelSpec,
    pub offset: f64,
    pub scale: f64,
}

impl RabiReduction {
    pub fn to_physical(&self, lambda_j: f64) -> f64 {
        self.offset + self.scale * lambda_j
    }

    pub fn to_jacobi(&self, lambda_h: f64) -> f64 {
        (lambda_h - self.offset) / self.scale
    }
}

/// `a1 = g/omega`, `rho = +-E/(2 hbar omega)`, `lambda(H) = -hbar omega/2 + hbar omega lambda(J)`.
pub fn rabi_to_jacobi(params: &RabiParams, branch: Branch) -> Result<RabiReduction> {
    params.validate()?;
    let a1 = params.coupling / params.omega;
    let rho = branch.sign() * params.energy / (2.0 * params.hbar * params.omega);
    let scale = params.hbar * params.omega;
    Ok(RabiReduction {
        spec: ModelSpec::h0(a1, rho)?,
        offset: -0.5 * scale,
        scale,
    })
}

/// JSON model descriptor accepted by the command-line tools.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelDescriptor {
    Rabi {
        rabi: RabiParams,
        sign: Branch,
    },
    Explicit {
        mode: Mode,
        a1: f64,
        #[serde(default = "default_gamma")]
        gamma: f64,
        #[serde(default)]
        a1prime: f64,
        #[serde(rename = "N")]
        period: usize,
        v: Vec<f64>,
    },
}

fn default_gamma() -> f64 {
    0.5
}

impl ModelDescriptor {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::domain(format!("model descriptor: {e}")))
    }

    pub fn to_spec(&self) -> Result<ModelSpec> {
        match self {
            ModelDescriptor::Rabi { rabi, sign } => Ok(rabi_to_jacobi(rabi, *sign)?.spec),
            ModelDescriptor::Explicit {
                mode,
                a1,
                gamma,
                a1prime,
                period,
                v,
            } => {
                if v.len() != *period {
                    return Err(Error::domain(format!(
                        "v has {} entries but N = {period}",
                        v.len()
                    )));
                }
                match mode {
                    Mode::H0 => {
                        if *period != 2 || (v[0] + v[1]).abs() > 1e-14 {
                            return Err(Error::domain("H0 requires N = 2 and v = (-rho, rho)"));
                        }
                        if (*gamma - 0.5).abs() > 0.0 || *a1prime != 0.0 {
                            return Err(Error::domain("H0 requires gamma = 1/2 and a1prime = 0"));
                        }
                        ModelSpec::h0(*a1, v[1])
                    }
                    Mode::H12 => Ok(ModelSpec::h12(
                        OffDiagonalProfile::new(*a1, *gamma, *a1prime)?,
                        PeriodicPotential::fourier_decompose(v)?,
                    )),
                }
            }
        }
    }

    /// Descriptor for an existing model (explicit form).
    pub fn from_spec(spec: &ModelSpec) -> Self {
        ModelDescriptor::Explicit {
            mode: spec.mode(),
            a1: spec.offdiag().a1(),
            gamma: spec.gamma(),
            a1prime: spec.offdiag().a1prime(),
            period: spec.period(),
            v: spec.potential().values().to_vec(),
        }
    }
}
