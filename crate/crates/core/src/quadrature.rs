//! Quadrature rules: periodic trapezoid, adaptive Gauss-Kronrod (7/15), and
//! composite Gauss-Legendre.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest number of trapezoid nodes tried by [`periodic_trapezoid`].
pub const TRAPEZOID_CAP: usize = 1 << 20;

/// `(1/2pi) int_0^{2pi} f` by the trapezoid rule, doubling from `start`
/// nodes until successive values differ by less than `rel_tol (1 + |I|)`.
pub fn periodic_trapezoid(
    f: impl Fn(f64) -> Complex64,
    start: usize,
    rel_tol: f64,
) -> Result<(Complex64, usize)> {
    let mut m = start.max(4).next_power_of_two();
    let step = |m: usize| 2.0 * std::f64::consts::PI / m as f64;
    let mut sum: Complex64 = (0..m).map(|j| f(j as f64 * step(m))).sum();
    let mut value = sum / m as f64;
    while m < TRAPEZOID_CAP {
        let h = step(2 * m);
        let mid: Complex64 = (0..m).map(|j| f((2 * j + 1) as f64 * h)).sum();
        sum += mid;
        m *= 2;
        let next = sum / m as f64;
        if (next - value).norm() < rel_tol * (1.0 + next.norm()) {
            return Ok((next, m));
        }
        value = next;
    }
    Err(Error::Accuracy(format!(
        "periodic trapezoid did not converge with {TRAPEZOID_CAP} nodes"
    )))
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One Gauss-Kronrod 7/15 panel: `(kronrod, |kronrod - gauss|)`.
pub fn gk15(f: &impl Fn(f64) -> Complex64, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += s * WGK[j];
        if j % 2 == 1 {
            g += s * WG[j / 2];
        }
    }
    (k * h, ((k - g) * h).norm())
}

/// Adaptive Gauss-Kronrod over `[a, b]` to absolute tolerance `tol`.
/// Intervals are bisected until each panel's error estimate is below its
/// share of `tol`; at most `max_panels` panels are used.
pub fn adaptive_gk(
    f: &impl Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    tol: f64,
    max_panels: usize,
) -> Result<Complex64> {
    if a == b {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let total = (b - a).abs();
    let mut stack = vec![(a, b)];
    let mut acc = Complex64::new(0.0, 0.0);
    let mut panels = 0usize;
    while let Some((l, r)) = stack.pop() {
        panels += 1;
        if panels > max_panels {
            return Err(Error::Accuracy(format!(
                "adaptive quadrature exceeded {max_panels} panels"
            )));
        }
        let (val, err) = gk15(f, l, r);
        let share = tol * (r - l).abs() / total;
        let mid = 0.5 * (l + r);
        if err <= share || err <= 1e-15 * val.norm() || mid <= l.min(r) || mid >= l.max(r) {
            acc += val;
        } else {
            stack.push((mid, r));
            stack.push((l, mid));
        }
    }
    Ok(acc)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; order];
    let mut w = vec![0.0; order];
    let n = order as f64;
    for i in 0..order.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=order {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if order == 0 { 1.0 } else { p1 };
            dp = n * (z * p - p0) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[order - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[order - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite Gauss-Legendre with `panels` equal panels.
pub fn composite_gauss(
    f: &impl Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    panels: usize,
    rule: &(Vec<f64>, Vec<f64>),
) -> Complex64 {
    let h = (b - a) / panels as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let c = a + (p as f64 + 0.5) * h;
        for (x, w) in rule.0.iter().zip(&rule.1) {
            acc += f(c + 0.5 * h * x) * *w;
        }
    }
    acc * (0.5 * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_integrates_trig_exactly() {
        let (v, _) = periodic_trapezoid(|x| Complex64::new(x.cos().powi(2), 0.0), 8, 1e-14).unwrap();
        assert!((v.re - 0.5).abs() < 1e-15);
        assert!(v.im.abs() < 1e-15);
    }

    #[test]
    fn gauss_kronrod_polynomial_and_oscillatory() {
        let f = |x: f64| Complex64::new(x.powi(9), 0.0);
        let (v, e) = gk15(&f, 0.0, 1.0);
        assert!((v.re - 0.1).abs() < 1e-15 && e < 1e-14);
        let g = |x: f64| Complex64::from_polar(1.0, 200.0 * x);
        let v = adaptive_gk(&g, 0.0, 1.0, 1e-12, 10_000).unwrap();
        let exact = (Complex64::from_polar(1.0, 200.0) - 1.0) / Complex64::new(0.0, 200.0);
        assert!((v - exact).norm() < 1e-11);
    }

    #[test]
    fn adaptive_cap_reports_accuracy_error() {
        let g = |x: f64| Complex64::from_polar(1.0, 1e6 * x);
        assert!(matches!(adaptive_gk(&g, 0.0, 1.0, 1e-14, 4), Err(Error::Accuracy(_))));
    }

    #[test]
    fn legendre_rule_is_exact_to_degree() {
        let rule = gauss_legendre(10);
        let s: f64 = rule.1.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let f = |x: f64| Complex64::new(x.powi(18) + x.powi(3), 0.0);
        let v = composite_gauss(&f, -1.0, 1.0, 1, &rule);
        assert!((v.re - 2.0 / 19.0).abs() < 1e-14);
    }
}
