//! Bessel functions `J0`, `J1` by Miller's backward recurrence, normalized
//! with `J0 + 2 sum_k J_2k = 1`.

/// `(J0(x), J1(x))` for real `x`.
pub fn j0_j1(x: f64) -> (f64, f64) {
    let ax = x.abs();
    if ax == 0.0 {
        return (1.0, 0.0);
    }
    // Start well above the turning point so the minimal solution dominates.
    let start = (ax + 30.0 + 12.0 * ax.cbrt()).ceil() as usize;
    let start = start + start % 2;
    let mut jp1 = 0.0f64;
    let mut j = 1e-300f64;
    let mut norm = 0.0f64;
    let mut j0 = 0.0;
    let mut j1 = 0.0;
    for k in (1..=start).rev() {
        let jm1 = 2.0 * k as f64 / ax * j - jp1;
        jp1 = j;
        j = jm1;
        // j now holds J_{k-1}.
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * j;
        }
        if k - 1 == 1 {
            j1 = j;
        }
        if k == 1 {
            j0 = j;
        }
        if j.abs() > 1e250 {
            jp1 *= 1e-250;
            j *= 1e-250;
            norm *= 1e-250;
            j1 *= 1e-250;
        }
    }
    norm += j0;
    let sign1 = if x < 0.0 { -1.0 } else { 1.0 };
    (j0 / norm, sign1 * j1 / norm)
}

pub fn j0(x: f64) -> f64 {
    j0_j1(x).0
}

pub fn j1(x: f64) -> f64 {
    j0_j1(x).1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        // Tabulated values.
        assert!((j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((j1(1.0) - 0.440_050_585_744_933_5).abs() < 1e-15);
        assert!((j0(5.0) + 0.177_596_771_314_338_3).abs() < 1e-15);
        assert!((j1(5.0) + 0.327_579_137_591_465_2).abs() < 1e-15);
        assert!((j0(2.404_825_557_695_773) ).abs() < 1e-15);
        assert!((j1(-5.0) - 0.327_579_137_591_465_2).abs() < 1e-15);
    }

    #[test]
    fn series_agreement_small_argument() {
        for x in [0.01, 0.3, 2.0, 7.5] {
            let mut s0 = 0.0;
            let mut s1 = 0.0;
            let mut t = 1.0f64;
            for k in 0..60 {
                if k > 0 {
                    t *= -(x * x / 4.0) / (k as f64 * k as f64);
                }
                s0 += t;
                s1 += t * (x / 2.0) / (k as f64 + 1.0);
            }
            assert!((j0(x) - s0).abs() < 1e-13, "{x}");
            assert!((j1(x) - s1).abs() < 1e-13, "{x}");
        }
    }

    #[test]
    fn large_argument_matches_asymptotics() {
        for x in [1e3, 1e4] {
            let a0 = (2.0 / (std::f64::consts::PI * x)).sqrt()
                * ((x - std::f64::consts::FRAC_PI_4).cos() + (x - std::f64::consts::FRAC_PI_4).sin() / (8.0 * x));
            assert!((j0(x) - a0).abs() < 0.2 / x.powf(2.5));
        }
    }
}
