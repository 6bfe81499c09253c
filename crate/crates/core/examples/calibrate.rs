//! Recomputes the observed maxima behind the two calibrated bound constants.

use rabi_core::oscillatory::{
    calibration_family, corput_draw, integral_i, integral_j, stationary_phase, PeriodicSymbol,
    CORPUT_C, STATIONARY_PHASE_C0,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut worst: f64 = 0.0;
    let mus = [5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1e3, 2e3, 5e3, 1e4, 2e4];
    for b in calibration_family() {
        let norm = b.c2_norm();
        for mu in mus {
            for eta0 in [0.0, 0.7, 2.0] {
                let v = integral_i(&b, mu, eta0).unwrap();
                let sp = stationary_phase(&b, mu, eta0).unwrap();
                worst = worst.max(mu * (v - sp.main_term).norm() / norm);
            }
        }
    }
    println!("stationary phase: max mu |I - main| / |b|_C2 = {worst:.4} (C0 = {STATIONARY_PHASE_C0})");

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..2000 {
        let ci = corput_draw(&mut rng);
        let v = integral_j(&ci).unwrap();
        let r = v.norm() * ci.mu.abs().sqrt() / ((1.0 + ci.zeta.sqrt()) * ci.m_norm());
        worst = worst.max(r);
    }
    println!("interval integral: max |J| sqrt(mu) / ((1 + sqrt(zeta)) M) = {worst:.4} (C = {CORPUT_C})");
}
