//! Oracles shared by integration tests.

use std::f64::consts::PI;

use num_complex::Complex64;
use readout_core::bare::dispersion;
use readout_core::LatticeSpec;

/// (1/β) Σ_m G₀(k, iν_m) G₀(k+q, iν_m + iωₙ) over |m| ≤ M, plus the
/// −1/ν² tail beyond it summed in closed form.
pub fn internal_sum(lat: &LatticeSpec, q: usize, n: i64, beta: f64, m_max: i64) -> Complex64 {
    let l = lat.sites;
    let omega = 2.0 * PI * n as f64 / beta;
    let mut total = Complex64::new(0.0, 0.0);
    for k in 0..l {
        let a = dispersion(lat, k).unwrap();
        let b = dispersion(lat, (k + q) % l).unwrap();
        let mut acc = Complex64::new(0.0, 0.0);
        for m in (-m_max + 1)..=m_max {
            let nu = PI * (2 * m - 1) as f64 / beta;
            acc += 1.0 / ((Complex64::new(-a, nu)) * Complex64::new(-b, nu + omega));
        }
        // Σ_{m≥1} 1/(2m−1)² = π²/8
        let partial: f64 = (1..=m_max).map(|m| 1.0 / ((2 * m - 1) as f64).powi(2)).sum();
        let tail = -2.0 * (beta / PI).powi(2) * (PI * PI / 8.0 - partial);
        total += (acc + tail) / beta;
    }
    total * lat.spin.degeneracy() as f64
}
