//! Imaginary-time traces and the four-point Wick factorization residual.

use faer::Mat;
use num_complex::Complex64;

use super::space::FockSpace;
use super::spectrum::{diagonalize_with_floor, SpectralData};
use super::system::lattice_terms;
use crate::bare::LatticeSpec;
use crate::error::{Error, Result};

/// Times closer than this are treated as coincident.
pub const TIME_RESOLUTION: f64 = 1e-12;

fn check_times(beta: f64, taus: &[f64]) -> Result<()> {
    for &t in taus {
        if !(t > 0.0 && t < beta) {
            return Err(Error::TauDomain { tau: t, range: "(0, beta)" });
        }
    }
    for (i, a) in taus.iter().enumerate() {
        if taus[i + 1..].iter().any(|b| (a - b).abs() < TIME_RESOLUTION) {
            return Err(Error::DegenerateTimes);
        }
    }
    Ok(())
}

/// ⟨T O(τ₁)…O(τ_k)⟩ for a bosonic operator given by its eigenbasis matrix.
fn ordered_trace(data: &SpectralData, op: &Mat<f64>, taus: &[f64]) -> f64 {
    let e = data.energies();
    let e0 = e[0];
    let dim = e.len();
    let mut times = taus.to_vec();
    times.sort_by(|a, b| b.total_cmp(a));
    let decay = |x: f64| -> Vec<f64> { e.iter().map(|ek| (-x * (ek - e0)).exp()).collect() };
    // e^{−(β−τ₁)H} O e^{−(τ₁−τ₂)H} O … O e^{−τ_k H}
    let mut prev = data.beta();
    let mut acc = Mat::<f64>::identity(dim, dim);
    for &t in &times {
        let d = decay(prev - t);
        for j in 0..dim {
            for i in 0..dim {
                acc[(i, j)] *= d[j];
            }
        }
        acc = acc.as_ref() * op.as_ref();
        prev = t;
    }
    let d = decay(prev);
    let trace: f64 = (0..dim).map(|i| acc[(i, i)] * d[i]).sum();
    let z: f64 = decay(data.beta()).iter().sum();
    trace / z
}

/// Four-point function minus its three pairings, for the registered
/// operator made mean-free by subtracting its thermal average.
pub fn wick_residual(data: &SpectralData, name: &str, taus: [f64; 4]) -> Result<Complex64> {
    check_times(data.beta(), &taus)?;
    let mut op = data.dense_elements(name)?;
    let mean = data.thermal_mean(name)?;
    for i in 0..op.nrows() {
        op[(i, i)] -= mean;
    }
    let pair = |a: usize, b: usize| ordered_trace(data, &op, &[taus[a], taus[b]]);
    let four = ordered_trace(data, &op, &taus);
    let pairs = pair(0, 1) * pair(2, 3) + pair(0, 2) * pair(1, 3) + pair(0, 3) * pair(1, 2);
    Ok(Complex64::from(four - pairs))
}

/// Residual of the quadrature b + b† of a free oscillator.
pub fn oscillator_wick_residual(omega: f64, beta: f64, cutoff: usize, taus: [f64; 4]) -> Result<Complex64> {
    let space = FockSpace::new(vec![cutoff], 0)?;
    let h = space.number(0)?.scale(omega);
    let mut data = diagonalize_with_floor(&h, beta, 0.0)?;
    data.register("X", &space.quadrature(0)?)?;
    wick_residual(&data, "X", taus)
}

/// Residual of the density at the probe site of a free lattice.
pub fn lattice_density_wick_residual(lattice: &LatticeSpec, beta: f64, taus: [f64; 4]) -> Result<Complex64> {
    lattice.validate()?;
    let space = FockSpace::new(vec![], lattice.sites * lattice.spin.degeneracy())?;
    let (h, density) = lattice_terms(&space, lattice)?;
    let mut data = diagonalize_with_floor(&h, beta, 0.0)?;
    data.register("n", &density)?;
    wick_residual(&data, "n", taus)
}
