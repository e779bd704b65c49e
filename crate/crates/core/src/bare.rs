//! Closed-form unperturbed correlators and bath insertions.
//!
//! The cavity and oscillator correlators are those of the quadrature
//! X = a + a†; the lattice is a one-dimensional tight-binding chain.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dyson::SelfEnergy;
use crate::error::{Error, Result};
use crate::grid::{CorrelatorSeries, MatsubaraGrid, Statistics};

/// Smallest |ωₙ² + ω²| accepted by the bosonic bare correlators.
pub const POLE_GUARD: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BathModeSpec {
    /// Coupling cᵢ to the cavity quadrature.
    pub coupling: f64,
    /// Mode frequency ωᵢ.
    pub frequency: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BathSpec {
    /// Flat spectral density J(ω) = κ with principal-value shift δω_d.
    Flat {
        kappa: f64,
        #[serde(default)]
        delta_omega_d: f64,
    },
    Discrete { modes: Vec<BathModeSpec> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorSpec {
    pub omega_d: f64,
    pub bath: BathSpec,
}

impl DetectorSpec {
    pub fn flat(omega_d: f64, kappa: f64, delta_omega_d: f64) -> Self {
        DetectorSpec {
            omega_d,
            bath: BathSpec::Flat {
                kappa,
                delta_omega_d,
            },
        }
    }

    pub fn discrete(omega_d: f64, modes: Vec<BathModeSpec>) -> Self {
        DetectorSpec {
            omega_d,
            bath: BathSpec::Discrete { modes },
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("omega_d", self.omega_d)?;
        match &self.bath {
            BathSpec::Flat {
                kappa,
                delta_omega_d,
            } => {
                if !(kappa.is_finite() && *kappa >= 0.0) {
                    return Err(Error::Domain(format!("kappa must be >= 0, got {kappa}")));
                }
                if !delta_omega_d.is_finite() {
                    return Err(Error::Domain("delta_omega_d must be finite".into()));
                }
            }
            BathSpec::Discrete { modes } => {
                for m in modes {
                    positive("bath frequency", m.frequency)?;
                    if !m.coupling.is_finite() {
                        return Err(Error::Domain("bath coupling must be finite".into()));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillatorSpec {
    pub omega_s: f64,
}

impl OscillatorSpec {
    pub fn validate(&self) -> Result<()> {
        positive("omega_s", self.omega_s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    #[default]
    Spinless,
    SpinHalf,
}

impl Spin {
    pub fn degeneracy(self) -> usize {
        match self {
            Spin::Spinless => 1,
            Spin::SpinHalf => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Periodic,
    Open,
}

/// One-dimensional tight-binding chain probed at a single site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub sites: usize,
    pub hopping: f64,
    #[serde(default)]
    pub mu: f64,
    #[serde(default)]
    pub spin: Spin,
    /// 1-based probe position R₀.
    #[serde(default = "default_probe_site")]
    pub probe_site: usize,
    #[serde(default)]
    pub boundary: Boundary,
}

fn default_probe_site() -> usize {
    1
}

impl LatticeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sites < 2 {
            return Err(Error::Domain(format!("lattice needs at least 2 sites, got {}", self.sites)));
        }
        if self.probe_site < 1 || self.probe_site > self.sites {
            return Err(Error::Domain(format!(
                "probe_site {} outside 1..={}",
                self.probe_site, self.sites
            )));
        }
        if !(self.hopping.is_finite() && self.mu.is_finite()) {
            return Err(Error::Domain("hopping and mu must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingSpec {
    pub lambda: f64,
}

/// How the flat-bath insertion treats negative Matsubara frequencies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FlatBathMode {
    /// Σ = δω_d − iκ at every frequency.
    #[default]
    PaperLiteral,
    /// Σ = δω_d − iκ·sign(ωₙ), real at ωₙ = 0; conjugate symmetric.
    Symmetric,
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive, got {x}")))
    }
}

fn require(grid: &MatsubaraGrid, stats: Statistics) -> Result<()> {
    if grid.statistics() == stats {
        Ok(())
    } else {
        Err(Error::Statistics {
            expected: stats,
            found: grid.statistics(),
        })
    }
}

/// 2ω/((iν)² − ω²) for a single bosonic mode.
fn mode_propagator(omega: f64, nu: f64) -> Result<f64> {
    let denom = nu * nu + omega * omega;
    if denom < POLE_GUARD {
        return Err(Error::Domain(format!("bosonic pole at omega_n = {nu}")));
    }
    Ok(-2.0 * omega / denom)
}

/// D_R0(iωₙ) = 2ω_d/((iωₙ)² − ω_d²) of the bare cavity quadrature.
pub fn cavity_bare(omega_d: f64, grid: &MatsubaraGrid) -> Result<CorrelatorSeries> {
    require(grid, Statistics::Bosonic)?;
    positive("omega_d", omega_d)?;
    let values = grid
        .frequencies()
        .into_iter()
        .map(|nu| mode_propagator(omega_d, nu).map(Complex64::from))
        .collect::<Result<Vec<_>>>()?;
    CorrelatorSeries::new(*grid, values, "D_R0")
}

/// Bose occupation (e^{βω} − 1)⁻¹.
pub fn thermal_occupation(omega: f64, beta: f64) -> f64 {
    1.0 / (beta * omega).exp_m1()
}

/// Imaginary-time bare cavity correlator for τ ∈ (−β, β]; τ = 0 is read as 0⁺.
pub fn cavity_bare_tau(omega_d: f64, beta: f64, tau: f64) -> Result<f64> {
    positive("omega_d", omega_d)?;
    positive("beta", beta)?;
    if !(tau > -beta && tau <= beta) {
        return Err(Error::TauDomain {
            tau,
            range: "(-beta, beta]",
        });
    }
    // −[e^{−ωτ}(n+1) + e^{ωτ}n] rewritten without e^{βω}; even in τ.
    let t = tau.abs();
    let norm = -(-beta * omega_d).exp_m1();
    Ok(-((-omega_d * t).exp() + (-omega_d * (beta - t)).exp()) / norm)
}

/// C_S0(iωₙ) = 2ω_s/((iωₙ)² − ω_s²) of the bare oscillator quadrature.
pub fn oscillator_bare(omega_s: f64, grid: &MatsubaraGrid) -> Result<CorrelatorSeries> {
    Ok(cavity_bare(omega_s, grid)?.with_label("C_S0"))
}

/// Flat-spectrum bath insertion.
pub fn flat_bath_self_energy(
    detector: &DetectorSpec,
    grid: &MatsubaraGrid,
    mode: FlatBathMode,
) -> Result<SelfEnergy> {
    require(grid, Statistics::Bosonic)?;
    detector.validate()?;
    let (kappa, shift) = match detector.bath {
        BathSpec::Flat {
            kappa,
            delta_omega_d,
        } => (kappa, delta_omega_d),
        BathSpec::Discrete { .. } => {
            return Err(Error::SpecMismatch(
                "flat_bath_self_energy needs a flat bath".into(),
            ))
        }
    };
    let values = grid
        .frequencies()
        .into_iter()
        .map(|nu| match mode {
            FlatBathMode::PaperLiteral => Complex64::new(shift, -kappa),
            FlatBathMode::Symmetric => {
                let sign = if nu > 0.0 {
                    1.0
                } else if nu < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                Complex64::new(shift, -kappa * sign)
            }
        })
        .collect();
    SelfEnergy::new(*grid, values)
}

/// Σ(iωₙ) = Σᵢ |cᵢ|² · 2ωᵢ/((iωₙ)² − ωᵢ²).
pub fn discrete_bath_self_energy(modes: &[BathModeSpec], grid: &MatsubaraGrid) -> Result<SelfEnergy> {
    require(grid, Statistics::Bosonic)?;
    for m in modes {
        positive("bath frequency", m.frequency)?;
    }
    let values = grid
        .frequencies()
        .into_iter()
        .map(|nu| {
            modes.iter().try_fold(0.0, |acc, m| {
                Ok(acc + m.coupling * m.coupling * mode_propagator(m.frequency, nu)?)
            })
        })
        .map(|v| v.map(Complex64::from))
        .collect::<Result<Vec<_>>>()?;
    SelfEnergy::new(*grid, values)
}

/// Bath insertion for either bath kind; `mode` only affects flat baths.
pub fn bath_self_energy(
    detector: &DetectorSpec,
    grid: &MatsubaraGrid,
    mode: FlatBathMode,
) -> Result<SelfEnergy> {
    match &detector.bath {
        BathSpec::Flat { .. } => flat_bath_self_energy(detector, grid, mode),
        BathSpec::Discrete { modes } => discrete_bath_self_energy(modes, grid),
    }
}

/// ε_k = −2t cos(2πk/L) − μ on a periodic chain.
pub fn dispersion(lattice: &LatticeSpec, k_index: usize) -> Result<f64> {
    lattice.validate()?;
    if lattice.boundary != Boundary::Periodic {
        return Err(Error::Unsupported(
            "momentum-space dispersion needs periodic boundaries".into(),
        ));
    }
    if k_index >= lattice.sites {
        return Err(Error::Domain(format!(
            "k index {k_index} outside 0..{}",
            lattice.sites
        )));
    }
    let k = 2.0 * PI * k_index as f64 / lattice.sites as f64;
    Ok(-2.0 * lattice.hopping * k.cos() - lattice.mu)
}

/// G₀(k, iωₙ) = 1/(iωₙ − ε_k).
pub fn free_fermion_propagator(epsilon_k: f64, grid: &MatsubaraGrid) -> Result<CorrelatorSeries> {
    require(grid, Statistics::Fermionic)?;
    Ok(CorrelatorSeries::from_fn(*grid, "G0", |_, nu| {
        Complex64::new(-epsilon_k, nu).inv()
    }))
}

/// Fermi function, evaluated without overflow.
pub fn fermi(epsilon: f64, beta: f64) -> f64 {
    let x = beta * epsilon;
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// [f(a) − f(b)] / (z + a − b) with the ωₙ = 0, a = b limit −βf(1−f).
fn bubble_term(a: f64, b: f64, nu: f64, beta: f64) -> Complex64 {
    let delta = a - b;
    let fa = fermi(a, beta);
    let fb = fermi(b, beta);
    let x = beta * delta;
    // f(a) − f(b) = −f(a)(1 − f(b))(e^{β(a−b)} − 1), cancellation-free near a = b
    let numerator = if x.abs() < 1.0 {
        -fa * (1.0 - fb) * x.exp_m1()
    } else {
        fa - fb
    };
    if nu == 0.0 {
        if x.abs() < 1e-12 {
            return Complex64::from(-beta * fa * (1.0 - fa));
        }
        if x.abs() < 1.0 {
            return Complex64::from(-fa * (1.0 - fb) * x.exp_m1() / delta);
        }
    }
    numerator / Complex64::new(delta, nu)
}

/// Particle-hole bubble Σ_{k,σ} [f(ε_k) − f(ε_{k+q})]/(iωₙ + ε_k − ε_{k+q}).
pub fn density_bubble(
    lattice: &LatticeSpec,
    q_index: usize,
    grid: &MatsubaraGrid,
) -> Result<CorrelatorSeries> {
    require(grid, Statistics::Bosonic)?;
    let l = lattice.sites;
    let eps = (0..l)
        .map(|k| dispersion(lattice, k))
        .collect::<Result<Vec<_>>>()?;
    let beta = grid.beta();
    let spin = lattice.spin.degeneracy() as f64;
    let q = q_index % l;
    Ok(CorrelatorSeries::from_fn(*grid, format!("bubble_q{q}"), |_, nu| {
        let sum: Complex64 = (0..l)
            .map(|k| bubble_term(eps[k], eps[(k + q) % l], nu, beta))
            .sum();
        sum * spin
    }))
}

/// Density-density correlator of a single site, (1/L²) Σ_q bubble(q).
pub fn site_density_bubble(lattice: &LatticeSpec, grid: &MatsubaraGrid) -> Result<CorrelatorSeries> {
    let l = lattice.sites;
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
    for q in 0..l {
        let b = density_bubble(lattice, q, grid)?;
        for (acc, v) in values.iter_mut().zip(b.values()) {
            *acc += v;
        }
    }
    let norm = 1.0 / (l * l) as f64;
    values.iter_mut().for_each(|v| *v *= norm);
    CorrelatorSeries::new(*grid, values, "C_S0_bubble")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn bgrid(beta: f64, n: usize) -> MatsubaraGrid {
        MatsubaraGrid::bosonic(beta, n).unwrap()
    }

    #[test]
    fn cavity_plug_in_values() {
        let g = bgrid(2.0 * PI, 3);
        let d = cavity_bare(1.0, &g).unwrap();
        assert_abs_diff_eq!(d.at(0).unwrap().re, -2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.at(1).unwrap().re, -1.0, epsilon = 1e-15);
        assert!(d.values().iter().all(|v| v.im == 0.0 && v.re < 0.0));
    }

    #[test]
    fn cavity_decays_monotonically_and_is_even() {
        let g = bgrid(5.0, 50);
        let d = cavity_bare(1.0, &g).unwrap();
        for n in 0..50 {
            assert!(d.at(n + 1).unwrap().norm() < d.at(n).unwrap().norm());
            assert_eq!(d.at(n), d.at(-n));
        }
    }

    #[test]
    fn oscillator_matches_cavity_form() {
        let g = bgrid(2.0 * PI, 4);
        let c = oscillator_bare(0.8, &g).unwrap();
        assert_abs_diff_eq!(c.at(0).unwrap().re, -2.5, epsilon = 1e-14);
        assert_eq!(c.values(), cavity_bare(0.8, &g).unwrap().values());
        assert_abs_diff_eq!(oscillator_bare(1.0, &g).unwrap().at(1).unwrap().re, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn bare_correlators_need_bosonic_grids() {
        let g = MatsubaraGrid::fermionic(1.0, 2).unwrap();
        assert!(matches!(cavity_bare(1.0, &g), Err(Error::Statistics { .. })));
        assert!(matches!(density_bubble(&chain(4, 0.0), 0, &g), Err(Error::Statistics { .. })));
        let b = bgrid(1.0, 2);
        assert!(matches!(free_fermion_propagator(0.0, &b), Err(Error::Statistics { .. })));
    }

    #[test]
    fn cavity_tau_limits() {
        // β → ∞ leaves only e^{−ω τ}
        let v = cavity_bare_tau(1.0, 400.0, 1.0).unwrap();
        assert_abs_diff_eq!(v, -(-1.0f64).exp(), epsilon = 1e-15);
        let beta = 3.0;
        let n = thermal_occupation(1.0, beta);
        let v0 = cavity_bare_tau(1.0, beta, 1e-12).unwrap();
        assert_abs_diff_eq!(v0, -(2.0 * n + 1.0), epsilon = 1e-10);
        for tau in [0.2, 1.1, 2.9] {
            let a = cavity_bare_tau(1.0, beta, tau - beta).unwrap();
            let b = cavity_bare_tau(1.0, beta, tau).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
        assert!(cavity_bare_tau(1.0, beta, -beta).is_err());
        assert!(cavity_bare_tau(1.0, beta, beta + 0.1).is_err());
    }

    #[test]
    fn cavity_tau_matches_textbook_form() {
        let (w, beta) = (0.7, 2.0);
        let n = thermal_occupation(w, beta);
        for tau in [0.1, 0.9, 1.7] {
            let direct = -((-w * tau).exp() * (n + 1.0) + (w * tau).exp() * n);
            assert_abs_diff_eq!(cavity_bare_tau(w, beta, tau).unwrap(), direct, epsilon = 1e-13);
            let mirrored = -((w * tau).exp() * n + (-w * -tau).exp() * 0.0 + (-w * tau).exp() * (n + 1.0));
            assert_abs_diff_eq!(cavity_bare_tau(w, beta, -tau).unwrap(), mirrored, epsilon = 1e-13);
        }
    }

    #[test]
    fn flat_bath_modes() {
        let g = bgrid(5.0, 4);
        let det = DetectorSpec::flat(1.0, 0.1, 0.0);
        let lit = flat_bath_self_energy(&det, &g, FlatBathMode::PaperLiteral).unwrap();
        assert!(lit.values().iter().all(|v| *v == Complex64::new(0.0, -0.1)));
        let sym = flat_bath_self_energy(&det, &g, FlatBathMode::Symmetric).unwrap();
        let s = sym.as_series("s");
        assert_eq!(s.conjugate_symmetry_defect(), 0.0);
        assert_eq!(s.at(-1).unwrap(), s.at(1).unwrap().conj());
        assert_eq!(s.at(0).unwrap(), Complex64::new(0.0, 0.0));
        let zero = flat_bath_self_energy(&DetectorSpec::flat(1.0, 0.0, 0.0), &g, FlatBathMode::PaperLiteral).unwrap();
        assert!(zero.values().iter().all(|v| v.norm() == 0.0));
        let disc = DetectorSpec::discrete(1.0, vec![]);
        assert!(matches!(
            flat_bath_self_energy(&disc, &g, FlatBathMode::PaperLiteral),
            Err(Error::SpecMismatch(_))
        ));
    }

    #[test]
    fn discrete_bath_values() {
        let g = bgrid(5.0, 6);
        let one = vec![BathModeSpec { coupling: 0.1, frequency: 1.0 }];
        let s = discrete_bath_self_energy(&one, &g).unwrap();
        assert_abs_diff_eq!(s.values()[g.position(0).unwrap()].re, -0.02, epsilon = 1e-16);
        let empty = discrete_bath_self_energy(&[], &g).unwrap();
        assert!(empty.values().iter().all(|v| v.norm() == 0.0));
        let twice = discrete_bath_self_energy(&[one[0].clone(), one[0].clone()], &g).unwrap();
        let doubled = discrete_bath_self_energy(
            &[BathModeSpec { coupling: 0.1 * 2f64.sqrt(), frequency: 1.0 }],
            &g,
        )
        .unwrap();
        for (a, b) in twice.values().iter().zip(doubled.values()) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-15);
        }
    }

    fn chain(l: usize, mu: f64) -> LatticeSpec {
        LatticeSpec {
            sites: l,
            hopping: 1.0,
            mu,
            spin: Spin::Spinless,
            probe_site: 1,
            boundary: Boundary::Periodic,
        }
    }

    #[test]
    fn dispersion_values() {
        let lat = chain(4, 0.0);
        assert_abs_diff_eq!(dispersion(&lat, 0).unwrap(), -2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dispersion(&lat, 1).unwrap(), 0.0, epsilon = 1e-15);
        let lat8 = chain(8, 0.0);
        for k in 0..4 {
            assert_abs_diff_eq!(
                dispersion(&lat8, k).unwrap(),
                -dispersion(&lat8, k + 4).unwrap(),
                epsilon = 1e-15
            );
        }
        let open = LatticeSpec { boundary: Boundary::Open, ..lat.clone() };
        assert!(matches!(dispersion(&open, 0), Err(Error::Unsupported(_))));
        assert!(dispersion(&lat, 4).is_err());
    }

    #[test]
    fn propagator_values() {
        let g = MatsubaraGrid::fermionic(PI, 6).unwrap();
        let p = free_fermion_propagator(0.0, &g).unwrap();
        assert_abs_diff_eq!((p.at(1).unwrap() - Complex64::new(0.0, -1.0)).norm(), 0.0, epsilon = 1e-15);
        let p = free_fermion_propagator(0.37, &g).unwrap();
        assert_eq!(p.conjugate_symmetry_defect(), 0.0);
        for (_, nu, v) in p.iter() {
            assert!(v.norm() <= 1.0 / nu.abs());
        }
    }

    #[test]
    fn bubble_q_zero_vanishes_off_static() {
        let g = bgrid(5.0, 8);
        let b = density_bubble(&chain(4, 0.0), 0, &g).unwrap();
        for (n, _, v) in b.iter() {
            if n != 0 {
                assert_eq!(v.norm(), 0.0);
            }
        }
        // static q=0 value is −β Σ f(1−f), not zero
        assert!(b.at(0).unwrap().re < 0.0);
    }

    #[test]
    fn bubble_of_empty_band_vanishes() {
        let g = bgrid(200.0, 8);
        for q in 0..6 {
            let b = density_bubble(&chain(6, -50.0), q, &g).unwrap();
            assert!(b.max_abs() < 1e-300);
        }
    }

    #[test]
    fn bubble_static_value_is_non_positive_and_real() {
        let g = bgrid(3.0, 2);
        let lat = LatticeSpec { spin: Spin::SpinHalf, ..chain(6, 0.3) };
        for q in 0..6 {
            let v = density_bubble(&lat, q, &g).unwrap().at(0).unwrap();
            assert!(v.re <= 0.0);
            assert_eq!(v.im, 0.0);
        }
    }

    #[test]
    fn spin_half_doubles_bubble() {
        let g = bgrid(2.0, 5);
        let a = density_bubble(&chain(5, 0.2), 2, &g).unwrap();
        let b = density_bubble(&LatticeSpec { spin: Spin::SpinHalf, ..chain(5, 0.2) }, 2, &g).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert_abs_diff_eq!((2.0 * x - y).norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn fermi_is_stable() {
        assert_eq!(fermi(1e6, 1.0), 0.0);
        assert_eq!(fermi(-1e6, 1.0), 1.0);
        assert_abs_diff_eq!(fermi(0.0, 7.0), 0.5, epsilon = 1e-16);
    }
}
