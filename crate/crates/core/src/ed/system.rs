//! Scenario description and Hamiltonian assembly for exact diagonalization.
//!
//! Boson modes are laid out as `[cavity, bath modes..., oscillator]`.

use serde::{Deserialize, Serialize};

use super::space::{FockSpace, SparseOperator};
use super::spectrum::diagonalize;
use crate::bare::{BathModeSpec, BathSpec, Boundary, CouplingSpec, DetectorSpec, LatticeSpec, OscillatorSpec};
use crate::error::{Error, Result};

pub const DEFAULT_DIMENSION_BUDGET: usize = 20_000;
/// Target bound on the Gibbs weight of the top retained level of a free mode.
pub const THERMAL_WEIGHT_THRESHOLD: f64 = 1e-12;

/// Fermion ordering recorded alongside every lattice result.
pub const FERMION_CONVENTION: &str =
    "orbital = site * spin_degeneracy + spin; Jordan-Wigner string over lower orbitals; basis index = fermion_mask * boson_dim + boson_index";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Simulator {
    Oscillator(OscillatorSpec),
    Lattice(LatticeSpec),
}

/// Highest retained occupation per boson mode.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truncation {
    pub n_max_cavity: usize,
    pub n_max_bath_mode: Vec<usize>,
    /// Ignored for lattice simulators.
    #[serde(default)]
    pub n_max_oscillator: usize,
}

impl Truncation {
    pub fn cutoffs(&self, with_oscillator: bool) -> Vec<usize> {
        let mut c = vec![self.n_max_cavity];
        c.extend(&self.n_max_bath_mode);
        if with_oscillator {
            c.push(self.n_max_oscillator);
        }
        c
    }

    fn set(&mut self, mode: usize, value: usize) {
        let k = self.n_max_bath_mode.len();
        match mode {
            0 => self.n_max_cavity = value,
            m if m <= k => self.n_max_bath_mode[m - 1] = value,
            _ => self.n_max_oscillator = value,
        }
    }

    /// Copy with one mode's cutoff raised by `step`.
    pub fn raised(&self, mode: usize, step: usize) -> Truncation {
        let mut t = self.clone();
        let current = t.cutoffs(true)[mode];
        t.set(mode, current + step);
        t
    }
}

/// Smallest n with e^{−βωn}/Z_mode below the threshold.
pub fn thermal_cutoff(omega: f64, beta: f64) -> usize {
    let log_z = -(-(-beta * omega).exp()).ln_1p();
    let n = (-THERMAL_WEIGHT_THRESHOLD.ln() - log_z) / (beta * omega);
    (n.floor() as usize + 1).max(1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub detector: DetectorSpec,
    pub simulator: Simulator,
    pub coupling: CouplingSpec,
    pub beta: f64,
    /// `None` selects cutoffs automatically.
    #[serde(default)]
    pub truncation: Option<Truncation>,
    /// Couple through n − ⟨n⟩ rather than n for lattice simulators.
    #[serde(default = "default_true")]
    pub mean_subtract: bool,
    #[serde(default = "default_budget")]
    pub dimension_budget: usize,
}

fn default_true() -> bool {
    true
}

fn default_budget() -> usize {
    DEFAULT_DIMENSION_BUDGET
}

impl SystemSpec {
    pub fn bath_modes(&self) -> Result<&[BathModeSpec]> {
        match &self.detector.bath {
            BathSpec::Discrete { modes } => Ok(modes),
            BathSpec::Flat { .. } => Err(Error::SpecMismatch(
                "exact diagonalization needs a discrete bath".into(),
            )),
        }
    }

    pub fn has_oscillator(&self) -> bool {
        matches!(self.simulator, Simulator::Oscillator(_))
    }

    pub fn validate(&self) -> Result<()> {
        self.detector.validate()?;
        self.bath_modes()?;
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::Domain(format!("beta must be positive, got {}", self.beta)));
        }
        if !self.coupling.lambda.is_finite() {
            return Err(Error::Domain("lambda must be finite".into()));
        }
        match &self.simulator {
            Simulator::Oscillator(o) => o.validate()?,
            Simulator::Lattice(l) => l.validate()?,
        }
        if let Some(t) = &self.truncation {
            self.check_truncation(t)?;
        }
        Ok(())
    }

    fn check_truncation(&self, t: &Truncation) -> Result<()> {
        let modes = self.bath_modes()?;
        if t.n_max_bath_mode.len() != modes.len() {
            return Err(Error::Domain(format!(
                "{} bath cutoffs given for {} bath modes",
                t.n_max_bath_mode.len(),
                modes.len()
            )));
        }
        if t.cutoffs(self.has_oscillator()).iter().any(|c| *c < 1) {
            return Err(Error::Domain("every boson cutoff must be at least 1".into()));
        }
        Ok(())
    }

    /// Thermal-weight cutoffs for every mode.
    pub fn thermal_truncation(&self) -> Result<Truncation> {
        let modes = self.bath_modes()?;
        Ok(Truncation {
            n_max_cavity: thermal_cutoff(self.detector.omega_d, self.beta),
            n_max_bath_mode: modes.iter().map(|m| thermal_cutoff(m.frequency, self.beta)).collect(),
            n_max_oscillator: match &self.simulator {
                Simulator::Oscillator(o) => thermal_cutoff(o.omega_s, self.beta),
                Simulator::Lattice(_) => 0,
            },
        })
    }

    pub fn truncation_or_thermal(&self) -> Result<Truncation> {
        match &self.truncation {
            Some(t) => Ok(t.clone()),
            None => self.thermal_truncation(),
        }
    }

    pub fn orbitals(&self) -> usize {
        match &self.simulator {
            Simulator::Lattice(l) => l.sites * l.spin.degeneracy(),
            Simulator::Oscillator(_) => 0,
        }
    }

    /// Full Hilbert-space dimension under a truncation.
    pub fn dimension(&self, t: &Truncation) -> usize {
        let bosons: usize = t
            .cutoffs(self.has_oscillator())
            .iter()
            .map(|c| c + 1)
            .product();
        bosons << self.orbitals()
    }

    pub fn with_lambda(&self, lambda: f64) -> SystemSpec {
        SystemSpec {
            coupling: CouplingSpec { lambda },
            ..self.clone()
        }
    }
}

/// Which subsystems to include.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    Full,
    Detector,
    Simulator,
}

/// An assembled Hamiltonian with the operators read out of it.
#[derive(Clone, Debug)]
pub struct Model {
    pub space: FockSpace,
    pub hamiltonian: SparseOperator,
    /// a + a† of the cavity; absent for the simulator alone.
    pub cavity_quadrature: Option<SparseOperator>,
    /// Simulator coupling operator O_S; absent for the detector alone.
    pub simulator_operator: Option<SparseOperator>,
    /// ⟨n_{R0}⟩ of the isolated lattice, subtracted from O_S when requested.
    pub simulator_shift: f64,
}

/// H_T = H_R + H_S + λ·O_S·(a + a†) for the whole system.
pub fn build_hamiltonian(spec: &SystemSpec) -> Result<Model> {
    build_part(spec, &spec.truncation_or_thermal()?, Part::Full)
}

/// Hopping Hamiltonian and probe-site density of a lattice.
pub fn lattice_terms(space: &FockSpace, lat: &LatticeSpec) -> Result<(SparseOperator, SparseOperator)> {
    let deg = lat.spin.degeneracy();
    let dim = space.dimension();
    let mut h = SparseOperator::zeros(dim);
    let mut bonds: Vec<(usize, usize)> = (0..lat.sites - 1).map(|i| (i, i + 1)).collect();
    if lat.boundary == Boundary::Periodic {
        bonds.push((lat.sites - 1, 0));
    }
    for (i, j) in bonds {
        for s in 0..deg {
            h = h.add(&space.hopping(i * deg + s, j * deg + s)?.scale(-lat.hopping))?;
        }
    }
    let mut probe = SparseOperator::zeros(dim);
    for site in 0..lat.sites {
        for s in 0..deg {
            let n = space.density(site * deg + s)?;
            if lat.mu != 0.0 {
                h = h.add(&n.scale(-lat.mu))?;
            }
            if site == lat.probe_site - 1 {
                probe = probe.add(&n)?;
            }
        }
    }
    Ok((h, probe))
}

/// ⟨n_{R0}⟩ in the Gibbs state of the isolated lattice.
pub fn lattice_probe_mean(lat: &LatticeSpec, beta: f64) -> Result<f64> {
    let space = FockSpace::new(vec![], lat.sites * lat.spin.degeneracy())?;
    let (h, probe) = lattice_terms(&space, lat)?;
    let mut data = diagonalize(&h, beta)?;
    data.register("n", &probe)?;
    data.thermal_mean("n")
}

/// Assembles one subsystem, or the whole, under a fixed truncation.
pub fn build_part(spec: &SystemSpec, t: &Truncation, part: Part) -> Result<Model> {
    spec.validate()?;
    spec.check_truncation(t)?;
    let modes = spec.bath_modes()?;
    let with_detector = part != Part::Simulator;
    let with_simulator = part != Part::Detector;
    let mut cutoffs = Vec::new();
    if with_detector {
        cutoffs.push(t.n_max_cavity);
        cutoffs.extend(&t.n_max_bath_mode);
    }
    if with_simulator && spec.has_oscillator() {
        cutoffs.push(t.n_max_oscillator);
    }
    let orbitals = if with_simulator { spec.orbitals() } else { 0 };
    let space = FockSpace::new(cutoffs, orbitals)?;
    let dim = space.dimension();
    if dim > spec.dimension_budget {
        return Err(Error::Dimension {
            dimension: dim,
            budget: spec.dimension_budget,
        });
    }
    let mut h = SparseOperator::zeros(dim);
    let mut cavity_quadrature = None;
    if with_detector {
        let xa = space.quadrature(0)?;
        h = h.add(&space.number(0)?.scale(spec.detector.omega_d))?;
        for (i, m) in modes.iter().enumerate() {
            h = h.add(&space.number(i + 1)?.scale(m.frequency))?;
            h = h.add(&xa.mul(&space.quadrature(i + 1)?)?.scale(m.coupling))?;
        }
        cavity_quadrature = Some(xa);
    }
    let mut simulator_operator = None;
    let mut simulator_shift = 0.0;
    if with_simulator {
        let op = match &spec.simulator {
            Simulator::Oscillator(o) => {
                let k = space.modes() - 1;
                h = h.add(&space.number(k)?.scale(o.omega_s))?;
                space.quadrature(k)?
            }
            Simulator::Lattice(lat) => {
                let (hs, probe) = lattice_terms(&space, lat)?;
                h = h.add(&hs)?;
                if spec.mean_subtract {
                    simulator_shift = lattice_probe_mean(lat, spec.beta)?;
                    probe.add(&space.identity().scale(-simulator_shift))?
                } else {
                    probe
                }
            }
        };
        simulator_operator = Some(op);
    }
    if part == Part::Full && spec.coupling.lambda != 0.0 {
        let (xa, os) = (cavity_quadrature.as_ref(), simulator_operator.as_ref());
        let coupling = os.unwrap().mul(xa.unwrap())?.scale(spec.coupling.lambda);
        h = h.add(&coupling)?;
    }
    Ok(Model {
        space,
        hamiltonian: h,
        cavity_quadrature,
        simulator_operator,
        simulator_shift,
    })
}
