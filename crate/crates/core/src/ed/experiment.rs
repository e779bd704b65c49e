//! End-to-end readout with every correlator taken from exact diagonalization.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::space::FockSpace;
use super::spectrum::{diagonalize, SpectralData, DEFAULT_WEIGHT_FLOOR};
use super::system::{
    build_part, Model, Part, Simulator, SystemSpec, Truncation, FERMION_CONVENTION, THERMAL_WEIGHT_THRESHOLD,
};
use crate::bare::cavity_bare;
use crate::dyson::{extract, DressedSet};
use crate::error::{Error, Result};
use crate::grid::{CorrelatorSeries, MatsubaraGrid, Statistics};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReadoutOptions {
    /// Raise thermal cutoffs until the top retained level of every mode
    /// carries less than `population_tolerance · λ²` of the coupled Gibbs
    /// state. Extraction divides by λ², so truncation errors scale with it.
    /// The bound is never tighter than the thermal-weight threshold.
    pub adaptive_truncation: bool,
    pub population_tolerance: f64,
    /// Re-run with each cutoff raised by `truncation_step` and fail if any
    /// correlator moves by more than `truncation_tolerance` (relative).
    pub verify_truncation: bool,
    pub truncation_step: usize,
    pub truncation_tolerance: f64,
}

impl Default for ReadoutOptions {
    fn default() -> Self {
        ReadoutOptions {
            adaptive_truncation: true,
            population_tolerance: 3e-10,
            verify_truncation: false,
            truncation_step: 4,
            truncation_tolerance: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyDeviation {
    pub n: i64,
    pub omega: f64,
    pub absolute: f64,
    pub relative: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutReport {
    pub lambda: f64,
    pub truncation: Truncation,
    pub dimension: usize,
    /// Gibbs weight of the top retained level, per boson mode.
    pub top_level_populations: Vec<f64>,
    pub deviations: Vec<FrequencyDeviation>,
    pub max_relative_deviation: f64,
    /// ‖extracted − C_S0‖₂ over the stored grid.
    pub deviation_norm: f64,
    /// Largest relative change seen in the truncation check, if it ran.
    pub truncation_change: Option<f64>,
}

/// Full-system spectrum together with the model it came from.
pub struct Solved {
    pub model: Model,
    pub spectrum: SpectralData,
}

fn solve(spec: &SystemSpec, t: &Truncation, part: Part) -> Result<Solved> {
    let model = build_part(spec, t, part)?;
    let mut spectrum = diagonalize(&model.hamiltonian, spec.beta)?;
    if let Some(x) = &model.cavity_quadrature {
        spectrum.register("X_cavity", x)?;
    }
    if let Some(o) = &model.simulator_operator {
        spectrum.register("O_sim", o)?;
    }
    Ok(Solved { model, spectrum })
}

fn level_population(space: &FockSpace, spectrum: &SpectralData, mode: usize, level: usize) -> f64 {
    spectrum.diagonal_expectation(|i| if space.occupation(i, mode) == level { 1.0 } else { 0.0 })
}

/// Top-level populations per boson mode of a solved model.
pub fn top_level_populations(solved: &Solved) -> Vec<f64> {
    let space = &solved.model.space;
    (0..space.modes())
        .map(|k| level_population(space, &solved.spectrum, k, space.cutoffs()[k]))
        .collect()
}

/// Cutoffs for the coupled system, and its spectrum under them.
///
/// Starts from the thermal-weight rule. With `adaptive_truncation`, each mode
/// whose top level is too populated is extended by the number of levels a
/// geometric fit of its two highest populations predicts, until all modes
/// pass or the dimension budget is reached.
pub fn choose_truncation(spec: &SystemSpec, options: &ReadoutOptions) -> Result<(Truncation, Solved)> {
    spec.validate()?;
    let mut t = spec.truncation_or_thermal()?;
    let adaptive = options.adaptive_truncation && spec.truncation.is_none();
    let tolerance = (options.population_tolerance * spec.coupling.lambda.powi(2)).max(THERMAL_WEIGHT_THRESHOLD);
    for _ in 0..8 {
        let solved = solve(spec, &t, Part::Full)?;
        if !adaptive {
            return Ok((t, solved));
        }
        let space = solved.model.space.clone();
        let mut next = t.clone();
        let mut grew = false;
        for k in 0..space.modes() {
            let cut = space.cutoffs()[k];
            let top = level_population(&space, &solved.spectrum, k, cut);
            if top <= tolerance {
                continue;
            }
            let below = level_population(&space, &solved.spectrum, k, cut - 1);
            let ratio = if below > 0.0 { (top / below).clamp(1e-6, 0.9) } else { 0.5 };
            let extra = ((tolerance / top).ln() / ratio.ln()).ceil() as usize;
            next = next.raised(k, extra.clamp(1, 12));
            grew = true;
        }
        if !grew {
            return Ok((t, solved));
        }
        if spec.dimension(&next) > spec.dimension_budget {
            return Err(Error::Convergence(format!(
                "population criterion needs cutoffs {:?} (dimension {}) beyond the budget of {}",
                next.cutoffs(spec.has_oscillator()),
                spec.dimension(&next),
                spec.dimension_budget
            )));
        }
        t = next;
    }
    Err(Error::Convergence("cutoff refinement did not settle".into()))
}

struct Correlators {
    d_rb: CorrelatorSeries,
    c_s0: CorrelatorSeries,
    d_r: CorrelatorSeries,
    c_s: CorrelatorSeries,
}

fn correlators(spec: &SystemSpec, t: &Truncation, full: &Solved, grid: &MatsubaraGrid) -> Result<Correlators> {
    let detector = solve(spec, t, Part::Detector)?;
    let simulator = solve(spec, t, Part::Simulator)?;
    Ok(Correlators {
        d_rb: detector.spectrum.lehmann_autocorrelator("X_cavity", grid)?.with_label("D_RB"),
        c_s0: simulator.spectrum.lehmann_autocorrelator("O_sim", grid)?.with_label("C_S0"),
        d_r: full.spectrum.lehmann_autocorrelator("X_cavity", grid)?.with_label("D_R"),
        c_s: full.spectrum.lehmann_autocorrelator("O_sim", grid)?.with_label("C_S"),
    })
}

fn max_change(a: &Correlators, b: &Correlators) -> Result<f64> {
    let pairs = [(&a.d_rb, &b.d_rb), (&a.c_s0, &b.c_s0), (&a.d_r, &b.d_r), (&a.c_s, &b.c_s)];
    pairs
        .iter()
        .try_fold(0.0f64, |m, (x, y)| Ok(m.max(x.max_relative_deviation(y)?)))
}

/// D_RB, D_R, C_S0 and C_S from the oracle, the extracted series, and its
/// per-frequency deviation from C_S0.
pub fn readout_experiment(
    spec: &SystemSpec,
    grid: &MatsubaraGrid,
    options: &ReadoutOptions,
) -> Result<(DressedSet, ReadoutReport)> {
    if spec.coupling.lambda == 0.0 {
        return Err(Error::ExtractionUndefined);
    }
    if grid.statistics() != Statistics::Bosonic {
        return Err(Error::Statistics {
            expected: Statistics::Bosonic,
            found: grid.statistics(),
        });
    }
    if grid.beta().to_bits() != spec.beta.to_bits() {
        return Err(Error::Domain(format!(
            "grid beta {} differs from system beta {}",
            grid.beta(),
            spec.beta
        )));
    }
    let (t, full) = choose_truncation(spec, options)?;
    let populations = top_level_populations(&full);
    let corr = correlators(spec, &t, &full, grid)?;

    let mut truncation_change = None;
    if options.verify_truncation {
        let mut worst = 0.0f64;
        let modes = t.cutoffs(spec.has_oscillator()).len();
        for k in 0..modes {
            let bigger = t.raised(k, options.truncation_step);
            let solved = solve(spec, &bigger, Part::Full)?;
            let change = max_change(&corr, &correlators(spec, &bigger, &solved, grid)?)?;
            if change > options.truncation_tolerance {
                return Err(Error::Convergence(format!(
                    "raising cutoff of mode {k} by {} changes correlators by {change:.3e} (tolerance {:.1e})",
                    options.truncation_step, options.truncation_tolerance
                )));
            }
            worst = worst.max(change);
        }
        truncation_change = Some(worst);
    }

    let label = match spec.simulator {
        Simulator::Oscillator(_) => "C_S0_extracted",
        Simulator::Lattice(_) => "C_SL",
    };
    let extracted = extract(&corr.d_rb, &corr.d_r, spec.coupling.lambda)?.with_label(label);
    let rel = extracted.relative_deviation(&corr.c_s0)?;
    let deviations: Vec<FrequencyDeviation> = extracted
        .iter()
        .zip(corr.c_s0.values())
        .zip(&rel)
        .map(|(((n, omega, a), b), r)| FrequencyDeviation {
            n,
            omega,
            absolute: (a - b).norm(),
            relative: *r,
        })
        .collect();
    let deviation_norm = deviations.iter().map(|d| d.absolute.powi(2)).sum::<f64>().sqrt();
    let report = ReadoutReport {
        lambda: spec.coupling.lambda,
        dimension: spec.dimension(&t),
        truncation: t.clone(),
        top_level_populations: populations,
        max_relative_deviation: rel.iter().copied().fold(0.0, f64::max),
        deviations,
        deviation_norm,
        truncation_change,
    };

    let mut set = DressedSet {
        d_r0: cavity_bare(spec.detector.omega_d, grid)?.with_label("D_R0"),
        d_rb: corr.d_rb,
        d_r: corr.d_r,
        c_s0: corr.c_s0,
        c_s: Some(corr.c_s),
        c_sl: Some(extracted),
        provenance: BTreeMap::new(),
    };
    set.record("source", "exact diagonalization")?;
    set.record("system", spec)?;
    set.record("grid", grid)?;
    set.record("options", options)?;
    set.record("truncation", &t)?;
    set.record("weight_floor", DEFAULT_WEIGHT_FLOOR)?;
    set.record("simulator_shift", full.model.simulator_shift)?;
    if matches!(spec.simulator, Simulator::Lattice(_)) {
        set.record("fermion_convention", FERMION_CONVENTION)?;
    }
    set.record("correlators", "connected; D_RB from the detector alone, C_S0 from the simulator alone")?;
    Ok((set, report))
}
