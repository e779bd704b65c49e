//! Scalar Dyson resummation and the readout extraction formulas.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use num_complex::{Complex, Complex64};
use serde::Serialize;
use serde_json::Value;
use twofloat::TwoFloat;

use crate::bare::{bath_self_energy, cavity_bare, oscillator_bare, DetectorSpec, FlatBathMode};
use crate::error::{Error, Result};
use crate::grid::{CorrelatorSeries, MatsubaraGrid};
use crate::precision::{cdiv, cinv, div, magnitude, widen};

/// Minimum accepted |1 − G·Σ|.
pub const DYSON_POLE_GUARD: f64 = 1e-12;
/// Magnitude below which a correlator value is not inverted.
pub const DIVISION_FLOOR: f64 = 1e-300;

/// Insertion Σ(iωₙ) on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SelfEnergy {
    grid: MatsubaraGrid,
    values: Vec<Complex64>,
}

impl SelfEnergy {
    pub fn new(grid: MatsubaraGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Domain(format!(
                "self-energy has {} values but the grid has {} frequencies",
                values.len(),
                grid.len()
            )));
        }
        Ok(SelfEnergy { grid, values })
    }

    pub fn zeros(grid: MatsubaraGrid) -> Self {
        SelfEnergy {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// |λ|²·C as an insertion.
    pub fn from_series(series: &CorrelatorSeries, weight: f64) -> Self {
        SelfEnergy {
            grid: *series.grid(),
            values: series.values().iter().map(|v| v * weight).collect(),
        }
    }

    pub fn grid(&self) -> &MatsubaraGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn as_series(&self, label: &str) -> CorrelatorSeries {
        CorrelatorSeries::from_fn(self.grid, label, |n, _| {
            self.values[self.grid.position(n).unwrap()]
        })
    }

    pub fn add(&self, other: &SelfEnergy) -> Result<SelfEnergy> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        SelfEnergy::new(self.grid, values)
    }
}

/// bare / (1 − bare·Σ) at every stored frequency.
///
/// The algebra runs in double-double and the result keeps its low-order
/// words, so a later [`extract`] can resolve insertions far below the
/// resolution of a double.
pub fn dyson_solve(bare: &CorrelatorSeries, sigma: &SelfEnergy) -> Result<CorrelatorSeries> {
    if !bare.grid().same_as(sigma.grid()) {
        return Err(Error::GridMismatch);
    }
    let grid = *bare.grid();
    let one = Complex::new(TwoFloat::from(1.0), TwoFloat::from(0.0));
    let values = (0..grid.len())
        .map(|p| {
            let g = bare.extended(p);
            let denom = one - g * widen(sigma.values[p]);
            let size = magnitude(&denom);
            if size < DYSON_POLE_GUARD {
                Err(Error::NearSingular {
                    n: grid.index(p),
                    magnitude: size,
                })
            } else {
                Ok(cdiv(g, denom))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    CorrelatorSeries::from_extended(grid, values, bare.label())
}

/// D_RB: the cavity dressed by its bath.
pub fn detector_with_bath(
    detector: &DetectorSpec,
    grid: &MatsubaraGrid,
    mode: FlatBathMode,
) -> Result<CorrelatorSeries> {
    let bare = cavity_bare(detector.omega_d, grid)?;
    let sigma = bath_self_energy(detector, grid, mode)?;
    Ok(dyson_solve(&bare, &sigma)?.with_label("D_RB"))
}

fn coupled(
    outer: &CorrelatorSeries,
    inner: &CorrelatorSeries,
    lambda: f64,
    label: &str,
) -> Result<CorrelatorSeries> {
    outer.check_same_grid(inner)?;
    // λ²·inner rounded once; extract divides by the same double-double λ²
    let l = TwoFloat::from(lambda);
    let l2 = l * l;
    let values = (0..inner.len())
        .map(|p| {
            let v = inner.extended(p);
            Complex64::new(f64::from(v.re * l2), f64::from(v.im * l2))
        })
        .collect();
    let sigma = SelfEnergy::new(*inner.grid(), values)?;
    Ok(dyson_solve(outer, &sigma)?.with_label(label))
}

/// D_R = D_RB / (1 − λ²·D_RB·C_S0).
pub fn detector_full_oscillator(
    d_rb: &CorrelatorSeries,
    c_s0: &CorrelatorSeries,
    lambda: f64,
) -> Result<CorrelatorSeries> {
    coupled(d_rb, c_s0, lambda, "D_R")
}

/// C_S = C_S0 / (1 − λ²·C_S0·D_RB).
pub fn simulator_full(
    c_s0: &CorrelatorSeries,
    d_rb: &CorrelatorSeries,
    lambda: f64,
) -> Result<CorrelatorSeries> {
    coupled(c_s0, d_rb, lambda, "C_S")
}

/// D_R = D_RB / (1 − λ²·D_RB·C_SL) with an approximate irreducible insertion.
pub fn detector_full_fermion(
    d_rb: &CorrelatorSeries,
    c_sl: &CorrelatorSeries,
    lambda: f64,
) -> Result<CorrelatorSeries> {
    coupled(d_rb, c_sl, lambda, "D_R")
}

/// (1/D_RB − 1/D_R)/λ².
pub fn extract(d_rb: &CorrelatorSeries, d_r: &CorrelatorSeries, lambda: f64) -> Result<CorrelatorSeries> {
    if lambda == 0.0 {
        return Err(Error::ExtractionUndefined);
    }
    d_rb.check_same_grid(d_r)?;
    let grid = *d_rb.grid();
    let l = TwoFloat::from(lambda);
    let l2 = l * l;
    let values = (0..grid.len())
        .map(|p| {
            let (b, r) = (d_rb.extended(p), d_r.extended(p));
            if magnitude(&b) < DIVISION_FLOOR || magnitude(&r) < DIVISION_FLOOR {
                return Err(Error::Division { n: grid.index(p) });
            }
            let diff = cinv(b) - cinv(r);
            Ok(Complex::new(div(diff.re, l2), div(diff.im, l2)))
        })
        .collect::<Result<Vec<_>>>()?;
    CorrelatorSeries::from_extended(grid, values, "C_extracted")
}

/// Every series produced for one scenario, plus the settings that made them.
#[derive(Clone, Debug)]
pub struct DressedSet {
    pub d_r0: CorrelatorSeries,
    pub d_rb: CorrelatorSeries,
    pub d_r: CorrelatorSeries,
    pub c_s0: CorrelatorSeries,
    pub c_s: Option<CorrelatorSeries>,
    pub c_sl: Option<CorrelatorSeries>,
    pub provenance: BTreeMap<String, Value>,
}

impl DressedSet {
    pub fn series(&self) -> Vec<&CorrelatorSeries> {
        let mut out = vec![&self.d_r0, &self.d_rb, &self.d_r, &self.c_s0];
        out.extend(self.c_s.iter());
        out.extend(self.c_sl.iter());
        out
    }

    pub fn grid(&self) -> &MatsubaraGrid {
        self.d_r0.grid()
    }

    pub fn record(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        self.provenance.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    /// One CSV and one JSON per series, plus `provenance.json`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for s in self.series() {
            s.save(dir, s.label())?;
        }
        let text = serde_json::to_string_pretty(&self.provenance)?;
        fs::write(dir.join("provenance.json"), text)?;
        Ok(())
    }
}

/// Closed-form oscillator readout: cavity + bath + harmonic simulator.
pub fn dress_oscillator(
    detector: &DetectorSpec,
    omega_s: f64,
    lambda: f64,
    grid: &MatsubaraGrid,
    mode: FlatBathMode,
) -> Result<DressedSet> {
    let d_r0 = cavity_bare(detector.omega_d, grid)?;
    let d_rb = detector_with_bath(detector, grid, mode)?;
    let c_s0 = oscillator_bare(omega_s, grid)?;
    let d_r = detector_full_oscillator(&d_rb, &c_s0, lambda)?;
    let c_s = simulator_full(&c_s0, &d_rb, lambda)?;
    let mut set = DressedSet {
        d_r0,
        d_rb,
        d_r,
        c_s0,
        c_s: Some(c_s),
        c_sl: None,
        provenance: BTreeMap::new(),
    };
    set.record("scenario", "oscillator")?;
    set.record("detector", detector)?;
    set.record("omega_s", omega_s)?;
    set.record("lambda", lambda)?;
    set.record("grid", grid)?;
    set.record("bath_mode", mode)?;
    set.record("pole_guard", DYSON_POLE_GUARD)?;
    Ok(set)
}

/// Closed-form fermion readout with the bubble as the irreducible insertion.
pub fn dress_fermion(
    detector: &DetectorSpec,
    lattice: &crate::bare::LatticeSpec,
    lambda: f64,
    grid: &MatsubaraGrid,
    mode: FlatBathMode,
) -> Result<DressedSet> {
    let d_r0 = cavity_bare(detector.omega_d, grid)?;
    let d_rb = detector_with_bath(detector, grid, mode)?;
    let c_s0 = crate::bare::site_density_bubble(lattice, grid)?.with_label("C_S0");
    let d_r = detector_full_fermion(&d_rb, &c_s0, lambda)?;
    let c_sl = extract(&d_rb, &d_r, lambda)
        .ok()
        .map(|s| s.with_label("C_SL"));
    let mut set = DressedSet {
        d_r0,
        d_rb,
        d_r,
        c_s0,
        c_s: None,
        c_sl,
        provenance: BTreeMap::new(),
    };
    set.record("scenario", "fermion")?;
    set.record("detector", detector)?;
    set.record("lattice", lattice)?;
    set.record("lambda", lambda)?;
    set.record("grid", grid)?;
    set.record("bath_mode", mode)?;
    set.record("pole_guard", DYSON_POLE_GUARD)?;
    set.record("c_sl_approximation", "site-local density bubble")?;
    Ok(set)
}
