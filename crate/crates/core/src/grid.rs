//! Matsubara frequency grids, imaginary-time series and the transforms
//! between the two domains.
//!
//! Conventions (ħ = k_B = 1):
//!
//! ```text
//! C(iωₙ) = ∫₀^β dτ e^{iωₙτ} C(τ)
//! C(τ)   = (1/β) Σₙ e^{−iωₙτ} C(iωₙ)
//! ```
//!
//! with ωₙ = 2πn/β for bosons (n ∈ [−N, N]) and ωₙ = π(2n−1)/β for
//! fermions (n ∈ [−N+1, N]).

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::{Complex, Complex64};
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};

/// Default τ mesh: number of intervals on [0, β].
pub const DEFAULT_TAU_MESH: usize = 2048;
/// Default grid half-width N.
pub const DEFAULT_GRID_N: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Bosonic,
    Fermionic,
}

impl Statistics {
    /// ξ in C(τ − β) = ξ C(τ): +1 for bosons, −1 for fermions.
    pub fn sign(self) -> f64 {
        match self {
            Statistics::Bosonic => 1.0,
            Statistics::Fermionic => -1.0,
        }
    }

    fn expect(self, found: Statistics) -> Result<()> {
        if self == found {
            Ok(())
        } else {
            Err(Error::Statistics {
                expected: self,
                found,
            })
        }
    }
}

/// A finite symmetric set of Matsubara frequencies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatsubaraGrid {
    beta: f64,
    statistics: Statistics,
    n_max: usize,
}

/// Builds a grid; see [`MatsubaraGrid::new`].
pub fn make_grid(beta: f64, statistics: Statistics, n_max: usize) -> Result<MatsubaraGrid> {
    MatsubaraGrid::new(beta, statistics, n_max)
}

impl MatsubaraGrid {
    pub fn new(beta: f64, statistics: Statistics, n_max: usize) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::Domain(format!("beta must be positive, got {beta}")));
        }
        if n_max == 0 {
            return Err(Error::Domain("grid size N must be at least 1".into()));
        }
        Ok(MatsubaraGrid {
            beta,
            statistics,
            n_max,
        })
    }

    pub fn bosonic(beta: f64, n_max: usize) -> Result<Self> {
        Self::new(beta, Statistics::Bosonic, n_max)
    }

    pub fn fermionic(beta: f64, n_max: usize) -> Result<Self> {
        Self::new(beta, Statistics::Fermionic, n_max)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn len(&self) -> usize {
        match self.statistics {
            Statistics::Bosonic => 2 * self.n_max + 1,
            Statistics::Fermionic => 2 * self.n_max,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Lowest Matsubara index stored.
    pub fn first_index(&self) -> i64 {
        match self.statistics {
            Statistics::Bosonic => -(self.n_max as i64),
            Statistics::Fermionic => 1 - self.n_max as i64,
        }
    }

    pub fn last_index(&self) -> i64 {
        self.n_max as i64
    }

    /// Matsubara index n of storage position `pos`.
    pub fn index(&self, pos: usize) -> i64 {
        self.first_index() + pos as i64
    }

    /// Storage position of Matsubara index `n`, if stored.
    pub fn position(&self, n: i64) -> Option<usize> {
        if n < self.first_index() || n > self.last_index() {
            None
        } else {
            Some((n - self.first_index()) as usize)
        }
    }

    /// ωₙ for an arbitrary integer n (not restricted to the stored range).
    pub fn frequency_of(&self, n: i64) -> f64 {
        match self.statistics {
            Statistics::Bosonic => 2.0 * PI * n as f64 / self.beta,
            Statistics::Fermionic => PI * (2 * n - 1) as f64 / self.beta,
        }
    }

    pub fn frequency(&self, pos: usize) -> f64 {
        self.frequency_of(self.index(pos))
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.len()).map(|p| self.frequency(p)).collect()
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> + '_ {
        self.first_index()..=self.last_index()
    }

    /// Position holding −ωₙ for the frequency stored at `pos`.
    pub fn mirror(&self, pos: usize) -> usize {
        self.len() - 1 - pos
    }

    /// Positions with ωₙ > 0, ascending.
    pub fn positive_positions(&self) -> impl Iterator<Item = usize> + '_ {
        let start = self.position(1).expect("n = 1 is always stored");
        start..self.len()
    }

    pub fn max_frequency(&self) -> f64 {
        self.frequency_of(self.last_index())
    }

    /// Whether two grids describe the same frequencies.
    pub fn same_as(&self, other: &MatsubaraGrid) -> bool {
        self.statistics == other.statistics
            && self.n_max == other.n_max
            && self.beta.to_bits() == other.beta.to_bits()
    }
}

/// Complex correlator values on a Matsubara grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelatorSeries {
    grid: MatsubaraGrid,
    values: Vec<Complex64>,
    /// Low-order words of double-double values, when a producer keeps them.
    low: Option<Vec<Complex64>>,
    label: String,
    metadata: BTreeMap<String, String>,
}

impl CorrelatorSeries {
    pub fn new(grid: MatsubaraGrid, values: Vec<Complex64>, label: impl Into<String>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Domain(format!(
                "series has {} values but the grid has {} frequencies",
                values.len(),
                grid.len()
            )));
        }
        Ok(CorrelatorSeries {
            grid,
            values,
            low: None,
            label: label.into(),
            metadata: BTreeMap::new(),
        })
    }

    /// Evaluates `f(n, ωₙ)` at every stored frequency.
    pub fn from_fn(
        grid: MatsubaraGrid,
        label: impl Into<String>,
        mut f: impl FnMut(i64, f64) -> Complex64,
    ) -> Self {
        let values = (0..grid.len())
            .map(|p| f(grid.index(p), grid.frequency(p)))
            .collect();
        CorrelatorSeries {
            grid,
            values,
            low: None,
            label: label.into(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn zeros(grid: MatsubaraGrid, label: impl Into<String>) -> Self {
        Self::from_fn(grid, label, |_, _| Complex64::new(0.0, 0.0))
    }

    pub fn grid(&self) -> &MatsubaraGrid {
        &self.grid
    }

    pub fn statistics(&self) -> Statistics {
        self.grid.statistics
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Builds a series from double-double values, keeping both words.
    pub fn from_extended(
        grid: MatsubaraGrid,
        values: Vec<Complex<TwoFloat>>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let hi = values.iter().map(|v| Complex64::new(v.re.hi(), v.im.hi())).collect();
        let lo = values.iter().map(|v| Complex64::new(v.re.lo(), v.im.lo())).collect();
        let mut s = CorrelatorSeries::new(grid, hi, label)?;
        s.low = Some(lo);
        Ok(s)
    }

    pub fn low_parts(&self) -> Option<&[Complex64]> {
        self.low.as_deref()
    }

    /// Value at storage position `pos` including any low-order word.
    pub fn extended(&self, pos: usize) -> Complex<TwoFloat> {
        let hi = self.values[pos];
        let lo = self.low.as_ref().map_or(Complex64::new(0.0, 0.0), |l| l[pos]);
        Complex::new(
            TwoFloat::from(hi.re) + lo.re,
            TwoFloat::from(hi.im) + lo.im,
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn set_label(&mut self, label: impl Into<String>) {
        self.label = label.into();
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn with_metadata(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.metadata.insert(key.into(), value.to_string());
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at Matsubara index `n`.
    pub fn at(&self, n: i64) -> Option<Complex64> {
        self.grid.position(n).map(|p| self.values[p])
    }

    /// `(n, ωₙ, value)` triples in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64, Complex64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(p, v)| (self.grid.index(p), self.grid.frequency(p), *v))
    }

    /// max |value(−ωₙ) − conj(value(ωₙ))|.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        (0..self.len())
            .map(|p| (self.values[self.grid.mirror(p)] - self.values[p].conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Euclidean norm over the stored frequencies.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub(crate) fn check_same_grid(&self, other: &CorrelatorSeries) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Pointwise combination of two series on the same grid.
    pub fn zip_map(
        &self,
        other: &CorrelatorSeries,
        label: impl Into<String>,
        mut f: impl FnMut(Complex64, Complex64) -> Complex64,
    ) -> Result<CorrelatorSeries> {
        self.check_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| f(*a, *b))
            .collect();
        CorrelatorSeries::new(self.grid, values, label)
    }

    pub fn map(&self, label: impl Into<String>, f: impl Fn(Complex64) -> Complex64) -> Self {
        CorrelatorSeries {
            grid: self.grid,
            values: self.values.iter().map(|v| f(*v)).collect(),
            low: None,
            label: label.into(),
            metadata: BTreeMap::new(),
        }
    }

    /// Per-frequency |a − b| / |b| with `self` as a and `reference` as b.
    /// Falls back to the absolute deviation where the reference vanishes.
    pub fn relative_deviation(&self, reference: &CorrelatorSeries) -> Result<Vec<f64>> {
        self.check_same_grid(reference)?;
        Ok((0..self.len())
            .map(|p| {
                let (a, b) = (self.extended(p), reference.extended(p));
                let diff = a - b;
                let d = Complex64::new(diff.re.hi(), diff.im.hi()).norm();
                let b = reference.values[p];
                if b.norm() > 0.0 {
                    d / b.norm()
                } else {
                    d
                }
            })
            .collect())
    }

    pub fn max_relative_deviation(&self, reference: &CorrelatorSeries) -> Result<f64> {
        Ok(self
            .relative_deviation(reference)?
            .into_iter()
            .fold(0.0, f64::max))
    }

    pub fn to_record(&self) -> SeriesRecord {
        SeriesRecord {
            label: self.label.clone(),
            beta: self.grid.beta,
            statistics: self.grid.statistics,
            n_max: self.grid.n_max,
            values: self
                .iter()
                .map(|(n, omega, v)| ValueRecord {
                    n,
                    omega,
                    re: v.re,
                    im: v.im,
                })
                .collect(),
            low: self.low.clone().map(|l| l.iter().map(|v| [v.re, v.im]).collect()),
            metadata: self.metadata.clone(),
        }
    }

    pub fn from_record(record: SeriesRecord) -> Result<Self> {
        let grid = MatsubaraGrid::new(record.beta, record.statistics, record.n_max)?;
        let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
        if record.values.len() != grid.len() {
            return Err(Error::Domain(format!(
                "record holds {} values for a grid of {}",
                record.values.len(),
                grid.len()
            )));
        }
        for v in &record.values {
            let p = grid
                .position(v.n)
                .ok_or_else(|| Error::Domain(format!("index n = {} outside the grid", v.n)))?;
            values[p] = Complex64::new(v.re, v.im);
        }
        let mut series = CorrelatorSeries::new(grid, values, record.label)?;
        if let Some(low) = record.low {
            if low.len() != grid.len() {
                return Err(Error::Domain("low-order words do not match the grid".into()));
            }
            series.low = Some(low.iter().map(|[re, im]| Complex64::new(*re, *im)).collect());
        }
        series.metadata = record.metadata;
        Ok(series)
    }

    /// CSV with header `n,omega_n,re,im`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (n, omega_n, v) in self.iter() {
            w.serialize(CsvRow {
                n,
                omega_n,
                re: v.re,
                im: v.im,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV layout written by [`write_csv`](Self::write_csv); the
    /// grid is supplied by the caller since the file does not carry β.
    pub fn read_csv<R: Read>(grid: MatsubaraGrid, reader: R, label: impl Into<String>) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
        let mut seen = 0;
        for row in r.deserialize() {
            let row: CsvRow = row?;
            let p = grid
                .position(row.n)
                .ok_or_else(|| Error::Domain(format!("index n = {} outside the grid", row.n)))?;
            values[p] = Complex64::new(row.re, row.im);
            seen += 1;
        }
        if seen != grid.len() {
            return Err(Error::Domain(format!("csv holds {seen} rows for a grid of {}", grid.len())));
        }
        CorrelatorSeries::new(grid, values, label)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_record())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_record(serde_json::from_str(text)?)
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let csv_file = std::fs::File::create(dir.join(format!("{stem}.csv")))?;
        self.write_csv(std::io::BufWriter::new(csv_file))?;
        std::fs::write(dir.join(format!("{stem}.json")), self.to_json()? + "\n")?;
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct CsvRow {
    n: i64,
    omega_n: f64,
    re: f64,
    im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueRecord {
    pub n: i64,
    pub omega: f64,
    pub re: f64,
    pub im: f64,
}

/// JSON layout of a [`CorrelatorSeries`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesRecord {
    pub label: String,
    pub beta: f64,
    pub statistics: Statistics,
    pub n_max: usize,
    pub values: Vec<ValueRecord>,
    /// Low-order words `[re, im]` in storage order, for double-double series.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub low: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

/// Samples of an imaginary-time correlator.
#[derive(Clone, Debug, PartialEq)]
pub struct TauSeries {
    beta: f64,
    statistics: Statistics,
    tau_points: Vec<f64>,
    values: Vec<Complex64>,
}

impl TauSeries {
    pub fn new(
        beta: f64,
        statistics: Statistics,
        tau_points: Vec<f64>,
        values: Vec<Complex64>,
    ) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::Domain(format!("beta must be positive, got {beta}")));
        }
        if tau_points.len() != values.len() {
            return Err(Error::Domain("tau points and values differ in length".into()));
        }
        if let Some(&tau) = tau_points.iter().find(|&&t| !(t > -beta && t <= beta)) {
            return Err(Error::TauDomain {
                tau,
                range: "(-beta, beta]",
            });
        }
        if tau_points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("tau points must be strictly increasing".into()));
        }
        Ok(TauSeries {
            beta,
            statistics,
            tau_points,
            values,
        })
    }

    /// Samples `f` on the uniform mesh τⱼ = jβ/M, j = 0..=M. The samples at
    /// τ = 0 and τ = β stand for the one-sided limits C(0⁺) and C(β⁻), so
    /// `f` must return those there.
    pub fn sample_uniform(
        beta: f64,
        statistics: Statistics,
        intervals: usize,
        f: impl Fn(f64) -> Complex64,
    ) -> Result<Self> {
        if intervals == 0 {
            return Err(Error::Domain("tau mesh needs at least one interval".into()));
        }
        let h = beta / intervals as f64;
        let tau_points: Vec<f64> = (0..=intervals)
            .map(|j| if j == intervals { beta } else { j as f64 * h })
            .collect();
        let values = tau_points.iter().map(|&t| f(t)).collect();
        Self::new(beta, statistics, tau_points, values)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn tau_points(&self) -> &[f64] {
        &self.tau_points
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Value at `tau`, linearly interpolated between samples.
    pub fn value_at(&self, tau: f64) -> Result<Complex64> {
        let pts = &self.tau_points;
        let first = *pts.first().ok_or_else(|| Error::Domain("empty tau series".into()))?;
        let last = *pts.last().unwrap();
        if tau < first || tau > last {
            return Err(Error::TauDomain {
                tau,
                range: "the sampled interval",
            });
        }
        let k = pts.partition_point(|&t| t < tau);
        if pts[k] == tau {
            return Ok(self.values[k]);
        }
        let (t0, t1) = (pts[k - 1], pts[k]);
        let s = (tau - t0) / (t1 - t0);
        Ok(self.values[k - 1] * (1.0 - s) + self.values[k] * s)
    }

    fn uniform_spacing(&self) -> Option<f64> {
        let m = self.tau_points.len().checked_sub(1)?;
        if m == 0 {
            return None;
        }
        let h = self.beta / m as f64;
        let tol = 1e-9 * h;
        let uniform = self
            .tau_points
            .iter()
            .enumerate()
            .all(|(j, &t)| (t - j as f64 * h).abs() <= tol);
        uniform.then_some(h)
    }
}

/// ∫₀^β dτ e^{iωₙτ} C(τ) by the composite trapezoid rule on a uniform mesh
/// covering [0, β] with one-sided endpoint samples.
pub fn tau_to_freq(series: &TauSeries, grid: &MatsubaraGrid) -> Result<CorrelatorSeries> {
    grid.statistics().expect(series.statistics())?;
    if series.beta().to_bits() != grid.beta().to_bits() {
        return Err(Error::Domain("tau series and grid use different beta".into()));
    }
    let h = series
        .uniform_spacing()
        .ok_or_else(|| Error::Domain("tau_to_freq needs a uniform mesh covering [0, beta]".into()))?;
    let period = 2.0 * PI / grid.max_frequency();
    let points_per_period = period / h;
    if points_per_period < 4.0 {
        return Err(Error::Resolution { points_per_period });
    }
    let taus = series.tau_points();
    let c = series.values();
    let m = taus.len() - 1;
    let out = CorrelatorSeries::from_fn(*grid, "tau_to_freq", |_, omega| {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 1..m {
            acc += Complex64::from_polar(1.0, omega * taus[j]) * c[j];
        }
        let ends = c[0] + Complex64::from_polar(1.0, omega * taus[m]) * c[m];
        (acc + 0.5 * ends) * h
    });
    Ok(out
        .with_metadata("quadrature", "trapezoid")
        .with_metadata("mesh_intervals", m))
}

/// Coefficients of the high-frequency model a/(iωₙ) + b/(iωₙ)².
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailModel {
    pub a: Complex64,
    pub b: Complex64,
}

impl TailModel {
    pub fn value(&self, grid: &MatsubaraGrid, n: i64) -> Complex64 {
        if grid.statistics() == Statistics::Bosonic && n == 0 {
            return Complex64::new(0.0, 0.0);
        }
        let z = Complex64::new(0.0, grid.frequency_of(n));
        self.a / z + self.b / (z * z)
    }

    /// (1/β) Σ over all n (n ≠ 0 for bosons) of e^{−iωₙτ} times the model,
    /// in closed form for τ ∈ (0, β).
    pub fn tau_sum(&self, beta: f64, statistics: Statistics, tau: f64) -> Complex64 {
        let (first, second) = match statistics {
            Statistics::Bosonic => (
                tau / beta - 0.5,
                -tau * tau / (2.0 * beta) + 0.5 * tau - beta / 12.0,
            ),
            Statistics::Fermionic => (-0.5, 0.25 * (2.0 * tau - beta)),
        };
        self.a * first + self.b * second
    }
}

/// Least-squares fit of [`TailModel`] to the outermost 10% of the stored
/// frequencies on both sides (at least two per side).
pub fn fit_tail(series: &CorrelatorSeries) -> TailModel {
    let grid = series.grid();
    let n_max = grid.last_index();
    let count = ((grid.n_max() as f64 * 0.1).ceil() as i64).max(2).min(n_max);
    let lo = n_max - count + 1;
    // 2x2 Hermitian normal equations for (a, b)
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = Complex64::new(0.0, 0.0);
    let mut rx = Complex64::new(0.0, 0.0);
    let mut ry = Complex64::new(0.0, 0.0);
    for n in lo..=n_max {
        let pos = grid.position(n).unwrap();
        for p in [pos, grid.mirror(pos)] {
            let z = Complex64::new(0.0, grid.frequency(p));
            let x = z.inv();
            let y = x * x;
            let v = series.values()[p];
            sxx += x.norm_sqr();
            syy += y.norm_sqr();
            sxy += x.conj() * y;
            rx += x.conj() * v;
            ry += y.conj() * v;
        }
    }
    let det = sxx * syy - sxy.norm_sqr();
    if det.abs() <= f64::EPSILON * sxx * syy {
        return TailModel {
            a: Complex64::new(0.0, 0.0),
            b: Complex64::new(0.0, 0.0),
        };
    }
    let a = (rx * syy - sxy * ry) / det;
    let b = (ry * sxx - sxy.conj() * rx) / det;
    TailModel { a, b }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InverseOptions {
    /// Subtract a fitted a/(iωₙ) + b/(iωₙ)² tail and add its exact infinite sum.
    pub tail_correction: bool,
    /// Accept τ ∈ (−β, 0) by (anti)periodic extension.
    pub kms_extension: bool,
}

impl Default for InverseOptions {
    fn default() -> Self {
        InverseOptions {
            tail_correction: true,
            kms_extension: false,
        }
    }
}

/// (1/β) Σₙ e^{−iωₙτ} C(iωₙ) over the stored range, optionally tail corrected.
pub fn freq_to_tau(
    series: &CorrelatorSeries,
    tau_points: &[f64],
    options: InverseOptions,
) -> Result<TauSeries> {
    let grid = series.grid();
    let beta = grid.beta();
    let stats = grid.statistics();
    let tail = options.tail_correction.then(|| fit_tail(series));
    let residual: Vec<Complex64> = match &tail {
        Some(t) => series
            .iter()
            .map(|(n, _, v)| v - t.value(grid, n))
            .collect(),
        None => series.values().to_vec(),
    };
    let interior = |tau: f64| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (p, r) in residual.iter().enumerate() {
            acc += Complex64::from_polar(1.0, -grid.frequency(p) * tau) * r;
        }
        let mut value = acc / beta;
        if let Some(t) = &tail {
            value += t.tau_sum(beta, stats, tau);
        }
        value
    };
    let mut values = Vec::with_capacity(tau_points.len());
    for &tau in tau_points {
        if tau > 0.0 && tau < beta {
            values.push(interior(tau));
        } else if options.kms_extension && tau > -beta && tau < 0.0 {
            values.push(stats.sign() * interior(tau + beta));
        } else {
            return Err(Error::TauDomain {
                tau,
                range: if options.kms_extension {
                    "(-beta, 0) or (0, beta)"
                } else {
                    "(0, beta)"
                },
            });
        }
    }
    TauSeries::new(beta, stats, tau_points.to_vec(), values)
}

/// C(τ) for τ ∈ (−β, 0) from a series defined on (0, β): +C(τ+β) for
/// bosons, −C(τ+β) for fermions.
pub fn kms_extend(series: &TauSeries, tau: f64) -> Result<Complex64> {
    let beta = series.beta();
    if !(tau > -beta && tau < 0.0) {
        return Err(Error::TauDomain {
            tau,
            range: "(-beta, 0)",
        });
    }
    Ok(series.statistics().sign() * series.value_at(tau + beta)?)
}
