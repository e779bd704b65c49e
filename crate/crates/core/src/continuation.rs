//! Continuation iωₙ → ω + iη: exact substitution for closed forms and
//! Thiele-type Padé interpolation for tabulated series.
//!
//! Retarded values follow Im C^ret(ω) ≤ 0 for ω > 0.

use std::io::Write;
use std::path::Path;

use num_complex::{Complex, Complex64};
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::bare::{BathSpec, DetectorSpec};
use crate::error::{Error, Result};
use crate::grid::CorrelatorSeries;
use crate::precision::{cdiv, magnitude, narrow, widen, ComplexDd};

/// Relative mismatch allowed at the interpolation points.
pub const FIT_GATE: f64 = 1e-8;
/// Default broadening as a fraction of the detector frequency.
pub const DEFAULT_ETA_FRACTION: f64 = 1e-3;
/// A continued fraction stops at the first coefficient whose dimensionless
/// size `|a_p|·span` falls below this; the remaining levels carry no data.
pub const COEFFICIENT_FLOOR: f64 = 1e-13;
/// Conjugate-symmetry defect tolerated in Padé input, relative to max |value|.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

pub fn default_eta(omega_d: f64) -> f64 {
    DEFAULT_ETA_FRACTION * omega_d
}

fn check_eta(eta: f64) -> Result<()> {
    if eta.is_finite() && eta > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("eta must be positive, got {eta}")))
    }
}

/// Matsubara expressions that are rational in iωₙ and can be continued by
/// substitution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RationalForm {
    /// 2ω/(z² − ω²).
    Bare { omega: f64 },
    /// The cavity dressed by its bath. A flat bath contributes δω_d − iκ,
    /// its value on the upper half plane.
    DetectorWithBath { detector: DetectorSpec },
    /// D_RB further dressed by λ²·C_S0 of an oscillator.
    DetectorFull {
        detector: DetectorSpec,
        omega_s: f64,
        lambda: f64,
    },
    /// Σⱼ rⱼ/(z − pⱼ).
    Poles {
        residues: Vec<Complex64>,
        poles: Vec<Complex64>,
    },
}

fn bare_at(omega: f64, z: Complex64) -> Complex64 {
    2.0 * omega / (z * z - omega * omega)
}

fn bath_at(detector: &DetectorSpec, z: Complex64) -> Complex64 {
    match &detector.bath {
        BathSpec::Flat { kappa, delta_omega_d } => Complex64::new(*delta_omega_d, -kappa),
        BathSpec::Discrete { modes } => modes
            .iter()
            .map(|m| m.coupling * m.coupling * bare_at(m.frequency, z))
            .sum(),
    }
}

fn dressed(g: Complex64, sigma: Complex64) -> Complex64 {
    g / (1.0 - g * sigma)
}

impl RationalForm {
    /// Value at a complex frequency z.
    pub fn evaluate(&self, z: Complex64) -> Result<Complex64> {
        let v = match self {
            RationalForm::Bare { omega } => bare_at(*omega, z),
            RationalForm::DetectorWithBath { detector } => {
                detector.validate()?;
                dressed(bare_at(detector.omega_d, z), bath_at(detector, z))
            }
            RationalForm::DetectorFull {
                detector,
                omega_s,
                lambda,
            } => {
                detector.validate()?;
                let d_rb = dressed(bare_at(detector.omega_d, z), bath_at(detector, z));
                dressed(d_rb, lambda * lambda * bare_at(*omega_s, z))
            }
            RationalForm::Poles { residues, poles } => {
                if residues.len() != poles.len() {
                    return Err(Error::Domain(format!(
                        "{} residues for {} poles",
                        residues.len(),
                        poles.len()
                    )));
                }
                residues.iter().zip(poles).map(|(r, p)| r / (z - p)).sum()
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!("closed form is singular at z = {z}")))
        }
    }
}

/// The closed form at iωₙ → ω + iη.
pub fn continue_rational(form: &RationalForm, omega: f64, eta: f64) -> Result<Complex64> {
    check_eta(eta)?;
    form.evaluate(Complex64::new(omega, eta))
}

/// Continued-fraction interpolant
/// `a₀/(1 + a₁(z−z₀)/(1 + a₂(z−z₁)/(1 + …)))` through points on the
/// positive imaginary axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PadeApproximant {
    /// Matsubara frequencies ωₙ of the interpolation points.
    pub frequencies: Vec<f64>,
    pub values: Vec<Complex64>,
    /// Continued-fraction coefficients as double-double `[re.hi, re.lo, im.hi, im.lo]`.
    pub coefficients: Vec<[f64; 4]>,
    /// Number of points requested; `coefficients` may be shorter when the
    /// data are exhausted earlier.
    pub order: usize,
    /// Largest relative mismatch at the interpolation points.
    pub fit_deviation: f64,
    /// Largest relative mismatch at the supplied positive frequencies that
    /// were not interpolated, if any.
    pub holdout_deviation: Option<f64>,
}

fn pack(c: ComplexDd) -> [f64; 4] {
    [c.re.hi(), c.re.lo(), c.im.hi(), c.im.lo()]
}

fn unpack(c: &[f64; 4]) -> ComplexDd {
    Complex::new(TwoFloat::from(c[0]) + c[1], TwoFloat::from(c[2]) + c[3])
}

fn imaginary(omega: f64) -> ComplexDd {
    Complex::new(TwoFloat::from(0.0), TwoFloat::from(omega))
}

fn relative(a: ComplexDd, b: ComplexDd) -> f64 {
    let scale = magnitude(&b);
    let diff = magnitude(&(a - b));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

impl PadeApproximant {
    pub fn effective_order(&self) -> usize {
        self.coefficients.len()
    }

    /// Largest frequency the data reach; real ω beyond it is extrapolation.
    pub fn data_range(&self) -> f64 {
        self.frequencies.iter().copied().fold(0.0, f64::max)
    }

    fn evaluate_dd(&self, z: ComplexDd) -> Option<ComplexDd> {
        let one = Complex::new(TwoFloat::from(1.0), TwoFloat::from(0.0));
        let mut tail = one;
        for p in (1..self.coefficients.len()).rev() {
            let a = unpack(&self.coefficients[p]);
            let shift = z - imaginary(self.frequencies[p - 1]);
            if magnitude(&tail) == 0.0 {
                return None;
            }
            tail = one + cdiv(a * shift, tail);
            if !(tail.re.hi().is_finite() && tail.im.hi().is_finite()) {
                return None;
            }
        }
        if magnitude(&tail) == 0.0 {
            return None;
        }
        let v = cdiv(unpack(&self.coefficients[0]), tail);
        (v.re.hi().is_finite() && v.im.hi().is_finite()).then_some(v)
    }

    /// Value at an arbitrary complex frequency.
    pub fn evaluate(&self, z: Complex64) -> Result<Complex64> {
        self.evaluate_dd(widen(z))
            .map(narrow)
            .ok_or(Error::Overflow { omega: z.re })
    }
}

/// Thiele interpolation through the lowest `order` positive frequencies of a
/// conjugate-symmetric series.
pub fn pade_fit(series: &CorrelatorSeries, order: usize) -> Result<PadeApproximant> {
    let scale = series.max_abs();
    if series.conjugate_symmetry_defect() > SYMMETRY_TOLERANCE * scale {
        return Err(Error::Unsupported(
            "Padé continuation needs a conjugate-symmetric series; continue flat-bath data by substitution".into(),
        ));
    }
    let grid = series.grid();
    let positive: Vec<usize> = grid.positive_positions().collect();
    if order == 0 || order > positive.len() {
        return Err(Error::Domain(format!(
            "order {order} outside 1..={} positive frequencies",
            positive.len()
        )));
    }
    if series.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("series has non-finite values".into()));
    }
    let freqs: Vec<f64> = positive[..order].iter().map(|&p| grid.frequency(p)).collect();
    let data: Vec<ComplexDd> = positive[..order].iter().map(|&p| series.extended(p)).collect();
    let span = freqs[order - 1] - freqs[0];

    // g[p][i] = (g[p−1][p−1] − g[p−1][i]) / ((z_i − z_{p−1})·g[p−1][i])
    let mut g = data.clone();
    let mut coefficients = vec![pack(g[0])];
    for p in 1..order {
        let prev = g[p - 1];
        for i in p..order {
            let dz = imaginary(freqs[i] - freqs[p - 1]);
            g[i] = cdiv(prev - g[i], dz * g[i]);
        }
        if !(g[p].re.hi().is_finite() && g[p].im.hi().is_finite()) || magnitude(&g[p]) * span < COEFFICIENT_FLOOR {
            break;
        }
        coefficients.push(pack(g[p]));
    }

    let mut approx = PadeApproximant {
        frequencies: freqs,
        values: data.iter().map(|v| narrow(*v)).collect(),
        coefficients,
        order,
        fit_deviation: 0.0,
        holdout_deviation: None,
    };
    let mut worst = 0.0f64;
    for (w, v) in approx.frequencies.iter().zip(&data) {
        let got = approx
            .evaluate_dd(imaginary(*w))
            .ok_or(Error::IllConditioned { max_deviation: f64::INFINITY })?;
        worst = worst.max(relative(got, *v));
    }
    approx.fit_deviation = worst;
    if !(worst <= FIT_GATE) {
        return Err(Error::IllConditioned { max_deviation: worst });
    }
    if positive.len() > order {
        let mut rest = 0.0f64;
        for &p in &positive[order..] {
            let v = series.extended(p);
            rest = match approx.evaluate_dd(imaginary(grid.frequency(p))) {
                Some(got) => rest.max(relative(got, v)),
                None => f64::INFINITY,
            };
        }
        approx.holdout_deviation = Some(rest);
    }
    Ok(approx)
}

/// The approximant at ω + iη; the flag marks |ω| beyond the data range.
pub fn pade_eval(approx: &PadeApproximant, omega: f64, eta: f64) -> Result<(Complex64, bool)> {
    check_eta(eta)?;
    let v = approx
        .evaluate(Complex64::new(omega, eta))
        .map_err(|_| Error::Overflow { omega })?;
    Ok((v, omega.abs() > approx.data_range()))
}

/// `count` evenly spaced points on [lo, hi].
pub fn real_axis(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && hi > lo) || count < 2 {
        return Err(Error::Domain(format!(
            "need lo < hi and at least two points, got [{lo}, {hi}] with {count}"
        )));
    }
    let step = (hi - lo) / (count - 1) as f64;
    Ok((0..count).map(|i| lo + step * i as f64).collect())
}

/// A correlator on the real axis at fixed broadening.
#[derive(Clone, Debug, PartialEq)]
pub struct RetardedSeries {
    omega: Vec<f64>,
    eta: f64,
    values: Vec<Complex64>,
    extrapolated: Vec<bool>,
    label: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RetardedRow {
    omega: f64,
    eta: f64,
    re: f64,
    im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetardedValue {
    pub omega: f64,
    pub re: f64,
    pub im: f64,
    pub extrapolated: bool,
}

/// JSON layout of a [`RetardedSeries`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetardedRecord {
    pub label: String,
    pub eta: f64,
    pub any_extrapolated: bool,
    pub values: Vec<RetardedValue>,
}

impl RetardedSeries {
    pub fn new(omega: Vec<f64>, eta: f64, values: Vec<Complex64>, label: impl Into<String>) -> Result<Self> {
        check_eta(eta)?;
        if omega.len() != values.len() {
            return Err(Error::Domain(format!(
                "{} frequencies for {} values",
                omega.len(),
                values.len()
            )));
        }
        let extrapolated = vec![false; omega.len()];
        Ok(RetardedSeries {
            omega,
            eta,
            values,
            extrapolated,
            label: label.into(),
        })
    }

    /// Closed form on the given real frequencies.
    pub fn from_rational(form: &RationalForm, omega: &[f64], eta: f64, label: impl Into<String>) -> Result<Self> {
        let values = omega
            .iter()
            .map(|&w| continue_rational(form, w, eta))
            .collect::<Result<Vec<_>>>()?;
        RetardedSeries::new(omega.to_vec(), eta, values, label)
    }

    /// Padé approximant on the given real frequencies.
    pub fn from_pade(approx: &PadeApproximant, omega: &[f64], eta: f64, label: impl Into<String>) -> Result<Self> {
        let (values, extrapolated): (Vec<_>, Vec<_>) = omega
            .iter()
            .map(|&w| pade_eval(approx, w, eta))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip();
        let mut s = RetardedSeries::new(omega.to_vec(), eta, values, label)?;
        s.extrapolated = extrapolated;
        Ok(s)
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn extrapolated(&self) -> &[bool] {
        &self.extrapolated
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn max_relative_deviation(&self, reference: &RetardedSeries) -> Result<f64> {
        if self.omega != reference.omega || self.eta != reference.eta {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&reference.values)
            .map(|(a, b)| (a - b).norm() / b.norm())
            .fold(0.0, f64::max))
    }

    /// Sample of largest |value|, refined by golden-section search between
    /// its neighbours.
    pub fn peak(&self, evaluate: impl Fn(f64) -> Result<Complex64>) -> Result<f64> {
        let (i, _) = self
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .ok_or_else(|| Error::Domain("empty retarded series".into()))?;
        let mut lo = self.omega[i.saturating_sub(1)];
        let mut hi = self.omega[(i + 1).min(self.omega.len() - 1)];
        let r = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..80 {
            let a = hi - r * (hi - lo);
            let b = lo + r * (hi - lo);
            if evaluate(a)?.norm() > evaluate(b)?.norm() {
                hi = b;
            } else {
                lo = a;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    pub fn to_record(&self) -> RetardedRecord {
        RetardedRecord {
            label: self.label.clone(),
            eta: self.eta,
            any_extrapolated: self.extrapolated.iter().any(|&e| e),
            values: self
                .omega
                .iter()
                .zip(&self.values)
                .zip(&self.extrapolated)
                .map(|((&omega, v), &extrapolated)| RetardedValue {
                    omega,
                    re: v.re,
                    im: v.im,
                    extrapolated,
                })
                .collect(),
        }
    }

    /// CSV with header `omega,eta,re,im`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (&omega, v) in self.omega.iter().zip(&self.values) {
            w.serialize(RetardedRow {
                omega,
                eta: self.eta,
                re: v.re,
                im: v.im,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_record())?)
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let file = std::fs::File::create(dir.join(format!("{stem}.csv")))?;
        self.write_csv(std::io::BufWriter::new(file))?;
        std::fs::write(dir.join(format!("{stem}.json")), self.to_json()? + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bare::{cavity_bare, FlatBathMode};
    use crate::dyson::{detector_with_bath, dress_oscillator};
    use crate::grid::MatsubaraGrid;
    use approx::assert_abs_diff_eq;

    fn flat() -> DetectorSpec {
        DetectorSpec::flat(1.0, 0.1, 0.0)
    }

    fn window() -> Vec<f64> {
        real_axis(0.5, 1.5, 401).unwrap()
    }

    #[test]
    fn static_limit_of_bare_form() {
        let v = continue_rational(&RationalForm::Bare { omega: 1.0 }, 0.0, 1e-9).unwrap();
        assert_abs_diff_eq!(v.re, -2.0, epsilon = 1e-12);
    }

    #[test]
    fn bare_form_diverges_at_resonance() {
        let form = RationalForm::Bare { omega: 1.0 };
        let a = continue_rational(&form, 1.0, 1e-3).unwrap().norm();
        let b = continue_rational(&form, 1.0, 1e-4).unwrap().norm();
        // residue of 2ω/(z²−ω²) at z = ω is 1
        assert_abs_diff_eq!(a * 1e-3, 1.0, epsilon = 1e-3);
        assert!(b > 9.0 * a);
    }

    #[test]
    fn flat_bath_form_matches_literal_expression() {
        let (wd, kappa) = (1.0, 0.1);
        let form = RationalForm::DetectorWithBath { detector: flat() };
        for w in [0.3, 0.9, 1.2] {
            let z = Complex64::new(w, 1e-3);
            let expected = 2.0 * wd / (z * z - wd * wd + Complex64::new(0.0, 2.0 * wd * kappa));
            assert_abs_diff_eq!((continue_rational(&form, w, 1e-3).unwrap() - expected).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn flat_bath_peak_sits_near_omega_d() {
        let form = RationalForm::DetectorWithBath { detector: flat() };
        let s = RetardedSeries::from_rational(&form, &window(), 1e-3, "D_RB").unwrap();
        let peak = s.peak(|w| continue_rational(&form, w, 1e-3)).unwrap();
        assert!((peak - 1.0).abs() < 0.02, "{peak}");
    }

    #[test]
    fn rational_forms_agree_with_matsubara_series() {
        let grid = MatsubaraGrid::bosonic(5.0, 8).unwrap();
        let d = detector_with_bath(&flat(), &grid, FlatBathMode::Symmetric).unwrap();
        let form = RationalForm::DetectorWithBath { detector: flat() };
        for p in grid.positive_positions() {
            let v = form.evaluate(Complex64::new(0.0, grid.frequency(p))).unwrap();
            assert_abs_diff_eq!((v - d.values()[p]).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn pade_reproduces_bare_cavity() {
        let grid = MatsubaraGrid::bosonic(5.0, 40).unwrap();
        let series = cavity_bare(1.0, &grid).unwrap();
        let approx = pade_fit(&series, 6).unwrap();
        assert!(approx.holdout_deviation.unwrap() < 1e-12);
        let form = RationalForm::Bare { omega: 1.0 };
        let pade = RetardedSeries::from_pade(&approx, &window(), 1e-3, "pade").unwrap();
        let exact = RetardedSeries::from_rational(&form, &window(), 1e-3, "exact").unwrap();
        assert!(pade.max_relative_deviation(&exact).unwrap() < 1e-6);
    }

    #[test]
    fn pade_reproduces_two_pole_synthetic() {
        let form = RationalForm::Poles {
            residues: vec![Complex64::new(0.7, 0.0), Complex64::new(-0.7, 0.0), Complex64::new(0.3, 0.0), Complex64::new(-0.3, 0.0)],
            poles: vec![Complex64::new(0.6, 0.0), Complex64::new(-0.6, 0.0), Complex64::new(1.3, 0.0), Complex64::new(-1.3, 0.0)],
        };
        let grid = MatsubaraGrid::bosonic(4.0, 30).unwrap();
        let series = CorrelatorSeries::from_fn(grid, "two_pole", |_, w| form.evaluate(Complex64::new(0.0, w)).unwrap());
        let approx = pade_fit(&series, 10).unwrap();
        for z in [Complex64::new(0.2, 0.05), Complex64::new(1.0, 0.5), Complex64::new(-2.0, 3.0)] {
            let (a, b) = (approx.evaluate(z).unwrap(), form.evaluate(z).unwrap());
            assert!((a - b).norm() <= 1e-8 * b.norm(), "{z}: {a} vs {b}");
        }
    }

    #[test]
    fn constant_series_gives_first_order_fraction() {
        let grid = MatsubaraGrid::bosonic(5.0, 10).unwrap();
        let series = CorrelatorSeries::from_fn(grid, "c", |_, _| Complex64::new(-0.4, 0.0));
        let approx = pade_fit(&series, 5).unwrap();
        assert_eq!(approx.effective_order(), 1);
        for w in [0.0, 3.0, 40.0] {
            assert_eq!(pade_eval(&approx, w, 1e-3).unwrap().0, Complex64::new(-0.4, 0.0));
        }
    }

    #[test]
    fn interpolation_points_are_reproduced() {
        let grid = MatsubaraGrid::bosonic(5.0, 40).unwrap();
        let d = detector_with_bath(&flat(), &grid, FlatBathMode::Symmetric).unwrap();
        let approx = pade_fit(&d, 6).unwrap();
        for (w, v) in approx.frequencies.iter().zip(&approx.values) {
            let got = approx.evaluate(Complex64::new(0.0, *w)).unwrap();
            assert!((got - v).norm() <= FIT_GATE * v.norm());
        }
    }

    #[test]
    fn paper_literal_data_is_refused() {
        let grid = MatsubaraGrid::bosonic(5.0, 40).unwrap();
        let d = detector_with_bath(&flat(), &grid, FlatBathMode::PaperLiteral).unwrap();
        assert!(matches!(pade_fit(&d, 6), Err(Error::Unsupported(_))));
    }

    #[test]
    fn order_must_fit_the_data() {
        let grid = MatsubaraGrid::bosonic(5.0, 4).unwrap();
        let s = cavity_bare(1.0, &grid).unwrap();
        assert!(matches!(pade_fit(&s, 5), Err(Error::Domain(_))));
        assert!(matches!(pade_fit(&s, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn far_frequencies_are_flagged() {
        let grid = MatsubaraGrid::bosonic(5.0, 40).unwrap();
        let approx = pade_fit(&cavity_bare(1.0, &grid).unwrap(), 6).unwrap();
        let (v, flagged) = pade_eval(&approx, 10.0, 1e-3).unwrap();
        assert!(v.is_finite() && flagged);
        assert!(!pade_eval(&approx, 1.0, 1e-3).unwrap().1);
    }

    #[test]
    fn retarded_sign_convention() {
        let form = RationalForm::DetectorWithBath { detector: flat() };
        for eta in [1e-2, 1e-3] {
            let s = RetardedSeries::from_rational(&form, &window(), eta, "D_RB").unwrap();
            assert!(s.values().iter().all(|v| v.im <= 0.0));
        }
    }

    #[test]
    fn extracted_oscillator_pole_is_located() {
        let grid = MatsubaraGrid::bosonic(5.0, 40).unwrap();
        let set = dress_oscillator(&flat(), 0.8, 0.1, &grid, FlatBathMode::Symmetric).unwrap();
        let extracted = crate::dyson::extract(&set.d_rb, &set.d_r, 0.1).unwrap();
        let approx = pade_fit(&extracted, 6).unwrap();
        let s = RetardedSeries::from_pade(&approx, &window(), 1e-3, "C_S0").unwrap();
        let peak = s.peak(|w| Ok(pade_eval(&approx, w, 1e-3)?.0)).unwrap();
        assert!((peak - 0.8).abs() < 1e-6, "{peak}");
    }

    #[test]
    fn csv_and_json_layout() {
        let form = RationalForm::Bare { omega: 1.0 };
        let s = RetardedSeries::from_rational(&form, &[0.5, 1.5], 1e-2, "D_R0").unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("omega,eta,re,im\n"));
        assert_eq!(text.lines().count(), 3);
        let record: RetardedRecord = serde_json::from_str(&s.to_json().unwrap()).unwrap();
        assert_eq!(record.values.len(), 2);
        assert!(!record.any_extrapolated);
    }
}
