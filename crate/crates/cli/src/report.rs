//! Comparison reports and scalar checks.

use readout_core::{CorrelatorSeries, Result};
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Deviation {
    pub n: i64,
    pub omega: f64,
    pub absolute: f64,
    pub relative: f64,
}

/// Per-frequency deviation of one series from a reference.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub name: String,
    pub series: String,
    pub reference: String,
    pub tolerance_name: String,
    pub tolerance: f64,
    pub max_absolute: f64,
    pub max_relative: f64,
    pub mean_relative: f64,
    /// ‖series − reference‖₂ over the stored grid.
    pub norm: f64,
    pub pass: bool,
    pub deviations: Vec<Deviation>,
}

impl ComparisonReport {
    pub fn new(
        name: impl Into<String>,
        series: &CorrelatorSeries,
        reference: &CorrelatorSeries,
        tolerance_name: &str,
        tolerance: f64,
    ) -> Result<Self> {
        let relative = series.relative_deviation(reference)?;
        let deviations: Vec<Deviation> = series
            .iter()
            .zip(reference.values())
            .zip(&relative)
            .map(|(((n, omega, a), b), r)| Deviation {
                n,
                omega,
                absolute: (a - b).norm(),
                relative: *r,
            })
            .collect();
        let max_relative = relative.iter().copied().fold(0.0, f64::max);
        Ok(ComparisonReport {
            name: name.into(),
            series: series.label().to_string(),
            reference: reference.label().to_string(),
            tolerance_name: tolerance_name.to_string(),
            tolerance,
            max_absolute: deviations.iter().map(|d| d.absolute).fold(0.0, f64::max),
            max_relative,
            mean_relative: relative.iter().sum::<f64>() / relative.len().max(1) as f64,
            norm: deviations.iter().map(|d| d.absolute.powi(2)).sum::<f64>().sqrt(),
            pass: max_relative <= tolerance,
            deviations,
        })
    }

    pub fn summary(&self) -> Check {
        Check {
            name: self.name.clone(),
            value: self.max_relative,
            tolerance_name: self.tolerance_name.clone(),
            tolerance: self.tolerance,
            pass: self.pass,
            detail: format!("max relative deviation of {} from {}", self.series, self.reference),
        }
    }
}

/// A scalar quantity held against a named tolerance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance_name: String,
    pub tolerance: f64,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    /// Passes when `value ≤ tolerance`.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance_name: &str, tolerance: f64, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            value,
            tolerance_name: tolerance_name.to_string(),
            tolerance,
            pass: value <= tolerance,
            detail: detail.into(),
        }
    }

    /// Passes when `value > tolerance`.
    pub fn above(name: impl Into<String>, value: f64, tolerance_name: &str, tolerance: f64, detail: impl Into<String>) -> Self {
        Check {
            pass: value > tolerance,
            ..Check::at_most(name, value, tolerance_name, tolerance, detail)
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Summary {
    pub scenario: Option<String>,
    pub format: String,
    pub pass: bool,
    pub checks: Vec<Check>,
}
