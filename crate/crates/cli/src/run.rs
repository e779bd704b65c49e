//! Task execution and output layout.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use log::info;
use readout_core::bare::{cavity_bare, cavity_bare_tau, oscillator_bare, site_density_bubble};
use readout_core::continuation::{default_eta, pade_eval, pade_fit, real_axis};
use readout_core::dyson::{dress_fermion, dress_oscillator, extract};
use readout_core::ed::experiment::ReadoutOptions;
use readout_core::ed::wick::{lattice_density_wick_residual, oscillator_wick_residual};
use readout_core::ed::{readout_experiment, set_threads, ReadoutReport, Simulator};
use readout_core::grid::{freq_to_tau, InverseOptions};
use readout_core::{CorrelatorSeries, DressedSet, Error, RationalForm, RetardedSeries};
use serde::Serialize;
use serde_json::json;

use crate::config::{window, Plan, Task, FORMAT};
use crate::report::{Check, ComparisonReport, Summary};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Source {
    Dressed,
    Oracle,
}

impl Source {
    fn name(self) -> &'static str {
        match self {
            Source::Dressed => "dressed",
            Source::Oracle => "oracle",
        }
    }
}

/// Everything produced for one coupling.
struct Stage {
    lambda: f64,
    dir: PathBuf,
    prefix: String,
    dressed: Option<DressedSet>,
    oracle: Option<(DressedSet, ReadoutReport)>,
    extracted: Vec<(Source, CorrelatorSeries)>,
    compared: Vec<(Source, ComparisonReport)>,
}

impl Stage {
    fn set(&self, source: Source) -> Option<&DressedSet> {
        match source {
            Source::Dressed => self.dressed.as_ref(),
            Source::Oracle => self.oracle.as_ref().map(|(s, _)| s),
        }
    }
}

struct Runner<'a> {
    plan: &'a Plan,
    out: PathBuf,
    checks: Vec<Check>,
}

fn lattice_sim(plan: &Plan) -> bool {
    matches!(plan.config.system.simulator, Simulator::Lattice(_))
}

impl Runner<'_> {
    fn tol(&self, name: &str) -> f64 {
        self.plan.tolerance(name)
    }

    fn bare(&mut self) -> anyhow::Result<()> {
        let plan = self.plan;
        let system = &plan.config.system;
        let grid = plan.grid()?;
        let dir = self.out.join("bare");
        let d_r0 = cavity_bare(system.detector.omega_d, &grid)?.with_label("D_R0");
        d_r0.save(&dir, "D_R0")?;
        let c_s0 = match &system.simulator {
            Simulator::Oscillator(o) => oscillator_bare(o.omega_s, &grid)?,
            Simulator::Lattice(l) => site_density_bubble(l, &grid)?.with_label("C_S0"),
        };
        c_s0.save(&dir, "C_S0")?;

        let beta = grid.beta();
        let taus: Vec<f64> = (1..20).map(|j| beta * j as f64 / 20.0).collect();
        let options = InverseOptions {
            tail_correction: plan.config.modes.tail_correction,
            kms_extension: false,
        };
        let back = freq_to_tau(&d_r0, &taus, options)?;
        let mut rows = csv::Writer::from_path(dir.join("D_R0_tau.csv"))?;
        rows.write_record(["tau", "re", "im", "closed_form"])?;
        let mut worst = 0.0f64;
        for (t, v) in taus.iter().zip(back.values()) {
            let exact = cavity_bare_tau(system.detector.omega_d, beta, *t)?;
            worst = worst.max((v - exact).norm() / exact.abs());
            rows.write_record([t.to_string(), v.re.to_string(), v.im.to_string(), exact.to_string()])?;
        }
        rows.flush()?;
        self.checks.push(Check::at_most(
            "bare/transform",
            worst,
            "transform",
            self.tol("transform"),
            "inverse transform of D_R0 at 19 interior times vs the closed form",
        ));
        Ok(())
    }

    fn wick(&mut self) -> anyhow::Result<()> {
        let plan = self.plan;
        let system = &plan.config.system;
        let w = plan.config.wick.as_ref().context("missing [wick] section")?;
        let beta = plan.config.grid.beta;
        let (bound, regression) = (self.tol("wick"), self.tol("wick_regression"));
        let mut record = serde_json::Map::new();
        record.insert("taus".into(), json!(w.taus));
        record.insert("beta".into(), json!(beta));
        record.insert("oscillator_cutoff".into(), json!(w.oscillator_cutoff));

        let control = oscillator_wick_residual(system.detector.omega_d, beta, w.oscillator_cutoff, w.taus)?;
        record.insert("detector_quadrature".into(), json!([control.re, control.im]));
        self.checks.push(Check::at_most(
            "wick/detector_quadrature",
            control.norm(),
            "wick",
            bound,
            "Gaussian control: cavity quadrature at omega_d",
        ));
        match &system.simulator {
            Simulator::Oscillator(o) => {
                let r = oscillator_wick_residual(o.omega_s, beta, w.oscillator_cutoff, w.taus)?;
                record.insert("simulator_quadrature".into(), json!([r.re, r.im]));
                self.checks.push(Check::at_most(
                    "wick/simulator_quadrature",
                    r.norm(),
                    "wick",
                    bound,
                    "oscillator quadrature at omega_s",
                ));
            }
            Simulator::Lattice(l) => {
                let r = lattice_density_wick_residual(l, beta, w.taus)?;
                record.insert("simulator_density".into(), json!([r.re, r.im]));
                self.checks.push(Check::above(
                    "wick/simulator_density",
                    r.norm(),
                    "wick",
                    bound,
                    "mean-free probe density; must violate Wick factorization",
                ));
                if let Some(expected) = w.expected {
                    record.insert("expected".into(), json!(expected));
                    self.checks.push(Check::at_most(
                        "wick/density_regression",
                        (r.re - expected).abs(),
                        "wick_regression",
                        regression,
                        format!("density residual {:.17e} vs expected {expected:.17e}", r.re),
                    ));
                }
            }
        }
        write_json(&self.out.join("wick").join("residuals.json"), &record)
    }

    fn dressed(&mut self, stage: &mut Stage) -> anyhow::Result<()> {
        let plan = self.plan;
        let system = &plan.config.system;
        let grid = plan.grid()?;
        let mode = plan.config.modes.bath_mode;
        let set = match &system.simulator {
            Simulator::Oscillator(o) => dress_oscillator(&system.detector, o.omega_s, stage.lambda, &grid, mode)?,
            Simulator::Lattice(l) => dress_fermion(&system.detector, l, stage.lambda, &grid, mode)?,
        };
        set.save(&stage.dir.join("dressed"))?;
        stage.dressed = Some(set);
        Ok(())
    }

    fn oracle(&mut self, stage: &mut Stage) -> anyhow::Result<()> {
        let plan = self.plan;
        let o = &plan.config.oracle;
        let options = ReadoutOptions {
            adaptive_truncation: o.adaptive_truncation,
            population_tolerance: o.population_tolerance,
            verify_truncation: o.verify_truncation,
            truncation_step: o.truncation_step,
            truncation_tolerance: self.tol("truncation"),
        };
        let spec = plan.system(stage.lambda);
        let (set, report) = readout_experiment(&spec, &plan.oracle_grid()?, &options)?;
        info!(
            "oracle at lambda = {}: dimension {}, cutoffs {:?}",
            stage.lambda,
            report.dimension,
            report.truncation.cutoffs(spec.has_oscillator())
        );
        let dir = stage.dir.join("oracle");
        set.save(&dir)?;
        write_json(&dir.join("readout_report.json"), &report)?;
        if let Some(change) = report.truncation_change {
            self.checks.push(Check::at_most(
                format!("{}oracle/truncation", stage.prefix),
                change,
                "truncation",
                self.tol("truncation"),
                "largest correlator change with every cutoff raised",
            ));
        }
        stage.oracle = Some((set, report));
        Ok(())
    }

    fn extract(&mut self, stage: &mut Stage) -> anyhow::Result<()> {
        let label = if lattice_sim(self.plan) { "C_SL" } else { "C_S0_extracted" };
        for source in [Source::Dressed, Source::Oracle] {
            let Some(set) = stage.set(source) else { continue };
            let c = extract(&set.d_rb, &set.d_r, stage.lambda)
                .with_context(|| format!("extracting from the {} correlators", source.name()))?
                .with_label(label);
            c.save(&stage.dir.join("extract").join(source.name()), label)?;
            stage.extracted.push((source, c));
        }
        Ok(())
    }

    fn compare(&mut self, stage: &mut Stage) -> anyhow::Result<()> {
        let lattice = lattice_sim(self.plan);
        for (source, c) in &stage.extracted {
            let tolerance_name = match (source, lattice) {
                (Source::Dressed, _) => "extraction",
                (Source::Oracle, false) => "oracle",
                (Source::Oracle, true) => "backaction",
            };
            let reference = &stage.set(*source).expect("extracted from this set").c_s0;
            let name = format!("{}compare/{}", stage.prefix, source.name());
            let report = ComparisonReport::new(name, c, reference, tolerance_name, self.tol(tolerance_name))?;
            write_json(&stage.dir.join("compare").join(format!("{}.json", source.name())), &report)?;
            self.checks.push(report.summary());
            stage.compared.push((*source, report));
        }
        Ok(())
    }

    fn continuation(&mut self, stage: &mut Stage) -> anyhow::Result<()> {
        let plan = self.plan;
        let system = &plan.config.system;
        let c = &plan.config.continuation;
        let detector = &system.detector;
        let (lo, hi) = window(c, detector.omega_d);
        let omega = real_axis(lo, hi, c.points)?;
        let eta = c.eta.unwrap_or_else(|| default_eta(detector.omega_d));
        let dir = stage.dir.join("continue");
        let set = stage.dressed.as_ref().context("continuation needs the dressed correlators")?;
        let mut meta = serde_json::Map::new();
        meta.insert("eta".into(), json!(eta));
        meta.insert("window".into(), json!([lo, hi]));
        meta.insert("points".into(), json!(c.points));
        meta.insert("order".into(), json!(c.order));
        let mut notes = Vec::new();

        let rational = RationalForm::DetectorWithBath {
            detector: detector.clone(),
        };
        let exact = RetardedSeries::from_rational(&rational, &omega, eta, "D_RB")?;
        exact.save(&dir, "D_RB_closed_form")?;
        if let Simulator::Oscillator(o) = &system.simulator {
            let full = RationalForm::DetectorFull {
                detector: detector.clone(),
                omega_s: o.omega_s,
                lambda: stage.lambda,
            };
            RetardedSeries::from_rational(&full, &omega, eta, "D_R")?.save(&dir, "D_R_closed_form")?;
        }

        match pade_fit(&set.d_rb, c.order) {
            Ok(approx) => {
                let pade = RetardedSeries::from_pade(&approx, &omega, eta, "D_RB")?;
                pade.save(&dir, "D_RB_pade")?;
                let deviation = pade.max_relative_deviation(&exact)?;
                meta.insert("d_rb_pade".into(), pade_meta(&approx));
                self.checks.push(Check::at_most(
                    format!("{}continue/D_RB", stage.prefix),
                    deviation,
                    "continuation",
                    self.tol("continuation"),
                    "Pade-continued D_RB vs the substituted closed form over the window",
                ));
            }
            Err(Error::Unsupported(why)) => notes.push(format!("D_RB continued by substitution only: {why}")),
            Err(e) => return Err(e).context("Pade fit of D_RB"),
        }

        if let Some((_, extracted)) = stage.extracted.iter().find(|(s, _)| *s == Source::Dressed) {
            let approx = pade_fit(extracted, c.order).context("Pade fit of the extracted correlator")?;
            let series = RetardedSeries::from_pade(&approx, &omega, eta, extracted.label())?;
            series.save(&dir, &format!("{}_pade", extracted.label()))?;
            meta.insert("extracted_pade".into(), pade_meta(&approx));
            if let Simulator::Oscillator(o) = &system.simulator {
                let peak = series.peak(|w| Ok(pade_eval(&approx, w, eta)?.0))?;
                let offset = (peak - o.omega_s).abs() / o.omega_s;
                meta.insert("extracted_peak".into(), json!(peak));
                self.checks.push(Check::at_most(
                    format!("{}continue/pole", stage.prefix),
                    offset,
                    "pole_location",
                    self.tol("pole_location"),
                    format!("peak of the continued extracted correlator at {peak:.6} vs omega_s = {}", o.omega_s),
                ));
            }
        }
        meta.insert("notes".into(), json!(notes));
        write_json(&dir.join("continuation.json"), &meta)
    }

    /// Checks that need every coupling of a scan.
    fn scan_checks(&mut self, stages: &[Stage]) -> anyhow::Result<()> {
        let oracle: Vec<(f64, &ComparisonReport, &CorrelatorSeries)> = stages
            .iter()
            .filter_map(|s| {
                let report = s.compared.iter().find(|(src, _)| *src == Source::Oracle)?;
                let c = s.extracted.iter().find(|(src, _)| *src == Source::Oracle)?;
                Some((s.lambda, &report.1, &c.1))
            })
            .collect();
        if oracle.len() < 2 {
            return Ok(());
        }
        let dir = self.out.join("scan");
        if lattice_sim(self.plan) {
            let slack = self.tol("backaction_ratio");
            let mut pairs = Vec::new();
            for w in oracle.windows(2) {
                let ((l1, r1, _), (l2, r2, _)) = (w[0], w[1]);
                let ratio = r1.norm / r2.norm;
                let expected = (l1 / l2).powi(2);
                let offset = (ratio / expected - 1.0).abs();
                pairs.push(json!({
                    "lambdas": [l1, l2],
                    "deviation_norms": [r1.norm, r2.norm],
                    "ratio": ratio,
                    "expected": expected,
                }));
                self.checks.push(Check::at_most(
                    format!("scan/backaction_ratio_{l1}_{l2}"),
                    offset,
                    "backaction_ratio",
                    slack,
                    format!("deviation-norm ratio {ratio:.4} vs lambda^2 ratio {expected:.4}"),
                ));
            }
            write_json(&dir.join("backaction_scaling.json"), &pairs)?;
        } else {
            let (l0, _, first) = oracle[0];
            let mut spread = 0.0f64;
            for (_, _, c) in &oracle[1..] {
                spread = spread.max(c.max_relative_deviation(first)?);
            }
            let lambdas: Vec<f64> = oracle.iter().map(|o| o.0).collect();
            write_json(&dir.join("lambda_independence.json"), &json!({ "lambdas": lambdas, "spread": spread }))?;
            self.checks.push(Check::at_most(
                "scan/lambda_independence",
                spread,
                "oracle",
                self.tol("oracle"),
                format!("largest relative difference of extracted series from lambda = {l0}"),
            ));
        }
        Ok(())
    }
}

fn pade_meta(approx: &readout_core::PadeApproximant) -> serde_json::Value {
    json!({
        "effective_order": approx.effective_order(),
        "fit_deviation": approx.fit_deviation,
        "holdout_deviation": approx.holdout_deviation,
    })
}

/// Record from which every output can be regenerated.
#[derive(Serialize)]
struct Provenance<'a> {
    format: &'static str,
    version: &'static str,
    tasks: &'a [Task],
    inserted: &'a [Task],
    lambdas: &'a [f64],
    tolerances: &'a std::collections::BTreeMap<String, f64>,
    threads: usize,
    preflight_dimensions: &'a [usize],
    config: &'a crate::config::ScenarioConfig,
}

/// Runs every planned task, writing into `out`.
pub fn execute(plan: &Plan, out: &Path, threads: usize) -> anyhow::Result<Summary> {
    let dimensions = plan.preflight()?;
    set_threads(threads);
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_json(
        &out.join("provenance.json"),
        &Provenance {
            format: FORMAT,
            version: VERSION,
            tasks: &plan.tasks,
            inserted: &plan.inserted,
            lambdas: &plan.lambdas,
            tolerances: &plan.tolerances,
            threads,
            preflight_dimensions: &dimensions,
            config: &plan.config,
        },
    )?;

    let scanning = plan.config.scan.is_some();
    let mut stages: Vec<Stage> = plan
        .lambdas
        .iter()
        .map(|&lambda| {
            let (dir, prefix) = if scanning {
                (out.join(format!("lambda_{lambda}")), format!("lambda_{lambda}/"))
            } else {
                (out.to_path_buf(), String::new())
            };
            Stage {
                lambda,
                dir,
                prefix,
                dressed: None,
                oracle: None,
                extracted: Vec::new(),
                compared: Vec::new(),
            }
        })
        .collect();

    let mut runner = Runner {
        plan,
        out: out.to_path_buf(),
        checks: Vec::new(),
    };
    for &task in &plan.tasks {
        if task.per_lambda() {
            for stage in &mut stages {
                info!("task {task} at lambda = {}", stage.lambda);
                let result = match task {
                    Task::Dressed => runner.dressed(stage),
                    Task::Oracle => runner.oracle(stage),
                    Task::Extract => runner.extract(stage),
                    Task::Compare => runner.compare(stage),
                    Task::Continue => runner.continuation(stage),
                    Task::Bare | Task::Wick => unreachable!("not a per-coupling task"),
                };
                result.with_context(|| format!("task `{task}` at lambda = {}", stage.lambda))?;
            }
        } else {
            info!("task {task}");
            let result = match task {
                Task::Bare => runner.bare(),
                Task::Wick => runner.wick(),
                _ => unreachable!("per-coupling task"),
            };
            result.with_context(|| format!("task `{task}`"))?;
        }
    }
    if plan.has(Task::Compare) {
        runner.scan_checks(&stages).context("scan comparison")?;
    }

    let summary = Summary {
        scenario: plan.config.name.clone(),
        format: FORMAT.to_string(),
        pass: runner.checks.iter().all(|c| c.pass),
        checks: runner.checks,
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}
