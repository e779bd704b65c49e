//! Scenario files: TOML, stamped with [`FORMAT`].

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use readout_core::bare::FlatBathMode;
use readout_core::ed::Simulator;
use readout_core::grid::DEFAULT_GRID_N;
use readout_core::{MatsubaraGrid, Statistics, SystemSpec};
use serde::{Deserialize, Serialize};

pub const FORMAT: &str = "readout-scenario/1";

/// Named thresholds and their defaults.
pub const TOLERANCES: &[(&str, f64, &str)] = &[
    ("extraction", 1e-10, "closed-form extraction vs the bare simulator correlator"),
    ("oracle", 1e-6, "ED oscillator extraction vs ED C_S0, and its spread across a scan"),
    ("backaction", 0.1, "ED lattice extraction vs ED C_S0"),
    ("backaction_ratio", 0.15, "relative slack on the lambda^2 scaling of the lattice deviation"),
    ("transform", 1e-6, "inverse transform of D_R0 vs its closed form"),
    ("wick", 1e-10, "Gaussian residual bound; the density residual must exceed it"),
    ("wick_regression", 1e-12, "density residual vs its expected value"),
    ("continuation", 1e-4, "Pade-continued D_RB vs the substituted closed form"),
    ("pole_location", 0.01, "relative offset of the continued C_S0 peak from omega_s"),
    ("truncation", 1e-8, "correlator change when every cutoff is raised"),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Bare,
    Dressed,
    Oracle,
    Extract,
    Compare,
    Wick,
    Continue,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Bare => "bare",
            Task::Dressed => "dressed",
            Task::Oracle => "oracle",
            Task::Extract => "extract",
            Task::Compare => "compare",
            Task::Wick => "wick",
            Task::Continue => "continue",
        }
    }

    /// Runs once per coupling of a scan.
    pub fn per_lambda(self) -> bool {
        matches!(self, Task::Dressed | Task::Oracle | Task::Extract | Task::Compare | Task::Continue)
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub beta: f64,
    #[serde(default = "bosonic")]
    pub statistics: Statistics,
    #[serde(default = "default_n", alias = "N")]
    pub n: usize,
}

fn bosonic() -> Statistics {
    Statistics::Bosonic
}

fn default_n() -> usize {
    DEFAULT_GRID_N
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Modes {
    #[serde(default = "paper_literal")]
    pub bath_mode: FlatBathMode,
    /// Shared with `system.mean_subtract`.
    #[serde(default = "yes")]
    pub mean_subtract: bool,
    #[serde(default = "yes")]
    pub tail_correction: bool,
}

impl Default for Modes {
    fn default() -> Self {
        Modes {
            bath_mode: FlatBathMode::PaperLiteral,
            mean_subtract: true,
            tail_correction: true,
        }
    }
}

fn paper_literal() -> FlatBathMode {
    FlatBathMode::PaperLiteral
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scan {
    pub lambdas: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Grid size for ED correlators; truncation error grows with frequency.
    #[serde(default = "oracle_n", alias = "N")]
    pub n: usize,
    #[serde(default = "yes")]
    pub adaptive_truncation: bool,
    #[serde(default = "population_tolerance")]
    pub population_tolerance: f64,
    #[serde(default)]
    pub verify_truncation: bool,
    #[serde(default = "truncation_step")]
    pub truncation_step: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            n: oracle_n(),
            adaptive_truncation: true,
            population_tolerance: population_tolerance(),
            verify_truncation: false,
            truncation_step: truncation_step(),
        }
    }
}

fn oracle_n() -> usize {
    4
}

fn population_tolerance() -> f64 {
    3e-10
}

fn truncation_step() -> usize {
    4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WickConfig {
    pub taus: [f64; 4],
    #[serde(default = "oscillator_cutoff")]
    pub oscillator_cutoff: usize,
    /// Regression value of the lattice density residual.
    #[serde(default)]
    pub expected: Option<f64>,
}

fn oscillator_cutoff() -> usize {
    150
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ContinuationConfig {
    #[serde(default = "order")]
    pub order: usize,
    /// Window defaults to [0.5, 1.5]·ω_d.
    #[serde(default)]
    pub omega_min: Option<f64>,
    #[serde(default)]
    pub omega_max: Option<f64>,
    #[serde(default = "points")]
    pub points: usize,
    /// Defaults to 1e-3·ω_d.
    #[serde(default)]
    pub eta: Option<f64>,
}

fn order() -> usize {
    6
}

fn points() -> usize {
    1001
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub format: String,
    #[serde(default)]
    pub name: Option<String>,
    pub system: SystemSpec,
    pub grid: GridConfig,
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub modes: Modes,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default, skip_serializing)]
    pub output_dir: Option<PathBuf>,
    /// Reserved; every task is deterministic.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub scan: Option<Scan>,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub wick: Option<WickConfig>,
    #[serde(default = "continuation_default")]
    pub continuation: ContinuationConfig,
}

fn continuation_default() -> ContinuationConfig {
    ContinuationConfig {
        order: order(),
        points: points(),
        ..Default::default()
    }
}

/// Syntax, schema or invariant failure found before execution.
#[derive(Debug)]
pub struct ConfigError {
    pub issues: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid scenario: {}", self.issues.join("; "))
    }
}

impl std::error::Error for ConfigError {}

fn invalid(issues: Vec<String>) -> anyhow::Error {
    ConfigError { issues }.into()
}

fn same_value(a: &toml::Value, b: &toml::Value) -> bool {
    let number = |v: &toml::Value| v.as_float().or(v.as_integer().map(|i| i as f64));
    match (number(a), number(b)) {
        (Some(x), Some(y)) => x == y,
        _ => a == b,
    }
}

/// `system.beta` and `system.mean_subtract` may be left to `grid` and `modes`.
fn fill_shared_keys(table: &mut toml::Table) -> Vec<String> {
    let mut issues = Vec::new();
    let beta = table.get("grid").and_then(|g| g.get("beta")).cloned();
    if beta.is_none() && table.get("grid").is_some_and(|g| g.is_table()) {
        issues.push("grid.beta: missing field (system.beta defaults to it)".to_string());
    }
    let mean = table.get("modes").and_then(|m| m.get("mean_subtract")).cloned();
    let first_lambda = table
        .get("scan")
        .and_then(|s| s.get("lambdas"))
        .and_then(|l| l.as_array())
        .and_then(|l| l.first())
        .cloned();
    let Some(system) = table.get_mut("system").and_then(|s| s.as_table_mut()) else {
        return issues;
    };
    for (key, value) in [("beta", beta), ("mean_subtract", mean)] {
        let Some(value) = value else { continue };
        match system.get(key) {
            None => {
                system.insert(key.into(), value);
            }
            Some(own) if same_value(own, &value) => {}
            Some(own) => issues.push(format!("system.{key}: {own} disagrees with {value} given in [grid] or [modes]")),
        }
    }
    if !system.contains_key("coupling") {
        if let Some(lambda) = first_lambda {
            let mut coupling = toml::Table::new();
            coupling.insert("lambda".into(), lambda);
            system.insert("coupling".into(), coupling.into());
        }
    }
    issues
}

/// Parses TOML text into a config, reporting unknown keys and schema
/// violations with their paths.
pub fn parse(text: &str) -> anyhow::Result<ScenarioConfig> {
    let mut table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| invalid(vec![format!("parse error: {}", e.to_string().trim_end())]))?;
    let mut issues = fill_shared_keys(&mut table);
    let mut unknown = Vec::new();
    let mut track = |path: serde_ignored::Path<'_>| unknown.push(path.to_string());
    let de = serde_ignored::Deserializer::new(toml::Value::Table(table), &mut track);
    let parsed: Result<ScenarioConfig, _> = serde_path_to_error::deserialize(de);
    issues.extend(unknown.into_iter().map(|p| format!("{p}: unknown key")));
    match parsed {
        Ok(mut config) if issues.is_empty() => {
            config.modes.mean_subtract = config.system.mean_subtract;
            Ok(config)
        }
        Ok(_) => Err(invalid(issues)),
        Err(e) => {
            let path = e.path().to_string();
            let inner = e.into_inner().to_string();
            let inner = inner.trim_end();
            issues.push(if path == "." { inner.to_string() } else { format!("{path}: {inner}") });
            Err(invalid(issues))
        }
    }
}

pub fn load(path: &Path) -> anyhow::Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse(&text)
}

/// Config with prerequisites inserted, tolerances resolved and invariants
/// checked.
#[derive(Clone, Debug, Serialize)]
pub struct Plan {
    pub config: ScenarioConfig,
    pub tasks: Vec<Task>,
    pub inserted: Vec<Task>,
    pub tolerances: BTreeMap<String, f64>,
    pub lambdas: Vec<f64>,
}

fn prerequisites(task: Task, planned: &[Task]) -> Vec<Task> {
    let has = |t: Task| planned.contains(&t);
    match task {
        Task::Extract if !has(Task::Dressed) && !has(Task::Oracle) => vec![Task::Dressed],
        Task::Compare if !has(Task::Extract) => {
            let mut out = prerequisites(Task::Extract, planned);
            out.push(Task::Extract);
            out
        }
        Task::Continue => {
            let mut out = Vec::new();
            if !has(Task::Dressed) {
                out.push(Task::Dressed);
            }
            if !has(Task::Extract) {
                out.push(Task::Extract);
            }
            out
        }
        _ => Vec::new(),
    }
}

/// Orders tasks so every prerequisite comes first. Returns the plan and
/// the tasks that were added.
pub fn order_tasks(requested: &[Task]) -> anyhow::Result<(Vec<Task>, Vec<Task>)> {
    let mut planned = Vec::new();
    let mut inserted = Vec::new();
    for (i, &task) in requested.iter().enumerate() {
        if requested[..i].contains(&task) {
            bail!(invalid(vec![format!("tasks: `{task}` is listed twice")]));
        }
        if planned.contains(&task) {
            continue;
        }
        for pre in prerequisites(task, &planned) {
            if !requested[..i].contains(&pre) {
                inserted.push(pre);
            }
            planned.push(pre);
        }
        planned.push(task);
    }
    inserted.retain(|t| !requested.contains(t));
    Ok((planned, inserted))
}

/// Parses a `name=value` override.
pub fn parse_override(text: &str) -> anyhow::Result<(String, f64)> {
    let (name, value) = text
        .split_once('=')
        .with_context(|| format!("tolerance override `{text}` is not name=value"))?;
    let value: f64 = value
        .trim()
        .parse()
        .with_context(|| format!("tolerance override `{text}` has no numeric value"))?;
    Ok((name.trim().to_string(), value))
}

fn check_tolerance(name: &str, value: f64, issues: &mut Vec<String>) {
    if !TOLERANCES.iter().any(|(n, _, _)| *n == name) {
        let known: Vec<&str> = TOLERANCES.iter().map(|t| t.0).collect();
        issues.push(format!("tolerances.{name}: unknown tolerance (known: {})", known.join(", ")));
    } else if !(value.is_finite() && value >= 0.0) {
        issues.push(format!("tolerances.{name}: must be a non-negative number, got {value}"));
    }
}

impl Plan {
    pub fn new(config: ScenarioConfig, overrides: &[(String, f64)]) -> anyhow::Result<Plan> {
        let mut issues = Vec::new();
        if config.format != FORMAT {
            issues.push(format!("format: expected \"{FORMAT}\", found \"{}\"", config.format));
        }
        if config.tasks.is_empty() {
            issues.push("tasks: no tasks requested".into());
        }
        let (tasks, inserted) = order_tasks(&config.tasks)?;

        let mut tolerances: BTreeMap<String, f64> = TOLERANCES.iter().map(|(n, v, _)| (n.to_string(), *v)).collect();
        for (name, value) in config.tolerances.iter().chain(overrides.iter().map(|(n, v)| (n, v))) {
            check_tolerance(name, *value, &mut issues);
            tolerances.insert(name.clone(), *value);
        }

        let system = &config.system;
        let checked = if tasks.contains(&Task::Oracle) {
            system.validate()
        } else {
            system.detector.validate().and_then(|()| match &system.simulator {
                Simulator::Oscillator(o) => o.validate(),
                Simulator::Lattice(l) => l.validate(),
            })
        };
        if let Err(e) = checked {
            issues.push(format!("system: {e}"));
        }
        if let Err(e) = MatsubaraGrid::new(config.grid.beta, config.grid.statistics, config.grid.n) {
            issues.push(format!("grid: {e}"));
        }
        if tasks.iter().any(|&t| t != Task::Wick) && config.grid.statistics != Statistics::Bosonic {
            issues.push("grid.statistics: readout correlators are bosonic".into());
        }

        let lambdas = match &config.scan {
            Some(scan) => {
                if scan.lambdas.is_empty() {
                    issues.push("scan.lambdas: empty".into());
                }
                if scan.lambdas.iter().any(|l| !l.is_finite()) {
                    issues.push("scan.lambdas: values must be finite".into());
                }
                scan.lambdas.clone()
            }
            None => vec![system.coupling.lambda],
        };

        if tasks.contains(&Task::Oracle) && config.oracle.n == 0 {
            issues.push("oracle.n: must be at least 1".into());
        }
        if tasks.contains(&Task::Wick) {
            match &config.wick {
                None => issues.push("wick: section required by the wick task".into()),
                Some(w) => {
                    for (i, t) in w.taus.iter().enumerate() {
                        if !(*t > 0.0 && *t < config.grid.beta) {
                            issues.push(format!("wick.taus[{i}]: {t} lies outside (0, beta)"));
                        }
                    }
                    if w.expected.is_some() && !matches!(system.simulator, Simulator::Lattice(_)) {
                        issues.push("wick.expected: only a lattice simulator has a density residual".into());
                    }
                }
            }
        }
        if tasks.contains(&Task::Continue) {
            let c = &config.continuation;
            let (lo, hi) = window(c, system.detector.omega_d);
            if !(lo < hi) || c.points < 2 {
                issues.push(format!("continuation: empty window [{lo}, {hi}] with {} points", c.points));
            }
            if c.order == 0 || c.order > config.grid.n {
                issues.push(format!(
                    "continuation.order: {} needs as many positive frequencies, grid has {}",
                    c.order, config.grid.n
                ));
            }
            if c.eta.is_some_and(|e| !(e > 0.0)) {
                issues.push("continuation.eta: must be positive".into());
            }
        }
        if !issues.is_empty() {
            return Err(invalid(issues));
        }
        Ok(Plan {
            config,
            tasks,
            inserted,
            tolerances,
            lambdas,
        })
    }

    pub fn tolerance(&self, name: &str) -> f64 {
        self.tolerances[name]
    }

    pub fn has(&self, task: Task) -> bool {
        self.tasks.contains(&task)
    }

    pub fn system(&self, lambda: f64) -> SystemSpec {
        self.config.system.with_lambda(lambda)
    }

    pub fn grid(&self) -> anyhow::Result<MatsubaraGrid> {
        let g = &self.config.grid;
        Ok(MatsubaraGrid::new(g.beta, g.statistics, g.n)?)
    }

    pub fn oracle_grid(&self) -> anyhow::Result<MatsubaraGrid> {
        Ok(MatsubaraGrid::new(self.config.grid.beta, Statistics::Bosonic, self.config.oracle.n)?)
    }

    /// Hilbert-space sizes the oracle will start from, one per coupling.
    pub fn preflight(&self) -> anyhow::Result<Vec<usize>> {
        if !self.has(Task::Oracle) {
            return Ok(Vec::new());
        }
        let mut sizes = Vec::new();
        for &lambda in &self.lambdas {
            let spec = self.system(lambda);
            let t = spec.truncation_or_thermal()?;
            let dim = spec.dimension(&t);
            if dim > spec.dimension_budget {
                bail!(invalid(vec![format!(
                    "pre-flight: Hilbert space dimension {dim} (boson cutoffs {:?}, {} fermion orbitals) exceeds system.dimension_budget = {}",
                    t.cutoffs(spec.has_oscillator()),
                    spec.orbitals(),
                    spec.dimension_budget
                )]));
            }
            sizes.push(dim);
        }
        Ok(sizes)
    }
}

pub fn window(c: &ContinuationConfig, omega_d: f64) -> (f64, f64) {
    (c.omega_min.unwrap_or(0.5 * omega_d), c.omega_max.unwrap_or(1.5 * omega_d))
}
