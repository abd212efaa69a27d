//! Monte-Carlo benchmark harness.
//!
//! Trials run in parallel, but each trial owns the random stream
//! `(seed, trial)` and results are collected in trial order, so every output
//! is a pure function of the configuration and seed regardless of the thread
//! count. The same stream index is shared across algorithms, which couples
//! their traces (common random numbers).

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{run_trial, RuleFired, TrialResult};
use crate::bounds::{bound_ratio_check, lb_identity_based, lb_identityless, BoundReport};
use crate::error::{Error, Result};
use crate::model::{Algorithm, Instance, PriorSpec, RunConfig, DEFAULT_MAX_EPOCHS};

/// Base vector of the scaled family `I3(ω) = ω [20, 18, 6, 3, 3]`.
pub const I3_BASE: [u64; 5] = [20, 18, 6, 3, 3];

/// Named instances: `I1`, `I2`, `I3` (at `ω = 1`), `dataset1..3`.
pub fn builtin_instances() -> BTreeMap<String, Instance> {
    let table: [(&str, &[u64]); 6] = [
        ("I1", &[20, 12, 8, 5, 5]),
        ("I2", &[20, 16, 6, 4, 4]),
        ("I3", &I3_BASE),
        (
            "dataset1",
            &[41, 16, 3, 14, 31, 29, 5, 5, 11, 7, 2, 3, 9, 3],
        ),
        (
            "dataset2",
            &[19, 39, 14, 44, 18, 139, 13, 12, 39, 25, 20, 118],
        ),
        (
            "dataset3",
            &[172, 72, 82, 88, 155, 107, 289, 2, 2, 3, 11, 12, 1, 4],
        ),
    ];
    table
        .into_iter()
        .map(|(name, sizes)| {
            let instance = Instance::new(sizes.to_vec()).expect("built-in instances are valid");
            (name.to_string(), instance.with_name(name))
        })
        .collect()
}

/// Looks up a built-in (case-insensitive) and scales it by `omega`.
pub fn builtin_instance(name: &str, omega: u64) -> Result<Instance> {
    let registry = builtin_instances();
    let (key, base) = registry
        .iter()
        .find(|(key, _)| key.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::UnknownInstance(name.to_string()))?;
    if omega == 1 {
        return Ok(base.clone());
    }
    Ok(base.scaled(omega)?.with_name(format!("{key}x{omega}")))
}

/// An instance given either by built-in name or by explicit sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstanceRef {
    Named(String),
    Explicit(Instance),
}

impl InstanceRef {
    pub fn resolve(&self, omega: u64) -> Result<Instance> {
        match self {
            InstanceRef::Named(name) => builtin_instance(name, omega),
            InstanceRef::Explicit(instance) if omega == 1 => Ok(instance.clone()),
            InstanceRef::Explicit(instance) => instance.scaled(omega),
        }
    }
}

fn default_alpha() -> u32 {
    1
}

fn default_one() -> u64 {
    1
}

/// One algorithm column of a benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub algorithm: Algorithm,
    #[serde(default = "default_alpha")]
    pub alpha: u32,
    #[serde(default)]
    pub prior: PriorSpec,
    /// Overrides the benchmark-wide δ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default = "default_one")]
    pub check_every: u64,
}

impl AlgorithmSpec {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            alpha: 1,
            prior: PriorSpec::default(),
            delta: None,
            label: None,
            check_every: 1,
        }
    }

    pub fn with_alpha(mut self, alpha: u32) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_prior(mut self, prior: PriorSpec) -> Self {
        self.prior = prior;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    /// The explicit label, or one derived from the parameters.
    pub fn display_label(&self) -> String {
        if let Some(label) = &self.label {
            return label.clone();
        }
        if self.algorithm.identity_based() {
            format!(
                "{} alpha={} {}",
                self.algorithm,
                self.alpha,
                self.prior.label()
            )
        } else {
            self.algorithm.to_string()
        }
    }

    pub fn run_config(&self, delta: f64, seed: u64, max_epochs: u64) -> RunConfig {
        let mut config = RunConfig::new(self.algorithm, self.delta.unwrap_or(delta))
            .with_alpha(self.alpha)
            .with_prior(self.prior)
            .with_seed(seed)
            .with_max_epochs(max_epochs);
        config.check_every = self.check_every;
        config
    }

    /// The information-theoretic bound matching this algorithm's sampling model.
    pub fn lower_bound(&self, instance: &Instance, delta: f64) -> Result<f64> {
        if self.algorithm.identity_based() {
            lb_identity_based(instance, delta)
        } else {
            lb_identityless(instance, delta)
        }
    }
}

/// The four algorithms at `α = 1` with a Geometric(0.1) prior.
pub fn standard_algorithms() -> Vec<AlgorithmSpec> {
    Algorithm::ALL
        .iter()
        .map(|&a| AlgorithmSpec::new(a))
        .collect()
}

fn default_delta() -> f64 {
    0.1
}

fn default_runs() -> u64 {
    100
}

fn default_max_epochs() -> u64 {
    DEFAULT_MAX_EPOCHS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub instance: InstanceRef,
    /// Population scale factor applied to `instance`.
    #[serde(default = "default_one")]
    pub omega: u64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "standard_algorithms")]
    pub algorithms: Vec<AlgorithmSpec>,
    #[serde(default = "default_runs")]
    pub runs: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_epochs")]
    pub max_epochs: u64,
}

impl BenchConfig {
    pub fn new(instance: InstanceRef, algorithms: Vec<AlgorithmSpec>) -> Self {
        Self {
            instance,
            omega: 1,
            delta: default_delta(),
            algorithms,
            runs: default_runs(),
            seed: 0,
            max_epochs: DEFAULT_MAX_EPOCHS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs < 1 {
            return Err(Error::InvalidParameter("runs must be >= 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidParameter("no algorithms configured".into()));
        }
        if self.omega < 1 {
            return Err(Error::InvalidParameter("omega must be >= 1".into()));
        }
        self.instance.resolve(self.omega)?;
        for spec in &self.algorithms {
            spec.run_config(self.delta, self.seed, self.max_epochs)
                .validate()?;
        }
        Ok(())
    }
}

/// One line of the per-trial JSON-lines output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub instance: String,
    pub label: String,
    pub algorithm: Algorithm,
    pub delta: f64,
    pub alpha: u32,
    pub prior: PriorSpec,
    pub seed: u64,
    pub trial: u64,
    #[serde(flatten)]
    pub result: TrialResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub label: String,
    pub algorithm: Algorithm,
    pub delta: f64,
    pub runs: u64,
    pub mean_tau: f64,
    pub stddev_tau: f64,
    pub stderr_tau: f64,
    pub min_tau: u64,
    pub max_tau: u64,
    pub errors: u64,
    pub error_rate: f64,
    pub identityless_stops: u64,
    pub identity_based_stops: u64,
    pub capped: u64,
    pub lower_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub instance: String,
    pub sizes: Vec<u64>,
    pub seed: u64,
    pub runs: u64,
    pub bounds: BoundReport,
    pub algorithms: Vec<AlgorithmSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOutput {
    pub trials: Vec<TrialRecord>,
    pub summary: BenchSummary,
}

/// Runs `f(trial)` for `trial in 0..runs` on `jobs` threads (0 = all cores),
/// returning results in trial order.
pub fn parallel_trials<T, F>(runs: u64, jobs: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| (0..runs).into_par_iter().map(&f).collect())
}

/// Mean, sample standard deviation and standard error.
pub fn moments(values: &[f64]) -> (f64, f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt(), (var / n).sqrt())
}

/// Aggregates trial results in the order given.
pub fn summarize(
    label: &str,
    algorithm: Algorithm,
    delta: f64,
    lower_bound: f64,
    results: &[TrialResult],
) -> AlgorithmSummary {
    let taus: Vec<f64> = results.iter().map(|r| r.stopping_time as f64).collect();
    let (mean_tau, stddev_tau, stderr_tau) = moments(&taus);
    let count = |rule| results.iter().filter(|r| r.rule_fired == rule).count() as u64;
    let errors = results.iter().filter(|r| r.error == Some(true)).count() as u64;
    AlgorithmSummary {
        label: label.to_string(),
        algorithm,
        delta,
        runs: results.len() as u64,
        mean_tau,
        stddev_tau,
        stderr_tau,
        min_tau: results.iter().map(|r| r.stopping_time).min().unwrap_or(0),
        max_tau: results.iter().map(|r| r.stopping_time).max().unwrap_or(0),
        errors,
        error_rate: errors as f64 / results.len().max(1) as f64,
        identityless_stops: count(RuleFired::Identityless),
        identity_based_stops: count(RuleFired::IdentityBased),
        capped: count(RuleFired::MaxEpochsCap),
        lower_bound,
    }
}

fn instance_label(instance: &Instance) -> String {
    match instance.name() {
        Some(name) => name.to_string(),
        None => format!("{:?}", instance.sizes()),
    }
}

/// Runs `runs` seeded trials of one algorithm on `instance`.
pub fn run_algorithm(
    instance: &Instance,
    spec: &AlgorithmSpec,
    delta: f64,
    runs: u64,
    seed: u64,
    max_epochs: u64,
    jobs: usize,
) -> Result<Vec<TrialResult>> {
    let config = spec.run_config(delta, seed, max_epochs);
    config.validate()?;
    parallel_trials(runs, jobs, |trial| run_trial(instance, &config, trial))
}

pub fn bench(config: &BenchConfig, jobs: usize) -> Result<BenchOutput> {
    config.validate()?;
    let instance = config.instance.resolve(config.omega)?;
    let name = instance_label(&instance);
    let mut trials = Vec::new();
    let mut summaries = Vec::new();
    for spec in &config.algorithms {
        let delta = spec.delta.unwrap_or(config.delta);
        let label = spec.display_label();
        let results = run_algorithm(
            &instance,
            spec,
            delta,
            config.runs,
            config.seed,
            config.max_epochs,
            jobs,
        )?;
        summaries.push(summarize(
            &label,
            spec.algorithm,
            delta,
            spec.lower_bound(&instance, delta)?,
            &results,
        ));
        trials.extend(
            results
                .into_iter()
                .enumerate()
                .map(|(trial, result)| TrialRecord {
                    instance: name.clone(),
                    label: label.clone(),
                    algorithm: spec.algorithm,
                    delta,
                    alpha: spec.alpha,
                    prior: spec.prior,
                    seed: config.seed,
                    trial: trial as u64,
                    result,
                }),
        );
    }
    Ok(BenchOutput {
        trials,
        summary: BenchSummary {
            instance: name,
            sizes: instance.sizes().to_vec(),
            seed: config.seed,
            runs: config.runs,
            bounds: bound_ratio_check(&instance, config.delta)?,
            algorithms: summaries,
        },
    })
}

/// Writes one JSON object per line.
pub fn write_json_lines<W: Write, T: Serialize>(mut writer: W, records: &[T]) -> Result<()> {
    for record in records {
        serde_json::to_writer(&mut writer, record)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub const SUMMARY_COLUMNS: [&str; 15] = [
    "instance",
    "label",
    "algorithm",
    "delta",
    "runs",
    "mean_tau",
    "stddev_tau",
    "stderr_tau",
    "min_tau",
    "max_tau",
    "error_rate",
    "identityless_stops",
    "identity_based_stops",
    "capped",
    "lower_bound",
];

pub fn write_summary_csv<W: Write>(writer: W, summaries: &[BenchSummary]) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(SUMMARY_COLUMNS)?;
    for summary in summaries {
        for row in &summary.algorithms {
            out.write_record([
                summary.instance.clone(),
                row.label.clone(),
                row.algorithm.to_string(),
                row.delta.to_string(),
                row.runs.to_string(),
                row.mean_tau.to_string(),
                row.stddev_tau.to_string(),
                row.stderr_tau.to_string(),
                row.min_tau.to_string(),
                row.max_tau.to_string(),
                row.error_rate.to_string(),
                row.identityless_stops.to_string(),
                row.identity_based_stops.to_string(),
                row.capped.to_string(),
                row.lower_bound.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Writes `trials.jsonl`, `summary.csv` and `summary.json` into `dir`.
pub fn write_bench_outputs(dir: &Path, outputs: &[BenchOutput]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut trials = fs::File::create(dir.join("trials.jsonl"))?;
    for output in outputs {
        write_json_lines(&mut trials, &output.trials)?;
    }
    let summaries: Vec<BenchSummary> = outputs.iter().map(|o| o.summary.clone()).collect();
    write_summary_csv(fs::File::create(dir.join("summary.csv"))?, &summaries)?;
    let json = serde_json::to_string_pretty(&summaries)?;
    fs::write(dir.join("summary.json"), json + "\n")?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaScanConfig {
    pub instance: InstanceRef,
    pub deltas: Vec<f64>,
    #[serde(default = "standard_algorithms")]
    pub algorithms: Vec<AlgorithmSpec>,
    #[serde(default = "default_runs")]
    pub runs: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_epochs")]
    pub max_epochs: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub algorithm: String,
    pub delta: f64,
    pub mean_tau: f64,
    pub stderr: f64,
}

/// Mean stopping time per `(algorithm, δ)`; rows grouped by algorithm.
pub fn scan_delta(config: &DeltaScanConfig, jobs: usize) -> Result<Vec<DeltaRow>> {
    let instance = config.instance.resolve(1)?;
    if config.deltas.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
        return Err(Error::InvalidParameter("deltas must lie in (0, 1)".into()));
    }
    let mut rows = Vec::new();
    for spec in &config.algorithms {
        for &delta in &config.deltas {
            let results = run_algorithm(
                &instance,
                spec,
                delta,
                config.runs,
                config.seed,
                config.max_epochs,
                jobs,
            )?;
            let taus: Vec<f64> = results.iter().map(|r| r.stopping_time as f64).collect();
            let (mean_tau, _, stderr) = moments(&taus);
            rows.push(DeltaRow {
                algorithm: spec.display_label(),
                delta,
                mean_tau,
                stderr,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleScanConfig {
    pub instance: InstanceRef,
    pub omegas: Vec<u64>,
    #[serde(default = "standard_algorithms")]
    pub algorithms: Vec<AlgorithmSpec>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_runs")]
    pub runs: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_epochs")]
    pub max_epochs: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleRow {
    pub omega: u64,
    #[serde(rename = "N")]
    pub n: u64,
    pub algorithm: String,
    pub mean_tau: f64,
}

/// Seed for the row at scale `ω`: each row gets its own trials.
pub fn scale_seed(seed: u64, omega: u64) -> u64 {
    seed ^ omega.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Mean stopping time per `(ω, algorithm)` on `ω · instance`.
pub fn scan_scale(config: &ScaleScanConfig, jobs: usize) -> Result<Vec<ScaleRow>> {
    let mut rows = Vec::new();
    for &omega in &config.omegas {
        if omega < 1 {
            return Err(Error::InvalidParameter("omega must be >= 1".into()));
        }
        let instance = config.instance.resolve(omega)?;
        let seed = scale_seed(config.seed, omega);
        for spec in &config.algorithms {
            let results = run_algorithm(
                &instance,
                spec,
                spec.delta.unwrap_or(config.delta),
                config.runs,
                seed,
                config.max_epochs,
                jobs,
            )?;
            let taus: Vec<f64> = results.iter().map(|r| r.stopping_time as f64).collect();
            rows.push(ScaleRow {
                omega,
                n: instance.population(),
                algorithm: spec.display_label(),
                mean_tau: moments(&taus).0,
            });
        }
    }
    Ok(rows)
}

pub fn write_delta_csv<W: Write>(writer: W, rows: &[DeltaRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    for row in rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_scale_csv<W: Write>(writer: W, rows: &[ScaleRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    for row in rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

/// Least-squares fit `y = slope x + intercept`; returns `(slope, intercept, R²)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    (slope, intercept, r2)
}

/// Paper-experiment configurations, one command each.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Table1,
    Table2,
    Table3,
    Figure1,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "table1" => Ok(Preset::Table1),
            "table2" => Ok(Preset::Table2),
            "table3" => Ok(Preset::Table3),
            "figure1" => Ok(Preset::Figure1),
            other => Err(Error::InvalidParameter(format!("unknown preset `{other}`"))),
        }
    }
}

/// The Table 1 algorithm set: the four standard columns plus the α = 3 and
/// Geometric(0.9) IB-CME variants.
pub fn table1_algorithms() -> Vec<AlgorithmSpec> {
    let mut algorithms = standard_algorithms();
    algorithms.push(AlgorithmSpec::new(Algorithm::IbCme).with_alpha(3));
    algorithms
        .push(AlgorithmSpec::new(Algorithm::IbCme).with_prior(PriorSpec::Geometric { q: 0.9 }));
    algorithms
}

/// Bench configurations for `table1` and `table3`.
pub fn preset_benches(preset: Preset, seed: u64) -> Result<Vec<BenchConfig>> {
    let make = |name: &str, algorithms: Vec<AlgorithmSpec>| {
        let mut config = BenchConfig::new(InstanceRef::Named(name.into()), algorithms);
        config.seed = seed;
        config
    };
    match preset {
        Preset::Table1 => Ok(vec![
            make("I1", table1_algorithms()),
            make("I2", table1_algorithms()),
        ]),
        Preset::Table3 => Ok(["dataset1", "dataset2", "dataset3"]
            .iter()
            .map(|name| make(name, standard_algorithms()))
            .collect()),
        _ => Err(Error::InvalidParameter(
            "preset is not a bench preset".into(),
        )),
    }
}

pub fn table2_config(seed: u64) -> ScaleScanConfig {
    ScaleScanConfig {
        instance: InstanceRef::Named("I3".into()),
        omegas: vec![1, 5, 10, 15, 20, 25, 30, 35, 40],
        algorithms: standard_algorithms(),
        delta: 0.1,
        runs: 100,
        seed,
        max_epochs: DEFAULT_MAX_EPOCHS,
    }
}

pub fn figure1_config(seed: u64) -> DeltaScanConfig {
    DeltaScanConfig {
        instance: InstanceRef::Named("I2".into()),
        deltas: vec![0.1, 0.01, 0.001],
        algorithms: standard_algorithms(),
        runs: 100,
        seed,
        max_epochs: DEFAULT_MAX_EPOCHS,
    }
}
