use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use mode_quest::algorithms::{run_trial_observed, TrialResult};
use mode_quest::bench::{
    bench, figure1_config, preset_benches, scan_delta, scan_scale, table2_config,
    write_bench_outputs, write_delta_csv, write_scale_csv, write_summary_csv, BenchConfig,
    DeltaScanConfig, InstanceRef, Preset, ScaleScanConfig,
};
use mode_quest::bounds::bound_ratio_check;
use mode_quest::ib::{t1_box_sum, y_max_min, y_stat};
use mode_quest::iless::{iless_report, pairwise_z};
use mode_quest::oracle::enumerate_t1;
use mode_quest::sampler::{read_trace, write_trace};
use mode_quest::{Algorithm, Instance, Observation, ObservationState, PriorSpec, RunConfig};

/// Sequential community-mode estimation: single runs, benchmarks and statistics.
#[derive(Parser)]
#[command(name = "mode-quest", version)]
struct Cli {
    /// JSON configuration file for the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config file.
    #[arg(long, global = true, env = "MODE_QUEST_SEED")]
    seed: Option<u64>,
    /// Worker threads for trial-level parallelism (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Output directory; results go to stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single trial and print its result as JSON.
    Run(RunArgs),
    /// Monte-Carlo benchmark of several algorithms on one instance.
    Bench(BenchArgs),
    /// Lower bounds for an instance.
    Bounds(BoundsArgs),
    /// Mean stopping time against δ.
    ScanDelta(ScanArgs),
    /// Mean stopping time against the population scale ω.
    ScanScale(ScanArgs),
    /// Recompute the stopping statistics at every epoch of a trace.
    Stat(StatArgs),
}

#[derive(Args, Clone)]
struct InstanceArgs {
    /// Built-in instance name (I1, I2, I3, dataset1, dataset2, dataset3).
    #[arg(long)]
    instance: Option<String>,
    /// Explicit community sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<u64>>,
    /// Population scale factor.
    #[arg(long)]
    omega: Option<u64>,
}

impl InstanceArgs {
    fn instance_ref(&self) -> Result<Option<InstanceRef>> {
        match (&self.instance, &self.sizes) {
            (Some(_), Some(_)) => bail!("give either --instance or --sizes, not both"),
            (Some(name), None) => Ok(Some(InstanceRef::Named(name.clone()))),
            (None, Some(sizes)) => Ok(Some(InstanceRef::Explicit(Instance::new(sizes.clone())?))),
            (None, None) => Ok(None),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long)]
    algorithm: Option<Algorithm>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    alpha: Option<u32>,
    /// Geometric prior parameter.
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    max_epochs: Option<u64>,
    /// Trial index selecting the random stream.
    #[arg(long)]
    trial: Option<u64>,
    /// Write the observation trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// `table1` or `table3`.
    #[arg(long)]
    preset: Option<Preset>,
    #[arg(long)]
    runs: Option<u64>,
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Args)]
struct ScanArgs {
    /// `figure1` for scan-delta, `table2` for scan-scale.
    #[arg(long)]
    preset: Option<Preset>,
    #[arg(long)]
    runs: Option<u64>,
}

#[derive(Args)]
struct StatArgs {
    /// Trace CSV with columns `t,community,fresh`.
    #[arg(long)]
    trace: PathBuf,
    /// Number of communities; defaults to the largest label in the trace.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 1)]
    alpha: u32,
    #[arg(long, default_value_t = 0.1)]
    q: f64,
    /// Append brute-force reference columns.
    #[arg(long, hide = true)]
    oracle: bool,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn emit(out: Option<&Path>, file: &str, bytes: &[u8]) -> Result<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(file), bytes)?;
        }
        None => io::stdout().write_all(bytes)?,
    }
    Ok(())
}

/// Configuration file for `run` and `bounds`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RunFile {
    instance: InstanceRef,
    #[serde(default = "one")]
    omega: u64,
    #[serde(flatten)]
    config: RunConfig,
    #[serde(default)]
    trial: u64,
}

fn one() -> u64 {
    1
}

#[derive(Serialize)]
struct RunRecord<'a> {
    instance: String,
    sizes: &'a [u64],
    trial: u64,
    config: &'a RunConfig,
    #[serde(flatten)]
    result: TrialResult,
}

fn cmd_run(cli: &Cli, args: &RunArgs) -> Result<()> {
    let mut file = match &cli.config {
        Some(path) => read_json::<RunFile>(path)?,
        None => RunFile {
            instance: InstanceRef::Named("I1".into()),
            omega: 1,
            config: RunConfig::new(Algorithm::NiMe, 0.1),
            trial: 0,
        },
    };
    if let Some(instance) = args.instance.instance_ref()? {
        file.instance = instance;
    }
    if let Some(omega) = args.instance.omega {
        file.omega = omega;
    }
    let config = &mut file.config;
    if let Some(a) = args.algorithm {
        config.algorithm = a;
    }
    if let Some(d) = args.delta {
        config.delta = d;
    }
    if let Some(a) = args.alpha {
        config.alpha = a;
    }
    if let Some(q) = args.q {
        config.prior = PriorSpec::geometric(q)?;
    }
    if let Some(m) = args.max_epochs {
        config.max_epochs = m;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(trial) = args.trial {
        file.trial = trial;
    }
    let instance = file.instance.resolve(file.omega)?;
    let mut trace: Vec<Observation> = Vec::new();
    let result = run_trial_observed(&instance, &file.config, file.trial, &mut trace)?;
    if let Some(path) = &args.trace {
        write_trace(fs::File::create(path)?, &trace)?;
    }
    let record = RunRecord {
        instance: instance.name().map(str::to_string).unwrap_or_default(),
        sizes: instance.sizes(),
        trial: file.trial,
        config: &file.config,
        result,
    };
    let mut line = serde_json::to_vec(&record)?;
    line.push(b'\n');
    emit(cli.out.as_deref(), "run.json", &line)
}

fn cmd_bench(cli: &Cli, args: &BenchArgs) -> Result<()> {
    let mut configs: Vec<BenchConfig> = match (&cli.config, args.preset) {
        (Some(_), Some(_)) => bail!("give either --config or --preset, not both"),
        (Some(path), None) => vec![read_json(path)?],
        (None, Some(preset)) => preset_benches(preset, 0)?,
        (None, None) => match args.instance.instance_ref()? {
            Some(instance) => vec![BenchConfig::new(
                instance,
                mode_quest::bench::standard_algorithms(),
            )],
            None => bail!("bench needs --config, --preset or an instance"),
        },
    };
    for config in &mut configs {
        if let Some(instance) = args.instance.instance_ref()? {
            config.instance = instance;
        }
        if let Some(omega) = args.instance.omega {
            config.omega = omega;
        }
        if let Some(seed) = cli.seed {
            config.seed = seed;
        }
        if let Some(runs) = args.runs {
            config.runs = runs;
        }
        if let Some(delta) = args.delta {
            config.delta = delta;
        }
    }
    let mut outputs = Vec::new();
    for config in &configs {
        let start = Instant::now();
        let output = bench(config, cli.jobs)?;
        // timing stays out of the output files so they are reproducible
        eprintln!(
            "{}: {} algorithms x {} runs in {:.2}s",
            output.summary.instance,
            config.algorithms.len(),
            config.runs,
            start.elapsed().as_secs_f64()
        );
        outputs.push(output);
    }
    match &cli.out {
        Some(dir) => write_bench_outputs(dir, &outputs)?,
        None => {
            let summaries: Vec<_> = outputs.into_iter().map(|o| o.summary).collect();
            write_summary_csv(io::stdout(), &summaries)?;
        }
    }
    Ok(())
}

fn cmd_bounds(cli: &Cli, args: &BoundsArgs) -> Result<()> {
    let (instance, mut delta) = match &cli.config {
        Some(path) => {
            let file: RunFile = read_json(path)?;
            (file.instance.resolve(file.omega)?, file.config.delta)
        }
        None => {
            let instance = args
                .instance
                .instance_ref()?
                .context("bounds needs --config, --instance or --sizes")?;
            (instance.resolve(args.instance.omega.unwrap_or(1))?, 0.1)
        }
    };
    if let Some(d) = args.delta {
        delta = d;
    }
    let report = bound_ratio_check(&instance, delta)?;
    let mut text = serde_json::to_vec_pretty(&report)?;
    text.push(b'\n');
    emit(cli.out.as_deref(), "bounds.json", &text)
}

fn cmd_scan_delta(cli: &Cli, args: &ScanArgs) -> Result<()> {
    let mut config: DeltaScanConfig = match (&cli.config, args.preset) {
        (Some(path), None) => read_json(path)?,
        (None, Some(Preset::Figure1)) => figure1_config(0),
        (None, Some(_)) => bail!("scan-delta supports the figure1 preset only"),
        _ => bail!("scan-delta needs exactly one of --config or --preset"),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(runs) = args.runs {
        config.runs = runs;
    }
    let rows = scan_delta(&config, cli.jobs)?;
    let mut buf = Vec::new();
    write_delta_csv(&mut buf, &rows)?;
    emit(cli.out.as_deref(), "scan_delta.csv", &buf)
}

fn cmd_scan_scale(cli: &Cli, args: &ScanArgs) -> Result<()> {
    let mut config: ScaleScanConfig = match (&cli.config, args.preset) {
        (Some(path), None) => read_json(path)?,
        (None, Some(Preset::Table2)) => table2_config(0),
        (None, Some(_)) => bail!("scan-scale supports the table2 preset only"),
        _ => bail!("scan-scale needs exactly one of --config or --preset"),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(runs) = args.runs {
        config.runs = runs;
    }
    let rows = scan_scale(&config, cli.jobs)?;
    let mut buf = Vec::new();
    write_scale_csv(&mut buf, &rows)?;
    emit(cli.out.as_deref(), "scan_scale.csv", &buf)
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

fn cmd_stat(cli: &Cli, args: &StatArgs) -> Result<()> {
    let trace = read_trace(fs::File::open(&args.trace)?)?;
    let largest = trace.iter().map(|o| o.community + 1).max().unwrap_or(0);
    let k = args.k.unwrap_or(largest.max(2));
    if largest > k {
        bail!("trace mentions community {largest} but --k is {k}");
    }
    let identity = match (
        trace.iter().all(|o| o.fresh.is_some()),
        trace.iter().all(|o| o.fresh.is_none()),
    ) {
        (true, _) if !trace.is_empty() => true,
        (_, true) => false,
        _ => bail!("trace mixes rows with and without a fresh flag"),
    };
    let prior = PriorSpec::geometric(args.q)?;
    let mut out = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = if identity {
        vec![
            "t", "active", "Y", "a_tilde", "b_tilde", "gamma0", "box_size",
        ]
    } else {
        vec!["t", "Z", "Z_tilde", "a_hat", "b_hat"]
    };
    if args.oracle {
        header.extend(if identity {
            vec!["Y_maxmin", "T1", "T1_enumerated"]
        } else {
            vec!["Z_maxmin"]
        });
    }
    out.write_record(&header)?;
    let mut state = ObservationState::new(k);
    for obs in &trace {
        state.record(obs);
        let t = state.t().to_string();
        let mut row: Vec<String> = if identity {
            let r = y_stat(state.distinct(), state.t(), args.alpha, &prior)?;
            vec![
                t,
                u8::from(r.active).to_string(),
                fmt_opt(r.y),
                (r.a_tilde + 1).to_string(),
                (r.b_tilde + 1).to_string(),
                fmt_opt(r.gamma0),
                r.box_size.to_string(),
            ]
        } else {
            let r = iless_report(state.counts())?;
            vec![
                t,
                r.z.to_string(),
                r.z_tilde.to_string(),
                (r.a_hat + 1).to_string(),
                (r.b_hat + 1).to_string(),
            ]
        };
        if args.oracle {
            if identity {
                let active = state.identity_active();
                let small = mode_quest::ib::box_cardinality(state.distinct(), args.alpha) <= 1e6;
                let maxmin =
                    active.then(|| y_max_min(state.distinct(), state.t(), args.alpha, &prior));
                row.push(fmt_opt(maxmin.transpose()?));
                row.push(t1_box_sum(state.distinct(), state.t(), args.alpha, &prior)?.to_string());
                row.push(fmt_opt(small.then(|| {
                    enumerate_t1(state.distinct(), state.t(), args.alpha, &prior)
                })));
            } else {
                let pairs = pairwise_z(state.counts())?;
                let maxmin = (0..k)
                    .map(|a| {
                        pairs
                            .iter()
                            .filter(|((x, _), _)| *x == a)
                            .map(|(_, &v)| v)
                            .fold(f64::INFINITY, f64::min)
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                row.push(maxmin.to_string());
            }
        }
        out.write_record(&row)?;
    }
    let bytes = out.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
    emit(cli.out.as_deref(), "stat.csv", &bytes)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run(args) => cmd_run(&cli, args),
        Command::Bench(args) => cmd_bench(&cli, args),
        Command::Bounds(args) => cmd_bounds(&cli, args),
        Command::ScanDelta(args) => cmd_scan_delta(&cli, args),
        Command::ScanScale(args) => cmd_scan_scale(&cli, args),
        Command::Stat(args) => cmd_stat(&cli, args),
    }
}
