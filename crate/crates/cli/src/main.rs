use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use superpose::data::{derive_seed, gen_dataset, read_dataset, sample_rng, write_dataset};
use superpose::eval::{eval_synthesis, eval_token_score, random_search};
use superpose::{
    synthesize, Config, Dataset, DatasetHeader, DatasetSpec, Dsl, InitLogits, NoiseMode,
    PolicyMatrix, Program, Sample, SynthOptions, SynthesisResult,
};

#[derive(Debug, Parser, Serialize)]
#[command(name = "superpose", version, about = "Program synthesis by gradient descent over superposed DSL states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Generate a dataset of I/O samples from random programs.
    GenData(GenDataArgs),
    /// Run gradient-descent synthesis on every sample of a dataset.
    Synthesize(SynthesizeArgs),
    /// Score a results file against its dataset.
    Evaluate(EvaluateArgs),
    /// Run the random-search baseline on every sample of a dataset.
    Baseline(BaselineArgs),
}

#[derive(Debug, clap::Args, Serialize)]
struct GenDataArgs {
    #[arg(long)]
    num: usize,
    #[arg(long)]
    length: usize,
    #[arg(long, default_value_t = 5)]
    observed: usize,
    #[arg(long, default_value_t = 0)]
    assessment: usize,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, value_enum, default_value_t = NoiseModeArg::Test)]
    noise_mode: NoiseModeArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = -100, allow_hyphen_values = true)]
    l_min: i64,
    #[arg(long, default_value_t = 100, allow_hyphen_values = true)]
    l_max: i64,
    #[arg(long, default_value_t = 10)]
    max_len: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum NoiseModeArg {
    Test,
    Train,
}

#[derive(Debug, clap::Args, Serialize)]
struct SynthesizeArgs {
    #[arg(long)]
    data: PathBuf,
    /// Seconds per sample.
    #[arg(long, default_value_t = 5.0)]
    timeout: f64,
    #[arg(long, default_value_t = 0.2)]
    lr: f64,
    #[arg(long)]
    momentum: Option<f64>,
    /// Logits file (one object for all samples, or one per line) or "random".
    #[arg(long, default_value = "random")]
    init: String,
    #[arg(long, default_value_t = 200)]
    restart_iters: usize,
    #[arg(long)]
    max_restarts: Option<usize>,
    /// Only allow head/tail as the final operation.
    #[arg(long)]
    structural_prior: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Metric {
    Synthesis,
    TokenScore,
}

#[derive(Debug, clap::Args, Serialize)]
struct EvaluateArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    results: PathBuf,
    #[arg(long, value_enum)]
    metric: Metric,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, clap::Args, Serialize)]
struct BaselineArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 5.0)]
    timeout: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

/// One line of a results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ResultRecord {
    index: usize,
    program: Program,
    final_loss: f64,
    consistent: bool,
    restarts_used: usize,
    iterations: usize,
    wall_time: f64,
    seed: u64,
}

impl ResultRecord {
    fn new(index: usize, seed: u64, r: SynthesisResult) -> Self {
        ResultRecord {
            index,
            program: r.program,
            final_loss: r.final_loss,
            consistent: r.consistent,
            restarts_used: r.restarts_used,
            iterations: r.iterations,
            wall_time: r.wall_time,
            seed,
        }
    }
}

#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    subcommand: &'static str,
    options: &'a Command,
    config: Config,
    seed: Option<u64>,
    started_at: u64,
    finished_at: u64,
    version: &'static str,
}

#[derive(Debug, Serialize)]
struct EvaluationReport {
    metric: Metric,
    program_length: Option<usize>,
    noise: Option<f64>,
    value: f64,
    samples: usize,
    total_wall_time: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = format!("{e:#}");
            eprintln!("{}", serde_json::json!({ "error": message }));
            ExitCode::FAILURE
        }
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

fn run(command: &Command) -> Result<()> {
    let started_at = unix_now();
    let (name, config, seed, out) = match command {
        Command::GenData(args) => ("gen-data", gen_data(args)?, Some(args.seed), Some(&args.out)),
        Command::Synthesize(args) => {
            let cfg = cmd_synthesize(args)?;
            ("synthesize", cfg, Some(args.seed), Some(&args.out))
        }
        Command::Baseline(args) => {
            let cfg = cmd_baseline(args)?;
            ("baseline", cfg, Some(args.seed), Some(&args.out))
        }
        Command::Evaluate(args) => ("evaluate", cmd_evaluate(args)?, None, args.out.as_ref()),
    };
    if let Some(out) = out {
        let manifest = RunManifest {
            subcommand: name,
            options: command,
            config,
            seed,
            started_at,
            finished_at: unix_now(),
            version: env!("CARGO_PKG_VERSION"),
        };
        let path = manifest_path(out);
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn gen_data(args: &GenDataArgs) -> Result<Config> {
    let cfg = Config::new(args.l_min, args.l_max, args.max_len)?;
    let spec = DatasetSpec {
        num_samples: args.num,
        program_length: args.length,
        examples_observed: args.observed,
        examples_assessment: args.assessment,
        noise_prob: args.noise,
        noise_mode: match args.noise_mode {
            NoiseModeArg::Test => NoiseMode::Test,
            NoiseModeArg::Train => NoiseMode::Train,
        },
        seed: args.seed,
    };
    let dsl = Dsl::new(cfg)?;
    let samples = gen_dataset(&dsl, &spec)?;
    let dataset = Dataset {
        header: Some(DatasetHeader { config: cfg, spec }),
        samples,
    };
    write_dataset(&args.out, &dataset).with_context(|| format!("writing {}", args.out.display()))?;
    Ok(cfg)
}

fn load_dataset(path: &Path) -> Result<(Config, Vec<Sample>)> {
    let dataset = read_dataset(path).with_context(|| format!("reading dataset {}", path.display()))?;
    let cfg = dataset.header.map(|h| h.config).unwrap_or_default();
    Ok((cfg, dataset.samples))
}

fn timeout(secs: f64) -> Result<Duration> {
    if !(secs.is_finite() && secs > 0.0) {
        bail!("timeout must be a positive number of seconds, got {secs}");
    }
    Ok(Duration::from_secs_f64(secs))
}

/// Per-sample initial logits from `--init`.
fn load_init(spec: &str, samples: &[Sample]) -> Result<Vec<Option<PolicyMatrix>>> {
    if spec == "random" {
        return Ok(vec![None; samples.len()]);
    }
    let text = std::fs::read_to_string(spec).with_context(|| format!("reading init file {spec}"))?;
    let files: Vec<InitLogits> = match serde_json::from_str::<InitLogits>(&text) {
        Ok(one) => vec![one; samples.len()],
        Err(_) => text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(n, l)| {
                serde_json::from_str(l).with_context(|| format!("{spec}: line {}", n + 1))
            })
            .collect::<Result<_>>()?,
    };
    if files.len() != samples.len() {
        bail!(
            "init file has {} logit records for {} samples",
            files.len(),
            samples.len()
        );
    }
    files
        .iter()
        .zip(samples)
        .enumerate()
        .map(|(n, (f, s))| {
            f.to_policy(Some(s.length))
                .map(Some)
                .with_context(|| format!("init logits for sample {n}"))
        })
        .collect()
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    if jobs == 0 {
        bail!("--jobs must be at least 1");
    }
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?)
}

fn write_results(path: &Path, records: &[ResultRecord]) -> Result<()> {
    let mut text = String::new();
    for r in records {
        text.push_str(&serde_json::to_string(r)?);
        text.push('\n');
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_results(path: &Path) -> Result<Vec<ResultRecord>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading results {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            serde_json::from_str(l).with_context(|| format!("{}: line {}", path.display(), n + 1))
        })
        .collect()
}

fn cmd_synthesize(args: &SynthesizeArgs) -> Result<Config> {
    let (cfg, samples) = load_dataset(&args.data)?;
    let dsl = Dsl::new(cfg)?;
    let inits = load_init(&args.init, &samples)?;
    let budget = timeout(args.timeout)?;
    let records = pool(args.jobs)?.install(|| {
        samples
            .par_iter()
            .zip(inits)
            .enumerate()
            .map(|(i, (sample, init))| {
                let seed = derive_seed(args.seed, i as u64);
                let opts = SynthOptions {
                    timeout: budget,
                    lr: args.lr,
                    momentum: args.momentum,
                    restart_iters: args.restart_iters,
                    init,
                    seed,
                    structural_prior: args.structural_prior,
                    max_restarts: args.max_restarts,
                };
                synthesize(&dsl, sample, &opts)
                    .map(|r| ResultRecord::new(i, seed, r))
                    .with_context(|| format!("sample {i}"))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    write_results(&args.out, &records)?;
    Ok(cfg)
}

fn cmd_baseline(args: &BaselineArgs) -> Result<Config> {
    let (cfg, samples) = load_dataset(&args.data)?;
    let dsl = Dsl::new(cfg)?;
    let budget = timeout(args.timeout)?;
    let records = pool(args.jobs)?.install(|| {
        samples
            .par_iter()
            .enumerate()
            .map(|(i, sample)| {
                let mut rng = sample_rng(args.seed, i as u64);
                random_search(&dsl, sample, budget, &mut rng)
                    .map(|r| ResultRecord::new(i, args.seed, r))
                    .with_context(|| format!("sample {i}"))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    write_results(&args.out, &records)?;
    Ok(cfg)
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<Config> {
    let (cfg, samples) = load_dataset(&args.data)?;
    let records = read_results(&args.results)?;
    if records.len() != samples.len() {
        bail!(
            "results file has {} records but the dataset has {} samples",
            records.len(),
            samples.len()
        );
    }
    let dsl = Dsl::new(cfg)?;
    let programs: Vec<Program> = records.iter().map(|r| r.program.clone()).collect();
    let value = match args.metric {
        Metric::Synthesis => eval_synthesis(&dsl, &samples, &programs)?,
        Metric::TokenScore => eval_token_score(&dsl, &samples, &programs)?,
    };
    let first = samples.first();
    let report = EvaluationReport {
        metric: args.metric,
        program_length: first.map(|s| s.length),
        noise: first.map(|s| s.noise),
        value,
        samples: samples.len(),
        total_wall_time: records.iter().map(|r| r.wall_time).sum(),
    };
    let text = serde_json::to_string_pretty(&report)?;
    println!("{text}");
    if let Some(out) = &args.out {
        std::fs::write(out, &text).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(cfg)
}
