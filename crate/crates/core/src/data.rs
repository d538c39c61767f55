//! Random programs, I/O samples, output noise and the line-delimited dataset
//! format.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dsl::{Dsl, FunctionId, Program};
use crate::error::{Error, Result};
use crate::state::{Config, Value};

/// Input redraws allowed per example before the program is given up on.
pub const REJECTION_BUDGET: usize = 10_000;

/// Program redraws allowed per sample before generation fails.
const PROGRAM_REDRAWS: usize = 1_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// Examples the program is inferred from.
    pub observed: Vec<(Value, Value)>,
    /// Held-out examples for output prediction; empty for pure synthesis.
    #[serde(default)]
    pub assessment: Vec<(Value, Value)>,
    /// Ground-truth program.
    pub program: Program,
    pub length: usize,
    #[serde(default)]
    pub noise: f64,
}

/// Where output noise is injected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    /// Observed outputs only; assessment outputs stay clean.
    #[default]
    Test,
    /// Every output.
    Train,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub num_samples: usize,
    pub program_length: usize,
    pub examples_observed: usize,
    pub examples_assessment: usize,
    pub noise_prob: f64,
    #[serde(default)]
    pub noise_mode: NoiseMode,
    pub seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            num_samples: 1,
            program_length: 1,
            examples_observed: 5,
            examples_assessment: 0,
            noise_prob: 0.0,
            noise_mode: NoiseMode::Test,
            seed: 0,
        }
    }
}

impl DatasetSpec {
    pub fn check(&self) -> Result<()> {
        if self.program_length == 0 {
            return Err(Error::Options("program_length must be at least 1".into()));
        }
        if self.examples_observed == 0 {
            return Err(Error::Options("need at least one observed example".into()));
        }
        if !(0.0..=1.0).contains(&self.noise_prob) {
            return Err(Error::Options(format!(
                "noise probability {} outside [0, 1]",
                self.noise_prob
            )));
        }
        Ok(())
    }
}

/// Uniform random program; `head`/`tail` only in the final position, since
/// anywhere earlier they force a null output.
pub fn gen_program(length: usize, rng: &mut impl Rng) -> Program {
    let arithmetic: Vec<FunctionId> = FunctionId::ALL
        .iter()
        .copied()
        .filter(|f| !f.is_selector())
        .collect();
    Program(
        (0..length)
            .map(|t| {
                let pool: &[FunctionId] = if t + 1 == length {
                    &FunctionId::ALL
                } else {
                    &arithmetic
                };
                *pool.choose(rng).expect("pool is non-empty")
            })
            .collect(),
    )
}

/// Random list input: length uniform in `1..=L`, elements uniform in range.
pub fn gen_input(cfg: &Config, rng: &mut impl Rng) -> Value {
    let len = rng.gen_range(1..=cfg.max_len);
    Value::List((0..len).map(|_| rng.gen_range(cfg.l_min..=cfg.l_max)).collect())
}

/// Draws `count` examples for a fixed program, redrawing inputs whose output
/// is null.
pub fn gen_examples(
    dsl: &Dsl,
    program: &Program,
    count: usize,
    rng: &mut impl Rng,
) -> Result<Vec<(Value, Value)>> {
    let mut examples = Vec::with_capacity(count);
    for _ in 0..count {
        let mut found = None;
        for _ in 0..REJECTION_BUDGET {
            let input = gen_input(dsl.config(), rng);
            let output = dsl.execute(program, &input);
            if !output.is_null() {
                found = Some((input, output));
                break;
            }
        }
        match found {
            Some(pair) => examples.push(pair),
            None => {
                return Err(Error::RejectionBudget {
                    program: program.clone(),
                    attempts: REJECTION_BUDGET,
                })
            }
        }
    }
    Ok(examples)
}

/// One noiseless-then-noised sample. Programs whose outputs keep coming out
/// null are redrawn.
pub fn gen_sample(dsl: &Dsl, spec: &DatasetSpec, rng: &mut impl Rng) -> Result<Sample> {
    spec.check()?;
    let count = spec.examples_observed + spec.examples_assessment;
    let mut last_err = None;
    for _ in 0..PROGRAM_REDRAWS {
        let program = gen_program(spec.program_length, rng);
        match gen_examples(dsl, &program, count, rng) {
            Ok(mut examples) => {
                let assessment = examples.split_off(spec.examples_observed);
                let mut sample = Sample {
                    observed: examples,
                    assessment,
                    length: spec.program_length,
                    program,
                    noise: spec.noise_prob,
                };
                apply_noise(&mut sample, dsl.config(), spec.noise_prob, spec.noise_mode, rng)?;
                return Ok(sample);
            }
            Err(e @ Error::RejectionBudget { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.expect("loop ran at least once"))
}

fn apply_noise(
    sample: &mut Sample,
    cfg: &Config,
    p: f64,
    mode: NoiseMode,
    rng: &mut impl Rng,
) -> Result<()> {
    if p == 0.0 {
        return Ok(());
    }
    for (_, out) in &mut sample.observed {
        *out = inject_noise(out, cfg, p, rng)?;
    }
    if mode == NoiseMode::Train {
        for (_, out) in &mut sample.assessment {
            *out = inject_noise(out, cfg, p, rng)?;
        }
    }
    Ok(())
}

/// Replaces each value token independently with probability `p` by a uniform
/// integer in range. Type and length are preserved.
pub fn inject_noise(v: &Value, cfg: &Config, p: f64, rng: &mut impl Rng) -> Result<Value> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Options(format!("noise probability {p} outside [0, 1]")));
    }
    let mut token = |x: i64| {
        if rng.gen_bool(p) {
            rng.gen_range(cfg.l_min..=cfg.l_max)
        } else {
            x
        }
    };
    match v {
        Value::Null => Err(Error::Value("cannot inject noise into a null output".into())),
        Value::Int(k) => Ok(Value::Int(token(*k))),
        Value::List(xs) => Ok(Value::List(xs.iter().map(|x| token(*x)).collect())),
    }
}

/// Per-sample generator seeded from the dataset seed and the sample index.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Seed for work item `index` of a run seeded with `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    sample_rng(seed, index).next_u64()
}

pub fn gen_dataset(dsl: &Dsl, spec: &DatasetSpec) -> Result<Vec<Sample>> {
    spec.check()?;
    (0..spec.num_samples)
        .map(|i| gen_sample(dsl, spec, &mut sample_rng(spec.seed, i as u64)))
        .collect()
}

/// Provenance header written as the first line of a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub config: Config,
    pub spec: DatasetSpec,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub header: Option<DatasetHeader>,
    pub samples: Vec<Sample>,
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    header: DatasetHeader,
}

pub fn write_dataset(path: &Path, dataset: &Dataset) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write_dataset_to(&mut w, dataset)?;
    w.flush()?;
    Ok(())
}

pub fn write_dataset_to(w: &mut impl Write, dataset: &Dataset) -> Result<()> {
    if let Some(header) = &dataset.header {
        serde_json::to_writer(
            &mut *w,
            &HeaderLine {
                header: header.clone(),
            },
        )?;
        writeln!(w)?;
    }
    for sample in &dataset.samples {
        serde_json::to_writer(&mut *w, sample)?;
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    read_dataset_from(BufReader::new(std::fs::File::open(path)?))
}

pub fn read_dataset_from(r: impl BufRead) -> Result<Dataset> {
    let mut dataset = Dataset::default();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |e: serde_json::Error| Error::Parse {
            line: lineno,
            message: e.to_string(),
        };
        if n == 0 && line.trim_start().starts_with("{\"header\"") {
            let h: HeaderLine = serde_json::from_str(&line).map_err(parse_err)?;
            dataset.header = Some(h.header);
            continue;
        }
        let sample: Sample = serde_json::from_str(&line).map_err(parse_err)?;
        if sample.program.len() != sample.length {
            return Err(Error::Parse {
                line: lineno,
                message: format!(
                    "program has {} steps but length is {}",
                    sample.program.len(),
                    sample.length
                ),
            });
        }
        dataset.samples.push(sample);
    }
    Ok(dataset)
}
