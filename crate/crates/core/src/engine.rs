//! Superposed execution of a program distribution, the token cross-entropy
//! loss, its reverse-mode gradient, and the restart-based descent driver.
//!
//! At every step the batch state is replaced by `sum_s pi[t][s] * f_s(state)`.
//! Because every transform is linear, the final state is the
//! probability-weighted sum over all `n^T` concrete programs, yet costs only
//! `T * n` transform applications to compute.

use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::Sample;
use crate::dsl::{Dsl, FunctionId, Program, NUM_FUNCTIONS};
use crate::error::{Error, Result};
use crate::state::{BatchState, Config, StateTensor, Value};

/// Clamp applied inside the log and in the adjoint denominator.
pub const LOG_EPS: f64 = 1e-12;

/// Loss below which a restart counts as converged.
pub const CONVERGED_LOSS: f64 = 1e-9;

/// Logit gap used for one-hot policies. `exp(-1000)` is exactly zero in f64.
pub const ONE_HOT_GAP: f64 = 1000.0;

/// Per-step function distribution, parametrised by unconstrained logits with
/// a rowwise softmax.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyMatrix {
    steps: usize,
    logits: Vec<f64>,
    probs: Vec<f64>,
}

impl PolicyMatrix {
    pub fn from_logits(steps: usize, logits: Vec<f64>) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Policy("program length must be positive".into()));
        }
        if logits.len() != steps * NUM_FUNCTIONS {
            return Err(Error::Shape {
                expected: format!("{steps}x{NUM_FUNCTIONS} logits"),
                got: format!("{} logits", logits.len()),
            });
        }
        if let Some(x) = logits.iter().find(|x| !x.is_finite()) {
            return Err(Error::Policy(format!("non-finite logit {x}")));
        }
        let mut pi = PolicyMatrix {
            steps,
            probs: vec![0.0; logits.len()],
            logits,
        };
        pi.refresh();
        Ok(pi)
    }

    pub fn uniform(steps: usize) -> Result<Self> {
        Self::from_logits(steps, vec![0.0; steps * NUM_FUNCTIONS])
    }

    /// Logits drawn iid from a standard normal.
    pub fn random(steps: usize, rng: &mut impl Rng) -> Result<Self> {
        let logits = (0..steps * NUM_FUNCTIONS)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        Self::from_logits(steps, logits)
    }

    /// Policy whose probabilities are exactly one-hot at `program`.
    pub fn one_hot(program: &Program) -> Result<Self> {
        let mut logits = vec![-ONE_HOT_GAP; program.len() * NUM_FUNCTIONS];
        for (t, f) in program.ops().iter().enumerate() {
            logits[t * NUM_FUNCTIONS + f.index()] = 0.0;
        }
        Self::from_logits(program.len(), logits)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, t: usize, f: FunctionId) -> f64 {
        self.probs[t * NUM_FUNCTIONS + f.index()]
    }

    pub fn prob_row(&self, t: usize) -> &[f64] {
        &self.probs[t * NUM_FUNCTIONS..(t + 1) * NUM_FUNCTIONS]
    }

    /// `logits -= lr * direction`.
    pub fn step(&mut self, lr: f64, direction: &[f64]) {
        for (x, g) in self.logits.iter_mut().zip(direction) {
            *x -= lr * g;
        }
        self.refresh();
    }

    /// Chains `d loss / d pi` through the rowwise softmax.
    pub fn softmax_backward(&self, dprobs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; dprobs.len()];
        for t in 0..self.steps {
            let row = t * NUM_FUNCTIONS..(t + 1) * NUM_FUNCTIONS;
            let p = &self.probs[row.clone()];
            let g = &dprobs[row.clone()];
            let mean: f64 = p.iter().zip(g).map(|(p, g)| p * g).sum();
            for ((o, p), g) in out[row].iter_mut().zip(p).zip(g) {
                *o = p * (g - mean);
            }
        }
        out
    }

    fn refresh(&mut self) {
        for t in 0..self.steps {
            let row = t * NUM_FUNCTIONS..(t + 1) * NUM_FUNCTIONS;
            let logits = &self.logits[row.clone()];
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for (p, x) in self.probs[row.clone()].iter_mut().zip(logits) {
                *p = (x - max).exp();
                total += *p;
            }
            for p in &mut self.probs[row] {
                *p /= total;
            }
        }
    }
}

/// Argmax per step; ties go to the lowest function index.
pub fn extract_program(pi: &PolicyMatrix) -> Program {
    Program(
        (0..pi.steps())
            .map(|t| {
                let row = pi.prob_row(t);
                let mut best = 0;
                for (s, p) in row.iter().enumerate() {
                    if *p > row[best] {
                        best = s;
                    }
                }
                FunctionId::ALL[best]
            })
            .collect(),
    )
}

/// States `Psi_(0) ..= Psi_(T)` of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<BatchState>,
}

impl Trajectory {
    pub fn output(&self) -> &BatchState {
        self.states.last().expect("trajectory holds at least the input")
    }
}

/// Forward pass keeping every intermediate state.
pub fn forward(dsl: &Dsl, pi: &PolicyMatrix, psi_in: &BatchState) -> Result<Trajectory> {
    let mut obj = Objective::from_states(dsl, psi_in, None, pi.steps())?;
    obj.forward(pi.probs());
    Ok(obj.trajectory())
}

/// Token cross-entropy between a predicted batch and a sharp target batch,
/// normalised by the number of target tokens.
pub fn loss(psi_out: &BatchState, psi_hat: &BatchState) -> Result<f64> {
    check_batches(psi_out, psi_hat)?;
    let mut total = 0.0;
    let mut tokens = 0.0;
    for (m, (out, hat)) in psi_out.examples.iter().zip(&psi_hat.examples).enumerate() {
        let cfg = hat.config();
        let skip = cfg.index(1, 0, 0);
        check_target(m, hat)?;
        for (p, h) in out.data()[skip..].iter().zip(&hat.data()[skip..]) {
            if *h != 0.0 {
                total -= h * p.max(LOG_EPS).ln();
                tokens += h;
            }
        }
    }
    if tokens == 0.0 {
        return Err(Error::Mismatch("target batch carries no tokens".into()));
    }
    Ok(total / tokens)
}

/// `d loss / d logits` for the trajectory produced by `pi`, as a row-major
/// `T x n` array.
pub fn gradient(
    dsl: &Dsl,
    pi: &PolicyMatrix,
    traj: &Trajectory,
    psi_hat: &BatchState,
) -> Result<Vec<f64>> {
    if traj.states.len() != pi.steps() + 1 {
        return Err(Error::Mismatch(format!(
            "trajectory has {} states but the policy has {} steps",
            traj.states.len(),
            pi.steps()
        )));
    }
    let mut obj = Objective::from_states(dsl, &traj.states[0], Some(psi_hat), pi.steps())?;
    obj.load_trajectory(traj)?;
    let dprobs = obj.backward(pi.probs());
    Ok(pi.softmax_backward(&dprobs))
}

fn check_batches(a: &BatchState, b: &BatchState) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Mismatch(format!(
            "batch sizes differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    for (x, y) in a.examples.iter().zip(&b.examples) {
        x.check_shape(y.config())?;
    }
    Ok(())
}

fn check_target(m: usize, hat: &StateTensor) -> Result<()> {
    let cfg = hat.config();
    let skip = cfg.index(1, 0, 0);
    if hat.data()[..skip].iter().any(|x| *x != 0.0) || hat.data()[skip..].iter().all(|x| *x == 0.0)
    {
        return Err(Error::NullTarget(m));
    }
    Ok(())
}

/// Reusable buffers for repeated forward/backward passes over one sample.
///
/// Only the list rows that carry input mass (plus the integer row) are ever
/// touched: arithmetic transforms never change the list length and the
/// selectors only write the integer row.
#[derive(Debug, Clone)]
pub struct Objective<'a> {
    dsl: &'a Dsl,
    steps: usize,
    rows: Vec<Vec<usize>>,
    /// `states[t][m]`, flat per example.
    states: Vec<Vec<Vec<f64>>>,
    targets: Vec<Vec<(usize, f64)>>,
    target_rows: Vec<Vec<usize>>,
    tokens: f64,
    adj: Vec<Vec<f64>>,
    adj_next: Vec<Vec<f64>>,
}

impl<'a> Objective<'a> {
    /// Builds the objective for `inputs -> outputs` with a program of `steps`.
    pub fn new(dsl: &'a Dsl, examples: &[(Value, Value)], steps: usize) -> Result<Self> {
        if examples.is_empty() {
            return Err(Error::Mismatch("no observed examples".into()));
        }
        let cfg = dsl.config();
        let inputs: Vec<Value> = examples.iter().map(|(i, _)| i.clone()).collect();
        let outputs: Vec<Value> = examples.iter().map(|(_, o)| o.clone()).collect();
        if let Some(m) = outputs.iter().position(Value::is_null) {
            return Err(Error::NullTarget(m));
        }
        let psi_in = BatchState::encode(&inputs, cfg)?;
        let psi_hat = BatchState::encode(&outputs, cfg)?;
        Self::from_states(dsl, &psi_in, Some(&psi_hat), steps)
    }

    fn from_states(
        dsl: &'a Dsl,
        psi_in: &BatchState,
        psi_hat: Option<&BatchState>,
        steps: usize,
    ) -> Result<Self> {
        let cfg = dsl.config();
        if steps == 0 {
            return Err(Error::Policy("program length must be positive".into()));
        }
        if psi_in.is_empty() {
            return Err(Error::Mismatch("empty input batch".into()));
        }
        for s in &psi_in.examples {
            s.check_shape(cfg)?;
        }
        let rows: Vec<Vec<usize>> = psi_in
            .examples
            .iter()
            .map(|s| occupied_list_rows(cfg, s.data()))
            .collect();
        let m = psi_in.len();
        let mut states = vec![vec![vec![0.0; cfg.numel()]; m]; steps + 1];
        for (dst, src) in states[0].iter_mut().zip(&psi_in.examples) {
            dst.copy_from_slice(src.data());
        }
        let (targets, target_rows, tokens) = match psi_hat {
            None => (vec![Vec::new(); m], vec![Vec::new(); m], 0.0),
            Some(hat) => {
                check_batches(psi_in, hat)?;
                let skip = cfg.index(1, 0, 0);
                let mut targets = Vec::with_capacity(m);
                let mut target_rows = Vec::with_capacity(m);
                let mut tokens = 0.0;
                for (n, h) in hat.examples.iter().enumerate() {
                    check_target(n, h)?;
                    let entries: Vec<(usize, f64)> = h
                        .data()
                        .iter()
                        .enumerate()
                        .skip(skip)
                        .filter(|(_, x)| **x != 0.0)
                        .map(|(idx, x)| (idx, *x))
                        .collect();
                    tokens += entries.iter().map(|(_, x)| x).sum::<f64>();
                    target_rows.push(occupied_list_rows(cfg, h.data()));
                    targets.push(entries);
                }
                (targets, target_rows, tokens)
            }
        };
        Ok(Objective {
            dsl,
            steps,
            rows,
            states,
            targets,
            target_rows,
            tokens,
            adj: vec![vec![0.0; cfg.numel()]; m],
            adj_next: vec![vec![0.0; cfg.numel()]; m],
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of ground-truth tokens `N`.
    pub fn tokens(&self) -> f64 {
        self.tokens
    }

    pub fn forward(&mut self, probs: &[f64]) {
        let dsl = self.dsl;
        for t in 1..=self.steps {
            let row = &probs[(t - 1) * NUM_FUNCTIONS..t * NUM_FUNCTIONS];
            let (done, rest) = self.states.split_at_mut(t);
            let prev = &done[t - 1];
            let next = &mut rest[0];
            for (m, dst) in next.iter_mut().enumerate() {
                let rows = &self.rows[m];
                clear_region(dsl.config(), dst, rows);
                for (s, &w) in row.iter().enumerate() {
                    if w != 0.0 {
                        dsl.push_forward(FunctionId::ALL[s], &prev[m], w, dst, rows);
                    }
                }
            }
        }
    }

    /// Loss of the last forward pass.
    pub fn loss(&self) -> f64 {
        let out = &self.states[self.steps];
        let total: f64 = self
            .targets
            .iter()
            .zip(out)
            .map(|(entries, psi)| {
                entries
                    .iter()
                    .map(|&(idx, h)| -h * psi[idx].max(LOG_EPS).ln())
                    .sum::<f64>()
            })
            .sum();
        total / self.tokens
    }

    /// `d loss / d pi` for the last forward pass, row-major `T x n`.
    pub fn backward(&mut self, probs: &[f64]) -> Vec<f64> {
        let dsl = self.dsl;
        let cfg = dsl.config();
        let mut dprobs = vec![0.0; self.steps * NUM_FUNCTIONS];
        let scale = -1.0 / self.tokens;
        for m in 0..self.adj.len() {
            let a = &mut self.adj[m];
            clear_region(cfg, a, &self.rows[m]);
            clear_region(cfg, a, &self.target_rows[m]);
            for &(idx, h) in &self.targets[m] {
                a[idx] = scale * h / self.states[self.steps][m][idx].max(LOG_EPS);
            }
        }
        for t in (1..=self.steps).rev() {
            let row = &probs[(t - 1) * NUM_FUNCTIONS..t * NUM_FUNCTIONS];
            let prev = &self.states[t - 1];
            for (s, f) in FunctionId::ALL.iter().enumerate() {
                dprobs[(t - 1) * NUM_FUNCTIONS + s] = (0..prev.len())
                    .map(|m| dsl.pair(*f, &self.adj[m], &prev[m], &self.rows[m]))
                    .sum();
            }
            if t == 1 {
                break;
            }
            for m in 0..prev.len() {
                let rows = &self.rows[m];
                let next = &mut self.adj_next[m];
                clear_region(cfg, next, rows);
                for (s, &w) in row.iter().enumerate() {
                    if w != 0.0 {
                        dsl.pull_back(FunctionId::ALL[s], &self.adj[m], w, next, rows);
                    }
                }
            }
            std::mem::swap(&mut self.adj, &mut self.adj_next);
        }
        dprobs
    }

    /// Forward pass, loss and logit gradient in one call.
    pub fn evaluate(&mut self, pi: &PolicyMatrix) -> (f64, Vec<f64>) {
        self.forward(pi.probs());
        let l = self.loss();
        let dprobs = self.backward(pi.probs());
        (l, pi.softmax_backward(&dprobs))
    }

    pub fn trajectory(&self) -> Trajectory {
        let cfg = self.dsl.config();
        Trajectory {
            states: self
                .states
                .iter()
                .map(|batch| {
                    BatchState::new(
                        batch
                            .iter()
                            .map(|d| StateTensor::from_vec(cfg, d.clone()).expect("sized by cfg"))
                            .collect(),
                    )
                })
                .collect(),
        }
    }

    fn load_trajectory(&mut self, traj: &Trajectory) -> Result<()> {
        for (dst, batch) in self.states.iter_mut().zip(&traj.states) {
            if batch.len() != dst.len() {
                return Err(Error::Mismatch("trajectory batch size changes".into()));
            }
            for (d, s) in dst.iter_mut().zip(&batch.examples) {
                s.check_shape(self.dsl.config())?;
                d.copy_from_slice(s.data());
            }
        }
        Ok(())
    }
}

/// List rows `i >= 2` with any nonzero entry in their occupied columns.
fn occupied_list_rows(cfg: &Config, data: &[f64]) -> Vec<usize> {
    (2..cfg.rows())
        .filter(|&i| {
            let start = cfg.index(i, 0, 0);
            let end = cfg.index(i, i - 1, 0);
            data[start..end].iter().any(|x| *x != 0.0)
        })
        .collect()
}

/// Zeroes the integer cell row and the occupied columns of `rows`.
fn clear_region(cfg: &Config, data: &mut [f64], rows: &[usize]) {
    let d = cfg.d();
    let start = cfg.index(1, 0, 0);
    data[start..start + d].fill(0.0);
    for &i in rows {
        let start = cfg.index(i, 0, 0);
        let end = cfg.index(i, i - 1, 0);
        data[start..end].fill(0.0);
    }
}

/// Knobs for [`synthesize`].
#[derive(Debug, Clone)]
pub struct SynthOptions {
    /// Wall-clock budget for the whole sample.
    pub timeout: Duration,
    pub lr: f64,
    /// Heavy-ball momentum coefficient; `None` is plain gradient descent.
    pub momentum: Option<f64>,
    /// Iterations before a restart with fresh logits.
    pub restart_iters: usize,
    /// Logits for the first restart; later restarts are random.
    pub init: Option<PolicyMatrix>,
    pub seed: u64,
    /// Pin `head`/`tail` to the final step.
    pub structural_prior: bool,
    /// Optional cap on restarts, independent of the timeout.
    pub max_restarts: Option<usize>,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            timeout: Duration::from_secs(5),
            lr: 0.2,
            momentum: None,
            restart_iters: 200,
            init: None,
            seed: 0,
            structural_prior: false,
            max_restarts: None,
        }
    }
}

impl SynthOptions {
    fn check(&self, steps: usize) -> Result<()> {
        if self.timeout.is_zero() {
            return Err(Error::Options("timeout must be positive".into()));
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(Error::Options(format!("invalid learning rate {}", self.lr)));
        }
        if let Some(mu) = self.momentum {
            if !(0.0..1.0).contains(&mu) {
                return Err(Error::Options(format!("momentum {mu} outside [0, 1)")));
            }
        }
        if self.restart_iters == 0 {
            return Err(Error::Options("restart_iters must be positive".into()));
        }
        if let Some(init) = &self.init {
            if init.steps() != steps {
                return Err(Error::Options(format!(
                    "init logits have T={} but the sample has T={steps}",
                    init.steps()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisResult {
    pub program: Program,
    pub final_loss: f64,
    /// Checked by the concrete interpreter on the observed examples.
    pub consistent: bool,
    pub restarts_used: usize,
    pub iterations: usize,
    /// Seconds.
    pub wall_time: f64,
}

impl SynthesisResult {
    /// Consistent beats inconsistent, then lower loss wins.
    pub fn better_than(&self, other: &SynthesisResult) -> bool {
        match (self.consistent, other.consistent) {
            (true, false) => true,
            (false, true) => false,
            _ => self.final_loss < other.final_loss,
        }
    }
}

/// Logit mask pinning the selectors to the final step.
fn prior_mask(steps: usize) -> Vec<bool> {
    (0..steps * NUM_FUNCTIONS)
        .map(|idx| idx / NUM_FUNCTIONS + 1 < steps && FunctionId::ALL[idx % NUM_FUNCTIONS].is_selector())
        .collect()
}

fn apply_mask(pi: PolicyMatrix, mask: &[bool]) -> Result<PolicyMatrix> {
    let steps = pi.steps();
    let mut logits = pi.logits;
    for (x, m) in logits.iter_mut().zip(mask) {
        if *m {
            *x = -ONE_HOT_GAP;
        }
    }
    PolicyMatrix::from_logits(steps, logits)
}

/// Gradient descent on the policy logits with random restarts until a
/// program consistent with the observed examples is found or the budget runs
/// out. Without a consistent program the lowest-loss restart wins.
pub fn synthesize(dsl: &Dsl, sample: &Sample, opts: &SynthOptions) -> Result<SynthesisResult> {
    let start = Instant::now();
    let steps = sample.length;
    opts.check(steps)?;
    let mut objective = Objective::new(dsl, &sample.observed, steps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mask = opts.structural_prior.then(|| prior_mask(steps));

    let mut best: Option<SynthesisResult> = None;
    let mut restarts = 0;
    let mut iterations = 0;
    loop {
        if restarts > 0 && start.elapsed() >= opts.timeout {
            break;
        }
        if opts.max_restarts.is_some_and(|cap| restarts >= cap) {
            break;
        }
        let mut pi = match (&opts.init, restarts) {
            (Some(init), 0) => init.clone(),
            _ => PolicyMatrix::random(steps, &mut rng)?,
        };
        if let Some(mask) = &mask {
            pi = apply_mask(pi, mask)?;
        }
        restarts += 1;

        let mut velocity = vec![0.0; steps * NUM_FUNCTIONS];
        let mut checked: Option<Program> = None;
        let mut restart_best: Option<(Program, f64)> = None;
        for _ in 0..opts.restart_iters {
            let (l, grad) = objective.evaluate(&pi);
            iterations += 1;
            let program = extract_program(&pi);
            if restart_best.as_ref().is_none_or(|(_, bl)| l < *bl) {
                restart_best = Some((program.clone(), l));
            }
            if checked.as_ref() != Some(&program) {
                if dsl.is_consistent(&program, &sample.observed) {
                    return Ok(SynthesisResult {
                        program,
                        final_loss: l,
                        consistent: true,
                        restarts_used: restarts,
                        iterations,
                        wall_time: start.elapsed().as_secs_f64(),
                    });
                }
                checked = Some(program);
            }
            if start.elapsed() >= opts.timeout {
                break;
            }
            let direction = match opts.momentum {
                Some(mu) => {
                    for (v, g) in velocity.iter_mut().zip(&grad) {
                        *v = mu * *v + g;
                    }
                    &velocity
                }
                None => &grad,
            };
            pi.step(opts.lr, direction);
        }
        if let Some((program, l)) = restart_best {
            let candidate = SynthesisResult {
                consistent: false,
                program,
                final_loss: l,
                restarts_used: restarts,
                iterations,
                wall_time: 0.0,
            };
            if best.as_ref().is_none_or(|b| candidate.better_than(b)) {
                best = Some(candidate);
            }
        }
    }
    let mut result = best.expect("at least one restart runs");
    result.restarts_used = restarts;
    result.iterations = iterations;
    result.wall_time = start.elapsed().as_secs_f64();
    Ok(result)
}

/// Logit initialisation file shared with the network initialiser.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitLogits {
    #[serde(rename = "T")]
    pub steps: usize,
    pub n: usize,
    pub functions: Vec<String>,
    pub logits: Vec<Vec<f64>>,
}

impl InitLogits {
    pub fn from_policy(pi: &PolicyMatrix) -> Self {
        InitLogits {
            steps: pi.steps(),
            n: NUM_FUNCTIONS,
            functions: FunctionId::ALL.iter().map(|f| f.name().to_string()).collect(),
            logits: pi.logits().chunks(NUM_FUNCTIONS).map(<[f64]>::to_vec).collect(),
        }
    }

    /// Checks `T`, `n` and the function order, then builds the policy.
    pub fn to_policy(&self, expected_steps: Option<usize>) -> Result<PolicyMatrix> {
        if self.n != NUM_FUNCTIONS {
            return Err(Error::Policy(format!(
                "logits file has n={} but the DSL has {NUM_FUNCTIONS} functions",
                self.n
            )));
        }
        let canonical: Vec<&str> = FunctionId::ALL.iter().map(|f| f.name()).collect();
        if self.functions != canonical {
            return Err(Error::Policy(format!(
                "function order {:?} differs from canonical {canonical:?}",
                self.functions
            )));
        }
        if let Some(t) = expected_steps {
            if t != self.steps {
                return Err(Error::Policy(format!(
                    "logits file has T={} but the sample needs T={t}",
                    self.steps
                )));
            }
        }
        if self.logits.len() != self.steps || self.logits.iter().any(|r| r.len() != self.n) {
            return Err(Error::Policy(format!(
                "logits array is not {}x{}",
                self.steps, self.n
            )));
        }
        PolicyMatrix::from_logits(self.steps, self.logits.concat())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}
