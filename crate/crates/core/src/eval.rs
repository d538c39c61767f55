//! Token scoring, synthesis accuracy and the random-search baseline.

use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Sample;
use crate::dsl::{Dsl, FunctionId, Program};
use crate::engine::SynthesisResult;
use crate::error::{Error, Result};
use crate::state::Value;

/// Ratio of credited tokens to available tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Score {
    pub numerator: u64,
    pub denominator: u64,
}

impl Score {
    pub fn value(&self) -> f64 {
        if self.denominator == 0 {
            0.0
        } else {
            self.numerator as f64 / self.denominator as f64
        }
    }
}

impl std::ops::Add for Score {
    type Output = Score;

    fn add(self, rhs: Score) -> Score {
        Score {
            numerator: self.numerator + rhs.numerator,
            denominator: self.denominator + rhs.denominator,
        }
    }
}

/// Per example: one credit for the right type (integer vs list), one per
/// position-aligned matching token when the type is right; the denominator
/// gets `1 + max(len(predicted), len(truth))`. A null prediction has length 0
/// and never earns credit.
pub fn score_outputs(predicted: &[Value], truth: &[Value]) -> Result<Score> {
    if predicted.len() != truth.len() {
        return Err(Error::Mismatch(format!(
            "{} predictions for {} targets",
            predicted.len(),
            truth.len()
        )));
    }
    predicted
        .iter()
        .zip(truth)
        .try_fold(Score::default(), |acc, (p, t)| {
            if t.is_null() {
                return Err(Error::Value("ground-truth output is null".into()));
            }
            let denominator = 1 + p.token_len().max(t.token_len()) as u64;
            let numerator = match (p, t) {
                (Value::Int(a), Value::Int(b)) => 1 + u64::from(a == b),
                (Value::List(a), Value::List(b)) => {
                    1 + a.iter().zip(b).filter(|(x, y)| x == y).count() as u64
                }
                _ => 0,
            };
            Ok(acc + Score {
                numerator,
                denominator,
            })
        })
}

/// Score of `program` on the given examples.
pub fn score_program(dsl: &Dsl, program: &Program, examples: &[(Value, Value)]) -> Result<Score> {
    let (predicted, truth): (Vec<Value>, Vec<Value>) = examples
        .iter()
        .map(|(i, o)| (dsl.execute(program, i), o.clone()))
        .unzip();
    score_outputs(&predicted, &truth)
}

/// Fraction of samples whose returned program reproduces every observed
/// example, re-checked with the concrete interpreter.
pub fn eval_synthesis(dsl: &Dsl, samples: &[Sample], programs: &[Program]) -> Result<f64> {
    if samples.len() != programs.len() {
        return Err(Error::Mismatch(format!(
            "{} results for {} samples",
            programs.len(),
            samples.len()
        )));
    }
    if samples.is_empty() {
        return Ok(0.0);
    }
    let solved = samples
        .iter()
        .zip(programs)
        .filter(|(s, p)| p.len() == s.length && dsl.is_consistent(p, &s.observed))
        .count();
    Ok(solved as f64 / samples.len() as f64)
}

/// Mean assessment score over samples.
pub fn eval_token_score(dsl: &Dsl, samples: &[Sample], programs: &[Program]) -> Result<f64> {
    if samples.len() != programs.len() {
        return Err(Error::Mismatch(format!(
            "{} results for {} samples",
            programs.len(),
            samples.len()
        )));
    }
    if samples.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (n, (s, p)) in samples.iter().zip(programs).enumerate() {
        if s.assessment.is_empty() {
            return Err(Error::Mismatch(format!("sample {n} has no assessment examples")));
        }
        total += score_program(dsl, p, &s.assessment)?.value();
    }
    Ok(total / samples.len() as f64)
}

/// Draws uniform programs of the sample's length until one reproduces the
/// observed examples or time runs out, keeping the best-scoring draw.
///
/// `final_loss` of the result is `1 - score` of the returned program.
pub fn random_search(
    dsl: &Dsl,
    sample: &Sample,
    timeout: Duration,
    rng: &mut impl Rng,
) -> Result<SynthesisResult> {
    let start = Instant::now();
    let steps = sample.length;
    if steps == 0 {
        return Err(Error::Options("program length must be positive".into()));
    }
    let mut best: Option<(Program, Score)> = None;
    let mut draws = 0usize;
    loop {
        let program = Program(
            (0..steps)
                .map(|_| FunctionId::ALL[rng.gen_range(0..FunctionId::ALL.len())])
                .collect(),
        );
        draws += 1;
        if dsl.is_consistent(&program, &sample.observed) {
            return Ok(SynthesisResult {
                program,
                final_loss: 0.0,
                consistent: true,
                restarts_used: draws,
                iterations: draws,
                wall_time: start.elapsed().as_secs_f64(),
            });
        }
        let score = score_program(dsl, &program, &sample.observed)?;
        if best.as_ref().is_none_or(|(_, b)| score.value() > b.value()) {
            best = Some((program, score));
        }
        if draws.is_multiple_of(64) && start.elapsed() >= timeout {
            break;
        }
    }
    let (program, score) = best.expect("at least one draw");
    Ok(SynthesisResult {
        program,
        final_loss: 1.0 - score.value(),
        consistent: false,
        restarts_used: draws,
        iterations: draws,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::Config;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn list(xs: &[i64]) -> Value {
        Value::List(xs.to_vec())
    }

    #[test]
    fn score_examples() {
        let s = score_outputs(&[list(&[1, 2, 3])], &[list(&[1, 2, 4])]).unwrap();
        assert_eq!((s.numerator, s.denominator), (3, 4));
        assert_eq!(s.value(), 0.75);

        let s = score_outputs(&[Value::Null], &[list(&[7])]).unwrap();
        assert_eq!((s.numerator, s.denominator), (0, 2));

        let v = vec![list(&[1]), Value::Int(3), list(&[4, 5]), Value::Int(-1), list(&[0; 10])];
        assert_eq!(score_outputs(&v, &v).unwrap().value(), 1.0);
    }

    #[test]
    fn score_type_mismatch_earns_nothing() {
        let s = score_outputs(&[Value::Int(5)], &[list(&[5, 6])]).unwrap();
        assert_eq!((s.numerator, s.denominator), (0, 3));
        let s = score_outputs(&[list(&[9, 9, 9])], &[list(&[9])]).unwrap();
        assert_eq!((s.numerator, s.denominator), (2, 4));
    }

    #[test]
    fn score_errors() {
        assert!(score_outputs(&[Value::Int(1)], &[]).is_err());
        assert!(score_outputs(&[Value::Int(1)], &[Value::Null]).is_err());
    }

    fn sample_for(dsl: &Dsl, program: Program) -> Sample {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let observed = crate::data::gen_examples(dsl, &program, 5, &mut rng).unwrap();
        Sample {
            observed,
            assessment: Vec::new(),
            length: program.len(),
            program,
            noise: 0.0,
        }
    }

    #[test]
    fn synthesis_accuracy() {
        let dsl = Dsl::new(Config::default()).unwrap();
        let samples: Vec<Sample> = [FunctionId::Plus1, FunctionId::Times3]
            .into_iter()
            .map(|f| sample_for(&dsl, Program(vec![f, FunctionId::Head])))
            .collect();
        let truth: Vec<Program> = samples.iter().map(|s| s.program.clone()).collect();
        assert_eq!(eval_synthesis(&dsl, &samples, &truth).unwrap(), 1.0);
        let wrong = vec![Program(vec![FunctionId::Div4, FunctionId::Div4]); 2];
        assert_eq!(eval_synthesis(&dsl, &samples, &wrong).unwrap(), 0.0);
        assert!(eval_synthesis(&dsl, &samples, &truth[..1]).is_err());
    }

    #[test]
    fn random_search_solves_length_one() {
        let dsl = Dsl::new(Config::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for f in FunctionId::ALL {
            let sample = sample_for(&dsl, Program(vec![f]));
            let r = random_search(&dsl, &sample, Duration::from_secs(5), &mut rng).unwrap();
            assert!(r.consistent);
            assert!(dsl.is_consistent(&r.program, &sample.observed));
        }
    }
}
