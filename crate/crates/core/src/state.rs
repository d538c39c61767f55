//! DSL values and their probabilistic tensor encoding.
//!
//! A state is a dense `(L+2, L, d)` tensor. Row `0` holds the null
//! probability, row `1` an integer (column `0` only), and row `i >= 2` a
//! list of length `i - 1` whose columns `0..=i-2` carry one distribution over
//! the `d` representable integers each. Everything else is structural zero.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute slack allowed on the column-selection mass bound.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Integer range and maximum list length shared by every value and state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Config {
    pub l_min: i64,
    pub l_max: i64,
    /// Maximum list length `L`.
    pub max_len: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            l_min: -100,
            l_max: 100,
            max_len: 10,
        }
    }
}

impl Config {
    pub fn new(l_min: i64, l_max: i64, max_len: usize) -> Result<Self> {
        let cfg = Config {
            l_min,
            l_max,
            max_len,
        };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        if self.l_min > self.l_max {
            return Err(Error::Config(format!(
                "l_min {} exceeds l_max {}",
                self.l_min, self.l_max
            )));
        }
        if self.max_len == 0 {
            return Err(Error::Config("max_len must be positive".into()));
        }
        Ok(())
    }

    /// Number of representable integers.
    #[inline]
    pub fn d(&self) -> usize {
        (self.l_max - self.l_min + 1) as usize
    }

    /// Size of the type axis, `L + 2`.
    #[inline]
    pub fn rows(&self) -> usize {
        self.max_len + 2
    }

    /// Total number of tensor entries, `(L+2) * L * d`.
    #[inline]
    pub fn numel(&self) -> usize {
        self.rows() * self.max_len * self.d()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.max_len + j) * self.d() + k
    }

    #[inline]
    pub fn in_range(&self, x: i64) -> bool {
        self.l_min <= x && x <= self.l_max
    }

    /// Value index of integer `x`.
    #[inline]
    pub fn slot(&self, x: i64) -> usize {
        (x - self.l_min) as usize
    }

    #[inline]
    pub fn int_at(&self, k: usize) -> i64 {
        k as i64 + self.l_min
    }

    /// Whether `(i, j)` lies outside the zero-padded region.
    #[inline]
    pub fn column_occupied(&self, i: usize, j: usize) -> bool {
        match i {
            0 | 1 => j == 0,
            _ => j + 2 <= i,
        }
    }
}

/// A concrete DSL value.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "lowercase")]
pub enum Value {
    Null,
    Int(i64),
    List(Vec<i64>),
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    /// Number of value tokens: 0 for null, 1 for an integer, the length for a list.
    pub fn token_len(&self) -> usize {
        match self {
            Value::Null => 0,
            Value::Int(_) => 1,
            Value::List(xs) => xs.len(),
        }
    }

    pub fn validate(&self, cfg: &Config) -> Result<()> {
        match self {
            Value::Null => Ok(()),
            Value::Int(k) => {
                if cfg.in_range(*k) {
                    Ok(())
                } else {
                    Err(Error::Value(format!(
                        "integer {k} outside [{}, {}]",
                        cfg.l_min, cfg.l_max
                    )))
                }
            }
            Value::List(xs) => {
                if xs.is_empty() || xs.len() > cfg.max_len {
                    return Err(Error::Value(format!(
                        "list length {} outside 1..={}",
                        xs.len(),
                        cfg.max_len
                    )));
                }
                match xs.iter().find(|x| !cfg.in_range(**x)) {
                    Some(x) => Err(Error::Value(format!(
                        "list element {x} outside [{}, {}]",
                        cfg.l_min, cfg.l_max
                    ))),
                    None => Ok(()),
                }
            }
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => write!(f, "null"),
            Value::Int(k) => write!(f, "{k}"),
            Value::List(xs) => {
                write!(f, "[")?;
                for (n, x) in xs.iter().enumerate() {
                    if n > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, "]")
            }
        }
    }
}

/// Dense `(L+2, L, d)` tensor.
///
/// Holds probability states as well as the unconstrained cotangents used by
/// the adjoint transforms; only [`validate`] attaches meaning to the entries.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTensor {
    cfg: Config,
    data: Vec<f64>,
}

impl StateTensor {
    pub fn zeros(cfg: &Config) -> Self {
        StateTensor {
            cfg: *cfg,
            data: vec![0.0; cfg.numel()],
        }
    }

    pub fn from_vec(cfg: &Config, data: Vec<f64>) -> Result<Self> {
        if data.len() != cfg.numel() {
            return Err(Error::Shape {
                expected: format!("{} entries", cfg.numel()),
                got: format!("{} entries", data.len()),
            });
        }
        Ok(StateTensor { cfg: *cfg, data })
    }

    /// Builds a tensor by evaluating `f(i, j, k)` at every entry.
    pub fn from_fn(cfg: &Config, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = StateTensor::zeros(cfg);
        for i in 0..cfg.rows() {
            for j in 0..cfg.max_len {
                for k in 0..cfg.d() {
                    t.data[cfg.index(i, j, k)] = f(i, j, k);
                }
            }
        }
        t
    }

    pub fn config(&self) -> &Config {
        &self.cfg
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.cfg.index(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, x: f64) {
        let idx = self.cfg.index(i, j, k);
        self.data[idx] = x;
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.cfg.rows(), self.cfg.max_len, self.cfg.d())
    }

    pub fn check_shape(&self, cfg: &Config) -> Result<()> {
        if self.cfg != *cfg {
            let (a, b, c) = self.shape();
            return Err(Error::Shape {
                expected: format!("({}, {}, {})", cfg.rows(), cfg.max_len, cfg.d()),
                got: format!("({a}, {b}, {c})"),
            });
        }
        Ok(())
    }

    pub fn scale(&self, w: f64) -> Self {
        StateTensor {
            cfg: self.cfg,
            data: self.data.iter().map(|x| w * x).collect(),
        }
    }

    /// `self + w * other`.
    pub fn add_scaled(&self, w: f64, other: &StateTensor) -> Self {
        StateTensor {
            cfg: self.cfg,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + w * b)
                .collect(),
        }
    }

    /// Elementwise inner product.
    pub fn dot(&self, other: &StateTensor) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs_diff(&self, other: &StateTensor) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Maximum of `psi_000 + sum_k psi_10k + sum_{i>=2} sum_k psi_{i,j_i,k}`
    /// over all valid column selections `j_i`.
    pub fn max_column_mass(&self) -> f64 {
        let cfg = &self.cfg;
        let d = cfg.d();
        let column = |i: usize, j: usize| -> f64 {
            let start = cfg.index(i, j, 0);
            self.data[start..start + d].iter().sum()
        };
        let mut mass = self.get(0, 0, 0) + column(1, 0);
        for i in 2..cfg.rows() {
            mass += (0..=i - 2).map(|j| column(i, j)).fold(f64::MIN, f64::max);
        }
        mass
    }
}

/// One state per example, stacked along the leading axis.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchState {
    pub examples: Vec<StateTensor>,
}

impl BatchState {
    pub fn new(examples: Vec<StateTensor>) -> Self {
        BatchState { examples }
    }

    pub fn encode(values: &[Value], cfg: &Config) -> Result<Self> {
        values
            .iter()
            .map(|v| encode(v, cfg))
            .collect::<Result<Vec<_>>>()
            .map(BatchState::new)
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn max_abs_diff(&self, other: &BatchState) -> f64 {
        self.examples
            .iter()
            .zip(&other.examples)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }
}

/// Sharp encoding of a value.
pub fn encode(v: &Value, cfg: &Config) -> Result<StateTensor> {
    v.validate(cfg)?;
    let mut s = StateTensor::zeros(cfg);
    match v {
        Value::Null => s.set(0, 0, 0, 1.0),
        Value::Int(k) => s.set(1, 0, cfg.slot(*k), 1.0),
        Value::List(xs) => {
            for (j, x) in xs.iter().enumerate() {
                s.set(xs.len() + 1, j, cfg.slot(*x), 1.0);
            }
        }
    }
    Ok(s)
}

/// Inverse of [`encode`] on sharp states.
pub fn decode_sharp(s: &StateTensor, cfg: &Config) -> Result<Value> {
    s.check_shape(cfg)?;
    let d = cfg.d();
    // every entry must be exactly 0 or 1
    for i in 0..cfg.rows() {
        for j in 0..cfg.max_len {
            for k in 0..d {
                let x = s.get(i, j, k);
                if x != 0.0 && x != 1.0 {
                    return Err(Error::NotSharp(format!(
                        "column ({i}, {j}) has fractional entry {x} at k={k}"
                    )));
                }
            }
        }
    }
    let ones = |i: usize, j: usize| -> Vec<usize> {
        (0..d).filter(|&k| s.get(i, j, k) == 1.0).collect()
    };
    let occupied: Vec<(usize, usize)> = (0..cfg.rows())
        .flat_map(|i| (0..cfg.max_len).map(move |j| (i, j)))
        .filter(|&(i, j)| !ones(i, j).is_empty())
        .collect();
    let Some(&(row, _)) = occupied.first() else {
        return Err(Error::NotSharp("all-zero tensor encodes no value".into()));
    };
    if let Some(&(i, j)) = occupied.iter().find(|&&(i, _)| i != row) {
        return Err(Error::NotSharp(format!(
            "column ({i}, {j}) is occupied in addition to row {row}"
        )));
    }
    let expected_cols = match row {
        0 | 1 => 1,
        i => i - 1,
    };
    for j in 0..cfg.max_len {
        let hits = ones(row, j);
        let want = usize::from(j < expected_cols);
        if hits.len() != want {
            return Err(Error::NotSharp(format!(
                "column ({row}, {j}) has {} unit entries, expected {want}",
                hits.len()
            )));
        }
    }
    match row {
        0 => {
            if s.get(0, 0, 0) == 1.0 {
                Ok(Value::Null)
            } else {
                Err(Error::NotSharp("column (0, 0) set away from k=0".into()))
            }
        }
        1 => Ok(Value::Int(cfg.int_at(ones(1, 0)[0]))),
        i => Ok(Value::List(
            (0..i - 1).map(|j| cfg.int_at(ones(i, j)[0])).collect(),
        )),
    }
}

pub fn is_sharp(s: &StateTensor) -> bool {
    decode_sharp(s, s.config()).is_ok()
}

/// Structural-zero, sign and mass-bound findings for one tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub structural_violations: Vec<(usize, usize, usize)>,
    pub negative_entries: Vec<(usize, usize, usize)>,
    pub max_column_mass: f64,
    pub mass_violation: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.structural_violations.is_empty()
            && self.negative_entries.is_empty()
            && !self.mass_violation
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            return Ok(());
        }
        let mut parts = Vec::new();
        if let Some(at) = self.structural_violations.first() {
            parts.push(format!(
                "{} structural-zero violations (first at {at:?})",
                self.structural_violations.len()
            ));
        }
        if let Some(at) = self.negative_entries.first() {
            parts.push(format!(
                "{} negative entries (first at {at:?})",
                self.negative_entries.len()
            ));
        }
        if self.mass_violation {
            parts.push(format!("column mass {} exceeds 1", self.max_column_mass));
        }
        Err(Error::InvalidState(parts.join("; ")))
    }
}

pub fn validate(s: &StateTensor, cfg: &Config) -> Result<ValidationReport> {
    s.check_shape(cfg)?;
    let mut structural = Vec::new();
    let mut negative = Vec::new();
    for i in 0..cfg.rows() {
        for j in 0..cfg.max_len {
            let occupied = cfg.column_occupied(i, j);
            for k in 0..cfg.d() {
                let x = s.get(i, j, k);
                let padded = !occupied || (i == 0 && k != 0);
                if padded && x != 0.0 {
                    structural.push((i, j, k));
                }
                if x < 0.0 {
                    negative.push((i, j, k));
                }
            }
        }
    }
    let mass = s.max_column_mass();
    Ok(ValidationReport {
        structural_violations: structural,
        negative_entries: negative,
        max_column_mass: mass,
        mass_violation: mass.is_nan() || mass > 1.0 + MASS_TOLERANCE,
    })
}
