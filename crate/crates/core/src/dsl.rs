//! The list DSL: concrete semantics, linear transforms on fuzzy states and
//! their adjoints.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{validate, BatchState, Config, StateTensor, Value};

/// DSL functions in canonical order. The order fixes policy-matrix columns and
/// the function list written to logit files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionId {
    Head,
    Tail,
    Plus1,
    Minus1,
    Times2,
    Times3,
    Times4,
    Timesm1,
    Power2,
    Div2,
    Div3,
    Div4,
}

pub const NUM_FUNCTIONS: usize = 12;

impl FunctionId {
    pub const ALL: [FunctionId; NUM_FUNCTIONS] = [
        FunctionId::Head,
        FunctionId::Tail,
        FunctionId::Plus1,
        FunctionId::Minus1,
        FunctionId::Times2,
        FunctionId::Times3,
        FunctionId::Times4,
        FunctionId::Timesm1,
        FunctionId::Power2,
        FunctionId::Div2,
        FunctionId::Div3,
        FunctionId::Div4,
    ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<FunctionId> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            FunctionId::Head => "head",
            FunctionId::Tail => "tail",
            FunctionId::Plus1 => "plus1",
            FunctionId::Minus1 => "minus1",
            FunctionId::Times2 => "times2",
            FunctionId::Times3 => "times3",
            FunctionId::Times4 => "times4",
            FunctionId::Timesm1 => "timesm1",
            FunctionId::Power2 => "power2",
            FunctionId::Div2 => "div2",
            FunctionId::Div3 => "div3",
            FunctionId::Div4 => "div4",
        }
    }

    /// `head` and `tail` turn a list into an integer; everything else maps
    /// lists elementwise.
    pub fn is_selector(self) -> bool {
        matches!(self, FunctionId::Head | FunctionId::Tail)
    }

    /// Integer map applied to each list element. `None` for selectors and on
    /// arithmetic overflow of `i64`.
    pub fn apply_int(self, x: i64) -> Option<i64> {
        match self {
            FunctionId::Head | FunctionId::Tail => None,
            FunctionId::Plus1 => x.checked_add(1),
            FunctionId::Minus1 => x.checked_sub(1),
            FunctionId::Times2 => x.checked_mul(2),
            FunctionId::Times3 => x.checked_mul(3),
            FunctionId::Times4 => x.checked_mul(4),
            FunctionId::Timesm1 => x.checked_neg(),
            FunctionId::Power2 => x.checked_mul(x),
            // integer division truncates toward zero: -3 / 2 == -1
            FunctionId::Div2 => Some(x / 2),
            FunctionId::Div3 => Some(x / 3),
            FunctionId::Div4 => Some(x / 4),
        }
    }
}

impl fmt::Display for FunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FunctionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FunctionId::ALL
            .iter()
            .copied()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Value(format!("unknown function name `{s}`")))
    }
}

/// A straight-line program: functions applied left to right.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Program(pub Vec<FunctionId>);

impl Program {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ops(&self) -> &[FunctionId] {
        &self.0
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (n, op) in self.0.iter().enumerate() {
            if n > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{op}")?;
        }
        write!(f, "]")
    }
}

impl From<Vec<FunctionId>> for Program {
    fn from(ops: Vec<FunctionId>) -> Self {
        Program(ops)
    }
}

const OUT_OF_RANGE: u32 = u32::MAX;

/// Precomputed value-index maps `sigma: 0..d -> 0..d` for the arithmetic
/// functions, with out-of-range targets marked.
#[derive(Debug, Clone)]
pub struct IndexMap {
    tables: Vec<Vec<u32>>,
}

impl IndexMap {
    pub fn new(cfg: &Config) -> Self {
        let d = cfg.d() as i64;
        let lmin = cfg.l_min;
        let tables = FunctionId::ALL
            .iter()
            .map(|&f| {
                if f.is_selector() {
                    return Vec::new();
                }
                (0..d)
                    .map(|k| match sigma(f, k, lmin) {
                        Some(t) if (0..d).contains(&t) => t as u32,
                        _ => OUT_OF_RANGE,
                    })
                    .collect()
            })
            .collect();
        IndexMap { tables }
    }

    /// Target index of `k` under `f`, or `None` when it leaves the range.
    /// Panics for `head`/`tail`.
    pub fn target(&self, f: FunctionId, k: usize) -> Option<usize> {
        let t = self.tables[f.index()][k];
        (t != OUT_OF_RANGE).then_some(t as usize)
    }

    #[inline]
    fn table(&self, f: FunctionId) -> &[u32] {
        &self.tables[f.index()]
    }
}

/// Closed-form index map in value-index coordinates.
fn sigma(f: FunctionId, k: i64, lmin: i64) -> Option<i64> {
    let shifted = k.checked_add(lmin)?;
    Some(match f {
        FunctionId::Plus1 => k + 1,
        FunctionId::Minus1 => k - 1,
        FunctionId::Times2 => 2 * k + lmin,
        FunctionId::Times3 => 3 * k + 2 * lmin,
        FunctionId::Times4 => 4 * k + 3 * lmin,
        FunctionId::Timesm1 => -k - 2 * lmin,
        FunctionId::Power2 => shifted.checked_mul(shifted)? - lmin,
        FunctionId::Div2 => shifted / 2 - lmin,
        FunctionId::Div3 => shifted / 3 - lmin,
        FunctionId::Div4 => shifted / 4 - lmin,
        FunctionId::Head | FunctionId::Tail => return None,
    })
}

/// The DSL bound to one [`Config`].
#[derive(Debug, Clone)]
pub struct Dsl {
    cfg: Config,
    maps: IndexMap,
}

impl Dsl {
    pub fn new(cfg: Config) -> Result<Self> {
        cfg.check()?;
        Ok(Dsl {
            maps: IndexMap::new(&cfg),
            cfg,
        })
    }

    pub fn config(&self) -> &Config {
        &self.cfg
    }

    pub fn index_map(&self) -> &IndexMap {
        &self.maps
    }

    /// Concrete semantics. Anything applied to null or an integer is null; an
    /// arithmetic function whose result leaves the range on any element
    /// nullifies the whole list.
    pub fn apply_concrete(&self, f: FunctionId, v: &Value) -> Value {
        let Value::List(xs) = v else {
            return Value::Null;
        };
        match f {
            FunctionId::Head => xs.first().map_or(Value::Null, |x| Value::Int(*x)),
            FunctionId::Tail => xs.last().map_or(Value::Null, |x| Value::Int(*x)),
            _ => xs
                .iter()
                .map(|&x| f.apply_int(x).filter(|y| self.cfg.in_range(*y)))
                .collect::<Option<Vec<_>>>()
                .map_or(Value::Null, Value::List),
        }
    }

    pub fn execute(&self, program: &Program, input: &Value) -> Value {
        program
            .ops()
            .iter()
            .fold(input.clone(), |v, &f| self.apply_concrete(f, &v))
    }

    /// Whether `program` maps every input to its output exactly.
    pub fn is_consistent(&self, program: &Program, examples: &[(Value, Value)]) -> bool {
        examples
            .iter()
            .all(|(input, output)| self.execute(program, input) == *output)
    }

    /// Linear transform of a fuzzy state under `f`. Rows 0 and 1 of the input
    /// are never read (null and integer inputs go to null, which is dropped).
    pub fn transform_fuzzy(&self, f: FunctionId, s: &StateTensor) -> Result<StateTensor> {
        validate(s, &self.cfg)?.into_result()?;
        let mut out = StateTensor::zeros(&self.cfg);
        let rows = self.list_rows();
        self.push_forward(f, s.data(), 1.0, out.data_mut(), &rows);
        Ok(out)
    }

    /// Transpose of [`Dsl::transform_fuzzy`]: `<adjoint(a), s> == <a, f(s)>`.
    pub fn transform_adjoint(&self, f: FunctionId, a: &StateTensor) -> Result<StateTensor> {
        a.check_shape(&self.cfg)?;
        let mut out = StateTensor::zeros(&self.cfg);
        let rows = self.list_rows();
        self.pull_back(f, a.data(), 1.0, out.data_mut(), &rows);
        Ok(out)
    }

    pub fn transform_batch(&self, f: FunctionId, batch: &BatchState) -> Result<BatchState> {
        batch
            .examples
            .iter()
            .map(|s| self.transform_fuzzy(f, s))
            .collect::<Result<Vec<_>>>()
            .map(BatchState::new)
    }

    pub(crate) fn list_rows(&self) -> Vec<usize> {
        (2..self.cfg.rows()).collect()
    }

    /// Slice of column `(i, j)`.
    #[inline]
    fn col(&self, i: usize, j: usize) -> std::ops::Range<usize> {
        let start = self.cfg.index(i, j, 0);
        start..start + self.cfg.d()
    }

    /// `dst += w * f(src)`, reading only the given list rows of `src`.
    pub(crate) fn push_forward(
        &self,
        f: FunctionId,
        src: &[f64],
        w: f64,
        dst: &mut [f64],
        rows: &[usize],
    ) {
        match f {
            FunctionId::Head | FunctionId::Tail => {
                let out = self.col(1, 0);
                for &i in rows {
                    let j = if f == FunctionId::Head { 0 } else { i - 2 };
                    let input = &src[self.col(i, j)];
                    for (o, x) in dst[out.clone()].iter_mut().zip(input) {
                        *o += w * x;
                    }
                }
            }
            _ => {
                let table = self.maps.table(f);
                for &i in rows {
                    for j in 0..=i - 2 {
                        let range = self.col(i, j);
                        let base = range.start;
                        let input = &src[range];
                        for (k, &x) in input.iter().enumerate() {
                            let t = table[k];
                            if t != OUT_OF_RANGE && x != 0.0 {
                                dst[base + t as usize] += w * x;
                            }
                        }
                    }
                }
            }
        }
    }

    /// `dst += w * f^T(adj)` on the given list rows.
    pub(crate) fn pull_back(
        &self,
        f: FunctionId,
        adj: &[f64],
        w: f64,
        dst: &mut [f64],
        rows: &[usize],
    ) {
        match f {
            FunctionId::Head | FunctionId::Tail => {
                let source = &adj[self.col(1, 0)];
                for &i in rows {
                    let j = if f == FunctionId::Head { 0 } else { i - 2 };
                    for (o, a) in dst[self.col(i, j)].iter_mut().zip(source) {
                        *o += w * a;
                    }
                }
            }
            _ => {
                let table = self.maps.table(f);
                for &i in rows {
                    for j in 0..=i - 2 {
                        let range = self.col(i, j);
                        let base = range.start;
                        for (k, o) in dst[range].iter_mut().enumerate() {
                            let t = table[k];
                            if t != OUT_OF_RANGE {
                                *o += w * adj[base + t as usize];
                            }
                        }
                    }
                }
            }
        }
    }

    /// `<adj, f(src)>` without materialising `f(src)`.
    pub(crate) fn pair(&self, f: FunctionId, adj: &[f64], src: &[f64], rows: &[usize]) -> f64 {
        let mut acc = 0.0;
        match f {
            FunctionId::Head | FunctionId::Tail => {
                let a = &adj[self.col(1, 0)];
                for &i in rows {
                    let j = if f == FunctionId::Head { 0 } else { i - 2 };
                    acc += a
                        .iter()
                        .zip(&src[self.col(i, j)])
                        .map(|(a, x)| a * x)
                        .sum::<f64>();
                }
            }
            _ => {
                let table = self.maps.table(f);
                for &i in rows {
                    for j in 0..=i - 2 {
                        let range = self.col(i, j);
                        let base = range.start;
                        for (k, &x) in src[range].iter().enumerate() {
                            let t = table[k];
                            if t != OUT_OF_RANGE && x != 0.0 {
                                acc += x * adj[base + t as usize];
                            }
                        }
                    }
                }
            }
        }
        acc
    }
}
