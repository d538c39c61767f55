//! Program synthesis for a small list-manipulation DSL by gradient descent
//! over superposed probabilistic states.
//!
//! Values are encoded as `(L+2, L, d)` probability tensors ([`state`]). Each
//! DSL function acts linearly on such tensors ([`dsl`]), so a per-step
//! distribution over functions can be executed on all examples at once and
//! trained against the observed outputs ([`engine`]). [`data`] generates and
//! stores samples and [`eval`] scores results and runs the random-search
//! baseline.

pub mod data;
pub mod dsl;
pub mod engine;
pub mod error;
pub mod eval;
pub mod state;

pub use data::{Dataset, DatasetHeader, DatasetSpec, NoiseMode, Sample};
pub use dsl::{Dsl, FunctionId, IndexMap, Program, NUM_FUNCTIONS};
pub use engine::{
    extract_program, forward, gradient, loss, synthesize, InitLogits, Objective, PolicyMatrix,
    SynthOptions, SynthesisResult, Trajectory,
};
pub use error::{Error, Result};
pub use eval::{random_search, score_outputs, Score};
pub use state::{decode_sharp, encode, is_sharp, validate, BatchState, Config, StateTensor, Value};
