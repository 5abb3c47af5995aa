//! Workflow-fidelity scoring for multi-agent execution traces.
//!
//! Observed agent trajectories are compared with expected workflows at the
//! transition (consecutive agent pair) level. The crate provides the
//! transition multiset algebra, the per-run metrics (TSR, HF1, TR, TP, ASR),
//! deviation diagnostics, a deterministic fault-injecting workflow simulator,
//! repeat-protocol aggregation with table rendering, and the `asr` CLI.
//!
//! Metric code is generic over [`Scalar`]; the aliases below fix the common
//! choices.

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod logio;
pub mod metrics;
pub mod model;
pub mod report;
pub mod scalar;
pub mod sim;

pub use error::{Error, Result};
pub use logio::{RunRecord, WorkflowSpec};
pub use model::{AgentId, Trajectory, Transition, TransitionMultiset};
pub use num_rational::Rational64;
pub use scalar::Scalar;

/// Per-run scores in double precision.
pub type ScoreRow = metrics::ScoreRow<f64>;
/// Per-run scores in single precision.
pub type ScoreRow32 = metrics::ScoreRow<f32>;
/// Per-run scores as exact fractions.
pub type ExactScoreRow = metrics::ScoreRow<Rational64>;
