//! Capacity of finite-state channels with feedback via alternating
//! maximization of directed information over causally conditioned inputs.
//!
//! The solver works on a fixed block length `n`. A [`BaaProblem`] bundles
//! the unrolled channel `p(y^n||x^n)`, the feedback delay and the feedback
//! map; [`solve`] returns a [`BaaRun`] carrying the optimal kernel, the
//! posterior and the per-iteration bounds. The [`estimators`] module turns
//! sequences of such runs into capacity estimates.

pub mod baa;
pub mod causal;
pub mod channel;
pub mod error;
pub mod estimators;
pub mod seqspace;

pub use baa::{classic_baa, solve, BaaProblem, BaaRun, BoundPair, ClassicSolution, RunStatus};
pub use causal::{directed_information, joint, CausalKernel, ChannelFactors, JointTable, PosteriorTable};
pub use channel::{BuiltinChannel, FeedbackMap, FscKernel};
pub use error::{Error, Result};
pub use seqspace::{alternating_reduce, AlphabetSpec, Reduction, SequenceCodec};
