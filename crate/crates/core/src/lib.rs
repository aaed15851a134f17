//! Summability diagnostics on finite sequence prefixes.
//!
//! - [`schedules`]: λ-schedules, lacunary schedules and their index windows.
//! - [`summability`]: windowed means, strong residuals, deviation densities and
//!   limit estimation per method.
//! - [`quasicauchy`]: the difference operator and quasi-Cauchy classification.
//! - [`generators`]: bit averages, interleavings, pair embeddings and the two
//!   group-splitting processes.
//! - [`probe`]: modulus-of-continuity estimates, non-uniformity witnesses and
//!   ward-preservation checks for real functions.
//! - [`io`]: file readers.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod generators;
pub mod io;
pub mod probe;
pub mod quasicauchy;
pub mod schedules;
pub mod summability;

pub use generators::{EmbeddingResult, Pair, SimulationMode, SimulationResult};
pub use probe::{Domain, FunctionKind, FunctionSpec, WitnessReport};
pub use quasicauchy::{QcConfig, QcDiagnostic, QcVerdict};
pub use schedules::{IndexWindow, LacunarySchedule, LambdaSchedule};
pub use summability::{
    ConvergenceReport, DensityProfile, Method, SequencePrefix, TailConfig, Verdict, Windowing,
};
