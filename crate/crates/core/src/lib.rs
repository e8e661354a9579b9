//! Weighted log-Sobolev inequalities for heavy-tailed measures: derivation of
//! weights and rate functions from Lyapunov drift conditions, numerical
//! verification, and the associated dynamics and transport inequalities.

// `!(x > 0.0)` is how NaN is rejected throughout; index loops mirror the textbook recurrences.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod calculus;
pub mod dynamics;
pub mod error;
pub mod lyapunov;
pub mod measure;
pub mod oracle;
pub mod pipeline;
pub mod quadrature;
pub mod transport;
pub mod verifier;

pub use calculus::{TestFunction, Weight};
pub use error::{Error, Result};
pub use measure::{make_builtin, normalize, Grid, Measure, MeasureKind, Potential};
