//! Numeric oracle: Taylor jets of metrics, pointwise evaluation of
//! contractions, and quadrature on periodic metrics.

pub mod eval;
pub mod jet;
pub mod oracle;
pub mod torus;
pub mod tps;

pub use eval::{evaluate, term_values, Evaluator};
pub use jet::{Geometry, MetricJet};
pub use oracle::{check_zero, random_jets, ZeroCheck};
pub use torus::{
    conformal_invariance_residual, torus_integral, torus_integrals, IntegralReport, TorusFunction,
    TorusMetric,
};
