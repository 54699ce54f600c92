//! Symbolic and numeric machinery for conformally invariant integrals of
//! Riemannian curvature invariants.

pub mod canon;
pub mod io;
pub mod linalg;
pub mod numeric;
pub mod rational;
pub mod relations;
pub mod rules;
pub mod solver;
pub mod term;
pub mod variation;
