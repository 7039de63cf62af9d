//! Loewner-order matrix concentration inequalities with numerical
//! verification.
//!
//! Bounds of the form `P(X ⪰ A) ≤ …` and `P(λ_min(ΣX_k) ≥ t) ≤ …` live in
//! [`bounds`]; [`samplers`] and [`processes`] generate the random matrices and
//! events they speak about; [`verify`] checks one against the other by exact
//! enumeration or Monte Carlo; [`experiment`] wires it all to config files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod experiment;
pub mod processes;
pub mod samplers;
pub mod symmat;
pub mod verify;

pub use bounds::{BoundResult, TheoremId, ThetaGrid};
pub use error::{Error, Result};
pub use experiment::{run, ExperimentConfig, Report, RunMode, Scenario};
pub use samplers::{DiscreteMatrixDist, SeedSpec};
pub use symmat::{loewner_geq, PsdTolerance, SymMatrix};
pub use verify::{EmpiricalEstimate, VerdictStatus, VerificationVerdict};
