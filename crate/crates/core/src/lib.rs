//! Conserved-electorate polarisation models: a three-group baseline
//! (left radicals, right radicals, centrists) and a four-group extension with
//! a disengaged pool, plus spectral thresholds, shock sequences and numerical
//! diagnostics.

pub mod diagnostics;
pub mod dynamics;
pub mod equilibria;
pub mod error;
pub mod model;
pub mod shock;
pub mod spectral;
pub mod verify;

pub use diagnostics::DiagnosticReport;
pub use dynamics::{integrate, IntegratorConfig, Trajectory, VectorField};
pub use error::{Error, Result};
pub use model::{
    BaselineParams, ElectorateRow, FourGroupParams, ModelParams, SimplexPoint, SimplexState3, SimplexState4,
    SymmetricParams,
};
pub use shock::{run_shock_sequence, ShockEvent, ShockSequenceReport};
pub use spectral::{Matrix2, ShockThreshold};
