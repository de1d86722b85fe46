//! Vector fields, Jacobians and the adaptive integrator.

mod field;
mod integrator;
mod trajectory;

pub use field::*;
pub use integrator::*;
pub use trajectory::*;
