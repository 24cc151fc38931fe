//! Arctic curves of path models from exact enumeration, large-deviation
//! rates and a variational principle.

// `!(x > 0.0)` guards reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod entropy;
pub mod error;
pub mod exact;
pub mod exact_asm;
pub mod exact_aztec;
pub mod properties;
pub mod quadrature;
pub mod settings;
pub mod step_model;
pub mod tangent;

pub use error::{Error, Result};
pub use settings::NumericSettings;
pub use step_model::{LagrangeanEval, ModelTag, Monomial, SlopeSolution, Step, StepSet};
