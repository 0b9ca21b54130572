//! Bus evacuation planning under per-passenger radiation dose limits.
//!
//! The pipeline is: an [`EvacuationInstance`] is validated into a
//! [`Network`], turned into the bilinear model by [`build_mibp`], rewritten
//! as a mixed-integer linear program by [`linearize_model`], and solved by
//! the branch-and-bound engine in [`bnb`]. Plans are always checked against
//! the bilinear model with [`check_plan`].

pub mod bnb;
pub mod error;
pub mod formulation;
pub mod linearize;
pub mod milp;
pub mod model;
pub mod oracle;
pub mod pipeline;
pub mod planfile;
pub mod mps;
pub mod scalar;
pub mod scenario;
pub mod simplex;

pub use error::{Error, Result};
pub use formulation::{build_mibp, check_plan, EvacuationPlan, MibpModel};
pub use linearize::{linearize_model, LinearizationMode};
pub use milp::MilpProblem;
pub use model::{EvacuationInstance, Network};
pub use scalar::{LpFloat, Scalar};

/// Exact rational scalar.
pub type Rational = num_rational::Rational64;

pub type Instance = EvacuationInstance<f64>;
pub type Instance32 = EvacuationInstance<f32>;
pub type ExactInstance = EvacuationInstance<Rational>;
pub type Milp = MilpProblem<f64>;
pub type Milp32 = MilpProblem<f32>;
pub type Plan = EvacuationPlan<f64>;
pub type ExactPlan = EvacuationPlan<Rational>;
