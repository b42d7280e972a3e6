#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bnb;
pub mod cuts;
pub mod decimal;
pub mod error;
pub mod instance;
pub mod lp;
pub mod model;
pub mod net;
pub mod pipeline;
mod simplex;
pub mod stn;

pub use bnb::{solve_milp, MilpOutcome, MilpStatus, SolveConfig};
pub use cuts::{build_cutset, contains, estimate_m, ppo, tighten, CutSet};
pub use error::{Error, Result};
pub use lp::{feasible_point, solve_lp, LpOutcome, LpStatus};
pub use model::{evaluate, validate, MilpModel, ModelBuilder};
pub use net::{Ae4bvParams, BinaryDataset, NetConfig};
pub use pipeline::PipelineConfig;
pub use stn::{
    build_instance, nominal_theta, perturb_theta, BinaryIndex, PerturbSpec, SchedulingTheta, StnData,
};
