//! ADMM restoration: deconvolution stages, initialization and the three algorithms.

mod admm;
mod config;
mod cost;
mod deconv;
mod init;

pub use admm::{
    algorithm1, algorithm2, algorithm3, run, AdmmOutcome, AdmmState, Algorithm, RunOptions,
    TraceRow,
};
pub use config::{shift_offsets, AdmmConfig, ThetaSchedule};
pub use cost::{fundamental_cost, CostBreakdown};
pub use deconv::{
    conjugate_gradient, fourier_l2_deconvolve, inpaint_step, l2_deconvolve, CgSettings, Target,
};
pub use init::{final_touch_inpaint, initialize, FILL_WINDOW};
