//! Gate optimization over pulse widths.
//!
//! Amplitudes stay fixed; the widths `τ_{k,m}` are the decision variables and
//! the average gate fidelity `J` (with leakage) is the figure of merit.

mod objective;
mod optimizer;

pub use objective::{evaluate_staircase_conversion, fidelity, gradient_fd, Objective};
pub use optimizer::{
    optimize, random_initial_train, OptimizationResult, OptimizerConfig, Termination, TracePoint,
};
