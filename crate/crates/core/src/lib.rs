//! Spatial-sign tests for the high-dimensional one-sample location problem.
//!
//! * [`maxtest`]: scalar-invariant max-type statistic with Gumbel calibration.
//! * [`sumtest`]: sum-type statistic with leave-two-out diagonal scaling.
//! * [`combo`]: Cauchy combination of the two p-values.
//! * [`hr`]: the joint spatial-median / diagonal-scatter estimator all of them rest on.
//! * [`baselines`]: mean-based comparison tests.
//! * [`datagen`] and [`harness`]: scenario generators and Monte Carlo experiments.

// Validity checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod combo;
pub mod data;
pub mod datagen;
pub mod error;
pub mod format;
pub mod harness;
pub mod hr;
pub mod maxtest;
pub mod sign;
pub mod stats;
pub mod sumtest;

pub use baselines::{clx_max_test, normal_combo_test, srivastava_sum_test, BaselineMethod, BaselineOutcome};
pub use combo::{cauchy_combine, spatial_sign_tests, ss_cc_test, ComboOutcome, SpatialSignOutcome};
pub use data::DataMatrix;
pub use datagen::{make_scatter, sample, Family, Sampler, Scenario, ScatterSpec, SignalSpec};
pub use error::{Error, Result};
pub use harness::{
    run_independence_diagnostic, run_power_experiment, run_size_experiment, ExperimentPlan, Method,
    RunOptions, SimulationReport,
};
pub use hr::{hr_estimate, hr_estimate_leave_out, HREstimate, Init, SolverConfig};
pub use maxtest::{gumbel_cdf, gumbel_quantile, t_max, MaxTestOutcome};
pub use sign::{decompose, spatial_sign, zeta1_hat, SignDecomposition};
pub use sumtest::{normal_cdf, t_sum, tr_r2_hat, LeaveOutMode, SumTestOutcome};
