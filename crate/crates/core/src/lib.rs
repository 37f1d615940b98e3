//! Simulation and parametric inference for the telegraph process and the
//! geometric telegraph process observed on an equidistant time grid.

pub mod bessel;
pub mod error;
pub mod estimators;
pub mod io;
pub mod likelihood;
pub mod montecarlo;
pub mod sim;
pub mod solve;

pub use bessel::{bessel_i, bessel_i_scaled, BesselOrder};
pub use error::{Error, Result};
pub use estimators::{
    filter_states, filtered_sample, lambda_argmax, lambda_dot, lambda_least_squares, lambda_oracle,
    lambda_score_root, sigma_hat, v_hat, EstimateResult, EstimatorOptions, LogReturns, Method,
};
pub use likelihood::{
    decompose, log_likelihood, score, score_unsimplified, transition_density, DensityValue,
    IncrementDecomposition,
};
pub use montecarlo::{run_experiment, summarize, ExperimentSpec, McSummary};
pub use sim::{
    moment_mean, moment_var, replication_rng, simulate_path, to_geometric, GeometricGridSample,
    GeometricParams, GridSample, ModelParams, Sign, TelegraphPath,
};
