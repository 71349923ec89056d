//! Planning algorithms over the compiled models.
//!
//! All average-cost solvers share one relative value iteration engine; the
//! structure-aware variants only change which states get a full `argmin`
//! in each sweep.

mod discounted;
mod evaluate;
mod lagrange;
mod oracle;
mod policy;
mod rvi;
pub mod structure;
mod threshold;

pub use discounted::{discounted_greedy, discounted_vi, discounted_vi_until};
pub use evaluate::{average_energy_of_policy, evaluate_policy, PolicyAverages, PowerOptions};
pub use lagrange::{
    bisect_lambda, bisect_lambda_cached, dual_value_sweep, mixing_factor, BisectOptions, DualPoint,
    MixturePolicy, PolicyCache, PolicyPoint,
};
pub use oracle::{enumerate_and_evaluate, OracleOutcome, DEFAULT_ORACLE_CAP};
pub use policy::{ThresholdPolicyAoI, ThresholdPolicyBelief};
pub use rvi::{rvi_plain, rvi_plain_from, RviOptions, SolveReport, TieBreak};
pub use threshold::{rvi_threshold_delayed, rvi_threshold_no_sensing, StructuredSolve};

use thiserror::Error;

use crate::mdp::ModelError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("relative value iteration did not converge after {iterations} sweeps (span {span:e})")]
    NotConverged { iterations: usize, span: f64 },

    #[error(
        "stationary distribution did not converge after {iterations} steps (residual {residual:e})"
    )]
    PowerIterationStalled { iterations: usize, residual: f64 },

    #[error("could not find a multiplier meeting the energy budget; gave up at λ = {lambda}")]
    BudgetExhausted { lambda: f64 },

    #[error("energy budget must lie in (0, 1], got {0}")]
    InvalidEnergyBudget(f64),

    #[error("discount factor must lie in (0, 1), got {0}")]
    InvalidDiscount(f64),

    #[error("oracle cap exceeded: {states} states > {cap}")]
    OracleCapExceeded { states: usize, cap: usize },

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("policy is not of threshold type at {0}")]
    NotThreshold(String),

    #[error(transparent)]
    Model(#[from] ModelError),
}
