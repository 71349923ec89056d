//! Age-of-information scheduling over a two-state Gilbert-Elliott channel
//! with an average energy budget.
//!
//! - [`channel`]: channel model and belief algebra.
//! - [`mdp`]: truncated state spaces and kernels for the two CSI cases.
//! - [`solver`]: relative value iteration, threshold-aware variants,
//!   Lagrangian bisection and a brute-force oracle.
//! - [`sim`]: Monte-Carlo trajectories and the greedy baseline.
//! - [`experiment`]: sweeps and the property suite behind the CLI.

pub mod channel;
pub mod experiment;
pub mod mdp;
pub mod sim;
pub mod solver;
