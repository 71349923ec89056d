//! Long-run averages of a fixed stationary deterministic policy.

use serde::Serialize;

use crate::channel::Action;
use crate::mdp::FiniteMdp;

use super::SolverError;

#[derive(Debug, Clone, PartialEq)]
pub struct PowerOptions {
    /// L1 residual `‖πP − π‖₁` at which the distribution is accepted.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyAverages {
    pub aoi: f64,
    pub energy: f64,
    pub iterations: usize,
}

impl PolicyAverages {
    pub fn lagrangian(&self, lambda: f64) -> f64 {
        self.aoi + lambda * self.energy
    }
}

/// Stationary averages of AoI and energy under `actions`.
///
/// The distribution comes from power iteration on the lazy chain
/// `(I + P)/2`, started from the reference state; laziness removes the
/// period-`K` oscillation of the frame index without moving the fixed point.
pub fn evaluate_policy(
    mdp: &FiniteMdp,
    actions: &[Action],
    opts: &PowerOptions,
) -> Result<PolicyAverages, SolverError> {
    if actions.len() != mdp.len() {
        return Err(SolverError::InvalidPolicy(format!(
            "{} actions for {} states",
            actions.len(),
            mdp.len()
        )));
    }
    let mut rows = Vec::with_capacity(mdp.len());
    for (i, &a) in actions.iter().enumerate() {
        match mdp.row(i).successors(a) {
            Some(s) => rows.push(s),
            None => {
                return Err(SolverError::InvalidPolicy(format!(
                    "state {i} cannot transmit"
                )));
            }
        }
    }

    let n = mdp.len();
    let mut pi = vec![0.0; n];
    pi[mdp.reference()] = 1.0;
    let mut moved = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for iteration in 1..=opts.max_iters {
        moved.iter_mut().for_each(|x| *x = 0.0);
        for (i, succ) in rows.iter().enumerate() {
            let mass = pi[i];
            if mass == 0.0 {
                continue;
            }
            for t in succ.iter() {
                moved[t.next] += mass * t.prob;
            }
        }
        residual = pi.iter().zip(&moved).map(|(a, b)| (a - b).abs()).sum();
        if residual < opts.tol {
            let total: f64 = pi.iter().sum();
            let mut aoi = 0.0;
            let mut energy = 0.0;
            for i in 0..n {
                let p = pi[i] / total;
                aoi += p * mdp.row(i).aoi as f64;
                energy += p * f64::from(actions[i].bit());
            }
            return Ok(PolicyAverages {
                aoi,
                energy,
                iterations: iteration,
            });
        }
        for (p, m) in pi.iter_mut().zip(&moved) {
            *p = 0.5 * (*p + m);
        }
    }
    Err(SolverError::PowerIterationStalled {
        iterations: opts.max_iters,
        residual,
    })
}

pub fn average_energy_of_policy(mdp: &FiniteMdp, actions: &[Action]) -> Result<f64, SolverError> {
    Ok(evaluate_policy(mdp, actions, &PowerOptions::default())?.energy)
}
