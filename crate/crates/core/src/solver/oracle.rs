//! Brute-force optimum over all stationary deterministic policies, for
//! cross-checking the iterative solvers on tiny instances.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::channel::Action;
use crate::mdp::{stage_cost, FiniteMdp};

use super::evaluate::{evaluate_policy, PowerOptions};
use super::SolverError;

pub const DEFAULT_ORACLE_CAP: usize = 14;

/// Policies whose gain is within this of the best are all reported.
const MINIMIZER_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutcome {
    pub gain: f64,
    /// Every policy attaining `gain`; actions on transient states are
    /// arbitrary, so there are usually several.
    pub minimizers: Vec<Vec<Action>>,
    pub policies_evaluated: usize,
}

/// Long-run average Lagrangian cost from the reference state, computed
/// from the stationary law of the states reachable under `actions`.
fn average_cost(mdp: &FiniteMdp, actions: &[Action], lambda: f64) -> Result<f64, SolverError> {
    let n = mdp.len();
    let mut local = vec![usize::MAX; n];
    let mut order = Vec::new();
    let mut queue = VecDeque::from([mdp.reference()]);
    local[mdp.reference()] = 0;
    order.push(mdp.reference());
    while let Some(s) = queue.pop_front() {
        for t in mdp
            .row(s)
            .successors(actions[s])
            .expect("admissible")
            .iter()
        {
            if local[t.next] == usize::MAX {
                local[t.next] = order.len();
                order.push(t.next);
                queue.push_back(t.next);
            }
        }
    }

    // π(P − I) = 0 with the last balance equation replaced by Σπ = 1
    let m = order.len();
    let mut a = DMatrix::<f64>::zeros(m, m);
    for (i, &s) in order.iter().enumerate() {
        a[(i, i)] -= 1.0;
        for t in mdp
            .row(s)
            .successors(actions[s])
            .expect("admissible")
            .iter()
        {
            a[(local[t.next], i)] += t.prob;
        }
    }
    let mut b = DVector::<f64>::zeros(m);
    for j in 0..m {
        a[(m - 1, j)] = 1.0;
    }
    b[m - 1] = 1.0;

    let cost = |s: usize| stage_cost(mdp.row(s).aoi, actions[s], lambda);
    let balanced = |pi: &DVector<f64>| {
        let mut moved = vec![0.0; m];
        for (i, &s) in order.iter().enumerate() {
            for t in mdp
                .row(s)
                .successors(actions[s])
                .expect("admissible")
                .iter()
            {
                moved[local[t.next]] += pi[i] * t.prob;
            }
        }
        pi.iter().all(|p| p.is_finite() && *p > -1e-9)
            && moved
                .iter()
                .zip(pi.iter())
                .all(|(x, p)| (x - p).abs() < 1e-10)
    };
    match a.lu().solve(&b) {
        Some(pi) if balanced(&pi) => Ok(order
            .iter()
            .enumerate()
            .map(|(i, &s)| pi[i] * cost(s))
            .sum()),
        // several closed classes reachable: fall back to the Cesàro limit
        _ => {
            let opts = PowerOptions {
                tol: 1e-13,
                max_iters: 10_000_000,
            };
            Ok(evaluate_policy(mdp, actions, &opts)?.lagrangian(lambda))
        }
    }
}

/// Exhaustive search over the `2^d` policies, `d` the number of states
/// where transmission is admissible.
pub fn enumerate_and_evaluate(
    mdp: &FiniteMdp,
    lambda: f64,
    cap: usize,
) -> Result<OracleOutcome, SolverError> {
    if lambda.is_nan() || lambda < 0.0 {
        return Err(crate::mdp::ModelError::NegativeMultiplier(lambda).into());
    }
    if mdp.len() > cap {
        return Err(SolverError::OracleCapExceeded {
            states: mdp.len(),
            cap,
        });
    }
    let decisions: Vec<usize> = (0..mdp.len())
        .filter(|&i| mdp.row(i).transmit.is_some())
        .collect();
    let mut gains = Vec::with_capacity(1 << decisions.len());
    let mut policies = Vec::with_capacity(1 << decisions.len());
    for mask in 0u64..(1u64 << decisions.len()) {
        let mut actions = vec![Action::Suspend; mdp.len()];
        for (bit, &i) in decisions.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                actions[i] = Action::Transmit;
            }
        }
        gains.push(average_cost(mdp, &actions, lambda)?);
        policies.push(actions);
    }
    let gain = gains.iter().copied().fold(f64::INFINITY, f64::min);
    let minimizers = policies
        .into_iter()
        .zip(&gains)
        .filter(|(_, &g)| g - gain <= MINIMIZER_TOLERANCE)
        .map(|(p, _)| p)
        .collect();
    Ok(OracleOutcome {
        gain,
        minimizers,
        policies_evaluated: gains.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{StateRow, Transition};
    use smallvec::smallvec;

    #[test]
    fn single_action_space() {
        let rows = vec![
            StateRow {
                aoi: 2,
                suspend: smallvec![Transition { next: 1, prob: 1.0 }],
                transmit: None,
            },
            StateRow {
                aoi: 4,
                suspend: smallvec![Transition { next: 0, prob: 1.0 }],
                transmit: None,
            },
        ];
        let out =
            enumerate_and_evaluate(&FiniteMdp::new(rows, 0), 3.0, DEFAULT_ORACLE_CAP).unwrap();
        assert!((out.gain - 3.0).abs() < 1e-12);
        assert_eq!(out.policies_evaluated, 1);
        assert_eq!(out.minimizers.len(), 1);
    }

    #[test]
    fn cap_is_enforced() {
        let rows = (0..3)
            .map(|i| StateRow {
                aoi: 1,
                suspend: smallvec![Transition {
                    next: (i + 1) % 3,
                    prob: 1.0
                }],
                transmit: None,
            })
            .collect();
        let mdp = FiniteMdp::new(rows, 0);
        assert!(matches!(
            enumerate_and_evaluate(&mdp, 0.0, 2),
            Err(SolverError::OracleCapExceeded { states: 3, cap: 2 })
        ));
    }
}
