//! Discounted value iteration, used to probe the structural properties of
//! the finite-horizon value functions `V_n^β`.

use crate::channel::Action;
use crate::mdp::{stage_cost, FiniteMdp};

use super::SolverError;

fn check_beta(beta: f64) -> Result<(), SolverError> {
    if beta > 0.0 && beta < 1.0 {
        Ok(())
    } else {
        Err(SolverError::InvalidDiscount(beta))
    }
}

fn bellman(mdp: &FiniteMdp, lambda: f64, beta: f64, values: &[f64], out: &mut [f64]) -> f64 {
    let mut change = 0.0f64;
    for (i, row) in mdp.rows().iter().enumerate() {
        let idle = stage_cost(row.aoi, Action::Suspend, lambda)
            + beta * mdp.expected(i, Action::Suspend, values);
        let best = if row.transmit.is_some() {
            let send = stage_cost(row.aoi, Action::Transmit, lambda)
                + beta * mdp.expected(i, Action::Transmit, values);
            idle.min(send)
        } else {
            idle
        };
        change = change.max((best - values[i]).abs());
        out[i] = best;
    }
    change
}

/// `V_n^β` after exactly `n_iters` sweeps from `V_0^β = 0`.
pub fn discounted_vi(
    mdp: &FiniteMdp,
    lambda: f64,
    beta: f64,
    n_iters: usize,
) -> Result<Vec<f64>, SolverError> {
    check_beta(beta)?;
    let mut values = vec![0.0; mdp.len()];
    let mut next = vec![0.0; mdp.len()];
    for _ in 0..n_iters {
        bellman(mdp, lambda, beta, &values, &mut next);
        std::mem::swap(&mut values, &mut next);
    }
    Ok(values)
}

/// Iterates until the sup-norm change drops below `tol`; returns the values
/// and the number of sweeps.
pub fn discounted_vi_until(
    mdp: &FiniteMdp,
    lambda: f64,
    beta: f64,
    tol: f64,
    max_iters: usize,
) -> Result<(Vec<f64>, usize), SolverError> {
    check_beta(beta)?;
    let mut values = vec![0.0; mdp.len()];
    let mut next = vec![0.0; mdp.len()];
    for n in 1..=max_iters {
        let change = bellman(mdp, lambda, beta, &values, &mut next);
        std::mem::swap(&mut values, &mut next);
        if change < tol {
            return Ok((values, n));
        }
    }
    Err(SolverError::NotConverged {
        iterations: max_iters,
        span: f64::NAN,
    })
}

/// Greedy actions with respect to `values`; exact ties go to suspension.
pub fn discounted_greedy(mdp: &FiniteMdp, lambda: f64, beta: f64, values: &[f64]) -> Vec<Action> {
    mdp.rows()
        .iter()
        .enumerate()
        .map(|(i, row)| {
            if row.transmit.is_none() {
                return Action::Suspend;
            }
            let idle = row.aoi as f64 + beta * mdp.expected(i, Action::Suspend, values);
            let send = row.aoi as f64 + lambda + beta * mdp.expected(i, Action::Transmit, values);
            if send < idle {
                Action::Transmit
            } else {
                Action::Suspend
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelModel;
    use crate::mdp::{FrameSpec, NoSensingModel, ScheduleModel, TruncationBound};

    #[test]
    fn first_sweep_is_the_aoi() {
        let frame = FrameSpec::new(3).unwrap();
        let m = NoSensingModel::build(
            frame,
            ChannelModel::new(0.7, 0.3).unwrap(),
            TruncationBound::new(12, &frame).unwrap(),
        )
        .unwrap();
        let v = discounted_vi(m.mdp(), 0.0, 0.9, 1).unwrap();
        for (i, s) in m.states().iter().enumerate() {
            assert_eq!(v[i], s.aoi as f64);
        }
        assert!(discounted_vi(m.mdp(), 0.0, 1.0, 1).is_err());
    }
}
