//! Relative value iteration for the average-cost problem.
//!
//! Every state moves `k → (k)_+`, so each induced chain is periodic with
//! period `K`. The iteration runs on the aperiodic transform
//! `P̃ = τI + (1 − τ)P`, which keeps the gain and the optimal actions and
//! scales the bias by `1/(1 − τ)`; reported biases are mapped back.

use crate::channel::Action;
use crate::mdp::{stage_cost, FiniteMdp};

use super::SolverError;

/// Action chosen when both Q-values are exactly equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    #[default]
    Suspend,
    Transmit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RviOptions {
    /// Stop once `max_s |h_n(s) − h_{n−1}(s)| ≤ eps`.
    pub eps: f64,
    pub max_iters: usize,
    /// Self-loop weight `τ ∈ (0, 1)` of the aperiodic transform.
    pub aperiodicity: f64,
    pub tie_break: TieBreak,
}

impl Default for RviOptions {
    fn default() -> Self {
        Self {
            eps: 1e-6,
            max_iters: 200_000,
            aperiodicity: 0.5,
            tie_break: TieBreak::Suspend,
        }
    }
}

impl RviOptions {
    pub fn with_eps(eps: f64) -> Self {
        Self {
            eps,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub lambda: f64,
    /// Average Lagrangian cost estimate `V(0)` at the last sweep.
    pub gain: f64,
    /// Lower and upper bounds `min/max_s (Th − h)(s)` on the optimal gain.
    pub gain_bounds: (f64, f64),
    /// Relative values `h(s)` with `h(reference) = 0`.
    pub bias: Vec<f64>,
    pub actions: Vec<Action>,
    pub iterations: usize,
    pub span: f64,
    /// Number of full two-action comparisons performed.
    pub argmin_evaluations: u64,
}

/// One sweep of decisions. Implementations call `argmin` where they need a
/// full comparison and must `assign` every state exactly once.
pub(crate) trait SweepRule {
    fn sweep(
        &mut self,
        mdp: &FiniteMdp,
        argmin: &mut dyn FnMut(usize) -> Action,
        assign: &mut dyn FnMut(usize, Action),
    );
}

pub(crate) struct Exhaustive;

impl SweepRule for Exhaustive {
    fn sweep(
        &mut self,
        mdp: &FiniteMdp,
        argmin: &mut dyn FnMut(usize) -> Action,
        assign: &mut dyn FnMut(usize, Action),
    ) {
        for (i, row) in mdp.rows().iter().enumerate() {
            let a = if row.transmit.is_some() {
                argmin(i)
            } else {
                Action::Suspend
            };
            assign(i, a);
        }
    }
}

/// Plain RVI: full `argmin` at every state with two admissible actions.
pub fn rvi_plain(
    mdp: &FiniteMdp,
    lambda: f64,
    opts: &RviOptions,
) -> Result<SolveReport, SolverError> {
    run(mdp, lambda, opts, None, &mut Exhaustive)
}

/// As [`rvi_plain`], starting from a previous bias instead of zero.
pub fn rvi_plain_from(
    mdp: &FiniteMdp,
    lambda: f64,
    opts: &RviOptions,
    warm: Option<&[f64]>,
) -> Result<SolveReport, SolverError> {
    run(mdp, lambda, opts, warm, &mut Exhaustive)
}

pub(crate) fn run(
    mdp: &FiniteMdp,
    lambda: f64,
    opts: &RviOptions,
    warm: Option<&[f64]>,
    rule: &mut dyn SweepRule,
) -> Result<SolveReport, SolverError> {
    run_tracked(mdp, lambda, opts, warm, rule).map(|(report, _)| report)
}

/// Greedy action at `state` against a bias vector, with `opts`' tie-break.
pub(crate) fn greedy_action(
    mdp: &FiniteMdp,
    state: usize,
    lambda: f64,
    bias: &[f64],
    tie: TieBreak,
) -> Action {
    let row = mdp.row(state);
    if row.transmit.is_none() {
        return Action::Suspend;
    }
    let idle =
        stage_cost(row.aoi, Action::Suspend, lambda) + mdp.expected(state, Action::Suspend, bias);
    let send =
        stage_cost(row.aoi, Action::Transmit, lambda) + mdp.expected(state, Action::Transmit, bias);
    match tie {
        TieBreak::Suspend if send < idle => Action::Transmit,
        TieBreak::Transmit if send <= idle => Action::Transmit,
        _ => Action::Suspend,
    }
}

/// As [`run`], also returning the states of the final sweep that were
/// assigned without a comparison.
pub(crate) fn run_tracked(
    mdp: &FiniteMdp,
    lambda: f64,
    opts: &RviOptions,
    warm: Option<&[f64]>,
    rule: &mut dyn SweepRule,
) -> Result<(SolveReport, Vec<usize>), SolverError> {
    if lambda.is_nan() || lambda < 0.0 {
        return Err(crate::mdp::ModelError::NegativeMultiplier(lambda).into());
    }
    let tau = opts.aperiodicity;
    assert!((0.0..1.0).contains(&tau), "aperiodicity must lie in [0, 1)");
    let n = mdp.len();
    let reference = mdp.reference();
    let scale = 1.0 - tau;

    let mut h = match warm {
        Some(bias) if bias.len() == n => {
            let base = bias[reference];
            bias.iter().map(|b| (b - base) / scale).collect()
        }
        _ => vec![0.0; n],
    };
    let mut v = vec![0.0; n];
    let mut actions = vec![Action::Suspend; n];
    let mut argmins: u64 = 0;
    let mut span = f64::INFINITY;
    let mut compared = vec![false; n];

    for iteration in 1..=opts.max_iters {
        {
            let h_now = &h;
            let q = |i: usize, a: Action| -> f64 {
                stage_cost(mdp.row(i).aoi, a, lambda)
                    + tau * h_now[i]
                    + scale * mdp.expected(i, a, h_now)
            };
            compared.fill(false);
            let seen = &mut compared;
            let mut argmin = |i: usize| -> Action {
                argmins += 1;
                seen[i] = true;
                let idle = q(i, Action::Suspend);
                let send = q(i, Action::Transmit);
                match opts.tie_break {
                    TieBreak::Suspend if send < idle => Action::Transmit,
                    TieBreak::Transmit if send <= idle => Action::Transmit,
                    _ => Action::Suspend,
                }
            };
            let v_out = &mut v;
            let act_out = &mut actions;
            let mut assign = |i: usize, a: Action| {
                v_out[i] = q(i, a);
                act_out[i] = a;
            };
            rule.sweep(mdp, &mut argmin, &mut assign);
        }

        let v_ref = v[reference];
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        span = 0.0;
        for i in 0..n {
            let diff = v[i] - h[i];
            lo = lo.min(diff);
            hi = hi.max(diff);
            let next = v[i] - v_ref;
            span = span.max((next - h[i]).abs());
            h[i] = next;
        }
        if !span.is_finite() {
            return Err(SolverError::NotConverged {
                iterations: iteration,
                span,
            });
        }
        if span <= opts.eps {
            let skipped = (0..n)
                .filter(|&i| !compared[i] && mdp.row(i).transmit.is_some())
                .collect();
            let report = SolveReport {
                lambda,
                gain: v_ref,
                gain_bounds: (lo, hi),
                bias: h.iter().map(|x| x * scale).collect(),
                actions,
                iterations: iteration,
                span,
                argmin_evaluations: argmins,
            };
            return Ok((report, skipped));
        }
    }
    Err(SolverError::NotConverged {
        iterations: opts.max_iters,
        span,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{StateRow, Transition};
    use approx::assert_abs_diff_eq;
    use smallvec::smallvec;

    #[test]
    fn constant_cost_self_loop() {
        let rows = vec![StateRow {
            aoi: 7,
            suspend: smallvec![Transition { next: 0, prob: 1.0 }],
            transmit: None,
        }];
        let mdp = FiniteMdp::new(rows, 0);
        let r = rvi_plain(&mdp, 0.0, &RviOptions::default()).unwrap();
        assert_abs_diff_eq!(r.gain, 7.0, epsilon = 1e-12);
        assert_eq!(r.actions, vec![Action::Suspend]);
        assert_eq!(r.argmin_evaluations, 0);
    }

    #[test]
    fn periodic_two_cycle_converges() {
        // deterministic A -> B -> A with costs 1 and 5: gain 3
        let rows = vec![
            StateRow {
                aoi: 1,
                suspend: smallvec![Transition { next: 1, prob: 1.0 }],
                transmit: None,
            },
            StateRow {
                aoi: 5,
                suspend: smallvec![Transition { next: 0, prob: 1.0 }],
                transmit: None,
            },
        ];
        let mdp = FiniteMdp::new(rows, 0);
        let r = rvi_plain(&mdp, 0.0, &RviOptions::with_eps(1e-10)).unwrap();
        assert_abs_diff_eq!(r.gain, 3.0, epsilon = 1e-9);
        // h(B) solves h(B) = 5 - 3 + h(A)
        assert_abs_diff_eq!(r.bias[1], 2.0, epsilon = 1e-9);
    }

    #[test]
    fn reports_non_convergence() {
        // a 3-cycle needs more than a handful of lazy sweeps
        let rows = (0..3)
            .map(|i| StateRow {
                aoi: 1 + 4 * i as u32,
                suspend: smallvec![Transition {
                    next: (i + 1) % 3,
                    prob: 1.0
                }],
                transmit: None,
            })
            .collect();
        let mdp = FiniteMdp::new(rows, 0);
        let opts = RviOptions {
            max_iters: 3,
            eps: 1e-12,
            ..RviOptions::default()
        };
        assert!(matches!(
            rvi_plain(&mdp, 0.0, &opts),
            Err(SolverError::NotConverged { iterations: 3, .. })
        ));
    }
}
