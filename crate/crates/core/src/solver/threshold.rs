//! Structure-aware relative value iteration.
//!
//! Both variants keep a per-group threshold that is reset at the start of
//! every sweep. Once a full comparison picks "transmit" inside a group, every
//! later state of that group (higher belief, or higher AoI) is assigned
//! "transmit" without a comparison. The skipped states are re-compared
//! once at convergence.

use crate::channel::Action;
use crate::mdp::{DelayedModel, FiniteMdp, NoSensingModel, ScheduleModel};

use super::rvi::{greedy_action, run, run_tracked, Exhaustive, RviOptions, SolveReport, SweepRule};
use super::SolverError;

struct BeliefThresholdRule<'a> {
    model: &'a NoSensingModel,
}

impl SweepRule for BeliefThresholdRule<'_> {
    fn sweep(
        &mut self,
        _mdp: &FiniteMdp,
        argmin: &mut dyn FnMut(usize) -> Action,
        assign: &mut dyn FnMut(usize, Action),
    ) {
        let k = self.model.frame().len();
        let cap = self.model.bound().get();
        for group in self.model.groups() {
            if group.aoi < k {
                for &i in &group.states {
                    assign(i, Action::Suspend);
                }
                continue;
            }
            // lifting beliefs at the AoI cap can break monotonicity in ω there
            if group.aoi == cap {
                for &i in &group.states {
                    assign(i, argmin(i));
                }
                continue;
            }
            let mut threshold = f64::INFINITY;
            for &i in &group.states {
                let w = self.model.state(i).belief.value;
                let a = if w >= threshold {
                    Action::Transmit
                } else {
                    let a = argmin(i);
                    if a == Action::Transmit {
                        threshold = w;
                    }
                    a
                };
                assign(i, a);
            }
        }
    }
}

struct AoiThresholdRule<'a> {
    model: &'a DelayedModel,
}

impl SweepRule for AoiThresholdRule<'_> {
    fn sweep(
        &mut self,
        _mdp: &FiniteMdp,
        argmin: &mut dyn FnMut(usize) -> Action,
        assign: &mut dyn FnMut(usize, Action),
    ) {
        let k = self.model.frame().len();
        // groups come in (k, g = 0), (k, g = 1) pairs
        for pair in self.model.groups().chunks(2) {
            let mut thresholds = [u32::MAX; 2];
            for group in pair {
                let g = usize::from(group.last_good);
                for &i in &group.states {
                    let aoi = self.model.state(i).aoi;
                    let a = if aoi < k {
                        Action::Suspend
                    } else if aoi >= thresholds[g] {
                        Action::Transmit
                    } else {
                        let a = argmin(i);
                        if a == Action::Transmit {
                            thresholds[g] = aoi;
                            thresholds[1] = thresholds[1].min(aoi);
                        }
                        a
                    };
                    assign(i, a);
                }
            }
        }
    }
}

/// Threshold-in-belief RVI for the no-sensing case.
pub fn rvi_threshold_no_sensing(
    model: &NoSensingModel,
    lambda: f64,
    opts: &RviOptions,
) -> Result<SolveReport, SolverError> {
    model.solve_structured(lambda, opts, None)
}

/// Threshold-in-AoI RVI for the delayed-sensing case, with the `g = 0`
/// threshold also capping the `g = 1` threshold.
pub fn rvi_threshold_delayed(
    model: &DelayedModel,
    lambda: f64,
    opts: &RviOptions,
) -> Result<SolveReport, SolverError> {
    model.solve_structured(lambda, opts, None)
}

/// Runs `rule` to convergence, then compares the states it skipped in the
/// final sweep against the converged bias. Strong truncation can break the
/// threshold shape the shortcut assumes; if any skipped state disagrees the
/// solve is finished with exhaustive sweeps.
fn certified(
    mdp: &FiniteMdp,
    lambda: f64,
    opts: &RviOptions,
    warm: Option<&[f64]>,
    rule: &mut dyn SweepRule,
) -> Result<SolveReport, SolverError> {
    let (mut fast, skipped) = run_tracked(mdp, lambda, opts, warm, rule)?;
    fast.argmin_evaluations += skipped.len() as u64;
    let agrees = skipped
        .iter()
        .all(|&i| greedy_action(mdp, i, lambda, &fast.bias, opts.tie_break) == fast.actions[i]);
    if agrees {
        return Ok(fast);
    }
    let exact = run(mdp, lambda, opts, Some(&fast.bias), &mut Exhaustive)?;
    Ok(SolveReport {
        iterations: fast.iterations + exact.iterations,
        argmin_evaluations: fast.argmin_evaluations + exact.argmin_evaluations,
        ..exact
    })
}

/// Models that have a structure-aware solver.
pub trait StructuredSolve: ScheduleModel {
    fn solve_structured(
        &self,
        lambda: f64,
        opts: &RviOptions,
        warm: Option<&[f64]>,
    ) -> Result<SolveReport, SolverError>;
}

impl StructuredSolve for NoSensingModel {
    fn solve_structured(
        &self,
        lambda: f64,
        opts: &RviOptions,
        warm: Option<&[f64]>,
    ) -> Result<SolveReport, SolverError> {
        certified(
            self.mdp(),
            lambda,
            opts,
            warm,
            &mut BeliefThresholdRule { model: self },
        )
    }
}

impl StructuredSolve for DelayedModel {
    fn solve_structured(
        &self,
        lambda: f64,
        opts: &RviOptions,
        warm: Option<&[f64]>,
    ) -> Result<SolveReport, SolverError> {
        certified(
            self.mdp(),
            lambda,
            opts,
            warm,
            &mut AoiThresholdRule { model: self },
        )
    }
}
