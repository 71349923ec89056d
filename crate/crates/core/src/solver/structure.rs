//! Runtime checks of the structural properties of computed value functions
//! and policies.
//!
//! Value-function checks only look at interior states, whose successors are
//! not moved by the AoI or belief clamping of the truncated model.

use serde::Serialize;

use crate::channel::Action;
use crate::mdp::{DelayedModel, NoSensingModel, ScheduleModel};

use super::discounted::{discounted_greedy, discounted_vi_until};
use super::SolverError;

/// Result of one property check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub checked: usize,
    /// Human-readable counterexamples; only the first few are kept.
    pub violations: Vec<String>,
    pub violation_count: usize,
}

const KEPT_COUNTEREXAMPLES: usize = 5;

impl CheckOutcome {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            checked: 0,
            violations: Vec::new(),
            violation_count: 0,
        }
    }

    fn record(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.violation_count += 1;
            if self.violations.len() < KEPT_COUNTEREXAMPLES {
                self.violations.push(detail());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }
}

fn slack(a: f64, b: f64) -> f64 {
    1e-9 * (1.0 + a.abs().max(b.abs()))
}

/// `Δ < N` and every belief step count below `N`.
pub fn interior_no_sensing(model: &NoSensingModel, index: usize) -> bool {
    let n = model.bound().get();
    let s = model.state(index);
    s.aoi < n && s.belief.steps < n
}

pub fn interior_delayed(model: &DelayedModel, index: usize) -> bool {
    model.state(index).aoi < model.bound().get()
}

/// `V(Δ', k, ω) ≥ V(Δ, k, ω)` for consecutive `Δ < Δ'` at the same `k` and
/// the same symbolic belief.
pub fn monotone_in_aoi_no_sensing(model: &NoSensingModel, values: &[f64]) -> CheckOutcome {
    let mut out = CheckOutcome::new("monotone_in_aoi");
    let k = model.frame().len();
    for (i, s) in model.states().iter().enumerate() {
        if !interior_no_sensing(model, i) {
            continue;
        }
        let mut up = *s;
        up.aoi += k;
        let Some(j) = model.index_of(&up) else {
            continue;
        };
        if !interior_no_sensing(model, j) {
            continue;
        }
        out.record(values[j] >= values[i] - slack(values[i], values[j]), || {
            format!("V{} = {} > V{} = {}", s, values[i], up, values[j])
        });
    }
    out
}

/// `V(Δ, k, ·)` non-increasing in the belief.
pub fn monotone_in_belief(model: &NoSensingModel, values: &[f64]) -> CheckOutcome {
    let mut out = CheckOutcome::new("monotone_in_belief");
    for group in model.groups() {
        let inner: Vec<usize> = group
            .states
            .iter()
            .copied()
            .filter(|&i| interior_no_sensing(model, i))
            .collect();
        for w in inner.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            out.record(
                values[hi] <= values[lo] + slack(values[lo], values[hi]),
                || {
                    format!(
                        "V{} = {} < V{} = {}",
                        model.state(lo),
                        values[lo],
                        model.state(hi),
                        values[hi]
                    )
                },
            );
        }
    }
    out
}

/// `(1 − ω)λ + ωV(x) + (1 − ω)V(y) ≥ V(z)` for every in-space triple
/// `y < z < x` at the same `(Δ, k)`, with `z = ωx + (1 − ω)y`.
pub fn mixing_inequality(model: &NoSensingModel, values: &[f64], lambda: f64) -> CheckOutcome {
    let mut out = CheckOutcome::new("mixing_inequality");
    for group in model.groups() {
        let inner: Vec<usize> = group
            .states
            .iter()
            .copied()
            .filter(|&i| interior_no_sensing(model, i))
            .collect();
        let w = |i: usize| model.state(i).belief.value;
        for (a, &y) in inner.iter().enumerate() {
            for (b, &z) in inner.iter().enumerate().skip(a + 1) {
                for &x in inner.iter().skip(b + 1) {
                    let omega = (w(z) - w(y)) / (w(x) - w(y));
                    let lhs =
                        (1.0 - omega) * lambda + omega * values[x] + (1.0 - omega) * values[y];
                    out.record(lhs >= values[z] - slack(lhs, values[z]), || {
                        format!(
                            "at {}: mixture of {} and {} gives {} < {}",
                            model.state(z),
                            model.state(x),
                            model.state(y),
                            lhs,
                            values[z]
                        )
                    });
                }
            }
        }
    }
    out
}

/// At most one suspend→transmit switch along increasing belief in each
/// `(Δ, k)` group with `K ≤ Δ < N`, and no transmission when `Δ < K`.
/// The cap group is skipped: lifting beliefs there can make the optimal
/// action non-monotone in `ω`.
pub fn belief_threshold_shape(
    model: &NoSensingModel,
    actions: &[Action],
    interior_only: bool,
) -> CheckOutcome {
    let mut out = CheckOutcome::new("threshold_in_belief");
    let k = model.frame().len();
    let cap = model.bound().get();
    for group in model.groups().iter().filter(|g| g.aoi < cap) {
        let members: Vec<usize> = group
            .states
            .iter()
            .copied()
            .filter(|&i| !interior_only || interior_no_sensing(model, i))
            .collect();
        if group.aoi < k {
            for &i in &members {
                out.record(actions[i] == Action::Suspend, || {
                    format!("transmits at {} although Δ < K", model.state(i))
                });
            }
            continue;
        }
        let mut seen_transmit = None;
        for &i in &members {
            let ok = !(seen_transmit.is_some() && actions[i] == Action::Suspend);
            out.record(ok, || {
                format!(
                    "suspends at {} above a transmitting belief at {}",
                    model.state(i),
                    model.state(seen_transmit.unwrap())
                )
            });
            if actions[i] == Action::Transmit && seen_transmit.is_none() {
                seen_transmit = Some(i);
            }
        }
    }
    out
}

/// `V(Δ, k, g)` non-decreasing in `Δ` at fixed `(k, g)`.
pub fn monotone_in_aoi_delayed(model: &DelayedModel, values: &[f64]) -> CheckOutcome {
    let mut out = CheckOutcome::new("monotone_in_aoi");
    for group in model.groups() {
        let inner: Vec<usize> = group
            .states
            .iter()
            .copied()
            .filter(|&i| interior_delayed(model, i))
            .collect();
        for w in inner.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            out.record(
                values[hi] >= values[lo] - slack(values[lo], values[hi]),
                || {
                    format!(
                        "V{} = {} > V{} = {}",
                        model.state(lo),
                        values[lo],
                        model.state(hi),
                        values[hi]
                    )
                },
            );
        }
    }
    out
}

/// Threshold in `Δ` for each `(k, g)`, plus `Δ*(k, 1) ≤ Δ*(k, 0)`.
pub fn aoi_threshold_shape(
    model: &DelayedModel,
    actions: &[Action],
    interior_only: bool,
) -> CheckOutcome {
    let mut out = CheckOutcome::new("threshold_in_aoi");
    let k = model.frame().len();
    let mut thresholds = vec![[None::<u32>; 2]; k as usize + 1];
    for group in model.groups() {
        let mut seen = None::<u32>;
        for &i in &group.states {
            if interior_only && !interior_delayed(model, i) {
                continue;
            }
            let s = model.state(i);
            if s.aoi < k {
                out.record(actions[i] == Action::Suspend, || {
                    format!("transmits at {s} although Δ < K")
                });
                continue;
            }
            out.record(!(seen.is_some() && actions[i] == Action::Suspend), || {
                format!("suspends at {s} above threshold {}", seen.unwrap())
            });
            if actions[i] == Action::Transmit && seen.is_none() {
                seen = Some(s.aoi);
            }
        }
        thresholds[group.slot as usize][usize::from(group.last_good)] = seen;
    }
    for slot in 1..=k {
        let [bad, good] = thresholds[slot as usize];
        let key = |t: Option<u32>| t.map_or(u64::MAX, u64::from);
        out.record(key(good) <= key(bad), || {
            format!("k={slot}: Δ*(k,1) = {good:?} exceeds Δ*(k,0) = {bad:?}")
        });
    }
    out
}

/// Discounted-cost value function and the checks it must pass.
pub struct StructureSuite {
    pub values: Vec<f64>,
    pub sweeps: usize,
    pub checks: Vec<CheckOutcome>,
}

impl StructureSuite {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckOutcome::passed)
    }
}

/// Stopping rule for the discounted iteration: sup-norm change below
/// `(1 − β)·1e−8`.
fn discounted_tolerance(beta: f64) -> f64 {
    (1.0 - beta) * 1e-8
}

pub fn structure_suite_no_sensing(
    model: &NoSensingModel,
    lambda: f64,
    beta: f64,
) -> Result<StructureSuite, SolverError> {
    let (values, sweeps) = discounted_vi_until(
        model.mdp(),
        lambda,
        beta,
        discounted_tolerance(beta),
        1_000_000,
    )?;
    let actions = discounted_greedy(model.mdp(), lambda, beta, &values);
    let checks = vec![
        monotone_in_aoi_no_sensing(model, &values),
        monotone_in_belief(model, &values),
        mixing_inequality(model, &values, lambda),
        belief_threshold_shape(model, &actions, true),
    ];
    Ok(StructureSuite {
        values,
        sweeps,
        checks,
    })
}

pub fn structure_suite_delayed(
    model: &DelayedModel,
    lambda: f64,
    beta: f64,
) -> Result<StructureSuite, SolverError> {
    let (values, sweeps) = discounted_vi_until(
        model.mdp(),
        lambda,
        beta,
        discounted_tolerance(beta),
        1_000_000,
    )?;
    let actions = discounted_greedy(model.mdp(), lambda, beta, &values);
    let checks = vec![
        monotone_in_aoi_delayed(model, &values),
        aoi_threshold_shape(model, &actions, true),
    ];
    Ok(StructureSuite {
        values,
        sweeps,
        checks,
    })
}
