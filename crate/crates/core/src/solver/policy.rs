use std::collections::BTreeMap;

use serde::Serialize;

use crate::channel::Action;
use crate::mdp::{DelayedModel, NoSensingModel, ScheduleModel};

use super::SolverError;

/// Per-`(Δ, k)` belief thresholds `ω*(Δ, k; λ)`. `None` means never transmit.
///
/// At the AoI cap the belief lift can make the optimal action non-monotone
/// in `ω`; such groups are kept verbatim in `cap_exceptions` as
/// `(belief, action)` pairs in increasing belief.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdPolicyBelief {
    pub frame_len: u32,
    pub thresholds: BTreeMap<(u32, u32), Option<f64>>,
    pub cap_exceptions: BTreeMap<(u32, u32), Vec<(f64, Action)>>,
}

impl ThresholdPolicyBelief {
    /// Reads thresholds off a per-state action vector, failing if some
    /// `(Δ, k)` below the cap has a transmit state below a suspend state.
    pub fn from_actions(model: &NoSensingModel, actions: &[Action]) -> Result<Self, SolverError> {
        check_len(model.mdp().len(), actions)?;
        let k = model.frame().len();
        let cap = model.bound().get();
        let mut thresholds = BTreeMap::new();
        let mut cap_exceptions = BTreeMap::new();
        for group in model.groups().iter().filter(|g| g.aoi >= k) {
            let mut threshold = None;
            let mut broken = None;
            for &i in &group.states {
                match (actions[i], threshold) {
                    (Action::Transmit, None) => threshold = Some(model.state(i).belief.value),
                    (Action::Suspend, Some(_)) if broken.is_none() => broken = Some(i),
                    _ => {}
                }
            }
            match broken {
                None => {
                    thresholds.insert((group.aoi, group.slot), threshold);
                }
                Some(_) if group.aoi == cap => {
                    let listed = group
                        .states
                        .iter()
                        .map(|&i| (model.state(i).belief.value, actions[i]))
                        .collect();
                    cap_exceptions.insert((group.aoi, group.slot), listed);
                }
                Some(i) => return Err(SolverError::NotThreshold(model.describe(i))),
            }
        }
        Ok(Self {
            frame_len: k,
            thresholds,
            cap_exceptions,
        })
    }

    pub fn threshold(&self, aoi: u32, slot: u32) -> Option<f64> {
        self.thresholds.get(&(aoi, slot)).copied().flatten()
    }

    pub fn is_single_switch(&self) -> bool {
        self.cap_exceptions.is_empty()
    }

    pub fn action(&self, aoi: u32, slot: u32, belief: f64) -> Action {
        if aoi < self.frame_len {
            return Action::Suspend;
        }
        if let Some(listed) = self.cap_exceptions.get(&(aoi, slot)) {
            // nearest listed belief
            return listed
                .iter()
                .min_by(|a, b| (a.0 - belief).abs().total_cmp(&(b.0 - belief).abs()))
                .map_or(Action::Suspend, |&(_, a)| a);
        }
        match self.threshold(aoi, slot) {
            Some(t) if belief >= t => Action::Transmit,
            _ => Action::Suspend,
        }
    }
}

/// Per-`(k, g)` AoI thresholds `Δ*(k, g; λ)`. `None` means never transmit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdPolicyAoI {
    pub frame_len: u32,
    pub thresholds: BTreeMap<(u32, bool), Option<u32>>,
}

impl ThresholdPolicyAoI {
    pub fn from_actions(model: &DelayedModel, actions: &[Action]) -> Result<Self, SolverError> {
        check_len(model.mdp().len(), actions)?;
        let k = model.frame().len();
        let mut thresholds = BTreeMap::new();
        for group in model.groups() {
            let mut threshold = None;
            for &i in &group.states {
                let aoi = model.state(i).aoi;
                if aoi < k {
                    continue;
                }
                match (actions[i], threshold) {
                    (Action::Transmit, None) => threshold = Some(aoi),
                    (Action::Suspend, Some(_)) => {
                        return Err(SolverError::NotThreshold(model.describe(i)));
                    }
                    _ => {}
                }
            }
            thresholds.insert((group.slot, group.last_good), threshold);
        }
        Ok(Self {
            frame_len: k,
            thresholds,
        })
    }

    pub fn threshold(&self, slot: u32, last_good: bool) -> Option<u32> {
        self.thresholds.get(&(slot, last_good)).copied().flatten()
    }

    pub fn action(&self, aoi: u32, slot: u32, last_good: bool) -> Action {
        if aoi < self.frame_len {
            return Action::Suspend;
        }
        match self.threshold(slot, last_good) {
            Some(t) if aoi >= t => Action::Transmit,
            _ => Action::Suspend,
        }
    }

    /// Slots where `Δ*(k, 1) > Δ*(k, 0)`, with `None` read as +∞.
    pub fn ordering_violations(&self) -> Vec<u32> {
        let key = |t: Option<u32>| t.map_or(u64::MAX, u64::from);
        (1..=self.frame_len)
            .filter(|&k| key(self.threshold(k, true)) > key(self.threshold(k, false)))
            .collect()
    }
}

fn check_len(expected: usize, actions: &[Action]) -> Result<(), SolverError> {
    if actions.len() != expected {
        return Err(SolverError::InvalidPolicy(format!(
            "{} actions for {} states",
            actions.len(),
            expected
        )));
    }
    Ok(())
}
