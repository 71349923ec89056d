//! MDP for the delayed-sensing case, where the previous slot's channel state
//! is known at every decision.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use smallvec::SmallVec;

use super::TruncationBound;
use super::{Case, FiniteMdp, FrameSpec, ModelError, ScheduleModel, StateRow, Transition};
use crate::channel::{Action, ChannelModel};

/// System state `(Δ, k, g)` with `g` the channel state of the last slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StateDelayed {
    pub aoi: u32,
    pub slot: u32,
    pub last_good: bool,
}

impl StateDelayed {
    fn key(&self) -> (u32, u32, bool) {
        (self.slot, self.aoi, self.last_good)
    }
}

impl PartialOrd for StateDelayed {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for StateDelayed {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl fmt::Display for StateDelayed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(Δ={}, k={}, g={})",
            self.aoi,
            self.slot,
            u8::from(self.last_good)
        )
    }
}

/// States sharing `(k, g)`, sorted by increasing AoI.
#[derive(Debug, Clone, PartialEq)]
pub struct AoiGroup {
    pub slot: u32,
    pub last_good: bool,
    pub states: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct DelayedModel {
    frame: FrameSpec,
    channel: ChannelModel,
    bound: TruncationBound,
    states: Vec<StateDelayed>,
    index: HashMap<StateDelayed, usize>,
    groups: Vec<AoiGroup>,
    mdp: FiniteMdp,
}

impl DelayedModel {
    /// Enumerates `{(Δ, k, g) : Δ ∈ A_k, Δ < N} ∪ {(N, k, g)}`.
    pub fn build(
        frame: FrameSpec,
        channel: ChannelModel,
        bound: TruncationBound,
    ) -> Result<Self, ModelError> {
        let n = bound.get();
        if n <= frame.len() {
            return Err(ModelError::BoundTooSmall { n, k: frame.len() });
        }
        let mut states = Vec::new();
        for slot in 1..=frame.len() {
            let mut aoi = frame.min_aoi(slot);
            while aoi < n {
                for last_good in [false, true] {
                    states.push(StateDelayed {
                        aoi,
                        slot,
                        last_good,
                    });
                }
                aoi += frame.len();
            }
            for last_good in [false, true] {
                states.push(StateDelayed {
                    aoi: n,
                    slot,
                    last_good,
                });
            }
        }
        states.sort();
        let index: HashMap<StateDelayed, usize> =
            states.iter().enumerate().map(|(i, s)| (*s, i)).collect();

        let rows = states
            .iter()
            .map(|s| {
                let compile = |action| {
                    successors(&frame, &channel, &bound, s, action)
                        .into_iter()
                        .map(|(next, prob)| Transition {
                            next: index[&next],
                            prob,
                        })
                        .collect()
                };
                StateRow {
                    aoi: s.aoi,
                    suspend: compile(Action::Suspend),
                    transmit: frame
                        .transmit_allowed(s.aoi)
                        .then(|| compile(Action::Transmit)),
                }
            })
            .collect();
        let reference = StateDelayed {
            aoi: frame.len(),
            slot: 1,
            last_good: true,
        };
        let mdp = FiniteMdp::new(rows, index[&reference]);

        let mut groups = Vec::new();
        for slot in 1..=frame.len() {
            for last_good in [false, true] {
                let mut members: Vec<usize> = states
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| s.slot == slot && s.last_good == last_good)
                    .map(|(i, _)| i)
                    .collect();
                members.sort_by_key(|&i| states[i].aoi);
                groups.push(AoiGroup {
                    slot,
                    last_good,
                    states: members,
                });
            }
        }

        Ok(Self {
            frame,
            channel,
            bound,
            states,
            index,
            groups,
            mdp,
        })
    }

    pub fn states(&self) -> &[StateDelayed] {
        &self.states
    }

    pub fn state(&self, index: usize) -> &StateDelayed {
        &self.states[index]
    }

    pub fn index_of(&self, state: &StateDelayed) -> Option<usize> {
        self.index.get(state).copied()
    }

    /// `(k, g)` groups; for each `k` the `g = 0` group precedes `g = 1`.
    pub fn groups(&self) -> &[AoiGroup] {
        &self.groups
    }

    pub fn kernel(
        &self,
        state: &StateDelayed,
        action: Action,
    ) -> Result<Vec<(StateDelayed, f64)>, ModelError> {
        self.frame.check_slot(state.slot)?;
        if action == Action::Transmit && !self.frame.transmit_allowed(state.aoi) {
            return Err(ModelError::InadmissibleTransmit {
                aoi: state.aoi,
                k: self.frame.len(),
            });
        }
        Ok(successors(&self.frame, &self.channel, &self.bound, state, action).into_vec())
    }

    pub fn locate(&self, aoi: u64, slot: u32, last_good: bool) -> Option<usize> {
        let aoi = aoi.min(self.bound.get() as u64) as u32;
        self.index_of(&StateDelayed {
            aoi,
            slot,
            last_good,
        })
    }

    pub fn initial_state(&self, last_good: bool) -> usize {
        self.index[&StateDelayed {
            aoi: self.frame.len(),
            slot: 1,
            last_good,
        }]
    }
}

fn successors(
    frame: &FrameSpec,
    channel: &ChannelModel,
    bound: &TruncationBound,
    s: &StateDelayed,
    action: Action,
) -> SmallVec<[(StateDelayed, f64); 2]> {
    let slot = frame.next(s.slot);
    let grown = bound.clamp_aoi(s.aoi + 1);
    let good = channel.good_given(s.last_good);
    let mut out = SmallVec::new();
    let (hit_aoi, miss_aoi) = match action {
        Action::Transmit => (s.slot, grown),
        Action::Suspend => (grown, grown),
    };
    if good > 0.0 {
        out.push((
            StateDelayed {
                aoi: hit_aoi,
                slot,
                last_good: true,
            },
            good,
        ));
    }
    if good < 1.0 {
        out.push((
            StateDelayed {
                aoi: miss_aoi,
                slot,
                last_good: false,
            },
            1.0 - good,
        ));
    }
    out
}

impl ScheduleModel for DelayedModel {
    fn case(&self) -> Case {
        Case::DelayedSensing
    }

    fn frame(&self) -> FrameSpec {
        self.frame
    }

    fn channel(&self) -> &ChannelModel {
        &self.channel
    }

    fn bound(&self) -> TruncationBound {
        self.bound
    }

    fn mdp(&self) -> &FiniteMdp {
        &self.mdp
    }

    fn describe(&self, index: usize) -> String {
        self.states[index].to_string()
    }
}
