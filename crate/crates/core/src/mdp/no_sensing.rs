//! Truncated belief MDP for the case without channel sensing.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use smallvec::SmallVec;

use super::{Case, TruncationBound};
use super::{FiniteMdp, FrameSpec, ModelError, ScheduleModel, StateRow, Successors, Transition};
use crate::channel::{Action, Belief, ChannelModel, Origin};

fn origin_index(origin: Origin) -> usize {
    match origin {
        Origin::FromBad => 0,
        Origin::FromGood => 1,
    }
}

/// All symbolic beliefs `T^m(p01)`, `T^m(p11)` with `m ≤ N`, plus the
/// canonical representative each one collapses to.
///
/// Two symbolic beliefs whose values differ by less than
/// [`BeliefTable::DEDUP_TOLERANCE`] share one representative, the one with
/// the smaller `m` (ties prefer `p11`).
#[derive(Debug, Clone)]
pub struct BeliefTable {
    channel: ChannelModel,
    n: u32,
    values: [Vec<f64>; 2],
    canonical: [Vec<Belief>; 2],
    distinct: Vec<Belief>,
}

impl BeliefTable {
    pub const DEDUP_TOLERANCE: f64 = 1e-12;

    pub fn new(channel: ChannelModel, bound: TruncationBound) -> Self {
        let n = bound.get();
        let mut values = [
            Vec::with_capacity(n as usize + 1),
            Vec::with_capacity(n as usize + 1),
        ];
        for origin in [Origin::FromBad, Origin::FromGood] {
            let column = &mut values[origin_index(origin)];
            let mut v = origin.start(&channel);
            for _ in 0..=n {
                column.push(v);
                v = channel.step(v);
            }
        }

        let mut reps: Vec<Belief> = Vec::new();
        let mut canonical = [
            Vec::with_capacity(n as usize + 1),
            Vec::with_capacity(n as usize + 1),
        ];
        for m in 0..=n {
            for origin in [Origin::FromGood, Origin::FromBad] {
                let value = values[origin_index(origin)][m as usize];
                let rep = match reps
                    .iter()
                    .find(|r| (r.value - value).abs() < Self::DEDUP_TOLERANCE)
                {
                    Some(r) => *r,
                    None => {
                        let b = Belief {
                            origin,
                            steps: m,
                            value,
                        };
                        reps.push(b);
                        b
                    }
                };
                canonical[origin_index(origin)].push(rep);
            }
        }
        reps.sort_by(|a, b| a.value.total_cmp(&b.value));
        Self {
            channel,
            n,
            values,
            canonical,
            distinct: reps,
        }
    }

    pub fn channel(&self) -> &ChannelModel {
        &self.channel
    }

    /// `T^m(origin)` for `m ≤ N`.
    pub fn value(&self, origin: Origin, steps: u32) -> f64 {
        self.values[origin_index(origin)][steps as usize]
    }

    /// `T^N(p01)`, the top of the lower belief band.
    pub fn lower_cap(&self) -> f64 {
        self.value(Origin::FromBad, self.n)
    }

    /// `T^N(p11)`, the bottom of the upper belief band.
    pub fn upper_cap(&self) -> f64 {
        self.value(Origin::FromGood, self.n)
    }

    /// Representative of `T^steps(origin)` in the truncated space. Step
    /// counts beyond `N` follow the clamped dynamics.
    pub fn canonical(&self, origin: Origin, steps: u32) -> Belief {
        if steps <= self.n {
            return self.canonical[origin_index(origin)][steps as usize];
        }
        let mut b = self.canonical[origin_index(origin)][self.n as usize];
        for _ in self.n..steps {
            let next = self.suspend(b);
            if next == b {
                break;
            }
            b = next;
        }
        b
    }

    /// Representative of `ψ(T(ω))`: the belief after one unobserved slot,
    /// with values falling in the gap `(T^N(p01), T^N(p11))` lifted to
    /// `T^N(p11)`.
    pub fn suspend(&self, belief: Belief) -> Belief {
        if belief.steps < self.n {
            return self.canonical(belief.origin, belief.steps + 1);
        }
        let y = self.channel.step(belief.value);
        if self.lower_cap() < y && y < self.upper_cap() {
            self.canonical(Origin::FromGood, self.n)
        } else {
            self.nearest(y)
        }
    }

    /// Distinct representatives sorted by increasing value.
    pub fn distinct(&self) -> &[Belief] {
        &self.distinct
    }

    pub fn nearest(&self, value: f64) -> Belief {
        let idx = self.distinct.partition_point(|b| b.value < value);
        let mut best = None::<Belief>;
        for i in idx.saturating_sub(1)..(idx + 1).min(self.distinct.len()) {
            let cand = self.distinct[i];
            if best.is_none_or(|b| (cand.value - value).abs() < (b.value - value).abs()) {
                best = Some(cand);
            }
        }
        best.expect("belief table is never empty")
    }
}

/// System state `(Δ, k, ω)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StateNoSensing {
    pub aoi: u32,
    pub slot: u32,
    pub belief: Belief,
}

impl StateNoSensing {
    fn key(&self) -> (u32, u32, Origin, u32) {
        (self.slot, self.aoi, self.belief.origin, self.belief.steps)
    }
}

impl PartialOrd for StateNoSensing {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for StateNoSensing {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl fmt::Display for StateNoSensing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(Δ={}, k={}, ω={})", self.aoi, self.slot, self.belief)
    }
}

/// States sharing `(Δ, k)`, sorted by increasing belief value.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefGroup {
    pub aoi: u32,
    pub slot: u32,
    pub states: Vec<usize>,
}

/// Enumerated truncated belief MDP: every state reachable from the
/// reference state `(K, 1, p11)` under some sequence of admissible actions.
#[derive(Debug, Clone)]
pub struct NoSensingModel {
    frame: FrameSpec,
    bound: TruncationBound,
    beliefs: BeliefTable,
    states: Vec<StateNoSensing>,
    index: HashMap<StateNoSensing, usize>,
    groups: Vec<BeliefGroup>,
    mdp: FiniteMdp,
}

impl NoSensingModel {
    pub fn build(
        frame: FrameSpec,
        channel: ChannelModel,
        bound: TruncationBound,
    ) -> Result<Self, ModelError> {
        if bound.get() <= frame.len() {
            return Err(ModelError::BoundTooSmall {
                n: bound.get(),
                k: frame.len(),
            });
        }
        let beliefs = BeliefTable::new(channel, bound);
        let reference = StateNoSensing {
            aoi: frame.len(),
            slot: 1,
            belief: beliefs.canonical(Origin::FromGood, 0),
        };

        let mut seen: HashSet<StateNoSensing> = HashSet::from([reference]);
        let mut queue = VecDeque::from([reference]);
        while let Some(s) = queue.pop_front() {
            for action in [Action::Suspend, Action::Transmit] {
                if action == Action::Transmit && !frame.transmit_allowed(s.aoi) {
                    continue;
                }
                for (next, _) in successors(&frame, &bound, &beliefs, &s, action) {
                    if seen.insert(next) {
                        queue.push_back(next);
                    }
                }
            }
        }

        let mut states: Vec<StateNoSensing> = seen.into_iter().collect();
        states.sort();
        let index: HashMap<StateNoSensing, usize> =
            states.iter().enumerate().map(|(i, s)| (*s, i)).collect();

        let rows = states
            .iter()
            .map(|s| {
                let compile = |action| -> Successors {
                    successors(&frame, &bound, &beliefs, s, action)
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
        let mdp = FiniteMdp::new(rows, index[&reference]);

        let mut groups: Vec<BeliefGroup> = Vec::new();
        for (i, s) in states.iter().enumerate() {
            match groups.last_mut() {
                Some(g) if g.aoi == s.aoi && g.slot == s.slot => g.states.push(i),
                _ => groups.push(BeliefGroup {
                    aoi: s.aoi,
                    slot: s.slot,
                    states: vec![i],
                }),
            }
        }
        for g in &mut groups {
            g.states
                .sort_by(|&a, &b| states[a].belief.value.total_cmp(&states[b].belief.value));
        }

        Ok(Self {
            frame,
            bound,
            beliefs,
            states,
            index,
            groups,
            mdp,
        })
    }

    pub fn beliefs(&self) -> &BeliefTable {
        &self.beliefs
    }

    pub fn states(&self) -> &[StateNoSensing] {
        &self.states
    }

    pub fn state(&self, index: usize) -> &StateNoSensing {
        &self.states[index]
    }

    pub fn index_of(&self, state: &StateNoSensing) -> Option<usize> {
        self.index.get(state).copied()
    }

    /// `(Δ, k)` groups in state order, each sorted by increasing belief.
    pub fn groups(&self) -> &[BeliefGroup] {
        &self.groups
    }

    pub fn reference_state(&self) -> StateNoSensing {
        self.states[self.mdp.reference()]
    }

    /// Successor distribution of `state` under `action`, after AoI and
    /// belief clamping.
    pub fn kernel(
        &self,
        state: &StateNoSensing,
        action: Action,
    ) -> Result<Vec<(StateNoSensing, f64)>, ModelError> {
        self.frame.check_slot(state.slot)?;
        let n = self.bound.get();
        if state.aoi > n || !(self.frame.admits(state.aoi, state.slot) || state.aoi == n) {
            return Err(ModelError::AoiNotInFrameSet {
                aoi: state.aoi,
                slot: state.slot,
                k: self.frame.len(),
            });
        }
        if action == Action::Transmit && !self.frame.transmit_allowed(state.aoi) {
            return Err(ModelError::InadmissibleTransmit {
                aoi: state.aoi,
                k: self.frame.len(),
            });
        }
        let canonical = StateNoSensing {
            belief: self
                .beliefs
                .canonical(state.belief.origin, state.belief.steps),
            ..*state
        };
        Ok(successors(&self.frame, &self.bound, &self.beliefs, &canonical, action).into_vec())
    }

    /// Index of the truncated state matching an unclamped trajectory state.
    pub fn locate(&self, aoi: u64, slot: u32, origin: Origin, steps: u64) -> Option<usize> {
        let n = self.bound.get();
        let aoi = aoi.min(n as u64) as u32;
        let steps = steps.min(u32::MAX as u64) as u32;
        let belief = self.beliefs.canonical(origin, steps);
        self.index_of(&StateNoSensing { aoi, slot, belief })
    }

    /// Start state for simulations: `(K, 1, ω)` with `ω` the enumerated
    /// belief closest to the stationary good-state probability.
    pub fn initial_state(&self) -> usize {
        let target = self
            .beliefs
            .channel()
            .stationary_good_probability()
            .expect("degenerate channels are rejected at construction");
        let group = self
            .groups
            .iter()
            .find(|g| g.aoi == self.frame.len() && g.slot == 1)
            .expect("reference group is always enumerated");
        *group
            .states
            .iter()
            .min_by(|&&a, &&b| {
                let da = (self.states[a].belief.value - target).abs();
                let db = (self.states[b].belief.value - target).abs();
                da.total_cmp(&db)
            })
            .expect("non-empty group")
    }
}

fn successors(
    frame: &FrameSpec,
    bound: &TruncationBound,
    beliefs: &BeliefTable,
    s: &StateNoSensing,
    action: Action,
) -> SmallVec<[(StateNoSensing, f64); 2]> {
    let next_slot = frame.next(s.slot);
    let grown = bound.clamp_aoi(s.aoi + 1);
    let mut out = SmallVec::new();
    match action {
        Action::Suspend => {
            let belief = beliefs.suspend(s.belief);
            out.push((
                StateNoSensing {
                    aoi: grown,
                    slot: next_slot,
                    belief,
                },
                1.0,
            ));
        }
        Action::Transmit => {
            let w = s.belief.value;
            if w > 0.0 {
                let belief = beliefs.canonical(Origin::FromGood, 0);
                out.push((
                    StateNoSensing {
                        aoi: s.slot,
                        slot: next_slot,
                        belief,
                    },
                    w,
                ));
            }
            if w < 1.0 {
                let belief = beliefs.canonical(Origin::FromBad, 0);
                out.push((
                    StateNoSensing {
                        aoi: grown,
                        slot: next_slot,
                        belief,
                    },
                    1.0 - w,
                ));
            }
        }
    }
    out
}

impl ScheduleModel for NoSensingModel {
    fn case(&self) -> Case {
        Case::NoSensing
    }

    fn frame(&self) -> FrameSpec {
        self.frame
    }

    fn channel(&self) -> &ChannelModel {
        self.beliefs.channel()
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

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn model(k: u32, n: u32, p11: f64, p01: f64) -> NoSensingModel {
        let frame = FrameSpec::new(k).unwrap();
        NoSensingModel::build(
            frame,
            ChannelModel::new(p11, p01).unwrap(),
            TruncationBound::new(n, &frame).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn transmit_splits_on_belief() {
        // p11 = 0.6 makes T^0(p11) = 0.6
        let m = model(4, 10, 0.6, 0.3);
        let b = m.beliefs().canonical(Origin::FromGood, 0);
        assert_abs_diff_eq!(b.value, 0.6, epsilon = 1e-15);
        let s = StateNoSensing {
            aoi: 3,
            slot: 4,
            belief: b,
        };
        let out = m.kernel(&s, Action::Transmit);
        // Δ = 3 < K = 4: the frame's update is already out
        assert!(matches!(out, Err(ModelError::InadmissibleTransmit { .. })));

        let s = StateNoSensing {
            aoi: 7,
            slot: 4,
            belief: b,
        };
        let out = m.kernel(&s, Action::Transmit).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(
            (out[0].0.aoi, out[0].0.slot, out[0].0.belief.key()),
            (4, 1, (Origin::FromGood, 0))
        );
        assert_abs_diff_eq!(out[0].1, 0.6, epsilon = 1e-15);
        assert_eq!(
            (out[1].0.aoi, out[1].0.slot, out[1].0.belief.key()),
            (8, 1, (Origin::FromBad, 0))
        );
        assert_abs_diff_eq!(out[1].1, 0.4, epsilon = 1e-15);
    }

    #[test]
    fn aoi_and_belief_clamp_at_the_cap() {
        let m = model(4, 5, 0.7, 0.3);
        let t = m.beliefs();
        let low = t.canonical(Origin::FromBad, 5);
        assert_eq!(low.key(), (Origin::FromBad, 5));
        let s = StateNoSensing {
            aoi: 5,
            slot: 2,
            belief: low,
        };
        let out = m.kernel(&s, Action::Suspend).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].0.aoi, 5);
        assert_eq!(out[0].0.slot, 3);
        assert_eq!(out[0].0.belief.key(), (Origin::FromGood, 5));
        assert_abs_diff_eq!(out[0].0.belief.value, t.upper_cap(), epsilon = 0.0);
        // the upper end of the gap is a fixed point
        let up = out[0].0;
        let again = m.kernel(&up, Action::Suspend).unwrap();
        assert_eq!(again[0].0.belief.key(), (Origin::FromGood, 5));
    }

    #[test]
    fn reference_state_present() {
        for (k, n, p11, p01) in [
            (1, 2, 0.7, 0.3),
            (3, 7, 0.9, 0.2),
            (2, 3, 0.5, 0.5),
            (4, 9, 1.0, 0.4),
        ] {
            let m = model(k, n, p11, p01);
            let r = m.reference_state();
            assert_eq!((r.aoi, r.slot), (k, 1));
            assert_abs_diff_eq!(r.belief.value, p11, epsilon = 1e-15);
        }
    }

    #[test]
    fn zero_memory_collapses_beliefs() {
        let m = model(3, 12, 0.4, 0.4);
        let distinct: HashSet<_> = m.states().iter().map(|s| s.belief.key()).collect();
        assert!(distinct.len() <= 3);
        assert_eq!(m.beliefs().distinct().len(), 1);
    }

    #[test]
    fn rows_are_stochastic_and_groups_sorted() {
        let m = model(3, 20, 0.8, 0.1);
        assert!(m.mdp().max_row_defect() < 1e-12);
        for g in m.groups() {
            for w in g.states.windows(2) {
                assert!(m.state(w[0]).belief.value < m.state(w[1]).belief.value);
            }
        }
        for w in m.states().windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn locate_clamps_unbounded_trajectory_states() {
        let m = model(2, 6, 0.8, 0.2);
        let at_cap = m.locate(40, 1, Origin::FromBad, 30).unwrap();
        let s = m.state(at_cap);
        assert_eq!(s.aoi, 6);
        assert_eq!(s.belief.key(), (Origin::FromGood, 6));
        assert!(
            m.locate(2, 1, Origin::FromBad, 0).is_none(),
            "Bad belief right after a delivery is unreachable"
        );
    }
}
