//! Gilbert-Elliott channel model and belief algebra.
//!
//! The channel is a two-state Markov chain where state 1 ("good") lets a
//! transmission through and state 0 ("bad") drops it. Without sensing, the
//! scheduler only tracks the belief `ω = P(h_t = 1 | history)`, which after
//! any transmission restarts at `p01` or `p11` and then drifts by the one-step
//! map `T(ω) = ω·p11 + (1 − ω)·p01` while the channel is unobserved.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("transition probability {name} = {value} is outside [0, 1]")]
    ProbabilityOutOfRange { name: &'static str, value: f64 },

    #[error("channel must be positively correlated: p11 = {p11} < p01 = {p01}")]
    NegativeMemory { p11: f64, p01: f64 },

    #[error("p11 = 1 and p01 = 0 give two absorbing states; the chain is not unichain")]
    Degenerate,

    #[error("belief {0} is outside [0, 1]")]
    BeliefOutOfRange(f64),

    #[error("suspension cannot produce an ACK: (u, θ) = (0, 1) is unreachable")]
    InvalidObservation,
}

/// Scheduler decision for one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    Suspend,
    Transmit,
}

impl Action {
    pub fn from_bit(bit: u8) -> Self {
        if bit == 0 {
            Action::Suspend
        } else {
            Action::Transmit
        }
    }

    /// Energy spent by the action, also the `u ∈ {0, 1}` indicator.
    pub fn bit(self) -> u8 {
        match self {
            Action::Suspend => 0,
            Action::Transmit => 1,
        }
    }

    pub fn is_transmit(self) -> bool {
        self == Action::Transmit
    }
}

/// Feedback at the end of a slot. `Ack` only follows a transmission over a
/// good channel; everything else (NACK or no transmission) is `Silent`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Observation {
    Silent,
    Ack,
}

impl Observation {
    pub fn from_bit(bit: u8) -> Self {
        if bit == 0 {
            Observation::Silent
        } else {
            Observation::Ack
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Observation::Silent => 0,
            Observation::Ack => 1,
        }
    }
}

/// Two-state Markov channel with `P(good | good) = p11` and
/// `P(good | bad) = p01`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    p11: f64,
    p01: f64,
}

impl ChannelModel {
    pub fn new(p11: f64, p01: f64) -> Result<Self, ChannelError> {
        for (name, value) in [("p11", p11), ("p01", p01)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ChannelError::ProbabilityOutOfRange { name, value });
            }
        }
        if p11 < p01 {
            return Err(ChannelError::NegativeMemory { p11, p01 });
        }
        if p11 == 1.0 && p01 == 0.0 {
            return Err(ChannelError::Degenerate);
        }
        Ok(Self { p11, p01 })
    }

    pub fn p11(&self) -> f64 {
        self.p11
    }

    pub fn p01(&self) -> f64 {
        self.p01
    }

    /// Channel memory `μ = p11 − p01`.
    pub fn memory(&self) -> f64 {
        self.p11 - self.p01
    }

    /// Probability that the next slot is good given the current state.
    pub fn good_given(&self, good_now: bool) -> f64 {
        if good_now {
            self.p11
        } else {
            self.p01
        }
    }

    pub fn one_step_update(&self, belief: f64) -> Result<f64, ChannelError> {
        check_belief(belief)?;
        Ok(self.step(belief))
    }

    #[inline]
    pub(crate) fn step(&self, belief: f64) -> f64 {
        belief * self.p11 + (1.0 - belief) * self.p01
    }

    /// `T^m(ω)`, the belief after `m` unobserved slots.
    pub fn m_step_update(&self, belief: f64, steps: u32) -> Result<f64, ChannelError> {
        check_belief(belief)?;
        let mut value = belief;
        for _ in 0..steps {
            value = self.step(value);
        }
        Ok(value)
    }

    /// Belief map after observing the outcome of a slot.
    pub fn observed_update(
        &self,
        belief: f64,
        action: Action,
        observation: Observation,
    ) -> Result<f64, ChannelError> {
        check_belief(belief)?;
        match (action, observation) {
            (Action::Transmit, Observation::Ack) => Ok(self.p11),
            (Action::Transmit, Observation::Silent) => Ok(self.p01),
            (Action::Suspend, Observation::Silent) => Ok(self.step(belief)),
            (Action::Suspend, Observation::Ack) => Err(ChannelError::InvalidObservation),
        }
    }

    /// Long-run fraction of good slots, `p01 / (1 − p11 + p01)`.
    pub fn stationary_good_probability(&self) -> Result<f64, ChannelError> {
        let denom = 1.0 - self.p11 + self.p01;
        if denom <= 0.0 {
            return Err(ChannelError::Degenerate);
        }
        Ok(self.p01 / denom)
    }

    pub fn belief(&self, origin: Origin, steps: u32) -> Belief {
        Belief::new(self, origin, steps)
    }
}

fn check_belief(belief: f64) -> Result<(), ChannelError> {
    if (0.0..=1.0).contains(&belief) {
        Ok(())
    } else {
        Err(ChannelError::BeliefOutOfRange(belief))
    }
}

/// Where a belief trajectory restarted: after a NACK (`p01`) or an ACK (`p11`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Origin {
    FromBad,
    FromGood,
}

impl Origin {
    pub fn start(self, channel: &ChannelModel) -> f64 {
        match self {
            Origin::FromBad => channel.p01,
            Origin::FromGood => channel.p11,
        }
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::FromBad => f.write_str("p01"),
            Origin::FromGood => f.write_str("p11"),
        }
    }
}

/// Symbolic belief `T^m(origin)` with its numeric value cached.
///
/// Identity, ordering and hashing use `(origin, steps)` only, so beliefs can
/// key state tables without floating-point comparisons.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Belief {
    pub origin: Origin,
    pub steps: u32,
    pub value: f64,
}

impl Belief {
    pub fn new(channel: &ChannelModel, origin: Origin, steps: u32) -> Self {
        let mut value = origin.start(channel);
        for _ in 0..steps {
            value = channel.step(value);
        }
        Self {
            origin,
            steps,
            value,
        }
    }

    /// The belief one unobserved slot later, computed incrementally.
    pub fn advance(&self, channel: &ChannelModel) -> Self {
        Self {
            origin: self.origin,
            steps: self.steps + 1,
            value: channel.step(self.value),
        }
    }

    pub fn key(&self) -> (Origin, u32) {
        (self.origin, self.steps)
    }
}

impl PartialEq for Belief {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Belief {}

impl Hash for Belief {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state);
    }
}

impl PartialOrd for Belief {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Belief {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl fmt::Display for Belief {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T^{}({})={:.6}", self.steps, self.origin, self.value)
    }
}
