//! State spaces, transition kernels and stage costs for both CSI cases.
//!
//! Time is slotted and grouped into frames of `K` slots; a fresh update is
//! generated at the first slot of each frame and replaced at the next frame
//! if still undelivered. The AoI `Δ` at relative slot `k` is therefore always
//! congruent to `(k)_−` modulo `K`, except at the truncation cap `N`.

mod delayed;
mod finite;
mod no_sensing;

pub use delayed::{AoiGroup, DelayedModel, StateDelayed};
pub use finite::{FiniteMdp, StateRow, Successors, Transition};
pub use no_sensing::{BeliefGroup, BeliefTable, NoSensingModel, StateNoSensing};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{Action, ChannelError, ChannelModel, Observation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("frame length must be at least 1 slot")]
    EmptyFrame,

    #[error("truncation bound N = {n} must exceed the frame length K = {k}")]
    BoundTooSmall { n: u32, k: u32 },

    #[error("relative slot index {slot} is outside 1..={k}")]
    SlotOutOfRange { slot: u32, k: u32 },

    #[error("AoI {aoi} is not reachable at slot {slot} with K = {k}")]
    AoiNotInFrameSet { aoi: u32, slot: u32, k: u32 },

    #[error("transmission is not admissible at AoI {aoi} < K = {k}: the frame's update was already delivered")]
    InadmissibleTransmit { aoi: u32, k: u32 },

    #[error("Lagrange multiplier must be non-negative, got {0}")]
    NegativeMultiplier(f64),

    #[error("state {0} is not part of the enumerated space")]
    UnknownState(String),

    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Which channel-state information the scheduler has.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    /// CSI only through ACK/NACK of attempted transmissions (belief MDP).
    NoSensing,
    /// Previous-slot CSI always available.
    DelayedSensing,
}

impl Case {
    pub fn name(self) -> &'static str {
        match self {
            Case::NoSensing => "no_sensing",
            Case::DelayedSensing => "delayed_sensing",
        }
    }
}

impl std::fmt::Display for Case {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Frame of `K` slots with relative slot indices `1..=K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrameSpec {
    k: u32,
}

impl FrameSpec {
    pub fn new(k: u32) -> Result<Self, ModelError> {
        if k == 0 {
            return Err(ModelError::EmptyFrame);
        }
        Ok(Self { k })
    }

    // a frame always has at least one slot
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> u32 {
        self.k
    }

    /// `(k)_+`: slot index following `slot`, wrapping `K → 1`.
    pub fn next(&self, slot: u32) -> u32 {
        (slot % self.k) + 1
    }

    /// `(k)_−`: slot index preceding `slot`, wrapping `1 → K`.
    pub fn prev(&self, slot: u32) -> u32 {
        ((self.k + slot - 2) % self.k) + 1
    }

    pub fn check_slot(&self, slot: u32) -> Result<(), ModelError> {
        if (1..=self.k).contains(&slot) {
            Ok(())
        } else {
            Err(ModelError::SlotOutOfRange { slot, k: self.k })
        }
    }

    /// Membership in `A_k = { mK + (k)_− : m ≥ 0 }`.
    pub fn admits(&self, aoi: u32, slot: u32) -> bool {
        let base = self.prev(slot);
        aoi >= base && (aoi - base).is_multiple_of(self.k)
    }

    /// Smallest AoI possible at `slot`.
    pub fn min_aoi(&self, slot: u32) -> u32 {
        self.prev(slot)
    }

    /// Whether the scheduler may transmit: once the frame's update has been
    /// delivered (`Δ < K`) the slot must stay idle.
    pub fn transmit_allowed(&self, aoi: u32) -> bool {
        aoi >= self.k
    }
}

/// AoI recursion: reset to `k` on an ACK, otherwise grow by one.
///
/// Congruence of `aoi` with the slot is not checked here; the kernels keep
/// every enumerated state inside `A_k`.
pub fn aoi_step(
    frame: &FrameSpec,
    aoi: u32,
    slot: u32,
    action: Action,
    observation: Observation,
) -> Result<u32, ModelError> {
    frame.check_slot(slot)?;
    match (action, observation) {
        (Action::Transmit, Observation::Ack) => Ok(slot),
        (Action::Suspend, Observation::Ack) => Err(ChannelError::InvalidObservation.into()),
        _ => Ok(aoi + 1),
    }
}

/// Cap `N` on AoI and on the number of unobserved belief steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TruncationBound {
    n: u32,
}

impl TruncationBound {
    pub fn new(n: u32, frame: &FrameSpec) -> Result<Self, ModelError> {
        if n <= frame.len() {
            return Err(ModelError::BoundTooSmall { n, k: frame.len() });
        }
        Ok(Self { n })
    }

    pub fn get(&self) -> u32 {
        self.n
    }

    /// `φ(x) = min{x, N}`.
    pub fn clamp_aoi(&self, aoi: u32) -> u32 {
        aoi.min(self.n)
    }
}

/// Per-slot Lagrangian cost `C(s, u; λ) = Δ + λ·u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagrangianCost {
    lambda: f64,
}

impl LagrangianCost {
    pub fn new(lambda: f64) -> Result<Self, ModelError> {
        if lambda.is_nan() || lambda < 0.0 {
            return Err(ModelError::NegativeMultiplier(lambda));
        }
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    #[inline]
    pub fn cost(&self, aoi: u32, action: Action) -> f64 {
        stage_cost(aoi, action, self.lambda)
    }
}

#[inline]
pub fn stage_cost(aoi: u32, action: Action, lambda: f64) -> f64 {
    match action {
        Action::Suspend => aoi as f64,
        Action::Transmit => aoi as f64 + lambda,
    }
}

/// Common surface of the two compiled models.
pub trait ScheduleModel: Send + Sync {
    fn case(&self) -> Case;
    fn frame(&self) -> FrameSpec;
    fn channel(&self) -> &ChannelModel;
    fn bound(&self) -> TruncationBound;
    fn mdp(&self) -> &FiniteMdp;
    /// Human-readable label of state `index`, used in error reports.
    fn describe(&self, index: usize) -> String;
}
