//! Slot-level Monte-Carlo simulation of the channel, the scheduler and the
//! AoI process.
//!
//! Randomness comes from `ChaCha8Rng` seeded with the run seed: stream 0
//! drives the channel and stream 1 any policy randomization, so two
//! schedulers run with the same seed see the same channel path.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::channel::{Action, ChannelError, ChannelModel, Origin};
use crate::mdp::{DelayedModel, FrameSpec, NoSensingModel, ScheduleModel};
use crate::solver::MixturePolicy;

pub const GENERATOR: &str = "ChaCha8Rng";
const CHANNEL_STREAM: u64 = 0;
const POLICY_STREAM: u64 = 1;
const BATCHES: u64 = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("policy is undefined at trajectory state {0}")]
    UndefinedState(String),

    #[error("scheduler transmitted at slot {t} with AoI {aoi} < K")]
    Inadmissible { t: u64, aoi: u64 },

    #[error("energy budget must lie in (0, 1], got {0}")]
    InvalidEnergyBudget(f64),

    #[error(transparent)]
    Channel(#[from] ChannelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimConfig {
    pub horizon: u64,
    pub seed: u64,
    /// Slots discarded before averaging.
    pub warmup: u64,
}

impl SimConfig {
    pub const DEFAULT_HORIZON: u64 = 100_000;
    pub const DEFAULT_WARMUP: u64 = 1_000;

    pub fn new(horizon: u64, seed: u64, warmup: u64) -> Result<Self, SimError> {
        if horizon == 0 {
            return Err(SimError::InvalidConfig("horizon must be at least 1".into()));
        }
        if warmup >= horizon {
            return Err(SimError::InvalidConfig(format!(
                "warmup {warmup} must be shorter than the horizon {horizon}"
            )));
        }
        Ok(Self {
            horizon,
            seed,
            warmup,
        })
    }
}

/// What the scheduler may look at in slot `t`. `last_good` is the true
/// channel state of the previous slot, which only delayed-sensing
/// schedulers are meant to read.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotView {
    pub t: u64,
    pub aoi: u64,
    pub slot: u32,
    pub last_good: bool,
    pub origin: Origin,
    /// Slots since the belief was last reset by a transmission outcome.
    pub steps: u64,
    pub belief: f64,
}

/// One simulated slot, for tracing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlotRecord {
    pub t: u64,
    pub slot: u32,
    pub aoi: u64,
    pub good: bool,
    pub transmit: bool,
    pub ack: bool,
}

pub trait Scheduler {
    fn decide(&mut self, view: &SlotView, coin: &mut ChaCha8Rng) -> Result<Action, SimError>;
}

/// Adapter turning a closure into a [`Scheduler`].
pub struct FnScheduler<F>(pub F);

impl<F: FnMut(&SlotView) -> Action> Scheduler for FnScheduler<F> {
    fn decide(&mut self, view: &SlotView, _coin: &mut ChaCha8Rng) -> Result<Action, SimError> {
        Ok((self.0)(view))
    }
}

/// Models whose stationary policies can drive a simulation.
pub trait PolicyModel: ScheduleModel {
    /// Enumerated state matching an (unclamped) trajectory state.
    fn lookup(&self, view: &SlotView) -> Option<usize>;
    /// Symbolic belief at the start of a run.
    fn start_belief(&self) -> (Origin, u64);
}

impl PolicyModel for NoSensingModel {
    fn lookup(&self, view: &SlotView) -> Option<usize> {
        self.locate(view.aoi, view.slot, view.origin, view.steps)
    }

    fn start_belief(&self) -> (Origin, u64) {
        let b = self.state(self.initial_state()).belief;
        (b.origin, u64::from(b.steps))
    }
}

impl PolicyModel for DelayedModel {
    fn lookup(&self, view: &SlotView) -> Option<usize> {
        self.locate(view.aoi, view.slot, view.last_good)
    }

    fn start_belief(&self) -> (Origin, u64) {
        (Origin::FromGood, 0)
    }
}

/// Stationary deterministic policy given as one action per model state.
pub struct PolicyScheduler<'a, M: PolicyModel> {
    model: &'a M,
    actions: &'a [Action],
}

impl<'a, M: PolicyModel> PolicyScheduler<'a, M> {
    pub fn new(model: &'a M, actions: &'a [Action]) -> Result<Self, SimError> {
        if actions.len() != model.mdp().len() {
            return Err(SimError::InvalidConfig(format!(
                "{} actions for {} states",
                actions.len(),
                model.mdp().len()
            )));
        }
        Ok(Self { model, actions })
    }
}

impl<M: PolicyModel> Scheduler for PolicyScheduler<'_, M> {
    fn decide(&mut self, view: &SlotView, _coin: &mut ChaCha8Rng) -> Result<Action, SimError> {
        match self.model.lookup(view) {
            Some(i) => Ok(self.actions[i]),
            None => Err(SimError::UndefinedState(format!(
                "(Δ={}, k={}, origin={}, m={}, g={})",
                view.aoi,
                view.slot,
                view.origin,
                view.steps,
                u8::from(view.last_good)
            ))),
        }
    }
}

/// Transmits iff the running energy `ē_t = e_t/(t − 1)` is below budget and
/// `Δ ≥ K`; `ē_1 = 0`.
pub struct GreedyScheduler {
    e_max: f64,
    frame_len: u64,
    transmissions: u64,
}

impl GreedyScheduler {
    pub fn new(e_max: f64, frame: FrameSpec) -> Result<Self, SimError> {
        if !(e_max > 0.0 && e_max <= 1.0) {
            return Err(SimError::InvalidEnergyBudget(e_max));
        }
        Ok(Self {
            e_max,
            frame_len: u64::from(frame.len()),
            transmissions: 0,
        })
    }
}

impl Scheduler for GreedyScheduler {
    fn decide(&mut self, view: &SlotView, _coin: &mut ChaCha8Rng) -> Result<Action, SimError> {
        let running = if view.t <= 1 {
            0.0
        } else {
            self.transmissions as f64 / (view.t - 1) as f64
        };
        if running < self.e_max && view.aoi >= self.frame_len {
            self.transmissions += 1;
            Ok(Action::Transmit)
        } else {
            Ok(Action::Suspend)
        }
    }
}

/// Per-slot randomization between two deterministic policies.
pub struct PerSlotMixture<'a, M: PolicyModel> {
    minus: PolicyScheduler<'a, M>,
    plus: PolicyScheduler<'a, M>,
    q: f64,
}

impl<'a, M: PolicyModel> PerSlotMixture<'a, M> {
    pub fn new(model: &'a M, mixture: &'a MixturePolicy) -> Result<Self, SimError> {
        Ok(Self {
            minus: PolicyScheduler::new(model, &mixture.minus.actions)?,
            plus: PolicyScheduler::new(model, &mixture.plus.actions)?,
            q: mixture.q,
        })
    }
}

impl<M: PolicyModel> Scheduler for PerSlotMixture<'_, M> {
    fn decide(&mut self, view: &SlotView, coin: &mut ChaCha8Rng) -> Result<Action, SimError> {
        if coin.gen::<f64>() < self.q {
            self.minus.decide(view, coin)
        } else {
            self.plus.decide(view, coin)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetadata {
    pub seed: u64,
    pub horizon: u64,
    pub warmup: u64,
    pub generator: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub avg_aoi: f64,
    pub avg_energy: f64,
    /// Batch-means standard errors of the two averages.
    pub aoi_stderr: f64,
    pub energy_stderr: f64,
    pub aoi_histogram: BTreeMap<u64, u64>,
    pub delivered: u64,
    pub metadata: RunMetadata,
}

/// Slot-level simulator for one channel and frame length.
pub struct Simulator<'a> {
    frame: FrameSpec,
    channel: &'a ChannelModel,
    start_belief: (Origin, u64),
}

impl<'a> Simulator<'a> {
    pub fn new(frame: FrameSpec, channel: &'a ChannelModel) -> Self {
        Self {
            frame,
            channel,
            start_belief: (Origin::FromGood, 0),
        }
    }

    pub fn for_model<M: PolicyModel>(model: &'a M) -> Self {
        Self {
            frame: model.frame(),
            channel: model.channel(),
            start_belief: model.start_belief(),
        }
    }

    pub fn with_start_belief(mut self, origin: Origin, steps: u64) -> Self {
        self.start_belief = (origin, steps);
        self
    }

    pub fn run<S: Scheduler + ?Sized>(
        &self,
        scheduler: &mut S,
        cfg: &SimConfig,
    ) -> Result<SimResult, SimError> {
        self.run_traced(scheduler, cfg, |_| {})
    }

    /// As [`Simulator::run`], handing every slot to `observer`.
    pub fn run_traced<S: Scheduler + ?Sized>(
        &self,
        scheduler: &mut S,
        cfg: &SimConfig,
        mut observer: impl FnMut(&SlotRecord),
    ) -> Result<SimResult, SimError> {
        let cfg = SimConfig::new(cfg.horizon, cfg.seed, cfg.warmup)?;
        let ch = self.channel;
        let k_len = self.frame.len();
        let mut nature = ChaCha8Rng::seed_from_u64(cfg.seed);
        nature.set_stream(CHANNEL_STREAM);
        let mut coin = ChaCha8Rng::seed_from_u64(cfg.seed);
        coin.set_stream(POLICY_STREAM);

        let stationary = ch.stationary_good_probability()?;
        let mut last_good = nature.gen::<f64>() < stationary;
        let (mut origin, mut steps) = self.start_belief;
        let mut belief =
            ch.m_step_update(origin.start(ch), steps.min(u64::from(u32::MAX)) as u32)?;
        let mut aoi = u64::from(k_len);
        let mut slot = 1u32;

        let measured = cfg.horizon - cfg.warmup;
        let batch_len = (measured / BATCHES).max(1);
        let mut batch_aoi = Vec::new();
        let mut batch_energy = Vec::new();
        let (mut acc_aoi, mut acc_energy, mut in_batch) = (0.0, 0.0, 0u64);
        let (mut sum_aoi, mut sum_energy) = (0.0, 0.0);
        let mut histogram = BTreeMap::new();
        let mut delivered = 0;

        for t in 1..=cfg.horizon {
            let good = nature.gen::<f64>() < ch.good_given(last_good);
            let view = SlotView {
                t,
                aoi,
                slot,
                last_good,
                origin,
                steps,
                belief,
            };
            let action = scheduler.decide(&view, &mut coin)?;
            if action == Action::Transmit && aoi < u64::from(k_len) {
                return Err(SimError::Inadmissible { t, aoi });
            }
            let ack = action == Action::Transmit && good;
            observer(&SlotRecord {
                t,
                slot,
                aoi,
                good,
                transmit: action.is_transmit(),
                ack,
            });

            if t > cfg.warmup {
                let a = aoi as f64;
                let e = f64::from(action.bit());
                *histogram.entry(aoi).or_insert(0) += 1;
                sum_aoi += a;
                sum_energy += e;
                acc_aoi += a;
                acc_energy += e;
                in_batch += 1;
                if in_batch == batch_len {
                    batch_aoi.push(acc_aoi / batch_len as f64);
                    batch_energy.push(acc_energy / batch_len as f64);
                    (acc_aoi, acc_energy, in_batch) = (0.0, 0.0, 0);
                }
                if ack {
                    delivered += 1;
                }
            }

            match (action, ack) {
                (Action::Transmit, true) => {
                    aoi = u64::from(slot);
                    (origin, steps, belief) = (Origin::FromGood, 0, ch.p11());
                }
                (Action::Transmit, false) => {
                    aoi += 1;
                    (origin, steps, belief) = (Origin::FromBad, 0, ch.p01());
                }
                (Action::Suspend, _) => {
                    aoi += 1;
                    steps += 1;
                    belief = ch.step(belief);
                }
            }
            slot = self.frame.next(slot);
            last_good = good;
        }

        Ok(SimResult {
            avg_aoi: sum_aoi / measured as f64,
            avg_energy: sum_energy / measured as f64,
            aoi_stderr: batch_stderr(&batch_aoi),
            energy_stderr: batch_stderr(&batch_energy),
            aoi_histogram: histogram,
            delivered,
            metadata: RunMetadata {
                seed: cfg.seed,
                horizon: cfg.horizon,
                warmup: cfg.warmup,
                generator: GENERATOR,
            },
        })
    }
}

fn batch_stderr(means: &[f64]) -> f64 {
    let b = means.len();
    if b < 2 {
        return f64::NAN;
    }
    let mean = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
    (var / b as f64).sqrt()
}

/// Simulates the stationary policy `actions` of `model`.
pub fn simulate<M: PolicyModel>(
    model: &M,
    actions: &[Action],
    cfg: &SimConfig,
) -> Result<SimResult, SimError> {
    let mut policy = PolicyScheduler::new(model, actions)?;
    Simulator::for_model(model).run(&mut policy, cfg)
}

/// Simulates the greedy baseline. It never reads the belief, so the result
/// is the same for both CSI cases.
pub fn simulate_greedy(
    frame: FrameSpec,
    channel: &ChannelModel,
    e_max: f64,
    cfg: &SimConfig,
) -> Result<SimResult, SimError> {
    let mut greedy = GreedyScheduler::new(e_max, frame)?;
    Simulator::new(frame, channel).run(&mut greedy, cfg)
}

/// How a mixture is randomized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MixtureMode {
    /// Pick one component once at time 0; averages are the `q`-weighted
    /// component averages.
    #[default]
    Initial,
    /// Flip a `q`-coin in every slot.
    PerSlot,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixtureEstimate {
    pub q: f64,
    pub mode: MixtureMode,
    pub avg_aoi: f64,
    pub avg_energy: f64,
    pub aoi_stderr: f64,
    pub energy_stderr: f64,
    /// Component runs (`minus`, `plus`) or the single per-slot run.
    pub runs: Vec<SimResult>,
}

pub fn estimate_mixture<M: PolicyModel>(
    model: &M,
    mixture: &MixturePolicy,
    cfg: &SimConfig,
    mode: MixtureMode,
) -> Result<MixtureEstimate, SimError> {
    let q = mixture.q;
    match mode {
        MixtureMode::Initial => {
            let minus = simulate(model, &mixture.minus.actions, cfg)?;
            let plus = if mixture.plus.actions == mixture.minus.actions {
                minus.clone()
            } else {
                simulate(model, &mixture.plus.actions, cfg)?
            };
            let mix = |a: f64, b: f64| q * a + (1.0 - q) * b;
            let mix_err = |a: f64, b: f64| ((q * a).powi(2) + ((1.0 - q) * b).powi(2)).sqrt();
            Ok(MixtureEstimate {
                q,
                mode,
                avg_aoi: mix(minus.avg_aoi, plus.avg_aoi),
                avg_energy: mix(minus.avg_energy, plus.avg_energy),
                aoi_stderr: mix_err(minus.aoi_stderr, plus.aoi_stderr),
                energy_stderr: mix_err(minus.energy_stderr, plus.energy_stderr),
                runs: vec![minus, plus],
            })
        }
        MixtureMode::PerSlot => {
            let mut policy = PerSlotMixture::new(model, mixture)?;
            let run = Simulator::for_model(model).run(&mut policy, cfg)?;
            Ok(MixtureEstimate {
                q,
                mode,
                avg_aoi: run.avg_aoi,
                avg_energy: run.avg_energy,
                aoi_stderr: run.aoi_stderr,
                energy_stderr: run.energy_stderr,
                runs: vec![run],
            })
        }
    }
}
