use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::ChannelModel;
use crate::mdp::{Case, DelayedModel, FrameSpec, NoSensingModel, TruncationBound};
use crate::sim::{estimate_mixture, simulate_greedy, MixtureMode, PolicyModel, GENERATOR};
use crate::solver::{
    bisect_lambda_cached, BisectOptions, PolicyCache, RviOptions, StructuredSolve,
    ThresholdPolicyAoI, ThresholdPolicyBelief,
};

use super::{parse_err, Command, ExperimentError, ExperimentSpec};

pub(crate) enum Built {
    NoSensing(NoSensingModel),
    Delayed(DelayedModel),
}

pub(crate) fn build(
    case: Case,
    k: u32,
    p11: f64,
    p01: f64,
    n: u32,
) -> Result<Built, ExperimentError> {
    let err =
        |e: &dyn std::fmt::Display| parse_err(format!("K={k}, N={n}, p11={p11}, p01={p01}: {e}"));
    let frame = FrameSpec::new(k).map_err(|e| err(&e))?;
    let channel = ChannelModel::new(p11, p01).map_err(|e| err(&e))?;
    let bound = TruncationBound::new(n, &frame).map_err(|e| err(&e))?;
    Ok(match case {
        Case::NoSensing => {
            Built::NoSensing(NoSensingModel::build(frame, channel, bound).map_err(|e| err(&e))?)
        }
        Case::DelayedSensing => {
            Built::Delayed(DelayedModel::build(frame, channel, bound).map_err(|e| err(&e))?)
        }
    })
}

pub(crate) fn bisect_options(spec: &ExperimentSpec) -> BisectOptions {
    BisectOptions {
        rvi: RviOptions::with_eps(spec.eps),
        eps_lambda: spec.eps_lambda,
        ..BisectOptions::default()
    }
}

/// One solved point of a tradeoff or frame-length sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixtureRow {
    pub case: &'static str,
    pub frame_k: u32,
    pub p11: f64,
    pub p01: f64,
    /// Empty on the unconstrained row.
    pub emax: Option<f64>,
    pub bound_n: u32,
    pub eps: f64,
    pub eps_lambda: f64,
    pub horizon: u64,
    pub warmup: u64,
    pub seed: u64,
    pub generator: &'static str,
    pub mixture_mode: MixtureMode,
    /// `mixture` or `unconstrained`.
    pub kind: &'static str,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    pub q: f64,
    pub analytic_aoi: f64,
    pub analytic_energy: f64,
    pub mc_aoi: f64,
    pub mc_aoi_stderr: f64,
    pub mc_energy: f64,
    pub mc_energy_stderr: f64,
}

fn case_rank(name: &str) -> u8 {
    u8::from(name != Case::NoSensing.name())
}

impl MixtureRow {
    fn order(&self, other: &Self) -> Ordering {
        (case_rank(self.case), self.frame_k)
            .cmp(&(case_rank(other.case), other.frame_k))
            .then(self.p11.total_cmp(&other.p11))
            .then(self.p01.total_cmp(&other.p01))
            .then(self.emax.is_some().cmp(&other.emax.is_some()))
            .then(
                self.emax
                    .unwrap_or(0.0)
                    .total_cmp(&other.emax.unwrap_or(0.0)),
            )
    }
}

fn solve_group<M: StructuredSolve + PolicyModel>(
    model: &M,
    spec: &ExperimentSpec,
    emaxes: &[f64],
    with_unconstrained: bool,
) -> Result<Vec<MixtureRow>, ExperimentError> {
    let ch = model.channel();
    let (case, k) = (model.case(), model.frame().len());
    let context = |e: Option<f64>| {
        format!(
            "case={case}, K={k}, p11={}, p01={}, N={}, emax={}",
            ch.p11(),
            ch.p01(),
            spec.bound_n,
            e.map_or("none".to_string(), |e| e.to_string())
        )
    };
    let opts = bisect_options(spec);
    let cfg = spec.sim_config()?;
    let mut cache = PolicyCache::new();
    let mut budgets: Vec<Option<f64>> = emaxes.iter().copied().map(Some).collect();
    if with_unconstrained {
        budgets.insert(0, None);
    }
    let mut rows = Vec::with_capacity(budgets.len());
    for emax in budgets {
        // a unit budget always returns the λ = 0 policy
        let mixture = bisect_lambda_cached(model, emax.unwrap_or(1.0), &opts, &mut cache).map_err(
            |source| ExperimentError::Solver {
                context: context(emax),
                source,
            },
        )?;
        let est = estimate_mixture(model, &mixture, &cfg, spec.mixture_mode).map_err(|source| {
            ExperimentError::Sim {
                context: context(emax),
                source,
            }
        })?;
        rows.push(MixtureRow {
            case: case.name(),
            frame_k: k,
            p11: ch.p11(),
            p01: ch.p01(),
            emax,
            bound_n: spec.bound_n,
            eps: spec.eps,
            eps_lambda: spec.eps_lambda,
            horizon: spec.horizon,
            warmup: spec.warmup,
            seed: spec.seed,
            generator: GENERATOR,
            mixture_mode: spec.mixture_mode,
            kind: if emax.is_some() {
                "mixture"
            } else {
                "unconstrained"
            },
            lambda_minus: mixture.minus.lambda,
            lambda_plus: mixture.plus.lambda,
            q: mixture.q,
            analytic_aoi: mixture.avg_aoi(),
            analytic_energy: mixture.avg_energy(),
            mc_aoi: est.avg_aoi,
            mc_aoi_stderr: est.aoi_stderr,
            mc_energy: est.avg_energy,
            mc_energy_stderr: est.energy_stderr,
        });
    }
    Ok(rows)
}

fn mixture_rows(
    spec: &ExperimentSpec,
    with_unconstrained: bool,
) -> Result<Vec<MixtureRow>, ExperimentError> {
    spec.validate()?;
    let pairs = spec.channel_pairs()?;
    let mut groups = Vec::new();
    for case in spec.case.cases() {
        for &k in &spec.frame_k {
            for &(p11, p01) in &pairs {
                groups.push((case, k, p11, p01));
            }
        }
    }
    let pool = spec.pool()?;
    let chunks: Vec<Vec<MixtureRow>> = pool.install(|| {
        groups
            .par_iter()
            .map(
                |&(case, k, p11, p01)| match build(case, k, p11, p01, spec.bound_n)? {
                    Built::NoSensing(m) => solve_group(&m, spec, &spec.emax, with_unconstrained),
                    Built::Delayed(m) => solve_group(&m, spec, &spec.emax, with_unconstrained),
                },
            )
            .collect::<Result<_, _>>()
    })?;
    let mut rows: Vec<MixtureRow> = chunks.into_iter().flatten().collect();
    rows.sort_by(MixtureRow::order);
    Ok(rows)
}

/// AoI-energy tradeoff: one mixture row per `(case, p11, p01, E_max)` plus
/// the unconstrained row of each channel.
pub fn run_tradeoff_sweep(spec: &ExperimentSpec) -> Result<Vec<MixtureRow>, ExperimentError> {
    mixture_rows(spec, true)
}

/// Average AoI against frame length; one row per `(case, K, p11, p01, E_max)`.
pub fn run_framelength_sweep(spec: &ExperimentSpec) -> Result<Vec<MixtureRow>, ExperimentError> {
    mixture_rows(spec, false)
}

/// Constrained-optimal policies against the greedy baseline, all simulated
/// with the same seed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreedyRow {
    pub frame_k: u32,
    pub p11: f64,
    pub p01: f64,
    pub emax: f64,
    pub bound_n: u32,
    pub eps: f64,
    pub eps_lambda: f64,
    pub horizon: u64,
    pub warmup: u64,
    pub seed: u64,
    pub generator: &'static str,
    pub mixture_mode: MixtureMode,
    pub no_sensing_aoi: Option<f64>,
    pub no_sensing_stderr: Option<f64>,
    pub no_sensing_analytic: Option<f64>,
    pub delayed_aoi: Option<f64>,
    pub delayed_stderr: Option<f64>,
    pub delayed_analytic: Option<f64>,
    pub greedy_aoi: f64,
    pub greedy_stderr: f64,
    pub greedy_energy: f64,
    /// `greedy_aoi − optimal_aoi` per case.
    pub gap_no_sensing: Option<f64>,
    pub gap_delayed: Option<f64>,
}

pub fn run_greedy_comparison(spec: &ExperimentSpec) -> Result<Vec<GreedyRow>, ExperimentError> {
    let optimal = mixture_rows(spec, false)?;
    let cfg = spec.sim_config()?;
    let mut points = Vec::new();
    for &k in &spec.frame_k {
        for (p11, p01) in spec.channel_pairs()? {
            for &emax in &spec.emax {
                points.push((k, p11, p01, emax));
            }
        }
    }
    let pool = spec.pool()?;
    let greedy: Vec<_> = pool.install(|| {
        points
            .par_iter()
            .map(|&(k, p11, p01, emax)| {
                let frame = FrameSpec::new(k).map_err(|e| parse_err(e.to_string()))?;
                let ch = ChannelModel::new(p11, p01).map_err(|e| parse_err(e.to_string()))?;
                simulate_greedy(frame, &ch, emax, &cfg).map_err(|source| ExperimentError::Sim {
                    context: format!("greedy K={k}, p11={p11}, p01={p01}, emax={emax}"),
                    source,
                })
            })
            .collect::<Result<_, ExperimentError>>()
    })?;

    let find = |case: Case, k: u32, p11: f64, p01: f64, emax: f64| {
        optimal.iter().find(|r| {
            r.case == case.name()
                && r.frame_k == k
                && r.p11 == p11
                && r.p01 == p01
                && r.emax == Some(emax)
        })
    };
    let rows = points
        .iter()
        .zip(greedy)
        .map(|(&(k, p11, p01, emax), g)| {
            let ns = find(Case::NoSensing, k, p11, p01, emax);
            let dl = find(Case::DelayedSensing, k, p11, p01, emax);
            GreedyRow {
                frame_k: k,
                p11,
                p01,
                emax,
                bound_n: spec.bound_n,
                eps: spec.eps,
                eps_lambda: spec.eps_lambda,
                horizon: spec.horizon,
                warmup: spec.warmup,
                seed: spec.seed,
                generator: GENERATOR,
                mixture_mode: spec.mixture_mode,
                no_sensing_aoi: ns.map(|r| r.mc_aoi),
                no_sensing_stderr: ns.map(|r| r.mc_aoi_stderr),
                no_sensing_analytic: ns.map(|r| r.analytic_aoi),
                delayed_aoi: dl.map(|r| r.mc_aoi),
                delayed_stderr: dl.map(|r| r.mc_aoi_stderr),
                delayed_analytic: dl.map(|r| r.analytic_aoi),
                greedy_aoi: g.avg_aoi,
                greedy_stderr: g.aoi_stderr,
                greedy_energy: g.avg_energy,
                gap_no_sensing: ns.map(|r| g.avg_aoi - r.mc_aoi),
                gap_delayed: dl.map(|r| g.avg_aoi - r.mc_aoi),
            }
        })
        .collect();
    Ok(rows)
}

/// One threshold of a solved policy: `(Δ, k, ω*)` without sensing, or
/// `(k, g, Δ*)` with delayed sensing. Never-transmit is `inf`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdRow {
    pub case: &'static str,
    pub frame_k: u32,
    pub p11: f64,
    pub p01: f64,
    pub emax: f64,
    pub bound_n: u32,
    pub eps: f64,
    pub eps_lambda: f64,
    pub horizon: u64,
    pub warmup: u64,
    pub seed: u64,
    pub generator: &'static str,
    /// `minus` (higher-energy) or `plus` component of the mixture.
    pub component: &'static str,
    pub lambda: f64,
    pub q: f64,
    /// `threshold`, or `cap_transmit` / `cap_suspend` for the listed beliefs
    /// of a cap group without a single switch.
    pub kind: &'static str,
    pub aoi: Option<u32>,
    pub slot: u32,
    pub last_good: Option<u8>,
    pub threshold: f64,
}

/// Solves single instances and dumps the thresholds of both mixture
/// components.
pub fn run_solve(spec: &ExperimentSpec) -> Result<Vec<ThresholdRow>, ExperimentError> {
    debug_assert_eq!(spec.command, Command::Solve);
    spec.validate()?;
    let opts = bisect_options(spec);
    let mut rows = Vec::new();
    for case in spec.case.cases() {
        for &k in &spec.frame_k {
            for (p11, p01) in spec.channel_pairs()? {
                let built = build(case, k, p11, p01, spec.bound_n)?;
                let mut cache = PolicyCache::new();
                for &emax in &spec.emax {
                    let context = format!("case={case}, K={k}, p11={p11}, p01={p01}, emax={emax}");
                    let template = |component, lambda, q, kind, aoi, slot, last_good, threshold| {
                        ThresholdRow {
                            case: case.name(),
                            frame_k: k,
                            p11,
                            p01,
                            emax,
                            bound_n: spec.bound_n,
                            eps: spec.eps,
                            eps_lambda: spec.eps_lambda,
                            horizon: spec.horizon,
                            warmup: spec.warmup,
                            seed: spec.seed,
                            generator: GENERATOR,
                            component,
                            lambda,
                            q,
                            kind,
                            aoi,
                            slot,
                            last_good,
                            threshold,
                        }
                    };
                    let solver_err = |source| ExperimentError::Solver {
                        context: context.clone(),
                        source,
                    };
                    match &built {
                        Built::NoSensing(m) => {
                            let mix = bisect_lambda_cached(m, emax, &opts, &mut cache)
                                .map_err(solver_err)?;
                            for (name, point) in [("minus", &mix.minus), ("plus", &mix.plus)] {
                                let policy = ThresholdPolicyBelief::from_actions(m, &point.actions)
                                    .map_err(solver_err)?;
                                for (&(aoi, slot), t) in &policy.thresholds {
                                    rows.push(template(
                                        name,
                                        point.lambda,
                                        mix.q,
                                        "threshold",
                                        Some(aoi),
                                        slot,
                                        None,
                                        t.unwrap_or(f64::INFINITY),
                                    ));
                                }
                                for (&(aoi, slot), listed) in &policy.cap_exceptions {
                                    for &(w, a) in listed {
                                        let kind = if a.is_transmit() {
                                            "cap_transmit"
                                        } else {
                                            "cap_suspend"
                                        };
                                        rows.push(template(
                                            name,
                                            point.lambda,
                                            mix.q,
                                            kind,
                                            Some(aoi),
                                            slot,
                                            None,
                                            w,
                                        ));
                                    }
                                }
                            }
                        }
                        Built::Delayed(m) => {
                            let mix = bisect_lambda_cached(m, emax, &opts, &mut cache)
                                .map_err(solver_err)?;
                            for (name, point) in [("minus", &mix.minus), ("plus", &mix.plus)] {
                                let policy = ThresholdPolicyAoI::from_actions(m, &point.actions)
                                    .map_err(solver_err)?;
                                for (&(slot, g), t) in &policy.thresholds {
                                    rows.push(template(
                                        name,
                                        point.lambda,
                                        mix.q,
                                        "threshold",
                                        None,
                                        slot,
                                        Some(u8::from(g)),
                                        t.map_or(f64::INFINITY, f64::from),
                                    ));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(rows)
}
