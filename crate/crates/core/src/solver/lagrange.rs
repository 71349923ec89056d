//! Lagrangian relaxation of the energy constraint: bisection on the price,
//! the two-policy mixture, and the dual function.

use std::collections::HashMap;

use serde::Serialize;

use crate::channel::Action;

use super::evaluate::{evaluate_policy, PolicyAverages, PowerOptions};
use super::rvi::RviOptions;
use super::threshold::StructuredSolve;
use super::SolverError;

/// Optimal deterministic policy at one multiplier, with its averages.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyPoint {
    pub lambda: f64,
    pub gain: f64,
    pub actions: Vec<Action>,
    pub averages: PolicyAverages,
}

/// `q·π⁻ + (1 − q)·π⁺`, with `π⁻` the higher-energy policy.
#[derive(Debug, Clone, PartialEq)]
pub struct MixturePolicy {
    pub minus: PolicyPoint,
    pub plus: PolicyPoint,
    pub q: f64,
    pub bisection_steps: usize,
}

impl MixturePolicy {
    pub fn avg_aoi(&self) -> f64 {
        self.q * self.minus.averages.aoi + (1.0 - self.q) * self.plus.averages.aoi
    }

    pub fn avg_energy(&self) -> f64 {
        self.q * self.minus.averages.energy + (1.0 - self.q) * self.plus.averages.energy
    }

    pub fn is_deterministic(&self) -> bool {
        self.q == 1.0 || self.q == 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BisectOptions {
    pub rvi: RviOptions,
    pub power: PowerOptions,
    /// Stop once `λ⁺ − λ⁻ < eps_lambda`.
    pub eps_lambda: f64,
    pub lambda_hi_init: f64,
    /// Doubling gives up past this multiplier.
    pub lambda_cap: f64,
}

impl Default for BisectOptions {
    fn default() -> Self {
        Self {
            rvi: RviOptions::default(),
            power: PowerOptions::default(),
            eps_lambda: 1e-4,
            lambda_hi_init: 1.0,
            lambda_cap: 1e9,
        }
    }
}

/// Weight on the higher-energy policy that spends exactly `e_max` on
/// average. Equal energies give `q = 1`.
pub fn mixing_factor(e_minus: f64, e_plus: f64, e_max: f64) -> f64 {
    let spread = e_minus - e_plus;
    if spread.abs() <= f64::EPSILON {
        return 1.0;
    }
    ((e_max - e_plus) / spread).clamp(0.0, 1.0)
}

/// Solved multipliers of one model, reused across budgets. Every solve is
/// warm-started from the most recent bias.
#[derive(Debug, Default)]
pub struct PolicyCache {
    points: HashMap<u64, PolicyPoint>,
    warm: Option<Vec<f64>>,
}

impl PolicyCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn get<M: StructuredSolve>(
        &mut self,
        model: &M,
        lambda: f64,
        opts: &BisectOptions,
    ) -> Result<PolicyPoint, SolverError> {
        if let Some(p) = self.points.get(&lambda.to_bits()) {
            return Ok(p.clone());
        }
        let report = model.solve_structured(lambda, &opts.rvi, self.warm.as_deref())?;
        let averages = evaluate_policy(model.mdp(), &report.actions, &opts.power)?;
        let point = PolicyPoint {
            lambda,
            gain: report.gain,
            actions: report.actions,
            averages,
        };
        self.warm = Some(report.bias);
        self.points.insert(lambda.to_bits(), point.clone());
        Ok(point)
    }
}

/// Constrained-optimal mixture for the energy budget `e_max`.
///
/// Tries `λ = 0` first; if that policy already meets the budget it is
/// returned with `q = 1`. Otherwise `λ⁺` is doubled from
/// `lambda_hi_init` until feasible and the bracket is bisected.
pub fn bisect_lambda<M: StructuredSolve>(
    model: &M,
    e_max: f64,
    opts: &BisectOptions,
) -> Result<MixturePolicy, SolverError> {
    bisect_lambda_cached(model, e_max, opts, &mut PolicyCache::new())
}

/// As [`bisect_lambda`], sharing solved multipliers through `cache`.
pub fn bisect_lambda_cached<M: StructuredSolve>(
    model: &M,
    e_max: f64,
    opts: &BisectOptions,
    cache: &mut PolicyCache,
) -> Result<MixturePolicy, SolverError> {
    if !(e_max > 0.0 && e_max <= 1.0) {
        return Err(SolverError::InvalidEnergyBudget(e_max));
    }
    let free = cache.get(model, 0.0, opts)?;
    if free.averages.energy <= e_max {
        return Ok(MixturePolicy {
            plus: free.clone(),
            minus: free,
            q: 1.0,
            bisection_steps: 0,
        });
    }

    let mut minus = free;
    let mut hi = opts.lambda_hi_init.max(f64::MIN_POSITIVE);
    let mut plus = loop {
        let point = cache.get(model, hi, opts)?;
        if point.averages.energy <= e_max {
            break point;
        }
        minus = point;
        hi *= 2.0;
        if hi > opts.lambda_cap {
            return Err(SolverError::BudgetExhausted { lambda: hi });
        }
    };

    let mut steps = 0;
    while plus.lambda - minus.lambda >= opts.eps_lambda {
        let mid = 0.5 * (minus.lambda + plus.lambda);
        let point = cache.get(model, mid, opts)?;
        steps += 1;
        if point.averages.energy <= e_max {
            plus = point;
        } else {
            minus = point;
        }
    }
    let q = mixing_factor(minus.averages.energy, plus.averages.energy, e_max);
    Ok(MixturePolicy {
        minus,
        plus,
        q,
        bisection_steps: steps,
    })
}

/// One point of the dual function `L̄*(λ) − λ·E_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualPoint {
    pub lambda: f64,
    pub gain: f64,
    pub dual: f64,
}

/// Dual objective along `lambdas`, solved in order with warm starts.
pub fn dual_value_sweep<M: StructuredSolve>(
    model: &M,
    e_max: f64,
    lambdas: &[f64],
    opts: &RviOptions,
) -> Result<Vec<DualPoint>, SolverError> {
    let mut warm: Option<Vec<f64>> = None;
    let mut out = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let report = model.solve_structured(lambda, opts, warm.as_deref())?;
        out.push(DualPoint {
            lambda,
            gain: report.gain,
            dual: report.gain - lambda * e_max,
        });
        warm = Some(report.bias);
    }
    Ok(out)
}
