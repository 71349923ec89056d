//! Experiment definitions behind the command-line tool: parameter parsing,
//! the sweeps, and the property suite.
//!
//! Parameters come from per-command defaults, then an optional `key = value`
//! file, then explicit overrides; later sources win. List-valued keys take
//! comma-separated values. `p11` and `p01` lists are paired position by
//! position, and a single value is repeated to the other list's length.

mod properties;
mod sweeps;

pub use properties::{run_property_suite, PropertyRow, PROPERTY_INSTANCES};
pub use sweeps::{
    run_framelength_sweep, run_greedy_comparison, run_solve, run_tradeoff_sweep, GreedyRow,
    MixtureRow, ThresholdRow,
};

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::channel::ChannelModel;
use crate::mdp::{Case, FrameSpec, TruncationBound};
use crate::sim::{MixtureMode, SimConfig, SimError};
use crate::solver::SolverError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{0}")]
    Parse(String),

    #[error("{context}: {source}")]
    Solver {
        context: String,
        source: SolverError,
    },

    #[error("{context}: {source}")]
    Sim { context: String, source: SimError },

    #[error("{failed} of {total} property checks failed")]
    PropertyFailure { failed: usize, total: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl ExperimentError {
    /// Process exit status: 2 bad input, 3 non-convergence, 4 failed
    /// property, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Parse(_) => 2,
            ExperimentError::Solver { source, .. } => match source {
                SolverError::NotConverged { .. }
                | SolverError::PowerIterationStalled { .. }
                | SolverError::BudgetExhausted { .. } => 3,
                SolverError::InvalidEnergyBudget(_) | SolverError::InvalidDiscount(_) => 2,
                _ => 1,
            },
            ExperimentError::Sim { source, .. } => match source {
                SimError::InvalidConfig(_) | SimError::InvalidEnergyBudget(_) => 2,
                _ => 1,
            },
            ExperimentError::PropertyFailure { .. } => 4,
            ExperimentError::Io(_) | ExperimentError::Csv(_) => 1,
        }
    }
}

fn parse_err(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::Parse(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseSelection {
    NoSensing,
    DelayedSensing,
    Both,
}

impl CaseSelection {
    pub fn cases(self) -> Vec<Case> {
        match self {
            CaseSelection::NoSensing => vec![Case::NoSensing],
            CaseSelection::DelayedSensing => vec![Case::DelayedSensing],
            CaseSelection::Both => vec![Case::NoSensing, Case::DelayedSensing],
        }
    }
}

impl std::str::FromStr for CaseSelection {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "no_sensing" | "i" | "1" => Ok(CaseSelection::NoSensing),
            "delayed_sensing" | "delayed" | "ii" | "2" => Ok(CaseSelection::DelayedSensing),
            "both" => Ok(CaseSelection::Both),
            other => Err(parse_err(format!(
                "unknown case '{other}' (expected no_sensing, delayed_sensing or both)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Tradeoff,
    FrameLength,
    GreedyCompare,
    Properties,
    Solve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub command: Command,
    pub case: CaseSelection,
    pub frame_k: Vec<u32>,
    pub p11: Vec<f64>,
    pub p01: Vec<f64>,
    pub emax: Vec<f64>,
    pub bound_n: u32,
    pub eps: f64,
    pub eps_lambda: f64,
    pub horizon: u64,
    pub seed: u64,
    pub warmup: u64,
    pub out: Option<PathBuf>,
    /// Worker threads; 0 picks the number of cores.
    pub workers: usize,
    pub mixture_mode: MixtureMode,
    /// Property suite only: flip the tie-break of the structured solvers.
    pub inject_bug: bool,
}

const DEFAULT_P11: [f64; 3] = [0.7, 0.9, 0.9];
const DEFAULT_P01: [f64; 3] = [0.3, 0.3, 0.5];

impl ExperimentSpec {
    /// Defaults for `command`.
    pub fn defaults(command: Command) -> Self {
        let base = Self {
            command,
            case: CaseSelection::Both,
            frame_k: vec![3],
            p11: DEFAULT_P11.to_vec(),
            p01: DEFAULT_P01.to_vec(),
            emax: vec![0.3],
            bound_n: 1000,
            eps: 1e-6,
            eps_lambda: 1e-4,
            horizon: SimConfig::DEFAULT_HORIZON,
            seed: 1,
            warmup: SimConfig::DEFAULT_WARMUP,
            out: None,
            workers: 0,
            mixture_mode: MixtureMode::Initial,
            inject_bug: false,
        };
        let tenths = |hi: u32| (1..=hi).map(|i| f64::from(i) / 10.0).collect::<Vec<_>>();
        match command {
            Command::Tradeoff => Self {
                emax: tenths(10),
                ..base
            },
            Command::FrameLength => Self {
                frame_k: (2..=8).collect(),
                ..base
            },
            Command::GreedyCompare => Self {
                p11: vec![0.7],
                p01: vec![0.3],
                emax: tenths(6),
                ..base
            },
            Command::Solve => Self {
                p11: vec![0.7],
                p01: vec![0.3],
                ..base
            },
            Command::Properties => Self {
                bound_n: 60,
                ..base
            },
        }
    }

    /// Applies one `key = value` setting. Keys match the long flag names;
    /// case and `-`/`_` are ignored.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ExperimentError> {
        let key = key.trim().to_ascii_lowercase().replace('-', "_");
        let value = value.trim();
        let bad = |what: &str| parse_err(format!("invalid value '{value}' for {key}: {what}"));
        fn list<T: std::str::FromStr>(v: &str) -> Option<Vec<T>> {
            v.split(',').map(|x| x.trim().parse().ok()).collect()
        }
        match key.as_str() {
            "case" => self.case = value.parse()?,
            "frame_k" | "k" => {
                self.frame_k = list(value).ok_or_else(|| bad("expected integers"))?
            }
            "p11" => self.p11 = list(value).ok_or_else(|| bad("expected numbers"))?,
            "p01" => self.p01 = list(value).ok_or_else(|| bad("expected numbers"))?,
            "emax" | "e_max" => self.emax = list(value).ok_or_else(|| bad("expected numbers"))?,
            "bound_n" | "n" => {
                self.bound_n = value.parse().map_err(|_| bad("expected an integer"))?
            }
            "eps" => self.eps = value.parse().map_err(|_| bad("expected a number"))?,
            "eps_lambda" => {
                self.eps_lambda = value.parse().map_err(|_| bad("expected a number"))?
            }
            "horizon" => self.horizon = value.parse().map_err(|_| bad("expected an integer"))?,
            "seed" => self.seed = value.parse().map_err(|_| bad("expected an integer"))?,
            "warmup" => self.warmup = value.parse().map_err(|_| bad("expected an integer"))?,
            "out" => self.out = Some(PathBuf::from(value)),
            "workers" => self.workers = value.parse().map_err(|_| bad("expected an integer"))?,
            "mixture_mode" => {
                self.mixture_mode = match value {
                    "initial" => MixtureMode::Initial,
                    "per_slot" | "per-slot" => MixtureMode::PerSlot,
                    _ => return Err(bad("expected initial or per_slot")),
                }
            }
            "inject_bug" => {
                self.inject_bug = value.parse().map_err(|_| bad("expected true or false"))?
            }
            _ => return Err(parse_err(format!("unknown setting '{key}'"))),
        }
        Ok(())
    }

    /// Reads a `key = value` file; blank lines and `#` comments are skipped.
    pub fn load_file(&mut self, path: &Path) -> Result<(), ExperimentError> {
        let text = fs::read_to_string(path)
            .map_err(|e| parse_err(format!("cannot read config {}: {e}", path.display())))?;
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                parse_err(format!(
                    "{}:{}: expected key = value",
                    path.display(),
                    n + 1
                ))
            })?;
            self.set(key, value)?;
        }
        Ok(())
    }

    /// `(p11, p01)` pairs after broadcasting.
    pub fn channel_pairs(&self) -> Result<Vec<(f64, f64)>, ExperimentError> {
        let (a, b) = (&self.p11, &self.p01);
        let len = match (a.len(), b.len()) {
            (x, y) if x == y => x,
            (1, y) => y,
            (x, 1) => x,
            (x, y) => {
                return Err(parse_err(format!(
                    "p11 has {x} values and p01 has {y}; cannot pair them"
                )))
            }
        };
        let pick = |v: &[f64], i: usize| if v.len() == 1 { v[0] } else { v[i] };
        Ok((0..len).map(|i| (pick(a, i), pick(b, i))).collect())
    }

    pub fn sim_config(&self) -> Result<SimConfig, ExperimentError> {
        SimConfig::new(self.horizon, self.seed, self.warmup).map_err(|e| parse_err(e.to_string()))
    }

    /// Re-checks every component invariant.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.frame_k.is_empty()
            || self.p11.is_empty()
            || self.p01.is_empty()
            || self.emax.is_empty()
        {
            return Err(parse_err(
                "frame-K, p11, p01 and emax need at least one value",
            ));
        }
        for (p11, p01) in self.channel_pairs()? {
            let ch = ChannelModel::new(p11, p01).map_err(|e| parse_err(e.to_string()))?;
            ch.stationary_good_probability()
                .map_err(|e| parse_err(e.to_string()))?;
        }
        for &k in &self.frame_k {
            let frame = FrameSpec::new(k).map_err(|e| parse_err(e.to_string()))?;
            if self.command != Command::Properties {
                TruncationBound::new(self.bound_n, &frame).map_err(|e| parse_err(e.to_string()))?;
            }
        }
        for &e in &self.emax {
            if !(e > 0.0 && e <= 1.0) {
                return Err(parse_err(format!(
                    "energy budget must lie in (0, 1], got {e}"
                )));
            }
        }
        if [self.eps, self.eps_lambda]
            .iter()
            .any(|e| e.is_nan() || *e <= 0.0)
        {
            return Err(parse_err("eps and eps-lambda must be positive"));
        }
        self.sim_config()?;
        Ok(())
    }

    pub(crate) fn pool(&self) -> Result<rayon::ThreadPool, ExperimentError> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| parse_err(format!("cannot start {} workers: {e}", self.workers)))
    }
}

/// Writes `rows` as CSV (`,` delimiter, LF endings, header first).
pub fn write_csv<T: Serialize, W: Write>(out: W, rows: &[T]) -> Result<(), ExperimentError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes to `path`, or to stdout when `path` is `None`.
pub fn emit_csv<T: Serialize>(path: Option<&Path>, rows: &[T]) -> Result<(), ExperimentError> {
    match path {
        Some(p) => write_csv(fs::File::create(p)?, rows),
        None => write_csv(std::io::stdout().lock(), rows),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_broadcast_single_values() {
        let mut s = ExperimentSpec::defaults(Command::Tradeoff);
        assert_eq!(
            s.channel_pairs().unwrap(),
            vec![(0.7, 0.3), (0.9, 0.3), (0.9, 0.5)]
        );
        s.set("p01", "0.2").unwrap();
        assert_eq!(
            s.channel_pairs().unwrap(),
            vec![(0.7, 0.2), (0.9, 0.2), (0.9, 0.2)]
        );
        s.set("p11", "0.8,0.9").unwrap();
        s.set("p01", "0.1,0.2,0.3").unwrap();
        assert!(matches!(s.channel_pairs(), Err(ExperimentError::Parse(_))));
    }

    #[test]
    fn budget_outside_unit_interval_is_a_parse_error() {
        let mut s = ExperimentSpec::defaults(Command::GreedyCompare);
        s.set("emax", "0.2,1.5").unwrap();
        let err = s.validate().unwrap_err();
        assert_eq!(err.exit_code(), 2);
        s.set("emax", "0").unwrap();
        assert_eq!(s.validate().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn file_then_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(
            &path,
            "# desk run\nframe-K = 4\nbound_N=40\nseed = 7 # trailing\n",
        )
        .unwrap();
        let mut s = ExperimentSpec::defaults(Command::Solve);
        s.load_file(&path).unwrap();
        s.set("seed", "9").unwrap();
        assert_eq!((s.frame_k.clone(), s.bound_n, s.seed), (vec![4], 40, 9));
        s.validate().unwrap();
        fs::write(&path, "nonsense\n").unwrap();
        assert!(s.load_file(&path).is_err());
        assert!(s.set("colour", "blue").is_err());
        assert!(s.set("case", "sideways").is_err());
    }

    #[test]
    fn bound_must_exceed_every_frame_length() {
        let mut s = ExperimentSpec::defaults(Command::FrameLength);
        s.set("bound-N", "6").unwrap();
        assert_eq!(s.validate().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn csv_uses_lf_and_header() {
        #[derive(Serialize)]
        struct Row {
            a: f64,
            b: Option<f64>,
        }
        let mut buf = Vec::new();
        write_csv(
            &mut buf,
            &[
                Row { a: 0.5, b: None },
                Row {
                    a: 1.25,
                    b: Some(2.0),
                },
            ],
        )
        .unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b\n0.5,\n1.25,2.0\n");
    }
}
