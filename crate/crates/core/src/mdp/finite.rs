use smallvec::SmallVec;

use crate::channel::Action;

/// One branch of a transition row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub next: usize,
    pub prob: f64,
}

pub type Successors = SmallVec<[Transition; 2]>;

/// Compiled row of the kernel. `transmit` is `None` where transmission is not
/// admissible.
#[derive(Debug, Clone, PartialEq)]
pub struct StateRow {
    pub aoi: u32,
    pub suspend: Successors,
    pub transmit: Option<Successors>,
}

impl StateRow {
    pub fn successors(&self, action: Action) -> Option<&Successors> {
        match action {
            Action::Suspend => Some(&self.suspend),
            Action::Transmit => self.transmit.as_ref(),
        }
    }

    pub fn admits(&self, action: Action) -> bool {
        self.successors(action).is_some()
    }
}

/// Index-based finite MDP shared by every solver.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMdp {
    rows: Vec<StateRow>,
    reference: usize,
}

impl FiniteMdp {
    pub fn new(rows: Vec<StateRow>, reference: usize) -> Self {
        assert!(reference < rows.len(), "reference state out of range");
        Self { rows, reference }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn reference(&self) -> usize {
        self.reference
    }

    pub fn rows(&self) -> &[StateRow] {
        &self.rows
    }

    pub fn row(&self, state: usize) -> &StateRow {
        &self.rows[state]
    }

    #[inline]
    pub fn expected(&self, state: usize, action: Action, values: &[f64]) -> f64 {
        match self.rows[state].successors(action) {
            Some(succ) => succ.iter().map(|t| t.prob * values[t.next]).sum(),
            None => f64::INFINITY,
        }
    }

    /// Largest deviation of any row sum from 1.
    pub fn max_row_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for row in &self.rows {
            for succ in std::iter::once(&row.suspend).chain(row.transmit.iter()) {
                let total: f64 = succ.iter().map(|t| t.prob).sum();
                worst = worst.max((total - 1.0).abs());
            }
        }
        worst
    }

    /// Number of states where both actions are admissible.
    pub fn decision_states(&self) -> usize {
        self.rows.iter().filter(|r| r.transmit.is_some()).count()
    }
}
