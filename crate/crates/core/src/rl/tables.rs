use alloc::collections::BTreeMap;

use super::{ActionId, StateIndex};

/// Upper bound on the action count (eight rotations plus hold).
pub const MAX_ACTIONS: usize = 9;

/// Both action-value estimates and visit counts for one state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QRow {
    pub q1: [f64; MAX_ACTIONS],
    pub q2: [f64; MAX_ACTIONS],
    pub visits: [u32; MAX_ACTIONS],
}

/// Sparse double Q-tables. Never-written entries read as zero.
///
/// Rows are keyed in a `BTreeMap` so iteration order (and hence checkpoint
/// output) is deterministic.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QTables {
    rows: BTreeMap<StateIndex, QRow>,
    steps: u64,
}

const EMPTY: QRow = QRow {
    q1: [0.0; MAX_ACTIONS],
    q2: [0.0; MAX_ACTIONS],
    visits: [0; MAX_ACTIONS],
};

impl QTables {
    pub fn new() -> Self {
        Self::default()
    }

    /// Global update counter `n`.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn set_steps(&mut self, n: u64) {
        self.steps = n;
    }

    pub(crate) fn bump_steps(&mut self) -> u64 {
        self.steps += 1;
        self.steps
    }

    pub fn row(&self, s: &StateIndex) -> &QRow {
        self.rows.get(s).unwrap_or(&EMPTY)
    }

    pub fn row_mut(&mut self, s: StateIndex) -> &mut QRow {
        self.rows.entry(s).or_default()
    }

    pub fn q1(&self, s: &StateIndex, a: ActionId) -> f64 {
        self.row(s).q1[a.index()]
    }

    pub fn q2(&self, s: &StateIndex, a: ActionId) -> f64 {
        self.row(s).q2[a.index()]
    }

    pub fn visits(&self, s: &StateIndex, a: ActionId) -> u32 {
        self.row(s).visits[a.index()]
    }

    /// Number of states with a stored row.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&StateIndex, &QRow)> {
        self.rows.iter()
    }
}
