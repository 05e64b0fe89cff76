//! Myopic channel selection and the policy descriptions shared by the
//! solver and the simulator.
//!
//! The myopic rule probes the channel with the highest belief. Because all
//! channels share the same parameters it can also be run without tracking
//! beliefs at all: keep the channels in an ordered list and rotate it after
//! each observation. In the positively correlated regime a bad observation
//! sends the head to the tail; in the negatively correlated regime a bad
//! observation reverses the tail and a good one reverses the whole list.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::belief::{BeliefKey, BeliefVector, Observation};
use crate::channel::{ChannelParams, Regime, VALIDITY_TOLERANCE};
use crate::error::{Error, Result};

/// How ties between equal beliefs are broken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    #[default]
    LowestIndex,
    SeededRandom(u64),
}

/// Indices of the channels tied with the maximum belief, ascending.
pub fn myopic_candidates(w: &[f64], tie_tol: f64) -> Vec<usize> {
    let max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..w.len()).filter(|&i| w[i] >= max - tie_tol).collect()
}

/// Channel with the highest belief.
pub fn myopic_action(w: &[f64], tie: TieBreak) -> Result<usize> {
    if w.is_empty() {
        return Err(Error::EmptyVector);
    }
    let candidates = myopic_candidates(w, VALIDITY_TOLERANCE);
    Ok(match tie {
        TieBreak::LowestIndex => candidates[0],
        TieBreak::SeededRandom(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            candidates[rng.gen_range(0..candidates.len())]
        }
    })
}

/// Channels ordered by belief, highest first. The head is probed next.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OrderedList(Vec<usize>);

impl OrderedList {
    /// Wraps `order` after checking it is a permutation of `0..order.len()`.
    pub fn new(order: Vec<usize>) -> Result<Self> {
        if order.is_empty() {
            return Err(Error::EmptyVector);
        }
        let mut seen = vec![false; order.len()];
        for &c in &order {
            if c >= order.len() || seen[c] {
                return Err(Error::PreconditionViolated(format!("{order:?} is not a permutation")));
            }
            seen[c] = true;
        }
        Ok(Self(order))
    }

    pub fn head(&self) -> usize {
        self.0[0]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Positively correlated update: stay on a good channel, otherwise
    /// move the head to the tail.
    pub fn advance_positive(&self, obs: Observation) -> Self {
        let mut order = self.0.clone();
        if obs == Observation::Bad {
            order.rotate_left(1);
        }
        Self(order)
    }

    /// Negatively correlated update: after a bad observation keep the head
    /// and reverse the rest; after a good one reverse the whole list.
    pub fn advance_negative(&self, obs: Observation) -> Self {
        let mut order = self.0.clone();
        match obs {
            Observation::Bad => order[1..].reverse(),
            Observation::Good => order.reverse(),
        }
        Self(order)
    }

    pub fn advance(&self, regime: Regime, obs: Observation) -> Self {
        match regime {
            Regime::PositivelyCorrelated => self.advance_positive(obs),
            Regime::NegativelyCorrelated => self.advance_negative(obs),
        }
    }
}

/// Sorts channels by descending belief. Ties go by index, or are shuffled
/// within each tied group when a seed is given.
pub fn init_order(w: &[f64], tie: TieBreak) -> Result<OrderedList> {
    if w.is_empty() {
        return Err(Error::EmptyVector);
    }
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
    if let TieBreak::SeededRandom(seed) = tie {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut start = 0;
        while start < order.len() {
            let mut end = start + 1;
            while end < order.len() && (w[order[start]] - w[order[end]]).abs() <= VALIDITY_TOLERANCE {
                end += 1;
            }
            order[start..end].shuffle(&mut rng);
            start = end;
        }
    }
    Ok(OrderedList(order))
}

/// Explicit (stage, belief key) → channel table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolicyTable {
    pub quantum: f64,
    pub actions: HashMap<(usize, BeliefKey), usize>,
}

/// A channel-selection rule.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    /// Probe the highest belief every epoch.
    Myopic(TieBreak),
    /// Probe `first` at the first epoch, then act myopically.
    FixedFirstAction { first: usize, then: TieBreak },
    /// Look the action up by stage and belief key.
    Table(PolicyTable),
    /// Run the ordered-list procedure from the given starting order,
    /// without consulting beliefs.
    StructuredList(OrderedList),
}

impl PolicySpec {
    pub fn myopic() -> Self {
        PolicySpec::Myopic(TieBreak::LowestIndex)
    }

    pub fn start(&self) -> PolicyCursor<'_> {
        let list = match self {
            PolicySpec::StructuredList(order) => Some(order.clone()),
            _ => None,
        };
        PolicyCursor { spec: self, list }
    }
}

/// Execution state of a [`PolicySpec`]: only list-based policies carry any.
#[derive(Debug, Clone)]
pub struct PolicyCursor<'a> {
    spec: &'a PolicySpec,
    list: Option<OrderedList>,
}

impl PolicyCursor<'_> {
    /// Action at epoch `stage` (from 1) in belief state `w`.
    pub fn action(&self, stage: usize, w: &BeliefVector) -> Result<usize> {
        let n = w.len();
        let a = match (self.spec, &self.list) {
            (PolicySpec::Myopic(tie), _) => myopic_action(w.as_slice(), *tie)?,
            (PolicySpec::FixedFirstAction { first, then }, _) => {
                if stage == 1 {
                    *first
                } else {
                    myopic_action(w.as_slice(), *then)?
                }
            }
            (PolicySpec::Table(table), _) => {
                *table.actions.get(&(stage, w.key(table.quantum)?)).ok_or(Error::PolicyUndefined { stage })?
            }
            (PolicySpec::StructuredList(_), Some(list)) => {
                if list.len() != n {
                    return Err(Error::DimensionMismatch { rows: list.len(), cols: 0, n, horizon: 0 });
                }
                list.head()
            }
            (PolicySpec::StructuredList(_), None) => unreachable!("list cursor always carries a list"),
        };
        if a >= n {
            return Err(Error::IndexOutOfRange { index: a, n });
        }
        Ok(a)
    }

    /// Cursor after observing `obs` on the probed channel.
    pub fn advance(&self, params: &ChannelParams, obs: Observation) -> Self {
        Self { spec: self.spec, list: self.list.as_ref().map(|l| l.advance(params.regime(), obs)) }
    }

    pub(crate) fn list(&self) -> Option<&OrderedList> {
        self.list.as_ref()
    }
}
