//! Information-state dynamics: belief vectors, the observation-driven
//! transition law and enumeration of the reachable belief space.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::channel::{check_probability, ChannelParams};
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;

/// Per-channel probabilities of being in the good state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BeliefVector(Vec<f64>);

impl BeliefVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyVector);
        }
        let entries = entries.into_iter().map(|w| check_probability("belief", w)).collect::<Result<Vec<_>>>()?;
        Ok(Self(entries))
    }

    /// Skips validation; entries must already be probabilities.
    pub(crate) fn from_raw(entries: Vec<f64>) -> Self {
        debug_assert!(!entries.is_empty());
        Self(entries)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, channel: usize) -> Result<f64> {
        self.0.get(channel).copied().ok_or(Error::IndexOutOfRange { index: channel, n: self.0.len() })
    }

    /// Belief after probing `channel` and seeing `obs`: the probed entry
    /// becomes `p11` or `p01`, every other entry moves through `tau`.
    pub fn observe(&self, params: &ChannelParams, channel: usize, obs: Observation) -> Result<Self> {
        self.get(channel)?;
        Ok(self.observe_unchecked(params, channel, obs))
    }

    pub(crate) fn observe_unchecked(&self, params: &ChannelParams, channel: usize, obs: Observation) -> Self {
        let entries = self
            .0
            .iter()
            .enumerate()
            .map(|(j, &w)| {
                if j == channel {
                    match obs {
                        Observation::Good => params.p11(),
                        Observation::Bad => params.p01(),
                    }
                } else {
                    params.tau_raw(w)
                }
            })
            .collect();
        Self(entries)
    }

    /// Distribution of the next belief vector when `channel` is probed.
    pub fn transition_law(&self, params: &ChannelParams, channel: usize) -> Result<SuccessorLaw> {
        let w = self.get(channel)?;
        Ok(SuccessorLaw {
            good: (w, self.observe_unchecked(params, channel, Observation::Good)),
            bad: (1.0 - w, self.observe_unchecked(params, channel, Observation::Bad)),
        })
    }

    /// Canonical key: each entry rounded to the nearest multiple of `quantum`.
    pub fn key(&self, quantum: f64) -> Result<BeliefKey> {
        if !(quantum > 0.0) {
            return Err(Error::NonpositiveQuantum(quantum));
        }
        Ok(self.key_unchecked(quantum))
    }

    pub(crate) fn key_unchecked(&self, quantum: f64) -> BeliefKey {
        BeliefKey(self.0.iter().map(|w| (w / quantum).round() as i64).collect())
    }
}

impl TryFrom<Vec<f64>> for BeliefVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<BeliefVector> for Vec<f64> {
    fn from(v: BeliefVector) -> Vec<f64> {
        v.0
    }
}

/// Sensed state of the probed channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observation {
    Bad,
    Good,
}

impl Observation {
    pub fn from_bit(bit: u8) -> Self {
        if bit == 0 {
            Observation::Bad
        } else {
            Observation::Good
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Observation::Bad => 0,
            Observation::Good => 1,
        }
    }
}

/// Two-point distribution over successor belief vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SuccessorLaw {
    pub good: (f64, BeliefVector),
    pub bad: (f64, BeliefVector),
}

/// Hashable, order-sensitive key identifying a belief vector up to rounding.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BeliefKey(pub Box<[i64]>);

/// Belief vectors reachable at each decision epoch, deduplicated by key.
#[derive(Debug, Clone)]
pub struct ReachableSet {
    stages: Vec<IndexMap<BeliefKey, BeliefVector>>,
}

impl ReachableSet {
    pub fn horizon(&self) -> usize {
        self.stages.len()
    }

    /// States of epoch `t`, numbered from 1.
    pub fn stage(&self, t: usize) -> &IndexMap<BeliefKey, BeliefVector> {
        &self.stages[t - 1]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.stages.iter().map(IndexMap::len).collect()
    }

    pub fn total(&self) -> usize {
        self.stages.iter().map(IndexMap::len).sum()
    }
}

/// Breadth-first expansion over every action and both observations.
pub fn enumerate_reachable(instance: &ProblemInstance) -> Result<ReachableSet> {
    let horizon = instance.horizon.finite()?;
    let quantum = instance.tol.key_quantum;
    let params = instance.params;
    let n = instance.n();

    let mut first = IndexMap::new();
    first.insert(instance.initial.key(quantum)?, instance.initial.clone());
    let mut stages = vec![first];

    for _ in 1..horizon {
        let prev = stages.last().expect("nonempty");
        let mut next: IndexMap<BeliefKey, BeliefVector> = IndexMap::with_capacity(prev.len() * 2 * n);
        for w in prev.values() {
            for a in 0..n {
                for obs in [Observation::Good, Observation::Bad] {
                    let succ = w.observe_unchecked(&params, a, obs);
                    next.entry(succ.key_unchecked(quantum)).or_insert(succ);
                }
            }
        }
        stages.push(next);
    }
    Ok(ReachableSet { stages })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Horizon;
    use proptest::prelude::*;

    fn demo() -> ChannelParams {
        ChannelParams::new(0.3, 0.9).unwrap()
    }

    fn bv(v: &[f64]) -> BeliefVector {
        BeliefVector::new(v.to_vec()).unwrap()
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-15)
    }

    #[test]
    fn observe_examples() {
        let w = bv(&[0.5, 0.6]);
        let good = w.observe(&demo(), 1, Observation::Good).unwrap();
        assert!(close(good.as_slice(), &[0.6, 0.9]));
        let bad = w.observe(&demo(), 1, Observation::Bad).unwrap();
        assert!(close(bad.as_slice(), &[0.6, 0.3]));
        let single = bv(&[1.0]).observe(&demo(), 0, Observation::Good).unwrap();
        assert_eq!(single.as_slice(), &[0.9]);
        assert_eq!(w.observe(&demo(), 2, Observation::Good), Err(Error::IndexOutOfRange { index: 2, n: 2 }));
    }

    #[test]
    fn transition_law_example() {
        let law = bv(&[0.5, 0.6]).transition_law(&demo(), 1).unwrap();
        assert!((law.good.0 - 0.6).abs() < 1e-15);
        assert!((law.bad.0 - 0.4).abs() < 1e-15);
        assert!(close(law.good.1.as_slice(), &[0.6, 0.9]));
        assert!(close(law.bad.1.as_slice(), &[0.6, 0.3]));
        // Expected next belief of the probed channel equals tau of its current belief.
        let expected = law.good.0 * 0.9 + law.bad.0 * 0.3;
        assert!((expected - 0.66).abs() < 1e-15);

        let law = bv(&[0.0, 0.4]).transition_law(&demo(), 0).unwrap();
        assert_eq!(law.bad.0, 1.0);
        assert!(bv(&[0.5]).transition_law(&demo(), 1).is_err());
    }

    #[test]
    fn key_examples() {
        let a = bv(&[0.6000000000001, 0.3]).key(1e-9).unwrap();
        let b = bv(&[0.6, 0.3]).key(1e-9).unwrap();
        assert_eq!(a, b);
        let c = bv(&[0.3, 0.6]).key(1e-9).unwrap();
        assert_ne!(b, c);
        assert_eq!(bv(&[0.6, 0.3]).key(1e-9).unwrap(), b);
        assert_eq!(b.0.as_ref(), &[600_000_000, 300_000_000]);
        assert_eq!(bv(&[0.5]).key(0.0), Err(Error::NonpositiveQuantum(0.0)));
        assert!(bv(&[0.5]).key(-1.0).is_err());
    }

    fn demo_instance(horizon: usize) -> ProblemInstance {
        ProblemInstance::new(demo(), 1.0, Horizon::Finite(horizon), bv(&[0.5, 0.6])).unwrap()
    }

    #[test]
    fn reachable_examples() {
        let one = enumerate_reachable(&demo_instance(1)).unwrap();
        assert_eq!(one.sizes(), vec![1]);
        assert_eq!(one.stage(1)[0].as_slice(), &[0.5, 0.6]);

        let two = enumerate_reachable(&demo_instance(2)).unwrap();
        let stage2: Vec<&[f64]> = two.stage(2).values().map(BeliefVector::as_slice).collect();
        assert_eq!(stage2.len(), 4);
        for want in [[0.6, 0.9], [0.6, 0.3], [0.9, 0.66], [0.3, 0.66]] {
            assert!(stage2.iter().any(|s| close(s, &want)), "missing {want:?}");
        }

        assert_eq!(enumerate_reachable(&demo_instance(0)).unwrap_err(), Error::HorizonZero);
    }

    #[test]
    fn reachable_is_deterministic_and_bounded() {
        let inst = ProblemInstance::new(demo(), 0.9, Horizon::Finite(5), bv(&[0.1, 0.45, 0.8])).unwrap();
        let a = enumerate_reachable(&inst).unwrap();
        let b = enumerate_reachable(&inst).unwrap();
        for t in 1..=5 {
            let ka: Vec<_> = a.stage(t).keys().collect();
            let kb: Vec<_> = b.stage(t).keys().collect();
            assert_eq!(ka, kb);
            assert!(a.stage(t).len() <= 6usize.pow(t as u32 - 1));
        }
    }

    #[test]
    fn reachable_entries_are_tau_iterates() {
        let p = demo();
        let init = [0.1, 0.45, 0.8];
        let inst = ProblemInstance::new(p, 0.9, Horizon::Finite(5), bv(&init)).unwrap();
        let set = enumerate_reachable(&inst).unwrap();
        let mut allowed = vec![p.p01(), p.p11()];
        for &x in init.iter().chain(&[p.p01(), p.p11()]) {
            let mut y = x;
            for _ in 0..5 {
                y = p.tau_raw(y);
                allowed.push(y);
            }
        }
        for t in 2..=5 {
            for w in set.stage(t).values() {
                for &e in w.as_slice() {
                    assert!(allowed.iter().any(|a| (a - e).abs() < 1e-12), "{e} at stage {t}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn successor_law_is_a_distribution(
            p01 in 0.0..=1.0f64, p11 in 0.0..=1.0f64,
            w in proptest::collection::vec(0.0..=1.0f64, 1..6),
            pick in 0usize..6,
        ) {
            let params = ChannelParams::new(p01, p11).unwrap();
            let v = bv(&w);
            let a = pick % w.len();
            let law = v.transition_law(&params, a).unwrap();
            prop_assert!((law.good.0 + law.bad.0 - 1.0).abs() <= 1e-15);
            let mean = law.good.0 * p11 + law.bad.0 * p01;
            prop_assert!((mean - params.tau_raw(w[a])).abs() <= 1e-15);
            for j in 0..w.len() {
                if j != a {
                    prop_assert_eq!(law.good.1.as_slice()[j], law.bad.1.as_slice()[j]);
                }
            }
        }
    }
}
