//! Backward induction over the reachable belief set.

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::Serialize;

use crate::belief::{enumerate_reachable, BeliefKey, BeliefVector, Observation};
use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::policy::{myopic_candidates, OrderedList, PolicyCursor, PolicySpec, PolicyTable};

/// Solved quantities at one reachable state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateValue {
    pub belief: BeliefVector,
    pub value: f64,
    /// Action values, indexed by channel.
    pub q: Vec<f64>,
    /// Channels whose action value is within the decision tolerance of the maximum.
    pub optimal: Vec<usize>,
}

/// Stage-indexed optimal values over the reachable set.
#[derive(Debug, Clone)]
pub struct ValueTable {
    quantum: f64,
    stages: Vec<IndexMap<BeliefKey, StateValue>>,
}

impl ValueTable {
    pub fn horizon(&self) -> usize {
        self.stages.len()
    }

    /// States of epoch `t`, numbered from 1.
    pub fn stage(&self, t: usize) -> &IndexMap<BeliefKey, StateValue> {
        &self.stages[t - 1]
    }

    pub fn get(&self, t: usize, w: &BeliefVector) -> Option<&StateValue> {
        self.stages.get(t.checked_sub(1)?)?.get(&w.key_unchecked(self.quantum))
    }

    /// Optimal value of the initial state.
    pub fn initial(&self) -> &StateValue {
        &self.stages[0][0]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.stages.iter().map(IndexMap::len).collect()
    }

    /// Table policy that takes the lowest-indexed optimal action everywhere.
    pub fn greedy_policy(&self) -> PolicySpec {
        let mut table = PolicyTable { quantum: self.quantum, ..Default::default() };
        for (i, stage) in self.stages.iter().enumerate() {
            for (key, sv) in stage {
                table.actions.insert((i + 1, key.clone()), sv.optimal[0]);
            }
        }
        PolicySpec::Table(table)
    }
}

#[inline]
fn expected_next(
    params: &ChannelParams,
    w: &BeliefVector,
    a: usize,
    quantum: f64,
    next: &IndexMap<BeliefKey, StateValue>,
    stage: usize,
) -> Result<f64> {
    let wa = w.as_slice()[a];
    let mut total = 0.0;
    for (prob, obs) in [(wa, Observation::Good), (1.0 - wa, Observation::Bad)] {
        let succ = w.observe_unchecked(params, a, obs);
        let v = next.get(&succ.key_unchecked(quantum)).ok_or(Error::MissingSuccessorValue { stage })?.value;
        total += prob * v;
    }
    Ok(total)
}

/// Value of probing `a` at epoch `t` and acting optimally afterwards.
/// Needs the stage `t + 1` values in `table` unless `t` is the last epoch.
pub fn q_value(instance: &ProblemInstance, t: usize, w: &BeliefVector, a: usize, table: &ValueTable) -> Result<f64> {
    let horizon = instance.horizon.finite()?;
    if t == 0 || t > horizon {
        return Err(Error::StageBeyondHorizon { t, horizon });
    }
    let wa = w.get(a)?;
    if t == horizon {
        return Ok(wa);
    }
    let next = table.stages.get(t).ok_or(Error::MissingSuccessorValue { stage: t + 1 })?;
    let future = expected_next(&instance.params, w, a, table.quantum, next, t + 1)?;
    Ok(wa + instance.beta * future)
}

fn solve_state(w: &BeliefVector, q: Vec<f64>, tol: f64) -> StateValue {
    let value = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let optimal = (0..q.len()).filter(|&a| q[a] >= value - tol).collect();
    StateValue { belief: w.clone(), value, q, optimal }
}

/// Optimal finite-horizon values by backward induction.
pub fn solve_finite(instance: &ProblemInstance) -> Result<ValueTable> {
    let horizon = instance.horizon.finite()?;
    let reachable = enumerate_reachable(instance)?;
    let quantum = instance.tol.key_quantum;
    let tol = instance.tol.decision;
    let params = instance.params;
    let beta = instance.beta;
    let n = instance.n();

    let mut stages: Vec<IndexMap<BeliefKey, StateValue>> = Vec::with_capacity(horizon);
    for t in (1..=horizon).rev() {
        let states: Vec<(&BeliefKey, &BeliefVector)> = reachable.stage(t).iter().collect();
        let next = stages.last();
        let solved: Vec<StateValue> = states
            .par_iter()
            .map(|(_, w)| {
                let q = (0..n)
                    .map(|a| {
                        let wa = w.as_slice()[a];
                        match next {
                            None => Ok(wa),
                            Some(next) => Ok(wa + beta * expected_next(&params, w, a, quantum, next, t + 1)?),
                        }
                    })
                    .collect::<Result<Vec<f64>>>()?;
                Ok(solve_state(w, q, tol))
            })
            .collect::<Result<_>>()?;
        stages.push(states.iter().map(|(k, _)| (*k).clone()).zip(solved).collect());
    }
    stages.reverse();
    Ok(ValueTable { quantum, stages })
}

#[derive(Clone)]
struct Node<'a> {
    belief: BeliefVector,
    cursor: PolicyCursor<'a>,
    action: usize,
    good: usize,
    bad: usize,
}

type NodeKey = (BeliefKey, Option<OrderedList>);

/// Expected discounted reward of `policy` from the initial belief.
pub fn policy_value_finite(instance: &ProblemInstance, policy: &PolicySpec) -> Result<f64> {
    let horizon = instance.horizon.finite()?;
    let quantum = instance.tol.key_quantum;
    let params = instance.params;

    // Forward pass: states the policy can visit, together with its own state.
    let root = Node { belief: instance.initial.clone(), cursor: policy.start(), action: 0, good: 0, bad: 0 };
    let mut stages: Vec<Vec<Node>> = vec![vec![root]];
    for t in 1..=horizon {
        let mut next: IndexMap<NodeKey, Node> = IndexMap::new();
        let current = stages.last_mut().expect("nonempty");
        for node in current.iter_mut() {
            let a = node.cursor.action(t, &node.belief)?;
            node.action = a;
            if t == horizon {
                continue;
            }
            for obs in [Observation::Good, Observation::Bad] {
                let belief = node.belief.observe_unchecked(&params, a, obs);
                let cursor = node.cursor.advance(&params, obs);
                let key = (belief.key_unchecked(quantum), cursor.list().cloned());
                let entry = next.entry(key);
                let idx = entry.index();
                entry.or_insert(Node { belief, cursor, action: 0, good: 0, bad: 0 });
                match obs {
                    Observation::Good => node.good = idx,
                    Observation::Bad => node.bad = idx,
                }
            }
        }
        if t < horizon {
            stages.push(next.into_values().collect());
        }
    }

    // Backward pass with the policy's action in place of the max.
    let mut values: Vec<f64> = Vec::new();
    for stage in stages.iter().rev() {
        values = stage
            .iter()
            .map(|node| {
                let wa = node.belief.as_slice()[node.action];
                if values.is_empty() {
                    wa
                } else {
                    wa + instance.beta * (wa * values[node.good] + (1.0 - wa) * values[node.bad])
                }
            })
            .collect();
    }
    Ok(values[0])
}

/// Outcome of checking the myopic rule against the optimal action sets.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Holds {
        states_checked: usize,
    },
    Violated {
        stage: usize,
        belief: Vec<f64>,
        /// Myopic channel that falls short of the optimum.
        action: usize,
        /// Optimal value minus the myopic action's q-value.
        gap: f64,
        optimal: Vec<usize>,
    },
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds { .. })
    }
}

/// Checks that every myopic action (every channel tied at the top belief)
/// is optimal at every reachable state. Reports the first violation in
/// stage order.
pub fn verify_myopic_optimality(instance: &ProblemInstance) -> Result<Verdict> {
    let table = solve_finite(instance)?;
    Ok(verify_table(&table, instance.tol.decision, instance.tol.validity))
}

/// [`verify_myopic_optimality`] on an already solved table.
pub fn verify_table(table: &ValueTable, decision_tol: f64, tie_tol: f64) -> Verdict {
    let mut checked = 0;
    for (i, stage) in table.stages.iter().enumerate() {
        for sv in stage.values() {
            checked += 1;
            for a in myopic_candidates(sv.belief.as_slice(), tie_tol) {
                let gap = sv.value - sv.q[a];
                if gap > decision_tol {
                    return Verdict::Violated {
                        stage: i + 1,
                        belief: sv.belief.as_slice().to_vec(),
                        action: a,
                        gap,
                        optimal: sv.optimal.clone(),
                    };
                }
            }
        }
    }
    Verdict::Holds { states_checked: checked }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Horizon;
    use crate::policy::TieBreak;

    fn demo(horizon: usize) -> ProblemInstance {
        ProblemInstance::new(
            ChannelParams::new(0.3, 0.9).unwrap(),
            1.0,
            Horizon::Finite(horizon),
            BeliefVector::new(vec![0.5, 0.6]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn q_value_examples() {
        let inst = demo(2);
        let table = solve_finite(&inst).unwrap();
        let w = inst.initial.clone();
        assert!((q_value(&inst, 1, &w, 1, &table).unwrap() - 1.38).abs() < 1e-12);
        assert!((q_value(&inst, 1, &w, 0, &table).unwrap() - 1.28).abs() < 1e-12);
        assert_eq!(q_value(&inst, 2, &w, 0, &table).unwrap(), 0.5);
        assert!(q_value(&inst, 3, &w, 0, &table).is_err());
    }

    #[test]
    fn missing_successor_is_reported() {
        let inst = demo(2);
        let table = solve_finite(&inst).unwrap();
        let stray = BeliefVector::new(vec![0.11, 0.12]).unwrap();
        assert_eq!(q_value(&inst, 1, &stray, 0, &table), Err(Error::MissingSuccessorValue { stage: 2 }));
    }

    #[test]
    fn solve_finite_demo() {
        let table = solve_finite(&demo(2)).unwrap();
        let init = table.initial();
        assert!((init.value - 1.38).abs() < 1e-12);
        assert_eq!(init.optimal, vec![1]);
        for sv in table.stage(2).values() {
            let max = sv.belief.as_slice().iter().copied().fold(0.0, f64::max);
            assert_eq!(sv.value, max);
        }
        assert_eq!(solve_finite(&demo(0)).unwrap_err(), Error::HorizonZero);
    }

    #[test]
    fn policy_values_on_demo() {
        let inst = demo(2);
        let v = policy_value_finite(&inst, &PolicySpec::myopic()).unwrap();
        assert!((v - 1.38).abs() < 1e-12);
        let first = PolicySpec::FixedFirstAction { first: 0, then: TieBreak::LowestIndex };
        assert!((policy_value_finite(&inst, &first).unwrap() - 1.28).abs() < 1e-12);
    }

    #[test]
    fn greedy_table_policy_attains_optimum() {
        let inst = ProblemInstance::counterexample();
        let table = solve_finite(&inst).unwrap();
        let v = policy_value_finite(&inst, &table.greedy_policy()).unwrap();
        assert!((v - table.initial().value).abs() < 1e-12);
    }

    #[test]
    fn empty_table_is_undefined() {
        let inst = demo(2);
        let policy = PolicySpec::Table(PolicyTable { quantum: 1e-12, ..Default::default() });
        assert_eq!(policy_value_finite(&inst, &policy), Err(Error::PolicyUndefined { stage: 1 }));
    }

    #[test]
    fn counterexample_verdict() {
        let verdict = verify_myopic_optimality(&ProblemInstance::counterexample()).unwrap();
        match verdict {
            Verdict::Violated { stage, action, gap, optimal, .. } => {
                assert_eq!(stage, 1);
                assert_eq!(action, 3);
                assert_eq!(optimal, vec![2]);
                assert!((gap - 0.001105).abs() < 1e-6, "gap {gap}");
            }
            other => panic!("expected violation, got {other:?}"),
        }
    }

    #[test]
    fn bellman_consistency() {
        let inst = ProblemInstance::new(
            ChannelParams::new(0.2, 0.7).unwrap(),
            0.8,
            Horizon::Finite(5),
            BeliefVector::new(vec![0.1, 0.5, 0.3]).unwrap(),
        )
        .unwrap();
        let table = solve_finite(&inst).unwrap();
        for t in 1..=5 {
            for sv in table.stage(t).values() {
                let best =
                    (0..3).map(|a| q_value(&inst, t, &sv.belief, a, &table).unwrap()).fold(f64::NEG_INFINITY, f64::max);
                assert!((best - sv.value).abs() <= 1e-12);
            }
        }
    }
}
