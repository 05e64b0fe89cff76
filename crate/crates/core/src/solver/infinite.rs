//! Infinite-horizon problems on a truncated reachable belief set.
//!
//! An unobserved channel's belief converges to the stationary belief at
//! rate `|p11 - p01|`. Entries within the snap distance of it are replaced
//! by it exactly, which leaves finitely many reachable belief vectors.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::belief::{BeliefKey, BeliefVector, Observation};
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;

pub const DEFAULT_MAX_STATES: usize = 4_000_000;
pub const DEFAULT_MAX_ITERATIONS: usize = 2_000_000;

/// Finite belief-state MDP obtained by snapping converged entries.
#[derive(Debug, Clone)]
pub struct TruncatedModel {
    n: usize,
    quantum: f64,
    snap: f64,
    stationary: f64,
    states: Vec<BeliefVector>,
    index: HashMap<BeliefKey, usize>,
    /// `(good, bad)` successor of state `s` under action `a` at `s * n + a`.
    succ: Vec<(u32, u32)>,
    initial: usize,
    reference: usize,
}

impl TruncatedModel {
    /// Reachable set from the initial belief and from the all-stationary
    /// reference vector, under every action and observation.
    pub fn build(instance: &ProblemInstance, max_states: usize) -> Result<Self> {
        let params = instance.params;
        let stationary = params.stationary_belief()?.value();
        let n = instance.n();
        let mut model = Self {
            n,
            quantum: instance.tol.key_quantum,
            snap: instance.tol.snap,
            stationary,
            states: Vec::new(),
            index: HashMap::new(),
            succ: Vec::new(),
            initial: 0,
            reference: 0,
        };
        model.initial = model.intern(instance.initial.as_slice().to_vec(), max_states)?;
        model.reference = model.intern(vec![stationary; n], max_states)?;

        let mut cursor = 0;
        while cursor < model.states.len() {
            let w = model.states[cursor].clone();
            for a in 0..n {
                let good = w.observe_unchecked(&params, a, Observation::Good);
                let bad = w.observe_unchecked(&params, a, Observation::Bad);
                let g = model.intern(good.as_slice().to_vec(), max_states)?;
                let b = model.intern(bad.as_slice().to_vec(), max_states)?;
                model.succ.push((g as u32, b as u32));
            }
            cursor += 1;
        }
        Ok(model)
    }

    fn snapped(&self, mut entries: Vec<f64>) -> BeliefVector {
        for x in entries.iter_mut() {
            if (*x - self.stationary).abs() < self.snap {
                *x = self.stationary;
            }
        }
        BeliefVector::from_raw(entries)
    }

    fn intern(&mut self, entries: Vec<f64>, max_states: usize) -> Result<usize> {
        let w = self.snapped(entries);
        let key = w.key_unchecked(self.quantum);
        if let Some(&i) = self.index.get(&key) {
            return Ok(i);
        }
        if self.states.len() >= max_states {
            return Err(Error::StateLimitExceeded { limit: max_states });
        }
        let i = self.states.len();
        self.states.push(w);
        self.index.insert(key, i);
        Ok(i)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[BeliefVector] {
        &self.states
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn reference(&self) -> usize {
        self.reference
    }

    /// Index of `w` after snapping, if it is in the model.
    pub fn lookup(&self, w: &BeliefVector) -> Option<usize> {
        let w = self.snapped(w.as_slice().to_vec());
        self.index.get(&w.key_unchecked(self.quantum)).copied()
    }

    /// `(good, bad)` successor indices of `state` under `action`.
    pub fn successors(&self, state: usize, action: usize) -> (usize, usize) {
        let (g, b) = self.succ[state * self.n + action];
        (g as usize, b as usize)
    }

    /// Applies `max_a { w_a + beta * E[v(next)] }` with ties resolved to the
    /// lowest index, writing values into `out` and actions into `greedy`.
    fn bellman(&self, beta: f64, v: &[f64], out: &mut [f64], greedy: &mut [usize]) {
        out.par_iter_mut().zip(greedy.par_iter_mut()).enumerate().for_each(|(s, (o, g))| {
            let w = self.states[s].as_slice();
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            for (a, &wa) in w.iter().enumerate() {
                let (gi, bi) = self.succ[s * self.n + a];
                let q = wa + beta * (wa * v[gi as usize] + (1.0 - wa) * v[bi as usize]);
                if q > best {
                    best = q;
                    arg = a;
                }
            }
            *o = best;
            *g = arg;
        });
    }
}

/// Converged discounted values on a truncated model.
#[derive(Debug, Clone)]
pub struct DiscountedSolution {
    pub model: TruncatedModel,
    pub beta: f64,
    pub values: Vec<f64>,
    pub greedy: Vec<usize>,
    /// Sup-norm distance between successive iterates.
    pub residuals: Vec<f64>,
}

impl DiscountedSolution {
    pub fn initial_value(&self) -> f64 {
        self.values[self.model.initial]
    }

    pub fn value(&self, w: &BeliefVector) -> Option<f64> {
        self.model.lookup(w).map(|i| self.values[i])
    }

    pub fn iterations(&self) -> usize {
        self.residuals.len()
    }
}

/// Value iteration for the discounted problem.
#[derive(Debug, Clone)]
pub struct ValueIteration {
    /// Target bound on the distance to the true fixed point.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub max_states: usize,
}

impl ValueIteration {
    pub fn new(tolerance: f64) -> Self {
        Self { tolerance, max_iterations: DEFAULT_MAX_ITERATIONS, max_states: DEFAULT_MAX_STATES }
    }

    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    pub fn with_max_states(mut self, n: usize) -> Self {
        self.max_states = n;
        self
    }

    pub fn solve(&self, instance: &ProblemInstance) -> Result<DiscountedSolution> {
        self.check(instance.beta)?;
        let model = TruncatedModel::build(instance, self.max_states)?;
        self.solve_on(model, instance.beta, None)
    }

    fn check(&self, beta: f64) -> Result<()> {
        if !(beta < 1.0) {
            return Err(Error::BetaNotLessThanOne(beta));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::NonpositiveTolerance(self.tolerance));
        }
        Ok(())
    }

    /// Iterates from `start` (zero when absent) until successive iterates
    /// are within `tol * (1 - beta) / (2 * beta)`.
    pub fn solve_on(&self, model: TruncatedModel, beta: f64, start: Option<Vec<f64>>) -> Result<DiscountedSolution> {
        self.check(beta)?;
        let m = model.len();
        let mut v = start.unwrap_or_else(|| vec![0.0; m]);
        assert_eq!(v.len(), m, "warm start must cover every model state");
        let mut next = vec![0.0; m];
        let mut greedy = vec![0; m];
        let mut residuals = Vec::new();
        let stop = if beta == 0.0 { f64::INFINITY } else { self.tolerance * (1.0 - beta) / (2.0 * beta) };
        loop {
            model.bellman(beta, &v, &mut next, &mut greedy);
            let residual = v.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            residuals.push(residual);
            std::mem::swap(&mut v, &mut next);
            if residual <= stop {
                break;
            }
            if residuals.len() >= self.max_iterations {
                return Err(Error::NotConverged { iterations: residuals.len(), residual });
            }
        }
        Ok(DiscountedSolution { model, beta, values: v, greedy, residuals })
    }
}

/// Discounted fixed point within `tol` of the true values.
pub fn solve_discounted(instance: &ProblemInstance, tol: f64) -> Result<DiscountedSolution> {
    ValueIteration::new(tol).solve(instance)
}

/// Gain and bias of the average-reward optimality equation.
#[derive(Debug, Clone)]
pub struct AverageRewardSolution {
    pub model: TruncatedModel,
    pub gain: f64,
    /// Relative values, zero at the all-stationary reference state.
    pub bias: Vec<f64>,
    /// Span of `T h - h` at termination; the gain is within half of it.
    pub residual: f64,
    pub iterations: usize,
    pub greedy: Vec<usize>,
    /// `1 / (1 - |p11 - p01|)`.
    pub bias_bound: f64,
}

impl AverageRewardSolution {
    pub fn bias_at(&self, w: &BeliefVector) -> Option<f64> {
        self.model.lookup(w).map(|i| self.bias[i])
    }

    pub fn max_abs_bias(&self) -> f64 {
        self.bias.iter().fold(0.0, |m, h| m.max(h.abs()))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScaledDiscountedValue {
    pub beta: f64,
    /// `(1 - beta) * V_beta(initial)`.
    pub scaled: f64,
}

/// Relative value iteration with an aperiodicity transform.
#[derive(Debug, Clone)]
pub struct RelativeValueIteration {
    pub tolerance: f64,
    /// Weight on the Bellman update; the remainder stays on the previous iterate.
    pub damping: f64,
    pub max_iterations: usize,
    pub max_states: usize,
}

impl RelativeValueIteration {
    pub fn new(tolerance: f64) -> Self {
        Self { tolerance, damping: 0.5, max_iterations: DEFAULT_MAX_ITERATIONS, max_states: DEFAULT_MAX_STATES }
    }

    pub fn with_max_states(mut self, n: usize) -> Self {
        self.max_states = n;
        self
    }

    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    pub fn solve(&self, instance: &ProblemInstance) -> Result<AverageRewardSolution> {
        let params = instance.params;
        let ergodicity = (params.p11() - params.p00()).abs();
        if !(ergodicity < 1.0) {
            return Err(Error::ErgodicityViolated(format!("|p11 - p00| = {ergodicity}")));
        }
        // Deterministic alternation keeps the channels' relative phase
        // forever, so the gain would depend on the starting state.
        let correlation = params.correlation().abs();
        if !(correlation < 1.0) {
            return Err(Error::ErgodicityViolated(format!("|p11 - p01| = {correlation}")));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::NonpositiveTolerance(self.tolerance));
        }
        let model = TruncatedModel::build(instance, self.max_states)?;
        let m = model.len();
        let reference = model.reference;
        let mut h = vec![0.0; m];
        let mut th = vec![0.0; m];
        let mut greedy = vec![0; m];
        let alpha = self.damping;
        for iteration in 1..=self.max_iterations {
            model.bellman(1.0, &h, &mut th, &mut greedy);
            let (lo, hi) = h
                .iter()
                .zip(&th)
                .map(|(a, b)| b - a)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)));
            let span = hi - lo;
            if span <= self.tolerance {
                return Ok(AverageRewardSolution {
                    gain: 0.5 * (lo + hi),
                    bias: h,
                    residual: span,
                    iterations: iteration,
                    greedy,
                    bias_bound: params.bias_bound(),
                    model,
                });
            }
            let anchor = h[reference] + alpha * (th[reference] - h[reference]);
            h.par_iter_mut().zip(th.par_iter()).for_each(|(x, &t)| *x = *x + alpha * (t - *x) - anchor);
            if iteration == self.max_iterations {
                return Err(Error::NotConverged { iterations: iteration, residual: span });
            }
        }
        unreachable!("loop returns")
    }
}

/// Long-run average reward by relative value iteration.
pub fn solve_average(instance: &ProblemInstance, tol: f64) -> Result<AverageRewardSolution> {
    RelativeValueIteration::new(tol).solve(instance)
}

/// `(1 - beta) V_beta(initial)` for each discount, warm-started from the
/// average-reward solution `J / (1 - beta) + h`. As `beta -> 1` these
/// approach the gain.
pub fn vanishing_discount(avg: &AverageRewardSolution, betas: &[f64], tol: f64) -> Result<Vec<ScaledDiscountedValue>> {
    betas
        .iter()
        .map(|&beta| {
            let start = avg.bias.iter().map(|h| h + avg.gain / (1.0 - beta)).collect();
            let sol = ValueIteration::new(tol).solve_on(avg.model.clone(), beta, Some(start))?;
            Ok(ScaledDiscountedValue { beta, scaled: (1.0 - beta) * sol.initial_value() })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelParams;
    use crate::instance::Horizon;

    fn inst(p01: f64, p11: f64, beta: f64, init: &[f64]) -> ProblemInstance {
        ProblemInstance::new(
            ChannelParams::new(p01, p11).unwrap(),
            beta,
            Horizon::Infinite,
            BeliefVector::new(init.to_vec()).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn zero_discount_is_immediate_reward() {
        let sol = solve_discounted(&inst(0.3, 0.9, 0.0, &[0.2, 0.45, 0.1]), 1e-9).unwrap();
        for (w, v) in sol.model.states().iter().zip(&sol.values) {
            let max = w.as_slice().iter().copied().fold(0.0, f64::max);
            assert_eq!(*v, max);
        }
        assert_eq!(sol.iterations(), 1);
    }

    #[test]
    fn discounted_values_are_bounded() {
        let sol = solve_discounted(&inst(0.3, 0.9, 0.9, &[0.2, 0.45]), 1e-9).unwrap();
        assert!(sol.values.iter().all(|&v| v <= 10.0 + 1e-9));
        for pair in sol.residuals.windows(2) {
            if pair[0] > 1e-13 {
                assert!(pair[1] <= 0.9 * pair[0] + 1e-13, "{pair:?}");
            }
        }
    }

    #[test]
    fn discounted_precondition_errors() {
        assert_eq!(solve_discounted(&inst(0.3, 0.9, 1.0, &[0.5]), 1e-9).unwrap_err(), Error::BetaNotLessThanOne(1.0));
        assert_eq!(solve_discounted(&inst(0.3, 0.9, 0.5, &[0.5]), 0.0).unwrap_err(), Error::NonpositiveTolerance(0.0));
    }

    #[test]
    fn single_channel_gain_is_stationary_probability() {
        let sol = solve_average(&inst(0.3, 0.9, 1.0, &[0.5]), 1e-10).unwrap();
        assert!((sol.gain - 0.75).abs() < 1e-6, "gain {}", sol.gain);
        assert_eq!(sol.bias[sol.model.reference()], 0.0);

        let iid = solve_average(&inst(0.5, 0.5, 1.0, &[0.5]), 1e-10).unwrap();
        assert!((iid.gain - 0.5).abs() < 1e-9);
    }

    #[test]
    fn average_precondition_errors() {
        // p01 = p11 = 1: |p11 - p00| = 1.
        assert_eq!(
            solve_average(&inst(1.0, 1.0, 1.0, &[0.5]), 1e-9).unwrap_err(),
            Error::ErgodicityViolated("|p11 - p00| = 1".into())
        );
        assert_eq!(solve_average(&inst(0.3, 0.9, 1.0, &[0.5]), -1.0).unwrap_err(), Error::NonpositiveTolerance(-1.0));
    }

    #[test]
    fn alternating_channel_is_rejected() {
        assert!(matches!(solve_average(&inst(1.0, 0.0, 1.0, &[0.3, 0.8]), 1e-9), Err(Error::ErgodicityViolated(_))));
        // The discounted problem is still well posed: only finitely many beliefs occur.
        let sol = solve_discounted(&inst(1.0, 0.0, 0.9, &[0.3, 0.8]), 1e-9).unwrap();
        assert!(sol.model.len() < 100);
    }

    #[test]
    fn state_limit_is_enforced() {
        let err =
            ValueIteration::new(1e-9).with_max_states(5).solve(&inst(0.3, 0.9, 0.9, &[0.1, 0.2, 0.3])).unwrap_err();
        assert_eq!(err, Error::StateLimitExceeded { limit: 5 });
    }

    #[test]
    fn vanishing_discount_approaches_gain() {
        let avg = solve_average(&inst(0.2, 0.7, 1.0, &[0.3, 0.6]), 1e-10).unwrap();
        let scaled = vanishing_discount(&avg, &[0.9, 0.99, 0.999], 1e-8).unwrap();
        let errs: Vec<f64> = scaled.iter().map(|s| (s.scaled - avg.gain).abs()).collect();
        assert!(errs[2] < 1e-2);
        assert!(errs[2] <= errs[0] + 1e-12);
    }
}
