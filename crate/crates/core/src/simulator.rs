//! Seeded Monte Carlo simulation of channel states and policy runs.
//!
//! Every uniform variate is a pure function of `(master seed, replication,
//! channel, epoch)`, so two policies evaluated on the same replication see
//! exactly the same channel states, and results do not depend on how
//! replications are scheduled across threads.

use rayon::prelude::*;
use serde::Serialize;

use crate::belief::{BeliefVector, Observation};
use crate::error::{Error, Result};
use crate::instance::{Horizon, ProblemInstance};
use crate::policy::PolicySpec;

#[inline]
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Counter-based uniform variate in `[0, 1)`.
#[inline]
pub fn counter_uniform(seed: u64, rep: u64, channel: u64, epoch: u64) -> f64 {
    let mut h = splitmix64(seed);
    h = splitmix64(h ^ rep);
    h = splitmix64(h ^ channel);
    h = splitmix64(h ^ epoch);
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// True channel states, `n` rows by `horizon` epochs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplePath {
    n: usize,
    horizon: usize,
    states: Vec<u8>,
}

impl SamplePath {
    pub fn from_rows(rows: Vec<Vec<u8>>) -> Result<Self> {
        let n = rows.len();
        let horizon = rows.first().map_or(0, Vec::len);
        if n == 0 || rows.iter().any(|r| r.len() != horizon) {
            return Err(Error::DimensionMismatch { rows: n, cols: horizon, n, horizon });
        }
        Ok(Self { n, horizon, states: rows.concat() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// State of `channel` at epoch `t`, both from 0.
    #[inline]
    pub fn state(&self, channel: usize, t: usize) -> u8 {
        self.states[channel * self.horizon + t]
    }

    pub fn row(&self, channel: usize) -> &[u8] {
        &self.states[channel * self.horizon..(channel + 1) * self.horizon]
    }
}

fn draw_path(instance: &ProblemInstance, horizon: usize, seed: u64, rep: u64) -> SamplePath {
    let n = instance.n();
    let p = instance.params;
    let mut states = Vec::with_capacity(n * horizon);
    for (i, &w0) in instance.initial.as_slice().iter().enumerate() {
        let mut s = u8::from(counter_uniform(seed, rep, i as u64, 0) < w0);
        for t in 0..horizon {
            if t > 0 {
                let up = if s == 1 { p.p11() } else { p.p01() };
                s = u8::from(counter_uniform(seed, rep, i as u64, t as u64) < up);
            }
            states.push(s);
        }
    }
    SamplePath { n, horizon, states }
}

/// Channel states drawn from the initial belief and the channel chain.
pub fn sample_path(instance: &ProblemInstance, seed: u64) -> Result<SamplePath> {
    let horizon = instance.horizon.finite()?;
    Ok(draw_path(instance, horizon, seed, 0))
}

/// Actions and observations of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub actions: Vec<usize>,
    pub observations: Vec<u8>,
    pub reward: f64,
}

/// Executes `policy` against a fixed path. Sensing is error free.
pub fn run_policy(instance: &ProblemInstance, policy: &PolicySpec, path: &SamplePath) -> Result<RunRecord> {
    let horizon = instance.horizon.finite()?;
    if path.n != instance.n() || path.horizon != horizon {
        return Err(Error::DimensionMismatch { rows: path.n, cols: path.horizon, n: instance.n(), horizon });
    }
    let (record, _) = execute(instance, policy, path, true)?;
    Ok(record)
}

fn execute(instance: &ProblemInstance, policy: &PolicySpec, path: &SamplePath, keep: bool) -> Result<(RunRecord, f64)> {
    let params = instance.params;
    let mut belief: BeliefVector = instance.initial.clone();
    let mut cursor = policy.start();
    let mut record = RunRecord { actions: Vec::new(), observations: Vec::new(), reward: 0.0 };
    let mut discount = 1.0;
    let mut hits = 0.0;
    for t in 0..path.horizon {
        let a = cursor.action(t + 1, &belief)?;
        let h = path.state(a, t);
        if keep {
            record.actions.push(a);
            record.observations.push(h);
        }
        record.reward += discount * f64::from(h);
        hits += f64::from(h);
        discount *= instance.beta;
        let obs = Observation::from_bit(h);
        belief = belief.observe_unchecked(&params, a, obs);
        cursor = cursor.advance(&params, obs);
    }
    Ok((record, hits))
}

/// Sample mean with its standard error. The error is `None` when there is
/// only one sample (no degrees of freedom left).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: Option<f64>,
    pub samples: usize,
}

impl Estimate {
    fn from_samples(xs: &[f64]) -> Self {
        let k = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / k;
        let std_error = (xs.len() > 1).then(|| {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
            (var / k).sqrt()
        });
        Self { mean, std_error, samples: xs.len() }
    }

    /// `|mean - target| <= k * std_error`; a missing error only matches exactly.
    pub fn within(&self, target: f64, k: f64) -> bool {
        let diff = (self.mean - target).abs();
        match self.std_error {
            Some(se) => diff <= k * se,
            None => diff == 0.0,
        }
    }
}

fn rewards(instance: &ProblemInstance, policy: &PolicySpec, reps: usize, master_seed: u64) -> Result<Vec<f64>> {
    if reps == 0 {
        return Err(Error::ZeroReps);
    }
    let horizon = instance.horizon.finite()?;
    (0..reps)
        .into_par_iter()
        .map(|r| {
            let path = draw_path(instance, horizon, master_seed, r as u64);
            execute(instance, policy, &path, false).map(|(rec, _)| rec.reward)
        })
        .collect()
}

/// Mean discounted reward of `policy` over `reps` independent paths.
pub fn monte_carlo(instance: &ProblemInstance, policy: &PolicySpec, reps: usize, master_seed: u64) -> Result<Estimate> {
    Ok(Estimate::from_samples(&rewards(instance, policy, reps, master_seed)?))
}

/// Two policies run on common random numbers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedStats {
    pub a: Estimate,
    pub b: Estimate,
    /// Per-path `reward(a) - reward(b)`.
    pub difference: Estimate,
    /// Paths with `reward(a) + 1 < reward(b)`.
    pub violations: usize,
    pub reps: usize,
}

pub fn coupled_compare(
    instance: &ProblemInstance,
    a: &PolicySpec,
    b: &PolicySpec,
    reps: usize,
    master_seed: u64,
) -> Result<PairedStats> {
    let ra = rewards(instance, a, reps, master_seed)?;
    let rb = rewards(instance, b, reps, master_seed)?;
    let diff: Vec<f64> = ra.iter().zip(&rb).map(|(x, y)| x - y).collect();
    let violations = diff.iter().filter(|&&d| d < -1.0 - 1e-12).count();
    Ok(PairedStats {
        a: Estimate::from_samples(&ra),
        b: Estimate::from_samples(&rb),
        difference: Estimate::from_samples(&diff),
        violations,
        reps,
    })
}

/// Long-run average reward of one `steps`-epoch run, with a batch-means
/// standard error over `batches` equal blocks.
pub fn long_run_average(
    instance: &ProblemInstance,
    policy: &PolicySpec,
    steps: usize,
    batches: usize,
    seed: u64,
) -> Result<Estimate> {
    if steps == 0 || batches == 0 || steps % batches != 0 {
        return Err(Error::PreconditionViolated(format!("{steps} steps cannot be split into {batches} equal batches")));
    }
    let inst = instance.clone().with_horizon(Horizon::Finite(steps));
    let path = draw_path(&inst, steps, seed, 0);
    let (record, _) = execute(&inst, policy, &path, true)?;
    let size = steps / batches;
    let means: Vec<f64> =
        record.observations.chunks(size).map(|c| c.iter().map(|&h| f64::from(h)).sum::<f64>() / size as f64).collect();
    Ok(Estimate::from_samples(&means))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelParams;
    use crate::policy::TieBreak;

    fn inst(p01: f64, p11: f64, beta: f64, horizon: usize, init: &[f64]) -> ProblemInstance {
        ProblemInstance::new(
            ChannelParams::new(p01, p11).unwrap(),
            beta,
            Horizon::Finite(horizon),
            BeliefVector::new(init.to_vec()).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn uniforms_are_deterministic_and_in_range() {
        let a = counter_uniform(7, 1, 2, 3);
        assert_eq!(a, counter_uniform(7, 1, 2, 3));
        assert_ne!(a, counter_uniform(7, 1, 2, 4));
        assert_ne!(a, counter_uniform(7, 2, 1, 3));
        for i in 0..1000 {
            let u = counter_uniform(1, i, 0, 0);
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn absorbing_and_alternating_paths() {
        let frozen = sample_path(&inst(0.0, 1.0, 1.0, 20, &[0.5; 4]), 3).unwrap();
        for i in 0..4 {
            assert!(frozen.row(i).iter().all(|&s| s == frozen.row(i)[0]));
        }
        let flip = sample_path(&inst(1.0, 0.0, 1.0, 20, &[0.5; 4]), 3).unwrap();
        for i in 0..4 {
            assert!(flip.row(i).windows(2).all(|w| w[0] != w[1]));
        }
        assert_eq!(
            sample_path(&inst(0.3, 0.9, 1.0, 20, &[0.5; 4]), 9).unwrap(),
            sample_path(&inst(0.3, 0.9, 1.0, 20, &[0.5; 4]), 9).unwrap()
        );
    }

    #[test]
    fn run_on_constant_paths() {
        let instance = inst(0.3, 0.9, 0.9, 5, &[0.2, 0.7, 0.4]);
        let good = SamplePath::from_rows(vec![vec![1; 5]; 3]).unwrap();
        let bad = SamplePath::from_rows(vec![vec![0; 5]; 3]).unwrap();
        let expected: f64 = (0..5).map(|t| 0.9f64.powi(t)).sum();
        for policy in [PolicySpec::myopic(), PolicySpec::FixedFirstAction { first: 2, then: TieBreak::LowestIndex }] {
            let r = run_policy(&instance, &policy, &good).unwrap();
            assert!((r.reward - expected).abs() < 1e-12);
            assert_eq!(run_policy(&instance, &policy, &bad).unwrap().reward, 0.0);
        }
        let short = SamplePath::from_rows(vec![vec![1; 4]; 3]).unwrap();
        assert!(matches!(run_policy(&instance, &PolicySpec::myopic(), &short), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn observations_match_true_states() {
        let instance = inst(0.2, 0.8, 1.0, 30, &[0.3, 0.5, 0.6]);
        for seed in 0..20 {
            let path = sample_path(&instance, seed).unwrap();
            let r = run_policy(&instance, &PolicySpec::myopic(), &path).unwrap();
            for t in 0..30 {
                assert_eq!(r.observations[t], path.state(r.actions[t], t));
            }
            let total: f64 = r.observations.iter().map(|&h| f64::from(h)).sum();
            assert_eq!(total, r.reward);
        }
    }

    #[test]
    fn monte_carlo_matches_demo_value() {
        let instance = inst(0.3, 0.9, 1.0, 2, &[0.5, 0.6]);
        let est = monte_carlo(&instance, &PolicySpec::myopic(), 100_000, 42).unwrap();
        assert!(est.within(1.38, 3.0), "{est:?}");
        assert_eq!(est, monte_carlo(&instance, &PolicySpec::myopic(), 100_000, 42).unwrap());
        let one = monte_carlo(&instance, &PolicySpec::myopic(), 1, 42).unwrap();
        assert_eq!(one.std_error, None);
        assert_eq!(monte_carlo(&instance, &PolicySpec::myopic(), 0, 42).unwrap_err(), Error::ZeroReps);
    }

    #[test]
    fn identical_policies_have_zero_difference() {
        let instance = inst(0.3, 0.9, 1.0, 6, &[0.1, 0.5, 0.6]);
        let s = coupled_compare(&instance, &PolicySpec::myopic(), &PolicySpec::myopic(), 2000, 5).unwrap();
        assert_eq!(s.difference.mean, 0.0);
        assert_eq!(s.violations, 0);
    }

    #[test]
    fn state_frequency_converges_to_stationary() {
        let instance = inst(0.3, 0.9, 1.0, 100_000, &[0.5]);
        let path = sample_path(&instance, 11).unwrap();
        let freq = path.row(0).iter().map(|&s| f64::from(s)).sum::<f64>() / 100_000.0;
        assert!((freq - 0.75).abs() < 0.01, "{freq}");
    }
}
