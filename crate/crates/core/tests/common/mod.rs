//! Independent oracles and instance generators shared by integration tests.
#![allow(dead_code)]

use chansel::{BeliefVector, ChannelParams, Horizon, ProblemInstance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn instance(p01: f64, p11: f64, beta: f64, horizon: Horizon, init: &[f64]) -> ProblemInstance {
    ProblemInstance::new(
        ChannelParams::new(p01, p11).unwrap(),
        beta,
        horizon,
        BeliefVector::new(init.to_vec()).unwrap(),
    )
    .unwrap()
}

/// `(p01, p11)` with `p11 >= p01`.
pub fn positive_params(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let (a, b): (f64, f64) = (rng.gen(), rng.gen());
    (a.min(b), a.max(b))
}

/// `(p01, p11)` with `p11 < p01`.
pub fn negative_params(rng: &mut ChaCha8Rng) -> (f64, f64) {
    loop {
        let (a, b): (f64, f64) = (rng.gen(), rng.gen());
        if a != b {
            return (a.max(b), a.min(b));
        }
    }
}

pub fn beliefs(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen()).collect()
}

pub fn ascending(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut w = beliefs(rng, n);
    w.sort_by(f64::total_cmp);
    w
}

/// Expected discounted reward of the myopic policy (highest belief, lowest
/// index on ties) by summing over every `n x T` matrix of channel states,
/// weighted by its probability under the chain started from `init`.
/// Shares no code with the solver.
pub fn brute_force_myopic(p01: f64, p11: f64, beta: f64, horizon: usize, init: &[f64]) -> f64 {
    let n = init.len();
    let bits = n * horizon;
    assert!(bits <= 20, "2^{bits} paths is too many");
    let mut total = 0.0;
    for mask in 0u32..(1 << bits) {
        let state = |i: usize, t: usize| (mask >> (i * horizon + t)) & 1;
        let mut prob = 1.0;
        for (i, &w0) in init.iter().enumerate() {
            prob *= if state(i, 0) == 1 { w0 } else { 1.0 - w0 };
            for t in 1..horizon {
                let up = if state(i, t - 1) == 1 { p11 } else { p01 };
                prob *= if state(i, t) == 1 { up } else { 1.0 - up };
            }
        }
        if prob == 0.0 {
            continue;
        }
        let mut w = init.to_vec();
        let mut reward = 0.0;
        let mut discount = 1.0;
        for t in 0..horizon {
            let mut a = 0;
            for i in 1..n {
                if w[i] > w[a] + 1e-12 {
                    a = i;
                }
            }
            let h = state(a, t);
            reward += discount * h as f64;
            discount *= beta;
            for (i, x) in w.iter_mut().enumerate() {
                *x = if i == a {
                    if h == 1 {
                        p11
                    } else {
                        p01
                    }
                } else {
                    *x * p11 + (1.0 - *x) * p01
                };
            }
        }
        total += prob * reward;
    }
    total
}
