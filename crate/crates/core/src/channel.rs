//! Two-state Markov (Gilbert-Elliott) channel model.
//!
//! A channel is either bad (state 0) or good (state 1). Its evolution is
//! fixed by two numbers: `p01`, the probability of moving from bad to good,
//! and `p11`, the probability of staying good. The belief about a channel
//! that is not observed evolves through the one-step operator
//! `tau(w) = w * p11 + (1 - w) * p01`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed when validating probabilities that came out of float arithmetic.
pub const VALIDITY_TOLERANCE: f64 = 1e-12;

/// Correlation regime of a channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `p11 >= p01`: `tau` is nondecreasing.
    PositivelyCorrelated,
    /// `p11 < p01`: `tau` is decreasing.
    NegativelyCorrelated,
}

/// Probability that a channel is in the good state.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Belief(f64);

impl Belief {
    /// Validates `value` against `[0, 1]`, clamping float noise up to
    /// [`VALIDITY_TOLERANCE`].
    pub fn new(value: f64) -> Result<Self> {
        check_probability("belief", value).map(Belief)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<Belief> for f64 {
    fn from(b: Belief) -> f64 {
        b.0
    }
}

pub(crate) fn check_probability(what: &'static str, value: f64) -> Result<f64> {
    if !value.is_finite() || value < -VALIDITY_TOLERANCE || value > 1.0 + VALIDITY_TOLERANCE {
        return Err(Error::InvalidProbability { what, value });
    }
    Ok(value.clamp(0.0, 1.0))
}

/// Transition probabilities of one channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    p01: f64,
    p11: f64,
}

impl ChannelParams {
    pub fn new(p01: f64, p11: f64) -> Result<Self> {
        Ok(Self { p01: check_probability("p01", p01)?, p11: check_probability("p11", p11)? })
    }

    pub fn p01(&self) -> f64 {
        self.p01
    }

    pub fn p11(&self) -> f64 {
        self.p11
    }

    pub fn p00(&self) -> f64 {
        1.0 - self.p01
    }

    pub fn p10(&self) -> f64 {
        1.0 - self.p11
    }

    /// Equal parameters count as positively correlated.
    pub fn regime(&self) -> Regime {
        if self.p11 >= self.p01 {
            Regime::PositivelyCorrelated
        } else {
            Regime::NegativelyCorrelated
        }
    }

    /// `p11 - p01`, the slope of `tau` and its contraction factor in absolute value.
    pub fn correlation(&self) -> f64 {
        self.p11 - self.p01
    }

    /// One-step belief update for an unobserved channel.
    pub fn tau(&self, w: Belief) -> Belief {
        Belief(self.tau_raw(w.0))
    }

    /// `tau` on a raw float; callers guarantee `w` is a probability.
    #[inline]
    pub(crate) fn tau_raw(&self, w: f64) -> f64 {
        w * self.p11 + (1.0 - w) * self.p01
    }

    /// `k`-fold composition of `tau`; `k = 0` is the identity.
    pub fn tau_k(&self, w: Belief, k: usize) -> Belief {
        let mut x = w.0;
        for _ in 0..k {
            x = self.tau_raw(x);
        }
        Belief(x)
    }

    /// Fixed point of `tau`, the limiting belief of an unobserved channel.
    pub fn stationary_belief(&self) -> Result<Belief> {
        let denom = 1.0 - self.p11 + self.p01;
        if denom == 0.0 {
            return Err(Error::DegenerateChain);
        }
        Ok(Belief(self.p01 / denom))
    }

    /// `1 / (1 - |p11 - p01|)`, the bias bound used for average-reward runs.
    /// Infinite when the chain is deterministic.
    pub fn bias_bound(&self) -> f64 {
        1.0 / (1.0 - self.correlation().abs())
    }
}
