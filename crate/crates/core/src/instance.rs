use serde::{Deserialize, Serialize};

use crate::belief::BeliefVector;
use crate::channel::{check_probability, ChannelParams, VALIDITY_TOLERANCE};
use crate::error::{Error, Result};

/// Number of decision epochs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    Finite(usize),
    Infinite,
}

impl Horizon {
    pub fn finite(self) -> Result<usize> {
        match self {
            Horizon::Finite(0) => Err(Error::HorizonZero),
            Horizon::Finite(t) => Ok(t),
            Horizon::Infinite => Err(Error::InfiniteHorizon),
        }
    }
}

/// Numerical tolerances shared by decision logic and validity checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Slack on q-value comparisons (optimal-action sets, verdicts).
    pub decision: f64,
    /// Slack on probability range checks and belief ties.
    pub validity: f64,
    /// Rounding quantum for belief keys.
    pub key_quantum: f64,
    /// Distance below which an infinite-horizon belief entry is replaced by
    /// the stationary belief.
    pub snap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { decision: 1e-9, validity: VALIDITY_TOLERANCE, key_quantum: 1e-12, snap: 1e-10 }
    }
}

/// One opportunistic access problem: `n` identical channels, discount,
/// horizon and the initial belief vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub params: ChannelParams,
    pub beta: f64,
    pub horizon: Horizon,
    pub initial: BeliefVector,
    #[serde(default)]
    pub tol: Tolerances,
}

impl ProblemInstance {
    pub fn new(params: ChannelParams, beta: f64, horizon: Horizon, initial: BeliefVector) -> Result<Self> {
        if check_probability("beta", beta).is_err() {
            return Err(Error::InvalidBeta(beta));
        }
        Ok(Self { params, beta: beta.clamp(0.0, 1.0), horizon, initial, tol: Tolerances::default() })
    }

    /// Instance whose initial belief puts every channel at the stationary belief.
    pub fn stationary(params: ChannelParams, n: usize, beta: f64, horizon: Horizon) -> Result<Self> {
        let star = params.stationary_belief()?.value();
        Self::new(params, beta, horizon, BeliefVector::new(vec![star; n])?)
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_horizon(mut self, horizon: Horizon) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        if check_probability("beta", beta).is_err() {
            return Err(Error::InvalidBeta(beta));
        }
        self.beta = beta.clamp(0.0, 1.0);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.initial.len()
    }

    /// The counterexample instance: `p01 = 0.9`, `p11 = 0.1`, undiscounted,
    /// four decision epochs from `[.97, .97, .98, .99]`.
    pub fn counterexample() -> Self {
        let params = ChannelParams::new(0.9, 0.1).expect("valid params");
        let initial = BeliefVector::new(vec![0.97, 0.97, 0.98, 0.99]).expect("valid beliefs");
        Self::new(params, 1.0, Horizon::Finite(4), initial).expect("valid instance")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizon_checks() {
        assert_eq!(Horizon::Finite(0).finite(), Err(Error::HorizonZero));
        assert_eq!(Horizon::Infinite.finite(), Err(Error::InfiniteHorizon));
        assert_eq!(Horizon::Finite(3).finite(), Ok(3));
    }

    #[test]
    fn stationary_instance_expands() {
        let p = ChannelParams::new(0.3, 0.9).unwrap();
        let inst = ProblemInstance::stationary(p, 3, 0.9, Horizon::Infinite).unwrap();
        assert_eq!(inst.initial.as_slice(), &[0.75, 0.75, 0.75]);
    }

    #[test]
    fn beta_validated() {
        let p = ChannelParams::new(0.3, 0.9).unwrap();
        let w = BeliefVector::new(vec![0.5]).unwrap();
        assert!(ProblemInstance::new(p, 1.2, Horizon::Finite(2), w).is_err());
    }
}
