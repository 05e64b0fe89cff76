//! Closed-form value of the myopic policy and the inequalities behind its
//! optimality.
//!
//! For a belief vector sorted ascending, the myopic policy always probes the
//! last entry, and the list rotation rules give two recursions:
//!
//! * `W` (positively correlated): a good observation keeps the probed
//!   channel last with belief `p11`; a bad one moves it to the front with
//!   belief `p01`. Unprobed entries move through `tau` in place.
//! * `Z` (negatively correlated): unprobed entries are reversed; a good
//!   observation puts the probed channel first with `p11`, a bad one keeps
//!   it last with `p01`.
//!
//! Both recursions are defined for any argument vector, which is what the
//! swap checks rely on.

use std::collections::HashMap;

use crate::channel::{check_probability, ChannelParams, Regime, VALIDITY_TOLERANCE};
use crate::error::{Error, Result};

/// Beliefs in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedBelief(Vec<f64>);

impl SortedBelief {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyVector);
        }
        let entries = entries.into_iter().map(|w| check_probability("belief", w)).collect::<Result<Vec<_>>>()?;
        if entries.windows(2).any(|p| p[0] > p[1] + VALIDITY_TOLERANCE) {
            return Err(Error::PreconditionViolated(format!("{entries:?} is not ascending")));
        }
        Ok(Self(entries))
    }

    pub fn from_unsorted(mut entries: Vec<f64>) -> Result<Self> {
        entries.sort_by(f64::total_cmp);
        Self::new(entries)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Which myopic-value recursion to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Recursion {
    W,
    Z,
}

type MemoKey = (Recursion, usize, Box<[u64]>);

/// Memoized evaluator for `W_t` and `Z_t` over a fixed horizon.
#[derive(Debug, Clone)]
pub struct MyopicValue {
    params: ChannelParams,
    beta: f64,
    horizon: usize,
    memo: HashMap<MemoKey, f64>,
}

impl MyopicValue {
    pub fn new(params: ChannelParams, beta: f64, horizon: usize) -> Self {
        Self { params, beta, horizon, memo: HashMap::new() }
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn w(&mut self, t: usize, w: &[f64]) -> Result<f64> {
        self.eval(Recursion::W, t, w)
    }

    pub fn z(&mut self, t: usize, w: &[f64]) -> Result<f64> {
        self.eval(Recursion::Z, t, w)
    }

    pub fn eval(&mut self, which: Recursion, t: usize, w: &[f64]) -> Result<f64> {
        if t > self.horizon || t == 0 {
            return Err(Error::StageBeyondHorizon { t, horizon: self.horizon });
        }
        if w.is_empty() {
            return Err(Error::EmptyVector);
        }
        Ok(self.rec(which, t, w))
    }

    fn rec(&mut self, which: Recursion, t: usize, w: &[f64]) -> f64 {
        let n = w.len();
        let last = w[n - 1];
        if t == self.horizon || self.beta == 0.0 {
            return last;
        }
        // Arguments are produced deterministically, so exact bit patterns
        // identify repeated subproblems.
        let key = (which, t, w.iter().map(|x| x.to_bits()).collect::<Box<[u64]>>());
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let p = self.params;
        let rest = w[..n - 1].iter().map(|&x| p.tau_raw(x));
        let (good, bad): (Vec<f64>, Vec<f64>) = match which {
            Recursion::W => {
                let moved: Vec<f64> = rest.collect();
                let mut good = moved.clone();
                good.push(p.p11());
                let mut bad = Vec::with_capacity(n);
                bad.push(p.p01());
                bad.extend(moved);
                (good, bad)
            }
            Recursion::Z => {
                let reversed: Vec<f64> = rest.rev().collect();
                let mut good = Vec::with_capacity(n);
                good.push(p.p11());
                good.extend(reversed.iter().copied());
                let mut bad = reversed;
                bad.push(p.p01());
                (good, bad)
            }
        };
        let v = last + self.beta * (last * self.rec(which, t + 1, &good) + (1.0 - last) * self.rec(which, t + 1, &bad));
        self.memo.insert(key, v);
        v
    }

    /// `(lhs, rhs)` with `lhs = R(.., y, x, ..) - R(.., x, y, ..)` and
    /// `rhs = (x - y) * (R(.., 0, 1, ..) - R(.., 1, 0, ..))`, the pair
    /// inserted into `others` at `position`. Equal up to rounding because
    /// each recursion is affine in every coordinate.
    pub fn affinity_gap(
        &mut self,
        which: Recursion,
        t: usize,
        others: &[f64],
        x: f64,
        y: f64,
        position: usize,
    ) -> Result<(f64, f64)> {
        let n = others.len() + 2;
        if position + 1 >= n {
            return Err(Error::InvalidPosition { position, n });
        }
        let with = |a: f64, b: f64| {
            let mut v = others.to_vec();
            v.insert(position, b);
            v.insert(position, a);
            v
        };
        let lhs = self.eval(which, t, &with(y, x))? - self.eval(which, t, &with(x, y))?;
        let rhs = (x - y) * (self.eval(which, t, &with(0.0, 1.0))? - self.eval(which, t, &with(1.0, 0.0))?);
        Ok((lhs, rhs))
    }

    fn require_regime(&self, regime: Regime) -> Result<()> {
        if self.params.regime() != regime {
            return Err(Error::PreconditionViolated(format!(
                "check requires {regime:?}, params are {:?}",
                self.params.regime()
            )));
        }
        Ok(())
    }

    /// `1 + W_t(w_2, .., w_n, w_1) - W_t(w_1, .., w_n)`: starting one
    /// position behind on the rotation costs at most one unit of reward.
    pub fn check_coupling_bound(&mut self, t: usize, w: &SortedBelief) -> Result<f64> {
        self.require_regime(Regime::PositivelyCorrelated)?;
        let mut rotated = w.as_slice().to_vec();
        rotated.rotate_left(1);
        Ok(1.0 + self.w(t, &rotated)? - self.w(t, w.as_slice())?)
    }

    fn swap_margin(&mut self, which: Recursion, t: usize, w: &[f64], position: usize) -> Result<f64> {
        let n = w.len();
        if position + 1 >= n {
            return Err(Error::InvalidPosition { position, n });
        }
        if w[position] < w[position + 1] - VALIDITY_TOLERANCE {
            return Err(Error::PreconditionViolated(format!("swap needs w[{position}] >= w[{}]", position + 1)));
        }
        let mut swapped = w.to_vec();
        swapped.swap(position, position + 1);
        Ok(self.eval(which, t, &swapped)? - self.eval(which, t, w)?)
    }

    /// `W_t(.., y, x, ..) - W_t(.., x, y, ..)` for `w[position] = x >= y = w[position + 1]`.
    /// `position = n - 2` is the border pair.
    pub fn check_swap(&mut self, t: usize, w: &[f64], position: usize) -> Result<f64> {
        self.require_regime(Regime::PositivelyCorrelated)?;
        self.swap_margin(Recursion::W, t, w, position)
    }

    /// `W_t(w) - W_t(w without entry i, then w_i last)`: probing the top
    /// channel beats probing channel `i` when both are followed by myopic play.
    pub fn check_myopic_sufficiency(&mut self, t: usize, w: &SortedBelief, i: usize) -> Result<f64> {
        self.require_regime(Regime::PositivelyCorrelated)?;
        let n = w.len();
        if i >= n {
            return Err(Error::InvalidIndex { index: i, n });
        }
        let mut moved = w.as_slice().to_vec();
        let wi = moved.remove(i);
        moved.push(wi);
        Ok(self.w(t, w.as_slice())? - self.w(t, &moved)?)
    }

    /// `Z_t(.., y, x, ..) - Z_t(.., x, y, ..)` for `x >= y`; only claimed for
    /// `n = 3` or `beta <= 1/2` in the negatively correlated regime.
    pub fn check_z_swap(&mut self, t: usize, w: &[f64], position: usize) -> Result<f64> {
        self.require_regime(Regime::NegativelyCorrelated)?;
        if !(w.len() == 3 || self.beta <= 0.5) {
            return Err(Error::PreconditionViolated(format!(
                "z swap needs n = 3 or beta <= 1/2 (n = {}, beta = {})",
                w.len(),
                self.beta
            )));
        }
        self.swap_margin(Recursion::Z, t, w, position)
    }
}

/// `W_t` for an ascending belief vector: the myopic policy's expected
/// reward from epoch `t` when `p11 >= p01`.
pub fn w_value(params: ChannelParams, beta: f64, t: usize, horizon: usize, w: &SortedBelief) -> Result<f64> {
    MyopicValue::new(params, beta, horizon).w(t, w.as_slice())
}

/// `Z_t` for an ascending belief vector: the myopic policy's expected
/// reward from epoch `t` when `p11 < p01`.
pub fn z_value(params: ChannelParams, beta: f64, t: usize, horizon: usize, w: &SortedBelief) -> Result<f64> {
    MyopicValue::new(params, beta, horizon).z(t, w.as_slice())
}
