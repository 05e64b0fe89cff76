//! Exact and structured channel selection for single-user opportunistic
//! access over independent, identical two-state Markov channels.
//!
//! Each epoch the user senses one channel and collects a unit of reward if
//! it is good. The crate provides
//!
//! * the channel model and belief dynamics ([`channel`], [`belief`]),
//! * the myopic rule in belief-argmax and ordered-list form ([`policy`]),
//! * exact dynamic programming for finite-horizon, discounted and
//!   average-reward criteria ([`solver`]),
//! * closed-form myopic values and the inequalities behind their optimality
//!   ([`myopic_value`], [`lemmas`]),
//! * a seeded Monte Carlo simulator with common random numbers ([`simulator`]).

pub mod belief;
pub mod channel;
mod error;
pub mod instance;
pub mod lemmas;
pub mod myopic_value;
pub mod policy;
pub mod simulator;
pub mod solver;

pub use belief::{enumerate_reachable, BeliefKey, BeliefVector, Observation, ReachableSet, SuccessorLaw};
pub use channel::{Belief, ChannelParams, Regime};
pub use error::{Error, Result};
pub use instance::{Horizon, ProblemInstance, Tolerances};
pub use policy::{init_order, myopic_action, OrderedList, PolicySpec, PolicyTable, TieBreak};
