//! Exact dynamic programming: finite horizon by backward induction over the
//! reachable set, discounted and average reward on a truncated belief set.

mod finite;
mod infinite;

pub use finite::{
    policy_value_finite, q_value, solve_finite, verify_myopic_optimality, verify_table, StateValue, ValueTable, Verdict,
};
pub use infinite::{
    solve_average, solve_discounted, vanishing_discount, AverageRewardSolution, DiscountedSolution,
    RelativeValueIteration, ScaledDiscountedValue, TruncatedModel, ValueIteration, DEFAULT_MAX_ITERATIONS,
    DEFAULT_MAX_STATES,
};
