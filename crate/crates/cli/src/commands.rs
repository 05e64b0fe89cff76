//! Subcommand implementations. Channels are numbered from 1 in every report
//! and flag; the library numbers them from 0.

use std::str::FromStr;

use chansel::lemmas::{sweep, Lemma, LemmaReport, SweepConfig};
use chansel::simulator::{coupled_compare, long_run_average, monte_carlo};
use chansel::solver::{policy_value_finite, solve_average, solve_finite, verify_table, ValueIteration, Verdict};
use chansel::{ChannelParams, Horizon, OrderedList, PolicySpec, ProblemInstance, Regime, TieBreak};
use clap::{Args, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::config::{InstanceArgs, ResolvedInstance};
use crate::error::{CliError, EXIT_OK, EXIT_VIOLATED};
use crate::report::Report;

pub type Outcome = Result<(Report, i32), CliError>;

fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|a| a + 1).collect()
}

fn verdict_json(v: &Verdict) -> serde_json::Value {
    match v {
        Verdict::Holds { states_checked } => json!({ "verdict": "holds", "states_checked": states_checked }),
        Verdict::Violated { stage, belief, action, gap, optimal } => json!({
            "verdict": "violated",
            "stage": stage,
            "belief": belief,
            "myopic_action": action + 1,
            "gap": gap,
            "optimal_actions": one_based(optimal),
        }),
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Convergence tolerance for infinite-horizon solves.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Serialize)]
struct WithTol<'a> {
    #[serde(flatten)]
    instance: &'a ResolvedInstance,
    tol: f64,
}

pub fn solve(args: &SolveArgs) -> Outcome {
    let (resolved, inst) = args.instance.resolve()?;
    let mut report = Report::new("solve", WithTol { instance: &resolved, tol: args.tol }, resolved.seed);
    match inst.horizon {
        Horizon::Finite(_) => {
            let table = solve_finite(&inst)?;
            let init = table.initial();
            report.put("criterion", "finite_horizon");
            report.put("value", init.value);
            report.put("optimal_first_actions", one_based(&init.optimal));
            report.put("q_values", &init.q);
            report.put("reachable_states_per_stage", table.sizes());
            report.put("reachable_states_total", table.sizes().iter().sum::<usize>());
        }
        Horizon::Infinite if inst.beta < 1.0 => {
            let sol = ValueIteration::new(args.tol).solve(&inst)?;
            report.put("criterion", "discounted");
            report.put("value", sol.initial_value());
            report.put("value_bound", 1.0 / (1.0 - inst.beta));
            report.put("greedy_first_action", sol.greedy[sol.model.initial()] + 1);
            report.put("states", sol.model.len());
            report.put("iterations", sol.iterations());
            report.put("final_residual", sol.residuals.last().copied().unwrap_or(0.0));
        }
        Horizon::Infinite => {
            let sol = solve_average(&inst, args.tol)?;
            report.put("criterion", "average_reward");
            report.put("gain", sol.gain);
            report.put("bias_bound", sol.bias_bound);
            report.put("max_abs_bias", sol.max_abs_bias());
            report.put("greedy_first_action", sol.greedy[sol.model.initial()] + 1);
            report.put("states", sol.model.len());
            report.put("iterations", sol.iterations);
            report.put("span_residual", sol.residual);
        }
    }
    Ok((report, EXIT_OK))
}

fn verify_instance(inst: &ProblemInstance, report: &mut Report) -> Result<i32, CliError> {
    inst.horizon.finite()?;
    let table = solve_finite(inst)?;
    let verdict = verify_table(&table, inst.tol.decision, inst.tol.validity);
    report.put("optimal_value", table.initial().value);
    report.put("myopic_value", policy_value_finite(inst, &PolicySpec::myopic())?);
    report.put("result", verdict_json(&verdict));
    Ok(if verdict.holds() { EXIT_OK } else { EXIT_VIOLATED })
}

pub fn verify(args: &InstanceArgs) -> Outcome {
    let (resolved, inst) = args.resolve()?;
    let mut report = Report::new("verify", &resolved, resolved.seed);
    let code = verify_instance(&inst, &mut report)?;
    Ok((report, code))
}

pub fn counterexample() -> Outcome {
    let inst = ProblemInstance::counterexample();
    let config = json!({
        "n": inst.n(),
        "p01": inst.params.p01(),
        "p11": inst.params.p11(),
        "beta": inst.beta,
        "horizon": 4,
        "initial_belief": inst.initial.as_slice(),
        "seed": null,
        "tol_decision": inst.tol.decision,
        "tol_validity": inst.tol.validity,
    });
    let mut report = Report::new("counterexample", config, None);
    let code = verify_instance(&inst, &mut report)?;
    let first = PolicySpec::FixedFirstAction { first: 2, then: TieBreak::LowestIndex };
    report.put("fixed_first_action", 3);
    report.put("fixed_first_value", policy_value_finite(&inst, &first)?);
    Ok((report, code))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaSet {
    /// Every lemma whose regime matches the parameters (all five when they are drawn).
    All,
    /// Coupling bound, both swaps and myopic sufficiency.
    Positive,
    /// The swap inequality for negatively correlated channels.
    Negative,
}

#[derive(Debug, Clone, Args)]
pub struct LemmaArgs {
    /// Fix p01 for every case; needs --p11 too. Drawn per case otherwise.
    #[arg(long, requires = "p11")]
    pub p01: Option<f64>,
    #[arg(long, requires = "p01")]
    pub p11: Option<f64>,
    #[arg(long, value_enum, default_value_t = LemmaSet::All)]
    pub set: LemmaSet,
    #[arg(long, default_value_t = 1000)]
    pub cases: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Largest number of channels drawn.
    #[arg(long, default_value_t = 6)]
    pub max_n: usize,
    /// Largest remaining horizon drawn.
    #[arg(long, default_value_t = 6)]
    pub max_depth: usize,
}

pub fn lemmas(args: &LemmaArgs) -> Outcome {
    let params = match (args.p01, args.p11) {
        (Some(p01), Some(p11)) => Some(ChannelParams::new(p01, p11)?),
        _ => None,
    };
    if args.max_n == 0 {
        return Err(CliError::Usage("--max-n must be at least 1".into()));
    }
    let positive: Vec<Lemma> = Lemma::POSITIVE.to_vec();
    let selected = match (args.set, params.map(|p| p.regime())) {
        (LemmaSet::All, None) => positive.into_iter().chain([Lemma::ZSwap]).collect(),
        (LemmaSet::All, Some(Regime::PositivelyCorrelated)) | (LemmaSet::Positive, _) => positive,
        (LemmaSet::All, Some(Regime::NegativelyCorrelated)) | (LemmaSet::Negative, _) => vec![Lemma::ZSwap],
    };
    let config = json!({
        "p01": args.p01,
        "p11": args.p11,
        "set": args.set,
        "cases": args.cases,
        "seed": args.seed,
        "max_n": args.max_n,
        "max_depth": args.max_depth,
    });
    let mut report = Report::new("lemmas", config, Some(args.seed));
    let cfg = SweepConfig { cases: args.cases, seed: args.seed, max_n: args.max_n, max_depth: args.max_depth, params };
    let reports: Vec<LemmaReport> = selected.iter().map(|&l| sweep(l, &cfg)).collect::<Result<_, _>>()?;
    let all_passed = reports.iter().all(LemmaReport::passed);
    report.put("all_passed", all_passed);
    report.put("lemmas", &reports);
    Ok((report, if all_passed { EXIT_OK } else { EXIT_VIOLATED }))
}

/// `myopic`, `first=K` (channel K first, then myopic) or `list=K1,K2,..`
/// (ordered-list policy with the given initial order).
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyArg {
    text: String,
    spec: PolicySpec,
}

impl FromStr for PolicyArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let channel = |k: &str| match k.trim().parse::<usize>() {
            Ok(k) if k >= 1 => Ok(k - 1),
            _ => Err(format!("channels are numbered from 1, got {k:?}")),
        };
        let spec = match s.split_once('=') {
            None if s == "myopic" => PolicySpec::myopic(),
            Some(("first", k)) => PolicySpec::FixedFirstAction { first: channel(k)?, then: TieBreak::LowestIndex },
            Some(("list", ks)) => {
                let order = ks.split(',').map(channel).collect::<Result<Vec<_>, _>>()?;
                PolicySpec::StructuredList(OrderedList::new(order).map_err(|e| e.to_string())?)
            }
            _ => return Err(format!("unknown policy {s:?}; use myopic, first=K or list=K1,K2,..")),
        };
        Ok(PolicyArg { text: s.to_string(), spec })
    }
}

impl PolicyArg {
    fn check(&self, n: usize) -> Result<(), CliError> {
        let bad = match &self.spec {
            PolicySpec::FixedFirstAction { first, .. } => *first >= n,
            PolicySpec::StructuredList(list) => list.len() != n,
            _ => false,
        };
        if bad {
            return Err(CliError::Usage(format!("policy {} does not fit {n} channels", self.text)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, default_value = "myopic")]
    pub policy: PolicyArg,
    /// Second policy, run on the same sample paths.
    #[arg(long)]
    pub against: Option<PolicyArg>,
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
    /// Epochs of the long-run average (infinite horizon only).
    #[arg(long, default_value_t = 100_000)]
    pub steps: usize,
    /// Batches for the long-run standard error.
    #[arg(long, default_value_t = 100)]
    pub batches: usize,
}

pub fn simulate(args: &SimulateArgs) -> Outcome {
    let (resolved, inst) = args.instance.resolve()?;
    let seed = resolved.seed.unwrap_or(1);
    args.policy.check(inst.n())?;
    if let Some(b) = &args.against {
        b.check(inst.n())?;
    }
    let mut config = serde_json::to_value(&resolved).expect("config serializes");
    config["seed"] = json!(seed);
    config["policy"] = json!(args.policy.text);
    config["against"] = json!(args.against.as_ref().map(|p| &p.text));
    let mut report;
    match inst.horizon {
        Horizon::Finite(_) => {
            config["reps"] = json!(args.reps);
            report = Report::new("simulate", config, Some(seed));
            match &args.against {
                None => {
                    let est = monte_carlo(&inst, &args.policy.spec, args.reps, seed)?;
                    report.put("mean", est.mean);
                    report.put("std_error", est.std_error);
                    report.put("reps", est.samples);
                }
                Some(b) => {
                    let stats = coupled_compare(&inst, &args.policy.spec, &b.spec, args.reps, seed)?;
                    report.put("mean", stats.a.mean);
                    report.put("std_error", stats.a.std_error);
                    report.put("reps", stats.reps);
                    report.put(
                        "comparison",
                        json!({
                            "against_mean": stats.b.mean,
                            "against_std_error": stats.b.std_error,
                            "mean_difference": stats.difference.mean,
                            "std_error_difference": stats.difference.std_error,
                            "paths_below_minus_one": stats.violations,
                        }),
                    );
                }
            }
        }
        Horizon::Infinite => {
            if args.against.is_some() {
                return Err(CliError::Usage("--against needs a finite horizon".into()));
            }
            config["steps"] = json!(args.steps);
            config["batches"] = json!(args.batches);
            report = Report::new("simulate", config, Some(seed));
            let est = long_run_average(&inst, &args.policy.spec, args.steps, args.batches, seed)?;
            report.put("long_run_average", est.mean);
            report.put("std_error", est.std_error);
            report.put("batches", est.samples);
        }
    }
    Ok((report, EXIT_OK))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeArg {
    Negative,
    Positive,
    Any,
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    #[arg(long, default_value_t = 200)]
    pub cases: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Fix the number of channels; drawn from 2..=4 otherwise.
    #[arg(long)]
    pub n: Option<usize>,
    /// Fix the horizon; drawn from 2..=5 otherwise.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Fix the discount; drawn uniformly from [0, 1] otherwise.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, value_enum, default_value_t = RegimeArg::Negative)]
    pub regime: RegimeArg,
    #[arg(long, default_value_t = 1e-9)]
    pub tol_decision: f64,
}

/// Looks for instances started at the stationary belief on which the myopic
/// rule is suboptimal.
pub fn search_stationary(args: &SearchArgs) -> Outcome {
    if args.n == Some(0) || args.horizon == Some(0) {
        return Err(CliError::Usage("--n and --horizon must be positive".into()));
    }
    let config = json!({
        "cases": args.cases,
        "seed": args.seed,
        "n": args.n,
        "horizon": args.horizon,
        "beta": args.beta,
        "regime": args.regime,
        "tol_decision": args.tol_decision,
    });
    let mut report = Report::new("search-stationary", config, Some(args.seed));
    let mut violations = Vec::new();
    let mut states = 0;
    for case in 0..args.cases {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        rng.set_stream(case as u64);
        let (a, b): (f64, f64) = (rng.gen(), rng.gen());
        let (p01, p11) = match args.regime {
            RegimeArg::Negative => (a.max(b), a.min(b)),
            RegimeArg::Positive => (a.min(b), a.max(b)),
            RegimeArg::Any => (a, b),
        };
        let n = args.n.unwrap_or_else(|| rng.gen_range(2..=4));
        let horizon = args.horizon.unwrap_or_else(|| rng.gen_range(2..=5));
        let beta = args.beta.unwrap_or_else(|| rng.gen());
        let params = ChannelParams::new(p01, p11)?;
        let mut inst = ProblemInstance::stationary(params, n, beta, Horizon::Finite(horizon))?;
        inst.tol.decision = args.tol_decision;
        let table = solve_finite(&inst)?;
        match verify_table(&table, inst.tol.decision, inst.tol.validity) {
            Verdict::Holds { states_checked } => states += states_checked,
            v => {
                let mut w = json!({ "case": case, "p01": p01, "p11": p11, "n": n, "horizon": horizon, "beta": beta });
                if let serde_json::Value::Object(extra) = verdict_json(&v) {
                    w.as_object_mut().expect("object").extend(extra);
                }
                violations.push(w);
            }
        }
    }
    report.put("instances", args.cases);
    report.put("states_checked_on_holding_instances", states);
    report.put("counterexamples_found", violations.len());
    report.put("counterexamples", &violations);
    let code = if violations.is_empty() { EXIT_OK } else { EXIT_VIOLATED };
    Ok((report, code))
}
