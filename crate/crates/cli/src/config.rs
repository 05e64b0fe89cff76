//! Instance files and the flags that override them.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use chansel::{BeliefVector, ChannelParams, Horizon, ProblemInstance, Tolerances};
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// `horizon = 4` or `horizon = "inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(try_from = "RawHorizon")]
pub struct HorizonSpec(pub Horizon);

#[derive(Deserialize)]
#[serde(untagged)]
enum RawHorizon {
    Epochs(usize),
    Word(String),
}

impl TryFrom<RawHorizon> for HorizonSpec {
    type Error = String;

    fn try_from(raw: RawHorizon) -> Result<Self, String> {
        match raw {
            RawHorizon::Epochs(t) => Ok(HorizonSpec(Horizon::Finite(t))),
            RawHorizon::Word(s) => s.parse(),
        }
    }
}

impl FromStr for HorizonSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "inf" | "infinite" => Ok(HorizonSpec(Horizon::Infinite)),
            t => t
                .parse()
                .map(|t| HorizonSpec(Horizon::Finite(t)))
                .map_err(|_| format!("horizon must be a positive integer or \"inf\", got {s:?}")),
        }
    }
}

impl Serialize for HorizonSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            Horizon::Finite(t) => s.serialize_u64(t as u64),
            Horizon::Infinite => s.serialize_str("inf"),
        }
    }
}

/// `initial_belief = [0.5, 0.6]` or `initial_belief = "stationary"`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum InitialSpec {
    List(Vec<f64>),
    Word(String),
}

impl FromStr for InitialSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim() == "stationary" {
            return Ok(InitialSpec::Word("stationary".into()));
        }
        s.split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map(InitialSpec::List)
            .map_err(|_| format!("initial belief must be comma-separated numbers or \"stationary\", got {s:?}"))
    }
}

/// Keys accepted in an instance file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub n: Option<usize>,
    pub p01: Option<f64>,
    pub p11: Option<f64>,
    pub beta: Option<f64>,
    pub horizon: Option<HorizonSpec>,
    pub initial_belief: Option<InitialSpec>,
    pub seed: Option<u64>,
    pub tol_decision: Option<f64>,
    pub tol_validity: Option<f64>,
}

impl InstanceFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Args)]
pub struct InstanceArgs {
    /// TOML instance file; flags override its fields.
    pub instance: Option<PathBuf>,
    #[arg(long)]
    pub p01: Option<f64>,
    #[arg(long)]
    pub p11: Option<f64>,
    /// Number of channels.
    #[arg(long)]
    pub n: Option<usize>,
    /// Discount factor in [0, 1]; defaults to 1.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Decision epochs, or "inf".
    #[arg(long)]
    pub horizon: Option<HorizonSpec>,
    /// Comma-separated initial beliefs, or "stationary" (the default).
    #[arg(long)]
    pub init: Option<InitialSpec>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tol_decision: Option<f64>,
    #[arg(long)]
    pub tol_validity: Option<f64>,
}

/// Fully resolved instance settings, echoed in every report.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedInstance {
    pub n: usize,
    pub p01: f64,
    pub p11: f64,
    pub beta: f64,
    pub horizon: HorizonSpec,
    pub initial_belief: Vec<f64>,
    pub seed: Option<u64>,
    pub tol_decision: f64,
    pub tol_validity: f64,
}

impl InstanceArgs {
    pub fn resolve(&self) -> Result<(ResolvedInstance, ProblemInstance), CliError> {
        let file = match &self.instance {
            Some(path) => InstanceFile::load(path)?,
            None => InstanceFile::default(),
        };
        let missing = |key: &str| CliError::Usage(format!("missing {key} (flag --{key} or instance file key)"));
        let p01 = self.p01.or(file.p01).ok_or_else(|| missing("p01"))?;
        let p11 = self.p11.or(file.p11).ok_or_else(|| missing("p11"))?;
        let horizon = self.horizon.or(file.horizon).ok_or_else(|| missing("horizon"))?;
        let beta = self.beta.or(file.beta).unwrap_or(1.0);
        let defaults = Tolerances::default();
        let tol = Tolerances {
            decision: self.tol_decision.or(file.tol_decision).unwrap_or(defaults.decision),
            validity: self.tol_validity.or(file.tol_validity).unwrap_or(defaults.validity),
            ..defaults
        };
        if !(tol.decision > 0.0) || !(tol.validity > 0.0) {
            return Err(CliError::Usage("tolerances must be positive".into()));
        }
        let n = self.n.or(file.n);
        let params = ChannelParams::new(p01, p11)?;
        let init = self.init.clone().or(file.initial_belief).unwrap_or(InitialSpec::Word("stationary".into()));
        let initial = match init {
            InitialSpec::List(w) => {
                if let Some(n) = n {
                    if n != w.len() {
                        return Err(CliError::Usage(format!("n = {n} but {} initial beliefs given", w.len())));
                    }
                }
                w
            }
            InitialSpec::Word(word) if word == "stationary" => {
                let n = n.ok_or_else(|| missing("n"))?;
                vec![params.stationary_belief()?.value(); n]
            }
            InitialSpec::Word(word) => {
                return Err(CliError::Usage(format!("unknown initial belief {word:?}")));
            }
        };
        let instance = ProblemInstance::new(params, beta, horizon.0, BeliefVector::new(initial)?)?.with_tolerances(tol);
        let resolved = ResolvedInstance {
            n: instance.n(),
            p01,
            p11,
            beta,
            horizon,
            initial_belief: instance.initial.as_slice().to_vec(),
            seed: self.seed.or(file.seed),
            tol_decision: tol.decision,
            tol_validity: tol.validity,
        };
        Ok((resolved, instance))
    }
}
