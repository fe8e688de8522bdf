//! Experiment configuration files.
//!
//! ```toml
//! [topology]
//! kind = "grid"
//! rows = 4
//! cols = 4
//!
//! [theta]
//! seed = 7
//! law = { law = "gap-matched", theta_min = 0.3, delta_min = 0.15 }
//!
//! [experiment]
//! packets = 10000
//! runs = 50
//! seed = 1
//! policies = ["geocombucb1", "geocombucb2", "klsr", "cucb"]
//!
//! [policy]
//! cucb_clamp = true
//! ```

use std::path::{Path as FsPath, PathBuf};

use serde::{Deserialize, Serialize};

use crate::env::{derive_seed, gap_matched_theta, uniform_theta, AttemptModel, LinkParams, RngStream, ThetaLaw};
use crate::error::{Error, Result};
use crate::graph::{min_cost_to_destination, shortest_path, CostToGo, Path, TopologySpec, DEFAULT_PATH_CAP};
use crate::policies::{true_weights, PolicyOptions, PolicySpec, RoutingContext};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub topology: TopologySpec,
    pub theta: ThetaSpec,
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub policy: PolicyOptions,
}

/// Link parameters: an explicit vector, or a random law with its own seed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub law: Option<ThetaLaw>,
    /// Seed of the law; derived from the experiment seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub packets: u64,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    pub policies: Vec<PolicySpec>,
    /// Packet indices at which regret is recorded; a geometric grid by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default)]
    pub attempt_model: AttemptModel,
    /// Give every policy the same link noise in a given run.
    #[serde(default)]
    pub coupled_noise: bool,
    #[serde(default = "default_path_cap")]
    pub path_cap: usize,
}

fn default_runs() -> usize {
    1
}

fn default_path_cap() -> usize {
    DEFAULT_PATH_CAP
}

/// Ratio between consecutive default checkpoints.
pub const CHECKPOINT_RATIO: f64 = 1.3;

/// `1, 2, ..., ` growing by a factor of about 1.3 and always ending at `n`.
pub fn geometric_checkpoints(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut k = 1u64;
    while k < n {
        out.push(k);
        k = (k + 1).max((k as f64 * CHECKPOINT_RATIO).ceil() as u64);
    }
    out.push(n.max(1));
    out
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &FsPath) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        if e.packets == 0 {
            return Err(Error::Config("packets must be at least 1".into()));
        }
        if e.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if e.policies.is_empty() {
            return Err(Error::Config("no policies listed".into()));
        }
        if e.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if let Some(c) = &e.checkpoints {
            if c.is_empty() || c[0] == 0 || c.windows(2).any(|w| w[0] >= w[1]) || *c.last().unwrap() > e.packets {
                return Err(Error::Config(
                    "checkpoints must be strictly increasing within 1..=packets".into(),
                ));
            }
        }
        if self.policy.slot_cap == 0 {
            return Err(Error::Config("slot_cap must be at least 1".into()));
        }
        match (&self.theta.values, &self.theta.law) {
            (Some(_), Some(_)) => Err(Error::Config("give theta values or a theta law, not both".into())),
            (None, None) => Err(Error::Config("theta needs values or a law".into())),
            (None, Some(law)) => law.validate(),
            (Some(_), None) => Ok(()),
        }
    }

    pub fn checkpoints(&self) -> Vec<u64> {
        self.experiment
            .checkpoints
            .clone()
            .unwrap_or_else(|| geometric_checkpoints(self.experiment.packets))
    }

    pub fn theta_seed(&self) -> u64 {
        self.theta
            .seed
            .unwrap_or_else(|| derive_seed(self.experiment.seed, &[b"theta"]))
    }

    /// Builds the topology and link parameters.
    pub fn instance(&self) -> Result<Instance> {
        let topology = self.topology.build()?;
        let ctx = RoutingContext::new(topology, self.experiment.path_cap)?;
        let theta = match (&self.theta.values, &self.theta.law) {
            (Some(v), _) => v.clone(),
            (None, Some(ThetaLaw::Uniform { low, high })) => {
                let mut rng = RngStream::new(self.theta_seed(), 0);
                uniform_theta(ctx.topology.link_count(), *low, *high, &mut rng)
            }
            (
                None,
                Some(ThetaLaw::GapMatched {
                    theta_min,
                    delta_min,
                    high,
                }),
            ) => {
                let mut rng = RngStream::new(self.theta_seed(), 0);
                gap_matched_theta(&ctx.topology, ctx.paths()?, *theta_min, *delta_min, *high, &mut rng)?
            }
            (None, None) => return Err(Error::Config("theta needs values or a law".into())),
        };
        if theta.len() != ctx.topology.link_count() {
            return Err(Error::Config(format!(
                "{} theta values for {} links",
                theta.len(),
                ctx.topology.link_count()
            )));
        }
        Instance::new(ctx, LinkParams::new(theta)?)
    }
}

/// A concrete problem: topology, link parameters and the true optimum.
#[derive(Debug, Clone)]
pub struct Instance {
    pub ctx: RoutingContext,
    pub params: LinkParams,
    pub optimal: Path,
    /// Expected delay of the optimal path.
    pub d_star: f64,
    /// True expected cost-to-go from every node.
    pub to_go: CostToGo,
}

impl Instance {
    pub fn new(ctx: RoutingContext, params: LinkParams) -> Result<Self> {
        if params.len() != ctx.topology.link_count() {
            return Err(Error::Config("one theta per link is required".into()));
        }
        let w = true_weights(&params)?;
        let to_go = min_cost_to_destination(&ctx.topology, &w)?;
        let optimal = shortest_path(&ctx.topology, &w)?;
        let d_star = params.path_delay(&optimal);
        Ok(Self {
            ctx,
            params,
            optimal,
            d_star,
            to_go,
        })
    }
}
