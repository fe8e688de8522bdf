//! Replicated experiments, regret aggregation and CSV output.

pub mod config;
pub mod sim;

use std::io::Write;

use rayon::prelude::*;

pub use config::{geometric_checkpoints, ExperimentConfig, Instance};
pub use sim::{run_hop_by_hop, run_one, run_seeds, run_source_routing, RegretTrace, RunSetup};

use crate::bounds::mean_sd;
use crate::error::{Error, Result};

/// Two-sided normal quantile for 95% intervals.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Mean and normal-approximation 95% interval per checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSummary {
    pub mean: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
    /// Standard error of the mean.
    pub stderr: Vec<f64>,
}

impl SeriesSummary {
    fn from_columns(columns: &[Vec<f64>]) -> Self {
        let mut s = SeriesSummary {
            mean: Vec::new(),
            ci_lo: Vec::new(),
            ci_hi: Vec::new(),
            stderr: Vec::new(),
        };
        for col in columns {
            let (m, sd) = mean_sd(col);
            let se = sd / (col.len() as f64).sqrt();
            s.mean.push(m);
            s.stderr.push(se);
            s.ci_lo.push(m - Z95 * se);
            s.ci_hi.push(m + Z95 * se);
        }
        s
    }

    pub fn last(&self) -> (f64, f64, f64) {
        let i = self.mean.len() - 1;
        (self.mean[i], self.ci_lo[i], self.ci_hi[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub checkpoints: Vec<u64>,
    pub runs: usize,
    pub regret: SeriesSummary,
    pub pseudo_regret: SeriesSummary,
}

/// Per-checkpoint mean and 95% interval across runs.
pub fn aggregate(traces: &[RegretTrace]) -> Result<Summary> {
    if traces.len() < 2 {
        return Err(Error::TooFewTraces {
            needed: 2,
            got: traces.len(),
        });
    }
    let checkpoints = traces[0].checkpoints.clone();
    if traces.iter().any(|t| {
        t.checkpoints != checkpoints || t.regret.len() != checkpoints.len() || t.pseudo_regret.len() != checkpoints.len()
    }) {
        return Err(Error::MisalignedCheckpoints);
    }
    let column = |f: fn(&RegretTrace) -> &Vec<f64>| -> Vec<Vec<f64>> {
        (0..checkpoints.len())
            .map(|i| traces.iter().map(|t| f(t)[i]).collect())
            .collect()
    };
    Ok(Summary {
        runs: traces.len(),
        regret: SeriesSummary::from_columns(&column(|t| &t.regret)),
        pseudo_regret: SeriesSummary::from_columns(&column(|t| &t.pseudo_regret)),
        checkpoints,
    })
}

/// All runs of one policy.
#[derive(Debug, Clone)]
pub struct PolicyResult {
    pub policy: String,
    pub traces: Vec<RegretTrace>,
    /// `None` for a single run.
    pub summary: Option<Summary>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub instance: Instance,
    pub checkpoints: Vec<u64>,
    pub policies: Vec<PolicyResult>,
}

impl ExperimentResult {
    pub fn policy(&self, name: &str) -> Option<&PolicyResult> {
        self.policies.iter().find(|p| p.policy == name)
    }
}

/// Runs every `(policy, run)` pair of `cfg`, in parallel on `workers`
/// threads (all cores when unset). Results do not depend on the thread count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let instance = cfg.instance()?;
    let checkpoints = cfg.checkpoints();
    let e = &cfg.experiment;
    let jobs: Vec<(usize, usize)> = (0..e.policies.len())
        .flat_map(|p| (0..e.runs).map(move |r| (p, r)))
        .collect();
    let work = || {
        jobs.par_iter()
            .map(|&(p, run)| {
                let spec = e.policies[p];
                let (env_seed, policy_seed) = run_seeds(e.seed, &spec.to_string(), run, e.coupled_noise);
                run_one(&RunSetup {
                    instance: &instance,
                    spec,
                    options: cfg.policy,
                    packets: e.packets,
                    checkpoints: &checkpoints,
                    env_seed,
                    policy_seed,
                    attempt_model: e.attempt_model,
                    run,
                })
            })
            .collect::<Result<Vec<_>>>()
    };
    let traces = match e.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|err| Error::Config(err.to_string()))?
            .install(work)?,
        None => work()?,
    };
    let mut traces = traces.into_iter();
    let policies = e
        .policies
        .iter()
        .map(|spec| {
            let runs: Vec<RegretTrace> = traces.by_ref().take(e.runs).collect();
            let summary = if runs.len() >= 2 { Some(aggregate(&runs)?) } else { None };
            Ok(PolicyResult {
                policy: spec.to_string(),
                traces: runs,
                summary,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResult {
        instance,
        checkpoints,
        policies,
    })
}

fn fmt_list<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Writes the regret CSV: a `# key = value` metadata block, then one row per
/// run and checkpoint plus `mean`, `ci_lo` and `ci_hi` rows per policy.
pub fn write_regret_csv<W: Write>(cfg: &ExperimentConfig, result: &ExperimentResult, mut out: W) -> Result<()> {
    let inst = &result.instance;
    let e = &cfg.experiment;
    let meta: Vec<(&str, String)> = vec![
        ("generator", format!("georoute {}", env!("CARGO_PKG_VERSION"))),
        ("topology", format!("{:?}", cfg.topology)),
        ("nodes", inst.ctx.topology.node_count().to_string()),
        ("links", inst.ctx.topology.link_count().to_string()),
        (
            "theta_law",
            cfg.theta.law.as_ref().map_or("explicit".to_string(), |l| l.describe()),
        ),
        ("theta_seed", cfg.theta_seed().to_string()),
        ("theta", fmt_list(inst.params.theta())),
        ("optimal_path", fmt_list(inst.optimal.links())),
        ("d_star", inst.d_star.to_string()),
        ("max_hops", inst.ctx.schedule.h().to_string()),
        ("packets", e.packets.to_string()),
        ("runs", e.runs.to_string()),
        ("seed", e.seed.to_string()),
        ("policies", fmt_list(&e.policies)),
        ("attempt_model", format!("{:?}", e.attempt_model)),
        ("coupled_noise", e.coupled_noise.to_string()),
        ("path_cap", e.path_cap.to_string()),
        ("policy_options", format!("{:?}", cfg.policy)),
    ];
    for (k, v) in meta {
        writeln!(out, "# {k} = {v}")?;
    }
    writeln!(out, "policy,run,checkpoint_n,cumulative_regret,pseudo_regret")?;
    for p in &result.policies {
        for t in &p.traces {
            for (i, n) in t.checkpoints.iter().enumerate() {
                writeln!(out, "{},{},{},{},{}", p.policy, t.run, n, t.regret[i], t.pseudo_regret[i])?;
            }
        }
        if let Some(s) = &p.summary {
            let rows = [
                ("mean", &s.regret.mean, &s.pseudo_regret.mean),
                ("ci_lo", &s.regret.ci_lo, &s.pseudo_regret.ci_lo),
                ("ci_hi", &s.regret.ci_hi, &s.pseudo_regret.ci_hi),
            ];
            for (label, r, q) in rows {
                for (i, n) in s.checkpoints.iter().enumerate() {
                    writeln!(out, "{},{},{},{},{}", p.policy, label, n, r[i], q[i])?;
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(regret: Vec<f64>) -> RegretTrace {
        RegretTrace {
            policy: "p".into(),
            run: 0,
            checkpoints: (1..=regret.len() as u64).collect(),
            pseudo_regret: regret.clone(),
            regret,
            delays: Vec::new(),
            revisits: 0,
        }
    }

    #[test]
    fn identical_traces_have_zero_width() {
        let s = aggregate(&[trace(vec![1.0, 2.0]), trace(vec![1.0, 2.0])]).unwrap();
        assert_eq!(s.regret.mean, vec![1.0, 2.0]);
        assert_eq!(s.regret.ci_lo, s.regret.ci_hi);
    }

    #[test]
    fn mean_of_two() {
        let n = 500.0;
        let s = aggregate(&[trace(vec![0.0]), trace(vec![2.0 * n])]).unwrap();
        assert_eq!(s.regret.mean, vec![n]);
        assert!(s.regret.ci_lo[0] < n && s.regret.ci_hi[0] > n);
    }

    #[test]
    fn aggregate_errors() {
        assert!(matches!(aggregate(&[trace(vec![1.0])]), Err(Error::TooFewTraces { needed: 2, got: 1 })));
        assert!(matches!(
            aggregate(&[trace(vec![1.0]), trace(vec![1.0, 2.0])]),
            Err(Error::MisalignedCheckpoints)
        ));
    }

    const CFG: &str = r#"
        [topology]
        kind = "line"
        hops = 2

        [theta]
        values = [0.5, 0.25, 0.7, 0.35]

        [experiment]
        packets = 300
        runs = 4
        seed = 9
        policies = ["klsr", "oracle", "klhhr"]
    "#;

    #[test]
    fn experiment_is_independent_of_worker_count() {
        let mut cfg = ExperimentConfig::from_toml_str(CFG).unwrap();
        let mut outputs = Vec::new();
        for workers in [1, 3] {
            cfg.experiment.workers = Some(workers);
            let res = run_experiment(&cfg).unwrap();
            let mut csv = Vec::new();
            write_regret_csv(&cfg, &res, &mut csv).unwrap();
            outputs.push(csv);
        }
        assert_eq!(outputs[0], outputs[1]);
        let text = String::from_utf8(outputs.pop().unwrap()).unwrap();
        let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
        assert_eq!(header, "policy,run,checkpoint_n,cumulative_regret,pseudo_regret");
        let cps = geometric_checkpoints(300).len();
        let rows = text.lines().filter(|l| !l.starts_with('#')).count() - 1;
        assert_eq!(rows, 3 * (4 + 3) * cps);
    }

    #[test]
    fn adding_a_policy_leaves_others_unchanged() {
        let cfg = ExperimentConfig::from_toml_str(CFG).unwrap();
        let mut more = cfg.clone();
        more.experiment.policies.insert(0, "cucb".parse().unwrap());
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&more).unwrap();
        for name in ["klsr", "oracle", "klhhr"] {
            assert_eq!(a.policy(name).unwrap().traces, b.policy(name).unwrap().traces);
        }
    }
}
