//! Ground-truth link processes.
//!
//! Every link is an i.i.d. Bernoulli process with success probability
//! `theta_i`; a packet that keeps retrying the same link therefore sees a
//! geometric delay with mean `1 / theta_i`.

use rand::Rng;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{LinkId, NetworkTopology, Path};

/// Per-link success probabilities, all in `(0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkParams {
    theta: Vec<f64>,
    theta_min: f64,
}

impl LinkParams {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::InvalidTheta("no links".into()));
        }
        for (i, &t) in theta.iter().enumerate() {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::InvalidTheta(format!(
                    "theta[{i}] = {t} is outside (0, 1]"
                )));
            }
        }
        let theta_min = theta.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Self { theta, theta_min })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn get(&self, link: LinkId) -> Result<f64> {
        self.theta.get(link).copied().ok_or(Error::UnknownLink(link))
    }

    pub fn theta_min(&self) -> f64 {
        self.theta_min
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Expected per-link delays `1 / theta_i`.
    pub fn mean_delays(&self) -> Vec<f64> {
        self.theta.iter().map(|t| 1.0 / t).collect()
    }

    /// Expected end-to-end delay `D_theta(p)`.
    pub fn path_delay(&self, path: &Path) -> f64 {
        path.links().iter().map(|&l| 1.0 / self.theta[l]).sum()
    }
}

/// Feedback returned to the source after a packet is delivered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DelayFeedback {
    /// End-to-end delay only.
    Bandit { total: u64 },
    /// Per-link delays in path order.
    SemiBandit(Vec<(LinkId, u64)>),
}

impl DelayFeedback {
    pub fn total(&self) -> u64 {
        match self {
            DelayFeedback::Bandit { total } => *total,
            DelayFeedback::SemiBandit(per_link) => per_link.iter().map(|(_, d)| d).sum(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FeedbackMode {
    Bandit,
    #[default]
    SemiBandit,
}

/// Mixes a master seed with labels into a 64-bit seed.
pub fn derive_seed(master: u64, labels: &[&[u8]]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    for label in labels {
        hasher.update((label.len() as u64).to_le_bytes());
        hasher.update(label);
    }
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// A reproducible random stream identified by `(seed, stream)`.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

/// Draws a geometric delay (number of attempts up to and including the first
/// success) by inverting the CDF.
pub fn sample_link_delay<R: Rng + ?Sized>(theta: f64, rng: &mut R) -> u64 {
    debug_assert!(theta > 0.0 && theta <= 1.0);
    if theta >= 1.0 {
        return 1;
    }
    // u in (0, 1] so ln(u) is finite; P(K > k) = (1 - theta)^k.
    let u = 1.0 - rng.gen::<f64>();
    let k = (u.ln() / (-theta).ln_1p()).ceil();
    if k < 1.0 {
        1
    } else if k >= u64::MAX as f64 {
        u64::MAX
    } else {
        k as u64
    }
}

/// One slot of occupancy on `link`: succeeds with probability `theta_link`.
pub fn attempt_transmission<R: Rng + ?Sized>(
    link: LinkId,
    params: &LinkParams,
    rng: &mut R,
) -> Result<bool> {
    let theta = params.get(link)?;
    Ok(theta >= 1.0 || rng.gen::<f64>() < theta)
}

/// Sends a packet along `path` with per-link retransmission, drawing every
/// link delay from the single `rng`.
pub fn route_packet_source<R: Rng + ?Sized>(
    path: &Path,
    params: &LinkParams,
    rng: &mut R,
    mode: FeedbackMode,
) -> Result<DelayFeedback> {
    let mut per_link = Vec::with_capacity(path.hops());
    for &l in path.links() {
        per_link.push((l, sample_link_delay(params.get(l)?, rng)));
    }
    Ok(summarize(per_link, mode))
}

fn summarize(per_link: Vec<(LinkId, u64)>, mode: FeedbackMode) -> DelayFeedback {
    match mode {
        FeedbackMode::SemiBandit => DelayFeedback::SemiBandit(per_link),
        FeedbackMode::Bandit => DelayFeedback::Bandit {
            total: per_link.iter().map(|(_, d)| d).sum(),
        },
    }
}

/// How slot-level attempts consume randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AttemptModel {
    /// One Bernoulli draw per attempt.
    #[default]
    Bernoulli,
    /// Each link pre-draws a geometric run length and counts attempts down to
    /// its success. Same law as `Bernoulli`, but the k-th traversal of a link
    /// sees exactly the delay source routing would draw for it.
    GeometricRuns,
}

/// The environment of a single simulation run: link parameters plus one
/// random stream per link.
#[derive(Debug, Clone)]
pub struct Environment {
    params: LinkParams,
    streams: Vec<RngStream>,
    model: AttemptModel,
    // Remaining attempts (including the successful one) of the current
    // geometric run, per link.
    pending: Vec<u64>,
}

impl Environment {
    pub fn new(params: LinkParams, seed: u64, model: AttemptModel) -> Self {
        let streams = (0..params.len() as u64)
            .map(|l| RngStream::new(seed, l))
            .collect();
        let pending = vec![0; params.len()];
        Self {
            params,
            streams,
            model,
            pending,
        }
    }

    pub fn params(&self) -> &LinkParams {
        &self.params
    }

    /// Source routing: one geometric draw per link of `path`, each from that
    /// link's own stream.
    pub fn route_packet(&mut self, path: &Path, mode: FeedbackMode) -> Result<DelayFeedback> {
        let mut per_link = Vec::with_capacity(path.hops());
        for &l in path.links() {
            let theta = self.params.get(l)?;
            per_link.push((l, sample_link_delay(theta, &mut self.streams[l])));
        }
        Ok(summarize(per_link, mode))
    }

    /// Hop-by-hop routing: a single transmission attempt on `link`.
    pub fn attempt(&mut self, link: LinkId) -> Result<bool> {
        let theta = self.params.get(link)?;
        match self.model {
            AttemptModel::Bernoulli => {
                attempt_transmission(link, &self.params, &mut self.streams[link])
            }
            AttemptModel::GeometricRuns => {
                if self.pending[link] == 0 {
                    self.pending[link] = sample_link_delay(theta, &mut self.streams[link]);
                }
                self.pending[link] -= 1;
                Ok(self.pending[link] == 0)
            }
        }
    }
}

/// Law used to generate random link parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ThetaLaw {
    /// i.i.d. uniform on `[low, high]`.
    Uniform { low: f64, high: f64 },
    /// Uniform draws on `[theta_min, high]` adjusted so that the smallest link
    /// parameter equals `theta_min` and the smallest nonzero gap between a
    /// path's expected delay and the optimum equals `delta_min`.
    GapMatched {
        theta_min: f64,
        delta_min: f64,
        #[serde(default = "one")]
        high: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl ThetaLaw {
    pub fn describe(&self) -> String {
        match self {
            ThetaLaw::Uniform { low, high } => format!("uniform[{low},{high}]"),
            ThetaLaw::GapMatched {
                theta_min,
                delta_min,
                high,
            } => format!("gap-matched(theta_min={theta_min},delta_min={delta_min},high={high})"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            ThetaLaw::Uniform { low, high } => *low > 0.0 && low <= high && *high <= 1.0,
            ThetaLaw::GapMatched {
                theta_min,
                delta_min,
                high,
            } => *theta_min > 0.0 && theta_min < high && *high <= 1.0 && *delta_min > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid theta law {}", self.describe())))
        }
    }
}

/// `count` i.i.d. uniform draws on `[low, high]`.
pub fn uniform_theta<R: Rng + ?Sized>(count: usize, low: f64, high: f64, rng: &mut R) -> Vec<f64> {
    (0..count)
        .map(|_| if low == high { low } else { rng.gen_range(low..=high) })
        .collect()
}

/// Summary statistics `(theta_min, delta_min)` of `theta` over `paths`.
/// `delta_min` is `None` when every path is optimal.
pub fn gap_statistics(theta: &[f64], paths: &[Path]) -> (f64, Option<f64>) {
    let theta_min = theta.iter().copied().fold(f64::INFINITY, f64::min);
    let inv: Vec<f64> = theta.iter().map(|t| 1.0 / t).collect();
    let costs: Vec<f64> = paths.iter().map(|p| p.cost(&inv)).collect();
    let best = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let delta = costs
        .iter()
        .map(|c| c - best)
        .filter(|d| *d > 1e-12)
        .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.min(d))));
    (theta_min, delta)
}

/// Generates parameters whose `(theta_min, delta_min)` match the targets
/// exactly (up to 1e-9), by rejection over adjusted uniform draws.
pub fn gap_matched_theta<R: Rng + ?Sized>(
    topology: &NetworkTopology,
    paths: &[Path],
    theta_min: f64,
    delta_min: f64,
    high: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    const TRIES: usize = 100_000;
    let m = topology.link_count();
    for _ in 0..TRIES {
        let mut theta = uniform_theta(m, theta_min, high, rng);
        let pinned = rng.gen_range(0..m);
        theta[pinned] = theta_min;
        let inv: Vec<f64> = theta.iter().map(|t| 1.0 / t).collect();
        let mut order: Vec<usize> = (0..paths.len()).collect();
        order.sort_by(|&a, &b| paths[a].cost(&inv).total_cmp(&paths[b].cost(&inv)).then(a.cmp(&b)));
        let best = &paths[order[0]];
        let Some(&runner_up) = order.get(1) else {
            return Err(Error::Config("gap matching needs at least two paths".into()));
        };
        let runner_up = &paths[runner_up];
        let shift = runner_up.cost(&inv) - best.cost(&inv) - delta_min;
        // Retune one link of the runner-up path that the optimum avoids.
        let candidates: Vec<LinkId> = runner_up
            .links()
            .iter()
            .copied()
            .filter(|&l| !best.contains(l) && l != pinned)
            .collect();
        if candidates.is_empty() {
            continue;
        }
        let tuned = candidates[rng.gen_range(0..candidates.len())];
        let new_inv = inv[tuned] - shift;
        if new_inv <= 0.0 {
            continue;
        }
        theta[tuned] = 1.0 / new_inv;
        if theta.iter().any(|&t| !(t >= theta_min && t <= high)) {
            continue;
        }
        let (tmin, delta) = gap_statistics(&theta, paths);
        if (tmin - theta_min).abs() < 1e-12 && delta.is_some_and(|d| (d - delta_min).abs() < 1e-9) {
            return Ok(theta);
        }
    }
    Err(Error::Config(format!(
        "could not generate theta with theta_min = {theta_min}, delta_min = {delta_min}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::enumerate_paths;

    fn sigma3(var: f64, n: f64) -> f64 {
        3.0 * (var / n).sqrt()
    }

    #[test]
    fn certain_link_always_takes_one_slot() {
        let mut rng = RngStream::new(1, 0);
        assert!((0..1000).all(|_| sample_link_delay(1.0, &mut rng) == 1));
    }

    #[test]
    fn geometric_mean_matches() {
        let mut rng = RngStream::new(7, 0);
        let n = 1_000_000;
        let sum: u64 = (0..n).map(|_| sample_link_delay(0.5, &mut rng)).sum();
        let mean = sum as f64 / n as f64;
        // variance (1 - theta) / theta^2 = 2
        assert!((mean - 2.0).abs() < sigma3(2.0, n as f64), "mean {mean}");
    }

    #[test]
    fn geometric_pmf_matches() {
        let mut rng = RngStream::new(11, 3);
        let n = 1_000_000;
        let mut counts = [0u64; 6];
        for _ in 0..n {
            let k = sample_link_delay(0.25, &mut rng) as usize;
            if k <= 5 {
                counts[k] += 1;
            }
        }
        for k in 1..=5 {
            let p = 0.25 * 0.75f64.powi(k as i32 - 1);
            let got = counts[k] as f64 / n as f64;
            assert!((got - p).abs() < sigma3(p * (1.0 - p), n as f64), "k={k} got {got} want {p}");
        }
    }

    #[test]
    fn transmission_success_rate() {
        let params = LinkParams::new(vec![0.3, 1.0]).unwrap();
        let mut rng = RngStream::new(5, 0);
        let n = 1_000_000;
        let hits = (0..n)
            .filter(|_| attempt_transmission(0, &params, &mut rng).unwrap())
            .count();
        let rate = hits as f64 / n as f64;
        assert!((rate - 0.3).abs() < sigma3(0.21, n as f64));
        assert!((0..100).all(|_| attempt_transmission(1, &params, &mut rng).unwrap()));
        assert!(attempt_transmission(2, &params, &mut rng).is_err());
    }

    #[test]
    fn zero_theta_is_rejected() {
        assert!(LinkParams::new(vec![0.5, 0.0]).is_err());
        assert!(LinkParams::new(vec![1.5]).is_err());
        assert!(LinkParams::new(vec![f64::NAN]).is_err());
        assert_eq!(LinkParams::new(vec![0.5, 0.2]).unwrap().theta_min(), 0.2);
    }

    #[test]
    fn deterministic_path_takes_hop_count() {
        let g = NetworkTopology::line(3, 1).unwrap();
        let path = enumerate_paths(&g, 10).unwrap().remove(0);
        let params = LinkParams::new(vec![1.0; 3]).unwrap();
        let mut rng = RngStream::new(0, 0);
        let fb = route_packet_source(&path, &params, &mut rng, FeedbackMode::Bandit).unwrap();
        assert_eq!(fb, DelayFeedback::Bandit { total: 3 });
    }

    #[test]
    fn semibandit_sums_to_bandit_total() {
        let g = NetworkTopology::line(3, 2).unwrap();
        let path = enumerate_paths(&g, 10).unwrap().remove(3);
        let params = LinkParams::new(vec![0.3, 0.6, 0.2, 0.9, 0.5, 0.7]).unwrap();
        let mut a = RngStream::new(42, 9);
        let mut b = RngStream::new(42, 9);
        for _ in 0..100 {
            let semi = route_packet_source(&path, &params, &mut a, FeedbackMode::SemiBandit).unwrap();
            let bandit = route_packet_source(&path, &params, &mut b, FeedbackMode::Bandit).unwrap();
            assert_eq!(semi.total(), bandit.total());
            let DelayFeedback::SemiBandit(per_link) = semi else { panic!() };
            let links: Vec<_> = per_link.iter().map(|(l, _)| *l).collect();
            assert_eq!(links, path.links());
            assert!(per_link.iter().all(|(_, d)| *d >= 1));
        }
    }

    #[test]
    fn two_link_path_mean_delay() {
        let g = NetworkTopology::line(2, 1).unwrap();
        let path = enumerate_paths(&g, 10).unwrap().remove(0);
        let params = LinkParams::new(vec![0.5, 0.25]).unwrap();
        let mut rng = RngStream::new(3, 1);
        let n = 100_000;
        let sum: u64 = (0..n)
            .map(|_| {
                route_packet_source(&path, &params, &mut rng, FeedbackMode::Bandit)
                    .unwrap()
                    .total()
            })
            .sum();
        let mean = sum as f64 / n as f64;
        // variance 2 + 12
        assert!((mean - 6.0).abs() < sigma3(14.0, n as f64), "mean {mean}");
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let draw = |seed, stream| {
            let mut r = RngStream::new(seed, stream);
            (0..8).map(|_| r.next_u64()).collect::<Vec<_>>()
        };
        assert_eq!(draw(1, 2), draw(1, 2));
        assert_ne!(draw(1, 2), draw(1, 3));
        assert_ne!(draw(1, 2), draw(2, 2));
        assert_eq!(derive_seed(9, &[b"a", b"b"]), derive_seed(9, &[b"a", b"b"]));
        assert_ne!(derive_seed(9, &[b"ab"]), derive_seed(9, &[b"a", b"b"]));
    }

    #[test]
    fn geometric_runs_reproduce_source_routing_delays() {
        let params = LinkParams::new(vec![0.4, 0.7]).unwrap();
        let g = NetworkTopology::line(1, 2).unwrap();
        let path = enumerate_paths(&g, 10).unwrap().remove(1);
        let mut src = Environment::new(params.clone(), 17, AttemptModel::GeometricRuns);
        let mut hop = Environment::new(params, 17, AttemptModel::GeometricRuns);
        for _ in 0..200 {
            let want = src.route_packet(&path, FeedbackMode::Bandit).unwrap().total();
            let mut slots = 1;
            while !hop.attempt(1).unwrap() {
                slots += 1;
            }
            assert_eq!(slots, want);
        }
    }

    #[test]
    fn gap_matched_generation_hits_targets() {
        let g = NetworkTopology::grid(4, 4).unwrap();
        let paths = enumerate_paths(&g, 100).unwrap();
        let mut rng = RngStream::new(2024, 0);
        let theta = gap_matched_theta(&g, &paths, 0.3, 0.15, 1.0, &mut rng).unwrap();
        let (tmin, delta) = gap_statistics(&theta, &paths);
        assert!((tmin - 0.3).abs() < 1e-12);
        assert!((delta.unwrap() - 0.15).abs() < 1e-9);
    }
}
