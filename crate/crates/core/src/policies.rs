//! Routing policies.
//!
//! Source-routing policies pick a whole path per packet ([`SourceRouter`]);
//! hop-by-hop policies pick the next link every slot ([`HopRouter`]). Every
//! learning policy starts by sending one packet down each path of a covering
//! set so that all indexes are defined.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::env::{DelayFeedback, FeedbackMode, LinkParams, RngStream};
use crate::error::{Error, Result};
use crate::graph::{
    covering_paths, enumerate_paths, min_cost_to_destination, shortest_path, CostToGo, LinkId,
    NetworkTopology, NodeId, Path, WeightVector,
};
use crate::indexes::{index_b, index_c, index_cucb, index_omega, ExplorationSchedule};
use crate::stats::{Counters, LinkStats, SlotStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    GeoCombUcb1,
    GeoCombUcb2,
    KlSr,
    KlHhr,
    Cucb,
    Oracle,
    Uniform,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 7] = [
        PolicyKind::GeoCombUcb1,
        PolicyKind::GeoCombUcb2,
        PolicyKind::KlSr,
        PolicyKind::KlHhr,
        PolicyKind::Cucb,
        PolicyKind::Oracle,
        PolicyKind::Uniform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::GeoCombUcb1 => "geocombucb1",
            PolicyKind::GeoCombUcb2 => "geocombucb2",
            PolicyKind::KlSr => "klsr",
            PolicyKind::KlHhr => "klhhr",
            PolicyKind::Cucb => "cucb",
            PolicyKind::Oracle => "oracle",
            PolicyKind::Uniform => "uniform",
        }
    }

    /// Whether the policy updates link statistics (and so needs semi-bandit
    /// feedback and an initial covering phase).
    pub fn learns(self) -> bool {
        !matches!(self, PolicyKind::Oracle | PolicyKind::Uniform)
    }

    /// Whether the policy ranks whole paths and therefore needs the
    /// enumerated path set.
    pub fn needs_paths(self) -> bool {
        matches!(
            self,
            PolicyKind::GeoCombUcb1 | PolicyKind::GeoCombUcb2 | PolicyKind::Uniform
        )
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownPolicy(s.to_string()))
    }
}

/// Where routing decisions are taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RoutingMode {
    /// The source fixes the path; feedback arrives after delivery.
    Source(FeedbackMode),
    /// Every relay picks the next link, slot by slot.
    HopByHop,
}

/// A policy together with its routing mode, written `name[:mode]` with mode
/// one of `semibandit`, `bandit` or `hop`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PolicySpec {
    pub kind: PolicyKind,
    pub mode: RoutingMode,
}

impl PolicySpec {
    pub fn new(kind: PolicyKind, mode: RoutingMode) -> Result<Self> {
        let ok = match (kind, mode) {
            (PolicyKind::KlHhr, m) => m == RoutingMode::HopByHop,
            (PolicyKind::Oracle, _) => true,
            (k, RoutingMode::Source(FeedbackMode::Bandit)) => !k.learns(),
            (_, RoutingMode::Source(FeedbackMode::SemiBandit)) => true,
            (_, RoutingMode::HopByHop) => false,
        };
        if !ok {
            return Err(Error::Config(format!(
                "policy {kind} cannot run in mode {}",
                mode_name(mode)
            )));
        }
        Ok(Self { kind, mode })
    }

    /// The policy in its natural mode.
    pub fn default_for(kind: PolicyKind) -> Self {
        let mode = if kind == PolicyKind::KlHhr {
            RoutingMode::HopByHop
        } else {
            RoutingMode::Source(FeedbackMode::SemiBandit)
        };
        Self { kind, mode }
    }

    pub fn is_hop_by_hop(&self) -> bool {
        self.mode == RoutingMode::HopByHop
    }
}

fn mode_name(mode: RoutingMode) -> &'static str {
    match mode {
        RoutingMode::Source(FeedbackMode::SemiBandit) => "semibandit",
        RoutingMode::Source(FeedbackMode::Bandit) => "bandit",
        RoutingMode::HopByHop => "hop",
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self == PolicySpec::default_for(self.kind) {
            write!(f, "{}", self.kind)
        } else {
            write!(f, "{}:{}", self.kind, mode_name(self.mode))
        }
    }
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, mode) = match s.split_once(':') {
            Some((n, m)) => (n, Some(m)),
            None => (s, None),
        };
        let kind: PolicyKind = name.trim().parse()?;
        let Some(mode) = mode else {
            return Ok(PolicySpec::default_for(kind));
        };
        let mode = match mode.trim() {
            "semibandit" => RoutingMode::Source(FeedbackMode::SemiBandit),
            "bandit" => RoutingMode::Source(FeedbackMode::Bandit),
            "hop" => RoutingMode::HopByHop,
            other => return Err(Error::Config(format!("unknown routing mode '{other}'"))),
        };
        PolicySpec::new(kind, mode)
    }
}

impl TryFrom<String> for PolicySpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PolicySpec> for String {
    fn from(p: PolicySpec) -> String {
        p.to_string()
    }
}

/// Which clock drives the exploration level of the hop-by-hop edge index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HopClock {
    /// Index of the packet in flight.
    #[default]
    Packet,
    /// Global slot counter.
    Slot,
}

/// Which counters feed the hop-by-hop edge index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HopStatistics {
    /// Updated after every attempt.
    #[default]
    Live,
    /// Frozen while a packet is in flight, updated on delivery.
    PacketSync,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyOptions {
    /// Cap the CUCB optimistic rate at 1.
    pub cucb_clamp: bool,
    pub hop_clock: HopClock,
    pub hop_statistics: HopStatistics,
    /// Reuse the cost-to-go table while the indexes are unchanged.
    pub cache_cost_to_go: bool,
    /// Slots a single packet may spend in the network before the run aborts.
    pub slot_cap: u64,
}

impl Default for PolicyOptions {
    fn default() -> Self {
        Self {
            cucb_clamp: true,
            hop_clock: HopClock::Packet,
            hop_statistics: HopStatistics::Live,
            cache_cost_to_go: true,
            slot_cap: 1_000_000,
        }
    }
}

/// Topology-level data shared by all policies of an experiment.
#[derive(Debug, Clone)]
pub struct RoutingContext {
    pub topology: NetworkTopology,
    /// Every loop-free source-destination path, when there are few enough.
    pub paths: Option<Vec<Path>>,
    pub cover: Vec<Path>,
    pub schedule: ExplorationSchedule,
}

impl RoutingContext {
    /// Enumerates up to `path_cap` paths; larger path sets fall back to
    /// policies that never need them.
    pub fn new(topology: NetworkTopology, path_cap: usize) -> Result<Self> {
        let paths = match enumerate_paths(&topology, path_cap) {
            Ok(p) => Some(p),
            Err(Error::PathExplosion { .. }) => None,
            Err(e) => return Err(e),
        };
        let cover = covering_paths(&topology, paths.as_deref());
        let h = match &paths {
            Some(p) => p.iter().map(Path::hops).max().unwrap_or(1),
            None => topology.node_count() - 1,
        };
        Ok(Self {
            topology,
            paths,
            cover,
            schedule: ExplorationSchedule::new(h),
        })
    }

    pub fn paths(&self) -> Result<&[Path]> {
        self.paths.as_deref().ok_or(Error::PathExplosion {
            cap: crate::graph::DEFAULT_PATH_CAP,
        })
    }
}

/// True cost weights `1 / theta`.
pub fn true_weights(params: &LinkParams) -> Result<WeightVector> {
    WeightVector::new(params.mean_delays())
}

/// Per-link edge-index weights; links never tried get weight 1.
fn edge_weights<C: Counters>(stats: &C, mut index: impl FnMut(LinkId) -> Result<f64>) -> Result<WeightVector> {
    let w = (0..stats.link_count())
        .map(|l| {
            if stats.attempts(l) == 0 {
                Ok(1.0)
            } else {
                index(l)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    WeightVector::new(w)
}

fn tie_tolerance(value: f64) -> f64 {
    1e-12 * value.abs().max(1.0)
}

/// Source-routing policy state.
#[derive(Debug, Clone)]
pub struct SourceRouter<'a> {
    spec: PolicySpec,
    ctx: &'a RoutingContext,
    options: PolicyOptions,
    stats: LinkStats,
    cover: VecDeque<Path>,
    fixed: Option<Path>,
    rng: Option<RngStream>,
    dispatched: u64,
}

impl<'a> SourceRouter<'a> {
    /// `params` is only read by the oracle; `seed` only by the uniform policy.
    pub fn new(
        spec: PolicySpec,
        ctx: &'a RoutingContext,
        params: &LinkParams,
        seed: u64,
        options: PolicyOptions,
    ) -> Result<Self> {
        if spec.is_hop_by_hop() {
            return Err(Error::Config(format!("{spec} is a hop-by-hop policy")));
        }
        if spec.kind.needs_paths() {
            ctx.paths()?;
        }
        let fixed = match spec.kind {
            PolicyKind::Oracle => Some(shortest_path(&ctx.topology, &true_weights(params)?)?),
            _ => None,
        };
        let rng = (spec.kind == PolicyKind::Uniform).then(|| RngStream::new(seed, u64::MAX));
        let cover = if spec.kind.learns() {
            ctx.cover.iter().cloned().collect()
        } else {
            VecDeque::new()
        };
        Ok(Self {
            spec,
            ctx,
            options,
            stats: LinkStats::new(ctx.topology.link_count()),
            cover,
            fixed,
            rng,
            dispatched: 0,
        })
    }

    pub fn spec(&self) -> PolicySpec {
        self.spec
    }

    /// Round index `n` of the next packet (packets dispatched + 1).
    pub fn round(&self) -> u64 {
        self.dispatched + 1
    }

    pub fn stats(&self) -> &LinkStats {
        &self.stats
    }

    pub fn initializing(&self) -> bool {
        !self.cover.is_empty()
    }

    pub fn feedback_mode(&self) -> FeedbackMode {
        match self.spec.mode {
            RoutingMode::Source(m) => m,
            RoutingMode::HopByHop => unreachable!("checked in new"),
        }
    }

    /// Path for the next packet.
    pub fn select(&mut self) -> Result<Path> {
        if let Some(p) = &self.fixed {
            return Ok(p.clone());
        }
        if let Some(p) = self.cover.front() {
            return Ok(p.clone());
        }
        let n = self.round();
        match self.spec.kind {
            PolicyKind::GeoCombUcb1 => {
                let f1 = self.ctx.schedule.f1(n);
                self.argmin_path(|p, st| index_b(p, st, f1))
            }
            PolicyKind::GeoCombUcb2 => {
                let f1 = self.ctx.schedule.f1(n);
                self.argmin_path(|p, st| index_c(p, st, f1))
            }
            PolicyKind::KlSr | PolicyKind::Cucb => {
                shortest_path(&self.ctx.topology, &self.link_weights()?)
            }
            PolicyKind::Uniform => {
                use rand::Rng;
                let paths = self.ctx.paths()?;
                let rng = self.rng.as_mut().expect("uniform policy owns a stream");
                Ok(paths[rng.gen_range(0..paths.len())].clone())
            }
            PolicyKind::Oracle | PolicyKind::KlHhr => unreachable!("handled above or rejected in new"),
        }
    }

    /// Edge weights the link-index policies run a shortest path on.
    pub fn link_weights(&self) -> Result<WeightVector> {
        let n = self.round();
        match self.spec.kind {
            PolicyKind::KlSr => {
                let f2 = self.ctx.schedule.f2(n);
                edge_weights(&self.stats, |l| index_omega(l, &self.stats, f2))
            }
            PolicyKind::Cucb => {
                let clamp = self.options.cucb_clamp;
                edge_weights(&self.stats, |l| index_cucb(l, &self.stats, n, clamp))
            }
            k => Err(Error::Config(format!("{k} has no edge weights"))),
        }
    }

    fn argmin_path(&self, index: impl Fn(&Path, &LinkStats) -> Result<f64>) -> Result<Path> {
        let mut best: Option<(f64, &Path)> = None;
        for p in self.ctx.paths()? {
            let v = index(p, &self.stats)?;
            match best {
                Some((b, _)) if v >= b - tie_tolerance(b) => {}
                _ => best = Some((v, p)),
            }
        }
        Ok(best.expect("at least one path").1.clone())
    }

    /// Absorbs the feedback of the packet just sent along `path`.
    pub fn observe(&mut self, path: &Path, feedback: &DelayFeedback) -> Result<()> {
        if self.spec.kind.learns() {
            self.stats.update_semibandit(feedback)?;
        }
        if self.cover.front() == Some(path) {
            self.cover.pop_front();
        }
        self.dispatched += 1;
        Ok(())
    }
}

/// Hop-by-hop policy state.
#[derive(Debug, Clone)]
pub struct HopRouter<'a> {
    spec: PolicySpec,
    ctx: &'a RoutingContext,
    options: PolicyOptions,
    stats: SlotStats,
    cover: VecDeque<Path>,
    following: Option<Path>,
    fixed: Option<CostToGo>,
    packets: u64,
    version: u64,
    cached: Option<(u64, u64, CostToGo)>,
    recomputations: u64,
}

impl<'a> HopRouter<'a> {
    pub fn new(spec: PolicySpec, ctx: &'a RoutingContext, params: &LinkParams, options: PolicyOptions) -> Result<Self> {
        if !spec.is_hop_by_hop() {
            return Err(Error::Config(format!("{spec} is not a hop-by-hop policy")));
        }
        let fixed = match spec.kind {
            PolicyKind::Oracle => Some(min_cost_to_destination(&ctx.topology, &true_weights(params)?)?),
            _ => None,
        };
        let cover = if spec.kind.learns() {
            ctx.cover.iter().cloned().collect()
        } else {
            VecDeque::new()
        };
        Ok(Self {
            spec,
            ctx,
            options,
            stats: SlotStats::new(ctx.topology.link_count()),
            cover,
            following: None,
            fixed,
            packets: 0,
            version: 0,
            cached: None,
            recomputations: 0,
        })
    }

    pub fn spec(&self) -> PolicySpec {
        self.spec
    }

    pub fn options(&self) -> &PolicyOptions {
        &self.options
    }

    pub fn stats(&self) -> &SlotStats {
        &self.stats
    }

    /// Packet index `n(tau)` of the packet in flight.
    pub fn packet(&self) -> u64 {
        self.packets
    }

    /// Number of cost-to-go tables computed so far.
    pub fn recomputations(&self) -> u64 {
        self.recomputations
    }

    pub fn begin_packet(&mut self) {
        self.packets += 1;
        self.following = self.cover.pop_front();
    }

    /// Outgoing link for the packet held at `at` during slot `slot` (1-based).
    pub fn select_link(&mut self, at: NodeId, slot: u64) -> Result<LinkId> {
        if let Some(p) = &self.following {
            if let Some(pos) = p.nodes().iter().position(|&v| v == at) {
                if pos < p.hops() {
                    return Ok(p.links()[pos]);
                }
            }
        }
        if let Some(to_go) = &self.fixed {
            return to_go.next[at].ok_or(Error::Stranded(at));
        }
        let tick = match self.options.hop_clock {
            HopClock::Packet => self.packets.max(1),
            HopClock::Slot => slot.max(1),
        };
        let fresh = match &self.cached {
            Some((v, t, _)) => !self.options.cache_cost_to_go || *v != self.version || *t != tick,
            None => true,
        };
        if fresh {
            let weights = self.weights(tick)?;
            let to_go = min_cost_to_destination(&self.ctx.topology, &weights)?;
            self.recomputations += 1;
            self.cached = Some((self.version, tick, to_go));
        }
        let to_go = &self.cached.as_ref().expect("filled above").2;
        to_go.next[at].ok_or(Error::Stranded(at))
    }

    /// Current edge-index weights at exploration tick `tick`.
    pub fn weights(&self, tick: u64) -> Result<WeightVector> {
        let f2 = self.ctx.schedule.f2(tick);
        match self.options.hop_statistics {
            HopStatistics::Live => edge_weights(&self.stats, |l| index_omega(l, &self.stats, f2)),
            HopStatistics::PacketSync => {
                let st = self.stats.committed();
                edge_weights(st, |l| index_omega(l, st, f2))
            }
        }
    }

    pub fn observe_attempt(&mut self, link: LinkId, success: bool) -> Result<()> {
        self.stats.update_slot(link, success)?;
        if self.options.hop_statistics == HopStatistics::Live {
            self.version += 1;
        }
        Ok(())
    }

    pub fn end_packet(&mut self) {
        self.stats.commit_pending();
        self.following = None;
        if self.options.hop_statistics == HopStatistics::PacketSync {
            self.version += 1;
        }
    }
}
