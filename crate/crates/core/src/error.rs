use thiserror::Error;

use crate::graph::{LinkId, NodeId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("no path from node {from} to node {to}")]
    NoPath { from: NodeId, to: NodeId },
    #[error("path enumeration found more than {cap} paths")]
    PathExplosion { cap: usize },
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("invalid link parameter: {0}")]
    InvalidTheta(String),
    #[error("unknown link {0}")]
    UnknownLink(LinkId),
    #[error("expected {expected} feedback")]
    FeedbackKind { expected: &'static str },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("pmf support mismatch: {0}")]
    SupportMismatch(String),
    #[error("link {0} has not been explored yet")]
    UnexploredLink(LinkId),
    #[error("root finder did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("node {0} has no outgoing link that reaches the destination")]
    Stranded(NodeId),
    #[error("packet {packet} exceeded the slot cap of {cap}")]
    SlotCapExceeded { packet: u64, cap: u64 },
    #[error("degenerate lower-bound denominator for link {link}: {value}")]
    DegenerateDenominator { link: LinkId, value: f64 },
    #[error("checkpoint grids differ between traces")]
    MisalignedCheckpoints,
    #[error("need at least {needed} traces, got {got}")]
    TooFewTraces { needed: usize, got: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unknown policy `{0}`")]
    UnknownPolicy(String),
    #[error("run {run} of `{policy}`: {source}")]
    Run {
        policy: String,
        run: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("draw {draw} (seed {seed}) at H = {hops}: {source}")]
    Draw {
        hops: usize,
        draw: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
