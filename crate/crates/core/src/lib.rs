//! Online shortest-path routing over links with geometrically distributed
//! delays.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: topologies, loop-free path enumeration and additive shortest paths.
//! - [`env`]: the ground-truth Bernoulli link processes and packet delay sampling.
//! - [`stats`]: per-link counters at packet and slot resolution.
//! - [`divergence`]: Bernoulli/geometric KL kernels and end-to-end delay pmfs.
//! - [`indexes`]: the optimistic path and edge indexes used by the policies.
//! - [`policies`]: source-routing and hop-by-hop routing policies.
//! - [`bounds`]: closed-form regret lower bounds on line networks.
//! - [`harness`]: replicated simulations, regret accounting and CSV output.

pub mod bounds;
pub mod divergence;
pub mod env;
pub mod error;
pub mod graph;
pub mod harness;
pub mod indexes;
pub mod policies;
pub mod stats;

pub use error::{Error, Result};
