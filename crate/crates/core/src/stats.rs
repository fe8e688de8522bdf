//! Per-link observation counters.
//!
//! Counters are exact integers; empirical success rates are derived from them
//! on demand.

use crate::env::DelayFeedback;
use crate::error::{Error, Result};
use crate::graph::LinkId;

/// Packet-resolution counters: `s_i` packets routed through link `i` and
/// `t_i` transmission attempts they needed there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkStats {
    s: Vec<u64>,
    t: Vec<u64>,
}

impl LinkStats {
    pub fn new(links: usize) -> Self {
        Self {
            s: vec![0; links],
            t: vec![0; links],
        }
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn s(&self, link: LinkId) -> u64 {
        self.s[link]
    }

    pub fn t(&self, link: LinkId) -> u64 {
        self.t[link]
    }

    /// `s_i / t_i`, or 0 for a link never used.
    pub fn theta_hat(&self, link: LinkId) -> f64 {
        ratio(self.s[link], self.t[link])
    }

    /// Records one packet that needed `delay` attempts on `link`.
    pub fn record(&mut self, link: LinkId, delay: u64) -> Result<()> {
        if link >= self.s.len() {
            return Err(Error::UnknownLink(link));
        }
        if delay == 0 {
            return Err(Error::Domain("a link delay is at least one slot".into()));
        }
        self.s[link] += 1;
        self.t[link] += delay;
        Ok(())
    }

    pub fn update_semibandit(&mut self, feedback: &DelayFeedback) -> Result<()> {
        let DelayFeedback::SemiBandit(per_link) = feedback else {
            return Err(Error::FeedbackKind {
                expected: "semi-bandit",
            });
        };
        if let Some(&(link, _)) = per_link.iter().find(|(l, _)| *l >= self.s.len()) {
            return Err(Error::UnknownLink(link));
        }
        for &(link, delay) in per_link {
            self.record(link, delay)?;
        }
        Ok(())
    }

    /// Adds another counter set (counters are plain sums).
    pub fn merge(&mut self, other: &LinkStats) {
        for (a, b) in self.s.iter_mut().zip(&other.s) {
            *a += b;
        }
        for (a, b) in self.t.iter_mut().zip(&other.t) {
            *a += b;
        }
    }

    /// One CSV line of the counters: `s_0,t_0,s_1,t_1,...`.
    pub fn snapshot_row(&self) -> String {
        self.s
            .iter()
            .zip(&self.t)
            .map(|(s, t)| format!("{s},{t}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Read access to success/attempt counters, shared by both resolutions.
pub trait Counters {
    fn link_count(&self) -> usize;
    /// Successes (delivered packets) on `link`.
    fn successes(&self, link: LinkId) -> u64;
    /// Transmission attempts on `link`.
    fn attempts(&self, link: LinkId) -> u64;

    fn rate(&self, link: LinkId) -> f64 {
        ratio(self.successes(link), self.attempts(link))
    }
}

impl Counters for LinkStats {
    fn link_count(&self) -> usize {
        self.len()
    }
    fn successes(&self, link: LinkId) -> u64 {
        self.s[link]
    }
    fn attempts(&self, link: LinkId) -> u64 {
        self.t[link]
    }
}

impl Counters for SlotStats {
    fn link_count(&self) -> usize {
        self.t_prime.len()
    }
    fn successes(&self, link: LinkId) -> u64 {
        self.live_s[link]
    }
    fn attempts(&self, link: LinkId) -> u64 {
        self.t_prime[link]
    }
}

fn ratio(s: u64, t: u64) -> f64 {
    if t == 0 {
        0.0
    } else {
        s as f64 / t as f64
    }
}

/// Slot-resolution counters for hop-by-hop routing.
///
/// The live counters (`s_i` and `t'_i`) move on every attempt. The committed
/// counters only absorb a packet's attempts once it is delivered, which is
/// what a policy synchronised on packet boundaries sees.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotStats {
    live_s: Vec<u64>,
    t_prime: Vec<u64>,
    pending_s: Vec<u64>,
    pending_t: Vec<u64>,
    committed: LinkStats,
}

impl SlotStats {
    pub fn new(links: usize) -> Self {
        Self {
            live_s: vec![0; links],
            t_prime: vec![0; links],
            pending_s: vec![0; links],
            pending_t: vec![0; links],
            committed: LinkStats::new(links),
        }
    }

    pub fn s(&self, link: LinkId) -> u64 {
        self.live_s[link]
    }

    pub fn t_prime(&self, link: LinkId) -> u64 {
        self.t_prime[link]
    }

    /// `s_i / t'_i`, or 0 before the first attempt.
    pub fn theta_tilde(&self, link: LinkId) -> f64 {
        ratio(self.live_s[link], self.t_prime[link])
    }

    pub fn committed(&self) -> &LinkStats {
        &self.committed
    }

    pub fn update_slot(&mut self, link: LinkId, success: bool) -> Result<()> {
        if link >= self.t_prime.len() {
            return Err(Error::UnknownLink(link));
        }
        self.t_prime[link] += 1;
        self.pending_t[link] += 1;
        if success {
            self.live_s[link] += 1;
            self.pending_s[link] += 1;
        }
        Ok(())
    }

    /// Folds the attempts made since the last commit into the committed
    /// counters. Attempts on a link that was abandoned before a success count
    /// towards `t_i` only.
    pub fn commit_pending(&mut self) {
        for l in 0..self.pending_t.len() {
            self.committed.s[l] += std::mem::take(&mut self.pending_s[l]);
            self.committed.t[l] += std::mem::take(&mut self.pending_t[l]);
        }
    }
}
