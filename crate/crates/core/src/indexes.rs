//! Optimistic indexes.
//!
//! Path indexes `b` and `c` lower-bound the expected path delay with high
//! probability; the edge index `omega` does the same for one link and is
//! additive over a path. All take the exploration level (`f1(n)` or `f2(n)`)
//! as an argument so they can be evaluated for any round or slot clock.

use crate::divergence::kl;
use crate::error::{Error, Result};
use crate::graph::{LinkId, Path};
use crate::stats::Counters;

/// Iteration cap for every root finder in this module.
pub const MAX_ITERATIONS: usize = 200;

/// Exploration levels `f1` (path indexes) and `f2` (edge indexes).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExplorationSchedule {
    h: usize,
}

impl ExplorationSchedule {
    /// `h` is the largest hop count of any candidate path.
    pub fn new(h: usize) -> Self {
        Self { h }
    }

    pub fn h(&self) -> usize {
        self.h
    }

    /// `ln n + 4 H ln ln n`.
    pub fn f1(&self, n: u64) -> f64 {
        ln(n) + 4.0 * self.h as f64 * ln_ln(n)
    }

    /// `ln n + 3 ln ln n`.
    pub fn f2(&self, n: u64) -> f64 {
        ln(n) + 3.0 * ln_ln(n)
    }
}

fn ln(n: u64) -> f64 {
    (n.max(1) as f64).ln()
}

// Zero below n = 3, where ln ln n is negative or undefined.
fn ln_ln(n: u64) -> f64 {
    if n < 3 {
        0.0
    } else {
        (n as f64).ln().ln()
    }
}

fn observed<C: Counters>(stats: &C, link: LinkId) -> Result<(u64, u64)> {
    if link >= stats.link_count() {
        return Err(Error::UnknownLink(link));
    }
    let t = stats.attempts(link);
    if t == 0 {
        return Err(Error::UnexploredLink(link));
    }
    Ok((stats.successes(link), t))
}

/// `sum_i 1 / theta_hat_i` over the path.
pub fn empirical_delay<C: Counters>(path: &Path, stats: &C) -> Result<f64> {
    path.links().iter().try_fold(0.0, |acc, &l| {
        let (s, t) = observed(stats, l)?;
        Ok(acc + t as f64 / s as f64)
    })
}

/// Explicit path index `c_p`. May be negative.
pub fn index_c<C: Counters>(path: &Path, stats: &C, f1: f64) -> Result<f64> {
    let mut mean = 0.0;
    let mut spread = 0.0;
    for &l in path.links() {
        let (s, t) = observed(stats, l)?;
        if s == 0 {
            return Err(Error::UnexploredLink(l));
        }
        let th = s as f64 / t as f64;
        mean += 1.0 / th;
        spread += 1.0 / (s as f64 * th.powi(3));
    }
    Ok(mean - (f1.max(0.0) / 2.0 * spread).sqrt())
}

/// Largest `q` in `[theta_hat, 1]` with `KL(theta_hat, q) <= budget`.
pub fn kl_upper_bound(theta_hat: f64, budget: f64) -> f64 {
    if theta_hat >= 1.0 {
        return 1.0;
    }
    if budget <= 0.0 {
        return theta_hat;
    }
    let (mut lo, mut hi) = (theta_hat, 1.0);
    for _ in 0..MAX_ITERATIONS {
        if hi - lo <= 1e-13 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if kl(theta_hat, mid) <= budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Edge index `omega_i = 1 / q` with `q` the KL upper confidence bound at
/// level `f2 / t_i`.
pub fn index_omega<C: Counters>(link: LinkId, stats: &C, f2: f64) -> Result<f64> {
    let (s, t) = observed(stats, link)?;
    let q = kl_upper_bound(s as f64 / t as f64, f2 / t as f64);
    Ok(1.0 / q)
}

/// Edge index of the CUCB baseline; `clamp` caps the optimistic success
/// rate at 1 so that no link costs less than one slot.
pub fn index_cucb<C: Counters>(link: LinkId, stats: &C, n: u64, clamp: bool) -> Result<f64> {
    let (s, t) = observed(stats, link)?;
    let rate = s as f64 / t as f64 + (1.5 * ln(n) / t as f64).sqrt();
    Ok(1.0 / if clamp { rate.min(1.0) } else { rate })
}

/// Minimizer of the per-link Lagrangian, `g(lambda, theta_hat, t)`, together
/// with `1 - g` computed without cancellation.
fn lagrange_point(lambda: f64, theta_hat: f64, t: f64) -> (f64, f64) {
    let x = lambda * t;
    let a = 1.0 - theta_hat * x;
    let root = (a * a + 4.0 * x).sqrt();
    let u = if a >= 0.0 {
        2.0 / (a + root)
    } else {
        (root - a) / (2.0 * x)
    };
    // u solves x u^2 + (1 - theta_hat x) u - 1 = 0
    let one_minus = x * u * (u - theta_hat);
    (u.min(1.0), one_minus.max(0.0))
}

fn kl_from(theta_hat: f64, u: f64, one_minus_u: f64) -> f64 {
    let mut d = 0.0;
    if theta_hat > 0.0 {
        d += theta_hat * (theta_hat / u).ln();
    }
    if theta_hat < 1.0 {
        d += (1.0 - theta_hat) * ((1.0 - theta_hat) / one_minus_u).ln();
    }
    d.max(0.0)
}

/// Solution of the program behind `b_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct BSolution {
    pub value: f64,
    /// Multiplier of the budget constraint; `None` when no link is uncertain
    /// or the budget is zero.
    pub lambda: Option<f64>,
    /// Optimal optimistic success rate per path link, in path order.
    pub u: Vec<f64>,
    /// `sum_i t_i KL(theta_hat_i, u_i)` at the solution.
    pub spent: f64,
    pub iterations: usize,
}

/// Path index `b_p`: the smallest `sum_i 1/u_i` over rates `u` with
/// `sum_i t_i KL(theta_hat_i, u_i) <= f1`.
pub fn index_b<C: Counters>(path: &Path, stats: &C, f1: f64) -> Result<f64> {
    Ok(index_b_solution(path, stats, f1)?.value)
}

pub fn index_b_solution<C: Counters>(path: &Path, stats: &C, f1: f64) -> Result<BSolution> {
    let mut obs = Vec::with_capacity(path.hops());
    for &l in path.links() {
        let (s, t) = observed(stats, l)?;
        obs.push((s as f64 / t as f64, t as f64));
    }
    let uncertain: Vec<usize> = (0..obs.len()).filter(|&i| obs[i].0 != 1.0).collect();
    if uncertain.is_empty() {
        return Ok(BSolution {
            value: obs.len() as f64,
            lambda: None,
            u: vec![1.0; obs.len()],
            spent: 0.0,
            iterations: 0,
        });
    }
    if f1 <= 0.0 {
        return Ok(BSolution {
            value: obs.iter().map(|o| 1.0 / o.0).sum(),
            lambda: None,
            u: obs.iter().map(|o| o.0).collect(),
            spent: 0.0,
            iterations: 0,
        });
    }
    let spend = |lambda: f64| -> f64 {
        uncertain
            .iter()
            .map(|&i| {
                let (th, t) = obs[i];
                let (u, om) = lagrange_point(lambda, th, t);
                t * kl_from(th, u, om)
            })
            .sum()
    };
    // spend() falls from +inf to 0 as lambda grows.
    let mut iterations = 0;
    let (mut lo, mut hi) = (1.0f64, 1.0f64);
    while spend(lo) < f1 {
        lo /= 16.0;
        iterations += 1;
        if iterations > MAX_ITERATIONS || lo < 1e-300 {
            return Err(Error::NoConvergence { iterations });
        }
    }
    while spend(hi) > f1 {
        hi *= 16.0;
        iterations += 1;
        if iterations > MAX_ITERATIONS || hi > 1e300 {
            return Err(Error::NoConvergence { iterations });
        }
    }
    let tol = 1e-10 * f1.max(1.0);
    let mut lambda = (lo * hi).sqrt();
    let mut bisections = 0;
    loop {
        let f = spend(lambda);
        if (f - f1).abs() <= tol || hi / lo - 1.0 < 1e-12 {
            break;
        }
        if f > f1 {
            lo = lambda;
        } else {
            hi = lambda;
        }
        lambda = (lo * hi).sqrt();
        bisections += 1;
        if bisections > MAX_ITERATIONS {
            return Err(Error::NoConvergence {
                iterations: iterations + bisections,
            });
        }
    }
    let mut value = (obs.len() - uncertain.len()) as f64;
    let mut u = vec![1.0; obs.len()];
    for &i in &uncertain {
        let (th, t) = obs[i];
        let g = lagrange_point(lambda, th, t).0;
        u[i] = g;
        value += 1.0 / g;
    }
    Ok(BSolution {
        value,
        lambda: Some(lambda),
        u,
        spent: spend(lambda),
        iterations: iterations + bisections,
    })
}
