//! Asymptotic regret lower bounds on line networks.
//!
//! On a line network every path picks one link per hop, so the lower-bound
//! programs collapse to sums over the sub-optimal links. `C2` (semi-bandit
//! source routing, equal to the hop-by-hop constant) compares single links;
//! `C1` (bandit feedback) compares whole-path delay laws and is never smaller.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;

use crate::divergence::{klg, path_kl_information_to_tail};
use crate::env::{derive_seed, uniform_theta, RngStream, ThetaLaw};
use crate::error::{Error, Result};
use crate::graph::{LinkId, NetworkTopology};

/// Default relative truncation target for `C1` denominators.
pub const DEFAULT_TAIL_EPS: f64 = 1e-10;

/// Link parameters of a line network, hop by hop.
#[derive(Debug, Clone, PartialEq)]
pub struct LineNetwork {
    hops: Vec<Vec<f64>>,
    best: Vec<usize>,
}

impl LineNetwork {
    pub fn new(hops: Vec<Vec<f64>>) -> Result<Self> {
        if hops.is_empty() || hops.iter().any(Vec::is_empty) {
            return Err(Error::InvalidTopology(
                "a line network needs at least one hop and one link per hop".into(),
            ));
        }
        if let Some(t) = hops.iter().flatten().find(|t| !(**t > 0.0 && **t <= 1.0)) {
            return Err(Error::InvalidTheta(format!("{t} outside (0, 1]")));
        }
        let best = hops
            .iter()
            .map(|links| {
                // first maximum wins ties
                (0..links.len()).fold(0, |b, i| if links[i] > links[b] { i } else { b })
            })
            .collect();
        Ok(Self { hops, best })
    }

    /// `h` hops of `links_per_hop` links drawn i.i.d. uniform on `[low, high]`.
    pub fn random<R: Rng + ?Sized>(h: usize, links_per_hop: usize, low: f64, high: f64, rng: &mut R) -> Result<Self> {
        Self::new((0..h).map(|_| uniform_theta(links_per_hop, low, high, rng)).collect())
    }

    pub fn hop_count(&self) -> usize {
        self.hops.len()
    }

    pub fn hops(&self) -> &[Vec<f64>] {
        &self.hops
    }

    /// Position of the best link on each hop.
    pub fn best(&self) -> &[usize] {
        &self.best
    }

    /// Parameters along the optimal path.
    pub fn optimal_thetas(&self) -> Vec<f64> {
        self.hops.iter().zip(&self.best).map(|(l, &b)| l[b]).collect()
    }

    /// The equivalent topology (node `m` to `m + 1` on hop `m`) and the
    /// flattened link parameters, link ids assigned hop by hop.
    pub fn to_topology(&self) -> Result<(NetworkTopology, Vec<f64>)> {
        let counts: Vec<usize> = self.hops.iter().map(Vec::len).collect();
        let topo = NetworkTopology::line_with_counts(&counts)?;
        Ok((topo, self.hops.iter().flatten().copied().collect()))
    }

    /// Strictly worse links as `(hop, position, theta, best theta)`.
    fn suboptimal(&self) -> impl Iterator<Item = (usize, usize, f64, f64)> + '_ {
        self.hops.iter().enumerate().flat_map(move |(h, links)| {
            let top = links[self.best[h]];
            links
                .iter()
                .enumerate()
                .filter(move |(_, &t)| t < top)
                .map(move |(i, &t)| (h, i, t, top))
        })
    }

    fn link_id(&self, hop: usize, pos: usize) -> LinkId {
        self.hops[..hop].iter().map(Vec::len).sum::<usize>() + pos
    }
}

/// Semi-bandit constant: `sum_i (1/theta_i - 1/theta_best) / KLG(theta_i, theta_best)`.
pub fn c2_line(net: &LineNetwork) -> Result<f64> {
    net.suboptimal()
        .map(|(_, _, t, top)| Ok((1.0 / t - 1.0 / top) / klg(t, top)?))
        .sum()
}

/// `C1` together with the largest relative truncation error of any term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C1Value {
    pub value: f64,
    pub rel_error: f64,
}

/// Bandit-feedback constant: as [`c2_line`] but each denominator is the KL
/// divergence between the delay laws of the optimal path and of the optimal
/// path with link `i` swapped in.
///
/// Each KL sum is truncated once its tail bound falls below `tail_eps`
/// times the corresponding single-link divergence.
pub fn c1_line(net: &LineNetwork, tail_eps: f64) -> Result<C1Value> {
    let star = net.optimal_thetas();
    let mut value = 0.0;
    let mut rel_error: f64 = 0.0;
    for (h, pos, t, top) in net.suboptimal() {
        let single = klg(t, top)?;
        let mut swapped = star.clone();
        swapped[h] = t;
        let info = path_kl_information_to_tail(&swapped, &star, tail_eps * single.min(1.0))?;
        let den = info.value;
        if !(den > info.tail_bound) || !den.is_finite() {
            return Err(Error::DegenerateDenominator {
                link: net.link_id(h, pos),
                value: den,
            });
        }
        value += (1.0 / t - 1.0 / top) / den;
        rel_error = rel_error.max(info.tail_bound / (den - info.tail_bound));
    }
    Ok(C1Value { value, rel_error })
}

/// One row of the ratio sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioRow {
    pub h: usize,
    pub draws: usize,
    pub mean_ratio: f64,
    pub stderr: f64,
}

/// Ratio sweep settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioExperiment {
    pub hops: Vec<usize>,
    pub links_per_hop: usize,
    pub draws: usize,
    pub law: ThetaLaw,
    pub seed: u64,
    pub tail_eps: f64,
}

impl RatioExperiment {
    /// Seed of draw `draw` at `h` hops.
    pub fn draw_seed(&self, h: usize, draw: usize) -> u64 {
        derive_seed(
            self.seed,
            &[b"ratio", &(h as u64).to_le_bytes(), &(draw as u64).to_le_bytes()],
        )
    }

    /// `C1 / C2` for one random network.
    pub fn draw(&self, h: usize, draw: usize) -> Result<f64> {
        let seed = self.draw_seed(h, draw);
        let wrap = |source: Error| Error::Draw {
            hops: h,
            draw,
            seed,
            source: Box::new(source),
        };
        let ThetaLaw::Uniform { low, high } = self.law else {
            return Err(Error::Config(
                "the ratio sweep draws uniform link parameters".into(),
            ));
        };
        let mut rng = RngStream::new(seed, 0);
        let net = LineNetwork::random(h, self.links_per_hop, low, high, &mut rng).map_err(wrap)?;
        let c2 = c2_line(&net).map_err(wrap)?;
        if !(c2 > 0.0) {
            return Err(wrap(Error::Domain("C2 vanishes for this draw".into())));
        }
        let c1 = c1_line(&net, self.tail_eps).map_err(wrap)?;
        Ok(c1.value / c2)
    }

    /// Mean and standard error of `C1 / C2` per hop count, draws in parallel.
    pub fn run(&self) -> Result<Vec<RatioRow>> {
        if self.draws == 0 {
            return Err(Error::Config("the ratio sweep needs at least one draw".into()));
        }
        self.law.validate()?;
        self.hops
            .iter()
            .map(|&h| {
                let ratios = (0..self.draws)
                    .into_par_iter()
                    .map(|d| self.draw(h, d))
                    .collect::<Result<Vec<f64>>>()?;
                let (mean, sd) = mean_sd(&ratios);
                Ok(RatioRow {
                    h,
                    draws: self.draws,
                    mean_ratio: mean,
                    stderr: sd / (ratios.len() as f64).sqrt(),
                })
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, rows: &[RatioRow], mut out: W) -> Result<()> {
        writeln!(out, "H,draws,mean_ratio,stderr,theta_law,seed")?;
        let law = self.law.describe();
        for r in rows {
            writeln!(
                out,
                "{},{},{:.10e},{:.10e},{},{}",
                r.h, r.draws, r.mean_ratio, r.stderr, law, self.seed
            )?;
        }
        Ok(())
    }
}

/// Sample mean and (n - 1)-normalised standard deviation.
pub(crate) fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
