//! Kullback-Leibler kernels and end-to-end delay distributions.
//!
//! The delay of a path is a sum of independent geometric variables. Its pmf
//! is available in closed form when the link parameters are pairwise
//! distinct, and always by iterated convolution. The convolution is carried
//! out in the log domain so that far tails (needed for KL sums between two
//! paths) never underflow.

use crate::error::{Error, Result};

/// Pairwise gap below which the closed-form pmf is never attempted.
pub const DISTINCT_TOL: f64 = 1e-9;

/// Largest `sum |w_i|` of closed-form mixture weights that is still evaluated
/// in closed form; beyond it cancellation costs more than ~1e-11 absolute.
pub const CLOSED_FORM_MAX_WEIGHT: f64 = 1e5;

/// Default truncation target for pmf tails and KL sums.
pub const DEFAULT_TAIL_EPS: f64 = 1e-10;

/// Bernoulli KL divergence, `+inf` where it diverges.
pub(crate) fn kl(u: f64, v: f64) -> f64 {
    let mut d = 0.0;
    if u > 0.0 {
        d += u * (u / v).ln();
    }
    if u < 1.0 {
        d += (1.0 - u) * ((1.0 - u) / (1.0 - v)).ln();
    }
    d.max(0.0)
}

/// `KL(Bernoulli(u) || Bernoulli(v))` with `0 ln 0 = 0`.
pub fn kl_bernoulli(u: f64, v: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&v) {
        return Err(Error::Domain(format!("KL({u}, {v}) outside [0, 1]^2")));
    }
    if (v == 0.0 && u > 0.0) || (v == 1.0 && u < 1.0) {
        return Err(Error::Domain(format!("KL({u}, {v}) is infinite")));
    }
    Ok(kl(u, v))
}

/// KL divergence between geometric distributions with success parameters
/// `u` and `v`; equal to `KL(u, v) / u`.
pub fn klg(u: f64, v: f64) -> Result<f64> {
    if !(u > 0.0 && u <= 1.0) || !(v > 0.0 && v <= 1.0) {
        return Err(Error::Domain(format!("KLG({u}, {v}) needs both in (0, 1]")));
    }
    Ok(kl_bernoulli(u, v)? / u)
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `P(NB > k)` where `NB` counts the trials needed for `h` successes of a
/// Bernoulli(`theta`) sequence, i.e. `P(Binomial(k, theta) <= h - 1)`.
pub fn negbin_tail(h: usize, theta: f64, k: usize) -> f64 {
    if k < h {
        return 1.0;
    }
    if theta >= 1.0 {
        return 0.0;
    }
    let log_q = (-theta).ln_1p();
    let log_odds = theta.ln() - log_q;
    let mut log_term = k as f64 * log_q;
    let mut sum = 0.0;
    for j in 0..h {
        sum += log_term.exp();
        log_term += ((k - j) as f64 / (j + 1) as f64).ln() + log_odds;
    }
    sum.min(1.0)
}

/// `E[(NB - h) 1{NB > k}]` for the same negative binomial.
fn negbin_excess_mean(h: usize, theta: f64, k: usize) -> f64 {
    if theta >= 1.0 {
        return 0.0;
    }
    let v = (h as f64 / theta) * negbin_tail(h + 1, theta, k + 1) - h as f64 * negbin_tail(h, theta, k);
    v.max(0.0)
}

/// How [`path_delay_pmf_with`] evaluates the pmf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PmfMethod {
    /// Closed form when the parameters are distinct and well conditioned,
    /// convolution otherwise.
    #[default]
    Auto,
    ClosedForm,
    Convolution,
}

/// Truncated end-to-end delay pmf of a path.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayPmf {
    start: usize,
    probs: Vec<f64>,
    log_probs: Vec<f64>,
    tail_bound: f64,
    thetas: Vec<f64>,
    closed_form: bool,
}

impl DelayPmf {
    /// Smallest possible delay, the hop count `h(p)`.
    pub fn start(&self) -> usize {
        self.start
    }

    /// Largest delay kept.
    pub fn k_max(&self) -> usize {
        self.start + self.probs.len() - 1
    }

    /// Probabilities for delays `start ..= k_max`.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    /// `P(delay = k)`, zero outside the kept support.
    pub fn pmf(&self, k: usize) -> f64 {
        if k < self.start {
            return 0.0;
        }
        self.probs.get(k - self.start).copied().unwrap_or(0.0)
    }

    /// Upper bound on the probability mass beyond `k_max`.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn used_closed_form(&self) -> bool {
        self.closed_form
    }

    pub fn mass(&self) -> f64 {
        self.probs.iter().sum()
    }
}

fn check_thetas(thetas: &[f64]) -> Result<()> {
    if thetas.is_empty() {
        return Err(Error::Domain("a path has at least one link".into()));
    }
    if let Some(t) = thetas.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
        return Err(Error::Domain(format!("link parameter {t} outside (0, 1]")));
    }
    Ok(())
}

/// Closed-form mixture weights `prod_{j != i} theta_j / (theta_j - theta_i)`,
/// or `None` when two parameters are closer than [`DISTINCT_TOL`].
pub fn mixture_weights(thetas: &[f64]) -> Option<Vec<f64>> {
    let mut weights = Vec::with_capacity(thetas.len());
    for (i, &ti) in thetas.iter().enumerate() {
        let mut w = 1.0;
        for (j, &tj) in thetas.iter().enumerate() {
            if i == j {
                continue;
            }
            if (tj - ti).abs() <= DISTINCT_TOL {
                return None;
            }
            w *= tj / (tj - ti);
        }
        weights.push(w);
    }
    Some(weights)
}

/// Pmf of the delay along a path whose links have parameters `thetas`,
/// truncated at `k_max`.
pub fn path_delay_pmf(thetas: &[f64], k_max: usize) -> Result<DelayPmf> {
    path_delay_pmf_with(thetas, k_max, PmfMethod::Auto)
}

pub fn path_delay_pmf_with(thetas: &[f64], k_max: usize, method: PmfMethod) -> Result<DelayPmf> {
    check_thetas(thetas)?;
    let h = thetas.len();
    if k_max < h {
        return Err(Error::Domain(format!(
            "k_max = {k_max} is below the hop count {h}"
        )));
    }
    let weights = match method {
        PmfMethod::Convolution => None,
        PmfMethod::ClosedForm => Some(mixture_weights(thetas).ok_or_else(|| {
            Error::Domain("closed-form pmf needs pairwise distinct parameters".into())
        })?),
        PmfMethod::Auto => mixture_weights(thetas)
            .filter(|w| w.iter().map(|x| x.abs()).sum::<f64>() <= CLOSED_FORM_MAX_WEIGHT),
    };
    let theta_min = thetas.iter().copied().fold(f64::INFINITY, f64::min);
    let tail_bound = negbin_tail(h, theta_min, k_max);
    let (probs, log_probs, closed_form) = match weights {
        Some(w) => {
            let probs: Vec<f64> = (h..=k_max)
                .map(|k| {
                    let p: f64 = thetas
                        .iter()
                        .zip(&w)
                        .map(|(&t, &wi)| wi * t * (1.0 - t).powi(k as i32 - 1))
                        .sum();
                    p.max(0.0)
                })
                .collect();
            let logs = probs.iter().map(|p| p.ln()).collect();
            (probs, logs, true)
        }
        None => {
            let logs = log_convolution(thetas, k_max);
            let probs = logs.iter().map(|l| l.exp()).collect();
            (probs, logs, false)
        }
    };
    Ok(DelayPmf {
        start: h,
        probs,
        log_probs,
        tail_bound,
        thetas: thetas.to_vec(),
        closed_form,
    })
}

/// Log-pmf of the sum of geometrics for delays `h ..= k_max`.
fn log_convolution(thetas: &[f64], k_max: usize) -> Vec<f64> {
    // cur[k] = log P(partial sum = k), k = 0 ..= k_max
    let mut cur = vec![f64::NEG_INFINITY; k_max + 1];
    cur[0] = 0.0;
    let mut next = vec![f64::NEG_INFINITY; k_max + 1];
    for (m, &t) in thetas.iter().enumerate() {
        let log_t = t.ln();
        let log_q = if t >= 1.0 { f64::NEG_INFINITY } else { (-t).ln_1p() };
        next.iter_mut().for_each(|x| *x = f64::NEG_INFINITY);
        // P(S + G = k) = (1 - t) P(S + G = k - 1) + t P(S = k - 1)
        for k in (m + 1)..=k_max {
            let stay = if log_q == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                next[k - 1] + log_q
            };
            next[k] = log_add_exp(stay, cur[k - 1] + log_t);
        }
        std::mem::swap(&mut cur, &mut next);
    }
    cur.split_off(thetas.len())
}

/// Smallest truncation point whose negative-binomial tail bound is below `eps`.
pub fn k_max_for_tail(thetas: &[f64], eps: f64) -> Result<usize> {
    check_thetas(thetas)?;
    let h = thetas.len();
    let theta_min = thetas.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(smallest_k(h, |k| negbin_tail(h, theta_min, k) <= eps))
}

/// Smallest `k >= h` with `ok(k)`, for `ok` monotone in `k`.
fn smallest_k(h: usize, ok: impl Fn(usize) -> bool) -> usize {
    let mut hi = h.max(1);
    while !ok(hi) {
        hi = hi.saturating_mul(2);
        if hi > 1 << 30 {
            return hi;
        }
    }
    let mut lo = h;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

/// Pmf truncated where the tail bound first drops below `eps`.
pub fn path_delay_pmf_to_tail(thetas: &[f64], eps: f64, method: PmfMethod) -> Result<DelayPmf> {
    let k = k_max_for_tail(thetas, eps)?;
    path_delay_pmf_with(thetas, k, method)
}

/// A truncated KL sum together with a bound on what truncation dropped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlInformation {
    pub value: f64,
    pub tail_bound: f64,
}

/// Bound on `|sum_{k > k_max} p(k) ln(p(k) / q(k))|` for path delays under
/// parameters `p_thetas` (the reference law) and `q_thetas`.
///
/// Upward: `q(k) >= prod(q) (1 - q_min)^(k - h)`, so each term is at most
/// `p(k) (A + B (k - h))`, summed against a dominating negative binomial.
/// Downward: `p ln(p / q) >= p - q`, so the tail is at least `-P_q(> k_max)`.
fn kl_tail_bound(p_thetas: &[f64], q_thetas: &[f64], k_max: usize) -> f64 {
    let h = p_thetas.len();
    let p_min = p_thetas.iter().copied().fold(f64::INFINITY, f64::min);
    let q_min = q_thetas.iter().copied().fold(f64::INFINITY, f64::min);
    let a: f64 = -q_thetas.iter().map(|t| t.ln()).sum::<f64>();
    let mass = negbin_tail(h, p_min, k_max);
    let excess = negbin_excess_mean(h, p_min, k_max);
    let b_term = if excess == 0.0 {
        0.0
    } else if q_min >= 1.0 {
        f64::INFINITY
    } else {
        -(-q_min).ln_1p() * excess
    };
    let upward = a * mass + b_term;
    let downward = negbin_tail(h, q_min, k_max);
    upward.max(downward)
}

/// Truncated `sum_k p(k) ln(p(k) / q(k))` between two delay pmfs on the same
/// support, with a tail bound.
pub fn path_kl_information(p: &DelayPmf, q: &DelayPmf) -> Result<KlInformation> {
    if p.start != q.start {
        return Err(Error::SupportMismatch(format!(
            "supports start at {} and {}",
            p.start, q.start
        )));
    }
    let k_max = p.k_max().min(q.k_max());
    let len = k_max - p.start + 1;
    let mut value = 0.0;
    for (idx, (&lp, &lq)) in p.log_probs[..len].iter().zip(&q.log_probs[..len]).enumerate() {
        if lp == f64::NEG_INFINITY {
            continue;
        }
        if lq == f64::NEG_INFINITY {
            return Err(Error::SupportMismatch(format!(
                "reference pmf vanishes at delay {} where the other does not",
                p.start + idx
            )));
        }
        value += lp.exp() * (lp - lq);
    }
    let tail_bound = kl_tail_bound(&p.thetas, &q.thetas, k_max);
    Ok(KlInformation { value, tail_bound })
}

/// KL information between the path delay laws under `p_thetas` and
/// `q_thetas`, truncated so that the tail bound is below `eps`.
pub fn path_kl_information_to_tail(p_thetas: &[f64], q_thetas: &[f64], eps: f64) -> Result<KlInformation> {
    check_thetas(p_thetas)?;
    check_thetas(q_thetas)?;
    if p_thetas.len() != q_thetas.len() {
        return Err(Error::SupportMismatch(format!(
            "{} links against {}",
            p_thetas.len(),
            q_thetas.len()
        )));
    }
    let h = p_thetas.len();
    let p_min = p_thetas.iter().copied().fold(f64::INFINITY, f64::min);
    let q_min = q_thetas.iter().copied().fold(f64::INFINITY, f64::min);
    let k = smallest_k(h, |k| {
        kl_tail_bound(p_thetas, q_thetas, k) <= eps
            && negbin_tail(h, p_min, k) <= eps
            && negbin_tail(h, q_min, k) <= eps
    });
    let p = path_delay_pmf_with(p_thetas, k, PmfMethod::Convolution)?;
    let q = path_delay_pmf_with(q_thetas, k, PmfMethod::Convolution)?;
    path_kl_information(&p, &q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    // Direct convolution of truncated geometric pmfs, in linear space.
    fn convolution_oracle(thetas: &[f64], k_max: usize) -> Vec<f64> {
        let mut dist = vec![0.0; k_max + 1];
        dist[0] = 1.0;
        for &t in thetas {
            let mut out = vec![0.0; k_max + 1];
            for (a, &pa) in dist.iter().enumerate() {
                if pa == 0.0 {
                    continue;
                }
                for d in 1..=(k_max - a.min(k_max)) {
                    out[a + d] += pa * t * (1.0 - t).powi(d as i32 - 1);
                }
            }
            dist = out;
        }
        dist
    }

    #[test]
    fn kl_values() {
        assert_eq!(kl_bernoulli(0.5, 0.5).unwrap(), 0.0);
        let want = 0.25 * 0.5f64.ln() + 0.75 * 1.5f64.ln();
        assert_abs_diff_eq!(kl_bernoulli(0.25, 0.5).unwrap(), want, epsilon = 1e-15);
        assert_abs_diff_eq!(kl_bernoulli(0.25, 0.5).unwrap(), 0.13081, epsilon = 1e-5);
        assert_abs_diff_eq!(kl_bernoulli(0.0, 0.3).unwrap(), -(0.7f64).ln(), epsilon = 1e-15);
        assert_eq!(kl_bernoulli(1.0, 1.0).unwrap(), 0.0);
        assert!(kl_bernoulli(0.5, 1.0).is_err());
        assert!(kl_bernoulli(0.5, 0.0).is_err());
        assert!(kl_bernoulli(1.2, 0.5).is_err());
    }

    #[test]
    fn klg_values() {
        assert_eq!(klg(0.5, 0.5).unwrap(), 0.0);
        assert_abs_diff_eq!(klg(0.25, 0.5).unwrap(), 0.523248, epsilon = 1e-6);
        assert!(klg(0.0, 0.5).is_err());
        // series oracle
        let (u, v): (f64, f64) = (0.3, 0.55);
        let mut series = 0.0;
        for k in 1..2000 {
            let lp = u.ln() + (k - 1) as f64 * (1.0f64 - u).ln();
            let lq = v.ln() + (k - 1) as f64 * (1.0f64 - v).ln();
            series += lp.exp() * (lp - lq);
        }
        assert_abs_diff_eq!(klg(u, v).unwrap(), series, epsilon = 1e-12);
    }

    #[test]
    fn single_link_pmf_is_geometric() {
        let pmf = path_delay_pmf(&[0.5], 30).unwrap();
        for k in 1..=30 {
            assert_abs_diff_eq!(pmf.pmf(k), 0.5 * 0.5f64.powi(k as i32 - 1), epsilon = 1e-15);
        }
    }

    #[test]
    fn two_link_pmf_at_minimum() {
        let pmf = path_delay_pmf(&[0.5, 0.25], 40).unwrap();
        assert!(pmf.used_closed_form());
        assert_abs_diff_eq!(pmf.pmf(2), 0.125, epsilon = 1e-15);
        assert_eq!(pmf.pmf(1), 0.0);
        let conv = path_delay_pmf_with(&[0.5, 0.25], 40, PmfMethod::Convolution).unwrap();
        assert_abs_diff_eq!(conv.pmf(2), 0.125, epsilon = 1e-15);
    }

    #[test]
    fn equal_parameters_use_convolution() {
        let pmf = path_delay_pmf(&[0.5, 0.5], 40).unwrap();
        assert!(!pmf.used_closed_form());
        assert_abs_diff_eq!(pmf.pmf(2), 0.25, epsilon = 1e-15);
        // negative binomial: (k - 1) 0.5^k
        assert_abs_diff_eq!(pmf.pmf(5), 4.0 * 0.5f64.powi(5), epsilon = 1e-15);
        assert!(path_delay_pmf_with(&[0.5, 0.5], 40, PmfMethod::ClosedForm).is_err());
    }

    #[test]
    fn k_max_below_hops_is_rejected() {
        assert!(path_delay_pmf(&[0.5, 0.4, 0.3], 2).is_err());
    }

    #[test]
    fn certain_links_concentrate_on_hop_count() {
        let pmf = path_delay_pmf(&[1.0, 1.0, 1.0], 10).unwrap();
        assert_eq!(pmf.pmf(3), 1.0);
        assert_eq!(pmf.pmf(4), 0.0);
        assert_eq!(pmf.tail_bound(), 0.0);
    }

    #[test]
    fn convolution_matches_oracle() {
        let thetas = [0.3, 0.3, 0.8, 0.55];
        let pmf = path_delay_pmf_with(&thetas, 60, PmfMethod::Convolution).unwrap();
        let oracle = convolution_oracle(&thetas, 60);
        for k in 4..=60 {
            assert_abs_diff_eq!(pmf.pmf(k), oracle[k], epsilon = 1e-14);
        }
    }

    #[test]
    fn log_domain_tail_does_not_underflow() {
        let pmf = path_delay_pmf_with(&[0.99, 0.99, 0.99], 400, PmfMethod::Convolution).unwrap();
        let last = *pmf.log_probs().last().unwrap();
        assert!(last.is_finite() && last < -700.0);
    }

    #[test]
    fn identical_pmfs_have_zero_information() {
        let p = path_delay_pmf(&[0.4, 0.7], 200).unwrap();
        let info = path_kl_information(&p, &p).unwrap();
        assert_eq!(info.value, 0.0);
    }

    #[test]
    fn support_mismatch_is_an_error() {
        let p = path_delay_pmf(&[0.4, 0.7], 50).unwrap();
        let q = path_delay_pmf(&[0.4], 50).unwrap();
        assert!(matches!(path_kl_information(&p, &q), Err(Error::SupportMismatch(_))));
        let certain = path_delay_pmf(&[1.0, 1.0], 50).unwrap();
        assert!(path_kl_information(&p, &certain).is_err());
    }

    #[test]
    fn two_link_information_against_series() {
        let (th, la) = ([0.5, 0.25], [0.5, 0.5]);
        let info = path_kl_information_to_tail(&th, &la, 1e-12).unwrap();
        // linear-space oracle, truncated where both tails are negligible
        let k = 400;
        let p = convolution_oracle(&th, k);
        let q = convolution_oracle(&la, k);
        let oracle: f64 = (2..=k)
            .filter(|&i| p[i] > 0.0)
            .map(|i| p[i] * (p[i] / q[i]).ln())
            .sum();
        assert!(info.tail_bound < 1e-10);
        assert_abs_diff_eq!(info.value, oracle, epsilon = 1e-10);
    }

    #[test]
    fn kl_tail_bound_covers_tightening() {
        let (th, la) = ([0.35, 0.8, 0.6], [0.9, 0.8, 0.6]);
        let coarse = path_kl_information_to_tail(&th, &la, 1e-6).unwrap();
        let fine = path_kl_information_to_tail(&th, &la, 1e-8).unwrap();
        assert!((coarse.value - fine.value).abs() <= coarse.tail_bound);
    }

    proptest! {
        #[test]
        fn klg_identity(u in 0.01f64..1.0, v in 0.01f64..1.0) {
            let lhs = klg(u, v).unwrap();
            prop_assert!((lhs - kl_bernoulli(u, v).unwrap() / u).abs() < 1e-12);
            prop_assert!(lhs >= 0.0);
        }

        #[test]
        fn pmf_mass_and_tail(thetas in prop::collection::vec(0.05f64..1.0, 1..6), eps_exp in 3i32..12) {
            let eps = 10f64.powi(-eps_exp);
            let pmf = path_delay_pmf_to_tail(&thetas, eps, PmfMethod::Convolution).unwrap();
            let mass = pmf.mass();
            prop_assert!(pmf.tail_bound() <= eps);
            prop_assert!(mass <= 1.0 + 1e-12);
            prop_assert!(mass + pmf.tail_bound() >= 1.0 - 1e-12);
            prop_assert!(pmf.probs().iter().all(|p| *p >= 0.0));
        }

        #[test]
        fn data_processing(
            th in prop::collection::vec(0.1f64..1.0, 1..5),
            seed in prop::collection::vec(0.1f64..1.0, 5),
        ) {
            let la: Vec<f64> = seed[..th.len()].to_vec();
            let info = path_kl_information_to_tail(&th, &la, 1e-10).unwrap();
            let per_link: f64 = th.iter().zip(&la).map(|(&a, &b)| klg(a, b).unwrap()).sum();
            prop_assert!(info.value - info.tail_bound <= per_link + 1e-9,
                "path {} > links {}", info.value, per_link);
            prop_assert!(info.value >= -info.tail_bound - 1e-12);
        }

        #[test]
        fn pinsker_consequence(
            lam in prop::collection::vec(0.05f64..0.95, 1..6),
            ups in prop::collection::vec(0.05f64..1.0, 6),
            s in prop::collection::vec(1u32..200, 6),
        ) {
            // u_i >= lambda_i makes every term on the left nonnegative.
            let m = lam.len();
            let u: Vec<f64> = (0..m).map(|i| ups[i].max(lam[i]).min(1.0)).collect();
            let lhs: f64 = (0..m).map(|i| 1.0 / lam[i] - 1.0 / u[i]).sum();
            let kl_sum: f64 = (0..m)
                .map(|i| s[i] as f64 / lam[i] * kl(lam[i], u[i]))
                .sum();
            let inv: f64 = (0..m).map(|i| 1.0 / (s[i] as f64 * lam[i].powi(3))).sum();
            prop_assert!(lhs <= (kl_sum / 2.0).sqrt() * inv.sqrt() + 1e-12);
        }
    }
}
