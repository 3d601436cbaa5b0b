//! Seeded Monte Carlo simulation of the coin-tossing processes and its
//! comparison against exact distributions.
//!
//! Replicate `r` of a job with seed `s` draws from ChaCha8 seeded with `s` on
//! stream `r`, so results do not depend on how replicates are scheduled.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ChiSquared, ContinuousCDF};

use crate::boundary::{classify_gstirling1, Classification, ZDistribution};
use crate::dims::dimension_table;
use crate::error::{Error, Result};
use crate::graph::{GridPoint, WeightedPascalGraph};
use crate::measures::{phi_from_family, MeasureFamily, ProbabilityFunction, TransitionKernel};
use crate::scalar::Scalar;
use crate::sequence::SequenceSpec;

/// Two-sided 5σ tail probability of a normal variable.
pub const FIVE_SIGMA_P: f64 = 5.733e-7;

pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// Runs `f` once per replicate, in parallel, returning results in replicate order.
pub fn run_replicates<T, F>(replicates: usize, seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> Result<T> + Sync,
{
    (0..replicates as u64)
        .into_par_iter()
        .map(|r| f(&mut replicate_rng(seed, r)))
        .collect()
}

/// One chain of `n` steps; returns the increments.
pub fn sample_path(kernel: &TransitionKernel, n: usize, rng: &mut impl Rng) -> Result<Vec<bool>> {
    let mut at = GridPoint::ORIGIN;
    let mut steps = Vec::with_capacity(n);
    for _ in 0..n {
        let head = rng.random::<f64>() < kernel.p_f64(at)?;
        steps.push(head);
        at = at.step(head);
    }
    Ok(steps)
}

/// `H_n` of one chain.
pub fn sample_heads(kernel: &TransitionKernel, n: usize, rng: &mut impl Rng) -> Result<usize> {
    let mut at = GridPoint::ORIGIN;
    for _ in 0..n {
        let head = rng.random::<f64>() < kernel.p_f64(at)?;
        at = at.step(head);
    }
    Ok(at.h)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndpointHistogram {
    pub level: usize,
    /// `counts[h]` chains ended at `(h, level-h)`.
    pub counts: Vec<u64>,
    pub total: u64,
}

impl EndpointHistogram {
    pub fn from_heads(level: usize, heads: &[usize]) -> Self {
        let mut counts = vec![0u64; level + 1];
        for &h in heads {
            counts[h] += 1;
        }
        EndpointHistogram {
            level,
            counts,
            total: heads.len() as u64,
        }
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| c as f64 / self.total as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleOutput {
    pub histogram: EndpointHistogram,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paths: Option<Vec<Vec<bool>>>,
}

/// `R` independent chains of `n` steps.
pub fn sample_paths(
    kernel: &TransitionKernel,
    n: usize,
    replicates: usize,
    seed: u64,
    keep_paths: bool,
) -> Result<SampleOutput> {
    validate_job_size(n.max(1), replicates)?;
    if keep_paths {
        let paths = run_replicates(replicates, seed, |rng| sample_path(kernel, n, rng))?;
        let heads: Vec<usize> = paths.iter().map(|p| p.iter().filter(|&&x| x).count()).collect();
        Ok(SampleOutput {
            histogram: EndpointHistogram::from_heads(n, &heads),
            paths: Some(paths),
        })
    } else {
        let heads = run_replicates(replicates, seed, |rng| sample_heads(kernel, n, rng))?;
        Ok(SampleOutput {
            histogram: EndpointHistogram::from_heads(n, &heads),
            paths: None,
        })
    }
}

fn validate_job_size(n: usize, replicates: usize) -> Result<()> {
    if n == 0 || replicates == 0 {
        return Err(Error::invalid(format!(
            "need n ≥ 1 and R ≥ 1, got n={n}, R={replicates}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Comparison {
    pub total_variation: f64,
    /// 5σ threshold for the total variation at this `R`.
    pub tv_threshold: f64,
    pub chi_square: f64,
    pub dof: usize,
    pub p_value: f64,
    /// `None` when `R = 1`.
    pub pass: Option<bool>,
}

fn chi_square_p(stat: f64, dof: usize) -> f64 {
    if !stat.is_finite() {
        return 0.0;
    }
    if dof == 0 {
        return 1.0;
    }
    ChiSquared::new(dof as f64)
        .map(|d| 1.0 - d.cdf(stat))
        .unwrap_or(f64::NAN)
}

/// Compares observed counts with expected probabilities.
pub fn compare_counts(counts: &[u64], expected: &[f64]) -> Comparison {
    let r: u64 = counts.iter().sum();
    let rf = r as f64;
    let mut tv = 0.0;
    let mut chi = 0.0;
    let mut cells = 0usize;
    let mut threshold = 0.0;
    for (i, &e) in expected.iter().enumerate() {
        let c = counts.get(i).copied().unwrap_or(0) as f64;
        tv += (c / rf - e).abs();
        threshold += 5.0 * (e * (1.0 - e) / rf).sqrt();
        if e > 0.0 {
            chi += (c - rf * e).powi(2) / (rf * e);
            cells += 1;
        } else if c > 0.0 {
            chi = f64::INFINITY;
        }
    }
    for &c in counts.iter().skip(expected.len()) {
        tv += c as f64 / rf;
        if c > 0 {
            chi = f64::INFINITY;
        }
    }
    let dof = cells.saturating_sub(1);
    let p_value = chi_square_p(chi, dof);
    let tv = tv / 2.0;
    let threshold = threshold / 2.0;
    Comparison {
        total_variation: tv,
        tv_threshold: threshold,
        chi_square: chi,
        dof,
        p_value,
        pass: (r > 1).then(|| p_value >= FIVE_SIGMA_P && tv <= threshold),
    }
}

/// Endpoint frequencies against `φ(h,n-h)·d(h,n-h)`.
pub fn empirical_vs_exact(
    hist: &EndpointHistogram,
    g: &WeightedPascalGraph,
    phi: &ProbabilityFunction,
) -> Result<Comparison> {
    let n = hist.level;
    if phi.horizon() < n {
        return Err(Error::HorizonMismatch {
            needed: n,
            available: phi.horizon(),
        });
    }
    let dims = dimension_table(g, n)?;
    let expected: Vec<f64> = (0..=n)
        .map(|h| {
            let p = GridPoint::new(h, n - h);
            (phi.values.at(p) * dims.values.at(p)).to_f64()
        })
        .collect();
    Ok(compare_counts(&hist.counts, &expected))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "scaler", content = "exponent")]
pub enum Scaler {
    N,
    LogN,
    Power(f64),
}

impl Scaler {
    pub fn at(self, n: usize) -> f64 {
        let n = n as f64;
        match self {
            Scaler::N => n,
            Scaler::LogN => n.ln(),
            Scaler::Power(a) => n.powf(a),
        }
    }
}

impl std::str::FromStr for Scaler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n" => Ok(Scaler::N),
            "log" | "logn" | "log-n" => Ok(Scaler::LogN),
            _ => s
                .strip_prefix("pow:")
                .and_then(|a| a.parse().ok())
                .map(Scaler::Power)
                .ok_or_else(|| Error::Parse(format!("unknown scaler `{s}` (n | log | pow:α)"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LlnReport {
    pub level: usize,
    pub scaler: Scaler,
    pub replicates: usize,
    /// Sample mean and standard deviation of `H_n / scaler(n)`.
    pub mean: f64,
    pub sd: f64,
    pub mean_heads: f64,
    pub sd_heads: f64,
    pub histogram: Vec<HistogramBin>,
    /// Exact `E H_n` and `sd(H_n)` for independent trials.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_mean_heads: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_sd_heads: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks_beta: Option<f64>,
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

pub fn histogram(xs: &[f64], bins: usize) -> Vec<HistogramBin> {
    if xs.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0u64; bins];
    for &x in xs {
        let i = (((x - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin {
            lo: lo + i as f64 * width,
            hi: lo + (i + 1) as f64 * width,
            count,
        })
        .collect()
}

/// Kolmogorov–Smirnov distance between the sample and `Beta(a, b)`.
pub fn ks_beta(samples: &[f64], a: f64, b: f64) -> Result<f64> {
    let dist = Beta::new(a, b).map_err(|e| Error::invalid(format!("Beta({a},{b}): {e}")))?;
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = dist.cdf(x.clamp(0.0, 1.0));
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

/// Exact mean and sd of `H_n` when the trials are independent (`b ≡ 0`).
fn independent_trial_moments(family: &MeasureFamily, n: usize) -> Result<Option<(f64, f64)>> {
    if let MeasureFamily::GStirling { a, b, theta } = family {
        if b.is_identically_zero() {
            let th = theta.to_f64();
            let (mut mean, mut var) = (0.0, 0.0);
            for j in 0..n {
                let p = th / (th + a.value(j)?.to_f64());
                mean += p;
                var += p * (1.0 - p);
            }
            return Ok(Some((mean, var.sqrt())));
        }
    }
    if let MeasureFamily::Bernoulli { theta } = family {
        let th = theta.to_f64();
        let p = th / (1.0 + th);
        let nf = n as f64;
        return Ok(Some((nf * p, (nf * p * (1.0 - p)).sqrt())));
    }
    Ok(None)
}

/// Sampled `H_n/scaler(n)` with summary statistics.
pub fn lln_diagnostic(
    family: &MeasureFamily,
    scaler: Scaler,
    n: usize,
    replicates: usize,
    seed: u64,
) -> Result<LlnReport> {
    validate_job_size(n, replicates)?;
    let scale = scaler.at(n);
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::invalid(format!("scaler must be positive at n = {n}")));
    }
    let kernel = family.kernel()?;
    let heads = run_replicates(replicates, seed, |rng| sample_heads(&kernel, n, rng))?;
    let hs: Vec<f64> = heads.iter().map(|&h| h as f64).collect();
    let scaled: Vec<f64> = hs.iter().map(|h| h / scale).collect();
    let (mean, sd) = mean_sd(&scaled);
    let (mean_heads, sd_heads) = mean_sd(&hs);
    let exact = independent_trial_moments(family, n)?;
    let ks = match (family, scaler) {
        (MeasureFamily::Polya { a, b }, Scaler::N) => Some(ks_beta(&scaled, a.to_f64(), b.to_f64())?),
        _ => None,
    };
    Ok(LlnReport {
        level: n,
        scaler,
        replicates,
        mean,
        sd,
        mean_heads,
        sd_heads,
        histogram: histogram(&scaled, 40),
        exact_mean_heads: exact.map(|e| e.0),
        exact_sd_heads: exact.map(|e| e.1),
        ks_beta: ks,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZHistogram {
    pub level: usize,
    pub min_z: i64,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl ZHistogram {
    pub fn frequency(&self, z: i64) -> f64 {
        if z < self.min_z {
            return 0.0;
        }
        self.counts
            .get((z - self.min_z) as usize)
            .map_or(0.0, |&c| c as f64 / self.total as f64)
    }

    /// Total variation distance to an exact law.
    pub fn tv_to(&self, exact: &ZDistribution) -> f64 {
        let lo = self.min_z.min(exact.min_z);
        let hi = (self.min_z + self.counts.len() as i64).max(exact.max_z() + 1);
        (lo..hi)
            .map(|z| (self.frequency(z) - exact.weight(z)).abs())
            .sum::<f64>()
            / 2.0
    }
}

/// Empirical law of `H_n - #M_n` under `P_θ` with `p(k) = θ/(θ + a_k)`.
pub fn z_estimate(
    a: &SequenceSpec,
    theta: f64,
    n: usize,
    replicates: usize,
    seed: u64,
) -> Result<ZHistogram> {
    validate_job_size(n, replicates)?;
    let class = classify_gstirling1(a, a.len().unwrap_or(1000))?;
    if class.classification == Classification::Continuous {
        return Err(Error::DivergentCase(format!(
            "sum a_n/(1+a_n)^2 diverges for a = {a}"
        )));
    }
    let ps: Vec<f64> = (0..n)
        .map(|k| Ok(theta / (theta + a.value(k)?.to_f64())))
        .collect::<Result<_>>()?;
    let m_count = ps.iter().filter(|&&p| p > 1.0 - p).count() as i64;
    let zs = run_replicates(replicates, seed, |rng| {
        let h = ps.iter().filter(|&&p| rng.random::<f64>() < p).count() as i64;
        Ok(h - m_count)
    })?;
    let min_z = *zs.iter().min().expect("R ≥ 1");
    let max_z = *zs.iter().max().expect("R ≥ 1");
    let mut counts = vec![0u64; (max_z - min_z + 1) as usize];
    for z in zs {
        counts[(z - min_z) as usize] += 1;
    }
    Ok(ZHistogram {
        level: n,
        min_z,
        counts,
        total: replicates as u64,
    })
}

/// Growth of a random partition: block sizes in order of creation and the
/// new-block indicators of customers `2, …, n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionGrowth {
    pub sizes: Vec<usize>,
    pub new_block: Vec<bool>,
}

impl PartitionGrowth {
    pub fn blocks(&self) -> usize {
        self.sizes.len()
    }
}

fn pick_block(weights: impl Iterator<Item = f64>, total: f64, u: f64) -> Option<usize> {
    let mut acc = 0.0;
    let target = u * total;
    let mut last = None;
    for (j, w) in weights.enumerate() {
        acc += w;
        last = Some(j);
        if target < acc {
            return Some(j);
        }
    }
    last
}

/// Chinese restaurant process with `n` customers.
pub fn crp_sample(alpha: f64, theta: f64, n: usize, rng: &mut impl Rng) -> Result<PartitionGrowth> {
    MeasureFamily::Crp {
        alpha: Scalar::Float(alpha),
        theta: Scalar::Float(theta),
    }
    .validate()?;
    let mut sizes = vec![1usize];
    let mut new_block = Vec::with_capacity(n.saturating_sub(1));
    for k in 1..n {
        let kf = k as f64;
        let blocks = sizes.len() as f64;
        let p_new = (theta + alpha * blocks) / (kf + theta);
        if rng.random::<f64>() < p_new {
            sizes.push(1);
            new_block.push(true);
        } else {
            let u = rng.random::<f64>();
            let j = pick_block(sizes.iter().map(|&s| s as f64 - alpha), kf - alpha * blocks, u)
                .expect("at least one block");
            sizes[j] += 1;
            new_block.push(false);
        }
    }
    Ok(PartitionGrowth { sizes, new_block })
}

/// The α = -1 variant: customer `n+1` opens a block with probability
/// `(h+1)(h+1-γ)/(n(n+γ))` and joins block `j` with weight `(n_j+1)`.
pub fn crp_gamma_sample(gamma: f64, n: usize, rng: &mut impl Rng) -> Result<PartitionGrowth> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid(format!("γ-CRP requires 0 < γ < 1, got {gamma}")));
    }
    let mut sizes = vec![1usize];
    let mut new_block = Vec::with_capacity(n.saturating_sub(1));
    for k in 1..n {
        let kf = k as f64;
        let blocks = sizes.len() as f64;
        let p_new = blocks * (blocks - gamma) / (kf * (kf + gamma));
        if rng.random::<f64>() < p_new {
            sizes.push(1);
            new_block.push(true);
        } else {
            let u = rng.random::<f64>();
            let j = pick_block(sizes.iter().map(|&s| s as f64 + 1.0), kf + blocks, u)
                .expect("at least one block");
            sizes[j] += 1;
            new_block.push(false);
        }
    }
    Ok(PartitionGrowth { sizes, new_block })
}

/// Coupon-collector construction of the generalized Stirling-II walk: the
/// waiting time at level `h` is geometric with repeat probability `b_h/θ`.
/// Returns the `n` increments.
pub fn coupon_collector_sample(
    b: &SequenceSpec,
    theta: f64,
    n: usize,
    rng: &mut impl Rng,
) -> Result<Vec<bool>> {
    if !(theta > 0.0) {
        return Err(Error::invalid(format!("θ must be positive, got {theta}")));
    }
    let mut steps = Vec::with_capacity(n);
    let mut h = 0usize;
    while steps.len() < n {
        let bh = b.value(h)?.to_f64();
        if bh < 0.0 || bh > theta {
            return Err(Error::invalid(format!(
                "need 0 ≤ b_{h} ≤ θ, got b_{h} = {bh}, θ = {theta}"
            )));
        }
        let lambda = bh / theta;
        // ξ_h ∈ {1, 2, …} with P(ξ = k) = λ^{k-1}(1-λ)
        let wait = if lambda == 0.0 {
            1
        } else if lambda >= 1.0 {
            usize::MAX
        } else {
            let u: f64 = 1.0 - rng.random::<f64>();
            let k = (u.ln() / lambda.ln()).floor();
            if k >= (n - steps.len()) as f64 {
                usize::MAX
            } else {
                k as usize + 1
            }
        };
        let repeats = wait.saturating_sub(1).min(n - steps.len());
        steps.extend(std::iter::repeat_n(false, repeats));
        if steps.len() < n {
            steps.push(true);
            h += 1;
        }
    }
    Ok(steps)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoSample {
    pub chi_square: f64,
    pub dof: usize,
    pub p_value: f64,
    pub pass: bool,
}

/// Two-sample chi-square homogeneity test on aligned count vectors.
pub fn two_sample_chi_square(a: &[u64], b: &[u64]) -> TwoSample {
    let len = a.len().max(b.len());
    let get = |v: &[u64], i: usize| v.get(i).copied().unwrap_or(0) as f64;
    let (na, nb) = (
        a.iter().sum::<u64>() as f64,
        b.iter().sum::<u64>() as f64,
    );
    let (ka, kb) = ((nb / na).sqrt(), (na / nb).sqrt());
    let mut chi = 0.0;
    let mut cells = 0usize;
    for i in 0..len {
        let (x, y) = (get(a, i), get(b, i));
        if x + y > 0.0 {
            chi += (ka * x - kb * y).powi(2) / (x + y);
            cells += 1;
        }
    }
    let dof = cells.saturating_sub(1);
    let p_value = chi_square_p(chi, dof);
    TwoSample {
        chi_square: chi,
        dof,
        p_value,
        pass: p_value >= FIVE_SIGMA_P,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EndpointClassCheck {
    pub endpoint: GridPoint,
    pub observations: u64,
    pub distinct_paths: usize,
    pub chi_square: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExchangeabilityReport {
    pub level: usize,
    pub classes: Vec<EndpointClassCheck>,
    pub min_p_value: f64,
    pub pass: bool,
    /// Whether `P(path)/weight(path)` is constant on each endpoint class,
    /// computed exactly from the kernel.
    pub exact_consistent: bool,
}

fn mask(steps: &[bool]) -> u32 {
    steps
        .iter()
        .enumerate()
        .fold(0, |m, (i, &s)| if s { m | 1 << i } else { m })
}

/// Within each endpoint class, path frequencies should be proportional to
/// path weights (equal weights on exchangeable families).
pub fn exchangeability_check(
    family: &MeasureFamily,
    n: usize,
    replicates: usize,
    seed: u64,
) -> Result<ExchangeabilityReport> {
    if n == 0 || n > 10 {
        return Err(Error::invalid(format!("exchangeability check needs 1 ≤ n ≤ 10, got {n}")));
    }
    let kernel = family.kernel()?;
    let g = family.graph(family.mode())?;
    let masks = run_replicates(replicates, seed, |rng| sample_path(&kernel, n, rng).map(|p| mask(&p)))?;
    let mut by_end: BTreeMap<usize, BTreeMap<u32, u64>> = BTreeMap::new();
    for m in masks {
        *by_end
            .entry(m.count_ones() as usize)
            .or_default()
            .entry(m)
            .or_default() += 1;
    }
    let mut classes = Vec::new();
    let mut exact_consistent = true;
    for h in 0..=n {
        let end = GridPoint::new(h, n - h);
        let paths = crate::oracles::all_paths(h, n - h);
        let mut weights = Vec::with_capacity(paths.len());
        let mut ratio: Option<Scalar> = None;
        for p in &paths {
            let w = g.path_weight(GridPoint::ORIGIN, p)?;
            let prob = kernel.path_probability(p)?;
            let r = &prob / &w;
            match &ratio {
                None => ratio = Some(r),
                Some(r0) => {
                    let same = if r.is_exact() && r0.is_exact() {
                        r == *r0
                    } else {
                        (r.to_f64() - r0.to_f64()).abs() <= 1e-9 * r0.to_f64().abs().max(1e-300)
                    };
                    exact_consistent &= same;
                }
            }
            weights.push(w.to_f64());
        }
        let Some(observed) = by_end.get(&h) else {
            continue;
        };
        let total_w: f64 = weights.iter().sum();
        let expected: Vec<f64> = weights.iter().map(|w| w / total_w).collect();
        let counts: Vec<u64> = paths
            .iter()
            .map(|p| observed.get(&mask(p)).copied().unwrap_or(0))
            .collect();
        let obs: u64 = counts.iter().sum();
        if obs < 20 || paths.len() < 2 {
            continue;
        }
        let cmp = compare_counts(&counts, &expected);
        classes.push(EndpointClassCheck {
            endpoint: end,
            observations: obs,
            distinct_paths: paths.len(),
            chi_square: cmp.chi_square,
            p_value: cmp.p_value,
        });
    }
    // Bonferroni over endpoint classes
    let min_p = classes.iter().map(|c| c.p_value).fold(1.0, f64::min);
    let pass = min_p * classes.len().max(1) as f64 >= FIVE_SIGMA_P;
    Ok(ExchangeabilityReport {
        level: n,
        classes,
        min_p_value: min_p,
        pass,
        exact_consistent,
    })
}

/// Paths drawn from the elementary measure `Q_terminal`, stepping backwards
/// with probabilities `d(prev)·w(prev→here)/d(here)`.
pub fn sample_elementary(
    g: &WeightedPascalGraph,
    terminal: GridPoint,
    replicates: usize,
    seed: u64,
) -> Result<Vec<Vec<bool>>> {
    let n = terminal.level();
    let dims = dimension_table(g, n)?;
    let f = |p: GridPoint| dims.values.at(p).to_f64();
    // precompute the head-step probability into every state below the terminal
    let mut back = std::collections::HashMap::new();
    for h in 0..=terminal.h {
        for t in 0..=terminal.t {
            let p = GridPoint::new(h, t);
            if h == 0 || t == 0 {
                continue;
            }
            let from_head = f(GridPoint::new(h - 1, t)) * g.w1(GridPoint::new(h - 1, t))?.to_f64();
            back.insert(p, from_head / f(p));
        }
    }
    run_replicates(replicates, seed, |rng| {
        let mut at = terminal;
        let mut steps = vec![false; n];
        for i in (0..n).rev() {
            let head = if at.t == 0 {
                true
            } else if at.h == 0 {
                false
            } else {
                rng.random::<f64>() < back[&at]
            };
            steps[i] = head;
            at = if head {
                GridPoint::new(at.h - 1, at.t)
            } else {
                GridPoint::new(at.h, at.t - 1)
            };
        }
        Ok(steps)
    })
}

/// Comparison against exact `φ·d` is only attempted up to this level.
pub const EXACT_COMPARISON_MAX_LEVEL: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Endpoint,
    Scaled,
    Z,
    Blocks,
}

impl std::str::FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "endpoint" => Ok(Statistic::Endpoint),
            "scaled" => Ok(Statistic::Scaled),
            "z" => Ok(Statistic::Z),
            "blocks" => Ok(Statistic::Blocks),
            _ => Err(Error::Parse(format!(
                "unknown statistic `{s}` (endpoint | scaled | z | blocks)"
            ))),
        }
    }
}

/// A simulation request, as read from a job file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationJob {
    pub process: String,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "default_statistics")]
    pub statistics: Vec<Statistic>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaler: Option<Scaler>,
}

fn default_statistics() -> Vec<Statistic> {
    vec![Statistic::Endpoint]
}

/// What a job simulates.
#[derive(Debug, Clone)]
pub enum Process {
    Measure(MeasureFamily),
    /// Generalized Stirling-II walk built from geometric waiting times.
    Coupon { b: SequenceSpec, theta: f64 },
}

impl SimulationJob {
    pub fn resolve(&self) -> Result<Process> {
        let get = |k: &str| {
            self.params
                .get(k)
                .ok_or_else(|| Error::Parse(format!("process `{}` needs parameter `{k}`", self.process)))
        };
        if self.process == "coupon" {
            return Ok(Process::Coupon {
                b: get("b")?.parse()?,
                theta: Scalar::parse(get("theta")?)?.to_f64(),
            });
        }
        let mut spec = self.process.clone();
        for (k, v) in &self.params {
            spec.push_str(&format!(";{k}={v}"));
        }
        let fam: MeasureFamily = spec.parse()?;
        fam.validate()?;
        Ok(Process::Measure(fam))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockSummary {
    pub mean_blocks: f64,
    pub sd_blocks: f64,
    pub mean_largest_block: f64,
    /// `1 + Σ_{k<n} P(new block at customer k+1)` under the walk kernel.
    pub expected_blocks: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZReport {
    pub empirical: ZHistogram,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<ZDistribution>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_variation: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationResult {
    pub job: SimulationJob,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<EndpointHistogram>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<Comparison>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scaled: Option<LlnReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<ZReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blocks: Option<BlockSummary>,
}

pub fn run_job(job: &SimulationJob) -> Result<SimulationResult> {
    validate_job_size(job.n, job.replicates)?;
    let process = job.resolve()?;
    let mut out = SimulationResult {
        job: job.clone(),
        endpoint: None,
        comparison: None,
        scaled: None,
        z: None,
        blocks: None,
    };
    // distinct statistics use distinct seeds derived from the job seed
    let sub_seed = |k: u64| job.seed.wrapping_add(k.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    match &process {
        Process::Coupon { b, theta } => {
            for stat in &job.statistics {
                match stat {
                    Statistic::Endpoint => {
                        let heads = run_replicates(job.replicates, sub_seed(0), |rng| {
                            coupon_collector_sample(b, *theta, job.n, rng)
                                .map(|p| p.iter().filter(|&&x| x).count())
                        })?;
                        out.endpoint = Some(EndpointHistogram::from_heads(job.n, &heads));
                    }
                    other => {
                        return Err(Error::invalid(format!(
                            "statistic {other:?} is not available for the coupon process"
                        )))
                    }
                }
            }
        }
        Process::Measure(fam) => {
            for stat in &job.statistics {
                match stat {
                    Statistic::Endpoint => {
                        let kernel = fam.kernel()?;
                        let s = sample_paths(&kernel, job.n, job.replicates, sub_seed(0), false)?;
                        if job.n <= EXACT_COMPARISON_MAX_LEVEL {
                            let phi = phi_from_family(fam, job.n)?;
                            let g = fam.graph(fam.mode())?;
                            out.comparison = Some(empirical_vs_exact(&s.histogram, &g, &phi)?);
                        }
                        out.endpoint = Some(s.histogram);
                    }
                    Statistic::Scaled => {
                        out.scaled = Some(lln_diagnostic(
                            fam,
                            job.scaler.unwrap_or(Scaler::N),
                            job.n,
                            job.replicates,
                            sub_seed(1),
                        )?);
                    }
                    Statistic::Z => {
                        let MeasureFamily::GStirling { a, b, theta } = fam else {
                            return Err(Error::invalid("the Z statistic needs a space-time walk"));
                        };
                        if !b.is_identically_zero() {
                            return Err(Error::invalid("the Z statistic needs b ≡ 0"));
                        }
                        let th = theta.to_f64();
                        let empirical = z_estimate(a, th, job.n, job.replicates, sub_seed(2))?;
                        let exact = crate::boundary::z_distribution(a, th, 1e-9).ok();
                        let tv = exact.as_ref().map(|e| empirical.tv_to(e));
                        out.z = Some(ZReport {
                            empirical,
                            exact,
                            total_variation: tv,
                        });
                    }
                    Statistic::Blocks => {
                        out.blocks = Some(block_summary(fam, job.n, job.replicates, sub_seed(3))?);
                    }
                }
            }
        }
    }
    Ok(out)
}

fn block_summary(family: &MeasureFamily, n: usize, replicates: usize, seed: u64) -> Result<BlockSummary> {
    let sampler: Box<dyn Fn(&mut ChaCha8Rng) -> Result<PartitionGrowth> + Sync> = match family {
        MeasureFamily::Crp { alpha, theta } => {
            let (a, t) = (alpha.to_f64(), theta.to_f64());
            Box::new(move |rng| crp_sample(a, t, n, rng))
        }
        MeasureFamily::CrpGamma { gamma } => {
            let g = gamma.to_f64();
            Box::new(move |rng| crp_gamma_sample(g, n, rng))
        }
        _ => return Err(Error::invalid("block statistics need a crp or crp-gamma process")),
    };
    let parts = run_replicates(replicates, seed, |rng| sampler(rng))?;
    let blocks: Vec<f64> = parts.iter().map(|p| p.blocks() as f64).collect();
    let largest: Vec<f64> = parts
        .iter()
        .map(|p| *p.sizes.iter().max().expect("nonempty") as f64)
        .collect();
    let (mean_blocks, sd_blocks) = mean_sd(&blocks);
    // E[#blocks] by propagating the head-count law through the kernel
    let kernel = family.kernel()?;
    let mut law = vec![1.0f64];
    for k in 0..n.saturating_sub(1) {
        let mut next = vec![0.0; law.len() + 1];
        for (h, &w) in law.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let at = GridPoint::new(h, k - h);
            let p = if kernel.in_support(at) { kernel.p_f64(at)? } else { 0.0 };
            next[h + 1] += w * p;
            next[h] += w * (1.0 - p);
        }
        law = next;
    }
    let expected_heads: f64 = law.iter().enumerate().map(|(h, w)| h as f64 * w).sum();
    Ok(BlockSummary {
        mean_blocks,
        sd_blocks,
        mean_largest_block: mean_sd(&largest).0,
        expected_blocks: 1.0 + expected_heads,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{make_graph, FamilySpec};
    use crate::scalar::ScalarMode;

    #[test]
    fn streams_are_deterministic() {
        let fam = MeasureFamily::Polya {
            a: 1.into(),
            b: 1.into(),
        };
        let k = fam.kernel().unwrap();
        let a = sample_paths(&k, 8, 500, 7, true).unwrap();
        let b = sample_paths(&k, 8, 500, 7, true).unwrap();
        assert_eq!(a.paths, b.paths);
        let c = sample_paths(&k, 8, 500, 8, false).unwrap();
        assert_ne!(a.histogram, c.histogram);
    }

    #[test]
    fn finite_support_respected() {
        let fam = MeasureFamily::QPascalExtreme {
            q: Scalar::ratio(1, 2),
            m: 1,
        };
        let s = sample_paths(&fam.kernel().unwrap(), 12, 2000, 1, true).unwrap();
        for p in s.paths.unwrap() {
            assert!(p.iter().filter(|&&x| !x).count() <= 1);
        }
        let s2 = MeasureFamily::stirling2(2);
        let s = sample_paths(&s2.kernel().unwrap(), 12, 2000, 1, false).unwrap();
        assert!(s.histogram.counts[2..].iter().all(|&c| c == 0));
    }

    #[test]
    fn polya_uniform_endpoint() {
        let fam = MeasureFamily::Polya {
            a: 1.into(),
            b: 1.into(),
        };
        let s = sample_paths(&fam.kernel().unwrap(), 6, 20_000, 42, false).unwrap();
        let phi = phi_from_family(&fam, 6).unwrap();
        let g = fam.graph(ScalarMode::Exact).unwrap();
        let cmp = empirical_vs_exact(&s.histogram, &g, &phi).unwrap();
        assert_eq!(cmp.pass, Some(true), "{cmp:?}");

        let mut wrong = phi.clone();
        let (x, y) = (GridPoint::new(0, 6), GridPoint::new(3, 3));
        let (vx, vy) = (wrong.values.at(x).clone(), wrong.values.at(y).clone());
        wrong.values.set(x, vy);
        wrong.values.set(y, vx);
        let cmp = empirical_vs_exact(&s.histogram, &g, &wrong).unwrap();
        assert_eq!(cmp.pass, Some(false));

        let one = sample_paths(&fam.kernel().unwrap(), 6, 1, 42, false).unwrap();
        assert_eq!(empirical_vs_exact(&one.histogram, &g, &phi).unwrap().pass, None);
    }

    #[test]
    fn crp_rules() {
        let mut rng = replicate_rng(3, 0);
        let one = crp_sample(0.0, 1.0, 1, &mut rng).unwrap();
        assert_eq!(one.sizes, vec![1]);
        let p = crp_sample(0.5, 1.0, 200, &mut rng).unwrap();
        assert_eq!(p.sizes.iter().sum::<usize>(), 200);
        assert_eq!(p.blocks(), 1 + p.new_block.iter().filter(|&&x| x).count());
        let capped = crp_sample(-1.0, 3.0, 200, &mut rng).unwrap();
        assert!(capped.blocks() <= 3);
        assert!(crp_sample(-1.0, 1.5, 10, &mut rng).is_err());
        let g = crp_gamma_sample(0.3, 100, &mut rng).unwrap();
        assert_eq!(g.sizes.iter().sum::<usize>(), 100);
    }

    #[test]
    fn block_counts_match_harmonic_sum() {
        let fam = MeasureFamily::Crp {
            alpha: 0.into(),
            theta: 1.into(),
        };
        let s = block_summary(&fam, 50, 20_000, 11).unwrap();
        let exact: f64 = 1.0 + (1..50).map(|k| 1.0 / (k as f64 + 1.0)).sum::<f64>();
        assert!((s.expected_blocks - exact).abs() < 1e-12);
        let se = s.sd_blocks / (20_000f64).sqrt();
        assert!((s.mean_blocks - exact).abs() < 5.0 * se);
    }

    #[test]
    fn coupon_matches_kernel() {
        let b = SequenceSpec::linear(1, 1);
        let mut rng = replicate_rng(1, 0);
        assert!(coupon_collector_sample(&b, 4.0, 0, &mut rng).unwrap().is_empty());
        let heads = run_replicates(20_000, 5, |rng| {
            coupon_collector_sample(&b, 4.0, 20, rng).map(|p| p.iter().filter(|&&x| x).count())
        })
        .unwrap();
        assert!(heads.iter().all(|&h| h <= 3));
        let a = EndpointHistogram::from_heads(20, &heads);
        let k = MeasureFamily::stirling2(4).kernel().unwrap();
        let s = sample_paths(&k, 20, 20_000, 6, false).unwrap();
        assert!(two_sample_chi_square(&a.counts, &s.histogram.counts).pass);
    }

    #[test]
    fn exchangeability() {
        let fam = MeasureFamily::Polya {
            a: 1.into(),
            b: 1.into(),
        };
        let r = exchangeability_check(&fam, 4, 20_000, 9).unwrap();
        assert!(r.pass && r.exact_consistent, "{r:?}");
        let qp = MeasureFamily::QPolya {
            q: Scalar::ratio(1, 2),
            alpha: 1.into(),
            beta: 1.into(),
        };
        let r = exchangeability_check(&qp, 4, 20_000, 9).unwrap();
        assert!(r.pass && r.exact_consistent, "{r:?}");
        let gam = MeasureFamily::CrpGamma {
            gamma: Scalar::ratio(1, 2),
        };
        assert!(exchangeability_check(&gam, 4, 100, 1).unwrap().exact_consistent);
    }

    #[test]
    fn elementary_sampler_is_weight_proportional() {
        let g = make_graph(&FamilySpec::Stirling1, ScalarMode::Exact).unwrap();
        let end = GridPoint::new(2, 2);
        let paths = sample_elementary(&g, end, 30_000, 4).unwrap();
        let all = crate::oracles::all_paths(2, 2);
        let d = crate::oracles::brute_force_dimension(&g, end).unwrap();
        let expected: Vec<f64> = all
            .iter()
            .map(|p| (g.path_weight(GridPoint::ORIGIN, p).unwrap() / &d).to_f64())
            .collect();
        let counts: Vec<u64> = all
            .iter()
            .map(|p| paths.iter().filter(|q| *q == p).count() as u64)
            .collect();
        assert_eq!(compare_counts(&counts, &expected).pass, Some(true));
    }

    #[test]
    fn job_round_trip() {
        let job: SimulationJob = serde_json::from_str(
            r#"{"process":"polya","params":{"a":"1","b":"1"},"n":5,"replicates":300,"seed":42}"#,
        )
        .unwrap();
        let a = run_job(&job).unwrap();
        let b = run_job(&job).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert!(a.comparison.is_some());
    }
}
