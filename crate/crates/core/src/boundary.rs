//! Boundary classification and extreme-measure enumeration for the analyzed
//! families, decomposition weights of the tail variable `Z`, and the
//! moment-problem checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{FamilySpec, GridPoint, WeightedPascalGraph};
use crate::measures::{ProbabilityFunction, Provenance, Support};
use crate::scalar::{Scalar, ScalarMode};
use crate::sequence::{SequenceSpec, Supremum};
use crate::triangle::Triangle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Continuous,
    Discrete,
    MixedEndpoints,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartialSum {
    pub n: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Evidence {
    pub criterion: String,
    /// `Some(true)` when the criterion series converges, `None` if undecided.
    pub converges: Option<bool>,
    pub partial_sums: Vec<PartialSum>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifyResult {
    pub classification: Classification,
    pub evidence: Evidence,
}

fn partial_sums(
    len: usize,
    mut term: impl FnMut(usize) -> Result<f64>,
) -> Result<Vec<PartialSum>> {
    let mut out = Vec::new();
    let mut acc = 0.0;
    let mut mark = 10;
    for n in 0..len {
        acc += term(n)?;
        if n + 1 == mark || n + 1 == len {
            out.push(PartialSum { n: n + 1, value: acc });
            mark *= 10;
        }
    }
    Ok(out)
}

fn probe_len(seq: &SequenceSpec, probe: usize) -> usize {
    seq.len().map_or(probe, |l| l.min(probe))
}

fn require_positive(seq: &SequenceSpec, name: &str, len: usize) -> Result<()> {
    for n in 0..len {
        let v = seq.value(n)?;
        if !v.is_positive() {
            return Err(Error::invalid(format!(
                "{name}_{n} = {v} must be positive"
            )));
        }
    }
    Ok(())
}

/// Whether `Σ a_n/(1+a_n)²` diverges, decided from the preset's closed form.
fn gstirling1_series_diverges(a: &SequenceSpec) -> Result<Option<bool>> {
    use SequenceSpec::*;
    let one = Scalar::from(1);
    let bad = || Err(Error::invalid(format!("a = {a} is eventually nonpositive")));
    Ok(Some(match a {
        Const(c) => {
            if !c.is_positive() {
                return bad();
            }
            true
        }
        Linear { slope, intercept } => {
            if slope.is_negative() || (slope.is_zero() && !intercept.is_positive()) {
                return bad();
            }
            true
        }
        // a_n ~ n^β: terms behave like n^{-|β|}
        Power(beta) => beta.abs() <= one,
        Geometric {
            scale,
            ratio,
            shift,
        } => {
            let r = ratio.abs();
            if scale.is_zero() || *ratio == one {
                if !(scale + shift).is_positive() {
                    return bad();
                }
                true
            } else if r < one {
                // a_n → shift
                if shift.is_negative() {
                    return bad();
                }
                shift.is_positive()
            } else if r == one {
                // ratio = -1: alternates between two positive values
                true
            } else {
                if ratio.is_negative() || scale.is_negative() {
                    return bad();
                }
                false
            }
        }
        File { extension, .. } => match extension {
            Some(e) => return gstirling1_series_diverges(e),
            None => return Ok(None),
        },
    }))
}

/// Classifies the generalized Stirling-I boundary (`b ≡ 0`) by divergence of
/// `Σ a_n/(1+a_n)²`: continuous `[0,1]` when it diverges, discrete otherwise.
pub fn classify_gstirling1(a: &SequenceSpec, n_probe: usize) -> Result<ClassifyResult> {
    let len = probe_len(a, n_probe);
    require_positive(a, "a", len)?;
    let diverges = gstirling1_series_diverges(a)?;
    let sums = partial_sums(len, |n| {
        let v = a.value(n)?.to_f64();
        Ok(v / ((1.0 + v) * (1.0 + v)))
    })?;
    let mut notes = Vec::new();
    let classification = match diverges {
        Some(true) => Classification::Continuous,
        Some(false) => Classification::Discrete,
        None => {
            notes.push(format!(
                "divergence cannot be decided from {len} values; extend the file with a preset tail"
            ));
            Classification::Inconclusive
        }
    };
    Ok(ClassifyResult {
        classification,
        evidence: Evidence {
            criterion: "sum a_n/(1+a_n)^2".into(),
            converges: diverges.map(|d| !d),
            partial_sums: sums,
            notes,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum QmExistence {
    Exists { pi: Scalar },
    Absent { reason: String },
    Ambiguous { reason: String },
}

/// Levels over which positivity of `a_{h+t} + b_h` on `I_m` is probed.
const POSITIVITY_PROBE: usize = 64;

/// `Q_{m,∞}` exists iff `b_m` strictly exceeds `b_0, …, b_{m-1}`; then
/// `π = (b_m - b_0)/(b_m + a_0)`.
pub fn qm_exists_gstirling(b: &SequenceSpec, a: &SequenceSpec, m: usize) -> Result<QmExistence> {
    for h in 0..=m {
        let bh = b.value(h)?;
        for t in 0..POSITIVITY_PROBE {
            let an = match a.value(h + t) {
                Ok(v) => v,
                Err(Error::SequenceExhausted { .. }) => break,
                Err(e) => return Err(e),
            };
            if !(&an + &bh).is_positive() {
                return Err(Error::NonPositiveWeight {
                    edge: crate::graph::Edge::Tail,
                    at: GridPoint::new(h, t),
                    value: (an + &bh).to_string(),
                });
            }
        }
    }
    let bm = b.value(m)?;
    let exact = b.mode() == ScalarMode::Exact;
    for h in 0..m {
        let bh = b.value(h)?;
        if !exact && (bm.to_f64() - bh.to_f64()).abs() <= 1e-12 {
            return Ok(QmExistence::Ambiguous {
                reason: format!("b_{m} and b_{h} agree within 1e-12"),
            });
        }
        if bh >= bm {
            return Ok(QmExistence::Absent {
                reason: format!("b_{h} = {bh} ≥ b_{m} = {bm}"),
            });
        }
    }
    let b0 = b.value(0)?;
    let a0 = a.value(0)?;
    Ok(QmExistence::Exists {
        pi: (&bm - &b0) / (bm + a0),
    })
}

/// `e_k(x_1, …, x_n)`.
pub fn elementary_symmetric(xs: &[Scalar], k: usize) -> Scalar {
    elementary_symmetric_all(xs, k).pop().expect("nonempty")
}

/// `[e_0, …, e_kmax]` by the column recurrence `e_j ← e_j + x·e_{j-1}`.
pub fn elementary_symmetric_all(xs: &[Scalar], kmax: usize) -> Vec<Scalar> {
    let mode = xs
        .iter()
        .fold(ScalarMode::Exact, |m, x| m.combine(x.mode()));
    let mut e = vec![Scalar::zero(mode); kmax + 1];
    e[0] = Scalar::one(mode);
    for (i, x) in xs.iter().enumerate() {
        for j in (1..=kmax.min(i + 1)).rev() {
            let add = x * &e[j - 1];
            e[j] += add;
        }
    }
    e
}

/// `[h_0, …, h_kmax]`, complete homogeneous symmetric functions.
pub fn complete_homogeneous_all(xs: &[Scalar], kmax: usize) -> Vec<Scalar> {
    let mode = xs
        .iter()
        .fold(ScalarMode::Exact, |m, x| m.combine(x.mode()));
    let mut h = vec![Scalar::zero(mode); kmax + 1];
    h[0] = Scalar::one(mode);
    for x in xs {
        for j in 1..=kmax {
            let add = x * &h[j - 1];
            h[j] += add;
        }
    }
    h
}

/// Law of the tail variable `Z = (#heads at times in L) - (#tails at times in M)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZDistribution {
    pub theta: f64,
    pub min_z: i64,
    pub weights: Vec<f64>,
    /// Total-variation bound between the reported weights and the law of `Z`.
    pub truncation_error_bound: f64,
    /// Number of trials kept.
    pub trials: usize,
    pub l_count: usize,
    pub m_count: usize,
}

impl ZDistribution {
    pub fn max_z(&self) -> i64 {
        self.min_z + self.weights.len() as i64 - 1
    }

    pub fn weight(&self, z: i64) -> f64 {
        if z < self.min_z {
            return 0.0;
        }
        self.weights.get((z - self.min_z) as usize).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.weights
            .iter()
            .enumerate()
            .map(move |(i, &w)| (self.min_z + i as i64, w))
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Law of the number of successes among independent trials with success
/// probabilities `xs`, i.e. `e_k(x/(1-x))·∏(1-x)`, kept up to `cap`; returns
/// the distribution and the mass beyond the cap.
fn success_count_law(xs: &[f64], cap: usize) -> (Vec<f64>, f64) {
    let mut dist = vec![1.0];
    let mut dropped = 0.0;
    for &x in xs {
        let len = (dist.len() + 1).min(cap + 1);
        let mut next = vec![0.0; len];
        for (k, &w) in dist.iter().enumerate() {
            next[k] += w * (1.0 - x);
            if k + 1 < len {
                next[k + 1] += w * x;
            } else {
                dropped += w * x;
            }
        }
        dist = next;
    }
    (dist, dropped)
}

/// Smallest `K` with `Σ_{i>K} s^i/i! ≤ eps`.
fn poisson_cap(s: f64, eps: f64) -> usize {
    let mut k = 0usize;
    let mut log_term = 0.0f64; // log(s^k/k!)
    loop {
        let next = log_term + s.ln() - ((k + 1) as f64).ln();
        // geometric bound on the tail beyond k once the ratio s/(k+2) < 1
        let ratio = s / (k as f64 + 2.0);
        if s == 0.0 || (ratio < 1.0 && next.exp() / (1.0 - ratio) <= eps) {
            return k;
        }
        log_term = next;
        k += 1;
    }
}

fn z_from_probs(ps: &[f64], eps: f64) -> (i64, Vec<f64>, f64, usize, usize) {
    let (l, m): (Vec<f64>, Vec<f64>) = ps.iter().partition(|&&p| p <= 1.0 - p);
    // heads in L, tails in M
    let tails_m: Vec<f64> = m.iter().map(|p| 1.0 - p).collect();
    let odds = |xs: &[f64]| xs.iter().map(|x| x / (1.0 - x)).sum::<f64>();
    let cap_l = poisson_cap(odds(&l), eps / 4.0).min(l.len());
    let cap_m = poisson_cap(odds(&tails_m), eps / 4.0).min(tails_m.len());
    let (law_l, drop_l) = success_count_law(&l, cap_l);
    let (law_m, drop_m) = success_count_law(&tails_m, cap_m);
    let min_z = -(law_m.len() as i64 - 1);
    let mut weights = vec![0.0; law_l.len() + law_m.len() - 1];
    for (i, wi) in law_l.iter().enumerate() {
        for (j, wj) in law_m.iter().enumerate() {
            weights[(i as i64 - j as i64 - min_z) as usize] += wi * wj;
        }
    }
    (min_z, weights, drop_l + drop_m, l.len(), m.len())
}

/// `Σ_{n≥N} min(p(n), q(n))` for `p(n) = θ/(θ+a_n)`, from the preset's closed
/// form. `None` when no analytic tail is available.
fn tail_min_bound(a: &SequenceSpec, theta: f64, n: usize) -> Option<f64> {
    use SequenceSpec::*;
    let nf = n.max(1) as f64;
    match a {
        Power(beta) => {
            let b = beta.to_f64();
            if b > 1.0 {
                Some(theta * nf.powf(1.0 - b) / (b - 1.0))
            } else if b < -1.0 {
                Some(nf.powf(1.0 + b) / (theta * (-b - 1.0)))
            } else {
                None
            }
        }
        Geometric {
            scale,
            ratio,
            shift,
        } => {
            let (c, q, d) = (scale.to_f64(), ratio.to_f64(), shift.to_f64());
            if c <= 0.0 {
                None
            } else if q > 0.0 && q < 1.0 && d == 0.0 {
                Some(c * q.powf(nf) / (theta * (1.0 - q)))
            } else if q > 1.0 && d >= 0.0 {
                Some(theta / (c * q.powf(nf) * (1.0 - 1.0 / q)))
            } else {
                None
            }
        }
        File {
            values, extension, ..
        } => {
            if n < values.len() {
                None
            } else {
                match extension {
                    Some(e) => tail_min_bound(e, theta, n),
                    None => Some(0.0),
                }
            }
        }
        Const(_) | Linear { .. } => None,
    }
}

const Z_MAX_TRIALS: usize = 1 << 22;

fn head_probs(a: &SequenceSpec, theta: f64, n: usize) -> Result<Vec<f64>> {
    (0..n)
        .map(|i| {
            let an = a.value(i)?.to_f64();
            Ok(theta / (theta + an))
        })
        .collect()
}

/// Picks the number of trials so that the analytic tail is below `budget`.
fn choose_trials(a: &SequenceSpec, theta: f64, budget: f64) -> Result<(usize, f64)> {
    let start = a.len().unwrap_or(16).max(16);
    if a.len().is_some() && a.is_file_backed() && tail_min_bound(a, theta, start) == Some(0.0) {
        // finite process: the file covers every trial
        return Ok((a.len().unwrap(), 0.0));
    }
    let mut n = start;
    loop {
        let bound = tail_min_bound(a, theta, n).ok_or_else(|| {
            Error::UnsupportedFamily(format!("no analytic tail bound for a = {a}"))
        })?;
        if bound <= budget {
            return Ok((n, bound));
        }
        if n >= Z_MAX_TRIALS {
            return Err(Error::TruncationFailure { bound, tol: budget });
        }
        n *= 2;
    }
}

/// Distribution of `Z` under `P_θ` on the generalized Stirling-I triangle.
/// A file-backed `a` without extension is a finite process and has no
/// truncation error.
pub fn z_distribution(a: &SequenceSpec, theta: f64, tol: f64) -> Result<ZDistribution> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::invalid(format!("θ must be positive and finite, got {theta}")));
    }
    let class = classify_gstirling1(a, a.len().unwrap_or(1000))?;
    if class.classification == Classification::Continuous {
        return Err(Error::DivergentCase(format!(
            "sum a_n/(1+a_n)^2 diverges for a = {a}; Z is not defined"
        )));
    }
    let (n, tail) = choose_trials(a, theta, tol / 2.0)?;
    let ps = head_probs(a, theta, n)?;
    let (min_z, weights, dropped, l_count, m_count) = z_from_probs(&ps, tol / 2.0);
    let bound = tail + dropped;
    if bound > tol {
        return Err(Error::TruncationFailure { bound, tol });
    }
    Ok(ZDistribution {
        theta,
        min_z,
        weights,
        truncation_error_bound: bound,
        trials: n,
        l_count,
        m_count,
    })
}

/// `π(P_z*) = P*(H_1 = 1 | Z = z)` for each `z` with non-negligible weight.
fn pz_first_heads(a: &SequenceSpec, theta: f64, tol: f64) -> Result<Vec<(i64, f64, f64)>> {
    let (n, _) = choose_trials(a, theta, tol)?;
    let ps = head_probs(a, theta, n)?;
    let p0 = ps[0];
    let in_l = p0 <= 1.0 - p0;
    let (min_rest, rest, _, _, _) = z_from_probs(&ps[1..], tol);
    let rest_w = |z: i64| {
        if z < min_rest {
            0.0
        } else {
            rest.get((z - min_rest) as usize).copied().unwrap_or(0.0)
        }
    };
    let lo = min_rest - 1;
    let hi = min_rest + rest.len() as i64 + 1;
    let mut out = Vec::new();
    for z in lo..=hi {
        let (with_head, with_tail) = if in_l {
            (p0 * rest_w(z - 1), (1.0 - p0) * rest_w(z))
        } else {
            (p0 * rest_w(z), (1.0 - p0) * rest_w(z + 1))
        };
        let total = with_head + with_tail;
        if total > 1e-12 {
            out.push((z, with_head / total, total));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremeKind {
    /// `Q_{m,∞}`, at most `m` heads.
    QmInf,
    /// `Q_{∞,m}`, at most `m` tails.
    QInfM,
    PTheta,
    PStar,
    /// `P_z*`, the reference measure conditioned on `Z = z`.
    PZ,
    Trivial,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtremeDescriptor {
    pub kind: ExtremeKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<Scalar>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<i64>,
    pub pi: Scalar,
    pub certificate: String,
}

impl ExtremeDescriptor {
    fn new(kind: ExtremeKind, pi: Scalar, certificate: impl Into<String>) -> Self {
        ExtremeDescriptor {
            kind,
            m: None,
            theta: None,
            z: None,
            pi,
            certificate: certificate.into(),
        }
    }

    fn with_m(mut self, m: usize) -> Self {
        self.m = Some(m);
        self
    }

    fn with_theta(mut self, theta: Scalar) -> Self {
        self.theta = Some(theta);
        self
    }
}

/// A closed interval of `π` values filled by a continuum of extremes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Continuum {
    pub from: Scalar,
    pub to: Scalar,
    pub parameterization: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub family: String,
    pub classification: Classification,
    pub extremes: Vec<ExtremeDescriptor>,
    /// Set when an infinite list of extremes was cut at `max_extremes`.
    pub truncated: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub continuum: Option<Continuum>,
    pub accumulation_points: Vec<Scalar>,
    pub evidence: Evidence,
}

#[derive(Debug, Clone)]
pub struct ReportOptions {
    pub max_extremes: usize,
    pub probe: usize,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            max_extremes: 12,
            probe: 10_000,
        }
    }
}

fn trivial_pair() -> Vec<ExtremeDescriptor> {
    vec![
        ExtremeDescriptor::new(ExtremeKind::Trivial, Scalar::from(0), "all tails, Q_{0,∞}")
            .with_m(0),
        ExtremeDescriptor::new(ExtremeKind::Trivial, Scalar::from(1), "all heads, Q_{∞,0}")
            .with_m(0),
    ]
}

fn empty_evidence(criterion: &str) -> Evidence {
    Evidence {
        criterion: criterion.into(),
        converges: None,
        partial_sums: Vec::new(),
        notes: Vec::new(),
    }
}

/// Extremes and `π` values for the families whose boundary is known.
pub fn boundary_report(spec: &FamilySpec, opts: &ReportOptions) -> Result<BoundaryReport> {
    let family = spec.to_string();
    let mut report = match spec {
        FamilySpec::Pascal => BoundaryReport {
            family: family.clone(),
            classification: Classification::Continuous,
            extremes: trivial_pair(),
            truncated: false,
            continuum: Some(Continuum {
                from: Scalar::from(0),
                to: Scalar::from(1),
                parameterization: "Bernoulli P_θ, π = θ/(1+θ)".into(),
            }),
            accumulation_points: Vec::new(),
            evidence: empty_evidence("exchangeable: de Finetti"),
        },
        FamilySpec::QPascal { q } if *q == Scalar::from(1) => {
            return boundary_report(&FamilySpec::Pascal, opts).map(|mut r| {
                r.family = family.clone();
                r
            })
        }
        FamilySpec::Eulerian { a, b } => eulerian_report(a, b, opts),
        FamilySpec::Custom { .. } => {
            return Err(Error::UnsupportedFamily(format!(
                "no boundary theory for custom weights ({family})"
            )))
        }
        _ => {
            let (a, b) = spec
                .stirling_sequences()
                .expect("remaining families are generalized Stirling");
            gstirling_report(&a, &b, opts)?
        }
    };
    report.family = family;
    Ok(report)
}

fn eulerian_report(a: &Scalar, b: &Scalar, opts: &ReportOptions) -> BoundaryReport {
    let ab = a + b;
    let mut extremes = Vec::new();
    for m in 0..opts.max_extremes {
        let ms = Scalar::from(m as i64);
        let pi = a * &ms / ((&ms + b) * ab.clone());
        let kind = if m == 0 {
            ExtremeKind::Trivial
        } else {
            ExtremeKind::QmInf
        };
        extremes.push(
            ExtremeDescriptor::new(kind, pi, "θ = m + b makes p(m,t) = 0").with_m(m),
        );
    }
    for m in 0..opts.max_extremes {
        let ms = Scalar::from(m as i64);
        let pi = a * &(&ms + &ab) / ((&ms + a) * ab.clone());
        let kind = if m == 0 {
            ExtremeKind::Trivial
        } else {
            ExtremeKind::QInfM
        };
        extremes.push(
            ExtremeDescriptor::new(kind, pi, "θ' = m + a makes q(h,m) = 0").with_m(m),
        );
    }
    let star = a / &ab;
    extremes.push(ExtremeDescriptor::new(
        ExtremeKind::PStar,
        star.clone(),
        "balanced weights, Friedman urn",
    ));
    BoundaryReport {
        family: String::new(),
        classification: Classification::Discrete,
        extremes,
        truncated: true,
        continuum: None,
        accumulation_points: vec![star],
        evidence: empty_evidence("finitely supported extremes accumulate at π(P*)"),
    }
}

fn running_maxima(b: &SequenceSpec, limit: usize, count: usize) -> Result<(Vec<usize>, bool)> {
    let mut out = Vec::new();
    let mut best: Option<Scalar> = None;
    for h in 0..limit {
        let bh = match b.value(h) {
            Ok(v) => v,
            Err(Error::SequenceExhausted { .. }) => return Ok((out, false)),
            Err(e) => return Err(e),
        };
        if best.as_ref().is_none_or(|m| bh > *m) {
            if out.len() == count {
                return Ok((out, true));
            }
            out.push(h);
            best = Some(bh);
        }
    }
    Ok((out, true))
}

fn qm_inf_extremes(
    a: &SequenceSpec,
    b: &SequenceSpec,
    opts: &ReportOptions,
) -> Result<(Vec<ExtremeDescriptor>, bool)> {
    let (ms, truncated) = running_maxima(b, opts.probe, opts.max_extremes)?;
    let b0 = b.value(0)?;
    let a0 = a.value(0)?;
    let list = ms
        .into_iter()
        .map(|m| {
            let bm = b.value(m)?;
            let pi = (&bm - &b0) / (&bm + &a0);
            let kind = if m == 0 {
                ExtremeKind::Trivial
            } else {
                ExtremeKind::QmInf
            };
            Ok(ExtremeDescriptor::new(kind, pi, format!("b_{m} is a strict running maximum; θ = b_{m}"))
                .with_m(m)
                .with_theta(bm))
        })
        .collect::<Result<_>>()?;
    Ok((list, truncated))
}

/// `π(Q_{∞,m}) = 1 - b_0·h_{m-1}(b)/h_m(b)` for summable `b` (the limit of
/// `P_θ` conditioned on `m` tails in total).
pub fn q_inf_m_pi(b: &SequenceSpec, m: usize, terms: usize) -> Result<(Scalar, bool)> {
    if m == 0 {
        return Ok((Scalar::from(1), true));
    }
    if let SequenceSpec::Geometric {
        scale,
        ratio,
        shift,
    } = b
    {
        if shift.is_zero() && scale.is_positive() {
            // h_{m-1}/h_m = (1 - q^m)/c for b_h = c q^h
            return Ok((ratio.powi(m as i64), true));
        }
    }
    let n = probe_len(b, terms);
    let xs: Vec<Scalar> = (0..n)
        .map(|h| b.value(h).map(|v| Scalar::Float(v.to_f64())))
        .collect::<Result<_>>()?;
    let hs = complete_homogeneous_all(&xs, m);
    let b0 = Scalar::Float(b.value(0)?.to_f64());
    let pi = Scalar::Float(1.0) - b0 * &hs[m - 1] / &hs[m];
    Ok((pi, false))
}

fn gstirling_report(
    a: &SequenceSpec,
    b: &SequenceSpec,
    opts: &ReportOptions,
) -> Result<BoundaryReport> {
    if b.is_identically_zero() {
        return gstirling1_report(a, opts);
    }
    if let Supremum::Infinite = b.supremum() {
        let (extremes, truncated) = qm_inf_extremes(a, b, opts)?;
        let mut extremes = extremes;
        extremes.push(trivial_pair().pop().unwrap());
        return Ok(BoundaryReport {
            family: String::new(),
            classification: Classification::Discrete,
            extremes,
            truncated,
            continuum: None,
            accumulation_points: vec![Scalar::from(1)],
            evidence: Evidence {
                criterion: "sup b_h = ∞".into(),
                converges: None,
                partial_sums: Vec::new(),
                notes: vec!["extremes are Q_{m,∞} at strict running maxima of b".into()],
            },
        });
    }
    if !a.is_identically_zero() {
        return Err(Error::UnsupportedFamily(format!(
            "boundary unknown for bounded b with a ≢ 0 (a = {a}, b = {b})"
        )));
    }
    gstirling2_report(b, opts)
}

fn gstirling1_report(a: &SequenceSpec, opts: &ReportOptions) -> Result<BoundaryReport> {
    let class = classify_gstirling1(a, opts.probe)?;
    let a0 = a.value(0)?;
    let mut report = BoundaryReport {
        family: String::new(),
        classification: class.classification,
        extremes: trivial_pair(),
        truncated: false,
        continuum: None,
        accumulation_points: Vec::new(),
        evidence: class.evidence,
    };
    match class.classification {
        Classification::Continuous => {
            report.continuum = Some(Continuum {
                from: Scalar::from(0),
                to: Scalar::from(1),
                parameterization: format!("P_θ, θ ∈ [0,∞], π = θ/(θ + {a0})"),
            });
        }
        Classification::Discrete => {
            // Σ p(n) < ∞ iff Σ 1/a_n < ∞ (accumulation at 1); Σ q(n) < ∞ iff Σ a_n < ∞ (at 0)
            if a.series_converges() == Some(true) {
                report.accumulation_points.push(Scalar::from(0));
            }
            if reciprocal_series_converges(a) == Some(true) {
                report.accumulation_points.push(Scalar::from(1));
            }
            if report.accumulation_points.is_empty() {
                report.accumulation_points = vec![Scalar::from(0), Scalar::from(1)];
            }
            report.evidence.notes.push(
                "extremes P_z* are P_1 conditioned on the tail variable Z = z".into(),
            );
            let mut pz = pz_first_heads(a, 1.0, 1e-12)?;
            if pz.len() > opts.max_extremes {
                report.truncated = true;
                pz.sort_by(|x, y| y.2.total_cmp(&x.2));
                pz.truncate(opts.max_extremes);
                pz.sort_by_key(|x| x.0);
            }
            for (z, pi, weight) in pz {
                let mut d = ExtremeDescriptor::new(
                    ExtremeKind::PZ,
                    Scalar::Float(pi),
                    format!("P_1(Z = {z}) = {weight:.3e}"),
                );
                d.z = Some(z);
                report.extremes.push(d);
            }
        }
        _ => {}
    }
    Ok(report)
}

/// Whether `Σ 1/a_n` converges, from the preset's closed form.
fn reciprocal_series_converges(a: &SequenceSpec) -> Option<bool> {
    use SequenceSpec::*;
    let one = Scalar::from(1);
    match a {
        Const(_) | Linear { .. } => Some(false),
        Power(beta) => Some(*beta > one),
        Geometric { scale, ratio, .. } => Some(scale.is_positive() && *ratio > one),
        File { extension, .. } => extension.as_ref().and_then(|e| reciprocal_series_converges(e)),
    }
}

fn gstirling2_report(b: &SequenceSpec, opts: &ReportOptions) -> Result<BoundaryReport> {
    let len = probe_len(b, opts.probe);
    require_positive(b, "b", len)?;
    let sup = match b.supremum() {
        Supremum::Finite { value, .. } => value,
        Supremum::Infinite => unreachable!("handled by the caller"),
    };
    let b0 = b.value(0)?;
    let edge = Scalar::from(1) - &b0 / &sup;
    let sums = partial_sums(len, |n| Ok(b.value(n)?.to_f64()))?;
    let (mut extremes, mut truncated) = qm_inf_extremes(&SequenceSpec::constant(0), b, opts)?;
    let converges = b.series_converges();
    let mut report = BoundaryReport {
        family: String::new(),
        classification: Classification::Inconclusive,
        extremes: Vec::new(),
        truncated: false,
        continuum: None,
        accumulation_points: Vec::new(),
        evidence: Evidence {
            criterion: "sum b_h".into(),
            converges,
            partial_sums: sums,
            notes: Vec::new(),
        },
    };
    match converges {
        Some(true) => {
            for m in 0..opts.max_extremes {
                let (pi, exact) = q_inf_m_pi(b, m, opts.probe)?;
                let cert = if exact {
                    "P_θ conditioned on m tails in total".to_string()
                } else {
                    format!("P_θ conditioned on m tails in total; b truncated at {len} terms")
                };
                let kind = if m == 0 {
                    ExtremeKind::Trivial
                } else {
                    ExtremeKind::QInfM
                };
                extremes.push(ExtremeDescriptor::new(kind, pi, cert).with_m(m));
            }
            truncated = true;
            report.classification = Classification::Discrete;
            report.accumulation_points.push(edge);
        }
        Some(false) => {
            report.classification = Classification::MixedEndpoints;
            extremes.push(trivial_pair().pop().unwrap());
            report.continuum = Some(Continuum {
                from: edge.clone(),
                to: Scalar::from(1),
                parameterization: format!(
                    "P_θ, θ > sup b = {sup}, π = 1 - {b0}/θ (contained in the boundary)"
                ),
            });
            report.accumulation_points.push(edge);
        }
        None => {
            report
                .evidence
                .notes
                .push("summability of b cannot be decided from file data".into());
            extremes = trivial_pair();
            truncated = false;
        }
    }
    report.extremes = extremes;
    report.truncated = truncated;
    Ok(report)
}

#[derive(Debug, Clone)]
pub enum MomentOutcome {
    /// The reconstructed array is nonnegative.
    Array(ProbabilityFunction),
    /// First negative entry in level order.
    Witness { at: GridPoint, value: Scalar },
}

/// Rebuilds `φ` from its first column by weighted differencing,
/// `φ(h,t+1) = (φ(h,t) - w1(h,t)·φ(h+1,t))/w0(h,t)`.
pub fn hausdorff_check(
    g: &WeightedPascalGraph,
    seq: &[Scalar],
    horizon: usize,
    tol: f64,
) -> Result<MomentOutcome> {
    if seq.len() < horizon + 1 {
        return Err(Error::HorizonMismatch {
            needed: horizon + 1,
            available: seq.len(),
        });
    }
    if seq[0] != Scalar::from(1) {
        return Err(Error::invalid(format!("φ(0,0) must be 1, got {}", seq[0])));
    }
    let mode = seq.iter().fold(g.mode(), |m, x| m.combine(x.mode()));
    let mut values = Triangle::filled(horizon, Scalar::zero(mode));
    for (h, v) in seq.iter().take(horizon + 1).enumerate() {
        values.set(GridPoint::new(h, 0), v.clone());
    }
    for t in 0..horizon {
        for h in 0..horizon - t {
            let p = GridPoint::new(h, t);
            let v = (values.at(p) - &(g.w1(p)? * values.at(p.head()))) / g.w0(p)?;
            values.set(p.tail(), v);
        }
    }
    for (p, v) in values.iter() {
        let negative = match v {
            Scalar::Exact(_) => v.is_negative(),
            Scalar::Float(x) => *x < -tol,
        };
        if negative {
            return Ok(MomentOutcome::Witness { at: p, value: v.clone() });
        }
    }
    Ok(MomentOutcome::Array(ProbabilityFunction::new(
        g,
        values,
        Support::Full,
        Provenance::User,
    )))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtomRecovery {
    /// `μ({q^m})` for `m = 0..=m_max`.
    pub atoms: Vec<Scalar>,
    /// `μ({0})`.
    pub zero_atom: Scalar,
    pub max_residual: f64,
}

/// Recovers `μ` from `seq(n) = Σ_m μ({q^m}) q^{mn}`, where the atom at `0`
/// contributes only to `n = 0`. Each `μ_k` is isolated by applying
/// `∏_{m>k} (E - q^m)` (E the shift) to the remainder.
pub fn q_atom_recovery(seq: &[Scalar], q: &Scalar, m_max: usize, tol: f64) -> Result<AtomRecovery> {
    let one = Scalar::from(1);
    if !q.is_positive() || *q >= one {
        return Err(Error::invalid(format!("atom recovery needs 0 < q < 1, got {q}")));
    }
    if seq.len() < m_max + 3 {
        return Err(Error::invalid(format!(
            "need at least {} terms for {} atoms, got {}",
            m_max + 3,
            m_max + 1,
            seq.len()
        )));
    }
    let mode = seq.iter().fold(q.mode(), |m, x| m.combine(x.mode()));
    let powers: Vec<Scalar> = (0..=m_max).map(|m| q.powi(m as i64)).collect();
    let mut rest: Vec<Scalar> = seq.to_vec();
    let mut atoms = Vec::with_capacity(m_max + 1);
    for k in 0..=m_max {
        // apply (E - q^j) for j > k, starting from n = 1 to avoid the atom at 0
        let mut work: Vec<Scalar> = rest[1..].to_vec();
        let mut scale = powers[k].clone();
        for pj in &powers[k + 1..] {
            work = work.windows(2).map(|w| &w[1] - &(pj * &w[0])).collect();
            scale *= &powers[k] - pj;
        }
        let mu = &work[0] / &scale;
        for (n, r) in rest.iter_mut().enumerate() {
            *r -= &(&mu * &powers[k].powi(n as i64));
        }
        atoms.push(mu);
    }
    let zero_atom = rest[0].clone();
    let max_residual = rest[1..]
        .iter()
        .map(|r| r.abs().to_f64())
        .fold(0.0, f64::max);
    let exceeds = |x: f64| if mode == ScalarMode::Exact { x > 0.0 } else { x > tol };
    if exceeds(max_residual) {
        return Err(Error::NotAMixture(format!(
            "residual {max_residual:.3e} after removing {} atoms",
            m_max + 1
        )));
    }
    let negative = |s: &Scalar| if mode == ScalarMode::Exact { s.is_negative() } else { s.to_f64() < -tol };
    if let Some((m, mu)) = atoms.iter().enumerate().find(|(_, mu)| negative(mu)) {
        return Err(Error::NotAMixture(format!("μ({{q^{m}}}) = {mu} is negative")));
    }
    if negative(&zero_atom) {
        return Err(Error::NotAMixture(format!("μ({{0}}) = {zero_atom} is negative")));
    }
    let total: Scalar = atoms.iter().cloned().sum::<Scalar>() + &zero_atom;
    if exceeds((total - one).abs().to_f64()) {
        return Err(Error::NotAMixture("atoms do not sum to 1".into()));
    }
    Ok(AtomRecovery {
        atoms,
        zero_atom,
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::make_graph;
    use crate::measures::{phi_from_family, MeasureFamily};

    fn seq(s: &str) -> SequenceSpec {
        s.parse().unwrap()
    }

    #[test]
    fn beta_dichotomy() {
        let cases = [
            ("-2", Classification::Discrete),
            ("-1", Classification::Continuous),
            ("-1/2", Classification::Continuous),
            ("0", Classification::Continuous),
            ("1/2", Classification::Continuous),
            ("1", Classification::Continuous),
            ("2", Classification::Discrete),
        ];
        for (beta, expected) in cases {
            let c = classify_gstirling1(&seq(&format!("power:{beta}")), 1000).unwrap();
            assert_eq!(c.classification, expected, "β = {beta}");
        }
        assert_eq!(
            classify_gstirling1(&seq("const:1"), 100).unwrap().classification,
            Classification::Continuous
        );
        let file = SequenceSpec::from_values("toy", vec![1.into(), 2.into(), 3.into()]);
        let c = classify_gstirling1(&file, 100).unwrap();
        assert_eq!(c.classification, Classification::Inconclusive);
        assert_eq!(c.evidence.partial_sums.last().unwrap().n, 3);
        assert!(classify_gstirling1(&seq("linear:-1,3"), 100).is_err());
    }

    #[test]
    fn qm_existence() {
        let a0 = SequenceSpec::constant(0);
        let s2 = SequenceSpec::linear(1, 1);
        assert_eq!(
            qm_exists_gstirling(&s2, &a0, 3).unwrap(),
            QmExistence::Exists {
                pi: Scalar::ratio(3, 4)
            }
        );
        let dec = seq("power:-1");
        assert!(matches!(
            qm_exists_gstirling(&dec, &SequenceSpec::constant(1), 1).unwrap(),
            QmExistence::Absent { .. }
        ));
        // CRP α = -1: b_h = h+1, a_n = n+1
        assert_eq!(
            qm_exists_gstirling(&s2, &SequenceSpec::linear(1, 1), 2).unwrap(),
            QmExistence::Exists {
                pi: Scalar::ratio(1, 2)
            }
        );
        let flat = SequenceSpec::from_values("f", vec![Scalar::Float(1.0), Scalar::Float(1.0 + 1e-14)]);
        assert!(matches!(
            qm_exists_gstirling(&flat, &a0, 1).unwrap(),
            QmExistence::Ambiguous { .. }
        ));
    }

    #[test]
    fn symmetric_functions() {
        let xs: Vec<Scalar> = vec![1.into(), 2.into(), 3.into()];
        assert_eq!(elementary_symmetric(&xs, 2), Scalar::from(11));
        assert_eq!(elementary_symmetric(&xs, 0), Scalar::from(1));
        assert_eq!(elementary_symmetric(&xs, 5), Scalar::from(0));
        assert_eq!(elementary_symmetric(&[], 0), Scalar::from(1));
        // h_2(1,2,3) = 1+4+9+2+3+6
        assert_eq!(complete_homogeneous_all(&xs, 2)[2], Scalar::from(25));
    }

    #[test]
    fn z_on_fast_growth() {
        let z = z_distribution(&seq("geom:1,4"), 1.0, 1e-10).unwrap();
        assert!((z.total() - 1.0).abs() <= z.truncation_error_bound + 1e-12);
        assert!(z.weights.iter().all(|&w| w >= 0.0));
        assert_eq!(z.m_count, 0);
    }

    #[test]
    fn z_degenerate_single_step() {
        // a_0 = 1, then huge: only the first trial matters
        let a = SequenceSpec::from_values("d", vec![1.into()]).with_extension(seq("geom:1e12,2"));
        let z = z_distribution(&a, 1.0, 1e-9).unwrap();
        assert!((z.weight(1) - 0.5).abs() < 1e-9);
        assert!((z.weight(0) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn z_divergent_case() {
        assert!(matches!(
            z_distribution(&seq("power:1"), 1.0, 1e-6),
            Err(Error::DivergentCase(_))
        ));
        assert!(matches!(
            z_distribution(&seq("power:1.0001"), 1.0, 1e-6),
            Err(Error::TruncationFailure { .. })
        ));
    }

    #[test]
    fn reports() {
        let opts = ReportOptions::default();
        let qp = boundary_report(&FamilySpec::QPascal { q: Scalar::ratio(1, 2) }, &opts).unwrap();
        assert_eq!(qp.classification, Classification::Discrete);
        let mut pis: Vec<Scalar> = qp.extremes.iter().map(|e| e.pi.clone()).collect();
        pis.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(pis[0], Scalar::from(0));
        for m in 0..5 {
            assert!(pis.contains(&Scalar::ratio(1, 1 << m)), "missing q^{m}");
        }
        assert_eq!(qp.accumulation_points, vec![Scalar::from(0)]);

        let s2 = boundary_report(&FamilySpec::Stirling2, &opts).unwrap();
        assert_eq!(s2.extremes[3].pi, Scalar::ratio(3, 4));
        assert_eq!(s2.accumulation_points, vec![Scalar::from(1)]);

        let e = boundary_report(
            &FamilySpec::Eulerian {
                a: 1.into(),
                b: 1.into(),
            },
            &opts,
        )
        .unwrap();
        let star = e.extremes.iter().find(|x| x.kind == ExtremeKind::PStar).unwrap();
        assert_eq!(star.pi, Scalar::ratio(1, 2));

        let s1 = boundary_report(&FamilySpec::Stirling1, &opts).unwrap();
        assert_eq!(s1.classification, Classification::Continuous);

        let bounded = FamilySpec::GeneralizedStirling {
            a: SequenceSpec::constant(0),
            b: seq("geom:-1,1/2,2"),
        };
        let r = boundary_report(&bounded, &opts).unwrap();
        assert_eq!(r.classification, Classification::MixedEndpoints);
        assert_eq!(r.accumulation_points, vec![Scalar::ratio(1, 2)]);
        for d in r.extremes.iter().filter(|d| d.kind == ExtremeKind::QmInf) {
            let bm = d.theta.clone().unwrap();
            assert_eq!(d.pi, (&bm - &Scalar::from(1)) / bm);
            assert!(d.pi < Scalar::ratio(1, 2));
        }
    }

    #[test]
    fn report_pi_matches_first_head() {
        let opts = ReportOptions::default();
        let s2 = boundary_report(&FamilySpec::Stirling2, &opts).unwrap();
        for d in s2.extremes.iter().filter(|d| d.kind == ExtremeKind::QmInf) {
            let m = d.m.unwrap();
            let fam = MeasureFamily::stirling2(m as i64 + 1);
            let phi = phi_from_family(&fam, 2).unwrap();
            let g = fam.graph(ScalarMode::Exact).unwrap();
            assert_eq!(crate::measures::pi_first_head(&g, &phi).unwrap(), d.pi);
        }
        let e = boundary_report(
            &FamilySpec::Eulerian {
                a: 2.into(),
                b: 3.into(),
            },
            &opts,
        )
        .unwrap();
        for d in &e.extremes {
            let fam = match d.kind {
                ExtremeKind::QmInf => MeasureFamily::EulerianExtreme {
                    a: 2.into(),
                    b: 3.into(),
                    m: d.m.unwrap(),
                    side: crate::measures::Side::Heads,
                },
                ExtremeKind::QInfM => MeasureFamily::EulerianExtreme {
                    a: 2.into(),
                    b: 3.into(),
                    m: d.m.unwrap(),
                    side: crate::measures::Side::Tails,
                },
                ExtremeKind::PStar => MeasureFamily::Friedman {
                    a: 2.into(),
                    b: 3.into(),
                },
                _ => continue,
            };
            let g = fam.graph(ScalarMode::Exact).unwrap();
            let phi = phi_from_family(&fam, 2).unwrap();
            assert_eq!(crate::measures::pi_first_head(&g, &phi).unwrap(), d.pi, "{fam}");
        }
    }

    #[test]
    fn hausdorff_examples() {
        let pascal = make_graph(&FamilySpec::Pascal, ScalarMode::Exact).unwrap();
        let half: Vec<Scalar> = (0..7).map(|n| Scalar::ratio(1, 1 << n)).collect();
        match hausdorff_check(&pascal, &half, 6, 0.0).unwrap() {
            MomentOutcome::Array(phi) => {
                for (p, v) in phi.values.iter() {
                    assert_eq!(*v, Scalar::ratio(1, 1 << p.level()));
                }
            }
            MomentOutcome::Witness { at, .. } => panic!("unexpected witness at {at}"),
        }
        let bad = vec![1.into(), 1.into(), 1.into(), Scalar::ratio(1, 2), 0.into()];
        assert!(matches!(
            hausdorff_check(&pascal, &bad, 4, 0.0).unwrap(),
            MomentOutcome::Witness { .. }
        ));
    }

    #[test]
    fn atoms() {
        let q = Scalar::ratio(1, 2);
        let ones: Vec<Scalar> = vec![Scalar::from(1); 8];
        let r = q_atom_recovery(&ones, &q, 3, 0.0).unwrap();
        assert_eq!(r.atoms[0], Scalar::from(1));
        assert!(r.atoms[1..].iter().all(|x| x.is_zero()));

        let mixed: Vec<Scalar> = (0..10)
            .map(|n| Scalar::ratio(1, 2) + Scalar::ratio(1, 2) * q.powi(n))
            .collect();
        let r = q_atom_recovery(&mixed, &q, 4, 0.0).unwrap();
        assert_eq!(r.atoms[0], Scalar::ratio(1, 2));
        assert_eq!(r.atoms[1], Scalar::ratio(1, 2));
        assert!(r.zero_atom.is_zero());

        let thirds: Vec<Scalar> = (0..10).map(|n| Scalar::ratio(1, 3).powi(n)).collect();
        assert!(matches!(
            q_atom_recovery(&thirds, &q, 4, 1e-10),
            Err(Error::NotAMixture(_))
        ));

        // atom at 0: seq = (1, 0, 0, …)
        let mut delta = vec![Scalar::from(0); 8];
        delta[0] = Scalar::from(1);
        let r = q_atom_recovery(&delta, &q, 2, 0.0).unwrap();
        assert_eq!(r.zero_atom, Scalar::from(1));
    }
}
