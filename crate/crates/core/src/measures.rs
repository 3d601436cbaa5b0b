//! Probability functions `φ` on a truncation, the transition kernels they
//! induce, the catalog of explicit measure families, Doob transforms and
//! stochastic-order comparison of elementary measures.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::dims::{dimension_table, extended_dimension, DimensionTable};
use crate::error::{Error, Result};
use crate::graph::{key, make_graph, parse_keyed, FamilySpec, GridPoint, WeightedPascalGraph};
use crate::scalar::{Scalar, ScalarMode};
use crate::sequence::{SequenceSpec, Supremum};
use crate::triangle::Triangle;

/// Where a finitely supported measure lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "m", rename_all = "snake_case")]
pub enum Support {
    Full,
    /// `I_m = {h ≤ m}`
    HeadsAtMost(usize),
    /// `J_m = {t ≤ m}`
    TailsAtMost(usize),
}

impl Support {
    pub fn contains(self, p: GridPoint) -> bool {
        match self {
            Support::Full => true,
            Support::HeadsAtMost(m) => p.h <= m,
            Support::TailsAtMost(m) => p.t <= m,
        }
    }
}

/// Which side of a finitely supported extreme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `Q_{m,∞}`: at most `m` heads.
    Heads,
    /// `Q_{∞,m}`: at most `m` tails.
    Tails,
}

/// Named measures with closed-form probability functions or kernels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "process", rename_all = "snake_case")]
pub enum MeasureFamily {
    /// Homogeneous coin with head probability `θ/(1+θ)` on the Pascal graph.
    Bernoulli { theta: Scalar },
    /// Pólya urn started from `(a, b)`.
    Polya { a: Scalar, b: Scalar },
    /// `φ_θ = B_h(θ)/A_{h+t}(θ)` on the generalized Stirling triangle.
    GStirling {
        a: SequenceSpec,
        b: SequenceSpec,
        theta: Scalar,
    },
    /// Chinese restaurant process, `a_n = n+1`, `b_h = -α(h+1)`.
    Crp { alpha: Scalar, theta: Scalar },
    /// The nonergodic α = -1 variant, given by its kernel.
    CrpGamma { gamma: Scalar },
    /// Extreme of the q-Pascal triangle, `0 < q < 1`, supported on `t ≤ m`.
    QPascalExtreme { q: Scalar, m: usize },
    /// q-analogue of the Pólya urn on the q-Pascal triangle, given by its kernel.
    QPolya {
        q: Scalar,
        alpha: Scalar,
        beta: Scalar,
    },
    /// Friedman urn: the balanced measure of the generalized Eulerian triangle.
    Friedman { a: Scalar, b: Scalar },
    /// Finitely supported extremes of the generalized Eulerian triangle.
    EulerianExtreme {
        a: Scalar,
        b: Scalar,
        m: usize,
        side: Side,
    },
}

fn rising(x: &Scalar, n: usize) -> Scalar {
    let mut acc = Scalar::one(x.mode());
    for j in 0..n {
        acc *= x + &Scalar::from(j as i64);
    }
    acc
}

impl MeasureFamily {
    pub fn stirling1(theta: impl Into<Scalar>) -> Self {
        MeasureFamily::GStirling {
            a: SequenceSpec::linear(1, 1),
            b: SequenceSpec::constant(0),
            theta: theta.into(),
        }
    }

    pub fn stirling2(theta: impl Into<Scalar>) -> Self {
        MeasureFamily::GStirling {
            a: SequenceSpec::constant(0),
            b: SequenceSpec::linear(1, 1),
            theta: theta.into(),
        }
    }

    /// Space-time walk: generalized Stirling-I with `b ≡ 0`.
    pub fn space_time(a: SequenceSpec, theta: impl Into<Scalar>) -> Self {
        MeasureFamily::GStirling {
            a,
            b: SequenceSpec::constant(0),
            theta: theta.into(),
        }
    }

    /// The graph family this measure belongs to.
    pub fn graph_spec(&self) -> FamilySpec {
        use MeasureFamily::*;
        match self {
            Bernoulli { .. } | Polya { .. } => FamilySpec::Pascal,
            GStirling { a, b, .. } => FamilySpec::GeneralizedStirling {
                a: a.clone(),
                b: b.clone(),
            },
            Crp { alpha, .. } => FamilySpec::GeneralizedStirling {
                a: SequenceSpec::linear(1, 1),
                b: SequenceSpec::linear(-alpha, -alpha),
            },
            CrpGamma { .. } => FamilySpec::GeneralizedStirling {
                a: SequenceSpec::linear(1, 1),
                b: SequenceSpec::linear(1, 1),
            },
            QPascalExtreme { q, .. } | QPolya { q, .. } => FamilySpec::QPascal { q: q.clone() },
            Friedman { a, b } | EulerianExtreme { a, b, .. } => FamilySpec::Eulerian {
                a: a.clone(),
                b: b.clone(),
            },
        }
    }

    pub fn mode(&self) -> ScalarMode {
        use MeasureFamily::*;
        match self {
            Bernoulli { theta } => theta.mode(),
            Polya { a, b } | Friedman { a, b } | EulerianExtreme { a, b, .. } => {
                a.mode().combine(b.mode())
            }
            GStirling { a, b, theta } => a.mode().combine(b.mode()).combine(theta.mode()),
            Crp { alpha, theta } => alpha.mode().combine(theta.mode()),
            CrpGamma { gamma } => gamma.mode(),
            QPascalExtreme { q, .. } => q.mode(),
            QPolya { q, alpha, beta } => q.mode().combine(alpha.mode()).combine(beta.mode()),
        }
    }

    pub fn graph(&self, mode: ScalarMode) -> Result<WeightedPascalGraph> {
        make_graph(&self.graph_spec(), mode)
    }

    /// Checks parameter constraints and returns the support of the measure.
    pub fn validate(&self) -> Result<Support> {
        use MeasureFamily::*;
        let zero = Scalar::from(0);
        let one = Scalar::from(1);
        match self {
            Bernoulli { theta } => {
                if theta.is_negative() {
                    return Err(Error::invalid(format!("Bernoulli requires θ ≥ 0, got {theta}")));
                }
                Ok(if theta.is_zero() {
                    Support::HeadsAtMost(0)
                } else {
                    Support::Full
                })
            }
            Polya { a, b } | Friedman { a, b } => {
                if !a.is_positive() || !b.is_positive() {
                    return Err(Error::invalid(format!("requires a, b > 0, got a={a}, b={b}")));
                }
                Ok(Support::Full)
            }
            EulerianExtreme { a, b, m, side } => {
                if !a.is_positive() || !b.is_positive() {
                    return Err(Error::invalid(format!("requires a, b > 0, got a={a}, b={b}")));
                }
                Ok(match side {
                    Side::Heads => Support::HeadsAtMost(*m),
                    Side::Tails => Support::TailsAtMost(*m),
                })
            }
            GStirling { a, b, theta } => gstirling_support(a, b, theta),
            Crp { alpha, theta } => {
                if *alpha >= one {
                    return Err(Error::invalid(format!("CRP requires α < 1, got {alpha}")));
                }
                if alpha.is_negative() {
                    // θ = -α·m with m a positive integer: at most m blocks
                    let ratio = -(theta / alpha);
                    let m = integer_value(&ratio).ok_or_else(|| {
                        Error::invalid(format!(
                            "CRP with α < 0 requires -θ/α to be a positive integer; -θ/α = {ratio}"
                        ))
                    })?;
                    if m < 1 {
                        return Err(Error::invalid(format!(
                            "CRP with α < 0 requires -θ/α ≥ 1; -θ/α = {ratio}"
                        )));
                    }
                    Ok(Support::HeadsAtMost(m as usize - 1))
                } else {
                    if theta.is_negative() {
                        return Err(Error::invalid(format!(
                            "CRP with 0 ≤ α < 1 requires θ ≥ 0, got {theta}"
                        )));
                    }
                    if theta.is_zero() && alpha.is_zero() {
                        Ok(Support::HeadsAtMost(0))
                    } else {
                        Ok(Support::Full)
                    }
                }
            }
            CrpGamma { gamma } => {
                if !gamma.is_positive() || *gamma >= one {
                    return Err(Error::invalid(format!("γ-CRP requires 0 < γ < 1, got {gamma}")));
                }
                Ok(Support::Full)
            }
            QPascalExtreme { q, m } => {
                if *q <= zero || *q >= one {
                    return Err(Error::invalid(format!(
                        "q-Pascal extremes are defined for 0 < q < 1, got {q}"
                    )));
                }
                Ok(Support::TailsAtMost(*m))
            }
            QPolya { q, alpha, beta } => {
                if !q.is_positive() || *q == one {
                    return Err(Error::invalid(format!("q-Pólya requires q > 0, q ≠ 1, got {q}")));
                }
                if !alpha.is_positive() || !beta.is_positive() {
                    return Err(Error::invalid(format!(
                        "q-Pólya requires α, β > 0, got α={alpha}, β={beta}"
                    )));
                }
                if q.is_exact() && (alpha.as_integer().is_none() || beta.as_integer().is_none()) {
                    return Err(Error::invalid(
                        "exact q-Pólya needs integer α, β; pass decimals for float mode",
                    ));
                }
                Ok(Support::Full)
            }
        }
    }

    /// Closed-form `φ(h,t)` in the given arithmetic. `None` for families that
    /// are defined by their kernel only.
    fn phi_closed_form(&self, p: GridPoint, mode: ScalarMode) -> Result<Option<Scalar>> {
        use MeasureFamily::*;
        let c = |s: &Scalar| s.clone().into_mode(mode);
        let (h, t, n) = (p.h, p.t, p.level());
        let int = |v: usize| Scalar::from_int(v as i64, mode);
        Ok(Some(match self {
            Bernoulli { theta } => {
                let theta = c(theta)?;
                let denom = &theta + &Scalar::one(mode);
                theta.powi(h as i64) / denom.powi(n as i64)
            }
            Polya { a, b } => {
                let (a, b) = (c(a)?, c(b)?);
                rising(&a, h) * rising(&b, t) / rising(&(&a + &b), n)
            }
            GStirling { a, b, theta } => {
                let theta = c(theta)?;
                let mut num = Scalar::one(mode);
                for j in 0..h {
                    num *= &theta - &b.value_in(j, mode)?;
                }
                let mut den = Scalar::one(mode);
                for j in 0..n {
                    den *= &theta + &a.value_in(j, mode)?;
                }
                num / den
            }
            Crp { alpha, theta } => {
                let (alpha, theta) = (c(alpha)?, c(theta)?);
                let mut num = Scalar::one(mode);
                for j in 1..=h {
                    num *= &theta + &(&alpha * &int(j));
                }
                num / rising(&(&theta + &Scalar::one(mode)), n)
            }
            CrpGamma { .. } | QPolya { .. } => return Ok(None),
            QPascalExtreme { q, m } => {
                if t > *m {
                    Scalar::zero(mode)
                } else {
                    let q = c(q)?;
                    let mut v = q.powi(((m - t) * h) as i64);
                    for j in 0..t {
                        v *= Scalar::one(mode) - q.powi((m - j) as i64);
                    }
                    v
                }
            }
            Friedman { a, b } => {
                let ab = c(a)? + c(b)?;
                Scalar::one(mode) / rising(&ab, n)
            }
            EulerianExtreme { a, b, m, side } => {
                let (a, b) = (c(a)?, c(b)?);
                let m_s = int(*m);
                let (limited, free, theta) = match side {
                    Side::Heads => (h, t, &m_s + &b),
                    Side::Tails => (t, h, &m_s + &a),
                };
                if limited > *m {
                    return Ok(Some(Scalar::zero(mode)));
                }
                let mut num = Scalar::one(mode);
                for i in 0..limited {
                    num *= int(m - i);
                }
                num *= rising(&(&m_s + &(&a + &b)), free);
                num / (theta.powi(n as i64) * rising(&(&a + &b), n))
            }
        }))
    }

    /// Closed-form transition kernel.
    pub fn kernel(&self) -> Result<TransitionKernel> {
        use MeasureFamily::*;
        let support = self.validate()?;
        let mode = self.mode();
        let label = self.to_string();
        let this = self.clone();
        let exact = move |p: GridPoint| this.head_probability(p, mode);
        let fast: Arc<dyn Fn(GridPoint) -> Result<f64> + Send + Sync> = match self {
            Bernoulli { theta } => {
                let th = theta.to_f64();
                let v = th / (1.0 + th);
                Arc::new(move |_| Ok(v))
            }
            Polya { a, b } => {
                let (a, b) = (a.to_f64(), b.to_f64());
                Arc::new(move |p| Ok((a + p.h as f64) / (a + b + p.level() as f64)))
            }
            GStirling { a, b, theta } => {
                let (a, b, th) = (a.f64_evaluator(), b.f64_evaluator(), theta.to_f64());
                Arc::new(move |p| {
                    let bh = b(p.h)?;
                    let an = a(p.level())?;
                    Ok((th - bh) / (th + an))
                })
            }
            Crp { alpha, theta } => {
                let (al, th) = (alpha.to_f64(), theta.to_f64());
                Arc::new(move |p| {
                    Ok((th + al * (p.h as f64 + 1.0)) / (p.level() as f64 + 1.0 + th))
                })
            }
            CrpGamma { gamma } => {
                let g = gamma.to_f64();
                Arc::new(move |p| {
                    let h1 = p.h as f64 + 1.0;
                    let n1 = p.level() as f64 + 1.0;
                    Ok(h1 * (h1 - g) / (n1 * (n1 + g)))
                })
            }
            QPascalExtreme { q, m } => {
                let (q, m) = (q.to_f64(), *m);
                Arc::new(move |p| Ok(q.powi((m - p.t) as i32)))
            }
            QPolya { q, alpha, beta } => {
                let (q, al, be) = (q.to_f64(), alpha.to_f64(), beta.to_f64());
                Arc::new(move |p| {
                    let num = 1.0 - q.powf(al + p.h as f64);
                    Ok(num / (1.0 - q.powf(al + be + p.level() as f64)))
                })
            }
            Friedman { a, b } => {
                let (a, b) = (a.to_f64(), b.to_f64());
                Arc::new(move |p| Ok((p.t as f64 + a) / (p.level() as f64 + a + b)))
            }
            EulerianExtreme { a, b, m, side } => {
                let (a, b, m, side) = (a.to_f64(), b.to_f64(), *m as f64, *side);
                Arc::new(move |p| {
                    let (h, t, n) = (p.h as f64, p.t as f64, p.level() as f64);
                    Ok(match side {
                        Side::Heads => (m - h) * (t + a) / ((m + b) * (n + a + b)),
                        Side::Tails => 1.0 - (m - t) * (h + b) / ((m + a) * (n + a + b)),
                    })
                })
            }
        };
        Ok(TransitionKernel {
            head: Arc::new(exact),
            head_f64: fast,
            support: Arc::new(move |p| support.contains(p)),
            label,
        })
    }

    /// Exact head probability at `p` from the closed-form kernel.
    fn head_probability(&self, p: GridPoint, mode: ScalarMode) -> Result<Scalar> {
        use MeasureFamily::*;
        let c = |s: &Scalar| s.clone().into_mode(mode);
        let (h, t, n) = (p.h, p.t, p.level());
        let int = |v: usize| Scalar::from_int(v as i64, mode);
        let one = Scalar::one(mode);
        Ok(match self {
            Bernoulli { theta } => {
                let th = c(theta)?;
                &th / &(&th + &one)
            }
            Polya { a, b } => {
                let (a, b) = (c(a)?, c(b)?);
                (&a + &int(h)) / (a + b + int(n))
            }
            GStirling { a, b, theta } => {
                let th = c(theta)?;
                (&th - &b.value_in(h, mode)?) / (&th + &a.value_in(n, mode)?)
            }
            Crp { alpha, theta } => {
                let (al, th) = (c(alpha)?, c(theta)?);
                (&th + &(al * int(h + 1))) / (int(n + 1) + th)
            }
            CrpGamma { gamma } => {
                let g = c(gamma)?;
                let h1 = int(h + 1);
                let n1 = int(n + 1);
                (&h1 * &(&h1 - &g)) / (&n1 * &(&n1 + &g))
            }
            QPascalExtreme { q, m } => c(q)?.powi((m - t) as i64),
            QPolya { q, alpha, beta } => {
                // [α+h]_q / [α+β+n]_q
                let q = c(q)?;
                let (al, be) = (c(alpha)?, c(beta)?);
                let num = &one - &q.pow(&(&al + &int(h)));
                num / (&one - &q.pow(&(al + be + int(n))))
            }
            Friedman { a, b } => {
                let (a, b) = (c(a)?, c(b)?);
                (int(t) + &a) / (int(n) + a + b)
            }
            EulerianExtreme { a, b, m, side } => {
                let (a, b) = (c(a)?, c(b)?);
                let ab_n = int(n) + &a + &b;
                match side {
                    Side::Heads => {
                        (int(m - h) * (int(t) + &a)) / ((int(*m) + &b) * ab_n)
                    }
                    Side::Tails => {
                        one - (int(m - t) * (int(h) + &b)) / ((int(*m) + &a) * ab_n)
                    }
                }
            }
        })
    }
}

fn integer_value(x: &Scalar) -> Option<i64> {
    match x {
        Scalar::Exact(r) => r.is_integer().then(|| r.to_integer().to_i64()).flatten(),
        Scalar::Float(v) => {
            let r = v.round();
            ((v - r).abs() <= 1e-9).then_some(r as i64)
        }
    }
}

/// Support of `φ_θ` on a generalized Stirling triangle: full when
/// `θ > sup b` (or equals an unattained supremum), `I_m` when `θ = b_m` with
/// `b_m` a strict running maximum.
fn gstirling_support(a: &SequenceSpec, b: &SequenceSpec, theta: &Scalar) -> Result<Support> {
    const SEARCH_LIMIT: usize = 1_000_000;
    let b0 = b.value(0)?;
    if *theta < b0 {
        return Err(Error::invalid(format!(
            "θ = {theta} is below b_0 = {b0}; φ_θ would be negative"
        )));
    }
    let a0 = a.value(0)?;
    if !(theta + &a0).is_positive() {
        return Err(Error::invalid(format!("θ + a_0 must be positive, got {}", theta + &a0)));
    }
    match b.supremum() {
        Supremum::Finite { value, .. } if *theta > value => Ok(Support::Full),
        Supremum::Finite {
            value,
            attained_at: None,
        } if *theta == value => Ok(Support::Full),
        _ => {
            // find the first index with b_m ≥ θ; it must hit θ exactly
            let mut m = 0;
            loop {
                let bm = match b.value(m) {
                    Ok(v) => v,
                    Err(Error::SequenceExhausted { .. }) => return Ok(Support::Full),
                    Err(e) => return Err(e),
                };
                if bm >= *theta {
                    if bm == *theta {
                        return Ok(Support::HeadsAtMost(m));
                    }
                    return Err(Error::invalid(format!(
                        "θ = {theta} must exceed sup b_h or equal a strict running maximum b_m; \
                         b_{m} = {bm} jumps over it"
                    )));
                }
                m += 1;
                if m > SEARCH_LIMIT {
                    return Err(Error::invalid(format!(
                        "could not locate θ = {theta} among the first {SEARCH_LIMIT} values of b"
                    )));
                }
            }
        }
    }
}

impl fmt::Display for MeasureFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use MeasureFamily::*;
        match self {
            Bernoulli { theta } => write!(f, "bernoulli;theta={theta}"),
            Polya { a, b } => write!(f, "polya;a={a};b={b}"),
            GStirling { a, b, theta } => write!(f, "gstirling;a={a};b={b};theta={theta}"),
            Crp { alpha, theta } => write!(f, "crp;alpha={alpha};theta={theta}"),
            CrpGamma { gamma } => write!(f, "crp-gamma;gamma={gamma}"),
            QPascalExtreme { q, m } => write!(f, "qpascal;q={q};m={m}"),
            QPolya { q, alpha, beta } => write!(f, "qpolya;q={q};alpha={alpha};beta={beta}"),
            Friedman { a, b } => write!(f, "friedman;a={a};b={b}"),
            EulerianExtreme { a, b, m, side } => {
                let s = match side {
                    Side::Heads => "eulerian-heads",
                    Side::Tails => "eulerian-tails",
                };
                write!(f, "{s};a={a};b={b};m={m}")
            }
        }
    }
}

impl FromStr for MeasureFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, keys) = parse_keyed(s)?;
        let sc = |k: &str| -> Result<Scalar> { Scalar::parse(key(&keys, k)?) };
        let seq = |k: &str| -> Result<SequenceSpec> { key(&keys, k)?.parse() };
        let int = |k: &str| -> Result<usize> {
            key(&keys, k)?
                .parse()
                .map_err(|_| Error::Parse(format!("`{k}` must be a nonnegative integer")))
        };
        use MeasureFamily::*;
        Ok(match name.as_str() {
            "bernoulli" => Bernoulli { theta: sc("theta")? },
            "polya" => Polya {
                a: sc("a")?,
                b: sc("b")?,
            },
            "gstirling" => GStirling {
                a: seq("a")?,
                b: seq("b")?,
                theta: sc("theta")?,
            },
            "stirling1" => MeasureFamily::stirling1(sc("theta")?),
            "stirling2" => MeasureFamily::stirling2(sc("theta")?),
            "spacetime" | "gstirling1" => MeasureFamily::space_time(seq("a")?, sc("theta")?),
            "crp" => Crp {
                alpha: sc("alpha")?,
                theta: sc("theta")?,
            },
            "crp-gamma" | "crp_gamma" => CrpGamma { gamma: sc("gamma")? },
            "qpascal" => QPascalExtreme {
                q: sc("q")?,
                m: int("m")?,
            },
            "qpolya" => QPolya {
                q: sc("q")?,
                alpha: sc("alpha")?,
                beta: sc("beta")?,
            },
            "friedman" | "eulerian" => Friedman {
                a: sc("a")?,
                b: sc("b")?,
            },
            "eulerian-heads" => EulerianExtreme {
                a: sc("a")?,
                b: sc("b")?,
                m: int("m")?,
                side: Side::Heads,
            },
            "eulerian-tails" => EulerianExtreme {
                a: sc("a")?,
                b: sc("b")?,
                m: int("m")?,
                side: Side::Tails,
            },
            other => return Err(Error::Parse(format!("unknown measure family `{other}`"))),
        })
    }
}

/// How a probability function was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Provenance {
    Family { family: MeasureFamily },
    MartinLimit { path: String },
    Doob,
    Kernel { label: String },
    User,
}

/// `φ(h,t)` on `h + t ≤ horizon`, zero outside `support`.
#[derive(Debug, Clone)]
pub struct ProbabilityFunction {
    pub graph_label: String,
    pub mode: ScalarMode,
    pub support: Support,
    pub provenance: Provenance,
    pub values: Triangle<Scalar>,
}

impl ProbabilityFunction {
    pub fn new(
        g: &WeightedPascalGraph,
        values: Triangle<Scalar>,
        support: Support,
        provenance: Provenance,
    ) -> Self {
        let mode = values
            .iter()
            .fold(ScalarMode::Exact, |m, (_, v)| m.combine(v.mode()));
        ProbabilityFunction {
            graph_label: g.label().to_string(),
            mode,
            support,
            provenance,
            values,
        }
    }

    pub fn horizon(&self) -> usize {
        self.values.horizon()
    }

    pub fn at(&self, h: usize, t: usize) -> &Scalar {
        self.values.at(GridPoint::new(h, t))
    }

    pub fn get(&self, p: GridPoint) -> Option<&Scalar> {
        self.values.get(p)
    }
}

/// Fills `φ` for a catalog measure; kernel-defined families go through
/// [`phi_from_kernel`].
pub fn phi_from_family(family: &MeasureFamily, horizon: usize) -> Result<ProbabilityFunction> {
    let support = family.validate()?;
    let mode = family.mode();
    let g = family.graph(mode)?;
    if matches!(
        family,
        MeasureFamily::CrpGamma { .. } | MeasureFamily::QPolya { .. }
    ) {
        let kernel = family.kernel()?;
        let mut phi = phi_from_kernel(&g, &kernel, horizon)?;
        phi.provenance = Provenance::Family {
            family: family.clone(),
        };
        return Ok(phi);
    }
    let values = Triangle::try_from_fn(horizon, |p| {
        if support.contains(p) {
            family
                .phi_closed_form(p, mode)
                .map(|v| v.expect("closed form exists"))
        } else {
            Ok(Scalar::zero(mode))
        }
    })?;
    Ok(ProbabilityFunction::new(
        &g,
        values,
        support,
        Provenance::Family {
            family: family.clone(),
        },
    ))
}

/// Recovers `φ` from a kernel: the probability of a path divided by its
/// weight, which must depend on the endpoint only.
pub fn phi_from_kernel(
    g: &WeightedPascalGraph,
    kernel: &TransitionKernel,
    horizon: usize,
) -> Result<ProbabilityFunction> {
    let mode = g.mode();
    let mut values = Triangle::filled(horizon, Scalar::zero(mode));
    values.set(GridPoint::ORIGIN, Scalar::one(mode));
    for n in 1..=horizon {
        for h in 0..=n {
            let p = GridPoint::new(h, n - h);
            // heads first, then tails
            let (prev, head) = if p.t == 0 {
                (GridPoint::new(h - 1, 0), true)
            } else {
                (GridPoint::new(h, p.t - 1), false)
            };
            let before = values.at(prev).clone();
            if before.is_zero() || !kernel.in_support(prev) {
                continue;
            }
            let step = if head { kernel.p(prev)? } else { kernel.q(prev)? };
            let w = g.weight(prev, if head { crate::graph::Edge::Head } else { crate::graph::Edge::Tail })?;
            values.set(p, before * step / w);
        }
    }
    let support = infer_support(&values);
    Ok(ProbabilityFunction::new(
        g,
        values,
        support,
        Provenance::Kernel {
            label: kernel.label.clone(),
        },
    ))
}

fn infer_support(values: &Triangle<Scalar>) -> Support {
    let n = values.horizon();
    let max_h = values.iter().filter(|(_, v)| !v.is_zero()).map(|(p, _)| p.h).max();
    let max_t = values.iter().filter(|(_, v)| !v.is_zero()).map(|(p, _)| p.t).max();
    match (max_h, max_t) {
        (Some(h), _) if h < n => Support::HeadsAtMost(h),
        (_, Some(t)) if t < n => Support::TailsAtMost(t),
        _ => Support::Full,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhiCheck {
    /// `max |φ(h,t) - w0·φ(h,t+1) - w1·φ(h+1,t)|` over `h + t < horizon`.
    pub max_recursion_residual: Scalar,
    pub worst_residual_at: Option<GridPoint>,
    /// `max_n |Σ_h φ(h,n-h)·d(h,n-h) - 1|`.
    pub max_level_sum_error: Scalar,
    pub negativity_witness: Option<GridPoint>,
    pub origin_is_one: bool,
}

impl PhiCheck {
    pub fn is_exact_zero(&self) -> bool {
        self.max_recursion_residual.is_zero()
            && self.max_level_sum_error.is_zero()
            && self.negativity_witness.is_none()
            && self.origin_is_one
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_recursion_residual.to_f64() <= tol
            && self.max_level_sum_error.to_f64() <= tol
            && self.negativity_witness.is_none()
            && self.origin_is_one
    }
}

/// Forward-recursion residuals, level-sum normalization and negativity.
pub fn check_probability_function(
    g: &WeightedPascalGraph,
    phi: &ProbabilityFunction,
) -> Result<PhiCheck> {
    let horizon = phi.horizon();
    let dims = dimension_table(g, horizon)?;
    check_with_dims(g, phi, &dims)
}

pub fn check_with_dims(
    g: &WeightedPascalGraph,
    phi: &ProbabilityFunction,
    dims: &DimensionTable,
) -> Result<PhiCheck> {
    let horizon = phi.horizon();
    if dims.horizon() < horizon {
        return Err(Error::HorizonMismatch {
            needed: horizon,
            available: dims.horizon(),
        });
    }
    let mode = g.mode().combine(phi.mode);
    let mut worst = Scalar::zero(mode);
    let mut worst_at = None;
    for (p, v) in phi.values.iter() {
        if p.level() >= horizon {
            continue;
        }
        let rhs = g.w0(p)? * phi.values.at(p.tail()) + g.w1(p)? * phi.values.at(p.head());
        let r = (v - &rhs).abs();
        if r > worst {
            worst = r;
            worst_at = Some(p);
        }
    }
    let mut level_err = Scalar::zero(mode);
    for n in 0..=horizon {
        let mut total = Scalar::zero(mode);
        for h in 0..=n {
            let p = GridPoint::new(h, n - h);
            total += phi.values.at(p) * dims.values.at(p);
        }
        let e = (total - Scalar::one(mode)).abs();
        if e > level_err {
            level_err = e;
        }
    }
    let negativity_witness = phi
        .values
        .iter()
        .find(|(_, v)| v.is_negative())
        .map(|(p, _)| p);
    Ok(PhiCheck {
        max_recursion_residual: worst,
        worst_residual_at: worst_at,
        max_level_sum_error: level_err,
        negativity_witness,
        origin_is_one: *phi.values.at(GridPoint::ORIGIN) == Scalar::from(1),
    })
}

pub type HeadFn = Arc<dyn Fn(GridPoint) -> Result<Scalar> + Send + Sync>;
pub type HeadF64Fn = Arc<dyn Fn(GridPoint) -> Result<f64> + Send + Sync>;

/// Head/tail transition probabilities of a chain on ℤ₊².
#[derive(Clone)]
pub struct TransitionKernel {
    head: HeadFn,
    head_f64: HeadF64Fn,
    support: Arc<dyn Fn(GridPoint) -> bool + Send + Sync>,
    pub label: String,
}

impl fmt::Debug for TransitionKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransitionKernel")
            .field("label", &self.label)
            .finish()
    }
}

impl TransitionKernel {
    /// Kernel from an exact head-probability function; the double-precision
    /// path converts its values.
    pub fn new<F, S>(head: F, support: S, label: impl Into<String>) -> Self
    where
        F: Fn(GridPoint) -> Result<Scalar> + Send + Sync + 'static,
        S: Fn(GridPoint) -> bool + Send + Sync + 'static,
    {
        let head: HeadFn = Arc::new(head);
        let h2 = head.clone();
        TransitionKernel {
            head,
            head_f64: Arc::new(move |p| h2(p).map(|v| v.to_f64())),
            support: Arc::new(support),
            label: label.into(),
        }
    }

    pub fn in_support(&self, p: GridPoint) -> bool {
        (self.support)(p)
    }

    /// Head probability; an error outside the support.
    pub fn p(&self, at: GridPoint) -> Result<Scalar> {
        if !self.in_support(at) {
            return Err(Error::OutsideSupport { at });
        }
        (self.head)(at)
    }

    pub fn q(&self, at: GridPoint) -> Result<Scalar> {
        let p = self.p(at)?;
        Ok(Scalar::one(p.mode()) - p)
    }

    pub fn p_f64(&self, at: GridPoint) -> Result<f64> {
        if !self.in_support(at) {
            return Err(Error::KernelOutOfSupport { at });
        }
        (self.head_f64)(at)
    }

    /// Probability of the increment sequence from the origin.
    pub fn path_probability(&self, steps: &[bool]) -> Result<Scalar> {
        let mut prob: Option<Scalar> = None;
        let mut at = GridPoint::ORIGIN;
        for &head in steps {
            if !self.in_support(at) {
                return Ok(Scalar::from(0));
            }
            let s = if head { self.p(at)? } else { self.q(at)? };
            prob = Some(match prob {
                Some(acc) => acc * s,
                None => s,
            });
            at = at.step(head);
        }
        Ok(prob.unwrap_or_else(|| Scalar::from(1)))
    }
}

/// `p = w1·φ(h+1,t)/φ(h,t)`, `q = w0·φ(h,t+1)/φ(h,t)` on `h + t < horizon`.
/// States where `φ` vanishes are outside the support.
pub fn kernel_from_phi(g: &WeightedPascalGraph, phi: &ProbabilityFunction) -> TransitionKernel {
    let values = Arc::new(phi.values.clone());
    let horizon = phi.horizon();
    let g = g.clone();
    let v2 = values.clone();
    TransitionKernel::new(
        move |p| {
            let here = values.at(p);
            Ok(g.w1(p)? * values.at(p.head()) / here)
        },
        move |p| p.level() < horizon && v2.get(p).is_some_and(|v| v.is_positive()),
        "phi-kernel",
    )
}

/// `p = w1/σ(h+t)`, `q = w0/σ(h+t)` for a balanced graph (balance checked up
/// to `horizon`).
pub fn kernel_from_balance(g: &WeightedPascalGraph, horizon: usize) -> Result<TransitionKernel> {
    match crate::graph::is_balanced(g, horizon)? {
        crate::graph::Balance::NotBalanced { witness } => Err(Error::NotBalanced { witness }),
        crate::graph::Balance::Balanced(_) => {
            let g = g.clone();
            Ok(TransitionKernel::new(
                move |p| {
                    let w1 = g.w1(p)?;
                    let sigma = g.w0(p)? + &w1;
                    Ok(w1 / sigma)
                },
                |_| true,
                "balance-kernel",
            ))
        }
    }
}

/// Change of measure `φ = ψ·φ*` by a `P*`-harmonic `ψ`.
pub fn doob_transform<F>(
    g: &WeightedPascalGraph,
    reference: &ProbabilityFunction,
    psi: F,
    tol: f64,
) -> Result<ProbabilityFunction>
where
    F: Fn(GridPoint) -> Scalar,
{
    let horizon = reference.horizon();
    let kernel = kernel_from_phi(g, reference);
    let psi_tab = Triangle::from_fn(horizon, &psi);
    if *psi_tab.at(GridPoint::ORIGIN) != Scalar::from(1) {
        return Err(Error::NotHarmonic {
            at: GridPoint::ORIGIN,
            residual: (psi_tab.at(GridPoint::ORIGIN) - &Scalar::from(1)).to_f64(),
        });
    }
    let mut worst: Option<(GridPoint, Scalar)> = None;
    for (p, v) in psi_tab.iter() {
        if v.is_negative() {
            return Err(Error::NotHarmonic {
                at: p,
                residual: v.to_f64(),
            });
        }
        if p.level() >= horizon || !kernel.in_support(p) {
            continue;
        }
        let rhs = kernel.p(p)? * psi_tab.at(p.head()) + kernel.q(p)? * psi_tab.at(p.tail());
        let r = (v - &rhs).abs();
        if worst.as_ref().is_none_or(|(_, w)| r > *w) {
            worst = Some((p, r));
        }
    }
    if let Some((at, r)) = worst {
        let exceeded = if r.is_exact() { !r.is_zero() } else { r.to_f64() > tol };
        if exceeded {
            return Err(Error::NotHarmonic {
                at,
                residual: r.to_f64(),
            });
        }
    }
    let values = Triangle::from_fn(horizon, |p| psi_tab.at(p) * reference.values.at(p));
    let support = infer_support(&values);
    Ok(ProbabilityFunction::new(g, values, support, Provenance::Doob))
}

/// `π = P(H_1 = 1) = w1(0,0)·φ(1,0)`.
pub fn pi_first_head(g: &WeightedPascalGraph, phi: &ProbabilityFunction) -> Result<Scalar> {
    let phi10 = phi
        .get(GridPoint::new(1, 0))
        .ok_or(Error::HorizonMismatch {
            needed: 1,
            available: 0,
        })?;
    Ok(g.w1(GridPoint::ORIGIN)? * phi10)
}

#[derive(Debug, Clone, Serialize)]
pub struct OrderingReport {
    pub level: usize,
    /// `P_A(H_m ≥ h) ≥ P_B(H_m ≥ h)` for all `m ≤ n`, `h`.
    pub a_dominates_b: bool,
    pub b_dominates_a: bool,
    pub equal: bool,
    /// Points `(h, m-h)` where the inequality `A ≥ B` is strict.
    pub strict_points: Vec<GridPoint>,
    /// `P(H_m = m)` for `m = 0..=n` under each elementary measure.
    pub all_heads_a: Vec<Scalar>,
    pub all_heads_b: Vec<Scalar>,
}

/// `P(H_m ≥ h)` under the elementary measure `Q_terminal`, indexed `[m][h]`.
pub fn elementary_tail_probabilities(
    g: &WeightedPascalGraph,
    terminal: GridPoint,
) -> Result<Vec<Vec<Scalar>>> {
    let n = terminal.level();
    let dims = dimension_table(g, n)?;
    let total = dims.values.at(terminal).clone();
    let mut out = Vec::with_capacity(n + 1);
    for m in 0..=n {
        let mut masses = vec![Scalar::zero(g.mode()); m + 2];
        for h in 0..=m {
            let p = GridPoint::new(h, m - h);
            if p.precedes(terminal) {
                masses[h] = dims.values.at(p) * &extended_dimension(g, p, terminal)? / &total;
            }
        }
        // suffix sums
        for h in (0..=m).rev() {
            let next = masses[h + 1].clone();
            masses[h] += next;
        }
        masses.pop();
        out.push(masses);
    }
    Ok(out)
}

/// Compares the elementary measures at two terminals of the same level.
pub fn stochastic_compare(
    g: &WeightedPascalGraph,
    a: GridPoint,
    b: GridPoint,
) -> Result<OrderingReport> {
    if a.level() != b.level() {
        return Err(Error::LevelMismatch(a.level(), b.level()));
    }
    let ta = elementary_tail_probabilities(g, a)?;
    let tb = elementary_tail_probabilities(g, b)?;
    let mut a_dom = true;
    let mut b_dom = true;
    let mut strict = Vec::new();
    for m in 0..=a.level() {
        for h in 0..=m {
            let (pa, pb) = (&ta[m][h], &tb[m][h]);
            if pa < pb {
                a_dom = false;
            }
            if pb < pa {
                b_dom = false;
            }
            if pa > pb {
                strict.push(GridPoint::new(h, m - h));
            }
        }
    }
    let all_heads = |t: &Vec<Vec<Scalar>>| (0..t.len()).map(|m| t[m][m].clone()).collect();
    Ok(OrderingReport {
        level: a.level(),
        a_dominates_b: a_dom,
        b_dominates_a: b_dom,
        equal: a_dom && b_dom,
        strict_points: strict,
        all_heads_a: all_heads(&ta),
        all_heads_b: all_heads(&tb),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::make_graph;

    fn pt(h: usize, t: usize) -> GridPoint {
        GridPoint::new(h, t)
    }

    #[test]
    fn closed_form_examples() {
        let polya = phi_from_family(
            &MeasureFamily::Polya {
                a: 1.into(),
                b: 1.into(),
            },
            4,
        )
        .unwrap();
        assert_eq!(*polya.at(1, 1), Scalar::ratio(1, 6));

        let qp = phi_from_family(
            &MeasureFamily::QPascalExtreme {
                q: Scalar::ratio(1, 2),
                m: 1,
            },
            4,
        )
        .unwrap();
        assert_eq!(*qp.at(1, 0), Scalar::ratio(1, 2));
        assert_eq!(*qp.at(0, 1), Scalar::ratio(1, 2));
        assert_eq!(*qp.at(0, 2), Scalar::from(0));

        let s1 = phi_from_family(&MeasureFamily::stirling1(1), 4).unwrap();
        assert_eq!(*s1.at(1, 1), Scalar::ratio(1, 6));
    }

    #[test]
    fn crp_parameter_checks() {
        let bad = MeasureFamily::Crp {
            alpha: Scalar::from(-1),
            theta: Scalar::ratio(3, 2),
        };
        assert!(matches!(bad.validate(), Err(Error::InvalidParameter(_))));
        let good = MeasureFamily::Crp {
            alpha: Scalar::from(-1),
            theta: Scalar::from(3),
        };
        assert_eq!(good.validate().unwrap(), Support::HeadsAtMost(2));
        let float_ok = MeasureFamily::Crp {
            alpha: Scalar::Float(-0.5),
            theta: Scalar::Float(1.5),
        };
        assert_eq!(float_ok.validate().unwrap(), Support::HeadsAtMost(2));
        let no_blocks = MeasureFamily::Crp {
            alpha: Scalar::from(-1),
            theta: Scalar::from(0),
        };
        assert!(no_blocks.validate().is_err());
    }

    #[test]
    fn gstirling_theta_constraints() {
        // Stirling-II, θ = b_2 = 3 gives Q_{2,∞}
        assert_eq!(
            MeasureFamily::stirling2(3).validate().unwrap(),
            Support::HeadsAtMost(2)
        );
        assert!(MeasureFamily::stirling2(Scalar::ratio(5, 2)).validate().is_err());
        // b_h = 1/(h+1) decreasing: θ = b_1 is not a running maximum
        let dec = MeasureFamily::GStirling {
            a: SequenceSpec::constant(1),
            b: "power:-1".parse().unwrap(),
            theta: Scalar::ratio(1, 2),
        };
        assert!(dec.validate().is_err());
        let above = MeasureFamily::GStirling {
            a: SequenceSpec::constant(1),
            b: "power:-1".parse().unwrap(),
            theta: Scalar::from(2),
        };
        assert_eq!(above.validate().unwrap(), Support::Full);
    }

    #[test]
    fn catalog_residuals_vanish() {
        let families = [
            MeasureFamily::Bernoulli {
                theta: Scalar::ratio(2, 3),
            },
            MeasureFamily::Polya {
                a: Scalar::ratio(1, 2),
                b: 3.into(),
            },
            MeasureFamily::stirling1(2),
            MeasureFamily::stirling2(4),
            MeasureFamily::Crp {
                alpha: Scalar::ratio(1, 2),
                theta: Scalar::ratio(1, 3),
            },
            MeasureFamily::CrpGamma {
                gamma: Scalar::ratio(1, 3),
            },
            MeasureFamily::QPascalExtreme {
                q: Scalar::ratio(1, 3),
                m: 2,
            },
            MeasureFamily::QPolya {
                q: Scalar::ratio(2, 3),
                alpha: 1.into(),
                beta: 2.into(),
            },
            MeasureFamily::Friedman {
                a: 1.into(),
                b: 2.into(),
            },
            MeasureFamily::EulerianExtreme {
                a: 1.into(),
                b: Scalar::ratio(1, 2),
                m: 3,
                side: Side::Heads,
            },
            MeasureFamily::EulerianExtreme {
                a: 2.into(),
                b: 1.into(),
                m: 2,
                side: Side::Tails,
            },
        ];
        for fam in families {
            let phi = phi_from_family(&fam, 10).unwrap();
            let g = fam.graph(ScalarMode::Exact).unwrap();
            let check = check_probability_function(&g, &phi).unwrap();
            assert!(check.is_exact_zero(), "{fam}: {check:?}");
        }
    }

    #[test]
    fn constant_one_is_not_a_probability_function() {
        let g = make_graph(&FamilySpec::Pascal, ScalarMode::Exact).unwrap();
        let phi = ProbabilityFunction::new(
            &g,
            Triangle::filled(4, Scalar::from(1)),
            Support::Full,
            Provenance::User,
        );
        let check = check_probability_function(&g, &phi).unwrap();
        assert_eq!(check.max_recursion_residual, Scalar::from(1));
        assert!(!check.is_exact_zero());
    }

    #[test]
    fn kernels_from_phi() {
        let theta = Scalar::ratio(3, 2);
        let fam = MeasureFamily::Bernoulli {
            theta: theta.clone(),
        };
        let g = fam.graph(ScalarMode::Exact).unwrap();
        let phi = phi_from_family(&fam, 6).unwrap();
        let k = kernel_from_phi(&g, &phi);
        let expected = &theta / &(&theta + &Scalar::from(1));
        for h in 0..3 {
            for t in 0..3 {
                assert_eq!(k.p(pt(h, t)).unwrap(), expected);
                assert_eq!(k.p(pt(h, t)).unwrap() + k.q(pt(h, t)).unwrap(), Scalar::from(1));
            }
        }

        let crp = MeasureFamily::Crp {
            alpha: Scalar::ratio(1, 3),
            theta: 2.into(),
        };
        let g = crp.graph(ScalarMode::Exact).unwrap();
        let phi = phi_from_family(&crp, 8).unwrap();
        let k = kernel_from_phi(&g, &phi);
        for h in 0..4 {
            for t in 0..4 {
                let expected = (Scalar::from(2) + Scalar::ratio(1, 3) * Scalar::from(h as i64 + 1))
                    / Scalar::from((h + t) as i64 + 3);
                assert_eq!(k.p(pt(h, t)).unwrap(), expected);
            }
        }

        let qp = MeasureFamily::QPascalExtreme {
            q: Scalar::ratio(1, 2),
            m: 1,
        };
        let g = qp.graph(ScalarMode::Exact).unwrap();
        let phi = phi_from_family(&qp, 6).unwrap();
        let k = kernel_from_phi(&g, &phi);
        // at t = m the only move is a head
        assert_eq!(k.q(pt(2, 1)).unwrap(), Scalar::from(0));
        assert!(matches!(k.p(pt(0, 2)), Err(Error::OutsideSupport { .. })));
    }

    #[test]
    fn finite_support_kernel_boundary() {
        // Stirling-II Q_{1,∞}: p(1,t) = 0
        let fam = MeasureFamily::stirling2(2);
        let g = fam.graph(ScalarMode::Exact).unwrap();
        let phi = phi_from_family(&fam, 6).unwrap();
        let k = kernel_from_phi(&g, &phi);
        assert_eq!(k.p(pt(1, 3)).unwrap(), Scalar::from(0));
    }

    #[test]
    fn balance_kernels() {
        let eul = make_graph(
            &FamilySpec::Eulerian {
                a: 2.into(),
                b: 3.into(),
            },
            ScalarMode::Exact,
        )
        .unwrap();
        let k = kernel_from_balance(&eul, 10).unwrap();
        assert_eq!(k.p(pt(2, 1)).unwrap(), Scalar::ratio(3, 8));

        let pascal = make_graph(&FamilySpec::Pascal, ScalarMode::Exact).unwrap();
        assert_eq!(
            kernel_from_balance(&pascal, 5).unwrap().p(pt(3, 3)).unwrap(),
            Scalar::ratio(1, 2)
        );

        // Stirling-I with w1 multiplied by θ: σ = θ + n + 1
        let theta = Scalar::from(2);
        let s1 = make_graph(&FamilySpec::Stirling1, ScalarMode::Exact).unwrap();
        let th = theta.clone();
        let moved = crate::graph::family_transform(
            &s1,
            |_| Scalar::from(1),
            move |_| th.clone(),
            |_| Scalar::from(1),
        );
        let k = kernel_from_balance(&moved, 10).unwrap();
        assert_eq!(k.p(pt(1, 2)).unwrap(), Scalar::ratio(2, 6));

        let s2 = make_graph(&FamilySpec::Stirling2, ScalarMode::Exact).unwrap();
        assert!(matches!(
            kernel_from_balance(&s2, 4),
            Err(Error::NotBalanced { .. })
        ));
    }

    #[test]
    fn doob_examples() {
        let g = make_graph(&FamilySpec::Pascal, ScalarMode::Exact).unwrap();
        let fair = phi_from_family(
            &MeasureFamily::Bernoulli {
                theta: Scalar::from(1),
            },
            6,
        )
        .unwrap();
        let same = doob_transform(&g, &fair, |_| Scalar::from(1), 0.0).unwrap();
        assert_eq!(same.values, fair.values);

        let pi = Scalar::ratio(1, 3);
        let pi2 = pi.clone();
        let psi = move |p: GridPoint| {
            Scalar::from(2).powi(p.level() as i64)
                * pi2.powi(p.h as i64)
                * (Scalar::from(1) - &pi2).powi(p.t as i64)
        };
        let tilted = doob_transform(&g, &fair, &psi, 0.0).unwrap();
        for (p, v) in tilted.values.iter() {
            let expected = pi.powi(p.h as i64) * (Scalar::from(1) - &pi).powi(p.t as i64);
            assert_eq!(*v, expected);
        }

        let broken = move |p: GridPoint| {
            if p == pt(1, 1) {
                psi(p) + Scalar::ratio(1, 100)
            } else {
                psi(p)
            }
        };
        assert!(matches!(
            doob_transform(&g, &fair, broken, 0.0),
            Err(Error::NotHarmonic { .. })
        ));
    }

    #[test]
    fn first_head_probabilities() {
        let fam = MeasureFamily::Polya {
            a: 2.into(),
            b: 5.into(),
        };
        let g = fam.graph(ScalarMode::Exact).unwrap();
        let phi = phi_from_family(&fam, 2).unwrap();
        assert_eq!(pi_first_head(&g, &phi).unwrap(), Scalar::ratio(2, 7));

        for m in 0..6usize {
            let fam = MeasureFamily::stirling2(m as i64 + 1);
            let g = fam.graph(ScalarMode::Exact).unwrap();
            let phi = phi_from_family(&fam, 2).unwrap();
            assert_eq!(
                pi_first_head(&g, &phi).unwrap(),
                Scalar::ratio(m as i64, m as i64 + 1)
            );
        }
    }

    #[test]
    fn stochastic_ordering() {
        let pascal = make_graph(&FamilySpec::Pascal, ScalarMode::Exact).unwrap();
        let rep = stochastic_compare(&pascal, pt(3, 1), pt(1, 3)).unwrap();
        assert!(rep.a_dominates_b && !rep.b_dominates_a);
        assert!(rep.strict_points.contains(&pt(1, 0)));
        let same = stochastic_compare(&pascal, pt(2, 2), pt(2, 2)).unwrap();
        assert!(same.equal);
        assert!(matches!(
            stochastic_compare(&pascal, pt(1, 1), pt(1, 2)),
            Err(Error::LevelMismatch(2, 3))
        ));

        let s1 = make_graph(&FamilySpec::Stirling1, ScalarMode::Exact).unwrap();
        let rep = stochastic_compare(&s1, pt(2, 2), pt(1, 3)).unwrap();
        assert!(rep.a_dominates_b);
        // (1,3) cannot pass through (2,0)
        assert!(rep.all_heads_a[2].is_positive());
        assert!(rep.all_heads_b[2].is_zero());
        for m in 0..=4 {
            assert!(rep.all_heads_a[m] >= rep.all_heads_b[m], "m={m}");
        }
    }

    #[test]
    fn measure_strings_round_trip() {
        for s in [
            "polya;a=1;b=1",
            "crp;alpha=-1;theta=3",
            "qpascal;q=1/2;m=2",
            "eulerian-tails;a=1;b=1;m=2",
            "gstirling;a=linear:1,1;b=const:0;theta=2",
        ] {
            let fam: MeasureFamily = s.parse().unwrap();
            assert_eq!(fam.to_string(), s);
        }
    }
}
