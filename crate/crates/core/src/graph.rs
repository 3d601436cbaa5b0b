//! Weighted Pascal graphs, the named triangle catalog, and the admissible
//! weight transformations.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Scalar, ScalarMode};
use crate::sequence::SequenceSpec;

/// A state `(h, t)`: `h` heads and `t` tails after `h + t` trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridPoint {
    pub h: usize,
    pub t: usize,
}

impl GridPoint {
    pub const ORIGIN: GridPoint = GridPoint { h: 0, t: 0 };

    pub const fn new(h: usize, t: usize) -> Self {
        GridPoint { h, t }
    }

    pub fn level(self) -> usize {
        self.h + self.t
    }

    pub fn head(self) -> GridPoint {
        GridPoint::new(self.h + 1, self.t)
    }

    pub fn tail(self) -> GridPoint {
        GridPoint::new(self.h, self.t + 1)
    }

    pub fn step(self, head: bool) -> GridPoint {
        if head {
            self.head()
        } else {
            self.tail()
        }
    }

    /// True if `other` can be reached from `self` by a monotone path.
    pub fn precedes(self, other: GridPoint) -> bool {
        self.h <= other.h && self.t <= other.t
    }

    pub fn transposed(self) -> GridPoint {
        GridPoint::new(self.t, self.h)
    }
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.h, self.t)
    }
}

/// Which outgoing edge of a grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Edge {
    /// `(h,t) → (h,t+1)`, weight `w0`
    Tail,
    /// `(h,t) → (h+1,t)`, weight `w1`
    Head,
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Edge::Tail => f.write_str("w0"),
            Edge::Head => f.write_str("w1"),
        }
    }
}

/// A weight on one of the custom-graph edges: a sequence indexed by a
/// coordinate of the source point, or a finite `h,t,value` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CustomWeight {
    OfHeads(SequenceSpec),
    OfTails(SequenceSpec),
    OfLevel(SequenceSpec),
    Table {
        source: String,
        #[serde(with = "table_serde")]
        entries: HashMap<GridPoint, Scalar>,
    },
}

mod table_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        map: &HashMap<GridPoint, Scalar>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let mut rows: Vec<_> = map.iter().map(|(p, v)| (p.h, p.t, v.clone())).collect();
        rows.sort_by_key(|r| (r.0, r.1));
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<HashMap<GridPoint, Scalar>, D::Error> {
        let rows: Vec<(usize, usize, Scalar)> = Vec::deserialize(d)?;
        Ok(rows
            .into_iter()
            .map(|(h, t, v)| (GridPoint::new(h, t), v))
            .collect())
    }
}

impl CustomWeight {
    fn mode(&self) -> ScalarMode {
        match self {
            CustomWeight::OfHeads(s) | CustomWeight::OfTails(s) | CustomWeight::OfLevel(s) => {
                s.mode()
            }
            CustomWeight::Table { entries, .. } => entries
                .values()
                .fold(ScalarMode::Exact, |m, v| m.combine(v.mode())),
        }
    }

    fn eval(&self, p: GridPoint) -> Result<Scalar> {
        match self {
            CustomWeight::OfHeads(s) => s.value(p.h),
            CustomWeight::OfTails(s) => s.value(p.t),
            CustomWeight::OfLevel(s) => s.value(p.level()),
            CustomWeight::Table { source, entries } => entries.get(&p).cloned().ok_or_else(|| {
                Error::invalid(format!("weight table {source} has no entry for {p}"))
            }),
        }
    }

    /// Reads a weight file: `n,value` (a function of the level) or
    /// `h,t,value` (an explicit table).
    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let header = text.lines().next().unwrap_or("").replace(' ', "");
        if header == "h,t,value" {
            let mut rdr = csv::ReaderBuilder::new()
                .trim(csv::Trim::All)
                .from_reader(text.as_bytes());
            let mut entries = HashMap::new();
            for record in rdr.records() {
                let record = record?;
                let h = record[0]
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad h {:?}", &record[0])))?;
                let t = record[1]
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad t {:?}", &record[1])))?;
                entries.insert(GridPoint::new(h, t), Scalar::parse(&record[2])?);
            }
            Ok(CustomWeight::Table {
                source: path.display().to_string(),
                entries,
            })
        } else {
            let values = crate::sequence::parse_sequence_csv(text.as_bytes())?;
            Ok(CustomWeight::OfLevel(SequenceSpec::from_values(
                &path.display().to_string(),
                values,
            )))
        }
    }
}

impl fmt::Display for CustomWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CustomWeight::OfHeads(s) => write!(f, "h:{s}"),
            CustomWeight::OfTails(s) => write!(f, "t:{s}"),
            CustomWeight::OfLevel(s) => write!(f, "n:{s}"),
            CustomWeight::Table { source, .. } => write!(f, "table:{source}"),
        }
    }
}

impl FromStr for CustomWeight {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (axis, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("custom weight {s:?} needs an axis prefix")))?;
        match axis {
            "h" => Ok(CustomWeight::OfHeads(rest.parse()?)),
            "t" => Ok(CustomWeight::OfTails(rest.parse()?)),
            "n" => Ok(CustomWeight::OfLevel(rest.parse()?)),
            "table" | "file" => CustomWeight::read_file(rest),
            other => Err(Error::Parse(format!("unknown custom weight axis `{other}`"))),
        }
    }
}

/// The catalog of named weighted Pascal graphs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilySpec {
    /// `w0 = w1 = 1`
    Pascal,
    /// `w0 = h+t+1`, `w1 = 1`
    Stirling1,
    /// `w0 = h+1`, `w1 = 1`
    Stirling2,
    /// `w0 = a_{h+t} + b_h`, `w1 = 1`
    GeneralizedStirling { a: SequenceSpec, b: SequenceSpec },
    /// `w0 = q^h`, `w1 = 1`
    QPascal { q: Scalar },
    /// `w0 = h+b`, `w1 = t+a`
    Eulerian { a: Scalar, b: Scalar },
    Custom { w0: CustomWeight, w1: CustomWeight },
}

impl FamilySpec {
    pub fn mode(&self) -> ScalarMode {
        match self {
            FamilySpec::Pascal | FamilySpec::Stirling1 | FamilySpec::Stirling2 => {
                ScalarMode::Exact
            }
            FamilySpec::GeneralizedStirling { a, b } => a.mode().combine(b.mode()),
            FamilySpec::QPascal { q } => q.mode(),
            FamilySpec::Eulerian { a, b } => a.mode().combine(b.mode()),
            FamilySpec::Custom { w0, w1 } => w0.mode().combine(w1.mode()),
        }
    }

    /// The `(a_n)`, `(b_h)` pair when the family is a generalized Stirling
    /// triangle.
    pub fn stirling_sequences(&self) -> Option<(SequenceSpec, SequenceSpec)> {
        match self {
            FamilySpec::Stirling1 => Some((
                SequenceSpec::linear(1, 1),
                SequenceSpec::constant(0),
            )),
            FamilySpec::Stirling2 => Some((
                SequenceSpec::constant(0),
                SequenceSpec::linear(1, 1),
            )),
            FamilySpec::GeneralizedStirling { a, b } => Some((a.clone(), b.clone())),
            FamilySpec::QPascal { q } => Some((
                SequenceSpec::constant(0),
                SequenceSpec::geometric(1, q.clone()),
            )),
            _ => None,
        }
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilySpec::Pascal => f.write_str("pascal"),
            FamilySpec::Stirling1 => f.write_str("stirling1"),
            FamilySpec::Stirling2 => f.write_str("stirling2"),
            FamilySpec::GeneralizedStirling { a, b } => write!(f, "gstirling;a={a};b={b}"),
            FamilySpec::QPascal { q } => write!(f, "qpascal;q={q}"),
            FamilySpec::Eulerian { a, b } => write!(f, "eulerian;a={a};b={b}"),
            FamilySpec::Custom { w0, w1 } => write!(f, "custom;w0={w0};w1={w1}"),
        }
    }
}

/// Splits `name;key=value;key=value` into the name and a key map.
pub(crate) fn parse_keyed(s: &str) -> Result<(String, HashMap<String, String>)> {
    let mut parts = s.trim().split(';');
    let name = parts.next().unwrap_or("").trim().to_ascii_lowercase();
    let mut keys = HashMap::new();
    for part in parts {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key=value, found {part:?}")))?;
        keys.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok((name, keys))
}

pub(crate) fn key<'a>(keys: &'a HashMap<String, String>, k: &str) -> Result<&'a str> {
    keys.get(k)
        .map(String::as_str)
        .ok_or_else(|| Error::Parse(format!("missing parameter `{k}`")))
}

impl FromStr for FamilySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, keys) = parse_keyed(s)?;
        Ok(match name.as_str() {
            "pascal" => FamilySpec::Pascal,
            "stirling1" => FamilySpec::Stirling1,
            "stirling2" => FamilySpec::Stirling2,
            "gstirling" | "generalized_stirling" => FamilySpec::GeneralizedStirling {
                a: key(&keys, "a")?.parse()?,
                b: key(&keys, "b")?.parse()?,
            },
            "gstirling1" => FamilySpec::GeneralizedStirling {
                a: key(&keys, "a")?.parse()?,
                b: SequenceSpec::constant(0),
            },
            "gstirling2" => FamilySpec::GeneralizedStirling {
                a: SequenceSpec::constant(0),
                b: key(&keys, "b")?.parse()?,
            },
            "qpascal" => FamilySpec::QPascal {
                q: Scalar::parse(key(&keys, "q")?)?,
            },
            "eulerian" => FamilySpec::Eulerian {
                a: Scalar::parse(key(&keys, "a")?)?,
                b: Scalar::parse(key(&keys, "b")?)?,
            },
            "custom" => FamilySpec::Custom {
                w0: key(&keys, "w0")?.parse()?,
                w1: key(&keys, "w1")?.parse()?,
            },
            other => return Err(Error::Parse(format!("unknown graph family `{other}`"))),
        })
    }
}

pub type WeightFn = Arc<dyn Fn(GridPoint) -> Result<Scalar> + Send + Sync>;

/// The lattice ℤ₊² with positive weights on head and tail edges.
///
/// Positivity is checked when a weight is evaluated. Graphs are immutable and
/// cheap to clone.
#[derive(Clone)]
pub struct WeightedPascalGraph {
    w0: WeightFn,
    w1: WeightFn,
    mode: ScalarMode,
    family: Option<FamilySpec>,
    label: String,
}

impl fmt::Debug for WeightedPascalGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightedPascalGraph")
            .field("label", &self.label)
            .field("mode", &self.mode)
            .finish()
    }
}

impl WeightedPascalGraph {
    /// Builds a graph from raw weight functions. Values are converted into
    /// `mode` on evaluation.
    pub fn from_fns<F0, F1>(w0: F0, w1: F1, mode: ScalarMode, label: impl Into<String>) -> Self
    where
        F0: Fn(GridPoint) -> Result<Scalar> + Send + Sync + 'static,
        F1: Fn(GridPoint) -> Result<Scalar> + Send + Sync + 'static,
    {
        WeightedPascalGraph {
            w0: Arc::new(move |p| w0(p)?.into_mode(mode)),
            w1: Arc::new(move |p| w1(p)?.into_mode(mode)),
            mode,
            family: None,
            label: label.into(),
        }
    }

    pub fn mode(&self) -> ScalarMode {
        self.mode
    }

    pub fn family(&self) -> Option<&FamilySpec> {
        self.family.as_ref()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Weight of `(h,t) → (h,t+1)`.
    pub fn w0(&self, p: GridPoint) -> Result<Scalar> {
        self.checked(Edge::Tail, p)
    }

    /// Weight of `(h,t) → (h+1,t)`.
    pub fn w1(&self, p: GridPoint) -> Result<Scalar> {
        self.checked(Edge::Head, p)
    }

    pub fn weight(&self, p: GridPoint, edge: Edge) -> Result<Scalar> {
        self.checked(edge, p)
    }

    fn checked(&self, edge: Edge, p: GridPoint) -> Result<Scalar> {
        let v = match edge {
            Edge::Tail => (self.w0)(p)?,
            Edge::Head => (self.w1)(p)?,
        };
        if v.is_positive() {
            Ok(v)
        } else {
            Err(Error::NonPositiveWeight {
                edge,
                at: p,
                value: v.to_string(),
            })
        }
    }

    /// Product of edge weights along the increments `steps` (true = head)
    /// starting at `start`.
    pub fn path_weight(&self, start: GridPoint, steps: &[bool]) -> Result<Scalar> {
        let mut w = Scalar::one(self.mode);
        let mut at = start;
        for &head in steps {
            w *= if head { self.w1(at)? } else { self.w0(at)? };
            at = at.step(head);
        }
        Ok(w)
    }

    fn derived(&self, w0: WeightFn, w1: WeightFn, label: String) -> Self {
        WeightedPascalGraph {
            w0,
            w1,
            mode: self.mode,
            family: None,
            label,
        }
    }
}

/// Builds the graph of a catalog family.
///
/// Exact mode requires every parameter to be rational; float mode converts
/// them to doubles.
pub fn make_graph(spec: &FamilySpec, mode: ScalarMode) -> Result<WeightedPascalGraph> {
    if mode == ScalarMode::Exact && spec.mode() == ScalarMode::Float {
        return Err(Error::invalid(format!(
            "family `{spec}` has non-rational parameters and cannot be built in exact mode"
        )));
    }
    let one = move |_: GridPoint| Ok(Scalar::one(mode));
    let label = spec.to_string();
    let graph = match spec {
        FamilySpec::Pascal => WeightedPascalGraph::from_fns(one, one, mode, label),
        FamilySpec::Stirling1 => WeightedPascalGraph::from_fns(
            |p: GridPoint| Ok(Scalar::from(p.level() as i64 + 1)),
            one,
            mode,
            label,
        ),
        FamilySpec::Stirling2 => WeightedPascalGraph::from_fns(
            |p: GridPoint| Ok(Scalar::from(p.h as i64 + 1)),
            one,
            mode,
            label,
        ),
        FamilySpec::GeneralizedStirling { a, b } => {
            let (a, b) = (a.clone(), b.clone());
            WeightedPascalGraph::from_fns(
                move |p: GridPoint| Ok(a.value(p.level())? + b.value(p.h)?),
                one,
                mode,
                label,
            )
        }
        FamilySpec::QPascal { q } => {
            if !q.is_positive() {
                return Err(Error::invalid(format!("q-Pascal requires q > 0, got {q}")));
            }
            let q = q.clone();
            WeightedPascalGraph::from_fns(move |p: GridPoint| Ok(q.powi(p.h as i64)), one, mode, label)
        }
        FamilySpec::Eulerian { a, b } => {
            if !a.is_positive() || !b.is_positive() {
                return Err(Error::invalid(format!(
                    "generalized Eulerian triangle requires a, b > 0, got a={a}, b={b}"
                )));
            }
            let (a, b) = (a.clone(), b.clone());
            WeightedPascalGraph::from_fns(
                move |p: GridPoint| Ok(Scalar::from(p.h as i64) + &b),
                move |p: GridPoint| Ok(Scalar::from(p.t as i64) + &a),
                mode,
                label,
            )
        }
        FamilySpec::Custom { w0, w1 } => {
            let (w0, w1) = (w0.clone(), w1.clone());
            WeightedPascalGraph::from_fns(move |p| w0.eval(p), move |p| w1.eval(p), mode, label)
        }
    };
    Ok(WeightedPascalGraph {
        family: Some(spec.clone()),
        ..graph
    })
}

fn positive(f: &dyn Fn(GridPoint) -> Scalar, p: GridPoint, edge: Edge) -> Result<Scalar> {
    let v = f(p);
    if v.is_positive() {
        Ok(v)
    } else {
        Err(Error::NonPositiveWeight {
            edge,
            at: p,
            value: format!("gauge {v}"),
        })
    }
}

/// `w'(s→s') = w(s→s')·f(s)/f(s')`. Path weights between two fixed endpoints
/// change only by `f(start)/f(end)`, so the lookback-similarity class is kept.
pub fn gauge_transform<F>(g: &WeightedPascalGraph, f: F) -> WeightedPascalGraph
where
    F: Fn(GridPoint) -> Scalar + Send + Sync + 'static,
{
    let f = Arc::new(f);
    let (base0, base1) = (g.clone(), g.clone());
    let (f0, f1) = (f.clone(), f);
    g.derived(
        Arc::new(move |p| {
            let w = base0.w0(p)?;
            Ok(w * positive(&*f0, p, Edge::Tail)? / positive(&*f0, p.tail(), Edge::Tail)?)
        }),
        Arc::new(move |p| {
            let w = base1.w1(p)?;
            Ok(w * positive(&*f1, p, Edge::Head)? / positive(&*f1, p.head(), Edge::Head)?)
        }),
        format!("gauge({})", g.label),
    )
}

/// `w0' = g0(t)·gn(h+t)·w0`, `w1' = g1(h)·gn(h+t)·w1`.
pub fn family_transform<G0, G1, GN>(
    g: &WeightedPascalGraph,
    g0: G0,
    g1: G1,
    gn: GN,
) -> WeightedPascalGraph
where
    G0: Fn(usize) -> Scalar + Send + Sync + 'static,
    G1: Fn(usize) -> Scalar + Send + Sync + 'static,
    GN: Fn(usize) -> Scalar + Send + Sync + 'static,
{
    let gn = Arc::new(gn);
    let (base0, base1) = (g.clone(), g.clone());
    let (gn0, gn1) = (gn.clone(), gn);
    g.derived(
        Arc::new(move |p| {
            let factor = g0(p.t) * gn0(p.level());
            let w = base0.w0(p)? * &factor;
            nonzero_factor(factor, p, Edge::Tail).map(|_| w)
        }),
        Arc::new(move |p| {
            let factor = g1(p.h) * gn1(p.level());
            let w = base1.w1(p)? * &factor;
            nonzero_factor(factor, p, Edge::Head).map(|_| w)
        }),
        format!("transform({})", g.label),
    )
}

fn nonzero_factor(factor: Scalar, at: GridPoint, edge: Edge) -> Result<()> {
    if factor.is_positive() {
        Ok(())
    } else {
        Err(Error::NonPositiveWeight {
            edge,
            at,
            value: format!("transform factor {factor}"),
        })
    }
}

/// Mirror about the diagonal: `w0'(h,t) = w1(t,h)`, `w1'(h,t) = w0(t,h)`.
pub fn transpose(g: &WeightedPascalGraph) -> WeightedPascalGraph {
    let (base0, base1) = (g.clone(), g.clone());
    g.derived(
        Arc::new(move |p| base0.w1(p.transposed())),
        Arc::new(move |p| base1.w0(p.transposed())),
        format!("transpose({})", g.label),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub enum Balance {
    /// `σ(n)` for `n = 0..=horizon`.
    Balanced(Vec<Scalar>),
    NotBalanced { witness: (GridPoint, GridPoint) },
}

impl Balance {
    pub fn sigma(&self) -> Option<&[Scalar]> {
        match self {
            Balance::Balanced(s) => Some(s),
            Balance::NotBalanced { .. } => None,
        }
    }
}

/// Checks whether `w0 + w1` depends on the level only, for levels `≤ horizon`.
pub fn is_balanced(g: &WeightedPascalGraph, horizon: usize) -> Result<Balance> {
    let mut sigma = Vec::with_capacity(horizon + 1);
    for n in 0..=horizon {
        let first = GridPoint::new(0, n);
        let s0 = g.w0(first)? + g.w1(first)?;
        for h in 1..=n {
            let p = GridPoint::new(h, n - h);
            let s = g.w0(p)? + g.w1(p)?;
            if s != s0 {
                return Ok(Balance::NotBalanced {
                    witness: (first, p),
                });
            }
        }
        sigma.push(s0);
    }
    Ok(Balance::Balanced(sigma))
}

/// Factor by which a path probability changes when the fragment
/// `(h,t)→(h+1,t)→(h+1,t+1)` is switched to `(h,t)→(h,t+1)→(h+1,t+1)`.
pub fn transposition_cocycle(g: &WeightedPascalGraph, p: GridPoint) -> Result<Scalar> {
    let num = g.w0(p)? * g.w1(p.tail())?;
    let den = g.w1(p)? * g.w0(p.head())?;
    Ok(num / den)
}
