//! Weighted path counts: dimensions, extended dimensions, Martin kernels and
//! numerical Martin limits along paths.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{GridPoint, WeightedPascalGraph};
use crate::scalar::{Scalar, ScalarMode};
use crate::triangle::Triangle;

/// `d(h,t)` for every `h + t ≤ horizon`.
#[derive(Debug, Clone)]
pub struct DimensionTable {
    pub label: String,
    pub mode: ScalarMode,
    pub values: Triangle<Scalar>,
}

impl DimensionTable {
    pub fn horizon(&self) -> usize {
        self.values.horizon()
    }

    pub fn get(&self, p: GridPoint) -> Option<&Scalar> {
        self.values.get(p)
    }

    pub fn at(&self, h: usize, t: usize) -> &Scalar {
        self.values.at(GridPoint::new(h, t))
    }
}

/// Fills `d` by the backward recursion
/// `d(h,t) = w1(h-1,t)·d(h-1,t) + w0(h,t-1)·d(h,t-1)`.
pub fn dimension_table(g: &WeightedPascalGraph, horizon: usize) -> Result<DimensionTable> {
    let mode = g.mode();
    let mut values = Triangle::filled(horizon, Scalar::zero(mode));
    values.set(GridPoint::ORIGIN, Scalar::one(mode));
    for n in 1..=horizon {
        for h in 0..=n {
            let p = GridPoint::new(h, n - h);
            let mut d = Scalar::zero(mode);
            if h > 0 {
                let prev = GridPoint::new(h - 1, p.t);
                d += g.w1(prev)? * values.at(prev);
            }
            if p.t > 0 {
                let prev = GridPoint::new(h, p.t - 1);
                d += g.w0(prev)? * values.at(prev);
            }
            values.set(p, d);
        }
    }
    Ok(DimensionTable {
        label: g.label().to_string(),
        mode,
        values,
    })
}

/// Sum of path weights from `from` to `to`, by the shifted backward recursion.
pub fn extended_dimension(g: &WeightedPascalGraph, from: GridPoint, to: GridPoint) -> Result<Scalar> {
    if !from.precedes(to) {
        return Err(Error::UnreachablePair { from, to });
    }
    let (dh, dt) = (to.h - from.h, to.t - from.t);
    let width = dt + 1;
    let mode = g.mode();
    let mut rect = vec![Scalar::zero(mode); (dh + 1) * width];
    rect[0] = Scalar::one(mode);
    for i in 0..=dh {
        for j in 0..=dt {
            if i == 0 && j == 0 {
                continue;
            }
            let mut d = Scalar::zero(mode);
            if i > 0 {
                let prev = GridPoint::new(from.h + i - 1, from.t + j);
                d += g.w1(prev)? * &rect[(i - 1) * width + j];
            }
            if j > 0 {
                let prev = GridPoint::new(from.h + i, from.t + j - 1);
                d += g.w0(prev)? * &rect[i * width + j - 1];
            }
            rect[i * width + j] = d;
        }
    }
    Ok(rect.pop().expect("rectangle is nonempty"))
}

/// `d(query; terminal) / d(terminal)`: the probability function of the
/// elementary measure `Q_terminal` at `query`.
pub fn martin_kernel(g: &WeightedPascalGraph, query: GridPoint, terminal: GridPoint) -> Result<Scalar> {
    if g.mode() == ScalarMode::Float {
        if !query.precedes(terminal) {
            return Err(Error::UnreachablePair { from: query, to: terminal });
        }
        let tri = kernel_triangle_scaled(g, terminal, query.level())?;
        return Ok(tri.at(query).clone());
    }
    let num = extended_dimension(g, query, terminal)?;
    let den = extended_dimension(g, GridPoint::ORIGIN, terminal)?;
    Ok(num / den)
}

/// Kernel values `d(s; terminal)/d(terminal)` for all `s` with
/// `h + t ≤ horizon`; zero where `s` does not precede the terminal.
pub fn martin_kernel_triangle(
    g: &WeightedPascalGraph,
    terminal: GridPoint,
    horizon: usize,
    mode: ScalarMode,
) -> Result<Triangle<Scalar>> {
    match mode {
        ScalarMode::Exact => kernel_triangle_exact(g, terminal, horizon),
        ScalarMode::Float => kernel_triangle_scaled(g, terminal, horizon),
    }
}

fn kernel_triangle_exact(
    g: &WeightedPascalGraph,
    terminal: GridPoint,
    horizon: usize,
) -> Result<Triangle<Scalar>> {
    let (hh, tt) = (terminal.h, terminal.t);
    let width = tt + 1;
    let mode = g.mode();
    let mut back = vec![Scalar::zero(mode); (hh + 1) * width];
    for h in (0..=hh).rev() {
        for t in (0..=tt).rev() {
            let p = GridPoint::new(h, t);
            let v = if p == terminal {
                Scalar::one(mode)
            } else {
                let mut v = Scalar::zero(mode);
                if h < hh {
                    v += g.w1(p)? * &back[(h + 1) * width + t];
                }
                if t < tt {
                    v += g.w0(p)? * &back[h * width + t + 1];
                }
                v
            };
            back[h * width + t] = v;
        }
    }
    let total = back[0].clone();
    Ok(Triangle::from_fn(horizon, |p| {
        if p.precedes(terminal) {
            &back[p.h * width + p.t] / &total
        } else {
            Scalar::zero(mode)
        }
    }))
}

/// Same sweep in doubles, renormalizing each anti-diagonal so that large
/// dimensions do not overflow.
fn kernel_triangle_scaled(
    g: &WeightedPascalGraph,
    terminal: GridPoint,
    horizon: usize,
) -> Result<Triangle<Scalar>> {
    let (hh, tt) = (terminal.h, terminal.t);
    let width = tt + 1;
    let top = hh + tt;
    let mut back = vec![0.0f64; (hh + 1) * width];
    // log of the factor that level ℓ was divided by, cumulative
    let mut log_scale = vec![0.0f64; top + 1];
    back[hh * width + tt] = 1.0;
    for level in (0..top).rev() {
        let lo = level.saturating_sub(tt);
        let hi = level.min(hh);
        let mut max = 0.0f64;
        for h in lo..=hi {
            let t = level - h;
            let p = GridPoint::new(h, t);
            let mut v = 0.0;
            if h < hh {
                v += g.w1(p)?.to_f64() * back[(h + 1) * width + t];
            }
            if t < tt {
                v += g.w0(p)?.to_f64() * back[h * width + t + 1];
            }
            back[h * width + t] = v;
            max = max.max(v.abs());
        }
        if max > 0.0 && max.is_finite() {
            for h in lo..=hi {
                back[h * width + level - h] /= max;
            }
            log_scale[level] = log_scale[level + 1] + max.ln();
        } else {
            log_scale[level] = log_scale[level + 1];
        }
    }
    let total = back[0];
    Ok(Triangle::from_fn(horizon, |p| {
        if p.precedes(terminal) {
            let rel = (log_scale[p.level()] - log_scale[0]).exp();
            Scalar::Float(back[p.h * width + p.t] * rel / total)
        } else {
            Scalar::Float(0.0)
        }
    }))
}

/// A standard infinite path, given by its point at each level `n`.
#[derive(Clone)]
pub enum TerminalPath {
    /// `(m, n - m)`: eventually only tails.
    FixedHeads(usize),
    /// `(n - m, m)`: eventually only heads.
    FixedTails(usize),
    /// `(⌊n/2⌋, ⌈n/2⌉)`
    Balanced,
    /// `(⌊π·n⌋, n - ⌊π·n⌋)`
    Fraction(f64),
    Custom(Arc<dyn Fn(usize) -> GridPoint + Send + Sync>),
}

impl fmt::Debug for TerminalPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TerminalPath::FixedHeads(m) => write!(f, "FixedHeads({m})"),
            TerminalPath::FixedTails(m) => write!(f, "FixedTails({m})"),
            TerminalPath::Balanced => f.write_str("Balanced"),
            TerminalPath::Fraction(x) => write!(f, "Fraction({x})"),
            TerminalPath::Custom(_) => f.write_str("Custom"),
        }
    }
}

impl TerminalPath {
    /// Point at level `n`; `None` before the path is defined (e.g. `n < m`).
    pub fn at(&self, n: usize) -> Option<GridPoint> {
        match self {
            TerminalPath::FixedHeads(m) => (n >= *m).then(|| GridPoint::new(*m, n - m)),
            TerminalPath::FixedTails(m) => (n >= *m).then(|| GridPoint::new(n - m, *m)),
            TerminalPath::Balanced => Some(GridPoint::new(n / 2, n - n / 2)),
            TerminalPath::Fraction(x) => {
                let h = ((x.clamp(0.0, 1.0)) * n as f64).floor() as usize;
                Some(GridPoint::new(h.min(n), n - h.min(n)))
            }
            TerminalPath::Custom(f) => Some(f(n)),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            TerminalPath::FixedHeads(m) => format!("({m}, n-{m})"),
            TerminalPath::FixedTails(m) => format!("(n-{m}, {m})"),
            TerminalPath::Balanced => "(floor(n/2), ceil(n/2))".into(),
            TerminalPath::Fraction(x) => format!("(floor({x} n), n - floor({x} n))"),
            TerminalPath::Custom(_) => "custom".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MartinOptions {
    /// Query points are all `(h,t)` with `h + t ≤ query_horizon`.
    pub query_horizon: usize,
    pub tol: f64,
    /// Largest terminal level tried.
    pub budget: usize,
    /// Consecutive terminals whose successive differences must stay below `tol`.
    pub window: usize,
    /// First terminal level; defaults to `query_horizon`.
    pub start: Option<usize>,
    pub step: usize,
    /// Polynomial extrapolation in `1/n` over this many extra terminals; 0 disables it.
    pub richardson_order: usize,
    /// Arithmetic for the sweep; defaults to the graph's mode.
    pub mode: Option<ScalarMode>,
}

impl Default for MartinOptions {
    fn default() -> Self {
        MartinOptions {
            query_horizon: 8,
            tol: 1e-10,
            budget: 2000,
            window: 5,
            start: None,
            step: 1,
            richardson_order: 0,
            mode: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MartinStatus {
    Converged,
    NotConverged,
    BudgetExhausted,
}

#[derive(Debug, Clone)]
pub struct MartinLimitResult {
    pub status: MartinStatus,
    pub estimates: Triangle<Scalar>,
    pub path: String,
    /// Level of the last terminal evaluated.
    pub terminal_level: usize,
    /// Max-norm difference between successive estimates.
    pub history: Vec<f64>,
    /// The last successive difference, exact in rational mode.
    pub last_difference: Option<Scalar>,
}

/// Value at `x = 0` of the polynomial through `(xs[i], ys[i])` (Neville).
pub fn extrapolate_to_zero(xs: &[Scalar], ys: &[Scalar]) -> Scalar {
    let mut p: Vec<Scalar> = ys.to_vec();
    let n = xs.len();
    for k in 1..n {
        for i in 0..n - k {
            let num = (-&xs[i + k]) * &p[i] - (-&xs[i]) * &p[i + 1];
            p[i] = num / (&xs[i] - &xs[i + k]);
        }
    }
    p.swap_remove(0)
}

/// Evaluates Martin kernels against the terminals of `path` at increasing
/// levels until the estimates stabilize.
///
/// Budget exhaustion is reported through the status, not as an error; it
/// does not certify divergence.
pub fn martin_limit(
    g: &WeightedPascalGraph,
    path: &TerminalPath,
    opts: &MartinOptions,
) -> Result<MartinLimitResult> {
    let mode = opts.mode.unwrap_or(g.mode());
    if mode == ScalarMode::Exact && g.mode() == ScalarMode::Float {
        return Err(Error::invalid("exact Martin sweep requested on a float graph"));
    }
    let horizon = opts.query_horizon;
    let step = opts.step.max(1);
    let window = opts.window.max(1);
    let mut n = opts.start.unwrap_or(horizon).max(1);
    let mut raw: VecDeque<(usize, Triangle<Scalar>)> = VecDeque::new();
    let mut prev: Option<Triangle<Scalar>> = None;
    let mut history = Vec::new();
    let mut last_difference = None;
    let mut stable = 0usize;
    let mut last_level = n;

    while n <= opts.budget {
        let Some(terminal) = path.at(n) else {
            n += step;
            continue;
        };
        if terminal.level() != n {
            return Err(Error::invalid(format!(
                "path point {terminal} is not at level {n}"
            )));
        }
        last_level = n;
        let kernel = martin_kernel_triangle(g, terminal, horizon, mode)?;
        let estimate = if opts.richardson_order == 0 {
            kernel
        } else {
            raw.push_back((n, kernel));
            if raw.len() > opts.richardson_order + 1 {
                raw.pop_front();
            }
            if raw.len() < opts.richardson_order + 1 {
                n += step;
                continue;
            }
            let xs: Vec<Scalar> = raw
                .iter()
                .map(|(m, _)| match mode {
                    ScalarMode::Exact => Scalar::ratio(1, *m as i64),
                    ScalarMode::Float => Scalar::Float(1.0 / *m as f64),
                })
                .collect();
            Triangle::from_fn(horizon, |p| {
                let ys: Vec<Scalar> = raw.iter().map(|(_, k)| k.at(p).clone()).collect();
                extrapolate_to_zero(&xs, &ys)
            })
        };
        if let Some(before) = &prev {
            let mut worst = Scalar::zero(mode);
            for (p, v) in estimate.iter() {
                let d = (v - before.at(p)).abs();
                if d > worst {
                    worst = d;
                }
            }
            let diff = worst.to_f64();
            history.push(diff);
            last_difference = Some(worst);
            if !diff.is_finite() {
                return Ok(MartinLimitResult {
                    status: MartinStatus::NotConverged,
                    estimates: estimate,
                    path: path.describe(),
                    terminal_level: n,
                    history,
                    last_difference,
                });
            }
            if diff < opts.tol {
                stable += 1;
            } else {
                stable = 0;
            }
            if stable >= window {
                return Ok(MartinLimitResult {
                    status: MartinStatus::Converged,
                    estimates: estimate,
                    path: path.describe(),
                    terminal_level: n,
                    history,
                    last_difference,
                });
            }
        }
        prev = Some(estimate);
        n += step;
    }
    Ok(MartinLimitResult {
        status: MartinStatus::BudgetExhausted,
        estimates: prev.unwrap_or_else(|| Triangle::filled(horizon, Scalar::zero(mode))),
        path: path.describe(),
        terminal_level: last_level,
        history,
        last_difference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{make_graph, FamilySpec};

    fn exact(spec: FamilySpec) -> WeightedPascalGraph {
        make_graph(&spec, ScalarMode::Exact).unwrap()
    }

    fn pt(h: usize, t: usize) -> GridPoint {
        GridPoint::new(h, t)
    }

    #[test]
    fn small_dimensions() {
        let pascal = dimension_table(&exact(FamilySpec::Pascal), 6).unwrap();
        assert_eq!(*pascal.at(2, 2), Scalar::from(6));
        let s1 = dimension_table(&exact(FamilySpec::Stirling1), 4).unwrap();
        assert_eq!(*s1.at(1, 1), Scalar::from(3));
        assert_eq!(*s1.at(0, 2), Scalar::from(2));
        let eul = dimension_table(
            &exact(FamilySpec::Eulerian {
                a: Scalar::from(1),
                b: Scalar::from(1),
            }),
            4,
        )
        .unwrap();
        assert_eq!(*eul.at(1, 1), Scalar::from(4));
    }

    #[test]
    fn extended_dimension_examples() {
        let pascal = exact(FamilySpec::Pascal);
        assert_eq!(
            extended_dimension(&pascal, pt(2, 3), pt(2, 3)).unwrap(),
            Scalar::from(1)
        );
        assert_eq!(
            extended_dimension(&pascal, pt(1, 1), pt(3, 2)).unwrap(),
            Scalar::from(3)
        );
        let qp = exact(FamilySpec::QPascal {
            q: Scalar::ratio(1, 2),
        });
        assert_eq!(
            extended_dimension(&qp, pt(0, 0), pt(1, 1)).unwrap(),
            Scalar::ratio(3, 2)
        );
        assert!(matches!(
            extended_dimension(&pascal, pt(2, 0), pt(1, 5)),
            Err(Error::UnreachablePair { .. })
        ));
    }

    #[test]
    fn kernel_examples() {
        let pascal = exact(FamilySpec::Pascal);
        assert_eq!(
            martin_kernel(&pascal, pt(1, 1), pt(2, 2)).unwrap(),
            Scalar::ratio(1, 3)
        );
        let s1 = exact(FamilySpec::Stirling1);
        assert_eq!(
            martin_kernel(&s1, pt(0, 0), pt(3, 4)).unwrap(),
            Scalar::from(1)
        );
        // paths (1,0)→(2,1): HT weight 1·w0(2,0)=3, TH weight w0(1,0)·1=2
        // d(2,1) = 1·3 + 2 + w0(0,0)·1·1 = 6
        assert_eq!(
            martin_kernel(&s1, pt(1, 0), pt(2, 1)).unwrap(),
            Scalar::ratio(5, 6)
        );
    }

    #[test]
    fn scaled_sweep_matches_exact() {
        let s1 = exact(FamilySpec::Stirling1);
        let terminal = pt(7, 30);
        let ex = martin_kernel_triangle(&s1, terminal, 5, ScalarMode::Exact).unwrap();
        let fl = martin_kernel_triangle(&s1, terminal, 5, ScalarMode::Float).unwrap();
        for (p, v) in ex.iter() {
            let f = fl.at(p).to_f64();
            assert!((v.to_f64() - f).abs() <= 1e-12 * v.to_f64().abs().max(1e-300), "{p}");
        }
    }

    #[test]
    fn scaled_sweep_survives_overflow() {
        // Stirling-I dimensions at level 400 overflow doubles
        let g = make_graph(&FamilySpec::Stirling1, ScalarMode::Float).unwrap();
        let k = martin_kernel_triangle(&g, pt(3, 400), 3, ScalarMode::Float).unwrap();
        assert_eq!(k.at(GridPoint::ORIGIN).to_f64(), 1.0);
        assert!(k.iter().all(|(_, v)| v.to_f64().is_finite()));
    }

    #[test]
    fn all_tails_path_gives_trivial_measure() {
        let g = make_graph(&FamilySpec::Stirling1, ScalarMode::Float).unwrap();
        let res = martin_limit(
            &g,
            &TerminalPath::FixedHeads(0),
            &MartinOptions {
                query_horizon: 4,
                budget: 50,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(res.status, MartinStatus::Converged);
        for (p, v) in res.estimates.iter() {
            // the limit is φ_0 = [h = 0]/t!
            let expected = if p.h == 0 {
                1.0 / (1..=p.t).product::<usize>() as f64
            } else {
                0.0
            };
            assert!((v.to_f64() - expected).abs() < 1e-12, "{p}: {v}");
        }
    }

    #[test]
    fn pascal_balanced_path_tends_to_fair_coin() {
        let g = exact(FamilySpec::Pascal);
        let res = martin_limit(
            &g,
            &TerminalPath::Balanced,
            &MartinOptions {
                query_horizon: 3,
                tol: 1e-4,
                budget: 400,
                step: 2,
                mode: Some(ScalarMode::Float),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(res.status, MartinStatus::Converged);
        for (p, v) in res.estimates.iter() {
            let target = 0.5f64.powi(p.level() as i32);
            assert!((v.to_f64() - target).abs() < 0.02, "{p}: {v}");
        }
    }

    #[test]
    fn budget_exhaustion_is_a_status() {
        let g = exact(FamilySpec::Pascal);
        let res = martin_limit(
            &g,
            &TerminalPath::Balanced,
            &MartinOptions {
                query_horizon: 2,
                tol: 1e-12,
                budget: 20,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(res.status, MartinStatus::BudgetExhausted);
        assert!(res.last_difference.unwrap().is_exact());
    }
}
