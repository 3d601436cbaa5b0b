//! Built-in oracle suites behind the `self-check` command.

use std::time::Instant;

use num_rational::BigRational;
use serde::Serialize;

use crate::boundary::z_distribution;
use crate::dims::dimension_table;
use crate::error::Result;
use crate::graph::{make_graph, FamilySpec};
use crate::measures::{check_probability_function, phi_from_family, MeasureFamily, Side};
use crate::oracles;
use crate::scalar::{Scalar, ScalarMode};
use crate::sequence::SequenceSpec;

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

/// Exact-mode instances of every catalog measure.
pub fn catalog() -> Vec<MeasureFamily> {
    vec![
        MeasureFamily::Bernoulli {
            theta: Scalar::ratio(2, 3),
        },
        MeasureFamily::Polya {
            a: 1.into(),
            b: 1.into(),
        },
        MeasureFamily::Polya {
            a: Scalar::ratio(1, 2),
            b: 3.into(),
        },
        MeasureFamily::stirling1(2),
        MeasureFamily::stirling2(4),
        MeasureFamily::space_time(SequenceSpec::linear(1, 1), Scalar::from(2)),
        MeasureFamily::GStirling {
            a: SequenceSpec::linear(1, 1),
            b: SequenceSpec::linear(2, 0),
            theta: 4.into(),
        },
        MeasureFamily::Crp {
            alpha: Scalar::ratio(1, 2),
            theta: Scalar::ratio(1, 3),
        },
        MeasureFamily::Crp {
            alpha: 0.into(),
            theta: 1.into(),
        },
        MeasureFamily::Crp {
            alpha: (-1).into(),
            theta: 3.into(),
        },
        MeasureFamily::Crp {
            alpha: Scalar::ratio(-1, 2),
            theta: 2.into(),
        },
        MeasureFamily::CrpGamma {
            gamma: Scalar::ratio(1, 3),
        },
        MeasureFamily::QPascalExtreme {
            q: Scalar::ratio(1, 2),
            m: 0,
        },
        MeasureFamily::QPascalExtreme {
            q: Scalar::ratio(1, 2),
            m: 3,
        },
        MeasureFamily::QPolya {
            q: Scalar::ratio(2, 3),
            alpha: 1.into(),
            beta: 2.into(),
        },
        MeasureFamily::Friedman {
            a: 1.into(),
            b: 1.into(),
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
    ]
}

fn level_matches(spec: &FamilySpec, n: usize, expected: &[Scalar]) -> Result<Option<String>> {
    let g = make_graph(spec, ScalarMode::Exact)?;
    let d = dimension_table(&g, n)?;
    for (h, e) in expected.iter().enumerate() {
        let got = d.at(h, n - h);
        if got != e {
            return Ok(Some(format!("{spec}: d({h},{}) = {got}, expected {e}", n - h)));
        }
    }
    Ok(None)
}

fn counts(v: Vec<u64>) -> Vec<Scalar> {
    v.into_iter().map(|c| Scalar::from(c as i64)).collect()
}

/// Stirling-I dimensions against record counts of permutations.
pub fn suite_records(max_n: usize) -> Result<Option<String>> {
    for n in 0..=max_n {
        if let Some(e) = level_matches(&FamilySpec::Stirling1, n, &counts(oracles::record_count_oracle(n)?))? {
            return Ok(Some(e));
        }
    }
    Ok(None)
}

/// Eulerian(1,1) dimensions against descent counts.
pub fn suite_descents(max_n: usize) -> Result<Option<String>> {
    let spec = FamilySpec::Eulerian {
        a: 1.into(),
        b: 1.into(),
    };
    for n in 0..=max_n {
        if let Some(e) = level_matches(&spec, n, &counts(oracles::descent_count_oracle(n)?))? {
            return Ok(Some(e));
        }
    }
    Ok(None)
}

/// q-Pascal dimensions against Gaussian binomials.
pub fn suite_q_binomial(q: &BigRational, max_n: usize) -> Result<Option<String>> {
    let spec = FamilySpec::QPascal {
        q: Scalar::Exact(q.clone()),
    };
    let g = make_graph(&spec, ScalarMode::Exact)?;
    let d = dimension_table(&g, max_n)?;
    for n in 0..=max_n {
        for h in 0..=n {
            let e = Scalar::Exact(oracles::q_binomial(n, h, q));
            if *d.at(h, n - h) != e {
                return Ok(Some(format!("q-Pascal: d({h},{}) differs from the q-binomial", n - h)));
            }
        }
    }
    Ok(None)
}

/// Pascal dimensions against binomial coefficients.
pub fn suite_binomial(max_n: usize) -> Result<Option<String>> {
    let g = make_graph(&FamilySpec::Pascal, ScalarMode::Exact)?;
    let d = dimension_table(&g, max_n)?;
    for n in 0..=max_n {
        for h in 0..=n {
            let e = Scalar::Exact(BigRational::from_integer(oracles::binomial(n as u64, h as u64)));
            if *d.at(h, n - h) != e {
                return Ok(Some(format!("Pascal: d({h},{}) is not binomial", n - h)));
            }
        }
    }
    Ok(None)
}

/// Exact forward-recursion and normalization residuals for the catalog.
pub fn suite_residuals(horizon: usize) -> Result<Option<String>> {
    for fam in catalog() {
        let phi = phi_from_family(&fam, horizon)?;
        let g = fam.graph(ScalarMode::Exact)?;
        let check = check_probability_function(&g, &phi)?;
        if !check.is_exact_zero() {
            return Ok(Some(format!(
                "{fam}: residual {} at {:?}, level-sum error {}",
                check.max_recursion_residual, check.worst_residual_at, check.max_level_sum_error
            )));
        }
    }
    Ok(None)
}

/// The Z law of a 12-trial space-time walk against all 4096 outcomes.
pub fn suite_z_brute_force() -> Result<Option<String>> {
    let values: Vec<Scalar> = [1, 3, 2, 9, 1, 5, 20, 4, 7, 2, 30, 6]
        .into_iter()
        .map(|v| Scalar::ratio(v, 4))
        .collect();
    let a = SequenceSpec::from_values("builtin", values.clone());
    let theta = 1.5;
    let z = z_distribution(&a, theta, 1e-9)?;
    let ps: Vec<f64> = values.iter().map(|v| theta / (theta + v.to_f64())).collect();
    let exact = oracles::z_brute_force(&ps)?;
    let worst = exact
        .iter()
        .map(|&(k, w)| (z.weight(k) - w).abs())
        .fold(0.0, f64::max);
    if worst > z.truncation_error_bound + 1e-12 {
        return Ok(Some(format!(
            "Z weights differ by {worst:e}, bound {:e}",
            z.truncation_error_bound
        )));
    }
    Ok(None)
}

/// Runs every suite; a suite that errors counts as failed.
pub fn run_self_check() -> Vec<SuiteResult> {
    type Suite = Box<dyn Fn() -> Result<Option<String>>>;
    let half = BigRational::new(1.into(), 2.into());
    let suites: Vec<(&str, Suite)> = vec![
        ("record counts (Stirling-I, n <= 8)", Box::new(|| suite_records(8))),
        ("descent counts (Eulerian(1,1), n <= 8)", Box::new(|| suite_descents(8))),
        ("q-binomials (q = 1/2, n <= 20)", Box::new(move || suite_q_binomial(&half, 20))),
        ("binomials (Pascal, n <= 30)", Box::new(|| suite_binomial(30))),
        ("exact residuals (catalog, N = 12)", Box::new(|| suite_residuals(12))),
        ("Z law vs 4096-path enumeration", Box::new(suite_z_brute_force)),
    ];
    suites
        .into_iter()
        .map(|(name, run)| {
            let start = Instant::now();
            let (passed, detail) = match run() {
                Ok(None) => (true, "ok".to_string()),
                Ok(Some(msg)) => (false, msg),
                Err(e) => (false, e.to_string()),
            };
            SuiteResult {
                name: name.to_string(),
                passed,
                detail,
                seconds: start.elapsed().as_secs_f64(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass() {
        for r in run_self_check() {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }

    #[test]
    fn suites_detect_a_wrong_oracle() {
        let spec = FamilySpec::Stirling1;
        let wrong = counts(vec![1, 3, 2]);
        assert!(level_matches(&spec, 2, &wrong).unwrap().is_some());
    }
}
