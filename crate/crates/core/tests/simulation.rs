use pascal_boundary::measures::{elementary_tail_probabilities, phi_from_family, MeasureFamily};
use pascal_boundary::selfcheck::catalog;
use pascal_boundary::sequence::SequenceSpec;
use pascal_boundary::simulate::{
    coupon_collector_sample, crp_sample, empirical_vs_exact, exchangeability_check, replicate_rng,
    run_job, run_replicates, sample_elementary, sample_paths, two_sample_chi_square, SimulationJob,
};
use pascal_boundary::{GridPoint, ScalarMode};

#[test]
fn catalog_endpoints_match_exact_law() {
    let n = 6;
    for fam in catalog() {
        let g = fam.graph(ScalarMode::Exact).unwrap();
        let phi = phi_from_family(&fam, n).unwrap();
        let kernel = fam.kernel().unwrap();
        let out = sample_paths(&kernel, n, 100_000, 11, false).unwrap();
        let cmp = empirical_vs_exact(&out.histogram, &g, &phi).unwrap();
        assert!(cmp.total_variation < 0.015, "{fam:?}: {cmp:?}");
        assert_eq!(cmp.pass, Some(true), "{fam:?}: {cmp:?}");
    }
}

#[test]
fn coupon_collector_agrees_with_stirling2_walk() {
    let (n, r) = (30, 100_000);
    let b = SequenceSpec::linear(1, 1);
    let fam = MeasureFamily::GStirling {
        a: SequenceSpec::constant(0),
        b: b.clone(),
        theta: 10.into(),
    };
    let walk = sample_paths(&fam.kernel().unwrap(), n, r, 3, false).unwrap();
    let coupon = run_replicates(r, 4, |rng| {
        let steps = coupon_collector_sample(&b, 10.0, n, rng)?;
        Ok(steps.iter().filter(|&&s| s).count())
    })
    .unwrap();
    let mut counts = vec![0u64; n + 1];
    for h in coupon {
        counts[h] += 1;
    }
    let test = two_sample_chi_square(&walk.histogram.counts, &counts);
    assert!(test.pass, "{test:?}");
}

#[test]
fn elementary_sampler_matches_tail_probabilities() {
    let fam = MeasureFamily::stirling1(1);
    let g = fam.graph(ScalarMode::Exact).unwrap();
    let terminal = GridPoint::new(3, 4);
    let exact = elementary_tail_probabilities(&g, terminal).unwrap();
    let r = 100_000;
    let paths = sample_elementary(&g, terminal, r, 5).unwrap();
    for m in 0..=terminal.level() {
        for h in 0..=m {
            let hits = paths
                .iter()
                .filter(|p| p[..m].iter().filter(|&&s| s).count() >= h)
                .count() as f64
                / r as f64;
            let want = exact[m][h].to_f64();
            assert!((hits - want).abs() < 0.01, "m={m} h={h}: {hits} vs {want}");
        }
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let job: SimulationJob = serde_json::from_str(
        r#"{"process":"polya","params":{"a":"2","b":"3"},"n":200,"replicates":5000,"seed":99,
            "statistics":["endpoint","scaled"]}"#,
    )
    .unwrap();
    let with = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| serde_json::to_string(&run_job(&job).unwrap()).unwrap())
    };
    let one = with(1);
    assert_eq!(one, with(4));
    assert_eq!(one, with(3));
}

#[test]
fn crp_block_count_is_harmonic() {
    let (n, r, theta) = (200usize, 20_000usize, 1.5);
    let blocks = run_replicates(r, 8, |rng| Ok(crp_sample(0.0, theta, n, rng)?.blocks() as f64)).unwrap();
    let mean = blocks.iter().sum::<f64>() / r as f64;
    let var = blocks.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (r - 1) as f64;
    let expected: f64 = (0..n).map(|k| theta / (theta + k as f64)).sum();
    assert!((mean - expected).abs() < 5.0 * (var / r as f64).sqrt(), "{mean} vs {expected}");
}

#[test]
fn polya_paths_are_exchangeable() {
    let fam = MeasureFamily::Polya {
        a: 1.into(),
        b: 2.into(),
    };
    let rep = exchangeability_check(&fam, 6, 50_000, 21).unwrap();
    assert!(rep.pass && rep.exact_consistent, "{rep:?}");
}

#[test]
fn streams_differ_by_replicate() {
    use rand::Rng;
    let a: u64 = replicate_rng(1, 0).random();
    let b: u64 = replicate_rng(1, 1).random();
    let c: u64 = replicate_rng(1, 0).random();
    assert_ne!(a, b);
    assert_eq!(a, c);
}
