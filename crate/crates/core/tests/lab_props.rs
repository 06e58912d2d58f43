use cnl_assort::io::{InstanceFile, Problem};
use cnl_assort::lab::{
    bench_guarantees, certified_fraction, generate_assortment, generate_mixture, generate_pricing,
    reproduce_table1, verify_instance, BenchConfig, GenSpec,
};
use cnl_assort::solver::eps_for_guarantee;
use proptest::prelude::*;

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[test]
fn overlap_matches_gamma() {
    let spec = GenSpec::assort(3, 10_000, 5, 0.75);
    let (inst, cs) = generate_assortment(&spec).unwrap();
    let memberships: usize = inst
        .alpha()
        .iter()
        .map(|row| row.iter().filter(|&&a| a > 0.0).count())
        .sum();
    let mean = memberships as f64 / 10_000.0;
    assert!((mean - 1.2).abs() <= 0.02, "mean nests per product {mean}");
    assert!(inst.alpha().iter().all(|row| (row.iter().sum::<f64>() - 1.0).abs() <= 1e-12));
    // Total cap ⌈m/2⌉ plus one cap per nest.
    assert_eq!(cs.len(), 6);
    assert_eq!(cs.rows()[0].rhs, 5_000.0);
}

/// With `u, X, Y` uniform, `E[u²X] = 5.05/3` and `E[(1−u)Y] = 5.05/2`.
#[test]
fn product_draws_follow_uniform_laws() {
    let m = 100_000;
    let (inst, _) = generate_assortment(&GenSpec::assort(9, m, 1, 0.75)).unwrap();
    let (r_mean, r_sd) = mean_sd(inst.revenues());
    let (v_mean, v_sd) = mean_sd(inst.weights());
    let se = |sd: f64| sd / (m as f64).sqrt();
    assert!((r_mean - 5.05 / 3.0).abs() <= 3.0 * se(r_sd), "r mean {r_mean}");
    assert!((v_mean - 5.05 / 2.0).abs() <= 3.0 * se(v_sd), "v mean {v_mean}");
    assert!(inst.weights().iter().all(|&v| v > 0.0));
    assert!(inst.revenues().iter().all(|&r| r > 0.0 && r <= 10.0));
}

#[test]
fn pricing_structure() {
    let (inst, cs) = generate_pricing(&GenSpec::pricing(4, 50, 4, 3)).unwrap();
    assert_eq!(inst.num_levels(), 3);
    assert_eq!(cs.num_products(), 50);
    for (p, v) in inst.prices().iter().zip(inst.level_weights()) {
        assert!(p[0] > 0.5 && p[0] < 1.5);
        let step = p[0] - 0.5;
        for (l, pl) in p.iter().enumerate() {
            assert!((pl - ((l + 1) as f64 * step + 0.5)).abs() < 1e-12);
        }
        assert!(v.windows(2).all(|w| w[1] < w[0]));
    }
}

#[test]
fn mixture_shares_revenues() {
    let (a, _) = generate_mixture(&GenSpec::mixture(4, 20, 3, 0.75, 3)).unwrap();
    let (b, _) = generate_assortment(&GenSpec::assort(4, 20, 3, 0.75)).unwrap();
    assert_eq!(a.revenues(), b.revenues());
    assert_eq!(a.alpha(), b.alpha());
    assert!((a.theta().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    assert_ne!(a.type_weights()[0], a.type_weights()[1]);
}

#[test]
fn table_spot_cells() {
    let t = reproduce_table1().unwrap();
    assert_eq!(t.get(0, 2, 4), 37);
    assert_eq!(t.get(3, 1, 3), 8);
    assert_eq!(t.get(4, 0, 0), 1);
}

#[test]
fn guarantee_accuracy_mapping() {
    assert!((eps_for_guarantee(0.90).unwrap() - 0.05263).abs() <= 1e-5);
    assert!((certified_fraction(0.0526, false, None) - 0.90).abs() <= 5e-4);
}

#[test]
fn bench_rows_and_certificates() {
    let batch: Vec<GenSpec> = (0..4)
        .map(|s| GenSpec::assort(100 + s, 8, 2, 0.75))
        .chain([GenSpec::pricing(7, 4, 2, 2), GenSpec::mixture(7, 6, 2, 0.75, 2)])
        .collect();
    let cfg = BenchConfig {
        jobs: 2,
        ..BenchConfig::default()
    };
    let report = bench_guarantees(&batch, &cfg).unwrap();
    assert!(report.violations.is_empty(), "{:?}", report.violations);
    // Two methods for single-type instances, one for the mixture.
    assert_eq!(report.rows.len(), 3 * (2 * 5 + 1));
    let ids: Vec<&str> = report.rows.iter().map(|r| r.instance_id.as_str()).collect();
    assert!(ids.windows(2).all(|w| w[0] <= w[1]));
    for row in &report.rows {
        let delta = (row.method == "bisection").then_some(cfg.delta);
        let bound = 100.0 * (1.0 - certified_fraction(row.eps, false, delta));
        assert!(row.gap_pct <= bound + 1e-7, "{row:?}");
        assert!(row.gap_pct >= -1e-9);
        assert!(row.k_total >= row.n);
        if row.guarantee == 0.90 {
            let want = if row.method == "bisection" { 0.0521 } else { 0.0526 };
            assert_eq!(row.eps, want);
        }
    }
    let csv = report.to_csv().unwrap();
    let mut reader = csv::Reader::from_reader(csv.as_bytes());
    assert_eq!(reader.headers().unwrap().len(), 12);
    assert_eq!(reader.records().count(), report.rows.len());

    // Thread count does not change the report.
    let serial = bench_guarantees(&batch, &BenchConfig { jobs: 1, ..cfg }).unwrap();
    let strip = |r: &cnl_assort::lab::BenchRow| (r.instance_id.clone(), r.method.clone(), r.f_returned.to_bits());
    assert_eq!(
        serial.rows.iter().map(strip).collect::<Vec<_>>(),
        report.rows.iter().map(strip).collect::<Vec<_>>()
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn generation_is_byte_deterministic(seed in any::<u64>(), m in 2usize..30, n in 1usize..4) {
        prop_assume!(n <= m);
        let spec = GenSpec::assort(seed, m, n, 0.9);
        let json = |spec: &GenSpec| {
            let (i, cs) = generate_assortment(spec).unwrap();
            InstanceFile::new(Problem::Assort(i), cs).unwrap().to_json()
        };
        let a = json(&spec);
        prop_assert_eq!(&a, &json(&spec));
        let back = InstanceFile::from_json(&a).unwrap();
        prop_assert_eq!(back.to_json(), a);

        let p = GenSpec::pricing(seed, m, n, 2);
        let (pi, pcs) = generate_pricing(&p).unwrap();
        let file = InstanceFile::new(Problem::Pricing(pi), pcs).unwrap();
        prop_assert_eq!(InstanceFile::from_json(&file.to_json()).unwrap(), file);

        let x = GenSpec::mixture(seed, m, n, 0.9, 2);
        let (xi, xcs) = generate_mixture(&x).unwrap();
        let file = InstanceFile::new(Problem::Mixture(xi), xcs).unwrap();
        prop_assert_eq!(InstanceFile::from_json(&file.to_json()).unwrap(), file);
    }

    #[test]
    fn generated_instances_verify(seed in any::<u64>(), m in 2usize..=10, n in 1usize..=3) {
        prop_assume!(n <= m);
        let (inst, cs) = generate_assortment(&GenSpec::assort(seed, m, n, 1.0)).unwrap();
        let report = verify_instance(&inst, &cs, 0.05, 24, seed).unwrap();
        prop_assert!(report.passed(), "{}", report.render());
    }
}
