mod common;

use cnl_assort::constraints::ConstraintSet;
use cnl_assort::error::CnlError;
use cnl_assort::reformulate::{
    assort_point, build_assort_milp, build_lfp, build_mixture_lfp, build_mixture_milp,
    mixture_point,
};
use cnl_assort::solver::{
    bisection_iteration_bound, bisection_solve, guarantee_factor, search_exact, solve_approx,
    solve_exact, solve_external, solve_mixture_approx, solve_mixture_exact, write_solution,
    Evaluation, Method,
};
use common::*;
use proptest::prelude::*;
use rand::Rng;

fn naive_max(feasible: &[Vec<bool>], f: impl Fn(&[bool]) -> f64) -> f64 {
    feasible.iter().map(|x| f(x)).fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn fixture_optimum() {
    let inst = three_product_fixture();
    let cs = ConstraintSet::new(3);
    let out = search_exact(&cs, 24, |x| inst.expected_revenue(x)).unwrap();
    assert!((out.value - 7.0).abs() < 1e-9);
    let report = solve_exact(&inst, &cs, 24).unwrap();
    assert_eq!(report.method, Method::BruteforceExact);
    assert!((report.objective_exact - 7.0).abs() < 1e-9);
}

#[test]
fn over_cap_is_refused() {
    let inst = random_instance(1, 26, 2, 0.3, 1.0);
    let cs = ConstraintSet::new(26);
    assert!(matches!(solve_exact(&inst, &cs, 24), Err(CnlError::CapExceeded { .. })));
}

fn single_setup(seed: u64, m: usize) -> (cnl_assort::Instance, ConstraintSet) {
    let inst = random_instance(seed, m, 3, 0.2, 1.0);
    let cs = random_constraints(seed, inst.alpha());
    (inst, cs)
}

#[test]
fn external_round_trip() {
    let (inst, cs) = single_setup(17, 7);
    let lfp = build_lfp(&inst, &cs, 0.05).unwrap();
    let model = build_assort_milp(&lfp, &cs).unwrap();
    let best = solve_approx(&inst, &lfp, &cs, 24).unwrap();
    let point = model.point_from_map(&assort_point(&lfp, &best.best_x).unwrap()).unwrap();
    let text = write_solution(&model, &point);
    let eval = Evaluation::Single {
        instance: &inst,
        lfp: &lfp,
        constraints: &cs,
    };
    let report = solve_external(&model, eval, &text).unwrap();
    assert_eq!(report.best_x, best.best_x);
    assert_eq!(report.method, Method::ExternalMilp);
    assert!(!report.objective_mismatch);
    assert_eq!(report.objective_exact, best.objective_exact);

    // Near-integral values round at one half.
    let fuzzy = text
        .lines()
        .map(|l| match l.split_once(' ') {
            Some((name, "1")) if name.starts_with("x_") => format!("{name} 0.9999997"),
            Some((name, "0")) if name.starts_with("x_") => format!("{name} 2e-7"),
            _ => l.to_string(),
        })
        .collect::<Vec<_>>()
        .join("\n");
    assert_eq!(solve_external(&model, eval, &fuzzy).unwrap().best_x, best.best_x);

    // A wrong claimed objective is flagged, never trusted.
    let (_, body) = text.split_once('\n').unwrap();
    let lied = format!("objective 1000\n{body}");
    let report = solve_external(&model, eval, &lied).unwrap();
    assert_eq!(report.reported_objective, Some(1000.0));
    assert!(report.objective_mismatch);
    assert_eq!(report.objective_exact, best.objective_exact);
}

#[test]
fn external_rejects_bad_files() {
    let (inst, cs) = single_setup(17, 7);
    let lfp = build_lfp(&inst, &cs, 0.05).unwrap();
    let model = build_assort_milp(&lfp, &cs).unwrap();
    let eval = Evaluation::Single {
        instance: &inst,
        lfp: &lfp,
        constraints: &cs,
    };
    assert!(matches!(solve_external(&model, eval, "x_1 1\n"), Err(CnlError::Parse(_))));
    assert!(matches!(solve_external(&model, eval, "x_1 one\n"), Err(CnlError::Parse(_))));
    assert!(matches!(solve_external(&model, eval, "x_1\n"), Err(CnlError::Parse(_))));
    let all_on: String = (1..=7).map(|i| format!("x_{i} 1\n")).collect();
    assert!(matches!(solve_external(&model, eval, &all_on), Err(CnlError::Infeasible(_))));
}

#[test]
fn external_mixture() {
    let mix = random_mixture(4, 6, 2, 3);
    let cs = random_constraints(4, mix.alpha());
    let lfp = build_mixture_lfp(&mix, &cs, 0.05).unwrap();
    let model = build_mixture_milp(&lfp, &cs).unwrap();
    let best = solve_mixture_approx(&mix, &lfp, &cs, 24).unwrap();
    let point = model.point_from_map(&mixture_point(&lfp, &best.best_x).unwrap()).unwrap();
    let eval = Evaluation::Mixture {
        instance: &mix,
        lfp: &lfp,
        constraints: &cs,
    };
    let report = solve_external(&model, eval, &write_solution(&model, &point)).unwrap();
    assert_eq!(report.best_x, best.best_x);
    assert!(!report.objective_mismatch);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn pruned_search_matches_enumeration(seed in any::<u64>(), m in 1usize..=14) {
        let (inst, cs) = single_setup(seed, m);
        let lfp = build_lfp(&inst, &cs, 0.05).unwrap();
        let feasible = all_feasible(&cs);
        let exact = search_exact(&cs, 24, |x| inst.expected_revenue(x)).unwrap();
        prop_assert_eq!(exact.value, naive_max(&feasible, |x| inst.expected_revenue(x).unwrap()));
        let approx = search_exact(&cs, 24, |x| lfp.approx_objective(x)).unwrap();
        prop_assert_eq!(approx.value, naive_max(&feasible, |x| lfp.approx_objective(x).unwrap()));
        prop_assert!(exact.nodes as usize >= feasible.len());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn bisection_is_within_delta(seed in any::<u64>(), m in 1usize..=10, e in 0usize..2) {
        let delta = 0.001;
        let (inst, cs) = single_setup(seed, m);
        let lfp = build_lfp(&inst, &cs, [0.05, 0.01][e]).unwrap();
        let best = solve_approx(&inst, &lfp, &cs, 24).unwrap().objective_approx.unwrap();
        let report = bisection_solve(&inst, &lfp, &cs, delta, 24).unwrap();
        let got = report.objective_approx.unwrap();
        if best == 0.0 {
            // Only the empty assortment is feasible.
            prop_assert_eq!(got, 0.0);
            return Ok(());
        }
        prop_assert!(got <= best + 1e-12);
        prop_assert!(best - got <= delta * best + 1e-12);
        prop_assert!(cs.is_feasible(&report.best_x).unwrap());
        let (lo, hi) = report.initial_lambda_bounds.unwrap();
        prop_assert!(report.iterations <= bisection_iteration_bound(lo, hi, delta) + 1);
        let (lo, hi) = report.lambda_bounds.unwrap();
        prop_assert!(lo <= best + 1e-9 && best <= hi + 1e-9);
        prop_assert!(report.guarantee < guarantee_factor(lfp.eps(), false) + 1e-15);
    }

    #[test]
    fn feasibility_verdict_switches_once(seed in any::<u64>(), m in 1usize..=9) {
        let (inst, cs) = single_setup(seed, m);
        let lfp = build_lfp(&inst, &cs, 0.05).unwrap();
        let best = solve_approx(&inst, &lfp, &cs, 24).unwrap().objective_approx.unwrap();
        prop_assume!(best > 0.0);
        let verdicts: Vec<bool> = (0..=40)
            .map(|j| {
                let lambda = best * (0.5 + j as f64 / 40.0);
                let out = search_exact(&cs, 24, |x| {
                    let (num, den) = lfp.ratio_parts(x)?;
                    Ok(num - lambda * den)
                })
                .unwrap();
                out.value >= 0.0
            })
            .collect();
        let switches = verdicts.windows(2).filter(|w| w[0] != w[1]).count();
        prop_assert!(switches <= 1);
        prop_assert!(verdicts[0] && !verdicts[40]);
    }

    #[test]
    fn certificate_holds(seed in any::<u64>(), m in 1usize..=10) {
        let eps = [0.0526, 0.0256, 0.005][rng(seed).gen_range(0..3)];
        let (inst, cs) = single_setup(seed, m);
        let lfp = build_lfp(&inst, &cs, eps).unwrap();
        let opt = solve_exact(&inst, &cs, 24).unwrap().objective_exact;
        let got = solve_approx(&inst, &lfp, &cs, 24).unwrap();
        prop_assert!(got.objective_exact >= got.guarantee * opt - 1e-9);
        prop_assert!(got.objective_exact <= opt + 1e-12);
    }

    #[test]
    fn mixture_certificate_holds(seed in any::<u64>(), m in 1usize..=8, types in 1usize..=3) {
        let mix = random_mixture(seed, m, 3, types);
        let cs = random_constraints(seed, mix.alpha());
        let lfp = build_mixture_lfp(&mix, &cs, 0.05).unwrap();
        let opt = solve_mixture_exact(&mix, &cs, 24).unwrap().objective_exact;
        let got = solve_mixture_approx(&mix, &lfp, &cs, 24).unwrap();
        prop_assert!(got.objective_exact >= got.guarantee * opt - 1e-9);
    }
}
