//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any hard criterion fails. Criterion 4 only warns.

mod common;

use std::time::{Duration, Instant};

use cnl_assort::choice::Instance;
use cnl_assort::discretize::{
    chord_f, chord_g, discretize_interval, f_value, g_value, kn_bounds, segment_max_error_f,
    segment_max_error_g,
};
use cnl_assort::lab::{
    bench_guarantees, generate_assortment, generate_mixture, generate_pricing, reproduce_table1,
    BenchConfig, GenSpec,
};
use cnl_assort::reformulate::{
    assort_point, build_anp_milp, build_assort_milp, build_lfp, build_mixture_lfp,
    build_mixture_milp, build_pricing_lfp, mixture_point, pricing_point, MilpModel,
};
use cnl_assort::solver::{
    bisection_iteration_bound, bisection_solve, search_exact, solve_approx, DEFAULT_DELTA,
};
use cnl_assort::{Assortment, ConstraintSet};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Tolerances, pinned.
const FIXTURE_APPROX_TOL: f64 = 0.005;
const FIXTURE_EXACT_TOL: f64 = 1e-9;
const TABLE_TIME_LIMIT: Duration = Duration::from_secs(10);
const CERT_SLACK: f64 = 1e-9;
const CERT_TIME_LIMIT: Duration = Duration::from_secs(300);
const GAP_LIMIT_PCT: f64 = 1.2;
const SEGMENT_SLACK: f64 = 1e-9;
const SEGMENT_GRID: usize = 10_000;
const ARGMAX_REL_TOL: f64 = 1e-5;
const MONOTONE_TOL: f64 = 1e-12;
const MILP_TOL: f64 = 1e-6;
const ROW_TOL: f64 = 1e-9;
const BISECTION_DELTA: f64 = 0.001;
const NORMALIZATION_TOL: f64 = 1e-9;
const MC_DRAWS: usize = 1_000_000;
const MC_BAND_SE: f64 = 3.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn table_golden() -> Outcome {
    let start = Instant::now();
    let table = reproduce_table1().unwrap();
    let elapsed = start.elapsed();
    let mut matches = 0;
    let mut misses = Vec::new();
    for (e, row) in EXPECTED_COUNTS.iter().enumerate() {
        for (col, &want) in row.iter().enumerate() {
            let got = table.get(col / 3, col % 3, e);
            if got == want {
                matches += 1;
            } else {
                misses.push(format!(
                    "(sigma {}, U {}, eps {}) = {got}, want {want}",
                    SIGMAS[col / 3],
                    UPPERS[col % 3],
                    EPS[e]
                ));
            }
        }
    }
    outcome(
        matches == 75 && elapsed < TABLE_TIME_LIMIT,
        format!("{matches}/75 cells match in {:.3} s {}", elapsed.as_secs_f64(), misses.join("; ")),
    )
}

fn fixture() -> Outcome {
    let inst = three_product_fixture();
    let a = inst.expected_revenue(&Assortment::from_bits(&[0, 0, 1])).unwrap();
    let b = inst.expected_revenue(&Assortment::from_bits(&[1, 0, 1])).unwrap();
    let best = search_exact(&ConstraintSet::new(3), 24, |x| inst.expected_revenue(x)).unwrap();
    outcome(
        (a - 6.98).abs() <= FIXTURE_APPROX_TOL
            && (b - 7.0).abs() <= FIXTURE_EXACT_TOL
            && (best.value - 7.0).abs() <= FIXTURE_EXACT_TOL,
        format!("F(0,0,1) = {a:.6}, F(1,0,1) = {b:.12}, search optimum {:.12}", best.value),
    )
}

fn sweep_specs() -> Vec<GenSpec> {
    let sizes = [(8, 2), (8, 3), (10, 2), (10, 3), (12, 2), (12, 3)];
    (0..200u64)
        .map(|k| {
            let (m, n) = sizes[k as usize % sizes.len()];
            GenSpec::assort(1000 + k, m, n, 0.75)
        })
        .collect()
}

fn certificate_and_gaps() -> (Outcome, Outcome) {
    let start = Instant::now();
    let cfg = BenchConfig {
        guarantees: vec![0.90, 0.95, 0.99],
        delta: DEFAULT_DELTA,
        cap: 24,
        jobs: 0,
        bisection: false,
    };
    let report = bench_guarantees(&sweep_specs(), &cfg).unwrap();
    let elapsed = start.elapsed();
    let eps_ok = report.rows.iter().all(|r| {
        let want = match (r.guarantee * 100.0).round() as u32 {
            90 => 0.0526,
            95 => 0.0256,
            _ => 0.005,
        };
        r.eps == want
    });
    let mut bad = 0;
    for r in &report.rows {
        let g = (1.0 - r.eps) / (1.0 + r.eps);
        if r.f_returned < g * r.f_exact_opt - CERT_SLACK {
            bad += 1;
        }
    }
    let cert = outcome(
        bad == 0 && report.violations.is_empty() && eps_ok && report.rows.len() == 600
            && elapsed < CERT_TIME_LIMIT,
        format!(
            "{} rows, {bad} violations, eps mapping {}, {:.1} s",
            report.rows.len(),
            if eps_ok { "ok" } else { "wrong" },
            elapsed.as_secs_f64()
        ),
    );

    let mut gaps: Vec<f64> = report
        .rows
        .iter()
        .filter(|r| (r.guarantee - 0.90).abs() < 1e-12)
        .map(|r| r.gap_pct)
        .collect();
    gaps.sort_by(f64::total_cmp);
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let q = |p: f64| gaps[((gaps.len() - 1) as f64 * p).round() as usize];
    let zero = gaps.iter().filter(|&&g| g == 0.0).count();
    let gap = outcome(
        mean <= GAP_LIMIT_PCT,
        format!(
            "mean {mean:.4}% (limit {GAP_LIMIT_PCT}%), median {:.4}%, p90 {:.4}%, max {:.4}%, {zero}/{} at zero",
            q(0.5),
            q(0.9),
            q(1.0),
            gaps.len()
        ),
    );
    (cert, gap)
}

fn segment_errors() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_excess = f64::NEG_INFINITY;
    let mut failures = 0;
    let mut segments = 0;
    for _ in 0..100 {
        let sigma = rng.gen_range(0.05..=2.0);
        let upper = rng.gen_range(2.0..=20.0);
        let eps = if rng.gen_bool(0.5) { 0.1 } else { 0.01 };
        let pw = discretize_interval(sigma, 1.0, upper, eps, None).unwrap();
        for seg in pw.breakpoints().windows(2) {
            segments += 1;
            let (c, u) = (seg[0], seg[1]);
            let mut worst = 0.0f64;
            for j in 0..=SEGMENT_GRID {
                let t = c + (u - c) * j as f64 / SEGMENT_GRID as f64;
                let ef = (pw.fhat(t).unwrap() / f_value(sigma, t) - 1.0).abs();
                let eg = (pw.ghat(t).unwrap() / g_value(sigma, t) - 1.0).abs();
                worst = worst.max(ef).max(eg);
            }
            worst_excess = worst_excess.max(worst - eps);
            if worst > eps + SEGMENT_SLACK {
                failures += 1;
            }
        }
    }
    outcome(
        failures == 0,
        format!("{segments} segments, {failures} over eps, max(error - eps) = {worst_excess:.3e}"),
    )
}

/// Grid argmax refined by ternary search on the bracketing cells.
fn grid_argmax(err: impl Fn(f64) -> f64, c: f64, u: f64) -> f64 {
    let n = 10_000;
    let at = |j: usize| (c + (u - c) * j as f64 / n as f64).min(u);
    let best = (0..=n).max_by(|&a, &b| err(at(a)).total_cmp(&err(at(b)))).unwrap();
    let (mut lo, mut hi) = (at(best.saturating_sub(1)), at((best + 1).min(n)));
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if err(m1) < err(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    0.5 * (lo + hi)
}

fn argmax_agreement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        // Away from the exponents where one of the chords is exact.
        let sigma = loop {
            let s: f64 = rng.gen_range(0.05..1.95);
            if (s - 1.0).abs() > 0.05 {
                break s;
            }
        };
        let c = rng.gen_range(1.0..10.0);
        let u = c + rng.gen_range(0.5..10.0);
        let (_, tf) = segment_max_error_f(sigma, c, u);
        let grid_f = grid_argmax(|t| (chord_f(sigma, c, u, t).unwrap() / f_value(sigma, t) - 1.0).abs(), c, u);
        let (_, tg) = segment_max_error_g(sigma, c, u);
        let grid_g = grid_argmax(|t| (chord_g(sigma, c, u, t).unwrap() / g_value(sigma, t) - 1.0).abs(), c, u);
        worst = worst.max((tf - grid_f).abs() / grid_f).max((tg - grid_g).abs() / grid_g);
    }
    outcome(
        worst <= ARGMAX_REL_TOL,
        format!("100 segments, max relative argmax difference {worst:.3e}"),
    )
}

fn monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut bad = 0;
    for _ in 0..1000 {
        let sigma = rng.gen_range(0.05..=2.0);
        let c = rng.gen_range(1.0..10.0);
        let a: f64 = c + rng.gen_range(0.0..15.0);
        let b = c + rng.gen_range(0.0..15.0);
        let (u1, u2) = (a.min(b), a.max(b));
        if u1 == u2 {
            continue;
        }
        let f_ok = segment_max_error_f(sigma, c, u1).0 <= segment_max_error_f(sigma, c, u2).0 + MONOTONE_TOL;
        let g_ok = segment_max_error_g(sigma, c, u1).0 <= segment_max_error_g(sigma, c, u2).0 + MONOTONE_TOL;
        if !(f_ok && g_ok) {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("1000 pairs, {bad} decreases"))
}

fn bound_sandwich() -> Outcome {
    let mut checked = 0;
    let mut undefined = 0;
    let mut bad = Vec::new();
    for (e, &eps) in EPS.iter().enumerate() {
        for (s, &sigma) in SIGMAS.iter().enumerate() {
            for (u, &upper) in UPPERS.iter().enumerate() {
                let k = EXPECTED_COUNTS[e][s * 3 + u];
                let b = kn_bounds(sigma, 1.0, upper, eps).unwrap();
                let defined = eps <= 1.0 - 2f64.powf(sigma - 1.0);
                if defined {
                    checked += 1;
                    let upper_ok = b.upper.is_some_and(|up| k <= up);
                    if !(b.lower_valid && b.lower <= k && upper_ok) {
                        bad.push(format!("({sigma}, {upper}, {eps}): {} <= {k} <= {:?}", b.lower, b.upper));
                    }
                } else {
                    undefined += 1;
                    if b.lower != 1 || b.lower_valid {
                        bad.push(format!("({sigma}, {upper}, {eps}): undefined lower reported as {}", b.lower));
                    }
                }
            }
        }
    }
    outcome(
        bad.is_empty(),
        format!("{checked} cells bracketed, {undefined} with undefined lower bound {}", bad.join("; ")),
    )
}

/// Lifts every feasible assortment into the model, checks all rows, and
/// compares the best lifted objective with the best approximate revenue.
fn enumerate_model(
    model: &MilpModel,
    cs: &ConstraintSet,
    lift: impl Fn(&[bool]) -> std::collections::HashMap<String, f64>,
    fhat: impl Fn(&[bool]) -> f64,
) -> Result<(), String> {
    let mut milp_best = f64::NEG_INFINITY;
    let mut approx_best = f64::NEG_INFINITY;
    cs.for_each_feasible(24, |x| {
        let point = model.point_from_map(&lift(x))?;
        let obj = model.objective_value(&point);
        let target = fhat(x);
        model
            .check_point(&point, ROW_TOL)
            .map_err(|e| cnl_assort::CnlError::InvalidInstance(format!("{x:?}: {e}")))?;
        if (obj - target).abs() > MILP_TOL {
            return Err(cnl_assort::CnlError::InvalidInstance(format!(
                "{x:?}: objective {obj} vs {target}"
            )));
        }
        milp_best = milp_best.max(obj);
        approx_best = approx_best.max(target);
        Ok(())
    })
    .map_err(|e| e.to_string())?;
    if (milp_best - approx_best).abs() > MILP_TOL {
        return Err(format!("optimum {milp_best} vs {approx_best}"));
    }
    Ok(())
}

fn milp_equivalence() -> Outcome {
    let mut fails = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for k in 0..100u64 {
        let m = rng.gen_range(2..=12);
        let n = rng.gen_range(1..=3.min(m));
        let eps = [0.1, 0.05, 0.01][k as usize % 3];
        let (inst, cs) = generate_assortment(&GenSpec::assort(2000 + k, m, n, 1.0)).unwrap();
        let lfp = build_lfp(&inst, &cs, eps).unwrap();
        let model = build_assort_milp(&lfp, &cs).unwrap();
        if let Err(e) = enumerate_model(
            &model,
            &cs,
            |x| assort_point(&lfp, x).unwrap(),
            |x| lfp.approx_objective(x).unwrap(),
        ) {
            fails.push(format!("assort {k}: {e}"));
        }

        let m = rng.gen_range(1..=6);
        let levels = rng.gen_range(1..=3);
        let n = rng.gen_range(1..=2.min(m));
        let (pinst, cs) = generate_pricing(&GenSpec::pricing(3000 + k, m, n, levels)).unwrap();
        let problem = build_pricing_lfp(&pinst, &cs, eps).unwrap();
        let model = build_anp_milp(&problem).unwrap();
        if let Err(e) = enumerate_model(
            &model,
            &problem.constraints,
            |x| pricing_point(&problem, x).unwrap(),
            |x| problem.lfp.approx_objective(x).unwrap(),
        ) {
            fails.push(format!("pricing {k}: {e}"));
        }

        let m = rng.gen_range(2..=10);
        let types = rng.gen_range(1..=3);
        let n = rng.gen_range(1..=3.min(m));
        let (minst, cs) = generate_mixture(&GenSpec::mixture(4000 + k, m, n, 1.0, types)).unwrap();
        let mix = build_mixture_lfp(&minst, &cs, eps).unwrap();
        let model = build_mixture_milp(&mix, &cs).unwrap();
        if let Err(e) = enumerate_model(
            &model,
            &cs,
            |x| mixture_point(&mix, x).unwrap(),
            |x| mix.approx_objective(x).unwrap(),
        ) {
            fails.push(format!("mixture {k}: {e}"));
        }
    }
    outcome(
        fails.is_empty(),
        format!("300 models (100 each), {} mismatches {}", fails.len(), fails.join("; ")),
    )
}

fn bisection_agreement() -> Outcome {
    let mut worst = 0.0f64;
    let mut over_budget = 0;
    let mut max_iter = 0;
    for k in 0..100u64 {
        let m = [8, 10, 12][k as usize % 3];
        let (inst, cs) = generate_assortment(&GenSpec::assort(5000 + k, m, 2 + k as usize % 2, 0.75)).unwrap();
        let lfp = build_lfp(&inst, &cs, 0.0521).unwrap();
        let best = solve_approx(&inst, &lfp, &cs, 24).unwrap().objective_approx.unwrap();
        let report = bisection_solve(&inst, &lfp, &cs, BISECTION_DELTA, 24).unwrap();
        let got = report.objective_approx.unwrap();
        worst = worst.max((best - got).abs() / best);
        let (lo, hi) = report.initial_lambda_bounds.unwrap();
        if report.iterations > bisection_iteration_bound(lo, hi, BISECTION_DELTA) + 1 {
            over_budget += 1;
        }
        max_iter = max_iter.max(report.iterations);
    }
    outcome(
        worst <= BISECTION_DELTA && over_budget == 0,
        format!("100 instances, max relative shortfall {worst:.3e}, {over_budget} over the iteration bound, at most {max_iter} iterations"),
    )
}

fn probabilities(inst: &Instance, x: &[bool], rng: &mut ChaCha8Rng) -> (f64, usize, usize) {
    let p = inst.choice_probabilities(x).unwrap();
    let total: f64 = p.products.iter().sum::<f64>() + p.no_purchase;
    let m = inst.num_products();
    let mut counts = vec![0usize; m + 1];
    for _ in 0..MC_DRAWS {
        match inst.sample_choice(x, rng).unwrap() {
            Some(i) => counts[i] += 1,
            None => counts[m] += 1,
        }
    }
    let mut outside = 0;
    let mut compared = 0;
    for (j, &c) in counts.iter().enumerate() {
        let q = if j < m { p.products[j] } else { p.no_purchase };
        if j < m && !x[j] {
            if c != 0 {
                outside += 1;
            }
            continue;
        }
        compared += 1;
        let freq = c as f64 / MC_DRAWS as f64;
        let se = (q * (1.0 - q) / MC_DRAWS as f64).sqrt();
        if (freq - q).abs() > MC_BAND_SE * se {
            outside += 1;
        }
    }
    ((total - 1.0).abs(), outside, compared)
}

fn monte_carlo() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst_sum = 0.0f64;
    let mut outside = 0;
    let mut compared = 0;
    for k in 0..50u64 {
        let m = rng.gen_range(2..=8);
        let n = rng.gen_range(1..=3);
        let inst = random_instance(6000 + k, m, n, 0.05, 1.0);
        let x = loop {
            let x = random_assortment(&mut rng, m);
            if x.iter().any(|&o| o) {
                break x;
            }
        };
        let (dev, out, cmp) = probabilities(&inst, &x, &mut rng);
        worst_sum = worst_sum.max(dev);
        outside += out;
        compared += cmp;
    }
    outcome(
        worst_sum <= NORMALIZATION_TOL && outside == 0,
        format!(
            "50 instances x {MC_DRAWS} draws, max |sum - 1| = {worst_sum:.2e}, {outside}/{compared} frequencies outside {MC_BAND_SE} SE"
        ),
    )
}

fn main() {
    let started = Instant::now();
    let (cert, gap) = certificate_and_gaps();
    let results = [
        (1, "segment-count grid", table_golden(), false),
        (2, "three-product fixture", fixture(), false),
        (3, "guarantee certificate", cert, false),
        (4, "empirical gap at 90%", gap, true),
        (5, "per-segment accuracy", segment_errors(), false),
        (6, "closed-form argmax", argmax_agreement(), false),
        (7, "error monotonicity", monotonicity(), false),
        (8, "segment-count bounds", bound_sandwich(), false),
        (9, "MILP equivalence", milp_equivalence(), false),
        (10, "bisection agreement", bisection_agreement(), false),
        (11, "probabilities and sampling", monte_carlo(), false),
    ];
    let mut hard_failures = 0;
    for (id, name, out, soft) in &results {
        let tag = match (out.pass, soft) {
            (true, _) => "PASS",
            (false, true) => "WARN",
            (false, false) => "FAIL",
        };
        if !out.pass && !soft {
            hard_failures += 1;
        }
        println!("criterion {id:>2} {tag} {name}: {}", out.detail);
    }
    println!(
        "acceptance: {} of 11 passed, {hard_failures} hard failures, {:.1} s",
        results.iter().filter(|r| r.2.pass).count(),
        started.elapsed().as_secs_f64()
    );
    if hard_failures > 0 {
        std::process::exit(1);
    }
}
