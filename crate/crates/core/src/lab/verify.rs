use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::choice::Instance;
use crate::constraints::ConstraintSet;
use crate::error::{CnlError, Result};
use crate::reformulate::{assort_point, build_assort_milp, build_lfp};
use crate::solver::{greedy_by_revenue, guarantee_factor, search_exact};

const SAMPLES: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub eps: f64,
    pub assortments_checked: usize,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let tag = match c.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Skipped => "SKIP",
            };
            out.push_str(&format!("{tag} {:<24} {}\n", c.name, c.detail));
        }
        out
    }
}

fn check(name: &'static str, ok: bool, detail: String) -> Check {
    let status = if ok { Status::Pass } else { Status::Fail };
    Check { name, status, detail }
}

/// Feasible assortments to test: empty, greedy, and random draws.
fn sample_assortments(cs: &ConstraintSet, revenue: &[f64], seed: u64) -> Result<Vec<Vec<bool>>> {
    let m = cs.num_products();
    let mut out = vec![vec![false; m], greedy_by_revenue(revenue, cs)?];
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    for _ in 0..SAMPLES {
        let density: f64 = rng.gen();
        let x: Vec<bool> = (0..m).map(|_| rng.gen::<f64>() < density).collect();
        if cs.is_feasible(&x)? {
            out.push(x);
        }
    }
    Ok(out)
}

/// Runs the model invariants on one instance at accuracy `eps`: choice
/// probabilities sum to one, nest weights stay inside their bounds, every
/// segment meets the accuracy, the approximate revenue stays within its
/// error band, and (when the search fits under `cap`) the lifted MILP
/// point is feasible and the revenue guarantee holds.
pub fn verify_instance(
    inst: &Instance,
    cs: &ConstraintSet,
    eps: f64,
    cap: usize,
    seed: u64,
) -> Result<VerifyReport> {
    if cs.num_products() != inst.num_products() {
        return Err(CnlError::dim("constraint columns", inst.num_products(), cs.num_products()));
    }
    let lfp = build_lfp(inst, cs, eps)?;
    let xs = sample_assortments(cs, inst.revenues(), seed)?;
    let mut checks = Vec::new();

    let mut worst = 0.0f64;
    for x in &xs {
        let p = inst.choice_probabilities(x)?;
        let total: f64 = p.products.iter().sum::<f64>() + p.no_purchase;
        worst = worst.max((total - 1.0).abs());
    }
    checks.push(check(
        "probabilities_sum_to_one",
        worst <= 1e-9,
        format!("max |sum - 1| = {worst:.3e}"),
    ));

    let mut outside = 0;
    for x in &xs {
        if !lfp.bounds().contains(&inst.nest_weights(x)?, 1e-9) {
            outside += 1;
        }
    }
    checks.push(check(
        "nest_weights_in_bounds",
        outside == 0,
        format!("{outside} of {} assortments outside", xs.len()),
    ));

    let mut worst_seg = 0.0f64;
    for pw in lfp.approx() {
        for (ef, eg) in pw.segment_errors() {
            worst_seg = worst_seg.max(ef).max(eg);
        }
    }
    checks.push(check(
        "segment_accuracy",
        worst_seg <= eps + 1e-9,
        format!("max segment error {worst_seg:.6e}, eps {eps}"),
    ));

    let general = lfp.approx().iter().any(|pw| pw.general_sigma());
    let band = guarantee_factor(eps, general);
    let mut out_of_band = 0;
    for x in &xs {
        let (f, fhat) = (inst.expected_revenue(x)?, lfp.approx_objective(x)?);
        if fhat < band * f - 1e-9 || f < band * fhat - 1e-9 {
            out_of_band += 1;
        }
    }
    checks.push(check(
        "approx_revenue_band",
        out_of_band == 0,
        format!("{out_of_band} of {} outside factor {band:.6}", xs.len()),
    ));

    if cs.num_products() > cap {
        for name in ["milp_point_feasible", "revenue_guarantee"] {
            checks.push(Check {
                name,
                status: Status::Skipped,
                detail: format!("m = {} exceeds search cap {cap}", cs.num_products()),
            });
        }
    } else {
        let approx = search_exact(cs, cap, |x| lfp.approx_objective(x))?;
        let model = build_assort_milp(&lfp, cs)?;
        let point = model.point_from_map(&assort_point(&lfp, &approx.x)?)?;
        let obj = model.objective_value(&point);
        let rows = model.check_point(&point, 1e-7);
        let obj_ok = (obj - approx.value).abs() <= 1e-6 * approx.value.abs().max(1.0);
        checks.push(check(
            "milp_point_feasible",
            rows.is_ok() && obj_ok,
            match rows {
                Ok(()) => format!("objective {obj:.9} vs approx optimum {:.9}", approx.value),
                Err(e) => e,
            },
        ));

        let exact = search_exact(cs, cap, |x| inst.expected_revenue(x))?;
        let got = inst.expected_revenue(&approx.x)?;
        checks.push(check(
            "revenue_guarantee",
            got >= band * exact.value - 1e-9,
            format!("F = {got:.9}, optimum {:.9}, factor {band:.6}", exact.value),
        ));
    }

    Ok(VerifyReport {
        eps,
        assortments_checked: xs.len(),
        checks,
    })
}
