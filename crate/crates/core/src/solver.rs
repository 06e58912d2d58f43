//! Desk-scale solvers: exhaustive search over feasible assortments,
//! bisection on the approximate ratio, and import of external MILP
//! solutions.
//!
//! For a fixed assortment every auxiliary variable of the approximate
//! problem is determined, so searching over `x` alone solves it exactly.

use std::time::Instant;

use serde::Serialize;

use crate::choice::{Instance, MixtureInstance};
use crate::constraints::ConstraintSet;
use crate::error::{CnlError, Result};
use crate::reformulate::{LfpCoefficients, MilpModel, MixtureLfp, Variant};

/// Largest number of binary decisions searched exhaustively by default.
pub const DEFAULT_CAP: usize = 24;

/// Environment variable overriding [`DEFAULT_CAP`].
pub const CAP_ENV: &str = "CNL_ASSORT_CAP";

/// Default relative tolerance of the bisection.
pub const DEFAULT_DELTA: f64 = 0.001;

/// The search cap, honoring `CNL_ASSORT_CAP` when it holds an integer.
pub fn search_cap() -> usize {
    std::env::var(CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_CAP)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    BruteforceExact,
    BruteforceApprox,
    Bisection,
    ExternalMilp,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::BruteforceExact => "bruteforce_exact",
            Method::BruteforceApprox => "bruteforce_approx",
            Method::Bisection => "bisection",
            Method::ExternalMilp => "external_milp",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    /// Offered alternatives; for pricing, flattened over product-price
    /// pairs with `levels` columns per product.
    pub best_x: Vec<bool>,
    pub levels: Option<usize>,
    pub objective_exact: f64,
    pub objective_approx: Option<f64>,
    pub method: Method,
    /// Feasibility tests performed by the bisection loop.
    pub iterations: usize,
    pub node_count: u64,
    pub wall_time_ms: f64,
    /// Certified fraction of the optimal revenue.
    pub guarantee: f64,
    /// Ratio bracket `[L_λ, U_λ]` when the bisection loop started.
    pub initial_lambda_bounds: Option<(f64, f64)>,
    pub lambda_bounds: Option<(f64, f64)>,
    /// Objective value claimed by an external solution file.
    pub reported_objective: Option<f64>,
    /// Set when the claimed objective differs from the recomputed one.
    pub objective_mismatch: bool,
}

impl SolveReport {
    fn new(method: Method, x: Vec<bool>, exact: f64) -> Self {
        SolveReport {
            best_x: x,
            levels: None,
            objective_exact: exact,
            objective_approx: None,
            method,
            iterations: 0,
            node_count: 0,
            wall_time_ms: 0.0,
            guarantee: 1.0,
            initial_lambda_bounds: None,
            lambda_bounds: None,
            reported_objective: None,
            objective_mismatch: false,
        }
    }

    /// Marks the assortment as a price selection with `levels` columns.
    pub fn with_levels(mut self, levels: usize) -> Self {
        self.levels = Some(levels);
        self
    }

    /// Offered pairs as `(product, level)`, 0-based.
    pub fn price_selection(&self) -> Option<Vec<(usize, usize)>> {
        let levels = self.levels?;
        Some(
            self.best_x
                .iter()
                .enumerate()
                .filter(|(_, &o)| o)
                .map(|(j, _)| (j / levels, j % levels))
                .collect(),
        )
    }
}

/// `(1−ε)/(1+ε)`, squared when some dissimilarity exceeds 1.
pub fn guarantee_factor(eps: f64, general_sigma: bool) -> f64 {
    let g = (1.0 - eps) / (1.0 + eps);
    if general_sigma {
        g * g
    } else {
        g
    }
}

/// Accuracy `ε = (1−g)/(1+g)` that certifies guarantee `g`.
pub fn eps_for_guarantee(g: f64) -> Result<f64> {
    if !(g > 0.0 && g < 1.0) {
        return Err(CnlError::InvalidArgument(format!("guarantee {g} outside (0, 1)")));
    }
    Ok((1.0 - g) / (1.0 + g))
}

/// `100·(F_best − F_x)/F_best`.
pub fn gap_percent(best: f64, value: f64) -> Result<f64> {
    if !(best > 0.0) {
        return Err(CnlError::InvalidArgument(format!(
            "gap undefined for best value {best}"
        )));
    }
    Ok(100.0 * (best - value) / best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub x: Vec<bool>,
    pub value: f64,
    pub nodes: u64,
}

/// Maximizes `objective` over the feasible set by pruned depth-first
/// search. Ties keep the first assortment visited.
pub fn search_exact<F>(cs: &ConstraintSet, cap: usize, mut objective: F) -> Result<SearchOutcome>
where
    F: FnMut(&[bool]) -> Result<f64>,
{
    let mut best_x = vec![false; cs.num_products()];
    let mut best = f64::NEG_INFINITY;
    let nodes = cs.for_each_feasible(cap, |x| {
        let v = objective(x)?;
        if v > best {
            best = v;
            best_x.copy_from_slice(x);
        }
        Ok(())
    })?;
    Ok(SearchOutcome {
        x: best_x,
        value: best,
        nodes,
    })
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn general_sigma(lfp: &LfpCoefficients) -> bool {
    lfp.approx().iter().any(|pw| pw.general_sigma())
}

/// Exact optimum of the CNL revenue.
pub fn solve_exact(inst: &Instance, cs: &ConstraintSet, cap: usize) -> Result<SolveReport> {
    let start = Instant::now();
    let out = search_exact(cs, cap, |x| inst.expected_revenue(x))?;
    let mut report = SolveReport::new(Method::BruteforceExact, out.x, out.value);
    report.node_count = out.nodes;
    report.wall_time_ms = elapsed_ms(start);
    Ok(report)
}

/// Exact optimum of the approximate revenue, evaluated under the true
/// model afterwards.
pub fn solve_approx(
    inst: &Instance,
    lfp: &LfpCoefficients,
    cs: &ConstraintSet,
    cap: usize,
) -> Result<SolveReport> {
    let start = Instant::now();
    let out = search_exact(cs, cap, |x| lfp.approx_objective(x))?;
    let exact = inst.expected_revenue(&out.x)?;
    let mut report = SolveReport::new(Method::BruteforceApprox, out.x, exact);
    report.objective_approx = Some(out.value);
    report.node_count = out.nodes;
    report.guarantee = guarantee_factor(lfp.eps(), general_sigma(lfp));
    report.wall_time_ms = elapsed_ms(start);
    Ok(report)
}

/// Adds products in decreasing revenue order whenever the result stays
/// feasible.
pub fn greedy_by_revenue(revenue: &[f64], cs: &ConstraintSet) -> Result<Vec<bool>> {
    let mut order: Vec<usize> = (0..revenue.len()).collect();
    order.sort_by(|&i, &j| revenue[j].total_cmp(&revenue[i]).then(i.cmp(&j)));
    let mut x = vec![false; revenue.len()];
    for i in order {
        x[i] = true;
        if !cs.is_feasible(&x)? {
            x[i] = false;
        }
    }
    Ok(x)
}

/// Bisection on the ratio level `λ`. Each step asks whether some feasible
/// `x` has `numerator − λ·denominator ≥ 0`, answered by exhaustive search.
///
/// Starts from `L_λ = F̂(greedy)` and `U_λ = max r_i`; if `U_λ` is itself
/// reachable it is doubled until it is not. Stops once
/// `(U_λ − L_λ)/L_λ ≤ delta`.
pub fn bisection_solve(
    inst: &Instance,
    lfp: &LfpCoefficients,
    cs: &ConstraintSet,
    delta: f64,
    cap: usize,
) -> Result<SolveReport> {
    if !(delta > 0.0) {
        return Err(CnlError::InvalidArgument(format!("delta = {delta} must be positive")));
    }
    let start = Instant::now();
    let mut nodes = 0u64;
    let mut probe = |lambda: f64| -> Result<(Vec<bool>, f64)> {
        let out = search_exact(cs, cap, |x| {
            let (num, den) = lfp.ratio_parts(x)?;
            Ok(num - lambda * den)
        })?;
        nodes += out.nodes;
        Ok((out.x, out.value))
    };

    let mut best = greedy_by_revenue(lfp.revenues(), cs)?;
    let mut lo = lfp.approx_objective(&best)?;
    if lo <= 0.0 {
        // Any offer with positive revenue beats the empty assortment.
        let (x, v) = probe(0.0)?;
        if v <= 0.0 {
            let mut report = SolveReport::new(Method::Bisection, vec![false; lfp.num_products()], 0.0);
            report.objective_approx = Some(0.0);
            report.node_count = nodes;
            report.guarantee = (1.0 - delta) * guarantee_factor(lfp.eps(), general_sigma(lfp));
            report.wall_time_ms = elapsed_ms(start);
            return Ok(report);
        }
        lo = lfp.approx_objective(&x)?;
        best = x;
    }
    let mut hi = lfp.revenues().iter().copied().fold(0.0, f64::max);
    loop {
        let (x, v) = probe(hi)?;
        if v < 0.0 {
            break;
        }
        lo = lfp.approx_objective(&x)?;
        best = x;
        hi = 2.0 * hi.max(lo);
    }
    let initial = (lo, hi);
    let mut iterations = 0;
    while (hi - lo) / lo > delta {
        let lambda = 0.5 * (lo + hi);
        iterations += 1;
        let (x, v) = probe(lambda)?;
        if v >= 0.0 {
            lo = lambda.max(lfp.approx_objective(&x)?);
            best = x;
        } else {
            hi = lambda;
        }
    }
    let approx = lfp.approx_objective(&best)?;
    let exact = inst.expected_revenue(&best)?;
    let mut report = SolveReport::new(Method::Bisection, best, exact);
    report.objective_approx = Some(approx);
    report.iterations = iterations;
    report.node_count = nodes;
    report.guarantee = (1.0 - delta) * guarantee_factor(lfp.eps(), general_sigma(lfp));
    report.initial_lambda_bounds = Some(initial);
    report.lambda_bounds = Some((lo, hi));
    report.wall_time_ms = elapsed_ms(start);
    Ok(report)
}

/// Upper bound on the bisection loop length for an initial bracket.
pub fn bisection_iteration_bound(lo: f64, hi: f64, delta: f64) -> usize {
    let r = (hi - lo) / (delta * lo);
    if r <= 1.0 {
        0
    } else {
        r.log2().ceil() as usize
    }
}

/// Exact optimum of the mixture revenue.
pub fn solve_mixture_exact(inst: &MixtureInstance, cs: &ConstraintSet, cap: usize) -> Result<SolveReport> {
    let start = Instant::now();
    let out = search_exact(cs, cap, |x| inst.expected_revenue(x))?;
    let mut report = SolveReport::new(Method::BruteforceExact, out.x, out.value);
    report.node_count = out.nodes;
    report.wall_time_ms = elapsed_ms(start);
    Ok(report)
}

/// Exact optimum of the sum-of-ratios approximation.
pub fn solve_mixture_approx(
    inst: &MixtureInstance,
    lfp: &MixtureLfp,
    cs: &ConstraintSet,
    cap: usize,
) -> Result<SolveReport> {
    let start = Instant::now();
    let out = search_exact(cs, cap, |x| lfp.approx_objective(x))?;
    let exact = inst.expected_revenue(&out.x)?;
    let mut report = SolveReport::new(Method::BruteforceApprox, out.x, exact);
    report.objective_approx = Some(out.value);
    report.node_count = out.nodes;
    let general = lfp.types.iter().any(general_sigma);
    report.guarantee = guarantee_factor(lfp.types[0].eps(), general);
    report.wall_time_ms = elapsed_ms(start);
    Ok(report)
}

/// What a model's solution is checked against.
#[derive(Debug, Clone, Copy)]
pub enum Evaluation<'a> {
    Single {
        instance: &'a Instance,
        lfp: &'a LfpCoefficients,
        constraints: &'a ConstraintSet,
    },
    Mixture {
        instance: &'a MixtureInstance,
        lfp: &'a MixtureLfp,
        constraints: &'a ConstraintSet,
    },
}

impl Evaluation<'_> {
    fn constraints(&self) -> &ConstraintSet {
        match self {
            Evaluation::Single { constraints, .. } | Evaluation::Mixture { constraints, .. } => {
                constraints
            }
        }
    }

    fn exact(&self, x: &[bool]) -> Result<f64> {
        match self {
            Evaluation::Single { instance, .. } => instance.expected_revenue(x),
            Evaluation::Mixture { instance, .. } => instance.expected_revenue(x),
        }
    }

    fn approx(&self, x: &[bool]) -> Result<f64> {
        match self {
            Evaluation::Single { lfp, .. } => lfp.approx_objective(x),
            Evaluation::Mixture { lfp, .. } => lfp.approx_objective(x),
        }
    }

    fn guarantee(&self) -> f64 {
        match self {
            Evaluation::Single { lfp, .. } => guarantee_factor(lfp.eps(), general_sigma(lfp)),
            Evaluation::Mixture { lfp, .. } => guarantee_factor(
                lfp.types[0].eps(),
                lfp.types.iter().any(general_sigma),
            ),
        }
    }
}

/// Reads a solution file of `name value` lines for `model`. Decision
/// binaries are rounded at 0.5; unknown names are ignored and a line named
/// `objective` or `obj` is taken as the solver's claimed value. Revenues
/// are always recomputed.
pub fn solve_external(model: &MilpModel, eval: Evaluation<'_>, solution: &str) -> Result<SolveReport> {
    let start = Instant::now();
    let decisions = model.decision_vars();
    if decisions.is_empty() {
        return Err(CnlError::InvalidArgument(
            "model has no assortment variables".into(),
        ));
    }
    let mut values: Vec<Option<f64>> = vec![None; decisions.len()];
    let position: std::collections::HashMap<&str, usize> = decisions
        .iter()
        .enumerate()
        .map(|(p, &j)| (model.variables()[j].name.as_str(), p))
        .collect();
    let mut reported = None;
    for (lineno, line) in solution.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(name), Some(value)) = (parts.next(), parts.next()) else {
            return Err(CnlError::Parse(format!("line {}: expected `name value`", lineno + 1)));
        };
        let value: f64 = value
            .parse()
            .map_err(|_| CnlError::Parse(format!("line {}: bad number {value}", lineno + 1)))?;
        if name == "objective" || name == "obj" {
            reported = Some(value);
        } else if let Some(&p) = position.get(name) {
            values[p] = Some(value);
        }
    }
    let mut x = Vec::with_capacity(values.len());
    for (p, v) in values.iter().enumerate() {
        let v = v.ok_or_else(|| {
            CnlError::Parse(format!(
                "solution has no value for {}",
                model.variables()[decisions[p]].name
            ))
        })?;
        x.push(v >= 0.5);
    }
    let cs = eval.constraints();
    if let Some(r) = cs.first_violation(&x)? {
        return Err(CnlError::Infeasible(format!(
            "solution violates constraint row {}",
            r + 1
        )));
    }
    let exact = eval.exact(&x)?;
    let approx = eval.approx(&x)?;
    let mut report = SolveReport::new(Method::ExternalMilp, x, exact);
    if let Variant::Anp { levels } = model.variant() {
        report.levels = Some(levels);
    }
    report.objective_approx = Some(approx);
    report.guarantee = eval.guarantee();
    report.reported_objective = reported;
    report.objective_mismatch =
        reported.is_some_and(|r| (r - approx).abs() > 1e-6 * approx.abs().max(1.0));
    report.wall_time_ms = elapsed_ms(start);
    Ok(report)
}

/// Writes `point` in the format [`solve_external`] reads, preceded by the
/// objective line.
pub fn write_solution(model: &MilpModel, point: &[f64]) -> String {
    let mut out = format!("objective {}\n", model.objective_value(point));
    for (v, val) in model.variables().iter().zip(point) {
        out.push_str(&format!("{} {}\n", v.name, val));
    }
    out
}
