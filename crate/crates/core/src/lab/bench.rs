use rayon::prelude::*;
use serde::Serialize;

use super::{generate_assortment, generate_mixture, generate_pricing, GenSpec, GenVariant};
use crate::choice::Instance;
use crate::constraints::ConstraintSet;
use crate::discretize::{discretize_interval, kn_bounds};
use crate::error::{CnlError, Result};
use crate::reformulate::{build_lfp, build_mixture_lfp, build_pricing_lfp, LfpCoefficients};
use crate::solver::{
    bisection_solve, eps_for_guarantee, gap_percent, guarantee_factor, solve_approx, solve_exact,
    solve_mixture_approx, solve_mixture_exact, SolveReport, DEFAULT_DELTA,
};

pub const TABLE1_SIGMAS: [f64; 5] = [0.2, 0.3, 0.5, 0.7, 0.9];
pub const TABLE1_UPPERS: [f64; 3] = [5.0, 10.0, 15.0];
pub const TABLE1_EPS: [f64; 5] = [0.1, 0.05, 0.01, 0.005, 0.001];

/// Accuracies used in the experiments for the 90/95/99% guarantees, on
/// the bisection path and on the exact-approximation path.
const BISECTION_EPS: [(f64, f64); 3] = [(0.90, 0.0521), (0.95, 0.0251), (0.99, 0.0045)];
const APPROX_EPS: [(f64, f64); 3] = [(0.90, 0.0526), (0.95, 0.0256), (0.99, 0.005)];

/// Certificate slack on revenue comparisons.
const CERT_TOL: f64 = 1e-9;

/// Accuracy for a target guarantee. The experiment values are used for
/// 90/95/99%; other targets use `(1−g)/(1+g)`, with the bisection path
/// also paying for its relative tolerance `delta`.
pub fn eps_for(guarantee: f64, bisection: bool, delta: f64) -> Result<f64> {
    let table = if bisection { &BISECTION_EPS } else { &APPROX_EPS };
    if let Some(&(_, eps)) = table.iter().find(|(g, _)| (g - guarantee).abs() < 1e-9) {
        return Ok(eps);
    }
    if bisection {
        eps_for_guarantee(guarantee / (1.0 - delta))
    } else {
        eps_for_guarantee(guarantee)
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub guarantees: Vec<f64>,
    pub delta: f64,
    pub cap: usize,
    /// Worker threads; 0 uses all cores.
    pub jobs: usize,
    /// Also run the bisection loop on single-type instances.
    pub bisection: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            guarantees: vec![0.90, 0.95, 0.99],
            delta: DEFAULT_DELTA,
            cap: crate::solver::search_cap(),
            jobs: 0,
            bisection: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub instance_id: String,
    pub variant: String,
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub guarantee: f64,
    pub eps: f64,
    pub method: String,
    #[serde(rename = "F_exact_opt")]
    pub f_exact_opt: f64,
    #[serde(rename = "F_returned")]
    pub f_returned: f64,
    pub gap_pct: f64,
    #[serde(rename = "K_total")]
    pub k_total: usize,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Default)]
pub struct BenchReport {
    /// Sorted by instance id, then guarantee, then method.
    pub rows: Vec<BenchRow>,
    /// Rows whose revenue falls below the certified fraction of the optimum.
    pub violations: Vec<String>,
}

impl BenchReport {
    pub fn to_csv(&self) -> Result<String> {
        bench_to_csv(&self.rows)
    }

    /// Mean gap over rows with the given guarantee and method.
    pub fn mean_gap(&self, guarantee: f64, method: &str) -> Option<f64> {
        let gaps: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| (r.guarantee - guarantee).abs() < 1e-12 && r.method == method)
            .map(|r| r.gap_pct)
            .collect();
        (!gaps.is_empty()).then(|| gaps.iter().sum::<f64>() / gaps.len() as f64)
    }
}

pub fn bench_to_csv(rows: &[BenchRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record([
            "instance_id",
            "variant",
            "m",
            "N",
            "guarantee",
            "eps",
            "method",
            "F_exact_opt",
            "F_returned",
            "gap_pct",
            "K_total",
            "wall_ms",
        ])
        .map_err(csv_err)?;
    }
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CnlError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_err(e: csv::Error) -> CnlError {
    CnlError::InvalidArgument(format!("csv: {e}"))
}

struct Run {
    method: &'static str,
    eps: f64,
    certified: f64,
    report: SolveReport,
    k_total: usize,
}

fn single_runs(
    inst: &Instance,
    cs: &ConstraintSet,
    g: f64,
    cfg: &BenchConfig,
) -> Result<Vec<Run>> {
    let mut runs = Vec::new();
    let eps = eps_for(g, false, cfg.delta)?;
    let lfp = build_lfp(inst, cs, eps)?;
    let report = solve_approx(inst, &lfp, cs, cfg.cap)?;
    runs.push(Run {
        method: "approx",
        eps,
        certified: report.guarantee,
        report,
        k_total: lfp.total_segments(),
    });
    if cfg.bisection {
        let eps = eps_for(g, true, cfg.delta)?;
        let lfp = build_lfp(inst, cs, eps)?;
        let report = bisection_solve(inst, &lfp, cs, cfg.delta, cfg.cap)?;
        runs.push(Run {
            method: "bisection",
            eps,
            certified: report.guarantee,
            report,
            k_total: lfp.total_segments(),
        });
    }
    Ok(runs)
}

fn bench_one(spec: &GenSpec, cfg: &BenchConfig) -> Result<(Vec<BenchRow>, Vec<String>)> {
    let id = spec.instance_id();
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    let mut record = |g: f64, best: f64, run: Run, rows: &mut Vec<BenchRow>| -> Result<()> {
        let f = run.report.objective_exact;
        if f < run.certified * best - CERT_TOL {
            violations.push(format!(
                "{id} g={g} {}: F = {f} below {} x {best}",
                run.method, run.certified
            ));
        }
        rows.push(BenchRow {
            instance_id: id.clone(),
            variant: spec.variant.label().into(),
            m: spec.m,
            n: spec.n,
            guarantee: g,
            eps: run.eps,
            method: run.method.into(),
            f_exact_opt: best,
            f_returned: f,
            gap_pct: gap_percent(best, f)?,
            k_total: run.k_total,
            wall_ms: run.report.wall_time_ms,
        });
        Ok(())
    };
    match spec.variant {
        GenVariant::Assort => {
            let (inst, cs) = generate_assortment(spec)?;
            let best = solve_exact(&inst, &cs, cfg.cap)?.objective_exact;
            for &g in &cfg.guarantees {
                for run in single_runs(&inst, &cs, g, cfg)? {
                    record(g, best, run, &mut rows)?;
                }
            }
        }
        GenVariant::Pricing { .. } => {
            let (pinst, cs) = generate_pricing(spec)?;
            let ext = pinst.extended();
            let lifted = cs.lift_to_levels(pinst.num_levels());
            let best = solve_exact(&ext, &lifted, cfg.cap)?.objective_exact;
            for &g in &cfg.guarantees {
                let eps = eps_for(g, false, cfg.delta)?;
                let problem = build_pricing_lfp(&pinst, &cs, eps)?;
                let report = solve_approx(&problem.instance, &problem.lfp, &problem.constraints, cfg.cap)?;
                record(
                    g,
                    best,
                    Run {
                        method: "approx",
                        eps,
                        certified: report.guarantee,
                        report,
                        k_total: problem.lfp.total_segments(),
                    },
                    &mut rows,
                )?;
                if cfg.bisection {
                    let eps = eps_for(g, true, cfg.delta)?;
                    let problem = build_pricing_lfp(&pinst, &cs, eps)?;
                    let report = bisection_solve(
                        &problem.instance,
                        &problem.lfp,
                        &problem.constraints,
                        cfg.delta,
                        cfg.cap,
                    )?;
                    record(
                        g,
                        best,
                        Run {
                            method: "bisection",
                            eps,
                            certified: report.guarantee,
                            report,
                            k_total: problem.lfp.total_segments(),
                        },
                        &mut rows,
                    )?;
                }
            }
        }
        GenVariant::Mixture { .. } => {
            let (minst, cs) = generate_mixture(spec)?;
            let best = solve_mixture_exact(&minst, &cs, cfg.cap)?.objective_exact;
            for &g in &cfg.guarantees {
                let eps = eps_for(g, false, cfg.delta)?;
                let mix = build_mixture_lfp(&minst, &cs, eps)?;
                let report = solve_mixture_approx(&minst, &mix, &cs, cfg.cap)?;
                let k_total = mix.types.iter().map(|t| t.total_segments()).sum();
                record(
                    g,
                    best,
                    Run {
                        method: "approx",
                        eps,
                        certified: report.guarantee,
                        report,
                        k_total,
                    },
                    &mut rows,
                )?;
            }
        }
    }
    Ok((rows, violations))
}

/// Solves every generated instance exactly and with each approximate
/// method at each target guarantee, recording gaps to the exact optimum
/// and any certificate violation.
pub fn bench_guarantees(batch: &[GenSpec], cfg: &BenchConfig) -> Result<BenchReport> {
    for &g in &cfg.guarantees {
        eps_for_guarantee(g)?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| CnlError::InvalidArgument(format!("thread pool: {e}")))?;
    let results: Vec<Result<(Vec<BenchRow>, Vec<String>)>> =
        pool.install(|| batch.par_iter().map(|spec| bench_one(spec, cfg)).collect());
    let mut report = BenchReport::default();
    for r in results {
        let (rows, violations) = r?;
        report.rows.extend(rows);
        report.violations.extend(violations);
    }
    report.rows.sort_by(|a, b| {
        a.instance_id
            .cmp(&b.instance_id)
            .then(a.guarantee.total_cmp(&b.guarantee))
            .then(a.method.cmp(&b.method))
    });
    report.violations.sort();
    Ok(report)
}

/// Segment counts over the `σ × U × ε` grid with `L = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1 {
    /// `counts[e][s * 3 + u]` for `TABLE1_EPS[e]`, `TABLE1_SIGMAS[s]`,
    /// `TABLE1_UPPERS[u]`.
    pub counts: Vec<Vec<usize>>,
}

impl Table1 {
    pub fn get(&self, sigma: usize, upper: usize, eps: usize) -> usize {
        self.counts[eps][sigma * TABLE1_UPPERS.len() + upper]
    }

    /// Aligned text, one row per ε and one column per `(σ, U)`.
    pub fn render(&self) -> String {
        let mut out = format!("{:>8}", "sigma");
        for s in TABLE1_SIGMAS {
            for _ in TABLE1_UPPERS {
                out.push_str(&format!("{s:>5}"));
            }
        }
        out.push_str(&format!("\n{:>8}", "U"));
        for _ in TABLE1_SIGMAS {
            for u in TABLE1_UPPERS {
                out.push_str(&format!("{u:>5}"));
            }
        }
        out.push('\n');
        for (e, eps) in TABLE1_EPS.iter().enumerate() {
            out.push_str(&format!("{eps:>8}"));
            for k in &self.counts[e] {
                out.push_str(&format!("{k:>5}"));
            }
            out.push('\n');
        }
        out
    }

    /// Long format: `sigma,U,eps,K`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["sigma", "U", "eps", "K"]).map_err(csv_err)?;
        for (e, eps) in TABLE1_EPS.iter().enumerate() {
            for (s, sigma) in TABLE1_SIGMAS.iter().enumerate() {
                for (u, upper) in TABLE1_UPPERS.iter().enumerate() {
                    w.write_record([
                        sigma.to_string(),
                        upper.to_string(),
                        eps.to_string(),
                        self.get(s, u, e).to_string(),
                    ])
                    .map_err(csv_err)?;
                }
            }
        }
        let bytes = w.into_inner().map_err(|e| CnlError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

pub fn reproduce_table1() -> Result<Table1> {
    let counts = TABLE1_EPS
        .iter()
        .map(|&eps| {
            let mut row = Vec::with_capacity(15);
            for &s in &TABLE1_SIGMAS {
                for &u in &TABLE1_UPPERS {
                    row.push(discretize_interval(s, 1.0, u, eps, None)?.num_segments());
                }
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    Ok(Table1 { counts })
}

/// Discretization summary for one nest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NestRow {
    pub nest: usize,
    pub sigma: f64,
    #[serde(rename = "L")]
    pub lower: f64,
    #[serde(rename = "U")]
    pub upper: f64,
    pub eps: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub lower_bound: usize,
    pub upper_bound: Option<usize>,
    pub breakpoints: Vec<f64>,
}

/// Per-nest weight range, segment count and segment-count bounds of an
/// approximation.
pub fn nest_table(lfp: &LfpCoefficients) -> Result<Vec<NestRow>> {
    lfp.approx()
        .iter()
        .enumerate()
        .map(|(n, pw)| {
            let kb = kn_bounds(pw.sigma(), pw.lower(), pw.upper(), lfp.eps())?;
            Ok(NestRow {
                nest: n + 1,
                sigma: pw.sigma(),
                lower: pw.lower(),
                upper: pw.upper(),
                eps: lfp.eps(),
                k: pw.num_segments(),
                lower_bound: kb.lower,
                upper_bound: kb.upper,
                breakpoints: pw.breakpoints().to_vec(),
            })
        })
        .collect()
}

/// The certified revenue fraction of a method at accuracy `eps`.
pub fn certified_fraction(eps: f64, general_sigma: bool, delta: Option<f64>) -> f64 {
    guarantee_factor(eps, general_sigma) * delta.map_or(1.0, |d| 1.0 - d)
}
