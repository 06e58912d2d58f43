use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cnl_assort::error::{CnlError, Result};
use cnl_assort::io::{InstanceFile, Problem};
use cnl_assort::lab::{
    bench_guarantees, eps_for, generate_assortment, generate_mixture, generate_pricing,
    nest_table, reproduce_table1, verify_instance, BenchConfig, GenSpec, GenVariant, NestRow,
};
use cnl_assort::reformulate::{
    build_anp_milp, build_assort_milp, build_feasibility_model, build_lfp, build_mixture_lfp,
    build_mixture_milp, build_pricing_lfp, emit_lp, MilpModel,
};
use cnl_assort::solver::{
    bisection_solve, search_cap, solve_approx, solve_exact, solve_external, solve_mixture_approx,
    solve_mixture_exact, Evaluation, SolveReport, DEFAULT_DELTA,
};

const EXIT_USAGE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_CAP: u8 = 3;

#[derive(Parser)]
#[command(name = "cnl-assort", version, about = "Assortment optimization under the cross-nested logit model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance file.
    Gen(GenArgs),
    /// Per-nest discretization table.
    Discretize(DiscretizeArgs),
    /// Write the MILP as an .lp file plus a metadata JSON sidecar.
    BuildMilp(BuildMilpArgs),
    /// Solve an instance.
    Solve(SolveArgs),
    /// Guarantee sweep over generated instances.
    Bench(BenchArgs),
    /// Segment counts on the reference discretization grid.
    Table1(Table1Args),
    /// Check model invariants on an instance.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Assort,
    Pricing,
    Mixture,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.75)]
    sigma_bar: f64,
    /// Mean number of nests per product.
    #[arg(long, default_value_t = 1.2)]
    gamma: f64,
    #[arg(long, value_enum, default_value = "assort")]
    variant: VariantArg,
    /// Price levels per product (pricing).
    #[arg(long, default_value_t = 3)]
    levels: usize,
    /// Customer types (mixture).
    #[arg(long, default_value_t = 2)]
    types: usize,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[group(id = "accuracy", multiple = false)]
struct Accuracy {
    /// Relative accuracy of the piecewise-linear approximation.
    #[arg(long, group = "accuracy")]
    eps: Option<f64>,
    /// Target revenue fraction g, mapped to an accuracy.
    #[arg(long, group = "accuracy")]
    guarantee: Option<f64>,
}

impl Accuracy {
    /// Explicit accuracy, or the one for the requested guarantee (90% by
    /// default) on the given solution path.
    fn resolve(&self, bisection: bool, delta: f64) -> Result<f64> {
        match (self.eps, self.guarantee) {
            (Some(e), _) => {
                if !(e > 0.0 && e < 1.0) {
                    return Err(CnlError::InvalidArgument(format!("eps = {e} outside (0, 1)")));
                }
                Ok(e)
            }
            (None, g) => eps_for(g.unwrap_or(0.90), bisection, delta),
        }
    }
}

#[derive(Args)]
struct DiscretizeArgs {
    instance: PathBuf,
    #[command(flatten)]
    accuracy: Accuracy,
    #[arg(long)]
    csv: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BuildMilpArgs {
    instance: PathBuf,
    #[command(flatten)]
    accuracy: Accuracy,
    /// Output prefix; writes `<out>.lp` and `<out>.meta.json`.
    #[arg(long)]
    out: PathBuf,
    /// Emit the bisection feasibility model at this ratio level instead.
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum MethodArg {
    Bruteforce,
    Approx,
    Bisection,
    External,
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, value_enum, default_value = "bruteforce")]
    method: MethodArg,
    /// Solver output for `--method external`, as `name value` lines.
    #[arg(long, required_if_eq("method", "external"))]
    solution: Option<PathBuf>,
    #[command(flatten)]
    accuracy: Accuracy,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    /// Largest number of binary decisions searched exhaustively.
    #[arg(long)]
    cap: Option<usize>,
    /// Print the full report as JSON.
    #[arg(long)]
    json: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Product counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "8,10,12")]
    m: Vec<usize>,
    /// Nest counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "2,3")]
    n: Vec<usize>,
    /// Instances per (m, N) pair.
    #[arg(long, default_value_t = 5)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.75)]
    sigma_bar: f64,
    #[arg(long, value_enum, default_value = "assort")]
    variant: VariantArg,
    #[arg(long, default_value_t = 2)]
    levels: usize,
    #[arg(long, default_value_t = 2)]
    types: usize,
    /// Target guarantees, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.90,0.95,0.99")]
    guarantees: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    #[arg(long)]
    cap: Option<usize>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Skip the bisection method.
    #[arg(long)]
    no_bisection: bool,
    #[arg(long)]
    csv: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Table1Args {
    #[arg(long)]
    csv: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    instance: PathBuf,
    #[command(flatten)]
    accuracy: Accuracy,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    cap: Option<usize>,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn variant(arg: VariantArg, levels: usize, types: usize) -> GenVariant {
    match arg {
        VariantArg::Assort => GenVariant::Assort,
        VariantArg::Pricing => GenVariant::Pricing { levels },
        VariantArg::Mixture => GenVariant::Mixture { types },
    }
}

fn generate(spec: &GenSpec) -> Result<InstanceFile> {
    match spec.variant {
        GenVariant::Assort => {
            let (i, cs) = generate_assortment(spec)?;
            InstanceFile::new(Problem::Assort(i), cs)
        }
        GenVariant::Pricing { .. } => {
            let (i, cs) = generate_pricing(spec)?;
            InstanceFile::new(Problem::Pricing(i), cs)
        }
        GenVariant::Mixture { .. } => {
            let (i, cs) = generate_mixture(spec)?;
            InstanceFile::new(Problem::Mixture(i), cs)
        }
    }
}

fn gen(a: GenArgs) -> Result<()> {
    let spec = GenSpec {
        seed: a.seed,
        m: a.m,
        n: a.n,
        sigma_bar: a.sigma_bar,
        gamma: a.gamma,
        variant: variant(a.variant, a.levels, a.types),
    };
    emit(a.out.as_deref(), &generate(&spec)?.to_json())
}

fn nest_rows_text(rows: &[(Option<usize>, NestRow)], csv: bool) -> String {
    let mut out = String::new();
    let typed = rows.iter().any(|(t, _)| t.is_some());
    let sep = if csv { "," } else { " " };
    let mut header = vec!["nest", "sigma", "L", "U", "eps", "K", "lower_bound", "upper_bound", "breakpoints"];
    if typed {
        header.insert(0, "type");
    }
    if csv {
        out.push_str(&header.join(","));
    } else {
        let widths = [4, 10, 12, 12, 8, 4, 11, 11, 0];
        let mut cols = Vec::new();
        if typed {
            cols.push(format!("{:>4}", "type"));
        }
        for (h, w) in header.iter().skip(typed as usize).zip(widths) {
            cols.push(format!("{h:>w$}"));
        }
        out.push_str(cols.join(" ").trim_end());
    }
    out.push('\n');
    for (t, r) in rows {
        let upper = r.upper_bound.map_or("-".to_string(), |u| u.to_string());
        let bps: Vec<String> = r.breakpoints.iter().map(|b| format!("{b}")).collect();
        let bps = bps.join(if csv { ";" } else { " " });
        let mut cols = Vec::new();
        if let Some(t) = t {
            cols.push(if csv { t.to_string() } else { format!("{t:>4}") });
        }
        if csv {
            cols.extend([
                r.nest.to_string(),
                r.sigma.to_string(),
                r.lower.to_string(),
                r.upper.to_string(),
                r.eps.to_string(),
                r.k.to_string(),
                r.lower_bound.to_string(),
                upper,
                bps,
            ]);
        } else {
            cols.extend([
                format!("{:>4}", r.nest),
                format!("{:>10.6}", r.sigma),
                format!("{:>12.6}", r.lower),
                format!("{:>12.6}", r.upper),
                format!("{:>8}", r.eps),
                format!("{:>4}", r.k),
                format!("{:>11}", r.lower_bound),
                format!("{upper:>11}"),
                bps,
            ]);
        }
        out.push_str(&cols.join(sep));
        out.push('\n');
    }
    out
}

fn discretize(a: DiscretizeArgs) -> Result<()> {
    let file = InstanceFile::load(&a.instance)?;
    let eps = a.accuracy.resolve(false, DEFAULT_DELTA)?;
    let mut rows = Vec::new();
    match &file.problem {
        Problem::Assort(i) => {
            for r in nest_table(&build_lfp(i, &file.constraints, eps)?)? {
                rows.push((None, r));
            }
        }
        Problem::Pricing(i) => {
            for r in nest_table(&build_pricing_lfp(i, &file.constraints, eps)?.lfp)? {
                rows.push((None, r));
            }
        }
        Problem::Mixture(i) => {
            let mix = build_mixture_lfp(i, &file.constraints, eps)?;
            for (t, lfp) in mix.types.iter().enumerate() {
                for r in nest_table(lfp)? {
                    rows.push((Some(t + 1), r));
                }
            }
        }
    }
    emit(a.out.as_deref(), &nest_rows_text(&rows, a.csv))
}

fn build_milp(a: BuildMilpArgs) -> Result<()> {
    let file = InstanceFile::load(&a.instance)?;
    let eps = a.accuracy.resolve(a.lambda.is_some(), DEFAULT_DELTA)?;
    let model: MilpModel = match (&file.problem, a.lambda) {
        (Problem::Assort(i), None) => build_assort_milp(&build_lfp(i, &file.constraints, eps)?, &file.constraints)?,
        (Problem::Assort(i), Some(l)) => {
            build_feasibility_model(&build_lfp(i, &file.constraints, eps)?, &file.constraints, l)?
        }
        (Problem::Pricing(i), None) => build_anp_milp(&build_pricing_lfp(i, &file.constraints, eps)?)?,
        (Problem::Pricing(i), Some(l)) => {
            let p = build_pricing_lfp(i, &file.constraints, eps)?;
            build_feasibility_model(&p.lfp, &p.constraints, l)?
        }
        (Problem::Mixture(i), None) => {
            build_mixture_milp(&build_mixture_lfp(i, &file.constraints, eps)?, &file.constraints)?
        }
        (Problem::Mixture(_), Some(_)) => {
            return Err(CnlError::InvalidArgument(
                "the feasibility model is defined for single-type instances only".into(),
            ))
        }
    };
    let lp = a.out.with_extension("lp");
    let meta = a.out.with_extension("meta.json");
    std::fs::write(&lp, emit_lp(&model))?;
    let mut json = serde_json::to_string_pretty(&model.metadata())?;
    json.push('\n');
    std::fs::write(&meta, json)?;
    let c = model.metadata().counts;
    println!(
        "wrote {} and {} ({} variables, {} binaries, {} constraints)",
        lp.display(),
        meta.display(),
        c.vars,
        c.binaries,
        c.constraints
    );
    Ok(())
}

/// Ten decimals with trailing zeros dropped, keeping one.
fn revenue(v: f64) -> String {
    let s = format!("{v:.10}");
    let s = s.trim_end_matches('0');
    if s.ends_with('.') {
        format!("{s}0")
    } else {
        s.to_string()
    }
}

fn summary(r: &SolveReport) -> String {
    let mut out = String::new();
    writeln!(out, "method     {}", r.method.label()).unwrap();
    writeln!(out, "objective  {}", revenue(r.objective_exact)).unwrap();
    if let Some(a) = r.objective_approx {
        writeln!(out, "approx     {}", revenue(a)).unwrap();
        writeln!(out, "guarantee  {:.6}", r.guarantee).unwrap();
    }
    match r.price_selection() {
        Some(sel) => {
            let s: Vec<String> = sel.iter().map(|(i, l)| format!("{}@{}", i + 1, l + 1)).collect();
            writeln!(out, "offer      {}", s.join(" ")).unwrap();
        }
        None => {
            let s: Vec<String> = r
                .best_x
                .iter()
                .enumerate()
                .filter(|(_, &o)| o)
                .map(|(i, _)| (i + 1).to_string())
                .collect();
            writeln!(out, "offer      {{{}}}", s.join(", ")).unwrap();
        }
    }
    if r.iterations > 0 {
        writeln!(out, "iterations {}", r.iterations).unwrap();
    }
    if let Some(rep) = r.reported_objective {
        writeln!(out, "reported   {rep}{}", if r.objective_mismatch { " (mismatch)" } else { "" }).unwrap();
    }
    writeln!(out, "nodes      {}", r.node_count).unwrap();
    writeln!(out, "wall_ms    {:.3}", r.wall_time_ms).unwrap();
    out
}

fn solve(a: SolveArgs) -> Result<()> {
    let file = InstanceFile::load(&a.instance)?;
    let cap = a.cap.unwrap_or_else(search_cap);
    let cs = &file.constraints;
    let eps = || a.accuracy.resolve(a.method == MethodArg::Bisection, a.delta);
    let solution = || -> Result<String> {
        let path = a.solution.as_ref().expect("clap requires --solution");
        Ok(std::fs::read_to_string(path)?)
    };
    let report = match (&file.problem, a.method) {
        (Problem::Assort(i), MethodArg::Bruteforce) => solve_exact(i, cs, cap)?,
        (Problem::Assort(i), MethodArg::Approx) => solve_approx(i, &build_lfp(i, cs, eps()?)?, cs, cap)?,
        (Problem::Assort(i), MethodArg::Bisection) => {
            bisection_solve(i, &build_lfp(i, cs, eps()?)?, cs, a.delta, cap)?
        }
        (Problem::Assort(i), MethodArg::External) => {
            let lfp = build_lfp(i, cs, eps()?)?;
            let model = build_assort_milp(&lfp, cs)?;
            let eval = Evaluation::Single {
                instance: i,
                lfp: &lfp,
                constraints: cs,
            };
            solve_external(&model, eval, &solution()?)?
        }
        (Problem::Pricing(i), MethodArg::Bruteforce) => {
            solve_exact(&i.extended(), &cs.lift_to_levels(i.num_levels()), cap)?.with_levels(i.num_levels())
        }
        (Problem::Pricing(i), m) => {
            let p = build_pricing_lfp(i, cs, eps()?)?;
            let r = match m {
                MethodArg::Approx => solve_approx(&p.instance, &p.lfp, &p.constraints, cap)?,
                MethodArg::Bisection => bisection_solve(&p.instance, &p.lfp, &p.constraints, a.delta, cap)?,
                _ => {
                    let model = build_anp_milp(&p)?;
                    let eval = Evaluation::Single {
                        instance: &p.instance,
                        lfp: &p.lfp,
                        constraints: &p.constraints,
                    };
                    solve_external(&model, eval, &solution()?)?
                }
            };
            r.with_levels(p.levels)
        }
        (Problem::Mixture(i), MethodArg::Bruteforce) => solve_mixture_exact(i, cs, cap)?,
        (Problem::Mixture(i), MethodArg::Approx) => {
            solve_mixture_approx(i, &build_mixture_lfp(i, cs, eps()?)?, cs, cap)?
        }
        (Problem::Mixture(_), MethodArg::Bisection) => {
            return Err(CnlError::InvalidArgument(
                "bisection applies to single-type instances; use approx or external".into(),
            ))
        }
        (Problem::Mixture(i), MethodArg::External) => {
            let mix = build_mixture_lfp(i, cs, eps()?)?;
            let model = build_mixture_milp(&mix, cs)?;
            let eval = Evaluation::Mixture {
                instance: i,
                lfp: &mix,
                constraints: cs,
            };
            solve_external(&model, eval, &solution()?)?
        }
    };
    let text = if a.json {
        let mut s = serde_json::to_string_pretty(&report)?;
        s.push('\n');
        s
    } else {
        summary(&report)
    };
    emit(a.out.as_deref(), &text)
}

fn bench(a: BenchArgs) -> Result<()> {
    let mut batch = Vec::new();
    for &m in &a.m {
        for &n in &a.n {
            for k in 0..a.count as u64 {
                batch.push(GenSpec {
                    seed: a.seed.wrapping_add(k),
                    m,
                    n,
                    sigma_bar: a.sigma_bar,
                    gamma: 1.2,
                    variant: variant(a.variant, a.levels, a.types),
                });
            }
        }
    }
    let cfg = BenchConfig {
        guarantees: a.guarantees.clone(),
        delta: a.delta,
        cap: a.cap.unwrap_or_else(search_cap),
        jobs: a.jobs,
        bisection: !a.no_bisection,
    };
    let report = bench_guarantees(&batch, &cfg)?;
    let text = if a.csv {
        report.to_csv()?
    } else {
        let mut out = format!("{:>10} {:>10} {:>8} {:>10} {:>10} {:>6}\n", "guarantee", "method", "eps", "mean_gap%", "max_gap%", "rows");
        let mut keys: Vec<(f64, String)> = Vec::new();
        for r in &report.rows {
            if !keys.iter().any(|(g, m)| *g == r.guarantee && *m == r.method) {
                keys.push((r.guarantee, r.method.clone()));
            }
        }
        keys.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        for (g, m) in keys {
            let sel: Vec<_> = report.rows.iter().filter(|r| r.guarantee == g && r.method == m).collect();
            let max = sel.iter().map(|r| r.gap_pct).fold(0.0, f64::max);
            writeln!(
                out,
                "{g:>10} {m:>10} {:>8} {:>10.4} {max:>10.4} {:>6}",
                sel[0].eps,
                report.mean_gap(g, &m).unwrap_or(0.0),
                sel.len()
            )
            .unwrap();
        }
        writeln!(out, "certificate violations: {}", report.violations.len()).unwrap();
        for v in &report.violations {
            writeln!(out, "  {v}").unwrap();
        }
        out
    };
    emit(a.out.as_deref(), &text)?;
    if report.violations.is_empty() {
        Ok(())
    } else {
        Err(CnlError::InvalidInstance(format!(
            "{} guarantee certificate violations",
            report.violations.len()
        )))
    }
}

fn table1(a: Table1Args) -> Result<()> {
    let t = reproduce_table1()?;
    let text = if a.csv { t.to_csv()? } else { t.render() };
    emit(a.out.as_deref(), &text)
}

fn verify(a: VerifyArgs) -> Result<()> {
    let file = InstanceFile::load(&a.instance)?;
    let eps = a.accuracy.resolve(false, DEFAULT_DELTA)?;
    let cap = a.cap.unwrap_or_else(search_cap);
    let mut failed = false;
    let mut run = |label: Option<String>, inst: &cnl_assort::Instance, cs: &cnl_assort::ConstraintSet| -> Result<()> {
        let report = verify_instance(inst, cs, eps, cap, a.seed)?;
        if let Some(l) = label {
            println!("{l}");
        }
        print!("{}", report.render());
        failed |= !report.passed();
        Ok(())
    };
    match &file.problem {
        Problem::Assort(i) => run(None, i, &file.constraints)?,
        Problem::Pricing(i) => {
            let p = build_pricing_lfp(i, &file.constraints, eps)?;
            run(None, &p.instance, &p.constraints)?
        }
        Problem::Mixture(i) => {
            for (t, inst) in i.type_instances().iter().enumerate() {
                run(Some(format!("type {}", t + 1)), inst, &file.constraints)?;
            }
        }
    }
    if failed {
        Err(CnlError::InvalidInstance("invariant checks failed".into()))
    } else {
        Ok(())
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(a) => gen(a),
        Command::Discretize(a) => discretize(a),
        Command::BuildMilp(a) => build_milp(a),
        Command::Solve(a) => solve(a),
        Command::Bench(a) => bench(a),
        Command::Table1(a) => table1(a),
        Command::Verify(a) => verify(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CnlError::CapExceeded { .. } => ExitCode::from(EXIT_CAP),
                _ => ExitCode::from(EXIT_INPUT),
            }
        }
    }
}
