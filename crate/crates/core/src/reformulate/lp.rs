//! LP-format text for [`MilpModel`]s.

use std::collections::HashMap;
use std::fmt::Write;

use super::milp::{Constraint, MilpModel, Sense, VarKind, Variable};
use crate::error::{CnlError, Result};

const TERMS_PER_LINE: usize = 6;

/// 17 significant digits, enough to read back the same `f64`.
fn num(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:.16e}")
    }
}

fn write_terms(out: &mut String, terms: &[(usize, f64)], vars: &[Variable]) {
    for (j, &(var, a)) in terms.iter().enumerate() {
        if j > 0 && j % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let name = &vars[var].name;
        match (j, a < 0.0) {
            (0, false) => write!(out, " {} {name}", num(a)),
            (0, true) => write!(out, " - {} {name}", num(-a)),
            (_, false) => write!(out, " + {} {name}", num(a)),
            (_, true) => write!(out, " - {} {name}", num(-a)),
        }
        .unwrap();
    }
}

/// Deterministic LP text: sections `Maximize`, `Subject To`, `Bounds`,
/// `Binaries`, `End`. Every variable gets a bounds line, in declaration
/// order, so reading the text back restores that order.
pub fn emit_lp(model: &MilpModel) -> String {
    let vars = model.variables();
    let mut out = String::from("Maximize\n obj:");
    if model.objective().is_empty() {
        out.push_str(" 0");
    } else {
        write_terms(&mut out, model.objective(), vars);
    }
    out.push_str("\nSubject To\n");
    for row in model.constraints() {
        write!(out, " {}:", row.name).unwrap();
        if row.terms.is_empty() {
            out.push_str(" 0");
        } else {
            write_terms(&mut out, &row.terms, vars);
        }
        writeln!(out, " {} {}", row.sense.symbol(), num(row.rhs)).unwrap();
    }
    out.push_str("Bounds\n");
    for v in vars {
        if v.lower == v.upper {
            writeln!(out, " {} = {}", v.name, num(v.lower)).unwrap();
        } else {
            writeln!(out, " {} <= {} <= {}", num(v.lower), v.name, num(v.upper)).unwrap();
        }
    }
    let binaries: Vec<&str> = vars
        .iter()
        .filter(|v| v.kind == VarKind::Binary)
        .map(|v| v.name.as_str())
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for chunk in binaries.chunks(10) {
            writeln!(out, " {}", chunk.join(" ")).unwrap();
        }
    }
    out.push_str("End\n");
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Objective,
    Rows,
    Bounds,
    Binaries,
}

fn parse_num(tok: &str) -> Option<f64> {
    match tok {
        "+inf" | "inf" | "+infinity" | "infinity" => Some(f64::INFINITY),
        "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
        _ => tok.parse().ok(),
    }
}

fn parse_sense(tok: &str) -> Option<Sense> {
    match tok {
        "<=" | "=<" | "<" => Some(Sense::Le),
        ">=" | "=>" | ">" => Some(Sense::Ge),
        "=" => Some(Sense::Eq),
        _ => None,
    }
}

struct Builder {
    vars: Vec<Variable>,
    index: HashMap<String, usize>,
}

impl Builder {
    fn var(&mut self, name: &str) -> usize {
        if let Some(&j) = self.index.get(name) {
            return j;
        }
        let j = self.vars.len();
        self.index.insert(name.to_string(), j);
        self.vars.push(Variable {
            name: name.to_string(),
            kind: VarKind::Continuous,
            lower: 0.0,
            upper: f64::INFINITY,
        });
        j
    }

    /// Parses `[±] coef name ...` up to an optional sense and right-hand side.
    fn linear(&mut self, tokens: &[&str]) -> Result<(Vec<(usize, f64)>, Option<(Sense, f64)>)> {
        let mut terms = Vec::new();
        let mut sign = 1.0;
        let mut coef: Option<f64> = None;
        let mut j = 0;
        while j < tokens.len() {
            let tok = tokens[j];
            if let Some(sense) = parse_sense(tok) {
                let rhs = tokens
                    .get(j + 1)
                    .and_then(|t| parse_num(t))
                    .ok_or_else(|| CnlError::Parse(format!("missing right-hand side after {tok}")))?;
                return Ok((terms, Some((sense, rhs))));
            }
            match tok {
                "+" => sign = 1.0,
                "-" => sign = -sign,
                _ => {
                    if let Some(v) = parse_num(tok) {
                        coef = Some(v);
                    } else {
                        let var = self.var(tok);
                        terms.push((var, sign * coef.take().unwrap_or(1.0)));
                        sign = 1.0;
                    }
                }
            }
            j += 1;
        }
        Ok((terms, None))
    }
}

fn bound(b: &mut Builder, stmt: &str) -> Result<()> {
    let bad = || CnlError::Parse(format!("bad bound {stmt}"));
    let tokens: Vec<&str> = stmt.split_whitespace().collect();
    match tokens.as_slice() {
        [lo, "<=", name, "<=", hi] => {
            let j = b.var(name);
            b.vars[j].lower = parse_num(lo).ok_or_else(bad)?;
            b.vars[j].upper = parse_num(hi).ok_or_else(bad)?;
        }
        [name, "=", v] => {
            let j = b.var(name);
            let v = parse_num(v).ok_or_else(bad)?;
            b.vars[j].lower = v;
            b.vars[j].upper = v;
        }
        [name, ">=", v] => {
            let j = b.var(name);
            b.vars[j].lower = parse_num(v).ok_or_else(bad)?;
        }
        [name, "<=", v] => {
            let j = b.var(name);
            b.vars[j].upper = parse_num(v).ok_or_else(bad)?;
        }
        _ => return Err(CnlError::Parse(format!("unsupported bound: {stmt}"))),
    }
    Ok(())
}

/// Reads LP text in the subset [`emit_lp`] writes. Variables named in the
/// `Bounds` section are declared first, in that order, then any others in
/// order of first appearance.
pub fn parse_lp(text: &str) -> Result<MilpModel> {
    let mut b = Builder {
        vars: Vec::new(),
        index: HashMap::new(),
    };
    let mut objective = Vec::new();
    let mut constraints = Vec::new();
    let mut section = None;
    let mut statements: Vec<(Section, String)> = Vec::new();
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('\\') {
            continue;
        }
        match trimmed.to_ascii_lowercase().as_str() {
            "maximize" | "max" => {
                section = Some(Section::Objective);
                continue;
            }
            "minimize" | "min" => {
                return Err(CnlError::Parse("only maximization models are supported".into()));
            }
            "subject to" | "st" | "s.t." => {
                section = Some(Section::Rows);
                continue;
            }
            "bounds" => {
                section = Some(Section::Bounds);
                continue;
            }
            "binaries" | "binary" => {
                section = Some(Section::Binaries);
                continue;
            }
            "end" => break,
            _ => {}
        }
        let sec = section.ok_or_else(|| CnlError::Parse(format!("text before any section: {trimmed}")))?;
        let starts_new = match sec {
            Section::Objective | Section::Rows => trimmed.contains(':'),
            Section::Bounds | Section::Binaries => true,
        };
        match statements.last_mut() {
            Some((s, stmt)) if !starts_new && *s == sec => {
                stmt.push(' ');
                stmt.push_str(trimmed);
            }
            _ => statements.push((sec, trimmed.to_string())),
        }
    }

    let mut binaries = Vec::new();
    for (sec, stmt) in &statements {
        if *sec == Section::Bounds {
            bound(&mut b, stmt)?;
        }
    }
    for (sec, stmt) in statements {
        match sec {
            Section::Objective | Section::Rows => {
                let (name, body) = stmt
                    .split_once(':')
                    .ok_or_else(|| CnlError::Parse(format!("unnamed statement: {stmt}")))?;
                let tokens: Vec<&str> = body.split_whitespace().collect();
                let (terms, rel) = b.linear(&tokens)?;
                if sec == Section::Objective {
                    objective = terms;
                } else {
                    let (sense, rhs) =
                        rel.ok_or_else(|| CnlError::Parse(format!("row {name} has no sense")))?;
                    constraints.push(Constraint {
                        name: name.trim().to_string(),
                        terms,
                        sense,
                        rhs,
                    });
                }
            }
            Section::Bounds => {}
            Section::Binaries => binaries.extend(stmt.split_whitespace().map(str::to_string)),
        }
    }
    for name in binaries {
        let j = b.var(&name);
        b.vars[j].kind = VarKind::Binary;
        b.vars[j].lower = 0.0;
        b.vars[j].upper = 1.0;
    }
    Ok(MilpModel::from_parts(b.vars, constraints, objective))
}
