//! Solver-independent MILP models and the Charnes-Cooper + Glover
//! reformulations of the approximate problem.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{LfpCoefficients, MixtureLfp, PricingProblem};
use crate::constraints::{ConstraintSet, RowTag};
use crate::error::{CnlError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    /// `(variable index, coefficient)` in insertion order.
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Variant {
    Assort,
    Anp { levels: usize },
    Mixture { types: usize },
    Feasibility { lambda: f64 },
    /// A model read back from LP text.
    Parsed,
}

impl Variant {
    pub fn label(&self) -> &'static str {
        match self {
            Variant::Assort => "assort",
            Variant::Anp { .. } => "anp",
            Variant::Mixture { .. } => "mixture",
            Variant::Feasibility { .. } => "feasibility",
            Variant::Parsed => "parsed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCounts {
    pub vars: usize,
    pub binaries: usize,
    pub constraints: usize,
}

/// Sidecar describing an emitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub variant: Variant,
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    /// Segment counts per nest; one list per customer type for mixtures.
    #[serde(rename = "K")]
    pub k: Vec<Vec<usize>>,
    pub eps: f64,
    pub counts: ModelCounts,
}

/// Maximization MILP with named variables.
#[derive(Debug, Clone)]
pub struct MilpModel {
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective: Vec<(usize, f64)>,
    variant: Variant,
    index: HashMap<String, usize>,
    decisions: Vec<usize>,
    m: usize,
    n: usize,
    k: Vec<Vec<usize>>,
    eps: f64,
}

impl MilpModel {
    pub fn new(variant: Variant) -> Self {
        MilpModel {
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: Vec::new(),
            variant,
            index: HashMap::new(),
            decisions: Vec::new(),
            m: 0,
            n: 0,
            k: Vec::new(),
            eps: 0.0,
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, lower: f64, upper: f64) -> Result<usize> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(CnlError::InvalidArgument(format!("duplicate variable {name}")));
        }
        let (lower, upper) = match kind {
            VarKind::Binary => (0.0, 1.0),
            VarKind::Continuous => (lower, upper),
        };
        if lower > upper {
            return Err(CnlError::InvalidArgument(format!(
                "variable {name}: bounds [{lower}, {upper}] are empty"
            )));
        }
        let id = self.variables.len();
        self.index.insert(name.clone(), id);
        self.variables.push(Variable {
            name,
            kind,
            lower,
            upper,
        });
        Ok(id)
    }

    /// Adds a row; zero coefficients are dropped.
    pub fn add_constraint(&mut self, name: impl Into<String>, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        let terms = terms.into_iter().filter(|&(_, a)| a != 0.0).collect();
        self.constraints.push(Constraint {
            name: name.into(),
            terms,
            sense,
            rhs,
        });
    }

    pub fn add_objective_term(&mut self, var: usize, coeff: f64) {
        if coeff != 0.0 {
            self.objective.push((var, coeff));
        }
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[(usize, f64)] {
        &self.objective
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// The assortment (or price-selection) binaries, in product order.
    pub fn decision_vars(&self) -> &[usize] {
        &self.decisions
    }

    pub fn num_binaries(&self) -> usize {
        self.variables
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .count()
    }

    pub fn metadata(&self) -> ModelMetadata {
        ModelMetadata {
            variant: self.variant,
            m: self.m,
            n: self.n,
            k: self.k.clone(),
            eps: self.eps,
            counts: ModelCounts {
                vars: self.variables.len(),
                binaries: self.num_binaries(),
                constraints: self.constraints.len(),
            },
        }
    }

    pub(crate) fn set_shape(&mut self, m: usize, n: usize, k: Vec<Vec<usize>>, eps: f64) {
        self.m = m;
        self.n = n;
        self.k = k;
        self.eps = eps;
    }

    pub(crate) fn set_decisions(&mut self, decisions: Vec<usize>) {
        self.decisions = decisions;
    }

    /// Orders named values by declaration; every variable must be present.
    pub fn point_from_map(&self, values: &HashMap<String, f64>) -> Result<Vec<f64>> {
        self.variables
            .iter()
            .map(|v| {
                values
                    .get(&v.name)
                    .copied()
                    .ok_or_else(|| CnlError::Parse(format!("no value for variable {}", v.name)))
            })
            .collect()
    }

    pub fn objective_value(&self, point: &[f64]) -> f64 {
        self.objective.iter().map(|&(j, a)| a * point[j]).sum()
    }

    /// Checks bounds, integrality and every row at `point`. Row violations
    /// are measured relative to the row's magnitude.
    pub fn check_point(&self, point: &[f64], tol: f64) -> std::result::Result<(), String> {
        if point.len() != self.variables.len() {
            return Err(format!(
                "point has {} entries, model has {} variables",
                point.len(),
                self.variables.len()
            ));
        }
        for (v, &val) in self.variables.iter().zip(point) {
            if val < v.lower - tol || val > v.upper + tol {
                return Err(format!(
                    "{} = {val} outside [{}, {}]",
                    v.name, v.lower, v.upper
                ));
            }
            if v.kind == VarKind::Binary && (val - val.round()).abs() > tol {
                return Err(format!("{} = {val} is not integral", v.name));
            }
        }
        for row in &self.constraints {
            let mut lhs = 0.0;
            let mut scale = row.rhs.abs().max(1.0);
            for &(j, a) in &row.terms {
                lhs += a * point[j];
                scale = scale.max((a * point[j]).abs());
            }
            let gap = lhs - row.rhs;
            let ok = match row.sense {
                Sense::Le => gap <= tol * scale,
                Sense::Ge => gap >= -tol * scale,
                Sense::Eq => gap.abs() <= tol * scale,
            };
            if !ok {
                return Err(format!(
                    "row {}: {lhs} {} {} violated",
                    row.name,
                    row.sense.symbol(),
                    row.rhs
                ));
            }
        }
        Ok(())
    }

    pub(crate) fn from_parts(
        variables: Vec<Variable>,
        constraints: Vec<Constraint>,
        objective: Vec<(usize, f64)>,
    ) -> Self {
        let index = variables
            .iter()
            .enumerate()
            .map(|(i, v)| (v.name.clone(), i))
            .collect();
        MilpModel {
            variables,
            constraints,
            objective,
            variant: Variant::Parsed,
            index,
            decisions: Vec::new(),
            m: 0,
            n: 0,
            k: Vec::new(),
            eps: 0.0,
        }
    }
}

/// Name fragment for product `i` (`"3"`) or pair `(i, l)` (`"3_2"`), 1-based.
fn product_labels(m: usize, levels: Option<usize>) -> Vec<String> {
    match levels {
        None => (1..=m).map(|i| i.to_string()).collect(),
        Some(levels) => (0..m * levels)
            .map(|j| format!("{}_{}", j / levels + 1, j % levels + 1))
            .collect(),
    }
}

fn constraint_rows(model: &mut MilpModel, cs: &ConstraintSet, x: &[usize]) {
    let mut custom = 0;
    let mut one_price = 0;
    for row in cs.rows() {
        let name = if row.tag == RowTag::OnePrice {
            one_price += 1;
            format!("one_{one_price}")
        } else {
            custom += 1;
            format!("a_{custom}")
        };
        let terms = row.coeffs.iter().zip(x).map(|(&a, &j)| (j, a)).collect();
        model.add_constraint(name, terms, Sense::Le, row.rhs);
    }
}


/// `base`, `base_t`, `base_rest` or `base_t_rest`.
fn tagged(base: &str, t: Option<usize>, rest: &str) -> String {
    match (t, rest.is_empty()) {
        (None, true) => base.to_string(),
        (None, false) => format!("{base}_{rest}"),
        (Some(t), true) => format!("{base}_{t}"),
        (Some(t), false) => format!("{base}_{t}_{rest}"),
    }
}

/// Adds `w`, the linearized products and every row of one ratio, scaled
/// so that the ratio's denominator times `w` equals `theta`.
fn charnes_cooper_block(
    model: &mut MilpModel,
    lfp: &LfpCoefficients,
    x: &[usize],
    labels: &[String],
    t: Option<usize>,
    theta: f64,
) -> Result<()> {
    let uw = theta / lfp.c();
    let lw = theta / lfp.max_denominator();
    let ks = lfp.segment_counts();
    let cont = VarKind::Continuous;
    let w = model.add_var(tagged("w", t, ""), cont, lw, uw)?;

    let nk = |n: usize, k: usize| format!("{}_{}", n + 1, k + 1);
    let mut y = Vec::new();
    for (n, &k_n) in ks.iter().enumerate() {
        let mut row = Vec::with_capacity(k_n);
        for k in 0..k_n {
            row.push(model.add_var(tagged("y", t, &nk(n, k)), VarKind::Binary, 0.0, 1.0)?);
        }
        y.push(row);
    }
    let mut wy = Vec::new();
    for (n, &k_n) in ks.iter().enumerate() {
        let mut row = Vec::with_capacity(k_n);
        for k in 0..k_n {
            row.push(model.add_var(tagged("wy", t, &nk(n, k)), cont, 0.0, uw)?);
        }
        wy.push(row);
    }
    let mut wz = Vec::new();
    for (n, &k_n) in ks.iter().enumerate() {
        let mut row = Vec::with_capacity(k_n);
        for k in 0..k_n {
            row.push(model.add_var(tagged("wz", t, &nk(n, k)), cont, 0.0, uw)?);
        }
        wz.push(row);
    }
    let mut wx = Vec::with_capacity(x.len());
    for label in labels {
        wx.push(model.add_var(tagged("wx", t, label), cont, 0.0, uw)?);
    }
    let mut ws = Vec::with_capacity(x.len());
    for label in labels {
        let mut per_nest = Vec::with_capacity(ks.len());
        for (n, &k_n) in ks.iter().enumerate() {
            let mut row = Vec::with_capacity(k_n);
            for k in 0..k_n {
                let name = tagged("ws", t, &format!("{label}_{}", nk(n, k)));
                row.push(model.add_var(name, cont, 0.0, uw)?);
            }
            per_nest.push(row);
        }
        ws.push(per_nest);
    }

    for i in 0..x.len() {
        model.add_objective_term(wx[i], lfp.a()[i].iter().sum());
        for n in 0..ks.len() {
            for k in 0..ks[n] {
                model.add_objective_term(ws[i][n][k], lfp.b()[i][n][k]);
            }
        }
    }

    let mut norm = vec![(w, lfp.c())];
    for n in 0..ks.len() {
        for k in 0..ks[n] {
            norm.push((wz[n][k], lfp.d()[n][k]));
        }
    }
    model.add_constraint(tagged("norm", t, ""), norm, Sense::Eq, theta);

    let bounds = lfp.bounds();
    for n in 0..ks.len() {
        let pw = &lfp.approx()[n];
        let mut terms: Vec<(usize, f64)> = (0..x.len()).map(|i| (wx[i], lfp.loads()[i][n])).collect();
        terms.push((w, -(bounds.lower[n] - lfp.no_purchase()[n])));
        for k in 0..ks[n] {
            terms.push((wz[n][k], -pw.lengths()[k]));
        }
        model.add_constraint(tagged("bal", t, &(n + 1).to_string()), terms, Sense::Eq, 0.0);
    }

    for n in 0..ks.len() {
        for k in 0..ks[n] {
            if k + 1 < ks[n] {
                model.add_constraint(
                    tagged("ord", t, &nk(n, k)),
                    vec![(wy[n][k + 1], 1.0), (wy[n][k], -1.0)],
                    Sense::Le,
                    0.0,
                );
                model.add_constraint(
                    tagged("fill", t, &nk(n, k)),
                    vec![(wz[n][k + 1], 1.0), (wy[n][k], -1.0)],
                    Sense::Le,
                    0.0,
                );
            }
            model.add_constraint(
                tagged("yz", t, &nk(n, k)),
                vec![(wy[n][k], 1.0), (wz[n][k], -1.0)],
                Sense::Le,
                0.0,
            );
        }
    }

    for (i, label) in labels.iter().enumerate() {
        for n in 0..ks.len() {
            for k in 0..ks[n] {
                let rest = format!("{label}_{}", nk(n, k));
                let s = ws[i][n][k];
                model.add_constraint(tagged("s1", t, &rest), vec![(s, 1.0), (wx[i], -1.0)], Sense::Le, 0.0);
                model.add_constraint(tagged("s2", t, &rest), vec![(s, 1.0), (wz[n][k], -1.0)], Sense::Le, 0.0);
                model.add_constraint(
                    tagged("s3", t, &rest),
                    vec![(s, 1.0), (wx[i], -1.0), (wz[n][k], -1.0), (w, 1.0)],
                    Sense::Ge,
                    0.0,
                );
            }
        }
    }

    let glover = |model: &mut MilpModel, rest: &str, prod: usize, bin: usize, kind: &str| {
        model.add_constraint(
            tagged(&format!("{kind}1"), t, rest),
            vec![(prod, 1.0), (w, -1.0), (bin, -uw)],
            Sense::Ge,
            -uw,
        );
        model.add_constraint(
            tagged(&format!("{kind}2"), t, rest),
            vec![(prod, 1.0), (w, -1.0)],
            Sense::Le,
            0.0,
        );
        model.add_constraint(
            tagged(&format!("{kind}3"), t, rest),
            vec![(prod, 1.0), (bin, -uw)],
            Sense::Le,
            0.0,
        );
    };
    for (i, label) in labels.iter().enumerate() {
        glover(model, label, wx[i], x[i], "gx");
    }
    for n in 0..ks.len() {
        for k in 0..ks[n] {
            glover(model, &nk(n, k), wy[n][k], y[n][k], "gy");
        }
    }
    Ok(())
}

fn add_decisions(model: &mut MilpModel, labels: &[String]) -> Result<Vec<usize>> {
    let x = labels
        .iter()
        .map(|l| model.add_var(format!("x_{l}"), VarKind::Binary, 0.0, 1.0))
        .collect::<Result<Vec<_>>>()?;
    model.set_decisions(x.clone());
    Ok(x)
}

fn check_columns(cs: &ConstraintSet, m: usize) -> Result<()> {
    if cs.num_products() != m {
        return Err(CnlError::dim("constraint columns", m, cs.num_products()));
    }
    Ok(())
}

/// Charnes-Cooper transform of the approximate problem with Glover rows
/// for `w·x_i` and `w·y_nk`. Its optimum equals `max F̂(x)` over `cs`.
pub fn build_assort_milp(lfp: &LfpCoefficients, cs: &ConstraintSet) -> Result<MilpModel> {
    let m = lfp.num_products();
    check_columns(cs, m)?;
    let mut model = MilpModel::new(Variant::Assort);
    let labels = product_labels(m, None);
    let x = add_decisions(&mut model, &labels)?;
    charnes_cooper_block(&mut model, lfp, &x, &labels, None, 1.0)?;
    constraint_rows(&mut model, cs, &x);
    model.set_shape(m, lfp.num_nests(), vec![lfp.segment_counts()], lfp.eps());
    Ok(model)
}

/// The assortment model over product-price pairs `x_i_l`, with one-price
/// rows and the product-level rows lifted to pairs.
pub fn build_anp_milp(problem: &PricingProblem) -> Result<MilpModel> {
    let lfp = &problem.lfp;
    let pairs = lfp.num_products();
    check_columns(&problem.constraints, pairs)?;
    let m = pairs / problem.levels;
    let mut model = MilpModel::new(Variant::Anp {
        levels: problem.levels,
    });
    let labels = product_labels(m, Some(problem.levels));
    let x = add_decisions(&mut model, &labels)?;
    charnes_cooper_block(&mut model, lfp, &x, &labels, None, 1.0)?;
    constraint_rows(&mut model, &problem.constraints, &x);
    model.set_shape(m, lfp.num_nests(), vec![lfp.segment_counts()], lfp.eps());
    Ok(model)
}

/// One Charnes-Cooper block per customer type, normalized to `θ_t`, over
/// shared assortment binaries.
pub fn build_mixture_milp(mix: &MixtureLfp, cs: &ConstraintSet) -> Result<MilpModel> {
    let m = mix.num_products();
    check_columns(cs, m)?;
    let mut model = MilpModel::new(Variant::Mixture {
        types: mix.types.len(),
    });
    let labels = product_labels(m, None);
    let x = add_decisions(&mut model, &labels)?;
    for (t, (lfp, &theta)) in mix.types.iter().zip(&mix.theta).enumerate() {
        charnes_cooper_block(&mut model, lfp, &x, &labels, Some(t + 1), theta)?;
    }
    constraint_rows(&mut model, cs, &x);
    let ks = mix.types.iter().map(LfpCoefficients::segment_counts).collect();
    model.set_shape(m, mix.types[0].num_nests(), ks, mix.types[0].eps());
    Ok(model)
}

/// Feasibility test for a fixed ratio level `λ`: does some feasible `x`
/// reach `numerator − λ·denominator ≥ 0`? Stays in the untransformed
/// variables `(x, y, z, s)` and has an empty objective.
pub fn build_feasibility_model(lfp: &LfpCoefficients, cs: &ConstraintSet, lambda: f64) -> Result<MilpModel> {
    if !(lambda >= 0.0) {
        return Err(CnlError::InvalidArgument(format!("lambda = {lambda} must be >= 0")));
    }
    let m = lfp.num_products();
    check_columns(cs, m)?;
    let ks = lfp.segment_counts();
    let mut model = MilpModel::new(Variant::Feasibility { lambda });
    let labels = product_labels(m, None);
    let x = add_decisions(&mut model, &labels)?;
    let nk = |n: usize, k: usize| format!("{}_{}", n + 1, k + 1);
    let mut y = Vec::new();
    let mut z = Vec::new();
    for (n, &k_n) in ks.iter().enumerate() {
        let mut yn = Vec::new();
        for k in 0..k_n {
            yn.push(model.add_var(format!("y_{}", nk(n, k)), VarKind::Binary, 0.0, 1.0)?);
        }
        y.push(yn);
    }
    for (n, &k_n) in ks.iter().enumerate() {
        let mut zn = Vec::new();
        for k in 0..k_n {
            zn.push(model.add_var(format!("z_{}", nk(n, k)), VarKind::Continuous, 0.0, 1.0)?);
        }
        z.push(zn);
    }
    let mut s = Vec::new();
    for label in &labels {
        let mut si = Vec::new();
        for (n, &k_n) in ks.iter().enumerate() {
            let mut row = Vec::new();
            for k in 0..k_n {
                row.push(model.add_var(
                    format!("s_{label}_{}", nk(n, k)),
                    VarKind::Continuous,
                    0.0,
                    1.0,
                )?);
            }
            si.push(row);
        }
        s.push(si);
    }

    let bounds = lfp.bounds();
    for n in 0..ks.len() {
        let mut terms: Vec<(usize, f64)> = (0..m).map(|i| (x[i], lfp.loads()[i][n])).collect();
        for k in 0..ks[n] {
            terms.push((z[n][k], -lfp.approx()[n].lengths()[k]));
        }
        model.add_constraint(
            format!("bal_{}", n + 1),
            terms,
            Sense::Eq,
            bounds.lower[n] - lfp.no_purchase()[n],
        );
    }
    for n in 0..ks.len() {
        for k in 0..ks[n] {
            if k + 1 < ks[n] {
                model.add_constraint(
                    format!("ord_{}", nk(n, k)),
                    vec![(y[n][k + 1], 1.0), (y[n][k], -1.0)],
                    Sense::Le,
                    0.0,
                );
                model.add_constraint(
                    format!("fill_{}", nk(n, k)),
                    vec![(z[n][k + 1], 1.0), (y[n][k], -1.0)],
                    Sense::Le,
                    0.0,
                );
            }
            model.add_constraint(
                format!("yz_{}", nk(n, k)),
                vec![(y[n][k], 1.0), (z[n][k], -1.0)],
                Sense::Le,
                0.0,
            );
        }
    }
    for (i, label) in labels.iter().enumerate() {
        for n in 0..ks.len() {
            for k in 0..ks[n] {
                let rest = format!("{label}_{}", nk(n, k));
                let v = s[i][n][k];
                model.add_constraint(format!("s1_{rest}"), vec![(v, 1.0), (x[i], -1.0)], Sense::Le, 0.0);
                model.add_constraint(format!("s2_{rest}"), vec![(v, 1.0), (z[n][k], -1.0)], Sense::Le, 0.0);
                model.add_constraint(
                    format!("s3_{rest}"),
                    vec![(v, 1.0), (x[i], -1.0), (z[n][k], -1.0)],
                    Sense::Ge,
                    -1.0,
                );
            }
        }
    }
    constraint_rows(&mut model, cs, &x);

    let mut terms = Vec::new();
    for i in 0..m {
        terms.push((x[i], lfp.a()[i].iter().sum::<f64>()));
        for n in 0..ks.len() {
            for k in 0..ks[n] {
                terms.push((s[i][n][k], lfp.b()[i][n][k]));
            }
        }
    }
    for n in 0..ks.len() {
        for k in 0..ks[n] {
            terms.push((z[n][k], -lambda * lfp.d()[n][k]));
        }
    }
    model.add_constraint("lambda", terms, Sense::Ge, lambda * lfp.c());
    model.set_shape(m, lfp.num_nests(), vec![ks], lfp.eps());
    Ok(model)
}

fn bit(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn charnes_cooper_values(
    lfp: &LfpCoefficients,
    x: &[bool],
    labels: &[String],
    t: Option<usize>,
    theta: f64,
    out: &mut HashMap<String, f64>,
) -> Result<()> {
    let fill = lfp.fill(x)?;
    let (_, den) = lfp.ratio_parts(x)?;
    let w = theta / den;
    out.insert(tagged("w", t, ""), w);
    for (n, (zn, yn)) in fill.z.iter().zip(&fill.y).enumerate() {
        for (k, (&z, &y)) in zn.iter().zip(yn).enumerate() {
            let rest = format!("{}_{}", n + 1, k + 1);
            out.insert(tagged("y", t, &rest), bit(y));
            out.insert(tagged("wy", t, &rest), w * bit(y));
            out.insert(tagged("wz", t, &rest), w * z);
        }
    }
    for (i, label) in labels.iter().enumerate() {
        let xi = bit(x[i]);
        out.insert(tagged("wx", t, label), w * xi);
        for (n, zn) in fill.z.iter().enumerate() {
            for (k, &z) in zn.iter().enumerate() {
                let rest = format!("{label}_{}_{}", n + 1, k + 1);
                out.insert(tagged("ws", t, &rest), w * xi * z);
            }
        }
    }
    Ok(())
}

fn decision_values(labels: &[String], x: &[bool]) -> HashMap<String, f64> {
    labels
        .iter()
        .zip(x)
        .map(|(l, &b)| (format!("x_{l}"), bit(b)))
        .collect()
}

/// The point `w = 1/(c + Σ d z)`, `w^• = w·(•)` that [`build_assort_milp`]
/// maps `x` to, keyed by variable name.
pub fn assort_point(lfp: &LfpCoefficients, x: &[bool]) -> Result<HashMap<String, f64>> {
    let labels = product_labels(lfp.num_products(), None);
    let mut out = decision_values(&labels, x);
    charnes_cooper_values(lfp, x, &labels, None, 1.0, &mut out)?;
    Ok(out)
}

/// As [`assort_point`] for the pricing model; `x` is flattened row-major
/// over product-price pairs.
pub fn pricing_point(problem: &PricingProblem, x: &[bool]) -> Result<HashMap<String, f64>> {
    let m = problem.lfp.num_products() / problem.levels;
    let labels = product_labels(m, Some(problem.levels));
    let mut out = decision_values(&labels, x);
    charnes_cooper_values(&problem.lfp, x, &labels, None, 1.0, &mut out)?;
    Ok(out)
}

/// As [`assort_point`] for the mixture model.
pub fn mixture_point(mix: &MixtureLfp, x: &[bool]) -> Result<HashMap<String, f64>> {
    let labels = product_labels(mix.num_products(), None);
    let mut out = decision_values(&labels, x);
    for (t, (lfp, &theta)) in mix.types.iter().zip(&mix.theta).enumerate() {
        charnes_cooper_values(lfp, x, &labels, Some(t + 1), theta, &mut out)?;
    }
    Ok(out)
}

/// The `(x, y, z, s)` point of [`build_feasibility_model`] induced by `x`.
pub fn feasibility_point(lfp: &LfpCoefficients, x: &[bool]) -> Result<HashMap<String, f64>> {
    let labels = product_labels(lfp.num_products(), None);
    let mut out = decision_values(&labels, x);
    let fill = lfp.fill(x)?;
    for (n, (zn, yn)) in fill.z.iter().zip(&fill.y).enumerate() {
        for (k, (&z, &y)) in zn.iter().zip(yn).enumerate() {
            out.insert(format!("y_{}_{}", n + 1, k + 1), bit(y));
            out.insert(format!("z_{}_{}", n + 1, k + 1), z);
        }
    }
    for (i, label) in labels.iter().enumerate() {
        for (n, zn) in fill.z.iter().enumerate() {
            for (k, &z) in zn.iter().enumerate() {
                out.insert(format!("s_{label}_{}_{}", n + 1, k + 1), bit(x[i]) * z);
            }
        }
    }
    Ok(out)
}
