//! Approximate linear-fractional objective and its mixed-integer linear
//! reformulations.
//!
//! Replacing `W^(σ-1)` and `W^σ` by their piecewise chords turns the CNL
//! revenue into a ratio of functions that are linear in `x` and in the
//! segment fill levels `z_nk`, up to the products `x_i z_nk`.

mod lp;
mod milp;

pub use lp::{emit_lp, parse_lp};
pub use milp::{
    assort_point, build_anp_milp, build_assort_milp, build_feasibility_model, build_mixture_milp,
    feasibility_point, mixture_point, pricing_point, Constraint, MilpModel, ModelCounts,
    ModelMetadata, Sense, VarKind, Variable, Variant,
};

use crate::choice::{Instance, MixtureInstance, PricingInstance};
use crate::constraints::{bounds_from_loads, nest_weight_bounds, ConstraintSet, NestBounds};
use crate::discretize::{discretize_interval, f_value, g_value, PiecewiseApprox};
use crate::error::{CnlError, Result};

/// Coefficients of the approximate objective
/// `(Σ a_in x_i + Σ b_ink x_i z_nk) / (c + Σ d_nk z_nk)`.
#[derive(Debug, Clone)]
pub struct LfpCoefficients {
    a: Vec<Vec<f64>>,
    b: Vec<Vec<Vec<f64>>>,
    c: f64,
    d: Vec<Vec<f64>>,
    approx: Vec<PiecewiseApprox>,
    bounds: NestBounds,
    eps: f64,
    loads: Vec<Vec<f64>>,
    no_purchase: Vec<f64>,
    revenue: Vec<f64>,
}

/// Nest weights and segment fill levels of one assortment.
#[derive(Debug, Clone, PartialEq)]
pub struct Filling {
    pub weights: Vec<f64>,
    /// `z[n][k]`: 1 below the segment holding `W_n`, fractional inside it,
    /// 0 above.
    pub z: Vec<Vec<f64>>,
    /// `y[n][k]` is set iff segment `k+1` is entered.
    pub y: Vec<Vec<bool>>,
}

/// Builds the coefficient bundle with bounds from
/// [`nest_weight_bounds`].
pub fn build_lfp(inst: &Instance, cs: &ConstraintSet, eps: f64) -> Result<LfpCoefficients> {
    if cs.num_products() != inst.num_products() {
        return Err(CnlError::dim(
            "constraint columns",
            inst.num_products(),
            cs.num_products(),
        ));
    }
    let bounds = nest_weight_bounds(inst, cs)?;
    build_lfp_with_bounds(inst, bounds, eps)
}

/// Builds the coefficient bundle on caller-supplied bounds, which must be
/// valid for every assortment the bundle will be evaluated on.
pub fn build_lfp_with_bounds(inst: &Instance, bounds: NestBounds, eps: f64) -> Result<LfpCoefficients> {
    let n_nests = inst.num_nests();
    if bounds.num_nests() != n_nests || bounds.upper.len() != n_nests {
        return Err(CnlError::dim("nest bounds", n_nests, bounds.num_nests()));
    }
    let mut approx = Vec::with_capacity(n_nests);
    for n in 0..n_nests {
        let (lo, hi) = (bounds.lower[n], bounds.upper[n]);
        if !(lo > 0.0) {
            return Err(CnlError::InvalidInstance(format!(
                "nest {n}: lower weight bound {lo} must be positive for the approximation"
            )));
        }
        approx.push(discretize_interval(inst.sigma()[n], lo, hi, eps, None)?);
    }
    let m = inst.num_products();
    let mut a = vec![vec![0.0; n_nests]; m];
    let mut b = Vec::with_capacity(m);
    for i in 0..m {
        let mut bi = Vec::with_capacity(n_nests);
        for (n, pw) in approx.iter().enumerate() {
            let scale = inst.alpha()[i][n] * inst.revenues()[i] * inst.weights()[i];
            a[i][n] = scale * f_value(pw.sigma(), pw.lower());
            bi.push(
                pw.gamma_f()
                    .iter()
                    .zip(pw.lengths())
                    .map(|(g, len)| scale * g * len)
                    .collect(),
            );
        }
        b.push(bi);
    }
    let c = approx.iter().map(|pw| g_value(pw.sigma(), pw.lower())).sum();
    let d = approx
        .iter()
        .map(|pw| pw.gamma_g().iter().zip(pw.lengths()).map(|(g, len)| g * len).collect())
        .collect();
    let loads = (0..m)
        .map(|i| (0..n_nests).map(|n| inst.load(i, n)).collect())
        .collect();
    Ok(LfpCoefficients {
        a,
        b,
        c,
        d,
        approx,
        bounds,
        eps,
        loads,
        no_purchase: inst.no_purchase().to_vec(),
        revenue: inst.revenues().to_vec(),
    })
}

impl LfpCoefficients {
    pub fn num_products(&self) -> usize {
        self.a.len()
    }

    pub fn num_nests(&self) -> usize {
        self.approx.len()
    }

    /// `a[i][n] = α_in r_i v_i f(L_n)`.
    pub fn a(&self) -> &[Vec<f64>] {
        &self.a
    }

    /// `b[i][n][k] = α_in r_i v_i γ^f_nk Δ_nk`.
    pub fn b(&self) -> &[Vec<Vec<f64>>] {
        &self.b
    }

    /// `c = Σ_n g(L_n)`.
    pub fn c(&self) -> f64 {
        self.c
    }

    /// `d[n][k] = Δ_nk γ^g_nk`.
    pub fn d(&self) -> &[Vec<f64>] {
        &self.d
    }

    pub fn approx(&self) -> &[PiecewiseApprox] {
        &self.approx
    }

    pub fn bounds(&self) -> &NestBounds {
        &self.bounds
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// `α_in v_i` per product and nest.
    pub fn loads(&self) -> &[Vec<f64>] {
        &self.loads
    }

    pub fn no_purchase(&self) -> &[f64] {
        &self.no_purchase
    }

    pub fn revenues(&self) -> &[f64] {
        &self.revenue
    }

    /// `K_n` per nest.
    pub fn segment_counts(&self) -> Vec<usize> {
        self.approx.iter().map(PiecewiseApprox::num_segments).collect()
    }

    pub fn total_segments(&self) -> usize {
        self.approx.iter().map(PiecewiseApprox::num_segments).sum()
    }

    /// Largest possible denominator, reached when every segment is full.
    pub fn max_denominator(&self) -> f64 {
        self.c + self.d.iter().flatten().sum::<f64>()
    }

    fn check_len(&self, x: &[bool]) -> Result<()> {
        if x.len() != self.num_products() {
            return Err(CnlError::dim("assortment", self.num_products(), x.len()));
        }
        Ok(())
    }

    /// Nest weights of `x` and the segment fill they induce. Fails when a
    /// weight leaves `[L_n, U_n]`, which means the bounds are stale.
    pub fn fill(&self, x: &[bool]) -> Result<Filling> {
        self.check_len(x)?;
        let mut weights = self.no_purchase.clone();
        for i in (0..x.len()).filter(|&i| x[i]) {
            for (w, l) in weights.iter_mut().zip(&self.loads[i]) {
                *w += l;
            }
        }
        let mut z = Vec::with_capacity(weights.len());
        let mut y = Vec::with_capacity(weights.len());
        for (n, &w) in weights.iter().enumerate() {
            let (lo, hi) = (self.bounds.lower[n], self.bounds.upper[n]);
            let tol = 1e-9 * hi.max(1.0);
            if w < lo - tol || w > hi + tol {
                return Err(CnlError::BoundViolation {
                    nest: n,
                    weight: w,
                    lower: lo,
                    upper: hi,
                });
            }
            let pw = &self.approx[n];
            let zn: Vec<f64> = pw
                .breakpoints()
                .iter()
                .zip(pw.lengths())
                .map(|(&c, &len)| if len > 0.0 { ((w - c) / len).clamp(0.0, 1.0) } else { 0.0 })
                .collect();
            let k = zn.len();
            let yn = (0..k).map(|j| j + 1 < k && zn[j + 1] > 0.0).collect();
            z.push(zn);
            y.push(yn);
        }
        Ok(Filling { weights, z, y })
    }

    /// Numerator and denominator of the approximate objective at `x`.
    pub fn ratio_parts(&self, x: &[bool]) -> Result<(f64, f64)> {
        let fill = self.fill(x)?;
        let mut num = 0.0;
        for i in (0..x.len()).filter(|&i| x[i]) {
            for n in 0..self.num_nests() {
                num += self.a[i][n];
                num += self.b[i][n]
                    .iter()
                    .zip(&fill.z[n])
                    .map(|(b, z)| b * z)
                    .sum::<f64>();
            }
        }
        let den = self.c
            + self
                .d
                .iter()
                .zip(&fill.z)
                .map(|(dn, zn)| dn.iter().zip(zn).map(|(d, z)| d * z).sum::<f64>())
                .sum::<f64>();
        Ok((num, den))
    }

    /// Approximate revenue `F̂(x)`.
    pub fn approx_objective(&self, x: &[bool]) -> Result<f64> {
        let (num, den) = self.ratio_parts(x)?;
        Ok(num / den)
    }
}

/// Joint assortment and pricing recast over `m·L` product-price pairs.
#[derive(Debug, Clone)]
pub struct PricingProblem {
    /// One alternative per (product, price) pair, index `i·L + l`.
    pub instance: Instance,
    /// The product-level rows lifted to pairs plus one-price rows.
    pub constraints: ConstraintSet,
    pub lfp: LfpCoefficients,
    pub levels: usize,
}

/// Builds the extended problem. Nest-weight upper bounds count each
/// product once, at its heaviest price level.
pub fn build_pricing_lfp(pinst: &PricingInstance, cs: &ConstraintSet, eps: f64) -> Result<PricingProblem> {
    let m = pinst.num_products();
    if cs.num_products() != m {
        return Err(CnlError::dim("constraint columns", m, cs.num_products()));
    }
    let loads: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let vmax = pinst.level_weights()[i].iter().copied().fold(0.0, f64::max);
            pinst.alpha()[i].iter().map(|a| a * vmax).collect()
        })
        .collect();
    let bounds = bounds_from_loads(&loads, pinst.no_purchase(), cs)?;
    let instance = pinst.extended();
    let lfp = build_lfp_with_bounds(&instance, bounds, eps)?;
    Ok(PricingProblem {
        instance,
        constraints: cs.lift_to_levels(pinst.num_levels()),
        lfp,
        levels: pinst.num_levels(),
    })
}

/// One coefficient bundle per customer type.
#[derive(Debug, Clone)]
pub struct MixtureLfp {
    pub types: Vec<LfpCoefficients>,
    pub theta: Vec<f64>,
}

impl MixtureLfp {
    pub fn num_products(&self) -> usize {
        self.types[0].num_products()
    }

    /// `Σ_t θ_t F̂_t(x)`.
    pub fn approx_objective(&self, x: &[bool]) -> Result<f64> {
        let mut total = 0.0;
        for (lfp, th) in self.types.iter().zip(&self.theta) {
            total += th * lfp.approx_objective(x)?;
        }
        Ok(total)
    }
}

/// Per-type bundles with per-type bounds on the shared constraint set.
pub fn build_mixture_lfp(minst: &MixtureInstance, cs: &ConstraintSet, eps: f64) -> Result<MixtureLfp> {
    let types = minst
        .type_instances()
        .iter()
        .map(|inst| build_lfp(inst, cs, eps))
        .collect::<Result<Vec<_>>>()?;
    Ok(MixtureLfp {
        types,
        theta: minst.theta().to_vec(),
    })
}
