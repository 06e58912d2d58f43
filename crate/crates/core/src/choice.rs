//! Exact cross-nested logit evaluation.
//!
//! A customer first picks nest `n` with probability `W_n^σ_n / Σ_n' W_n'^σ_n'`
//! and then, inside the nest, picks product `i` with probability
//! `α_in x_i v_i / W_n` (or leaves with probability `v_0n / W_n`), where
//! `W_n = v_0n + Σ_i α_in x_i v_i`. Collapsing the two stages gives the
//! closed forms implemented here.
//!
//! The plain model lives in [`Instance`]; [`PricingInstance`] adds a finite
//! price grid per product and [`MixtureInstance`] a finite mixture of
//! customer types sharing one nest structure.

use std::ops::Deref;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CnlError, Result};

/// Tolerance on allocation-row and mixture-weight sums.
pub const SUM_TOL: f64 = 1e-9;

/// `w^e` computed as `exp(e ln w)`. An empty nest (`w == 0`) contributes
/// nothing, which is the limit of every term it appears in.
#[inline]
pub(crate) fn nest_pow(w: f64, e: f64) -> f64 {
    if w > 0.0 {
        (e * w.ln()).exp()
    } else {
        0.0
    }
}

/// Binary assortment vector; `true` means the product is offered.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assortment(Vec<bool>);

impl Assortment {
    pub fn empty(m: usize) -> Self {
        Assortment(vec![false; m])
    }

    /// Assortment offering exactly the products in `offered` (0-based).
    pub fn from_indices(m: usize, offered: &[usize]) -> Self {
        let mut x = vec![false; m];
        for &i in offered {
            x[i] = true;
        }
        Assortment(x)
    }

    /// Builds from 0/1 integers; anything nonzero counts as offered.
    pub fn from_bits(bits: &[u8]) -> Self {
        Assortment(bits.iter().map(|&b| b != 0).collect())
    }

    /// Low `m` bits of `mask`, product `i` at bit `i`.
    pub fn from_mask(m: usize, mask: u64) -> Self {
        Assortment((0..m).map(|i| mask >> i & 1 == 1).collect())
    }

    pub fn offered(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &o)| o).map(|(i, _)| i)
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&o| o).count()
    }

    pub fn into_inner(self) -> Vec<bool> {
        self.0
    }
}

impl Deref for Assortment {
    type Target = [bool];
    fn deref(&self) -> &[bool] {
        &self.0
    }
}

impl From<Vec<bool>> for Assortment {
    fn from(x: Vec<bool>) -> Self {
        Assortment(x)
    }
}

impl std::fmt::Display for Assortment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, &o) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", o as u8)?;
        }
        write!(f, ")")
    }
}

/// Shared nest structure: allocations, dissimilarities and no-purchase
/// weights. Checked once, reused by all three model variants.
fn validate_nests(m: usize, alpha: &[Vec<f64>], sigma: &[f64], v0: &[f64]) -> Result<()> {
    let n = sigma.len();
    if n == 0 {
        return Err(CnlError::InvalidInstance("at least one nest is required".into()));
    }
    if v0.len() != n {
        return Err(CnlError::dim("no-purchase weights", n, v0.len()));
    }
    if alpha.len() != m {
        return Err(CnlError::dim("allocation rows", m, alpha.len()));
    }
    for (i, row) in alpha.iter().enumerate() {
        if row.len() != n {
            return Err(CnlError::dim("allocation columns", n, row.len()));
        }
        if row.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(CnlError::InvalidInstance(format!(
                "product {i}: allocations must be finite and non-negative"
            )));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(CnlError::InvalidInstance(format!(
                "product {i}: allocations sum to {sum}, expected 1"
            )));
        }
    }
    if sigma.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(CnlError::InvalidInstance(
            "dissimilarity parameters must be finite and non-negative".into(),
        ));
    }
    if v0.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(CnlError::InvalidInstance(
            "no-purchase weights must be finite and non-negative".into(),
        ));
    }
    if !v0.iter().any(|&w| w > 0.0) {
        return Err(CnlError::InvalidInstance(
            "at least one nest needs a positive no-purchase weight".into(),
        ));
    }
    Ok(())
}

fn check_positive(what: &str, values: &[f64]) -> Result<()> {
    if let Some(i) = values.iter().position(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(CnlError::InvalidInstance(format!(
            "{what}[{i}] = {} must be finite and positive",
            values[i]
        )));
    }
    Ok(())
}

/// Plain CNL assortment instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    revenue: Vec<f64>,
    weight: Vec<f64>,
    alpha: Vec<Vec<f64>>,
    sigma: Vec<f64>,
    no_purchase: Vec<f64>,
}

impl Instance {
    /// Validates and builds an instance.
    ///
    /// `alpha` is `m × N`, one row per product. No-purchase weights may be
    /// zero for individual nests as long as one is positive, so the
    /// denominator never vanishes.
    pub fn new(
        revenue: Vec<f64>,
        weight: Vec<f64>,
        alpha: Vec<Vec<f64>>,
        sigma: Vec<f64>,
        no_purchase: Vec<f64>,
    ) -> Result<Self> {
        let m = revenue.len();
        if weight.len() != m {
            return Err(CnlError::dim("preference weights", m, weight.len()));
        }
        check_positive("revenue", &revenue)?;
        check_positive("weight", &weight)?;
        validate_nests(m, &alpha, &sigma, &no_purchase)?;
        Ok(Instance {
            revenue,
            weight,
            alpha,
            sigma,
            no_purchase,
        })
    }

    pub fn num_products(&self) -> usize {
        self.revenue.len()
    }

    pub fn num_nests(&self) -> usize {
        self.sigma.len()
    }

    pub fn revenues(&self) -> &[f64] {
        &self.revenue
    }

    pub fn weights(&self) -> &[f64] {
        &self.weight
    }

    pub fn alpha(&self) -> &[Vec<f64>] {
        &self.alpha
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn no_purchase(&self) -> &[f64] {
        &self.no_purchase
    }

    /// True when every dissimilarity lies in `[0, 1]`, the range consistent
    /// with random utility maximization.
    pub fn is_standard(&self) -> bool {
        self.sigma.iter().all(|&s| s <= 1.0)
    }

    /// Products with a positive allocation to nest `n`.
    pub fn nest_members(&self, n: usize) -> Vec<usize> {
        (0..self.num_products())
            .filter(|&i| self.alpha[i][n] > 0.0)
            .collect()
    }

    /// `α_in v_i`, the weight product `i` adds to nest `n` when offered.
    pub fn load(&self, i: usize, n: usize) -> f64 {
        self.alpha[i][n] * self.weight[i]
    }

    fn check_len(&self, x: &[bool]) -> Result<()> {
        if x.len() != self.num_products() {
            return Err(CnlError::dim("assortment", self.num_products(), x.len()));
        }
        Ok(())
    }

    /// Total preference weight `W_n` of every nest.
    pub fn nest_weights(&self, x: &[bool]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        Ok(self.nest_weights_unchecked(x))
    }

    pub(crate) fn nest_weights_unchecked(&self, x: &[bool]) -> Vec<f64> {
        let mut w = self.no_purchase.clone();
        for (i, _) in x.iter().enumerate().filter(|(_, &o)| o) {
            for (wn, a) in w.iter_mut().zip(&self.alpha[i]) {
                *wn += a * self.weight[i];
            }
        }
        w
    }

    /// Purchase probability of every product plus the no-purchase
    /// probability.
    pub fn choice_probabilities(&self, x: &[bool]) -> Result<ChoiceProbabilities> {
        let w = self.nest_weights(x)?;
        let denom: f64 = w
            .iter()
            .zip(&self.sigma)
            .map(|(&wn, &s)| nest_pow(wn, s))
            .sum();
        let scale: Vec<f64> = w
            .iter()
            .zip(&self.sigma)
            .map(|(&wn, &s)| nest_pow(wn, s - 1.0) / denom)
            .collect();
        let products = (0..self.num_products())
            .map(|i| {
                if !x[i] {
                    return 0.0;
                }
                self.alpha[i]
                    .iter()
                    .zip(&scale)
                    .map(|(a, s)| s * a * self.weight[i])
                    .sum()
            })
            .collect();
        let no_purchase = scale.iter().zip(&self.no_purchase).map(|(s, v)| s * v).sum();
        Ok(ChoiceProbabilities {
            products,
            no_purchase,
        })
    }

    /// Expected revenue `F(x)`.
    pub fn expected_revenue(&self, x: &[bool]) -> Result<f64> {
        self.check_len(x)?;
        Ok(self.revenue_unchecked(x))
    }

    pub(crate) fn revenue_unchecked(&self, x: &[bool]) -> f64 {
        let w = self.nest_weights_unchecked(x);
        let mut num = 0.0;
        let mut den = 0.0;
        for (n, (&wn, &s)) in w.iter().zip(&self.sigma).enumerate() {
            den += nest_pow(wn, s);
            let pf = nest_pow(wn, s - 1.0);
            if pf == 0.0 {
                continue;
            }
            let nest_rev: f64 = (0..x.len())
                .filter(|&i| x[i])
                .map(|i| self.alpha[i][n] * self.revenue[i] * self.weight[i])
                .sum();
            num += pf * nest_rev;
        }
        num / den
    }

    /// Draws one customer through the two-stage process. Returns the
    /// purchased product, or `None` for no purchase.
    pub fn sample_choice<R: Rng + ?Sized>(&self, x: &[bool], rng: &mut R) -> Result<Option<usize>> {
        let w = self.nest_weights(x)?;
        let nest_mass: Vec<f64> = w
            .iter()
            .zip(&self.sigma)
            .map(|(&wn, &s)| nest_pow(wn, s))
            .collect();
        let n = pick(&nest_mass, rng);
        let mut u = rng.gen::<f64>() * w[n];
        for i in (0..x.len()).filter(|&i| x[i]) {
            u -= self.alpha[i][n] * self.weight[i];
            if u < 0.0 {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }
}

fn pick<R: Rng + ?Sized>(mass: &[f64], rng: &mut R) -> usize {
    let total: f64 = mass.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (k, &p) in mass.iter().enumerate() {
        u -= p;
        if u < 0.0 {
            return k;
        }
    }
    mass.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Output of [`Instance::choice_probabilities`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceProbabilities {
    pub products: Vec<f64>,
    pub no_purchase: f64,
}

/// Joint assortment and pricing instance: product `i` may be offered at
/// one of `L` price levels `p[i][l]` with price-dependent weight `v[i][l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PricingInstance {
    prices: Vec<Vec<f64>>,
    weights: Vec<Vec<f64>>,
    alpha: Vec<Vec<f64>>,
    sigma: Vec<f64>,
    no_purchase: Vec<f64>,
}

impl PricingInstance {
    pub fn new(
        prices: Vec<Vec<f64>>,
        weights: Vec<Vec<f64>>,
        alpha: Vec<Vec<f64>>,
        sigma: Vec<f64>,
        no_purchase: Vec<f64>,
    ) -> Result<Self> {
        let m = prices.len();
        if weights.len() != m {
            return Err(CnlError::dim("price-level weight rows", m, weights.len()));
        }
        let levels = prices.first().map_or(0, Vec::len);
        if levels == 0 {
            return Err(CnlError::InvalidInstance(
                "pricing needs at least one product and one price level".into(),
            ));
        }
        for (p, v) in prices.iter().zip(&weights) {
            if p.len() != levels {
                return Err(CnlError::dim("price levels", levels, p.len()));
            }
            if v.len() != levels {
                return Err(CnlError::dim("price-level weights", levels, v.len()));
            }
            check_positive("price", p)?;
            check_positive("price-level weight", v)?;
        }
        validate_nests(m, &alpha, &sigma, &no_purchase)?;
        Ok(PricingInstance {
            prices,
            weights,
            alpha,
            sigma,
            no_purchase,
        })
    }

    pub fn num_products(&self) -> usize {
        self.prices.len()
    }

    pub fn num_levels(&self) -> usize {
        self.prices[0].len()
    }

    pub fn num_nests(&self) -> usize {
        self.sigma.len()
    }

    pub fn prices(&self) -> &[Vec<f64>] {
        &self.prices
    }

    pub fn level_weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn alpha(&self) -> &[Vec<f64>] {
        &self.alpha
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn no_purchase(&self) -> &[f64] {
        &self.no_purchase
    }

    /// The equivalent plain instance over `m·L` (product, price) pairs;
    /// pair `(i, l)` has index `i·L + l`.
    pub fn extended(&self) -> Instance {
        let levels = self.num_levels();
        let mut revenue = Vec::with_capacity(self.num_products() * levels);
        let mut weight = Vec::with_capacity(revenue.capacity());
        let mut alpha = Vec::with_capacity(revenue.capacity());
        for i in 0..self.num_products() {
            for l in 0..levels {
                revenue.push(self.prices[i][l]);
                weight.push(self.weights[i][l]);
                alpha.push(self.alpha[i].clone());
            }
        }
        Instance {
            revenue,
            weight,
            alpha,
            sigma: self.sigma.clone(),
            no_purchase: self.no_purchase.clone(),
        }
    }

    /// Checks the one-price rule and flattens `x[i][l]` row-major.
    pub fn flatten(&self, x: &[Vec<bool>]) -> Result<Vec<bool>> {
        let m = self.num_products();
        let levels = self.num_levels();
        if x.len() != m {
            return Err(CnlError::dim("price selection rows", m, x.len()));
        }
        let mut flat = Vec::with_capacity(m * levels);
        for (i, row) in x.iter().enumerate() {
            if row.len() != levels {
                return Err(CnlError::dim("price selection columns", levels, row.len()));
            }
            if row.iter().filter(|&&o| o).count() > 1 {
                return Err(CnlError::Infeasible(format!(
                    "product {i} is offered at more than one price"
                )));
            }
            flat.extend_from_slice(row);
        }
        Ok(flat)
    }

    /// Expected revenue of a price selection matrix.
    pub fn expected_revenue(&self, x: &[Vec<bool>]) -> Result<f64> {
        let flat = self.flatten(x)?;
        Ok(self.extended().revenue_unchecked(&flat))
    }
}

/// Mixture of CNL customer types sharing revenues and nest structure.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureInstance {
    revenue: Vec<f64>,
    alpha: Vec<Vec<f64>>,
    sigma: Vec<f64>,
    no_purchase: Vec<f64>,
    theta: Vec<f64>,
    type_weights: Vec<Vec<f64>>,
}

impl MixtureInstance {
    /// `type_weights` is `T × m`; `theta` holds arrival probabilities.
    pub fn new(
        revenue: Vec<f64>,
        type_weights: Vec<Vec<f64>>,
        theta: Vec<f64>,
        alpha: Vec<Vec<f64>>,
        sigma: Vec<f64>,
        no_purchase: Vec<f64>,
    ) -> Result<Self> {
        let m = revenue.len();
        check_positive("revenue", &revenue)?;
        if theta.is_empty() {
            return Err(CnlError::InvalidInstance("at least one customer type".into()));
        }
        if type_weights.len() != theta.len() {
            return Err(CnlError::dim("customer types", theta.len(), type_weights.len()));
        }
        for row in &type_weights {
            if row.len() != m {
                return Err(CnlError::dim("type preference weights", m, row.len()));
            }
            check_positive("type weight", row)?;
        }
        if theta.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(CnlError::InvalidInstance(
                "arrival probabilities must be non-negative".into(),
            ));
        }
        let total: f64 = theta.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(CnlError::InvalidInstance(format!(
                "arrival probabilities sum to {total}, expected 1"
            )));
        }
        validate_nests(m, &alpha, &sigma, &no_purchase)?;
        Ok(MixtureInstance {
            revenue,
            alpha,
            sigma,
            no_purchase,
            theta,
            type_weights,
        })
    }

    pub fn num_products(&self) -> usize {
        self.revenue.len()
    }

    pub fn num_nests(&self) -> usize {
        self.sigma.len()
    }

    pub fn num_types(&self) -> usize {
        self.theta.len()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn revenues(&self) -> &[f64] {
        &self.revenue
    }

    pub fn type_weights(&self) -> &[Vec<f64>] {
        &self.type_weights
    }

    pub fn alpha(&self) -> &[Vec<f64>] {
        &self.alpha
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn no_purchase(&self) -> &[f64] {
        &self.no_purchase
    }

    /// The single-type instance seen by customers of type `t`.
    pub fn type_instance(&self, t: usize) -> Instance {
        Instance {
            revenue: self.revenue.clone(),
            weight: self.type_weights[t].clone(),
            alpha: self.alpha.clone(),
            sigma: self.sigma.clone(),
            no_purchase: self.no_purchase.clone(),
        }
    }

    pub fn type_instances(&self) -> Vec<Instance> {
        (0..self.num_types()).map(|t| self.type_instance(t)).collect()
    }

    /// `Σ_t θ_t F_t(x)`.
    pub fn expected_revenue(&self, x: &[bool]) -> Result<f64> {
        if x.len() != self.num_products() {
            return Err(CnlError::dim("assortment", self.num_products(), x.len()));
        }
        Ok(self
            .type_instances()
            .iter()
            .zip(&self.theta)
            .map(|(inst, th)| th * inst.revenue_unchecked(x))
            .sum())
    }
}
