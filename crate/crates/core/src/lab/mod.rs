//! Seeded random instances and benchmark harnesses.
//!
//! Every random quantity comes from a ChaCha20 stream derived from the
//! seed. Streams are split by purpose and by product or customer type
//! (stream id `tag << 32 | index`), so the draws for product `i` do not
//! shift when other parts of the generator change.

mod bench;
mod verify;

pub use bench::{
    bench_guarantees, bench_to_csv, certified_fraction, eps_for, nest_table, reproduce_table1, BenchConfig,
    BenchReport, BenchRow, NestRow, Table1, TABLE1_EPS, TABLE1_SIGMAS, TABLE1_UPPERS,
};
pub use verify::{verify_instance, Check, Status, VerifyReport};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::choice::{Instance, MixtureInstance, PricingInstance};
use crate::constraints::ConstraintSet;
use crate::error::{CnlError, Result};

const STRUCTURE: u64 = 1;
const ALLOCATION: u64 = 2;
const DISSIMILARITY: u64 = 3;
const PRODUCT: u64 = 4;
const PRICE: u64 = 5;
const CUSTOMER_TYPE: u64 = 6;
const ARRIVAL: u64 = 7;

/// Keeps `u` away from 0 and 1 so revenues and weights stay positive.
const OPEN_MARGIN: f64 = 1e-12;

fn stream(seed: u64, tag: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(tag << 32 | index);
    rng
}

fn open_unit(rng: &mut ChaCha20Rng) -> f64 {
    rng.gen::<f64>().clamp(OPEN_MARGIN, 1.0 - OPEN_MARGIN)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GenVariant {
    Assort,
    Pricing { levels: usize },
    Mixture { types: usize },
}

impl GenVariant {
    pub fn label(&self) -> &'static str {
        match self {
            GenVariant::Assort => "assort",
            GenVariant::Pricing { .. } => "pricing",
            GenVariant::Mixture { .. } => "mixture",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub seed: u64,
    pub m: usize,
    pub n: usize,
    /// Dissimilarities are drawn from `[0.25, sigma_bar]`.
    pub sigma_bar: f64,
    /// Mean number of nests per product.
    pub gamma: f64,
    pub variant: GenVariant,
}

impl GenSpec {
    pub fn assort(seed: u64, m: usize, n: usize, sigma_bar: f64) -> Self {
        GenSpec {
            seed,
            m,
            n,
            sigma_bar,
            gamma: 1.2,
            variant: GenVariant::Assort,
        }
    }

    pub fn pricing(seed: u64, m: usize, n: usize, levels: usize) -> Self {
        GenSpec {
            variant: GenVariant::Pricing { levels },
            ..GenSpec::assort(seed, m, n, 0.75)
        }
    }

    pub fn mixture(seed: u64, m: usize, n: usize, sigma_bar: f64, types: usize) -> Self {
        GenSpec {
            variant: GenVariant::Mixture { types },
            ..GenSpec::assort(seed, m, n, sigma_bar)
        }
    }

    /// `variant-m<m>-n<N>-s<seed>`.
    pub fn instance_id(&self) -> String {
        format!("{}-m{}-n{}-s{}", self.variant.label(), self.m, self.n, self.seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m < self.n {
            return Err(CnlError::InvalidArgument(format!(
                "need m >= N >= 1, got m = {}, N = {}",
                self.m, self.n
            )));
        }
        if !(self.sigma_bar > 0.25 && self.sigma_bar <= 1.0) {
            return Err(CnlError::InvalidArgument(format!(
                "sigma_bar = {} outside (0.25, 1]",
                self.sigma_bar
            )));
        }
        if !(self.gamma >= 1.0 && self.gamma.is_finite()) {
            return Err(CnlError::InvalidArgument(format!(
                "gamma = {} must be >= 1",
                self.gamma
            )));
        }
        match self.variant {
            GenVariant::Pricing { levels: 0 } => Err(CnlError::InvalidArgument(
                "pricing needs at least one price level".into(),
            )),
            GenVariant::Mixture { types: 0 } => Err(CnlError::InvalidArgument(
                "mixture needs at least one customer type".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Nest membership: every product joins one uniform nest, then
/// `⌈(γ−1)m⌉` products drawn with replacement each join one more nest
/// they are not yet in (a draw is dropped if the product is everywhere).
fn membership(spec: &GenSpec) -> Vec<Vec<bool>> {
    let mut rng = stream(spec.seed, STRUCTURE, 0);
    let mut member = vec![vec![false; spec.n]; spec.m];
    for row in member.iter_mut() {
        row[rng.gen_range(0..spec.n)] = true;
    }
    let extra = ((spec.gamma - 1.0) * spec.m as f64 - 1e-9).ceil().max(0.0) as usize;
    for _ in 0..extra {
        let i = rng.gen_range(0..spec.m);
        if member[i].iter().all(|&b| b) {
            continue;
        }
        loop {
            let n = rng.gen_range(0..spec.n);
            if !member[i][n] {
                member[i][n] = true;
                break;
            }
        }
    }
    member
}

/// Allocation fractions drawn from `(0, 1]` per membership, normalized.
fn allocations(spec: &GenSpec, member: &[Vec<bool>]) -> Vec<Vec<f64>> {
    member
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut rng = stream(spec.seed, ALLOCATION, i as u64);
            let raw: Vec<f64> = row
                .iter()
                .map(|&b| if b { 1.0 - rng.gen::<f64>() } else { 0.0 })
                .collect();
            let total: f64 = raw.iter().sum();
            raw.iter().map(|a| a / total).collect()
        })
        .collect()
}

fn dissimilarities(spec: &GenSpec, hi: f64) -> Vec<f64> {
    let mut rng = stream(spec.seed, DISSIMILARITY, 0);
    (0..spec.n).map(|_| rng.gen_range(0.25..=hi)).collect()
}

/// `(u_i, X_i, Y_i)` per product.
fn product_draws(spec: &GenSpec) -> Vec<(f64, f64, f64)> {
    (0..spec.m)
        .map(|i| {
            let mut rng = stream(spec.seed, PRODUCT, i as u64);
            let u = open_unit(&mut rng);
            let x = rng.gen_range(0.1..=10.0);
            let y = rng.gen_range(0.1..=10.0);
            (u, x, y)
        })
        .collect()
}

/// Plain instance with `r_i = u_i² X_i`, `v_i = (1−u_i) Y_i`, `v_0n = 1`,
/// plus the standard total and per-nest caps.
pub fn generate_assortment(spec: &GenSpec) -> Result<(Instance, ConstraintSet)> {
    spec.validate()?;
    let alpha = allocations(spec, &membership(spec));
    let sigma = dissimilarities(spec, spec.sigma_bar);
    let draws = product_draws(spec);
    let r = draws.iter().map(|&(u, x, _)| u * u * x).collect();
    let v = draws.iter().map(|&(u, _, y)| (1.0 - u) * y).collect();
    let cs = ConstraintSet::standard_from_alpha(&alpha)?;
    let inst = Instance::new(r, v, alpha, sigma, vec![1.0; spec.n])?;
    Ok((inst, cs))
}

/// Pricing instance: `p_il = l·a_i + 0.5` with step `a_i ∈ (0,1)` and
/// `v_il = exp(μ_i − η_i p_il)`, `μ_i ∈ [−1, 1]`, `η_i ∈ (0, 1)`;
/// dissimilarities from `[0.25, 0.75]`.
pub fn generate_pricing(spec: &GenSpec) -> Result<(PricingInstance, ConstraintSet)> {
    spec.validate()?;
    let GenVariant::Pricing { levels } = spec.variant else {
        return Err(CnlError::InvalidArgument("spec is not a pricing spec".into()));
    };
    let alpha = allocations(spec, &membership(spec));
    let sigma = dissimilarities(spec, 0.75);
    let mut prices = Vec::with_capacity(spec.m);
    let mut weights = Vec::with_capacity(spec.m);
    for i in 0..spec.m {
        let mut rng = stream(spec.seed, PRICE, i as u64);
        let mu = rng.gen_range(-1.0..=1.0);
        let eta = open_unit(&mut rng);
        let step = open_unit(&mut rng);
        let p: Vec<f64> = (1..=levels).map(|l| l as f64 * step + 0.5).collect();
        weights.push(p.iter().map(|&pl| (mu - eta * pl).exp()).collect());
        prices.push(p);
    }
    let cs = ConstraintSet::standard_from_alpha(&alpha)?;
    let inst = PricingInstance::new(prices, weights, alpha, sigma, vec![1.0; spec.n])?;
    Ok((inst, cs))
}

/// Mixture instance sharing `u_i, X_i` (hence revenues) across types, with
/// per-type `Y_ti` and normalized arrival probabilities.
pub fn generate_mixture(spec: &GenSpec) -> Result<(MixtureInstance, ConstraintSet)> {
    spec.validate()?;
    let GenVariant::Mixture { types } = spec.variant else {
        return Err(CnlError::InvalidArgument("spec is not a mixture spec".into()));
    };
    let alpha = allocations(spec, &membership(spec));
    let sigma = dissimilarities(spec, spec.sigma_bar);
    let draws = product_draws(spec);
    let r = draws.iter().map(|&(u, x, _)| u * u * x).collect();
    let type_weights = (0..types)
        .map(|t| {
            let mut rng = stream(spec.seed, CUSTOMER_TYPE, t as u64);
            draws
                .iter()
                .map(|&(u, _, _)| (1.0 - u) * rng.gen_range(0.1..=10.0))
                .collect()
        })
        .collect();
    let mut rng = stream(spec.seed, ARRIVAL, 0);
    let raw: Vec<f64> = (0..types).map(|_| 1.0 - rng.gen::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    let theta = raw.iter().map(|t| t / total).collect();
    let cs = ConstraintSet::standard_from_alpha(&alpha)?;
    let inst = MixtureInstance::new(r, type_weights, theta, alpha, sigma, vec![1.0; spec.n])?;
    Ok((inst, cs))
}
