#![allow(dead_code)]

use cnl_assort::choice::{Instance, MixtureInstance};
use cnl_assort::constraints::ConstraintSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Three products, two nests; product 3 splits 1/4 : 3/4 and nest 2 has
/// no outside option.
pub fn three_product_fixture() -> Instance {
    Instance::new(
        vec![6.0, 6.0, 9.0],
        vec![1.0, 1.0, 4.0],
        vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.25, 0.75]],
        vec![0.5, 0.5],
        vec![1.0, 0.0],
    )
    .unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random allocation matrix: each product joins one to three nests.
pub fn random_alpha(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Vec<Vec<f64>> {
    (0..m)
        .map(|_| {
            let mut row = vec![0.0; n];
            let joins = rng.gen_range(1..=n.min(3));
            for _ in 0..joins {
                row[rng.gen_range(0..n)] += rng.gen_range(0.1..1.0);
            }
            let total: f64 = row.iter().sum();
            row.iter().map(|a| a / total).collect()
        })
        .collect()
}

/// Random instance with dissimilarities in `[sigma_lo, sigma_hi]` and
/// positive outside weights.
pub fn random_instance(seed: u64, m: usize, n: usize, sigma_lo: f64, sigma_hi: f64) -> Instance {
    let mut rng = rng(seed);
    let alpha = random_alpha(&mut rng, m, n);
    let r = (0..m).map(|_| rng.gen_range(0.5..10.0)).collect();
    let v = (0..m).map(|_| rng.gen_range(0.1..5.0)).collect();
    let sigma = (0..n).map(|_| rng.gen_range(sigma_lo..=sigma_hi)).collect();
    let v0 = (0..n).map(|_| rng.gen_range(0.2..2.0)).collect();
    Instance::new(r, v, alpha, sigma, v0).unwrap()
}

pub fn random_mixture(seed: u64, m: usize, n: usize, types: usize) -> MixtureInstance {
    let mut rng = rng(seed);
    let alpha = random_alpha(&mut rng, m, n);
    let r = (0..m).map(|_| rng.gen_range(0.5..10.0)).collect();
    let v = (0..types)
        .map(|_| (0..m).map(|_| rng.gen_range(0.1..5.0)).collect())
        .collect();
    let raw: Vec<f64> = (0..types).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let theta = raw.iter().map(|t| t / total).collect();
    let sigma = (0..n).map(|_| rng.gen_range(0.25..=1.0)).collect();
    let v0 = (0..n).map(|_| rng.gen_range(0.2..2.0)).collect();
    MixtureInstance::new(r, v, theta, alpha, sigma, v0).unwrap()
}

/// A random total cap, sometimes per-nest caps, sometimes one weighted
/// row with nonnegative coefficients.
pub fn random_constraints(seed: u64, alpha: &[Vec<f64>]) -> ConstraintSet {
    let mut rng = rng(seed ^ 0x5eed);
    let m = alpha.len();
    let mut cs = ConstraintSet::total_cardinality(m, rng.gen_range(1..=m)).unwrap();
    if rng.gen_bool(0.5) {
        cs.extend(ConstraintSet::per_nest_from_alpha(alpha, rng.gen_range(0.3..1.0)).unwrap())
            .unwrap();
    }
    if rng.gen_bool(0.5) {
        let coeffs: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..3.0)).collect();
        let rhs = coeffs.iter().sum::<f64>() * rng.gen_range(0.2..0.8);
        cs.push_custom(coeffs, rhs).unwrap();
    }
    cs
}

/// Every feasible assortment by plain enumeration of all `2^m` masks.
pub fn all_feasible(cs: &ConstraintSet) -> Vec<Vec<bool>> {
    let m = cs.num_products();
    (0..1u64 << m)
        .map(|mask| (0..m).map(|i| mask >> i & 1 == 1).collect::<Vec<bool>>())
        .filter(|x| cs.is_feasible(x).unwrap())
        .collect()
}

/// Choice probabilities straight from the model definition with `powf`.
pub fn naive_probabilities(inst: &Instance, x: &[bool]) -> (Vec<f64>, f64) {
    let (m, n) = (inst.num_products(), inst.num_nests());
    let w: Vec<f64> = (0..n)
        .map(|k| {
            inst.no_purchase()[k]
                + (0..m)
                    .filter(|&i| x[i])
                    .map(|i| inst.alpha()[i][k] * inst.weights()[i])
                    .sum::<f64>()
        })
        .collect();
    let pow = |w: f64, e: f64| if w > 0.0 { w.powf(e) } else { 0.0 };
    let denom: f64 = (0..n).map(|k| pow(w[k], inst.sigma()[k])).sum();
    let p: Vec<f64> = (0..m)
        .map(|i| {
            if !x[i] {
                return 0.0;
            }
            (0..n)
                .filter(|&k| w[k] > 0.0)
                .map(|k| pow(w[k], inst.sigma()[k] - 1.0) * inst.alpha()[i][k] * inst.weights()[i])
                .sum::<f64>()
                / denom
        })
        .collect();
    let p0 = (0..n)
        .filter(|&k| w[k] > 0.0)
        .map(|k| pow(w[k], inst.sigma()[k] - 1.0) * inst.no_purchase()[k])
        .sum::<f64>()
        / denom;
    (p, p0)
}

pub fn random_assortment(rng: &mut ChaCha8Rng, m: usize) -> Vec<bool> {
    let density: f64 = rng.gen();
    (0..m).map(|_| rng.gen::<f64>() < density).collect()
}

pub const SIGMAS: [f64; 5] = [0.2, 0.3, 0.5, 0.7, 0.9];
pub const UPPERS: [f64; 3] = [5.0, 10.0, 15.0];
pub const EPS: [f64; 5] = [0.1, 0.05, 0.01, 0.005, 0.001];

/// Expected segment counts with `L = 1`; rows follow `EPS`, columns run
/// over `SIGMAS` then `UPPERS`.
pub const EXPECTED_COUNTS: [[usize; 15]; 5] = [
    [3, 4, 4, 2, 3, 4, 2, 3, 3, 2, 2, 2, 1, 1, 1],
    [4, 5, 6, 3, 5, 5, 3, 4, 4, 2, 3, 3, 1, 2, 2],
    [7, 10, 12, 7, 9, 11, 5, 8, 9, 4, 6, 6, 2, 3, 4],
    [10, 14, 17, 9, 13, 15, 7, 10, 12, 6, 8, 9, 3, 4, 5],
    [22, 31, 37, 20, 29, 34, 16, 23, 27, 12, 17, 19, 6, 9, 11],
];
