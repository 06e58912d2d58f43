//! Linear constraints `A x ≤ b` over binary assortments and bounds on the
//! nest weights they admit.

use serde::{Deserialize, Serialize};

use crate::choice::Instance;
use crate::error::{CnlError, Result};

/// Absolute slack allowed when testing `A x ≤ b`.
pub const FEAS_TOL: f64 = 1e-9;

/// Which builder produced a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowTag {
    TotalCap,
    PerNestCap,
    OnePrice,
    #[default]
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
    #[serde(default)]
    pub tag: RowTag,
}

impl Row {
    pub fn activity(&self, x: &[bool]) -> f64 {
        self.coeffs
            .iter()
            .zip(x)
            .filter(|(_, &o)| o)
            .map(|(a, _)| a)
            .sum()
    }
}

/// The feasible set `{x ∈ {0,1}^m : A x ≤ b}`. The empty assortment is
/// always feasible.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    m: usize,
    rows: Vec<Row>,
}

/// Default total cap, `⌈m/2⌉`.
pub fn default_total_cap(m: usize) -> usize {
    m.div_ceil(2)
}

/// Per-nest cap `⌈fraction · size⌉`.
pub fn nest_cap(size: usize, fraction: f64) -> usize {
    // Guard against 0.8 * 5 = 4.000000000000001.
    ((fraction * size as f64) - 1e-9).ceil().max(0.0) as usize
}

impl ConstraintSet {
    pub fn new(m: usize) -> Self {
        ConstraintSet { m, rows: Vec::new() }
    }

    pub fn from_rows(m: usize, rows: Vec<Row>) -> Result<Self> {
        let mut cs = ConstraintSet::new(m);
        for row in rows {
            cs.push(row)?;
        }
        Ok(cs)
    }

    pub fn num_products(&self) -> usize {
        self.m
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn push(&mut self, row: Row) -> Result<()> {
        if row.coeffs.len() != self.m {
            return Err(CnlError::dim("constraint coefficients", self.m, row.coeffs.len()));
        }
        if row.coeffs.iter().any(|a| !a.is_finite()) || !row.rhs.is_finite() {
            return Err(CnlError::InvalidInstance("constraint data must be finite".into()));
        }
        if row.rhs < 0.0 {
            return Err(CnlError::InvalidInstance(format!(
                "constraint rhs {} < 0 makes the empty assortment infeasible",
                row.rhs
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn push_custom(&mut self, coeffs: Vec<f64>, rhs: f64) -> Result<()> {
        self.push(Row {
            coeffs,
            rhs,
            tag: RowTag::Custom,
        })
    }

    /// Appends all rows of `other`.
    pub fn extend(&mut self, other: ConstraintSet) -> Result<()> {
        for row in other.rows {
            self.push(row)?;
        }
        Ok(())
    }

    /// `Σ_i x_i ≤ c`.
    pub fn total_cardinality(m: usize, c: usize) -> Result<Self> {
        if c > m {
            return Err(CnlError::InvalidArgument(format!(
                "total cap {c} exceeds the product count {m}"
            )));
        }
        let mut cs = ConstraintSet::new(m);
        cs.push(Row {
            coeffs: vec![1.0; m],
            rhs: c as f64,
            tag: RowTag::TotalCap,
        })?;
        Ok(cs)
    }

    /// One row per nest, `Σ_{i∈S_n} x_i ≤ ⌈fraction·|S_n|⌉`, where `S_n`
    /// holds the products with a positive allocation to nest `n`.
    pub fn per_nest_cardinality(inst: &Instance, fraction: f64) -> Result<Self> {
        ConstraintSet::per_nest_from_alpha(inst.alpha(), fraction)
    }

    /// [`ConstraintSet::per_nest_cardinality`] from an `m × N` allocation
    /// matrix.
    pub fn per_nest_from_alpha(alpha: &[Vec<f64>], fraction: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(CnlError::InvalidArgument(format!(
                "per-nest fraction {fraction} outside (0, 1]"
            )));
        }
        let m = alpha.len();
        let n_nests = alpha.first().map_or(0, Vec::len);
        let mut cs = ConstraintSet::new(m);
        for n in 0..n_nests {
            let coeffs: Vec<f64> = alpha
                .iter()
                .map(|row| if row[n] > 0.0 { 1.0 } else { 0.0 })
                .collect();
            let size = coeffs.iter().filter(|&&a| a > 0.0).count();
            cs.push(Row {
                coeffs,
                rhs: nest_cap(size, fraction) as f64,
                tag: RowTag::PerNestCap,
            })?;
        }
        Ok(cs)
    }

    /// Total cap `⌈m/2⌉` plus per-nest caps at 80 %, from an allocation
    /// matrix.
    pub fn standard_from_alpha(alpha: &[Vec<f64>]) -> Result<Self> {
        let m = alpha.len();
        let mut cs = ConstraintSet::total_cardinality(m, default_total_cap(m))?;
        cs.extend(ConstraintSet::per_nest_from_alpha(alpha, 0.8)?)?;
        Ok(cs)
    }

    /// Total cap `⌈m/2⌉` plus per-nest caps at 80 %.
    pub fn standard(inst: &Instance) -> Result<Self> {
        ConstraintSet::standard_from_alpha(inst.alpha())
    }

    /// True iff `A x ≤ b + 1e-9` row by row.
    pub fn is_feasible(&self, x: &[bool]) -> Result<bool> {
        if x.len() != self.m {
            return Err(CnlError::dim("assortment", self.m, x.len()));
        }
        Ok(self.rows.iter().all(|r| r.activity(x) <= r.rhs + FEAS_TOL))
    }

    /// Index of the first violated row, if any.
    pub fn first_violation(&self, x: &[bool]) -> Result<Option<usize>> {
        if x.len() != self.m {
            return Err(CnlError::dim("assortment", self.m, x.len()));
        }
        Ok(self
            .rows
            .iter()
            .position(|r| r.activity(x) > r.rhs + FEAS_TOL))
    }

    /// Expands each row over `levels` copies of every product, so product
    /// `i` at level `l` (column `i·levels + l`) inherits product `i`'s
    /// coefficient, and adds one `Σ_l x_il ≤ 1` row per product.
    pub fn lift_to_levels(&self, levels: usize) -> ConstraintSet {
        let m = self.m;
        let mut rows: Vec<Row> = self
            .rows
            .iter()
            .map(|r| Row {
                coeffs: r
                    .coeffs
                    .iter()
                    .flat_map(|&a| std::iter::repeat(a).take(levels))
                    .collect(),
                rhs: r.rhs,
                tag: r.tag,
            })
            .collect();
        for i in 0..m {
            let mut coeffs = vec![0.0; m * levels];
            coeffs[i * levels..(i + 1) * levels].fill(1.0);
            rows.push(Row {
                coeffs,
                rhs: 1.0,
                tag: RowTag::OnePrice,
            });
        }
        ConstraintSet {
            m: m * levels,
            rows,
        }
    }

    /// Visits every feasible assortment in depth-first order (product 0
    /// decided first, "not offered" before "offered"). A partial assignment
    /// is cut as soon as its committed products violate a row even with
    /// the most favorable completion. Returns the number of search nodes.
    pub fn for_each_feasible<F>(&self, cap: usize, mut visit: F) -> Result<u64>
    where
        F: FnMut(&[bool]) -> Result<()>,
    {
        if self.m > cap {
            return Err(CnlError::CapExceeded { size: self.m, cap });
        }
        let mut walker = Walker::new(self);
        walker.descend(0, &mut visit)?;
        Ok(walker.nodes)
    }
}

struct Walker<'a> {
    cs: &'a ConstraintSet,
    // slack_floor[r][i] = Σ_{j≥i} min(0, a_rj), the most a completion of
    // products i.. can lower row r.
    slack_floor: Vec<Vec<f64>>,
    activity: Vec<f64>,
    x: Vec<bool>,
    nodes: u64,
}

impl<'a> Walker<'a> {
    fn new(cs: &'a ConstraintSet) -> Self {
        let m = cs.m;
        let slack_floor = cs
            .rows
            .iter()
            .map(|r| {
                let mut s = vec![0.0; m + 1];
                for i in (0..m).rev() {
                    s[i] = s[i + 1] + r.coeffs[i].min(0.0);
                }
                s
            })
            .collect();
        Walker {
            cs,
            slack_floor,
            activity: vec![0.0; cs.rows.len()],
            x: vec![false; m],
            nodes: 0,
        }
    }

    fn viable(&self, next: usize) -> bool {
        self.cs
            .rows
            .iter()
            .enumerate()
            .all(|(r, row)| self.activity[r] + self.slack_floor[r][next] <= row.rhs + FEAS_TOL)
    }

    fn descend<F>(&mut self, i: usize, visit: &mut F) -> Result<()>
    where
        F: FnMut(&[bool]) -> Result<()>,
    {
        self.nodes += 1;
        if i == self.cs.m {
            return visit(&self.x);
        }
        if self.viable(i + 1) {
            self.descend(i + 1, visit)?;
        }
        self.x[i] = true;
        for (r, row) in self.cs.rows.iter().enumerate() {
            self.activity[r] += row.coeffs[i];
        }
        if self.viable(i + 1) {
            self.descend(i + 1, visit)?;
        }
        self.x[i] = false;
        for (r, row) in self.cs.rows.iter().enumerate() {
            self.activity[r] -= row.coeffs[i];
        }
        Ok(())
    }
}

/// Lower and upper bounds on every nest weight over the feasible set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl NestBounds {
    pub fn num_nests(&self) -> usize {
        self.lower.len()
    }

    /// True when `w` lies in `[lower, upper]` for every nest, up to `tol`.
    pub fn contains(&self, w: &[f64], tol: f64) -> bool {
        w.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&wn, (&lo, &hi))| wn >= lo - tol && wn <= hi + tol)
    }
}

/// Bounds from a cardinality relaxation: `L_n = v_0n`, and `U_n` adds the
/// largest loads of nest `n` that any single row allows together.
///
/// A row with non-negative coefficients whose smallest coefficient over the
/// nest's members is `κ > 0` admits at most `⌊b/κ⌋` of them; the tightest
/// such count is used. Rows that do not cover the whole nest are ignored,
/// which keeps the bound valid.
pub fn nest_weight_bounds(inst: &Instance, cs: &ConstraintSet) -> Result<NestBounds> {
    let loads: Vec<Vec<f64>> = (0..inst.num_products())
        .map(|i| (0..inst.num_nests()).map(|n| inst.load(i, n)).collect())
        .collect();
    bounds_from_loads(&loads, inst.no_purchase(), cs)
}

/// [`nest_weight_bounds`] on an explicit `m × N` load matrix, where
/// `loads[i][n]` is the most product `i` can add to nest `n`.
pub fn bounds_from_loads(loads: &[Vec<f64>], v0: &[f64], cs: &ConstraintSet) -> Result<NestBounds> {
    let m = loads.len();
    if cs.num_products() != m {
        return Err(CnlError::dim("constraint columns", m, cs.num_products()));
    }
    let mut upper = Vec::with_capacity(v0.len());
    for (n, &v0n) in v0.iter().enumerate() {
        let mut members: Vec<f64> = loads.iter().map(|row| row[n]).filter(|&l| l > 0.0).collect();
        let member_idx: Vec<usize> = (0..m).filter(|&i| loads[i][n] > 0.0).collect();
        let mut cap = members.len();
        for row in cs.rows() {
            if row.coeffs.iter().any(|&a| a < 0.0) || member_idx.is_empty() {
                continue;
            }
            let kappa = member_idx
                .iter()
                .map(|&i| row.coeffs[i])
                .fold(f64::INFINITY, f64::min);
            if kappa > 0.0 {
                let allowed = (row.rhs / kappa + FEAS_TOL).floor() as usize;
                cap = cap.min(allowed);
            }
        }
        members.sort_by(|a, b| b.total_cmp(a));
        upper.push(v0n + members.iter().take(cap).sum::<f64>());
    }
    Ok(NestBounds {
        lower: v0.to_vec(),
        upper,
    })
}

/// Exact bounds by enumerating every feasible assortment.
pub fn nest_weight_bounds_exact(inst: &Instance, cs: &ConstraintSet, cap: usize) -> Result<NestBounds> {
    if cs.num_products() != inst.num_products() {
        return Err(CnlError::dim(
            "constraint columns",
            inst.num_products(),
            cs.num_products(),
        ));
    }
    let n = inst.num_nests();
    let mut lower = vec![f64::INFINITY; n];
    let mut upper = vec![f64::NEG_INFINITY; n];
    cs.for_each_feasible(cap, |x| {
        for (k, w) in inst.nest_weights_unchecked(x).into_iter().enumerate() {
            lower[k] = lower[k].min(w);
            upper[k] = upper[k].max(w);
        }
        Ok(())
    })?;
    Ok(NestBounds { lower, upper })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::Assortment;

    fn two_product() -> Instance {
        Instance::new(
            vec![1.0, 1.0],
            vec![2.0, 3.0],
            vec![vec![1.0], vec![1.0]],
            vec![0.5],
            vec![1.0],
        )
        .unwrap()
    }

    #[test]
    fn cardinality_defaults() {
        assert_eq!(default_total_cap(20), 10);
        assert_eq!(default_total_cap(3), 2);
        assert_eq!(default_total_cap(30), 15);
        assert_eq!(nest_cap(5, 0.8), 4);
        assert_eq!(nest_cap(1, 0.8), 1);
        assert_eq!(nest_cap(10, 0.8), 8);
    }

    #[test]
    fn feasibility_checks() {
        let empty = ConstraintSet::new(3);
        assert!(empty.is_feasible(&[true, true, true]).unwrap());
        let cap = ConstraintSet::total_cardinality(3, 2).unwrap();
        assert!(!cap.is_feasible(&[true, true, true]).unwrap());
        assert!(cap.is_feasible(&[true, false, true]).unwrap());
        assert!(cap.is_feasible(&[true]).is_err());
    }

    #[test]
    fn rejects_rows_excluding_empty_assortment() {
        let mut cs = ConstraintSet::new(2);
        assert!(cs.push_custom(vec![-1.0, 0.0], -1.0).is_err());
        assert!(cs.push_custom(vec![1.0], 1.0).is_err());
    }

    #[test]
    fn unconstrained_and_capped_bounds() {
        let inst = two_product();
        let b = nest_weight_bounds(&inst, &ConstraintSet::new(2)).unwrap();
        assert_eq!((b.lower[0], b.upper[0]), (1.0, 6.0));
        let cap = ConstraintSet::total_cardinality(2, 1).unwrap();
        let b = nest_weight_bounds(&inst, &cap).unwrap();
        assert_eq!(b.upper[0], 4.0);
        let exact = nest_weight_bounds_exact(&inst, &cap, 24).unwrap();
        assert_eq!(exact.upper[0], 4.0);
        assert_eq!(exact.lower[0], 1.0);
    }

    #[test]
    fn enumeration_matches_mask_scan() {
        let mut cs = ConstraintSet::new(5);
        cs.push_custom(vec![1.0, 2.0, -1.0, 1.0, 0.5], 2.0).unwrap();
        cs.push_custom(vec![0.0, 1.0, 1.0, 1.0, 0.0], 2.0).unwrap();
        let mut seen = Vec::new();
        cs.for_each_feasible(24, |x| {
            seen.push(Assortment::from(x.to_vec()));
            Ok(())
        })
        .unwrap();
        let direct: Vec<Assortment> = (0..32u64)
            .map(|mask| Assortment::from_mask(5, mask))
            .filter(|x| cs.is_feasible(x).unwrap())
            .collect();
        assert_eq!(seen.len(), direct.len());
        for x in &direct {
            assert!(seen.contains(x));
        }
    }

    #[test]
    fn enumeration_respects_cap() {
        let cs = ConstraintSet::new(30);
        assert!(matches!(
            cs.for_each_feasible(24, |_| Ok(())),
            Err(CnlError::CapExceeded { size: 30, cap: 24 })
        ));
    }

    #[test]
    fn lifting_adds_one_price_rows() {
        let cs = ConstraintSet::total_cardinality(3, 2).unwrap();
        let lifted = cs.lift_to_levels(2);
        assert_eq!(lifted.num_products(), 6);
        assert_eq!(lifted.len(), 4);
        assert_eq!(
            lifted.rows().iter().filter(|r| r.tag == RowTag::OnePrice).count(),
            3
        );
        assert!(!lifted
            .is_feasible(&[true, true, false, false, false, false])
            .unwrap());
    }
}
