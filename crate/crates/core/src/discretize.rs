//! Piecewise-linear chords of `f(t) = t^(σ-1)` and `g(t) = t^σ` with a
//! certified maximum relative error, built by greedy maximal segments.
//!
//! For `σ ∈ [0, 1]` the chord of the convex `f` lies above it and the chord
//! of the concave `g` lies below it, so the approximations over-estimate the
//! revenue ratio. For `σ > 1` the curvatures flip and errors are measured as
//! absolute relative deviations.

use serde::{Deserialize, Serialize};

use crate::error::{CnlError, Result};

/// Relative width of the bisection bracket, `δ = DEFAULT_DELTA_REL·(U−L)`.
pub const DEFAULT_DELTA_REL: f64 = 1e-7;

const MAX_SEGMENTS: usize = 1_000_000;

#[inline]
fn power(t: f64, e: f64) -> f64 {
    (e * t.ln()).exp()
}

#[inline]
pub fn f_value(sigma: f64, t: f64) -> f64 {
    power(t, sigma - 1.0)
}

#[inline]
pub fn g_value(sigma: f64, t: f64) -> f64 {
    power(t, sigma)
}

fn check_chord_args(c: f64, u: f64, t: f64) -> Result<()> {
    if !(c > 0.0 && c < u) {
        return Err(CnlError::InvalidArgument(format!(
            "chord needs 0 < c < u, got c = {c}, u = {u}"
        )));
    }
    if !(c..=u).contains(&t) {
        return Err(CnlError::InvalidArgument(format!(
            "t = {t} outside [{c}, {u}]"
        )));
    }
    Ok(())
}

fn chord(func: impl Fn(f64) -> f64, c: f64, u: f64, t: f64) -> f64 {
    let fc = func(c);
    fc + (func(u) - fc) / (u - c) * (t - c)
}

/// Chord of `f` through `(c, f(c))` and `(u, f(u))`, evaluated at `t`.
pub fn chord_f(sigma: f64, c: f64, u: f64, t: f64) -> Result<f64> {
    check_chord_args(c, u, t)?;
    Ok(chord(|s| f_value(sigma, s), c, u, t))
}

/// Chord of `g` through `(c, g(c))` and `(u, g(u))`, evaluated at `t`.
pub fn chord_g(sigma: f64, c: f64, u: f64, t: f64) -> Result<f64> {
    check_chord_args(c, u, t)?;
    Ok(chord(|s| g_value(sigma, s), c, u, t))
}

/// Shared closed-form search: the ratio chord/func has a single stationary
/// point `t* = k·(func(c) − ζc)/(ζ·m)` on `(c, u)`, and vanishes at both
/// ends.
fn segment_error(func: impl Fn(f64) -> f64, k: f64, m: f64, c: f64, u: f64) -> (f64, f64) {
    let fc = func(c);
    let zeta = (func(u) - fc) / (u - c);
    let mut t = k * (fc - zeta * c) / (zeta * m);
    if !t.is_finite() {
        t = 0.5 * (c + u);
    }
    let t = t.clamp(c, u);
    let err = ((fc + zeta * (t - c)) / func(t) - 1.0).abs();
    if err.is_finite() {
        (err, t)
    } else {
        (0.0, t)
    }
}

/// Maximum relative error of the chord of `f` on `[c, u]` and where it is
/// attained. Identically zero for `σ ∈ {1, 2}`, where `f` is linear.
pub fn segment_max_error_f(sigma: f64, c: f64, u: f64) -> (f64, f64) {
    if sigma == 1.0 || sigma == 2.0 || u <= c {
        return (0.0, c);
    }
    segment_error(|t| f_value(sigma, t), sigma - 1.0, 2.0 - sigma, c, u)
}

/// Maximum relative error of the chord of `g` on `[c, u]`. Identically zero
/// for `σ ∈ {0, 1}`.
pub fn segment_max_error_g(sigma: f64, c: f64, u: f64) -> (f64, f64) {
    if sigma == 0.0 || sigma == 1.0 || u <= c {
        return (0.0, c);
    }
    segment_error(|t| g_value(sigma, t), sigma, 1.0 - sigma, c, u)
}

/// `max(Φ_f, Φ_g)` on `[c, u]`.
pub fn segment_error_max(sigma: f64, c: f64, u: f64) -> f64 {
    segment_max_error_f(sigma, c, u)
        .0
        .max(segment_max_error_g(sigma, c, u).0)
}

/// Piecewise-linear approximations of `f` and `g` on `[L, U]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseApprox {
    sigma: f64,
    breakpoints: Vec<f64>,
    gamma_f: Vec<f64>,
    gamma_g: Vec<f64>,
    lengths: Vec<f64>,
    epsilon: f64,
    max_slack: f64,
}

impl PiecewiseApprox {
    /// Builds chords over the given breakpoints. `epsilon` is the error the
    /// caller certifies; nothing is checked here.
    pub fn from_breakpoints(sigma: f64, breakpoints: Vec<f64>, epsilon: f64) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(CnlError::InvalidArgument("need at least two breakpoints".into()));
        }
        if breakpoints[0] <= 0.0 {
            return Err(CnlError::InvalidArgument(format!(
                "breakpoints must be positive, got {}",
                breakpoints[0]
            )));
        }
        let mut gamma_f = Vec::with_capacity(breakpoints.len() - 1);
        let mut gamma_g = Vec::with_capacity(breakpoints.len() - 1);
        let mut lengths = Vec::with_capacity(breakpoints.len() - 1);
        for w in breakpoints.windows(2) {
            let (c, u) = (w[0], w[1]);
            let len = u - c;
            if len < 0.0 || (len == 0.0 && breakpoints.len() > 2) {
                return Err(CnlError::InvalidArgument(
                    "breakpoints must be strictly increasing".into(),
                ));
            }
            lengths.push(len);
            if len == 0.0 {
                // Degenerate interval L = U: the slope never contributes.
                gamma_f.push(0.0);
                gamma_g.push(0.0);
            } else {
                gamma_f.push((f_value(sigma, u) - f_value(sigma, c)) / len);
                gamma_g.push((g_value(sigma, u) - g_value(sigma, c)) / len);
            }
        }
        Ok(PiecewiseApprox {
            sigma,
            breakpoints,
            gamma_f,
            gamma_g,
            lengths,
            epsilon,
            max_slack: 0.0,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn lower(&self) -> f64 {
        self.breakpoints[0]
    }

    pub fn upper(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn gamma_f(&self) -> &[f64] {
        &self.gamma_f
    }

    pub fn gamma_g(&self) -> &[f64] {
        &self.gamma_g
    }

    /// Segment lengths `Δ_k = c_{k+1} − c_k`.
    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// True for `σ > 1`, where the chords no longer bound from one side.
    pub fn general_sigma(&self) -> bool {
        self.sigma > 1.0
    }

    pub fn num_segments(&self) -> usize {
        self.lengths.len()
    }

    /// Largest gap `ε − max(Φ_f, Φ_g)` over the segments that were cut by
    /// bisection (the last segment is excluded). Measures how far the
    /// bisection stopped short of the maximal breakpoint.
    pub fn max_slack(&self) -> f64 {
        self.max_slack
    }

    /// `(Φ_f, Φ_g)` per segment.
    pub fn segment_errors(&self) -> Vec<(f64, f64)> {
        self.breakpoints
            .windows(2)
            .map(|w| {
                (
                    segment_max_error_f(self.sigma, w[0], w[1]).0,
                    segment_max_error_g(self.sigma, w[0], w[1]).0,
                )
            })
            .collect()
    }

    fn locate(&self, t: f64) -> Result<usize> {
        let tol = 1e-9 * self.upper().max(1.0);
        if t < self.lower() - tol || t > self.upper() + tol {
            return Err(CnlError::InvalidArgument(format!(
                "t = {t} outside [{}, {}]",
                self.lower(),
                self.upper()
            )));
        }
        let k = self.breakpoints[1..].partition_point(|&c| c < t);
        Ok(k.min(self.num_segments() - 1))
    }

    /// Piecewise chord of `f` at `t`.
    pub fn fhat(&self, t: f64) -> Result<f64> {
        let k = self.locate(t)?;
        let c = self.breakpoints[k];
        Ok(f_value(self.sigma, c) + self.gamma_f[k] * (t - c))
    }

    /// Piecewise chord of `g` at `t`.
    pub fn ghat(&self, t: f64) -> Result<f64> {
        let k = self.locate(t)?;
        let c = self.breakpoints[k];
        Ok(g_value(self.sigma, c) + self.gamma_g[k] * (t - c))
    }
}

/// Splits `[lower, upper]` into the fewest segments on which both chords
/// stay within relative error `eps`.
///
/// Each segment is stretched as far as bisection allows: the next
/// breakpoint is the last accepted midpoint once the bracket is narrower
/// than `delta` (default `1e-7·(U−L)`). Before bisecting, the remaining
/// interval is tested as a whole so the final segment always ends exactly
/// at `upper` without exceeding `eps`.
pub fn discretize_interval(
    sigma: f64,
    lower: f64,
    upper: f64,
    eps: f64,
    delta: Option<f64>,
) -> Result<PiecewiseApprox> {
    if !(lower > 0.0 && lower <= upper && upper.is_finite()) {
        return Err(CnlError::InvalidArgument(format!(
            "invalid interval [{lower}, {upper}]"
        )));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(CnlError::InvalidArgument(format!("eps = {eps} outside (0, 1)")));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(CnlError::InvalidArgument(format!("sigma = {sigma} must be >= 0")));
    }
    let delta = delta.unwrap_or(DEFAULT_DELTA_REL * (upper - lower));
    if !(delta > 0.0) && upper > lower {
        return Err(CnlError::InvalidArgument(format!("delta = {delta} must be positive")));
    }
    if sigma == 1.0 || upper == lower {
        return PiecewiseApprox::from_breakpoints(sigma, vec![lower, upper], eps);
    }

    let mut breakpoints = vec![lower];
    let mut slack: f64 = 0.0;
    let mut c = lower;
    loop {
        if segment_error_max(sigma, c, upper) <= eps {
            breakpoints.push(upper);
            break;
        }
        let (mut a, mut b) = (c, upper);
        let mut accepted_err = None;
        while b - a > delta {
            let u = 0.5 * (a + b);
            let err = segment_error_max(sigma, c, u);
            if err <= eps {
                a = u;
                accepted_err = Some(err);
            } else {
                b = u;
            }
        }
        let Some(err) = accepted_err else {
            return Err(CnlError::InvalidArgument(format!(
                "no admissible segment starts at {c}; delta = {delta} is too coarse for eps = {eps}"
            )));
        };
        slack = slack.max(eps - err);
        breakpoints.push(a);
        c = a;
        if breakpoints.len() > MAX_SEGMENTS {
            return Err(CnlError::InvalidArgument(format!(
                "more than {MAX_SEGMENTS} segments needed for eps = {eps}"
            )));
        }
    }
    let mut pw = PiecewiseApprox::from_breakpoints(sigma, breakpoints, eps)?;
    pw.max_slack = slack;
    Ok(pw)
}

/// Theoretical range for the number of segments the discretization needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnBounds {
    pub lower: usize,
    /// `None` when the bound is undefined (`σ > 1`).
    pub upper: Option<usize>,
    /// False when `eps` lies outside the range where the lower bound holds;
    /// `lower` is then reported as 1.
    pub lower_valid: bool,
    /// Root of `ln(t^(σ-1) + 1) + (1−σ) ln(t+1) = ln(2^(2−σ)(1+ε))`.
    pub t_f_eps: Option<f64>,
    /// Root of `ln(t^σ + 1) − σ ln(t+1) = (1−σ) ln 2 + ln(1−ε)`; infinite
    /// when the right side is not positive.
    pub t_g_eps: Option<f64>,
    /// Closed-form relaxations of the two roots.
    pub t_f_star: Option<f64>,
    pub t_g_star: Option<f64>,
    /// Segment lower bound from the closed forms; never above `lower`.
    pub closed_form_lower: usize,
}

fn bisect_root(h: impl Fn(f64) -> f64, target: f64, increasing: bool) -> f64 {
    let below = |t: f64| if increasing { h(t) < target } else { h(t) > target };
    let mut lo = 1.0;
    let mut hi = 2.0;
    while below(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return f64::INFINITY;
        }
    }
    while (hi - lo) > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if below(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn segments_from_roots(log_ratio: f64, tf: f64, tg: f64) -> usize {
    let inv = |t: f64| if t.is_finite() { 1.0 / t.ln() } else { 0.0 };
    let k = log_ratio * inv(tf).max(inv(tg));
    ((k - 1e-9).ceil() as usize).max(1)
}

/// Lower and upper bounds on the segment count returned by
/// [`discretize_interval`] for `σ ∈ [0, 1]`.
pub fn kn_bounds(sigma: f64, lower: f64, upper: f64, eps: f64) -> Result<KnBounds> {
    if !(lower > 0.0 && lower <= upper && upper.is_finite()) {
        return Err(CnlError::InvalidArgument(format!(
            "invalid interval [{lower}, {upper}]"
        )));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(CnlError::InvalidArgument(format!("eps = {eps} outside (0, 1)")));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(CnlError::InvalidArgument(format!("sigma = {sigma} must be >= 0")));
    }
    let degraded = KnBounds {
        lower: 1,
        upper: None,
        lower_valid: false,
        t_f_eps: None,
        t_g_eps: None,
        t_f_star: None,
        t_g_star: None,
        closed_form_lower: 1,
    };
    if sigma == 1.0 {
        return Ok(KnBounds {
            upper: Some(1),
            lower_valid: true,
            ..degraded
        });
    }
    if sigma > 1.0 {
        return Ok(degraded);
    }

    let log_ratio = (upper / lower).ln();
    let raw_upper =
        log_ratio * ((1.0 - sigma) / eps.ln_1p() - sigma / (-eps).ln_1p()) + 1.0;
    let upper_count = Some(((raw_upper + 1e-9).floor() as usize).max(1));

    let ln2 = std::f64::consts::LN_2;
    let valid = eps <= 1.0 - 2f64.powf(sigma - 1.0);
    if !valid {
        return Ok(KnBounds {
            upper: upper_count,
            ..degraded
        });
    }

    let f_target = (2.0 - sigma) * ln2 + eps.ln_1p();
    let tf = bisect_root(
        |t| (f_value(sigma, t) + 1.0).ln() + (1.0 - sigma) * (t + 1.0).ln(),
        f_target,
        true,
    );
    let g_target = (1.0 - sigma) * ln2 + (-eps).ln_1p();
    let tg = if sigma == 0.0 || g_target <= 0.0 {
        f64::INFINITY
    } else {
        bisect_root(
            |t| (g_value(sigma, t) + 1.0).ln() - sigma * (t + 1.0).ln(),
            g_target,
            false,
        )
    };

    let tf_star = ((eps.ln_1p() + (2.0 - sigma) * ln2) / (1.0 - sigma)).exp() - 1.0;
    let g_base = 2f64.powf(1.0 - sigma) * (1.0 - eps) - 1.0;
    let tg_star = if sigma > 0.0 && g_base > 0.0 {
        (1.0 / g_base).powf(1.0 / sigma)
    } else {
        f64::INFINITY
    };

    Ok(KnBounds {
        lower: segments_from_roots(log_ratio, tf, tg),
        upper: upper_count,
        lower_valid: true,
        t_f_eps: Some(tf),
        t_g_eps: Some(tg),
        t_f_star: Some(tf_star),
        t_g_star: Some(tg_star),
        closed_form_lower: segments_from_roots(log_ratio, tf_star, tg_star),
    })
}
