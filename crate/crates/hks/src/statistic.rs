//! The higher-order KS statistic and its variants.
//!
//! Every variant works on the pooled, rescaled knots. The positive side
//! maximizes `|phi_i|` over the intervals `[z_{i-1}, z_i]` (with `z_0 = 0`)
//! built from the strictly positive knots; the negative side reflects the
//! data and reuses the same sweep (`g^-_t(x) = g^+_{-t}(-x)`). Results are
//! multiplied by `scale^k` to restore original units.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{horner, KnotTermTable};
use crate::roots::max_abs_on_slice;
use crate::samples::{pool_and_sort, rescale, PooledSample, TwoSamples};

/// Default maximization tolerance for the eps-approximation path (orders
/// k >= 6) when the caller does not choose one, in statistic units.
pub const DEFAULT_EPS: f64 = 1e-9;

/// Requested computation method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Exact for k <= 5; certified eps-approximation for k >= 6.
    Exact,
    /// Knot-grid statistic: candidate truncation points `{0} u Z`.
    Grid,
    /// Plus-side-only grid statistic over the sample knots.
    Wang,
}

/// Method actually used, as recorded in results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatMethod {
    Exact,
    Grid,
    EpsApprox,
    Wang,
}

/// Which one-sided function family the witness belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessSide {
    Plus,
    Minus,
}

/// Statistic value plus witness and calibration metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub order: usize,
    /// Truncation point of the witness, in original data units.
    pub witness_knot: f64,
    pub witness_side: WitnessSide,
    /// Sign of the empirical difference at the witness.
    pub witness_sign: i8,
    pub p_value: Option<f64>,
    pub method: StatMethod,
}

/// Statistic configuration used by calibration and experiment code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HksConfig {
    pub order: usize,
    pub method: Method,
    /// Maximization tolerance for k >= 6. `None` resolves to `1/N` at
    /// compute time (N = pooled size), the practical default.
    pub eps: Option<f64>,
}

impl HksConfig {
    pub fn exact(order: usize) -> Self {
        Self {
            order,
            method: Method::Exact,
            eps: None,
        }
    }

    pub fn grid(order: usize) -> Self {
        Self {
            order,
            method: Method::Grid,
            eps: None,
        }
    }

    pub fn wang(order: usize) -> Self {
        Self {
            order,
            method: Method::Wang,
            eps: None,
        }
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = Some(eps);
        self
    }

    pub fn resolve_eps(&self, pooled_size: usize) -> f64 {
        self.eps
            .unwrap_or_else(|| {
                if self.order >= 6 {
                    1.0 / pooled_size.max(1) as f64
                } else {
                    DEFAULT_EPS
                }
            })
    }

    pub fn compute(&self, s: &TwoSamples) -> Result<TestResult> {
        match self.method {
            Method::Exact => hks_exact(s, self.order, self.resolve_eps(s.m() + s.n())),
            Method::Grid => hks_grid(s, self.order),
            Method::Wang => hks_wang(s, self.order),
        }
    }
}

/// Best candidate on one side, in rescaled units. `t` is nonnegative
/// (distance from the pivot along the side's own axis).
#[derive(Debug, Clone, Copy)]
struct SideBest {
    value: f64,
    t: f64,
    sign: i8,
}

impl SideBest {
    fn origin() -> Self {
        SideBest {
            value: 0.0,
            t: 0.0,
            sign: 1,
        }
    }

    fn consider(&mut self, value: f64, t: f64, sign: i8) {
        if value > self.value || (value == self.value && t.abs() < self.t.abs()) {
            *self = SideBest { value, t, sign };
        }
    }
}

fn sign_of(v: f64) -> i8 {
    if v < 0.0 {
        -1
    } else {
        1
    }
}

/// Split a pooled sample at the pivot. Returns the positive-side knots and
/// the reflected negative-side knots (both strictly positive, ascending,
/// paired with their weights). A knot exactly at 0 contributes nothing to
/// either side: its function values vanish identically on both branches.
type SideKnots = (Vec<f64>, Vec<f64>);

fn split_sides(p: &PooledSample) -> (SideKnots, SideKnots) {
    let knots = p.knots();
    let weights = p.weights();
    let first_nonneg = knots.partition_point(|&z| z < 0.0);
    let first_pos = knots.partition_point(|&z| z <= 0.0);

    let pos = (knots[first_pos..].to_vec(), weights[first_pos..].to_vec());
    let neg: (Vec<f64>, Vec<f64>) = (
        knots[..first_nonneg].iter().rev().map(|z| -z).collect(),
        weights[..first_nonneg].iter().rev().copied().collect(),
    );
    (pos, neg)
}

/// Backward sweep evaluating each piece at its left endpoint: the candidate
/// truncation points `{0} u {knots}` of the grid statistic. For k <= 1 the
/// supremum is attained at these candidates, so the exact path shares this
/// sweep verbatim.
fn side_grid_max(knots: &[f64], weights: &[f64], table: &KnotTermTable) -> SideBest {
    let mut acc = vec![0.0; table.order() + 1];
    let mut best = SideBest::origin();
    for j in (0..knots.len()).rev() {
        table.add_term(&mut acc, weights[j], knots[j]);
        let t = if j == 0 { 0.0 } else { knots[j - 1] };
        let v = horner(&acc, t);
        best.consider(v.abs(), t, sign_of(v));
    }
    best
}

/// Backward sweep maximizing `|phi_i|` over each interval (k >= 2).
fn side_interval_max(
    knots: &[f64],
    weights: &[f64],
    table: &KnotTermTable,
    eps: f64,
) -> Result<SideBest> {
    let mut acc = vec![0.0; table.order() + 1];
    let mut best = SideBest::origin();
    for j in (0..knots.len()).rev() {
        table.add_term(&mut acc, weights[j], knots[j]);
        let lo = if j == 0 { 0.0 } else { knots[j - 1] };
        let (t, v) = max_abs_on_slice(&acc, lo, knots[j], eps)?;
        best.consider(v, t, sign_of(horner(&acc, t)));
    }
    Ok(best)
}

/// Combine the two one-sided maxima into a result in original units.
/// Argmax ties break toward the smallest `|t|`, then toward the plus side.
fn combine_sides(
    plus: SideBest,
    minus: SideBest,
    k: usize,
    scale: f64,
    method: StatMethod,
) -> TestResult {
    let minus_wins =
        minus.value > plus.value || (minus.value == plus.value && minus.t.abs() < plus.t.abs());
    let (side, best) = if minus_wins {
        (WitnessSide::Minus, minus)
    } else {
        (WitnessSide::Plus, plus)
    };
    let mut knot = match side {
        WitnessSide::Plus => best.t * scale,
        WitnessSide::Minus => -best.t * scale,
    };
    if knot == 0.0 {
        knot = 0.0; // canonicalize -0.0
    }
    TestResult {
        statistic: best.value * scale.powi(k as i32),
        order: k,
        witness_knot: knot,
        witness_side: side,
        witness_sign: best.sign,
        p_value: None,
        method,
    }
}

/// The order-k statistic: exact for k <= 5, certified eps-approximation for
/// k >= 6 (the result is tagged accordingly). O(N log N) including the sort.
pub fn hks_exact(s: &TwoSamples, k: usize, eps: f64) -> Result<TestResult> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::validation("eps must be positive"));
    }
    let pooled = rescale(pool_and_sort(s));
    let scale = pooled.scale();
    let (pos, neg) = split_sides(&pooled);
    let table = KnotTermTable::new(k);
    let method = if k <= 5 {
        StatMethod::Exact
    } else {
        StatMethod::EpsApprox
    };
    let (plus, minus) = if k <= 1 {
        (
            side_grid_max(&pos.0, &pos.1, &table),
            side_grid_max(&neg.0, &neg.1, &table),
        )
    } else {
        // eps is a contract in original units; the sweep runs on rescaled
        // knots, so tighten accordingly.
        let eps_internal = (eps / scale.powi(k as i32)).max(f64::MIN_POSITIVE);
        (
            side_interval_max(&pos.0, &pos.1, &table, eps_internal)?,
            side_interval_max(&neg.0, &neg.1, &table, eps_internal)?,
        )
    };
    Ok(combine_sides(plus, minus, k, scale, method))
}

/// Grid statistic: truncation points restricted to `{0} u Z` on each side.
/// Exact for k <= 1; within [`grid_error_bound`] of the exact value for
/// k >= 2. O(N) after the sort.
pub fn hks_grid(s: &TwoSamples, k: usize) -> Result<TestResult> {
    let pooled = rescale(pool_and_sort(s));
    let scale = pooled.scale();
    let (pos, neg) = split_sides(&pooled);
    let table = KnotTermTable::new(k);
    let plus = side_grid_max(&pos.0, &pos.1, &table);
    let minus = side_grid_max(&neg.0, &neg.1, &table);
    Ok(combine_sides(plus, minus, k, scale, StatMethod::Grid))
}

/// Plus-side-only grid statistic over the sample knots (no `t = 0`
/// augmentation, no mirrored functions).
pub fn hks_wang(s: &TwoSamples, k: usize) -> Result<TestResult> {
    let pooled = rescale(pool_and_sort(s));
    let scale = pooled.scale();
    let knots = pooled.knots();
    let weights = pooled.weights();
    let table = KnotTermTable::new(k);
    let mut acc = vec![0.0; k + 1];
    let mut best: Option<SideBest> = None;
    for j in (0..knots.len()).rev() {
        // value at t = z_j uses only knots strictly above z_j
        let v = horner(&acc, knots[j]);
        let cand = (v.abs(), knots[j], sign_of(v));
        match &mut best {
            Some(b) => b.consider(cand.0, cand.1, cand.2),
            None => {
                best = Some(SideBest {
                    value: cand.0,
                    t: cand.1,
                    sign: cand.2,
                })
            }
        }
        table.add_term(&mut acc, weights[j], knots[j]);
    }
    let best = best.unwrap_or_else(SideBest::origin);
    Ok(TestResult {
        statistic: best.value * scale.powi(k as i32),
        order: k,
        witness_knot: best.t * scale,
        witness_side: WitnessSide::Plus,
        witness_sign: best.sign,
        p_value: None,
        method: StatMethod::Wang,
    })
}

/// Classic two-sample KS statistic: maximum absolute ECDF difference over
/// the pooled points. Implemented directly from the ECDF definition,
/// independently of the piecewise-polynomial machinery.
pub fn ks_classic(s: &TwoSamples) -> Result<TestResult> {
    let m = s.m() as f64;
    let n = s.n() as f64;
    let mut xs = s.x().to_vec();
    let mut ys = s.y().to_vec();
    xs.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    ys.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());

    let mut best = SideBest::origin();
    best.t = f64::INFINITY; // so the first pooled point wins over the default
    best.value = -1.0;
    let (mut i, mut j) = (0usize, 0usize);
    while i < xs.len() || j < ys.len() {
        let v = match (xs.get(i), ys.get(j)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        while i < xs.len() && xs[i] == v {
            i += 1;
        }
        while j < ys.len() && ys[j] == v {
            j += 1;
        }
        let d = i as f64 / m - j as f64 / n;
        best.consider(d.abs(), v, sign_of(d));
    }
    Ok(TestResult {
        statistic: best.value.max(0.0),
        order: 0,
        witness_knot: best.t,
        witness_side: WitnessSide::Plus,
        witness_sign: best.sign,
        p_value: None,
        method: StatMethod::Exact,
    })
}

/// Guaranteed bound on `T - T*` for k >= 2 (vacuous below: `T = T*`):
/// `delta_N / (k-1)! * (mean|x|^(k-1) + mean|y|^(k-1))` where `delta_N` is
/// the largest gap between consecutive points of `{0} u Z`, in original
/// units.
pub fn grid_error_bound(s: &TwoSamples, k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::validation(
            "grid_error_bound requires k >= 2 (the grid statistic is exact for k <= 1)",
        ));
    }
    let mut pts: Vec<f64> = Vec::with_capacity(s.m() + s.n() + 1);
    pts.extend_from_slice(s.x());
    pts.extend_from_slice(s.y());
    pts.push(0.0);
    pts.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let delta = pts.windows(2).fold(0.0f64, |acc, w| acc.max(w[1] - w[0]));
    Ok(delta * lipschitz_moment(s, k))
}

/// `(mean|x|^(k-1) + mean|y|^(k-1)) / (k-1)!` - the Lipschitz constant of
/// the criterion in the truncation point.
pub(crate) fn lipschitz_moment(s: &TwoSamples, k: usize) -> f64 {
    let p = (k - 1) as i32;
    let fact: f64 = (1..k).map(|v| v as f64).product();
    let mx = s.x().iter().map(|v| v.abs().powi(p)).sum::<f64>() / s.m() as f64;
    let my = s.y().iter().map(|v| v.abs().powi(p)).sum::<f64>() / s.n() as f64;
    (mx + my) / fact
}

/// Binomially weighted aggregate `sum_{i=0}^k C(k,i) T_i^2` of the exact
/// statistics of orders 0..=k.
pub fn hks_aggregate(s: &TwoSamples, k: usize, eps: f64) -> Result<f64> {
    let mut total = 0.0;
    let mut binom = 1.0f64;
    for i in 0..=k {
        let t_i = hks_exact(s, i, eps)?.statistic;
        total += binom * t_i * t_i;
        binom = binom * (k - i) as f64 / (i + 1) as f64;
    }
    Ok(total)
}
