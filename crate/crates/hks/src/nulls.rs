//! Null-distribution calibration.
//!
//! Two routes: permutation resampling of the pooled sample (the practical
//! default) and simulation of the limiting Gaussian-process supremum on a
//! reference-quantile grid. Replicates derive their RNG stream from
//! (master seed, replicate index), so results are independent of thread
//! scheduling.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::samples::TwoSamples;
use crate::statistic::HksConfig;

/// Seed offset decorrelating the internal covariance Monte Carlo from the
/// draw streams.
const COV_MC_SEED_OFFSET: u64 = 0x9e37_79b9_7f4a_7c15;

/// Monte Carlo draws used to estimate covariances under a named
/// distribution.
pub const COV_MC_DRAWS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullKind {
    Permutation,
    Asymptotic,
}

/// Empirical distribution of a null statistic with quantile queries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NullDistribution {
    samples: Vec<f64>,
    kind: NullKind,
    seed: u64,
}

impl NullDistribution {
    fn new(mut samples: Vec<f64>, kind: NullKind, seed: u64) -> Self {
        samples.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        Self { samples, kind, seed }
    }

    /// Sorted null draws.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn kind(&self) -> NullKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// R-7 linearly interpolated quantile.
    pub fn quantile(&self, q: f64) -> f64 {
        let v = &self.samples;
        if v.len() == 1 {
            return v[0];
        }
        let h = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
        let i = h.floor() as usize;
        let frac = h - i as f64;
        if i + 1 >= v.len() {
            v[v.len() - 1]
        } else {
            v[i] + frac * (v[i + 1] - v[i])
        }
    }

    /// `(1 + #{null >= observed}) / (B + 1)`; never exactly zero.
    pub fn p_value_geq(&self, observed: f64) -> f64 {
        let below = self.samples.partition_point(|v| *v < observed);
        let geq = self.samples.len() - below;
        (1 + geq) as f64 / (self.samples.len() + 1) as f64
    }
}

/// Permutation null for an arbitrary statistic: `b` random relabelings of
/// the pooled sample into sizes (m, n), the statistic recomputed per
/// relabeling. Returns the null distribution and the p-value of the
/// observed statistic. Deterministic given `seed`; replicates run in
/// parallel on per-replicate streams.
pub fn permutation_null_with<F>(
    s: &TwoSamples,
    stat: F,
    b: usize,
    seed: u64,
) -> Result<(NullDistribution, f64)>
where
    F: Fn(&TwoSamples) -> Result<f64> + Sync,
{
    if b < 1 {
        return Err(Error::validation("permutation null requires B >= 1"));
    }
    let observed = stat(s)?;
    let m = s.m();
    let pooled: Vec<f64> = s.x().iter().chain(s.y()).copied().collect();

    let draws: Result<Vec<f64>> = (0..b)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(rep as u64 + 1);
            let mut values = pooled.clone();
            values.shuffle(&mut rng);
            let y = values.split_off(m);
            let relabeled = TwoSamples::new(values, y)?;
            stat(&relabeled)
        })
        .collect();
    let null = NullDistribution::new(draws?, NullKind::Permutation, seed);
    let p = null.p_value_geq(observed);
    Ok((null, p))
}

/// [`permutation_null_with`] for the configured higher-order statistic.
pub fn permutation_null(
    s: &TwoSamples,
    cfg: &HksConfig,
    b: usize,
    seed: u64,
) -> Result<(NullDistribution, f64)> {
    permutation_null_with(s, |rel| Ok(cfg.compute(rel)?.statistic), b, seed)
}

/// Reference distribution for the asymptotic null: a named spec or a pooled
/// empirical sample (plug-in).
#[derive(Debug, Clone)]
pub enum GpReference {
    Spec(DistributionSpec),
    Empirical(Vec<f64>),
}

impl GpReference {
    fn quantile(&self, p: f64) -> f64 {
        match self {
            GpReference::Spec(s) => s.quantile(p),
            GpReference::Empirical(v) => {
                let mut sorted = v.clone();
                sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
                let h = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
                let i = h.floor() as usize;
                let frac = h - i as f64;
                if i + 1 >= sorted.len() {
                    sorted[sorted.len() - 1]
                } else {
                    sorted[i] + frac * (sorted[i + 1] - sorted[i])
                }
            }
        }
    }
}

/// `g_t(x)`: the plus-side function for `t >= 0`, the mirrored one for
/// `t < 0`, scaled by `1/k!`.
#[inline]
fn g_value(t: f64, x: f64, k: usize, inv_k_fact: f64) -> f64 {
    let arg = if t >= 0.0 { x - t } else { t - x };
    if k == 0 {
        return if arg > 0.0 { 1.0 } else { 0.0 };
    }
    if arg <= 0.0 {
        return 0.0;
    }
    let mut acc = inv_k_fact;
    for _ in 0..k {
        acc *= arg;
    }
    acc
}

/// Covariance of `g_s(X)` and `g_t(X)` under the reference: the closed form
/// `+/- F(min)(1 - F(max))` for k = 0 under a named spec, the plug-in sample
/// covariance for an empirical reference, and Monte Carlo with
/// [`COV_MC_DRAWS`] draws (fixed internal seed) otherwise.
pub fn gp_covariance(reference: &GpReference, k: usize, s: f64, t: f64) -> Result<f64> {
    match reference {
        GpReference::Spec(spec) if k == 0 => {
            spec.validate()?;
            let (lo, hi) = if s <= t { (s, t) } else { (t, s) };
            let c = spec.cdf(lo) * (1.0 - spec.cdf(hi));
            let same_branch = (s >= 0.0) == (t >= 0.0);
            Ok(if same_branch { c } else { -c })
        }
        GpReference::Spec(spec) => {
            spec.validate()?;
            let draws = spec.sample(COV_MC_DRAWS, COV_MC_SEED_OFFSET);
            Ok(sample_cov(&draws, k, s, t))
        }
        GpReference::Empirical(values) => {
            if values.is_empty() {
                return Err(Error::validation("empirical reference is empty"));
            }
            Ok(sample_cov(values, k, s, t))
        }
    }
}

fn sample_cov(draws: &[f64], k: usize, s: f64, t: f64) -> f64 {
    let inv_k_fact: f64 = 1.0 / (1..=k).map(|v| v as f64).product::<f64>();
    let n = draws.len() as f64;
    let (mut ms, mut mt, mut mst) = (0.0, 0.0, 0.0);
    for &x in draws {
        let a = g_value(s, x, k, inv_k_fact);
        let b = g_value(t, x, k, inv_k_fact);
        ms += a;
        mt += b;
        mst += a * b;
    }
    mst / n - (ms / n) * (mt / n)
}

/// Discretization of the limiting Gaussian process: grid knots, covariance
/// matrix, and the diagonal jitter that made the factorization succeed.
#[derive(Debug, Clone)]
pub struct GpGrid {
    pub t_grid: Vec<f64>,
    pub cov: DMatrix<f64>,
    pub jitter: f64,
}

/// Build the discretization grid and covariance for the order-k limit under
/// the reference: knots at the reference quantiles of levels
/// `(1..=grid_size)/(grid_size+1)`, augmented with 0 and the 0.001/0.999
/// tail quantiles.
pub fn build_gp_grid(
    reference: &GpReference,
    k: usize,
    grid_size: usize,
    cov_seed: u64,
) -> Result<GpGrid> {
    if grid_size < 2 {
        return Err(Error::validation("grid_size must be at least 2"));
    }
    if let GpReference::Spec(spec) = reference {
        spec.validate()?;
    }
    let mut t_grid: Vec<f64> = (1..=grid_size)
        .map(|i| reference.quantile(i as f64 / (grid_size + 1) as f64))
        .collect();
    t_grid.push(0.0);
    t_grid.push(reference.quantile(0.001));
    t_grid.push(reference.quantile(0.999));
    t_grid.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    t_grid.dedup();

    let d = t_grid.len();
    let cov = match reference {
        GpReference::Spec(spec) if k == 0 => {
            let f: Vec<f64> = t_grid.iter().map(|&t| spec.cdf(t)).collect();
            DMatrix::from_fn(d, d, |i, j| {
                let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
                let c = f[lo] * (1.0 - f[hi]);
                if (t_grid[i] >= 0.0) == (t_grid[j] >= 0.0) {
                    c
                } else {
                    -c
                }
            })
        }
        GpReference::Spec(spec) => {
            let draws = spec.sample(COV_MC_DRAWS, cov_seed);
            cov_matrix_from_draws(&t_grid, k, &draws)
        }
        GpReference::Empirical(values) => {
            if values.is_empty() {
                return Err(Error::validation("empirical reference is empty"));
            }
            cov_matrix_from_draws(&t_grid, k, values)
        }
    };

    // symmetric by construction up to roundoff; enforce exactly
    let cov = (&cov + cov.transpose()) * 0.5;
    Ok(GpGrid {
        t_grid,
        cov,
        jitter: 0.0,
    })
}

/// Centered second-moment matrix of `(g_t(X))_t` over the draws, chunked so
/// memory stays bounded and summed in deterministic chunk order.
fn cov_matrix_from_draws(t_grid: &[f64], k: usize, draws: &[f64]) -> DMatrix<f64> {
    let d = t_grid.len();
    let n = draws.len();
    let inv_k_fact: f64 = 1.0 / (1..=k).map(|v| v as f64).product::<f64>();

    let mut means = vec![0.0f64; d];
    for (i, &t) in t_grid.iter().enumerate() {
        let mut acc = 0.0;
        for &x in draws {
            acc += g_value(t, x, k, inv_k_fact);
        }
        means[i] = acc / n as f64;
    }

    const CHUNK: usize = 8192;
    let partials: Vec<DMatrix<f64>> = draws
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut g = DMatrix::<f64>::zeros(d, chunk.len());
            for (j, &x) in chunk.iter().enumerate() {
                for (i, &t) in t_grid.iter().enumerate() {
                    g[(i, j)] = g_value(t, x, k, inv_k_fact) - means[i];
                }
            }
            &g * g.transpose()
        })
        .collect();
    let mut total = DMatrix::<f64>::zeros(d, d);
    for p in partials {
        total += p;
    }
    total / n as f64
}

const JITTER_LADDER: [f64; 4] = [0.0, 1e-12, 1e-10, 1e-8];

/// Draws of the limiting `sqrt(mn/(m+n)) * T`: suprema of `|G g_t|` over the
/// grid, where the Gaussian vector is sampled via a Cholesky factor of the
/// (jittered) covariance.
pub fn asymptotic_null(
    reference: &GpReference,
    k: usize,
    grid_size: usize,
    b: usize,
    seed: u64,
) -> Result<NullDistribution> {
    if b < 1 {
        return Err(Error::validation("asymptotic_null requires B >= 1"));
    }
    let mut grid = build_gp_grid(reference, k, grid_size, seed ^ COV_MC_SEED_OFFSET)?;
    let d = grid.t_grid.len();

    let mut chol = None;
    for jitter in JITTER_LADDER {
        let mut m = grid.cov.clone();
        for i in 0..d {
            m[(i, i)] += jitter;
        }
        if let Some(c) = m.cholesky() {
            grid.jitter = jitter;
            chol = Some(c);
            break;
        }
    }
    let chol = chol.ok_or_else(|| {
        Error::numerical(format!(
            "covariance factorization failed at the maximum jitter {:.0e}",
            JITTER_LADDER[JITTER_LADDER.len() - 1]
        ))
    })?;
    let l = chol.l();
    // lower-triangular factor, row-major, for a tight mat-vec
    let lrows: Vec<f64> = (0..d)
        .flat_map(|i| (0..=i).map(move |j| (i, j)))
        .map(|(i, j)| l[(i, j)])
        .collect();

    let draws: Vec<f64> = (0..b)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(rep as u64 + 1);
            let z: Vec<f64> = (0..d)
                .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
                .collect();
            let mut sup = 0.0f64;
            let mut off = 0usize;
            for i in 0..d {
                let mut acc = 0.0;
                for (j, zj) in z[..=i].iter().enumerate() {
                    acc += lrows[off + j] * zj;
                }
                off += i + 1;
                sup = sup.max(acc.abs());
            }
            sup
        })
        .collect();

    Ok(NullDistribution::new(draws, NullKind::Asymptotic, seed))
}

/// Concentration-based rejection threshold
/// `c0 * alpha^(-1/p) * (1/sqrt(m) + 1/sqrt(n))`.
pub fn decision_threshold(alpha: f64, m: usize, n: usize, c0: f64, p_moments: f64) -> Result<f64> {
    if alpha.is_nan() || alpha <= 0.0 || alpha > 1.0 {
        return Err(Error::validation("alpha must lie in (0, 1]"));
    }
    if c0.is_nan() || c0 <= 0.0 {
        return Err(Error::validation("c0 must be positive"));
    }
    if p_moments.is_nan() || p_moments < 2.0 {
        return Err(Error::validation("p_moments must be at least 2"));
    }
    if m < 1 || n < 1 {
        return Err(Error::validation("m and n must be at least 1"));
    }
    Ok(c0 * alpha.powf(-1.0 / p_moments) * (1.0 / (m as f64).sqrt() + 1.0 / (n as f64).sqrt()))
}
