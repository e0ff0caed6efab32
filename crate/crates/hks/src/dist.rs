//! Distribution specifications for oracles, null simulation and experiments.
//!
//! Specs are parsed from a small text language used by the CLI and config
//! files:
//!
//! ```text
//! normal:MEAN,SD            e.g. normal:0,1.2   (SD, not variance)
//! uniform:A,B
//! t:DF
//! piecewise:B0,B1,..,BL;H1,..,HL   constant density H_i on [B_{i-1}, B_i]
//! mix:W1*SPEC1+W2*SPEC2+..
//! ```

use rand::distributions::Distribution as RandDistribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DistributionSpec {
    Normal { mean: f64, std_dev: f64 },
    Uniform { a: f64, b: f64 },
    StudentT { df: f64 },
    /// Piecewise-constant density: `heights[i]` on `[breaks[i], breaks[i+1]]`.
    Piecewise { breaks: Vec<f64>, heights: Vec<f64> },
    Mixture { weights: Vec<f64>, components: Vec<DistributionSpec> },
}

impl DistributionSpec {
    pub fn normal(mean: f64, std_dev: f64) -> Self {
        Self::Normal { mean, std_dev }
    }

    pub fn uniform(a: f64, b: f64) -> Self {
        Self::Uniform { a, b }
    }

    pub fn student_t(df: f64) -> Self {
        Self::StudentT { df }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Normal { mean, std_dev } => {
                if !mean.is_finite() || !std_dev.is_finite() || *std_dev <= 0.0 {
                    return Err(Error::validation("normal requires finite mean and sd > 0"));
                }
            }
            Self::Uniform { a, b } => {
                if !a.is_finite() || !b.is_finite() || b <= a {
                    return Err(Error::validation("uniform requires finite a < b"));
                }
            }
            Self::StudentT { df } => {
                if !df.is_finite() || *df <= 0.0 {
                    return Err(Error::validation("t requires df > 0"));
                }
            }
            Self::Piecewise { breaks, heights } => {
                if breaks.len() != heights.len() + 1 || heights.is_empty() {
                    return Err(Error::validation(
                        "piecewise requires L+1 breakpoints for L heights",
                    ));
                }
                if !breaks.iter().all(|b| b.is_finite())
                    || !breaks.windows(2).all(|w| w[0] < w[1])
                {
                    return Err(Error::validation(
                        "piecewise breakpoints must be finite and strictly increasing",
                    ));
                }
                if heights.iter().any(|h| !h.is_finite() || *h < 0.0) {
                    return Err(Error::validation("piecewise heights must be >= 0"));
                }
                let mass: f64 = heights
                    .iter()
                    .zip(breaks.windows(2))
                    .map(|(h, w)| h * (w[1] - w[0]))
                    .sum();
                if (mass - 1.0).abs() > 1e-8 {
                    return Err(Error::Validation(format!(
                        "piecewise density integrates to {mass}, expected 1 within 1e-8"
                    )));
                }
            }
            Self::Mixture { weights, components } => {
                if weights.len() != components.len() || components.is_empty() {
                    return Err(Error::validation(
                        "mixture requires one weight per component",
                    ));
                }
                if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                    return Err(Error::validation("mixture weights must be >= 0"));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-8 {
                    return Err(Error::Validation(format!(
                        "mixture weights sum to {total}, expected 1 within 1e-8"
                    )));
                }
                for c in components {
                    c.validate()?;
                }
            }
        }
        Ok(())
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::Normal { mean, std_dev } => statrs::distribution::Normal::new(*mean, *std_dev)
                .expect("validated")
                .cdf(x),
            Self::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
            Self::StudentT { df } => statrs::distribution::StudentsT::new(0.0, 1.0, *df)
                .expect("validated")
                .cdf(x),
            Self::Piecewise { breaks, heights } => {
                if x <= breaks[0] {
                    return 0.0;
                }
                let mut acc = 0.0;
                for (h, w) in heights.iter().zip(breaks.windows(2)) {
                    if x >= w[1] {
                        acc += h * (w[1] - w[0]);
                    } else {
                        acc += h * (x - w[0]);
                        break;
                    }
                }
                acc.clamp(0.0, 1.0)
            }
            Self::Mixture { weights, components } => weights
                .iter()
                .zip(components)
                .map(|(w, c)| w * c.cdf(x))
                .sum(),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            Self::Normal { mean, std_dev } => statrs::distribution::Normal::new(*mean, *std_dev)
                .expect("validated")
                .pdf(x),
            Self::Uniform { a, b } => {
                if x >= *a && x <= *b {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            Self::StudentT { df } => statrs::distribution::StudentsT::new(0.0, 1.0, *df)
                .expect("validated")
                .pdf(x),
            Self::Piecewise { breaks, heights } => {
                if x < breaks[0] || x > *breaks.last().unwrap() {
                    return 0.0;
                }
                let i = breaks.partition_point(|b| *b <= x);
                heights[i.saturating_sub(1).min(heights.len() - 1)]
            }
            Self::Mixture { weights, components } => weights
                .iter()
                .zip(components)
                .map(|(w, c)| w * c.pdf(x))
                .sum(),
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        self.pdf(x).ln()
    }

    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        match self {
            Self::Normal { mean, std_dev } => statrs::distribution::Normal::new(*mean, *std_dev)
                .expect("validated")
                .inverse_cdf(p),
            Self::Uniform { a, b } => a + p * (b - a),
            Self::StudentT { df } => statrs::distribution::StudentsT::new(0.0, 1.0, *df)
                .expect("validated")
                .inverse_cdf(p),
            Self::Piecewise { breaks, heights } => {
                let mut acc = 0.0;
                for (h, w) in heights.iter().zip(breaks.windows(2)) {
                    let seg = h * (w[1] - w[0]);
                    if p <= acc + seg && *h > 0.0 {
                        return w[0] + (p - acc) / h;
                    }
                    acc += seg;
                }
                *breaks.last().unwrap()
            }
            Self::Mixture { .. } => {
                // bisection on the CDF
                let (mut lo, mut hi) = self.quantile_bracket(p);
                for _ in 0..200 {
                    if hi - lo <= 1e-12 * (1.0 + lo.abs().max(hi.abs())) {
                        break;
                    }
                    let mid = 0.5 * (lo + hi);
                    if self.cdf(mid) < p {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }

    fn quantile_bracket(&self, p: f64) -> (f64, f64) {
        if let Self::Mixture { components, .. } = self {
            let pl = (p * 1e-3).max(1e-14);
            let ph = 1.0 - ((1.0 - p) * 1e-3).max(1e-14);
            let lo = components
                .iter()
                .map(|c| c.quantile(pl))
                .fold(f64::INFINITY, f64::min);
            let hi = components
                .iter()
                .map(|c| c.quantile(ph))
                .fold(f64::NEG_INFINITY, f64::max);
            (lo - 1.0, hi + 1.0)
        } else {
            (self.quantile(1e-14), self.quantile(1.0 - 1e-14))
        }
    }

    /// Deterministic sampling: `n` draws from a ChaCha stream seeded by
    /// `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        self.sample_into(&mut rng, n, &mut out);
        out
    }

    /// Draw `n` values from an existing stream.
    pub fn sample_into(&self, rng: &mut ChaCha8Rng, n: usize, out: &mut Vec<f64>) {
        match self {
            Self::Normal { mean, std_dev } => {
                let d = rand_distr::Normal::new(*mean, *std_dev).expect("validated");
                out.extend((0..n).map(|_| d.sample(rng)));
            }
            Self::Uniform { a, b } => {
                let d = rand::distributions::Uniform::new(*a, *b);
                out.extend((0..n).map(|_| d.sample(rng)));
            }
            Self::StudentT { df } => {
                let d = rand_distr::StudentT::new(*df).expect("validated");
                out.extend((0..n).map(|_| d.sample(rng)));
            }
            Self::Piecewise { .. } => {
                out.extend((0..n).map(|_| self.quantile(rng.gen::<f64>())));
            }
            Self::Mixture { weights, components } => {
                let mut one = Vec::with_capacity(1);
                for _ in 0..n {
                    let mut u: f64 = rng.gen();
                    let mut idx = components.len() - 1;
                    for (i, w) in weights.iter().enumerate() {
                        if u < *w {
                            idx = i;
                            break;
                        }
                        u -= w;
                    }
                    one.clear();
                    components[idx].sample_into(rng, 1, &mut one);
                    out.push(one[0]);
                }
            }
        }
    }

    /// Parse the spec mini-language (see module docs).
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let (family, rest) = s.split_once(':').ok_or_else(|| {
            Error::Validation(format!(
                "distribution spec {s:?}: expected FAMILY:PARAMS"
            ))
        })?;
        let spec = match family.trim() {
            "normal" | "n" => {
                let (mean, sd) = two_params(rest, s)?;
                Self::Normal { mean, std_dev: sd }
            }
            "uniform" | "u" => {
                let (a, b) = two_params(rest, s)?;
                Self::Uniform { a, b }
            }
            "t" => Self::StudentT {
                df: one_param(rest, s)?,
            },
            "piecewise" | "pw" => {
                let (bs, hs) = rest.split_once(';').ok_or_else(|| {
                    Error::Validation(format!(
                        "distribution spec {s:?}: piecewise needs BREAKS;HEIGHTS"
                    ))
                })?;
                Self::Piecewise {
                    breaks: param_list(bs, s)?,
                    heights: param_list(hs, s)?,
                }
            }
            "mix" => {
                let mut weights = Vec::new();
                let mut components = Vec::new();
                for part in rest.split('+') {
                    let (w, sub) = part.split_once('*').ok_or_else(|| {
                        Error::Validation(format!(
                            "distribution spec {s:?}: mixture components look like W*SPEC"
                        ))
                    })?;
                    weights.push(w.trim().parse::<f64>().map_err(|_| {
                        Error::Validation(format!("distribution spec {s:?}: bad weight {w:?}"))
                    })?);
                    components.push(Self::parse(sub)?);
                }
                Self::Mixture { weights, components }
            }
            other => {
                return Err(Error::Validation(format!(
                    "unknown distribution family {other:?} in {s:?}"
                )))
            }
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Canonical text form (round-trips through [`DistributionSpec::parse`]).
    pub fn spec_string(&self) -> String {
        match self {
            Self::Normal { mean, std_dev } => format!("normal:{mean},{std_dev}"),
            Self::Uniform { a, b } => format!("uniform:{a},{b}"),
            Self::StudentT { df } => format!("t:{df}"),
            Self::Piecewise { breaks, heights } => {
                let b: Vec<String> = breaks.iter().map(|v| v.to_string()).collect();
                let h: Vec<String> = heights.iter().map(|v| v.to_string()).collect();
                format!("piecewise:{};{}", b.join(","), h.join(","))
            }
            Self::Mixture { weights, components } => {
                let parts: Vec<String> = weights
                    .iter()
                    .zip(components)
                    .map(|(w, c)| format!("{w}*{}", c.spec_string()))
                    .collect();
                format!("mix:{}", parts.join("+"))
            }
        }
    }
}

fn one_param(rest: &str, whole: &str) -> Result<f64> {
    rest.trim()
        .parse()
        .map_err(|_| Error::Validation(format!("distribution spec {whole:?}: bad parameter")))
}

fn two_params(rest: &str, whole: &str) -> Result<(f64, f64)> {
    let v = param_list(rest, whole)?;
    if v.len() != 2 {
        return Err(Error::Validation(format!(
            "distribution spec {whole:?}: expected two parameters"
        )));
    }
    Ok((v[0], v[1]))
}

fn param_list(rest: &str, whole: &str) -> Result<Vec<f64>> {
    rest.split(',')
        .map(|p| {
            p.trim().parse().map_err(|_| {
                Error::Validation(format!("distribution spec {whole:?}: bad parameter {p:?}"))
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cdf_examples() {
        assert_relative_eq!(DistributionSpec::normal(0.0, 1.0).cdf(0.0), 0.5);
        assert_relative_eq!(DistributionSpec::uniform(0.0, 1.0).cdf(0.25), 0.25);
        assert_relative_eq!(
            DistributionSpec::student_t(3.0).cdf(0.0),
            0.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn parse_round_trip() {
        for s in [
            "normal:0,1.2",
            "uniform:-1.5,2",
            "t:3",
            "piecewise:0,0.5,1;0.8,1.2",
            "mix:0.97*normal:0,1+0.03*uniform:2.5,3.5",
        ] {
            let spec = DistributionSpec::parse(s).unwrap();
            let again = DistributionSpec::parse(&spec.spec_string()).unwrap();
            assert_eq!(spec, again, "{s}");
        }
        assert!(DistributionSpec::parse("cauchy:0,1").is_err());
        assert!(DistributionSpec::parse("normal:0,-1").is_err());
    }

    #[test]
    fn sampling_matches_moments() {
        let spec = DistributionSpec::uniform(0.0, 1.0);
        let draws = spec.sample(1_000_000, 42);
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!((mean - 0.5).abs() < 2e-3, "mean {mean}");

        let spec = DistributionSpec::normal(0.0, 1.0);
        let draws = spec.sample(1_000_000, 7);
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|v| v * v).sum::<f64>() / draws.len() as f64 - mean * mean;
        assert!(mean.abs() < 0.01 && (var - 1.0).abs() < 0.01, "{mean} {var}");
    }

    #[test]
    fn student_t_median_is_zero() {
        let spec = DistributionSpec::student_t(3.0);
        let mut draws = spec.sample(1_000_000, 11);
        draws.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        let median = draws[draws.len() / 2];
        assert!(median.abs() < 0.005, "median {median}");
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = DistributionSpec::parse("mix:0.5*normal:0,1+0.5*t:3").unwrap();
        assert_eq!(spec.sample(100, 3), spec.sample(100, 3));
        assert_ne!(spec.sample(100, 3), spec.sample(100, 4));
    }

    #[test]
    fn piecewise_cdf_quantile_agree() {
        let spec = DistributionSpec::Piecewise {
            breaks: vec![0.0, 0.25, 0.5, 1.0],
            heights: vec![2.0, 0.0, 1.0],
        };
        spec.validate().unwrap();
        for p in [0.01, 0.2, 0.5, 0.55, 0.9, 0.999] {
            let q = spec.quantile(p);
            assert_relative_eq!(spec.cdf(q), p, epsilon = 1e-9);
        }
    }

    #[test]
    fn mixture_quantile_inverts_cdf() {
        let spec = DistributionSpec::parse("mix:0.97*normal:0,1+0.03*uniform:2.5,3.5").unwrap();
        for p in [0.001, 0.3, 0.5, 0.97, 0.999] {
            let q = spec.quantile(p);
            assert_relative_eq!(spec.cdf(q), p, epsilon = 1e-9);
        }
    }
}
