//! Piecewise polynomials in the monomial basis.
//!
//! Each statistic of order `k` reduces to maximizing `|phi_i|` over the
//! intervals between consecutive knots, where `phi_i(t)` is the degree-k
//! polynomial `(1/k!) * sum_{j>=i} c_j (z_j - t)^k`. The coefficients of all
//! pieces are produced by a backward sweep that adds one binomially expanded
//! term per knot, O(k) per step.

use crate::error::{Error, Result};
use crate::roots;

/// Dense polynomial `sum_l coeffs[l] * t^l`. An empty coefficient vector is
/// the zero polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialPoly {
    coeffs: Vec<f64>,
}

impl MonomialPoly {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::validation("polynomial coefficients must be finite"));
        }
        Ok(Self { coeffs })
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Horner evaluation.
    pub fn eval(&self, t: f64) -> f64 {
        horner(&self.coeffs, t)
    }

    /// Coefficient shift-and-scale; degree drops by one. The derivative of a
    /// constant is the zero polynomial (empty coefficients).
    pub fn derivative(&self) -> MonomialPoly {
        if self.coeffs.len() <= 1 {
            return MonomialPoly::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(l, c)| l as f64 * c)
            .collect();
        MonomialPoly { coeffs }
    }
}

pub(crate) fn horner(coeffs: &[f64], t: f64) -> f64 {
    let mut acc = 0.0;
    for &c in coeffs.iter().rev() {
        acc = acc * t + c;
    }
    acc
}

/// Certified maximization of `|poly|` over `[a, b]`.
///
/// Returns `(t_star, value)` with `value = |poly(t_star)|` and
/// `value >= max_{t in [a,b]} |poly(t)| - eps`. Candidate points are the
/// interval endpoints and the real roots of the derivative: closed-form
/// solves (polished by Newton refinement) up to derivative degree 4, and
/// Sturm-sequence isolation plus bisection beyond that. Among equal values
/// the candidate with the smallest `|t|` wins.
pub fn max_abs_on_interval(poly: &MonomialPoly, a: f64, b: f64, eps: f64) -> Result<(f64, f64)> {
    roots::max_abs_on_slice(poly.coeffs(), a, b, eps)
}

/// Degree-k polynomial pieces over intervals `[z_{i-1}, z_i]` with `z_0 = 0`.
///
/// Piece `i` (0-based) covers `[boundaries[i], boundaries[i+1]]` and stores
/// k+1 monomial coefficients in a flat row.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePoly {
    boundaries: Vec<f64>,
    coeffs: Vec<f64>,
    order: usize,
}

impl PiecewisePoly {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn num_pieces(&self) -> usize {
        self.boundaries.len().saturating_sub(1)
    }

    /// Interval boundaries `0 = z_0 < z_1 < ... < z_{N'}`.
    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn piece(&self, i: usize) -> &[f64] {
        let w = self.order + 1;
        &self.coeffs[i * w..(i + 1) * w]
    }

    pub fn piece_poly(&self, i: usize) -> MonomialPoly {
        MonomialPoly {
            coeffs: self.piece(i).to_vec(),
        }
    }

    /// Evaluate the piece covering `t` (pieces own their right endpoint;
    /// the first piece also owns 0). Returns 0 beyond the last knot.
    pub fn eval(&self, t: f64) -> f64 {
        if self.num_pieces() == 0 {
            return 0.0;
        }
        let last = *self.boundaries.last().unwrap();
        if t > last {
            return 0.0;
        }
        let i = match self
            .boundaries
            .binary_search_by(|z| z.partial_cmp(&t).unwrap())
        {
            Ok(0) | Err(0) => 0,
            Ok(i) => i - 1,
            Err(i) => i - 1,
        };
        horner(self.piece(i.min(self.num_pieces() - 1)), t)
    }
}

/// Per-knot term updater: adds the binomial expansion of
/// `(c/k!) * (z - t)^k` onto a running coefficient row in O(k).
pub(crate) struct KnotTermTable {
    k: usize,
    /// `coef[l] = (-1)^l * C(k, l) / k!`
    coef: Vec<f64>,
}

impl KnotTermTable {
    pub(crate) fn new(k: usize) -> Self {
        let k_fact: f64 = (1..=k).map(|i| i as f64).product();
        let mut coef = vec![0.0; k + 1];
        let mut binom = 1.0f64;
        for (l, slot) in coef.iter_mut().enumerate() {
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            *slot = sign * binom / k_fact;
            binom = binom * (k - l) as f64 / (l + 1) as f64;
        }
        Self { k, coef }
    }

    pub(crate) fn order(&self) -> usize {
        self.k
    }

    /// `acc[l] += c * coef[l] * z^(k-l)` for all `l`.
    pub(crate) fn add_term(&self, acc: &mut [f64], c: f64, z: f64) {
        debug_assert_eq!(acc.len(), self.k + 1);
        let mut pow = 1.0;
        for l in (0..=self.k).rev() {
            acc[l] += c * self.coef[l] * pow;
            pow *= z;
        }
    }
}

/// Build all piece coefficients by the backward recurrence
/// `phi_i = (c_i/k!)(z_i - t)^k + phi_{i+1}`, starting from `phi_{N'+1} = 0`.
///
/// `knots` must be strictly increasing and positive; `weights` has the same
/// length. Runs in O(N' * k).
pub fn build_coefficients(knots: &[f64], weights: &[f64], k: usize) -> Result<PiecewisePoly> {
    if knots.len() != weights.len() {
        return Err(Error::validation(
            "knots and weights must have equal length",
        ));
    }
    if knots.first().is_some_and(|&z| z <= 0.0) || !knots.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::validation(
            "knots must be strictly increasing and positive",
        ));
    }
    let n = knots.len();
    let w = k + 1;
    let table = KnotTermTable::new(k);
    let mut coeffs = vec![0.0; n * w];
    let mut acc = vec![0.0; w];
    for j in (0..n).rev() {
        table.add_term(&mut acc, weights[j], knots[j]);
        coeffs[j * w..(j + 1) * w].copy_from_slice(&acc);
    }
    let mut boundaries = Vec::with_capacity(n + 1);
    boundaries.push(0.0);
    boundaries.extend_from_slice(knots);
    Ok(PiecewisePoly {
        boundaries,
        coeffs,
        order: k,
    })
}
