//! Real roots of low-degree polynomials and certified interval maximization.
//!
//! Critical points come from closed-form solves (linear through quartic,
//! always polished by a few Newton steps on the derivative) or, for higher
//! degrees, from a Sturm-sequence isolation pass followed by bisection down
//! to a width that certifies the requested eps.
//!
//! All solvers normalize to a monic polynomial first, so globally negating
//! the input produces bitwise-identical roots; the statistic layer relies on
//! this for exact symmetry under swapping the two samples.

use crate::error::{Error, Result};
use crate::poly::horner;

/// Relative threshold below which a leading coefficient is treated as a
/// degree collapse.
const LEAD_TRIM: f64 = 1e-12;

/// Imaginary-part tolerance for accepting the real part of a borderline
/// complex pair: `1e-9 * (1 + |root|)`.
fn near_real(im: f64, re: f64) -> bool {
    im.abs() <= 1e-9 * (1.0 + re.abs())
}

fn effective_degree(coeffs: &[f64]) -> usize {
    let max_abs = coeffs.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    if max_abs == 0.0 {
        return 0;
    }
    let mut d = coeffs.len().saturating_sub(1);
    while d > 0 && coeffs[d].abs() <= LEAD_TRIM * max_abs {
        d -= 1;
    }
    d
}

fn eval_poly_derivs(coeffs: &[f64], t: f64) -> (f64, f64) {
    // value and first derivative in one pass
    let mut p = 0.0;
    let mut dp = 0.0;
    for &c in coeffs.iter().rev() {
        dp = dp * t + p;
        p = p * t + c;
    }
    (p, dp)
}

/// A few Newton steps on `q` around `t0`, with the step clamped to the
/// interval span so a bad derivative cannot fling the iterate away.
fn polish_root(q: &[f64], t0: f64, span: f64) -> f64 {
    let mut t = t0;
    for _ in 0..3 {
        let (v, dv) = eval_poly_derivs(q, t);
        if dv == 0.0 || !v.is_finite() || !dv.is_finite() {
            break;
        }
        let step = v / dv;
        if !step.is_finite() {
            break;
        }
        t -= step.clamp(-span, span);
    }
    if t.is_finite() {
        t
    } else {
        t0
    }
}

/// Real roots of a monic quadratic `t^2 + b t + c`; borderline complex pairs
/// collapse to their real part under the imaginary tolerance.
fn roots_quadratic_monic(b: f64, c: f64, out: &mut Vec<f64>) {
    let disc = b * b - 4.0 * c;
    if disc < 0.0 {
        let re = -b / 2.0;
        let im = (-disc).sqrt() / 2.0;
        if near_real(im, re) {
            out.push(re);
        }
        return;
    }
    let sq = disc.sqrt();
    let r1 = if b >= 0.0 {
        (-b - sq) / 2.0
    } else {
        (-b + sq) / 2.0
    };
    out.push(r1);
    if r1 != 0.0 {
        out.push(c / r1);
    } else {
        out.push(-b - r1);
    }
}

/// Real roots of a monic cubic `t^3 + b t^2 + c t + d`.
fn roots_cubic_monic(b: f64, c: f64, d: f64, out: &mut Vec<f64>) {
    // depressed: u^3 + p u + q, t = u - b/3
    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let disc = (q / 2.0) * (q / 2.0) + (p / 3.0) * (p / 3.0) * (p / 3.0);
    if disc > 0.0 {
        // one real root; deflate for the (possibly near-real) pair
        let s = disc.sqrt();
        let a_term = (-q / 2.0 + s).cbrt();
        let b_term = (-q / 2.0 - s).cbrt();
        let u0 = a_term + b_term;
        out.push(u0 - shift);
        // remaining quadratic u^2 + u0 u + (p + u0^2)
        let mut pair = Vec::new();
        roots_quadratic_monic(u0, p + u0 * u0, &mut pair);
        for u in pair {
            out.push(u - shift);
        }
    } else {
        // three real roots via the trigonometric form
        let r = (-p / 3.0).max(0.0).sqrt();
        if r == 0.0 {
            out.push(-shift);
            return;
        }
        let arg = (3.0 * q / (2.0 * p * r)).clamp(-1.0, 1.0);
        let theta = arg.acos();
        for k in 0..3 {
            let u = 2.0 * r * ((theta - 2.0 * std::f64::consts::PI * k as f64) / 3.0).cos();
            out.push(u - shift);
        }
    }
}

/// Real roots of a monic quartic `t^4 + b t^3 + c t^2 + d t + e`.
fn roots_quartic_monic(b: f64, c: f64, d: f64, e: f64, out: &mut Vec<f64>) {
    // depressed: y^4 + p y^2 + q y + r, t = y - b/4
    let shift = b / 4.0;
    let b2 = b * b;
    let p = c - 3.0 * b2 / 8.0;
    let q = d - b * c / 2.0 + b2 * b / 8.0;
    let r = e - b * d / 4.0 + b2 * c / 16.0 - 3.0 * b2 * b2 / 256.0;

    let scale = 1.0 + p.abs() + q.abs() + r.abs();
    if q.abs() <= 1e-14 * scale {
        // biquadratic in w = y^2
        let mut ws = Vec::new();
        roots_quadratic_monic(p, r, &mut ws);
        for w in ws {
            if w >= 0.0 {
                let y = w.sqrt();
                out.push(y - shift);
                out.push(-y - shift);
            } else if near_real((-w).sqrt(), 0.0) {
                out.push(-shift);
            }
        }
        return;
    }

    // resolvent cubic z^3 - p z^2 - 4 r z + (4 p r - q^2); any real root with
    // z > p splits the quartic into two quadratics
    let mut zs = Vec::new();
    roots_cubic_monic(-p, -4.0 * r, 4.0 * p * r - q * q, &mut zs);
    let z = zs
        .into_iter()
        .filter(|z| z.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    let s2 = z - p;
    if s2.is_nan() || s2 <= 1e-14 * scale {
        // fall back to treating it as (nearly) biquadratic
        let mut ws = Vec::new();
        roots_quadratic_monic(p, r, &mut ws);
        for w in ws {
            if w >= 0.0 {
                let y = w.sqrt();
                out.push(y - shift);
                out.push(-y - shift);
            }
        }
        return;
    }
    let s = s2.sqrt();
    let u = (z - q / s) / 2.0;
    let v = (z + q / s) / 2.0;
    let mut pair = Vec::new();
    roots_quadratic_monic(s, u, &mut pair);
    roots_quadratic_monic(-s, v, &mut pair);
    for y in pair {
        out.push(y - shift);
    }
}

/// Real roots of `q` (any representation, degree <= 4 after trimming),
/// polished on the original coefficients.
fn real_roots_upto4(q: &[f64], span: f64, out: &mut Vec<f64>) {
    let d = effective_degree(q);
    if d == 0 {
        return;
    }
    let lead = q[d];
    let monic: Vec<f64> = q[..d].iter().map(|c| c / lead).collect();
    match d {
        1 => out.push(-monic[0]),
        2 => roots_quadratic_monic(monic[1], monic[0], out),
        3 => roots_cubic_monic(monic[2], monic[1], monic[0], out),
        4 => roots_quartic_monic(monic[3], monic[2], monic[1], monic[0], out),
        _ => unreachable!(),
    }
    for t in out.iter_mut() {
        *t = polish_root(q, *t, span);
    }
}

// ---------------------------------------------------------------------------
// Sturm sequences for derivative degree >= 5
// ---------------------------------------------------------------------------

struct SturmChain {
    polys: Vec<Vec<f64>>,
}

fn normalize(mut p: Vec<f64>) -> Vec<f64> {
    while p.last().is_some_and(|c| *c == 0.0) {
        p.pop();
    }
    let max_abs = p.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    if max_abs > 0.0 {
        for c in &mut p {
            *c /= max_abs;
        }
    }
    p
}

/// Remainder of `u / v` (degrees deg(u) >= deg(v) >= 0).
fn poly_rem(u: &[f64], v: &[f64]) -> Vec<f64> {
    let mut r = u.to_vec();
    let dv = v.len() - 1;
    let lead = v[dv];
    while r.len() >= v.len() {
        let dr = r.len() - 1;
        let f = r[dr] / lead;
        let off = dr - dv;
        for (i, &vc) in v.iter().enumerate() {
            r[off + i] -= f * vc;
        }
        r.pop();
        while r.last().is_some_and(|c| c.abs() <= 1e-14) && r.len() > off {
            r.pop();
        }
    }
    r
}

impl SturmChain {
    fn new(q: &[f64]) -> Self {
        let p0 = normalize(q.to_vec());
        let mut polys = vec![p0.clone()];
        if p0.len() > 1 {
            let d: Vec<f64> = p0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(l, c)| l as f64 * c)
                .collect();
            polys.push(normalize(d));
            loop {
                let n = polys.len();
                if polys[n - 1].len() <= 1 {
                    break;
                }
                let rem = poly_rem(&polys[n - 2], &polys[n - 1]);
                let rem = normalize(rem);
                if rem.is_empty() || rem.iter().all(|c| c.abs() <= 1e-13) {
                    break;
                }
                polys.push(rem.iter().map(|c| -c).collect());
            }
        }
        Self { polys }
    }

    fn variations(&self, t: f64) -> usize {
        let mut count = 0;
        let mut last = 0.0f64;
        for p in &self.polys {
            let v = horner(p, t);
            if v == 0.0 {
                continue;
            }
            if last != 0.0 && (v > 0.0) != (last > 0.0) {
                count += 1;
            }
            last = v;
        }
        count
    }
}

/// Bisect `q` on a sign-changing bracket down to `width`.
fn bisect_root(q: &[f64], mut lo: f64, mut hi: f64, width: f64) -> f64 {
    let mut flo = horner(q, lo);
    if flo == 0.0 {
        return lo;
    }
    for _ in 0..200 {
        if hi - lo <= width {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = horner(q, mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Critical-point candidates of a polynomial with derivative `q` of degree
/// >= 5 on `[a, b]`: Sturm isolation, then bisection to `width`.
fn critical_points_sturm(q: &[f64], a: f64, b: f64, width: f64, out: &mut Vec<f64>) {
    let chain = SturmChain::new(q);
    if chain.polys[0].len() <= 1 {
        return;
    }
    let mut stack = vec![(a, b, chain.variations(a), chain.variations(b))];
    let mut guard = 0usize;
    while let Some((lo, hi, vlo, vhi)) = stack.pop() {
        guard += 1;
        if guard > 20_000 {
            break;
        }
        let nroots = vlo.saturating_sub(vhi);
        if nroots == 0 {
            continue;
        }
        if hi - lo <= width {
            out.push(0.5 * (lo + hi));
            continue;
        }
        if nroots == 1 && horner(q, lo) * horner(q, hi) < 0.0 {
            let t = bisect_root(q, lo, hi, width);
            out.push(polish_root(q, t, hi - lo));
            continue;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            out.push(mid);
            continue;
        }
        let vmid = chain.variations(mid);
        stack.push((lo, mid, vlo, vmid));
        stack.push((mid, hi, vmid, vhi));
    }
}

// ---------------------------------------------------------------------------
// Certified |p| maximization
// ---------------------------------------------------------------------------

/// See [`crate::poly::max_abs_on_interval`]; operates on a raw coefficient
/// slice so the statistic sweep can avoid per-interval allocation of
/// wrapper types.
pub(crate) fn max_abs_on_slice(coeffs: &[f64], a: f64, b: f64, eps: f64) -> Result<(f64, f64)> {
    if a > b {
        return Err(Error::Validation(format!(
            "invalid interval: a = {a} > b = {b}"
        )));
    }
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::validation("eps must be positive"));
    }
    let max_abs_coef = coeffs.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
    if max_abs_coef == 0.0 {
        return Ok((a, 0.0));
    }

    let mut best_t = a;
    let mut best_v = horner(coeffs, a).abs();
    let mut consider = |t: f64| {
        if !(t >= a && t <= b) {
            return;
        }
        let v = horner(coeffs, t).abs();
        if v > best_v || (v == best_v && (t.abs() < best_t.abs())) {
            best_t = t;
            best_v = v;
        }
    };
    consider(b);
    if a == b {
        return Ok((best_t, best_v));
    }

    let deg = effective_degree(coeffs);
    if deg >= 1 {
        // derivative coefficients
        let q: Vec<f64> = coeffs[1..=deg]
            .iter()
            .enumerate()
            .map(|(i, c)| (i + 1) as f64 * c)
            .collect();
        let qdeg = effective_degree(&q);
        let span = b - a;
        let mut crit: Vec<f64> = Vec::new();
        if qdeg <= 4 {
            real_roots_upto4(&q, span, &mut crit);
        } else {
            // width such that |p| changes by at most eps across a bracket
            let radius = a.abs().max(b.abs()).max(1.0);
            let mut deriv_bound = 0.0;
            let mut pow = 1.0;
            for (l, c) in coeffs.iter().enumerate().skip(1) {
                deriv_bound += l as f64 * c.abs() * pow;
                pow *= radius;
            }
            let floor = (a.abs() + b.abs() + 1.0) * f64::EPSILON;
            let width = (eps / deriv_bound.max(f64::MIN_POSITIVE)).max(floor).min(span);
            critical_points_sturm(&q, a, b, width, &mut crit);
        }
        for t in crit {
            if t.is_finite() {
                consider(t.clamp(a, b));
            }
        }
    }
    Ok((best_t, best_v))
}
