//! Sample ingestion, pooling and numerical pre-conditioning.
//!
//! The two raw samples are pooled into a sorted knot sequence with signed
//! weights `c_i = #x_at(z_i)/m - #y_at(z_i)/n`. All statistics downstream are
//! functions of these knots and weights alone.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// The two raw samples. Values are validated to be finite on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSamples {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl TwoSamples {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::validation("sample x is empty (need m >= 1)"));
        }
        if y.is_empty() {
            return Err(Error::validation("sample y is empty (need n >= 1)"));
        }
        for (name, v) in [("x", &x), ("y", &y)] {
            if let Some(i) = v.iter().position(|t| !t.is_finite()) {
                return Err(Error::Validation(format!(
                    "sample {name} contains a non-finite value at index {i}"
                )));
            }
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn m(&self) -> usize {
        self.x.len()
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Both samples negated (`x -> -x`, `y -> -y`).
    pub fn reflected(&self) -> Self {
        Self {
            x: self.x.iter().map(|v| -v).collect(),
            y: self.y.iter().map(|v| -v).collect(),
        }
    }

    /// Both samples multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(
            self.x.iter().map(|v| s * v).collect(),
            self.y.iter().map(|v| s * v).collect(),
        )
    }

    /// Samples swapped (`(x, y) -> (y, x)`).
    pub fn swapped(&self) -> Self {
        Self {
            x: self.y.clone(),
            y: self.x.clone(),
        }
    }
}

/// Input CSV layout for [`ingest_samples`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsvFormat {
    /// One decimal value per line, one file per sample.
    OneColumn,
    /// Two columns `sample,value` with a header line; rows labeled `x` or
    /// `y`. Both paths may point at the same file.
    Labeled,
}

/// Read the two samples from CSV files.
pub fn ingest_samples(
    path_x: impl AsRef<Path>,
    path_y: impl AsRef<Path>,
    format: CsvFormat,
) -> Result<TwoSamples> {
    let (x, y) = match format {
        CsvFormat::OneColumn => (
            parse_one_column(path_x.as_ref())?,
            parse_one_column(path_y.as_ref())?,
        ),
        CsvFormat::Labeled => (
            parse_labeled(path_x.as_ref(), "x")?,
            parse_labeled(path_y.as_ref(), "y")?,
        ),
    };
    TwoSamples::new(x, y)
}

fn read_named(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn parse_one_column(path: &Path) -> Result<Vec<f64>> {
    let text = read_named(path)?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| Error::Parse {
            path: path.display().to_string(),
            line: idx + 1,
            msg: format!("cannot parse {line:?} as a number"),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: idx + 1,
                msg: format!("non-finite value {line:?}"),
            });
        }
        out.push(v);
    }
    Ok(out)
}

fn parse_labeled(path: &Path, label: &str) -> Result<Vec<f64>> {
    let text = read_named(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "sample,value" => {}
        Some((_, header)) => {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: 1,
                msg: format!("expected header \"sample,value\", found {:?}", header.trim()),
            })
        }
        None => {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: 1,
                msg: "empty file".into(),
            })
        }
    }
    let mut out = Vec::new();
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (tag, value) = line.split_once(',').ok_or_else(|| Error::Parse {
            path: path.display().to_string(),
            line: idx + 1,
            msg: format!("expected \"label,value\", found {line:?}"),
        })?;
        let tag = tag.trim();
        if tag != "x" && tag != "y" {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: idx + 1,
                msg: format!("unknown sample label {tag:?} (expected \"x\" or \"y\")"),
            });
        }
        if tag != label {
            continue;
        }
        let v: f64 = value.trim().parse().map_err(|_| Error::Parse {
            path: path.display().to_string(),
            line: idx + 1,
            msg: format!("cannot parse {:?} as a number", value.trim()),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: idx + 1,
                msg: format!("non-finite value {:?}", value.trim()),
            });
        }
        out.push(v);
    }
    Ok(out)
}

/// Pooled sample: strictly increasing knots with signed weights.
///
/// Tied values (within or across samples) are merged into a single knot with
/// the summed weight; a knot whose merged weight is exactly zero is dropped.
/// `scale` records the multiplicative rescaling applied to the knots
/// (see [`rescale`]); order-k statistics computed from rescaled knots must be
/// multiplied by `scale^k` to be reported in original units.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledSample {
    knots: Vec<f64>,
    weights: Vec<f64>,
    m: usize,
    n: usize,
    scale: f64,
}

impl PooledSample {
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }
}

fn sorted_copy(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    if !out.windows(2).all(|w| w[0] <= w[1]) {
        out.sort_unstable_by(|a, b| a.partial_cmp(b).expect("values validated finite"));
    }
    out
}

/// Pool the two samples into sorted knots with signed weights.
pub fn pool_and_sort(s: &TwoSamples) -> PooledSample {
    let m = s.m();
    let n = s.n();
    let xs = sorted_copy(s.x());
    let ys = sorted_copy(s.y());

    let mut knots = Vec::with_capacity(m + n);
    let mut weights = Vec::with_capacity(m + n);
    let (mut i, mut j) = (0usize, 0usize);
    while i < m || j < n {
        let v = match (xs.get(i), ys.get(j)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        let mut cx = 0usize;
        while i < m && xs[i] == v {
            cx += 1;
            i += 1;
        }
        let mut cy = 0usize;
        while j < n && ys[j] == v {
            cy += 1;
            j += 1;
        }
        // Exact-rational zero test: cx/m - cy/n == 0 iff cx*n == cy*m.
        if (cx as u128) * (n as u128) != (cy as u128) * (m as u128) {
            knots.push(v);
            weights.push(cx as f64 / m as f64 - cy as f64 / n as f64);
        }
    }

    PooledSample {
        knots,
        weights,
        m,
        n,
        scale: 1.0,
    }
}

/// Divide all knots by `s = max(1, max_i |z_i|)` and record the factor.
///
/// Only multiplicative rescaling is allowed: the function class is pinned at
/// 0, so 0 must map to 0.
pub fn rescale(p: PooledSample) -> PooledSample {
    let max_abs = p
        .knots
        .iter()
        .fold(0.0f64, |acc, z| acc.max(z.abs()));
    let s = max_abs.max(1.0);
    if s == 1.0 {
        return p;
    }
    PooledSample {
        knots: p.knots.iter().map(|z| z / s).collect(),
        weights: p.weights,
        m: p.m,
        n: p.n,
        scale: p.scale * s,
    }
}
