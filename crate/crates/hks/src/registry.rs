//! Name-keyed registry of two-sample statistics.
//!
//! Every statistic in the crate sits behind [`TwoSampleStat`] and can be
//! built at runtime from a spec string of the form `name` or
//! `name:key=value,key=value`, e.g. `hks:k=2`, `mmd_gauss:bw=1.5`, `ks`.
//! Experiment configs and the CLI select tests this way; callers can
//! register additional statistics (the experiment harness adds the
//! likelihood-ratio oracle bound to its distribution pair).

use std::collections::BTreeMap;

use crate::baselines;
use crate::error::{Error, Result};
use crate::samples::TwoSamples;
use crate::statistic;

/// A two-sample statistic selectable by name. Larger values indicate more
/// evidence against the null.
pub trait TwoSampleStat: Send + Sync {
    /// Canonical name, including resolved parameters.
    fn name(&self) -> String;
    fn compute(&self, s: &TwoSamples) -> Result<f64>;
}

pub type ParamMap = BTreeMap<String, String>;

type Factory = Box<dyn Fn(&ParamMap) -> Result<Box<dyn TwoSampleStat>> + Send + Sync>;

/// Split `name:k=2,eps=1e-9` into the name and its parameter map.
pub fn parse_stat_spec(spec: &str) -> Result<(String, ParamMap)> {
    let spec = spec.trim();
    let (name, rest) = match spec.split_once(':') {
        Some((n, r)) => (n.trim(), r.trim()),
        None => (spec, ""),
    };
    if name.is_empty() {
        return Err(Error::validation("empty statistic name"));
    }
    let mut params = ParamMap::new();
    if !rest.is_empty() {
        for pair in rest.split(',') {
            let (k, v) = pair.split_once('=').ok_or_else(|| {
                Error::Validation(format!("statistic spec {spec:?}: expected key=value, got {pair:?}"))
            })?;
            params.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    Ok((name.to_string(), params))
}

fn take_usize(params: &mut ParamMap, key: &str) -> Result<Option<usize>> {
    match params.remove(key) {
        None => Ok(None),
        Some(v) => v
            .parse()
            .map(Some)
            .map_err(|_| Error::Validation(format!("parameter {key}={v:?} is not a nonnegative integer"))),
    }
}

fn take_f64(params: &mut ParamMap, key: &str) -> Result<Option<f64>> {
    match params.remove(key) {
        None => Ok(None),
        Some(v) => v
            .parse()
            .map(Some)
            .map_err(|_| Error::Validation(format!("parameter {key}={v:?} is not a number"))),
    }
}

fn reject_leftovers(name: &str, params: &ParamMap) -> Result<()> {
    if let Some(key) = params.keys().next() {
        return Err(Error::Validation(format!(
            "statistic {name:?} does not accept parameter {key:?}"
        )));
    }
    Ok(())
}

/// For parameterless statistics registered by callers: reject any parameter.
pub fn reject_no_params(name: &str, params: &ParamMap) -> Result<()> {
    reject_leftovers(name, params)
}

struct HksStat {
    cfg: statistic::HksConfig,
    label: &'static str,
}

impl TwoSampleStat for HksStat {
    fn name(&self) -> String {
        format!("{}:k={}", self.label, self.cfg.order)
    }

    fn compute(&self, s: &TwoSamples) -> Result<f64> {
        Ok(self.cfg.compute(s)?.statistic)
    }
}

struct AggregateStat {
    k: usize,
    eps: Option<f64>,
}

impl TwoSampleStat for AggregateStat {
    fn name(&self) -> String {
        format!("hks_agg:k={}", self.k)
    }

    fn compute(&self, s: &TwoSamples) -> Result<f64> {
        let eps = self
            .eps
            .unwrap_or_else(|| statistic::HksConfig::exact(self.k).resolve_eps(s.m() + s.n()));
        statistic::hks_aggregate(s, self.k, eps)
    }
}

struct KsStat;

impl TwoSampleStat for KsStat {
    fn name(&self) -> String {
        "ks".into()
    }

    fn compute(&self, s: &TwoSamples) -> Result<f64> {
        Ok(statistic::ks_classic(s)?.statistic)
    }
}

struct EnergyStat;

impl TwoSampleStat for EnergyStat {
    fn name(&self) -> String {
        "energy".into()
    }

    fn compute(&self, s: &TwoSamples) -> Result<f64> {
        Ok(baselines::energy_distance(s)?.statistic)
    }
}

struct MmdGaussStat {
    bandwidth: baselines::Bandwidth,
}

impl TwoSampleStat for MmdGaussStat {
    fn name(&self) -> String {
        match self.bandwidth {
            baselines::Bandwidth::Auto => "mmd_gauss".into(),
            baselines::Bandwidth::Fixed(v) => format!("mmd_gauss:bw={v}"),
        }
    }

    fn compute(&self, s: &TwoSamples) -> Result<f64> {
        Ok(baselines::mmd_gaussian(s, self.bandwidth)?.statistic)
    }
}

struct MmdPolyStat {
    d: usize,
}

impl TwoSampleStat for MmdPolyStat {
    fn name(&self) -> String {
        format!("mmd_poly:d={}", self.d)
    }

    fn compute(&self, s: &TwoSamples) -> Result<f64> {
        Ok(baselines::mmd_polynomial(s, self.d)?.statistic)
    }
}

struct AndersonDarlingStat;

impl TwoSampleStat for AndersonDarlingStat {
    fn name(&self) -> String {
        "anderson_darling".into()
    }

    fn compute(&self, s: &TwoSamples) -> Result<f64> {
        Ok(baselines::anderson_darling(s)?.statistic)
    }
}

/// Registry mapping statistic names to factories.
pub struct StatRegistry {
    factories: BTreeMap<String, Factory>,
}

impl Default for StatRegistry {
    fn default() -> Self {
        Self::standard()
    }
}

impl StatRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    /// Registry with every statistic shipped by this crate.
    pub fn standard() -> Self {
        let mut reg = Self::empty();
        for (label, method) in [
            ("hks", statistic::Method::Exact),
            ("hks_grid", statistic::Method::Grid),
            ("hks_wang", statistic::Method::Wang),
        ] {
            reg.register(label, move |params| {
                let mut params = params.clone();
                let k = take_usize(&mut params, "k")?.ok_or_else(|| {
                    Error::Validation(format!("statistic {label:?} requires k=<order>"))
                })?;
                let eps = take_f64(&mut params, "eps")?;
                reject_leftovers(label, &params)?;
                let mut cfg = statistic::HksConfig { order: k, method, eps: None };
                if let Some(e) = eps {
                    cfg = cfg.with_eps(e);
                }
                Ok(Box::new(HksStat { cfg, label }) as Box<dyn TwoSampleStat>)
            });
        }
        reg.register("hks_agg", |params| {
            let mut params = params.clone();
            let k = take_usize(&mut params, "k")?
                .ok_or_else(|| Error::validation("statistic \"hks_agg\" requires k=<order>"))?;
            let eps = take_f64(&mut params, "eps")?;
            reject_leftovers("hks_agg", &params)?;
            Ok(Box::new(AggregateStat { k, eps }) as Box<dyn TwoSampleStat>)
        });
        reg.register("ks", |params| {
            reject_leftovers("ks", params)?;
            Ok(Box::new(KsStat) as Box<dyn TwoSampleStat>)
        });
        reg.register("energy", |params| {
            reject_leftovers("energy", params)?;
            Ok(Box::new(EnergyStat) as Box<dyn TwoSampleStat>)
        });
        reg.register("mmd_gauss", |params| {
            let mut params = params.clone();
            let bandwidth = match params.remove("bw") {
                None => baselines::Bandwidth::Auto,
                Some(v) if v == "auto" => baselines::Bandwidth::Auto,
                Some(v) => baselines::Bandwidth::Fixed(v.parse().map_err(|_| {
                    Error::Validation(format!("parameter bw={v:?} is not a number or \"auto\""))
                })?),
            };
            reject_leftovers("mmd_gauss", &params)?;
            Ok(Box::new(MmdGaussStat { bandwidth }) as Box<dyn TwoSampleStat>)
        });
        reg.register("mmd_poly", |params| {
            let mut params = params.clone();
            let d = take_usize(&mut params, "d")?
                .ok_or_else(|| Error::validation("statistic \"mmd_poly\" requires d=<degree>"))?;
            reject_leftovers("mmd_poly", &params)?;
            Ok(Box::new(MmdPolyStat { d }) as Box<dyn TwoSampleStat>)
        });
        reg.register("anderson_darling", |params| {
            reject_leftovers("anderson_darling", params)?;
            Ok(Box::new(AndersonDarlingStat) as Box<dyn TwoSampleStat>)
        });
        reg.register("ad", |params| {
            reject_leftovers("ad", params)?;
            Ok(Box::new(AndersonDarlingStat) as Box<dyn TwoSampleStat>)
        });
        reg
    }

    pub fn register<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(&ParamMap) -> Result<Box<dyn TwoSampleStat>> + Send + Sync + 'static,
    {
        self.factories.insert(name.to_string(), Box::new(factory));
    }

    /// Build a statistic from its spec string.
    pub fn build(&self, spec: &str) -> Result<Box<dyn TwoSampleStat>> {
        let (name, params) = parse_stat_spec(spec)?;
        let factory = self.factories.get(&name).ok_or_else(|| {
            Error::Validation(format!(
                "unknown statistic {name:?}; available: {}",
                self.names().join(", ")
            ))
        })?;
        factory(&params)
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(|s| s.as_str()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn builds_and_computes_by_name() {
        let reg = StatRegistry::standard();
        let s = TwoSamples::new(vec![1.0], vec![2.0]).unwrap();
        let cases = [
            ("hks:k=2", 1.5),
            ("hks_grid:k=2", 1.5),
            ("hks_wang:k=2", 0.5),
            ("ks", 1.0),
            ("energy", 2.0),
            ("mmd_poly:d=1", 1.0),
            ("hks_agg:k=1", 2.0),
        ];
        for (spec, expected) in cases {
            let stat = reg.build(spec).unwrap();
            assert_relative_eq!(stat.compute(&s).unwrap(), expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn canonical_names_round_trip() {
        let reg = StatRegistry::standard();
        for spec in ["hks:k=3", "mmd_gauss", "mmd_poly:d=2", "anderson_darling"] {
            let stat = reg.build(spec).unwrap();
            let again = reg.build(&stat.name()).unwrap();
            assert_eq!(stat.name(), again.name());
        }
    }

    #[test]
    fn unknown_names_and_params_are_rejected() {
        let reg = StatRegistry::standard();
        assert!(reg.build("wasserstein").is_err());
        assert!(reg.build("hks").is_err()); // missing k
        assert!(reg.build("hks:k=2,mystery=1").is_err());
        assert!(reg.build("ks:k=1").is_err());
    }

    #[test]
    fn callers_can_register_extra_statistics() {
        let mut reg = StatRegistry::standard();
        struct Range;
        impl TwoSampleStat for Range {
            fn name(&self) -> String {
                "range_gap".into()
            }
            fn compute(&self, s: &TwoSamples) -> Result<f64> {
                let mx = s.x().iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v));
                let my = s.y().iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v));
                Ok((mx - my).abs())
            }
        }
        reg.register("range_gap", |params| {
            reject_leftovers("range_gap", params)?;
            Ok(Box::new(Range) as Box<dyn TwoSampleStat>)
        });
        let s = TwoSamples::new(vec![1.0], vec![2.0]).unwrap();
        assert_eq!(reg.build("range_gap").unwrap().compute(&s).unwrap(), 1.0);
    }
}
