use std::collections::BTreeMap;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::sampler::Stratum;
use crate::error::{Error, Result};
use crate::lattice::Limits;

/// How radii are chosen for each dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RadiusRule {
    List {
        values: Vec<u32>,
    },
    Range {
        from: u32,
        to: u32,
    },
    /// Powers of two with `c1 √d <= N <= c2 d`.
    Dyadic {
        c1: f64,
        c2: f64,
    },
    /// Powers of two with `1 <= N <= c0 √d`.
    SmallDyadic {
        c0: f64,
    },
    /// The smallest `N` with `κ(d, N) >= value`.
    Kappa {
        value: u32,
    },
    /// Every `N <= max_n` with `κ_min <= κ(d, N) <= κ_max`.
    KappaRange {
        kappa_min: f64,
        kappa_max: f64,
        max_n: u32,
    },
}

impl RadiusRule {
    pub fn radii(&self, d: u32) -> Vec<u32> {
        let sd = (d as f64).sqrt();
        match self {
            RadiusRule::List { values } => values.clone(),
            RadiusRule::Range { from, to } => (*from..=*to).collect(),
            RadiusRule::Dyadic { c1, c2 } => (0..31)
                .map(|m| 1u32 << m)
                .filter(|&n| n as f64 >= c1 * sd && n as f64 <= c2 * d as f64)
                .collect(),
            RadiusRule::SmallDyadic { c0 } => (0..31).map(|m| 1u32 << m).filter(|&n| n as f64 <= c0 * sd).collect(),
            RadiusRule::Kappa { value } => {
                let target = (*value as u64).pow(2) * d as u64;
                let mut n = (target as f64).sqrt() as u64;
                while n * n < target {
                    n += 1;
                }
                while n > 0 && (n - 1) * (n - 1) >= target {
                    n -= 1;
                }
                vec![n as u32]
            }
            RadiusRule::KappaRange {
                kappa_min,
                kappa_max,
                max_n,
            } => (1..=*max_n)
                .filter(|&n| {
                    let k = n as f64 / sd;
                    k >= *kappa_min && k <= *kappa_max
                })
                .collect(),
        }
    }
}

/// A declarative sweep definition, read from TOML.
///
/// Dimensions come from `dims` and `dim_range`; radii from `radii`; explicit
/// `(d, N)` pairs may be added with `cells`. The remaining keys are suite
/// parameters and are ignored by suites that do not use them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub dims: Vec<u32>,
    pub dim_range: Option<[u32; 2]>,
    pub radii: Option<RadiusRule>,
    #[serde(default)]
    pub cells: Vec<[u32; 2]>,
    #[serde(default)]
    pub strata: BTreeMap<Stratum, usize>,
    pub rational_denominator: Option<u64>,
    pub work_budget: Option<u64>,

    /// Rational parameters written as `"p/q"`.
    pub eps: Option<String>,
    pub eps1: Option<String>,
    pub eps2: Option<String>,
    #[serde(default)]
    pub r: Vec<u32>,
    #[serde(default)]
    pub k: Vec<u64>,
    pub n_max: Option<u64>,
    pub limit_d: Option<u32>,
    pub cases: Option<usize>,
    pub c_hat: Option<f64>,
    #[serde(default)]
    pub delta: Vec<f64>,
    #[serde(default)]
    pub real_radii: Vec<f64>,
    #[serde(default)]
    pub shifts: Vec<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub samples: Option<usize>,
}

pub fn parse_ratio(s: &str) -> Result<Ratio<u64>> {
    let bad = || Error::Config(format!("expected a rational \"p/q\", got {s:?}"));
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s.trim(), "1"),
    };
    let p: u64 = p.parse().map_err(|_| bad())?;
    let q: u64 = q.parse().map_err(|_| bad())?;
    if q == 0 {
        return Err(bad());
    }
    Ok(Ratio::new(p, q))
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

impl SweepGrid {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// `overrides` is TOML laid over `base` key by key; tables merge.
    pub fn layered(base: &str, overrides: &str) -> Result<Self> {
        let mut b: toml::Table = toml::from_str(base).map_err(|e| Error::Config(e.to_string()))?;
        let o: toml::Table = toml::from_str(overrides).map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut b, o);
        b.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("grid serializes")
    }

    pub fn dimensions(&self) -> Vec<u32> {
        let mut dims = self.dims.clone();
        if let Some([a, b]) = self.dim_range {
            dims.extend(a..=b);
        }
        dims.sort_unstable();
        dims.dedup();
        dims
    }

    /// All `(d, N)` pairs in ascending order.
    pub fn lattice_cells(&self) -> Vec<(u32, u32)> {
        let mut out: Vec<(u32, u32)> = self.cells.iter().map(|c| (c[0], c[1])).collect();
        if let Some(rule) = &self.radii {
            for d in self.dimensions() {
                out.extend(rule.radii(d).into_iter().map(|n| (d, n)));
            }
        }
        out.retain(|&(d, n)| d > 0 && n > 0);
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn samples_per_cell(&self) -> usize {
        self.strata.values().sum()
    }

    pub fn limits(&self) -> Limits {
        let mut l = Limits::default();
        if let Some(w) = self.work_budget {
            l.work_budget = w;
        }
        l
    }

    pub fn ratio(&self, field: &str, value: &Option<String>, default: &str) -> Result<Ratio<u64>> {
        let r = parse_ratio(value.as_deref().unwrap_or(default))?;
        if *r.numer() == 0 {
            return Err(Error::Config(format!("{field} must be positive")));
        }
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_rules() {
        assert_eq!(RadiusRule::Dyadic { c1: 1.0, c2: 1.0 }.radii(16), vec![4, 8, 16]);
        assert_eq!(RadiusRule::Kappa { value: 10 }.radii(16), vec![40]);
        assert_eq!(RadiusRule::Kappa { value: 10 }.radii(2), vec![15]);
        assert_eq!(RadiusRule::SmallDyadic { c0: 1.0 }.radii(20), vec![1, 2, 4]);
        let r = RadiusRule::KappaRange {
            kappa_min: 10.0,
            kappa_max: 11.0,
            max_n: 100,
        };
        assert_eq!(r.radii(4), vec![20, 21, 22]);
    }

    #[test]
    fn toml_round_trip_and_layering() {
        let text = r#"
            seed = 9
            dims = [3, 1]
            dim_range = [2, 4]
            radii = { rule = "range", from = 1, to = 2 }
            strata = { uniform = 5, near-zero = 2 }
            eps = "1/50"
        "#;
        let g = SweepGrid::from_toml(text).unwrap();
        assert_eq!(g.dimensions(), vec![1, 2, 3, 4]);
        assert_eq!(g.lattice_cells().len(), 8);
        assert_eq!(g.samples_per_cell(), 7);
        assert_eq!(g.ratio("eps", &g.eps, "1").unwrap(), Ratio::new(1, 50));
        assert_eq!(SweepGrid::from_toml(&g.to_toml()).unwrap(), g);

        let l = SweepGrid::layered(text, "n_max = 30\nstrata = { uniform = 1 }").unwrap();
        assert_eq!(l.n_max, Some(30));
        assert_eq!(l.samples_per_cell(), 3);
    }

    #[test]
    fn malformed_grids_are_config_errors() {
        assert!(matches!(SweepGrid::from_toml("seed = \"x\""), Err(Error::Config(_))));
        assert!(matches!(SweepGrid::from_toml("bogus = 1"), Err(Error::Config(_))));
        assert!(matches!(
            SweepGrid::from_toml("radii = { rule = \"spiral\" }"),
            Err(Error::Config(_))
        ));
        assert!(parse_ratio("1/0").is_err());
    }
}
