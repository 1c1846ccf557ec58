use std::collections::BTreeSet;
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Arithmetic mode carried by every spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Fast,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::Fast => "fast",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "fast" => Ok(Mode::Fast),
            other => Err(Error::InvalidArgument(format!("unknown mode `{other}`"))),
        }
    }
}

/// Resource guards shared by the counting and multiplier kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    /// Cap on estimated elementary operations of a single DP.
    pub work_budget: u64,
    /// Cap on the number of lattice points an enumeration may visit.
    pub enumeration_cap: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            work_budget: 1 << 33,
            enumeration_cap: 100_000_000,
        }
    }
}

impl Limits {
    pub(crate) fn charge(&self, op: &'static str, cost: u128) -> Result<()> {
        if cost > self.work_budget as u128 {
            Err(Error::WorkBudget {
                op,
                cost,
                cap: self.work_budget,
            })
        } else {
            Ok(())
        }
    }

    pub(crate) fn charge_enumeration(&self, op: &'static str, size: u128) -> Result<()> {
        if size > self.enumeration_cap as u128 {
            Err(Error::EnumerationCap {
                op,
                size,
                cap: self.enumeration_cap,
            })
        } else {
            Ok(())
        }
    }
}

/// The ball `B_N` in `Z^d` together with its squared-norm budget `n = N²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BallSpec {
    d: u32,
    #[serde(rename = "N")]
    radius: u32,
}

impl BallSpec {
    pub fn new(d: u32, radius: u32) -> Result<Self> {
        if d == 0 || radius == 0 {
            return Err(Error::InvalidArgument(format!(
                "ball needs d >= 1 and N >= 1, got d={d}, N={radius}"
            )));
        }
        Ok(Self { d, radius })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    /// Squared-norm budget `n = N²`.
    pub fn n(&self) -> u64 {
        self.radius as u64 * self.radius as u64
    }

    /// `κ(d, N) = N / √d`.
    pub fn kappa(&self) -> f64 {
        self.radius as f64 / (self.d as f64).sqrt()
    }

    /// `κ² = n / d`, exactly.
    pub fn kappa_sq(&self) -> Ratio<u64> {
        Ratio::new(self.n(), self.d as u64)
    }
}

impl fmt::Display for BallSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d={}, N={}", self.d, self.radius)
    }
}

/// One piece of a [`MarkedClass`] union.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum MarkedPart {
    All,
    AbsAtLeast(u64),
    AbsAtMost(u64),
    Range(i64, i64),
    Points(BTreeSet<i64>),
}

impl MarkedPart {
    fn contains(&self, v: i64) -> bool {
        match self {
            MarkedPart::All => true,
            MarkedPart::AbsAtLeast(t) => v.unsigned_abs() >= *t,
            MarkedPart::AbsAtMost(t) => v.unsigned_abs() <= *t,
            MarkedPart::Range(lo, hi) => *lo <= v && v <= *hi,
            MarkedPart::Points(set) => set.contains(&v),
        }
    }
}

impl fmt::Display for MarkedPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarkedPart::All => f.write_str("all"),
            MarkedPart::AbsAtLeast(t) => write!(f, "abs>={t}"),
            MarkedPart::AbsAtMost(t) => write!(f, "abs<={t}"),
            MarkedPart::Range(lo, hi) => write!(f, "range[{lo},{hi}]"),
            MarkedPart::Points(set) => {
                let items: Vec<String> = set.iter().map(|v| v.to_string()).collect();
                write!(f, "in{{{}}}", items.join(","))
            }
        }
    }
}

/// A set of coordinate values, given as a finite union of simple pieces.
///
/// Text form: pieces joined by `|`, each one of `all`, `none`, `abs>=T`,
/// `abs<=T`, `range[a,b]` or `in{v1,v2,...}`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MarkedClass {
    parts: Vec<MarkedPart>,
}

impl MarkedClass {
    pub fn none() -> Self {
        Self { parts: Vec::new() }
    }

    pub fn all() -> Self {
        Self {
            parts: vec![MarkedPart::All],
        }
    }

    pub fn abs_at_least(t: u64) -> Self {
        Self {
            parts: vec![MarkedPart::AbsAtLeast(t)],
        }
    }

    pub fn points(values: &[i64]) -> Self {
        Self {
            parts: vec![MarkedPart::Points(values.iter().copied().collect())],
        }
    }

    /// The class `{-1, +1}`.
    pub fn unit() -> Self {
        Self::points(&[-1, 1])
    }

    pub fn union(mut self, other: MarkedClass) -> Self {
        self.parts.extend(other.parts);
        self
    }

    pub fn contains(&self, v: i64) -> bool {
        self.parts.iter().any(|p| p.contains(v))
    }

    pub fn parse(expr: &str) -> Result<Self> {
        let mut parts = Vec::new();
        for raw in expr.split('|') {
            let tok: String = raw.chars().filter(|c| !c.is_whitespace()).collect();
            let bad = || Error::InvalidArgument(format!("bad marked-class piece `{raw}`"));
            if tok == "all" {
                parts.push(MarkedPart::All);
            } else if tok == "none" {
                continue;
            } else if let Some(t) = tok.strip_prefix("abs>=") {
                parts.push(MarkedPart::AbsAtLeast(t.parse().map_err(|_| bad())?));
            } else if let Some(t) = tok.strip_prefix("abs<=") {
                parts.push(MarkedPart::AbsAtMost(t.parse().map_err(|_| bad())?));
            } else if let Some(body) = tok.strip_prefix("range[").and_then(|s| s.strip_suffix(']')) {
                let (lo, hi) = body.split_once(',').ok_or_else(bad)?;
                let lo: i64 = lo.parse().map_err(|_| bad())?;
                let hi: i64 = hi.parse().map_err(|_| bad())?;
                if lo > hi {
                    return Err(bad());
                }
                parts.push(MarkedPart::Range(lo, hi));
            } else if let Some(body) = tok.strip_prefix("in{").and_then(|s| s.strip_suffix('}')) {
                let mut set = BTreeSet::new();
                for item in body.split(',').filter(|s| !s.is_empty()) {
                    set.insert(item.parse::<i64>().map_err(|_| bad())?);
                }
                parts.push(MarkedPart::Points(set));
            } else {
                return Err(bad());
            }
        }
        Ok(Self { parts })
    }
}

impl fmt::Display for MarkedClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return f.write_str("none");
        }
        let items: Vec<String> = self.parts.iter().map(|p| p.to_string()).collect();
        f.write_str(&items.join("|"))
    }
}

impl std::str::FromStr for MarkedClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_spec_invariants() {
        let b = BallSpec::new(16, 40).unwrap();
        assert_eq!(b.n(), 1600);
        assert_eq!(b.kappa(), 10.0);
        assert_eq!(b.kappa_sq() * Ratio::from_integer(16), Ratio::from_integer(1600));
        assert!(BallSpec::new(0, 3).is_err());
        assert!(BallSpec::new(3, 0).is_err());
    }

    #[test]
    fn marked_class_grammar_round_trips() {
        let c = MarkedClass::parse("abs>=2 | in{-1,1}").unwrap();
        assert!(c.contains(1) && c.contains(-1) && c.contains(-5));
        assert!(!c.contains(0));
        assert_eq!(MarkedClass::parse(&c.to_string()).unwrap(), c);
        assert!(!MarkedClass::parse("none").unwrap().contains(0));
        assert!(MarkedClass::parse("all").unwrap().contains(-7));
        let r = MarkedClass::parse("range[-1,2]").unwrap();
        assert!(r.contains(2) && !r.contains(3));
        assert!(MarkedClass::parse("abs>x").is_err());
        assert!(MarkedClass::parse("range[3,1]").is_err());
    }
}
