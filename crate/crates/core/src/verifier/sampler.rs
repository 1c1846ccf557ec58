use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::multiplier::TorusPoint;

/// Regions of `T^d` sampled separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stratum {
    /// Zero, the corner, `e_1 / 2`, all coordinates `1/4`, half of the corner.
    Structured,
    /// `‖ξ‖ <= min(0.1/κ, 1/2)`, radius log-uniform over three decades.
    NearZero,
    Uniform,
    /// Every `|ξ_i|` in `(1/4, 1/2]`, pushed towards `1/2`.
    NearCorner,
    /// One to three nonzero coordinates.
    Axis,
    /// Coordinates `k/M`.
    Rational,
}

impl Stratum {
    pub fn as_str(self) -> &'static str {
        match self {
            Stratum::Structured => "structured",
            Stratum::NearZero => "near-zero",
            Stratum::Uniform => "uniform",
            Stratum::NearCorner => "near-corner",
            Stratum::Axis => "axis",
            Stratum::Rational => "rational",
        }
    }

    /// Whether samples depend on `κ` and so on the radius.
    pub fn per_radius(self) -> bool {
        self == Stratum::NearZero
    }
}

pub const STRUCTURED_POINTS: usize = 5;

fn structured(d: usize, idx: usize) -> TorusPoint {
    let mut c = vec![0.0; d];
    match idx % STRUCTURED_POINTS {
        0 => {}
        1 => c.fill(-0.5),
        2 => c[0] = -0.5,
        3 => c.fill(0.25),
        _ => c[..d.div_ceil(2)].fill(-0.5),
    }
    TorusPoint::new(c)
}

/// One sample drawn from its own generator.
#[derive(Debug, Clone)]
pub struct Sample {
    pub id: String,
    pub xi: TorusPoint,
}

/// Deterministic stratified frequencies: sample `idx` of a stratum depends
/// only on the seed, the suite, the dimension, the stratum, the index and,
/// for near-zero samples, the radius.
#[derive(Debug, Clone)]
pub struct Sampler {
    pub seed: u64,
    pub suite: String,
    pub rational_denominator: u64,
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

impl Sampler {
    pub fn new(seed: u64, suite: &str, rational_denominator: u64) -> Self {
        Self {
            seed,
            suite: suite.to_string(),
            rational_denominator: rational_denominator.max(1),
        }
    }

    fn rng(&self, d: usize, radius: Option<u32>, stratum: Stratum, idx: usize) -> ChaCha8Rng {
        let key = format!(
            "{}:{}:{}:{}:{}:{}",
            self.seed,
            self.suite,
            d,
            radius.map(|r| r.to_string()).unwrap_or_else(|| "-".into()),
            stratum.as_str(),
            idx
        );
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&Sha256::digest(key.as_bytes()));
        ChaCha8Rng::from_seed(seed)
    }

    pub fn sample(&self, stratum: Stratum, d: usize, radius: u32, idx: usize) -> Sample {
        let tag = if stratum.per_radius() { Some(radius) } else { None };
        let mut rng = self.rng(d, tag, stratum, idx);
        let kappa = radius as f64 / (d as f64).sqrt();
        let xi = match stratum {
            Stratum::Structured => structured(d, idx),
            Stratum::Uniform => TorusPoint::new((0..d).map(|_| rng.random::<f64>() - 0.5).collect()),
            Stratum::NearZero => {
                let dir: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                let len = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                let rmax = (0.1 / kappa).min(0.5);
                let r = rmax * log_uniform(&mut rng, 1e-3, 1.0);
                TorusPoint::new(dir.iter().map(|x| x / len * r).collect())
            }
            Stratum::NearCorner => {
                let scale = log_uniform(&mut rng, 1e-3, 1.0);
                TorusPoint::new(
                    (0..d)
                        .map(|_| {
                            let a = 0.5 - scale * 0.25 * rng.random::<f64>();
                            if rng.random::<bool>() {
                                a
                            } else {
                                -a
                            }
                        })
                        .collect(),
                )
            }
            Stratum::Axis => {
                let k = rng.random_range(1..=3usize.min(d));
                let idx = rand::seq::index::sample(&mut rng, d, k);
                let mut c = vec![0.0; d];
                for i in idx.iter() {
                    let a = log_uniform(&mut rng, 1e-3, 0.5);
                    c[i] = if rng.random::<bool>() { a } else { -a };
                }
                TorusPoint::new(c)
            }
            Stratum::Rational => {
                let m = self.rational_denominator as i64;
                let num: Vec<i64> = (0..d).map(|_| rng.random_range(0..m) - m / 2).collect();
                TorusPoint::rational(&num, m as u64).expect("positive denominator")
            }
        };
        Sample {
            id: format!("{}-{idx}", stratum.as_str()),
            xi,
        }
    }

    /// All samples of `counts` for a cell, in stratum order. Structured
    /// counts are capped at the number of distinct structured points.
    pub fn cell_samples(
        &self,
        counts: &std::collections::BTreeMap<Stratum, usize>,
        d: usize,
        radius: u32,
        filter: impl Fn(Stratum) -> bool,
    ) -> Vec<Sample> {
        let mut out = Vec::new();
        for (&s, &count) in counts {
            if !filter(s) {
                continue;
            }
            let count = if s == Stratum::Structured {
                count.min(STRUCTURED_POINTS)
            } else {
                count
            };
            out.extend((0..count).map(|i| self.sample(s, d, radius, i)));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_are_deterministic_and_in_range() {
        let s = Sampler::new(7, "t", 64);
        for st in [
            Stratum::Structured,
            Stratum::NearZero,
            Stratum::Uniform,
            Stratum::NearCorner,
            Stratum::Axis,
            Stratum::Rational,
        ] {
            for i in 0..20 {
                let a = s.sample(st, 9, 6, i);
                let b = s.sample(st, 9, 6, i);
                assert_eq!(a.xi, b.xi);
                assert!(a.xi.components().iter().all(|&x| (-0.5..0.5).contains(&x)));
            }
        }
        let other = Sampler::new(8, "t", 64);
        assert_ne!(
            s.sample(Stratum::Uniform, 4, 1, 0).xi,
            other.sample(Stratum::Uniform, 4, 1, 0).xi
        );
    }

    #[test]
    fn strata_land_in_their_regions() {
        let s = Sampler::new(1, "t", 64);
        for i in 0..50 {
            let z = s.sample(Stratum::NearZero, 16, 40, i).xi;
            assert!(z.norm() <= 0.1 / 10.0 + 1e-12);
            let c = s.sample(Stratum::NearCorner, 16, 40, i).xi;
            assert_eq!(c.v_set().len(), 16);
            let a = s.sample(Stratum::Axis, 16, 40, i).xi;
            let nz = a.components().iter().filter(|&&x| x != 0.0).count();
            assert!((1..=3).contains(&nz));
            assert!(s.sample(Stratum::Rational, 16, 40, i).xi.rational_form().is_some());
        }
        // Only near-zero samples depend on the radius.
        assert_eq!(
            s.sample(Stratum::Uniform, 5, 1, 3).xi,
            s.sample(Stratum::Uniform, 5, 9, 3).xi
        );
        assert_ne!(
            s.sample(Stratum::NearZero, 5, 1, 3).xi,
            s.sample(Stratum::NearZero, 5, 9, 3).xi
        );
        assert!(s.sample(Stratum::Structured, 5, 1, 0).xi.is_zero());
    }
}
