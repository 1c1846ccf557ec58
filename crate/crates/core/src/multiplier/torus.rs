use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;

/// Exact form `ξ_i = k_i / M` with `k_i ∈ [-M/2, M/2)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalFreq {
    pub numerators: Vec<i64>,
    pub denom: u64,
}

/// A frequency `ξ ∈ T^d`, every coordinate reduced into `[-1/2, 1/2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    components: Vec<f64>,
    rational: Option<RationalFreq>,
}

fn reduce(x: f64) -> f64 {
    let y = x - (x + 0.5).floor();
    if y >= 0.5 {
        y - 1.0
    } else {
        y
    }
}

fn reduce_numerator(k: i64, m: i64) -> i64 {
    let k = k.rem_euclid(m);
    if 2 * k >= m {
        k - m
    } else {
        k
    }
}

impl TorusPoint {
    pub fn new(components: Vec<f64>) -> Self {
        Self {
            components: components.into_iter().map(reduce).collect(),
            rational: None,
        }
    }

    pub fn zero(d: usize) -> Self {
        Self::rational(&vec![0; d], 1).expect("valid")
    }

    /// `ξ_i = k_i / M`, kept exact for bit-reproducible cosine tables.
    pub fn rational(numerators: &[i64], denom: u64) -> Result<Self> {
        if denom == 0 || denom > i64::MAX as u64 / 4 {
            return Err(Error::InvalidArgument(format!("bad denominator {denom}")));
        }
        let m = denom as i64;
        let ks: Vec<i64> = numerators.iter().map(|&k| reduce_numerator(k, m)).collect();
        Ok(Self {
            components: ks.iter().map(|&k| k as f64 / denom as f64).collect(),
            rational: Some(RationalFreq { numerators: ks, denom }),
        })
    }

    pub fn d(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn rational_form(&self) -> Option<&RationalFreq> {
        self.rational.as_ref()
    }

    /// `‖ξ‖² = Σ dist(ξ_i, Z)²`.
    pub fn norm_sq(&self) -> f64 {
        self.components.iter().map(|x| x * x).collect::<NeumaierSum>().value()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `Σ sin²(π ξ_i)`.
    pub fn sin_sq_sum(&self) -> f64 {
        self.components
            .iter()
            .map(|x| (PI * x).sin().powi(2))
            .collect::<NeumaierSum>()
            .value()
    }

    /// `Σ cos²(π ξ_i)`.
    pub fn cos_sq_sum(&self) -> f64 {
        self.components
            .iter()
            .map(|x| (PI * x).cos().powi(2))
            .collect::<NeumaierSum>()
            .value()
    }

    /// Whether coordinate `i` lies in `V_ξ`, i.e. `1/4 < |ξ_i| <= 1/2`.
    pub fn in_v(&self, i: usize) -> bool {
        match &self.rational {
            Some(r) => 4 * r.numerators[i].unsigned_abs() > r.denom,
            None => self.components[i].abs() > 0.25,
        }
    }

    pub fn v_set(&self) -> Vec<usize> {
        (0..self.d()).filter(|&i| self.in_v(i)).collect()
    }

    /// The first `r` coordinates.
    pub fn head(&self, r: usize) -> TorusPoint {
        TorusPoint {
            components: self.components[..r].to_vec(),
            rational: self.rational.as_ref().map(|q| RationalFreq {
                numerators: q.numerators[..r].to_vec(),
                denom: q.denom,
            }),
        }
    }

    /// Coordinates reordered so that coordinate `i` of the result is `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> TorusPoint {
        TorusPoint {
            components: perm.iter().map(|&i| self.components[i]).collect(),
            rational: self.rational.as_ref().map(|q| RationalFreq {
                numerators: perm.iter().map(|&i| q.numerators[i]).collect(),
                denom: q.denom,
            }),
        }
    }

    /// `cos(2π v ξ_i)` for `v = 0..=radius`. Rational frequencies reduce
    /// `v k mod M` before the cosine.
    pub fn cosines(&self, i: usize, radius: u32) -> Vec<f64> {
        match &self.rational {
            Some(q) => {
                let m = q.denom as i128;
                (0..=radius as i128)
                    .map(|v| {
                        let r = (v * q.numerators[i] as i128).rem_euclid(m);
                        (2.0 * PI * r as f64 / m as f64).cos()
                    })
                    .collect()
            }
            None => {
                let x = self.components[i];
                (0..=radius).map(|v| (2.0 * PI * v as f64 * x).cos()).collect()
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|&x| x == 0.0)
    }
}

/// The folded frequency `ξ′` together with `V_ξ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldedFrequency {
    pub xi_prime: TorusPoint,
    pub v_set: Vec<usize>,
}

impl FoldedFrequency {
    /// `max_i |sin²(π ξ′_i) - cos²(π ξ_i)|` over `i ∈ V_ξ`.
    pub fn identity_residual(&self, xi: &TorusPoint) -> f64 {
        self.v_set
            .iter()
            .map(|&i| {
                let s = (PI * self.xi_prime.components[i]).sin().powi(2);
                let c = (PI * xi.components[i]).cos().powi(2);
                (s - c).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Shifts the `V_ξ` coordinates by a half period so that `|ξ′_i| <= 1/4`.
pub fn fold_frequency(xi: &TorusPoint) -> FoldedFrequency {
    let v_set = xi.v_set();
    let xi_prime = match &xi.rational {
        Some(q) => {
            let m = q.denom as i64;
            let ks: Vec<i64> = q
                .numerators
                .iter()
                .enumerate()
                .map(|(i, &k)| {
                    if !xi.in_v(i) {
                        2 * k
                    } else if k > 0 {
                        2 * k - m
                    } else {
                        2 * k + m
                    }
                })
                .collect();
            TorusPoint::rational(&ks, 2 * q.denom).expect("valid")
        }
        None => TorusPoint {
            components: xi
                .components
                .iter()
                .map(|&x| {
                    if x > 0.25 {
                        x - 0.5
                    } else if x < -0.25 {
                        x + 0.5
                    } else {
                        x
                    }
                })
                .collect(),
            rational: None,
        },
    };
    FoldedFrequency { xi_prime, v_set }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_into_half_open_interval() {
        let p = TorusPoint::new(vec![0.5, -0.5, 1.25, -0.75, 3.0]);
        assert_eq!(p.components(), &[-0.5, -0.5, 0.25, 0.25, 0.0]);
        let q = TorusPoint::rational(&[1, 2, 5, -3], 4).unwrap();
        assert_eq!(q.components(), &[0.25, -0.5, 0.25, 0.25]);
        assert!((p.norm_sq() - 0.625).abs() < 1e-15);
    }

    #[test]
    fn fold_examples() {
        let xi = TorusPoint::new(vec![0.3, 0.1, -0.4]);
        let f = fold_frequency(&xi);
        assert_eq!(f.v_set, vec![0, 2]);
        let c = f.xi_prime.components();
        assert!((c[0] + 0.2).abs() < 1e-15);
        assert_eq!(c[1], 0.1);
        assert!((c[2] - 0.1).abs() < 1e-15);
        assert!(f.identity_residual(&xi) < 1e-15);
        assert!(c.iter().all(|x| x.abs() <= 0.25));
    }

    #[test]
    fn rational_fold_stays_exact() {
        let xi = TorusPoint::rational(&[3, 1, -4, 2], 10).unwrap();
        let f = fold_frequency(&xi);
        assert_eq!(f.v_set, vec![0, 2]);
        let q = f.xi_prime.rational_form().unwrap();
        assert_eq!(q.denom, 20);
        assert_eq!(q.numerators, vec![-4, 2, 2, 4]);
    }

    #[test]
    fn rational_cosines_match_float() {
        let xi = TorusPoint::rational(&[3], 7).unwrap();
        let f = TorusPoint::new(vec![3.0 / 7.0]);
        for (a, b) in xi.cosines(0, 20).iter().zip(f.cosines(0, 20)) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}
