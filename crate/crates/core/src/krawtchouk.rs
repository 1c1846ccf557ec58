//! Binary Krawtchouk polynomials
//! `K_k^{(n)}(x) = C(n,k)^{-1} Σ_j (-1)^j C(x,j) C(n-x,k-j)` in exact
//! arithmetic.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{binomial, binomial_row, ln_ratio, ratio_to_f64, Interval};

/// Largest `n` for the symmetry, reflection and root checks.
pub const PROPERTY_N_MAX: u64 = 60;
/// Largest `n` for the orthogonality check.
pub const ORTHOGONALITY_N_MAX: u64 = 30;

fn check_index(n: u64, k: u64, x: u64) -> Result<()> {
    if k > n || x > n {
        return Err(Error::InvalidArgument(format!(
            "Krawtchouk indices k={k}, x={x} outside [0, {n}]"
        )));
    }
    Ok(())
}

/// `Σ_j (-1)^j C(x,j) C(n-x,k-j)`, the numerator over `C(n,k)`.
pub fn kraw_numerator(n: u64, k: u64, x: u64) -> Result<BigInt> {
    check_index(n, k, x)?;
    let mut acc = BigInt::zero();
    for j in 0..=k.min(x) {
        if k - j > n - x {
            continue;
        }
        let term = BigInt::from(binomial(x, j) * binomial(n - x, k - j));
        if j % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    Ok(acc)
}

pub fn kraw_exact(n: u64, k: u64, x: u64) -> Result<BigRational> {
    Ok(BigRational::new(kraw_numerator(n, k, x)?, BigInt::from(binomial(n, k))))
}

/// Numerators `Ñ_k(x) = [t^k] (1-t)^x (1+t)^{n-x}` for `k <= k_max`,
/// `x <= x_max`, filled column by column with the three-term recurrence
/// `(k+1) Ñ_{k+1} = (n-2x) Ñ_k - (n-k+1) Ñ_{k-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrawtchoukTable {
    n: u64,
    numerators: Vec<Vec<BigInt>>,
    binomials: Vec<BigUint>,
}

impl KrawtchoukTable {
    pub fn new(n: u64) -> Self {
        Self::partial(n, n, n)
    }

    pub fn partial(n: u64, k_max: u64, x_max: u64) -> Self {
        let k_max = k_max.min(n) as usize;
        let x_max = x_max.min(n) as usize;
        let mut numerators = vec![vec![BigInt::zero(); x_max + 1]; k_max + 1];
        let ni = n as i64;
        for x in 0..=x_max {
            numerators[0][x] = BigInt::one();
            if k_max >= 1 {
                numerators[1][x] = BigInt::from(ni - 2 * x as i64);
            }
            for k in 1..k_max {
                let next = &numerators[k][x] * (ni - 2 * x as i64) - &numerators[k - 1][x] * (ni - k as i64 + 1);
                numerators[k + 1][x] = next / (k as i64 + 1);
            }
        }
        Self {
            n,
            numerators,
            binomials: binomial_row(n, k_max as u64),
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn k_max(&self) -> u64 {
        self.numerators.len() as u64 - 1
    }

    pub fn x_max(&self) -> u64 {
        self.numerators[0].len() as u64 - 1
    }

    pub fn numerator(&self, k: u64, x: u64) -> &BigInt {
        &self.numerators[k as usize][x as usize]
    }

    pub fn binomial(&self, k: u64) -> &BigUint {
        &self.binomials[k as usize]
    }

    pub fn get(&self, k: u64, x: u64) -> BigRational {
        BigRational::new(self.numerator(k, x).clone(), BigInt::from(self.binomial(k).clone()))
    }

    pub fn value_f64(&self, k: u64, x: u64) -> f64 {
        ratio_to_f64(self.numerator(k, x), self.binomial(k))
    }
}

/// Outcome of the exact property checks for one `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub n: u64,
    pub symmetry: bool,
    pub reflection: bool,
    /// `None` when `n` exceeds the orthogonality budget.
    pub orthogonality: Option<bool>,
    /// Integer sign changes equal `k` for every `k`.
    pub sign_changes: bool,
    /// Constant sign outside `[n/2 - √(k(n-k)), n/2 + √(k(n-k))]`, for `k <= n/2`.
    pub root_interval: bool,
    pub bounded_by_one: bool,
    pub failures: Vec<String>,
}

impl PropertyReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

fn sign(x: &BigInt) -> i8 {
    if x.is_zero() {
        0
    } else if x.is_positive() {
        1
    } else {
        -1
    }
}

/// Roots of the integer sign pattern: integer zeros plus strict sign flips
/// between neighbours.
fn integer_roots(signs: &[i8]) -> usize {
    let zeros = signs.iter().filter(|&&s| s == 0).count();
    let flips = signs.windows(2).filter(|w| w[0] * w[1] < 0).count();
    zeros + flips
}

/// Whether integer `x` lies strictly outside the closed root interval, using
/// `(2x - n)² > 4k(n-k)`.
fn outside_root_interval(n: u64, k: u64, x: u64) -> bool {
    let t = 2 * x as i128 - n as i128;
    t * t > 4 * k as i128 * (n - k) as i128
}

pub fn property_checks(n: u64) -> Result<PropertyReport> {
    if n > PROPERTY_N_MAX {
        return Err(Error::InvalidArgument(format!(
            "property checks are budgeted for n <= {PROPERTY_N_MAX}, got {n}"
        )));
    }
    let t = KrawtchoukTable::new(n);
    let bin: Vec<BigInt> = binomial_row(n, n).into_iter().map(BigInt::from).collect();
    let mut failures = Vec::new();

    let mut symmetry = true;
    let mut reflection = true;
    let mut bounded_by_one = true;
    for k in 0..=n {
        for x in 0..=n {
            let a = t.numerator(k, x);
            if a * &bin[x as usize] != t.numerator(x, k) * &bin[k as usize] {
                symmetry = false;
                failures.push(format!("symmetry n={n} k={k} x={x}"));
            }
            let r = t.numerator(k, n - x);
            let want = if k % 2 == 0 { a.clone() } else { -a };
            if *r != want {
                reflection = false;
                failures.push(format!("reflection n={n} k={k} x={x}"));
            }
            if a.magnitude() > bin[k as usize].magnitude() {
                bounded_by_one = false;
                failures.push(format!("|K| > 1 at n={n} k={k} x={x}"));
            }
        }
    }

    let orthogonality = (n <= ORTHOGONALITY_N_MAX).then(|| {
        let two_n = BigInt::one() << n as usize;
        let mut ok = true;
        for k in 0..=n {
            for m in k..=n {
                let s: BigInt = (0..=n)
                    .map(|x| &bin[x as usize] * t.numerator(k, x) * t.numerator(m, x))
                    .sum();
                let want = if k == m {
                    &two_n * &bin[k as usize]
                } else {
                    BigInt::zero()
                };
                if s != want {
                    ok = false;
                    failures.push(format!("orthogonality n={n} k={k} m={m}"));
                }
            }
        }
        ok
    });

    let mut sign_changes = true;
    let mut root_interval = true;
    for k in 0..=n {
        let signs: Vec<i8> = (0..=n).map(|x| sign(t.numerator(k, x))).collect();
        if integer_roots(&signs) != k as usize {
            sign_changes = false;
            failures.push(format!("sign changes n={n} k={k}"));
        }
        if 2 * k > n {
            continue;
        }
        let left: Vec<i8> = (0..=n)
            .filter(|&x| 2 * x < n && outside_root_interval(n, k, x))
            .map(|x| signs[x as usize])
            .collect();
        let right: Vec<i8> = (0..=n)
            .filter(|&x| 2 * x > n && outside_root_interval(n, k, x))
            .map(|x| signs[x as usize])
            .collect();
        for side in [left, right] {
            if side.iter().any(|&s| s == 0 || s != side[0]) {
                root_interval = false;
                failures.push(format!("sign outside root interval n={n} k={k}"));
            }
        }
    }

    Ok(PropertyReport {
        n,
        symmetry,
        reflection,
        orthogonality,
        sign_changes,
        root_interval,
        bounded_by_one,
        failures,
    })
}

/// Empirical constant for `|K_k^{(n)}(x)| <= exp(-c k x / n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformBoundCalibration {
    pub n_max: u64,
    /// `min(1, c_raw)`.
    pub c_hat: f64,
    /// Minimum of `-(n/(kx)) ln|K_k^{(n)}(x)|` over the scan.
    pub c_raw: f64,
    pub argmin: (u64, u64, u64),
    pub cells: u64,
    pub zeros_skipped: u64,
}

/// Scans `2 <= n <= n_max`, `1 <= k, x <= n/2`, skipping exact zeros.
pub fn calibrate_uniform_bound(n_max: u64) -> Result<UniformBoundCalibration> {
    if n_max < 2 {
        return Err(Error::InvalidArgument(format!("n_max must be at least 2, got {n_max}")));
    }
    let mut best = (f64::INFINITY, (0, 0, 0));
    let mut cells = 0;
    let mut zeros = 0;
    for n in 2..=n_max {
        let h = n / 2;
        let t = KrawtchoukTable::partial(n, h, h);
        for k in 1..=h {
            for x in 1..=h {
                cells += 1;
                let v = t.value_f64(k, x);
                if v == 0.0 {
                    zeros += 1;
                    continue;
                }
                let c = -(n as f64 / (k * x) as f64) * v.abs().ln();
                if c < best.0 {
                    best = (c, (n, k, x));
                }
            }
        }
    }
    Ok(UniformBoundCalibration {
        n_max,
        c_hat: best.0.min(1.0),
        c_raw: best.0,
        argmin: best.1,
        cells,
        zeros_skipped: zeros,
    })
}

/// Cells where `|K_k^{(n)}(x)| <= exp(-c k x / n)` is not certified by
/// interval arithmetic, over `0 <= k, x <= n/2`, `1 <= n <= n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformBoundCheck {
    pub c: f64,
    pub n_max: u64,
    pub cells: u64,
    pub violations: Vec<(u64, u64, u64)>,
}

pub fn verify_uniform_bound(n_max: u64, c: f64) -> UniformBoundCheck {
    let mut cells = 0;
    let mut violations = Vec::new();
    for n in 1..=n_max {
        let h = n / 2;
        let t = KrawtchoukTable::partial(n, h, h);
        for k in 0..=h {
            for x in 0..=h {
                cells += 1;
                let num = t.numerator(k, x);
                if k * x == 0 || num.is_zero() {
                    continue;
                }
                let lhs = ln_ratio(num.magnitude(), t.binomial(k));
                let rhs = -(Interval::point(c) * Interval::from_u64(k * x) / Interval::from_u64(n));
                if lhs.certainly_le(rhs) != Some(true) {
                    violations.push((n, k, x));
                }
            }
        }
    }
    UniformBoundCheck {
        c,
        n_max,
        cells,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn closed_forms() {
        for n in 1..12 {
            for x in 0..=n {
                assert_eq!(kraw_exact(n, 0, x).unwrap(), rat(1, 1));
                assert_eq!(kraw_exact(n, 1, x).unwrap(), rat(n as i64 - 2 * x as i64, n as i64));
            }
            for k in 0..=n {
                assert_eq!(kraw_exact(n, k, 0).unwrap(), rat(1, 1));
            }
        }
        assert!(kraw_exact(3, 4, 0).is_err());
    }

    #[test]
    fn recurrence_table_matches_definition() {
        for n in [1u64, 2, 5, 9, 17] {
            let t = KrawtchoukTable::new(n);
            for k in 0..=n {
                for x in 0..=n {
                    assert_eq!(t.get(k, x), kraw_exact(n, k, x).unwrap(), "n={n} k={k} x={x}");
                }
            }
        }
    }

    #[test]
    fn orthogonality_for_n_four() {
        let t = KrawtchoukTable::new(4);
        for k in 0..=4u64 {
            for m in 0..=4u64 {
                let s: BigRational = (0..=4u64)
                    .map(|x| BigRational::from(BigInt::from(binomial(4, x))) * t.get(k, x) * t.get(m, x))
                    .sum();
                let want = if k == m {
                    rat(16, 1) / BigRational::from(BigInt::from(binomial(4, k)))
                } else {
                    rat(0, 1)
                };
                assert_eq!(s, want);
            }
        }
    }

    #[test]
    fn reflection_example() {
        assert_eq!(kraw_exact(6, 3, 5).unwrap(), -kraw_exact(6, 3, 1).unwrap());
    }

    #[test]
    fn properties_hold_for_small_n() {
        for n in [0u64, 1, 4, 10, 23] {
            let r = property_checks(n).unwrap();
            assert!(r.ok(), "{:?}", r.failures);
            assert_eq!(r.orthogonality, Some(true));
        }
        assert_eq!(property_checks(31).unwrap().orthogonality, None);
        assert!(property_checks(61).is_err());
    }

    #[test]
    fn calibration_examples() {
        assert_eq!(kraw_exact(2, 1, 1).unwrap(), rat(0, 1));
        assert_eq!(kraw_exact(4, 1, 1).unwrap(), rat(1, 2));
        let cal = calibrate_uniform_bound(4).unwrap();
        assert_eq!(cal.zeros_skipped, 3);
        assert_eq!(cal.argmin, (4, 2, 2));
        assert!((cal.c_raw - 3f64.ln()).abs() < 1e-15);
        assert_eq!(cal.c_hat, 1.0);
        assert!(verify_uniform_bound(40, cal.c_hat).violations.is_empty());
        assert!(!verify_uniform_bound(6, 2.0).violations.is_empty());
    }
}
