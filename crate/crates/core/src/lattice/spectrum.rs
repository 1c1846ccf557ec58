use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Roots;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::ball::{BallSpec, Limits, Mode};
use crate::error::{Error, Result};
use crate::numeric::{binomial_row, frexp, ldexp, scaled_to_biguint, tilted_term, NeumaierSum, ScaledSum};

const RESCALE_HI: f64 = 1e180;
const RESCALE_LO: f64 = 1e-180;

/// Coefficient storage. Fast values represent
/// `values[m] * 2^log2_scale * 2^(-m log2_tilt)`: the series is stored at
/// `q = t`, `t = 2^log2_tilt <= 1`, so that coefficients of very different
/// magnitude stay within floating range.
#[derive(Debug, Clone, PartialEq)]
pub enum Coeffs {
    Exact(Vec<BigInt>),
    Fast {
        values: Vec<f64>,
        log2_scale: i64,
        log2_tilt: f64,
    },
}

/// A series `Σ c[m] q^m` truncated at `max_norm`, indexed by squared norm.
#[derive(Debug, Clone, PartialEq)]
pub struct NormSpectrum {
    coeffs: Coeffs,
}

impl NormSpectrum {
    pub fn from_exact(coeffs: Vec<BigInt>) -> Self {
        assert!(!coeffs.is_empty(), "spectrum needs at least one coefficient");
        Self {
            coeffs: Coeffs::Exact(coeffs),
        }
    }

    pub fn from_fast(values: Vec<f64>) -> Self {
        assert!(!values.is_empty(), "spectrum needs at least one coefficient");
        Self {
            coeffs: Coeffs::Fast {
                values,
                log2_scale: 0,
                log2_tilt: 0.0,
            },
        }
    }

    /// The unit `[1, 0, ..., 0]`.
    pub fn delta(max_norm: usize, mode: Mode) -> Self {
        match mode {
            Mode::Exact => {
                let mut c = vec![BigInt::zero(); max_norm + 1];
                c[0] = BigInt::one();
                Self::from_exact(c)
            }
            Mode::Fast => {
                let mut c = vec![0.0; max_norm + 1];
                c[0] = 1.0;
                Self::from_fast(c)
            }
        }
    }

    /// Unweighted one-dimensional spectrum of `{-N, ..., N}`.
    pub fn one_dim(radius: u32, mode: Mode) -> Self {
        match mode {
            Mode::Exact => Self::one_dim_integer(radius, |_| 1),
            Mode::Fast => Self::one_dim_weighted(radius, |_| 1.0),
        }
    }

    /// Exact one-dimensional spectrum with integer weights.
    pub fn one_dim_integer(radius: u32, weight: impl Fn(i64) -> i64) -> Self {
        let r = radius as i64;
        let mut c = vec![BigInt::zero(); (r * r) as usize + 1];
        c[0] = BigInt::from(weight(0));
        for m in 1..=r {
            c[(m * m) as usize] = BigInt::from(weight(m)) + BigInt::from(weight(-m));
        }
        Self::from_exact(c)
    }

    /// Floating one-dimensional spectrum with real weights.
    pub fn one_dim_weighted(radius: u32, weight: impl Fn(i64) -> f64) -> Self {
        let r = radius as i64;
        let mut c = vec![0.0; (r * r) as usize + 1];
        c[0] = weight(0);
        for m in 1..=r {
            c[(m * m) as usize] = weight(m) + weight(-m);
        }
        Self::from_fast(c)
    }

    pub fn mode(&self) -> Mode {
        match self.coeffs {
            Coeffs::Exact(_) => Mode::Exact,
            Coeffs::Fast { .. } => Mode::Fast,
        }
    }

    pub fn max_norm(&self) -> usize {
        self.len() - 1
    }

    fn len(&self) -> usize {
        match &self.coeffs {
            Coeffs::Exact(c) => c.len(),
            Coeffs::Fast { values, .. } => values.len(),
        }
    }

    pub fn coeffs(&self) -> &Coeffs {
        &self.coeffs
    }

    pub fn exact(&self) -> Option<&[BigInt]> {
        match &self.coeffs {
            Coeffs::Exact(c) => Some(c),
            Coeffs::Fast { .. } => None,
        }
    }

    /// Coefficient `m` as a float, scale applied.
    pub fn value_f64(&self, m: usize) -> f64 {
        match &self.coeffs {
            Coeffs::Exact(c) => big_to_f64(&c[m]),
            Coeffs::Fast {
                values,
                log2_scale,
                log2_tilt,
            } => {
                let (v, e) = tilted_term(values[m], *log2_scale, m, *log2_tilt);
                ldexp(v, e)
            }
        }
    }

    pub fn truncated(&self, budget: usize) -> Result<Self> {
        self.check_budget(budget)?;
        Ok(Self {
            coeffs: match &self.coeffs {
                Coeffs::Exact(c) => Coeffs::Exact(c[..=budget].to_vec()),
                Coeffs::Fast {
                    values,
                    log2_scale,
                    log2_tilt,
                } => Coeffs::Fast {
                    values: values[..=budget].to_vec(),
                    log2_scale: *log2_scale,
                    log2_tilt: *log2_tilt,
                },
            },
        })
    }

    /// Zero-padded (or truncated) copy with the given capacity.
    pub fn resized(&self, max_norm: usize) -> Self {
        Self {
            coeffs: match &self.coeffs {
                Coeffs::Exact(c) => {
                    let mut c = c.clone();
                    c.resize(max_norm + 1, BigInt::zero());
                    Coeffs::Exact(c)
                }
                Coeffs::Fast {
                    values,
                    log2_scale,
                    log2_tilt,
                } => {
                    let mut v = values.clone();
                    v.resize(max_norm + 1, 0.0);
                    Coeffs::Fast {
                        values: v,
                        log2_scale: *log2_scale,
                        log2_tilt: *log2_tilt,
                    }
                }
            },
        }
    }

    fn check_budget(&self, budget: usize) -> Result<()> {
        if budget > self.max_norm() {
            Err(Error::BudgetOverflow {
                budget,
                capacity: self.max_norm(),
            })
        } else {
            Ok(())
        }
    }

    /// Truncated Cauchy product `c[m] = Σ_{i+j=m} a[i] b[j]` for `m <= budget`.
    pub fn convolve_truncated(&self, other: &NormSpectrum, budget: usize) -> Result<Self> {
        if self.mode() != other.mode() {
            return Err(Error::ModeMismatch {
                left: self.mode(),
                right: other.mode(),
            });
        }
        self.check_budget(budget)?;
        other.check_budget(budget)?;
        Ok(match (&self.coeffs, &other.coeffs) {
            (Coeffs::Exact(a), Coeffs::Exact(b)) => {
                let (dense, sparse) = if nonzero_count(a) <= nonzero_count(b) {
                    (b, nonzeros(a))
                } else {
                    (a, nonzeros(b))
                };
                Self::from_exact(conv_sparse_exact(dense, &sparse, budget))
            }
            (
                Coeffs::Fast {
                    values: a,
                    log2_scale: sa,
                    log2_tilt: ta,
                },
                Coeffs::Fast {
                    values: b,
                    log2_scale: sb,
                    log2_tilt: tb,
                },
            ) => {
                let (b, sb) = retilt(b, *sb, *tb, *ta);
                let (b, sb) = (&b, &sb);
                let mut out = vec![0.0; budget + 1];
                for (m, slot) in out.iter_mut().enumerate() {
                    let mut acc = NeumaierSum::new();
                    for i in 0..=m {
                        if a[i] != 0.0 && b[m - i] != 0.0 {
                            acc.add(a[i] * b[m - i]);
                        }
                    }
                    *slot = acc.value();
                }
                let mut scale = sa + sb;
                renormalize(&mut out, &mut scale);
                Self {
                    coeffs: Coeffs::Fast {
                        values: out,
                        log2_scale: scale,
                        log2_tilt: *ta,
                    },
                }
            }
            _ => unreachable!("modes checked above"),
        })
    }

    /// `self^d` truncated at `budget`.
    ///
    /// Exact mode expands `(c0 + U)^d = Σ_s C(d,s) c0^{d-s} U^s`, where `U^s`
    /// starts at index `s`, so at most `min(d, budget)` powers are formed.
    /// Fast mode multiplies by the sparse factor `d` times, tilted so that
    /// the mean squared norm per factor is `budget / d`.
    pub fn power(&self, d: u64, budget: usize, limits: &Limits) -> Result<Self> {
        self.check_budget(budget)?;
        match &self.coeffs {
            Coeffs::Exact(c) => {
                let u: Vec<(usize, BigInt)> = nonzeros(&c[..=budget]).into_iter().filter(|(i, _)| *i > 0).collect();
                let smax = d.min(budget as u64);
                limits.charge("power", smax as u128 * (budget as u128 + 1) * (u.len() as u128).max(1))?;
                Ok(Self::from_exact(power_exact(&c[0], &u, d, budget)))
            }
            Coeffs::Fast {
                values,
                log2_scale,
                log2_tilt,
            } => {
                let base = nonzeros_f64(&values[..=budget]);
                let logs: Vec<(usize, f64)> = base
                    .iter()
                    .map(|&(m, v)| (m, v.abs().log2() - m as f64 * log2_tilt))
                    .collect();
                let tilt = solve_log2_tilt(&logs, budget as f64 / d.max(1) as f64);
                let factor: Vec<(usize, f64)> = base
                    .iter()
                    .map(|&(m, v)| (m, v * (m as f64 * (tilt - log2_tilt)).exp2()))
                    .filter(|&(_, v)| v != 0.0)
                    .collect();
                limits.charge("power", d as u128 * (budget as u128 + 1) * factor.len().max(1) as u128)?;
                let mut cur = vec![0.0; budget + 1];
                cur[0] = 1.0;
                let mut scale = 0i64;
                for _ in 0..d {
                    cur = axpy_sparse(&cur, &factor);
                    scale += log2_scale;
                    renormalize(&mut cur, &mut scale);
                }
                Ok(Self {
                    coeffs: Coeffs::Fast {
                        values: cur,
                        log2_scale: scale,
                        log2_tilt: tilt,
                    },
                })
            }
        }
    }

    /// `Σ_{m <= upto} c[m]` in exact mode.
    pub fn partial_sum_exact(&self, upto: usize) -> Option<BigInt> {
        self.exact().map(|c| c[..=upto.min(c.len() - 1)].iter().sum())
    }

    /// `Σ_{m <= upto} c[m]` as `(value, log2_scale)`.
    pub fn partial_sum_scaled(&self, upto: usize) -> (f64, i64) {
        match &self.coeffs {
            Coeffs::Exact(c) => {
                let s: BigInt = c[..=upto.min(c.len() - 1)].iter().sum();
                big_to_scaled(&s)
            }
            Coeffs::Fast {
                values,
                log2_scale,
                log2_tilt,
            } => {
                let mut acc = ScaledSum::new();
                for (m, &v) in values[..=upto.min(values.len() - 1)].iter().enumerate() {
                    let (x, e) = tilted_term(v, *log2_scale, m, *log2_tilt);
                    acc.add(x, e);
                }
                acc.value()
            }
        }
    }

    /// Inclusive prefix sums of an exact spectrum.
    pub fn prefix_sums_exact(&self) -> Option<Vec<BigInt>> {
        self.exact().map(|c| {
            let mut acc = BigInt::zero();
            c.iter()
                .map(|x| {
                    acc += x;
                    acc.clone()
                })
                .collect()
        })
    }
}

fn nonzero_count(c: &[BigInt]) -> usize {
    c.iter().filter(|x| !x.is_zero()).count()
}

pub(crate) fn nonzeros(c: &[BigInt]) -> Vec<(usize, BigInt)> {
    c.iter()
        .enumerate()
        .filter(|(_, x)| !x.is_zero())
        .map(|(i, x)| (i, x.clone()))
        .collect()
}

fn nonzeros_f64(c: &[f64]) -> Vec<(usize, f64)> {
    c.iter()
        .enumerate()
        .filter(|(_, x)| **x != 0.0)
        .map(|(i, x)| (i, *x))
        .collect()
}

/// `dense ⊛ sparse`, truncated at `budget`. `sparse` must be sorted by index.
pub(crate) fn conv_sparse_exact(dense: &[BigInt], sparse: &[(usize, BigInt)], budget: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); budget + 1];
    let top = dense.len().min(budget + 1);
    for (j, c) in sparse {
        if *j > budget {
            break;
        }
        let unit = c.is_one();
        for i in 0..top.min(budget - j + 1) {
            let x = &dense[i];
            if x.is_zero() {
                continue;
            }
            if unit {
                out[i + j] += x;
            } else {
                out[i + j] += x * c;
            }
        }
    }
    out
}

pub(crate) fn power_exact(c0: &BigInt, u: &[(usize, BigInt)], d: u64, budget: usize) -> Vec<BigInt> {
    let mut result = vec![BigInt::zero(); budget + 1];
    let min_u = u.first().map(|(i, _)| *i).unwrap_or(usize::MAX);
    let smax = d.min(budget as u64);
    let binom = binomial_row(d, smax);
    let mut upow = vec![BigInt::zero(); budget + 1];
    upow[0] = BigInt::one();
    for s in 0..=smax {
        if s > 0 {
            if (s as u128) * (min_u as u128) > budget as u128 {
                break;
            }
            upow = conv_sparse_exact(&upow, u, budget);
        }
        let c0pow = if c0.is_one() {
            BigInt::one()
        } else {
            num_traits::pow::pow(c0.clone(), (d - s) as usize)
        };
        if c0pow.is_zero() {
            continue;
        }
        let coef = BigInt::from(binom[s as usize].clone()) * c0pow;
        for (r, x) in result.iter_mut().zip(&upow) {
            if !x.is_zero() {
                *r += x * &coef;
            }
        }
    }
    result
}

/// `log2 t <= 0` making the mean of `m` under the weights `|c_m| t^m` equal
/// to `target`, or `0` when the untilted mean is already at most `target`.
/// `terms` holds `(m, log2 |c_m|)`.
pub(crate) fn solve_log2_tilt(terms: &[(usize, f64)], target: f64) -> f64 {
    let mean = |lt: f64| {
        let top = terms
            .iter()
            .map(|&(m, l)| l + m as f64 * lt)
            .fold(f64::NEG_INFINITY, f64::max);
        let (mut num, mut den) = (0.0, 0.0);
        for &(m, l) in terms {
            let w = (l + m as f64 * lt - top).exp2();
            num += m as f64 * w;
            den += w;
        }
        num / den
    };
    if terms.len() < 2 || !(mean(0.0) > target) {
        return 0.0;
    }
    let (mut lo, mut hi) = (-64.0, 0.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mean(mid) > target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Re-expresses tilted values at another tilt.
fn retilt(values: &[f64], scale: i64, from: f64, to: f64) -> (Vec<f64>, i64) {
    if from == to {
        return (values.to_vec(), scale);
    }
    // c_m t_to^m = v_m 2^scale 2^{m (to - from)}.
    let terms: Vec<(f64, i64)> = values
        .iter()
        .enumerate()
        .map(|(m, &v)| tilted_term(v, 0, m, from - to))
        .collect();
    let top = terms
        .iter()
        .filter(|t| t.0 != 0.0)
        .map(|&(v, e)| e + frexp(v).1)
        .max()
        .unwrap_or(0);
    (terms.iter().map(|&(v, e)| ldexp(v, e - top)).collect(), scale + top)
}

fn axpy_sparse(cur: &[f64], factor: &[(usize, f64)]) -> Vec<f64> {
    let budget = cur.len() - 1;
    let mut next = vec![0.0; cur.len()];
    for &(j, w) in factor {
        if j > budget {
            break;
        }
        for (dst, src) in next[j..].iter_mut().zip(cur) {
            *dst += w * src;
        }
    }
    next
}

/// Keeps the largest magnitude near 1 by shifting whole powers of two into
/// the scale.
pub(crate) fn renormalize(values: &mut [f64], scale: &mut i64) {
    let mx = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if mx == 0.0 || (RESCALE_LO..=RESCALE_HI).contains(&mx) {
        return;
    }
    let (_, e) = frexp(mx);
    for v in values.iter_mut() {
        *v = ldexp(*v, -e);
    }
    *scale += e;
}

pub(crate) fn big_to_scaled(x: &BigInt) -> (f64, i64) {
    let (m, e) = crate::numeric::biguint_to_scaled(x.magnitude());
    if x.sign() == Sign::Minus {
        (-m, e)
    } else {
        (m, e)
    }
}

pub(crate) fn big_to_f64(x: &BigInt) -> f64 {
    x.to_f64().unwrap_or(if x.is_negative() {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    })
}

fn as_biguint(x: BigInt) -> BigUint {
    x.to_biguint().expect("unweighted counts are non-negative")
}

/// `|B_N ∩ Z^d|`.
pub fn ball_count(spec: BallSpec, mode: Mode, limits: &Limits) -> Result<BigUint> {
    let n = spec.n() as usize;
    let spectrum = NormSpectrum::one_dim(spec.radius(), mode).power(spec.d() as u64, n, limits)?;
    Ok(match mode {
        Mode::Exact => as_biguint(spectrum.partial_sum_exact(n).expect("exact")),
        Mode::Fast => {
            let (v, e) = spectrum.partial_sum_scaled(n);
            scaled_to_biguint(v, e)
        }
    })
}

/// `|B_N ∩ Z^d|` for every `N` in `0..=radius_max`, from a single DP.
///
/// The spectrum truncated at `N²` does not depend on the one-dimensional
/// radius once that radius is at least `N`.
pub fn ball_counts_upto(d: u32, radius_max: u32, limits: &Limits) -> Result<Vec<BigUint>> {
    let n = (radius_max as usize).pow(2);
    let spectrum = NormSpectrum::one_dim(radius_max, Mode::Exact).power(d as u64, n, limits)?;
    let prefix = spectrum.prefix_sums_exact().expect("exact");
    Ok((0..=radius_max as usize)
        .map(|r| as_biguint(prefix[r * r].clone()))
        .collect())
}

/// `table[d][N] = |B_N ∩ Z^d|` for `d <= d_max`, `N <= radius_max`,
/// built by convolving one coordinate at a time.
pub fn ball_count_table(d_max: u32, radius_max: u32, limits: &Limits) -> Result<Vec<Vec<BigUint>>> {
    let n = (radius_max as usize).pow(2);
    limits.charge(
        "ball_count_table",
        d_max as u128 * (n as u128 + 1) * (radius_max as u128 + 1),
    )?;
    let factor = nonzeros(NormSpectrum::one_dim(radius_max, Mode::Exact).exact().expect("exact"));
    let mut cur = vec![BigInt::zero(); n + 1];
    cur[0] = BigInt::one();
    let mut table = Vec::with_capacity(d_max as usize + 1);
    for d in 0..=d_max {
        if d > 0 {
            cur = conv_sparse_exact(&cur, &factor, n);
        }
        let mut acc = BigInt::zero();
        let mut row = Vec::with_capacity(radius_max as usize + 1);
        let mut next_r = 0usize;
        for (m, x) in cur.iter().enumerate() {
            acc += x;
            while next_r <= radius_max as usize && next_r * next_r == m {
                row.push(as_biguint(acc.clone()));
                next_r += 1;
            }
        }
        table.push(row);
    }
    Ok(table)
}

/// `r_d(m)`, the number of `x ∈ Z^d` with `|x|² = m`.
pub fn sphere_count(d: u32, m: u64, limits: &Limits) -> Result<BigUint> {
    let radius = m.sqrt() as u32;
    let spectrum = NormSpectrum::one_dim(radius, Mode::Exact)
        .resized(m as usize)
        .power(d as u64, m as usize, limits)?;
    Ok(as_biguint(spectrum.exact().expect("exact")[m as usize].clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn one_dim_examples() {
        let s = NormSpectrum::one_dim(2, Mode::Exact);
        assert_eq!(s.exact().unwrap(), ints(&[1, 2, 0, 0, 2]).as_slice());
        let w = NormSpectrum::one_dim_weighted(1, |m| (2.0 * std::f64::consts::PI * m as f64 / 3.0).cos());
        assert_eq!(w.value_f64(0), 1.0);
        assert!((w.value_f64(1) + 1.0).abs() < 1e-15);
        let alt = NormSpectrum::one_dim_integer(1, |m| if m % 2 == 0 { 1 } else { -1 });
        assert_eq!(alt.exact().unwrap(), ints(&[1, -2]).as_slice());
    }

    #[test]
    fn convolution_examples() {
        let a = NormSpectrum::one_dim(1, Mode::Exact);
        let a2 = NormSpectrum::from_exact(ints(&[1, 2, 0]));
        let two = a2.convolve_truncated(&a2, 2).unwrap();
        assert_eq!(two.exact().unwrap(), ints(&[1, 4, 4]).as_slice());
        let delta = NormSpectrum::delta(2, Mode::Exact);
        assert_eq!(two.convolve_truncated(&delta, 2).unwrap(), two);
        let three = two.convolve_truncated(&a2, 2).unwrap();
        assert_eq!(three.exact().unwrap()[2], BigInt::from(12));
        assert!(matches!(a.convolve_truncated(&a, 2), Err(Error::BudgetOverflow { .. })));
        let f = NormSpectrum::one_dim(1, Mode::Fast);
        assert!(matches!(a.convolve_truncated(&f, 1), Err(Error::ModeMismatch { .. })));
    }

    #[test]
    fn exact_convolution_is_commutative_and_associative() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let mut gen = |len: usize| {
                NormSpectrum::from_exact((0..len).map(|_| BigInt::from(rng.random_range(-9..10))).collect())
            };
            let (a, b, c) = (gen(9), gen(9), gen(9));
            let ab = a.convolve_truncated(&b, 8).unwrap();
            assert_eq!(ab, b.convolve_truncated(&a, 8).unwrap());
            let left = ab.convolve_truncated(&c, 8).unwrap();
            let right = a.convolve_truncated(&b.convolve_truncated(&c, 8).unwrap(), 8).unwrap();
            assert_eq!(left, right);
        }
    }

    #[test]
    fn power_matches_repeated_convolution() {
        let limits = Limits::default();
        let base = NormSpectrum::one_dim_integer(3, |m| 1 + m.abs());
        let mut acc = NormSpectrum::delta(9, Mode::Exact);
        for d in 1..=6u64 {
            acc = acc.convolve_truncated(&base, 9).unwrap();
            assert_eq!(base.power(d, 9, &limits).unwrap(), acc);
        }
    }

    #[test]
    fn fast_power_agrees_with_exact() {
        let limits = Limits::default();
        let e = NormSpectrum::one_dim(4, Mode::Exact).power(40, 16, &limits).unwrap();
        let f = NormSpectrum::one_dim(4, Mode::Fast).power(40, 16, &limits).unwrap();
        for m in 0..=16 {
            let (x, y) = (e.value_f64(m), f.value_f64(m));
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "m={m}: {x} vs {y}");
        }
    }

    #[test]
    fn tilted_power_keeps_every_norm_when_dimension_dominates() {
        let limits = Limits::default();
        let e = NormSpectrum::one_dim(6, Mode::Exact).power(3000, 36, &limits).unwrap();
        let f = NormSpectrum::one_dim(6, Mode::Fast).power(3000, 36, &limits).unwrap();
        for m in 0..=36 {
            let (x, y) = (e.value_f64(m), f.value_f64(m));
            assert!((x - y).abs() <= 1e-11 * x.abs(), "m={m}: {x} vs {y}");
        }
        let b = BallSpec::new(3000, 6).unwrap();
        let exact = ball_count(b, Mode::Exact, &limits).unwrap().to_f64().unwrap();
        let fast = ball_count(b, Mode::Fast, &limits).unwrap().to_f64().unwrap();
        assert!((exact - fast).abs() <= 1e-11 * exact);
    }

    #[test]
    fn tilt_solves_for_target_mean() {
        let terms = [(0usize, 0.0), (1, 1.0), (4, 1.0)];
        assert_eq!(solve_log2_tilt(&terms, 10.0), 0.0);
        let lt = solve_log2_tilt(&terms, 0.5);
        assert!(lt < 0.0);
        let w: Vec<f64> = terms.iter().map(|&(m, l)| (l + m as f64 * lt).exp2()).collect();
        let mean = (w[1] + 4.0 * w[2]) / w.iter().sum::<f64>();
        assert!((mean - 0.5).abs() < 1e-9);
    }

    #[test]
    fn ball_and_sphere_examples() {
        let limits = Limits::default();
        for n in 1..6 {
            let b = BallSpec::new(1, n).unwrap();
            assert_eq!(ball_count(b, Mode::Exact, &limits).unwrap(), BigUint::from(2 * n + 1));
        }
        for d in 1..12 {
            let b = BallSpec::new(d, 1).unwrap();
            assert_eq!(ball_count(b, Mode::Exact, &limits).unwrap(), BigUint::from(2 * d + 1));
            assert_eq!(ball_count(b, Mode::Fast, &limits).unwrap(), BigUint::from(2 * d + 1));
        }
        let b = BallSpec::new(2, 2).unwrap();
        assert_eq!(ball_count(b, Mode::Exact, &limits).unwrap(), BigUint::from(13u32));
        assert_eq!(sphere_count(5, 0, &limits).unwrap(), BigUint::one());
        assert_eq!(sphere_count(3, 2, &limits).unwrap(), BigUint::from(12u32));
        assert_eq!(sphere_count(2, 4, &limits).unwrap(), BigUint::from(4u32));
    }

    #[test]
    fn table_and_truncation_trick_agree() {
        let limits = Limits::default();
        let table = ball_count_table(7, 6, &limits).unwrap();
        for d in 1..=7u32 {
            let upto = ball_counts_upto(d, 6, &limits).unwrap();
            for r in 1..=6u32 {
                let direct = ball_count(BallSpec::new(d, r).unwrap(), Mode::Exact, &limits).unwrap();
                assert_eq!(table[d as usize][r as usize], direct);
                assert_eq!(upto[r as usize], direct);
            }
        }
    }

    #[test]
    fn work_budget_refuses() {
        let tight = Limits {
            work_budget: 1000,
            ..Limits::default()
        };
        let err = ball_count(BallSpec::new(100, 20).unwrap(), Mode::Exact, &tight).unwrap_err();
        assert!(err.is_budget());
    }
}
