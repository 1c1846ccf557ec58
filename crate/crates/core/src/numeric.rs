//! Small numerical toolkit: cascade and compensated summation, exact
//! binomials, and an outward-rounded `f64` interval type used wherever a
//! transcendental bound is compared against an exact count.

use std::cmp::Ordering;
use std::f64::consts::{E, LN_2, PI};
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, ToPrimitive, Zero};

/// Pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Neumaier's improved Kahan accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// `x * 2^e` without intermediate overflow.
pub fn ldexp(mut x: f64, mut e: i64) -> f64 {
    const STEP: i64 = 1000;
    while e > STEP {
        x *= 2f64.powi(STEP as i32);
        e -= STEP;
    }
    while e < -STEP {
        x *= 2f64.powi(-STEP as i32);
        e += STEP;
    }
    x * 2f64.powi(e as i32)
}

/// `v * 2^scale * 2^(-m * log2_tilt)` as a mantissa and an integer exponent.
pub fn tilted_term(v: f64, scale: i64, m: usize, log2_tilt: f64) -> (f64, i64) {
    if log2_tilt == 0.0 {
        return (v, scale);
    }
    let x = -(m as f64) * log2_tilt;
    let k = x.floor();
    (v * (x - k).exp2(), scale + k as i64)
}

/// Compensated sum of terms `mant * 2^exp` whose exponents may differ by
/// more than the floating range.
#[derive(Debug, Clone, Copy)]
pub struct ScaledSum {
    sum: f64,
    comp: f64,
    exp: i64,
}

impl Default for ScaledSum {
    fn default() -> Self {
        Self::new()
    }
}

impl ScaledSum {
    pub fn new() -> Self {
        Self {
            sum: 0.0,
            comp: 0.0,
            exp: i64::MIN,
        }
    }

    pub fn add(&mut self, mant: f64, exp: i64) {
        if mant == 0.0 {
            return;
        }
        let (_, e) = frexp(mant);
        let top = exp + e;
        if top > self.exp {
            if self.exp != i64::MIN {
                let shift = self.exp - top;
                self.sum = ldexp(self.sum, shift);
                self.comp = ldexp(self.comp, shift);
            }
            self.exp = top;
        }
        let x = ldexp(mant, exp - self.exp);
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// `(value, exponent)` with the sum equal to `value * 2^exponent`.
    pub fn value(&self) -> (f64, i64) {
        if self.exp == i64::MIN {
            (0.0, 0)
        } else {
            (self.sum + self.comp, self.exp)
        }
    }
}

/// Split `x` into `m * 2^e` with `0.5 <= |m| < 1`; zero and non-finite
/// values come back unchanged with `e = 0`.
pub fn frexp(x: f64) -> (f64, i64) {
    if x == 0.0 || !x.is_finite() {
        return (x, 0);
    }
    let bits = x.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i64;
    if biased == 0 {
        let (m, e) = frexp(x * 2f64.powi(54));
        return (m, e - 54);
    }
    let m = f64::from_bits((bits & !(0x7ffu64 << 52)) | (1022u64 << 52));
    (m, biased - 1022)
}

/// Round `x * 2^e` to the nearest non-negative integer.
pub fn scaled_to_biguint(x: f64, e: i64) -> BigUint {
    if x <= 0.0 || !x.is_finite() {
        return BigUint::zero();
    }
    let (m, ex) = frexp(x);
    let mant = (m * 2f64.powi(53)) as u64;
    let shift = ex + e - 53;
    if shift >= 0 {
        BigUint::from(mant) << shift as u64
    } else if shift > -64 {
        let s = (-shift) as u32;
        let q = mant >> s;
        let half = 1u64 << (s - 1);
        let rem = mant & ((1u64 << s) - 1);
        BigUint::from(if rem >= half { q + 1 } else { q })
    } else {
        BigUint::zero()
    }
}

/// Mantissa and binary exponent of a big integer: `x ≈ m * 2^e`.
pub fn biguint_to_scaled(x: &BigUint) -> (f64, i64) {
    let bits = x.bits();
    if bits <= 64 {
        return (x.to_u64().expect("fits") as f64, 0);
    }
    let shift = bits - 64;
    ((x >> shift).to_u64().expect("fits") as f64, shift as i64)
}

/// Exact binomial coefficient.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// `C(n, 0), C(n, 1), ..., C(n, kmax)`.
pub fn binomial_row(n: u64, kmax: u64) -> Vec<BigUint> {
    let mut row = Vec::with_capacity(kmax as usize + 1);
    let mut c = BigUint::one();
    for k in 0..=kmax {
        if k > n {
            row.push(BigUint::zero());
            continue;
        }
        row.push(c.clone());
        c *= n - k;
        c /= k + 1;
    }
    row
}

/// Pascal triangle in `u128`; exact for `n <= 120`.
pub fn pascal_u128(n_max: usize) -> Vec<Vec<u128>> {
    assert!(n_max <= 120, "u128 Pascal triangle overflows past n = 120");
    let mut rows: Vec<Vec<u128>> = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let mut row = vec![1u128; n + 1];
        for k in 1..n {
            row[k] = rows[n - 1][k - 1] + rows[n - 1][k];
        }
        rows.push(row);
    }
    rows
}

/// Closed real interval with endpoints rounded outward after every operation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    /// Interval holding an exactly representable value.
    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "inverted interval [{lo}, {hi}]");
        Self { lo, hi }
    }

    fn widened(lo: f64, hi: f64, ulps: u32) -> Self {
        let (mut lo, mut hi) = (lo, hi);
        for _ in 0..ulps {
            lo = lo.next_down();
            hi = hi.next_up();
        }
        Self { lo, hi }
    }

    /// Encloses a value known only up to one rounding.
    pub fn rounded(x: f64) -> Self {
        Self::widened(x, x, 1)
    }

    pub fn pi() -> Self {
        Self::widened(PI, PI, 1)
    }

    pub fn e() -> Self {
        Self::widened(E, E, 1)
    }

    pub fn ln2() -> Self {
        Self::widened(LN_2, LN_2, 1)
    }

    pub fn from_u64(x: u64) -> Self {
        if x < (1u64 << 53) {
            Self::point(x as f64)
        } else {
            Self::rounded(x as f64)
        }
    }

    pub fn from_biguint(x: &BigUint) -> Self {
        match x.to_f64() {
            Some(v) if x.bits() <= 53 => Self::point(v),
            Some(v) if v.is_finite() => Self::widened(v, v, 2),
            _ => Self::new(f64::MAX, f64::INFINITY),
        }
    }

    pub fn exp(self) -> Self {
        Self::widened(self.lo.exp(), self.hi.exp(), 2).clamp_nonneg()
    }

    pub fn ln(self) -> Self {
        assert!(self.lo > 0.0, "ln of non-positive interval");
        Self::widened(self.lo.ln(), self.hi.ln(), 2)
    }

    pub fn sqrt(self) -> Self {
        assert!(self.lo >= 0.0, "sqrt of negative interval");
        Self::widened(self.lo.sqrt(), self.hi.sqrt(), 1).clamp_nonneg()
    }

    /// Integer power by repeated multiplication.
    pub fn powi(self, k: u32) -> Self {
        let mut acc = Interval::point(1.0);
        for _ in 0..k {
            acc = acc * self;
        }
        acc
    }

    fn clamp_nonneg(self) -> Self {
        Self {
            lo: self.lo.max(0.0),
            hi: self.hi,
        }
    }

    pub fn mid(self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// `Some(true)` if every point of `self` is `<=` every point of `other`,
    /// `Some(false)` if every point is strictly greater, `None` if undecided.
    pub fn certainly_le(self, other: Interval) -> Option<bool> {
        if self.hi <= other.lo {
            Some(true)
        } else if self.lo > other.hi {
            Some(false)
        } else {
            None
        }
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, o: Interval) -> Interval {
        Interval::widened(self.lo + o.lo, self.hi + o.hi, 1)
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, o: Interval) -> Interval {
        Interval::widened(self.lo - o.hi, self.hi - o.lo, 1)
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, o: Interval) -> Interval {
        let c = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval::widened(lo, hi, 1)
    }
}

impl Div for Interval {
    type Output = Interval;
    fn div(self, o: Interval) -> Interval {
        assert!(o.lo > 0.0 || o.hi < 0.0, "division by interval containing 0");
        let c = [self.lo / o.lo, self.lo / o.hi, self.hi / o.lo, self.hi / o.hi];
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval::widened(lo, hi, 1)
    }
}

impl Mul<f64> for Interval {
    type Output = Interval;
    fn mul(self, k: f64) -> Interval {
        self * Interval::point(k)
    }
}

/// Natural logarithm of a positive big integer, enclosed.
pub fn ln_biguint(x: &BigUint) -> Interval {
    assert!(!x.is_zero(), "ln(0)");
    let bits = x.bits();
    if bits <= 53 {
        return Interval::point(x.to_f64().expect("fits")).ln();
    }
    let shift = bits - 53;
    let top = (x >> shift).to_u64().expect("53-bit mantissa");
    let lo = Interval::point(top as f64).ln();
    let hi = Interval::point((top + 1) as f64).ln();
    let scale = Interval::ln2() * (shift as f64);
    Interval::new(lo.lo, hi.hi) + scale
}

/// `ln(num / den)` for positive big integers, enclosed.
pub fn ln_ratio(num: &BigUint, den: &BigUint) -> Interval {
    ln_biguint(num) - ln_biguint(den)
}

/// `num / den` rounded to `f64` through an exact big-integer division, so
/// operands far outside the `f64` range are handled.
pub fn ratio_to_f64(num: &BigInt, den: &BigUint) -> f64 {
    assert!(!den.is_zero(), "division by zero");
    if num.is_zero() {
        return 0.0;
    }
    let shift = 64 - (num.bits() as i64 - den.bits() as i64);
    let mag = num.magnitude();
    let q = if shift >= 0 {
        (mag << shift as u64) / den
    } else {
        (mag >> (-shift) as u64) / den
    };
    let (m, e) = biguint_to_scaled(&q);
    let v = ldexp(m, e - shift);
    if num.sign() == Sign::Minus {
        -v
    } else {
        v
    }
}

/// Total order helper for finite floats in reductions.
pub fn cmp_f64(a: &f64, b: &f64) -> Ordering {
    a.partial_cmp(b).unwrap_or(Ordering::Equal)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_exact_integer_sum() {
        let xs: Vec<f64> = (0..10_000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 49_995_000.0);
    }

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let acc: NeumaierSum = [1.0, 1e100, 1.0, -1e100].into_iter().collect();
        assert_eq!(acc.value(), 2.0);
    }

    #[test]
    fn scaled_sum_spans_exponent_ranges() {
        let mut acc = ScaledSum::new();
        assert_eq!(acc.value(), (0.0, 0));
        acc.add(1.0, -5000);
        acc.add(3.0, 2000);
        acc.add(-1.0, 2001);
        let (m, e) = acc.value();
        assert_eq!(ldexp(m, e - 2000), 1.0);
        assert_eq!(tilted_term(1.5, 3, 4, -0.5), (1.5, 5));
        let (v, e) = tilted_term(1.0, 0, 3, 0.25);
        assert!((ldexp(v, e) - 0.75f64.exp2().recip()).abs() < 1e-15);
    }

    #[test]
    fn binomials_agree_between_routes() {
        let row = binomial_row(30, 30);
        let pascal = pascal_u128(30);
        for k in 0..=30u64 {
            assert_eq!(row[k as usize], binomial(30, k));
            assert_eq!(row[k as usize], BigUint::from(pascal[30][k as usize]));
        }
        assert_eq!(binomial(5, 7), BigUint::zero());
    }

    #[test]
    fn ln_of_huge_integers_is_enclosed() {
        let x = BigUint::one() << 4000u32;
        let iv = ln_biguint(&x);
        assert!(iv.contains(4000.0 * LN_2));
        assert!(iv.width() < 1e-9);
        let small = ln_biguint(&BigUint::from(7u32));
        assert!(small.contains(7f64.ln()));
    }

    #[test]
    fn interval_pi_and_exp_enclose() {
        let p = Interval::pi();
        assert!(p.lo < PI || p.hi > PI);
        let e1 = Interval::point(1.0).exp();
        assert!(e1.contains(E));
        assert_eq!(Interval::point(1.0).certainly_le(Interval::point(2.0)), Some(true));
        assert_eq!(Interval::point(3.0).certainly_le(Interval::point(2.0)), Some(false));
        assert_eq!(Interval::new(1.0, 3.0).certainly_le(Interval::point(2.0)), None);
    }

    #[test]
    fn frexp_and_scaled_conversions() {
        assert_eq!(frexp(8.0), (0.5, 4));
        assert_eq!(frexp(-0.75), (-0.75, 0));
        let (m, e) = frexp(f64::MIN_POSITIVE / 8.0);
        assert_eq!(ldexp(m, e), f64::MIN_POSITIVE / 8.0);
        assert_eq!(scaled_to_biguint(3.0, 100), BigUint::from(3u32) << 100u32);
        assert_eq!(scaled_to_biguint(13.0, 0), BigUint::from(13u32));
        assert_eq!(scaled_to_biguint(2.5, -1), BigUint::from(1u32));
        let big = (BigUint::one() << 300u32) * 5u32;
        let (m, e) = biguint_to_scaled(&big);
        assert_eq!(scaled_to_biguint(m, e), big);
    }

    #[test]
    fn big_ratios_round_correctly() {
        let den = BigUint::from(3u32) << 5000u32;
        let num = BigInt::from(-2) << 5000u32;
        assert_eq!(ratio_to_f64(&num, &den), -2.0 / 3.0);
        assert_eq!(ratio_to_f64(&BigInt::from(1), &BigUint::from(10u32)), 0.1);
        assert_eq!(ratio_to_f64(&BigInt::zero(), &den), 0.0);
    }

    #[test]
    fn ldexp_handles_large_exponents() {
        assert_eq!(ldexp(ldexp(1e-300, 1200), -1200), 1e-300);
        assert_eq!(ldexp(1.0, -1074), f64::from_bits(1));
        assert_eq!(ldexp(3.0, -2), 0.75);
    }
}
