use num_bigint::{BigInt, BigUint};
use serde::{Deserialize, Serialize};

use super::torus::TorusPoint;
use crate::error::{Error, Result};
use crate::lattice::spectrum::{ball_counts_upto, solve_log2_tilt};
use crate::lattice::{for_each_in_ball, BallSpec, Limits, Mode, NormSpectrum};
use crate::numeric::{biguint_to_scaled, frexp, ldexp, ratio_to_f64, tilted_term, NeumaierSum, ScaledSum};

fn isqrt(x: u64) -> u32 {
    crate::lattice::enumerate::isqrt(x) as u32
}

fn check_dim(xi: &TorusPoint, d: u32) -> Result<()> {
    if xi.d() != d as usize {
        return Err(Error::InvalidArgument(format!(
            "frequency has {} coordinates, expected {d}",
            xi.d()
        )));
    }
    Ok(())
}

/// `Σ_{x ∈ Z^d, |x|² = m} Π_i cos(2π x_i ξ_i)` for `m <= budget`, tilted by
/// `2^(m log2_tilt)` and stored as values times `2^scale`.
struct CosineSpectrum {
    values: Vec<f64>,
    scale: i64,
    log2_tilt: f64,
}

impl CosineSpectrum {
    fn new(xi: &TorusPoint, radius: u32, budget: usize, limits: &Limits) -> Result<Self> {
        limits.charge(
            "multiplier",
            xi.d() as u128 * (budget as u128 + 1) * (radius as u128 + 1),
        )?;
        // Tilt fitted to the counting measure so that norms near `budget`
        // carry the mass.
        let one_dim: Vec<(usize, f64)> = std::iter::once((0, 0.0))
            .chain(
                (1..=radius as usize)
                    .map(|v| (v * v, 1.0))
                    .take_while(|&(m, _)| m <= budget),
            )
            .collect();
        let log2_tilt = solve_log2_tilt(&one_dim, budget as f64 / xi.d().max(1) as f64);
        let mut cur = vec![0.0; budget + 1];
        cur[0] = 1.0;
        let mut scale = 0i64;
        let mut next = vec![0.0; budget + 1];
        for i in 0..xi.d() {
            let cos = xi.cosines(i, radius);
            for (dst, src) in next.iter_mut().zip(&cur) {
                *dst = src * cos[0];
            }
            for (v, c) in cos.iter().enumerate().skip(1) {
                let j = v * v;
                if j > budget {
                    break;
                }
                let w = 2.0 * c * (j as f64 * log2_tilt).exp2();
                for (dst, src) in next[j..].iter_mut().zip(&cur) {
                    *dst += w * src;
                }
            }
            std::mem::swap(&mut cur, &mut next);
            let mx = cur.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if mx > 0.0 {
                let e = frexp(mx).1;
                cur.iter_mut().for_each(|v| *v = ldexp(*v, -e));
                scale += e;
            }
        }
        Ok(Self {
            values: cur,
            scale,
            log2_tilt,
        })
    }

    /// Running sums read off at each index in `marks` (ascending).
    fn prefix_at(&self, marks: impl Iterator<Item = usize>) -> Vec<(f64, i64)> {
        let mut acc = ScaledSum::new();
        let mut next = 0usize;
        let mut out = Vec::new();
        for m in marks {
            while next <= m {
                let (v, e) = tilted_term(self.values[next], self.scale, next, self.log2_tilt);
                acc.add(v, e);
                next += 1;
            }
            out.push(acc.value());
        }
        out
    }

    /// Whether the sum up to `m`, divided by `count`, is clear of the
    /// floating underflow floor.
    fn resolves(&self, m: usize, count: &BigUint) -> bool {
        let floor = -1000.0 + self.scale as f64 - m as f64 * self.log2_tilt + (self.values.len() as f64).log2();
        let (mant, e) = biguint_to_scaled(count);
        floor - (mant.log2() + e as f64) < -60.0
    }
}

fn scaled_quotient((num, num_scale): (f64, i64), den: &BigUint) -> f64 {
    let (mant, e) = biguint_to_scaled(den);
    ldexp(num / mant, num_scale - e)
}

/// Evaluates the prefix quotients at `marks(r)` for `r = 0..=upto`,
/// rerunning with a smaller budget for the leading entries a tilt fitted to
/// the full budget cannot resolve.
fn eval_marks(
    xi: &TorusPoint,
    upto: usize,
    mark: impl Fn(usize) -> usize,
    counts: &[BigUint],
    limits: &Limits,
) -> Result<Vec<f64>> {
    let mut out = vec![f64::NAN; upto + 1];
    let mut hi = upto;
    loop {
        let budget = mark(hi);
        let spec = CosineSpectrum::new(xi, isqrt(budget as u64), budget, limits)?;
        let sums = spec.prefix_at((0..=hi).map(&mark));
        let mut unresolved = None;
        for (r, s) in sums.into_iter().enumerate().rev() {
            if spec.resolves(mark(r), &counts[r]) {
                out[r] = scaled_quotient(s, &counts[r]);
            } else {
                unresolved = Some(r);
                break;
            }
        }
        match unresolved {
            Some(r) if r < hi => hi = r,
            Some(_) => return Err(Error::Range(format!("multiplier spectrum at index {hi}"))),
            None => return Ok(out),
        }
    }
}

/// Evaluates `m_N(ξ)` for every `N <= radius_max` in one pass.
///
/// The cosine-weighted spectrum truncated at `N²` is the same for every
/// one-dimensional radius `>= N`, so a single DP at `radius_max` serves all
/// smaller radii. Ball sizes are exact.
#[derive(Debug, Clone)]
pub struct MultiplierDp {
    d: u32,
    radius_max: u32,
    counts: Vec<BigUint>,
    limits: Limits,
}

impl MultiplierDp {
    pub fn new(d: u32, radius_max: u32, limits: &Limits) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        Ok(Self {
            d,
            radius_max,
            counts: ball_counts_upto(d, radius_max, limits)?,
            limits: *limits,
        })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn radius_max(&self) -> u32 {
        self.radius_max
    }

    /// `|B_N ∩ Z^d|` indexed by `N`.
    pub fn counts(&self) -> &[BigUint] {
        &self.counts
    }

    /// `m_N(ξ)` for `N = 0..=upto`.
    pub fn eval_upto(&self, xi: &TorusPoint, upto: u32) -> Result<Vec<f64>> {
        check_dim(xi, self.d)?;
        let upto = upto.min(self.radius_max);
        if xi.is_zero() {
            return Ok(vec![1.0; upto as usize + 1]);
        }
        eval_marks(xi, upto as usize, |r| r * r, &self.counts, &self.limits)
    }

    pub fn eval_all(&self, xi: &TorusPoint) -> Result<Vec<f64>> {
        self.eval_upto(xi, self.radius_max)
    }

    pub fn eval(&self, radius: u32, xi: &TorusPoint) -> Result<f64> {
        if radius > self.radius_max {
            return Err(Error::InvalidArgument(format!(
                "radius {radius} above table maximum {}",
                self.radius_max
            )));
        }
        Ok(self.eval_upto(xi, radius)?[radius as usize])
    }
}

/// `m_N(ξ) = |B_N ∩ Z^d|^{-1} Σ_{x ∈ B_N ∩ Z^d} Π_j cos(2π x_j ξ_j)`.
pub fn m_n(spec: BallSpec, xi: &TorusPoint, limits: &Limits) -> Result<f64> {
    MultiplierDp::new(spec.d(), spec.radius(), limits)?.eval(spec.radius(), xi)
}

/// Lower dimensional multipliers `m^{(r)}_{√l}` for every squared radius
/// `l <= l_max`, with the exact ball sizes computed once.
#[derive(Debug, Clone)]
pub struct LowerMultiplierDp {
    r: u32,
    l_max: u64,
    counts: Vec<BigUint>,
    limits: Limits,
}

impl LowerMultiplierDp {
    pub fn new(r: u32, l_max: u64, limits: &Limits) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        let budget = l_max as usize;
        let counts = NormSpectrum::one_dim(isqrt(l_max), Mode::Exact)
            .resized(budget)
            .power(r as u64, budget, limits)?
            .prefix_sums_exact()
            .expect("exact")
            .into_iter()
            .map(|c| c.magnitude().clone())
            .collect();
        Ok(Self {
            r,
            l_max,
            counts,
            limits: *limits,
        })
    }

    /// `|B_{√l} ∩ Z^r|` indexed by `l`.
    pub fn counts(&self) -> &[BigUint] {
        &self.counts
    }

    /// `m^{(r)}_{√l}(η)` for `l = 0..=l_max`.
    pub fn eval_all(&self, eta: &TorusPoint) -> Result<Vec<f64>> {
        check_dim(eta, self.r)?;
        let budget = self.l_max as usize;
        if eta.is_zero() {
            return Ok(vec![1.0; budget + 1]);
        }
        eval_marks(eta, budget, |l| l, &self.counts, &self.limits)
    }
}

/// Lower dimensional multiplier `m^{(r)}_{√l}(η)` for every `l <= l_max`.
pub fn m_lower_all(eta: &TorusPoint, l_max: u64, limits: &Limits) -> Result<Vec<f64>> {
    LowerMultiplierDp::new(eta.d() as u32, l_max, limits)?.eval_all(eta)
}

/// `m^{(r)}_{√l}(η)` for a single squared radius `l`.
pub fn m_lower(l: u64, eta: &TorusPoint, limits: &Limits) -> Result<f64> {
    Ok(m_lower_all(eta, l, limits)?[l as usize])
}

/// The defining sum over `{|x|² <= radius_sq}`, by enumeration.
pub fn m_bruteforce(radius_sq: u64, xi: &TorusPoint, limits: &Limits) -> Result<f64> {
    let d = xi.d();
    let side = 2 * isqrt(radius_sq) as u128 + 1;
    limits.charge_enumeration("m_bruteforce", side.saturating_pow(d as u32))?;
    let mut sum = NeumaierSum::new();
    let mut count = 0u64;
    let c = xi.components();
    for_each_in_ball(d, radius_sq, |x| {
        let p: f64 = x
            .iter()
            .zip(c)
            .map(|(&xj, &t)| (2.0 * std::f64::consts::PI * xj as f64 * t).cos())
            .product();
        sum.add(p);
        count += 1;
    });
    Ok(sum.value() / count as f64)
}

/// An exact weighted mass `sum / count` over `B_N ∩ Z^d`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactMass {
    pub sum: BigInt,
    pub count: BigUint,
}

impl ExactMass {
    pub fn value(&self) -> f64 {
        ratio_to_f64(&self.sum, &self.count)
    }
}

/// `Σ_{x ∈ B_N ∩ Z^d} (-1)^{x_1 + ... + x_v}` with the sign carried by the
/// first `v` coordinates, together with `|B_N ∩ Z^d|`.
pub fn signed_mass(spec: BallSpec, v: u32, limits: &Limits) -> Result<ExactMass> {
    if v > spec.d() {
        return Err(Error::InvalidArgument(format!(
            "signed coordinates {v} exceed dimension {}",
            spec.d()
        )));
    }
    let n = spec.n() as usize;
    let radius = spec.radius();
    let plain = NormSpectrum::one_dim(radius, Mode::Exact);
    let alt = NormSpectrum::one_dim_integer(radius, |m| if m % 2 == 0 { 1 } else { -1 });
    let counted = plain.power(spec.d() as u64, n, limits)?;
    let count = counted.partial_sum_exact(n).expect("exact");
    let signed = match v {
        0 => counted,
        v if v == spec.d() => alt.power(v as u64, n, limits)?,
        v => alt
            .power(v as u64, n, limits)?
            .convolve_truncated(&plain.power((spec.d() - v) as u64, n, limits)?, n)?,
    };
    Ok(ExactMass {
        sum: signed.partial_sum_exact(n).expect("exact"),
        count: count.magnitude().clone(),
    })
}

/// `Σ_{x ∈ B_N ∩ Z^d} (-1)^{Σ_i x_i}`, which equals `|B_N ∩ Z^d| m_N(1/2, ..., 1/2)`.
pub fn alternating_mass(spec: BallSpec, limits: &Limits) -> Result<ExactMass> {
    signed_mass(spec, spec.d(), limits)
}

/// Exact DP alternating mass against a direct enumeration of the ball.
pub fn alternating_mass_identity_check(spec: BallSpec, limits: &Limits) -> Result<bool> {
    let side = 2 * spec.radius() as u128 + 1;
    limits.charge_enumeration("alternating_mass_identity_check", side.saturating_pow(spec.d()))?;
    let dp = alternating_mass(spec, limits)?;
    let mut sum = 0i64;
    let mut count = 0i64;
    for_each_in_ball(spec.d() as usize, spec.n(), |x| {
        sum += if x.iter().sum::<i64>() % 2 == 0 { 1 } else { -1 };
        count += 1;
    });
    let brute = sum as f64 / count as f64;
    Ok((dp.value() - brute).abs() <= 1e-12)
}

/// Which small-scale approximant applies at `ξ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaApproximant {
    pub branch: u8,
    pub value: f64,
    pub v_count: usize,
}

/// `λ¹` when `2|V_ξ| <= d`, otherwise `λ²` built from the alternating mass
/// `alt = m_N(1/2, ..., 1/2)`.
pub fn lambda_with_mass(spec: BallSpec, xi: &TorusPoint, alt: f64) -> LambdaApproximant {
    let v_count = xi.v_set().len();
    let kappa_sq = spec.n() as f64 / spec.d() as f64;
    if 2 * v_count <= spec.d() as usize {
        LambdaApproximant {
            branch: 1,
            value: (-kappa_sq * xi.sin_sq_sum()).exp(),
            v_count,
        }
    } else {
        LambdaApproximant {
            branch: 2,
            value: alt * (-kappa_sq * xi.cos_sq_sum()).exp(),
            v_count,
        }
    }
}

pub fn lambda_approximants(spec: BallSpec, xi: &TorusPoint, limits: &Limits) -> Result<LambdaApproximant> {
    check_dim(xi, spec.d())?;
    let alt = alternating_mass(spec, limits)?.value();
    Ok(lambda_with_mass(spec, xi, alt))
}

/// Heat semigroup symbol `exp(-t Σ sin²(π ξ_i))`.
pub fn semigroup_multiplier(t: f64, xi: &TorusPoint) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    (-t * xi.sin_sq_sum()).exp()
}

/// `|m_N(ξ)|` may not exceed one; used as a sanity guard on DP output.
pub fn within_unit(value: f64) -> bool {
    value.is_finite() && value.abs() <= 1.0 + 1e-9
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(d: u32, n: u32) -> BallSpec {
        BallSpec::new(d, n).unwrap()
    }

    #[test]
    fn multiplier_examples() {
        let lim = Limits::default();
        assert_eq!(m_n(spec(3, 4), &TorusPoint::zero(3), &lim).unwrap(), 1.0);
        let third = TorusPoint::rational(&[1], 3).unwrap();
        assert!(m_n(spec(1, 1), &third, &lim).unwrap().abs() < 1e-15);
        let corner = TorusPoint::new(vec![0.5, 0.5]);
        assert!((m_n(spec(2, 1), &corner, &lim).unwrap() + 0.6).abs() < 1e-15);
    }

    #[test]
    fn lower_dimensional_examples() {
        let lim = Limits::default();
        assert_eq!(m_lower(7, &TorusPoint::zero(3), &lim).unwrap(), 1.0);
        let half = TorusPoint::new(vec![0.5]);
        assert!((m_lower(1, &half, &lim).unwrap() + 1.0 / 3.0).abs() < 1e-15);
        let eta = TorusPoint::new(vec![0.5, 0.0]);
        let want = m_bruteforce(2, &eta, &lim).unwrap();
        assert!((m_lower(2, &eta, &lim).unwrap() - want).abs() < 1e-15);
        // 9 points: 1 - 2 + 2 - 4 from (0,0), (±1,0), (0,±1), (±1,±1)
        assert!((want + 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn dp_matches_enumeration() {
        let lim = Limits::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in 1..=4u32 {
            let dp = MultiplierDp::new(d, 5, &lim).unwrap();
            for _ in 0..10 {
                let xi = TorusPoint::new((0..d).map(|_| rng.random::<f64>() - 0.5).collect());
                let all = dp.eval_all(&xi).unwrap();
                for radius in 1..=5u64 {
                    let want = m_bruteforce(radius * radius, &xi, &lim).unwrap();
                    assert!((all[radius as usize] - want).abs() < 1e-12, "d={d} N={radius}");
                }
                let lower = m_lower_all(&xi, 20, &lim).unwrap();
                for l in [0u64, 3, 7, 13, 20] {
                    let want = m_bruteforce(l, &xi, &lim).unwrap();
                    assert!((lower[l as usize] - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn symmetric_under_permutation_and_sign() {
        let lim = Limits::default();
        let xi = TorusPoint::new(vec![0.11, -0.37, 0.29, 0.05]);
        let base = m_n(spec(4, 3), &xi, &lim).unwrap();
        let p = xi.permuted(&[2, 0, 3, 1]);
        assert!((m_n(spec(4, 3), &p, &lim).unwrap() - base).abs() < 1e-13);
        let flipped = TorusPoint::new(vec![-0.11, -0.37, 0.29, -0.05]);
        assert!((m_n(spec(4, 3), &flipped, &lim).unwrap() - base).abs() < 1e-13);
    }

    #[test]
    fn large_dimension_stays_bounded() {
        let lim = Limits::default();
        let dp = MultiplierDp::new(400, 12, &lim).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xi = TorusPoint::new((0..400).map(|_| rng.random::<f64>() - 0.5).collect());
        for v in dp.eval_all(&xi).unwrap() {
            assert!(within_unit(v));
        }
    }

    #[test]
    fn near_zero_frequency_in_huge_dimension() {
        let lim = Limits::default();
        let d = 13_500;
        let dp = MultiplierDp::new(d, 23, &lim).unwrap();
        let xi = TorusPoint::new(vec![1e-9; d as usize]);
        for v in dp.eval_all(&xi).unwrap() {
            assert!((v - 1.0).abs() < 1e-9, "{v}");
        }
        let half = TorusPoint::new(vec![0.5; d as usize]);
        let m = dp.eval_all(&half).unwrap();
        // cos(pi x) = (-1)^x, so m_1 = (1 - 2d) / (1 + 2d).
        let expected = (1.0 - 2.0 * d as f64) / (1.0 + 2.0 * d as f64);
        assert!((m[1] - expected).abs() < 1e-12);
        assert!(m.iter().all(|v| within_unit(*v)));
    }

    #[test]
    fn alternating_mass_examples() {
        let lim = Limits::default();
        let a = alternating_mass(spec(2, 1), &lim).unwrap();
        assert_eq!(a.sum, BigInt::from(-3));
        assert_eq!(a.count, BigUint::from(5u32));
        let b = alternating_mass(spec(1, 4), &lim).unwrap();
        assert!((b.value() - 1.0 / 9.0).abs() < 1e-16);
        for (d, n) in [(2, 1), (3, 2), (1, 4), (4, 3)] {
            assert!(alternating_mass_identity_check(spec(d, n), &lim).unwrap());
        }
    }

    #[test]
    fn signed_mass_matches_enumeration() {
        let lim = Limits::default();
        for v in 0..=3u32 {
            let got = signed_mass(spec(3, 2), v, &lim).unwrap();
            let mut want = 0i64;
            for_each_in_ball(3, 4, |x| {
                let s: i64 = x[..v as usize].iter().sum();
                want += if s % 2 == 0 { 1 } else { -1 };
            });
            assert_eq!(got.sum, BigInt::from(want));
            assert_eq!(got.count, BigUint::from(33u32));
        }
    }

    #[test]
    fn lambda_branches() {
        let lim = Limits::default();
        let z = lambda_approximants(spec(4, 2), &TorusPoint::zero(4), &lim).unwrap();
        assert_eq!((z.branch, z.value), (1, 1.0));
        let b = lambda_approximants(spec(1, 1), &TorusPoint::new(vec![0.49]), &lim).unwrap();
        assert_eq!(b.branch, 2);
        let corner = lambda_approximants(spec(2, 1), &TorusPoint::new(vec![0.5, 0.5]), &lim).unwrap();
        assert_eq!(corner.branch, 2);
        assert!((corner.value + 0.6).abs() < 1e-15);
        let tie = lambda_with_mass(spec(2, 1), &TorusPoint::new(vec![0.4, 0.1]), 0.0);
        assert_eq!(tie.branch, 1);
    }

    #[test]
    fn semigroup_examples() {
        assert_eq!(semigroup_multiplier(0.0, &TorusPoint::new(vec![0.3])), 1.0);
        assert_eq!(semigroup_multiplier(2.0, &TorusPoint::zero(3)), 1.0);
        let v = semigroup_multiplier(1.0, &TorusPoint::new(vec![0.5]));
        assert!((v - (-1.0f64).exp()).abs() < 1e-16);
    }
}
