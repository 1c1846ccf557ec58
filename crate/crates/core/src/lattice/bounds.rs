use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::Serialize;

use super::ball::{BallSpec, Limits, MarkedClass, Mode};
use super::enumerate::{for_each_in_box, isqrt};
use super::profile::profile_spectrum;
use super::spectrum::{ball_count, NormSpectrum};
use crate::error::{Error, Result};
use crate::numeric::{binomial, ln_biguint, ratio_to_f64, Interval};

/// Outcome of the two-sided size estimate for `|B_N ∩ Z^d|`.
#[derive(Debug, Clone, Serialize)]
pub struct Lemma4Report {
    pub spec: BallSpec,
    pub lower: BigUint,
    pub count: BigUint,
    /// Enclosure of `ln` of the upper bound.
    pub ln_upper: (f64, f64),
    pub lower_ok: bool,
    /// `None` when the interval comparison is not decisive.
    pub upper_ok: Option<bool>,
}

impl Lemma4Report {
    pub fn ok(&self) -> bool {
        self.lower_ok && self.upper_ok == Some(true)
    }
}

/// `(2⌊κ⌋+1)^d <= count <= (2πe)^{d/2} (κ² + 1/4)^{d/2}`.
pub fn lemma4_check(spec: BallSpec, limits: &Limits) -> Result<Lemma4Report> {
    let count = ball_count(spec, Mode::Exact, limits)?;
    Ok(lemma4_from_count(spec, count))
}

/// As [`lemma4_check`] with the count supplied by the caller.
pub fn lemma4_from_count(spec: BallSpec, count: BigUint) -> Lemma4Report {
    let d = spec.d() as u64;
    let floor_kappa = isqrt(spec.n() / d);
    let lower = num_traits::pow(BigUint::from(2 * floor_kappa + 1), d as usize);

    // Squared form: count² (4d)^d <= (2πe)^d (4N² + d)^d.
    let dd = Interval::from_u64(d);
    let lhs = ln_biguint(&count) * 2.0 + dd * Interval::from_u64(4 * d).ln();
    let two_pi_e = Interval::ln2() + Interval::pi().ln() + Interval::point(1.0);
    let rhs = dd * (two_pi_e + Interval::from_u64(4 * spec.n() + d).ln());
    let ln_upper = rhs - dd * Interval::from_u64(4 * d).ln();
    let ln_upper = ln_upper * 0.5;

    Lemma4Report {
        spec,
        lower_ok: lower <= count,
        upper_ok: lhs.certainly_le(rhs),
        lower,
        count,
        ln_upper: (ln_upper.lo, ln_upper.hi),
    }
}

/// `2^n C(d, n) <= |B_N ∩ Z^d|` whenever `n <= d`; `None` when `n > d`.
pub fn binomial_sanity(spec: BallSpec, count: &BigUint) -> Option<bool> {
    let (n, d) = (spec.n(), spec.d() as u64);
    (n <= d).then(|| (BigUint::one() << n) * binomial(d, n) <= *count)
}

/// Which mass-concentration estimate to evaluate, with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "set", rename_all = "kebab-case")]
pub enum ConcentrationParams {
    /// `E = {x : #{i : |x_i| >= ε₂κ} <= ε₁d}`, bound `2e^{-d/10}`.
    LargeCoordinates { eps1: Ratio<u64>, eps2: Ratio<u64> },
    /// `E = {x : Σ_{i<=r} x_i² < ε³κ²r}`, bound `4e^{-εr/10}`.
    HeadMass { eps: Ratio<u64>, r: u32 },
    /// `E = {x : #{i : x_i = ±1} <= n - k}`, bound `2^{-k+1}`.
    UnitCoordinates { k: u64 },
    /// `E = {x : Σ_{|x_i| >= 2} x_i² > k}`, bound `2^{-k+1}`.
    LargeCoordinateMass { k: u64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationReport {
    pub params: ConcentrationParams,
    pub spec: BallSpec,
    pub set_size: BigUint,
    pub ball_size: BigUint,
    /// Enclosure of `ln(|E| / |B|)`; `None` when `E` is empty.
    pub ln_ratio: Option<(f64, f64)>,
    /// Enclosure of `ln` of the bound.
    pub ln_bound: (f64, f64),
    pub hypotheses_hold: bool,
    /// `None` when the comparison is not decisive.
    pub within_bound: Option<bool>,
}

impl ConcentrationReport {
    /// Only a decisive failure under the lemma's hypotheses counts.
    pub fn violation(&self) -> bool {
        self.hypotheses_hold && self.within_bound == Some(false)
    }

    pub fn ratio_f64(&self) -> f64 {
        ratio_to_f64(&self.set_size.clone().into(), &self.ball_size)
    }
}

fn ratio_le(r: Ratio<u64>, num: u64, den: u64) -> bool {
    *r.numer() as u128 * den as u128 <= num as u128 * *r.denom() as u128
}

/// Exact `|E| / |B_N ∩ Z^d|` for one of the concentration estimates.
pub fn concentration_masses(
    spec: BallSpec,
    params: &ConcentrationParams,
    limits: &Limits,
) -> Result<ConcentrationReport> {
    let (d, n, radius) = (spec.d() as u64, spec.n(), spec.radius() as u64);
    let ball_size = ball_count(spec, Mode::Exact, limits)?;
    let (set_size, hypotheses_hold, ln_bound) = match params {
        ConcentrationParams::LargeCoordinates { eps1, eps2 } => {
            check_positive(&[*eps1, *eps2])?;
            // |v| >= ε₂κ  ⟺  v² d q² >= p² N².
            let (p, q) = (*eps2.numer() as u128, *eps2.denom() as u128);
            let target = p * p * n as u128;
            let t = (0..=radius)
                .find(|&v| (v * v) as u128 * d as u128 * q * q >= target)
                .unwrap_or(radius + 1);
            let jmax = (*eps1.numer() as u128 * d as u128 / *eps1.denom() as u128) as usize;
            let prof = profile_spectrum(spec.d(), spec.radius(), &MarkedClass::abs_at_least(t), None, limits)?;
            let set: BigUint = prof
                .marked_totals(n as usize)
                .into_iter()
                .filter(|(j, _)| *j <= jmax)
                .map(|(_, c)| c)
                .sum();
            let hyp = ratio_le(*eps1, 1, 10) && ratio_le(*eps2, 1, 10) && n >= 100 * d;
            let ln_bound = Interval::ln2() - Interval::from_u64(d) / Interval::point(10.0);
            (set, hyp, ln_bound)
        }
        ConcentrationParams::HeadMass { eps, r } => {
            check_positive(&[*eps])?;
            let r = *r as u64;
            if r == 0 || r > d {
                return Err(Error::InvalidArgument(format!("r={r} outside 1..={d}")));
            }
            // l < ε³κ²r  ⟺  l d q³ < p³ N² r.
            let (p, q) = (*eps.numer() as u128, *eps.denom() as u128);
            let rhs = p.pow(3) * n as u128 * r as u128;
            let head = NormSpectrum::one_dim(spec.radius(), Mode::Exact).power(r, n as usize, limits)?;
            let tail = NormSpectrum::one_dim(spec.radius(), Mode::Exact)
                .power(d - r, n as usize, limits)?
                .prefix_sums_exact()
                .expect("exact");
            let head = head.exact().expect("exact");
            let mut set = num_bigint::BigInt::zero();
            for l in 0..=n as usize {
                if l as u128 * d as u128 * q.pow(3) >= rhs {
                    break;
                }
                set += &head[l] * &tail[n as usize - l];
            }
            let set = set.to_biguint().expect("non-negative");
            let hyp = ratio_le(*eps, 1, 50) && n >= 100 * d;
            let ln_bound =
                Interval::ln2() * 2.0 - Interval::point((p * r as u128) as f64) / Interval::point((10 * q) as f64);
            (set, hyp, ln_bound)
        }
        ConcentrationParams::UnitCoordinates { k } => {
            let k = *k;
            let set = if k > n {
                BigUint::zero()
            } else {
                let prof = profile_spectrum(spec.d(), spec.radius(), &MarkedClass::unit(), None, limits)?;
                prof.marked_totals(n as usize)
                    .into_iter()
                    .filter(|(j, _)| (*j as u64) <= n - k)
                    .map(|(_, c)| c)
                    .sum()
            };
            // κ <= 1/5 and n >= k >= 2^9 max(1, κ⁶ n), with κ⁶ n = N^8 / d³.
            let hyp =
                25 * n <= d && k <= n && k >= 512 && k as u128 * (d as u128).pow(3) >= 512 * (radius as u128).pow(8);
            let ln_bound = Interval::ln2() * (1.0 - k as f64);
            (set, hyp, ln_bound)
        }
        ConcentrationParams::LargeCoordinateMass { k } => {
            let k = *k;
            let set = large_mass_count(d, n, radius, k, limits)?;
            let hyp =
                25 * n <= d && k <= n && k >= 512 && k as u128 * (d as u128).pow(3) >= 512 * (radius as u128).pow(8);
            let ln_bound = Interval::ln2() * (1.0 - k as f64);
            (set, hyp, ln_bound)
        }
    };

    let ln_ratio = (!set_size.is_zero()).then(|| ln_biguint(&set_size) - ln_biguint(&ball_size));
    let within_bound = match (params, ln_ratio) {
        (ConcentrationParams::UnitCoordinates { k } | ConcentrationParams::LargeCoordinateMass { k }, _) => {
            Some(if *k >= 1 {
                &set_size << (*k - 1) <= ball_size
            } else {
                set_size <= &ball_size << 1u32
            })
        }
        (_, None) => Some(true),
        (_, Some(lr)) => lr.certainly_le(ln_bound),
    };
    Ok(ConcentrationReport {
        params: params.clone(),
        spec,
        set_size,
        ball_size,
        ln_ratio: ln_ratio.map(|i| (i.lo, i.hi)),
        ln_bound: (ln_bound.lo, ln_bound.hi),
        hypotheses_hold,
        within_bound,
    })
}

/// `#{x ∈ B_N ∩ Z^d : Σ_{|x_i| >= 2} x_i² > k}`.
///
/// A point with `j` coordinates of modulus at least two carrying squared
/// mass `s` and `a` coordinates equal to `±1` has norm `s + a`, and there are
/// `C(d, j) L_j(s) C(d - j, a) 2^a` of them, where `L_j` is the `j`-fold
/// spectrum of the values `|v| >= 2`.
fn large_mass_count(d: u64, n: u64, radius: u64, k: u64, limits: &Limits) -> Result<BigUint> {
    let j_max = (n / 4).min(d);
    limits.charge("large-coordinate mass", (j_max as u128 + 1) * (n as u128 + 1).pow(2))?;
    let n = n as usize;
    let mut large = vec![BigUint::zero(); n + 1];
    for v in 2..=radius as usize {
        if v * v <= n {
            large[v * v] = BigUint::from(2u32);
        }
    }
    let choose_j = crate::numeric::binomial_row(d, j_max);
    let mut lj = vec![BigUint::zero(); n + 1];
    lj[0] = BigUint::one();
    let mut total = BigUint::zero();
    for j in 0..=j_max {
        if j > 0 {
            let mut next = vec![BigUint::zero(); n + 1];
            for (s, c) in lj.iter().enumerate().filter(|(_, c)| !c.is_zero()) {
                for (t, w) in large.iter().enumerate().take(n + 1 - s).filter(|(_, w)| !w.is_zero()) {
                    next[s + t] += c * w;
                }
            }
            lj = next;
        }
        // Σ_{a <= t} C(d - j, a) 2^a for t = 0..=n.
        let mut prefix = Vec::with_capacity(n + 1);
        let mut term = BigUint::one();
        let mut acc = BigUint::zero();
        for a in 0..=n as u64 {
            if a <= d - j {
                acc += &term;
                term = term * (d - j - a) * 2u32 / (a + 1);
            }
            prefix.push(acc.clone());
        }
        let mut inner = BigUint::zero();
        for s in (k as usize + 1)..=n {
            if !lj[s].is_zero() {
                inner += &lj[s] * &prefix[n - s];
            }
        }
        total += inner * &choose_j[j as usize];
    }
    Ok(total)
}

fn check_positive(eps: &[Ratio<u64>]) -> Result<()> {
    if eps.iter().any(|e| e.numer() == &0) {
        return Err(Error::InvalidArgument("epsilon parameters must be positive".into()));
    }
    Ok(())
}

/// Volume of the unit ball in `R^r`, from `V_r = V_{r-2} · 2π / r`.
pub fn unit_ball_volume(r: u32) -> f64 {
    let mut v = if r % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if r % 2 == 0 { 2 } else { 3 };
    while k <= r {
        v *= 2.0 * std::f64::consts::PI / k as f64;
        k += 2;
    }
    v
}

fn in_ball(x: &[i64], center: &[f64], radius_sq: f64) -> bool {
    x.iter().zip(center).map(|(&v, &c)| (v as f64 - c).powi(2)).sum::<f64>() <= radius_sq
}

fn check_shift_args(r: u32, radius: f64, z: &[f64], limits: &Limits) -> Result<()> {
    if r == 0 || z.len() != r as usize || !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "shifted ball needs r >= 1, R > 0 and |z| = r (r={r}, R={radius}, len={})",
            z.len()
        )));
    }
    let side = 2 * radius.ceil() as u128 + 3;
    limits.charge_enumeration("shifted ball", side.saturating_pow(r))
}

/// `|(z + B_R) ∩ Z^r|` by enumeration.
pub fn shifted_ball_count(r: u32, radius: f64, z: &[f64], limits: &Limits) -> Result<u64> {
    check_shift_args(r, radius, z, limits)?;
    let lo: Vec<i64> = z.iter().map(|c| (c - radius).ceil() as i64).collect();
    let hi: Vec<i64> = z.iter().map(|c| (c + radius).floor() as i64).collect();
    let mut count = 0u64;
    let rsq = radius * radius;
    for_each_in_box(&lo, &hi, |x| count += in_ball(x, z, rsq) as u64);
    Ok(count)
}

/// `|(B_R ∩ Z^r) △ ((z + B_R) ∩ Z^r)|` by enumeration.
pub fn symdiff_count(r: u32, radius: f64, z: &[f64], limits: &Limits) -> Result<u64> {
    check_shift_args(r, radius, z, limits)?;
    let origin = vec![0.0; r as usize];
    let lo: Vec<i64> = z.iter().map(|c| (c.min(0.0) - radius).ceil() as i64).collect();
    let hi: Vec<i64> = z.iter().map(|c| (c.max(0.0) + radius).floor() as i64).collect();
    let mut count = 0u64;
    let rsq = radius * radius;
    for_each_in_box(&lo, &hi, |x| {
        count += (in_ball(x, &origin, rsq) != in_ball(x, z, rsq)) as u64
    });
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::enumerate_ball;

    #[test]
    fn size_estimate_examples() {
        let limits = Limits::default();
        let r = lemma4_check(BallSpec::new(1, 3).unwrap(), &limits).unwrap();
        assert_eq!(r.lower, BigUint::from(7u32));
        assert_eq!(r.count, BigUint::from(7u32));
        assert!(r.ok());
        let spec = BallSpec::new(4, 2).unwrap();
        let count = enumerate_ball(spec, &limits).unwrap().len();
        let r = lemma4_check(spec, &limits).unwrap();
        assert_eq!(r.count, BigUint::from(count));
        // (2πe)^2 (1 + 1/4)^2 evaluated directly.
        let upper = (2.0 * std::f64::consts::PI * std::f64::consts::E * 1.25f64).powi(2);
        assert!(r.ln_upper.0 <= upper.ln() && upper.ln() <= r.ln_upper.1);
        assert!(r.ok());
        assert!(lemma4_check(BallSpec::new(16, 40).unwrap(), &limits).unwrap().ok());
    }

    #[test]
    fn binomial_sanity_small() {
        let limits = Limits::default();
        for d in 1..=10 {
            let spec = BallSpec::new(d, 2).unwrap();
            let count = ball_count(spec, Mode::Exact, &limits).unwrap();
            assert_eq!(binomial_sanity(spec, &count), (d >= 4).then_some(true));
        }
    }

    #[test]
    fn unit_coordinate_set_trivial_and_empty() {
        let limits = Limits::default();
        let spec = BallSpec::new(100, 2).unwrap();
        let rep = concentration_masses(spec, &ConcentrationParams::UnitCoordinates { k: 4 }, &limits).unwrap();
        assert!(rep.set_size <= rep.ball_size);
        assert!(!rep.hypotheses_hold);
        let rep = concentration_masses(spec, &ConcentrationParams::UnitCoordinates { k: 9 }, &limits).unwrap();
        assert!(rep.set_size.is_zero());
    }

    #[test]
    fn unit_coordinate_set_matches_brute_force() {
        let limits = Limits::default();
        let spec = BallSpec::new(5, 2).unwrap();
        for k in 0..=4u64 {
            let rep = concentration_masses(spec, &ConcentrationParams::UnitCoordinates { k }, &limits).unwrap();
            let want = enumerate_ball(spec, &limits)
                .unwrap()
                .iter()
                .filter(|x| (x.iter().filter(|v| v.abs() == 1).count() as i64) <= 4 - k as i64)
                .count();
            assert_eq!(rep.set_size, BigUint::from(want));
        }
    }

    #[test]
    fn large_mass_set_matches_brute_force() {
        let limits = Limits::default();
        for (d, radius) in [(3u32, 3u32), (5, 2), (4, 4)] {
            let spec = BallSpec::new(d, radius).unwrap();
            let pts = enumerate_ball(spec, &limits).unwrap();
            for k in 0..=spec.n() {
                let rep = concentration_masses(spec, &ConcentrationParams::LargeCoordinateMass { k }, &limits).unwrap();
                let want = pts
                    .iter()
                    .filter(|x| x.iter().filter(|v| v.abs() >= 2).map(|v| v * v).sum::<i64>() > k as i64)
                    .count();
                assert_eq!(rep.set_size, BigUint::from(want), "d={d} N={radius} k={k}");
            }
        }
    }

    #[test]
    fn large_coordinate_and_head_sets_match_enumeration() {
        let limits = Limits::default();
        let spec = BallSpec::new(3, 4).unwrap();
        let kappa = spec.kappa();
        let rep = concentration_masses(
            spec,
            &ConcentrationParams::LargeCoordinates {
                eps1: Ratio::new(1, 3),
                eps2: Ratio::new(1, 2),
            },
            &limits,
        )
        .unwrap();
        let pts = enumerate_ball(spec, &limits).unwrap();
        let want = pts
            .iter()
            .filter(|x| x.iter().filter(|v| v.abs() as f64 >= 0.5 * kappa).count() <= 1)
            .count();
        assert_eq!(rep.set_size, BigUint::from(want));

        let rep = concentration_masses(
            spec,
            &ConcentrationParams::HeadMass {
                eps: Ratio::new(1, 2),
                r: 2,
            },
            &limits,
        )
        .unwrap();
        let thr = 0.125 * kappa * kappa * 2.0;
        let want = pts
            .iter()
            .filter(|x| ((x[0] * x[0] + x[1] * x[1]) as f64) < thr)
            .count();
        assert_eq!(rep.set_size, BigUint::from(want));
    }

    #[test]
    fn large_coordinate_set_at_kappa_ten() {
        let limits = Limits::default();
        let rep = concentration_masses(
            BallSpec::new(16, 40).unwrap(),
            &ConcentrationParams::LargeCoordinates {
                eps1: Ratio::new(1, 10),
                eps2: Ratio::new(1, 10),
            },
            &limits,
        )
        .unwrap();
        assert!(rep.hypotheses_hold);
        assert_eq!(rep.within_bound, Some(true));
        assert!(rep.ratio_f64() <= 2.0 * (-1.6f64).exp());
    }

    #[test]
    fn shifted_counts() {
        let limits = Limits::default();
        assert_eq!(shifted_ball_count(1, 2.5, &[0.6], &limits).unwrap(), 5);
        assert_eq!(symdiff_count(3, 2.0, &[0.0; 3], &limits).unwrap(), 0);
        assert_eq!(symdiff_count(1, 2.0, &[1.0], &limits).unwrap(), 2);
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-15);
    }
}
