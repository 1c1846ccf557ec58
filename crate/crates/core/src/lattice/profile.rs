use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};

use super::ball::{Limits, MarkedClass, Mode};
use super::spectrum::{conv_sparse_exact, nonzeros, NormSpectrum};
use crate::error::{Error, Result};
use crate::numeric::binomial;

/// Joint counts of lattice points by squared norm `m` and by the number `j`
/// of (profiled) coordinates lying in a marked class.
///
/// Only the band `j_offset ..= max_marked` is stored; entries outside it are 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSpectrum {
    max_norm: usize,
    j_offset: usize,
    rows: Vec<Vec<BigUint>>,
}

impl ProfileSpectrum {
    pub fn max_norm(&self) -> usize {
        self.max_norm
    }

    pub fn min_marked(&self) -> usize {
        self.j_offset
    }

    pub fn max_marked(&self) -> usize {
        self.j_offset + self.rows[0].len() - 1
    }

    /// `counts[m][j]`, zero outside the stored band.
    pub fn get(&self, m: usize, j: usize) -> BigUint {
        if m > self.max_norm || j < self.j_offset {
            return BigUint::zero();
        }
        self.rows[m]
            .get(j - self.j_offset)
            .cloned()
            .unwrap_or_else(BigUint::zero)
    }

    /// `Σ_j counts[m][j]` for every `m`.
    pub fn norm_totals(&self) -> Vec<BigUint> {
        self.rows.iter().map(|r| r.iter().sum()).collect()
    }

    /// `Σ_{m <= upto} counts[m][j]` for every `j` in the band, as `(j, total)`.
    pub fn marked_totals(&self, upto: usize) -> Vec<(usize, BigUint)> {
        let width = self.rows[0].len();
        let mut out = vec![BigUint::zero(); width];
        for row in &self.rows[..=upto.min(self.max_norm)] {
            for (acc, x) in out.iter_mut().zip(row) {
                *acc += x;
            }
        }
        out.into_iter()
            .enumerate()
            .map(|(i, x)| (i + self.j_offset, x))
            .collect()
    }
}

/// Counts `x ∈ Z^d` with `|x|² = m <= N²` jointly by `m` and by how many of
/// the first `split` coordinates (all `d` when `None`) lie in `marked`.
///
/// With `p` profiled coordinates, `a` marked nonzero, `b` unmarked nonzero
/// and the rest zero, the contribution is `C(p,a) C(p-a,b) (M^a U^b)[m]`,
/// where `M` and `U` are the one-dimensional series of marked and unmarked
/// nonzero values.
pub fn profile_spectrum(
    d: u32,
    radius: u32,
    marked: &MarkedClass,
    split: Option<u32>,
    limits: &Limits,
) -> Result<ProfileSpectrum> {
    if d == 0 || radius == 0 {
        return Err(Error::InvalidArgument("profile needs d >= 1 and N >= 1".into()));
    }
    let p = match split {
        Some(r) if r == 0 || r > d => {
            return Err(Error::InvalidArgument(format!("split r={r} outside 1..={d}")));
        }
        Some(r) => r as u64,
        None => d as u64,
    };
    let n = radius as usize * radius as usize;
    let r = radius as i64;

    let mut m_series = vec![BigInt::zero(); n + 1];
    let mut u_series = vec![BigInt::zero(); n + 1];
    for v in (-r..=r).filter(|&v| v != 0) {
        let slot = if marked.contains(v) {
            &mut m_series
        } else {
            &mut u_series
        };
        slot[(v * v) as usize] += 1;
    }
    let zero_marked = marked.contains(0);
    let m_sparse = nonzeros(&m_series);
    let u_sparse = nonzeros(&u_series);
    let reach = |sparse: &[(usize, BigInt)]| -> u64 { sparse.first().map_or(0, |(i, _)| (n / i) as u64).min(p) };
    let (amax, bmax) = (reach(&m_sparse), reach(&u_sparse));

    let band = (amax + 1) as u128 * (bmax + 1) as u128;
    limits.charge(
        "profile_spectrum",
        (band + (amax + bmax) as u128) * (n as u128 + 1) * (radius as u128 + 1),
    )?;

    let (j_lo, j_hi) = if zero_marked { (p - bmax, p) } else { (0, amax) };
    let width = (j_hi - j_lo + 1) as usize;
    let mut table = vec![vec![BigInt::zero(); width]; n + 1];

    let mut u_pows = Vec::with_capacity(bmax as usize + 1);
    let mut cur = unit(n);
    for b in 0..=bmax {
        if b > 0 {
            cur = conv_sparse_exact(&cur, &u_sparse, n);
        }
        u_pows.push(cur.clone());
    }

    let u_meta: Vec<(usize, usize)> = u_pows
        .iter()
        .map(|v| {
            let first = v.iter().position(|x| !x.is_zero()).unwrap_or(usize::MAX);
            (first, v.iter().filter(|x| !x.is_zero()).count())
        })
        .collect();

    let mut m_pow = unit(n);
    for a in 0..=amax {
        if a > 0 {
            m_pow = conv_sparse_exact(&m_pow, &m_sparse, n);
        }
        let m_nonzero = nonzeros(&m_pow);
        if m_nonzero.is_empty() {
            break;
        }
        let ca = BigInt::from(binomial(p, a));
        for (b, u_pow) in u_pows.iter().enumerate() {
            let b = b as u64;
            if a + b > p {
                break;
            }
            let (u_first, u_nonzero_count) = u_meta[b as usize];
            if u_nonzero_count == 0 || m_nonzero[0].0 + u_first > n {
                break;
            }
            let prod = if m_nonzero.len() <= u_nonzero_count {
                conv_sparse_exact(u_pow, &m_nonzero, n)
            } else {
                conv_sparse_exact(&m_pow, &nonzeros(u_pow), n)
            };
            let coef = &ca * BigInt::from(binomial(p - a, b));
            let j = a + if zero_marked { p - a - b } else { 0 };
            let col = (j - j_lo) as usize;
            for (row, x) in table.iter_mut().zip(&prod) {
                if !x.is_zero() {
                    row[col] += x * &coef;
                }
            }
        }
    }

    if let Some(r) = split {
        let rest_dim = (d - r) as u64;
        if rest_dim > 0 {
            let rest = NormSpectrum::one_dim(radius, Mode::Exact).power(rest_dim, n, limits)?;
            let rest = rest.exact().expect("exact");
            limits.charge("profile_spectrum split", width as u128 * (n as u128 + 1).pow(2))?;
            for col in 0..width {
                let column: Vec<BigInt> = table.iter().map(|row| row[col].clone()).collect();
                let merged = conv_sparse_exact(rest, &nonzeros(&column), n);
                for (row, x) in table.iter_mut().zip(merged) {
                    row[col] = x;
                }
            }
        }
    }

    let rows = table
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|x| x.to_biguint().expect("counts are non-negative"))
                .collect()
        })
        .collect();
    Ok(ProfileSpectrum {
        max_norm: n,
        j_offset: j_lo as usize,
        rows,
    })
}

fn unit(n: usize) -> Vec<BigInt> {
    let mut v = vec![BigInt::zero(); n + 1];
    v[0] = BigInt::one();
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::enumerate::for_each_in_ball;
    use std::collections::BTreeMap;

    fn brute(d: u32, radius: u32, marked: &MarkedClass, split: Option<u32>) -> BTreeMap<(usize, usize), u64> {
        let p = split.unwrap_or(d) as usize;
        let mut out = BTreeMap::new();
        for_each_in_ball(d as usize, (radius * radius) as u64, |x| {
            let m = x.iter().map(|v| (v * v) as usize).sum();
            let j = x[..p].iter().filter(|v| marked.contains(**v)).count();
            *out.entry((m, j)).or_insert(0) += 1;
        });
        out
    }

    fn assert_matches(d: u32, radius: u32, marked: &MarkedClass, split: Option<u32>) {
        let prof = profile_spectrum(d, radius, marked, split, &Limits::default()).unwrap();
        let want = brute(d, radius, marked, split);
        let n = (radius * radius) as usize;
        for m in 0..=n {
            for j in 0..=d as usize + 1 {
                let w = want.get(&(m, j)).copied().unwrap_or(0);
                assert_eq!(
                    prof.get(m, j),
                    BigUint::from(w),
                    "d={d} N={radius} {marked} m={m} j={j}"
                );
            }
        }
    }

    #[test]
    fn spec_example_unit_class() {
        let p = profile_spectrum(2, 1, &MarkedClass::unit(), None, &Limits::default()).unwrap();
        assert_eq!(p.get(1, 1), BigUint::from(4u32));
        assert_eq!(p.get(0, 0), BigUint::one());
        assert_eq!(p.get(2, 2), BigUint::zero());
    }

    #[test]
    fn matches_brute_force() {
        let classes = [
            MarkedClass::unit(),
            MarkedClass::abs_at_least(2),
            MarkedClass::all(),
            MarkedClass::none(),
            MarkedClass::parse("in{0,2}").unwrap(),
        ];
        for c in &classes {
            for d in 1..=4 {
                for radius in 1..=3 {
                    assert_matches(d, radius, c, None);
                    for r in 1..=d {
                        assert_matches(d, radius, c, Some(r));
                    }
                }
            }
        }
    }

    #[test]
    fn trivial_classes() {
        let limits = Limits::default();
        let spec = NormSpectrum::one_dim(3, Mode::Exact).power(4, 9, &limits).unwrap();
        let all = profile_spectrum(4, 3, &MarkedClass::all(), None, &limits).unwrap();
        let none = profile_spectrum(4, 3, &MarkedClass::none(), None, &limits).unwrap();
        for m in 0..=9 {
            let r = spec.exact().unwrap()[m].to_biguint().unwrap();
            assert_eq!(all.get(m, 4), r);
            assert_eq!(none.get(m, 0), r);
            assert_eq!(all.norm_totals()[m], r);
            for j in 0..4 {
                assert!(all.get(m, j).is_zero());
                assert!(none.get(m, j + 1).is_zero());
            }
        }
    }
}
