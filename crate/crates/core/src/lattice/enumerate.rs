use super::ball::{BallSpec, Limits};
use crate::error::Result;

/// Calls `f` on every `x ∈ Z^d` with `|x|² <= radius_sq`, in lexicographic
/// order, pruning on the remaining squared-norm budget.
pub fn for_each_in_ball(d: usize, radius_sq: u64, mut f: impl FnMut(&[i64])) {
    let mut x = vec![0i64; d];
    fn rec(x: &mut [i64], i: usize, left: u64, f: &mut dyn FnMut(&[i64])) {
        if i == x.len() {
            f(x);
            return;
        }
        let r = isqrt(left) as i64;
        for v in -r..=r {
            x[i] = v;
            rec(x, i + 1, left - (v * v) as u64, f);
        }
        x[i] = 0;
    }
    rec(&mut x, 0, radius_sq, &mut f);
}

/// Calls `f` on every integer point of the box `∏ [lo_i, hi_i]`, lexicographically.
pub fn for_each_in_box(lo: &[i64], hi: &[i64], mut f: impl FnMut(&[i64])) {
    assert_eq!(lo.len(), hi.len());
    if lo.iter().zip(hi).any(|(a, b)| a > b) {
        return;
    }
    let mut x = lo.to_vec();
    loop {
        f(&x);
        let mut i = x.len();
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if x[i] < hi[i] {
                x[i] += 1;
                break;
            }
            x[i] = lo[i];
        }
    }
}

/// All points of `B_N ∩ Z^d`, lexicographically ordered.
pub fn enumerate_ball(spec: BallSpec, limits: &Limits) -> Result<Vec<Vec<i64>>> {
    let side = 2 * spec.radius() as u128 + 1;
    limits.charge_enumeration("enumerate_ball", side.saturating_pow(spec.d()))?;
    let mut out = Vec::new();
    for_each_in_ball(spec.d() as usize, spec.n(), |x| out.push(x.to_vec()));
    Ok(out)
}

pub(crate) fn isqrt(x: u64) -> u64 {
    num_integer::Roots::sqrt(&x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_balls() {
        let limits = Limits::default();
        let pts = enumerate_ball(BallSpec::new(1, 1).unwrap(), &limits).unwrap();
        assert_eq!(pts, vec![vec![-1], vec![0], vec![1]]);
        assert_eq!(enumerate_ball(BallSpec::new(2, 1).unwrap(), &limits).unwrap().len(), 5);
        let pts = enumerate_ball(BallSpec::new(3, 2).unwrap(), &limits).unwrap();
        let mut sorted = pts.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted, pts);
        assert!(pts.iter().all(|x| x.iter().map(|v| v * v).sum::<i64>() <= 4));
    }

    #[test]
    fn cap_is_enforced() {
        let limits = Limits {
            enumeration_cap: 100,
            ..Limits::default()
        };
        assert!(enumerate_ball(BallSpec::new(3, 2).unwrap(), &limits)
            .unwrap_err()
            .is_budget());
    }

    #[test]
    fn box_walk_counts() {
        let mut n = 0;
        for_each_in_box(&[-1, 0], &[1, 2], |_| n += 1);
        assert_eq!(n, 9);
        for_each_in_box(&[1], &[0], |_| panic!("empty box"));
    }
}
