use std::collections::BTreeMap;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use super::report::{CellAccumulator, VerificationReport};
use super::{sum_enclosure, Ctx};
use crate::error::{Error, Result};
use crate::numeric::{pascal_u128, Interval, NeumaierSum};

/// Largest dimension for which the `u128` binomials stay exact.
pub const HYPERGEOMETRIC_D_MAX: u32 = 60;

/// `(Σ_{k <= k_max} C(r, k) C(d - r, s - k), C(d, s))`: the tail
/// `P[X <= k_max]` of `X = |σ(I) ∩ J|` with `|J| = r`, `|I| = s`, as an
/// exact fraction.
pub fn hypergeometric_tail(d: u32, r: u32, s: u32, k_max: u64) -> (u128, u128) {
    assert!(d <= HYPERGEOMETRIC_D_MAX && r <= d && s <= d);
    let c = pascal_u128(d as usize);
    let choose = |n: u32, k: u32| if k > n { 0 } else { c[n as usize][k as usize] };
    let num = (0..=r.min(s))
        .take_while(|&k| k as u64 <= k_max)
        .filter(|&k| s - k <= d - r)
        .map(|k| choose(r, k) * choose(d - r, s - k))
        .sum();
    (num, choose(d, s))
}

/// Decides `num / den <= exp(-x)` for `x = a / b >= 0`.
fn ratio_below_exp(num: u128, den: u128, a: u64, b: u64) -> Option<bool> {
    if num == 0 {
        return Some(true);
    }
    if a == 0 {
        return Some(num <= den);
    }
    let x = Interval::from_u64(a) / Interval::from_u64(b);
    let ln = Interval::point(num as f64).ln() - Interval::point(den as f64).ln();
    ln.certainly_le(-x)
}

pub(super) fn lemma6(ctx: &Ctx, report: &mut VerificationReport) -> Result<()> {
    let limit = ctx.grid.limit_d.unwrap_or(50);
    if limit > HYPERGEOMETRIC_D_MAX {
        return Err(Error::Config(format!(
            "limit_d = {limit} exceeds {HYPERGEOMETRIC_D_MAX}, the exact binomial range"
        )));
    }
    let deltas: Vec<Ratio<i64>> = ctx
        .grid
        .delta
        .iter()
        .filter(|&&x| x > 0.0 && x <= 1.0)
        .filter_map(|&x| Ratio::approximate_float(x))
        .collect();
    let mut undecided = 0u64;
    for d in 1..=limit {
        let mut acc = CellAccumulator::new(d as u64, 0, 0.0);
        for r in 0..=d {
            for s in 0..=d {
                let rs = (r * s) as u64;
                let (num, den) = hypergeometric_tail(d, r, s, rs / (5 * d as u64));
                let verdict = ratio_below_exp(num, den, rs, 10 * d as u64);
                undecided += verdict.is_none() as u64;
                let id = format!("tail r={r} I={s}");
                let rhs = (-(rs as f64) / (10 * d) as f64).exp();
                acc.record(
                    &id,
                    num as f64 / den as f64,
                    rhs,
                    verdict == Some(true),
                    || json!({"suite": "lemma6", "d": d, "r": r, "I": s, "k_max": rs / (5 * d as u64)}),
                );
                // The specialization with δ₂ = δ₁/5 and |I| >= δ₁ d.
                for delta in &deltas {
                    let (p, q) = (*delta.numer() as u64, *delta.denom() as u64);
                    if (s as u64) * q < p * d as u64 {
                        continue;
                    }
                    let k_max = p * r as u64 / (5 * q);
                    let (num, den) = hypergeometric_tail(d, r, s, k_max);
                    let verdict = ratio_below_exp(num, den, p * r as u64, 10 * q);
                    undecided += verdict.is_none() as u64;
                    let id = format!("delta-tail r={r} I={s} delta={delta}");
                    let rhs = (-((p * r as u64) as f64) / (10 * q) as f64).exp();
                    acc.record(&id, num as f64 / den as f64, rhs, verdict == Some(true), || {
                        json!({"suite": "lemma6", "d": d, "r": r, "I": s, "delta1": delta.to_string(), "k_max": k_max})
                    });
                }
            }
        }
        acc.finish_check(report);
    }
    if undecided > 0 {
        report.notes.push(format!(
            "{undecided} comparisons were not decided by interval arithmetic"
        ));
    }
    Ok(())
}

/// One instance of the expectation bound over random permutations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma7Input {
    pub d: u32,
    /// `u_1 >= ... >= u_d >= 0`.
    pub u: Vec<f64>,
    /// The index set `I`, entries in `1..=d`.
    pub i: Vec<u32>,
    /// `J = (d0, d] ∩ Z`.
    pub d0: u32,
    pub delta0: f64,
    pub delta1: f64,
}

impl Lemma7Input {
    pub fn new(u: Vec<f64>, i: Vec<u32>, d0: u32, delta0: f64, delta1: f64) -> Result<Self> {
        let d = u.len() as u32;
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if d == 0 || d > HYPERGEOMETRIC_D_MAX {
            return bad(format!("d = {d} outside 1..={HYPERGEOMETRIC_D_MAX}"));
        }
        if !(delta0 > 0.0 && delta0 < 1.0) || !(delta1 > 0.0 && delta1 <= 1.0) {
            return bad(format!(
                "need 0 < delta0 < 1 and 0 < delta1 <= 1, got {delta0}, {delta1}"
            ));
        }
        if u.windows(2).any(|w| !(w[0] >= w[1])) || !(u[d as usize - 1] >= 0.0) {
            return bad("u must be nonincreasing and nonnegative".into());
        }
        if !(u[0] <= (1.0 - delta0) / 2.0) {
            return bad(format!("u_1 = {} exceeds (1 - delta0)/2", u[0]));
        }
        let mut sorted = i.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != i.len() || i.iter().any(|&x| x == 0 || x > d) {
            return bad("I must hold distinct indices in 1..=d".into());
        }
        if (i.len() as f64) < delta1 * d as f64 {
            return bad(format!("|I| = {} is below delta1 d", i.len()));
        }
        if d0 > d {
            return bad(format!("d0 = {d0} exceeds d = {d}"));
        }
        Ok(Self {
            d,
            u,
            i,
            d0,
            delta0,
            delta1,
        })
    }

    pub fn j_sum(&self) -> f64 {
        self.u[self.d0 as usize..].iter().sum()
    }
}

/// `E[exp(-Σ_{j ∈ σ(I) ∩ J} u_j)]` over uniform permutations `σ`.
///
/// Given `|σ(I) ∩ J| = k` the intersection is a uniform `k`-subset of `J`,
/// so the expectation is `Σ_k C(d - |J|, |I| - k) e_k / C(d, |I|)` with `e_k`
/// the elementary symmetric polynomials of `exp(-u_j)`, `j ∈ J`.
pub fn lemma7_expectation(input: &Lemma7Input) -> f64 {
    let d = input.d as usize;
    let s = input.i.len();
    let weights: Vec<f64> = input.u[input.d0 as usize..].iter().map(|u| (-u).exp()).collect();
    let r = weights.len();
    let mut e = vec![0.0; r + 1];
    e[0] = 1.0;
    for (n, w) in weights.iter().enumerate() {
        for k in (1..=n + 1).rev() {
            e[k] += w * e[k - 1];
        }
    }
    let c = pascal_u128(d);
    let mut acc = NeumaierSum::new();
    for (k, ek) in e.iter().enumerate().take(s.min(r) + 1) {
        if s - k <= d - r {
            acc.add(c[d - r][s - k] as f64 * ek);
        }
    }
    acc.value() / c[d][s] as f64
}

fn lemma7_rhs(input: &Lemma7Input) -> f64 {
    let r = (input.d - input.d0) as usize;
    let coef = Interval::point(input.delta0) * Interval::point(input.delta1) / Interval::point(20.0);
    ((-(coef * sum_enclosure(input.j_sum(), r))).exp() * 3.0).hi
}

fn lemma7_record(acc: &mut CellAccumulator, id: &str, input: &Lemma7Input) {
    let lhs = lemma7_expectation(input);
    let rhs = lemma7_rhs(input);
    let slack = 64.0 * input.d as f64 * f64::EPSILON * lhs;
    acc.check(
        id,
        lhs,
        rhs,
        slack,
        || json!({"suite": "lemma7", "case": id, "input": serde_json::to_value(input).unwrap_or_default()}),
    );
}

/// Checks a single instance.
pub fn check_lemma7(input: &Lemma7Input) -> VerificationReport {
    let mut report = VerificationReport::new("lemma7", super::Suite::Lemma7.inequality());
    let mut acc = CellAccumulator::new(input.d as u64, 0, 0.0);
    lemma7_record(&mut acc, "input", input);
    acc.finish_check(&mut report);
    report
}

/// The worked instance: `d = 12`, `u_j = min((1 - δ₀)/2, 1/j)`, `|I| = 6`,
/// `J = (6, 12]`, `δ₀ = 3/5`, `δ₁ = 1/2`.
pub fn lemma7_example() -> Lemma7Input {
    let delta0 = 0.6;
    let u = (1..=12)
        .map(|j| ((1.0 - delta0) / 2.0f64).min(1.0 / j as f64))
        .collect();
    Lemma7Input::new(u, (1..=6).collect(), 6, delta0, 0.5).expect("admissible")
}

fn random_case(seed: u64, idx: usize, d_max: u32) -> Lemma7Input {
    let key = format!("{seed}:lemma7:{idx}");
    let mut bytes = [0u8; 32];
    bytes.copy_from_slice(&Sha256::digest(key.as_bytes()));
    let mut rng = ChaCha8Rng::from_seed(bytes);
    let d = rng.random_range(1..=d_max);
    let delta0 = rng.random_range(0.01..0.99);
    let delta1 = 1.0 - rng.random::<f64>() * 0.99;
    let top = (1.0 - delta0) / 2.0;
    let mut u: Vec<f64> = match rng.random_range(0..3) {
        0 => (0..d).map(|_| rng.random::<f64>() * top).collect(),
        1 => vec![top; d as usize],
        _ => {
            let p = rng.random_range(0.2..2.0);
            (1..=d).map(|j| top * (j as f64).powf(-p)).collect()
        }
    };
    u.sort_by(|a, b| b.total_cmp(a));
    let s_min = ((delta1 * d as f64).ceil() as u32).clamp(1, d);
    let s = rng.random_range(s_min..=d);
    let i = rand::seq::index::sample(&mut rng, d as usize, s as usize)
        .iter()
        .map(|x| x as u32 + 1)
        .collect();
    let d0 = rng.random_range(0..=d);
    Lemma7Input::new(u, i, d0, delta0, delta1).expect("generated cases are admissible")
}

pub(super) fn lemma7(ctx: &Ctx, report: &mut VerificationReport) -> Result<()> {
    let d_max = ctx.grid.limit_d.unwrap_or(40).clamp(1, HYPERGEOMETRIC_D_MAX);
    let mut cells: BTreeMap<u32, CellAccumulator> = BTreeMap::new();
    let example = lemma7_example();
    let mut cases = vec![("example".to_string(), example)];
    for i in 0..ctx.grid.cases.unwrap_or(500) {
        cases.push((format!("random-{i}"), random_case(ctx.grid.seed, i, d_max)));
    }
    for (id, input) in &cases {
        let acc = cells
            .entry(input.d)
            .or_insert_with(|| CellAccumulator::new(input.d as u64, 0, 0.0));
        lemma7_record(acc, id, input);
    }
    for acc in cells.into_values() {
        acc.finish_check(report);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn subsets(d: usize, s: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for mask in 0u64..(1 << d) {
            if mask.count_ones() as usize == s {
                out.push((0..d).filter(|i| mask >> i & 1 == 1).collect());
            }
        }
        out
    }

    #[test]
    fn tail_examples() {
        // d = 4, |J| = 2, |I| = 2: P[X = 0] = 1/6.
        assert_eq!(hypergeometric_tail(4, 2, 2, 0), (1, 6));
        assert_eq!(hypergeometric_tail(4, 2, 2, 1), (5, 6));
        assert_eq!(hypergeometric_tail(4, 2, 2, 2), (6, 6));
        // |I| = d forces X = r.
        assert_eq!(hypergeometric_tail(7, 3, 7, 2).0, 0);
    }

    #[test]
    fn tail_matches_subset_enumeration() {
        let d = 8;
        for r in 0..=d {
            for s in 0..=d {
                let all = subsets(d, s);
                for k in 0..=d as u64 {
                    let hits = all
                        .iter()
                        .filter(|set| set.iter().filter(|&&i| i < r).count() as u64 <= k)
                        .count();
                    let (num, den) = hypergeometric_tail(d as u32, r as u32, s as u32, k);
                    assert_eq!(den as usize, all.len());
                    assert_eq!(num as usize, hits);
                }
            }
        }
    }

    #[test]
    fn expectation_matches_subset_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..40 {
            let d = rng.random_range(1..=9u32);
            let mut u: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 0.3).collect();
            u.sort_by(|a, b| b.total_cmp(a));
            let s = rng.random_range(1..=d);
            let d0 = rng.random_range(0..=d);
            let input = Lemma7Input::new(u.clone(), (1..=s).collect(), d0, 0.3, s as f64 / d as f64).unwrap();
            // σ(I) is a uniform s-subset of {1..d}.
            let all = subsets(d as usize, s as usize);
            let mean = all
                .iter()
                .map(|set| (-set.iter().filter(|&&j| j >= d0 as usize).map(|&j| u[j]).sum::<f64>()).exp())
                .sum::<f64>()
                / all.len() as f64;
            assert!((lemma7_expectation(&input) - mean).abs() < 1e-13);
        }
    }

    #[test]
    fn lemma7_trivial_cases_pass() {
        let zero = Lemma7Input::new(vec![0.0; 5], vec![1, 2], 0, 0.5, 0.4).unwrap();
        assert!((lemma7_expectation(&zero) - 1.0).abs() < 1e-15);
        assert!(check_lemma7(&zero).passed());
        // |I| = d: the intersection is all of J.
        let u = vec![0.2, 0.2, 0.1, 0.05];
        let full = Lemma7Input::new(u.clone(), vec![1, 2, 3, 4], 1, 0.5, 1.0).unwrap();
        assert!((lemma7_expectation(&full) - (-0.35f64).exp()).abs() < 1e-15);
        assert!(check_lemma7(&full).passed());
        let ex = check_lemma7(&lemma7_example());
        assert!(ex.passed());
        assert!(ex.cells[0].margin > 0.0);
    }

    #[test]
    fn inadmissible_inputs_rejected() {
        assert!(Lemma7Input::new(vec![0.1, 0.2], vec![1], 0, 0.5, 0.5).is_err());
        assert!(Lemma7Input::new(vec![0.3], vec![1], 0, 0.5, 0.5).is_err());
        assert!(Lemma7Input::new(vec![0.1, 0.0], vec![1], 0, 0.5, 0.9).is_err());
        assert!(Lemma7Input::new(vec![0.1, 0.0], vec![3], 0, 0.5, 0.5).is_err());
        assert!(Lemma7Input::new(vec![0.1, 0.0], vec![1], 3, 0.5, 0.5).is_err());
    }
}
