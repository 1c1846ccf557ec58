use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::grid::GridFunction;
use crate::error::{Error, Result};
use crate::lattice::{enumerate_ball, BallSpec, Limits};
use crate::multiplier::{semigroup_multiplier, MultiplierDp, TorusPoint};
use crate::numeric::NeumaierSum;
use crate::verifier::RadiusRule;

/// How a periodic grid stands in for `Z^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Semantics {
    /// Cyclic convolution on `(Z/MZ)^d`, whatever the support.
    #[default]
    Periodic,
    /// Refuse inputs whose averages would wrap around the torus.
    Faithful,
}

/// Whether `M_N f` on the torus differs from `M_N f` on `Z^d`.
pub fn wraps(f: &GridFunction, n: u32) -> bool {
    f.period() <= 2 * n as u64 + f.support_diameter()
}

fn guard(f: &GridFunction, radii: &[u32], semantics: Semantics) -> Result<()> {
    if semantics == Semantics::Periodic {
        return Ok(());
    }
    if let Some(&n) = radii.iter().max() {
        if wraps(f, n) {
            return Err(Error::Wraparound {
                period: f.period() as usize,
                required: (2 * n as u64 + f.support_diameter()) as usize,
            });
        }
    }
    Ok(())
}

/// In-place `d`-dimensional transform over row-major `(Z/MZ)^d`.
/// The inverse is normalised by `M^{-d}`.
pub fn fft_nd(values: &mut [Complex64], d: u32, m: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(m)
    } else {
        planner.plan_fft_forward(m)
    };
    let mut line = vec![Complex64::new(0.0, 0.0); m];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for axis in 0..d {
        let stride = m.pow(d - 1 - axis);
        let outer = m.pow(axis);
        for o in 0..outer {
            for inner in 0..stride {
                let base = o * stride * m + inner;
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = values[base + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, v) in line.iter().enumerate() {
                    values[base + j * stride] = *v;
                }
            }
        }
    }
    if inverse {
        let scale = 1.0 / values.len() as f64;
        values.iter_mut().for_each(|v| *v *= scale);
    }
}

/// Unnormalised forward transform `f̂(k) = Σ_x f(x) e(-x·k/M)`.
pub fn dft(f: &GridFunction) -> Vec<Complex64> {
    let mut v = f.values().to_vec();
    fft_nd(&mut v, f.d(), f.period() as usize, false);
    v
}

fn idft(template: &GridFunction, mut hat: Vec<Complex64>) -> GridFunction {
    fft_nd(&mut hat, template.d(), template.period() as usize, true);
    template.with_values(hat)
}

/// `‖f‖₂` computed on the frequency side, `(M^{-d} Σ_k |f̂(k)|²)^{1/2}`.
pub fn spectral_norm(f: &GridFunction) -> f64 {
    let hat = dft(f);
    let mut s = NeumaierSum::new();
    for v in &hat {
        s.add(v.norm_sqr());
    }
    (s.value() / hat.len() as f64).sqrt()
}

fn folded(k: i64, m: i64) -> i64 {
    let r = k.rem_euclid(m);
    r.min(m - r)
}

/// `m_N(k/M)` at every grid frequency, for each requested `N`.
///
/// The symbol depends only on the multiset of `|k_i|`, so the DP runs once
/// per sorted folded frequency.
#[derive(Debug, Clone)]
pub struct AvgSymbols {
    radii: Vec<u32>,
    table: Vec<Vec<f64>>,
}

impl AvgSymbols {
    pub fn new(d: u32, m: u64, radii: &[u32], limits: &Limits) -> Result<Self> {
        let template = GridFunction::zeros(d, m)?;
        let nmax = radii.iter().copied().max().unwrap_or(0);
        let mi = m as i64;
        let mut classes: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
        let mut class_of = Vec::with_capacity(template.values().len());
        for i in 0..template.values().len() {
            let mut key: Vec<i64> = template.coords(i).iter().map(|&k| folded(k, mi)).collect();
            key.sort_unstable();
            let next = classes.len();
            class_of.push(*classes.entry(key).or_insert(next));
        }
        let mut keys = vec![Vec::new(); classes.len()];
        for (k, &j) in &classes {
            keys[j] = k.clone();
        }
        let dp = MultiplierDp::new(d, nmax, limits)?;
        let per_class: Vec<Vec<f64>> = keys
            .par_iter()
            .map(|k| dp.eval_upto(&TorusPoint::rational(k, m)?, nmax))
            .collect::<Result<_>>()?;
        let table = radii
            .iter()
            .map(|&n| class_of.iter().map(|&c| per_class[c][n as usize]).collect())
            .collect();
        Ok(Self {
            radii: radii.to_vec(),
            table,
        })
    }

    pub fn radii(&self) -> &[u32] {
        &self.radii
    }

    /// Symbol of `M_{radii[j]}` in grid order.
    pub fn symbol(&self, j: usize) -> &[f64] {
        &self.table[j]
    }
}

fn multiply(hat: &[Complex64], symbol: &[f64]) -> Vec<Complex64> {
    hat.iter().zip(symbol).map(|(h, s)| h * s).collect()
}

/// `M_N f` for every `N` in the symbol table, sharing one forward transform.
pub fn apply_avgs_with(f: &GridFunction, symbols: &AvgSymbols) -> Vec<GridFunction> {
    let hat = dft(f);
    (0..symbols.radii.len())
        .map(|j| idft(f, multiply(&hat, symbols.symbol(j))))
        .collect()
}

pub fn apply_avgs(f: &GridFunction, radii: &[u32], semantics: Semantics) -> Result<Vec<GridFunction>> {
    guard(f, radii, semantics)?;
    let symbols = AvgSymbols::new(f.d(), f.period(), radii, &Limits::default())?;
    Ok(apply_avgs_with(f, &symbols))
}

/// `M_N f`: forward transform, multiplication by `m_N(k/M)`, inverse transform.
pub fn apply_avg(f: &GridFunction, n: u32, semantics: Semantics) -> Result<GridFunction> {
    Ok(apply_avgs(f, &[n], semantics)?.remove(0))
}

/// `M_N f` as a cyclic convolution with the normalised ball indicator.
pub fn apply_avg_direct(f: &GridFunction, n: u32, semantics: Semantics) -> Result<GridFunction> {
    guard(f, &[n], semantics)?;
    let ball = enumerate_ball(BallSpec::new(f.d(), n)?, &Limits::default())?;
    let weight = 1.0 / ball.len() as f64;
    let m = f.period() as i64;
    let mut y = vec![0i64; f.d() as usize];
    let out = (0..f.values().len())
        .map(|i| {
            let x = f.coords(i);
            let mut acc = Complex64::new(0.0, 0.0);
            for p in &ball {
                for ((yi, xi), pi) in y.iter_mut().zip(&x).zip(p) {
                    *yi = (xi - pi).rem_euclid(m);
                }
                acc += f.get(&y);
            }
            acc * weight
        })
        .collect();
    Ok(f.with_values(out))
}

fn pointwise_sup(d: u32, m: u64, outputs: &[GridFunction]) -> Result<GridFunction> {
    let len = outputs.first().map_or(0, |g| g.values().len());
    let values = (0..len)
        .map(|i| {
            let s = outputs.iter().map(|g| g.values()[i].norm()).fold(0.0, f64::max);
            Complex64::new(s, 0.0)
        })
        .collect();
    GridFunction::new(d, m, values)
}

/// `sup_{N ∈ set} |M_N f|` pointwise.
pub fn dyadic_maximal(f: &GridFunction, set: &[u32], semantics: Semantics) -> Result<GridFunction> {
    if set.is_empty() {
        return Err(Error::InvalidArgument("empty dyadic set".into()));
    }
    let outputs = apply_avgs(f, set, semantics)?;
    pointwise_sup(f.d(), f.period(), &outputs)
}

pub(crate) fn maximal_from(f: &GridFunction, outputs: &[GridFunction]) -> Result<GridFunction> {
    pointwise_sup(f.d(), f.period(), outputs)
}

/// `e^{-t Σ_i sin²(π k_i/M)}` in grid order.
pub fn semigroup_symbol(d: u32, m: u64, t: f64) -> Result<Vec<f64>> {
    let template = GridFunction::zeros(d, m)?;
    (0..template.values().len())
        .map(|i| {
            let xi = TorusPoint::rational(&template.coords(i), m)?;
            Ok(semigroup_multiplier(t, &xi))
        })
        .collect()
}

/// `P_t f` on the torus.
pub fn semigroup_apply(f: &GridFunction, t: f64) -> Result<GridFunction> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "semigroup time {t} must be finite and >= 0"
        )));
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    let symbol = semigroup_symbol(f.d(), f.period(), t)?;
    Ok(idft(f, multiply(&dft(f), &symbol)))
}

/// Radii of the square function, `{2^n : c1 √d <= 2^n <= c2 d}`.
pub fn square_function_radii(d: u32, c1: f64, c2: f64) -> Vec<u32> {
    RadiusRule::Dyadic { c1, c2 }.radii(d)
}

fn gap_symbols(f: &GridFunction, radii: &[u32]) -> Result<Vec<Vec<f64>>> {
    let avg = AvgSymbols::new(f.d(), f.period(), radii, &Limits::default())?;
    let d = f.d() as f64;
    radii
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let heat = semigroup_symbol(f.d(), f.period(), (n as f64).powi(2) / d)?;
            Ok(avg.symbol(j).iter().zip(&heat).map(|(a, h)| a - h).collect())
        })
        .collect()
}

/// `Sf(x) = (Σ_{N ∈ 𝔻} |M_N f(x) - P_{N²/d} f(x)|²)^{1/2}`.
pub fn square_function_apply(f: &GridFunction, c1: f64, c2: f64, semantics: Semantics) -> Result<GridFunction> {
    let radii = square_function_radii(f.d(), c1, c2);
    guard(f, &radii, semantics)?;
    let hat = dft(f);
    let mut acc = vec![0.0f64; hat.len()];
    for gap in gap_symbols(f, &radii)? {
        let g = idft(f, multiply(&hat, &gap));
        for (a, v) in acc.iter_mut().zip(g.values()) {
            *a += v.norm_sqr();
        }
    }
    GridFunction::new(
        f.d(),
        f.period(),
        acc.into_iter().map(|s| Complex64::new(s.sqrt(), 0.0)).collect(),
    )
}

/// `‖Sf‖₂` by Plancherel: `(M^{-d} Σ_k Σ_N |m_N - p_{N²/d}|² |f̂(k)|²)^{1/2}`.
pub fn square_function_norm_spectral(f: &GridFunction, c1: f64, c2: f64) -> Result<f64> {
    let radii = square_function_radii(f.d(), c1, c2);
    let hat = dft(f);
    let mut s = NeumaierSum::new();
    for gap in gap_symbols(f, &radii)? {
        for (h, g) in hat.iter().zip(&gap) {
            s.add(g * g * h.norm_sqr());
        }
    }
    Ok((s.value() / hat.len() as f64).sqrt())
}

/// Parses a set of radii: a comma list of positive integers, or `a..b` for
/// the powers of two in `[a, b]`. Items may be mixed.
pub fn parse_dyadic_set(spec: &str) -> Result<Vec<u32>> {
    let bad = |item: &str| Error::InvalidArgument(format!("bad dyadic set item {item:?}"));
    let mut out = Vec::new();
    for item in spec.split(',').map(str::trim) {
        if let Some((a, b)) = item.split_once("..") {
            let a: u32 = a.trim().parse().map_err(|_| bad(item))?;
            let b: u32 = b.trim().parse().map_err(|_| bad(item))?;
            if a == 0 || a > b {
                return Err(bad(item));
            }
            out.extend(
                (0..32)
                    .map(|k| 1u64 << k)
                    .filter(|&p| p >= a as u64 && p <= b as u64)
                    .map(|p| p as u32),
            );
        } else {
            let n: u32 = item.parse().map_err(|_| bad(item))?;
            if n == 0 {
                return Err(bad(item));
            }
            out.push(n);
        }
    }
    out.sort_unstable();
    out.dedup();
    if out.is_empty() {
        return Err(Error::InvalidArgument(format!("dyadic set {spec:?} is empty")));
    }
    Ok(out)
}
