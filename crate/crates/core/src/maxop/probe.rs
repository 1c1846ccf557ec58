use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::grid::{GridFunction, MAX_DIM};
use super::ops::{
    apply_avgs_with, maximal_from, square_function_apply, square_function_norm_spectral, square_function_radii, wraps,
    AvgSymbols, Semantics,
};
use crate::error::{Error, Result};
use crate::lattice::{for_each_in_box, Limits};
use crate::verifier::{Baselines, Gate, BASELINE_FACTOR};

/// Largest dimension the ellipsoid probe enumerates.
pub const ELLIPSOID_MAX_DIM: u32 = 4;

/// One probed input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub id: String,
    /// `‖Tf‖₂ / ‖f‖₂` for the probed operator `T`.
    pub ratio: f64,
    /// `‖A_j f‖₂ / ‖f‖₂` for each single operator of the family.
    pub single_ratios: Vec<f64>,
    /// False when some average of this input wraps around the torus.
    pub faithful: bool,
}

/// Lower bounds for an operator norm on `ℓ²`, from structured and random
/// inputs on `(Z/MZ)^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub probe: String,
    pub d: u32,
    #[serde(rename = "M")]
    pub period: u64,
    pub set: Vec<f64>,
    pub trials: u32,
    pub seed: u64,
    pub best_ratio: f64,
    pub witness: String,
    /// Some input was evaluated with wrap-around.
    pub periodic: bool,
    pub witnesses: Vec<Witness>,
    pub notes: Vec<String>,
}

impl ProbeReport {
    pub fn witness_ratio(&self, id: &str) -> Option<f64> {
        self.witnesses.iter().find(|w| w.id == id).map(|w| w.ratio)
    }
}

fn trial_rng(seed: u64, probe: &str, d: u32, m: u64, idx: u32) -> ChaCha8Rng {
    let mut s = [0u8; 32];
    s.copy_from_slice(&Sha256::digest(format!("{seed}:{probe}:{d}:{m}:{idx}").as_bytes()));
    ChaCha8Rng::from_seed(s)
}

fn centered_box(d: u32, m: u64, side: u64, f: impl Fn(&[i64]) -> f64) -> Result<GridFunction> {
    let lo = -(side as i64 / 2);
    let hi = lo + side as i64 - 1;
    GridFunction::from_real(d, m, |x| {
        if x.iter().all(|&v| (lo..=hi).contains(&v)) {
            f(x)
        } else {
            0.0
        }
    })
}

/// Structured inputs (delta, ball indicators of each radius in `balls`,
/// alternating signs) followed by `trials` seeded random ones. Random and
/// alternating inputs live on the widest centred box whose averages up to
/// `reach` do not wrap.
fn probe_inputs(
    probe: &str,
    d: u32,
    m: u64,
    reach: u64,
    balls: &[u64],
    trials: u32,
    seed: u64,
) -> Result<Vec<(String, GridFunction)>> {
    let side = if m > 2 * reach { m - 2 * reach } else { m };
    let mut out = vec![("delta".to_string(), GridFunction::delta(d, m)?)];
    for &r in balls {
        let r2 = (r * r) as i64;
        let f = GridFunction::from_real(d, m, |x| {
            if x.iter().map(|v| v * v).sum::<i64>() <= r2 {
                1.0
            } else {
                0.0
            }
        })?;
        out.push((format!("ball-{r}"), f));
    }
    let alt = centered_box(d, m, side, |x| if x.iter().sum::<i64>() % 2 == 0 { 1.0 } else { -1.0 })?;
    out.push(("alternating".into(), alt));
    let randoms: Vec<Result<(String, GridFunction)>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, probe, d, m, i);
            let width = 1 + rng.random_range(0..side);
            let values: Vec<f64> = (0..width.pow(d)).map(|_| rng.sample(StandardNormal)).collect();
            let positive = i % 2 == 0;
            let lo = -(width as i64 / 2);
            let f = GridFunction::from_real(d, m, |x| {
                if !x.iter().all(|&v| (lo..lo + width as i64).contains(&v)) {
                    return 0.0;
                }
                let idx = x.iter().fold(0u64, |acc, &v| acc * width + (v - lo) as u64);
                let v: f64 = values[idx as usize];
                if positive {
                    v.abs()
                } else {
                    v
                }
            })?;
            Ok((format!("random-{i}"), f))
        })
        .collect();
    for r in randoms {
        out.push(r?);
    }
    Ok(out)
}

/// Evaluates `op` on every input and keeps the largest ratio, earliest
/// input first on ties.
#[allow(clippy::too_many_arguments)]
fn run_probe(
    probe: &str,
    d: u32,
    m: u64,
    set: Vec<f64>,
    trials: u32,
    seed: u64,
    inputs: Vec<(String, GridFunction)>,
    op: impl Fn(&GridFunction) -> Result<(f64, Vec<f64>, bool)> + Sync,
) -> Result<ProbeReport> {
    let witnesses: Vec<Witness> = inputs
        .par_iter()
        .map(|(id, f)| {
            let norm = f.norm();
            let (out, singles, faithful) = op(f)?;
            Ok(Witness {
                id: id.clone(),
                ratio: out / norm,
                single_ratios: singles.iter().map(|s| s / norm).collect(),
                faithful,
            })
        })
        .collect::<Result<_>>()?;
    let best = witnesses
        .iter()
        .enumerate()
        .fold(0, |b, (i, w)| if w.ratio > witnesses[b].ratio { i } else { b });
    Ok(ProbeReport {
        probe: probe.into(),
        d,
        period: m,
        set,
        trials,
        seed,
        best_ratio: witnesses[best].ratio,
        witness: witnesses[best].id.clone(),
        periodic: witnesses.iter().any(|w| !w.faithful),
        witnesses,
        notes: Vec::new(),
    })
}

fn check_dim(d: u32, max: u32) -> Result<()> {
    if d == 0 || d > max {
        return Err(Error::InvalidArgument(format!("probe dimension {d} outside 1..={max}")));
    }
    Ok(())
}

/// `max ‖sup_{N ∈ set} |M_N f|‖₂ / ‖f‖₂` over structured and seeded random
/// inputs: a lower bound for the dyadic maximal operator's norm.
pub fn operator_norm_probe(d: u32, m: u64, set: &[u32], trials: u32, seed: u64) -> Result<ProbeReport> {
    check_dim(d, MAX_DIM)?;
    if set.is_empty() {
        return Err(Error::InvalidArgument("empty dyadic set".into()));
    }
    let reach = *set.iter().max().expect("nonempty") as u64;
    let balls: Vec<u64> = set.iter().map(|&n| n as u64).collect();
    let inputs = probe_inputs("norm", d, m, reach, &balls, trials, seed)?;
    let symbols = AvgSymbols::new(d, m, set, &Limits::default())?;
    run_probe(
        "norm",
        d,
        m,
        set.iter().map(|&n| n as f64).collect(),
        trials,
        seed,
        inputs,
        |f| {
            let outs = apply_avgs_with(f, &symbols);
            let singles = outs.iter().map(GridFunction::recompute_norm).collect();
            let sup = maximal_from(f, &outs)?;
            Ok((sup.recompute_norm(), singles, !set.iter().any(|&n| wraps(f, n))))
        },
    )
}

/// `max ‖Sf‖₂ / ‖f‖₂` for the square function over `{2^n : c1 √d <= 2^n <= c2 d}`.
/// Each witness also records the Plancherel-side value as its single ratio.
pub fn square_function_probe(d: u32, m: u64, c1: f64, c2: f64, trials: u32, seed: u64) -> Result<ProbeReport> {
    check_dim(d, MAX_DIM)?;
    let radii = square_function_radii(d, c1, c2);
    let reach = radii.iter().copied().max().unwrap_or(0) as u64;
    let inputs = probe_inputs("square", d, m, reach, &[reach.max(1)], trials, seed)?;
    let mut report = run_probe(
        "square",
        d,
        m,
        radii.iter().map(|&n| n as f64).collect(),
        trials,
        seed,
        inputs,
        |f| {
            let s = square_function_apply(f, c1, c2, Semantics::Periodic)?;
            let spectral = square_function_norm_spectral(f, c1, c2)?;
            Ok((s.recompute_norm(), vec![spectral], !radii.iter().any(|&n| wraps(f, n))))
        },
    )?;
    if radii.is_empty() {
        report.notes.push(format!("no dyadic radius in [{c1} sqrt(d), {c2} d]"));
    }
    Ok(report)
}

/// `E(d)_t = {x ∈ Z^d : Σ λ_k² x_k² <= t²}` with `1 <= λ_1 < … < λ_d < √2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidSpec {
    lambdas: Vec<f64>,
    t: f64,
}

impl EllipsoidSpec {
    pub fn new(lambdas: Vec<f64>, t: f64) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::InvalidArgument("ellipsoid needs at least one axis".into()));
        }
        let ok_range = lambdas.iter().all(|&l| (1.0..std::f64::consts::SQRT_2).contains(&l));
        let increasing = lambdas.windows(2).all(|w| w[0] < w[1]);
        if !ok_range || !increasing {
            return Err(Error::InvalidArgument(format!(
                "ellipsoid axes must satisfy 1 <= l_1 < ... < l_d < sqrt 2, got {lambdas:?}"
            )));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!("ellipsoid radius {t} must be positive")));
        }
        Ok(Self { lambdas, t })
    }

    /// `λ_k = 1 + (√2 - 1)(k - 1)/d`.
    pub fn evenly_spaced(d: u32, t: f64) -> Result<Self> {
        let step = (std::f64::consts::SQRT_2 - 1.0) / d.max(1) as f64;
        Self::new((0..d).map(|k| 1.0 + step * k as f64).collect(), t)
    }

    pub fn d(&self) -> u32 {
        self.lambdas.len() as u32
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Largest `|x_k|` on `E(d)_t`, over all axes.
    pub fn reach(&self) -> u64 {
        (self.t / self.lambdas[0]).floor() as u64
    }

    /// Lattice points of `E(d)_t`, lexicographically.
    pub fn points(&self, limits: &Limits) -> Result<Vec<Vec<i64>>> {
        check_dim(self.d(), ELLIPSOID_MAX_DIM)?;
        let hi: Vec<i64> = self.lambdas.iter().map(|l| (self.t / l).floor() as i64).collect();
        let lo: Vec<i64> = hi.iter().map(|h| -h).collect();
        let size = hi.iter().map(|&h| 2 * h as u128 + 1).product::<u128>();
        if size > limits.enumeration_cap as u128 {
            return Err(Error::EnumerationCap {
                op: "ellipsoid",
                size,
                cap: limits.enumeration_cap,
            });
        }
        let t2 = self.t * self.t;
        let mut out = Vec::new();
        for_each_in_box(&lo, &hi, |x| {
            let q: f64 = x.iter().zip(&self.lambdas).map(|(&v, l)| (l * v as f64).powi(2)).sum();
            if q <= t2 {
                out.push(x.to_vec());
            }
        });
        Ok(out)
    }
}

/// Averages of `f` over `E(d)_t` by direct cyclic enumeration.
pub fn apply_ellipsoid(f: &GridFunction, spec: &EllipsoidSpec) -> Result<GridFunction> {
    if f.d() != spec.d() {
        return Err(Error::InvalidArgument(format!(
            "grid dimension {} does not match the ellipsoid's {}",
            f.d(),
            spec.d()
        )));
    }
    let pts = spec.points(&Limits::default())?;
    let w = 1.0 / pts.len() as f64;
    let m = f.period() as i64;
    let out = (0..f.values().len())
        .map(|i| {
            let x = f.coords(i);
            let mut y = vec![0i64; x.len()];
            let mut acc = Complex64::new(0.0, 0.0);
            for p in &pts {
                for ((yi, xi), pi) in y.iter_mut().zip(&x).zip(p) {
                    *yi = (xi - pi).rem_euclid(m);
                }
                acc += f.get(&y);
            }
            acc * w
        })
        .collect();
    Ok(f.with_values(out))
}

fn ellipsoid_family(spec: &EllipsoidSpec, t_set: &[f64]) -> Result<Vec<EllipsoidSpec>> {
    t_set
        .iter()
        .map(|&t| EllipsoidSpec::new(spec.lambdas.clone(), t))
        .collect()
}

/// Single-input ellipsoid report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidReport {
    pub ratio: f64,
    pub single_ratios: Vec<f64>,
    pub points: Vec<usize>,
}

/// `‖sup_{t ∈ t_set} |A_t f|‖₂ / ‖f‖₂` for the ellipsoid averages `A_t`.
pub fn ellipsoid_probe(spec: &EllipsoidSpec, t_set: &[f64], f: &GridFunction) -> Result<EllipsoidReport> {
    let family = ellipsoid_family(spec, t_set)?;
    let norm = f.norm();
    let outs = family
        .iter()
        .map(|e| apply_ellipsoid(f, e))
        .collect::<Result<Vec<_>>>()?;
    let sup = maximal_from(f, &outs)?;
    Ok(EllipsoidReport {
        ratio: sup.recompute_norm() / norm,
        single_ratios: outs.iter().map(|g| g.recompute_norm() / norm).collect(),
        points: family
            .iter()
            .map(|e| e.points(&Limits::default()).map(|p| p.len()))
            .collect::<Result<_>>()?,
    })
}

/// The operator-norm probe for the ellipsoid maximal function over `t_set`.
/// Qualitative only: growth in `d` is not resolvable at `d <= 4`.
pub fn ellipsoid_norm_probe(
    spec: &EllipsoidSpec,
    m: u64,
    t_set: &[f64],
    trials: u32,
    seed: u64,
) -> Result<ProbeReport> {
    let d = spec.d();
    check_dim(d, ELLIPSOID_MAX_DIM)?;
    let family = ellipsoid_family(spec, t_set)?;
    let reach = family.iter().map(EllipsoidSpec::reach).max().unwrap_or(0);
    let balls: Vec<u64> = family.iter().map(EllipsoidSpec::reach).collect();
    let inputs = probe_inputs("ellipsoid", d, m, reach, &balls, trials, seed)?;
    let mut report = run_probe("ellipsoid", d, m, t_set.to_vec(), trials, seed, inputs, |f| {
        let outs = family
            .iter()
            .map(|e| apply_ellipsoid(f, e))
            .collect::<Result<Vec<_>>>()?;
        let singles = outs.iter().map(GridFunction::recompute_norm).collect();
        let sup = maximal_from(f, &outs)?;
        Ok((
            sup.recompute_norm(),
            singles,
            f.period() > 2 * reach + f.support_diameter(),
        ))
    })?;
    report
        .notes
        .push("qualitative: the (log d)^(1/p) growth is not resolvable at d <= 4".into());
    Ok(report)
}

/// Dimensions, period, radii, trials and seed of the dimension-stability
/// regression for [`operator_norm_probe`].
pub const REGRESSION_DIMS: [u32; 3] = [1, 2, 3];
pub const REGRESSION_PERIOD: u64 = 32;
pub const REGRESSION_SET: [u32; 4] = [1, 2, 4, 8];
pub const REGRESSION_TRIALS: u32 = 200;
pub const REGRESSION_SEED: u64 = 20240611;

/// Best probe ratio per dimension against the `[maxop]` baselines, plus the
/// spread across dimensions.
pub fn probe_regression(baselines: &Baselines) -> Result<(Vec<ProbeReport>, Vec<Gate>)> {
    let mut reports = Vec::new();
    let mut gates = Vec::new();
    for d in REGRESSION_DIMS {
        let r = operator_norm_probe(
            d,
            REGRESSION_PERIOD,
            &REGRESSION_SET,
            REGRESSION_TRIALS,
            REGRESSION_SEED,
        )?;
        let name = format!("best_ratio[d={d}]");
        gates.push(Gate::against(
            &name,
            r.best_ratio,
            baselines.section("maxop", &name),
            BASELINE_FACTOR,
        ));
        reports.push(r);
    }
    let ratios: Vec<f64> = reports.iter().map(|r| r.best_ratio).collect();
    gates.push(Gate::spread("best_ratio spread over d", &ratios, BASELINE_FACTOR));
    Ok((reports, gates))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_witness_closed_form() {
        let r = operator_norm_probe(1, 32, &[1], 0, 1).unwrap();
        let delta = r.witness_ratio("delta").unwrap();
        assert!((delta - 3f64.powf(-0.5)).abs() < 1e-12);
        assert!(r.best_ratio >= delta);
        assert!(!r.periodic);
        // The dyadic maximal function of δ₀ in d = 2 over {1}: 5 points of mass 1/5.
        let r = operator_norm_probe(2, 16, &[1], 0, 1).unwrap();
        assert!((r.witness_ratio("delta").unwrap() - 5f64.powf(-0.5)).abs() < 1e-12);
    }

    #[test]
    fn sup_dominates_each_average() {
        let r = operator_norm_probe(2, 16, &[1, 2, 4], 6, 3).unwrap();
        assert_eq!(r.witnesses.len(), 1 + 3 + 1 + 6);
        for w in &r.witnesses {
            for s in &w.single_ratios {
                assert!(w.ratio >= s - 1e-12, "{}", w.id);
            }
        }
        let again = operator_norm_probe(2, 16, &[1, 2, 4], 6, 3).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn square_probe_runs_and_paths_agree() {
        let r = square_function_probe(1, 16, 1.0, 1.0, 4, 2).unwrap();
        assert!(r.best_ratio.is_finite());
        for w in &r.witnesses {
            assert!((w.ratio - w.single_ratios[0]).abs() <= 1e-9 * w.ratio.max(1e-300));
        }
    }

    #[test]
    fn ellipsoid_examples() {
        assert!(EllipsoidSpec::new(vec![1.1, 1.1], 2.0).is_err());
        assert!(EllipsoidSpec::new(vec![0.9], 2.0).is_err());
        assert!(EllipsoidSpec::new(vec![1.5], 2.0).is_err());
        let e = EllipsoidSpec::new(vec![1.2], 2.0).unwrap();
        assert_eq!(e.points(&Limits::default()).unwrap(), vec![vec![-1], vec![0], vec![1]]);
        let mut f = GridFunction::delta(1, 16).unwrap();
        f = f.with_values(
            f.values()
                .iter()
                .enumerate()
                .map(|(i, _)| Complex64::new(i as f64, 0.0))
                .collect(),
        );
        let g = apply_ellipsoid(&f, &e).unwrap();
        assert!((g.get(&[5]).re - 5.0).abs() < 1e-12);
        let five = EllipsoidSpec::evenly_spaced(5, 2.0).unwrap();
        assert!(matches!(
            ellipsoid_norm_probe(&five, 8, &[2.0], 0, 1),
            Err(Error::InvalidArgument(_))
        ));
        let two = EllipsoidSpec::evenly_spaced(2, 3.0).unwrap();
        let r = ellipsoid_norm_probe(&two, 16, &[1.0, 2.0, 3.0], 2, 1).unwrap();
        assert!(r.best_ratio > 0.0 && r.best_ratio.is_finite());
        let single = ellipsoid_probe(&two, &[1.0, 2.0], &GridFunction::delta(2, 16).unwrap()).unwrap();
        assert_eq!(single.points[0], 3);
    }
}
