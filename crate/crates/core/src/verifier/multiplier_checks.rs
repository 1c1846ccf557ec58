use std::collections::BTreeMap;

use rayon::prelude::*;

use super::report::{CellAccumulator, CellStatus, VerificationReport};
use super::sampler::Sample;
use super::{dp_slack, record_failure, sum_enclosure, Ctx};
use crate::error::Result;
use crate::krawtchouk::calibrate_uniform_bound;
use crate::lattice::BallSpec;
use crate::multiplier::{alternating_mass, lambda_with_mass, signed_mass, LowerMultiplierDp, MultiplierDp};
use crate::numeric::Interval;

pub(super) fn group_by_dim(cells: &[(u32, u32)]) -> BTreeMap<u32, Vec<u32>> {
    let mut out: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for &(d, n) in cells {
        out.entry(d).or_default().push(n);
    }
    out
}

pub(super) fn kappa(d: u32, radius: u32) -> f64 {
    radius as f64 / (d as f64).sqrt()
}

/// `κ² = n/d` enclosed.
fn kappa_sq(d: u32, radius: u32) -> Interval {
    Interval::from_u64(radius as u64 * radius as u64) / Interval::from_u64(d as u64)
}

/// Multiplier values for one dimension: samples shared by every radius are
/// evaluated once at the largest radius, near-zero samples per radius.
struct DimTable {
    shared: Vec<Sample>,
    shared_values: Vec<Result<Vec<f64>>>,
    per_radius: BTreeMap<u32, (Vec<Sample>, Vec<Result<f64>>)>,
}

fn dim_table(ctx: &Ctx, dp: &MultiplierDp, radii: &[u32]) -> DimTable {
    let d = dp.d() as usize;
    let nmax = radii.iter().copied().max().unwrap_or(0);
    let strata = &ctx.grid.strata;
    let shared = ctx.sampler.cell_samples(strata, d, 0, |s| !s.per_radius());
    let shared_values = shared.par_iter().map(|s| dp.eval_upto(&s.xi, nmax)).collect();
    let per_radius = radii
        .iter()
        .map(|&n| {
            let samples = ctx.sampler.cell_samples(strata, d, n, |s| s.per_radius());
            let values = samples.par_iter().map(|s| dp.eval(n, &s.xi)).collect();
            (n, (samples, values))
        })
        .collect();
    DimTable {
        shared,
        shared_values,
        per_radius,
    }
}

impl DimTable {
    /// `(sample, m_N(ξ))` pairs for radius `n`, or the first failure.
    fn cell(&self, n: u32) -> std::result::Result<Vec<(&Sample, f64)>, &crate::error::Error> {
        let mut out = Vec::new();
        for (s, v) in self.shared.iter().zip(&self.shared_values) {
            out.push((s, v.as_ref()?[n as usize]));
        }
        let (samples, values) = &self.per_radius[&n];
        for (s, v) in samples.iter().zip(values) {
            out.push((s, *v.as_ref()?));
        }
        Ok(out)
    }
}

/// Runs `check` over every cell of the grid with shared per-dimension DPs.
pub(super) fn sweep_dims(
    ctx: &Ctx,
    report: &mut VerificationReport,
    mut check: impl FnMut(BallSpec, &[(&Sample, f64)], &mut VerificationReport) -> Result<()>,
) -> Result<()> {
    for (d, radii) in group_by_dim(&ctx.grid.lattice_cells()) {
        let nmax = radii.iter().copied().max().unwrap_or(0);
        let dp = match MultiplierDp::new(d, nmax, &ctx.limits) {
            Ok(dp) => dp,
            Err(e) => {
                for &n in &radii {
                    record_failure(report, d as u64, n as u64, kappa(d, n), &e);
                }
                continue;
            }
        };
        let table = dim_table(ctx, &dp, &radii);
        for &n in &radii {
            match table.cell(n) {
                Ok(values) => check(BallSpec::new(d, n)?, &values, report)?,
                Err(e) => record_failure(report, d as u64, n as u64, kappa(d, n), e),
            }
        }
    }
    Ok(())
}

pub(super) fn prop0(ctx: &Ctx, report: &mut VerificationReport) -> Result<()> {
    sweep_dims(ctx, report, |spec, values, report| {
        let (d, n) = (spec.d(), spec.radius());
        let factor = Interval::pi().powi(2) * 2.0 * kappa_sq(d, n);
        let slack = dp_slack(d as u64, spec.n());
        let mut acc = CellAccumulator::new(d as u64, n as u64, spec.kappa());
        for (s, m) in values {
            let lhs = (m - 1.0).abs();
            let rhs = (factor * sum_enclosure(s.xi.norm_sq(), d as usize)).hi;
            acc.check(&s.id, lhs, rhs, slack, || {
                ctx.params(d as u64, n as u64, &s.id, Some(&s.xi))
            });
        }
        acc.finish_check(report);
        Ok(())
    })
}

pub(super) fn lemma14(ctx: &Ctx, report: &mut VerificationReport) -> Result<()> {
    sweep_dims(ctx, report, |spec, values, report| {
        let (d, n) = (spec.d(), spec.radius());
        let masses = (0..=d)
            .map(|v| signed_mass(spec, v, &ctx.limits).map(|m| m.value()))
            .collect::<Result<Vec<f64>>>()?;
        let two_k2 = kappa_sq(d, n) * 2.0;
        let slack = 2.0 * dp_slack(d as u64, spec.n());
        let mut acc = CellAccumulator::new(d as u64, n as u64, spec.kappa());
        for (s, m) in values {
            let lhs = (m - masses[s.xi.v_set().len()]).abs();
            let rhs = (two_k2 * sum_enclosure(s.xi.cos_sq_sum(), d as usize)).hi;
            acc.check(&s.id, lhs, rhs, slack, || {
                ctx.params(d as u64, n as u64, &s.id, Some(&s.xi))
            });
        }
        acc.finish_check(report);
        Ok(())
    })
}

/// `N >= 2^{9/2}` and `κ <= 1/5`.
pub(super) fn small_scale_hypotheses(spec: BallSpec) -> bool {
    spec.n() >= 512 && 25 * spec.n() <= spec.d() as u64
}

pub(super) fn c_hat(ctx: &Ctx, report: &mut VerificationReport) -> Result<f64> {
    Ok(match ctx.grid.c_hat {
        Some(c) => c,
        None => {
            let n_max = ctx.grid.n_max.unwrap_or(200);
            let cal = calibrate_uniform_bound(n_max)?;
            report.notes.push(format!(
                "c_hat = {} from the Krawtchouk scan n <= {n_max} (raw minimum {}, at (n, k, x) = {:?})",
                cal.c_hat, cal.c_raw, cal.argmin
            ));
            cal.c_hat
        }
    })
}

pub(super) fn prop4_5(ctx: &Ctx, report: &mut VerificationReport, decay_only: bool) -> Result<()> {
    let c = c_hat(ctx, report)?;
    for (d, n) in ctx.grid.lattice_cells() {
        let spec = BallSpec::new(d, n)?;
        if !small_scale_hypotheses(spec) {
            report.push_cell(super::report::skip_cell(
                d as u64,
                n as u64,
                spec.kappa(),
                CellStatus::HypothesisSkip,
                "needs N^2 >= 512 and kappa <= 1/5",
            ));
            continue;
        }
        let prepared = MultiplierDp::new(d, n, &ctx.limits).and_then(|dp| {
            let alt = if decay_only {
                0.0
            } else {
                alternating_mass(spec, &ctx.limits)?.value()
            };
            Ok((dp, alt))
        });
        let (dp, alt) = match prepared {
            Ok(p) => p,
            Err(e) => {
                record_failure(report, d as u64, n as u64, spec.kappa(), &e);
                continue;
            }
        };
        let samples = ctx.sampler.cell_samples(&ctx.grid.strata, d as usize, n, |_| true);
        let values: Vec<Result<f64>> = samples.par_iter().map(|s| dp.eval(n, &s.xi)).collect();
        let k2 = kappa_sq(d, n);
        let slack = 2.0 * dp_slack(d as u64, spec.n());
        let mut acc = CellAccumulator::new(d as u64, n as u64, spec.kappa());
        let mut failed = None;
        for (s, m) in samples.iter().zip(values) {
            let m = match m {
                Ok(m) => m,
                Err(e) => {
                    failed = Some(e);
                    break;
                }
            };
            let sin = sum_enclosure(s.xi.sin_sq_sum(), d as usize);
            let cos = sum_enclosure(s.xi.cos_sq_sum(), d as usize);
            let (lhs, rhs) = if decay_only {
                let a = (Interval::point(-c / 100.0) * k2 * sin).exp();
                let b = (Interval::point(-c / 100.0) * k2 * cos).exp();
                (m.abs(), ((a + b) * 8.0).hi)
            } else {
                let lam = lambda_with_mass(spec, &s.xi, alt);
                let sum = if lam.branch == 1 { sin } else { cos };
                let e = (Interval::point(-c / 400.0) * k2 * sum).exp().hi;
                let lin = (k2 * sum).hi;
                ((m - lam.value).abs(), (Interval::point(e.min(lin)) * 17.0).hi)
            };
            acc.check(&s.id, lhs, rhs, slack, || {
                ctx.params(d as u64, n as u64, &s.id, Some(&s.xi))
            });
        }
        match failed {
            Some(e) => record_failure(report, d as u64, n as u64, spec.kappa(), &e),
            None => acc.finish_check(report),
        }
    }
    Ok(())
}

pub(super) fn lemma9(ctx: &Ctx, report: &mut VerificationReport) -> Result<()> {
    let eps = ctx.grid.ratio("eps", &ctx.grid.eps, "1/50")?;
    let (p, q) = (*eps.numer() as u128, *eps.denom() as u128);
    let eps_f = p as f64 / q as f64;
    let eps_ok = 50 * p <= q;
    for (d, n) in ctx.grid.lattice_cells() {
        let spec = BallSpec::new(d, n)?;
        let rs: Vec<u32> = ctx.grid.r.iter().copied().filter(|&r| r >= 1 && r <= d).collect();
        let hyp = eps_ok && spec.n() >= 100 * d as u64;
        if !hyp || rs.is_empty() {
            report.push_cell(super::report::skip_cell(
                d as u64,
                n as u64,
                spec.kappa(),
                CellStatus::HypothesisSkip,
                "needs kappa >= 10, eps <= 1/50 and 1 <= r <= d",
            ));
            continue;
        }
        let nn = spec.n();
        let prepared = MultiplierDp::new(d, n, &ctx.limits).and_then(|dp| {
            let lowers = rs
                .iter()
                .map(|&r| LowerMultiplierDp::new(r, nn, &ctx.limits))
                .collect::<Result<Vec<_>>>()?;
            Ok((dp, lowers))
        });
        let (dp, lowers) = match prepared {
            Ok(p) => p,
            Err(e) => {
                record_failure(report, d as u64, n as u64, spec.kappa(), &e);
                continue;
            }
        };
        let samples = ctx.sampler.cell_samples(&ctx.grid.strata, d as usize, n, |_| true);
        // Per sample: m_N(ξ) and, per r, the supremum over admissible l.
        let evaluated: Vec<Result<(f64, Vec<f64>)>> = samples
            .par_iter()
            .map(|s| {
                let m = dp.eval(n, &s.xi)?;
                let sups = rs
                    .iter()
                    .zip(&lowers)
                    .map(|(&r, low)| {
                        let vals = low.eval_all(&s.xi.head(r as usize))?;
                        // l >= ε³κ²r  ⟺  l q³ d >= p³ n r.
                        let target = p.pow(3) * nn as u128 * r as u128;
                        let l_min = target.div_ceil(q.pow(3) * d as u128) as usize;
                        Ok(vals[l_min.min(vals.len())..].iter().fold(0.0f64, |a, v| a.max(v.abs())))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                Ok((m, sups))
            })
            .collect();
        for (i, &r) in rs.iter().enumerate() {
            let tail = (Interval::point(-eps_f * r as f64 / 10.0)).exp() * 4.0;
            let slack = dp_slack(d as u64, nn) + dp_slack(r as u64, nn);
            let mut acc = CellAccumulator::new(d as u64, n as u64, spec.kappa());
            let mut failed = None;
            for (s, ev) in samples.iter().zip(&evaluated) {
                match ev {
                    Ok((m, sups)) => {
                        let rhs = (Interval::point(sups[i]) + tail).hi;
                        let id = format!("r={r}/{}", s.id);
                        acc.check(&id, m.abs(), rhs, slack, || {
                            let mut v = ctx.params(d as u64, n as u64, &s.id, Some(&s.xi));
                            v["r"] = r.into();
                            v["eps"] = format!("{eps}").into();
                            v
                        });
                    }
                    Err(e) => {
                        failed = Some(e);
                        break;
                    }
                }
            }
            match failed {
                Some(e) => record_failure(report, d as u64, n as u64, spec.kappa(), e),
                None => acc.finish_check(report),
            }
        }
    }
    Ok(())
}
