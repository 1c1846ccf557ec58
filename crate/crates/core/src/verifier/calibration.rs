use std::collections::BTreeMap;

use rayon::prelude::*;
use serde_json::json;

use super::multiplier_checks::{kappa, sweep_dims};
use super::report::{CellAccumulator, CellStatus, Gate, VerificationReport};
use super::{record_failure, Ctx, BASELINE_FACTOR};
use crate::error::{Error, Result};
use crate::krawtchouk::{calibrate_uniform_bound, property_checks, verify_uniform_bound, PROPERTY_N_MAX};
use crate::lattice::Limits;
use crate::multiplier::{
    continuous_ball_multiplier, semigroup_multiplier, LowerMultiplierDp, MultiplierDp, TorusPoint,
};

/// Records `value` under `name` and gates it against its baseline.
fn calibrated(ctx: &Ctx, report: &mut VerificationReport, name: &str, value: f64) {
    report.calibrations.insert(name.to_string(), value);
    ctx.gate(report, name, value);
}

fn spread(report: &mut VerificationReport, name: &str, values: &[f64]) {
    report.gates.push(Gate::spread(name, values, BASELINE_FACTOR));
}

fn max_of(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    values
        .into_iter()
        .fold(None, |a, v| Some(a.map_or(v, |a: f64| a.max(v))))
}

/// Empirical constant of `|m_N(ξ)| <= C((κ‖ξ‖)^{-1} + κ^{-1/7})`, per dimension.
pub(super) fn prop2(ctx: &Ctx, report: &mut VerificationReport) -> Result<()> {
    let mut per_dim: BTreeMap<u32, f64> = BTreeMap::new();
    let mut cells = Vec::new();
    for (d, n) in ctx.grid.lattice_cells() {
        let k = kappa(d, n);
        if k < 10.0 || k > 50.0 * (d as f64).sqrt() {
            report.push_cell(super::report::skip_cell(
                d as u64,
                n as u64,
                k,
                CellStatus::HypothesisSkip,
                "needs 10 <= kappa <= 50 sqrt(d)",
            ));
        } else {
            cells.push([d, n]);
        }
    }
    let grid = super::SweepGrid {
        cells,
        radii: None,
        ..ctx.grid.clone()
    };
    let inner = Ctx {
        suite: ctx.suite,
        grid: &grid,
        limits: ctx.limits,
        sampler: ctx.sampler.clone(),
        baselines: ctx.baselines,
    };
    sweep_dims(&inner, report, |spec, values, report| {
        let k = spec.kappa();
        let tail = k.powf(-1.0 / 7.0);
        let mut acc = CellAccumulator::new(spec.d() as u64, spec.radius() as u64, k);
        for (s, m) in values {
            acc.calibrate(&s.id, m.abs(), 1.0 / (k * s.xi.norm()) + tail);
        }
        let c = acc.max_ratio();
        let e = per_dim.entry(spec.d()).or_insert(0.0);
        *e = e.max(c);
        acc.finish_calibration(report);
        Ok(())
    })?;
    for (&d, &c) in &per_dim {
        calibrated(ctx, report, &format!("C_hat[d={d}]"), c);
    }
    let values: Vec<f64> = per_dim.values().copied().collect();
    spread(report, "C_hat spread over d", &values);
    report.calibrated_constant = max_of(values);
    Ok(())
}

/// Dyadic radii `N = 2^m` with `c1 √d <= N <= c2 d`.
pub fn dyadic_window(d: u32, c1: f64, c2: f64) -> Vec<u32> {
    super::RadiusRule::Dyadic { c1, c2 }.radii(d)
}

fn square_sum_with(dp: &MultiplierDp, radii: &[u32], xi: &TorusPoint) -> Result<f64> {
    let Some(&nmax) = radii.iter().max() else {
        return Ok(0.0);
    };
    let values = dp.eval_upto(xi, nmax)?;
    let d = dp.d() as f64;
    Ok(radii
        .iter()
        .map(|&n| {
            let gap = values[n as usize] - semigroup_multiplier((n as f64).powi(2) / d, xi);
            gap * gap
        })
        .sum())
}

/// `Σ_{N ∈ 𝔻} |m_N(ξ) - p_{N²/d}(ξ)|²` over `𝔻 = {2^m : c1 √d <= N <= c2 d}`.
pub fn square_sum(d: u32, xi: &TorusPoint, c1: f64, c2: f64) -> Result<f64> {
    if xi.d() != d as usize {
        return Err(Error::InvalidArgument(format!(
            "frequency has {} coordinates, d = {d}",
            xi.d()
        )));
    }
    let radii = dyadic_window(d, c1, c2);
    let nmax = radii.iter().copied().max().unwrap_or(0);
    let dp = MultiplierDp::new(d, nmax, &Limits::default())?;
    square_sum_with(&dp, &radii, xi)
}

/// `Σ_m min(t_m, 1/t_m) + d^{1/7} Σ_m 2^{-2m/7}` with `t_m = 4^m ‖ξ‖²/d`.
fn plancherel_majorant(d: u32, radii: &[u32], xi: &TorusPoint) -> f64 {
    let d = d as f64;
    let norm_sq = xi.norm_sq();
    radii
        .iter()
        .map(|&n| {
            let n = n as f64;
            let t = n * n * norm_sq / d;
            let near = if t == 0.0 { 0.0 } else { t.min(1.0 / t) };
            near + d.powf(1.0 / 7.0) * n.powf(-2.0 / 7.0)
        })
        .sum()
}

pub(super) fn square_sum_suite(ctx: &Ctx, report: &mut VerificationReport) -> Result<()> {
    let c1 = ctx.grid.c1.unwrap_or(1.0);
    let c2 = ctx.grid.c2.unwrap_or(1.0);
    let mut maxima = Vec::new();
    let mut ratios = Vec::new();
    for d in ctx.grid.dimensions() {
        let radii = dyadic_window(d, c1, c2);
        let nmax = radii.iter().copied().max().unwrap_or(0);
        let kappa_top = nmax as f64 / (d as f64).sqrt();
        let dp = match MultiplierDp::new(d, nmax, &ctx.limits) {
            Ok(dp) => dp,
            Err(e) => {
                record_failure(report, d as u64, nmax as u64, kappa_top, &e);
                continue;
            }
        };
        let samples = ctx.sampler.cell_samples(&ctx.grid.strata, d as usize, nmax, |_| true);
        let sums: Vec<Result<f64>> = samples
            .par_iter()
            .map(|s| square_sum_with(&dp, &radii, &s.xi))
            .collect();
        let mut acc = CellAccumulator::new(d as u64, nmax as u64, kappa_top);
        let mut largest: f64 = 0.0;
        let mut failed = None;
        for (s, v) in samples.iter().zip(sums) {
            match v {
                Ok(v) => {
                    largest = largest.max(v);
                    acc.calibrate(&s.id, v, plancherel_majorant(d, &radii, &s.xi));
                }
                Err(e) => {
                    failed = Some(e);
                    break;
                }
            }
        }
        if let Some(e) = failed {
            record_failure(report, d as u64, nmax as u64, kappa_top, &e);
            continue;
        }
        let ratio = acc.max_ratio();
        acc.finish_calibration(report);
        calibrated(ctx, report, &format!("max_square_sum[d={d}]"), largest);
        calibrated(ctx, report, &format!("majorant_ratio[d={d}]"), ratio);
        maxima.push(largest);
        ratios.push(ratio);
    }
    spread(report, "max_square_sum spread over d", &maxima);
    report.calibrated_constant = max_of(ratios);
    Ok(())
}

/// Log-spaced points in `[lo, hi]`, endpoints included.
fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let count = count.max(2);
    (0..count)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Lower-dimensional multipliers against
/// `κ^{-1/3+2δ/3} + r κ^{-(1+δ)/3} + (κ‖η‖)^{-1}` with `κ = κ(r, R)`.
fn lemma20_part(ctx: &Ctx, report: &mut VerificationReport) -> Vec<f64> {
    let mut out = Vec::new();
    for &r in &ctx.grid.r {
        for &radius in &ctx.grid.real_radii {
            let k = radius / (r as f64).sqrt();
            let n_tag = radius.round() as u64;
            let deltas: Vec<f64> = ctx
                .grid
                .delta
                .iter()
                .copied()
                .filter(|&delta| {
                    let ok = delta > 0.0 && delta < 0.5 && r >= 1 && radius >= 1.0 && (r as f64) <= radius.powf(delta);
                    if !ok {
                        report.push_cell(super::report::skip_cell(
                            r as u64,
                            n_tag,
                            k,
                            CellStatus::HypothesisSkip,
                            &format!("lemma20 R={radius},delta={delta}: needs 0 < delta < 1/2 and 1 <= r <= R^delta"),
                        ));
                    }
                    ok
                })
                .collect();
            if deltas.is_empty() {
                continue;
            }
            let l = (radius * radius).floor() as u64;
            let dp = match LowerMultiplierDp::new(r, l, &ctx.limits) {
                Ok(dp) => dp,
                Err(e) => {
                    record_failure(report, r as u64, n_tag, k, &e);
                    continue;
                }
            };
            let samples: Vec<_> = ctx
                .sampler
                .cell_samples(&ctx.grid.strata, r as usize, n_tag as u32, |_| true)
                .into_iter()
                .filter(|s| !s.xi.is_zero())
                .collect();
            let values: Vec<Result<f64>> = samples
                .par_iter()
                .map(|s| dp.eval_all(&s.xi).map(|v| v[l as usize]))
                .collect();
            if let Some(Err(e)) = values.iter().find(|v| v.is_err()) {
                record_failure(report, r as u64, n_tag, k, e);
                continue;
            }
            for delta in deltas {
                let bound_base = k.powf(-1.0 / 3.0 + 2.0 * delta / 3.0) + r as f64 * k.powf(-(1.0 + delta) / 3.0);
                let mut acc = CellAccumulator::new(r as u64, n_tag, k);
                for (s, m) in samples.iter().zip(&values) {
                    let m = *m.as_ref().expect("checked above");
                    acc.calibrate(&s.id, m.abs(), bound_base + 1.0 / (k * s.xi.norm()));
                }
                let c = acc.max_ratio();
                acc.finish_calibration(report);
                calibrated(ctx, report, &format!("lemma20[r={r},R={radius},delta={delta}]"), c);
                out.push(c);
            }
        }
    }
    out
}

/// Full multipliers against `κ^{-1/3+2δ/3} + (κ‖η‖)^{-1}`, `η = ξ_{1..r}`,
/// with `r = max(1, floor(ε^{3δ/2} κ^δ))`.
fn lemma13_part(ctx: &Ctx, report: &mut VerificationReport) -> Result<()> {
    let eps = ctx.grid.ratio("eps", &ctx.grid.eps, "1/50")?;
    let eps_f = *eps.numer() as f64 / *eps.denom() as f64;
    if eps_f > 1.0 / 50.0 {
        return Err(Error::Config(format!("eps = {eps} exceeds 1/50")));
    }
    let deltas: Vec<f64> = ctx.grid.delta.iter().copied().filter(|&x| x > 0.0 && x < 0.5).collect();
    let mut results: Vec<(u32, u32, f64, f64)> = Vec::new();
    sweep_dims(ctx, report, |spec, values, report| {
        let (d, n, k) = (spec.d(), spec.radius(), spec.kappa());
        for &delta in &deltas {
            let r = ((eps_f.powf(1.5 * delta) * k.powf(delta)).floor() as u32).clamp(1, d);
            let mut acc = CellAccumulator::new(d as u64, n as u64, k);
            for (s, m) in values {
                let eta = s.xi.head(r as usize);
                let id = format!("delta={delta},r={r}/{}", s.id);
                acc.calibrate(
                    &id,
                    m.abs(),
                    k.powf(-1.0 / 3.0 + 2.0 * delta / 3.0) + 1.0 / (k * eta.norm()),
                );
            }
            results.push((d, n, delta, acc.max_ratio()));
            acc.finish_calibration(report);
        }
        Ok(())
    })?;
    for (d, n, delta, c) in results {
        calibrated(ctx, report, &format!("lemma13[d={d},N={n},delta={delta}]"), c);
    }
    Ok(())
}

/// The `q = 2` pair for the continuous ball of radius `R = √d`: the largest
/// `|m(ξ)| t` and `|m(ξ) - 1| / t` with `t = R d^{-1/2} |ξ|`.
pub fn lemma19_constants(d: u32, rhos: &[f64]) -> Result<(f64, f64)> {
    let radius = (d as f64).sqrt();
    let mut decay: f64 = 0.0;
    let mut small: f64 = 0.0;
    for &rho in rhos {
        let m = continuous_ball_multiplier(d, radius, rho)?;
        let t = radius / (d as f64).sqrt() * rho;
        decay = decay.max(m.abs() * t);
        small = small.max((m - 1.0).abs() / t);
    }
    Ok((decay, small))
}

fn lemma19_part(ctx: &Ctx, report: &mut VerificationReport) {
    let rhos = log_grid(1e-3, 1e3, ctx.grid.samples.unwrap_or(49));
    let dims = ctx.grid.dimensions();
    let results: Vec<Result<(f64, f64)>> = dims.par_iter().map(|&d| lemma19_constants(d, &rhos)).collect();
    let (mut decays, mut smalls) = (Vec::new(), Vec::new());
    for (&d, res) in dims.iter().zip(results) {
        match res {
            Ok((a, b)) => {
                calibrated(ctx, report, &format!("lemma19-decay[d={d}]"), a);
                calibrated(ctx, report, &format!("lemma19-small[d={d}]"), b);
                decays.push(a);
                smalls.push(b);
                let mut acc = CellAccumulator::new(d as u64, 0, 1.0);
                acc.samples = rhos.len() as u64;
                acc.worst = Some(("lemma19".into(), a, 1.0, -a));
                acc.finish_calibration(report);
            }
            Err(e) => record_failure(report, d as u64, 0, 1.0, &e),
        }
    }
    spread(report, "lemma19-decay spread over d", &decays);
    spread(report, "lemma19-small spread over d", &smalls);
}

pub(super) fn lemma20(ctx: &Ctx, report: &mut VerificationReport) -> Result<()> {
    let main = lemma20_part(ctx, report);
    lemma13_part(ctx, report)?;
    lemma19_part(ctx, report);
    report.calibrated_constant = max_of(main);
    Ok(())
}

/// Exact Krawtchouk properties for small `n`, then the uniform bound with
/// its calibrated constant re-verified cell by cell.
pub(super) fn kraw(ctx: &Ctx, report: &mut VerificationReport) -> Result<()> {
    let n_max = ctx.grid.n_max.unwrap_or(200);
    for n in 1..=n_max.min(PROPERTY_N_MAX) {
        let props = property_checks(n)?;
        let mut acc = CellAccumulator::new(n, 0, 0.0);
        let checks = [
            ("symmetry", props.symmetry),
            ("reflection", props.reflection),
            ("orthogonality", props.orthogonality.unwrap_or(true)),
            ("sign-changes", props.sign_changes),
            ("root-interval", props.root_interval),
            ("bounded-by-one", props.bounded_by_one),
        ];
        for (name, ok) in checks {
            acc.record(
                name,
                0.0,
                0.0,
                ok,
                || json!({"suite": "kraw", "n": n, "property": name, "failures": props.failures}),
            );
        }
        acc.finish_check(report);
    }
    if n_max < 2 {
        return Ok(());
    }
    let cal = match ctx.grid.c_hat {
        Some(c) => {
            report.notes.push(format!("c_hat = {c} taken from the grid"));
            c
        }
        None => {
            let cal = calibrate_uniform_bound(n_max)?;
            report.notes.push(format!(
                "raw minimum {} at (n, k, x) = {:?} over {} cells, {} exact zeros skipped",
                cal.c_raw, cal.argmin, cal.cells, cal.zeros_skipped
            ));
            cal.c_hat
        }
    };
    let check = verify_uniform_bound(n_max, cal);
    let mut acc = CellAccumulator::new(n_max, 0, 0.0);
    acc.samples = check.cells.saturating_sub(1);
    for &(n, k, x) in &check.violations {
        acc.record(
            &format!("n={n},k={k},x={x}"),
            1.0,
            0.0,
            false,
            || json!({"suite": "kraw", "n": n, "k": k, "x": x, "c_hat": cal}),
        );
    }
    acc.record("uniform-bound", 0.0, 0.0, check.violations.is_empty(), || json!({}));
    acc.finish_check(report);
    calibrated(ctx, report, "c_hat", cal);
    report.calibrated_constant = Some(cal);
    Ok(())
}
