use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde_json::json;

use super::report::{CellAccumulator, CellRecord, CellStatus, VerificationReport};
use super::{record_failure, Ctx, Suite};
use crate::error::Result;
use crate::lattice::{
    ball_count_table, binomial_sanity, concentration_masses, lemma4_from_count, shifted_ball_count, symdiff_count,
    unit_ball_volume, BallSpec, ConcentrationParams, ConcentrationReport,
};
use crate::numeric::{ln_biguint, Interval};

pub(super) fn lemma4(ctx: &Ctx, report: &mut VerificationReport) -> Result<()> {
    let cells = ctx.grid.lattice_cells();
    let d_max = cells.iter().map(|c| c.0).max().unwrap_or(0);
    let r_max = cells.iter().map(|c| c.1).max().unwrap_or(0);
    let table = match ball_count_table(d_max, r_max, &ctx.limits) {
        Ok(t) => t,
        Err(e) => {
            for (d, n) in cells {
                record_failure(report, d as u64, n as u64, n as f64 / (d as f64).sqrt(), &e);
            }
            return Ok(());
        }
    };
    for (d, n) in cells {
        let spec = BallSpec::new(d, n)?;
        let count = table[d as usize][n as usize].clone();
        let (d64, n64) = (d as u64, n as u64);
        let mut acc = CellAccumulator::new(d64, n64, spec.kappa());
        let ln_count = ln_biguint(&count);
        let rep = lemma4_from_count(spec, count.clone());
        let params = || ctx.params(d64, n64, "size", None);
        acc.record(
            "lower",
            ln_biguint(&rep.lower).mid(),
            ln_count.mid(),
            rep.lower_ok,
            params,
        );
        acc.record(
            "upper",
            ln_count.mid(),
            rep.ln_upper.0,
            rep.upper_ok == Some(true),
            params,
        );
        if let Some(ok) = binomial_sanity(spec, &count) {
            acc.record("binomial", 0.0, 0.0, ok, || ctx.params(d64, n64, "binomial", None));
        }
        // Monotone in both the dimension and the radius.
        let mono = (d < 2 || table[d as usize - 1][n as usize] <= count)
            && (n < 2 || table[d as usize][n as usize - 1] <= count);
        acc.record("monotone", 0.0, 0.0, mono, || ctx.params(d64, n64, "monotone", None));
        acc.finish_check(report);
    }
    Ok(())
}

fn concentration_params(ctx: &Ctx) -> Result<Vec<ConcentrationParams>> {
    let g = ctx.grid;
    Ok(match ctx.suite {
        Suite::Lemma5 => vec![ConcentrationParams::LargeCoordinates {
            eps1: g.ratio("eps1", &g.eps1, "1/10")?,
            eps2: g.ratio("eps2", &g.eps2, "1/10")?,
        }],
        Suite::Lemma8 => {
            let eps = g.ratio("eps", &g.eps, "1/50")?;
            g.r.iter().map(|&r| ConcentrationParams::HeadMass { eps, r }).collect()
        }
        _ => {
            g.k.iter()
                .flat_map(|&k| {
                    [
                        ConcentrationParams::UnitCoordinates { k },
                        ConcentrationParams::LargeCoordinateMass { k },
                    ]
                })
                .collect()
        }
    })
}

fn param_id(p: &ConcentrationParams) -> String {
    match p {
        ConcentrationParams::LargeCoordinates { eps1, eps2 } => format!("eps1={eps1},eps2={eps2}"),
        ConcentrationParams::HeadMass { eps, r } => format!("eps={eps},r={r}"),
        ConcentrationParams::UnitCoordinates { k } => format!("unit,k={k}"),
        ConcentrationParams::LargeCoordinateMass { k } => format!("mass,k={k}"),
    }
}

/// Exact mass ratios against their bounds, compared in logarithms.
pub(super) fn concentration(ctx: &Ctx, report: &mut VerificationReport) -> Result<()> {
    let params = concentration_params(ctx)?;
    let jobs: Vec<((u32, u32), ConcentrationParams)> = ctx
        .grid
        .lattice_cells()
        .into_iter()
        .flat_map(|c| params.iter().map(move |p| (c, p.clone())))
        .filter(|((d, _), p)| !matches!(p, ConcentrationParams::HeadMass { r, .. } if *r > *d))
        .collect();
    let results: Vec<Result<ConcentrationReport>> = jobs
        .par_iter()
        .map(|((d, n), p)| concentration_masses(BallSpec::new(*d, *n)?, p, &ctx.limits))
        .collect();
    for (((d, n), p), res) in jobs.iter().zip(results) {
        let (d64, n64) = (*d as u64, *n as u64);
        let kappa = *n as f64 / (*d as f64).sqrt();
        let rep = match res {
            Ok(r) => r,
            Err(e) => {
                record_failure(report, d64, n64, kappa, &e);
                continue;
            }
        };
        let id = param_id(p);
        let lhs = rep.ln_ratio.map(|r| r.1).unwrap_or(f64::NEG_INFINITY);
        let rhs = rep.ln_bound.0;
        if !rep.hypotheses_hold {
            report.push_cell(CellRecord {
                d: d64,
                radius: n64,
                kappa,
                xi_id: id,
                lhs,
                rhs,
                margin: rhs - lhs,
                status: CellStatus::HypothesisSkip,
                samples: 0,
            });
            continue;
        }
        let mut acc = CellAccumulator::new(d64, n64, kappa);
        acc.record(&id, lhs, rhs, rep.within_bound == Some(true), || {
            let mut v = ctx.params(d64, n64, &id, None);
            v["set"] = serde_json::to_value(p).unwrap_or_default();
            v["set_size"] = rep.set_size.to_string().into();
            v["ball_size"] = rep.ball_size.to_string().into();
            v
        });
        acc.finish_check(report);
    }
    if ctx.suite == Suite::Lemma15 && report.cells_tested == 0 {
        report.notes.push("no cell satisfied the hypotheses".into());
    }
    Ok(())
}

struct ShiftCase {
    id: String,
    z: Vec<f64>,
}

fn shift_cases(ctx: &Ctx, r: u32, radius: f64) -> Vec<ShiftCase> {
    let mut out = vec![
        ShiftCase {
            id: "zero".into(),
            z: vec![0.0; r as usize],
        },
        ShiftCase {
            id: "unit".into(),
            z: (0..r).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect(),
        },
    ];
    for i in 0..ctx.grid.cases.unwrap_or(20) {
        let key = format!("{}:{}:{r}:{radius}:{i}", ctx.grid.seed, ctx.suite.name());
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&<sha2::Sha256 as sha2::Digest>::digest(key.as_bytes()));
        let mut rng = ChaCha8Rng::from_seed(seed);
        let dir: Vec<f64> = (0..r).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let len = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        let size = (1e-2f64.ln() + rng.random::<f64>() * (radius.ln() - 1e-2f64.ln())).exp();
        out.push(ShiftCase {
            id: format!("random-{i}"),
            z: dir.iter().map(|x| x / len * size).collect(),
        });
    }
    out
}

/// Shifted-ball counts and symmetric differences against `|B_R^{(r)}|`,
/// in both stated forms of each bound.
pub(super) fn lemma10_11(ctx: &Ctx, report: &mut VerificationReport) -> Result<()> {
    let e = Interval::e();
    for &r in &ctx.grid.r {
        for &radius in &ctx.grid.real_radii {
            let cases = shift_cases(ctx, r, radius);
            let counts: Vec<Result<(u64, u64)>> = cases
                .par_iter()
                .map(|c| {
                    Ok((
                        shifted_ball_count(r, radius, &c.z, &ctx.limits)?,
                        symdiff_count(r, radius, &c.z, &ctx.limits)?,
                    ))
                })
                .collect();
            let rr = Interval::point(radius);
            let rel = 16.0 * f64::EPSILON;
            let v_r = unit_ball_volume(r);
            let vol = Interval::new(v_r * (1.0 - rel), v_r * (1.0 + rel)) * rr.powi(r);
            let r32 = Interval::from_u64(r as u64).powi(3).sqrt();
            let d64 = r as u64;
            let n64 = radius.round() as u64;
            let kappa = radius / (r as f64).sqrt();
            for &delta in &ctx.grid.delta {
                let admissible = radius >= 1.0 && delta > 0.0 && delta < 2.0 / 3.0 && (r as f64) <= radius.powf(delta);
                let tag = format!("R={radius},delta={delta}");
                if !admissible {
                    report.push_cell(super::report::skip_cell(
                        d64,
                        n64,
                        kappa,
                        CellStatus::HypothesisSkip,
                        &format!("{tag}: needs R >= 1, 0 < delta < 2/3, r <= R^delta"),
                    ));
                    continue;
                }
                let power = |x: f64| (Interval::point(x) * rr.ln()).exp();
                let r_small = power(-1.0 + 1.5 * delta);
                let mut acc = CellAccumulator::new(d64, n64, kappa);
                let mut failed = None;
                for (c, cnt) in cases.iter().zip(&counts) {
                    let (count, sym) = match cnt {
                        Ok(x) => *x,
                        Err(e) => {
                            failed = Some(e);
                            break;
                        }
                    };
                    let zn = c.z.iter().map(|x| x * x).sum::<f64>().sqrt();
                    let zn = Interval::new(zn * (1.0 - rel), zn * (1.0 + rel));
                    let diff = Interval::from_u64(count) - vol;
                    let dev = diff.hi.abs().max(diff.lo.abs());
                    let t40 = r32 / rr;
                    let b40a = vol * t40 * t40.exp();
                    let b40b = e * vol * r_small;
                    let t41 = Interval::from_u64(r as u64) * zn / rr;
                    let b41a = e * 4.0 * (t41 * t41.exp() + t41.exp() * r_small) * vol;
                    let s41 = zn * power(-1.0 + delta);
                    let b41b = e * 4.0 * (s41 * s41.exp() + s41.exp() * r_small) * vol;
                    let checks = [
                        ("shift", dev, b40a.hi),
                        ("shift-delta", dev, b40b.hi),
                        ("symdiff", sym as f64, b41a.hi),
                        ("symdiff-delta", sym as f64, b41b.hi),
                    ];
                    for (name, lhs, rhs) in checks {
                        let id = format!("{tag}/{}/{name}", c.id);
                        acc.check(&id, lhs, rhs, 0.0, || {
                            json!({
                                "suite": ctx.suite.name(),
                                "r": r,
                                "R": radius,
                                "delta": delta,
                                "z": c.z,
                                "form": name,
                            })
                        });
                    }
                }
                match failed {
                    Some(e) => record_failure(report, d64, n64, kappa, e),
                    None => acc.finish_check(report),
                }
            }
        }
    }
    Ok(())
}
