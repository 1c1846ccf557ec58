use std::fs;
use std::path::{Path, PathBuf};

use maxlat_core::canonical::{format_float, run_meta, Envelope, RunManifest};
use maxlat_core::lattice::{ball_count, profile_spectrum, BallSpec, Limits, MarkedClass, Mode};
use maxlat_core::maxop::{
    ellipsoid_norm_probe, operator_norm_probe, parse_dyadic_set, square_function_probe, EllipsoidSpec,
    ELLIPSOID_MAX_DIM,
};
use maxlat_core::multiplier::{lambda_approximants, MultiplierDp};
use maxlat_core::verifier::{run_suite, suite_manifest, Suite};
use maxlat_core::{Error, Result};
use serde_json::json;

use crate::xi::parse_xi;
use crate::{Failure, ModeArg, ProbeArg};

/// Sizes the global pool from `MAXLAT_THREADS` (default: all cores).
pub fn init_threads() -> Result<usize> {
    let threads = match std::env::var("MAXLAT_THREADS") {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Config(format!("MAXLAT_THREADS must be a positive integer, got `{s}`")))?,
        Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))?;
    Ok(threads)
}

fn envelope<T: serde::Serialize>(manifest: &RunManifest, body: &T, threads: usize) -> Result<String> {
    Envelope::new(manifest, body, run_meta(threads))?.to_canonical()
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

pub fn count(
    d: u32,
    n: u32,
    mode: ModeArg,
    profile: Option<&str>,
    split: Option<u32>,
    json: bool,
    threads: usize,
) -> std::result::Result<(), Failure> {
    let limits = Limits::default();
    let spec = BallSpec::new(d, n)?;
    let params =
        json!({"d": d, "N": n, "mode": format!("{mode:?}").to_lowercase(), "profile": profile, "split": split});
    let manifest = RunManifest::new("count", params, 0);
    match profile {
        None => {
            let mode = match mode {
                ModeArg::Exact => Mode::Exact,
                ModeArg::Fast => Mode::Fast,
            };
            let c = ball_count(spec, mode, &limits)?;
            if json {
                println!("{}", envelope(&manifest, &json!({"count": c.to_string()}), threads)?);
            } else {
                println!("{c}");
            }
        }
        Some(expr) => {
            let class = MarkedClass::parse(expr)?;
            let p = profile_spectrum(d, n, &class, split, &limits)?;
            let mut rows = Vec::new();
            for m in 0..=p.max_norm() {
                for j in p.min_marked()..=p.max_marked() {
                    let c = p.get(m, j);
                    if c != 0u32.into() {
                        rows.push((m, j, c));
                    }
                }
            }
            if json {
                let table: Vec<_> = rows
                    .iter()
                    .map(|(m, j, c)| json!({"norm_sq": m, "marked": j, "count": c.to_string()}))
                    .collect();
                let body = json!({"class": class.to_string(), "profile": table});
                println!("{}", envelope(&manifest, &body, threads)?);
            } else {
                println!("norm_sq,marked,count");
                for (m, j, c) in rows {
                    println!("{m},{j},{c}");
                }
            }
        }
    }
    Ok(())
}

pub fn multiplier(
    d: u32,
    n: u32,
    xi: &str,
    lambda: bool,
    json: bool,
    threads: usize,
) -> std::result::Result<(), Failure> {
    let limits = Limits::default();
    let spec = BallSpec::new(d, n)?;
    let point = parse_xi(xi, d)?;
    let value = MultiplierDp::new(d, n, &limits)?.eval(n, &point)?;
    let approx = if lambda {
        Some(lambda_approximants(spec, &point, &limits)?)
    } else {
        None
    };
    if json {
        let manifest = RunManifest::new("multiplier", json!({"d": d, "N": n, "xi": xi, "lambda": lambda}), 0);
        let body = json!({
            "m": value,
            "lambda": approx.as_ref().map(|a| json!({"value": a.value, "branch": a.branch, "v_count": a.v_count})),
        });
        println!("{}", envelope(&manifest, &body, threads)?);
    } else {
        println!("{}", format_float(value));
        if let Some(a) = approx {
            println!("lambda{} {}", a.branch, format_float(a.value));
        }
    }
    Ok(())
}

/// Grid file path, or inline TOML when no such file exists.
fn grid_overrides(grid: Option<&str>) -> Result<Option<String>> {
    match grid {
        None => Ok(None),
        Some(g) if Path::new(g).is_file() => Ok(Some(fs::read_to_string(g)?)),
        Some(g) if g.contains('=') => Ok(Some(g.to_string())),
        Some(g) => Err(Error::Config(format!("grid file `{g}` not found"))),
    }
}

pub fn verify(suite: &str, grid: Option<&str>, out: &Path, threads: usize) -> std::result::Result<(), Failure> {
    let suite: Suite = suite.parse()?;
    let overrides = grid_overrides(grid)?;
    let sweep = match &overrides {
        Some(text) => suite.grid_with(text)?,
        None => suite.default_grid(),
    };
    let report = run_suite(suite, &sweep)?;
    let manifest = suite_manifest(suite, &sweep, overrides.as_deref())?;
    write_file(
        &out.join(format!("{}.json", suite.name())),
        &envelope(&manifest, &report, threads)?,
    )?;
    write_file(&out.join(format!("{}.csv", suite.name())), &report.to_csv())?;
    println!(
        "{}: cells {} samples {} violations {} hypothesis-skips {} budget-skips {} errors {}",
        suite.name(),
        report.cells_tested,
        report.samples_tested,
        report.violations.len(),
        report.hypothesis_skips,
        report.budget_skips,
        report.errors.len()
    );
    for g in report.gates.iter().filter(|g| !g.ok) {
        println!(
            "gate {} = {} outside baseline {:?}",
            g.name,
            format_float(g.value),
            g.baseline
        );
    }
    if let Some(c) = report.calibrated_constant {
        println!("calibrated constant {}", format_float(c));
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Violations)
    }
}

pub struct ProbeArgs {
    pub probe: ProbeArg,
    pub d: u32,
    pub m: Option<u64>,
    pub set: String,
    pub trials: u32,
    pub seed: u64,
    pub c1: f64,
    pub c2: f64,
}

fn parse_reals(spec: &str) -> Result<Vec<f64>> {
    if spec.contains("..") {
        return Ok(parse_dyadic_set(spec)?.into_iter().map(f64::from).collect());
    }
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|t| *t > 0.0 && t.is_finite())
                .ok_or_else(|| Error::InvalidArgument(format!("bad radius `{s}`")))
        })
        .collect()
}

pub fn maxop(a: ProbeArgs, out: Option<PathBuf>, threads: usize) -> std::result::Result<(), Failure> {
    let m = a.m.unwrap_or(if a.d <= 3 { 32 } else { 16 });
    let report = match a.probe {
        ProbeArg::Norm => operator_norm_probe(a.d, m, &parse_dyadic_set(&a.set)?, a.trials, a.seed)?,
        ProbeArg::Square => square_function_probe(a.d, m, a.c1, a.c2, a.trials, a.seed)?,
        ProbeArg::Ellipsoid => {
            if a.d == 0 || a.d > ELLIPSOID_MAX_DIM {
                return Err(Error::InvalidArgument(format!(
                    "the ellipsoid probe enumerates directly and needs 1 <= d <= {ELLIPSOID_MAX_DIM}"
                ))
                .into());
            }
            let ts = parse_reals(&a.set)?;
            let top = ts.iter().copied().fold(0.0, f64::max);
            let spec = EllipsoidSpec::evenly_spaced(a.d, top)?;
            ellipsoid_norm_probe(&spec, m, &ts, a.trials, a.seed)?
        }
    };
    let probe = format!("{:?}", a.probe).to_lowercase();
    let params = json!({
        "probe": probe, "d": a.d, "M": m, "set": a.set, "trials": a.trials,
        "c1": a.c1, "c2": a.c2,
    });
    let manifest = RunManifest::new("maxop", params, a.seed);
    let path = out.unwrap_or_else(|| PathBuf::from(format!("maxlat-out/maxop-{probe}-d{}.json", a.d)));
    write_file(&path, &envelope(&manifest, &report, threads)?)?;
    println!("best ratio {} ({})", format_float(report.best_ratio), report.witness);
    if let Some(r) = report.witness_ratio("delta") {
        println!("delta ratio {}", format_float(r));
    }
    if report.periodic {
        println!("note: some inputs wrap around the torus (periodic semantics)");
    }
    Ok(())
}
