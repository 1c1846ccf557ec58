//! Parameter sweeps over the inequalities of the dimension-free theory.
//!
//! Fully specified inequalities are checked cell by cell and any failure is
//! a violation. Inequalities with unspecified absolute constants are
//! calibrated instead: the report carries the largest observed ratio, gated
//! against the committed baselines in `fixtures/baselines.toml`.

mod calibration;
mod counting_checks;
pub mod grid;
mod hypergeometric;
mod multiplier_checks;
pub mod report;
pub mod sampler;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde_json::{json, Value};

pub use calibration::square_sum;
pub use grid::{RadiusRule, SweepGrid};
pub use hypergeometric::{check_lemma7, hypergeometric_tail, lemma7_expectation, Lemma7Input};
pub use report::{CellRecord, CellStatus, Gate, VerificationReport, Violation};
pub use sampler::{Sample, Sampler, Stratum};

use crate::canonical::RunManifest;
use crate::error::{Error, Result};
use crate::lattice::Limits;
use crate::multiplier::TorusPoint;
use crate::numeric::Interval;

/// The sweeps exposed by `maxlat verify --suite`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Suite {
    Prop0,
    Prop2,
    Prop4,
    Prop5,
    Lemma4,
    Lemma5,
    Lemma6,
    Lemma7,
    Lemma8,
    Lemma9,
    Lemma10To11,
    Lemma14,
    Lemma15,
    Lemma20,
    SquareSum,
    Kraw,
}

impl Suite {
    pub const ALL: [Suite; 16] = [
        Suite::Prop0,
        Suite::Prop2,
        Suite::Prop4,
        Suite::Prop5,
        Suite::Lemma4,
        Suite::Lemma5,
        Suite::Lemma6,
        Suite::Lemma7,
        Suite::Lemma8,
        Suite::Lemma9,
        Suite::Lemma10To11,
        Suite::Lemma14,
        Suite::Lemma15,
        Suite::Lemma20,
        Suite::SquareSum,
        Suite::Kraw,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Prop0 => "prop0",
            Suite::Prop2 => "prop2",
            Suite::Prop4 => "prop4",
            Suite::Prop5 => "prop5",
            Suite::Lemma4 => "lemma4",
            Suite::Lemma5 => "lemma5",
            Suite::Lemma6 => "lemma6",
            Suite::Lemma7 => "lemma7",
            Suite::Lemma8 => "lemma8",
            Suite::Lemma9 => "lemma9",
            Suite::Lemma10To11 => "lemma10-11",
            Suite::Lemma14 => "lemma14",
            Suite::Lemma15 => "lemma15",
            Suite::Lemma20 => "lemma20",
            Suite::SquareSum => "square-sum",
            Suite::Kraw => "kraw",
        }
    }

    /// Human-readable statement of what the suite checks.
    pub fn inequality(self) -> &'static str {
        match self {
            Suite::Prop0 => "|m_N(xi) - 1| <= 2 pi^2 kappa^2 ||xi||^2",
            Suite::Prop2 => "|m_N(xi)| <= C ((kappa ||xi||)^-1 + kappa^(-1/7)) for 10 <= kappa <= 50 sqrt(d)",
            Suite::Prop4 => {
                "|m_N - lambda^j| <= 17 min(exp(-c kappa^2 S/400), kappa^2 S), S = sum sin^2 (j=1) or sum cos^2 (j=2)"
            }
            Suite::Prop5 => "|m_N(xi)| <= 8 exp(-c kappa^2 sum sin^2/100) + 8 exp(-c kappa^2 sum cos^2/100)",
            Suite::Lemma4 => "(2 floor(kappa) + 1)^d <= |B_N| <= (2 pi e)^(d/2) (kappa^2 + 1/4)^(d/2)",
            Suite::Lemma5 => "|{x : #{i : |x_i| >= eps2 kappa} <= eps1 d}| <= 2 exp(-d/10) |B_N|",
            Suite::Lemma6 => "P[|sigma(I) cap J| <= r|I|/(5d)] <= exp(-r|I|/(10d))",
            Suite::Lemma7 => "E exp(-sum_{sigma(I) cap J} u_j) <= 3 exp(-(delta0 delta1/20) sum_J u_j)",
            Suite::Lemma8 => "|{x : sum_{i<=r} x_i^2 < eps^3 kappa^2 r}| <= 4 exp(-eps r/10) |B_N|",
            Suite::Lemma9 => "|m_N(xi)| <= sup_{l >= eps^3 kappa^2 r} |m^(r)_sqrt(l)(xi_1..r)| + 4 exp(-eps r/10)",
            Suite::Lemma10To11 => "shifted ball counts and symmetric differences against |B_R^(r)|",
            Suite::Lemma14 => "|m_N(xi) - |B|^-1 sum (-1)^(sum_V x_i)| <= 2 kappa^2 sum cos^2(pi xi_i)",
            Suite::Lemma15 => "|{x : #{i : x_i = +-1} <= n - k}| <= 2^(1-k) |B_N| and the large-coordinate mass form",
            Suite::Lemma20 => "calibrated constants for lower-dimensional and continuous ball multipliers",
            Suite::SquareSum => "sum_{N in D} |m_N - p_{N^2/d}|^2 against its Plancherel majorant",
            Suite::Kraw => "Krawtchouk symmetries, orthogonality, sign pattern and |K_k(x)| <= exp(-c k x/n)",
        }
    }

    /// The shipped default grid, as TOML.
    pub fn default_grid_text(self) -> &'static str {
        match self {
            Suite::Prop0 => include_str!("../../fixtures/grids/prop0.toml"),
            Suite::Prop2 => include_str!("../../fixtures/grids/prop2.toml"),
            Suite::Prop4 => include_str!("../../fixtures/grids/prop4.toml"),
            Suite::Prop5 => include_str!("../../fixtures/grids/prop5.toml"),
            Suite::Lemma4 => include_str!("../../fixtures/grids/lemma4.toml"),
            Suite::Lemma5 => include_str!("../../fixtures/grids/lemma5.toml"),
            Suite::Lemma6 => include_str!("../../fixtures/grids/lemma6.toml"),
            Suite::Lemma7 => include_str!("../../fixtures/grids/lemma7.toml"),
            Suite::Lemma8 => include_str!("../../fixtures/grids/lemma8.toml"),
            Suite::Lemma9 => include_str!("../../fixtures/grids/lemma9.toml"),
            Suite::Lemma10To11 => include_str!("../../fixtures/grids/lemma10-11.toml"),
            Suite::Lemma14 => include_str!("../../fixtures/grids/lemma14.toml"),
            Suite::Lemma15 => include_str!("../../fixtures/grids/lemma15.toml"),
            Suite::Lemma20 => include_str!("../../fixtures/grids/lemma20.toml"),
            Suite::SquareSum => include_str!("../../fixtures/grids/square-sum.toml"),
            Suite::Kraw => include_str!("../../fixtures/grids/kraw.toml"),
        }
    }

    pub fn default_grid(self) -> SweepGrid {
        SweepGrid::from_toml(self.default_grid_text()).expect("shipped grids parse")
    }

    /// The default grid with `overrides` (TOML) laid over it.
    pub fn grid_with(self, overrides: &str) -> Result<SweepGrid> {
        SweepGrid::layered(self.default_grid_text(), overrides)
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown suite `{s}`")))
    }
}

pub const BASELINES_TEXT: &str = include_str!("../../fixtures/baselines.toml");

/// Committed calibration baselines: suite name to quantity name to value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Baselines(BTreeMap<String, BTreeMap<String, f64>>);

impl Baselines {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text)
            .map(Baselines)
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn shipped() -> Self {
        Self::parse(BASELINES_TEXT).expect("shipped baselines parse")
    }

    pub fn get(&self, suite: Suite, name: &str) -> Option<f64> {
        self.section(suite.name(), name)
    }

    pub fn section(&self, section: &str, name: &str) -> Option<f64> {
        self.0.get(section).and_then(|m| m.get(name)).copied()
    }

    /// The calibrations of `report` in the same layout, for refreshing the
    /// fixture after an intentional change.
    pub fn from_report(report: &VerificationReport) -> String {
        let mut table = toml::Table::new();
        let inner: toml::Table = report
            .calibrations
            .iter()
            .map(|(k, v)| (k.clone(), toml::Value::Float(*v)))
            .collect();
        table.insert(report.suite.clone(), toml::Value::Table(inner));
        toml::to_string(&table).expect("baseline table serializes")
    }
}

/// Allowed factor between a calibrated value and its baseline.
pub const BASELINE_FACTOR: f64 = 2.0;

pub(crate) struct Ctx<'a> {
    pub suite: Suite,
    pub grid: &'a SweepGrid,
    pub limits: Limits,
    pub sampler: Sampler,
    pub baselines: &'a Baselines,
}

impl Ctx<'_> {
    pub fn params(&self, d: u64, radius: u64, id: &str, xi: Option<&TorusPoint>) -> Value {
        let mut v = json!({
            "suite": self.suite.name(),
            "seed": self.grid.seed,
            "d": d,
            "N": radius,
            "xi_id": id,
        });
        if let Some(xi) = xi.filter(|x| x.d() <= 64) {
            v["xi"] = json!(xi.components());
        }
        v
    }

    pub fn gate(&self, report: &mut VerificationReport, name: &str, value: f64) {
        let baseline = self.baselines.get(self.suite, name);
        report.gates.push(Gate::against(name, value, baseline, BASELINE_FACTOR));
    }
}

/// Upper-bounded enclosure of a floating sum of `terms` nonnegative terms,
/// each carrying a few ulps of rounding.
pub(crate) fn sum_enclosure(x: f64, terms: usize) -> Interval {
    let rel = (4.0 * terms as f64 + 4.0) * f64::EPSILON;
    Interval::new((x * (1.0 - rel)).max(0.0), x * (1.0 + rel))
}

/// Slack granted to the floating multiplier DP on the left-hand side.
pub(crate) fn dp_slack(d: u64, n: u64) -> f64 {
    (n.max(1) * d) as f64 * 2f64.powi(-50)
}

/// The manifest of a verify run: suite, full grid, seed and the hashes of
/// the shipped grid, the baselines and any override text.
pub fn suite_manifest(suite: Suite, grid: &SweepGrid, overrides: Option<&str>) -> Result<RunManifest> {
    let params = json!({"suite": suite.name(), "grid": serde_json::to_value(grid)?});
    let mut manifest = RunManifest::new("verify", params, grid.seed)
        .with_fixture(&format!("grids/{}.toml", suite.name()), suite.default_grid_text())
        .with_fixture("baselines.toml", BASELINES_TEXT);
    if let Some(text) = overrides {
        manifest = manifest.with_fixture("grid-overrides", text);
    }
    Ok(manifest)
}

pub fn run_suite(suite: Suite, grid: &SweepGrid) -> Result<VerificationReport> {
    run_suite_with(suite, grid, &Baselines::shipped())
}

pub fn run_suite_with(suite: Suite, grid: &SweepGrid, baselines: &Baselines) -> Result<VerificationReport> {
    let ctx = Ctx {
        suite,
        grid,
        limits: grid.limits(),
        sampler: Sampler::new(grid.seed, suite.name(), grid.rational_denominator.unwrap_or(64)),
        baselines,
    };
    let mut report = VerificationReport::new(suite.name(), suite.inequality());
    match suite {
        Suite::Prop0 => multiplier_checks::prop0(&ctx, &mut report)?,
        Suite::Prop4 => multiplier_checks::prop4_5(&ctx, &mut report, false)?,
        Suite::Prop5 => multiplier_checks::prop4_5(&ctx, &mut report, true)?,
        Suite::Lemma9 => multiplier_checks::lemma9(&ctx, &mut report)?,
        Suite::Lemma14 => multiplier_checks::lemma14(&ctx, &mut report)?,
        Suite::Prop2 => calibration::prop2(&ctx, &mut report)?,
        Suite::Lemma20 => calibration::lemma20(&ctx, &mut report)?,
        Suite::SquareSum => calibration::square_sum_suite(&ctx, &mut report)?,
        Suite::Kraw => calibration::kraw(&ctx, &mut report)?,
        Suite::Lemma4 => counting_checks::lemma4(&ctx, &mut report)?,
        Suite::Lemma5 | Suite::Lemma8 | Suite::Lemma15 => counting_checks::concentration(&ctx, &mut report)?,
        Suite::Lemma10To11 => counting_checks::lemma10_11(&ctx, &mut report)?,
        Suite::Lemma6 => hypergeometric::lemma6(&ctx, &mut report)?,
        Suite::Lemma7 => hypergeometric::lemma7(&ctx, &mut report)?,
    }
    Ok(report)
}

/// Records a failed computation: budget refusals become skips, anything else
/// is a hard error.
pub(crate) fn record_failure(report: &mut VerificationReport, d: u64, radius: u64, kappa: f64, err: &Error) {
    let status = if err.is_budget() {
        CellStatus::BudgetSkip
    } else {
        report.errors.push(format!("d={d} N={radius}: {err}"));
        CellStatus::Error
    };
    report.push_cell(report::skip_cell(d, radius, kappa, status, &err.to_string()));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip_and_grids_parse() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
            s.default_grid();
        }
        assert!("prop9".parse::<Suite>().is_err());
        Baselines::shipped();
    }
}
