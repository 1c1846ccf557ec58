use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::canonical::format_float;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellStatus {
    Pass,
    Violation,
    HypothesisSkip,
    BudgetSkip,
    Calibrated,
    Error,
}

impl CellStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CellStatus::Pass => "pass",
            CellStatus::Violation => "violation",
            CellStatus::HypothesisSkip => "hypothesis-skip",
            CellStatus::BudgetSkip => "budget-skip",
            CellStatus::Calibrated => "calibrated",
            CellStatus::Error => "error",
        }
    }
}

/// One CSV row: the tightest sample of a cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub d: u64,
    #[serde(rename = "N")]
    pub radius: u64,
    pub kappa: f64,
    pub xi_id: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs` for inequality checks, the ratio for calibrations.
    pub margin: f64,
    pub status: CellStatus,
    pub samples: u64,
}

/// A failing sample, with enough parameters to recompute it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub params: Value,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

/// A calibrated quantity compared against its committed baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub name: String,
    pub value: f64,
    pub baseline: Option<f64>,
    /// Allowed factor in either direction.
    pub factor: f64,
    pub ok: bool,
}

impl Gate {
    pub fn against(name: impl Into<String>, value: f64, baseline: Option<f64>, factor: f64) -> Self {
        let ok = match baseline {
            Some(b) if b > 0.0 => value.is_finite() && value <= b * factor && value >= b / factor,
            Some(_) => value.is_finite(),
            None => true,
        };
        Self {
            name: name.into(),
            value,
            baseline,
            factor,
            ok,
        }
    }

    /// `max / min <= factor` over a family of values.
    pub fn spread(name: impl Into<String>, values: &[f64], factor: f64) -> Self {
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let value = if values.is_empty() { 1.0 } else { max / min };
        Self {
            name: name.into(),
            value,
            baseline: None,
            factor,
            ok: min > 0.0 && value <= factor || values.is_empty(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub suite: String,
    pub inequality: String,
    pub cells_tested: u64,
    pub samples_tested: u64,
    pub violations: Vec<Violation>,
    pub calibrated_constant: Option<f64>,
    /// Named calibrations, e.g. one constant per dimension.
    pub calibrations: BTreeMap<String, f64>,
    pub gates: Vec<Gate>,
    pub hypothesis_skips: u64,
    pub budget_skips: u64,
    pub errors: Vec<String>,
    pub cells: Vec<CellRecord>,
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn new(suite: &str, inequality: &str) -> Self {
        Self {
            suite: suite.to_string(),
            inequality: inequality.to_string(),
            cells_tested: 0,
            samples_tested: 0,
            violations: Vec::new(),
            calibrated_constant: None,
            calibrations: BTreeMap::new(),
            gates: Vec::new(),
            hypothesis_skips: 0,
            budget_skips: 0,
            errors: Vec::new(),
            cells: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// No violations, no failed gates and no hard errors.
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.errors.is_empty() && self.gates.iter().all(|g| g.ok)
    }

    pub fn push_cell(&mut self, cell: CellRecord) {
        match cell.status {
            CellStatus::HypothesisSkip => self.hypothesis_skips += 1,
            CellStatus::BudgetSkip => self.budget_skips += 1,
            _ => {
                self.cells_tested += 1;
                self.samples_tested += cell.samples;
            }
        }
        self.cells.push(cell);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("d,N,kappa,xi_id,lhs,rhs,margin,status\n");
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                c.d,
                c.radius,
                format_float(c.kappa),
                csv_field(&c.xi_id),
                format_float(c.lhs),
                format_float(c.rhs),
                format_float(c.margin),
                c.status.as_str()
            ));
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Running worst case of a cell: smallest margin wins, ties keep the
/// earliest sample.
#[derive(Debug, Clone)]
pub(crate) struct CellAccumulator {
    pub d: u64,
    pub radius: u64,
    pub kappa: f64,
    pub worst: Option<(String, f64, f64, f64)>,
    pub samples: u64,
    pub violations: Vec<Violation>,
}

impl CellAccumulator {
    pub fn new(d: u64, radius: u64, kappa: f64) -> Self {
        Self {
            d,
            radius,
            kappa,
            worst: None,
            samples: 0,
            violations: Vec::new(),
        }
    }

    /// Records `lhs <= rhs` with a numerical allowance `slack` on the left.
    pub fn check(&mut self, id: &str, lhs: f64, rhs: f64, slack: f64, params: impl FnOnce() -> Value) {
        self.record(id, lhs, rhs, lhs <= rhs + slack, params);
    }

    /// Records a sample whose verdict was decided by the caller.
    pub fn record(&mut self, id: &str, lhs: f64, rhs: f64, ok: bool, params: impl FnOnce() -> Value) {
        self.samples += 1;
        let margin = rhs - lhs;
        if !ok {
            self.violations.push(Violation {
                params: params(),
                lhs,
                rhs,
                margin,
            });
        }
        self.observe(id, lhs, rhs, margin);
    }

    fn observe(&mut self, id: &str, lhs: f64, rhs: f64, margin: f64) {
        let replace = match &self.worst {
            None => true,
            Some((_, _, _, m)) => margin < *m || margin.is_nan(),
        };
        if replace {
            self.worst = Some((id.to_string(), lhs, rhs, margin));
        }
    }

    /// Records a calibration sample; the largest ratio is the worst case.
    pub fn calibrate(&mut self, id: &str, lhs: f64, rhs: f64) {
        self.samples += 1;
        let ratio = lhs / rhs;
        self.observe(id, lhs, rhs, -ratio);
    }

    pub fn max_ratio(&self) -> f64 {
        self.worst.as_ref().map(|w| -w.3).unwrap_or(0.0)
    }

    pub fn finish_check(self, report: &mut VerificationReport) {
        let status = if self.violations.is_empty() {
            CellStatus::Pass
        } else {
            CellStatus::Violation
        };
        let (id, lhs, rhs, margin) = self.worst.unwrap_or_default();
        report.violations.extend(self.violations);
        report.push_cell(CellRecord {
            d: self.d,
            radius: self.radius,
            kappa: self.kappa,
            xi_id: id,
            lhs,
            rhs,
            margin,
            status,
            samples: self.samples,
        });
    }

    pub fn finish_calibration(self, report: &mut VerificationReport) {
        let (id, lhs, rhs, margin) = self.worst.unwrap_or_default();
        report.push_cell(CellRecord {
            d: self.d,
            radius: self.radius,
            kappa: self.kappa,
            xi_id: id,
            lhs,
            rhs,
            margin: -margin,
            status: CellStatus::Calibrated,
            samples: self.samples,
        });
    }
}

pub(crate) fn skip_cell(d: u64, radius: u64, kappa: f64, status: CellStatus, why: &str) -> CellRecord {
    CellRecord {
        d,
        radius,
        kappa,
        xi_id: why.to_string(),
        lhs: f64::NAN,
        rhs: f64::NAN,
        margin: f64::NAN,
        status,
        samples: 0,
    }
}
