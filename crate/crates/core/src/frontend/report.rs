//! Report documents and their structured (JSON) and table renderings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontend::job::{JobDocument, OutputFormat};
use crate::hs::{fmt17, HsReport, Magnitude};

pub const REPORT_SCHEMA: &str = "hsverify-report/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportDocument {
    pub schema: String,
    pub job: JobDocument,
    pub result: HsReport,
    /// Seconds spent in verification; omitted for reproducible output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

impl ReportDocument {
    pub fn new(job: JobDocument, result: HsReport, wall_clock_seconds: Option<f64>) -> Self {
        Self {
            schema: REPORT_SCHEMA.to_string(),
            job,
            result,
            wall_clock_seconds,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        if doc.schema != REPORT_SCHEMA {
            return Err(Error::Schema(format!("unknown report schema {:?}", doc.schema)));
        }
        Ok(doc)
    }
}

/// Renders a report. The table form is `k,S_k` rows followed by
/// `characterization=`, `tail_bound=` and `verdict=` lines.
pub fn emit_report(report: &ReportDocument, format: OutputFormat) -> String {
    match format {
        OutputFormat::Structured => {
            let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
            s.push('\n');
            s
        }
        OutputFormat::Table => {
            let r = &report.result;
            let mut s = String::from("k,S_k\n");
            for (k, v) in r.partial_sums.iter().enumerate() {
                writeln!(s, "{k},{}", fmt17(*v)).unwrap();
            }
            writeln!(s, "characterization={}", r.characterization).unwrap();
            writeln!(s, "tail_bound={}", r.tail_bound).unwrap();
            writeln!(s, "verdict={}", r.verdict).unwrap();
            s
        }
    }
}

/// `k,S_k,characterization,ratio` rows, `ratio = S_k / characterization`.
pub fn emit_convergence(report: &HsReport) -> String {
    let mut s = String::from("k,S_k,characterization,ratio\n");
    for (k, v) in report.partial_sums.iter().enumerate() {
        let ratio = match report.characterization {
            Magnitude::Finite(i) if i > 0.0 => fmt17(v / i),
            Magnitude::Finite(_) => "nan".to_string(),
            Magnitude::Infinite => fmt17(0.0),
        };
        writeln!(s, "{k},{},{},{ratio}", fmt17(*v), report.characterization).unwrap();
    }
    s
}
