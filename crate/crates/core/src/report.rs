//! Report rendering shared by the CLI and the acceptance harness: fixed
//! 17-significant-digit decimal formatting for CSV (round-trip exact) and
//! serializable summary records.

use crate::residuals::ResidualReport;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;

/// Render a float with 17 significant digits (exact f64 round trip).
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        }
    } else {
        format!("{x:.16e}")
    }
}

/// Write a CSV file with the given header line and pre-rendered rows.
pub fn write_csv(
    path: &std::path::Path,
    header: &str,
    rows: impl IntoIterator<Item = Vec<String>>,
) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{header}")?;
    for row in rows {
        writeln!(f, "{}", row.join(","))?;
    }
    f.flush()
}

/// Aggregate of one residual family over a point batch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub name: String,
    pub count: usize,
    pub max_relative: f64,
    pub mean_relative: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Accumulates per-point residual reports into per-suite summaries.
#[derive(Debug, Default)]
pub struct SuiteAccumulator {
    sums: BTreeMap<String, (usize, f64, f64)>,
}

impl SuiteAccumulator {
    pub fn new() -> SuiteAccumulator {
        SuiteAccumulator::default()
    }

    pub fn push(&mut self, suite: &str, relative: f64) {
        let e = self.sums.entry(suite.to_string()).or_insert((0, 0.0, 0.0));
        e.0 += 1;
        e.1 = e.1.max(relative);
        e.2 += relative;
    }

    pub fn push_report(&mut self, suite: &str, report: &ResidualReport) {
        self.push(suite, report.relative);
    }

    pub fn summaries(
        &self,
        tolerances: &BTreeMap<String, f64>,
        default_tol: f64,
    ) -> Vec<SuiteSummary> {
        self.sums
            .iter()
            .map(|(name, &(count, max, sum))| {
                let tolerance = tolerances.get(name).copied().unwrap_or(default_tol);
                SuiteSummary {
                    name: name.clone(),
                    count,
                    max_relative: max,
                    mean_relative: sum / count.max(1) as f64,
                    tolerance,
                    pass: max <= tolerance,
                }
            })
            .collect()
    }
}
