use std::fmt::Write as _;
use std::path::Path;

use super::run::{McSummary, TimingSummary};
use crate::analysis::ErrorTrace;
use crate::error::{Error, Result};

/// A table with a fixed CSV schema.
pub trait CsvTable {
    fn header(&self) -> &'static str;

    fn write_rows(&self, out: &mut String);

    fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(self.header());
        out.push('\n');
        self.write_rows(&mut out);
        out
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

impl CsvTable for ErrorTrace {
    fn header(&self) -> &'static str {
        "k,error_norm,lambda_min,r_max,step_ms"
    }

    fn write_rows(&self, out: &mut String) {
        for r in &self.rows {
            let lmin = r.lambda_min.map(num).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.k,
                num(r.error_norm),
                lmin,
                num(r.r_max),
                num(r.step_ms)
            );
        }
    }
}

impl CsvTable for McSummary {
    fn header(&self) -> &'static str {
        "k,mean,ci_lo,ci_hi"
    }

    fn write_rows(&self, out: &mut String) {
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", r.k, num(r.mean), num(r.ci_lo), num(r.ci_hi));
        }
    }
}

impl CsvTable for TimingSummary {
    fn header(&self) -> &'static str {
        "estimator,phase,mean_ms,ci_lo_ms,ci_hi_ms"
    }

    fn write_rows(&self, out: &mut String) {
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.kind,
                r.phase.as_str(),
                num(r.mean_ms),
                num(r.ci_lo_ms),
                num(r.ci_hi_ms)
            );
        }
    }
}

pub fn emit_csv(table: &impl CsvTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, table.to_csv()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::TraceRow;
    use crate::estimators::EstimatorKind;
    use crate::experiments::run::{McRow, Phase, TimingRow};

    #[test]
    fn trace_schema() {
        let mut t = ErrorTrace::new("RLS");
        t.rows.push(TraceRow {
            k: 1,
            error_norm: 0.1,
            lambda_min: None,
            r_max: 1.0,
            step_ms: 0.25,
            bound: None,
        });
        t.rows.push(TraceRow {
            k: 2,
            error_norm: 1.0 / 3.0,
            lambda_min: Some(2.0),
            r_max: 0.0,
            step_ms: 0.5,
            bound: Some(1.0),
        });
        let csv = t.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "k,error_norm,lambda_min,r_max,step_ms");
        assert_eq!(
            lines[1],
            "1,1.0000000000000001e-1,,1.0000000000000000e0,2.5000000000000000e-1"
        );
        let third: f64 = lines[2].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(third, 1.0 / 3.0);
    }

    #[test]
    fn summary_schemas() {
        let mc = McSummary {
            kind: EstimatorKind::R1fr,
            trials: 2,
            rows: vec![McRow {
                k: 1,
                mean: 1.0,
                ci_lo: 0.5,
                ci_hi: 1.5,
            }],
        };
        assert!(mc.to_csv().starts_with("k,mean,ci_lo,ci_hi\n1,"));
        let t = TimingSummary {
            n: 4,
            p: 2,
            rows: vec![TimingRow {
                kind: EstimatorKind::Fr,
                phase: Phase::PostCutoff,
                mean_ms: 1.0,
                ci_lo_ms: 0.9,
                ci_hi_ms: 1.1,
                samples: 3,
            }],
        };
        let csv = t.to_csv();
        assert!(csv.starts_with("estimator,phase,mean_ms,ci_lo_ms,ci_hi_ms\nfr,post-cutoff,"));
    }

    #[test]
    fn writes_and_reports_io_errors() {
        let dir = tempfile::tempdir().unwrap();
        let t = ErrorTrace::new("x");
        let path = dir.path().join("t.csv");
        emit_csv(&t, &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "k,error_norm,lambda_min,r_max,step_ms\n");
        let bad = dir.path().join("missing").join("t.csv");
        assert!(matches!(emit_csv(&t, bad), Err(Error::Io { .. })));
    }
}
