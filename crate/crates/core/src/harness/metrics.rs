//! Metric traces and their CSV form.

use std::fs;
use std::path::Path;

use crate::matkit::format_f64;
use crate::{Error, Result};

pub const METRICS_HEADER: &str = "iter,objective,grad_mean_sq,grad_at_mean_sq,consensus_error";
pub const CONSENSUS_HEADER: &str = "iter,consensus_error";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow {
    pub iter: usize,
    /// `f(x̄)`
    pub objective: f64,
    /// `‖(1/n) Σ_i ∇f_i(x_i)‖²`
    pub grad_mean_sq: f64,
    /// `‖∇f(x̄)‖²`
    pub grad_at_mean_sq: f64,
    /// `(1/n) Σ_i ‖x_i - x̄‖²`
    pub consensus_error: f64,
}

impl MetricsRow {
    fn values(&self) -> [f64; 4] {
        [self.objective, self.grad_mean_sq, self.grad_at_mean_sq, self.consensus_error]
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsTrace {
    pub rows: Vec<MetricsRow>,
}

impl MetricsTrace {
    pub fn last(&self) -> Option<&MetricsRow> {
        self.rows.last()
    }

    pub fn is_finite(&self) -> bool {
        self.rows.iter().all(MetricsRow::is_finite)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(METRICS_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.iter.to_string());
            for v in r.values() {
                out.push(',');
                out.push_str(&format_f64(v));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let rows = parse_rows(text, METRICS_HEADER, 5)?
            .into_iter()
            .map(|(iter, v)| MetricsRow {
                iter,
                objective: v[0],
                grad_mean_sq: v[1],
                grad_at_mean_sq: v[2],
                consensus_error: v[3],
            })
            .collect();
        Ok(Self { rows })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsensusRow {
    pub iter: usize,
    /// `Ξ^{(k)} = (1/n) Σ_i ‖x_i^{(k)} - x̄^{(0)}‖²`
    pub consensus_error: f64,
}

/// Trace of a pure averaging run (consensus error only).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConsensusTrace {
    pub rows: Vec<ConsensusRow>,
}

impl ConsensusTrace {
    pub fn at(&self, iter: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.iter == iter).map(|r| r.consensus_error)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CONSENSUS_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{},{}\n", r.iter, format_f64(r.consensus_error)));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let rows = parse_rows(text, CONSENSUS_HEADER, 2)?
            .into_iter()
            .map(|(iter, v)| ConsensusRow { iter, consensus_error: v[0] })
            .collect();
        Ok(Self { rows })
    }
}

fn parse_rows(text: &str, header: &str, columns: usize) -> Result<Vec<(usize, Vec<f64>)>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == header => {}
        other => return Err(Error::Parse(format!("expected header {header:?}, found {other:?}"))),
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != columns {
                return Err(Error::Parse(format!("expected {columns} fields in {line:?}")));
            }
            let iter = fields[0].parse().map_err(|e| Error::Parse(format!("bad iteration {:?}: {e}", fields[0])))?;
            let values = fields[1..]
                .iter()
                .map(|f| f.parse::<f64>().map_err(|e| Error::Parse(format!("bad value {f:?}: {e}"))))
                .collect::<Result<_>>()?;
            Ok((iter, values))
        })
        .collect()
}

pub fn write_metrics_csv(trace: &MetricsTrace, path: &Path) -> Result<()> {
    fs::write(path, trace.to_csv())?;
    Ok(())
}

pub fn write_consensus_csv(trace: &ConsensusTrace, path: &Path) -> Result<()> {
    fs::write(path, trace.to_csv())?;
    Ok(())
}
