use std::fmt;
use std::time::Duration;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MethodCost {
    pub method: String,
    pub calls: u64,
    pub wall_time: Duration,
}

impl MethodCost {
    pub fn new(method: impl Into<String>, calls: u64, wall_time: Duration) -> Self {
        Self { method: method.into(), calls, wall_time }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficiencyRow {
    pub method: String,
    pub calls: u64,
    pub wall_time_ms: f64,
    /// `calls / reference calls`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficiencyReport {
    pub reference: String,
    pub rows: Vec<EfficiencyRow>,
}

/// Tabulates cost relative to the `hipe` row, or to the first row when no
/// method has that name.
pub fn efficiency_report(runs: &[MethodCost]) -> Result<EfficiencyReport> {
    let first = runs.first().ok_or_else(|| Error::InvalidConfig("no runs to report".into()))?;
    if let Some(r) = runs.iter().find(|r| r.calls == 0) {
        return Err(Error::InvalidConfig(format!("method {} reports zero oracle calls", r.method)));
    }
    let reference = runs.iter().find(|r| r.method.eq_ignore_ascii_case("hipe")).unwrap_or(first);
    let rows = runs
        .iter()
        .map(|r| EfficiencyRow {
            method: r.method.clone(),
            calls: r.calls,
            wall_time_ms: r.wall_time.as_secs_f64() * 1e3,
            ratio: r.calls as f64 / reference.calls as f64,
        })
        .collect();
    Ok(EfficiencyReport { reference: reference.method.clone(), rows })
}

impl fmt::Display for EfficiencyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<16} {:>10} {:>12} {:>10}", "method", "calls", "time (ms)", "ratio")?;
        for r in &self.rows {
            writeln!(f, "{:<16} {:>10} {:>12.2} {:>9.2}x", r.method, r.calls, r.wall_time_ms, r.ratio)?;
        }
        Ok(())
    }
}
