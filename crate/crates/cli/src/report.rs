//! JSON reports. Their layout is published in `docs/report.schema.json`.

use std::fs;
use std::path::Path;

use anyhow::Context;
use hipe_core::hipe::LevelRecord;
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct MapReport<'a> {
    pub command: &'static str,
    pub method: &'static str,
    pub input: String,
    pub shape: [usize; 3],
    pub oracle: String,
    pub oracle_calls: u64,
    pub wall_time_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<&'a [LevelRecord]>,
}

#[derive(Debug, Serialize)]
pub struct RandomBaseline {
    pub maps: usize,
    pub seed: u64,
    pub mean_auc: f64,
    pub mean_normalized_auc: f64,
}

#[derive(Debug, Serialize)]
pub struct CurveReport {
    pub command: &'static str,
    pub metric: &'static str,
    pub map: String,
    pub input: String,
    pub oracle: String,
    pub step_frac: f64,
    pub points: usize,
    pub auc: f64,
    pub normalized_auc: f64,
    pub oracle_calls: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub random_baseline: Option<RandomBaseline>,
}

#[derive(Debug, Serialize)]
pub struct PointingReport {
    pub command: &'static str,
    pub metric: &'static str,
    pub map: String,
    pub region: String,
    pub tolerance_px: usize,
    pub argmax: [usize; 2],
    pub hit: bool,
}

#[derive(Debug, Serialize)]
pub struct BenchRow {
    pub method: &'static str,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calls: Option<u64>,
    pub samples_ms: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub insertion_auc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deletion_auc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub insertion_normalized_auc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deletion_normalized_auc: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct BenchReport {
    pub command: &'static str,
    pub input: String,
    pub oracle: String,
    pub repeats: usize,
    /// Method the ratios are relative to; absent when every method failed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    pub rows: Vec<BenchRow>,
}

pub fn write_json(value: &impl Serialize, path: &Path) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing report {}", path.display()))
}
