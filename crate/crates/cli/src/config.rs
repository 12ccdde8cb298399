use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context};
use clap::ValueEnum;
use hipe_core::baselines::{OcclusionConfig, RiseConfig};
use hipe_core::hipe::HiPeConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Hipe,
    Rise,
    Occlusion,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Hipe => "hipe",
            Method::Rise => "rise",
            Method::Occlusion => "occlusion",
        }
    }
}

/// One job: built-in defaults, then the JSON config file, then flags.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub method: Method,
    pub input: Option<PathBuf>,
    pub oracle: Option<String>,
    pub target: Option<usize>,
    pub oracle_workers: usize,
    pub oracle_timeout_secs: f64,
    pub out_map: Option<PathBuf>,
    pub out_png: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub hipe: HiPeConfig,
    pub rise: RiseConfig,
    pub occlusion: OcclusionConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            method: Method::Hipe,
            input: None,
            oracle: None,
            target: None,
            oracle_workers: 1,
            oracle_timeout_secs: hipe_core::oracle::DEFAULT_TIMEOUT.as_secs_f64(),
            out_map: None,
            out_png: None,
            report: None,
            hipe: HiPeConfig::default(),
            rise: RiseConfig::default(),
            occlusion: OcclusionConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn input(&self) -> anyhow::Result<&Path> {
        self.input.as_deref().context("no input given (use --input or the config's \"input\")")
    }

    pub fn oracle_spec(&self) -> anyhow::Result<&str> {
        self.oracle.as_deref().context("no oracle given (use --oracle or the config's \"oracle\")")
    }

    pub fn timeout(&self) -> anyhow::Result<Duration> {
        if !(self.oracle_timeout_secs > 0.0 && self.oracle_timeout_secs.is_finite()) {
            bail!("oracle timeout must be a positive number of seconds");
        }
        Ok(Duration::from_secs_f64(self.oracle_timeout_secs))
    }
}
