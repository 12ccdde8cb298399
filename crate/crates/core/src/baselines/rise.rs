use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::BaselineRun;
use crate::error::{Error, Result};
use crate::oracle::ScoringOracle;
use crate::substrate::{perturb_full_mask, SubstrateKind};
use crate::tensor::{ImageTensor, ScalarField2D};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RiseConfig {
    pub n_masks: usize,
    /// Side length of the low-resolution binary grid.
    pub grid: usize,
    /// Probability that a grid cell is kept.
    pub keep_prob: f64,
    pub seed: u64,
    pub batch_size: usize,
}

impl Default for RiseConfig {
    fn default() -> Self {
        Self { n_masks: 8000, grid: 7, keep_prob: 0.5, seed: 1, batch_size: 32 }
    }
}

impl RiseConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_masks == 0 {
            return Err(Error::InvalidConfig("n_masks must be >= 1".into()));
        }
        if self.grid < 2 {
            return Err(Error::InvalidConfig(format!("grid must be >= 2, got {}", self.grid)));
        }
        if !(self.keep_prob > 0.0 && self.keep_prob < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "keep_prob must lie in (0, 1), got {}",
                self.keep_prob
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Draws the smooth random masks: a Bernoulli grid, bilinearly upsampled
/// to `(grid + 1)` cells' worth of pixels, then cropped at a random
/// sub-cell offset.
#[derive(Debug, Clone)]
pub struct RiseMaskSampler {
    rng: ChaCha8Rng,
    grid: usize,
    keep_prob: f64,
    h: usize,
    w: usize,
    cell_h: usize,
    cell_w: usize,
}

impl RiseMaskSampler {
    pub fn new(cfg: &RiseConfig, h: usize, w: usize) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            grid: cfg.grid,
            keep_prob: cfg.keep_prob,
            h,
            w,
            cell_h: h.div_ceil(cfg.grid),
            cell_w: w.div_ceil(cfg.grid),
        }
    }

    pub fn next_mask(&mut self) -> ScalarField2D {
        let g = self.grid;
        let cells: Vec<f32> =
            (0..g * g).map(|_| if self.rng.random_bool(self.keep_prob) { 1.0 } else { 0.0 }).collect();
        let dy = self.rng.random_range(0..self.cell_h);
        let dx = self.rng.random_range(0..self.cell_w);
        let up_h = (g + 1) * self.cell_h;
        let up_w = (g + 1) * self.cell_w;

        // Source coordinate of an upsampled pixel centre on the grid.
        let axis = |u: usize, up: usize| -> (usize, usize, f32) {
            let src = ((u as f64 + 0.5) * g as f64 / up as f64 - 0.5).clamp(0.0, (g - 1) as f64);
            let lo = src.floor() as usize;
            let hi = (lo + 1).min(g - 1);
            (lo, hi, (src - lo as f64) as f32)
        };
        let cols: Vec<_> = (0..self.w).map(|j| axis(j + dx, up_w)).collect();
        ScalarField2D::from_fn(self.h, self.w, |i, j| {
            let (y0, y1, fy) = axis(i + dy, up_h);
            let (x0, x1, fx) = cols[j];
            let top = cells[y0 * g + x0] * (1.0 - fx) + cells[y0 * g + x1] * fx;
            let bottom = cells[y1 * g + x0] * (1.0 - fx) + cells[y1 * g + x1] * fx;
            top * (1.0 - fy) + bottom * fy
        })
    }
}

/// Score-weighted average of random dimming masks, normalized by
/// `n_masks * keep_prob`. Costs exactly `n_masks` oracle calls.
pub fn rise<O: ScoringOracle + ?Sized>(
    x: &ImageTensor,
    oracle: &mut O,
    cfg: &RiseConfig,
) -> Result<BaselineRun> {
    cfg.validate()?;
    let (_, h, w) = x.shape();
    let mut sampler = RiseMaskSampler::new(cfg, h, w);
    let mut acc = vec![0f64; h * w];
    let mut remaining = cfg.n_masks;
    let mut calls = 0u64;
    while remaining > 0 {
        let n = remaining.min(cfg.batch_size);
        let masks: Vec<ScalarField2D> = (0..n).map(|_| sampler.next_mask()).collect();
        let inputs =
            masks.iter().map(|m| perturb_full_mask(x, m, SubstrateKind::Zero)).collect::<Result<Vec<_>>>()?;
        let scores = oracle.score_batch(&inputs)?;
        for (mask, score) in masks.iter().zip(scores) {
            for (a, &m) in acc.iter_mut().zip(mask.values()) {
                *a += score * m as f64;
            }
        }
        calls += n as u64;
        remaining -= n;
    }
    let norm = cfg.n_masks as f64 * cfg.keep_prob;
    let saliency = ScalarField2D::new(h, w, acc.into_iter().map(|v| (v / norm) as f32).collect())?;
    Ok(BaselineRun { saliency, oracle_calls: calls })
}
