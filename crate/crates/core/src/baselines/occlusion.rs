use serde::{Deserialize, Serialize};

use super::BaselineRun;
use crate::error::{Error, Result};
use crate::oracle::ScoringOracle;
use crate::substrate::{Perturber, SubstrateKind};
use crate::tensor::{ImageTensor, RectRegion, ScalarField2D};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OcclusionConfig {
    /// Square kernel side, pixels.
    pub kernel: usize,
    pub stride: usize,
    pub substrate: SubstrateKind,
    pub batch_size: usize,
}

impl Default for OcclusionConfig {
    fn default() -> Self {
        Self { kernel: 32, stride: 16, substrate: SubstrateKind::Zero, batch_size: 32 }
    }
}

impl OcclusionConfig {
    pub fn validate(&self, h: usize, w: usize) -> Result<()> {
        if !(1 <= self.stride && self.stride <= self.kernel && self.kernel <= h.min(w)) {
            return Err(Error::InvalidConfig(format!(
                "need 1 <= stride ({}) <= kernel ({}) <= min(h, w) ({})",
                self.stride,
                self.kernel,
                h.min(w)
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        self.substrate.validate()
    }
}

fn offsets(n: usize, kernel: usize, stride: usize) -> Vec<usize> {
    let count = (n - kernel).div_ceil(stride) + 1;
    (0..count).map(|t| (t * stride).min(n - kernel)).collect()
}

/// `(ceil((h - k) / s) + 1) * (ceil((w - k) / s) + 1)`.
pub fn placement_count(h: usize, w: usize, kernel: usize, stride: usize) -> usize {
    ((h - kernel).div_ceil(stride) + 1) * ((w - kernel).div_ceil(stride) + 1)
}

/// Slides a `kernel x kernel` occluder over the image in raster order. The
/// last row and column of placements are pinned to the image border. Each
/// placement adds `max(0, f(x) - f(x'))` over its footprint; overlaps sum.
///
/// `oracle_calls` is the placement count plus one for the base score.
pub fn occlusion<O: ScoringOracle + ?Sized>(
    x: &ImageTensor,
    oracle: &mut O,
    cfg: &OcclusionConfig,
) -> Result<BaselineRun> {
    let (_, h, w) = x.shape();
    cfg.validate(h, w)?;
    let perturber = Perturber::new(x, cfg.substrate)?;
    let regions: Vec<RectRegion> = offsets(h, cfg.kernel, cfg.stride)
        .into_iter()
        .flat_map(|top| {
            offsets(w, cfg.kernel, cfg.stride)
                .into_iter()
                .map(move |left| RectRegion::new(top, left, cfg.kernel, cfg.kernel))
        })
        .collect();

    let base = oracle.score_one(x)?;
    let mut acc = vec![0f64; h * w];
    for chunk in regions.chunks(cfg.batch_size) {
        let inputs = chunk.iter().map(|&r| perturber.apply(r)).collect::<Result<Vec<_>>>()?;
        let scores = oracle.score_batch(&inputs)?;
        for (r, score) in chunk.iter().zip(scores) {
            let delta = (base - score).max(0.0);
            if delta == 0.0 {
                continue;
            }
            for i in r.top..r.bottom() {
                for v in &mut acc[i * w + r.left..i * w + r.right()] {
                    *v += delta;
                }
            }
        }
    }
    let saliency = ScalarField2D::new(h, w, acc.into_iter().map(|v| v as f32).collect())?;
    Ok(BaselineRun { saliency, oracle_calls: regions.len() as u64 + 1 })
}
