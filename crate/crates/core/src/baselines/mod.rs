//! Fixed-budget perturbation baselines: randomized input sampling and
//! sliding-window occlusion.

mod occlusion;
mod rise;

pub use occlusion::{occlusion, placement_count, OcclusionConfig};
pub use rise::{rise, RiseConfig, RiseMaskSampler};

use crate::tensor::ScalarField2D;

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineRun {
    pub saliency: ScalarField2D,
    /// Every tensor scored, including any base score.
    pub oracle_calls: u64,
}
