use hipe_core::baselines::{occlusion, rise};
use hipe_core::hipe::{hipe, LevelRecord};
use hipe_core::oracle::ScoringOracle;
use hipe_core::{ImageTensor, ScalarField2D};

use crate::config::{Method, RunConfig};

pub struct MethodOutcome {
    pub saliency: ScalarField2D,
    pub oracle_calls: u64,
    pub base_score: Option<f64>,
    pub levels: Option<Vec<LevelRecord>>,
}

pub fn run_method<O: ScoringOracle + ?Sized>(
    method: Method,
    cfg: &RunConfig,
    x: &ImageTensor,
    oracle: &mut O,
) -> hipe_core::Result<MethodOutcome> {
    Ok(match method {
        Method::Hipe => {
            let run = hipe(x, oracle, &cfg.hipe)?;
            MethodOutcome {
                saliency: run.saliency,
                oracle_calls: run.oracle_calls,
                base_score: Some(run.base_score),
                levels: Some(run.levels),
            }
        }
        Method::Rise => {
            let run = rise(x, oracle, &cfg.rise)?;
            MethodOutcome {
                saliency: run.saliency,
                oracle_calls: run.oracle_calls,
                base_score: None,
                levels: None,
            }
        }
        Method::Occlusion => {
            let run = occlusion(x, oracle, &cfg.occlusion)?;
            MethodOutcome {
                saliency: run.saliency,
                oracle_calls: run.oracle_calls,
                base_score: None,
                levels: None,
            }
        }
    })
}
