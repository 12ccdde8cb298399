//! Evaluation: insertion/deletion curves, the pointing game, cost tables.

mod curves;
mod efficiency;
mod pointing;
mod rank;

pub use curves::{
    deletion_curve, insertion_curve, saliency_order, step_fractions, trapezoid_auc, MetricCurve,
    DEFAULT_BLUR_SIGMA, DEFAULT_STEP_FRAC,
};
pub use efficiency::{efficiency_report, EfficiencyReport, EfficiencyRow, MethodCost};
pub use pointing::{pointing_game, PointingTally};
pub use rank::{average_ranks, rank_correlation};
