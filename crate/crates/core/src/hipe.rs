//! Hierarchical perturbation.
//!
//! The image is covered by a coarse `d x d` cell grid. Every overlapping
//! 2x2 block of cells is a candidate mask; masks whose footprint contains
//! a saliency value at or above the current threshold (mid-range of the map
//! by default) have their footprint replaced by the substrate and are
//! scored. The drop in score, clipped at zero, is added over the footprint.
//! The grid then doubles and the process repeats on the refined map until
//! cells would become smaller than 4 pixels per side, no mask passes, or a
//! level contributes nothing.
//!
//! Three choices fill gaps in the basic recipe:
//!
//! * each level is thresholded against the map as it stood when the level
//!   started, and all of that level's deltas are applied afterwards in
//!   anchor raster order, so results do not depend on batching;
//! * the base score `f(x)` is computed once per run;
//! * when `h` or `w` is not divisible by `d`, cells are `floor(h/d)` by
//!   `floor(w/d)` and the last row and column of cells absorb the remainder,
//!   so footprints always tile the whole image.
//!
//! Deltas are attributed to the perturbed footprint itself.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::ScoringOracle;
use crate::substrate::{Perturber, SubstrateKind};
use crate::tensor::{ImageTensor, RectRegion, ScalarField2D};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdMode {
    /// `min + (max - min) / 2` of the current map.
    #[default]
    MidRange,
    /// Arithmetic mean of the current map.
    Mean,
    /// Every candidate mask passes. Gives the unpruned upper bound on cost.
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HiPeConfig {
    pub substrate: SubstrateKind,
    pub threshold_mode: ThresholdMode,
    /// Keep negative deltas (perturbations that raise the score) instead of
    /// clipping them to zero.
    pub signed_mode: bool,
    /// Number of perturbed inputs per `score_batch` call.
    pub batch_size: usize,
    /// Stop after this many levels.
    pub max_levels: Option<usize>,
}

impl Default for HiPeConfig {
    fn default() -> Self {
        Self {
            substrate: SubstrateKind::LocalMean,
            threshold_mode: ThresholdMode::MidRange,
            signed_mode: false,
            batch_size: 32,
            max_levels: None,
        }
    }
}

impl HiPeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        if self.max_levels == Some(0) {
            return Err(Error::InvalidConfig("max_levels must be >= 1".into()));
        }
        self.substrate.validate()
    }
}

/// One candidate mask: the 2x2 cell block anchored at `(row, col)` on a
/// `d x d` grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MaskGrid {
    pub d: usize,
    pub row: usize,
    pub col: usize,
}

/// Pixel span `[start, end)` of cell `idx` along an axis of length `n`.
fn cell_span(idx: usize, d: usize, n: usize) -> (usize, usize) {
    let size = n / d;
    let start = idx * size;
    let end = if idx + 1 == d { n } else { start + size };
    (start, end)
}

impl MaskGrid {
    pub fn new(d: usize, row: usize, col: usize) -> Self {
        assert!(d >= 2 && row + 2 <= d && col + 2 <= d, "2x2 block must fit the grid");
        Self { d, row, col }
    }

    /// The pixel rectangle covered by the mask's four cells on an `h x w`
    /// image.
    pub fn footprint(&self, h: usize, w: usize) -> RectRegion {
        let (top, _) = cell_span(self.row, self.d, h);
        let (_, bottom) = cell_span(self.row + 1, self.d, h);
        let (left, _) = cell_span(self.col, self.d, w);
        let (_, right) = cell_span(self.col + 1, self.d, w);
        RectRegion::new(top, left, bottom - top, right - left)
    }
}

/// `ceil(log2(min(h, w)))`.
pub fn initial_grid_resolution(h: usize, w: usize) -> Result<usize> {
    let m = h.min(w);
    if m < 8 {
        return Err(Error::InputTooSmall(m));
    }
    let mut d = 0;
    while (1usize << d) < m {
        d += 1;
    }
    Ok(d)
}

fn threshold_of(values: &[f64], mode: ThresholdMode) -> f64 {
    match mode {
        ThresholdMode::MidRange => {
            let (lo, hi) =
                values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
            lo + (hi - lo) / 2.0
        }
        ThresholdMode::Mean => values.iter().sum::<f64>() / values.len() as f64,
        ThresholdMode::Off => f64::NEG_INFINITY,
    }
}

pub fn threshold_value(s: &ScalarField2D, mode: ThresholdMode) -> f64 {
    let values: Vec<f64> = s.values().iter().map(|&v| v as f64).collect();
    threshold_of(&values, mode)
}

fn enumerate_on(d: usize, values: &[f64], h: usize, w: usize, mode: ThresholdMode) -> Vec<MaskGrid> {
    assert!(d >= 2, "grid needs at least 2 cells per side");
    let threshold = threshold_of(values, mode);
    let mut cell_max = vec![f64::NEG_INFINITY; d * d];
    for r in 0..d {
        let (r0, r1) = cell_span(r, d, h);
        for c in 0..d {
            let (c0, c1) = cell_span(c, d, w);
            let mut m = f64::NEG_INFINITY;
            for i in r0..r1 {
                for &v in &values[i * w + c0..i * w + c1] {
                    m = m.max(v);
                }
            }
            cell_max[r * d + c] = m;
        }
    }
    let mut out = Vec::new();
    for r in 0..d - 1 {
        for c in 0..d - 1 {
            let m = cell_max[r * d + c]
                .max(cell_max[r * d + c + 1])
                .max(cell_max[(r + 1) * d + c])
                .max(cell_max[(r + 1) * d + c + 1]);
            if mode == ThresholdMode::Off || m >= threshold {
                out.push(MaskGrid { d, row: r, col: c });
            }
        }
    }
    out
}

/// All `(d-1)^2` anchors whose footprint maximum of `s` reaches the
/// threshold, in raster order of anchors.
pub fn enumerate_masks(d: usize, s: &ScalarField2D, mode: ThresholdMode) -> Vec<MaskGrid> {
    let values: Vec<f64> = s.values().iter().map(|&v| v as f64).collect();
    enumerate_on(d, &values, s.height(), s.width(), mode)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskOutcome {
    pub mask: MaskGrid,
    pub region: RectRegion,
    pub score: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelRecord {
    pub d: usize,
    pub threshold: f64,
    pub masks_enumerated: usize,
    pub masks_passed: usize,
    pub calls: u64,
    #[serde(skip)]
    pub outcomes: Vec<MaskOutcome>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HiPeRun {
    pub saliency: ScalarField2D,
    pub base_score: f64,
    /// Base score plus every scored mask.
    pub oracle_calls: u64,
    pub levels: Vec<LevelRecord>,
}

impl HiPeRun {
    pub fn masks_passed(&self) -> usize {
        self.levels.iter().map(|l| l.masks_passed).sum()
    }
}

/// Computes a hierarchical perturbation saliency map for `x`.
pub fn hipe<O: ScoringOracle + ?Sized>(x: &ImageTensor, oracle: &mut O, cfg: &HiPeConfig) -> Result<HiPeRun> {
    cfg.validate()?;
    let (_, h, w) = x.shape();
    let mut d = initial_grid_resolution(h, w)?;
    if let Some(k) = x.first_non_finite() {
        return Err(Error::NonFinite(k));
    }
    let perturber = Perturber::new(x, cfg.substrate)?;
    let base = oracle.score_one(x)?;
    let mut calls = 1u64;
    let mut acc = vec![0f64; h * w];
    let mut levels = Vec::new();

    loop {
        let threshold = threshold_of(&acc, cfg.threshold_mode);
        let masks = enumerate_on(d, &acc, h, w, cfg.threshold_mode);
        if masks.is_empty() {
            break;
        }
        let mut outcomes = Vec::with_capacity(masks.len());
        for chunk in masks.chunks(cfg.batch_size) {
            let regions: Vec<RectRegion> = chunk.iter().map(|m| m.footprint(h, w)).collect();
            let inputs = regions.iter().map(|&r| perturber.apply(r)).collect::<Result<Vec<_>>>()?;
            let scores = oracle.score_batch(&inputs)?;
            if scores.len() != chunk.len() {
                return Err(Error::Protocol(format!(
                    "oracle returned {} scores for {} inputs",
                    scores.len(),
                    chunk.len()
                )));
            }
            for ((&mask, region), score) in chunk.iter().zip(regions).zip(scores) {
                let drop = base - score;
                let delta = if cfg.signed_mode { drop } else { drop.max(0.0) };
                outcomes.push(MaskOutcome { mask, region, score, delta });
            }
        }

        let mut contributed = 0.0;
        for o in &outcomes {
            if o.delta == 0.0 {
                continue;
            }
            contributed += o.delta.abs();
            let r = o.region;
            for i in r.top..r.bottom() {
                for v in &mut acc[i * w + r.left..i * w + r.right()] {
                    *v += o.delta;
                }
            }
        }

        let passed = outcomes.len();
        calls += passed as u64;
        levels.push(LevelRecord {
            d,
            threshold,
            masks_enumerated: (d - 1) * (d - 1),
            masks_passed: passed,
            calls: passed as u64,
            outcomes,
        });
        log::debug!("level d={d}: {passed} masks scored, threshold {threshold}");

        if contributed == 0.0 || cfg.max_levels.is_some_and(|m| levels.len() >= m) {
            break;
        }
        d *= 2;
        if 4 * d > h.min(w) {
            break;
        }
    }

    let saliency = ScalarField2D::new(h, w, acc.into_iter().map(|v| v as f32).collect())?;
    Ok(HiPeRun { saliency, base_score: base, oracle_calls: calls, levels })
}
