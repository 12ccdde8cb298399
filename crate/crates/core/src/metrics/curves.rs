use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::oracle::ScoringOracle;
use crate::substrate::gaussian_blur;
use crate::tensor::{ImageTensor, ScalarField2D};

pub const DEFAULT_STEP_FRAC: f64 = 0.01;
pub const DEFAULT_BLUR_SIGMA: f32 = 10.0;
const CURVE_BATCH: usize = 16;

/// Model score as a function of the fraction of pixels changed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricCurve {
    /// `(fraction, score)`, fractions strictly increasing from 0 to 1.
    pub points: Vec<(f64, f64)>,
    /// Trapezoidal area under the raw scores.
    pub auc: f64,
}

pub fn trapezoid_auc(points: &[(f64, f64)]) -> f64 {
    points.windows(2).map(|p| (p[1].0 - p[0].0) * (p[0].1 + p[1].1) / 2.0).sum()
}

impl MetricCurve {
    pub fn new(points: Vec<(f64, f64)>) -> Self {
        let auc = trapezoid_auc(&points);
        Self { points, auc }
    }

    pub fn scores(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.1)
    }

    pub fn score_range(&self) -> (f64, f64) {
        self.scores().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s), hi.max(s)))
    }

    /// AUC after mapping scores through `(s - lo) / (hi - lo)`.
    pub fn auc_on_scale(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        (self.auc - lo) / (hi - lo)
    }

    /// AUC after min-max normalizing this curve's own scores. A flat curve
    /// normalizes to 0.
    pub fn normalized_auc(&self) -> f64 {
        let (lo, hi) = self.score_range();
        self.auc_on_scale(lo, hi)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "fraction,score")?;
        for (f, s) in &self.points {
            writeln!(out, "{f},{s}")?;
        }
        Ok(())
    }
}

/// Pixel indices by descending saliency, ties in raster order.
pub fn saliency_order(map: &ScalarField2D) -> Result<Vec<usize>> {
    if let Some(k) = map.first_non_finite() {
        return Err(Error::NonFinite(k));
    }
    let v = map.values();
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[b].total_cmp(&v[a]));
    Ok(order)
}

/// `0, s, 2s, ...` capped by a final `1.0`.
pub fn step_fractions(step_frac: f64) -> Result<Vec<f64>> {
    if !(step_frac > 0.0 && step_frac <= 1.0) {
        return Err(Error::InvalidConfig(format!("step fraction must lie in (0, 1], got {step_frac}")));
    }
    let steps = ((1.0 / step_frac) - 1e-9).ceil() as usize;
    let mut f: Vec<f64> = (0..steps).map(|k| k as f64 * step_frac).collect();
    f.push(1.0);
    Ok(f)
}

fn causal_curve<O: ScoringOracle + ?Sized>(
    start: &ImageTensor,
    end: &ImageTensor,
    map: &ScalarField2D,
    oracle: &mut O,
    step_frac: f64,
) -> Result<MetricCurve> {
    let (c, h, w) = start.shape();
    if map.dims() != (h, w) {
        return Err(Error::dim(format!("map is {:?}, input plane is {h}x{w}", map.dims())));
    }
    let fractions = step_fractions(step_frac)?;
    let order = saliency_order(map)?;
    let n = h * w;

    let mut current = start.clone();
    let mut done = 0usize;
    let mut scores = Vec::with_capacity(fractions.len());
    let mut pending = Vec::with_capacity(CURVE_BATCH);
    for (k, &f) in fractions.iter().enumerate() {
        let target = if k + 1 == fractions.len() { n } else { ((f * n as f64).round() as usize).min(n) };
        for &p in &order[done..target.max(done)] {
            for ch in 0..c {
                let idx = ch * n + p;
                current.values_mut()[idx] = end.values()[idx];
            }
        }
        done = done.max(target);
        pending.push(current.clone());
        if pending.len() == CURVE_BATCH || k + 1 == fractions.len() {
            scores.extend(oracle.score_batch(&pending)?);
            pending.clear();
        }
    }
    Ok(MetricCurve::new(fractions.into_iter().zip(scores).collect()))
}

/// Removes pixels in descending saliency order, replacing every channel
/// with zero.
pub fn deletion_curve<O: ScoringOracle + ?Sized>(
    x: &ImageTensor,
    map: &ScalarField2D,
    oracle: &mut O,
    step_frac: f64,
) -> Result<MetricCurve> {
    let (c, h, w) = x.shape();
    causal_curve(x, &ImageTensor::zeros(c, h, w), map, oracle, step_frac)
}

/// Starts from a blurred copy and reveals original pixels in descending
/// saliency order.
pub fn insertion_curve<O: ScoringOracle + ?Sized>(
    x: &ImageTensor,
    map: &ScalarField2D,
    oracle: &mut O,
    step_frac: f64,
    blur_sigma: f32,
) -> Result<MetricCurve> {
    if !(blur_sigma > 0.0 && blur_sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!("blur sigma must be > 0, got {blur_sigma}")));
    }
    causal_curve(&gaussian_blur(x, blur_sigma), x, map, oracle, step_frac)
}
