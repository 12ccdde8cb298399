use serde::Serialize;

use crate::error::{Error, Result};
use crate::tensor::ScalarField2D;

/// Whether the map's maximum (first in raster order) lands inside the
/// annotation, dilated by `tolerance_px` in every direction. Annotation
/// pixels are those above 0.5.
pub fn pointing_game(map: &ScalarField2D, target: &ScalarField2D, tolerance_px: usize) -> Result<bool> {
    if map.dims() != target.dims() {
        return Err(Error::dim(format!("map is {:?}, annotation is {:?}", map.dims(), target.dims())));
    }
    if !target.values().iter().any(|&v| v > 0.5) {
        return Err(Error::InvalidAnnotation("target region is empty".into()));
    }
    if let Some(k) = map.first_non_finite() {
        return Err(Error::NonFinite(k));
    }
    let (h, w) = map.dims();
    let (pi, pj) = map.argmax();
    let rows = pi.saturating_sub(tolerance_px)..(pi + tolerance_px + 1).min(h);
    let cols = pj.saturating_sub(tolerance_px)..(pj + tolerance_px + 1).min(w);
    Ok(rows.into_iter().any(|i| cols.clone().any(|j| target.get(i, j) > 0.5)))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PointingTally {
    pub hits: u64,
    pub misses: u64,
}

impl PointingTally {
    pub fn record(&mut self, hit: bool) {
        if hit {
            self.hits += 1;
        } else {
            self.misses += 1;
        }
    }

    pub fn accuracy(&self) -> Option<f64> {
        let total = self.hits + self.misses;
        (total > 0).then(|| self.hits as f64 / total as f64)
    }
}
