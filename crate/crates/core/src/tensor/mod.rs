//! Dense arrays shared by every saliency method.
//!
//! All storage is `f32`, row-major. [`ImageTensor`] is channel-major on top
//! of that: element `(c, i, j)` lives at `(c * height + i) * width + j`.

mod colormap;
mod heatmap;
pub mod hfa;
pub mod png;

pub use colormap::VIRIDIS;
pub use heatmap::{heatmap_rgb, render_heatmap};
pub use hfa::{load_array, read_hfa, save_array, write_hfa, HfaArray};
pub use png::{load_input, load_png, save_png};

use crate::error::{Error, Result};

/// A dense `height x width` map of reals: saliency maps, weight fields,
/// annotation masks.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField2D {
    height: usize,
    width: usize,
    values: Vec<f32>,
}

impl ScalarField2D {
    pub fn new(height: usize, width: usize, values: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::dim(format!("field dims must be positive, got {height}x{width}")));
        }
        if values.len() != height * width {
            return Err(Error::Length { expected: height * width, found: values.len() });
        }
        Ok(Self { height, width, values })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, 0.0)
    }

    pub fn filled(height: usize, width: usize, value: f32) -> Self {
        assert!(height > 0 && width > 0, "field dims must be positive");
        Self { height, width, values: vec![value; height * width] }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        assert!(height > 0 && width > 0, "field dims must be positive");
        let mut values = Vec::with_capacity(height * width);
        for i in 0..height {
            for j in 0..width {
                values.push(f(i, j));
            }
        }
        Self { height, width, values }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f32] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f32 {
        self.values[i * self.width + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f32) {
        self.values[i * self.width + j] = v;
    }

    pub fn min_max(&self) -> (f32, f32) {
        self.values.iter().fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// First index of the maximum in raster order, as `(row, col)`.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (k, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = k;
            }
        }
        (best / self.width, best % self.width)
    }

    pub fn first_non_finite(&self) -> Option<usize> {
        self.values.iter().position(|v| !v.is_finite())
    }
}

/// A `channels x height x width` input sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    channels: usize,
    height: usize,
    width: usize,
    values: Vec<f32>,
}

impl ImageTensor {
    pub fn new(channels: usize, height: usize, width: usize, values: Vec<f32>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::dim(format!("tensor dims must be positive, got {channels}x{height}x{width}")));
        }
        let expected = channels * height * width;
        if values.len() != expected {
            return Err(Error::Length { expected, found: values.len() });
        }
        Ok(Self { channels, height, width, values })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self::filled(channels, height, width, 0.0)
    }

    pub fn filled(channels: usize, height: usize, width: usize, value: f32) -> Self {
        assert!(channels > 0 && height > 0 && width > 0, "tensor dims must be positive");
        Self { channels, height, width, values: vec![value; channels * height * width] }
    }

    pub fn from_fn(
        channels: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Self {
        assert!(channels > 0 && height > 0 && width > 0, "tensor dims must be positive");
        let mut values = Vec::with_capacity(channels * height * width);
        for c in 0..channels {
            for i in 0..height {
                for j in 0..width {
                    values.push(f(c, i, j));
                }
            }
        }
        Self { channels, height, width, values }
    }

    /// Stacks one field per channel.
    pub fn from_field(field: &ScalarField2D, channels: usize) -> Self {
        let (h, w) = field.dims();
        Self::from_fn(channels, h, w, |_, i, j| field.get(i, j))
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f32] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    pub fn plane(&self, c: usize) -> &[f32] {
        let n = self.plane_len();
        &self.values[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn index(&self, c: usize, i: usize, j: usize) -> usize {
        (c * self.height + i) * self.width + j
    }

    #[inline]
    pub fn get(&self, c: usize, i: usize, j: usize) -> f32 {
        self.values[self.index(c, i, j)]
    }

    #[inline]
    pub fn set(&mut self, c: usize, i: usize, j: usize, v: f32) {
        let k = self.index(c, i, j);
        self.values[k] = v;
    }

    pub fn first_non_finite(&self) -> Option<usize> {
        self.values.iter().position(|v| !v.is_finite())
    }

    /// Per-pixel luminance, clamped to `[0, 1]`. Single-channel tensors are
    /// taken as-is; three or more channels use Rec. 601 weights on the first
    /// three; two channels are averaged.
    pub fn luminance(&self) -> ScalarField2D {
        let n = self.plane_len();
        let values = (0..n)
            .map(|k| {
                let v = match self.channels {
                    1 => self.values[k],
                    2 => 0.5 * (self.values[k] + self.values[n + k]),
                    _ => 0.299 * self.values[k] + 0.587 * self.values[n + k] + 0.114 * self.values[2 * n + k],
                };
                v.clamp(0.0, 1.0)
            })
            .collect();
        ScalarField2D { height: self.height, width: self.width, values }
    }
}

/// An axis-aligned pixel rectangle `[top, top + height) x [left, left + width)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RectRegion {
    pub top: usize,
    pub left: usize,
    pub height: usize,
    pub width: usize,
}

impl RectRegion {
    pub fn new(top: usize, left: usize, height: usize, width: usize) -> Self {
        Self { top, left, height, width }
    }

    pub fn bottom(&self) -> usize {
        self.top + self.height
    }

    pub fn right(&self) -> usize {
        self.left + self.width
    }

    pub fn area(&self) -> usize {
        self.height * self.width
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i >= self.top && i < self.bottom() && j >= self.left && j < self.right()
    }

    pub fn check_fits(&self, height: usize, width: usize) -> Result<()> {
        if self.height == 0 || self.width == 0 {
            return Err(Error::dim(format!("empty region {self:?}")));
        }
        if self.bottom() > height || self.right() > width {
            return Err(Error::dim(format!("region {self:?} exceeds {height}x{width}")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_lengths() {
        assert!(matches!(
            ScalarField2D::new(2, 3, vec![0.0; 5]),
            Err(Error::Length { expected: 6, found: 5 })
        ));
        assert!(ImageTensor::new(1, 4, 4, vec![0.0; 12]).is_err());
        assert!(ScalarField2D::new(0, 3, vec![]).is_err());
    }

    #[test]
    fn argmax_breaks_ties_in_raster_order() {
        let f = ScalarField2D::new(2, 2, vec![1.0, 3.0, 3.0, 0.0]).unwrap();
        assert_eq!(f.argmax(), (0, 1));
    }

    #[test]
    fn tensor_layout_is_channel_major() {
        let t = ImageTensor::from_fn(2, 2, 3, |c, i, j| (c * 100 + i * 10 + j) as f32);
        assert_eq!(t.values()[t.index(1, 1, 2)], 112.0);
        assert_eq!(t.plane(1)[0], 100.0);
    }

    #[test]
    fn region_bounds() {
        let r = RectRegion::new(2, 2, 2, 2);
        assert!(r.check_fits(4, 4).is_ok());
        assert!(r.check_fits(3, 4).is_err());
        assert!(r.contains(3, 3));
        assert!(!r.contains(4, 3));
    }
}
