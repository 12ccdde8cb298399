//! Synthetic inputs with known salient regions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::substrate::gaussian_blur;
use crate::tensor::{ImageTensor, RectRegion, ScalarField2D};

/// A centred disc of the given diameter (value 1 on a zero background),
/// softened by a Gaussian blur of `sigma = diameter / 4`.
pub fn blob_image(channels: usize, h: usize, w: usize, diameter: f32) -> ImageTensor {
    let (cy, cx) = ((h as f32 - 1.0) / 2.0, (w as f32 - 1.0) / 2.0);
    let r = diameter / 2.0;
    let disc = ImageTensor::from_fn(channels, h, w, |_, i, j| {
        let (dy, dx) = (i as f32 - cy, j as f32 - cx);
        if dy * dy + dx * dx <= r * r {
            1.0
        } else {
            0.0
        }
    });
    gaussian_blur(&disc, (diameter / 4.0).max(0.5))
}

/// Square bounding box of [`blob_image`]'s disc.
pub fn blob_bounds(h: usize, w: usize, diameter: f32) -> RectRegion {
    let r = diameter / 2.0;
    let (cy, cx) = ((h as f32 - 1.0) / 2.0, (w as f32 - 1.0) / 2.0);
    let top = (cy - r).ceil().max(0.0) as usize;
    let left = (cx - r).ceil().max(0.0) as usize;
    let bottom = ((cy + r).floor() as usize + 1).min(h);
    let right = ((cx + r).floor() as usize + 1).min(w);
    RectRegion::new(top, left, bottom - top, right - left)
}

/// Bounding box of the pixels that are nonzero in any channel.
pub fn support_bounds(x: &ImageTensor) -> Option<RectRegion> {
    let (c, h, w) = x.shape();
    let (mut top, mut left, mut bottom, mut right) = (h, w, 0, 0);
    for i in 0..h {
        for j in 0..w {
            if (0..c).any(|ch| x.get(ch, i, j) != 0.0) {
                top = top.min(i);
                left = left.min(j);
                bottom = bottom.max(i + 1);
                right = right.max(j + 1);
            }
        }
    }
    (bottom > 0).then(|| RectRegion::new(top, left, bottom - top, right - left))
}

/// A map of independent uniform `[0, 1)` values, used as a random-ordering
/// baseline for the causal metrics.
pub fn random_map(seed: u64, h: usize, w: usize) -> ScalarField2D {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ScalarField2D::from_fn(h, w, |_, _| rng.random())
}

/// 1 inside `region`, 0 elsewhere.
pub fn region_mask(h: usize, w: usize, region: RectRegion) -> ScalarField2D {
    ScalarField2D::from_fn(h, w, |i, j| if region.contains(i, j) { 1.0 } else { 0.0 })
}

/// An input whose ground-truth salience is a single rectangular block.
#[derive(Debug, Clone)]
pub struct HotBlockScene {
    pub x: ImageTensor,
    pub weights: ScalarField2D,
    pub block: RectRegion,
}

pub const BLOCK_WEIGHT: f32 = 1.0;
pub const BACKGROUND_WEIGHT: f32 = 0.1;

/// Places a `side x side` block uniformly at random. Weights are
/// [`BLOCK_WEIGHT`] inside and [`BACKGROUND_WEIGHT`] outside; pixel values
/// are uniform in `[0.5, 1)` inside the block and `[0, 0.5)` outside.
pub fn hot_block_scene(seed: u64, channels: usize, h: usize, w: usize, side: usize) -> HotBlockScene {
    assert!(side <= h && side <= w, "block must fit the image");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let top = rng.random_range(0..=h - side);
    let left = rng.random_range(0..=w - side);
    let block = RectRegion::new(top, left, side, side);
    let weights =
        ScalarField2D::from_fn(
            h,
            w,
            |i, j| {
                if block.contains(i, j) {
                    BLOCK_WEIGHT
                } else {
                    BACKGROUND_WEIGHT
                }
            },
        );
    let x = ImageTensor::from_fn(channels, h, w, |_, i, j| {
        let u: f32 = rng.random();
        if block.contains(i, j) {
            0.5 + 0.5 * u
        } else {
            0.5 * u
        }
    });
    HotBlockScene { x, weights, block }
}
