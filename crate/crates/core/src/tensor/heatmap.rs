use std::path::Path;

use image::RgbImage;

use super::colormap::VIRIDIS;
use super::{ImageTensor, ScalarField2D};
use crate::error::{Error, Result};

fn colormap_index(v: f32, lo: f32, hi: f32) -> usize {
    if hi <= lo {
        return 128;
    }
    let t = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
    (t * 255.0).round() as usize
}

/// Colormaps `map` into an RGB image, optionally blended half-and-half over
/// the luminance of `overlay`. The map is min-max normalized first; a
/// constant map lands on the middle of the table.
pub fn heatmap_rgb(map: &ScalarField2D, overlay: Option<&ImageTensor>) -> Result<RgbImage> {
    if let Some(k) = map.first_non_finite() {
        return Err(Error::NonFinite(k));
    }
    let (h, w) = map.dims();
    let lum = match overlay {
        Some(o) if (o.height(), o.width()) != (h, w) => {
            return Err(Error::dim(format!("overlay is {}x{}, map is {h}x{w}", o.height(), o.width())))
        }
        Some(o) => Some(o.luminance()),
        None => None,
    };
    let (lo, hi) = map.min_max();
    let mut img = RgbImage::new(w as u32, h as u32);
    for i in 0..h {
        for j in 0..w {
            let mut rgb = VIRIDIS[colormap_index(map.get(i, j), lo, hi)];
            if let Some(lum) = &lum {
                let g = lum.get(i, j) * 255.0;
                for ch in rgb.iter_mut() {
                    *ch = (0.5 * *ch as f32 + 0.5 * g).round().clamp(0.0, 255.0) as u8;
                }
            }
            img.put_pixel(j as u32, i as u32, image::Rgb(rgb));
        }
    }
    Ok(img)
}

pub fn render_heatmap(
    map: &ScalarField2D,
    out: impl AsRef<Path>,
    overlay: Option<&ImageTensor>,
) -> Result<()> {
    let img = heatmap_rgb(map, overlay)?;
    img.save_with_format(out, image::ImageFormat::Png)?;
    Ok(())
}
