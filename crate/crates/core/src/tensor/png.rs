//! PNG decode into [`ImageTensor`] and encode back to 8-bit.
//!
//! Grayscale decodes to one channel, everything else to three, all scaled
//! to `[0, 1]`. Alpha is dropped.

use std::path::Path;

use image::{DynamicImage, GrayImage, RgbImage};

use super::ImageTensor;
use crate::error::{Error, Result};

pub fn decode_png(bytes: &[u8]) -> Result<ImageTensor> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)?;
    Ok(from_dynamic(img))
}

pub fn load_png(path: impl AsRef<Path>) -> Result<ImageTensor> {
    let img = image::ImageReader::open(path)?.with_guessed_format()?.decode()?;
    Ok(from_dynamic(img))
}

fn from_dynamic(img: DynamicImage) -> ImageTensor {
    let (w, h) = (img.width() as usize, img.height() as usize);
    if img.color().has_color() {
        let rgb = img.to_rgb8();
        ImageTensor::from_fn(3, h, w, |c, i, j| rgb.get_pixel(j as u32, i as u32)[c] as f32 / 255.0)
    } else {
        let gray = img.to_luma8();
        ImageTensor::from_fn(1, h, w, |_, i, j| gray.get_pixel(j as u32, i as u32)[0] as f32 / 255.0)
    }
}

/// Writes a 1- or 3-channel tensor with values in `[0, 1]` as 8-bit PNG.
pub fn save_png(t: &ImageTensor, path: impl AsRef<Path>) -> Result<()> {
    let (c, h, w) = t.shape();
    let q = |v: f32| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    match c {
        1 => {
            let img = GrayImage::from_fn(w as u32, h as u32, |x, y| {
                image::Luma([q(t.get(0, y as usize, x as usize))])
            });
            img.save_with_format(path, image::ImageFormat::Png)?;
        }
        3 => {
            let img = RgbImage::from_fn(w as u32, h as u32, |x, y| {
                let (i, j) = (y as usize, x as usize);
                image::Rgb([q(t.get(0, i, j)), q(t.get(1, i, j)), q(t.get(2, i, j))])
            });
            img.save_with_format(path, image::ImageFormat::Png)?;
        }
        _ => return Err(Error::dim(format!("PNG output needs 1 or 3 channels, got {c}"))),
    }
    Ok(())
}

/// Loads an input sample by extension: `.hfa` as an array file, anything
/// else as PNG.
pub fn load_input(path: impl AsRef<Path>) -> Result<ImageTensor> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("hfa") => Ok(super::load_array(path)?.into_tensor()),
        _ => load_png(path),
    }
}
