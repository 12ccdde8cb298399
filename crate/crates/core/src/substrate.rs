//! What gets written into a perturbed region.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{ImageTensor, RectRegion, ScalarField2D};

/// Replacement content for perturbed pixels.
///
/// Parsed from `local-mean`, `zero`, `blur:<sigma>` or
/// `noise:<seed>:<amplitude>`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SubstrateKind {
    /// Per-channel mean of the original pixels inside the region.
    #[default]
    LocalMean,
    Zero,
    /// Separable Gaussian blur of the whole input, sampled inside the region.
    Blur {
        sigma: f32,
    },
    /// Uniform values in `[-amplitude, amplitude]`, a pure function of
    /// `(seed, c, i, j)`.
    UniformNoise {
        seed: u64,
        amplitude: f32,
    },
}

impl SubstrateKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SubstrateKind::Blur { sigma } if !(sigma > 0.0 && sigma.is_finite()) => {
                Err(Error::InvalidConfig(format!("blur sigma must be > 0, got {sigma}")))
            }
            SubstrateKind::UniformNoise { amplitude, .. } if !(amplitude >= 0.0 && amplitude.is_finite()) => {
                Err(Error::InvalidConfig(format!("noise amplitude must be >= 0, got {amplitude}")))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for SubstrateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubstrateKind::LocalMean => f.write_str("local-mean"),
            SubstrateKind::Zero => f.write_str("zero"),
            SubstrateKind::Blur { sigma } => write!(f, "blur:{sigma}"),
            SubstrateKind::UniformNoise { seed, amplitude } => write!(f, "noise:{seed}:{amplitude}"),
        }
    }
}

impl FromStr for SubstrateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("unknown substrate {s:?}"));
        let mut parts = s.split(':');
        let kind = match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some("local-mean"), None, _, _) => SubstrateKind::LocalMean,
            (Some("zero"), None, _, _) => SubstrateKind::Zero,
            (Some("blur"), Some(sigma), None, _) => {
                SubstrateKind::Blur { sigma: sigma.parse().map_err(|_| bad())? }
            }
            (Some("noise"), Some(seed), Some(amp), None) => SubstrateKind::UniformNoise {
                seed: seed.parse().map_err(|_| bad())?,
                amplitude: amp.parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        kind.validate()?;
        Ok(kind)
    }
}

impl TryFrom<String> for SubstrateKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SubstrateKind> for String {
    fn from(k: SubstrateKind) -> String {
        k.to_string()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based noise sample for element `(c, i, j)`.
pub fn noise_value(seed: u64, c: usize, i: usize, j: usize, amplitude: f32) -> f32 {
    let mut h = splitmix64(seed);
    for k in [c, i, j] {
        h = splitmix64(h ^ k as u64);
    }
    let u = (h >> 11) as f64 / (1u64 << 53) as f64;
    ((2.0 * u - 1.0) * amplitude as f64) as f32
}

fn gaussian_kernel(sigma: f32) -> Vec<f64> {
    let radius = (3.0 * sigma as f64).ceil() as isize;
    let s2 = 2.0 * (sigma as f64) * (sigma as f64);
    let raw: Vec<f64> = (-radius..=radius).map(|k| (-((k * k) as f64) / s2).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Separable Gaussian blur with radius `ceil(3 sigma)` and clamped edges.
pub fn gaussian_blur(x: &ImageTensor, sigma: f32) -> ImageTensor {
    let (c, h, w) = x.shape();
    let kernel = gaussian_kernel(sigma);
    let r = (kernel.len() / 2) as isize;
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let mut out = ImageTensor::zeros(c, h, w);
    let mut tmp = vec![0f64; h * w];
    for ch in 0..c {
        let plane = x.plane(ch);
        for i in 0..h {
            for j in 0..w {
                tmp[i * w + j] = kernel
                    .iter()
                    .enumerate()
                    .map(|(k, &kv)| kv * plane[i * w + clamp(j as isize + k as isize - r, w)] as f64)
                    .sum();
            }
        }
        for i in 0..h {
            for j in 0..w {
                let v: f64 = kernel
                    .iter()
                    .enumerate()
                    .map(|(k, &kv)| kv * tmp[clamp(i as isize + k as isize - r, h) * w + j])
                    .sum();
                out.set(ch, i, j, v as f32);
            }
        }
    }
    out
}

/// Builds the full-image replacement field for substrates that have one.
/// `LocalMean` depends on the region and returns `None`.
pub fn substrate_field(x: &ImageTensor, kind: SubstrateKind) -> Result<Option<ImageTensor>> {
    kind.validate()?;
    let (c, h, w) = x.shape();
    Ok(match kind {
        SubstrateKind::LocalMean => None,
        SubstrateKind::Zero => Some(ImageTensor::zeros(c, h, w)),
        SubstrateKind::Blur { sigma } => Some(gaussian_blur(x, sigma)),
        SubstrateKind::UniformNoise { seed, amplitude } => {
            Some(ImageTensor::from_fn(c, h, w, |ch, i, j| noise_value(seed, ch, i, j, amplitude)))
        }
    })
}

/// Perturbs many regions of one input, building the substrate field once.
#[derive(Debug, Clone)]
pub struct Perturber<'a> {
    x: &'a ImageTensor,
    field: Option<ImageTensor>,
}

impl<'a> Perturber<'a> {
    pub fn new(x: &'a ImageTensor, kind: SubstrateKind) -> Result<Self> {
        Ok(Self { x, field: substrate_field(x, kind)? })
    }

    pub fn apply(&self, region: RectRegion) -> Result<ImageTensor> {
        let x = self.x;
        let (c, h, w) = x.shape();
        region.check_fits(h, w)?;
        let mut out = x.clone();
        let rows = region.top..region.bottom();
        let cols = region.left..region.right();
        match &self.field {
            Some(field) => {
                for ch in 0..c {
                    for i in rows.clone() {
                        let a = x.index(ch, i, region.left);
                        let b = a + region.width;
                        out.values_mut()[a..b].copy_from_slice(&field.values()[a..b]);
                    }
                }
            }
            None => {
                let n = region.area() as f64;
                for ch in 0..c {
                    let sum: f64 = rows
                        .clone()
                        .flat_map(|i| cols.clone().map(move |j| (i, j)))
                        .map(|(i, j)| x.get(ch, i, j) as f64)
                        .sum();
                    let mean = (sum / n) as f32;
                    for i in rows.clone() {
                        let a = x.index(ch, i, region.left);
                        out.values_mut()[a..a + region.width].fill(mean);
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Replaces `region` of `x` with the chosen substrate; everything outside
/// the region is copied bit-for-bit.
pub fn perturb(x: &ImageTensor, region: RectRegion, kind: SubstrateKind) -> Result<ImageTensor> {
    Perturber::new(x, kind)?.apply(region)
}

/// The axis-aligned box covered by pixels with `keep < 1`, if those pixels
/// are all zero and fill the box exactly.
fn binary_hole(keep: &ScalarField2D) -> Option<RectRegion> {
    let (h, w) = keep.dims();
    let (mut top, mut left, mut bottom, mut right) = (h, w, 0, 0);
    let mut holes = 0;
    for i in 0..h {
        for j in 0..w {
            let v = keep.get(i, j);
            if v == 1.0 {
                continue;
            }
            if v != 0.0 {
                return None;
            }
            holes += 1;
            top = top.min(i);
            left = left.min(j);
            bottom = bottom.max(i + 1);
            right = right.max(j + 1);
        }
    }
    if holes == 0 {
        return None;
    }
    let region = RectRegion::new(top, left, bottom - top, right - left);
    (region.area() == holes).then_some(region)
}

/// `out = keep * x + (1 - keep) * substrate`, per pixel and channel.
///
/// `LocalMean` is only defined when the perturbed pixels form a single
/// binary rectangle; any other mask is rejected for it.
pub fn perturb_full_mask(x: &ImageTensor, keep: &ScalarField2D, kind: SubstrateKind) -> Result<ImageTensor> {
    let (c, h, w) = x.shape();
    if keep.dims() != (h, w) {
        return Err(Error::dim(format!("mask is {:?}, input plane is {h}x{w}", keep.dims())));
    }
    if kind == SubstrateKind::LocalMean {
        if keep.values().iter().all(|&v| v == 1.0) {
            return Ok(x.clone());
        }
        return match binary_hole(keep) {
            Some(region) => perturb(x, region, kind),
            None => Err(Error::UnsupportedSubstrate(
                kind.to_string(),
                "mask is not a single binary rectangle".into(),
            )),
        };
    }
    let field = substrate_field(x, kind)?.expect("non-local substrate has a field");
    let mut out = x.clone();
    let k = keep.values();
    for ch in 0..c {
        let base = ch * h * w;
        for (p, &m) in k.iter().enumerate() {
            let idx = base + p;
            out.values_mut()[idx] = if m == 1.0 {
                x.values()[idx]
            } else if m == 0.0 {
                field.values()[idx]
            } else {
                m * x.values()[idx] + (1.0 - m) * field.values()[idx]
            };
        }
    }
    Ok(out)
}
