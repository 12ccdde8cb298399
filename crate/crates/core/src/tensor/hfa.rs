//! The HFA array file format.
//!
//! ```text
//! "HFA1" | u8 rank (2 or 3) | rank x u32 LE dims | prod(dims) x f32 LE
//! ```
//!
//! Rank 2 holds a [`ScalarField2D`] as `(height, width)`; rank 3 holds an
//! [`ImageTensor`] as `(channels, height, width)`.

use std::fs;
use std::path::Path;

use super::{ImageTensor, ScalarField2D};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"HFA1";

#[derive(Debug, Clone, PartialEq)]
pub enum HfaArray {
    Field(ScalarField2D),
    Tensor(ImageTensor),
}

impl HfaArray {
    pub fn dims(&self) -> Vec<usize> {
        match self {
            HfaArray::Field(f) => vec![f.height(), f.width()],
            HfaArray::Tensor(t) => vec![t.channels(), t.height(), t.width()],
        }
    }

    pub fn values(&self) -> &[f32] {
        match self {
            HfaArray::Field(f) => f.values(),
            HfaArray::Tensor(t) => t.values(),
        }
    }

    pub fn into_field(self) -> Result<ScalarField2D> {
        match self {
            HfaArray::Field(f) => Ok(f),
            HfaArray::Tensor(t) if t.channels() == 1 => {
                let (_, h, w) = t.shape();
                ScalarField2D::new(h, w, t.into_values())
            }
            HfaArray::Tensor(t) => Err(Error::dim(format!(
                "expected a 2-D field, found a {}x{}x{} tensor",
                t.channels(),
                t.height(),
                t.width()
            ))),
        }
    }

    pub fn into_tensor(self) -> ImageTensor {
        match self {
            HfaArray::Tensor(t) => t,
            HfaArray::Field(f) => {
                let (h, w) = f.dims();
                ImageTensor::new(1, h, w, f.into_values()).expect("field dims are valid")
            }
        }
    }
}

impl From<ScalarField2D> for HfaArray {
    fn from(f: ScalarField2D) -> Self {
        HfaArray::Field(f)
    }
}

impl From<ImageTensor> for HfaArray {
    fn from(t: ImageTensor) -> Self {
        HfaArray::Tensor(t)
    }
}

/// Serializes raw dims and values. Zero dims and non-finite values are
/// rejected before anything is produced.
pub fn write_hfa(dims: &[usize], values: &[f32]) -> Result<Vec<u8>> {
    if !(2..=3).contains(&dims.len()) {
        return Err(Error::Format(format!("rank must be 2 or 3, got {}", dims.len())));
    }
    if dims.contains(&0) {
        return Err(Error::dim(format!("dims must be positive, got {dims:?}")));
    }
    let expected: usize = dims.iter().product();
    if values.len() != expected {
        return Err(Error::Length { expected, found: values.len() });
    }
    if let Some(k) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(k));
    }
    let mut out = Vec::with_capacity(5 + 4 * dims.len() + 4 * values.len());
    out.extend_from_slice(MAGIC);
    out.push(dims.len() as u8);
    for &d in dims {
        let d = u32::try_from(d).map_err(|_| Error::dim(format!("dim {d} exceeds u32")))?;
        out.extend_from_slice(&d.to_le_bytes());
    }
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn read_hfa(bytes: &[u8]) -> Result<HfaArray> {
    if bytes.len() < 5 || &bytes[..4] != MAGIC {
        return Err(Error::Format("missing HFA1 magic".into()));
    }
    let rank = bytes[4] as usize;
    if !(2..=3).contains(&rank) {
        return Err(Error::Format(format!("rank must be 2 or 3, got {rank}")));
    }
    let header_len = 5 + 4 * rank;
    if bytes.len() < header_len {
        return Err(Error::Format("truncated header".into()));
    }
    let dims: Vec<usize> = bytes[5..header_len]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as usize)
        .collect();
    if dims.contains(&0) {
        return Err(Error::Format(format!("zero dimension in header {dims:?}")));
    }
    let expected = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Format(format!("dims {dims:?} overflow")))?;
    let payload = &bytes[header_len..];
    if payload.len() != expected * 4 {
        return Err(Error::Length { expected, found: payload.len() / 4 });
    }
    let values: Vec<f32> =
        payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(match dims[..] {
        [h, w] => HfaArray::Field(ScalarField2D::new(h, w, values)?),
        [c, h, w] => HfaArray::Tensor(ImageTensor::new(c, h, w, values)?),
        _ => unreachable!(),
    })
}

pub fn load_array(path: impl AsRef<Path>) -> Result<HfaArray> {
    read_hfa(&fs::read(path)?)
}

pub fn save_array(array: impl Into<HfaArray>, path: impl AsRef<Path>) -> Result<()> {
    let array = array.into();
    let bytes = write_hfa(&array.dims(), array.values())?;
    fs::write(path, bytes)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn header(dims: &[u32]) -> Vec<u8> {
        let mut b = MAGIC.to_vec();
        b.push(dims.len() as u8);
        for d in dims {
            b.extend_from_slice(&d.to_le_bytes());
        }
        b
    }

    #[test]
    fn zero_tensor_file() {
        let mut b = header(&[1, 4, 4]);
        b.extend(std::iter::repeat_n(0u8, 64));
        match read_hfa(&b).unwrap() {
            HfaArray::Tensor(t) => {
                assert_eq!(t.shape(), (1, 4, 4));
                assert!(t.values().iter().all(|&v| v == 0.0));
            }
            other => panic!("expected tensor, got {other:?}"),
        }
    }

    #[test]
    fn field_payload_is_row_major() {
        let mut b = header(&[2, 3]);
        for v in 0..6 {
            b.extend_from_slice(&(v as f32).to_le_bytes());
        }
        let f = read_hfa(&b).unwrap().into_field().unwrap();
        assert_eq!(f.dims(), (2, 3));
        assert_eq!(f.get(1, 0), 3.0);
        assert_eq!(f.values(), &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        // and the writer produces the same bytes
        assert_eq!(write_hfa(&[2, 3], f.values()).unwrap(), b);
    }

    #[test]
    fn truncated_payload_is_length_error() {
        let mut b = header(&[4, 4]);
        b.extend(std::iter::repeat_n(0u8, 12 * 4));
        assert!(matches!(read_hfa(&b), Err(Error::Length { expected: 16, found: 12 })));
    }

    #[test]
    fn bad_magic_and_rank() {
        assert!(matches!(read_hfa(b"HFA2\x02"), Err(Error::Format(_))));
        let b = header(&[1, 2, 3, 4]);
        assert!(matches!(read_hfa(&b), Err(Error::Format(_))));
        assert!(matches!(read_hfa(&header(&[2])[..7]), Err(Error::Format(_))));
    }

    #[test]
    fn degenerate_dims_rejected_before_write() {
        assert!(matches!(write_hfa(&[0, 5], &[]), Err(Error::Dimension(_))));
        assert!(matches!(write_hfa(&[2, 2], &[0.0, f32::NAN, 0.0, 0.0]), Err(Error::NonFinite(1))));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.hfa");
        let t = ImageTensor::from_fn(3, 16, 16, |c, i, j| (c as f32) - 0.5 * i as f32 + j as f32 * 1e-3);
        save_array(t.clone(), &path).unwrap();
        assert_eq!(load_array(&path).unwrap(), HfaArray::Tensor(t));
        assert!(matches!(
            save_array(ScalarField2D::zeros(2, 2), dir.path().join("missing/x.hfa")),
            Err(Error::Io(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn field_round_trip_is_bit_exact(values in prop::collection::vec(
            prop::num::f32::NORMAL | prop::num::f32::SUBNORMAL | prop::num::f32::ZERO, 35)) {
            let f = ScalarField2D::new(7, 5, values).unwrap();
            let back = read_hfa(&write_hfa(&[7, 5], f.values()).unwrap()).unwrap().into_field().unwrap();
            let a: Vec<u32> = f.values().iter().map(|v| v.to_bits()).collect();
            let b: Vec<u32> = back.values().iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn tensor_round_trip_is_bit_exact(values in prop::collection::vec(-1e6f32..1e6, 3 * 16 * 16)) {
            let t = ImageTensor::new(3, 16, 16, values).unwrap();
            let back = read_hfa(&write_hfa(&[3, 16, 16], t.values()).unwrap()).unwrap().into_tensor();
            prop_assert_eq!(back, t);
        }
    }
}
