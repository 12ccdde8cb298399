//! Scoring wire protocol, version 1. All integers little-endian.
//!
//! ```text
//! client hello : "HSP1" u32 version
//! server hello : "HSP1" u32 version u32 c u32 h u32 w
//! frame        : u32 frame_len | u8 opcode | body
//!   1 SCORE      u32 batch | batch*c*h*w f32
//!   2 SCORES     u32 batch | batch f32
//!   3 SET_TARGET u32 class
//!   4 ACK        (empty)
//! 255 ERROR      u32 msg_len | UTF-8 message
//! ```
//!
//! `frame_len` counts the bytes after the length field itself: the opcode
//! plus its body.

use std::io::{self, Read, Write};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"HSP1";
pub const VERSION: u32 = 1;

pub const OP_SCORE: u8 = 1;
pub const OP_SCORES: u8 = 2;
pub const OP_SET_TARGET: u8 = 3;
pub const OP_ACK: u8 = 4;
pub const OP_ERROR: u8 = 255;

/// Frames larger than this are treated as garbage rather than allocated.
pub const MAX_FRAME_LEN: usize = 1 << 30;

#[derive(Debug, Clone, PartialEq)]
pub enum Frame {
    Score { batch: usize, values: Vec<f32> },
    Scores(Vec<f32>),
    SetTarget(u32),
    Ack,
    Error(String),
}

impl Frame {
    pub fn opcode(&self) -> u8 {
        match self {
            Frame::Score { .. } => OP_SCORE,
            Frame::Scores(_) => OP_SCORES,
            Frame::SetTarget(_) => OP_SET_TARGET,
            Frame::Ack => OP_ACK,
            Frame::Error(_) => OP_ERROR,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut body = vec![self.opcode()];
        match self {
            Frame::Score { batch, values } => {
                body.extend_from_slice(&(*batch as u32).to_le_bytes());
                values.iter().for_each(|v| body.extend_from_slice(&v.to_le_bytes()));
            }
            Frame::Scores(scores) => {
                body.extend_from_slice(&(scores.len() as u32).to_le_bytes());
                scores.iter().for_each(|v| body.extend_from_slice(&v.to_le_bytes()));
            }
            Frame::SetTarget(class) => body.extend_from_slice(&class.to_le_bytes()),
            Frame::Ack => {}
            Frame::Error(msg) => {
                body.extend_from_slice(&(msg.len() as u32).to_le_bytes());
                body.extend_from_slice(msg.as_bytes());
            }
        }
        let mut out = Vec::with_capacity(4 + body.len());
        out.extend_from_slice(&(body.len() as u32).to_le_bytes());
        out.extend_from_slice(&body);
        out
    }

    /// Decodes `opcode | body` (the bytes counted by `frame_len`).
    pub fn decode(body: &[u8]) -> Result<Frame> {
        let (&op, rest) = body.split_first().ok_or_else(|| protocol("empty frame"))?;
        let u32_at = |b: &[u8]| -> Result<u32> {
            b.get(..4)
                .map(|s| u32::from_le_bytes(s.try_into().unwrap()))
                .ok_or_else(|| protocol("frame too short"))
        };
        let floats = |b: &[u8], n: usize| -> Result<Vec<f32>> {
            if b.len() != n * 4 {
                return Err(protocol(format!("expected {n} floats, frame carries {} bytes", b.len())));
            }
            Ok(b.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
        };
        match op {
            OP_SCORE => {
                let batch = u32_at(rest)? as usize;
                let payload = &rest[4..];
                if payload.len() % 4 != 0 {
                    return Err(protocol("SCORE payload is not a whole number of floats"));
                }
                let values = floats(payload, payload.len() / 4)?;
                Ok(Frame::Score { batch, values })
            }
            OP_SCORES => {
                let batch = u32_at(rest)? as usize;
                Ok(Frame::Scores(floats(&rest[4..], batch)?))
            }
            OP_SET_TARGET if rest.len() == 4 => Ok(Frame::SetTarget(u32_at(rest)?)),
            OP_ACK if rest.is_empty() => Ok(Frame::Ack),
            OP_ERROR => {
                let n = u32_at(rest)? as usize;
                let msg = rest.get(4..4 + n).ok_or_else(|| protocol("ERROR message truncated"))?;
                Ok(Frame::Error(String::from_utf8_lossy(msg).into_owned()))
            }
            OP_SET_TARGET | OP_ACK => Err(protocol(format!("bad length for opcode {op}"))),
            other => Err(protocol(format!("unknown opcode {other}"))),
        }
    }
}

pub(crate) fn protocol(msg: impl Into<String>) -> Error {
    Error::Protocol(msg.into())
}

pub fn client_hello() -> [u8; 8] {
    let mut b = [0u8; 8];
    b[..4].copy_from_slice(MAGIC);
    b[4..].copy_from_slice(&VERSION.to_le_bytes());
    b
}

pub fn server_hello(shape: (usize, usize, usize)) -> [u8; 20] {
    let mut b = [0u8; 20];
    b[..4].copy_from_slice(MAGIC);
    b[4..8].copy_from_slice(&VERSION.to_le_bytes());
    b[8..12].copy_from_slice(&(shape.0 as u32).to_le_bytes());
    b[12..16].copy_from_slice(&(shape.1 as u32).to_le_bytes());
    b[16..20].copy_from_slice(&(shape.2 as u32).to_le_bytes());
    b
}

/// Parses a server hello into its advertised `(c, h, w)`.
pub fn parse_server_hello(b: &[u8; 20]) -> Result<(usize, usize, usize)> {
    if &b[..4] != MAGIC {
        return Err(protocol(format!("handshake magic mismatch: {:?}", &b[..4])));
    }
    let word = |k: usize| u32::from_le_bytes(b[k..k + 4].try_into().unwrap());
    if word(4) != VERSION {
        return Err(protocol(format!("unsupported protocol version {}", word(4))));
    }
    let shape = (word(8) as usize, word(12) as usize, word(16) as usize);
    if shape.0 == 0 || shape.1 == 0 || shape.2 == 0 {
        return Err(protocol(format!("server advertised empty shape {shape:?}")));
    }
    Ok(shape)
}

/// Reads one frame body. `Ok(None)` means clean EOF before the length field.
pub fn read_frame_body<R: Read>(r: &mut R) -> io::Result<Option<Vec<u8>>> {
    let mut len = [0u8; 4];
    match r.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e),
    }
    let len = u32::from_le_bytes(len) as usize;
    if len == 0 || len > MAX_FRAME_LEN {
        return Err(io::Error::new(io::ErrorKind::InvalidData, format!("frame length {len}")));
    }
    let mut body = vec![0u8; len];
    r.read_exact(&mut body)?;
    Ok(Some(body))
}

pub fn write_frame<W: Write>(w: &mut W, frame: &Frame) -> io::Result<()> {
    w.write_all(&frame.encode())?;
    w.flush()
}
