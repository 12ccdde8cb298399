//! Serves any [`ScoringOracle`] over the wire protocol.
//!
//! Malformed frames get an ERROR reply and the connection stays open; EOF
//! ends the session cleanly.

use std::io::{BufReader, BufWriter, Read, Write};
use std::net::TcpListener;

use log::{debug, warn};

use super::protocol::{self, Frame};
use super::ScoringOracle;
use crate::error::{Error, Result};
use crate::tensor::ImageTensor;

pub fn serve<O, R, W>(oracle: &mut O, shape: (usize, usize, usize), reader: R, writer: W) -> Result<()>
where
    O: ScoringOracle + ?Sized,
    R: Read,
    W: Write,
{
    let mut reader = BufReader::new(reader);
    let mut writer = BufWriter::new(writer);

    let mut hello = [0u8; 8];
    reader.read_exact(&mut hello)?;
    if &hello[..4] != protocol::MAGIC {
        return Err(Error::Protocol(format!("client handshake magic mismatch: {:?}", &hello[..4])));
    }
    writer.write_all(&protocol::server_hello(shape))?;
    writer.flush()?;

    let tensor_len = shape.0 * shape.1 * shape.2;
    loop {
        let body = match protocol::read_frame_body(&mut reader)? {
            Some(b) => b,
            None => {
                debug!("client closed the connection");
                return Ok(());
            }
        };
        let reply = match Frame::decode(&body) {
            Ok(Frame::Score { batch, values }) => score(oracle, shape, tensor_len, batch, values),
            Ok(Frame::SetTarget(class)) => match oracle.set_target(class as usize) {
                Ok(()) => Frame::Ack,
                Err(e) => Frame::Error(e.to_string()),
            },
            Ok(other) => Frame::Error(format!("opcode {} is not a request", other.opcode())),
            Err(e) => Frame::Error(e.to_string()),
        };
        if let Frame::Error(msg) = &reply {
            warn!("replying with error: {msg}");
        }
        protocol::write_frame(&mut writer, &reply)?;
    }
}

fn score<O: ScoringOracle + ?Sized>(
    oracle: &mut O,
    shape: (usize, usize, usize),
    tensor_len: usize,
    batch: usize,
    values: Vec<f32>,
) -> Frame {
    if batch == 0 || values.len() != batch * tensor_len {
        return Frame::Error(format!(
            "SCORE batch {batch} of shape {shape:?} needs {} values, got {}",
            batch * tensor_len,
            values.len()
        ));
    }
    let inputs: Vec<ImageTensor> = values
        .chunks_exact(tensor_len)
        .map(|c| ImageTensor::new(shape.0, shape.1, shape.2, c.to_vec()).expect("sized chunk"))
        .collect();
    match oracle.score_batch(&inputs) {
        Ok(scores) => Frame::Scores(scores.into_iter().map(|s| s as f32).collect()),
        Err(e) => Frame::Error(e.to_string()),
    }
}

/// Accepts connections one after another, serving each to completion.
pub fn serve_tcp<O: ScoringOracle + ?Sized>(
    oracle: &mut O,
    shape: (usize, usize, usize),
    listener: TcpListener,
) -> Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        let reader = stream.try_clone()?;
        if let Err(e) = serve(oracle, shape, reader, stream) {
            warn!("session ended with error: {e}");
        }
    }
    Ok(())
}
