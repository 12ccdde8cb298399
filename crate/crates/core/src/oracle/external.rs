use std::io::{BufReader, BufWriter, Read, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use log::debug;

use super::protocol::{self, protocol, Frame};
use super::{batch_shape, check_scores, ScoringOracle};
use crate::error::{Error, Result};
use crate::tensor::ImageTensor;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// Where an external model lives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleEndpoint {
    /// A command line, split on whitespace; the child speaks the protocol
    /// on its stdin/stdout.
    Exec(String),
    /// `host:port` of a listening server.
    Tcp(String),
}

enum Incoming {
    Hello([u8; 20]),
    Frame(Frame),
}

/// A model in another process, reached over stdio pipes or TCP.
///
/// One request is in flight at a time. Responses are read on a helper
/// thread so that every wait is bounded by the configured timeout; once a
/// request times out or the stream desynchronizes the oracle refuses
/// further work.
pub struct ExternalProcessOracle {
    writer: Box<dyn Write + Send>,
    incoming: Receiver<Result<Incoming>>,
    child: Option<Child>,
    shape: (usize, usize, usize),
    timeout: Duration,
    calls: u64,
    broken: bool,
}

impl ExternalProcessOracle {
    pub fn open(endpoint: &OracleEndpoint, timeout: Duration) -> Result<Self> {
        match endpoint {
            OracleEndpoint::Exec(cmd) => {
                let mut parts = cmd.split_whitespace();
                let program =
                    parts.next().ok_or_else(|| Error::InvalidConfig("empty oracle command".into()))?;
                let args: Vec<&str> = parts.collect();
                Self::spawn(program, &args, timeout)
            }
            OracleEndpoint::Tcp(addr) => Self::connect_tcp(addr, timeout),
        }
    }

    pub fn spawn(program: &str, args: &[&str], timeout: Duration) -> Result<Self> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        debug!("spawned oracle process {program} (pid {})", child.id());
        Self::handshake(Box::new(BufWriter::new(stdin)), stdout, Some(child), timeout)
    }

    pub fn connect_tcp(addr: &str, timeout: Duration) -> Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        let reader = stream.try_clone()?;
        debug!("connected to oracle at {addr}");
        Self::handshake(Box::new(BufWriter::new(stream)), reader, None, timeout)
    }

    /// Runs the handshake over an arbitrary byte stream pair.
    pub fn from_streams<R: Read + Send + 'static>(
        writer: Box<dyn Write + Send>,
        reader: R,
        timeout: Duration,
    ) -> Result<Self> {
        Self::handshake(writer, reader, None, timeout)
    }

    fn handshake<R: Read + Send + 'static>(
        writer: Box<dyn Write + Send>,
        reader: R,
        child: Option<Child>,
        timeout: Duration,
    ) -> Result<Self> {
        let (tx, rx) = mpsc::channel();
        thread::Builder::new().name("oracle-reader".into()).spawn(move || {
            let mut reader = BufReader::new(reader);
            let mut hello = [0u8; 20];
            if let Err(e) = reader.read_exact(&mut hello) {
                let _ = tx.send(Err(protocol(format!("connection closed during handshake: {e}"))));
                return;
            }
            if tx.send(Ok(Incoming::Hello(hello))).is_err() {
                return;
            }
            loop {
                let msg = match protocol::read_frame_body(&mut reader) {
                    Ok(Some(body)) => Frame::decode(&body).map(Incoming::Frame),
                    Ok(None) => Err(protocol("oracle closed the connection")),
                    Err(e) => Err(protocol(format!("reading response: {e}"))),
                };
                let stop = msg.is_err();
                if tx.send(msg).is_err() || stop {
                    return;
                }
            }
        })?;

        let mut oracle =
            Self { writer, incoming: rx, child, shape: (0, 0, 0), timeout, calls: 0, broken: false };
        oracle.send_raw(&protocol::client_hello())?;
        match oracle.receive()? {
            Incoming::Hello(hello) => oracle.shape = protocol::parse_server_hello(&hello)?,
            Incoming::Frame(_) => unreachable!("reader sends the hello first"),
        }
        debug!("oracle handshake done, shape {:?}", oracle.shape);
        Ok(oracle)
    }

    /// The `(c, h, w)` the server accepts.
    pub fn shape(&self) -> (usize, usize, usize) {
        self.shape
    }

    fn send_raw(&mut self, bytes: &[u8]) -> Result<()> {
        let sent = self.writer.write_all(bytes).and_then(|_| self.writer.flush());
        sent.map_err(|e| {
            self.broken = true;
            protocol(format!("writing request: {e}"))
        })
    }

    fn receive(&mut self) -> Result<Incoming> {
        match self.incoming.recv_timeout(self.timeout) {
            Ok(Ok(msg)) => Ok(msg),
            Ok(Err(e)) => {
                self.broken = true;
                Err(e)
            }
            Err(RecvTimeoutError::Timeout) => {
                self.broken = true;
                Err(Error::Timeout(self.timeout))
            }
            Err(RecvTimeoutError::Disconnected) => {
                self.broken = true;
                Err(protocol("oracle connection lost"))
            }
        }
    }

    fn request(&mut self, frame: &Frame) -> Result<Frame> {
        if self.broken {
            return Err(protocol("connection is unusable after an earlier failure"));
        }
        self.send_raw(&frame.encode())?;
        match self.receive()? {
            Incoming::Frame(f) => Ok(f),
            Incoming::Hello(_) => {
                self.broken = true;
                Err(protocol("unexpected second handshake"))
            }
        }
    }
}

impl ScoringOracle for ExternalProcessOracle {
    fn score_batch(&mut self, inputs: &[ImageTensor]) -> Result<Vec<f64>> {
        let shape = batch_shape(inputs)?;
        if shape != self.shape {
            return Err(Error::dim(format!(
                "oracle accepts shape {:?}, batch has shape {shape:?}",
                self.shape
            )));
        }
        let mut values = Vec::with_capacity(inputs.len() * inputs[0].values().len());
        for t in inputs {
            values.extend_from_slice(t.values());
        }
        let frame = Frame::Score { batch: inputs.len(), values };
        match self.request(&frame)? {
            Frame::Scores(scores) if scores.len() == inputs.len() => {
                let scores: Vec<f64> = scores.into_iter().map(f64::from).collect();
                check_scores(&scores)?;
                self.calls += inputs.len() as u64;
                Ok(scores)
            }
            Frame::Scores(scores) => {
                self.broken = true;
                Err(protocol(format!("sent {} inputs, got {} scores", inputs.len(), scores.len())))
            }
            Frame::Error(msg) => Err(Error::Oracle(msg)),
            other => {
                self.broken = true;
                Err(protocol(format!("unexpected reply opcode {}", other.opcode())))
            }
        }
    }

    fn call_count(&self) -> u64 {
        self.calls
    }

    fn set_target(&mut self, class: usize) -> Result<()> {
        let class =
            u32::try_from(class).map_err(|_| Error::InvalidConfig(format!("class {class} exceeds u32")))?;
        match self.request(&Frame::SetTarget(class))? {
            Frame::Ack => Ok(()),
            Frame::Error(msg) => Err(Error::Oracle(msg)),
            other => {
                self.broken = true;
                Err(protocol(format!("unexpected reply opcode {}", other.opcode())))
            }
        }
    }
}

impl Drop for ExternalProcessOracle {
    fn drop(&mut self) {
        let _ = self.writer.flush();
        if let Some(mut child) = self.child.take() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}
