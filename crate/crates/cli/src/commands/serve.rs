use std::io::{self, Write};
use std::net::TcpListener;
use std::process::ExitCode;

use anyhow::{bail, Context};
use hipe_core::oracle::server::{serve, serve_tcp};
use hipe_core::oracle::ScoringOracle;
use hipe_core::ImageTensor;
use log::info;

use crate::args::ServeArgs;
use crate::oracles::{BoxedOracle, OracleSpec};

/// Terminates the whole process once its budget of scored tensors is spent,
/// imitating a model server that crashes mid-session.
struct ExitAfter {
    inner: BoxedOracle,
    budget: u64,
}

impl ScoringOracle for ExitAfter {
    fn score_batch(&mut self, inputs: &[ImageTensor]) -> hipe_core::Result<Vec<f64>> {
        if self.inner.call_count() + inputs.len() as u64 > self.budget {
            std::process::exit(70);
        }
        self.inner.score_batch(inputs)
    }

    fn call_count(&self) -> u64 {
        self.inner.call_count()
    }

    fn set_target(&mut self, class: usize) -> hipe_core::Result<()> {
        self.inner.set_target(class)
    }
}

pub fn run(args: &ServeArgs) -> anyhow::Result<ExitCode> {
    let spec: OracleSpec = args.oracle.parse()?;
    if spec.is_external() {
        bail!("serve wraps an in-process proxy, not {:?}", args.oracle);
    }
    let shape = args.shape;
    let mut oracle = spec.build_proxy(shape.1, shape.2)?;
    if let Some(t) = args.target {
        oracle.set_target(t).with_context(|| format!("selecting target class {t}"))?;
    }
    if let Some(budget) = args.exit_after {
        oracle = Box::new(ExitAfter { inner: oracle, budget });
    }
    match &args.listen {
        Some(addr) => {
            let listener = TcpListener::bind(addr).with_context(|| format!("binding {addr}"))?;
            let local = listener.local_addr()?;
            println!("listening on {local}");
            io::stdout().flush()?;
            info!("serving {} with shape {shape:?} on {local}", args.oracle);
            serve_tcp(&mut oracle, shape, listener)?;
        }
        None => {
            info!("serving {} with shape {shape:?} on stdio", args.oracle);
            serve(&mut oracle, shape, io::stdin().lock(), io::stdout().lock())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
