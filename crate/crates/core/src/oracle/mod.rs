//! The black-box scoring boundary.
//!
//! Every saliency method in this crate sees a model only through
//! [`ScoringOracle::score_batch`]. Oracles count the tensors they score,
//! which is the cost unit used for efficiency comparisons.
//!
//! Whether a score is a logit or a probability is up to the oracle.
//! Insertion/deletion AUCs are sensitive to that choice, so compare curves
//! only between runs that use the same oracle.

mod external;
pub mod protocol;
mod proxy;
pub mod server;

pub use external::{ExternalProcessOracle, OracleEndpoint, DEFAULT_TIMEOUT};
pub use proxy::{ConstantOracle, FnOracle, MultiClassProxy, WeightedSumProxy};

use std::thread;

use crate::error::{Error, Result};
use crate::tensor::ImageTensor;

pub trait ScoringOracle {
    /// Scores every input, returning one finite value per input in order.
    /// All inputs must share the same shape and the batch must be non-empty.
    fn score_batch(&mut self, inputs: &[ImageTensor]) -> Result<Vec<f64>>;

    /// Total number of tensors scored so far.
    fn call_count(&self) -> u64;

    /// Selects which class/logit subsequent scores refer to.
    fn set_target(&mut self, class: usize) -> Result<()> {
        Err(Error::Oracle(format!("oracle has a single output; cannot select class {class}")))
    }

    fn score_one(&mut self, input: &ImageTensor) -> Result<f64> {
        Ok(self.score_batch(std::slice::from_ref(input))?[0])
    }
}

impl<T: ScoringOracle + ?Sized> ScoringOracle for Box<T> {
    fn score_batch(&mut self, inputs: &[ImageTensor]) -> Result<Vec<f64>> {
        (**self).score_batch(inputs)
    }

    fn call_count(&self) -> u64 {
        (**self).call_count()
    }

    fn set_target(&mut self, class: usize) -> Result<()> {
        (**self).set_target(class)
    }
}

/// Validates the batch contract and returns the common `(c, h, w)`.
pub fn batch_shape(inputs: &[ImageTensor]) -> Result<(usize, usize, usize)> {
    let first = inputs.first().ok_or_else(|| Error::dim("empty scoring batch"))?;
    let shape = first.shape();
    if let Some((k, t)) = inputs.iter().enumerate().find(|(_, t)| t.shape() != shape) {
        return Err(Error::dim(format!(
            "batch element {k} has shape {:?}, element 0 has {shape:?}",
            t.shape()
        )));
    }
    Ok(shape)
}

pub(crate) fn check_scores(scores: &[f64]) -> Result<()> {
    match scores.iter().position(|s| !s.is_finite()) {
        Some(k) => Err(Error::Oracle(format!("non-finite score at batch index {k}"))),
        None => Ok(()),
    }
}

/// Fans one batch out over several oracles on scoped threads.
///
/// The batch is cut into contiguous chunks, one per worker, and results are
/// concatenated in input order, so callers see exactly the single-oracle
/// contract.
pub struct OraclePool {
    workers: Vec<Box<dyn ScoringOracle + Send>>,
}

impl OraclePool {
    pub fn new(workers: Vec<Box<dyn ScoringOracle + Send>>) -> Result<Self> {
        if workers.is_empty() {
            return Err(Error::InvalidConfig("oracle pool needs at least one worker".into()));
        }
        Ok(Self { workers })
    }

    pub fn len(&self) -> usize {
        self.workers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.workers.is_empty()
    }
}

impl ScoringOracle for OraclePool {
    fn score_batch(&mut self, inputs: &[ImageTensor]) -> Result<Vec<f64>> {
        batch_shape(inputs)?;
        if self.workers.len() == 1 || inputs.len() == 1 {
            return self.workers[0].score_batch(inputs);
        }
        let chunk = inputs.len().div_ceil(self.workers.len());
        let results: Vec<Result<Vec<f64>>> = thread::scope(|scope| {
            let handles: Vec<_> = self
                .workers
                .iter_mut()
                .zip(inputs.chunks(chunk))
                .map(|(worker, part)| scope.spawn(move || worker.score_batch(part)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|_| Err(Error::Oracle("worker panicked".into()))))
                .collect()
        });
        let mut out = Vec::with_capacity(inputs.len());
        for r in results {
            out.extend(r?);
        }
        Ok(out)
    }

    fn call_count(&self) -> u64 {
        self.workers.iter().map(|w| w.call_count()).sum()
    }

    fn set_target(&mut self, class: usize) -> Result<()> {
        self.workers.iter_mut().try_for_each(|w| w.set_target(class))
    }
}
