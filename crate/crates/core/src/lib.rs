//! Hierarchical perturbation saliency maps for black-box scoring models.
//!
//! The crate is organised around a single calling convention: a
//! [`ScoringOracle`](oracle::ScoringOracle) turns a batch of input tensors
//! into one scalar each. Everything else (the hierarchical engine, the
//! randomized-mask and sliding-occlusion baselines, the insertion/deletion
//! curves) only ever talks to a model through that trait, and every scored
//! tensor is counted.
//!
//! ```
//! use hipe_core::hipe::{hipe, HiPeConfig};
//! use hipe_core::oracle::{ScoringOracle, WeightedSumProxy};
//! use hipe_core::substrate::SubstrateKind;
//! use hipe_core::synthetic::blob_image;
//!
//! let x = blob_image(1, 64, 64, 8.0);
//! let mut oracle = WeightedSumProxy::uniform(64, 64);
//! let cfg = HiPeConfig { substrate: SubstrateKind::Zero, ..HiPeConfig::default() };
//! let run = hipe(&x, &mut oracle, &cfg).unwrap();
//! assert_eq!(run.oracle_calls, oracle.call_count());
//! ```

pub mod baselines;
pub mod error;
pub mod hipe;
pub mod metrics;
pub mod oracle;
pub mod substrate;
pub mod synthetic;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{ImageTensor, RectRegion, ScalarField2D};
