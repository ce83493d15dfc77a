//! A frugal single-layer spiking neural network that learns and classifies
//! multivariate temporal patterns in continuous data streams, fully
//! unsupervised.
//!
//! The pipeline: continuous channels are normalized and encoded into spike
//! trains by quantization receptive fields ([`encoder`]); a short-term
//! plasticity pass suppresses trains that encode noise or silence ([`stp`]);
//! a single layer of rebound neurons ([`lts`]) driven through negative
//! weights fires once per pattern occurrence under a winner-take-all rule
//! ([`network`]); spike-timing-dependent plasticity and threshold
//! adaptation ([`plasticity`]) assign one neuron per pattern. Outputs are
//! scored against ground truth with coincidence-window f-scores ([`eval`]).

pub mod encoder;
pub mod error;
pub mod eval;
pub mod lts;
pub mod network;
pub mod plasticity;
pub mod preset;
pub mod raster;
pub mod signals;
pub mod stp;
pub mod synth;

pub use error::{Result, SnnError};
pub use preset::Preset;
pub use raster::SpikeRaster;
pub use signals::MultichannelSignal;
