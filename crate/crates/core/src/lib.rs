//! Codebook adaptation for 5G NR CSI feedback.
//!
//! Type I / EType II codebooks with bit-exact overhead, a clustered MIMO
//! channel, MMSE-IRC link evaluation, a utility-driven codebook labeler,
//! CSI-indicator features, an echo-state readout classifier and FedAvg.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases.

pub mod adaptation;
pub mod channel;
pub mod codebook;
pub mod error;
pub mod features;
pub mod fed;
pub mod link;
pub mod rc;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{Cx, Real};

pub type BeamGrid = codebook::DftBeamGrid<f64>;
pub type BeamGridF32 = codebook::DftBeamGrid<f32>;
pub type Realization = channel::ChannelRealization<f64>;
pub type RealizationF32 = channel::ChannelRealization<f32>;
pub type Metrics = link::LinkMetrics<f64>;
pub type Esn = rc::EsnModel<f64>;
pub type EsnF32 = rc::EsnModel<f32>;
pub type Sample = features::LabeledSample<f64>;
