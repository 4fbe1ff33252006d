//! Desk-scale simulator for Nyquist-shaped and cyclic-spectrum QPSK WDM
//! channels passing wavelength-selective-switch add/drop nodes.
//!
//! The modules follow the signal path: [`txgen`] builds the band, [`channel`]
//! applies noise, fiber and WSS nodes, [`rxdsp`] recovers one channel and
//! counts errors, and [`metrics`] turns counts into Q² and OSNR figures.

pub mod channel;
pub mod dsp;
pub mod error;
pub mod metrics;
pub mod rng;
pub mod rxdsp;
pub mod txgen;

pub use dsp::{ComplexWaveform, DualPolWaveform, FrequencyResponse, C64};
pub use error::{Error, Result};
