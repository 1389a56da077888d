pub mod channel;
pub mod cli;
pub mod clock;
pub mod config;
pub mod engine;
pub mod error;
pub mod estimator;
pub mod geometry;
pub mod multihop;
pub mod output;
pub mod pco;
pub mod quadrature;
pub mod rng;
pub mod stats;
pub mod waveform;

pub use error::{Error, Result};
