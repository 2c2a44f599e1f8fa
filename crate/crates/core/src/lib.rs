//! Constrained sequence codes: constraint graphs and capacity, fixed-length
//! and variable-length codecs, classical and neural decoders, training, and
//! a Monte-Carlo BER/BLER simulator.

pub mod bits;
pub mod channel;
pub mod codec_fl;
pub mod codec_vl;
pub mod config;
pub mod constraint;
pub mod error;
pub mod neural;
pub mod sim;
pub mod training;

pub use error::{Error, Result};
