//! Lossless bit-group Huffman compression for 16-bit LLM weights.
//!
//! Weights are split into small bit groups (sign, exponent, mantissa
//! slices), each coded with its own canonical Huffman table so that a
//! 32-entry CAM decoder can emit one weight per cycle. The crate also
//! carries a cycle-level model of that decoder and an analytical
//! systolic-array latency/energy model.

pub mod bits;
pub mod bitsplit;
pub mod cli;
pub mod container;
pub mod entropy;
pub mod error;
pub mod float;
pub mod huffman;
pub mod hwsim;
pub mod perf;
pub mod weights;

pub use error::{Error, Result};
