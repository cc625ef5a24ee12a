//! sqz — a compression toolkit for electrical-signal and embedded-firmware data.
//!
//! The crate bundles four things that share one container format:
//!
//! - byte-oriented lossless codecs (RLE, LZW, LZSS, LZAR) behind the
//!   bit-exact `SQZ1` container ([`container`], [`codecs`]);
//! - signal coders: a lossless adaptive-dictionary predictive coder for
//!   periodic waveforms ([`periodic`]), a Daubechies-4 wavelet coder
//!   ([`wavelet`]) and a fundamental-plus-residue hybrid coder ([`hybrid`]);
//! - a firmware flash-fit analyzer that parses Intel HEX images, compresses
//!   sections per policy and picks the smallest sufficient device
//!   ([`romtool`]);
//! - a trace-driven simulator of a cache with compressed main memory
//!   ([`memsim`]).
//!
//! [`signal`] generates the deterministic test waveforms the signal coders
//! are exercised with, and [`metrics`] holds the ratio/distortion metrics
//! used by reports and tests.

pub mod codecs;
pub mod container;
pub mod hybrid;
pub mod memsim;
pub mod metrics;
pub mod periodic;
pub mod rng;
pub mod romtool;
pub mod signal;
pub mod wavelet;

pub use container::{Algorithm, Codestream};
pub use signal::{QuantizedSignal, Signal};
