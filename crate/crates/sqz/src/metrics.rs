//! Compression-ratio and distortion metrics used by reports and tests.
//!
//! `mse_db` here is the normalized MSE expressed in dB, so `snr_db` and
//! `mse_db` are exact negatives of each other and `prd_pct` is exactly
//! `100 * sqrt(nmse)`. A perfect reconstruction reports `nmse = 0` with
//! infinite-dB markers rather than NaN.

use std::fmt;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::signal::Signal;

#[derive(Debug, Clone, PartialEq)]
pub enum MetricsError {
    LengthMismatch { left: usize, right: usize },
    ZeroReference,
    ZeroDenominator,
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricsError::LengthMismatch { left, right } => {
                write!(f, "signal lengths differ: {left} vs {right}")
            }
            MetricsError::ZeroReference => write!(f, "reference signal has zero energy"),
            MetricsError::ZeroDenominator => write!(f, "compressed size must be at least 1 byte"),
        }
    }
}

impl std::error::Error for MetricsError {}

/// ratio = original / compressed
pub fn compression_ratio(original_bytes: u64, compressed_bytes: u64) -> Result<f64, MetricsError> {
    if compressed_bytes == 0 {
        return Err(MetricsError::ZeroDenominator);
    }
    Ok(original_bytes as f64 / compressed_bytes as f64)
}

/// One-decimal "R:1" display form, e.g. "5.0:1".
pub fn ratio_display(ratio: f64) -> String {
    format!("{ratio:.1}:1")
}

/// The four distortion figures; derived fields are computed from `nmse`
/// so the algebraic identities hold exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionReport {
    pub nmse: f64,
    pub mse_db: f64,
    pub prd_pct: f64,
    pub snr_db: f64,
}

impl DistortionReport {
    pub fn from_nmse(nmse: f64) -> DistortionReport {
        let mse_db = if nmse == 0.0 {
            f64::NEG_INFINITY
        } else {
            10.0 * nmse.log10()
        };
        DistortionReport {
            nmse,
            mse_db,
            prd_pct: 100.0 * nmse.sqrt(),
            snr_db: -mse_db,
        }
    }
}

impl Serialize for DistortionReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        fn field<S: SerializeStruct>(s: &mut S, name: &'static str, v: f64) -> Result<(), S::Error> {
            if v == f64::INFINITY {
                s.serialize_field(name, "inf")
            } else if v == f64::NEG_INFINITY {
                s.serialize_field(name, "-inf")
            } else {
                s.serialize_field(name, &v)
            }
        }
        let mut s = serializer.serialize_struct("DistortionReport", 4)?;
        field(&mut s, "nmse", self.nmse)?;
        field(&mut s, "mse_db", self.mse_db)?;
        field(&mut s, "prd_pct", self.prd_pct)?;
        field(&mut s, "snr_db", self.snr_db)?;
        s.end()
    }
}

/// Distortion of `xhat` against reference `x`.
pub fn distortion(x: &Signal, xhat: &Signal) -> Result<DistortionReport, MetricsError> {
    distortion_samples(&x.samples, &xhat.samples)
}

pub fn distortion_samples(x: &[f64], xhat: &[f64]) -> Result<DistortionReport, MetricsError> {
    if x.len() != xhat.len() {
        return Err(MetricsError::LengthMismatch { left: x.len(), right: xhat.len() });
    }
    let ref_energy: f64 = x.iter().map(|v| v * v).sum();
    if ref_energy == 0.0 {
        return Err(MetricsError::ZeroReference);
    }
    let err_energy: f64 = x
        .iter()
        .zip(xhat)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(DistortionReport::from_nmse(err_energy / ref_energy))
}
