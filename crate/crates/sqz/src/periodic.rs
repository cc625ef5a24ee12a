//! Lossless predictive coding for periodic signals.
//!
//! The coder estimates the integer period P by normalized autocorrelation,
//! transmits the first period as first-order deltas, and predicts every
//! later sample from a dictionary of recent periods: at each period
//! boundary the template that best matches the just-completed period
//! (smallest L1 distance, ties toward the most recent) is selected and
//! used for the next P samples. The completed period is then stored in a
//! ring that keeps the last K periods. Residuals are zig-zag mapped,
//! varint-serialized and LZW-compressed.
//!
//! Payload layout (after the SQZ1 header, little-endian):
//!
//! ```text
//! offset  size  field
//!      0     4  period P
//!      4     2  template count K
//!      6     2  reserved = 0
//!      8     8  sample count
//!     16     8  scale (f64 bits)
//!     24     8  sample_rate_hz (f64 bits)
//!     32     -  LZW stream of zig-zag varints: P warm-up deltas, then residuals
//! ```
//!
//! The container CRC covers the canonical little-endian i16 image of the
//! samples, so decode verifies bit-exact reconstruction.

use std::collections::VecDeque;
use std::fmt;

use crate::codecs::{lzw, CodecError};
use crate::container::{Algorithm, Codestream};
use crate::signal::QuantizedSignal;

pub const HEADER_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub enum PeriodicError {
    /// Autocorrelation peak below threshold (or degenerate constant input).
    NoPeriodicity { peak: f64 },
    SignalTooShort { len: usize, needed: usize },
    BadSearchRange { p_min: usize, p_max: usize },
    Codec(CodecError),
}

impl fmt::Display for PeriodicError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PeriodicError::NoPeriodicity { peak } => {
                write!(f, "no periodicity found (best autocorrelation {peak:.3} < 0.5)")
            }
            PeriodicError::SignalTooShort { len, needed } => {
                write!(f, "signal too short: {len} samples, need at least {needed}")
            }
            PeriodicError::BadSearchRange { p_min, p_max } => {
                write!(f, "bad period search range [{p_min}, {p_max}]")
            }
            PeriodicError::Codec(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for PeriodicError {}

impl From<CodecError> for PeriodicError {
    fn from(e: CodecError) -> PeriodicError {
        PeriodicError::Codec(e)
    }
}

/// Knobs of the predictive model.
#[derive(Debug, Clone, Copy)]
pub struct PredictiveConfig {
    pub p_min: usize,
    /// Upper lag bound; defaults to len/2 when None.
    pub p_max: Option<usize>,
    /// Dictionary size K: number of retained periods.
    pub templates: usize,
}

impl Default for PredictiveConfig {
    fn default() -> Self {
        PredictiveConfig { p_min: 8, p_max: None, templates: 4 }
    }
}

/// Lag in [p_min, p_max] maximizing the normalized autocorrelation
/// `sum x[n]x[n-P] / sqrt(sum x[n]^2 * sum x[n-P]^2)` over the overlap.
/// The peak must reach 0.5; ties break toward the smallest lag.
pub fn estimate_period(
    q: &QuantizedSignal,
    p_min: usize,
    p_max: usize,
) -> Result<usize, PeriodicError> {
    let n = q.samples.len();
    if p_min < 2 || p_min >= p_max {
        return Err(PeriodicError::BadSearchRange { p_min, p_max });
    }
    if p_max > n / 2 {
        return Err(PeriodicError::SignalTooShort { len: n, needed: 2 * p_max });
    }
    if q.samples.windows(2).all(|w| w[0] == w[1]) {
        // Constant signal: normalization is degenerate, peak undefined.
        return Err(PeriodicError::NoPeriodicity { peak: f64::NAN });
    }
    let x = &q.samples;
    let mut best_lag = 0usize;
    let mut best_rho = f64::NEG_INFINITY;
    for lag in p_min..=p_max {
        let mut sxy = 0i64;
        let mut sxx = 0i64;
        let mut syy = 0i64;
        for i in lag..n {
            let a = x[i] as i64;
            let b = x[i - lag] as i64;
            sxy += a * b;
            sxx += a * a;
            syy += b * b;
        }
        if sxx == 0 || syy == 0 {
            continue;
        }
        let rho = sxy as f64 / ((sxx as f64) * (syy as f64)).sqrt();
        if rho > best_rho {
            best_rho = rho;
            best_lag = lag;
        }
    }
    if best_rho < 0.5 {
        return Err(PeriodicError::NoPeriodicity { peak: best_rho });
    }
    Ok(best_lag)
}

/// Index into `ring` of the template with minimal L1 distance to `prev`;
/// ties resolve toward the most recently stored entry.
fn select_template(ring: &VecDeque<(usize, Vec<i16>)>, prev: &[i16]) -> usize {
    let mut best_idx = ring.len() - 1;
    let mut best_score = u64::MAX;
    for (idx, (_, cand)) in ring.iter().enumerate().rev() {
        let score: u64 = cand
            .iter()
            .zip(prev)
            .map(|(&a, &b)| (a as i64 - b as i64).unsigned_abs())
            .sum();
        if score < best_score {
            best_score = score;
            best_idx = idx;
        }
    }
    best_idx
}

/// One period boundary step: bootstrap pushes the first period before
/// selecting; later boundaries select first, then store the completed
/// period (evicting the oldest of K).
fn boundary_template(
    ring: &mut VecDeque<(usize, Vec<i16>)>,
    prev_index: usize,
    prev: &[i16],
    k: usize,
) -> (usize, Vec<i16>) {
    if ring.is_empty() {
        ring.push_back((prev_index, prev.to_vec()));
        let idx = select_template(ring, prev);
        (ring[idx].0, ring[idx].1.clone())
    } else {
        let idx = select_template(ring, prev);
        let chosen = (ring[idx].0, ring[idx].1.clone());
        if ring.len() == k {
            ring.pop_front();
        }
        ring.push_back((prev_index, prev.to_vec()));
        chosen
    }
}

/// Prediction pass: returns the warm-up deltas, the residual sequence for
/// samples P.., and the source period index selected at each boundary.
pub(crate) fn analyze(x: &[i16], p: usize, k: usize) -> (Vec<i32>, Vec<i32>, Vec<usize>) {
    let n = x.len();
    let mut deltas = Vec::with_capacity(p);
    deltas.push(x[0] as i32);
    for i in 1..p {
        deltas.push(x[i] as i32 - x[i - 1] as i32);
    }
    let mut residuals = Vec::with_capacity(n - p);
    let mut selections = Vec::new();
    let mut ring: VecDeque<(usize, Vec<i16>)> = VecDeque::new();
    let mut boundary = 1usize;
    while boundary * p < n {
        let prev = &x[(boundary - 1) * p..boundary * p];
        let (chosen_period, template) = boundary_template(&mut ring, boundary - 1, prev, k);
        selections.push(chosen_period);
        let start = boundary * p;
        for i in start..n.min(start + p) {
            residuals.push(x[i] as i32 - template[i - start] as i32);
        }
        boundary += 1;
    }
    (deltas, residuals, selections)
}

/// Inverse of [`analyze`]: rebuild samples from deltas and residuals.
fn reconstruct(
    deltas: &[i32],
    residuals: &[i32],
    p: usize,
    k: usize,
    n: usize,
) -> Result<Vec<i16>, PeriodicError> {
    fn bad() -> PeriodicError {
        PeriodicError::Codec(CodecError::CorruptStream("sample outside 16-bit range"))
    }
    let mut x: Vec<i16> = Vec::with_capacity(n);
    let mut acc = 0i32;
    for (i, d) in deltas.iter().enumerate() {
        acc = if i == 0 { *d } else { acc + *d };
        if acc < i16::MIN as i32 || acc > i16::MAX as i32 {
            return Err(bad());
        }
        x.push(acc as i16);
    }
    let mut ring: VecDeque<(usize, Vec<i16>)> = VecDeque::new();
    let mut r = residuals.iter();
    let mut boundary = 1usize;
    while boundary * p < n {
        let prev = x[(boundary - 1) * p..boundary * p].to_vec();
        let (_, template) = boundary_template(&mut ring, boundary - 1, &prev, k);
        let start = boundary * p;
        for i in start..n.min(start + p) {
            let res = r.next().ok_or(PeriodicError::Codec(CodecError::CorruptStream(
                "residual stream truncated",
            )))?;
            let v = template[i - start] as i32 + *res;
            if v < i16::MIN as i32 || v > i16::MAX as i32 {
                return Err(bad());
            }
            x.push(v as i16);
        }
        boundary += 1;
    }
    if r.next().is_some() {
        return Err(PeriodicError::Codec(CodecError::CorruptStream(
            "residual count mismatch",
        )));
    }
    Ok(x)
}

/// Per-sample coding values in emission order: the warm-up deltas for the
/// first period, then the prediction residuals. This is what plots of the
/// coder's output show.
pub fn coding_profile(
    q: &QuantizedSignal,
    cfg: &PredictiveConfig,
) -> Result<Vec<i32>, PeriodicError> {
    let n = q.samples.len();
    let p_max = cfg.p_max.unwrap_or(n / 2).min(n / 2);
    let p = estimate_period(q, cfg.p_min, p_max)?;
    let (mut deltas, residuals, _) = analyze(&q.samples, p, cfg.templates.max(1));
    deltas.extend(residuals);
    Ok(deltas)
}

pub fn encode(q: &QuantizedSignal, cfg: &PredictiveConfig) -> Result<Codestream, PeriodicError> {
    let n = q.samples.len();
    let p_max = cfg.p_max.unwrap_or(n / 2).min(n / 2);
    let p = estimate_period(q, cfg.p_min, p_max)?;
    let k = cfg.templates.max(1);
    let (deltas, residuals, _) = analyze(&q.samples, p, k);

    let mut varints = Vec::new();
    for v in deltas.iter().chain(residuals.iter()) {
        write_varint(zigzag(*v), &mut varints);
    }

    let mut payload = Vec::with_capacity(HEADER_LEN + varints.len() / 2);
    payload.extend_from_slice(&(p as u32).to_le_bytes());
    payload.extend_from_slice(&(k as u16).to_le_bytes());
    payload.extend_from_slice(&0u16.to_le_bytes());
    payload.extend_from_slice(&(n as u64).to_le_bytes());
    payload.extend_from_slice(&q.scale.to_le_bytes());
    payload.extend_from_slice(&q.sample_rate_hz.to_le_bytes());
    payload.extend_from_slice(&lzw::compress_payload(&varints));

    Ok(Codestream::new_lossless(
        Algorithm::Predictive,
        &q.to_le_bytes(),
        payload,
    ))
}

pub fn decode(c: &Codestream) -> Result<QuantizedSignal, PeriodicError> {
    if c.algo != Algorithm::Predictive {
        return Err(CodecError::WrongAlgorithm {
            expected: Algorithm::Predictive,
            found: c.algo,
        }
        .into());
    }
    if c.payload.len() < HEADER_LEN {
        return Err(CodecError::CorruptStream("predictive payload shorter than header").into());
    }
    let p = u32::from_le_bytes(c.payload[0..4].try_into().unwrap()) as usize;
    let k = u16::from_le_bytes(c.payload[4..6].try_into().unwrap()) as usize;
    let n = u64::from_le_bytes(c.payload[8..16].try_into().unwrap()) as usize;
    let scale = f64::from_le_bytes(c.payload[16..24].try_into().unwrap());
    let sample_rate_hz = f64::from_le_bytes(c.payload[24..32].try_into().unwrap());
    if p < 2 || k < 1 || n < 2 * p {
        return Err(CodecError::CorruptStream("implausible predictive header").into());
    }
    if !(scale > 0.0) || !(sample_rate_hz > 0.0) {
        return Err(CodecError::CorruptStream("bad scale or sample rate").into());
    }
    if c.original_len != 2 * n as u64 {
        return Err(CodecError::CorruptStream("header length disagrees with container").into());
    }

    let varints = lzw::decompress_payload(&c.payload[HEADER_LEN..], None)?;
    let mut values = Vec::with_capacity(n);
    let mut pos = 0usize;
    while pos < varints.len() {
        let (v, used) =
            read_varint(&varints[pos..]).ok_or(CodecError::CorruptStream("truncated varint"))?;
        values.push(unzigzag(v));
        pos += used;
    }
    if values.len() != n {
        return Err(CodecError::CorruptStream("value count mismatch").into());
    }

    let samples = reconstruct(&values[..p], &values[p..], p, k, n)?;
    let q = QuantizedSignal { samples, scale, sample_rate_hz };
    crate::codecs::verify_source_crc(c, &q.to_le_bytes())?;
    Ok(q)
}

fn zigzag(v: i32) -> u32 {
    ((v << 1) ^ (v >> 31)) as u32
}

fn unzigzag(v: u32) -> i32 {
    ((v >> 1) as i32) ^ -((v & 1) as i32)
}

fn write_varint(mut v: u32, out: &mut Vec<u8>) {
    loop {
        let byte = (v & 0x7F) as u8;
        v >>= 7;
        if v == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

fn read_varint(bytes: &[u8]) -> Option<(u32, usize)> {
    let mut v = 0u32;
    let mut shift = 0u32;
    for (i, &b) in bytes.iter().enumerate() {
        if shift >= 32 {
            return None;
        }
        v |= ((b & 0x7F) as u32) << shift;
        if b & 0x80 == 0 {
            return Some((v, i + 1));
        }
        shift += 7;
    }
    None
}
