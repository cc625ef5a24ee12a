//! Deterministic test-waveform generation: sinusoids, voltage dips,
//! recurring transients, calibrated noise, and 16-bit quantization.
//!
//! All generators are pure functions of their arguments (the noise seed
//! included), so every waveform used in tests and reports is reproducible
//! bit for bit. Defaults across the crate are a 15 360 Hz sample rate with
//! a 60 Hz fundamental.

use std::fmt;

use crate::rng::DetRng;

pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 15_360.0;
pub const DEFAULT_FUNDAMENTAL_HZ: f64 = 60.0;

/// A sampled waveform in normalized volts.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub samples: Vec<f64>,
    pub sample_rate_hz: f64,
}

/// A waveform quantized to signed 16-bit counts; `scale` is volts per count.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedSignal {
    pub samples: Vec<i16>,
    pub scale: f64,
    pub sample_rate_hz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SignalError {
    EmptySignal,
    NyquistViolation { freq_hz: f64, sample_rate_hz: f64 },
    NonPositiveFrequency(f64),
    NonPositiveSampleRate(f64),
    BadInterval { start: usize, end: usize, len: usize },
    BadDipFactor(f64),
    BadDecay(f64),
    ZeroSignal,
    InvalidSnr(f64),
    BadScale(f64),
    Overflow { index: usize, value: f64 },
    NonFinite { index: usize },
    BadFormat(String),
}

impl fmt::Display for SignalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignalError::EmptySignal => write!(f, "signal must contain at least one sample"),
            SignalError::NyquistViolation { freq_hz, sample_rate_hz } => write!(
                f,
                "frequency {freq_hz} Hz is at or above Nyquist ({} Hz)",
                sample_rate_hz / 2.0
            ),
            SignalError::NonPositiveFrequency(v) => write!(f, "frequency must be positive, got {v}"),
            SignalError::NonPositiveSampleRate(v) => {
                write!(f, "sample rate must be positive, got {v}")
            }
            SignalError::BadInterval { start, end, len } => {
                write!(f, "bad interval [{start}, {end}) for length {len}")
            }
            SignalError::BadDipFactor(v) => write!(f, "dip factor must be in (0, 1], got {v}"),
            SignalError::BadDecay(v) => write!(f, "decay must be in (0, 1), got {v}"),
            SignalError::ZeroSignal => write!(f, "signal has zero energy"),
            SignalError::InvalidSnr(v) => write!(f, "target SNR must be finite, got {v}"),
            SignalError::BadScale(v) => write!(f, "scale must be positive, got {v}"),
            SignalError::Overflow { index, value } => {
                write!(f, "sample {index} quantizes to {value}, outside 16-bit range")
            }
            SignalError::NonFinite { index } => write!(f, "sample {index} is not finite"),
            SignalError::BadFormat(msg) => write!(f, "bad signal file: {msg}"),
        }
    }
}

impl std::error::Error for SignalError {}

/// Parameters of the fundamental sine shared by the composite generators.
#[derive(Debug, Clone, Copy)]
pub struct SineSpec {
    pub amplitude: f64,
    pub freq_hz: f64,
    pub phase_rad: f64,
    pub sample_rate_hz: f64,
}

impl Default for SineSpec {
    fn default() -> Self {
        SineSpec {
            amplitude: 1.0,
            freq_hz: DEFAULT_FUNDAMENTAL_HZ,
            phase_rad: 0.0,
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
        }
    }
}

fn check_freq(freq_hz: f64, sample_rate_hz: f64) -> Result<(), SignalError> {
    if !(sample_rate_hz > 0.0) {
        return Err(SignalError::NonPositiveSampleRate(sample_rate_hz));
    }
    if !(freq_hz > 0.0) {
        return Err(SignalError::NonPositiveFrequency(freq_hz));
    }
    if freq_hz >= sample_rate_hz / 2.0 {
        return Err(SignalError::NyquistViolation { freq_hz, sample_rate_hz });
    }
    Ok(())
}

/// samples[k] = amplitude * sin(2*pi*freq*k/fs + phase)
pub fn sine(spec: SineSpec, n: usize) -> Result<Signal, SignalError> {
    check_freq(spec.freq_hz, spec.sample_rate_hz)?;
    if n == 0 {
        return Err(SignalError::EmptySignal);
    }
    let w = std::f64::consts::TAU * spec.freq_hz / spec.sample_rate_hz;
    let samples = (0..n)
        .map(|k| spec.amplitude * (w * k as f64 + spec.phase_rad).sin())
        .collect();
    Ok(Signal { samples, sample_rate_hz: spec.sample_rate_hz })
}

/// Sine whose amplitude is multiplied by `dip_factor` on [dip_start, dip_end).
pub fn voltage_dip(
    spec: SineSpec,
    dip_start: usize,
    dip_end: usize,
    dip_factor: f64,
    n: usize,
) -> Result<Signal, SignalError> {
    if dip_start >= dip_end || dip_end > n {
        return Err(SignalError::BadInterval { start: dip_start, end: dip_end, len: n });
    }
    if !(dip_factor > 0.0 && dip_factor <= 1.0) {
        return Err(SignalError::BadDipFactor(dip_factor));
    }
    let mut s = sine(spec, n)?;
    for k in dip_start..dip_end {
        s.samples[k] *= dip_factor;
    }
    Ok(s)
}

/// Fundamental sine plus damped oscillations launched every
/// `transient_period` samples starting at sample 0.
pub fn transients(
    spec: SineSpec,
    transient_period: usize,
    transient_amp: f64,
    transient_decay: f64,
    transient_freq_hz: f64,
    n: usize,
) -> Result<Signal, SignalError> {
    check_freq(transient_freq_hz, spec.sample_rate_hz)?;
    if transient_period == 0 {
        return Err(SignalError::BadInterval { start: 0, end: 0, len: n });
    }
    if !(transient_decay > 0.0 && transient_decay < 1.0) {
        return Err(SignalError::BadDecay(transient_decay));
    }
    let mut s = sine(spec, n)?;
    let wt = std::f64::consts::TAU * transient_freq_hz / spec.sample_rate_hz;
    let mut onset = 0usize;
    while onset < n {
        let mut envelope = transient_amp;
        for k in onset..n {
            let dk = (k - onset) as f64;
            s.samples[k] += envelope * (wt * dk).sin();
            envelope *= transient_decay;
            if envelope.abs() < 1e-300 {
                break;
            }
        }
        onset += transient_period;
    }
    Ok(s)
}

/// Returns `s + w` with `w` zero-mean Gaussian noise from the seeded
/// generator, rescaled after drawing so the realized SNR equals
/// `target_snr_db` exactly (up to floating rounding).
pub fn add_noise(s: &Signal, target_snr_db: f64, seed: u64) -> Result<Signal, SignalError> {
    if !target_snr_db.is_finite() {
        return Err(SignalError::InvalidSnr(target_snr_db));
    }
    let signal_energy: f64 = s.samples.iter().map(|x| x * x).sum();
    if signal_energy == 0.0 {
        return Err(SignalError::ZeroSignal);
    }
    let mut rng = DetRng::new(seed);
    let noise: Vec<f64> = s.samples.iter().map(|_| rng.next_gaussian()).collect();
    let noise_energy: f64 = noise.iter().map(|x| x * x).sum();
    // Scale so 10*log10(Es/Ew) hits the target for the realized vector.
    let target_energy = signal_energy * 10f64.powf(-target_snr_db / 10.0);
    let alpha = (target_energy / noise_energy).sqrt();
    let samples = s
        .samples
        .iter()
        .zip(&noise)
        .map(|(x, w)| x + alpha * w)
        .collect();
    Ok(Signal { samples, sample_rate_hz: s.sample_rate_hz })
}

/// Round-half-away-from-zero quantization to 16-bit counts.
pub fn quantize(s: &Signal, scale: f64) -> Result<QuantizedSignal, SignalError> {
    if !(scale > 0.0) {
        return Err(SignalError::BadScale(scale));
    }
    let mut samples = Vec::with_capacity(s.samples.len());
    for (index, &x) in s.samples.iter().enumerate() {
        if !x.is_finite() {
            return Err(SignalError::NonFinite { index });
        }
        let v = (x / scale).round(); // f64::round is round-half-away-from-zero
        if v < i16::MIN as f64 || v > i16::MAX as f64 {
            return Err(SignalError::Overflow { index, value: v });
        }
        samples.push(v as i16);
    }
    Ok(QuantizedSignal { samples, scale, sample_rate_hz: s.sample_rate_hz })
}

pub fn dequantize(q: &QuantizedSignal) -> Signal {
    Signal {
        samples: q.samples.iter().map(|&v| v as f64 * q.scale).collect(),
        sample_rate_hz: q.sample_rate_hz,
    }
}

impl Signal {
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum()
    }

    /// CSV form: `# sample_rate_hz=<v>` header, then one sample per line.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# sample_rate_hz={}\n", self.sample_rate_hz);
        for s in &self.samples {
            out.push_str(&format!("{s}\n"));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Signal, SignalError> {
        let (headers, samples) = parse_csv(text)?;
        if headers.len() != 1 {
            return Err(SignalError::BadFormat(
                "expected exactly one header line (# sample_rate_hz=...)".into(),
            ));
        }
        let sample_rate_hz = header_value(&headers[0], "sample_rate_hz")?;
        if !(sample_rate_hz > 0.0) {
            return Err(SignalError::NonPositiveSampleRate(sample_rate_hz));
        }
        if samples.is_empty() {
            return Err(SignalError::EmptySignal);
        }
        Ok(Signal { samples, sample_rate_hz })
    }
}

impl QuantizedSignal {
    /// Canonical byte image of the sample sequence: each count as
    /// little-endian i16. This is what container checksums and
    /// compression ratios are measured against.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.samples.len() * 2);
        for &s in &self.samples {
            out.extend_from_slice(&s.to_le_bytes());
        }
        out
    }

    /// CSV form adds a `# scale=<v>` second header line.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# sample_rate_hz={}\n# scale={}\n",
            self.sample_rate_hz, self.scale
        );
        for s in &self.samples {
            out.push_str(&format!("{s}\n"));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<QuantizedSignal, SignalError> {
        let (headers, samples) = parse_csv(text)?;
        if headers.len() != 2 {
            return Err(SignalError::BadFormat(
                "expected two header lines (# sample_rate_hz=..., # scale=...)".into(),
            ));
        }
        let sample_rate_hz = header_value(&headers[0], "sample_rate_hz")?;
        let scale = header_value(&headers[1], "scale")?;
        if !(scale > 0.0) {
            return Err(SignalError::BadScale(scale));
        }
        if samples.is_empty() {
            return Err(SignalError::EmptySignal);
        }
        let mut out = Vec::with_capacity(samples.len());
        for (i, v) in samples.iter().enumerate() {
            if v.fract() != 0.0 || *v < i16::MIN as f64 || *v > i16::MAX as f64 {
                return Err(SignalError::BadFormat(format!(
                    "sample {i} is not a 16-bit integer: {v}"
                )));
            }
            out.push(*v as i16);
        }
        Ok(QuantizedSignal { samples: out, scale, sample_rate_hz })
    }
}

fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<f64>), SignalError> {
    let mut headers = Vec::new();
    let mut samples = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if !samples.is_empty() {
                return Err(SignalError::BadFormat(format!(
                    "header after data at line {}",
                    lineno + 1
                )));
            }
            headers.push(rest.trim().to_string());
        } else {
            let v: f64 = line.parse().map_err(|_| {
                SignalError::BadFormat(format!("bad sample at line {}: {line:?}", lineno + 1))
            })?;
            if !v.is_finite() {
                return Err(SignalError::NonFinite { index: samples.len() });
            }
            samples.push(v);
        }
    }
    Ok((headers, samples))
}

fn header_value(header: &str, key: &str) -> Result<f64, SignalError> {
    let (k, v) = header
        .split_once('=')
        .ok_or_else(|| SignalError::BadFormat(format!("malformed header {header:?}")))?;
    if k.trim() != key {
        return Err(SignalError::BadFormat(format!(
            "expected header {key}, found {k:?}"
        )));
    }
    v.trim()
        .parse()
        .map_err(|_| SignalError::BadFormat(format!("bad value in header {header:?}")))
}
