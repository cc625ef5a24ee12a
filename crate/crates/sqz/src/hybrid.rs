//! Hybrid coding: estimate the sinusoidal fundamental with five parameters
//! (begin/end samples, amplitude, frequency, phase), subtract it, and code
//! the residue with the wavelet coder.
//!
//! Frequency comes from the argmax of a Hann-windowed, 4x zero-padded FFT
//! magnitude inside the search band, refined by quadratic interpolation of
//! the log magnitude; amplitude and phase come from a least-squares fit of
//! `a*sin + b*cos` at that frequency. On a clean sine the recovered
//! parameters cancel the signal to numerical noise, in which case the
//! residue block is omitted entirely.
//!
//! Payload layout (after the SQZ1 header, little-endian):
//!
//! ```text
//! offset  size  field
//!      0     8  begin sample
//!      8     8  end sample
//!     16     8  amplitude (f64 bits)
//!     24     8  frequency Hz (f64 bits)
//!     32     8  phase rad (f64 bits)
//!     40     8  sample_rate_hz (f64 bits)
//!     48     4  residue container length (0 = residue omitted)
//!     52     -  embedded SQZ1 wavelet container for the residue
//! ```

use std::fmt;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::codecs::CodecError;
use crate::container::{Algorithm, Codestream};
use crate::signal::Signal;
use crate::wavelet::{self, LossyPlan, WaveletError, BYTES_PER_SAMPLE};

pub const PARAM_BLOCK_LEN: usize = 52;
/// Default search band, wide enough for 50/60 Hz power fundamentals.
pub const DEFAULT_BAND: (f64, f64) = (30.0, 90.0);
/// Residues below this fraction of signal energy are not worth coding.
const NEGLIGIBLE_RESIDUE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum HybridError {
    /// Peak magnitude under 3x the band median (or an all-zero record).
    NoFundamental { peak: f64, median: f64 },
    BandEmpty { lo_hz: f64, hi_hz: f64 },
    TooShort { len: usize, needed: usize },
    BadParams(String),
    Wavelet(WaveletError),
    Codec(CodecError),
}

impl fmt::Display for HybridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HybridError::NoFundamental { peak, median } => {
                write!(f, "no dominant fundamental (peak {peak:.3e}, band median {median:.3e})")
            }
            HybridError::BandEmpty { lo_hz, hi_hz } => {
                write!(f, "search band [{lo_hz}, {hi_hz}] Hz contains no usable bins")
            }
            HybridError::TooShort { len, needed } => {
                write!(f, "record too short: {len} samples, need {needed} (4 cycles at band floor)")
            }
            HybridError::BadParams(msg) => write!(f, "bad fundamental parameters: {msg}"),
            HybridError::Wavelet(e) => write!(f, "{e}"),
            HybridError::Codec(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for HybridError {}

impl From<WaveletError> for HybridError {
    fn from(e: WaveletError) -> HybridError {
        HybridError::Wavelet(e)
    }
}

impl From<CodecError> for HybridError {
    fn from(e: CodecError) -> HybridError {
        HybridError::Codec(e)
    }
}

impl From<crate::container::ContainerError> for HybridError {
    fn from(e: crate::container::ContainerError) -> HybridError {
        HybridError::Codec(CodecError::Container(e))
    }
}

/// The five-parameter model of the fundamental component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalParams {
    pub begin_sample: usize,
    pub end_sample: usize,
    pub amplitude: f64,
    pub freq_hz: f64,
    pub phase_rad: f64,
}

impl FundamentalParams {
    fn validate(&self, len: usize, sample_rate_hz: f64) -> Result<(), HybridError> {
        if self.begin_sample >= self.end_sample || self.end_sample > len {
            return Err(HybridError::BadParams(format!(
                "interval [{}, {}) invalid for length {len}",
                self.begin_sample, self.end_sample
            )));
        }
        if !(self.freq_hz > 0.0 && self.freq_hz < sample_rate_hz / 2.0) {
            return Err(HybridError::BadParams(format!(
                "frequency {} Hz outside (0, {})",
                self.freq_hz,
                sample_rate_hz / 2.0
            )));
        }
        if !(self.amplitude >= 0.0) || !self.amplitude.is_finite() {
            return Err(HybridError::BadParams(format!("amplitude {}", self.amplitude)));
        }
        Ok(())
    }
}

/// Estimator options; segmentation restricts the fit to the longest span of
/// cycles whose RMS stays within 3 dB of the record median.
#[derive(Debug, Clone, Copy)]
pub struct EstimatorConfig {
    pub band_hz: (f64, f64),
    pub segmentation: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig { band_hz: DEFAULT_BAND, segmentation: false }
    }
}

/// Estimate the fundamental inside `cfg.band_hz`.
pub fn estimate_fundamental(s: &Signal, cfg: &EstimatorConfig) -> Result<FundamentalParams, HybridError> {
    let n = s.samples.len();
    let fs = s.sample_rate_hz;
    let (lo, hi) = cfg.band_hz;
    let lo = lo.max(fs / n as f64); // at least one cycle in the record
    if !(lo < hi) || hi <= 0.0 || lo >= fs / 2.0 {
        return Err(HybridError::BandEmpty { lo_hz: cfg.band_hz.0, hi_hz: cfg.band_hz.1 });
    }
    let hi = hi.min(fs / 2.0 * 0.999);
    let needed = (4.0 * fs / lo).ceil() as usize;
    if n < needed {
        return Err(HybridError::TooShort { len: n, needed });
    }

    // Hann window against leakage, 4x zero-padding for interpolation.
    let fft_len = (4 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = Vec::with_capacity(fft_len);
    let w_step = std::f64::consts::TAU / (n as f64 - 1.0);
    for (k, &x) in s.samples.iter().enumerate() {
        let w = 0.5 * (1.0 - (w_step * k as f64).cos());
        buf.push(Complex::new(x * w, 0.0));
    }
    buf.resize(fft_len, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(fft_len).process(&mut buf);

    let bin_hz = fs / fft_len as f64;
    let k_lo = (lo / bin_hz).ceil() as usize;
    let k_hi = ((hi / bin_hz).floor() as usize).min(fft_len / 2 - 1);
    if k_lo > k_hi || k_lo == 0 {
        return Err(HybridError::BandEmpty { lo_hz: cfg.band_hz.0, hi_hz: cfg.band_hz.1 });
    }
    let mags: Vec<f64> = (k_lo..=k_hi).map(|k| buf[k].norm()).collect();
    let (arg, peak) = mags
        .iter()
        .enumerate()
        .fold((0usize, 0.0f64), |acc, (i, &m)| if m > acc.1 { (i, m) } else { acc });
    let mut sorted = mags.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[sorted.len() / 2];
    if peak <= 0.0 || peak < 3.0 * median {
        return Err(HybridError::NoFundamental { peak, median });
    }

    // Quadratic interpolation of the log magnitude around the peak bin.
    let k_peak = k_lo + arg;
    let mut delta = 0.0f64;
    if k_peak > 0 && k_peak + 1 < fft_len / 2 {
        let lm = buf[k_peak - 1].norm().ln();
        let l0 = buf[k_peak].norm().ln();
        let lp = buf[k_peak + 1].norm().ln();
        let denom = lm - 2.0 * l0 + lp;
        if denom.is_finite() && denom != 0.0 {
            let d = 0.5 * (lm - lp) / denom;
            if d.is_finite() && d.abs() <= 1.0 {
                delta = d;
            }
        }
    }
    let freq_hz = (k_peak as f64 + delta) * bin_hz;

    let (begin, end) = if cfg.segmentation {
        dominant_segment(&s.samples, fs, freq_hz)
    } else {
        (0, n)
    };

    let (amplitude, phase_rad) = fit_amplitude_phase(&s.samples[begin..end], begin, fs, freq_hz)
        .ok_or(HybridError::NoFundamental { peak, median })?;
    let p = FundamentalParams { begin_sample: begin, end_sample: end, amplitude, freq_hz, phase_rad };
    p.validate(n, fs)?;
    Ok(p)
}

/// Least-squares `a*sin(wk) + b*cos(wk)` over samples [offset, offset+len);
/// the phase is referenced to absolute sample index k = 0.
fn fit_amplitude_phase(chunk: &[f64], offset: usize, fs: f64, freq_hz: f64) -> Option<(f64, f64)> {
    let w = std::f64::consts::TAU * freq_hz / fs;
    let (mut ss, mut cc, mut sc, mut ys, mut yc) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (i, &y) in chunk.iter().enumerate() {
        let t = w * (offset + i) as f64;
        let (sin, cos) = t.sin_cos();
        ss += sin * sin;
        cc += cos * cos;
        sc += sin * cos;
        ys += y * sin;
        yc += y * cos;
    }
    let det = ss * cc - sc * sc;
    if !det.is_finite() || det.abs() < 1e-12 {
        return None;
    }
    let a = (ys * cc - yc * sc) / det;
    let b = (yc * ss - ys * sc) / det;
    let amplitude = a.hypot(b);
    let mut phase = b.atan2(a); // a sin + b cos = A sin(t + phase)
    if phase <= -std::f64::consts::PI {
        phase += std::f64::consts::TAU;
    }
    Some((amplitude, phase))
}

/// Longest run of whole cycles whose RMS stays within 3 dB of the median
/// cycle RMS, as a sample interval. Falls back to the full record.
fn dominant_segment(samples: &[f64], fs: f64, freq_hz: f64) -> (usize, usize) {
    let n = samples.len();
    let cycle = (fs / freq_hz).round() as usize;
    if cycle == 0 || n < 2 * cycle {
        return (0, n);
    }
    let cycles = n / cycle;
    let rms: Vec<f64> = (0..cycles)
        .map(|j| {
            let c = &samples[j * cycle..(j + 1) * cycle];
            (c.iter().map(|v| v * v).sum::<f64>() / cycle as f64).sqrt()
        })
        .collect();
    let mut sorted = rms.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[sorted.len() / 2];
    let tol = 10f64.powf(3.0 / 20.0);
    let ok = |r: f64| r <= median * tol && r >= median / tol;
    let mut best = (0usize, 0usize);
    let mut run_start = None;
    for (j, &r) in rms.iter().enumerate() {
        match (run_start, ok(r)) {
            (None, true) => run_start = Some(j),
            (Some(st), false) => {
                if j - st > best.1 - best.0 {
                    best = (st, j);
                }
                run_start = None;
            }
            _ => {}
        }
    }
    if let Some(st) = run_start {
        if cycles - st > best.1 - best.0 {
            best = (st, cycles);
        }
    }
    if best.1 == best.0 {
        return (0, n);
    }
    let begin = best.0 * cycle;
    let end = if best.1 == cycles { n } else { best.1 * cycle };
    (begin, end)
}

/// residue[k] = s[k] - A sin(2 pi f k / fs + phase) on [begin, end); s elsewhere.
pub fn subtract_fundamental(s: &Signal, p: &FundamentalParams) -> Result<Signal, HybridError> {
    p.validate(s.samples.len(), s.sample_rate_hz)?;
    let w = std::f64::consts::TAU * p.freq_hz / s.sample_rate_hz;
    let samples = s
        .samples
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            if k >= p.begin_sample && k < p.end_sample {
                x - p.amplitude * (w * k as f64 + p.phase_rad).sin()
            } else {
                x
            }
        })
        .collect();
    Ok(Signal { samples, sample_rate_hz: s.sample_rate_hz })
}

fn render_fundamental(p: &FundamentalParams, n: usize, fs: f64) -> Vec<f64> {
    let w = std::f64::consts::TAU * p.freq_hz / fs;
    (0..n)
        .map(|k| {
            if k >= p.begin_sample && k < p.end_sample {
                p.amplitude * (w * k as f64 + p.phase_rad).sin()
            } else {
                0.0
            }
        })
        .collect()
}

/// Residue plan that lands the whole hybrid container at `overall_ratio`,
/// accounting for the parameter block and outer header.
pub fn plan_for_overall_ratio(n_samples: usize, overall_ratio: f64) -> Result<LossyPlan, HybridError> {
    let original = (n_samples * BYTES_PER_SAMPLE) as f64;
    let budget = original / overall_ratio
        - (crate::container::HEADER_LEN + PARAM_BLOCK_LEN) as f64;
    if budget <= 0.0 {
        return Err(HybridError::Wavelet(WaveletError::RatioUnreachable {
            target_ratio: overall_ratio,
        }));
    }
    Ok(LossyPlan::new(original / budget))
}

pub fn encode(
    s: &Signal,
    residue_plan: &LossyPlan,
    cfg: &EstimatorConfig,
) -> Result<Codestream, HybridError> {
    let p = estimate_fundamental(s, cfg)?;
    let residue = subtract_fundamental(s, &p)?;

    let signal_energy = s.energy();
    let residue_energy = residue.energy();
    let residue_bytes = if signal_energy > 0.0 && residue_energy <= NEGLIGIBLE_RESIDUE * signal_energy {
        Vec::new()
    } else {
        wavelet::compress(&residue, residue_plan)?.to_bytes()
    };

    let mut payload = Vec::with_capacity(PARAM_BLOCK_LEN + residue_bytes.len());
    payload.extend_from_slice(&(p.begin_sample as u64).to_le_bytes());
    payload.extend_from_slice(&(p.end_sample as u64).to_le_bytes());
    payload.extend_from_slice(&p.amplitude.to_le_bytes());
    payload.extend_from_slice(&p.freq_hz.to_le_bytes());
    payload.extend_from_slice(&p.phase_rad.to_le_bytes());
    payload.extend_from_slice(&s.sample_rate_hz.to_le_bytes());
    payload.extend_from_slice(&(residue_bytes.len() as u32).to_le_bytes());
    payload.extend_from_slice(&residue_bytes);

    Ok(Codestream::new_lossy(
        Algorithm::Hybrid,
        (s.samples.len() * BYTES_PER_SAMPLE) as u64,
        payload,
    ))
}

pub fn decode(c: &Codestream) -> Result<Signal, HybridError> {
    let (p, residue) = decode_parts(c)?;
    let fundamental = render_fundamental(&p, residue.samples.len(), residue.sample_rate_hz);
    let samples = residue
        .samples
        .iter()
        .zip(&fundamental)
        .map(|(r, f)| r + f)
        .collect();
    Ok(Signal { samples, sample_rate_hz: residue.sample_rate_hz })
}

/// The transmitted parameters and the decoded residue (zeros when the
/// encoder omitted it).
pub fn decode_parts(c: &Codestream) -> Result<(FundamentalParams, Signal), HybridError> {
    if c.algo != Algorithm::Hybrid {
        return Err(CodecError::WrongAlgorithm { expected: Algorithm::Hybrid, found: c.algo }.into());
    }
    if c.payload.len() < PARAM_BLOCK_LEN {
        return Err(CodecError::CorruptStream("hybrid payload shorter than parameter block").into());
    }
    let begin = u64::from_le_bytes(c.payload[0..8].try_into().unwrap()) as usize;
    let end = u64::from_le_bytes(c.payload[8..16].try_into().unwrap()) as usize;
    let amplitude = f64::from_le_bytes(c.payload[16..24].try_into().unwrap());
    let freq_hz = f64::from_le_bytes(c.payload[24..32].try_into().unwrap());
    let phase_rad = f64::from_le_bytes(c.payload[32..40].try_into().unwrap());
    let sample_rate_hz = f64::from_le_bytes(c.payload[40..48].try_into().unwrap());
    let residue_len = u32::from_le_bytes(c.payload[48..52].try_into().unwrap()) as usize;
    if c.payload.len() != PARAM_BLOCK_LEN + residue_len {
        return Err(CodecError::CorruptStream("hybrid residue length mismatch").into());
    }
    if !(sample_rate_hz > 0.0) || !sample_rate_hz.is_finite() {
        return Err(CodecError::CorruptStream("bad sample rate in hybrid block").into());
    }
    let n = (c.original_len as usize) / BYTES_PER_SAMPLE;

    let samples = if residue_len > 0 {
        let inner = Codestream::from_bytes(&c.payload[PARAM_BLOCK_LEN..])?;
        let residue = wavelet::decompress(&inner)?;
        if residue.samples.len() != n {
            return Err(CodecError::CorruptStream("residue length disagrees with container").into());
        }
        if (residue.sample_rate_hz - sample_rate_hz).abs() > 1e-9 {
            return Err(CodecError::CorruptStream("residue sample rate disagrees with block").into());
        }
        residue.samples
    } else {
        // Residue was numerically negligible; the fundamental alone stands.
        vec![0.0; n]
    };

    let p = FundamentalParams { begin_sample: begin, end_sample: end, amplitude, freq_hz, phase_rad };
    p.validate(n, sample_rate_hz)?;
    Ok((p, Signal { samples, sample_rate_hz }))
}
