//! `sqz` — command-line front end for the compression toolkit.
//!
//! Subcommands: gen, compress, decompress, metrics, plotdata, romfit,
//! memsim. Exit codes are a stable scripting contract:
//! 0 success, 2 usage/input errors, 3 processing errors, 4 integrity
//! failures, 5 no flash device fits.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sqz::codecs::{self, CodecError};
use sqz::container::{Algorithm, Codestream, ContainerError};
use sqz::hybrid::{self, EstimatorConfig};
use sqz::memsim::{self, CacheConfig, LineCodec, MemoryImage};
use sqz::metrics;
use sqz::periodic::{self, PredictiveConfig};
use sqz::romtool::{self, CompressionPolicy, StubTable};
use sqz::signal::{self, QuantizedSignal, Signal, SineSpec};
use sqz::wavelet::{self, LossyPlan};

const EXIT_USAGE: u8 = 2;
const EXIT_PROCESSING: u8 = 3;
const EXIT_INTEGRITY: u8 = 4;
const EXIT_NO_FIT: u8 = 5;

#[derive(Parser)]
#[command(name = "sqz", version, about = "Signal and firmware compression toolkit")]
struct Cli {
    /// Seed for every stochastic step (noise generation).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Report format for metrics/romfit/memsim output.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate test waveforms as signal CSV files.
    Gen(GenArgs),
    /// Compress a file or signal into an SQZ1 container.
    Compress(CompressArgs),
    /// Expand an SQZ1 container back to bytes or a signal CSV.
    Decompress(DecompressArgs),
    /// Distortion metrics between two signal CSV files.
    Metrics(MetricsArgs),
    /// Four-column original/coding/decoding/error CSV for plotting.
    Plotdata(PlotArgs),
    /// Firmware flash-fit analysis.
    Romfit(RomfitArgs),
    /// Trace-driven compressed-main-memory simulation.
    Memsim(MemsimArgs),
}

#[derive(Args)]
struct GenArgs {
    #[command(subcommand)]
    shape: GenShape,
}

#[derive(Args, Clone)]
struct BaseSine {
    /// Fundamental amplitude.
    #[arg(long, default_value_t = 1.0)]
    amp: f64,
    /// Fundamental frequency in Hz.
    #[arg(long, default_value_t = 60.0)]
    freq: f64,
    /// Fundamental phase in radians.
    #[arg(long, default_value_t = 0.0)]
    phase: f64,
    /// Sample rate in Hz.
    #[arg(long, default_value_t = 15360.0)]
    fs: f64,
    /// Number of samples.
    #[arg(long)]
    n: usize,
    /// Add seeded Gaussian noise calibrated to this SNR in dB.
    #[arg(long)]
    snr_db: Option<f64>,
    /// Quantize to 16-bit counts at this scale (volts per count) and emit
    /// a quantized CSV.
    #[arg(long)]
    quantize: Option<f64>,
    /// Output file (stdout when omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GenShape {
    /// Pure sinusoid.
    Sine(BaseSine),
    /// Sinusoid with an amplitude dip over [start, end).
    Dip {
        #[command(flatten)]
        base: BaseSine,
        #[arg(long)]
        start: usize,
        #[arg(long)]
        end: usize,
        #[arg(long)]
        factor: f64,
    },
    /// Sinusoid with recurring damped oscillatory transients.
    Transients {
        #[command(flatten)]
        base: BaseSine,
        /// Samples between transient onsets (first onset at sample 0).
        #[arg(long)]
        period: usize,
        #[arg(long)]
        tamp: f64,
        /// Per-sample envelope decay in (0, 1).
        #[arg(long)]
        decay: f64,
        #[arg(long)]
        tfreq: f64,
    },
}

#[derive(Args)]
struct CompressArgs {
    /// rle | lzw | lzss | lzar | predictive | wavelet | hybrid
    #[arg(long)]
    algo: String,
    /// Target compression ratio (wavelet: transform budget; hybrid:
    /// overall container budget).
    #[arg(long)]
    ratio: Option<f64>,
    /// Quantizer bits for the lossy coders (4..=16).
    #[arg(long, default_value_t = 12)]
    bits: u32,
    /// Fundamental search band for hybrid, as LO:HI in Hz.
    #[arg(long, default_value = "30:90")]
    band: String,
    /// Restrict the hybrid fit to the dominant-amplitude segment.
    #[arg(long, default_value_t = false)]
    segment: bool,
    /// Period search bounds for predictive, as MIN[:MAX] in samples.
    #[arg(long, default_value = "8")]
    period_range: String,
    /// Dictionary size (retained periods) for predictive.
    #[arg(long, default_value_t = 4)]
    templates: usize,
    /// Decompress in memory and compare before writing (lossless algos).
    #[arg(long, default_value_t = false)]
    verify: bool,
    #[arg(short, long)]
    output: PathBuf,
    input: PathBuf,
}

#[derive(Args)]
struct DecompressArgs {
    #[arg(short, long)]
    output: PathBuf,
    input: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    original: PathBuf,
    #[arg(long)]
    decoded: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// predictive | wavelet | hybrid
    #[arg(long)]
    algo: String,
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long, default_value_t = 12)]
    bits: u32,
    #[arg(long, default_value = "30:90")]
    band: String,
    #[arg(long, default_value = "8")]
    period_range: String,
    #[arg(long, default_value_t = 4)]
    templates: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
    input: PathBuf,
}

#[derive(Args)]
struct RomfitArgs {
    /// Intel HEX image.
    #[arg(long, conflicts_with = "bin")]
    image: Option<PathBuf>,
    /// Raw binary image (requires --base).
    #[arg(long, requires = "base")]
    bin: Option<PathBuf>,
    /// Base address of a raw binary image.
    #[arg(long, value_parser = parse_u32_flexible)]
    base: Option<u32>,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    catalog: PathBuf,
    /// Override section policies: kind=algo (algo: rle|lzw|lzss|lzar|store).
    #[arg(long = "policy")]
    policies: Vec<String>,
    /// Override stub sizes: algo=bytes.
    #[arg(long = "stub")]
    stubs: Vec<String>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct MemsimArgs {
    /// Raw binary memory image.
    #[arg(long)]
    image: PathBuf,
    #[arg(long, value_parser = parse_u32_flexible, default_value = "0")]
    base: u32,
    /// Trace CSV: lines of R,<hex addr> / W,<hex addr>.
    #[arg(long)]
    trace: PathBuf,
    #[arg(long, default_value_t = 32)]
    line: usize,
    #[arg(long, default_value_t = 64)]
    sets: usize,
    #[arg(long, default_value_t = 4)]
    ways: usize,
    /// Slot size of the compressed storage area (8 or 12).
    #[arg(long, default_value_t = 12)]
    slot: usize,
    /// rle | lzss | lzar
    #[arg(long, default_value = "rle")]
    codec: String,
    /// Run both slot sizes and report the comparison.
    #[arg(long, default_value_t = false)]
    sweep: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn parse_u32_flexible(s: &str) -> Result<u32, String> {
    let s = s.trim();
    if let Some(hex) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        u32::from_str_radix(hex, 16).map_err(|e| e.to_string())
    } else {
        s.parse().map_err(|e: std::num::ParseIntError| e.to_string())
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(msg: impl Display) -> Failure {
        Failure { code: EXIT_USAGE, message: msg.to_string() }
    }

    fn processing(msg: impl Display) -> Failure {
        Failure { code: EXIT_PROCESSING, message: msg.to_string() }
    }

    fn integrity(msg: impl Display) -> Failure {
        Failure { code: EXIT_INTEGRITY, message: msg.to_string() }
    }

    fn from_codec(e: CodecError) -> Failure {
        match &e {
            CodecError::Container(ContainerError::ChecksumMismatch) => Failure::integrity(e),
            _ => Failure::processing(e),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse(); // clap exits 2 on usage errors
    let result = match cli.cmd {
        Cmd::Gen(args) => cmd_gen(args, cli.seed),
        Cmd::Compress(args) => cmd_compress(args, cli.format),
        Cmd::Decompress(args) => cmd_decompress(args),
        Cmd::Metrics(args) => cmd_metrics(args, cli.format),
        Cmd::Plotdata(args) => cmd_plotdata(args),
        Cmd::Romfit(args) => cmd_romfit(args, cli.format),
        Cmd::Memsim(args) => cmd_memsim(args, cli.format),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

// ---------------------------------------------------------------------------
// IO helpers
// ---------------------------------------------------------------------------

fn require_file(path: &Path) -> Result<(), Failure> {
    if !path.is_file() {
        return Err(Failure::usage(format!("input file not found: {}", path.display())));
    }
    Ok(())
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, Failure> {
    require_file(path)?;
    fs::read(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    require_file(path)?;
    fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

/// Atomic write: temp file in the target directory, then rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)
        .and_then(|()| fs::rename(&tmp, path))
        .map_err(|e| Failure::processing(format!("cannot write {}: {e}", path.display())))
}

fn emit(output: Option<&Path>, content: &str) -> Result<(), Failure> {
    match output {
        Some(path) => write_atomic(path, content.as_bytes()),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// A signal CSV, either plain or quantized (dequantized on load).
fn load_signal(path: &Path) -> Result<Signal, Failure> {
    let text = read_text(path)?;
    if let Ok(s) = Signal::from_csv(&text) {
        return Ok(s);
    }
    QuantizedSignal::from_csv(&text)
        .map(|q| signal::dequantize(&q))
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn load_quantized(path: &Path) -> Result<QuantizedSignal, Failure> {
    let text = read_text(path)?;
    QuantizedSignal::from_csv(&text).map_err(|e| {
        Failure::usage(format!(
            "{}: {e} (predictive input must be a quantized CSV; use gen --quantize)",
            path.display()
        ))
    })
}

fn parse_band(s: &str) -> Result<(f64, f64), Failure> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| Failure::usage(format!("--band expects LO:HI, got {s:?}")))?;
    let lo: f64 = lo.trim().parse().map_err(|_| Failure::usage("bad --band low bound"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| Failure::usage("bad --band high bound"))?;
    Ok((lo, hi))
}

fn parse_period_range(s: &str) -> Result<(usize, Option<usize>), Failure> {
    match s.split_once(':') {
        Some((lo, hi)) => {
            let lo = lo.trim().parse().map_err(|_| Failure::usage("bad --period-range"))?;
            let hi = hi.trim().parse().map_err(|_| Failure::usage("bad --period-range"))?;
            Ok((lo, Some(hi)))
        }
        None => {
            let lo = s.trim().parse().map_err(|_| Failure::usage("bad --period-range"))?;
            Ok((lo, None))
        }
    }
}

// ---------------------------------------------------------------------------
// gen
// ---------------------------------------------------------------------------

fn cmd_gen(args: GenArgs, seed: u64) -> Result<(), Failure> {
    let (base, built) = match args.shape {
        GenShape::Sine(base) => {
            let spec = sine_spec(&base);
            let s = signal::sine(spec, base.n).map_err(|e| Failure::usage(e))?;
            (base, s)
        }
        GenShape::Dip { base, start, end, factor } => {
            let spec = sine_spec(&base);
            let s = signal::voltage_dip(spec, start, end, factor, base.n)
                .map_err(|e| Failure::usage(e))?;
            (base, s)
        }
        GenShape::Transients { base, period, tamp, decay, tfreq } => {
            let spec = sine_spec(&base);
            let s = signal::transients(spec, period, tamp, decay, tfreq, base.n)
                .map_err(|e| Failure::usage(e))?;
            (base, s)
        }
    };
    let mut s = built;
    if let Some(snr) = base.snr_db {
        s = signal::add_noise(&s, snr, seed).map_err(|e| Failure::processing(e))?;
    }
    let csv = match base.quantize {
        Some(scale) => signal::quantize(&s, scale)
            .map_err(|e| Failure::processing(e))?
            .to_csv(),
        None => s.to_csv(),
    };
    emit(base.output.as_deref(), &csv)
}

fn sine_spec(base: &BaseSine) -> SineSpec {
    SineSpec {
        amplitude: base.amp,
        freq_hz: base.freq,
        phase_rad: base.phase,
        sample_rate_hz: base.fs,
    }
}

// ---------------------------------------------------------------------------
// compress / decompress
// ---------------------------------------------------------------------------

fn cmd_compress(args: CompressArgs, format: Format) -> Result<(), Failure> {
    let algo = Algorithm::from_name(&args.algo)
        .ok_or_else(|| Failure::usage(format!("unknown algorithm {:?}", args.algo)))?;
    require_file(&args.input)?;

    let (stream, original_bytes, distortion): (Codestream, u64, Option<metrics::DistortionReport>) =
        match algo {
            Algorithm::Rle | Algorithm::Lzw | Algorithm::Lzss | Algorithm::Lzar => {
                let data = read_bytes(&args.input)?;
                let c = codecs::encode(algo, &data).map_err(Failure::from_codec)?;
                if args.verify {
                    let back = codecs::decode(&c).map_err(Failure::from_codec)?;
                    if back != data {
                        return Err(Failure::integrity("verification mismatch after decode"));
                    }
                }
                (c, data.len() as u64, None)
            }
            Algorithm::Predictive => {
                let q = load_quantized(&args.input)?;
                let (p_min, p_max) = parse_period_range(&args.period_range)?;
                let cfg = PredictiveConfig { p_min, p_max, templates: args.templates };
                let c = periodic::encode(&q, &cfg).map_err(|e| Failure::processing(e))?;
                let original = q.to_le_bytes();
                if args.verify {
                    let back = periodic::decode(&c).map_err(|e| Failure::processing(e))?;
                    if back != q {
                        return Err(Failure::integrity("verification mismatch after decode"));
                    }
                }
                (c, original.len() as u64, None)
            }
            Algorithm::Wavelet => {
                let s = load_signal(&args.input)?;
                let ratio = args.ratio.ok_or_else(|| Failure::usage("--ratio required for wavelet"))?;
                let plan = LossyPlan { target_ratio: ratio, quantizer_bits: args.bits };
                let c = wavelet::compress(&s, &plan).map_err(|e| Failure::processing(e))?;
                let back = wavelet::decompress(&c).map_err(|e| Failure::processing(e))?;
                let d = metrics::distortion(&s, &back).map_err(|e| Failure::processing(e))?;
                (c, (s.samples.len() * wavelet::BYTES_PER_SAMPLE) as u64, Some(d))
            }
            Algorithm::Hybrid => {
                let s = load_signal(&args.input)?;
                let ratio = args.ratio.ok_or_else(|| Failure::usage("--ratio required for hybrid"))?;
                let mut plan = hybrid::plan_for_overall_ratio(s.samples.len(), ratio)
                    .map_err(|e| Failure::processing(e))?;
                plan.quantizer_bits = args.bits;
                let cfg = EstimatorConfig { band_hz: parse_band(&args.band)?, segmentation: args.segment };
                let c = hybrid::encode(&s, &plan, &cfg).map_err(|e| Failure::processing(e))?;
                let back = hybrid::decode(&c).map_err(|e| Failure::processing(e))?;
                let d = metrics::distortion(&s, &back).map_err(|e| Failure::processing(e))?;
                (c, (s.samples.len() * wavelet::BYTES_PER_SAMPLE) as u64, Some(d))
            }
        };

    let bytes = stream.to_bytes();
    write_atomic(&args.output, &bytes)?;
    let ratio = original_bytes as f64 / bytes.len() as f64;
    let mut report = serde_json::json!({
        "algo": algo.name(),
        "original_bytes": original_bytes,
        "compressed_bytes": bytes.len(),
        "ratio": ratio,
        "ratio_display": metrics::ratio_display(ratio),
    });
    if let Some(d) = distortion {
        report["distortion"] = serde_json::to_value(&d).unwrap();
    }
    match format {
        Format::Json => println!("{report}"),
        Format::Table => {
            println!(
                "{}: {} -> {} bytes ({})",
                algo.name(),
                original_bytes,
                bytes.len(),
                metrics::ratio_display(ratio)
            );
            if let Some(d) = distortion {
                println!("nmse {:.3e}  prd {:.3}%  snr {:.2} dB", d.nmse, d.prd_pct, d.snr_db);
            }
        }
    }
    Ok(())
}

fn cmd_decompress(args: DecompressArgs) -> Result<(), Failure> {
    let bytes = read_bytes(&args.input)?;
    let c = Codestream::from_bytes(&bytes)
        .map_err(|e| Failure::from_codec(CodecError::Container(e)))?;
    match c.algo {
        Algorithm::Rle | Algorithm::Lzw | Algorithm::Lzss | Algorithm::Lzar => {
            let data = codecs::decode(&c).map_err(Failure::from_codec)?;
            write_atomic(&args.output, &data)
        }
        Algorithm::Predictive => {
            let q = periodic::decode(&c).map_err(|e| match e {
                periodic::PeriodicError::Codec(ce) => Failure::from_codec(ce),
                other => Failure::processing(other),
            })?;
            write_atomic(&args.output, q.to_csv().as_bytes())
        }
        Algorithm::Wavelet => {
            let s = wavelet::decompress(&c).map_err(|e| Failure::processing(e))?;
            write_atomic(&args.output, s.to_csv().as_bytes())
        }
        Algorithm::Hybrid => {
            let s = hybrid::decode(&c).map_err(|e| Failure::processing(e))?;
            write_atomic(&args.output, s.to_csv().as_bytes())
        }
    }
}

// ---------------------------------------------------------------------------
// metrics / plotdata
// ---------------------------------------------------------------------------

fn cmd_metrics(args: MetricsArgs, format: Format) -> Result<(), Failure> {
    let x = load_signal(&args.original)?;
    let xhat = load_signal(&args.decoded)?;
    let d = metrics::distortion(&x, &xhat).map_err(|e| Failure::processing(e))?;
    let content = match format {
        Format::Json => format!("{}\n", serde_json::to_string_pretty(&d).unwrap()),
        Format::Table => format!(
            "nmse: {:.6e}\nmse_db: {:.4}\nprd_pct: {:.4}\nsnr_db: {:.4}\n",
            d.nmse, d.mse_db, d.prd_pct, d.snr_db
        ),
    };
    emit(args.output.as_deref(), &content)
}

fn cmd_plotdata(args: PlotArgs) -> Result<(), Failure> {
    let algo = Algorithm::from_name(&args.algo)
        .ok_or_else(|| Failure::usage(format!("unknown algorithm {:?}", args.algo)))?;
    let (original, coding, decoded): (Vec<f64>, Vec<f64>, Signal) = match algo {
        Algorithm::Predictive => {
            let q = load_quantized(&args.input)?;
            let (p_min, p_max) = parse_period_range(&args.period_range)?;
            let cfg = PredictiveConfig { p_min, p_max, templates: args.templates };
            let profile =
                periodic::coding_profile(&q, &cfg).map_err(|e| Failure::processing(e))?;
            let c = periodic::encode(&q, &cfg).map_err(|e| Failure::processing(e))?;
            let back = periodic::decode(&c).map_err(|e| Failure::processing(e))?;
            (
                q.samples.iter().map(|&v| v as f64).collect(),
                profile.iter().map(|&v| v as f64).collect(),
                Signal {
                    samples: back.samples.iter().map(|&v| v as f64).collect(),
                    sample_rate_hz: back.sample_rate_hz,
                },
            )
        }
        Algorithm::Wavelet => {
            let s = load_signal(&args.input)?;
            let ratio = args.ratio.ok_or_else(|| Failure::usage("--ratio required for wavelet"))?;
            let plan = LossyPlan { target_ratio: ratio, quantizer_bits: args.bits };
            let c = wavelet::compress(&s, &plan).map_err(|e| Failure::processing(e))?;
            let coeffs = wavelet::kept_coefficients(&c).map_err(|e| Failure::processing(e))?;
            let back = wavelet::decompress(&c).map_err(|e| Failure::processing(e))?;
            let mut coding = coeffs;
            coding.resize(s.samples.len(), 0.0);
            (s.samples.clone(), coding, back)
        }
        Algorithm::Hybrid => {
            let s = load_signal(&args.input)?;
            let ratio = args.ratio.ok_or_else(|| Failure::usage("--ratio required for hybrid"))?;
            let mut plan = hybrid::plan_for_overall_ratio(s.samples.len(), ratio)
                .map_err(|e| Failure::processing(e))?;
            plan.quantizer_bits = args.bits;
            let cfg = EstimatorConfig { band_hz: parse_band(&args.band)?, segmentation: false };
            let c = hybrid::encode(&s, &plan, &cfg).map_err(|e| Failure::processing(e))?;
            let (_, residue) = hybrid::decode_parts(&c).map_err(|e| Failure::processing(e))?;
            let back = hybrid::decode(&c).map_err(|e| Failure::processing(e))?;
            (s.samples.clone(), residue.samples, back)
        }
        other => {
            return Err(Failure::usage(format!(
                "plotdata supports predictive, wavelet and hybrid; {} has no per-sample coding view",
                other.name()
            )))
        }
    };

    let mut out = format!("# sample_rate_hz={}\n", decoded.sample_rate_hz);
    out.push_str("original,coding_output,decoding_output,error\n");
    for k in 0..original.len() {
        let dec = decoded.samples.get(k).copied().unwrap_or(0.0);
        let err = original[k] - dec;
        out.push_str(&format!("{},{},{},{}\n", original[k], coding[k], dec, err));
    }
    emit(args.output.as_deref(), &out)
}

// ---------------------------------------------------------------------------
// romfit / memsim
// ---------------------------------------------------------------------------

fn cmd_romfit(args: RomfitArgs, format: Format) -> Result<(), Failure> {
    let img = match (&args.image, &args.bin) {
        (Some(hex), None) => {
            let text = read_text(hex)?;
            romtool::parse_ihex(&text).map_err(|e| Failure::processing(e))?
        }
        (None, Some(bin)) => {
            let bytes = read_bytes(bin)?;
            romtool::RomImage::from_binary(args.base.unwrap_or(0), &bytes)
        }
        _ => return Err(Failure::usage("exactly one of --image or --bin is required")),
    };
    let manifest = romtool::SectionManifest::from_json(&read_text(&args.manifest)?)
        .map_err(|e| Failure::processing(e))?;
    let catalog = romtool::DeviceCatalog::from_json(&read_text(&args.catalog)?)
        .map_err(|e| Failure::processing(e))?;
    let mut policy = CompressionPolicy::default();
    policy.apply_overrides(&args.policies).map_err(|e| Failure::usage(e))?;
    let mut stubs = StubTable::default();
    for s in &args.stubs {
        let (algo_s, bytes_s) = s
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("bad --stub entry {s:?}")))?;
        let algo = Algorithm::from_name(algo_s.trim())
            .ok_or_else(|| Failure::usage(format!("unknown stub algorithm {algo_s:?}")))?;
        let bytes = bytes_s.trim().parse().map_err(|_| Failure::usage("bad stub size"))?;
        stubs.set(algo, bytes);
    }

    let compressed =
        romtool::compress_image(&img, &manifest, &policy).map_err(|e| Failure::processing(e))?;
    let report =
        romtool::fit_report(&compressed, &catalog, &stubs).map_err(|e| Failure::processing(e))?;
    let content = match format {
        Format::Json => format!("{}\n", report.to_json()),
        Format::Table => report.render_table(),
    };
    emit(args.output.as_deref(), &content)?;
    if report.chosen_device.is_none() {
        return Err(Failure {
            code: EXIT_NO_FIT,
            message: "no device in the catalog fits the image".into(),
        });
    }
    Ok(())
}

fn cmd_memsim(args: MemsimArgs, format: Format) -> Result<(), Failure> {
    let bytes = read_bytes(&args.image)?;
    let image = MemoryImage { base: args.base, bytes };
    let trace = memsim::parse_trace(&read_text(&args.trace)?).map_err(|e| Failure::usage(e))?;
    let codec = LineCodec::from_name(&args.codec)
        .ok_or_else(|| Failure::usage(format!("unknown line codec {:?}", args.codec)))?;
    let cfg = CacheConfig {
        line_bytes: args.line,
        sets: args.sets,
        ways: args.ways,
        slot_bytes: args.slot,
        codec,
    };
    let content = if args.sweep {
        let sweep =
            memsim::sweep_slots(&image, &trace, &cfg).map_err(|e| Failure::processing(e))?;
        match format {
            Format::Json => format!("{}\n", serde_json::to_string_pretty(&sweep).unwrap()),
            Format::Table => format!(
                "S=8 : {} bytes ({:.1}% reduction)\nS=12: {} bytes ({:.1}% reduction)\ndelta: {} bytes\n",
                sweep.s8.bytes_compressed,
                sweep.s8.reduction_pct,
                sweep.s12.bytes_compressed,
                sweep.s12.reduction_pct,
                sweep.delta_bytes
            ),
        }
    } else {
        let out = memsim::run_trace(&image, &trace, &cfg).map_err(|e| Failure::processing(e))?;
        match format {
            Format::Json => format!("{}\n", serde_json::to_string_pretty(&out.stats).unwrap()),
            Format::Table => format!(
                "accesses {}  hits {}  misses {}  writebacks {}\ntraffic: {} of {} bytes ({:.1}% reduction)\n",
                out.stats.accesses,
                out.stats.hits,
                out.stats.misses,
                out.stats.writebacks,
                out.stats.bytes_compressed,
                out.stats.bytes_uncompressed_equiv,
                out.stats.reduction_pct
            ),
        }
    };
    emit(args.output.as_deref(), &content)
}
