//! Firmware flash-fit analysis: parse a linked image, compress its
//! sections per policy, charge decompressor-stub overhead once per
//! algorithm used, and pick the smallest flash device that holds the
//! result.
//!
//! Section byte accounting uses codec payload bytes; framing lives in the
//! boot manifest whose cost is part of the stub overhead. Non-relocatable
//! code is never compressed (it must execute in place), and `zerovars`
//! sections are implicit zero fill, so they need no image bytes at all.

pub mod ihex;

use std::collections::BTreeMap;
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};

use crate::codecs::{self, CodecError};
use crate::container::Algorithm;

pub use ihex::{parse_ihex, to_ihex, RomImage};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RomError {
    BadChecksum { line: usize },
    BadHexDigit { line: usize },
    BadRecord { line: usize, reason: String },
    MissingEof,
    OverlappingData { address: u32 },
    UnsupportedRecordType { line: usize, record_type: u8 },
    BadManifest(String),
    SectionNotCovered { name: String },
    PolicyUnknownAlgo { algo: String },
    EmptyCatalog,
    Codec(CodecError),
}

impl fmt::Display for RomError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RomError::BadChecksum { line } => write!(f, "bad record checksum at line {line}"),
            RomError::BadHexDigit { line } => write!(f, "bad hex digit at line {line}"),
            RomError::BadRecord { line, reason } => write!(f, "bad record at line {line}: {reason}"),
            RomError::MissingEof => write!(f, "missing EOF record"),
            RomError::OverlappingData { address } => {
                write!(f, "overlapping data at address {address:#010X}")
            }
            RomError::UnsupportedRecordType { line, record_type } => {
                write!(f, "unsupported record type {record_type:#04X} at line {line}")
            }
            RomError::BadManifest(msg) => write!(f, "bad manifest: {msg}"),
            RomError::SectionNotCovered { name } => {
                write!(f, "section {name} is not fully covered by the image")
            }
            RomError::PolicyUnknownAlgo { algo } => {
                write!(f, "policy names unknown or non-byte algorithm {algo:?}")
            }
            RomError::EmptyCatalog => write!(f, "device catalog is empty"),
            RomError::Codec(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for RomError {}

impl From<CodecError> for RomError {
    fn from(e: CodecError) -> RomError {
        RomError::Codec(e)
    }
}

// ---------------------------------------------------------------------------
// Manifest and catalog
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SectionKind {
    Code,
    Const,
    Initvars,
    Zerovars,
}

impl SectionKind {
    pub const ALL: [SectionKind; 4] = [
        SectionKind::Code,
        SectionKind::Const,
        SectionKind::Initvars,
        SectionKind::Zerovars,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SectionKind::Code => "code",
            SectionKind::Const => "const",
            SectionKind::Initvars => "initvars",
            SectionKind::Zerovars => "zerovars",
        }
    }
}

/// Accepts JSON numbers or "0x..." / decimal strings for addresses.
fn de_address<'de, D: Deserializer<'de>>(d: D) -> Result<u32, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(u64),
        Str(String),
    }
    let v = match Raw::deserialize(d)? {
        Raw::Num(n) => n,
        Raw::Str(s) => {
            let s = s.trim();
            if let Some(hex) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
                u64::from_str_radix(hex, 16).map_err(D::Error::custom)?
            } else {
                s.parse().map_err(D::Error::custom)?
            }
        }
    };
    u32::try_from(v).map_err(|_| D::Error::custom(format!("address {v:#X} exceeds 32 bits")))
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectionEntry {
    pub name: String,
    pub kind: SectionKind,
    #[serde(deserialize_with = "de_address")]
    pub start: u32,
    #[serde(deserialize_with = "de_address")]
    pub end: u32,
    /// Only meaningful for code: non-relocatable code must stay in place
    /// and is therefore never compressed.
    #[serde(default = "default_true")]
    pub relocatable: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectionManifest {
    pub sections: Vec<SectionEntry>,
}

impl SectionManifest {
    pub fn from_json(text: &str) -> Result<SectionManifest, RomError> {
        let m: SectionManifest =
            serde_json::from_str(text).map_err(|e| RomError::BadManifest(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), RomError> {
        let mut ranges: Vec<(u32, u32, &str)> = Vec::new();
        for s in &self.sections {
            if s.start >= s.end {
                return Err(RomError::BadManifest(format!(
                    "section {} has empty or inverted range",
                    s.name
                )));
            }
            ranges.push((s.start, s.end, &s.name));
        }
        ranges.sort();
        for w in ranges.windows(2) {
            if w[0].1 > w[1].0 {
                return Err(RomError::BadManifest(format!(
                    "sections {} and {} overlap",
                    w[0].2, w[1].2
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Device {
    pub name: String,
    pub flash_bytes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeviceCatalog {
    pub devices: Vec<Device>,
}

impl DeviceCatalog {
    pub fn from_json(text: &str) -> Result<DeviceCatalog, RomError> {
        let c: DeviceCatalog =
            serde_json::from_str(text).map_err(|e| RomError::BadManifest(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), RomError> {
        if self.devices.is_empty() {
            return Err(RomError::EmptyCatalog);
        }
        let mut names: Vec<&str> = self.devices.iter().map(|d| d.name.as_str()).collect();
        names.sort();
        names.dedup();
        if names.len() != self.devices.len() {
            return Err(RomError::BadManifest("duplicate device names".into()));
        }
        if self.devices.iter().any(|d| d.flash_bytes == 0) {
            return Err(RomError::BadManifest("zero-size device".into()));
        }
        Ok(())
    }

    /// Smallest device whose flash holds `total` bytes.
    pub fn smallest_fitting(&self, total: u64) -> Option<&Device> {
        self.devices
            .iter()
            .filter(|d| d.flash_bytes >= total)
            .min_by_key(|d| (d.flash_bytes, d.name.clone()))
    }
}

// ---------------------------------------------------------------------------
// Policy and stub accounting
// ---------------------------------------------------------------------------

/// Per-kind algorithm choice; None means store uncompressed.
#[derive(Debug, Clone)]
pub struct CompressionPolicy {
    map: BTreeMap<SectionKind, Option<Algorithm>>,
}

impl Default for CompressionPolicy {
    fn default() -> Self {
        let mut map = BTreeMap::new();
        map.insert(SectionKind::Code, Some(Algorithm::Lzw));
        map.insert(SectionKind::Const, Some(Algorithm::Lzw));
        map.insert(SectionKind::Initvars, Some(Algorithm::Rle));
        map.insert(SectionKind::Zerovars, Some(Algorithm::Rle));
        CompressionPolicy { map }
    }
}

impl CompressionPolicy {
    /// All sections stored raw; the no-compression baseline.
    pub fn store_all() -> CompressionPolicy {
        CompressionPolicy {
            map: SectionKind::ALL.iter().map(|k| (*k, None)).collect(),
        }
    }

    pub fn set(&mut self, kind: SectionKind, algo: Option<Algorithm>) -> Result<(), RomError> {
        if let Some(a) = algo {
            if !codecs::BYTE_CODECS.contains(&a) {
                return Err(RomError::PolicyUnknownAlgo { algo: a.name().into() });
            }
        }
        self.map.insert(kind, algo);
        Ok(())
    }

    /// Parse entries like `code=lzss`, `initvars=rle`, `const=store`.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<(), RomError> {
        for item in overrides {
            let (kind_s, algo_s) = item
                .split_once('=')
                .ok_or_else(|| RomError::BadManifest(format!("bad policy entry {item:?}")))?;
            let kind = SectionKind::ALL
                .iter()
                .find(|k| k.name() == kind_s.trim())
                .copied()
                .ok_or_else(|| RomError::BadManifest(format!("unknown section kind {kind_s:?}")))?;
            let algo_s = algo_s.trim();
            let algo = if algo_s == "store" {
                None
            } else {
                Some(
                    Algorithm::from_name(algo_s)
                        .ok_or(RomError::PolicyUnknownAlgo { algo: algo_s.to_string() })?,
                )
            };
            self.set(kind, algo)?;
        }
        Ok(())
    }

    pub fn algo_for(&self, kind: SectionKind) -> Option<Algorithm> {
        self.map.get(&kind).copied().flatten()
    }
}

/// Resident decompressor footprint charged once per algorithm used.
#[derive(Debug, Clone)]
pub struct StubTable {
    map: BTreeMap<Algorithm, u64>,
}

impl Default for StubTable {
    fn default() -> Self {
        let mut map = BTreeMap::new();
        map.insert(Algorithm::Rle, 100);
        map.insert(Algorithm::Lzw, 5120);
        map.insert(Algorithm::Lzss, 1024);
        map.insert(Algorithm::Lzar, 3072);
        StubTable { map }
    }
}

impl StubTable {
    pub fn set(&mut self, algo: Algorithm, bytes: u64) {
        self.map.insert(algo, bytes);
    }

    pub fn bytes_for(&self, algo: Algorithm) -> u64 {
        self.map.get(&algo).copied().unwrap_or(0)
    }
}

// ---------------------------------------------------------------------------
// Compression and fit reporting
// ---------------------------------------------------------------------------

/// A section after the compression pass. The codestream is retained so the
/// decompress-and-compare verification can run without re-reading inputs.
#[derive(Debug, Clone)]
pub struct CompressedSection {
    pub name: String,
    pub kind: SectionKind,
    pub raw_bytes: u64,
    pub algo: Option<Algorithm>,
    pub stream: Option<crate::container::Codestream>,
    pub compressed_bytes: u64,
    /// True when policy wanted compression but the section had to stay raw
    /// (non-relocatable code).
    pub forced_raw: bool,
}

impl CompressedSection {
    /// Recover the original section bytes (zero fill for zerovars).
    pub fn decompress(&self) -> Result<Vec<u8>, RomError> {
        match &self.stream {
            Some(c) => Ok(codecs::decode(c)?),
            None => Err(RomError::BadManifest(format!(
                "section {} was stored raw",
                self.name
            ))),
        }
    }
}

pub struct CompressedImage {
    pub sections: Vec<CompressedSection>,
}

/// Compress every manifest section out of `img` under `policy`.
pub fn compress_image(
    img: &RomImage,
    manifest: &SectionManifest,
    policy: &CompressionPolicy,
) -> Result<CompressedImage, RomError> {
    manifest.validate()?;
    let mut sections = Vec::with_capacity(manifest.sections.len());
    for entry in &manifest.sections {
        let len = (entry.end - entry.start) as u64;
        let bytes = if entry.kind == SectionKind::Zerovars {
            // Implicit zero fill; image content (if any) is not consulted.
            vec![0u8; len as usize]
        } else {
            img.extract(entry.start, entry.end)
                .ok_or_else(|| RomError::SectionNotCovered { name: entry.name.clone() })?
        };
        let wants_algo = policy.algo_for(entry.kind);
        let forced_raw =
            entry.kind == SectionKind::Code && !entry.relocatable && wants_algo.is_some();
        let algo = if forced_raw { None } else { wants_algo };
        let (stream, compressed_bytes) = match algo {
            Some(a) => {
                let c = codecs::encode(a, &bytes)?;
                let size = c.payload.len() as u64;
                (Some(c), size)
            }
            None => (None, len),
        };
        sections.push(CompressedSection {
            name: entry.name.clone(),
            kind: entry.kind,
            raw_bytes: len,
            algo,
            stream,
            compressed_bytes,
            forced_raw,
        });
    }
    Ok(CompressedImage { sections })
}

#[derive(Debug, Clone, Serialize)]
pub struct SectionReport {
    pub name: String,
    pub kind: String,
    pub raw_bytes: u64,
    pub algo: String,
    pub compressed_bytes: u64,
    pub ratio: f64,
    /// Compression made this section bigger.
    pub expanded: bool,
    pub forced_raw: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub sections: Vec<SectionReport>,
    pub stub_overheads: BTreeMap<String, u64>,
    pub total_bytes: u64,
    pub uncompressed_total_bytes: u64,
    pub savings_bytes: i64,
    /// Volatile memory needed to expand all compressed sections at boot.
    pub expanded_size_bytes: u64,
    pub chosen_device: Option<String>,
    pub uncompressed_device: Option<String>,
}

pub fn fit_report(
    compressed: &CompressedImage,
    catalog: &DeviceCatalog,
    stubs: &StubTable,
) -> Result<FitReport, RomError> {
    catalog.validate()?;
    let mut sections = Vec::with_capacity(compressed.sections.len());
    let mut used_algos: BTreeMap<Algorithm, u64> = BTreeMap::new();
    let mut total = 0u64;
    let mut raw_total = 0u64;
    let mut expanded_size = 0u64;
    for s in &compressed.sections {
        raw_total += s.raw_bytes;
        total += s.compressed_bytes;
        if let Some(a) = s.algo {
            used_algos.entry(a).or_insert_with(|| stubs.bytes_for(a));
            expanded_size += s.raw_bytes;
        }
        sections.push(SectionReport {
            name: s.name.clone(),
            kind: s.kind.name().into(),
            raw_bytes: s.raw_bytes,
            algo: s.algo.map_or("store".into(), |a| a.name().into()),
            compressed_bytes: s.compressed_bytes,
            ratio: s.raw_bytes as f64 / s.compressed_bytes.max(1) as f64,
            expanded: s.compressed_bytes > s.raw_bytes,
            forced_raw: s.forced_raw,
        });
    }
    let stub_total: u64 = used_algos.values().sum();
    total += stub_total;
    let report = FitReport {
        sections,
        stub_overheads: used_algos
            .iter()
            .map(|(a, b)| (a.name().to_string(), *b))
            .collect(),
        total_bytes: total,
        uncompressed_total_bytes: raw_total,
        savings_bytes: raw_total as i64 - total as i64,
        expanded_size_bytes: expanded_size,
        chosen_device: catalog.smallest_fitting(total).map(|d| d.name.clone()),
        uncompressed_device: catalog.smallest_fitting(raw_total).map(|d| d.name.clone()),
    };
    Ok(report)
}

impl FitReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Human-readable table form.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<16} {:<9} {:>12} {:<6} {:>12} {:>8}\n",
            "section", "kind", "raw", "algo", "compressed", "ratio"
        ));
        for s in &self.sections {
            let mut note = String::new();
            if s.expanded {
                note.push_str(" (expanded)");
            }
            if s.forced_raw {
                note.push_str(" (non-relocatable)");
            }
            out.push_str(&format!(
                "{:<16} {:<9} {:>12} {:<6} {:>12} {:>7.1}:1{}\n",
                s.name, s.kind, s.raw_bytes, s.algo, s.compressed_bytes, s.ratio, note
            ));
        }
        for (algo, bytes) in &self.stub_overheads {
            out.push_str(&format!("stub[{algo}]: {bytes} bytes\n"));
        }
        out.push_str(&format!(
            "total: {} bytes (uncompressed {}, saved {})\n",
            self.total_bytes, self.uncompressed_total_bytes, self.savings_bytes
        ));
        out.push_str(&format!(
            "expanded size at boot: {} bytes\n",
            self.expanded_size_bytes
        ));
        out.push_str(&format!(
            "device: {} (uncompressed would need {})\n",
            self.chosen_device.as_deref().unwrap_or("none fits"),
            self.uncompressed_device.as_deref().unwrap_or("none fits")
        ));
        out
    }
}
