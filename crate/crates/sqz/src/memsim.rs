//! Trace-driven simulation of a compressed main memory behind an
//! uncompressed cache.
//!
//! The cache is set-associative, write-back, write-allocate, LRU. On a
//! miss (and on a dirty-line writeback) the line travels over the memory
//! bus compressed by the configured codec and is stored in ceil(c/S)
//! slots of S bytes; when the slotted size would not beat the raw line
//! the line moves uncompressed and a one-bit mode flag in an uncounted
//! metadata table records that, so compressed traffic never exceeds the
//! uncompressed equivalent. Compression is purely a transfer encoding:
//! memory contents and cache semantics are identical to an uncompressed
//! system, which the tests check against a direct-write reference model.
//!
//! This is a functional simulator: it counts bytes, not cycles.
//!
//! Trace file format: one access per line, `R,<hex addr>` or
//! `W,<hex addr>` (`0x` prefix optional; `#` starts a comment line).
//! Writes store `(addr & 0xFF) ^ 0xA5` at the addressed byte, a fixed
//! deterministic rule so simulations are reproducible without carrying
//! data in traces.

use std::fmt;

use serde::Serialize;

use crate::codecs::{lzar, lzss, rle};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SimError {
    AddressOutOfRange { addr: u32 },
    ZeroLengthTrace,
    BadConfig(String),
    MisalignedImage(String),
    BadTrace { line: usize, reason: String },
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::AddressOutOfRange { addr } => {
                write!(f, "trace address {addr:#010X} outside the memory image")
            }
            SimError::ZeroLengthTrace => write!(f, "trace contains no accesses"),
            SimError::BadConfig(msg) => write!(f, "bad cache config: {msg}"),
            SimError::MisalignedImage(msg) => write!(f, "misaligned image: {msg}"),
            SimError::BadTrace { line, reason } => write!(f, "bad trace line {line}: {reason}"),
        }
    }
}

impl std::error::Error for SimError {}

/// Codec applied to lines on the cache-memory path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineCodec {
    Rle,
    Lzss,
    Lzar,
}

impl LineCodec {
    pub fn name(self) -> &'static str {
        match self {
            LineCodec::Rle => "rle",
            LineCodec::Lzss => "lzss",
            LineCodec::Lzar => "lzar",
        }
    }

    pub fn from_name(name: &str) -> Option<LineCodec> {
        match name {
            "rle" => Some(LineCodec::Rle),
            "lzss" => Some(LineCodec::Lzss),
            "lzar" => Some(LineCodec::Lzar),
            _ => None,
        }
    }

    fn payload_len(self, line: &[u8]) -> usize {
        match self {
            LineCodec::Rle => rle::encode_payload(line).len(),
            LineCodec::Lzss => lzss::encode_payload(line).len(),
            LineCodec::Lzar => lzar::encode_payload(line).len(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CacheConfig {
    pub line_bytes: usize,
    pub sets: usize,
    pub ways: usize,
    /// Slot granularity of the compressed storage area (8 or 12).
    pub slot_bytes: usize,
    pub codec: LineCodec,
}

impl Default for CacheConfig {
    fn default() -> Self {
        CacheConfig { line_bytes: 32, sets: 64, ways: 4, slot_bytes: 12, codec: LineCodec::Rle }
    }
}

impl CacheConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.line_bytes < 16 || !self.line_bytes.is_power_of_two() {
            return Err(SimError::BadConfig(format!(
                "line_bytes must be a power of two >= 16, got {}",
                self.line_bytes
            )));
        }
        if self.sets == 0 || !self.sets.is_power_of_two() {
            return Err(SimError::BadConfig(format!(
                "sets must be a power of two, got {}",
                self.sets
            )));
        }
        if self.ways == 0 {
            return Err(SimError::BadConfig("ways must be >= 1".into()));
        }
        if self.slot_bytes != 8 && self.slot_bytes != 12 {
            return Err(SimError::BadConfig(format!(
                "slot_bytes must be 8 or 12, got {}",
                self.slot_bytes
            )));
        }
        if self.line_bytes < self.slot_bytes {
            return Err(SimError::BadConfig("line_bytes must be >= slot_bytes".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Access {
    Read,
    Write,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceOp {
    pub access: Access,
    pub addr: u32,
}

/// Parse the `R,<hex>` / `W,<hex>` trace format.
pub fn parse_trace(text: &str) -> Result<Vec<TraceOp>, SimError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (op, addr_s) = line
            .split_once(',')
            .ok_or_else(|| SimError::BadTrace { line: lineno, reason: "expected OP,ADDR".into() })?;
        let access = match op.trim() {
            "R" | "r" => Access::Read,
            "W" | "w" => Access::Write,
            other => {
                return Err(SimError::BadTrace {
                    line: lineno,
                    reason: format!("unknown op {other:?}"),
                })
            }
        };
        let addr_s = addr_s.trim();
        let addr_s = addr_s.strip_prefix("0x").or_else(|| addr_s.strip_prefix("0X")).unwrap_or(addr_s);
        let addr = u32::from_str_radix(addr_s, 16).map_err(|_| SimError::BadTrace {
            line: lineno,
            reason: format!("bad hex address {addr_s:?}"),
        })?;
        out.push(TraceOp { access, addr });
    }
    Ok(out)
}

/// Byte value a write stores; fixed so traces need not carry data.
pub fn write_value(addr: u32) -> u8 {
    (addr & 0xFF) as u8 ^ 0xA5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrafficStats {
    pub accesses: u64,
    pub hits: u64,
    pub misses: u64,
    pub writebacks: u64,
    pub bytes_uncompressed_equiv: u64,
    pub bytes_compressed: u64,
    pub reduction_pct: f64,
}

/// Memory image with a base address; must be line-aligned.
#[derive(Debug, Clone)]
pub struct MemoryImage {
    pub base: u32,
    pub bytes: Vec<u8>,
}

pub struct SimOutcome {
    pub stats: TrafficStats,
    /// Memory after the trace with all dirty lines flushed (the flush is
    /// not part of the traffic counts).
    pub final_memory: Vec<u8>,
}

/// Bus bytes for one line: slotted compressed size with raw fallback.
fn transfer_bytes(line: &[u8], cfg: &CacheConfig) -> u64 {
    let c = cfg.codec.payload_len(line);
    let slotted = c.div_ceil(cfg.slot_bytes) * cfg.slot_bytes;
    if slotted >= cfg.line_bytes {
        cfg.line_bytes as u64
    } else {
        slotted as u64
    }
}

#[derive(Clone)]
struct Line {
    tag: u64,
    dirty: bool,
    stamp: u64,
    data: Vec<u8>,
}

pub fn run_trace(
    image: &MemoryImage,
    trace: &[TraceOp],
    cfg: &CacheConfig,
) -> Result<SimOutcome, SimError> {
    cfg.validate()?;
    if trace.is_empty() {
        return Err(SimError::ZeroLengthTrace);
    }
    let line_bytes = cfg.line_bytes;
    if image.base as usize % line_bytes != 0 {
        return Err(SimError::MisalignedImage(format!(
            "base {:#010X} not a multiple of the {line_bytes}-byte line",
            image.base
        )));
    }
    if image.bytes.is_empty() || image.bytes.len() % line_bytes != 0 {
        return Err(SimError::MisalignedImage(format!(
            "image length {} not a nonzero multiple of the {line_bytes}-byte line",
            image.bytes.len()
        )));
    }

    let mut memory = image.bytes.clone();
    let mut sets: Vec<Vec<Line>> = vec![Vec::new(); cfg.sets];
    let mut stats = TrafficStats {
        accesses: 0,
        hits: 0,
        misses: 0,
        writebacks: 0,
        bytes_uncompressed_equiv: 0,
        bytes_compressed: 0,
        reduction_pct: 0.0,
    };
    let mut clock = 0u64;

    for op in trace {
        let Some(off) = op.addr.checked_sub(image.base).map(|d| d as usize) else {
            return Err(SimError::AddressOutOfRange { addr: op.addr });
        };
        if off >= memory.len() {
            return Err(SimError::AddressOutOfRange { addr: op.addr });
        }
        stats.accesses += 1;
        clock += 1;
        let line_index = off / line_bytes;
        let set_index = line_index % cfg.sets;
        let tag = (line_index / cfg.sets) as u64;
        let set = &mut sets[set_index];

        let way = set.iter().position(|l| l.tag == tag);
        let way = match way {
            Some(w) => {
                stats.hits += 1;
                w
            }
            None => {
                stats.misses += 1;
                if set.len() == cfg.ways {
                    // Evict LRU; dirty lines are compressed from their
                    // current contents and written back.
                    let victim_idx = set
                        .iter()
                        .enumerate()
                        .min_by_key(|(_, l)| l.stamp)
                        .map(|(i, _)| i)
                        .unwrap();
                    let victim = set.swap_remove(victim_idx);
                    if victim.dirty {
                        stats.writebacks += 1;
                        stats.bytes_uncompressed_equiv += line_bytes as u64;
                        stats.bytes_compressed += transfer_bytes(&victim.data, cfg);
                        let vbase =
                            (victim.tag as usize * cfg.sets + set_index) * line_bytes;
                        memory[vbase..vbase + line_bytes].copy_from_slice(&victim.data);
                    }
                }
                // Fetch the missing line, compressed on the bus.
                let lbase = line_index * line_bytes;
                let data = memory[lbase..lbase + line_bytes].to_vec();
                stats.bytes_uncompressed_equiv += line_bytes as u64;
                stats.bytes_compressed += transfer_bytes(&data, cfg);
                set.push(Line { tag, dirty: false, stamp: 0, data });
                set.len() - 1
            }
        };
        let line = &mut set[way];
        line.stamp = clock;
        if op.access == Access::Write {
            line.data[off % line_bytes] = write_value(op.addr);
            line.dirty = true;
        }
    }

    stats.reduction_pct = if stats.bytes_uncompressed_equiv > 0 {
        100.0 * (1.0 - stats.bytes_compressed as f64 / stats.bytes_uncompressed_equiv as f64)
    } else {
        0.0
    };

    // Flush dirty lines into the final memory picture.
    for (set_index, set) in sets.iter().enumerate() {
        for line in set {
            if line.dirty {
                let base = (line.tag as usize * cfg.sets + set_index) * line_bytes;
                memory[base..base + line_bytes].copy_from_slice(&line.data);
            }
        }
    }

    Ok(SimOutcome { stats, final_memory: memory })
}

#[derive(Debug, Clone, Serialize)]
pub struct SlotSweep {
    pub s8: TrafficStats,
    pub s12: TrafficStats,
    /// s8 compressed traffic minus s12 compressed traffic.
    pub delta_bytes: i64,
}

/// Run the identical inputs at S = 8 and S = 12.
pub fn sweep_slots(
    image: &MemoryImage,
    trace: &[TraceOp],
    cfg: &CacheConfig,
) -> Result<SlotSweep, SimError> {
    let s8 = run_trace(image, trace, &CacheConfig { slot_bytes: 8, ..*cfg })?.stats;
    let s12 = run_trace(image, trace, &CacheConfig { slot_bytes: 12, ..*cfg })?.stats;
    Ok(SlotSweep {
        s8,
        s12,
        delta_bytes: s8.bytes_compressed as i64 - s12.bytes_compressed as i64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::DetRng;

    fn read_sweep(len: usize, stride: usize) -> Vec<TraceOp> {
        (0..len / stride)
            .map(|i| TraceOp { access: Access::Read, addr: (i * stride) as u32 })
            .collect()
    }

    /// Direct-write reference model: no cache, writes land immediately.
    fn reference_memory(image: &MemoryImage, trace: &[TraceOp]) -> Vec<u8> {
        let mut memory = image.bytes.clone();
        for op in trace {
            if op.access == Access::Write {
                let off = (op.addr - image.base) as usize;
                memory[off] = write_value(op.addr);
            }
        }
        memory
    }

    #[test]
    fn zero_image_slot_arithmetic() {
        // RLE of 32 zero bytes is a single (count, value) pair: 2 bytes,
        // one 12-byte slot. 12 vs 32 raw = 62.5% reduction.
        let image = MemoryImage { base: 0, bytes: vec![0u8; 8192] };
        let trace = read_sweep(8192, 32);
        let out = run_trace(&image, &trace, &CacheConfig::default()).unwrap();
        assert_eq!(out.stats.misses, 256);
        assert_eq!(out.stats.hits, 0);
        assert_eq!(out.stats.bytes_uncompressed_equiv, 256 * 32);
        assert_eq!(out.stats.bytes_compressed, 256 * 12);
        assert!((out.stats.reduction_pct - 62.5).abs() < 1e-12);
    }

    #[test]
    fn incompressible_image_falls_back_to_raw() {
        let mut rng = DetRng::new(99);
        let mut bytes = vec![0u8; 8192];
        rng.fill_bytes(&mut bytes);
        let image = MemoryImage { base: 0, bytes };
        let trace = read_sweep(8192, 32);
        for codec in [LineCodec::Rle, LineCodec::Lzss, LineCodec::Lzar] {
            let cfg = CacheConfig { codec, ..Default::default() };
            let out = run_trace(&image, &trace, &cfg).unwrap();
            assert_eq!(out.stats.bytes_compressed, out.stats.bytes_uncompressed_equiv);
            assert_eq!(out.stats.reduction_pct, 0.0);
        }
    }

    #[test]
    fn conservation_and_lru_behavior() {
        // 1 set x 2 ways of 16-byte lines over a 64-byte image.
        let image = MemoryImage { base: 0, bytes: (0..64).map(|i| i as u8).collect() };
        let cfg = CacheConfig { line_bytes: 16, sets: 1, ways: 2, ..Default::default() };
        let l = |i: usize| TraceOp { access: Access::Read, addr: (i * 16) as u32 };
        let trace = vec![l(0), l(1), l(0), l(1), l(2), l(0), l(1)];
        let out = run_trace(&image, &trace, &cfg).unwrap();
        assert_eq!(out.stats.accesses, 7);
        assert_eq!(out.stats.misses, 5);
        assert_eq!(out.stats.hits, 2);
        assert_eq!(out.stats.hits + out.stats.misses, out.stats.accesses);
    }

    #[test]
    fn memory_semantics_match_direct_write_reference() {
        let mut rng = DetRng::new(7);
        let mut bytes = vec![0u8; 4096];
        for chunk in bytes.chunks_mut(64) {
            if rng.next_below(2) == 0 {
                rng.fill_bytes(chunk);
            }
        }
        let image = MemoryImage { base: 0, bytes };
        let mut trace = Vec::new();
        for _ in 0..3000 {
            let addr = rng.next_below(4096) as u32;
            let access = if rng.next_below(3) == 0 { Access::Write } else { Access::Read };
            trace.push(TraceOp { access, addr });
        }
        for codec in [LineCodec::Rle, LineCodec::Lzss, LineCodec::Lzar] {
            // Tiny cache to force plenty of evictions and writebacks.
            let cfg = CacheConfig { sets: 4, ways: 2, codec, ..Default::default() };
            let out = run_trace(&image, &trace, &cfg).unwrap();
            assert_eq!(out.final_memory, reference_memory(&image, &trace), "{codec:?}");
            assert!(out.stats.writebacks > 0);
            assert!(out.stats.bytes_compressed <= out.stats.bytes_uncompressed_equiv);
        }
    }

    #[test]
    fn compressed_never_exceeds_uncompressed_on_fuzzed_inputs() {
        let mut rng = DetRng::new(31337);
        for trial in 0..20 {
            let len = 1024 + 512 * rng.next_below(4) as usize;
            let mut bytes = vec![0u8; len];
            for chunk in bytes.chunks_mut(32) {
                match rng.next_below(3) {
                    0 => rng.fill_bytes(chunk),
                    1 => chunk.fill(rng.next_below(256) as u8),
                    _ => {}
                }
            }
            let image = MemoryImage { base: 0, bytes };
            let trace: Vec<TraceOp> = (0..500)
                .map(|_| TraceOp {
                    access: if rng.next_below(4) == 0 { Access::Write } else { Access::Read },
                    addr: rng.next_below(len as u64) as u32,
                })
                .collect();
            let codec = [LineCodec::Rle, LineCodec::Lzss, LineCodec::Lzar][trial % 3];
            let cfg = CacheConfig { sets: 8, ways: 2, codec, ..Default::default() };
            let out = run_trace(&image, &trace, &cfg).unwrap();
            assert!(out.stats.bytes_compressed <= out.stats.bytes_uncompressed_equiv);
            assert!(out.stats.reduction_pct >= 0.0);
        }
    }

    #[test]
    fn slot_sweep_zero_image_orders_correctly() {
        let image = MemoryImage { base: 0, bytes: vec![0u8; 4096] };
        let trace = read_sweep(4096, 32);
        let sweep = sweep_slots(&image, &trace, &CacheConfig::default()).unwrap();
        assert!(sweep.s8.bytes_compressed <= sweep.s12.bytes_compressed);
        assert!(sweep.delta_bytes <= 0);
    }

    #[test]
    fn slot_sweep_incompressible_is_equal() {
        let mut rng = DetRng::new(55);
        let mut bytes = vec![0u8; 4096];
        rng.fill_bytes(&mut bytes);
        let image = MemoryImage { base: 0, bytes };
        let trace = read_sweep(4096, 32);
        let sweep = sweep_slots(&image, &trace, &CacheConfig::default()).unwrap();
        assert_eq!(sweep.s8.bytes_compressed, sweep.s12.bytes_compressed);
        assert_eq!(sweep.delta_bytes, 0);
    }

    #[test]
    fn per_line_slot_bound_holds() {
        // ceil(c/8)*8 <= ceil(c/12)*12 + 8 for every payload size.
        for c in 0usize..4096 {
            let s8 = c.div_ceil(8) * 8;
            let s12 = c.div_ceil(12) * 12;
            assert!(s8 <= s12 + 8, "c={c}: {s8} > {s12}+8");
        }
    }

    #[test]
    fn errors_are_reported() {
        let image = MemoryImage { base: 0, bytes: vec![0u8; 64] };
        let cfg = CacheConfig::default();
        assert!(matches!(
            run_trace(&image, &[], &cfg),
            Err(SimError::ZeroLengthTrace)
        ));
        let far = [TraceOp { access: Access::Read, addr: 9999 }];
        assert!(matches!(
            run_trace(&image, &far, &cfg),
            Err(SimError::AddressOutOfRange { addr: 9999 })
        ));
        let misaligned = MemoryImage { base: 8, bytes: vec![0u8; 64] };
        let ok = [TraceOp { access: Access::Read, addr: 8 }];
        assert!(matches!(
            run_trace(&misaligned, &ok, &cfg),
            Err(SimError::MisalignedImage(_))
        ));
        let bad_cfg = CacheConfig { line_bytes: 24, ..Default::default() };
        assert!(matches!(
            run_trace(&image, &ok, &bad_cfg),
            Err(SimError::BadConfig(_))
        ));
        let bad_slot = CacheConfig { slot_bytes: 10, ..Default::default() };
        assert!(matches!(
            run_trace(&image, &ok, &bad_slot),
            Err(SimError::BadConfig(_))
        ));
    }

    #[test]
    fn determinism() {
        let mut rng = DetRng::new(42);
        let mut bytes = vec![0u8; 2048];
        rng.fill_bytes(&mut bytes[..1024]);
        let image = MemoryImage { base: 0, bytes };
        let trace: Vec<TraceOp> = (0..400)
            .map(|_| TraceOp {
                access: if rng.next_below(2) == 0 { Access::Write } else { Access::Read },
                addr: rng.next_below(2048) as u32,
            })
            .collect();
        let a = run_trace(&image, &trace, &CacheConfig::default()).unwrap();
        let b = run_trace(&image, &trace, &CacheConfig::default()).unwrap();
        assert_eq!(a.stats, b.stats);
        assert_eq!(a.final_memory, b.final_memory);
    }

    #[test]
    fn trace_parsing() {
        let text = "# comment\nR,0x10\nW,20\nr, 0x30\n";
        let ops = parse_trace(text).unwrap();
        assert_eq!(
            ops,
            vec![
                TraceOp { access: Access::Read, addr: 0x10 },
                TraceOp { access: Access::Write, addr: 0x20 },
                TraceOp { access: Access::Read, addr: 0x30 },
            ]
        );
        assert!(matches!(parse_trace("X,0x10\n"), Err(SimError::BadTrace { line: 1, .. })));
        assert!(matches!(parse_trace("R;0x10\n"), Err(SimError::BadTrace { .. })));
        assert!(matches!(parse_trace("R,zz\n"), Err(SimError::BadTrace { .. })));
    }
}
