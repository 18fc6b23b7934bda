//! Monte Carlo sweeps, complexity reports and result files.
//!
//! Every random quantity of frame `f` is drawn from [`frame_rng`]`(seed, f)`,
//! and the same frame index is reused at every SNR point and for every
//! demapper. Sweeps therefore compare demappers on common noise, and results
//! do not depend on the worker count: frames are evaluated in fixed-size
//! batches, partial sums are formed over fixed chunks and reduced in order.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beq::{bit_string, BeqError, FormatSpec};
use crate::channel::{add_awgn, frame_rng, observations, snr_to_sigma, ChannelError};
use crate::demap::{DemapError, Demapper, DemapperKind, LlrFrame, OpCount};
use crate::fec::{
    ldpc_decode_ms, ldpc_encode, load_alist, make_regular_code, FecError, LdpcCode,
    DEFAULT_MAX_ITER,
};
use crate::modem::{
    build_codebook, distance_spectrum, min_squared_distance, Codebook, SymbolFrame,
};

/// LLR magnitude limit applied before the GMI logarithm.
pub const GMI_CLAMP: f64 = 50.0;
pub const DEFAULT_TARGET_ERRORS: u64 = 100;
pub const DEFAULT_MAX_FRAMES: u64 = 10_000;
pub const DEFAULT_GMI_FRAMES: u64 = 100_000;
pub const DEFAULT_COMPLEXITY_FRAMES: u64 = 10_000;
/// Channel quality of the random frames behind complexity reports.
pub const DEFAULT_COMPLEXITY_SNR_DB: f64 = 5.0;

/// LDPC frames evaluated between two checks of the stop rule.
const BER_BATCH: u64 = 256;
/// Symbols per deterministic partial sum in GMI and complexity runs.
const CHUNK: u64 = 1024;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Format(#[from] BeqError),
    #[error(transparent)]
    Demapper(#[from] DemapError),
    #[error(transparent)]
    Code(#[from] FecError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed result file: {0}")]
    Results(String),
}

impl HarnessError {
    /// Process exit status: 1 configuration, 2 inapplicable demapper, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Demapper(DemapError::NonlinearFormat { .. }) => 2,
            HarnessError::Io { .. } | HarnessError::Format(BeqError::Io(_)) => 3,
            _ => 1,
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Inclusive SNR grid in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SnrGrid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self, HarnessError> {
        let grid = SnrGrid { start, stop, step };
        grid.validate()?;
        Ok(grid)
    }

    pub fn single(snr_db: f64) -> Self {
        SnrGrid {
            start: snr_db,
            stop: snr_db,
            step: 1.0,
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        if ![self.start, self.stop, self.step]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(HarnessError::Config(
                "SNR grid values must be finite".into(),
            ));
        }
        if self.step <= 0.0 {
            return Err(HarnessError::Config(format!(
                "SNR step {} must be positive",
                self.step
            )));
        }
        if self.stop < self.start {
            return Err(HarnessError::Config(format!(
                "SNR stop {} is below start {}",
                self.stop, self.start
            )));
        }
        Ok(())
    }

    /// Grid points, rounded to 1e-9 dB so that `0.1` steps print cleanly.
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| ((self.start + i as f64 * self.step) * 1e9).round() / 1e9)
            .collect()
    }
}

impl FromStr for SnrGrid {
    type Err = HarnessError;

    /// `A:B:S` or a single value `A`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| HarnessError::Config(format!("bad SNR value `{t}` in `{s}`")))
        };
        match parts[..] {
            [a] => Ok(SnrGrid::single(num(a)?)),
            [a, b, st] => SnrGrid::new(num(a)?, num(b)?, num(st)?),
            _ => Err(HarnessError::Config(format!(
                "SNR grid `{s}` is not of the form A:B:S"
            ))),
        }
    }
}

/// Where the LDPC code of a BER sweep comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum LdpcSource {
    Builtin { n: usize, rate: f64, seed: u64 },
    Alist(PathBuf),
}

impl Default for LdpcSource {
    /// 1800 bits at 20% overhead.
    fn default() -> Self {
        LdpcSource::Builtin {
            n: 1800,
            rate: 5.0 / 6.0,
            seed: 1,
        }
    }
}

impl LdpcSource {
    pub fn build(&self) -> Result<LdpcCode, HarnessError> {
        match self {
            LdpcSource::Builtin { n, rate, seed } => Ok(make_regular_code(*n, *rate, *seed)?),
            LdpcSource::Alist(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
                Ok(load_alist(&text)?)
            }
        }
    }
}

impl FromStr for LdpcSource {
    type Err = HarnessError;

    /// `builtin[:n=..,rate=..,seed=..]` (omitted keys keep their defaults)
    /// or `alist:<path>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(path) = s.strip_prefix("alist:") {
            return Ok(LdpcSource::Alist(PathBuf::from(path)));
        }
        let LdpcSource::Builtin {
            mut n,
            mut rate,
            mut seed,
        } = LdpcSource::default()
        else {
            unreachable!()
        };
        let args = match s.strip_prefix("builtin") {
            Some("") => "",
            Some(rest) => rest.strip_prefix(':').ok_or_else(|| {
                HarnessError::Config(format!(
                    "LDPC source `{s}`: expected `builtin:` or `alist:`"
                ))
            })?,
            None => {
                return Err(HarnessError::Config(format!(
                    "LDPC source `{s}`: expected `builtin:` or `alist:`"
                )))
            }
        };
        for kv in args.split(',').filter(|t| !t.is_empty()) {
            let (key, value) = kv
                .split_once('=')
                .ok_or_else(|| HarnessError::Config(format!("LDPC option `{kv}` lacks `=`")))?;
            let bad = || HarnessError::Config(format!("bad value in LDPC option `{kv}`"));
            match key.trim() {
                "n" => n = value.trim().parse().map_err(|_| bad())?,
                "rate" => rate = value.trim().parse().map_err(|_| bad())?,
                "seed" => seed = value.trim().parse().map_err(|_| bad())?,
                other => {
                    return Err(HarnessError::Config(format!(
                        "unknown LDPC option `{other}`"
                    )))
                }
            }
        }
        Ok(LdpcSource::Builtin { n, rate, seed })
    }
}

impl fmt::Display for LdpcSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LdpcSource::Builtin { n, rate, seed } => {
                write!(f, "builtin:n={n},rate={rate},seed={seed}")
            }
            LdpcSource::Alist(p) => write!(f, "alist:{}", p.display()),
        }
    }
}

/// Sweep configuration shared by BER and GMI runs.
///
/// GMI sweeps run exactly `max_frames` symbols and ignore the error target
/// and the LDPC settings.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub format: FormatSpec,
    pub demapper: DemapperKind,
    pub snr: SnrGrid,
    pub target_errors: u64,
    pub max_frames: u64,
    pub ldpc: LdpcSource,
    pub max_iter: usize,
    pub seed: u64,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
}

impl SimConfig {
    pub fn new(format: FormatSpec, demapper: DemapperKind, snr: SnrGrid) -> Self {
        SimConfig {
            format,
            demapper,
            snr,
            target_errors: DEFAULT_TARGET_ERRORS,
            max_frames: DEFAULT_MAX_FRAMES,
            ldpc: LdpcSource::default(),
            max_iter: DEFAULT_MAX_ITER,
            seed: 1,
            workers: 0,
        }
    }

    /// Checks the grid and budgets and prepares the demapper.
    pub fn demapper(&self) -> Result<Demapper, HarnessError> {
        self.snr.validate()?;
        if self.max_frames == 0 {
            return Err(HarnessError::Config(
                "frame budget must be at least 1".into(),
            ));
        }
        if self.target_errors == 0 {
            return Err(HarnessError::Config(
                "error target must be at least 1".into(),
            ));
        }
        Ok(Demapper::new(self.demapper, &self.format)?)
    }
}

/// The pOSD depth used for each format in complexity tables: three LRPs
/// for seven information bits, four otherwise (capped at `m`).
pub fn table_p(spec: &FormatSpec) -> usize {
    if spec.m >= 7 {
        3
    } else {
        spec.m.min(4)
    }
}

fn in_pool<T: Send>(
    workers: usize,
    job: impl FnOnce() -> Result<T, HarnessError> + Send,
) -> Result<T, HarnessError> {
    if workers == 0 {
        return job();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start {workers} workers: {e}")))?
        .install(job)
}

// ---------------------------------------------------------------------------
// Operation statistics
// ---------------------------------------------------------------------------

/// Per-symbol operation counts observed over many frames. Logical operations
/// and additions are input-independent for every demapper here; the largest
/// observed value is kept. Comparisons are reported as a range.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpRange {
    pub logical: u64,
    pub additions: u64,
    pub cmp_min: u64,
    pub cmp_max: u64,
    pub symbols: u64,
}

impl OpRange {
    pub fn record(&mut self, c: OpCount) {
        self.merge(&OpRange {
            logical: c.logical,
            additions: c.additions,
            cmp_min: c.comparisons,
            cmp_max: c.comparisons,
            symbols: 1,
        });
    }

    pub fn merge(&mut self, other: &OpRange) {
        if other.symbols == 0 {
            return;
        }
        if self.symbols == 0 {
            *self = *other;
            return;
        }
        self.logical = self.logical.max(other.logical);
        self.additions = self.additions.max(other.additions);
        self.cmp_min = self.cmp_min.min(other.cmp_min);
        self.cmp_max = self.cmp_max.max(other.cmp_max);
        self.symbols += other.symbols;
    }
}

// ---------------------------------------------------------------------------
// Result rows
// ---------------------------------------------------------------------------

/// One output row per SNR point. Cells that a sweep does not measure are empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRow {
    pub snr_db: f64,
    pub frames: u64,
    pub prefec_ber: Option<f64>,
    pub postfec_ber: Option<f64>,
    pub gmi_bits: Option<f64>,
    pub mean_iters: Option<f64>,
    pub ops_logical: Option<u64>,
    pub ops_add: Option<u64>,
    pub ops_cmp_min: Option<u64>,
    pub ops_cmp_max: Option<u64>,
}

pub const CSV_COLUMNS: [&str; 10] = [
    "snr_db",
    "frames",
    "prefec_ber",
    "postfec_ber",
    "gmi_bits",
    "mean_iters",
    "ops_logical",
    "ops_add",
    "ops_cmp_min",
    "ops_cmp_max",
];

impl SimRow {
    fn with_ops(snr_db: f64, frames: u64, ops: &OpRange) -> Self {
        let some = |v| (ops.symbols > 0).then_some(v);
        SimRow {
            snr_db,
            frames,
            prefec_ber: None,
            postfec_ber: None,
            gmi_bits: None,
            mean_iters: None,
            ops_logical: some(ops.logical),
            ops_add: some(ops.additions),
            ops_cmp_min: some(ops.cmp_min),
            ops_cmp_max: some(ops.cmp_max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Writes rows as CSV (header always present) into any writer.
pub fn write_csv<W: Write>(rows: &[SimRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(rows: &[SimRow]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("CSV output is UTF-8")
}

pub fn parse_csv(text: &str) -> Result<Vec<SimRow>, HarnessError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r
        .headers()
        .map_err(|e| HarnessError::Results(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != CSV_COLUMNS {
        return Err(HarnessError::Results(format!(
            "unexpected header {header:?}"
        )));
    }
    r.deserialize()
        .collect::<Result<Vec<SimRow>, _>>()
        .map_err(|e| HarnessError::Results(e.to_string()))
}

pub fn to_json_string(rows: &[SimRow]) -> String {
    serde_json::to_string_pretty(rows).expect("rows serialize") + "\n"
}

pub fn parse_json(text: &str) -> Result<Vec<SimRow>, HarnessError> {
    serde_json::from_str(text).map_err(|e| HarnessError::Results(e.to_string()))
}

/// Writes rows to `path`.
pub fn emit_results(
    rows: &[SimRow],
    path: &Path,
    format: OutputFormat,
) -> Result<(), HarnessError> {
    let text = match format {
        OutputFormat::Csv => to_csv_string(rows),
        OutputFormat::Json => to_json_string(rows),
    };
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

// ---------------------------------------------------------------------------
// GMI
// ---------------------------------------------------------------------------

/// `log2(1 + exp(-(1 - 2b) L))` with `L` clamped to `±GMI_CLAMP`.
pub fn bit_penalty(bit: u8, llr: f64) -> f64 {
    let x = llr.clamp(-GMI_CLAMP, GMI_CLAMP) * if bit == 0 { 1.0 } else { -1.0 };
    let nats = if x > 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    };
    nats / std::f64::consts::LN_2
}

/// GMI in bits per symbol from transmitted information words and LLRs.
pub fn gmi_estimate(samples: &[(u8, LlrFrame)]) -> f64 {
    let Some(m) = samples.first().map(|s| s.1.len()) else {
        return 0.0;
    };
    let penalty: f64 = samples
        .iter()
        .map(|(info, llr)| symbol_penalty(*info, llr))
        .sum();
    m as f64 - penalty / samples.len() as f64
}

fn symbol_penalty(info: u8, llr: &LlrFrame) -> f64 {
    llr.as_slice()
        .iter()
        .enumerate()
        .map(|(k, &l)| bit_penalty((info >> k) & 1, l))
        .sum()
}

/// One GMI measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct GmiPoint {
    pub snr_db: f64,
    pub frames: u64,
    pub gmi_bits: f64,
    /// Information-bit errors of the LLR signs.
    pub bit_errors: u64,
    pub ops: OpRange,
}

impl GmiPoint {
    pub fn prefec_ber(&self, m: usize) -> f64 {
        self.bit_errors as f64 / (self.frames * m as u64) as f64
    }

    pub fn row(&self, m: usize) -> SimRow {
        SimRow {
            prefec_ber: Some(self.prefec_ber(m)),
            gmi_bits: Some(self.gmi_bits),
            ..SimRow::with_ops(self.snr_db, self.frames, &self.ops)
        }
    }
}

/// Draws the information word and received symbol of GMI frame `frame`.
fn gmi_frame(spec: &FormatSpec, seed: u64, frame: u64, sigma: f64) -> (u8, [f64; 8]) {
    let mut rng = frame_rng(seed, frame);
    let info = (rng.next_u32() as u8) & spec.info_mask();
    let symbol = SymbolFrame::from_codeword(spec.encode(info), spec.n);
    (info, add_awgn(&symbol, spec.n, sigma, &mut rng))
}

/// GMI of one demapper at one SNR over `frames` symbols.
pub fn gmi_point(
    demapper: &Demapper,
    snr_db: f64,
    frames: u64,
    seed: u64,
) -> Result<GmiPoint, HarnessError> {
    let spec = demapper.spec();
    let sigma = snr_to_sigma(snr_db);
    let chunks: Vec<(f64, u64, OpRange)> = (0..frames.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut penalty = 0.0;
            let mut errors = 0u64;
            let mut ops = OpRange::default();
            for f in c * CHUNK..((c + 1) * CHUNK).min(frames) {
                let (info, y) = gmi_frame(spec, seed, f, sigma);
                let mut count = OpCount::default();
                let llr = demapper.demap_counted(&observations(&y, sigma)?, &mut count);
                ops.record(count);
                penalty += symbol_penalty(info, &llr);
                errors += llr
                    .as_slice()
                    .iter()
                    .enumerate()
                    .filter(|&(k, &l)| u8::from(l < 0.0) != (info >> k) & 1)
                    .count() as u64;
            }
            Ok((penalty, errors, ops))
        })
        .collect::<Result<_, HarnessError>>()?;
    let mut penalty = 0.0;
    let mut bit_errors = 0;
    let mut ops = OpRange::default();
    for (p, e, o) in &chunks {
        penalty += p;
        bit_errors += e;
        ops.merge(o);
    }
    Ok(GmiPoint {
        snr_db,
        frames,
        gmi_bits: spec.m as f64 - penalty / frames as f64,
        bit_errors,
        ops,
    })
}

/// GMI at every grid point, `max_frames` symbols each.
pub fn run_gmi_sweep(config: &SimConfig) -> Result<Vec<SimRow>, HarnessError> {
    let demapper = config.demapper()?;
    let m = config.format.m;
    in_pool(config.workers, || {
        config
            .snr
            .points()
            .into_iter()
            .map(|snr| Ok(gmi_point(&demapper, snr, config.max_frames, config.seed)?.row(m)))
            .collect()
    })
}

/// SNR at which a GMI curve first reaches `level`, by linear interpolation
/// between grid points. `None` if the curve starts at or above `level` or
/// never reaches it.
pub fn gmi_crossing(curve: &[(f64, f64)], level: f64) -> Option<f64> {
    if curve.first()?.1 >= level {
        return None;
    }
    curve.windows(2).find_map(|w| {
        let ((s0, g0), (s1, g1)) = (w[0], w[1]);
        (g0 < level && g1 >= level).then(|| s0 + (level - g0) / (g1 - g0) * (s1 - s0))
    })
}

// ---------------------------------------------------------------------------
// BER
// ---------------------------------------------------------------------------

/// Bit-error statistics of one BER measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct BerPoint {
    pub snr_db: f64,
    pub frames: u64,
    /// Information bits per LDPC frame.
    pub info_bits: u64,
    /// LDPC code bits per frame.
    pub code_bits: u64,
    pub bit_errors: u64,
    /// Sum over frames of squared per-frame error counts.
    pub bit_errors_sq: u64,
    pub frame_errors: u64,
    /// Code-bit errors of the demapper LLR signs.
    pub prefec_errors: u64,
    pub iterations: u64,
    pub ops: OpRange,
}

impl BerPoint {
    pub fn postfec_ber(&self) -> f64 {
        self.bit_errors as f64 / (self.frames * self.info_bits) as f64
    }

    pub fn prefec_ber(&self) -> f64 {
        self.prefec_errors as f64 / (self.frames * self.code_bits) as f64
    }

    /// 95% interval of the post-FEC BER. Errors cluster within frames, so
    /// the variance is estimated from per-frame error counts.
    pub fn postfec_ci95(&self) -> (f64, f64) {
        let n = self.frames as f64;
        let mean = self.bit_errors as f64 / n;
        let var = (self.bit_errors_sq as f64 / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
        let half = 1.96 * (var / n).sqrt() / self.info_bits as f64;
        let ber = self.postfec_ber();
        ((ber - half).max(0.0), ber + half)
    }

    pub fn row(&self) -> SimRow {
        SimRow {
            prefec_ber: Some(self.prefec_ber()),
            postfec_ber: Some(self.postfec_ber()),
            mean_iters: Some(self.iterations as f64 / self.frames as f64),
            ..SimRow::with_ops(self.snr_db, self.frames, &self.ops)
        }
    }
}

struct FrameOutcome {
    bit_errors: u64,
    prefec_errors: u64,
    iterations: u64,
    ops: OpRange,
}

/// Encoder, mapper, channel, demapper and decoder for one LDPC frame.
struct Chain<'a> {
    code: &'a LdpcCode,
    demapper: &'a Demapper,
    max_iter: usize,
    seed: u64,
}

impl Chain<'_> {
    fn run(&self, frame: u64, sigma: f64) -> Result<FrameOutcome, HarnessError> {
        let spec = self.demapper.spec();
        let (k, n, m) = (self.code.k(), self.code.n(), spec.m);
        let mut rng = frame_rng(self.seed, frame);
        let mut info = Vec::with_capacity(k);
        while info.len() < k {
            let word = rng.next_u64();
            info.extend((0..64.min(k - info.len())).map(|i| ((word >> i) & 1) as u8));
        }
        let cw = ldpc_encode(self.code, &info)?;

        // m code bits per symbol, zero padding in the last group
        let mut llrs = vec![0.0; n];
        let mut ops = OpRange::default();
        for (g, group) in cw.chunks(m).enumerate() {
            let label = group
                .iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | (b << i));
            let symbol = SymbolFrame::from_codeword(spec.encode(label), spec.n);
            let y = add_awgn(&symbol, spec.n, sigma, &mut rng);
            let mut count = OpCount::default();
            let llr = self
                .demapper
                .demap_counted(&observations(&y, sigma)?, &mut count);
            ops.record(count);
            llrs[g * m..g * m + group.len()].copy_from_slice(&llr.as_slice()[..group.len()]);
        }
        let prefec_errors = llrs
            .iter()
            .zip(&cw)
            .filter(|&(&l, &b)| u8::from(l < 0.0) != b)
            .count() as u64;

        let decoded = ldpc_decode_ms(self.code, &llrs, self.max_iter);
        let bit_errors = self
            .code
            .extract_info(&decoded.bits)
            .iter()
            .zip(&info)
            .filter(|(a, b)| a != b)
            .count() as u64;
        Ok(FrameOutcome {
            bit_errors,
            prefec_errors,
            iterations: decoded.iterations as u64,
            ops,
        })
    }
}

/// Post-FEC BER at one SNR. Frames run until `target_errors` information-bit
/// errors are seen or `max_frames` frames are spent, whichever comes first.
pub fn ber_point(
    code: &LdpcCode,
    demapper: &Demapper,
    snr_db: f64,
    target_errors: u64,
    max_frames: u64,
    max_iter: usize,
    seed: u64,
) -> Result<BerPoint, HarnessError> {
    let chain = Chain {
        code,
        demapper,
        max_iter,
        seed,
    };
    let sigma = snr_to_sigma(snr_db);
    let mut point = BerPoint {
        snr_db,
        frames: 0,
        info_bits: code.k() as u64,
        code_bits: code.n() as u64,
        bit_errors: 0,
        bit_errors_sq: 0,
        frame_errors: 0,
        prefec_errors: 0,
        iterations: 0,
        ops: OpRange::default(),
    };
    while point.frames < max_frames && point.bit_errors < target_errors {
        let start = point.frames;
        let end = (start + BER_BATCH).min(max_frames);
        let batch: Vec<FrameOutcome> = (start..end)
            .into_par_iter()
            .map(|f| chain.run(f, sigma))
            .collect::<Result<_, _>>()?;
        for outcome in batch {
            point.frames += 1;
            point.bit_errors += outcome.bit_errors;
            point.bit_errors_sq += outcome.bit_errors * outcome.bit_errors;
            point.frame_errors += u64::from(outcome.bit_errors > 0);
            point.prefec_errors += outcome.prefec_errors;
            point.iterations += outcome.iterations;
            point.ops.merge(&outcome.ops);
            if point.bit_errors >= target_errors {
                break;
            }
        }
    }
    Ok(point)
}

/// Post-FEC BER sweep; one row per grid point, ascending SNR.
pub fn run_ber_sweep(config: &SimConfig) -> Result<Vec<SimRow>, HarnessError> {
    let demapper = config.demapper()?;
    let code = config.ldpc.build()?;
    in_pool(config.workers, || {
        config
            .snr
            .points()
            .into_iter()
            .map(|snr| {
                Ok(ber_point(
                    &code,
                    &demapper,
                    snr,
                    config.target_errors,
                    config.max_frames,
                    config.max_iter,
                    config.seed,
                )?
                .row())
            })
            .collect()
    })
}

// ---------------------------------------------------------------------------
// Complexity
// ---------------------------------------------------------------------------

/// Operation counts of one (format, demapper) pair; `None` when the demapper
/// cannot handle the format.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityRow {
    pub format: String,
    pub demapper: DemapperKind,
    pub ops: Option<OpRange>,
}

/// The demapper columns of the complexity table for one format.
pub fn table_demappers(spec: &FormatSpec) -> Vec<DemapperKind> {
    vec![
        DemapperKind::Mlm,
        DemapperKind::Ms,
        DemapperKind::Posd { p: table_p(spec) },
    ]
}

/// Counts operations over `frames` random channel outputs at `snr_db`.
pub fn run_complexity_report(
    pairs: &[(FormatSpec, DemapperKind)],
    frames: u64,
    snr_db: f64,
    seed: u64,
) -> Result<Vec<ComplexityRow>, HarnessError> {
    if frames == 0 {
        return Err(HarnessError::Config(
            "frame budget must be at least 1".into(),
        ));
    }
    let sigma = snr_to_sigma(snr_db);
    pairs
        .iter()
        .map(|(spec, kind)| {
            let demapper = match Demapper::new(*kind, spec) {
                Ok(d) => d,
                Err(DemapError::NonlinearFormat { .. }) => {
                    return Ok(ComplexityRow {
                        format: spec.name.clone(),
                        demapper: *kind,
                        ops: None,
                    })
                }
                Err(e) => return Err(e.into()),
            };
            let chunks: Vec<OpRange> = (0..frames.div_ceil(CHUNK))
                .into_par_iter()
                .map(|c| {
                    let mut ops = OpRange::default();
                    for f in c * CHUNK..((c + 1) * CHUNK).min(frames) {
                        let (_, y) = gmi_frame(spec, seed, f, sigma);
                        let mut count = OpCount::default();
                        demapper.demap_counted(&observations(&y, sigma)?, &mut count);
                        ops.record(count);
                    }
                    Ok(ops)
                })
                .collect::<Result<_, HarnessError>>()?;
            let mut ops = OpRange::default();
            chunks.iter().for_each(|o| ops.merge(o));
            Ok(ComplexityRow {
                format: spec.name.clone(),
                demapper: *kind,
                ops: Some(ops),
            })
        })
        .collect()
}

/// CSV with one line per pair; inapplicable pairs carry `×` in every count.
pub fn complexity_csv(rows: &[ComplexityRow]) -> String {
    let mut out = String::from("format,demapper,ops_logical,ops_add,ops_cmp_min,ops_cmp_max\n");
    for r in rows {
        let cells = match &r.ops {
            Some(o) => format!("{},{},{},{}", o.logical, o.additions, o.cmp_min, o.cmp_max),
            None => "×,×,×,×".to_string(),
        };
        out.push_str(&format!("{},{},{}\n", r.format, r.demapper, cells));
    }
    out
}

/// Text table in the layout of the usual complexity comparison: one column
/// per pair, rows for logical operations, additions and comparisons.
pub fn render_complexity_table(rows: &[ComplexityRow]) -> String {
    let header: Vec<String> = rows
        .iter()
        .map(|r| format!("{} {}", r.format, r.demapper))
        .collect();
    let cell = |r: &ComplexityRow, pick: fn(&OpRange) -> String| {
        r.ops.as_ref().map_or_else(|| "×".to_string(), pick)
    };
    type Cell = fn(&OpRange) -> String;
    let lines: [(&str, Cell); 3] = [
        ("Logical op.", |o| o.logical.to_string()),
        ("Additions", |o| o.additions.to_string()),
        ("Comparisons", |o| {
            if o.cmp_min == o.cmp_max {
                o.cmp_min.to_string()
            } else {
                format!("{}-{}", o.cmp_min, o.cmp_max)
            }
        }),
    ];
    let widths: Vec<usize> = header.iter().map(|h| h.len().max(7)).collect();
    let mut out = format!("{:<12}", "");
    for (h, w) in header.iter().zip(&widths) {
        out.push_str(&format!(" | {h:>w$}"));
    }
    out.push('\n');
    for (label, pick) in lines {
        out.push_str(&format!("{label:<12}"));
        for (r, w) in rows.iter().zip(&widths) {
            out.push_str(&format!(" | {:>w$}", cell(r, pick)));
        }
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// Codebook dump
// ---------------------------------------------------------------------------

/// CSV with the information word, the full codeword (as bit strings `b_1`
/// first) and the eight amplitudes of every symbol.
pub fn codebook_csv(codebook: &Codebook) -> String {
    let mut out = String::from("info_bits,codeword,s1,s2,s3,s4,s5,s6,s7,s8\n");
    for e in &codebook.entries {
        out.push_str(&bit_string(e.info, codebook.m));
        out.push(',');
        out.push_str(&bit_string(e.codeword, codebook.n));
        for a in e.symbol.0 {
            out.push_str(&format!(",{a}"));
        }
        out.push('\n');
    }
    out
}

/// Short human-readable summary: size, minimum distance and distance spectrum.
pub fn codebook_summary(codebook: &Codebook) -> Result<String, HarnessError> {
    let d2 = min_squared_distance(codebook).map_err(|e| HarnessError::Config(e.to_string()))?;
    let d2 = (d2 * 1e9).round() / 1e9;
    let spectrum: Vec<String> = distance_spectrum(codebook)
        .iter()
        .map(|(d, c)| format!("{d}:{c}"))
        .collect();
    Ok(format!(
        "{}: {} symbols, min squared distance {d2}, spectrum (d^2:pairs) {}",
        codebook.name,
        codebook.len(),
        spectrum.join(" ")
    ))
}

/// Writes the codebook of `spec` to `path` and returns its summary line.
pub fn dump_codebook(spec: &FormatSpec, path: &Path) -> Result<String, HarnessError> {
    let codebook = build_codebook(spec);
    std::fs::write(path, codebook_csv(&codebook)).map_err(|e| HarnessError::io(path, e))?;
    codebook_summary(&codebook)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pb6() -> FormatSpec {
        FormatSpec::builtin("PB-6B8D").unwrap()
    }

    #[test]
    fn snr_grid_parsing() {
        let g: SnrGrid = "3:4:0.1".parse().unwrap();
        let pts = g.points();
        assert_eq!(pts.len(), 11);
        assert_eq!(pts[3], 3.3);
        assert_eq!(*pts.last().unwrap(), 4.0);
        assert_eq!("5".parse::<SnrGrid>().unwrap().points(), vec![5.0]);
        assert!("3:4:0".parse::<SnrGrid>().is_err());
        assert!("4:3:0.5".parse::<SnrGrid>().is_err());
        assert!("3:4".parse::<SnrGrid>().is_err());
        assert!("a:4:1".parse::<SnrGrid>().is_err());
    }

    #[test]
    fn ldpc_source_parsing() {
        assert_eq!(
            "builtin:n=1800,rate=0.8333,seed=1"
                .parse::<LdpcSource>()
                .unwrap(),
            LdpcSource::Builtin {
                n: 1800,
                rate: 0.8333,
                seed: 1
            }
        );
        assert_eq!(
            "builtin".parse::<LdpcSource>().unwrap(),
            LdpcSource::default()
        );
        assert_eq!(
            "alist:/tmp/h.alist".parse::<LdpcSource>().unwrap(),
            LdpcSource::Alist("/tmp/h.alist".into())
        );
        assert!("builtin:n=x".parse::<LdpcSource>().is_err());
        assert!("builtin:q=1".parse::<LdpcSource>().is_err());
        assert!("file:x".parse::<LdpcSource>().is_err());
        let src = LdpcSource::Builtin {
            n: 96,
            rate: 0.5,
            seed: 7,
        };
        assert_eq!(src.to_string().parse::<LdpcSource>().unwrap(), src);
    }

    #[test]
    fn penalties() {
        assert!(bit_penalty(0, 1e9) < 1e-20);
        assert!(bit_penalty(1, -1e9) < 1e-20);
        assert_eq!(bit_penalty(0, 0.0), 1.0);
        assert!((bit_penalty(1, 1e9) - GMI_CLAMP / std::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn gmi_extremes() {
        let perfect: Vec<(u8, LlrFrame)> = (0u8..64)
            .map(|w| {
                let l: Vec<f64> = (0..6)
                    .map(|k| if (w >> k) & 1 == 0 { 60.0 } else { -60.0 })
                    .collect();
                (w, LlrFrame::new(&l))
            })
            .collect();
        assert!((gmi_estimate(&perfect) - 6.0).abs() < 1e-12);
        let erased: Vec<(u8, LlrFrame)> =
            (0u8..64).map(|w| (w, LlrFrame::new(&[0.0; 6]))).collect();
        assert_eq!(gmi_estimate(&erased), 0.0);
    }

    #[test]
    fn crossing_interpolation() {
        let curve = [(1.0, 4.0), (2.0, 4.5), (3.0, 5.5), (4.0, 5.8)];
        assert!((gmi_crossing(&curve, 5.0).unwrap() - 2.5).abs() < 1e-12);
        assert_eq!(gmi_crossing(&curve, 3.0), None);
        assert_eq!(gmi_crossing(&curve, 6.0), None);
        assert_eq!(gmi_crossing(&curve, 5.5), Some(3.0));
    }

    #[test]
    fn csv_shapes() {
        assert_eq!(to_csv_string(&[]), CSV_COLUMNS.join(",") + "\n");
        let row = SimRow {
            snr_db: 3.1,
            frames: 10,
            prefec_ber: Some(0.012_345_678_901_234_5),
            postfec_ber: None,
            gmi_bits: Some(5.25),
            mean_iters: None,
            ops_logical: Some(528),
            ops_add: Some(31),
            ops_cmp_min: Some(63),
            ops_cmp_max: Some(67),
        };
        let text = to_csv_string(std::slice::from_ref(&row));
        assert_eq!(text.lines().count(), 2);
        assert_eq!(parse_csv(&text).unwrap(), vec![row.clone()]);
        assert_eq!(
            parse_json(&to_json_string(std::slice::from_ref(&row))).unwrap(),
            vec![row]
        );
        assert!(parse_csv("a,b\n1,2\n").is_err());
    }

    #[test]
    fn exit_codes() {
        let cfg = SimConfig::new(pb6(), DemapperKind::Ms, SnrGrid::single(5.0));
        assert_eq!(run_gmi_sweep(&cfg).unwrap_err().exit_code(), 2);
        let cfg = SimConfig::new(pb6(), DemapperKind::Posd { p: 7 }, SnrGrid::single(5.0));
        assert_eq!(run_gmi_sweep(&cfg).unwrap_err().exit_code(), 1);
        let mut cfg = SimConfig::new(pb6(), DemapperKind::Mlm, SnrGrid::single(5.0));
        cfg.ldpc = LdpcSource::Alist("/nonexistent/code.alist".into());
        assert_eq!(run_ber_sweep(&cfg).unwrap_err().exit_code(), 3);
        let err = emit_results(
            &[],
            Path::new("/nonexistent/dir/out.csv"),
            OutputFormat::Csv,
        );
        assert_eq!(err.unwrap_err().exit_code(), 3);
    }

    #[test]
    fn gmi_sweep_is_sane() {
        let mut cfg = SimConfig::new(pb6(), DemapperKind::Mlm, "0:10:5".parse().unwrap());
        cfg.max_frames = 4000;
        let rows = run_gmi_sweep(&cfg).unwrap();
        let g: Vec<f64> = rows.iter().map(|r| r.gmi_bits.unwrap()).collect();
        assert!(g[0] < g[1] && g[1] < g[2] && g[2] <= 6.0 && g[0] >= 0.0);
        assert_eq!(rows[0].ops_add, Some(2694));
    }

    #[test]
    fn high_snr_has_no_post_fec_errors() {
        let mut cfg = SimConfig::new(pb6(), DemapperKind::Posd { p: 4 }, SnrGrid::single(30.0));
        cfg.max_frames = 20;
        cfg.ldpc = LdpcSource::Builtin {
            n: 96,
            rate: 0.5,
            seed: 7,
        };
        let rows = run_ber_sweep(&cfg).unwrap();
        assert_eq!(rows[0].frames, 20);
        assert_eq!(rows[0].postfec_ber, Some(0.0));
        assert_eq!(rows[0].prefec_ber, Some(0.0));
        assert_eq!(rows[0].mean_iters, Some(0.0));
    }

    #[test]
    fn complexity_marks_inapplicable_pairs() {
        let pairs: Vec<(FormatSpec, DemapperKind)> = FormatSpec::builtin_all()
            .into_iter()
            .flat_map(|s| table_demappers(&s).into_iter().map(move |d| (s.clone(), d)))
            .collect();
        let rows = run_complexity_report(&pairs, 200, DEFAULT_COMPLEXITY_SNR_DB, 1).unwrap();
        assert_eq!(rows.len(), 12);
        let ms_pb6 = rows
            .iter()
            .find(|r| r.format == "PB-6B8D" && r.demapper == DemapperKind::Ms);
        assert_eq!(ms_pb6.unwrap().ops, None);
        let table = render_complexity_table(&rows);
        assert!(table.contains('×'));
        assert!(complexity_csv(&rows).lines().count() == 13);
    }

    #[test]
    fn codebook_dump_lines() {
        let cb = build_codebook(&pb6());
        let csv = codebook_csv(&cb);
        assert_eq!(csv.lines().count(), 65);
        assert!(csv.lines().nth(1).unwrap().starts_with("000000,00000011,"));
        assert!(codebook_summary(&cb)
            .unwrap()
            .contains("min squared distance 4"));
    }
}
