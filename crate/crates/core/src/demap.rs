//! Soft demappers for formats defined by parity equations.
//!
//! All demappers take per-dimension observations in the LLR domain (positive
//! favors bit 0) and return LLRs for the information bits only.
//!
//! * [`demap_1d`]: observations of the information bits, as they are.
//! * [`demap_mlm`]: max-log over the full codebook.
//! * [`demap_ms`]: one min-sum pass over the checks of affine parity equations.
//! * [`demap_posd`]: partially ordered statistics. The `p` least reliable
//!   information bits are enumerated exhaustively, the rest are fixed to their
//!   hard decisions, parity bits come from the format's own equations, and each
//!   candidate is scored by its analog weight.
//!
//! Every demapper is written against a [`Tally`] so the same code path can be
//! run with operation counting ([`OpCount`]) or without (`()`).

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beq::{affine_form, FormatSpec, MAX_BITS};
use crate::modem::{build_codebook, Codebook};

/// Largest codebook size, `2^7`.
const MAX_WORDS: usize = 1 << (MAX_BITS - 1);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DemapError {
    #[error("p = {p} exceeds the {m} information bits of the format")]
    TooManyPositions { p: usize, m: usize },
    #[error("format {format} has a nonlinear parity equation for b{target}; min-sum demapping needs affine equations")]
    NonlinearFormat { format: String, target: usize },
    #[error("codebook `{codebook}` does not match format `{format}`")]
    CodebookMismatch { codebook: String, format: String },
    #[error("information bit b{bit} never takes the value {value} in the codebook")]
    EmptyPartition { bit: usize, value: u8 },
    #[error("unknown demapper `{0}` (expected 1d, mlm, ms or posd)")]
    UnknownDemapper(String),
}

/// Channel observations in the LLR domain, one per dimension.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObservationFrame(pub [f64; MAX_BITS]);

/// Demapper output: LLRs of the information bits `b_1..b_m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlrFrame {
    m: usize,
    llr: [f64; MAX_BITS],
}

impl LlrFrame {
    pub fn new(values: &[f64]) -> Self {
        let mut llr = [0.0; MAX_BITS];
        llr[..values.len()].copy_from_slice(values);
        LlrFrame {
            m: values.len(),
            llr,
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.llr[..self.m]
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }
}

impl std::ops::Index<usize> for LlrFrame {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

/// A test codeword and its analog weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub codeword: u8,
    pub weight: f64,
}

/// Operation totals in the three cost classes used for complexity comparisons.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCount {
    pub logical: u64,
    pub additions: u64,
    pub comparisons: u64,
}

impl std::ops::AddAssign for OpCount {
    fn add_assign(&mut self, rhs: OpCount) {
        self.logical += rhs.logical;
        self.additions += rhs.additions;
        self.comparisons += rhs.comparisons;
    }
}

/// Sink for operation counts.
///
/// GF(2) operators count as logical operations, real additions and
/// subtractions as additions, real-valued comparisons as comparisons.
/// Absolute values, negations and sign extraction are free.
pub trait Tally {
    fn logical(&mut self, n: u64);
    fn add(&mut self, n: u64);
    fn cmp(&mut self, n: u64);
}

impl Tally for () {
    #[inline(always)]
    fn logical(&mut self, _: u64) {}
    #[inline(always)]
    fn add(&mut self, _: u64) {}
    #[inline(always)]
    fn cmp(&mut self, _: u64) {}
}

impl Tally for OpCount {
    #[inline]
    fn logical(&mut self, n: u64) {
        self.logical += n;
    }
    #[inline]
    fn add(&mut self, n: u64) {
        self.additions += n;
    }
    #[inline]
    fn cmp(&mut self, n: u64) {
        self.comparisons += n;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PosdParams {
    /// Number of least reliable information bits to enumerate.
    pub p: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DemapperKind {
    OneD,
    Mlm,
    Ms,
    Posd { p: usize },
}

impl DemapperKind {
    /// Parses `1d`, `mlm`, `ms` or `posd`; `p` is only used for `posd`.
    pub fn parse(name: &str, p: Option<usize>) -> Result<Self, DemapError> {
        match name.to_ascii_lowercase().as_str() {
            "1d" => Ok(DemapperKind::OneD),
            "mlm" => Ok(DemapperKind::Mlm),
            "ms" => Ok(DemapperKind::Ms),
            "posd" => Ok(DemapperKind::Posd { p: p.unwrap_or(0) }),
            _ => Err(DemapError::UnknownDemapper(name.to_string())),
        }
    }
}

impl fmt::Display for DemapperKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DemapperKind::OneD => f.write_str("1d"),
            DemapperKind::Mlm => f.write_str("mlm"),
            DemapperKind::Ms => f.write_str("ms"),
            DemapperKind::Posd { p } => write!(f, "posd(p={p})"),
        }
    }
}

// ---------------------------------------------------------------------------
// Building blocks
// ---------------------------------------------------------------------------

/// Projection of the observations onto the information bits.
pub fn demap_1d(obs: &ObservationFrame, spec: &FormatSpec) -> LlrFrame {
    LlrFrame::new(&obs.0[..spec.m])
}

/// Packed hard decisions; a zero observation decides 0.
#[inline]
pub fn hard_decide(obs: &ObservationFrame) -> u8 {
    obs.0
        .iter()
        .enumerate()
        .fold(0u8, |acc, (i, &l)| acc | (u8::from(l < 0.0) << i))
}

/// Sum of `|L_i|` over the positions where `codeword` disagrees with the hard
/// decision.
pub fn analog_weight(codeword: u8, obs: &ObservationFrame) -> f64 {
    let diff = codeword ^ hard_decide(obs);
    obs.0
        .iter()
        .enumerate()
        .filter(|(i, _)| (diff >> i) & 1 == 1)
        .map(|(_, l)| l.abs())
        .sum()
}

fn merge_sort_by_key(
    idx: &mut [u8],
    scratch: &mut [u8],
    key: &[f64; MAX_BITS],
    tally: &mut impl Tally,
) {
    let len = idx.len();
    if len <= 1 {
        return;
    }
    let mid = len / 2;
    merge_sort_by_key(&mut idx[..mid], &mut scratch[..mid], key, tally);
    merge_sort_by_key(&mut idx[mid..], &mut scratch[mid..], key, tally);
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < len {
        tally.cmp(1);
        // `<=` keeps equal keys in input order, so ties go to the lower index
        if key[idx[i] as usize] <= key[idx[j] as usize] {
            scratch[k] = idx[i];
            i += 1;
        } else {
            scratch[k] = idx[j];
            j += 1;
        }
        k += 1;
    }
    scratch[k..k + mid - i].copy_from_slice(&idx[i..mid]);
    k += mid - i;
    scratch[k..k + len - j].copy_from_slice(&idx[j..len]);
    idx.copy_from_slice(&scratch[..len]);
}

/// Merge-sort comparison bounds `(best, worst)` for `len` keys, matching the
/// split used by [`select_lrp`].
pub fn merge_sort_bounds(len: usize) -> (u64, u64) {
    if len <= 1 {
        return (0, 0);
    }
    let (l, r) = (len / 2, len - len / 2);
    let (bl, wl) = merge_sort_bounds(l);
    let (br, wr) = merge_sort_bounds(r);
    (bl + br + l as u64, wl + wr + len as u64 - 1)
}

/// Orders the first `m` positions by increasing `|L|` (ties to the lower
/// index) and returns the number of comparisons used.
fn order_info_bits(mags: &[f64; MAX_BITS], m: usize, tally: &mut impl Tally) -> [u8; MAX_BITS] {
    let mut idx: [u8; MAX_BITS] = std::array::from_fn(|i| i as u8);
    let mut scratch = [0u8; MAX_BITS];
    merge_sort_by_key(&mut idx[..m], &mut scratch[..m], mags, tally);
    idx
}

/// The `p` least reliable information positions (1-based, most unreliable
/// first) and the comparisons spent finding them.
///
/// The `m` magnitudes are merge-sorted and the first `p` taken; `p = 0`
/// needs no sorting.
pub fn select_lrp(
    obs: &ObservationFrame,
    m: usize,
    p: usize,
) -> Result<(Vec<usize>, u64), DemapError> {
    if p > m {
        return Err(DemapError::TooManyPositions { p, m });
    }
    if p == 0 {
        return Ok((Vec::new(), 0));
    }
    let mags = obs.0.map(f64::abs);
    let mut count = OpCount::default();
    let order = order_info_bits(&mags, m, &mut count);
    Ok((
        order[..p].iter().map(|&i| i as usize + 1).collect(),
        count.comparisons,
    ))
}

/// Subset sums `table[mask] = sum of values[t]` for the set bits `t` of `mask`.
/// Singletons are read directly; every larger subset costs one addition.
#[inline]
fn subset_sums(values: &[f64], table: &mut [f64], tally: &mut impl Tally) {
    table[0] = 0.0;
    for mask in 1..1usize << values.len() {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        table[mask] = if rest == 0 {
            values[low]
        } else {
            tally.add(1);
            table[rest] + values[low]
        };
    }
}

/// Minimum of the entries whose mask has bit `t` set / clear.
#[inline]
fn split_minima(weights: &[f64], t: usize, tally: &mut impl Tally) -> (f64, f64) {
    let mut with = f64::INFINITY;
    let mut without = f64::INFINITY;
    let mut seen = (false, false);
    for (mask, &w) in weights.iter().enumerate() {
        if (mask >> t) & 1 == 1 {
            if seen.0 {
                tally.cmp(1);
                if w < with {
                    with = w;
                }
            } else {
                with = w;
                seen.0 = true;
            }
        } else if seen.1 {
            tally.cmp(1);
            if w < without {
                without = w;
            }
        } else {
            without = w;
            seen.1 = true;
        }
    }
    (with, without)
}

// ---------------------------------------------------------------------------
// pOSD
// ---------------------------------------------------------------------------

fn check_p(spec: &FormatSpec, p: usize) -> Result<(), DemapError> {
    if p > spec.m {
        Err(DemapError::TooManyPositions { p, m: spec.m })
    } else {
        Ok(())
    }
}

/// Test codewords of the pOSD search, in order of the flip pattern over the
/// least reliable positions (bit `t` of the pattern flips the `t`-th least
/// reliable bit).
pub fn posd_candidates(
    obs: &ObservationFrame,
    spec: &FormatSpec,
    params: PosdParams,
) -> Result<Vec<Candidate>, DemapError> {
    check_p(spec, params.p)?;
    let (lrp, _) = select_lrp(obs, spec.m, params.p)?;
    let h = hard_decide(obs);
    Ok((0..1usize << params.p)
        .map(|pattern| {
            let flips = lrp
                .iter()
                .enumerate()
                .filter(|(t, _)| (pattern >> t) & 1 == 1)
                .fold(0u8, |acc, (_, &j)| acc | (1 << (j - 1)));
            let codeword = spec.encode((h ^ flips) & spec.info_mask());
            Candidate {
                codeword,
                weight: analog_weight(codeword, obs),
            }
        })
        .collect())
}

fn posd_core(
    obs: &ObservationFrame,
    spec: &FormatSpec,
    p: usize,
    tally: &mut impl Tally,
) -> LlrFrame {
    let mut out = demap_1d(obs, spec);
    if p == 0 {
        return out;
    }
    let h = hard_decide(obs);
    let mags = obs.0.map(f64::abs);
    let order = order_info_bits(&mags, spec.m, tally);
    let lrp = &order[..p];

    // weight of the flipped least reliable positions, per flip pattern
    let lrp_mags: [f64; MAX_BITS] =
        std::array::from_fn(|t| lrp.get(t).map_or(0.0, |&j| mags[j as usize]));
    let mut flip_weight = [0.0; MAX_WORDS];
    subset_sums(&lrp_mags[..p], &mut flip_weight, tally);

    // weight of the mismatching parity positions, per mismatch pattern
    let n_par = spec.n - spec.m;
    let par_mags: [f64; MAX_BITS] =
        std::array::from_fn(|t| if t < n_par { mags[spec.m + t] } else { 0.0 });
    let mut parity_weight = [0.0; MAX_WORDS];
    subset_sums(&par_mags[..n_par], &mut parity_weight, tally);

    let eval_cost = spec.parity_op_count();
    let mut flips = [0u8; MAX_WORDS];
    let mut weights = [0.0; MAX_WORDS];
    for pattern in 0..1usize << p {
        if pattern > 0 {
            let low = pattern.trailing_zeros() as usize;
            flips[pattern] = flips[pattern & (pattern - 1)] | (1 << lrp[low]);
        }
        let info = (h ^ flips[pattern]) & spec.info_mask();
        let codeword = spec.encode(info);
        let mismatch = ((codeword ^ h) >> spec.m) as usize & ((1 << n_par) - 1);
        // p XORs to form the test word, the parity equations, n - m XORs
        // against the parity hard decisions
        tally.logical(p as u64 + eval_cost + n_par as u64);
        weights[pattern] = if pattern == 0 {
            parity_weight[mismatch]
        } else {
            tally.add(1);
            flip_weight[pattern] + parity_weight[mismatch]
        };
    }

    let weights = &weights[..1 << p];
    for (t, &j) in lrp.iter().enumerate() {
        let (flipped, kept) = split_minima(weights, t, tally);
        tally.add(1);
        let j = j as usize;
        out.llr[j] = if (h >> j) & 1 == 0 {
            flipped - kept
        } else {
            kept - flipped
        };
    }
    out
}

/// Partially ordered statistics demapping with `params.p` enumerated positions.
pub fn demap_posd(
    obs: &ObservationFrame,
    spec: &FormatSpec,
    params: PosdParams,
) -> Result<LlrFrame, DemapError> {
    check_p(spec, params.p)?;
    Ok(posd_core(obs, spec, params.p, &mut ()))
}

// ---------------------------------------------------------------------------
// MaxLogMap
// ---------------------------------------------------------------------------

fn check_codebook(spec: &FormatSpec, codebook: &Codebook) -> Result<(), DemapError> {
    let consistent = codebook.m == spec.m
        && codebook.n == spec.n
        && codebook.len() == 1 << spec.m
        && codebook
            .entries
            .iter()
            .all(|e| spec.encode(e.info) == e.codeword);
    if consistent {
        Ok(())
    } else {
        Err(DemapError::CodebookMismatch {
            codebook: codebook.name.clone(),
            format: spec.name.clone(),
        })
    }
}

/// Max-log demapping against every codeword.
///
/// Each coupled information bit is served by its own pair of half-codebooks,
/// as in a bit-parallel hardware demapper: the analog weight of every
/// codeword is formed per bit as an `n`-term masked sum. Bits that occur in
/// no parity equation split the codebook into two halves that differ only in
/// that bit, so their max-log LLR is the observation itself.
fn mlm_core(
    obs: &ObservationFrame,
    spec: &FormatSpec,
    codebook: &Codebook,
    tally: &mut impl Tally,
) -> LlrFrame {
    let mut out = demap_1d(obs, spec);
    let h = hard_decide(obs);
    let mags = obs.0.map(f64::abs);
    let n = spec.n;
    let coupled = spec.coupled_info_mask();
    for k in 0..spec.m {
        if (coupled >> k) & 1 == 0 {
            continue;
        }
        let mut with = f64::INFINITY;
        let mut without = f64::INFINITY;
        let mut seen = (false, false);
        for entry in &codebook.entries {
            let diff = entry.codeword ^ h;
            tally.logical(n as u64);
            let mut w = if diff & 1 == 1 { mags[0] } else { 0.0 };
            for (i, &mag) in mags.iter().enumerate().take(n).skip(1) {
                w += if (diff >> i) & 1 == 1 { mag } else { 0.0 };
            }
            tally.add(n as u64 - 1);
            let (best, seen_side) = if (entry.codeword >> k) & 1 == 1 {
                (&mut with, &mut seen.0)
            } else {
                (&mut without, &mut seen.1)
            };
            if *seen_side {
                tally.cmp(1);
                if w < *best {
                    *best = w;
                }
            } else {
                *best = w;
                *seen_side = true;
            }
        }
        tally.add(1);
        out.llr[k] = with - without;
    }
    out
}

pub fn demap_mlm(
    obs: &ObservationFrame,
    spec: &FormatSpec,
    codebook: &Codebook,
) -> Result<LlrFrame, DemapError> {
    check_codebook(spec, codebook)?;
    for k in 0..spec.m {
        for value in 0..2u8 {
            if !codebook
                .entries
                .iter()
                .any(|e| (e.codeword >> k) & 1 == value)
            {
                return Err(DemapError::EmptyPartition { bit: k + 1, value });
            }
        }
    }
    Ok(mlm_core(obs, spec, codebook, &mut ()))
}

// ---------------------------------------------------------------------------
// Min-sum
// ---------------------------------------------------------------------------

/// One parity check `b_t ^ xor(b_j, j in S) = constant`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    /// 0-based positions, parity position last.
    pub members: Vec<usize>,
    pub constant: bool,
}

/// Checks of a format whose parity equations are all affine.
pub fn min_sum_checks(spec: &FormatSpec) -> Result<Vec<Check>, DemapError> {
    spec.parity
        .iter()
        .map(|def| {
            let form =
                affine_form(&def.expr, spec.m).ok_or_else(|| DemapError::NonlinearFormat {
                    format: spec.name.clone(),
                    target: def.target,
                })?;
            let mut members: Vec<usize> = (0..spec.m)
                .filter(|&j| (form.support >> j) & 1 == 1)
                .collect();
            members.push(def.target - 1);
            Ok(Check {
                members,
                constant: form.constant,
            })
        })
        .collect()
}

fn ms_core(
    obs: &ObservationFrame,
    spec: &FormatSpec,
    checks: &[Check],
    tally: &mut impl Tally,
) -> LlrFrame {
    let mut out = demap_1d(obs, spec);
    let l = &obs.0;
    for check in checks {
        let members = &check.members;
        if members.len() < 2 {
            continue;
        }
        // product of signs, as a parity of sign bits
        let mut neg = check.constant;
        for &j in members {
            neg ^= l[j] < 0.0;
        }
        tally.logical(members.len() as u64 - 1 + u64::from(check.constant));
        // two smallest magnitudes
        let mut min1 = l[members[0]].abs();
        let mut arg1 = members[0];
        let mut min2 = f64::INFINITY;
        for (pos, &j) in members.iter().enumerate().skip(1) {
            let v = l[j].abs();
            tally.cmp(1);
            if v < min1 {
                min2 = min1;
                min1 = v;
                arg1 = j;
            } else if pos == 1 {
                min2 = v;
            } else {
                tally.cmp(1);
                if v < min2 {
                    min2 = v;
                }
            }
        }
        for &k in members.iter().filter(|&&k| k < spec.m) {
            let mag = if k == arg1 { min2 } else { min1 };
            tally.logical(1);
            let sign_neg = neg ^ (l[k] < 0.0);
            tally.add(1);
            out.llr[k] += if sign_neg { -mag } else { mag };
        }
    }
    out
}

/// Single extrinsic min-sum pass; only defined for affine parity equations.
pub fn demap_ms(obs: &ObservationFrame, spec: &FormatSpec) -> Result<LlrFrame, DemapError> {
    let checks = min_sum_checks(spec)?;
    Ok(ms_core(obs, spec, &checks, &mut ()))
}

// ---------------------------------------------------------------------------
// Prepared demappers and op counting
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum Prepared {
    OneD,
    Mlm(Codebook),
    Ms(Vec<Check>),
    Posd(usize),
}

/// A demapper bound to a format, with its tables built once.
#[derive(Debug, Clone)]
pub struct Demapper {
    kind: DemapperKind,
    spec: FormatSpec,
    prepared: Prepared,
}

impl Demapper {
    pub fn new(kind: DemapperKind, spec: &FormatSpec) -> Result<Self, DemapError> {
        let prepared = match kind {
            DemapperKind::OneD => Prepared::OneD,
            DemapperKind::Mlm => Prepared::Mlm(build_codebook(spec)),
            DemapperKind::Ms => Prepared::Ms(min_sum_checks(spec)?),
            DemapperKind::Posd { p } => {
                check_p(spec, p)?;
                Prepared::Posd(p)
            }
        };
        Ok(Demapper {
            kind,
            spec: spec.clone(),
            prepared,
        })
    }

    pub fn kind(&self) -> DemapperKind {
        self.kind
    }

    pub fn spec(&self) -> &FormatSpec {
        &self.spec
    }

    #[inline]
    pub fn demap(&self, obs: &ObservationFrame) -> LlrFrame {
        self.demap_counted(obs, &mut ())
    }

    pub fn demap_counted(&self, obs: &ObservationFrame, tally: &mut impl Tally) -> LlrFrame {
        match &self.prepared {
            Prepared::OneD => demap_1d(obs, &self.spec),
            Prepared::Mlm(cb) => mlm_core(obs, &self.spec, cb, tally),
            Prepared::Ms(checks) => ms_core(obs, &self.spec, checks, tally),
            Prepared::Posd(p) => posd_core(obs, &self.spec, *p, tally),
        }
    }
}

/// Operations spent demapping one symbol.
pub fn count_ops(
    kind: DemapperKind,
    spec: &FormatSpec,
    obs: &ObservationFrame,
) -> Result<OpCount, DemapError> {
    let demapper = Demapper::new(kind, spec)?;
    let mut count = OpCount::default();
    demapper.demap_counted(obs, &mut count);
    Ok(count)
}
