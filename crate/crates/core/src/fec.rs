//! LDPC codes: construction, alist exchange, systematic encoding and
//! flooding min-sum decoding.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::channel::frame_rng;

/// Default iteration cap of the min-sum decoder.
pub const DEFAULT_MAX_ITER: usize = 20;

const COLUMN_DEGREE: usize = 3;
const CONSTRUCTION_ATTEMPTS: u64 = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FecError {
    #[error("alist line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid code parameters: {0}")]
    InvalidParameters(String),
    #[error("infeasible degree constraints: {0}")]
    Infeasible(String),
    #[error("expected {expected} bits, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Sparse binary matrix with row and column adjacency (0-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseMatrix {
    rows: Vec<Vec<usize>>,
    cols: Vec<Vec<usize>>,
}

impl SparseMatrix {
    /// Builds from per-row column lists; each list is sorted.
    pub fn from_rows(n_cols: usize, mut rows: Vec<Vec<usize>>) -> Self {
        let mut cols = vec![Vec::new(); n_cols];
        for (r, row) in rows.iter_mut().enumerate() {
            row.sort_unstable();
            for &c in row.iter() {
                cols[c].push(r);
            }
        }
        SparseMatrix { rows, cols }
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, r: usize) -> &[usize] {
        &self.rows[r]
    }

    pub fn col(&self, c: usize) -> &[usize] {
        &self.cols[c]
    }

    pub fn num_edges(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// `true` when `bits` (0/1 per column) has zero syndrome.
    pub fn is_codeword(&self, bits: &[u8]) -> bool {
        self.rows
            .iter()
            .all(|row| row.iter().fold(0u8, |acc, &c| acc ^ bits[c]) == 0)
    }

    /// Number of 4-cycles: pairs of rows sharing two or more columns.
    pub fn four_cycles(&self) -> usize {
        let m = self.num_rows();
        let mut shared = vec![0u32; m];
        let mut total = 0;
        for r in 0..m {
            shared.iter_mut().for_each(|s| *s = 0);
            for &c in &self.rows[r] {
                for &r2 in &self.cols[c] {
                    if r2 > r {
                        shared[r2] += 1;
                    }
                }
            }
            total += shared
                .iter()
                .map(|&s| (s as usize * s.saturating_sub(1) as usize) / 2)
                .sum::<usize>();
        }
        total
    }
}

/// Dense GF(2) row, packed into 64-bit words.
#[derive(Debug, Clone, PartialEq, Eq)]
struct BitRow(Vec<u64>);

impl BitRow {
    fn zeros(len: usize) -> Self {
        BitRow(vec![0; len.div_ceil(64)])
    }

    #[inline]
    fn get(&self, i: usize) -> bool {
        (self.0[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn xor_assign(&mut self, other: &BitRow) {
        self.0.iter_mut().zip(&other.0).for_each(|(a, b)| *a ^= b);
    }

    fn parity_with(&self, other: &BitRow) -> u8 {
        (self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a & b).count_ones())
            .sum::<u32>()
            & 1) as u8
    }
}

/// An LDPC code with a systematic encoder derived from its parity-check matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LdpcCode {
    h: SparseMatrix,
    /// Codeword positions carrying the information bits, in information order.
    info_positions: Vec<usize>,
    /// One entry per independent check: (parity position, mask over info indices).
    parity_eqs: Vec<(usize, BitRow)>,
}

impl LdpcCode {
    /// Derives the encoder by row-reducing `h` over GF(2). Redundant checks
    /// are tolerated; the code dimension is `n - rank(H)`.
    pub fn from_parity_check(h: SparseMatrix) -> Self {
        let n = h.num_cols();
        let mut dense: Vec<BitRow> = (0..h.num_rows())
            .map(|r| {
                let mut row = BitRow::zeros(n);
                for &c in h.row(r) {
                    row.set(c);
                }
                row
            })
            .collect();
        let mut pivots = Vec::new();
        let mut rank = 0;
        for col in 0..n {
            let Some(p) = (rank..dense.len()).find(|&r| dense[r].get(col)) else {
                continue;
            };
            dense.swap(rank, p);
            let pivot_row = dense[rank].clone();
            for (r, row) in dense.iter_mut().enumerate() {
                if r != rank && row.get(col) {
                    row.xor_assign(&pivot_row);
                }
            }
            pivots.push(col);
            rank += 1;
        }
        let mut is_pivot = vec![false; n];
        pivots.iter().for_each(|&c| is_pivot[c] = true);
        let info_positions: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
        let k = info_positions.len();
        let parity_eqs = pivots
            .iter()
            .enumerate()
            .map(|(r, &col)| {
                let mut mask = BitRow::zeros(k);
                for (i, &c) in info_positions.iter().enumerate() {
                    if dense[r].get(c) {
                        mask.set(i);
                    }
                }
                (col, mask)
            })
            .collect();
        LdpcCode {
            h,
            info_positions,
            parity_eqs,
        }
    }

    pub fn n(&self) -> usize {
        self.h.num_cols()
    }

    pub fn k(&self) -> usize {
        self.info_positions.len()
    }

    pub fn num_checks(&self) -> usize {
        self.h.num_rows()
    }

    pub fn rank(&self) -> usize {
        self.parity_eqs.len()
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n() as f64
    }

    pub fn parity_check(&self) -> &SparseMatrix {
        &self.h
    }

    pub fn info_positions(&self) -> &[usize] {
        &self.info_positions
    }

    /// Pulls the information bits out of a codeword.
    pub fn extract_info(&self, codeword: &[u8]) -> Vec<u8> {
        self.info_positions.iter().map(|&p| codeword[p]).collect()
    }
}

/// Pseudo-random column-regular code (column degree 3) with `n * (1 - rate)`
/// checks. Rows are filled as evenly as possible and pairs of rows sharing a
/// column are avoided, which removes 4-cycles whenever the greedy fill allows.
/// Deterministic in `seed`; fills with redundant checks or 4-cycles are retried.
pub fn make_regular_code(n: usize, rate: f64, seed: u64) -> Result<LdpcCode, FecError> {
    if n < 96 {
        return Err(FecError::InvalidParameters(format!(
            "length {n} is below the minimum of 96"
        )));
    }
    if !(rate > 0.0 && rate < 1.0) {
        return Err(FecError::InvalidParameters(format!(
            "rate {rate} outside (0, 1)"
        )));
    }
    let exact = n as f64 * (1.0 - rate);
    let m = exact.round() as usize;
    if (exact - m as f64).abs() > 0.1 {
        return Err(FecError::InvalidParameters(format!(
            "n * (1 - rate) = {exact} is not an integer"
        )));
    }
    if m < COLUMN_DEGREE {
        return Err(FecError::Infeasible(format!(
            "{m} checks cannot hold columns of degree {COLUMN_DEGREE}"
        )));
    }
    // best so far, ranked by (full rank, no 4-cycles)
    let mut best: Option<((bool, bool), LdpcCode)> = None;
    for attempt in 0..CONSTRUCTION_ATTEMPTS {
        let Some(h) = regular_fill(n, m, &mut frame_rng(seed, attempt)) else {
            continue;
        };
        let girth_ok = h.four_cycles() == 0;
        let code = LdpcCode::from_parity_check(h);
        let score = (code.rank() == m, girth_ok);
        if score == (true, true) {
            return Ok(code);
        }
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, code));
        }
    }
    best.map(|(_, code)| code).ok_or_else(|| {
        FecError::Infeasible(format!(
            "no column-regular fill of {m} checks x {n} columns found"
        ))
    })
}

fn regular_fill<R: Rng>(n: usize, m: usize, rng: &mut R) -> Option<SparseMatrix> {
    let cap = (COLUMN_DEGREE * n).div_ceil(m);
    let mut degree = vec![0usize; m];
    let mut linked = vec![false; m * m];
    let mut rows = vec![Vec::new(); m];
    let mut order: Vec<usize> = (0..m).collect();
    for col in 0..n {
        order.shuffle(rng);
        // least-filled rows first, random among equals
        order.sort_by_key(|&r| degree[r]);
        let mut chosen: Vec<usize> = Vec::with_capacity(COLUMN_DEGREE);
        for _ in 0..COLUMN_DEGREE {
            let free = |r: usize, chosen: &[usize]| degree[r] < cap && !chosen.contains(&r);
            let pick = order
                .iter()
                .copied()
                .find(|&r| free(r, &chosen) && chosen.iter().all(|&o| !linked[r * m + o]))
                .or_else(|| order.iter().copied().find(|&r| free(r, &chosen)))?;
            chosen.push(pick);
        }
        for (i, &a) in chosen.iter().enumerate() {
            degree[a] += 1;
            rows[a].push(col);
            for &b in &chosen[i + 1..] {
                linked[a * m + b] = true;
                linked[b * m + a] = true;
            }
        }
    }
    Some(SparseMatrix::from_rows(n, rows))
}

/// Systematic encoding: the information bits go to
/// [`LdpcCode::info_positions`], the remaining positions solve `H c = 0`.
pub fn ldpc_encode(code: &LdpcCode, info: &[u8]) -> Result<Vec<u8>, FecError> {
    if info.len() != code.k() {
        return Err(FecError::LengthMismatch {
            expected: code.k(),
            got: info.len(),
        });
    }
    let mut packed = BitRow::zeros(code.k());
    let mut cw = vec![0u8; code.n()];
    for (i, (&bit, &pos)) in info.iter().zip(&code.info_positions).enumerate() {
        cw[pos] = bit & 1;
        if bit & 1 == 1 {
            packed.set(i);
        }
    }
    for (pos, mask) in &code.parity_eqs {
        cw[*pos] = mask.parity_with(&packed);
    }
    Ok(cw)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeResult {
    pub bits: Vec<u8>,
    pub iterations: usize,
    /// All checks satisfied with no undecided (zero-LLR) bit.
    pub satisfied: bool,
}

fn decided(h: &SparseMatrix, totals: &[f64], bits: &mut [u8]) -> bool {
    let mut sure = true;
    for (b, &t) in bits.iter_mut().zip(totals) {
        *b = u8::from(t < 0.0);
        sure &= t != 0.0;
    }
    sure && h.is_codeword(bits)
}

/// Plain min-sum with a flooding schedule; stops as soon as the hard
/// decisions satisfy every check. A zero total LLR counts as undecided.
pub fn ldpc_decode_ms(code: &LdpcCode, llrs: &[f64], max_iter: usize) -> DecodeResult {
    let h = &code.h;
    let n = h.num_cols();
    assert_eq!(llrs.len(), n, "one LLR per code bit");
    let mut bits = vec![0u8; n];
    if decided(h, llrs, &mut bits) {
        return DecodeResult {
            bits,
            iterations: 0,
            satisfied: true,
        };
    }

    // edges grouped by check
    let mut edge_start = Vec::with_capacity(h.num_rows() + 1);
    let mut edge_var = Vec::with_capacity(h.num_edges());
    edge_start.push(0);
    for r in 0..h.num_rows() {
        edge_var.extend_from_slice(h.row(r));
        edge_start.push(edge_var.len());
    }
    let mut var_edges: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (e, &v) in edge_var.iter().enumerate() {
        var_edges[v].push(e);
    }

    let mut v2c: Vec<f64> = edge_var.iter().map(|&v| llrs[v]).collect();
    let mut c2v = vec![0.0; edge_var.len()];
    let mut totals = llrs.to_vec();

    for iteration in 1..=max_iter {
        for r in 0..h.num_rows() {
            let edges = edge_start[r]..edge_start[r + 1];
            let mut neg = false;
            let mut min1 = f64::INFINITY;
            let mut min2 = f64::INFINITY;
            let mut arg = usize::MAX;
            for e in edges.clone() {
                let m = v2c[e];
                neg ^= m < 0.0;
                let a = m.abs();
                if a < min1 {
                    min2 = min1;
                    min1 = a;
                    arg = e;
                } else if a < min2 {
                    min2 = a;
                }
            }
            for e in edges {
                let mag = if e == arg { min2 } else { min1 };
                let sign_neg = neg ^ (v2c[e] < 0.0);
                c2v[e] = if sign_neg { -mag } else { mag };
            }
        }
        for (v, edges) in var_edges.iter().enumerate() {
            let total = llrs[v] + edges.iter().map(|&e| c2v[e]).sum::<f64>();
            totals[v] = total;
            for &e in edges {
                v2c[e] = total - c2v[e];
            }
        }
        if decided(h, &totals, &mut bits) {
            return DecodeResult {
                bits,
                iterations: iteration,
                satisfied: true,
            };
        }
    }
    DecodeResult {
        bits,
        iterations: max_iter,
        satisfied: false,
    }
}

// ---------------------------------------------------------------------------
// alist
// ---------------------------------------------------------------------------

/// Serializes the parity-check matrix in alist form: `n m`, maximum column
/// and row degrees, per-column and per-row degrees, then 1-based adjacency
/// lists (columns first) padded with zeros to the maximum degree.
pub fn write_alist(code: &LdpcCode) -> String {
    let h = &code.h;
    let (n, m) = (h.num_cols(), h.num_rows());
    let max_col = (0..n).map(|c| h.col(c).len()).max().unwrap_or(0);
    let max_row = (0..m).map(|r| h.row(r).len()).max().unwrap_or(0);
    let mut out = String::new();
    let join = |it: &mut dyn Iterator<Item = usize>| {
        it.map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
    };
    let _ = writeln!(out, "{n} {m}");
    let _ = writeln!(out, "{max_col} {max_row}");
    let _ = writeln!(out, "{}", join(&mut (0..n).map(|c| h.col(c).len())));
    let _ = writeln!(out, "{}", join(&mut (0..m).map(|r| h.row(r).len())));
    for c in 0..n {
        let list = h.col(c);
        let padded = list
            .iter()
            .map(|&r| r + 1)
            .chain(std::iter::repeat_n(0, max_col - list.len()));
        let _ = writeln!(out, "{}", join(&mut padded.into_iter()));
    }
    for r in 0..m {
        let list = h.row(r);
        let padded = list
            .iter()
            .map(|&c| c + 1)
            .chain(std::iter::repeat_n(0, max_row - list.len()));
        let _ = writeln!(out, "{}", join(&mut padded.into_iter()));
    }
    out
}

struct AlistLines<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl AlistLines<'_> {
    fn next_numbers(&mut self, what: &str) -> Result<(usize, Vec<usize>), FecError> {
        for (i, line) in self.lines.by_ref() {
            self.last = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let nums = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<usize>().map_err(|_| FecError::Parse {
                        line: i + 1,
                        msg: format!("`{t}` is not a non-negative integer"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            return Ok((i + 1, nums));
        }
        Err(FecError::Parse {
            line: self.last + 1,
            msg: format!("unexpected end of file, expected {what}"),
        })
    }
}

/// Parses an alist document. Zero padding in the adjacency lists is optional.
pub fn load_alist(text: &str) -> Result<LdpcCode, FecError> {
    let mut lines = AlistLines {
        lines: text.lines().enumerate(),
        last: 0,
    };
    let bad = |line: usize, msg: String| FecError::Parse { line, msg };

    let (l, dims) = lines.next_numbers("`n m`")?;
    let [n, m] = dims[..] else {
        return Err(bad(l, "expected `n m`".into()));
    };
    let (l, maxes) = lines.next_numbers("maximum degrees")?;
    let [max_col, max_row] = maxes[..] else {
        return Err(bad(l, "expected two maximum degrees".into()));
    };
    let (l, col_deg) = lines.next_numbers("column degrees")?;
    if col_deg.len() != n {
        return Err(bad(
            l,
            format!("expected {n} column degrees, got {}", col_deg.len()),
        ));
    }
    let (l, row_deg) = lines.next_numbers("row degrees")?;
    if row_deg.len() != m {
        return Err(bad(
            l,
            format!("expected {m} row degrees, got {}", row_deg.len()),
        ));
    }
    if let Some(&d) = col_deg.iter().find(|&&d| d > max_col) {
        return Err(bad(
            l,
            format!("column degree {d} exceeds maximum {max_col}"),
        ));
    }
    if let Some(&d) = row_deg.iter().find(|&&d| d > max_row) {
        return Err(bad(l, format!("row degree {d} exceeds maximum {max_row}")));
    }

    let mut read_lists = |count: usize, degrees: &[usize], bound: usize, what: &str| {
        (0..count)
            .map(|i| {
                let (l, nums) = lines.next_numbers(what)?;
                let list: Vec<usize> = nums.into_iter().filter(|&v| v != 0).collect();
                if list.len() != degrees[i] {
                    return Err(bad(
                        l,
                        format!(
                            "{what} {} lists {} entries, degree is {}",
                            i + 1,
                            list.len(),
                            degrees[i]
                        ),
                    ));
                }
                if let Some(&v) = list.iter().find(|&&v| v > bound) {
                    return Err(bad(l, format!("index {v} out of range 1..={bound}")));
                }
                Ok(list.into_iter().map(|v| v - 1).collect::<Vec<_>>())
            })
            .collect::<Result<Vec<_>, FecError>>()
    };
    let cols = read_lists(n, &col_deg, m, "column")?;
    let rows = read_lists(m, &row_deg, n, "row")?;

    let h = SparseMatrix::from_rows(n, rows);
    for (c, list) in cols.iter().enumerate() {
        let mut list = list.clone();
        list.sort_unstable();
        if list != h.col(c) {
            return Err(bad(
                lines.last,
                format!("column {} adjacency disagrees with the row lists", c + 1),
            ));
        }
    }
    Ok(LdpcCode::from_parity_check(h))
}
