//! Boolean parity equations over GF(2) and the format-definition language.
//!
//! A format file names a format, fixes the number of bits per symbol and the
//! number of information bits, and defines every remaining bit as a Boolean
//! expression of the information bits:
//!
//! ```text
//! format PB-6B8D
//! bits 8
//! info 6
//! provenance verbatim
//! parity b7 = !b2 ^ b3 ^ b5 ^ (b1 ^ b2) & (b3 ^ b4 ^ b5 ^ b6) ^ (b3 ^ b4) & (b5 ^ b6)
//! parity b8 = !b1 ^ b4 ^ b6 ^ (b1 ^ b2) & (b3 ^ b4 ^ b5 ^ b6) ^ (b3 ^ b4) & (b5 ^ b6)
//! ```
//!
//! Operators are `!` (negation), `&` (GF(2) multiplication) and `^` (GF(2)
//! addition), binding in that order. Everything after `#` is a comment.
//!
//! Bit vectors are packed into a `u8`: bit `i - 1` of the word holds `b_i`.

use std::fmt;
use std::path::Path;

use thiserror::Error;

/// Largest number of bits per symbol (four QPSK slots).
pub const MAX_BITS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BeqError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("line {line}, column {col}: bit b{bit} is not defined by this format")]
    UndefinedBit { line: usize, col: usize, bit: usize },
    #[error("line {line}, column {col}: parity bit b{bit} cannot appear inside an expression")]
    ParityInExpression { line: usize, col: usize, bit: usize },
    #[error("line {line}: parity bit b{bit} is defined twice")]
    DuplicateParity { line: usize, bit: usize },
    #[error("line {line}: b{bit} is an information bit and cannot be a parity target")]
    InfoTarget { line: usize, bit: usize },
    #[error("parity bit b{bit} has no definition")]
    MissingParity { bit: usize },
    #[error("line {line}: {msg}")]
    Header { line: usize, msg: String },
    #[error("bit index {index} is outside 1..={m}")]
    IndexOutOfRange { index: usize, m: usize },
    #[error("expected {expected} bits, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("bit values must be 0 or 1")]
    NotABit,
    #[error("unknown format `{0}`")]
    UnknownFormat(String),
    #[error("cannot read format file: {0}")]
    Io(String),
}

/// Boolean expression over the information bits of a format.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BoolExpr {
    Const(bool),
    /// 1-based bit position.
    Var(usize),
    Not(Box<BoolExpr>),
    Xor(Box<BoolExpr>, Box<BoolExpr>),
    And(Box<BoolExpr>, Box<BoolExpr>),
}

impl BoolExpr {
    pub fn var(i: usize) -> Self {
        BoolExpr::Var(i)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: BoolExpr) -> Self {
        BoolExpr::Not(Box::new(e))
    }

    pub fn xor(l: BoolExpr, r: BoolExpr) -> Self {
        BoolExpr::Xor(Box::new(l), Box::new(r))
    }

    pub fn and(l: BoolExpr, r: BoolExpr) -> Self {
        BoolExpr::And(Box::new(l), Box::new(r))
    }

    /// Evaluates on a packed word. Positions beyond the word read as 0.
    pub fn eval(&self, word: u8) -> bool {
        match self {
            BoolExpr::Const(b) => *b,
            BoolExpr::Var(i) => *i >= 1 && *i <= MAX_BITS && (word >> (i - 1)) & 1 == 1,
            BoolExpr::Not(e) => !e.eval(word),
            BoolExpr::Xor(l, r) => l.eval(word) ^ r.eval(word),
            BoolExpr::And(l, r) => l.eval(word) & r.eval(word),
        }
    }

    /// Largest variable index referenced, 0 for constant expressions.
    pub fn max_var(&self) -> usize {
        match self {
            BoolExpr::Const(_) => 0,
            BoolExpr::Var(i) => *i,
            BoolExpr::Not(e) => e.max_var(),
            BoolExpr::Xor(l, r) | BoolExpr::And(l, r) => l.max_var().max(r.max_var()),
        }
    }

    /// Mask of the variables that occur syntactically.
    pub fn support(&self) -> u8 {
        match self {
            BoolExpr::Const(_) => 0,
            BoolExpr::Var(i) if (1..=MAX_BITS).contains(i) => 1 << (i - 1),
            BoolExpr::Var(_) => 0,
            BoolExpr::Not(e) => e.support(),
            BoolExpr::Xor(l, r) | BoolExpr::And(l, r) => l.support() | r.support(),
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        // prec: 0 = xor context, 1 = and context, 2 = unary context
        match self {
            BoolExpr::Const(b) => write!(f, "{}", u8::from(*b)),
            BoolExpr::Var(i) => write!(f, "b{i}"),
            BoolExpr::Not(e) => {
                f.write_str("!")?;
                e.fmt_prec(f, 2)
            }
            BoolExpr::Xor(l, r) => {
                if prec > 0 {
                    f.write_str("(")?;
                }
                l.fmt_prec(f, 0)?;
                f.write_str(" ^ ")?;
                // left-associative: a right-hand xor needs parentheses
                r.fmt_prec(f, 1)?;
                if prec > 0 {
                    f.write_str(")")?;
                }
                Ok(())
            }
            BoolExpr::And(l, r) => {
                if prec > 1 {
                    f.write_str("(")?;
                }
                l.fmt_prec(f, 1)?;
                f.write_str(" & ")?;
                r.fmt_prec(f, 2)?;
                if prec > 1 {
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for BoolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// GF(2) value of `expr` on an explicit bit vector `info_bits` (entries 0/1).
pub fn eval_expr(expr: &BoolExpr, info_bits: &[u8]) -> Result<u8, BeqError> {
    let word = pack_bits(info_bits)?;
    let m = info_bits.len();
    let top = expr.max_var();
    if top > m {
        return Err(BeqError::IndexOutOfRange { index: top, m });
    }
    Ok(u8::from(expr.eval(word)))
}

/// Number of logical operator nodes (negation, XOR, AND) in the tree.
pub fn expr_op_count(expr: &BoolExpr) -> u64 {
    match expr {
        BoolExpr::Const(_) | BoolExpr::Var(_) => 0,
        BoolExpr::Not(e) => 1 + expr_op_count(e),
        BoolExpr::Xor(l, r) | BoolExpr::And(l, r) => 1 + expr_op_count(l) + expr_op_count(r),
    }
}

/// Affine decomposition `f(x) = constant ^ xor of x_j over support`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AffineForm {
    pub constant: bool,
    pub support: u8,
}

/// Returns the affine decomposition of `expr` over `m` variables, or `None`
/// when the function has a nonlinear term.
///
/// A Boolean function is affine iff it agrees everywhere with the affine
/// function interpolated from its values at 0 and at the unit vectors, which
/// makes the check linear in the truth-table size.
pub fn affine_form(expr: &BoolExpr, m: usize) -> Option<AffineForm> {
    assert!(
        m <= MAX_BITS,
        "affinity test supports at most {MAX_BITS} variables"
    );
    let constant = expr.eval(0);
    let support = (0..m)
        .filter(|&i| expr.eval(1 << i) != constant)
        .fold(0u8, |acc, i| acc | (1 << i));
    let words = 1u16 << m;
    (0..words)
        .all(|x| {
            let x = x as u8;
            let lin = (x & support).count_ones() & 1 == 1;
            expr.eval(x) == (constant ^ lin)
        })
        .then_some(AffineForm { constant, support })
}

pub fn is_affine(expr: &BoolExpr, m: usize) -> bool {
    affine_form(expr, m).is_some()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    /// Equations copied from the published definition.
    Verbatim,
    /// Stand-in equations with the published structure but not the published labeling.
    Reconstructed,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Verbatim => "verbatim",
            Provenance::Reconstructed => "reconstructed",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ParityDef {
    /// 1-based position in `m + 1..=n`.
    pub target: usize,
    pub expr: BoolExpr,
}

/// A complete multi-dimensional format: information bits plus parity equations.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FormatSpec {
    pub name: String,
    pub n: usize,
    pub m: usize,
    /// Sorted by target position, one entry per position in `m + 1..=n`.
    pub parity: Vec<ParityDef>,
    pub provenance: Provenance,
}

impl FormatSpec {
    /// Full codeword (packed) for a packed information word.
    pub fn encode(&self, info: u8) -> u8 {
        let info = info & self.info_mask();
        self.parity.iter().fold(info, |cw, def| {
            cw | (u8::from(def.expr.eval(info)) << (def.target - 1))
        })
    }

    pub fn info_mask(&self) -> u8 {
        ((1u16 << self.m) - 1) as u8
    }

    pub fn parity_mask(&self) -> u8 {
        (((1u16 << self.n) - 1) as u8) & !self.info_mask()
    }

    /// Information bits that occur in at least one parity equation.
    pub fn coupled_info_mask(&self) -> u8 {
        self.parity.iter().fold(0, |acc, d| acc | d.expr.support()) & self.info_mask()
    }

    /// Static logical-operation cost of evaluating all parity equations once.
    pub fn parity_op_count(&self) -> u64 {
        self.parity.iter().map(|d| expr_op_count(&d.expr)).sum()
    }

    /// `true` when every parity equation is affine in the information bits.
    pub fn is_linear(&self) -> bool {
        self.parity.iter().all(|d| is_affine(&d.expr, self.m))
    }

    /// Looks up one of the shipped formats by name (case-insensitive, with
    /// or without dashes).
    pub fn builtin(name: &str) -> Result<FormatSpec, BeqError> {
        let key: String = name
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        let text = BUILTIN_FORMATS
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, t)| *t)
            .ok_or_else(|| BeqError::UnknownFormat(name.to_string()))?;
        parse_format(text)
    }

    /// All four shipped formats, in increasing order of information bits.
    pub fn builtin_all() -> Vec<FormatSpec> {
        BUILTIN_FORMATS
            .iter()
            .map(|(_, text)| parse_format(text).expect("shipped format files parse"))
            .collect()
    }

    /// Resolves a shipped format name or, failing that, reads a format file.
    pub fn load(name_or_path: &str) -> Result<FormatSpec, BeqError> {
        match FormatSpec::builtin(name_or_path) {
            Ok(spec) => Ok(spec),
            Err(BeqError::UnknownFormat(_)) if Path::new(name_or_path).exists() => {
                let text = std::fs::read_to_string(name_or_path)
                    .map_err(|e| BeqError::Io(e.to_string()))?;
                parse_format(&text)
            }
            Err(e) => Err(e),
        }
    }
}

/// Computes the full codeword `b_1..b_n` for the information bits `b_1..b_m`.
pub fn compute_parity(spec: &FormatSpec, info_bits: &[u8]) -> Result<Vec<u8>, BeqError> {
    if info_bits.len() != spec.m {
        return Err(BeqError::LengthMismatch {
            expected: spec.m,
            got: info_bits.len(),
        });
    }
    let cw = spec.encode(pack_bits(info_bits)?);
    Ok(unpack_bits(cw, spec.n))
}

impl fmt::Display for FormatSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "format {}", self.name)?;
        writeln!(f, "bits {}", self.n)?;
        writeln!(f, "info {}", self.m)?;
        writeln!(f, "provenance {}", self.provenance)?;
        for def in &self.parity {
            writeln!(f, "parity b{} = {}", def.target, def.expr)?;
        }
        Ok(())
    }
}

pub(crate) static BUILTIN_FORMATS: [(&str, &str); 4] = [
    ("pb4b8d", include_str!("../formats/pb4b8d.fmt")),
    ("pb5b8d", include_str!("../formats/pb5b8d.fmt")),
    ("pb6b8d", include_str!("../formats/pb6b8d.fmt")),
    ("pa7b8d", include_str!("../formats/pa7b8d.fmt")),
];

pub fn pack_bits(bits: &[u8]) -> Result<u8, BeqError> {
    if bits.len() > MAX_BITS {
        return Err(BeqError::LengthMismatch {
            expected: MAX_BITS,
            got: bits.len(),
        });
    }
    bits.iter()
        .enumerate()
        .try_fold(0u8, |acc, (i, &b)| match b {
            0 => Ok(acc),
            1 => Ok(acc | (1 << i)),
            _ => Err(BeqError::NotABit),
        })
}

pub fn unpack_bits(word: u8, len: usize) -> Vec<u8> {
    (0..len).map(|i| (word >> i) & 1).collect()
}

/// `b_1 b_2 ...` of a packed word as a string of `0`/`1`, `b_1` first.
pub fn bit_string(word: u8, len: usize) -> String {
    (0..len)
        .map(|i| char::from(b'0' + ((word >> i) & 1)))
        .collect()
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Int(usize),
    Bit(usize),
    Eq,
    Not,
    And,
    Xor,
    LParen,
    RParen,
}

fn tokenize(line: &str, lineno: usize) -> Result<Vec<(Tok, usize)>, BeqError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        match c {
            ' ' | '\t' | '\r' => i += 1,
            '=' | '!' | '&' | '^' | '(' | ')' => {
                out.push((
                    match c {
                        '=' => Tok::Eq,
                        '!' => Tok::Not,
                        '&' => Tok::And,
                        '^' => Tok::Xor,
                        '(' => Tok::LParen,
                        _ => Tok::RParen,
                    },
                    col,
                ));
                i += 1;
            }
            _ => {
                let start = i;
                while i < chars.len() && !" \t\r=!&^()".contains(chars[i]) {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                let tok = if let Ok(v) = word.parse::<usize>() {
                    Tok::Int(v)
                } else if let Some(v) = word
                    .strip_prefix('b')
                    .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
                {
                    Tok::Bit(v.parse().map_err(|_| BeqError::Syntax {
                        line: lineno,
                        col,
                        msg: format!("bit index `{word}` too large"),
                    })?)
                } else {
                    Tok::Word(word)
                };
                out.push((tok, col));
            }
        }
    }
    Ok(out)
}

struct ExprParser<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    line: usize,
    end_col: usize,
    n: usize,
    m: usize,
}

impl ExprParser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |(_, c)| *c)
    }

    fn err(&self, msg: impl Into<String>) -> BeqError {
        BeqError::Syntax {
            line: self.line,
            col: self.col(),
            msg: msg.into(),
        }
    }

    fn xor(&mut self) -> Result<BoolExpr, BeqError> {
        let mut lhs = self.and()?;
        while self.peek() == Some(&Tok::Xor) {
            self.pos += 1;
            lhs = BoolExpr::xor(lhs, self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<BoolExpr, BeqError> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            lhs = BoolExpr::and(lhs, self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<BoolExpr, BeqError> {
        let col = self.col();
        match self.peek().cloned() {
            Some(Tok::Not) => {
                self.pos += 1;
                Ok(BoolExpr::not(self.unary()?))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.xor()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(Tok::Int(v @ (0 | 1))) => {
                self.pos += 1;
                Ok(BoolExpr::Const(v == 1))
            }
            Some(Tok::Bit(b)) => {
                if b == 0 || b > self.n {
                    return Err(BeqError::UndefinedBit {
                        line: self.line,
                        col,
                        bit: b,
                    });
                }
                if b > self.m {
                    return Err(BeqError::ParityInExpression {
                        line: self.line,
                        col,
                        bit: b,
                    });
                }
                self.pos += 1;
                Ok(BoolExpr::Var(b))
            }
            Some(_) => Err(self.err("expected a bit, a constant, `!` or `(`")),
            None => Err(self.err("unexpected end of expression")),
        }
    }
}

fn header_int(toks: &[(Tok, usize)], key: &str, lineno: usize) -> Result<usize, BeqError> {
    match toks {
        [(Tok::Word(_), _), (Tok::Int(v), _)] => Ok(*v),
        _ => Err(BeqError::Header {
            line: lineno,
            msg: format!("expected `{key} <integer>`"),
        }),
    }
}

/// Parses a format-definition document.
pub fn parse_format(text: &str) -> Result<FormatSpec, BeqError> {
    let mut name: Option<String> = None;
    let mut n: Option<usize> = None;
    let mut m: Option<usize> = None;
    let mut provenance = Provenance::Reconstructed;
    let mut defs: Vec<(ParityDef, usize)> = Vec::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        last_line = lineno;
        let line = raw.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        let toks = tokenize(line, lineno)?;
        let Some((Tok::Word(key), _)) = toks.first() else {
            return Err(BeqError::Syntax {
                line: lineno,
                col: toks.first().map_or(1, |t| t.1),
                msg: "expected a keyword".into(),
            });
        };
        match key.as_str() {
            "format" => {
                if name.is_some() {
                    return Err(BeqError::Header {
                        line: lineno,
                        msg: "duplicate `format` line".into(),
                    });
                }
                let rest = line
                    .trim_start()
                    .strip_prefix("format")
                    .unwrap_or("")
                    .trim();
                if rest.is_empty() || rest.contains(char::is_whitespace) {
                    return Err(BeqError::Header {
                        line: lineno,
                        msg: "expected `format <NAME>`".into(),
                    });
                }
                name = Some(rest.to_string());
            }
            "bits" | "info" if name.is_none() => {
                return Err(BeqError::Header {
                    line: lineno,
                    msg: "`format` line must come first".into(),
                });
            }
            "bits" => {
                let v = header_int(&toks, "bits", lineno)?;
                if !(2..=MAX_BITS).contains(&v) || v % 2 != 0 {
                    return Err(BeqError::Header {
                        line: lineno,
                        msg: format!("bits must be an even number in 2..={MAX_BITS}, got {v}"),
                    });
                }
                n = Some(v);
            }
            "info" => {
                let v = header_int(&toks, "info", lineno)?;
                let nn = n.ok_or_else(|| BeqError::Header {
                    line: lineno,
                    msg: "`bits` must precede `info`".into(),
                })?;
                if v == 0 || v >= nn {
                    return Err(BeqError::Header {
                        line: lineno,
                        msg: format!("info must be in 1..{nn}, got {v}"),
                    });
                }
                m = Some(v);
            }
            "provenance" => {
                provenance = match toks.get(1) {
                    Some((Tok::Word(w), _)) if w == "verbatim" && toks.len() == 2 => {
                        Provenance::Verbatim
                    }
                    Some((Tok::Word(w), _)) if w == "reconstructed" && toks.len() == 2 => {
                        Provenance::Reconstructed
                    }
                    _ => {
                        return Err(BeqError::Header {
                            line: lineno,
                            msg: "expected `provenance verbatim|reconstructed`".into(),
                        })
                    }
                };
            }
            "parity" => {
                let (nn, mm) = match (n, m) {
                    (Some(nn), Some(mm)) => (nn, mm),
                    _ => {
                        return Err(BeqError::Header {
                            line: lineno,
                            msg: "header (`format`, `bits`, `info`) must precede parity lines"
                                .into(),
                        })
                    }
                };
                let (target, tcol) = match toks.get(1) {
                    Some((Tok::Bit(b), c)) => (*b, *c),
                    other => {
                        return Err(BeqError::Syntax {
                            line: lineno,
                            col: other.map_or(line.len() + 1, |t| t.1),
                            msg: "expected a parity bit such as `b7`".into(),
                        })
                    }
                };
                if target == 0 || target > nn {
                    return Err(BeqError::UndefinedBit {
                        line: lineno,
                        col: tcol,
                        bit: target,
                    });
                }
                if target <= mm {
                    return Err(BeqError::InfoTarget {
                        line: lineno,
                        bit: target,
                    });
                }
                if !matches!(toks.get(2), Some((Tok::Eq, _))) {
                    return Err(BeqError::Syntax {
                        line: lineno,
                        col: toks.get(2).map_or(line.len() + 1, |t| t.1),
                        msg: "expected `=`".into(),
                    });
                }
                let mut p = ExprParser {
                    toks: &toks[3..],
                    pos: 0,
                    line: lineno,
                    end_col: line.trim_end().chars().count() + 1,
                    n: nn,
                    m: mm,
                };
                let expr = p.xor()?;
                if p.pos != p.toks.len() {
                    return Err(p.err("unexpected token after expression"));
                }
                if defs.iter().any(|(d, _)| d.target == target) {
                    return Err(BeqError::DuplicateParity {
                        line: lineno,
                        bit: target,
                    });
                }
                defs.push((ParityDef { target, expr }, lineno));
            }
            other => {
                return Err(BeqError::Syntax {
                    line: lineno,
                    col: toks[0].1,
                    msg: format!("unknown keyword `{other}`"),
                })
            }
        }
    }

    let missing = |what: &str| BeqError::Header {
        line: last_line.max(1),
        msg: format!("missing `{what}` line"),
    };
    let name = name.ok_or_else(|| missing("format"))?;
    let n = n.ok_or_else(|| missing("bits"))?;
    let m = m.ok_or_else(|| missing("info"))?;
    let mut parity: Vec<ParityDef> = defs.into_iter().map(|(d, _)| d).collect();
    parity.sort_by_key(|d| d.target);
    for bit in m + 1..=n {
        if !parity.iter().any(|d| d.target == bit) {
            return Err(BeqError::MissingParity { bit });
        }
    }
    Ok(FormatSpec {
        name,
        n,
        m,
        parity,
        provenance,
    })
}
