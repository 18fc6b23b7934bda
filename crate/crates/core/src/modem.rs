//! Bit-to-symbol mapping onto four Gray-labeled QPSK slots.
//!
//! Dimension `i` of a frame carries bit `b_i`; slots are `(b1,b2)`, `(b3,b4)`,
//! `(b5,b6)`, `(b7,b8)` as (I, Q) pairs. Bit 0 maps to `+a`, bit 1 to `-a`,
//! with `a = 1/sqrt(2)` so every QPSK slot has unit energy.

use std::f64::consts::FRAC_1_SQRT_2;

use thiserror::Error;

use crate::beq::{pack_bits, BeqError, FormatSpec, MAX_BITS};

/// Per-dimension amplitude.
pub const AMPLITUDE: f64 = FRAC_1_SQRT_2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModemError {
    #[error("need at least two codebook entries, got {0}")]
    TooFewEntries(usize),
    #[error(transparent)]
    Format(#[from] BeqError),
}

/// Transmitted amplitudes of one multi-dimensional symbol.
///
/// Dimensions beyond the format's `n` are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolFrame(pub [f64; MAX_BITS]);

impl SymbolFrame {
    /// Maps a packed codeword of `n` bits.
    pub fn from_codeword(codeword: u8, n: usize) -> Self {
        let mut amp = [0.0; MAX_BITS];
        for (i, a) in amp.iter_mut().enumerate().take(n) {
            *a = bit_amplitude((codeword >> i) & 1);
        }
        SymbolFrame(amp)
    }

    pub fn energy(&self) -> f64 {
        self.0.iter().map(|a| a * a).sum()
    }

    pub fn squared_distance(&self, other: &SymbolFrame) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

#[inline]
fn bit_amplitude(bit: u8) -> f64 {
    if bit == 0 {
        AMPLITUDE
    } else {
        -AMPLITUDE
    }
}

/// Gray-labeled QPSK point for the bit pair `(b_i, b_q)`.
pub fn gray_map_qpsk(b_i: u8, b_q: u8) -> (f64, f64) {
    (bit_amplitude(b_i & 1), bit_amplitude(b_q & 1))
}

/// Maps the information bits of one symbol through the format's parity
/// equations onto the QPSK slots.
pub fn map_8d(spec: &FormatSpec, info_bits: &[u8]) -> Result<SymbolFrame, ModemError> {
    if info_bits.len() != spec.m {
        return Err(BeqError::LengthMismatch {
            expected: spec.m,
            got: info_bits.len(),
        }
        .into());
    }
    let cw = spec.encode(pack_bits(info_bits)?);
    Ok(SymbolFrame::from_codeword(cw, spec.n))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodebookEntry {
    /// Packed information word.
    pub info: u8,
    /// Packed full codeword.
    pub codeword: u8,
    pub symbol: SymbolFrame,
}

/// Every symbol of a format, in lexicographic order of the information word
/// (`b_1` most significant).
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub entries: Vec<CodebookEntry>,
}

/// Enumerates all `2^m` information words of `spec`.
pub fn build_codebook(spec: &FormatSpec) -> Codebook {
    let size = 1usize << spec.m;
    let entries = (0..size)
        .map(|rank| {
            // lexicographic order: b1 is the leading bit of the rank
            let info = (0..spec.m).fold(0u8, |acc, i| {
                acc | ((((rank >> (spec.m - 1 - i)) & 1) as u8) << i)
            });
            let codeword = spec.encode(info);
            CodebookEntry {
                info,
                codeword,
                symbol: SymbolFrame::from_codeword(codeword, spec.n),
            }
        })
        .collect();
    Codebook {
        name: spec.name.clone(),
        n: spec.n,
        m: spec.m,
        entries,
    }
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Minimum squared Euclidean distance over all pairs of entries.
pub fn min_squared_distance(codebook: &Codebook) -> Result<f64, ModemError> {
    let e = &codebook.entries;
    if e.len() < 2 {
        return Err(ModemError::TooFewEntries(e.len()));
    }
    let mut best = f64::INFINITY;
    for (i, a) in e.iter().enumerate() {
        for b in &e[i + 1..] {
            best = best.min(a.symbol.squared_distance(&b.symbol));
        }
    }
    Ok(best)
}

/// Number of unordered codeword pairs at each squared distance, ascending.
///
/// Distances on this constellation are multiples of `2 a^2 = 1`, so they
/// are grouped after rounding to 1e-9.
pub fn distance_spectrum(codebook: &Codebook) -> Vec<(f64, usize)> {
    let mut counts: std::collections::BTreeMap<i64, usize> = Default::default();
    let e = &codebook.entries;
    for (i, a) in e.iter().enumerate() {
        for b in &e[i + 1..] {
            let d = a.symbol.squared_distance(&b.symbol);
            *counts.entry((d * 1e9).round() as i64).or_default() += 1;
        }
    }
    counts
        .into_iter()
        .map(|(k, c)| (k as f64 * 1e-9, c))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beq::parse_format;

    const A: f64 = FRAC_1_SQRT_2;

    fn toy() -> FormatSpec {
        parse_format("format toy\nbits 2\ninfo 1\nparity b2 = b1\n").unwrap()
    }

    #[test]
    fn qpsk_gray_points() {
        assert_eq!(gray_map_qpsk(0, 0), (A, A));
        assert_eq!(gray_map_qpsk(1, 0), (-A, A));
        assert_eq!(gray_map_qpsk(1, 1), (-A, -A));
        assert_eq!(gray_map_qpsk(0, 1), (A, -A));
    }

    #[test]
    fn gray_neighbors_differ_in_one_bit() {
        let labels = [(0u8, 0u8), (0, 1), (1, 0), (1, 1)];
        for &(i0, q0) in &labels {
            let p = gray_map_qpsk(i0, q0);
            let mut dists: Vec<(f64, u32)> = labels
                .iter()
                .filter(|&&l| l != (i0, q0))
                .map(|&(i1, q1)| {
                    let r = gray_map_qpsk(i1, q1);
                    let d = (p.0 - r.0).powi(2) + (p.1 - r.1).powi(2);
                    (d, ((i0 ^ i1) + (q0 ^ q1)) as u32)
                })
                .collect();
            dists.sort_by(|a, b| a.0.total_cmp(&b.0));
            assert_eq!(dists[0].1, 1);
            assert_eq!(dists[1].1, 1);
        }
    }

    #[test]
    fn map_examples() {
        let pb6 = FormatSpec::builtin("PB-6B8D").unwrap();
        let f = map_8d(&pb6, &[0; 6]).unwrap();
        assert_eq!(f.0, [A, A, A, A, A, A, -A, -A]);
        let f = map_8d(&pb6, &[1, 0, 0, 0, 0, 0]).unwrap();
        assert_eq!(f.0, [-A, A, A, A, A, A, -A, A]);
        let f = map_8d(&toy(), &[0]).unwrap();
        assert_eq!(&f.0[..2], &[A, A]);
        assert!(map_8d(&pb6, &[0; 7]).is_err());
    }

    #[test]
    fn codebook_sizes() {
        assert_eq!(
            build_codebook(&FormatSpec::builtin("PB-6B8D").unwrap()).len(),
            64
        );
        assert_eq!(
            build_codebook(&FormatSpec::builtin("PA-7B8D").unwrap()).len(),
            128
        );
        let toy = build_codebook(&toy());
        assert_eq!(toy.len(), 2);
        assert_eq!(toy.entries[1].codeword, 0b11);
    }

    #[test]
    fn lexicographic_order() {
        let cb = build_codebook(&FormatSpec::builtin("PB-4B8D").unwrap());
        // rank 1 = (0,0,0,1): b4 set
        assert_eq!(cb.entries[1].info, 0b1000);
        // rank 8 = (1,0,0,0): b1 set
        assert_eq!(cb.entries[8].info, 0b0001);
    }

    #[test]
    fn distance_examples() {
        // every 8-bit labeling: plain product of four QPSK slots
        let entries = (0u16..256)
            .map(|w| CodebookEntry {
                info: w as u8,
                codeword: w as u8,
                symbol: SymbolFrame::from_codeword(w as u8, 8),
            })
            .collect();
        let uncoded = Codebook {
            name: "4xQPSK".into(),
            n: 8,
            m: 8,
            entries,
        };
        assert!((min_squared_distance(&uncoded).unwrap() - 2.0).abs() < 1e-12);

        // pinned by an exhaustive pairwise oracle over the 64 printed-equation codewords
        let pb6 = build_codebook(&FormatSpec::builtin("PB-6B8D").unwrap());
        assert!((min_squared_distance(&pb6).unwrap() - 4.0).abs() < 1e-12);
        let spectrum = distance_spectrum(&pb6);
        assert_eq!(spectrum.iter().map(|s| s.1).sum::<usize>(), 64 * 63 / 2);
        assert!((spectrum[0].0 - 4.0).abs() < 1e-9);

        let e = pb6.entries[0];
        let dup = Codebook {
            entries: vec![e, e],
            ..pb6.clone()
        };
        assert_eq!(min_squared_distance(&dup).unwrap(), 0.0);
        let single = Codebook {
            entries: vec![e],
            ..pb6
        };
        assert_eq!(
            min_squared_distance(&single),
            Err(ModemError::TooFewEntries(1))
        );
    }
}
