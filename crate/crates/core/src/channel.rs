//! AWGN channel and observation scaling.
//!
//! SNR is Es/N0 per QPSK slot with Es = 1, so the per-dimension noise
//! standard deviation is `sigma = sqrt(10^(-snr_db/10) / 2)`.
//!
//! Noise for frame `f` of a run seeded with `s` comes from a ChaCha8 stream
//! keyed by `s` and selected by `f`, so a frame's samples never depend on
//! which worker draws them or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::beq::MAX_BITS;
use crate::demap::ObservationFrame;
use crate::modem::{SymbolFrame, AMPLITUDE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("noise standard deviation must be positive, got {0}")]
    NonPositiveSigma(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub snr_db: f64,
    pub sigma: f64,
    pub master_seed: u64,
}

impl ChannelParams {
    pub fn new(snr_db: f64, master_seed: u64) -> Self {
        ChannelParams {
            snr_db,
            sigma: snr_to_sigma(snr_db),
            master_seed,
        }
    }
}

pub fn snr_to_sigma(snr_db: f64) -> f64 {
    (10f64.powf(-snr_db / 10.0) / 2.0).sqrt()
}

/// Independent random stream for one frame.
pub fn frame_rng(master_seed: u64, frame: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(frame);
    rng
}

/// Adds i.i.d. Gaussian noise to the first `dims` dimensions.
pub fn add_awgn<R: rand::Rng + ?Sized>(
    frame: &SymbolFrame,
    dims: usize,
    sigma: f64,
    rng: &mut R,
) -> [f64; MAX_BITS] {
    let mut y = frame.0;
    for v in y.iter_mut().take(dims) {
        let z: f64 = StandardNormal.sample(rng);
        *v += sigma * z;
    }
    y
}

/// Scales received samples to per-dimension LLRs, `2 a y / sigma^2`.
pub fn observations(y: &[f64; MAX_BITS], sigma: f64) -> Result<ObservationFrame, ChannelError> {
    if sigma <= 0.0 || sigma.is_nan() {
        return Err(ChannelError::NonPositiveSigma(sigma));
    }
    let scale = 2.0 * AMPLITUDE / (sigma * sigma);
    Ok(ObservationFrame(y.map(|v| v * scale)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_convention() {
        assert!((snr_to_sigma(0.0) - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((snr_to_sigma(10.0) - 0.05f64.sqrt()).abs() < 1e-15);
        assert!((snr_to_sigma(-10.0) - 5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn noiseless_identity() {
        let s = SymbolFrame::from_codeword(0b1010_0110, 8);
        let y = add_awgn(&s, 8, 0.0, &mut frame_rng(3, 0));
        assert_eq!(y, s.0);
    }

    #[test]
    fn frame_streams_are_reproducible() {
        let s = SymbolFrame::from_codeword(0, 8);
        let a = add_awgn(&s, 8, 0.7, &mut frame_rng(42, 17));
        let b = add_awgn(&s, 8, 0.7, &mut frame_rng(42, 17));
        let c = add_awgn(&s, 8, 0.7, &mut frame_rng(42, 18));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn unused_dimensions_stay_silent() {
        let s = SymbolFrame::from_codeword(0, 2);
        let y = add_awgn(&s, 2, 1.0, &mut frame_rng(1, 1));
        assert!(y[2..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn noise_moments() {
        let s = SymbolFrame::from_codeword(0, 8);
        let draws = 1_000_000u64 / 8;
        let mut sum = [0.0f64; 8];
        let mut sq = [0.0f64; 8];
        for f in 0..draws {
            let y = add_awgn(&s, 8, 1.0, &mut frame_rng(9, f));
            for i in 0..8 {
                let n = y[i] - s.0[i];
                sum[i] += n;
                sq[i] += n * n;
            }
        }
        let total: f64 = sum.iter().sum::<f64>() / (8 * draws) as f64;
        let var: f64 = sq.iter().sum::<f64>() / (8 * draws) as f64 - total * total;
        assert!(total.abs() < 0.01, "mean {total}");
        assert!((var - 1.0).abs() < 0.02, "variance {var}");
        for (i, s) in sq.iter().enumerate() {
            let v = s / draws as f64;
            assert!((v - 1.0).abs() < 0.02, "dim {i} variance {v}");
        }
    }

    #[test]
    fn observation_scaling() {
        let mut y = [0.0; MAX_BITS];
        y[0] = AMPLITUDE;
        let obs = observations(&y, 1.0).unwrap();
        assert!((obs.0[0] - 1.0).abs() < 1e-15);
        assert_eq!(obs.0[1], 0.0);
        assert!(observations(&y, 0.0).is_err());
        assert!(observations(&y, -1.0).is_err());
    }

    #[test]
    fn observation_signs_follow_bits() {
        let s = SymbolFrame::from_codeword(0b0000_0010, 2);
        let obs = observations(&s.0, 0.01).unwrap();
        assert!(obs.0[0] > 0.0);
        assert!(obs.0[1] < 0.0);
    }
}
