//! Achievable-rate bounds for the index-modulation constellation.
//!
//! With a single sample per pulse the channel output is `y = Hx + n` where
//! `x` ranges over the finite constellation, so `y` follows an equal-prior
//! Gaussian mixture. The lower bound evaluates the mixture entropy exactly
//! (deterministic double sum over codeword pairs); the upper bound is the
//! log-cardinality of the constellation.

use crate::channel::{make_rayleigh_channel, make_spatial_decay_channel, ChannelMatrix};
use crate::codeword::{Codebook, Codeword};
use crate::config::SystemConfig;
use crate::rng::derive_seed;
use crate::transmit::steering_vector;
use crate::{CVec, Error, Result};

/// Default cap on the constellation size for the `O(|X|^2)` bound.
pub const DEFAULT_SIZE_CAP: usize = 4096;

/// Lower/upper rate bounds at one SNR point, in bits per channel use.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePoint {
    pub snr_db: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
}

/// Channel ensemble for a rate curve.
#[derive(Debug, Clone)]
pub enum RateChannel {
    SpatialDecay,
    Fixed(ChannelMatrix),
    /// Average the lower bound over seeded i.i.d. Rayleigh draws.
    Rayleigh { draws: usize, seed: u64 },
}

/// Single-sample transmit vector `x = sum_k P_k w_k`: entry `l` carries the
/// steering weight of the carrier served by antenna `l`.
pub fn transmit_vector(cw: &Codeword, cfg: &SystemConfig) -> CVec {
    let mut x = CVec::zeros(cfg.l_r);
    for (k, &c) in cw.freq.indices().iter().enumerate() {
        let w = steering_vector(c, cfg);
        for &l in cw.alloc.group(k) {
            x[l] = w[l];
        }
    }
    x
}

/// Noise-free receive signatures `H x_i` for every enumerated codeword.
pub fn signatures(h: &ChannelMatrix, cb: &Codebook) -> Vec<CVec> {
    cb.iter_all()
        .map(|cw| &h.h * transmit_vector(&cw, cb.config()))
        .collect()
}

/// `log2 f(u)` for the equal-prior Gaussian mixture with the given component
/// means and per-entry total variance `sigma2`, evaluated with a max-shifted
/// log-sum-exp so high-SNR exponents neither overflow nor vanish.
pub fn gm_log_density(u: &CVec, signatures: &[CVec], sigma2: f64) -> Result<f64> {
    if signatures.is_empty() {
        return Err(Error::InvalidConfig("signature list is empty".into()));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::DegenerateDensity);
    }
    let l_c = u.len() as f64;
    let exponents: Vec<f64> = signatures
        .iter()
        .map(|s| -(u - s).norm_squared() / sigma2)
        .collect();
    let max = exponents.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = exponents.iter().map(|e| (e - max).exp()).sum();
    let ln_mix = max + sum.ln() - (signatures.len() as f64).ln();
    Ok((ln_mix - l_c * (std::f64::consts::PI * sigma2).ln()) / std::f64::consts::LN_2)
}

/// Rate lower bound in bits per channel use, exact double sum over all
/// codeword pairs (cost `O(|X|^2 L_C)`, capped at `cap`).
///
/// The bound is the mixture cross-entropy term minus the noise-entropy
/// constant `L_C log2(pi sigma2)`; with this normalization it is exactly 0
/// for a one-codeword constellation, stays nonnegative, and approaches
/// `log2 |X|` at high SNR.
pub fn rate_lower_bound_capped(
    h: &ChannelMatrix,
    cb: &Codebook,
    sigma2: f64,
    cap: usize,
) -> Result<f64> {
    let n = cb.all_len();
    if n > cap {
        return Err(Error::CodebookTooLarge { size: n, cap });
    }
    if !(sigma2 > 0.0) {
        return Err(Error::DegenerateDensity);
    }
    let sigs = signatures(h, cb);
    let l_c = h.h.nrows() as f64;
    let mut acc = 0.0;
    for s in &sigs {
        acc += gm_log_density(s, &sigs, sigma2)?;
    }
    Ok(-acc / n as f64 - l_c * (std::f64::consts::PI * sigma2).log2())
}

pub fn rate_lower_bound(h: &ChannelMatrix, cb: &Codebook, sigma2: f64) -> Result<f64> {
    rate_lower_bound_capped(h, cb, sigma2, DEFAULT_SIZE_CAP)
}

/// `log2 |X|` over the full enumerated constellation.
pub fn rate_upper_bound(cb: &Codebook) -> f64 {
    (cb.all_len() as f64).log2()
}

/// Lower/upper bounds across an SNR grid (`SNR = 1/sigma2`). For the
/// Rayleigh ensemble the lower bound is the mean over seeded channel draws.
pub fn rate_curve(chan: &RateChannel, cb: &Codebook, snr_db: &[f64]) -> Result<Vec<RatePoint>> {
    let cfg = cb.config();
    let upper = rate_upper_bound(cb);
    let mut points = Vec::with_capacity(snr_db.len());
    for &snr in snr_db {
        let sigma2 = 10f64.powf(-snr / 10.0);
        let lower = match chan {
            RateChannel::SpatialDecay => {
                rate_lower_bound(&make_spatial_decay_channel(cfg), cb, sigma2)?
            }
            RateChannel::Fixed(h) => rate_lower_bound(h, cb, sigma2)?,
            RateChannel::Rayleigh { draws, seed } => {
                if *draws == 0 {
                    return Err(Error::InvalidConfig("rayleigh draw count must be >= 1".into()));
                }
                let mut acc = 0.0;
                for draw in 0..*draws {
                    let h = make_rayleigh_channel(cfg, derive_seed(*seed, &[draw as u64]));
                    acc += rate_lower_bound(&h, cb, sigma2)?;
                }
                acc / *draws as f64
            }
        };
        points.push(RatePoint {
            snr_db: snr,
            lower_bound: lower,
            upper_bound: upper,
        });
    }
    Ok(points)
}

/// Gaussian-signaling capacity of the first `n` channel columns with total
/// transmit power `n` (unit average per antenna): waterfilling over the
/// squared singular values, `C = sum log2(1 + p_i s_i^2 / sigma2)`.
pub fn dedicated_capacity(h: &ChannelMatrix, n: usize, sigma2: f64) -> Result<f64> {
    if n < 1 || n > h.h.ncols() {
        return Err(Error::InvalidConfig(format!(
            "baseline antenna count {n} outside 1..={}",
            h.h.ncols()
        )));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::DegenerateDensity);
    }
    let sub = h.h.columns(0, n).into_owned();
    let mut gains: Vec<f64> = sub
        .singular_values()
        .iter()
        .map(|s| s * s / sigma2)
        .filter(|g| *g > 0.0)
        .collect();
    gains.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let power = n as f64;
    // Waterfill: largest active set whose water level keeps all powers >= 0.
    let mut active = gains.len();
    let mut level = 0.0;
    while active > 0 {
        let inv_sum: f64 = gains[..active].iter().map(|g| 1.0 / g).sum();
        level = (power + inv_sum) / active as f64;
        if level - 1.0 / gains[active - 1] >= 0.0 {
            break;
        }
        active -= 1;
    }
    Ok(gains[..active].iter().map(|g| (level * g).log2()).sum())
}
