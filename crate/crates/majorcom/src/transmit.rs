//! Steering weights, baseband tone dictionary and transmit-block synthesis.

use num_complex::Complex;

use crate::codeword::Codeword;
use crate::config::{SystemConfig, SPEED_OF_LIGHT};
use crate::{CMat, CVec, Error, Result};

/// Complex matrix of the antenna-by-sample transmit waveform, `L_R x L_T`.
/// Every entry has unit modulus: each antenna sends one weighted tone.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitBlock {
    pub samples: CMat,
}

/// Steering vector `w(theta, f)` for carrier-grid index `freq_index`:
/// entry `l` is `exp(j 2 pi f l d sin(theta) / c)`.
pub fn steering_vector(freq_index: usize, cfg: &SystemConfig) -> CVec {
    let f = cfg.carrier(freq_index);
    let phase_step = 2.0 * std::f64::consts::PI * f * cfg.d * cfg.theta.sin() / SPEED_OF_LIGHT;
    CVec::from_fn(cfg.l_r, |l, _| Complex::from_polar(1.0, phase_step * l as f64))
}

/// Sampled baseband tone for carrier-grid index `m`:
/// `psi_m[i] = exp(j 2 pi m delta_f T_s i)`, length `L_T`.
pub fn tone(m: usize, cfg: &SystemConfig) -> CVec {
    let step = 2.0 * std::f64::consts::PI * m as f64 * cfg.delta_f * cfg.sample_interval();
    CVec::from_fn(cfg.samples_per_pulse(), |i, _| {
        Complex::from_polar(1.0, step * i as f64)
    })
}

/// Tone dictionary `Psi = [psi_0 .. psi_{M-1}]`, `L_T x M`.
pub fn tone_matrix(cfg: &SystemConfig) -> CMat {
    let l_t = cfg.samples_per_pulse();
    let step = 2.0 * std::f64::consts::PI * cfg.delta_f * cfg.sample_interval();
    CMat::from_fn(l_t, cfg.m, |i, m| {
        Complex::from_polar(1.0, step * m as f64 * i as f64)
    })
}

/// Baseband transmit block `X = sum_k P_k w_k psi_{c_k}^T`.
///
/// Row `l` is `w_l(theta, f_k) * psi_{c_k}` where `k` is the group containing
/// antenna `l`. The block is modeled after down-conversion by the start
/// carrier, so only the grid offsets `c_k * delta_f` appear in the tones.
pub fn synthesize_transmit(cw: &Codeword, cfg: &SystemConfig) -> Result<TransmitBlock> {
    if cw.freq.indices().len() != cfg.k || cw.alloc.groups().len() != cfg.k {
        return Err(Error::DimensionMismatch(
            "codeword does not match configuration".into(),
        ));
    }
    let l_t = cfg.samples_per_pulse();
    let mut samples = CMat::zeros(cfg.l_r, l_t);
    for (k, &c) in cw.freq.indices().iter().enumerate() {
        let w = steering_vector(c, cfg);
        let psi = tone(c, cfg);
        for &l in cw.alloc.group(k) {
            for i in 0..l_t {
                samples[(l, i)] = w[l] * psi[i];
            }
        }
    }
    Ok(TransmitBlock { samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codeword::{enumerate_allocations, enumerate_frequency_sets, Codebook};
    use crate::config::SPEED_OF_LIGHT;
    use crate::Cplx;

    fn cfg(m: usize, k: usize, l_r: usize, l_k: usize, theta: f64) -> SystemConfig {
        SystemConfig {
            f_c: 1.9e9,
            delta_f: 1.0e7,
            m,
            k,
            l_r,
            l_k,
            l_c: 4,
            theta,
            d: 10.0 * SPEED_OF_LIGHT / 1.9e9,
            t_p: 1.0e-6,
            t_s: None,
        }
    }

    #[test]
    fn steering_at_broadside_is_all_ones() {
        let c = cfg(7, 2, 6, 3, 0.0);
        for m in 0..c.m {
            let w = steering_vector(m, &c);
            assert!(w.iter().all(|z| (z - Cplx::new(1.0, 0.0)).norm() < 1e-12));
        }
    }

    #[test]
    fn steering_first_entry_is_one_and_matches_formula() {
        let c = cfg(10, 2, 4, 2, std::f64::consts::FRAC_PI_4);
        let w = steering_vector(0, &c);
        assert!((w[0] - Cplx::new(1.0, 0.0)).norm() < 1e-15);
        // l = 1, f = f_c, d = 10 c / f_c: phase 2*pi*10*sqrt(2)/2
        let expected = Cplx::from_polar(
            1.0,
            2.0 * std::f64::consts::PI * 10.0 * (2.0f64).sqrt() / 2.0,
        );
        assert!((w[1] - expected).norm() < 1e-9);
    }

    #[test]
    fn dc_tone_broadside_block_is_all_ones() {
        let c = cfg(7, 1, 6, 6, 0.0);
        let fs = enumerate_frequency_sets(&c).unwrap();
        let al = enumerate_allocations(&c).unwrap();
        let cw = Codeword {
            freq: fs[0].clone(),
            alloc: al[0].clone(),
        };
        let x = synthesize_transmit(&cw, &c).unwrap();
        assert!(x
            .samples
            .iter()
            .all(|z| (z - Cplx::new(1.0, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn every_entry_has_unit_modulus() {
        let c = cfg(7, 2, 6, 3, 0.7);
        let cb = Codebook::full(&c).unwrap();
        for idx in [0usize, 17, 100, 255] {
            let cw = cb.used_codeword(idx);
            let x = synthesize_transmit(&cw, &c).unwrap();
            assert!(x.samples.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn distinct_tones_are_orthogonal_when_tp_df_integer() {
        let c = cfg(7, 2, 6, 3, 0.0);
        let l_t = c.samples_per_pulse() as f64;
        for m1 in 0..c.m {
            for m2 in 0..c.m {
                let inner: Cplx = tone(m1, &c).dotc(&tone(m2, &c));
                let expect = if m1 == m2 { l_t } else { 0.0 };
                assert!(
                    (inner - Cplx::new(expect, 0.0)).norm() < 1e-9,
                    "tones {m1},{m2}: {inner}"
                );
            }
        }
    }
}
