use serde::Deserialize;

use crate::{Error, Result};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Physical and dimensional parameters of the transmitter and receiver.
///
/// The carrier grid is `f_c + m * delta_f` for `m in 0..M`. Each pulse uses
/// `K` carriers, each served by `L_K = L_R / K` antennas.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SystemConfig {
    /// Carrier start frequency in Hz.
    pub f_c: f64,
    /// Frequency step in Hz.
    pub delta_f: f64,
    /// Number of available carriers.
    pub m: usize,
    /// Carriers selected per pulse.
    pub k: usize,
    /// Transmit antenna count.
    pub l_r: usize,
    /// Antennas per selected carrier (`l_r / k`).
    pub l_k: usize,
    /// Receive antenna count.
    pub l_c: usize,
    /// Beam steering angle in radians.
    pub theta: f64,
    /// Antenna spacing in meters.
    pub d: f64,
    /// Pulse duration in seconds.
    pub t_p: f64,
    /// Sampling interval in seconds. When absent, Nyquist sampling of the
    /// full band is assumed: `t_s = 1 / (m * delta_f)`.
    #[serde(default)]
    pub t_s: Option<f64>,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m < self.k || self.k < 1 {
            return Err(Error::InvalidConfig(format!(
                "need m >= k >= 1, got m={}, k={}",
                self.m, self.k
            )));
        }
        if self.l_r != self.k * self.l_k || self.l_k < 1 {
            return Err(Error::InvalidConfig(format!(
                "need l_r = k * l_k, got l_r={}, k={}, l_k={}",
                self.l_r, self.k, self.l_k
            )));
        }
        if self.l_c < 1 {
            return Err(Error::InvalidConfig("l_c must be >= 1".into()));
        }
        if !(self.delta_f > 0.0) || !(self.f_c > 0.0) {
            return Err(Error::InvalidConfig("f_c and delta_f must be positive".into()));
        }
        if !(self.t_p > 0.0) || !(self.sample_interval() > 0.0) {
            return Err(Error::InvalidConfig("t_p and t_s must be positive".into()));
        }
        if self.samples_per_pulse() < 1 {
            return Err(Error::InvalidConfig("l_t must be >= 1".into()));
        }
        if self.l_r > 63 {
            return Err(Error::InvalidConfig("l_r must fit in a 64-bit group mask".into()));
        }
        Ok(())
    }

    /// Sampling interval, defaulting to full-band Nyquist `1/(M df)`.
    pub fn sample_interval(&self) -> f64 {
        self.t_s
            .unwrap_or(1.0 / (self.m as f64 * self.delta_f))
    }

    /// Samples per pulse, `L_T = floor(T_p/T_s) + 1`.
    ///
    /// When `T_p/T_s` is an integer `n` (to 1e-9 relative) the sampling
    /// window is treated as half-open and `L_T = n`, which keeps the tone
    /// dictionary an exact FFT submatrix when `T_p * delta_f` is an integer.
    pub fn samples_per_pulse(&self) -> usize {
        let ratio = self.t_p / self.sample_interval();
        let nearest = ratio.round();
        if nearest >= 1.0 && (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
            nearest as usize
        } else {
            ratio.floor() as usize + 1
        }
    }

    /// Carrier frequency for grid index `m`.
    pub fn carrier(&self, index: usize) -> f64 {
        self.f_c + index as f64 * self.delta_f
    }

    /// True when `T_p * delta_f` is an integer, making distinct tones
    /// exactly orthogonal over the sampled pulse.
    pub fn tones_orthogonal(&self) -> bool {
        let prod = self.t_p * self.delta_f;
        (prod - prod.round()).abs() <= 1e-9 * prod.max(1.0)
            && self.samples_per_pulse() % self.m == 0
    }
}
