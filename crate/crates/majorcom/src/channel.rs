//! Channel matrix models, noise injection and received-block formation.

use std::io::{BufRead, Write};
use std::path::Path;

use num_complex::Complex;

use crate::config::SystemConfig;
use crate::rng::{complex_gaussian, complex_gaussian_matrix, stream};
use crate::transmit::TransmitBlock;
use crate::codeword::Codeword;
use crate::{CMat, Error, Result};

/// Which model produced a channel matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelModel {
    SpatialDecay,
    Rayleigh,
    Explicit,
}

/// Complex channel matrix `H`, `L_C x L_R`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub h: CMat,
    pub model: ChannelModel,
}

/// Receiver-by-sample channel output, `L_C x L_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedBlock {
    pub y: CMat,
}

/// Deterministic spatial exponential decay channel:
/// `[H]_{l1,l2} = exp(-1/4 (|l1-l2| + j (l1-l2) pi))`, 0-based indices.
pub fn make_spatial_decay_channel(cfg: &SystemConfig) -> ChannelMatrix {
    let h = CMat::from_fn(cfg.l_c, cfg.l_r, |l1, l2| {
        let diff = l1 as f64 - l2 as f64;
        Complex::from_polar(
            (-0.25 * diff.abs()).exp(),
            -0.25 * diff * std::f64::consts::PI,
        )
    });
    ChannelMatrix {
        h,
        model: ChannelModel::SpatialDecay,
    }
}

/// Rayleigh fading: i.i.d. zero-mean unit-variance proper complex Gaussian
/// entries, reproducible per seed.
pub fn make_rayleigh_channel(cfg: &SystemConfig, seed: u64) -> ChannelMatrix {
    let mut rng = stream(seed);
    ChannelMatrix {
        h: complex_gaussian_matrix(&mut rng, cfg.l_c, cfg.l_r, 1.0),
        model: ChannelModel::Rayleigh,
    }
}

/// Pass a transmit block through `H` and add white proper complex Gaussian
/// noise with per-entry total variance `sigma2` (`sigma2 = 0` is noiseless).
pub fn transmit_through(
    x: &TransmitBlock,
    h: &ChannelMatrix,
    sigma2: f64,
    seed: u64,
) -> Result<ReceivedBlock> {
    if h.h.ncols() != x.samples.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "channel is {}x{}, block has {} antennas",
            h.h.nrows(),
            h.h.ncols(),
            x.samples.nrows()
        )));
    }
    if sigma2 < 0.0 {
        return Err(Error::InvalidConfig("sigma2 must be >= 0".into()));
    }
    let mut y = &h.h * &x.samples;
    if sigma2 > 0.0 {
        add_noise(&mut y, sigma2, seed);
    }
    Ok(ReceivedBlock { y })
}

/// Frequency-selective variant: antenna group `k` of the codeword passes
/// through `channels[c_k]`, the matrix for its carrier-grid index. With all
/// matrices equal this reduces exactly to [`transmit_through`].
pub fn transmit_through_per_freq(
    x: &TransmitBlock,
    cw: &Codeword,
    channels: &[ChannelMatrix],
    cfg: &SystemConfig,
    sigma2: f64,
    seed: u64,
) -> Result<ReceivedBlock> {
    if channels.len() != cfg.m {
        return Err(Error::DimensionMismatch(format!(
            "need one channel matrix per carrier ({} != {})",
            channels.len(),
            cfg.m
        )));
    }
    let l_t = x.samples.ncols();
    let mut y = CMat::zeros(cfg.l_c, l_t);
    for (k, &c) in cw.freq.indices().iter().enumerate() {
        let h = &channels[c].h;
        if h.nrows() != cfg.l_c || h.ncols() != cfg.l_r {
            return Err(Error::DimensionMismatch("per-frequency channel size".into()));
        }
        for &l in cw.alloc.group(k) {
            let col = h.column(l);
            for i in 0..l_t {
                let s = x.samples[(l, i)];
                for r in 0..cfg.l_c {
                    y[(r, i)] += col[r] * s;
                }
            }
        }
    }
    if sigma2 > 0.0 {
        add_noise(&mut y, sigma2, seed);
    }
    Ok(ReceivedBlock { y })
}

fn add_noise(y: &mut CMat, sigma2: f64, seed: u64) {
    let mut rng = stream(seed);
    for r in 0..y.nrows() {
        for c in 0..y.ncols() {
            y[(r, c)] += complex_gaussian(&mut rng, sigma2);
        }
    }
}

/// Noise variance for an SNR in dB under the convention `SNR = 1/sigma^2`.
pub fn sigma2_from_snr_db(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Write a channel matrix as CSV: one line per receive antenna, with the
/// transmit antennas flattened as `re0,im0,re1,im1,...`.
pub fn save_channel_csv<W: Write>(h: &ChannelMatrix, mut w: W) -> Result<()> {
    for r in 0..h.h.nrows() {
        let fields: Vec<String> = (0..h.h.ncols())
            .flat_map(|c| {
                let z = h.h[(r, c)];
                [format!("{:.17e}", z.re), format!("{:.17e}", z.im)]
            })
            .collect();
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}

/// Load a channel matrix saved by [`save_channel_csv`]; dimensions are
/// validated against the configuration.
pub fn load_channel_csv<R: BufRead>(cfg: &SystemConfig, r: R) -> Result<ChannelMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|t| {
                t.trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad channel entry '{t}'")))
            })
            .collect::<Result<_>>()?;
        rows.push(vals);
    }
    if rows.len() != cfg.l_c || rows.iter().any(|row| row.len() != 2 * cfg.l_r) {
        return Err(Error::DimensionMismatch(format!(
            "channel CSV must be {} rows of {} re,im pairs",
            cfg.l_c, cfg.l_r
        )));
    }
    let h = CMat::from_fn(cfg.l_c, cfg.l_r, |r, c| {
        Complex::new(rows[r][2 * c], rows[r][2 * c + 1])
    });
    Ok(ChannelMatrix {
        h,
        model: ChannelModel::Explicit,
    })
}

pub fn load_channel_csv_from(cfg: &SystemConfig, path: &Path) -> Result<ChannelMatrix> {
    let f = std::fs::File::open(path)?;
    load_channel_csv(cfg, std::io::BufReader::new(f))
}
