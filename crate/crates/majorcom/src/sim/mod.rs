//! Experiment orchestration: TOML experiment specs, Monte-Carlo BER runs,
//! rate sweeps, the reduced-codebook study and CSV emission.
//!
//! Every run is deterministic given the spec and seed: per-trial generators
//! are derived as `derive_seed(seed, labels)` and results are reduced by
//! integer summation, so the rayon scheduling order cannot change output.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::Deserialize;

use crate::channel::{
    load_channel_csv_from, make_rayleigh_channel, make_spatial_decay_channel, sigma2_from_snr_db,
    transmit_through, ChannelMatrix,
};
use crate::codebook::{
    allocation_distance, design_codebook, distance_matrix, h_distance, reduce_dimensions,
};
use crate::codeword::{enumerate_allocations, Codebook, Codeword};
use crate::config::SystemConfig;
use crate::decode::{
    decode_iter, decode_noniter, ml_decode, spatial_ml, DecodeOptions, FrequencyInit,
    RefineMethod, SpatialMethod, ToneContext,
};
use crate::rate::{dedicated_capacity, rate_lower_bound, rate_upper_bound};
use crate::rng::{derive_seed, stream};
use crate::transmit::synthesize_transmit;
use crate::{Error, Result};

// derive_seed label prefixes, fixed so outputs are stable across releases
const LBL_CHANNEL: u64 = 1;
const LBL_NOISE: u64 = 2;
const LBL_BITS: u64 = 3;
const LBL_RATE_DRAW: u64 = 4;
const LBL_SCATTER: u64 = 5;
const LBL_DESIGN: u64 = 10;

/// Channel ensemble named in an experiment spec.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelKind {
    SpatialDecay,
    #[default]
    Rayleigh,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Redraw {
    #[default]
    PerTrial,
    Fixed,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    #[serde(default)]
    pub model: ChannelKind,
    #[serde(default)]
    pub redraw: Redraw,
    /// Channel CSV for `model = "file"` (always treated as fixed).
    #[serde(default)]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BerSpec {
    pub snr_db: Vec<f64>,
    pub trials: u64,
    pub decoders: Vec<String>,
    #[serde(default = "default_i_max")]
    pub i_max: usize,
    /// Restrict the allocation set to a designed codebook loaded from file.
    #[serde(default)]
    pub codebook_file: Option<PathBuf>,
    /// Or design one of this size in place (seeded from the run seed).
    #[serde(default)]
    pub n_b: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSpec {
    pub snr_db: Vec<f64>,
    #[serde(default = "default_rate_draws")]
    pub rayleigh_draws: usize,
    /// Dedicated-antenna baseline sizes (columns of H used for the
    /// Gaussian-capacity reference curves).
    #[serde(default = "default_baselines")]
    pub baselines: Vec<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySpec {
    pub snr_db: Vec<f64>,
    pub trials: u64,
    pub n_b: Vec<usize>,
    #[serde(default = "default_study_decoders")]
    pub decoders: Vec<String>,
    #[serde(default = "default_i_max")]
    pub i_max: usize,
    /// When set, the receiver knows the carriers and only the allocation is
    /// decoded (pure spatial ML over the designed set).
    #[serde(default)]
    pub freq_known: bool,
}

fn default_i_max() -> usize {
    10
}

fn default_rate_draws() -> usize {
    100
}

fn default_baselines() -> Vec<usize> {
    vec![1, 2]
}

fn default_study_decoders() -> Vec<String> {
    vec!["noniter-ml".into()]
}

/// One experiment file: the physical configuration plus whichever run
/// sections (`[ber]`, `[rate]`, `[study]`) the experiment uses.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub system: SystemConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub channel: ChannelSpec,
    #[serde(default)]
    pub ber: Option<BerSpec>,
    #[serde(default)]
    pub rate: Option<RateSpec>,
    #[serde(default)]
    pub study: Option<StudySpec>,
}

impl ExperimentSpec {
    pub fn from_str(text: &str) -> Result<Self> {
        let spec: ExperimentSpec =
            toml::from_str(text).map_err(|e| Error::Parse(format!("experiment spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        if self.channel.model == ChannelKind::File && self.channel.path.is_none() {
            return Err(Error::InvalidConfig(
                "channel.model = \"file\" requires channel.path".into(),
            ));
        }
        if let Some(ber) = &self.ber {
            if ber.snr_db.is_empty() || ber.trials < 1 || ber.decoders.is_empty() {
                return Err(Error::InvalidConfig(
                    "[ber] needs a nonempty SNR grid, trials >= 1 and decoders".into(),
                ));
            }
            for d in &ber.decoders {
                DecoderKind::parse(d)?;
            }
        }
        if let Some(rate) = &self.rate {
            if rate.snr_db.is_empty() || rate.rayleigh_draws < 1 {
                return Err(Error::InvalidConfig(
                    "[rate] needs a nonempty SNR grid and draws >= 1".into(),
                ));
            }
        }
        if let Some(study) = &self.study {
            if study.snr_db.is_empty() || study.trials < 1 || study.n_b.is_empty() {
                return Err(Error::InvalidConfig(
                    "[study] needs SNR grid, trials >= 1 and n_b values".into(),
                ));
            }
            for d in &study.decoders {
                DecoderKind::parse(d)?;
            }
        }
        Ok(())
    }
}

/// Decoder registry used by experiment specs and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoderKind {
    Ml,
    NonIterMl,
    NonIterGreedy,
    IterMl,
    IterGreedy,
}

impl DecoderKind {
    pub const ALL: [DecoderKind; 5] = [
        DecoderKind::Ml,
        DecoderKind::NonIterMl,
        DecoderKind::NonIterGreedy,
        DecoderKind::IterMl,
        DecoderKind::IterGreedy,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            DecoderKind::Ml => "ml",
            DecoderKind::NonIterMl => "noniter-ml",
            DecoderKind::NonIterGreedy => "noniter-greedy",
            DecoderKind::IterMl => "iter-ml",
            DecoderKind::IterGreedy => "iter-greedy",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .find(|d| d.name() == name)
            .copied()
            .ok_or_else(|| Error::Parse(format!("unknown decoder '{name}'")))
    }

    fn options(&self) -> DecodeOptions {
        let greedy = matches!(self, DecoderKind::NonIterGreedy | DecoderKind::IterGreedy);
        DecodeOptions {
            freq_init: FrequencyInit::Projection,
            spatial: if greedy {
                SpatialMethod::Greedy
            } else {
                SpatialMethod::Ml
            },
            freq_refine: if greedy {
                RefineMethod::Greedy
            } else {
                RefineMethod::Ml
            },
        }
    }

    pub fn run(
        &self,
        y: &crate::channel::ReceivedBlock,
        h: &ChannelMatrix,
        cb: &Codebook,
        ctx: &ToneContext,
        i_max: usize,
    ) -> Result<Codeword> {
        let cw = match self {
            DecoderKind::Ml => ml_decode(y, h, cb, ctx)?.codeword,
            DecoderKind::NonIterMl | DecoderKind::NonIterGreedy => {
                decode_noniter(y, h, cb, ctx, &self.options())?.codeword
            }
            DecoderKind::IterMl | DecoderKind::IterGreedy => {
                decode_iter(y, h, cb, ctx, &self.options(), i_max)?.codeword
            }
        };
        Ok(cw)
    }
}

/// One BER measurement: a decoder at one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct BerRecord {
    pub snr_db: f64,
    pub decoder: String,
    pub bit_errors: u64,
    pub bits_total: u64,
    pub ber: f64,
    pub symbol_errors: u64,
    /// Wall time of the whole SNR point (not serialized: CSV output stays
    /// byte-identical across runs).
    pub wall_time: f64,
}

fn fixed_channel(spec: &ExperimentSpec) -> Result<Option<ChannelMatrix>> {
    match spec.channel.model {
        ChannelKind::SpatialDecay => Ok(Some(make_spatial_decay_channel(&spec.system))),
        ChannelKind::File => {
            let path = spec.channel.path.as_ref().unwrap();
            Ok(Some(load_channel_csv_from(&spec.system, path)?))
        }
        ChannelKind::Rayleigh => match spec.channel.redraw {
            Redraw::Fixed => Ok(Some(make_rayleigh_channel(
                &spec.system,
                derive_seed(spec.seed, &[LBL_CHANNEL, 0]),
            ))),
            Redraw::PerTrial => Ok(None),
        },
    }
}

fn ber_codebook(spec: &ExperimentSpec, ber: &BerSpec) -> Result<Codebook> {
    if let Some(path) = &ber.codebook_file {
        return Codebook::load_allocations_from(&spec.system, path);
    }
    if let Some(n_b) = ber.n_b {
        let allocs = enumerate_allocations(&spec.system)?;
        let selected = design_allocations(&spec.system, &allocs, n_b, spec.seed)?;
        return Codebook::with_allocations(&spec.system, selected);
    }
    Codebook::full(&spec.system)
}

fn design_allocations(
    cfg: &SystemConfig,
    allocs: &[crate::codeword::AntennaAllocation],
    n_b: usize,
    seed: u64,
) -> Result<Vec<crate::codeword::AntennaAllocation>> {
    let reduced = reduce_dimensions(allocs, cfg)?;
    let dm = distance_matrix(allocs, cfg.l_r);
    let design = design_codebook(&reduced, &dm, n_b, derive_seed(seed, &[LBL_DESIGN, n_b as u64]))?;
    Ok(design.selected.iter().map(|&i| allocs[i].clone()).collect())
}

/// Core Monte-Carlo BER sweep: one set of trials per SNR point, every
/// decoder sees the identical channel, payload and noise per trial.
fn ber_sweep(
    spec: &ExperimentSpec,
    cb: &Codebook,
    snr_db: &[f64],
    trials: u64,
    decoders: &[DecoderKind],
    i_max: usize,
) -> Result<Vec<BerRecord>> {
    let cfg = &spec.system;
    let ctx = ToneContext::new(cfg);
    let fixed = fixed_channel(spec)?;
    let n_bits = cb.bits_per_symbol();
    let mask = (1u64 << n_bits).wrapping_sub(1);
    let seed = spec.seed;

    let mut records = Vec::with_capacity(snr_db.len() * decoders.len());
    for (pi, &snr) in snr_db.iter().enumerate() {
        let sigma2 = sigma2_from_snr_db(snr);
        let start = Instant::now();
        let zero = vec![(0u64, 0u64); decoders.len()];
        let totals = (0..trials)
            .into_par_iter()
            .map(|trial| -> Result<Vec<(u64, u64)>> {
                let h = match &fixed {
                    Some(h) => h.clone(),
                    None => make_rayleigh_channel(cfg, derive_seed(seed, &[LBL_CHANNEL, trial + 1])),
                };
                let mut bit_rng = stream(derive_seed(seed, &[LBL_BITS, pi as u64, trial]));
                let bits = bit_rng.gen::<u64>() & mask;
                let cw = cb.bits_to_codeword(bits, n_bits)?;
                let x = synthesize_transmit(&cw, cfg)?;
                let y = transmit_through(
                    &x,
                    &h,
                    sigma2,
                    derive_seed(seed, &[LBL_NOISE, pi as u64, trial]),
                )?;
                let mut out = Vec::with_capacity(decoders.len());
                for d in decoders {
                    let decoded = d.run(&y, &h, cb, &ctx, i_max)?;
                    let got = cb.demap_lenient(&decoded);
                    let bit_errors = (got ^ bits).count_ones() as u64;
                    out.push((bit_errors, u64::from(bit_errors > 0)));
                }
                Ok(out)
            })
            .try_reduce(
                || zero.clone(),
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        x.0 += y.0;
                        x.1 += y.1;
                    }
                    Ok(a)
                },
            )?;
        let wall_time = start.elapsed().as_secs_f64();
        for (d, &(bit_errors, symbol_errors)) in decoders.iter().zip(&totals) {
            let bits_total = trials * u64::from(n_bits);
            records.push(BerRecord {
                snr_db: snr,
                decoder: d.name().to_string(),
                bit_errors,
                bits_total,
                ber: bit_errors as f64 / bits_total as f64,
                symbol_errors,
                wall_time,
            });
        }
    }
    Ok(records)
}

/// Run the `[ber]` section of a spec.
pub fn run_ber(spec: &ExperimentSpec) -> Result<Vec<BerRecord>> {
    spec.validate()?;
    let ber = spec
        .ber
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("spec has no [ber] section".into()))?;
    let decoders: Vec<DecoderKind> = ber
        .decoders
        .iter()
        .map(|d| DecoderKind::parse(d))
        .collect::<Result<_>>()?;
    let cb = ber_codebook(spec, ber)?;
    ber_sweep(spec, &cb, &ber.snr_db, ber.trials, &decoders, ber.i_max)
}

/// One rate-curve row: bounds plus the dedicated-antenna baselines.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub snr_db: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    /// Parallel to the spec's `baselines` list.
    pub baselines: Vec<f64>,
}

/// Run the `[rate]` section: exact lower/upper bounds per SNR plus the
/// Gaussian-capacity baselines, Rayleigh values averaged over seeded draws.
pub fn run_rate(spec: &ExperimentSpec) -> Result<Vec<RateRow>> {
    spec.validate()?;
    let rate = spec
        .rate
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("spec has no [rate] section".into()))?;
    let cfg = &spec.system;
    let cb = Codebook::full(cfg)?;
    let upper = rate_upper_bound(&cb);

    let channels: Vec<ChannelMatrix> = match spec.channel.model {
        ChannelKind::Rayleigh => (0..rate.rayleigh_draws)
            .map(|d| make_rayleigh_channel(cfg, derive_seed(spec.seed, &[LBL_RATE_DRAW, d as u64])))
            .collect(),
        _ => vec![fixed_channel(spec)?.expect("non-rayleigh channels are fixed")],
    };

    let mut rows = Vec::with_capacity(rate.snr_db.len());
    for &snr in &rate.snr_db {
        let sigma2 = sigma2_from_snr_db(snr);
        let mut lower = 0.0;
        let mut baselines = vec![0.0; rate.baselines.len()];
        for h in &channels {
            lower += rate_lower_bound(h, &cb, sigma2)?;
            for (acc, &n) in baselines.iter_mut().zip(&rate.baselines) {
                *acc += dedicated_capacity(h, n, sigma2)?;
            }
        }
        let norm = channels.len() as f64;
        rows.push(RateRow {
            snr_db: snr,
            lower_bound: lower / norm,
            upper_bound: upper,
            baselines: baselines.into_iter().map(|b| b / norm).collect(),
        });
    }
    Ok(rows)
}

/// One study measurement: BER of a designed codebook of size `n_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRecord {
    pub n_b: usize,
    pub bits_per_symbol: u32,
    pub record: BerRecord,
}

/// Distance scatter row for one allocation pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterRow {
    pub i: usize,
    pub j: usize,
    pub dist: usize,
    pub h_dist: f64,
}

/// Run the `[study]` section: design a codebook per `n_b`, sweep its BER,
/// and export the H-Dist vs Dist scatter of the full allocation set.
pub fn run_codebook_study(spec: &ExperimentSpec) -> Result<(Vec<StudyRecord>, Vec<ScatterRow>)> {
    spec.validate()?;
    let study = spec
        .study
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("spec has no [study] section".into()))?;
    let cfg = &spec.system;
    let allocs = enumerate_allocations(cfg)?;
    let dm = distance_matrix(&allocs, cfg.l_r);
    let reduced = reduce_dimensions(&allocs, cfg)?;

    // Scatter over the full set, one fixed channel draw, first carrier set.
    let scatter_h = match fixed_channel(spec)? {
        Some(h) => h,
        None => make_rayleigh_channel(cfg, derive_seed(spec.seed, &[LBL_SCATTER])),
    };
    let freq = crate::codeword::enumerate_frequency_sets(cfg)?
        .into_iter()
        .next()
        .expect("validated configs have at least one carrier set");
    let mut scatter = Vec::new();
    for i in 0..allocs.len() {
        for j in i + 1..allocs.len() {
            scatter.push(ScatterRow {
                i,
                j,
                dist: allocation_distance(&allocs[i], &allocs[j], cfg.l_r),
                h_dist: h_distance(&allocs[i], &allocs[j], &freq, &scatter_h, cfg, false)?,
            });
        }
    }

    let decoders: Vec<DecoderKind> = study
        .decoders
        .iter()
        .map(|d| DecoderKind::parse(d))
        .collect::<Result<_>>()?;

    let mut records = Vec::new();
    for &n_b in &study.n_b {
        let design = design_codebook(
            &reduced,
            &dm,
            n_b,
            derive_seed(spec.seed, &[LBL_DESIGN, n_b as u64]),
        )?;
        let selected: Vec<_> = design.selected.iter().map(|&i| allocs[i].clone()).collect();
        let cb = Codebook::with_allocations(cfg, selected)?;
        let bits_per_symbol = if study.freq_known {
            cb.alloc_bits()
        } else {
            cb.bits_per_symbol()
        };
        let ber_records = if study.freq_known {
            spatial_only_sweep(spec, &cb, &freq, &study.snr_db, study.trials)?
        } else {
            ber_sweep(spec, &cb, &study.snr_db, study.trials, &decoders, study.i_max)?
        };
        for record in ber_records {
            records.push(StudyRecord {
                n_b,
                bits_per_symbol,
                record,
            });
        }
    }
    Ok((records, scatter))
}

/// Known-carrier BER: the payload addresses only the allocation and the
/// receiver runs exhaustive spatial ML over the designed set.
fn spatial_only_sweep(
    spec: &ExperimentSpec,
    cb: &Codebook,
    freq: &crate::codeword::FrequencySelection,
    snr_db: &[f64],
    trials: u64,
) -> Result<Vec<BerRecord>> {
    let cfg = &spec.system;
    let ctx = ToneContext::new(cfg);
    let fixed = fixed_channel(spec)?;
    let n_bits = cb.alloc_bits();
    let mask = (1u64 << n_bits).wrapping_sub(1);
    let seed = spec.seed;

    let mut records = Vec::with_capacity(snr_db.len());
    for (pi, &snr) in snr_db.iter().enumerate() {
        let sigma2 = sigma2_from_snr_db(snr);
        let start = Instant::now();
        let (bit_errors, symbol_errors) = (0..trials)
            .into_par_iter()
            .map(|trial| -> Result<(u64, u64)> {
                let h = match &fixed {
                    Some(h) => h.clone(),
                    None => make_rayleigh_channel(cfg, derive_seed(seed, &[LBL_CHANNEL, trial + 1])),
                };
                let mut bit_rng = stream(derive_seed(seed, &[LBL_BITS, pi as u64, trial]));
                let bits = bit_rng.gen::<u64>() & mask;
                let cw = Codeword {
                    freq: freq.clone(),
                    alloc: cb.allocations()[bits as usize].clone(),
                };
                let x = synthesize_transmit(&cw, cfg)?;
                let y = transmit_through(
                    &x,
                    &h,
                    sigma2,
                    derive_seed(seed, &[LBL_NOISE, pi as u64, trial]),
                )?;
                let alloc = spatial_ml(&y, freq, &h, cfg, &ctx, cb.allocations())?;
                let got = cb.demap_lenient(&Codeword {
                    freq: freq.clone(),
                    alloc,
                }) & mask;
                let bit_errors = (got ^ bits).count_ones() as u64;
                Ok((bit_errors, u64::from(bit_errors > 0)))
            })
            .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
        let bits_total = trials * u64::from(n_bits);
        records.push(BerRecord {
            snr_db: snr,
            decoder: "spatial-ml".into(),
            bit_errors,
            bits_total,
            ber: bit_errors as f64 / bits_total as f64,
            symbol_errors,
            wall_time: start.elapsed().as_secs_f64(),
        });
    }
    Ok(records)
}

pub fn write_ber_csv<W: Write>(records: &[BerRecord], mut w: W) -> Result<()> {
    writeln!(w, "# majorcom ber v1")?;
    writeln!(w, "snr_db,decoder,bit_errors,bits_total,ber,symbol_errors")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{:.10e},{}",
            r.snr_db, r.decoder, r.bit_errors, r.bits_total, r.ber, r.symbol_errors
        )?;
    }
    Ok(())
}

pub fn write_rate_csv<W: Write>(rows: &[RateRow], baselines: &[usize], mut w: W) -> Result<()> {
    writeln!(w, "# majorcom rate v1")?;
    let cols: Vec<String> = baselines.iter().map(|n| format!("baseline_{n}")).collect();
    writeln!(w, "snr_db,lower_bound,upper_bound,{}", cols.join(","))?;
    for r in rows {
        let base: Vec<String> = r.baselines.iter().map(|b| format!("{b:.10e}")).collect();
        writeln!(
            w,
            "{},{:.10e},{:.10e},{}",
            r.snr_db,
            r.lower_bound,
            r.upper_bound,
            base.join(",")
        )?;
    }
    Ok(())
}

pub fn write_study_csv<W: Write>(records: &[StudyRecord], mut w: W) -> Result<()> {
    writeln!(w, "# majorcom codebook-study v1")?;
    writeln!(
        w,
        "n_b,bits_per_symbol,snr_db,decoder,bit_errors,bits_total,ber,symbol_errors"
    )?;
    for s in records {
        let r = &s.record;
        writeln!(
            w,
            "{},{},{},{},{},{},{:.10e},{}",
            s.n_b, s.bits_per_symbol, r.snr_db, r.decoder, r.bit_errors, r.bits_total, r.ber,
            r.symbol_errors
        )?;
    }
    Ok(())
}

pub fn write_scatter_csv<W: Write>(rows: &[ScatterRow], mut w: W) -> Result<()> {
    writeln!(w, "# majorcom distance-scatter v1")?;
    writeln!(w, "i,j,dist,h_dist")?;
    for r in rows {
        writeln!(w, "{},{},{},{:.10e}", r.i, r.j, r.dist, r.h_dist)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vb_spec(trials: u64, snr_db: &[f64], decoders: &[&str]) -> ExperimentSpec {
        let list = decoders
            .iter()
            .map(|d| format!("\"{d}\""))
            .collect::<Vec<_>>()
            .join(", ");
        let grid = snr_db
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(", ");
        ExperimentSpec::from_str(&format!(
            r#"
            seed = 7

            [system]
            f_c = 1.9e9
            delta_f = 1.0e7
            m = 7
            k = 2
            l_r = 6
            l_k = 3
            l_c = 4
            theta = 0.0
            d = 1.5778550421052632
            t_p = 1.0e-6

            [channel]
            model = "rayleigh"
            redraw = "per-trial"

            [ber]
            snr_db = [{grid}]
            trials = {trials}
            decoders = [{list}]
            "#
        ))
        .unwrap()
    }

    #[test]
    fn spec_parsing_and_validation() {
        let spec = vb_spec(10, &[-10.0], &["ml"]);
        assert_eq!(spec.seed, 7);
        assert_eq!(spec.system.m, 7);
        assert!(matches!(spec.channel.model, ChannelKind::Rayleigh));

        assert!(ExperimentSpec::from_str("[system]\nf_c = 1.0").is_err());
        assert!(DecoderKind::parse("sphere").is_err());
        for d in DecoderKind::ALL {
            assert_eq!(DecoderKind::parse(d.name()).unwrap(), d);
        }
    }

    #[test]
    fn ber_zero_noise_limit_and_accounting() {
        let spec = vb_spec(
            200,
            &[60.0],
            &["ml", "noniter-ml", "noniter-greedy", "iter-ml", "iter-greedy"],
        );
        let records = run_ber(&spec).unwrap();
        assert_eq!(records.len(), 5);
        for r in &records {
            assert_eq!(r.bit_errors, 0, "{} at 60 dB", r.decoder);
            assert_eq!(r.bits_total, 200 * 8);
            assert_eq!(r.symbol_errors, 0);
        }
    }

    #[test]
    fn ber_runs_are_reproducible() {
        let spec = vb_spec(300, &[-6.0, 0.0], &["ml", "noniter-greedy"]);
        let a = run_ber(&spec).unwrap();
        let b = run_ber(&spec).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.bit_errors, y.bit_errors);
            assert_eq!(x.symbol_errors, y.symbol_errors);
        }
        let mut csv_a = Vec::new();
        let mut csv_b = Vec::new();
        write_ber_csv(&a, &mut csv_a).unwrap();
        write_ber_csv(&b, &mut csv_b).unwrap();
        assert_eq!(csv_a, csv_b);
    }

    #[test]
    fn rate_section_runs_with_baselines() {
        let spec = ExperimentSpec::from_str(
            r#"
            seed = 1

            [system]
            f_c = 1.9e9
            delta_f = 1.0e7
            m = 10
            k = 2
            l_r = 4
            l_k = 2
            l_c = 4
            theta = 0.7853981633974483
            d = 1.5778550421052632
            t_p = 1.0e-6

            [channel]
            model = "spatial-decay"

            [rate]
            snr_db = [-10.0, 0.0, 30.0]
            baselines = [1, 2]
            "#,
        )
        .unwrap();
        let rows = run_rate(&spec).unwrap();
        assert_eq!(rows.len(), 3);
        assert!((rows[2].lower_bound - 8.063612827216822).abs() < 1e-8);
        assert!((rows[1].baselines[0] - 1.676962524556876).abs() < 1e-9);
        assert!(rows[0].lower_bound > rows[0].baselines[0]);
        for r in &rows {
            assert!((r.upper_bound - 8.076815597050832).abs() < 1e-9);
        }
    }

    #[test]
    fn study_accounting_and_scatter() {
        let spec = ExperimentSpec::from_str(
            r#"
            seed = 5

            [system]
            f_c = 1.9e9
            delta_f = 1.0e7
            m = 7
            k = 2
            l_r = 6
            l_k = 3
            l_c = 4
            theta = 0.0
            d = 1.5778550421052632
            t_p = 1.0e-6

            [study]
            snr_db = [0.0]
            trials = 100
            n_b = [2, 8]
            "#,
        )
        .unwrap();
        let (records, scatter) = run_codebook_study(&spec).unwrap();
        assert_eq!(records.len(), 2);
        // |U| = C(7,2) = 21 -> 4 frequency bits, plus log2(n_b).
        assert_eq!(records[0].bits_per_symbol, 4 + 1);
        assert_eq!(records[1].bits_per_symbol, 4 + 3);
        assert_eq!(scatter.len(), 20 * 19 / 2);
        for s in &scatter {
            assert!(s.h_dist >= 0.0);
            assert_eq!(s.dist % 2, 0);
        }
        let mut csv = Vec::new();
        write_study_csv(&records, &mut csv).unwrap();
        assert!(csv.starts_with(b"# majorcom codebook-study v1"));
    }
}
