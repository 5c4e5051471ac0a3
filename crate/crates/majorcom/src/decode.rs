//! Maximum-likelihood decoding and the two low-complexity decoders.
//!
//! All decoders rank candidates by the squared residual
//! `||Y - sum_k H P_k w_k psi_{c_k}^T||^2_F`. Expanding the norm, the
//! candidate-dependent part needs only the tone Gram matrix `G = Psi^H Psi`,
//! the projections `Z = Y conj(Psi)` and the per-candidate signatures
//! `a_k = H P_k w(c_k)`, which keeps Monte-Carlo runs cheap. Ties are broken
//! by the lowest candidate index everywhere, so decoding is deterministic.

use num_complex::Complex;

use crate::channel::{ChannelMatrix, ReceivedBlock};
use crate::codeword::{AntennaAllocation, Codebook, Codeword, FrequencySelection};
use crate::config::SystemConfig;
use crate::transmit::{steering_vector, tone_matrix};
use crate::{CMat, CVec, Cplx, Error, Result};

/// Initial frequency estimation mode. Projection assumes near-orthogonal
/// tones; the regularized least-squares path works for any tone dictionary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencyInit {
    Projection,
    PseudoInverse,
}

/// Spatial (antenna allocation) decoding mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpatialMethod {
    Ml,
    Greedy,
}

/// Frequency refinement mode used by the iterative decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefineMethod {
    Ml,
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecodeOptions {
    pub freq_init: FrequencyInit,
    pub spatial: SpatialMethod,
    pub freq_refine: RefineMethod,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        Self {
            freq_init: FrequencyInit::Projection,
            spatial: SpatialMethod::Ml,
            freq_refine: RefineMethod::Ml,
        }
    }
}

/// Decoder output: the codeword estimate, its squared residual and how many
/// refinement iterations ran (0 for non-iterative decoders).
#[derive(Debug, Clone)]
pub struct DecodeResult {
    pub codeword: Codeword,
    pub objective: f64,
    pub iterations: usize,
}

/// Per-carrier evidence matrix: row `m` estimates the model row
/// `(H P_k w_k)^T` when carrier `m` is active and is near zero otherwise.
#[derive(Debug, Clone)]
pub struct FrequencyEvidence {
    pub a_hat: CMat,
    pub row_norms: Vec<f64>,
}

impl FrequencyEvidence {
    pub fn from_a_hat(a_hat: CMat) -> Self {
        let row_norms = (0..a_hat.nrows()).map(|m| a_hat.row(m).norm()).collect();
        Self { a_hat, row_norms }
    }

    fn row(&self, m: usize) -> CVec {
        self.a_hat.row(m).transpose()
    }
}

/// Precomputed tone dictionary `Psi` and its Gram matrix, shared by all
/// decoders for one configuration.
#[derive(Debug, Clone)]
pub struct ToneContext {
    pub psi: CMat,
    pub gram: CMat,
    l_t: usize,
}

impl ToneContext {
    pub fn new(cfg: &SystemConfig) -> Self {
        let psi = tone_matrix(cfg);
        let gram = psi.adjoint() * &psi;
        let l_t = psi.nrows();
        Self { psi, gram, l_t }
    }

    /// Tone projections `Z = Y conj(Psi)`, `L_C x M`; column `m` is
    /// `Y conj(psi_m)`.
    pub fn project(&self, y: &CMat) -> CMat {
        y * self.psi.conjugate()
    }
}

/// Steering-weighted channel columns per carrier: `bcol[m]` has column `l`
/// equal to `H[:,l] * w_m[l]`, so a group signature is a plain column sum.
fn weighted_columns(h: &ChannelMatrix, cfg: &SystemConfig) -> Vec<CMat> {
    (0..cfg.m)
        .map(|m| {
            let w = steering_vector(m, cfg);
            CMat::from_fn(h.h.nrows(), cfg.l_r, |r, l| h.h[(r, l)] * w[l])
        })
        .collect()
}

fn group_signature(bcol_m: &CMat, group: &[usize]) -> CVec {
    let mut a = CVec::zeros(bcol_m.nrows());
    for &l in group {
        for r in 0..a.len() {
            a[r] += bcol_m[(r, l)];
        }
    }
    a
}

/// Candidate-dependent part of the squared residual (`||Y||^2` excluded):
/// `sum_{k,k'} (a_k^H a_{k'}) G[c_k,c_{k'}] - 2 Re sum_k a_k^H z_{c_k}`.
fn partial_score(a: &[CVec], carriers: &[usize], gram: &CMat, z: &CMat) -> f64 {
    let lc = z.nrows();
    let mut quad = 0.0;
    let mut cross = 0.0;
    for (i, ai) in a.iter().enumerate() {
        for (j, aj) in a.iter().enumerate() {
            let mut dot = Complex::new(0.0, 0.0);
            for r in 0..lc {
                dot += ai[r].conj() * aj[r];
            }
            quad += (dot * gram[(carriers[i], carriers[j])]).re;
        }
        let mut dot = Complex::new(0.0, 0.0);
        for r in 0..lc {
            dot += ai[r].conj() * z[(r, carriers[i])];
        }
        cross += dot.re;
    }
    quad - 2.0 * cross
}

fn score_candidate(
    bcol: &[CMat],
    gram: &CMat,
    z: &CMat,
    carriers: &[usize],
    groups: &[&[usize]],
) -> f64 {
    let a: Vec<CVec> = carriers
        .iter()
        .zip(groups)
        .map(|(&c, g)| group_signature(&bcol[c], g))
        .collect();
    partial_score(&a, carriers, gram, z)
}

/// Visit all `k`-combinations of `0..n` in lexicographic order.
fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn check_dims(y: &ReceivedBlock, h: &ChannelMatrix, cfg: &SystemConfig, ctx: &ToneContext) -> Result<()> {
    if h.h.nrows() != y.y.nrows() || h.h.ncols() != cfg.l_r || y.y.ncols() != ctx.l_t {
        return Err(Error::DimensionMismatch(format!(
            "y is {}x{}, h is {}x{}, expected {}x{} and {}x{}",
            y.y.nrows(),
            y.y.ncols(),
            h.h.nrows(),
            h.h.ncols(),
            cfg.l_c,
            ctx.l_t,
            cfg.l_c,
            cfg.l_r
        )));
    }
    Ok(())
}

/// Exhaustive ML decoding over the bit-addressable codewords of `cb`.
/// Returns the global residual minimizer; ties go to the lowest index.
pub fn ml_decode(
    y: &ReceivedBlock,
    h: &ChannelMatrix,
    cb: &Codebook,
    ctx: &ToneContext,
) -> Result<DecodeResult> {
    let cfg = cb.config();
    check_dims(y, h, cfg, ctx)?;
    let bcol = weighted_columns(h, cfg);
    let z = ctx.project(&y.y);
    let y2 = y.y.norm_squared();

    // Signature table: sig[m][ai * K + k] = H P_k^{(ai)} w_m.
    let ua = cb.used_alloc_count();
    let mut sig: Vec<Vec<CVec>> = Vec::with_capacity(cfg.m);
    for m in 0..cfg.m {
        let mut per_alloc = Vec::with_capacity(ua * cfg.k);
        for ai in 0..ua {
            for k in 0..cfg.k {
                per_alloc.push(group_signature(&bcol[m], cb.allocations()[ai].group(k)));
            }
        }
        sig.push(per_alloc);
    }

    let mut best = f64::INFINITY;
    let mut best_idx = 0usize;
    let mut a: Vec<CVec> = Vec::with_capacity(cfg.k);
    for fi in 0..cb.used_freq_count() {
        let carriers = cb.frequency_sets()[fi].indices();
        for ai in 0..ua {
            a.clear();
            for k in 0..cfg.k {
                a.push(sig[carriers[k]][ai * cfg.k + k].clone());
            }
            let s = partial_score(&a, carriers, &ctx.gram, &z);
            if s < best {
                best = s;
                best_idx = fi * ua + ai;
            }
        }
    }
    Ok(DecodeResult {
        codeword: cb.used_codeword(best_idx),
        objective: (y2 + best).max(0.0),
        iterations: 0,
    })
}

/// Initial frequency estimation: recover the evidence matrix `A_hat` from
/// `Y^T = Psi A + N`, then select the `K` rows with the largest norms.
///
/// Projection mode uses `A_hat = Psi^H Y^T / L_T`, exact when tones are
/// orthogonal; otherwise the regularized least-squares solution
/// `(G + eps I)^{-1} Psi^H Y^T` with `eps = 1e-9 tr(G)/M` applies. Both are
/// normalized to model units so rows compare directly with `H P_k w_k`.
pub fn frequency_initialize(
    y: &ReceivedBlock,
    cfg: &SystemConfig,
    ctx: &ToneContext,
    mode: FrequencyInit,
) -> Result<(FrequencyEvidence, FrequencySelection)> {
    if cfg.k > cfg.m {
        return Err(Error::InvalidConfig("k exceeds the carrier count".into()));
    }
    let rhs = ctx.psi.adjoint() * y.y.transpose();
    let a_hat = match mode {
        FrequencyInit::Projection => rhs.unscale(ctx.l_t as f64),
        FrequencyInit::PseudoInverse => {
            let eps = 1e-9 * ctx.gram.trace().re / cfg.m as f64;
            let mut g = ctx.gram.clone();
            for i in 0..cfg.m {
                g[(i, i)] += Cplx::new(eps, 0.0);
            }
            g.lu()
                .solve(&rhs)
                .ok_or_else(|| Error::InvalidConfig("tone Gram matrix is singular".into()))?
        }
    };
    let evidence = FrequencyEvidence::from_a_hat(a_hat);
    let mut order: Vec<usize> = (0..cfg.m).collect();
    order.sort_by(|&a, &b| {
        evidence.row_norms[b]
            .partial_cmp(&evidence.row_norms[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut selected: Vec<usize> = order[..cfg.k].to_vec();
    selected.sort_unstable();
    let freq = FrequencySelection::new(selected, cfg)?;
    Ok((evidence, freq))
}

fn spatial_ml_core(
    z: &CMat,
    bcol: &[CMat],
    gram: &CMat,
    carriers: &[usize],
    allocs: &[AntennaAllocation],
) -> (usize, f64) {
    let mut best = f64::INFINITY;
    let mut best_i = 0usize;
    for (i, alloc) in allocs.iter().enumerate() {
        let groups: Vec<&[usize]> = (0..carriers.len()).map(|k| alloc.group(k)).collect();
        let s = score_candidate(bcol, gram, z, carriers, &groups);
        if s < best {
            best = s;
            best_i = i;
        }
    }
    (best_i, best)
}

/// Exhaustive spatial decoding over `allocs` with the carriers fixed.
pub fn spatial_ml(
    y: &ReceivedBlock,
    freq: &FrequencySelection,
    h: &ChannelMatrix,
    cfg: &SystemConfig,
    ctx: &ToneContext,
    allocs: &[AntennaAllocation],
) -> Result<AntennaAllocation> {
    if allocs.is_empty() {
        return Err(Error::InvalidConfig("allocation set is empty".into()));
    }
    check_dims(y, h, cfg, ctx)?;
    let bcol = weighted_columns(h, cfg);
    let z = ctx.project(&y.y);
    let (i, _) = spatial_ml_core(&z, &bcol, &ctx.gram, freq.indices(), allocs);
    Ok(allocs[i].clone())
}

/// Greedy spatial decoding: carriers are handled in descending evidence-norm
/// order; each solves its own subset problem exhaustively over the remaining
/// antennas and the final group is forced. Returns the allocation
/// (re-canonicalized to ascending-carrier group order) and the number of
/// candidate evaluations, which never exceeds `K * C(L_R, L_K)`.
pub fn spatial_greedy(
    evidence: &FrequencyEvidence,
    freq: &FrequencySelection,
    h: &ChannelMatrix,
    cfg: &SystemConfig,
) -> Result<(AntennaAllocation, usize)> {
    let bcol = weighted_columns(h, cfg);
    let mut order: Vec<usize> = freq.indices().to_vec();
    order.sort_by(|&a, &b| {
        evidence.row_norms[b]
            .partial_cmp(&evidence.row_norms[a])
            .unwrap()
            .then(a.cmp(&b))
    });

    let mut remaining: Vec<usize> = (0..cfg.l_r).collect();
    let mut chosen: Vec<(usize, Vec<usize>)> = Vec::with_capacity(cfg.k);
    let mut evals = 0usize;
    for (step, &c) in order.iter().enumerate() {
        if step + 1 == cfg.k {
            chosen.push((c, remaining.clone()));
            break;
        }
        let e = evidence.row(c);
        let mut best = f64::INFINITY;
        let mut best_group: Vec<usize> = Vec::new();
        for_each_combination(remaining.len(), cfg.l_k, |positions| {
            let group: Vec<usize> = positions.iter().map(|&p| remaining[p]).collect();
            let a = group_signature(&bcol[c], &group);
            let d = (&a - &e).norm_squared();
            evals += 1;
            if d < best {
                best = d;
                best_group = group;
            }
        });
        remaining.retain(|l| !best_group.contains(l));
        chosen.push((c, best_group));
    }
    chosen.sort_by_key(|(c, _)| *c);
    let groups = chosen.into_iter().map(|(_, g)| g).collect();
    Ok((AntennaAllocation::new(groups, cfg)?, evals))
}

/// Frequency refinement output: the refined selection in canonical ascending
/// order, the allocation with groups permuted to match it, and the number of
/// candidate evaluations.
#[derive(Debug, Clone)]
pub struct RefineOutcome {
    pub freq: FrequencySelection,
    pub alloc: AntennaAllocation,
    pub evals: usize,
}

/// Refine the carrier selection with the allocation fixed. ML mode searches
/// all `C(M,K)` selections; greedy mode assigns carriers group by group in
/// descending channel-gain order with `KM - K(K-1)/2` evaluations at most.
pub fn frequency_refine(
    y: &ReceivedBlock,
    alloc: &AntennaAllocation,
    h: &ChannelMatrix,
    cfg: &SystemConfig,
    ctx: &ToneContext,
    mode: RefineMethod,
) -> Result<RefineOutcome> {
    check_dims(y, h, cfg, ctx)?;
    let bcol = weighted_columns(h, cfg);
    let z = ctx.project(&y.y);
    frequency_refine_core(&z, alloc, &bcol, h, cfg, &ctx.gram, mode)
}

fn frequency_refine_core(
    z: &CMat,
    alloc: &AntennaAllocation,
    bcol: &[CMat],
    h: &ChannelMatrix,
    cfg: &SystemConfig,
    gram: &CMat,
    mode: RefineMethod,
) -> Result<RefineOutcome> {
    match mode {
        RefineMethod::Ml => {
            let groups: Vec<&[usize]> = (0..cfg.k).map(|k| alloc.group(k)).collect();
            let mut best = f64::INFINITY;
            let mut best_sel: Vec<usize> = Vec::new();
            let mut evals = 0usize;
            for_each_combination(cfg.m, cfg.k, |carriers| {
                let s = score_candidate(bcol, gram, z, carriers, &groups);
                evals += 1;
                if s < best {
                    best = s;
                    best_sel = carriers.to_vec();
                }
            });
            Ok(RefineOutcome {
                freq: FrequencySelection::new(best_sel, cfg)?,
                alloc: alloc.clone(),
                evals,
            })
        }
        RefineMethod::Greedy => {
            // Strongest groups pick their carrier first.
            let gains: Vec<f64> = (0..cfg.k)
                .map(|k| {
                    let mut v = CVec::zeros(h.h.nrows());
                    for &l in alloc.group(k) {
                        for r in 0..v.len() {
                            v[r] += h.h[(r, l)];
                        }
                    }
                    v.norm()
                })
                .collect();
            let mut order: Vec<usize> = (0..cfg.k).collect();
            order.sort_by(|&a, &b| gains[b].partial_cmp(&gains[a]).unwrap().then(a.cmp(&b)));

            let mut taken = vec![false; cfg.m];
            let mut assigned: Vec<(usize, usize)> = Vec::with_capacity(cfg.k); // (carrier, group)
            let mut evals = 0usize;
            for &k in &order {
                let group = alloc.group(k);
                let mut best = f64::INFINITY;
                let mut best_m = usize::MAX;
                for m in 0..cfg.m {
                    if taken[m] {
                        continue;
                    }
                    let a = group_signature(&bcol[m], group);
                    let mut cross = Complex::new(0.0, 0.0);
                    for r in 0..a.len() {
                        cross += a[r].conj() * z[(r, m)];
                    }
                    let s = a.norm_squared() * gram[(m, m)].re - 2.0 * cross.re;
                    evals += 1;
                    if s < best {
                        best = s;
                        best_m = m;
                    }
                }
                taken[best_m] = true;
                assigned.push((best_m, k));
            }
            assigned.sort_by_key(|(m, _)| *m);
            let freq =
                FrequencySelection::new(assigned.iter().map(|(m, _)| *m).collect(), cfg)?;
            let groups = assigned
                .iter()
                .map(|(_, k)| alloc.group(*k).to_vec())
                .collect();
            Ok(RefineOutcome {
                freq,
                alloc: AntennaAllocation::new(groups, cfg)?,
                evals,
            })
        }
    }
}

/// Model-side evidence for a codeword estimate: row `c_k` is
/// `(H P_k w_{c_k})^T`, all other rows zero.
pub fn refine_evidence(
    freq: &FrequencySelection,
    alloc: &AntennaAllocation,
    h: &ChannelMatrix,
    cfg: &SystemConfig,
) -> FrequencyEvidence {
    let bcol = weighted_columns(h, cfg);
    let mut a_hat = CMat::zeros(cfg.m, h.h.nrows());
    for (k, &c) in freq.indices().iter().enumerate() {
        let a = group_signature(&bcol[c], alloc.group(k));
        for j in 0..a.len() {
            a_hat[(c, j)] = a[j];
        }
    }
    FrequencyEvidence::from_a_hat(a_hat)
}

fn spatial_step(
    z: &CMat,
    bcol: &[CMat],
    gram: &CMat,
    evidence: &FrequencyEvidence,
    freq: &FrequencySelection,
    h: &ChannelMatrix,
    cb: &Codebook,
    method: SpatialMethod,
) -> Result<AntennaAllocation> {
    match method {
        SpatialMethod::Ml => {
            let (i, _) = spatial_ml_core(z, bcol, gram, freq.indices(), cb.allocations());
            Ok(cb.allocations()[i].clone())
        }
        SpatialMethod::Greedy => Ok(spatial_greedy(evidence, freq, h, cb.config())?.0),
    }
}

/// Non-iterative low-complexity decoder: sparse frequency recovery, then one
/// spatial decode (ML or greedy per `opts`).
pub fn decode_noniter(
    y: &ReceivedBlock,
    h: &ChannelMatrix,
    cb: &Codebook,
    ctx: &ToneContext,
    opts: &DecodeOptions,
) -> Result<DecodeResult> {
    let cfg = cb.config();
    check_dims(y, h, cfg, ctx)?;
    let (evidence, freq) = frequency_initialize(y, cfg, ctx, opts.freq_init)?;
    let bcol = weighted_columns(h, cfg);
    let z = ctx.project(&y.y);
    let alloc = spatial_step(&z, &bcol, &ctx.gram, &evidence, &freq, h, cb, opts.spatial)?;
    let groups: Vec<&[usize]> = (0..cfg.k).map(|k| alloc.group(k)).collect();
    let objective =
        (y.y.norm_squared() + score_candidate(&bcol, &ctx.gram, &z, freq.indices(), &groups)).max(0.0);
    Ok(DecodeResult {
        codeword: Codeword { freq, alloc },
        objective,
        iterations: 0,
    })
}

/// Iterative low-complexity decoder: initialize as [`decode_noniter`], then
/// alternate frequency refinement and spatial decoding for up to `i_max - 1`
/// rounds, exiting early once the codeword estimate repeats.
pub fn decode_iter(
    y: &ReceivedBlock,
    h: &ChannelMatrix,
    cb: &Codebook,
    ctx: &ToneContext,
    opts: &DecodeOptions,
    i_max: usize,
) -> Result<DecodeResult> {
    if i_max < 1 {
        return Err(Error::InvalidConfig("i_max must be >= 1".into()));
    }
    let cfg = cb.config();
    check_dims(y, h, cfg, ctx)?;
    let (evidence, freq) = frequency_initialize(y, cfg, ctx, opts.freq_init)?;
    let bcol = weighted_columns(h, cfg);
    let z = ctx.project(&y.y);
    let alloc = spatial_step(&z, &bcol, &ctx.gram, &evidence, &freq, h, cb, opts.spatial)?;
    let mut cw = Codeword { freq, alloc };
    let mut iterations = 0usize;
    for it in 1..i_max {
        let refined =
            frequency_refine_core(&z, &cw.alloc, &bcol, h, cfg, &ctx.gram, opts.freq_refine)?;
        let alloc = spatial_step(
            &z,
            &bcol,
            &ctx.gram,
            &evidence,
            &refined.freq,
            h,
            cb,
            opts.spatial,
        )?;
        let next = Codeword {
            freq: refined.freq,
            alloc,
        };
        iterations = it;
        if next == cw {
            break;
        }
        cw = next;
    }
    let groups: Vec<&[usize]> = (0..cfg.k).map(|k| cw.alloc.group(k)).collect();
    let objective = (y.y.norm_squared()
        + score_candidate(&bcol, &ctx.gram, &z, cw.freq.indices(), &groups))
    .max(0.0);
    Ok(DecodeResult {
        codeword: cw,
        objective,
        iterations,
    })
}
