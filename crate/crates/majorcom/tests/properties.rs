//! Randomized invariants and small brute-force oracles that complement the
//! acceptance gate.

use majorcom::channel::{make_rayleigh_channel, transmit_through};
use majorcom::codebook::{design_codebook, distance_matrix, reduce_dimensions, DistanceMatrix};
use majorcom::codeword::{enumerate_allocations, Codebook};
use majorcom::combinatorics::{
    binomial, partition_count, rank_combination, rank_partition, unrank_combination,
    unrank_partition,
};
use majorcom::config::{SystemConfig, SPEED_OF_LIGHT};
use majorcom::decode::{
    decode_iter, decode_noniter, ml_decode, spatial_greedy, DecodeOptions, FrequencyEvidence,
    FrequencyInit, RefineMethod, SpatialMethod, ToneContext,
};
use majorcom::rate::{rate_lower_bound, rate_upper_bound};
use majorcom::rng::{derive_seed, stream};
use majorcom::transmit::synthesize_transmit;
use proptest::prelude::*;
use rand::Rng;

fn config(m: usize, k: usize, l_r: usize, l_k: usize, l_c: usize) -> SystemConfig {
    SystemConfig {
        f_c: 1.9e9,
        delta_f: 1.0e7,
        m,
        k,
        l_r,
        l_k,
        l_c,
        theta: 0.0,
        d: 10.0 * SPEED_OF_LIGHT / 1.9e9,
        t_p: 1.0e-6,
        t_s: None,
    }
}

proptest! {
    #[test]
    fn combination_rank_roundtrip(n in 1usize..12, rank_frac in 0.0f64..1.0) {
        for k in 1..=n {
            let total = binomial(n, k).unwrap();
            let rank = ((rank_frac * total as f64) as u128).min(total - 1);
            let indices = unrank_combination(n, k, rank).unwrap();
            prop_assert!(indices.windows(2).all(|w| w[0] < w[1]));
            prop_assert_eq!(rank_combination(n, &indices).unwrap(), rank);
        }
    }

    #[test]
    fn partition_rank_roundtrip(seed in 0u64..1000) {
        for (l_r, k, l_k) in [(4usize, 2usize, 2usize), (6, 2, 3), (6, 3, 2), (8, 2, 4), (9, 3, 3)] {
            let total = partition_count(l_r, k, l_k).unwrap();
            let rank = (majorcom::rng::derive_seed(seed, &[l_r as u64]) as u128) % total;
            let groups = unrank_partition(l_r, k, l_k, rank).unwrap();
            let mut seen: Vec<usize> = groups.iter().flatten().copied().collect();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..l_r).collect::<Vec<_>>());
            prop_assert_eq!(rank_partition(l_r, l_k, &groups).unwrap(), rank);
        }
    }

    #[test]
    fn bit_mapping_roundtrip(bits in 0u64..256) {
        let cfg = config(7, 2, 6, 3, 4);
        let cb = Codebook::full(&cfg).unwrap();
        let n = cb.bits_per_symbol();
        let cw = cb.bits_to_codeword(bits, n).unwrap();
        prop_assert_eq!(cb.codeword_to_bits(&cw).unwrap(), bits);
        prop_assert_eq!(cb.demap_lenient(&cw), bits);
    }

    #[test]
    fn rate_bounds_ordered_on_random_channels(seed in 0u64..200, snr_db in -20.0f64..40.0) {
        let cfg = config(10, 2, 4, 2, 4);
        let cb = Codebook::full(&cfg).unwrap();
        let h = make_rayleigh_channel(&cfg, seed);
        let sigma2 = 10f64.powf(-snr_db / 10.0);
        let lower = rate_lower_bound(&h, &cb, sigma2).unwrap();
        prop_assert!(lower.is_finite());
        prop_assert!(lower <= rate_upper_bound(&cb) + 1e-9);
    }
}

#[test]
fn codebook_file_roundtrip() {
    let cfg = config(7, 2, 8, 4, 4);
    let full = Codebook::full(&cfg).unwrap();
    let subset: Vec<_> = full.allocations().iter().step_by(7).cloned().collect();
    let cb = Codebook::with_allocations(&cfg, subset).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cb.txt");
    cb.save_allocations_to(&path).unwrap();
    let loaded = Codebook::load_allocations_from(&cfg, &path).unwrap();
    assert_eq!(loaded.allocations(), cb.allocations());
}

fn brute_force_max_min(dm: &DistanceMatrix, n_b: usize) -> usize {
    let n = dm.len();
    let mut best = 0usize;
    let mut subset: Vec<usize> = (0..n_b).collect();
    loop {
        let mut min_d = usize::MAX;
        for a in 0..n_b {
            for b in a + 1..n_b {
                min_d = min_d.min(dm.r[subset[a]][subset[b]]);
            }
        }
        best = best.max(min_d);
        // next lexicographic n_b-subset of 0..n
        let mut i = n_b;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if subset[i] != i + n - n_b {
                break;
            }
        }
        subset[i] += 1;
        for j in i + 1..n_b {
            subset[j] = subset[j - 1] + 1;
        }
    }
}

#[test]
fn designed_codebook_near_brute_force_optimum() {
    for (l_r, k, l_k, n_bs) in [
        (4usize, 2usize, 2usize, vec![2usize, 3, 4, 5]),
        (6, 2, 3, vec![2, 3, 4]),
    ] {
        let cfg = config(10, k, l_r, l_k, 4);
        let allocs = enumerate_allocations(&cfg).unwrap();
        let dm = distance_matrix(&allocs, l_r);
        let red = reduce_dimensions(&allocs, &cfg).unwrap();
        for &n_b in &n_bs {
            let opt = brute_force_max_min(&dm, n_b);
            let design = design_codebook(&red, &dm, n_b, 1).unwrap();
            assert!(
                design.min_distance as f64 >= 0.8 * opt as f64,
                "({l_r},{k},{l_k}) n_b={n_b}: got {}, optimum {opt}",
                design.min_distance
            );
        }
    }
}

#[test]
fn designed_codebook_beats_average_random_subset() {
    let cfg = config(10, 2, 6, 3, 4);
    let allocs = enumerate_allocations(&cfg).unwrap();
    let dm = distance_matrix(&allocs, cfg.l_r);
    let red = reduce_dimensions(&allocs, &cfg).unwrap();
    let n_b = 4;
    let design = design_codebook(&red, &dm, n_b, 1).unwrap();

    let mut rng = stream(99);
    let mut sum = 0.0;
    let runs = 100;
    for _ in 0..runs {
        let mut picked: Vec<usize> = Vec::new();
        while picked.len() < n_b {
            let c = rng.gen_range(0..allocs.len());
            if !picked.contains(&c) {
                picked.push(c);
            }
        }
        let mut min_d = usize::MAX;
        for a in 0..n_b {
            for b in a + 1..n_b {
                min_d = min_d.min(dm.r[picked[a]][picked[b]]);
            }
        }
        sum += min_d as f64;
    }
    assert!(design.min_distance as f64 >= sum / runs as f64);
}

#[test]
fn ml_objective_is_global_minimum_of_sampled_residuals() {
    let cfg = config(7, 2, 6, 3, 4);
    let cb = Codebook::full(&cfg).unwrap();
    let ctx = ToneContext::new(&cfg);
    for trial in 0..50u64 {
        let h = make_rayleigh_channel(&cfg, derive_seed(5, &[trial]));
        let mut rng = stream(derive_seed(6, &[trial]));
        let idx = rng.gen_range(0..cb.used_len());
        let x = synthesize_transmit(&cb.used_codeword(idx), &cfg).unwrap();
        let y = transmit_through(&x, &h, 1.0, derive_seed(7, &[trial])).unwrap();
        let ml = ml_decode(&y, &h, &cb, &ctx).unwrap();
        for _ in 0..20 {
            let other = cb.used_codeword(rng.gen_range(0..cb.used_len()));
            let xb = synthesize_transmit(&other, &cfg).unwrap();
            let r = (&y.y - &h.h * &xb.samples).norm_squared();
            assert!(ml.objective <= r + 1e-6 * r.max(1.0));
        }
    }
}

#[test]
fn low_complexity_decoders_never_beat_ml() {
    let cfg = config(7, 2, 6, 3, 4);
    let cb = Codebook::full(&cfg).unwrap();
    let ctx = ToneContext::new(&cfg);
    let opts = DecodeOptions {
        freq_init: FrequencyInit::Projection,
        spatial: SpatialMethod::Ml,
        freq_refine: RefineMethod::Ml,
    };
    for trial in 0..50u64 {
        let h = make_rayleigh_channel(&cfg, derive_seed(11, &[trial]));
        let mut rng = stream(derive_seed(12, &[trial]));
        let idx = rng.gen_range(0..cb.used_len());
        let x = synthesize_transmit(&cb.used_codeword(idx), &cfg).unwrap();
        let y = transmit_through(&x, &h, 0.5, derive_seed(13, &[trial])).unwrap();
        let ml = ml_decode(&y, &h, &cb, &ctx).unwrap();
        let ni = decode_noniter(&y, &h, &cb, &ctx, &opts).unwrap();
        let it = decode_iter(&y, &h, &cb, &ctx, &opts, 10).unwrap();
        assert!(ml.objective <= ni.objective + 1e-6);
        assert!(ml.objective <= it.objective + 1e-6);
        assert!(it.objective <= ni.objective + 1e-6);
    }
}

#[test]
fn greedy_spatial_evaluation_budget() {
    for (l_r, k, l_k) in [(6usize, 2usize, 3usize), (8, 2, 4), (9, 3, 3)] {
        let cfg = config(7, k, l_r, l_k, 4);
        let cb = Codebook::full(&cfg).unwrap();
        let ctx = ToneContext::new(&cfg);
        let h = make_rayleigh_channel(&cfg, 3);
        let x = synthesize_transmit(&cb.used_codeword(1), &cfg).unwrap();
        let y = transmit_through(&x, &h, 1.0, 4).unwrap();
        let a_hat = ctx.project(&y.y).transpose() * majorcom::Cplx::new(1.0 / ctx.psi.nrows() as f64, 0.0);
        let evidence = FrequencyEvidence::from_a_hat(a_hat);
        let freq = cb.used_codeword(1).freq;
        let (_, evals) = spatial_greedy(&evidence, &freq, &h, &cfg).unwrap();
        let budget = k as u128 * binomial(l_r, l_k).unwrap();
        assert!(
            (evals as u128) <= budget,
            "({l_r},{k},{l_k}): {evals} evals > budget {budget}"
        );
    }
}

#[test]
fn decoder_ranking_small_sweep() {
    // Bit-error counts over a small sweep: ML <= iterative <= non-iterative
    // (greedy spatial), allowing Poisson slack on each comparison.
    let cfg = config(7, 2, 6, 3, 4);
    let cb = Codebook::full(&cfg).unwrap();
    let ctx = ToneContext::new(&cfg);
    let opts = DecodeOptions {
        freq_init: FrequencyInit::Projection,
        spatial: SpatialMethod::Greedy,
        freq_refine: RefineMethod::Greedy,
    };
    let sigma2 = 10f64.powf(0.8); // -8 dB
    let n_bits = cb.bits_per_symbol();
    let (mut e_ml, mut e_it, mut e_ni) = (0u64, 0u64, 0u64);
    for trial in 0..3000u64 {
        let h = make_rayleigh_channel(&cfg, derive_seed(21, &[trial]));
        let mut rng = stream(derive_seed(22, &[trial]));
        let bits = rng.gen::<u64>() & ((1 << n_bits) - 1);
        let x = synthesize_transmit(&cb.bits_to_codeword(bits, n_bits).unwrap(), &cfg).unwrap();
        let y = transmit_through(&x, &h, sigma2, derive_seed(23, &[trial])).unwrap();
        let err = |cw| (cb.demap_lenient(&cw) ^ bits).count_ones() as u64;
        e_ml += err(ml_decode(&y, &h, &cb, &ctx).unwrap().codeword);
        e_it += err(decode_iter(&y, &h, &cb, &ctx, &opts, 10).unwrap().codeword);
        e_ni += err(decode_noniter(&y, &h, &cb, &ctx, &opts).unwrap().codeword);
    }
    let slack = |a: u64, b: u64| ((a + b) as f64).sqrt();
    assert!(e_ml as f64 <= e_it as f64 + slack(e_ml, e_it), "{e_ml} vs {e_it}");
    assert!(e_it as f64 <= e_ni as f64 + slack(e_it, e_ni), "{e_it} vs {e_ni}");
}
