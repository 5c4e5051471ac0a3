//! Reduced-cardinality allocation codebook design: pairwise distances, the
//! structured distance matrix, PCA embedding and k-means selection.

use std::collections::HashMap;

use rand::Rng;

use crate::channel::ChannelMatrix;
use crate::codeword::{AntennaAllocation, FrequencySelection};
use crate::config::SystemConfig;
use crate::rng::{derive_seed, stream};
use crate::transmit::steering_vector;
use crate::{Error, RMat, Result};

/// Squared distance between two allocation patterns,
/// `sum_k ||p_k^(i) - p_k^(j)||^2`. Equals twice the number of antennas
/// whose group assignment differs, hence always even.
pub fn allocation_distance(a: &AntennaAllocation, b: &AntennaAllocation, l_r: usize) -> usize {
    let ga = a.assignment(l_r);
    let gb = b.assignment(l_r);
    2 * ga.iter().zip(&gb).filter(|(x, y)| x != y).count()
}

/// Channel-weighted distance `sum_k ||H diag(w_k) (p_k^(i) - p_k^(j))||^2`
/// with `w_k` the steering vector of the carrier served by group `k`.
///
/// The simplification to a per-group sum holds only for orthogonal tones;
/// configs where `T_p * delta_f` is not an integer are refused unless
/// `force` is set.
pub fn h_distance(
    a: &AntennaAllocation,
    b: &AntennaAllocation,
    freq: &FrequencySelection,
    h: &ChannelMatrix,
    cfg: &SystemConfig,
    force: bool,
) -> Result<f64> {
    if !cfg.tones_orthogonal() && !force {
        return Err(Error::NonOrthogonalTones);
    }
    let mut total = 0.0;
    for (k, &c) in freq.indices().iter().enumerate() {
        let w = steering_vector(c, cfg);
        let pa = a.selection_vector(k, cfg.l_r);
        let pb = b.selection_vector(k, cfg.l_r);
        for r in 0..h.h.nrows() {
            let mut acc = crate::Cplx::new(0.0, 0.0);
            for l in 0..cfg.l_r {
                let d = pa[l] - pb[l];
                if d != 0.0 {
                    acc += h.h[(r, l)] * w[l] * crate::Cplx::new(d, 0.0);
                }
            }
            total += acc.norm_sqr();
        }
    }
    Ok(total)
}

/// Full pairwise allocation distance matrix. Symmetric, zero diagonal, and
/// every row is a permutation of row 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    pub r: Vec<Vec<usize>>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Smallest off-diagonal entry among the given pattern indices.
    pub fn min_pairwise(&self, selected: &[usize]) -> usize {
        let mut best = usize::MAX;
        for (i, &a) in selected.iter().enumerate() {
            for &b in &selected[i + 1..] {
                best = best.min(self.r[a][b]);
            }
        }
        best
    }
}

/// Direct all-pairs distance computation, `O(|P|^2 L_R)`.
pub fn distance_matrix_naive(allocs: &[AntennaAllocation], l_r: usize) -> DistanceMatrix {
    let n = allocs.len();
    let mut r = vec![vec![0usize; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = allocation_distance(&allocs[i], &allocs[j], l_r);
            r[i][j] = d;
            r[j][i] = d;
        }
    }
    DistanceMatrix { r }
}

/// Structured construction: compute row 0 directly, then derive row `i` by
/// relabeling antennas with the permutation that carries pattern 0 onto
/// pattern `i` and looking the relabeled patterns up in the set. Falls back
/// to the naive scan when the set is not closed under those relabelings
/// (e.g. an arbitrary subset of the full enumeration).
pub fn distance_matrix(allocs: &[AntennaAllocation], l_r: usize) -> DistanceMatrix {
    match distance_matrix_structured(allocs, l_r) {
        Some(m) => m,
        None => distance_matrix_naive(allocs, l_r),
    }
}

fn distance_matrix_structured(allocs: &[AntennaAllocation], l_r: usize) -> Option<DistanceMatrix> {
    let n = allocs.len();
    if n == 0 {
        return Some(DistanceMatrix { r: Vec::new() });
    }
    let assignments: Vec<Vec<usize>> = allocs.iter().map(|a| a.assignment(l_r)).collect();
    let index: HashMap<&[usize], usize> = assignments
        .iter()
        .enumerate()
        .map(|(i, a)| (a.as_slice(), i))
        .collect();

    let row0: Vec<usize> = (0..n)
        .map(|j| allocation_distance(&allocs[0], &allocs[j], l_r))
        .collect();

    let mut r = Vec::with_capacity(n);
    r.push(row0.clone());
    for i in 1..n {
        // sigma maps each antenna of pattern 0 to the same-rank antenna of
        // the same-labeled group in pattern i.
        let mut sigma = vec![0usize; l_r];
        for (k, g0) in allocs[0].groups().iter().enumerate() {
            let gi = allocs[i].group(k);
            for (a0, ai) in g0.iter().zip(gi) {
                sigma[*a0] = *ai;
            }
        }
        let mut row = vec![0usize; n];
        for j in 0..n {
            let relabeled: Vec<usize> = (0..l_r).map(|l| assignments[j][sigma[l]]).collect();
            let jj = *index.get(relabeled.as_slice())?;
            row[j] = row0[jj];
        }
        r.push(row);
    }
    Some(DistanceMatrix { r })
}

/// PCA embedding of the stacked selection vectors: real coordinates whose
/// pairwise squared Euclidean distances reproduce the distance matrix.
#[derive(Debug, Clone)]
pub struct ReducedCodewords {
    /// `L_D x |P|`; column `i` is the embedded pattern `i`.
    pub coords: RMat,
    pub intrinsic_dim: usize,
    /// Constant subtracted from every stacked entry (`1/K`).
    pub mean_offset: f64,
}

impl ReducedCodewords {
    pub fn len(&self) -> usize {
        self.coords.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.ncols() == 0
    }

    pub fn squared_distance(&self, i: usize, j: usize) -> f64 {
        (self.coords.column(i) - self.coords.column(j)).norm_squared()
    }
}

/// Embed the allocation set: stack the `K` selection vectors of each pattern
/// into a `K L_R`-dimensional column, remove the constant `1/K` mean, and
/// keep the singular directions above `1e-9` of the largest singular value.
pub fn reduce_dimensions(allocs: &[AntennaAllocation], cfg: &SystemConfig) -> Result<ReducedCodewords> {
    if allocs.len() < 2 {
        return Err(Error::InvalidConfig(
            "dimension reduction needs at least two patterns".into(),
        ));
    }
    let n = allocs.len();
    let rows = cfg.k * cfg.l_r;
    let mean_offset = 1.0 / cfg.k as f64;
    let mut d = RMat::zeros(rows, n);
    for (i, a) in allocs.iter().enumerate() {
        for k in 0..cfg.k {
            let p = a.selection_vector(k, cfg.l_r);
            for l in 0..cfg.l_r {
                d[(k * cfg.l_r + l, i)] = p[l] - mean_offset;
            }
        }
    }
    let svd = d.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::InvalidConfig("SVD did not produce V^T".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap()
    });
    let s_max = svd.singular_values[order[0]];
    let kept: Vec<usize> = order
        .into_iter()
        .filter(|&i| svd.singular_values[i] > 1e-9 * s_max)
        .collect();
    let mut coords = RMat::zeros(kept.len(), n);
    for (row, &si) in kept.iter().enumerate() {
        let s = svd.singular_values[si];
        for i in 0..n {
            coords[(row, i)] = s * v_t[(si, i)];
        }
    }
    Ok(ReducedCodewords {
        intrinsic_dim: kept.len(),
        coords,
        mean_offset,
    })
}

/// Designed reduced codebook: which patterns to keep and the minimum
/// pairwise distance they attain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignedCodebook {
    pub selected: Vec<usize>,
    pub min_distance: usize,
}

const KMEANS_RESTARTS: u64 = 50;
const KMEANS_MAX_ITERS: usize = 100;

/// Select `n_b` representative patterns by clustering the embedded
/// codewords: k-means++ seeded Lloyd iterations, the member nearest each
/// final center as representative, best of 50 restarts by the max-min
/// distance criterion. Deterministic given `seed`.
pub fn design_codebook(
    reduced: &ReducedCodewords,
    dist: &DistanceMatrix,
    n_b: usize,
    seed: u64,
) -> Result<DesignedCodebook> {
    let n = reduced.len();
    if n_b < 2 || n_b > n {
        return Err(Error::InvalidConfig(format!(
            "n_b must lie in 2..={n}, got {n_b}"
        )));
    }
    if dist.len() != n {
        return Err(Error::DimensionMismatch(
            "distance matrix does not match the embedding".into(),
        ));
    }
    if n_b == n {
        let selected: Vec<usize> = (0..n).collect();
        let min_distance = dist.min_pairwise(&selected);
        return Ok(DesignedCodebook {
            selected,
            min_distance,
        });
    }

    let points: Vec<Vec<f64>> = (0..n)
        .map(|i| reduced.coords.column(i).iter().cloned().collect())
        .collect();

    let mut best: Option<DesignedCodebook> = None;
    for restart in 0..KMEANS_RESTARTS {
        let mut rng = stream(derive_seed(seed, &[restart]));
        let selected = kmeans_once(&points, n_b, &mut rng);
        let min_distance = dist.min_pairwise(&selected);
        let better = match &best {
            None => true,
            Some(b) => min_distance > b.min_distance,
        };
        if better {
            best = Some(DesignedCodebook {
                selected,
                min_distance,
            });
        }
    }
    Ok(best.unwrap())
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn kmeans_once(points: &[Vec<f64>], k: usize, rng: &mut crate::rng::Stream) -> Vec<usize> {
    let n = points.len();
    let dim = points[0].len();

    // k-means++ seeding.
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    centers.push(points[rng.gen_range(0..n)].clone());
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            rng.gen_range(0..n)
        } else {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        };
        centers.push(points[next].clone());
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &centers[centers.len() - 1]));
        }
    }

    // Lloyd iterations.
    let mut assign = vec![0usize; n];
    for _ in 0..KMEANS_MAX_ITERS {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let d = sq_dist(p, center);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
        }

        let mut counts = vec![0usize; k];
        let mut sums = vec![vec![0.0; dim]; k];
        for (i, p) in points.iter().enumerate() {
            counts[assign[i]] += 1;
            for (s, &v) in sums[assign[i]].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // Reseed an empty cluster with the point farthest from its
                // current center.
                let far = (0..n)
                    .max_by(|&a, &b| {
                        sq_dist(&points[a], &centers[assign[a]])
                            .partial_cmp(&sq_dist(&points[b], &centers[assign[b]]))
                            .unwrap()
                    })
                    .unwrap();
                centers[c] = points[far].clone();
                assign[far] = c;
                changed = true;
            } else {
                for (ctr, s) in centers[c].iter_mut().zip(&sums[c]) {
                    *ctr = s / counts[c] as f64;
                }
            }
        }
        if !changed {
            break;
        }
    }

    // Representative per cluster: member nearest the center, lowest index
    // on ties.
    let mut selected = Vec::with_capacity(k);
    for c in 0..k {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for (i, p) in points.iter().enumerate() {
            if assign[i] != c {
                continue;
            }
            let d = sq_dist(p, &centers[c]);
            if d < best_d || (d == best_d && i < best) {
                best_d = d;
                best = i;
            }
        }
        if best != usize::MAX {
            selected.push(best);
        }
    }
    selected.sort_unstable();
    selected.dedup();
    // Degenerate restarts (duplicate representatives) are topped up with the
    // patterns farthest from the already-selected ones so the size contract
    // holds; such restarts lose the max-min comparison naturally.
    while selected.len() < k {
        let far = (0..n)
            .filter(|i| !selected.contains(i))
            .max_by(|&a, &b| {
                let da: f64 = selected
                    .iter()
                    .map(|&s| sq_dist(&points[a], &points[s]))
                    .fold(f64::INFINITY, f64::min);
                let db: f64 = selected
                    .iter()
                    .map(|&s| sq_dist(&points[b], &points[s]))
                    .fold(f64::INFINITY, f64::min);
                da.partial_cmp(&db).unwrap()
            })
            .unwrap();
        selected.push(far);
        selected.sort_unstable();
    }
    selected
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{make_rayleigh_channel, ChannelModel};
    use crate::codeword::enumerate_allocations;
    use crate::config::SPEED_OF_LIGHT;
    use crate::CMat;

    fn cfg(m: usize, k: usize, l_r: usize, l_k: usize) -> SystemConfig {
        SystemConfig {
            f_c: 1.9e9,
            delta_f: 1.0e7,
            m,
            k,
            l_r,
            l_k,
            l_c: 4,
            theta: 0.0,
            d: 10.0 * SPEED_OF_LIGHT / 1.9e9,
            t_p: 1.0e-6,
            t_s: Some(1.0 / (m as f64 * 1.0e7)),
        }
    }

    #[test]
    fn pairwise_distance_examples() {
        let c = cfg(10, 2, 4, 2);
        let allocs = enumerate_allocations(&c).unwrap();
        for (i, a) in allocs.iter().enumerate() {
            assert_eq!(allocation_distance(a, a, 4), 0);
            for b in &allocs {
                assert_eq!(allocation_distance(a, b, 4) % 2, 0);
            }
            let _ = i;
        }
        // [01|23] vs fully swapped [23|01]: all four antennas move.
        assert_eq!(allocation_distance(&allocs[0], &allocs[5], 4), 8);
        assert_eq!(allocation_distance(&allocs[0], &allocs[1], 4), 4);
    }

    #[test]
    fn six_pattern_matrix_rows() {
        let c = cfg(10, 2, 4, 2);
        let allocs = enumerate_allocations(&c).unwrap();
        let m = distance_matrix(&allocs, 4);
        for i in 0..6 {
            assert_eq!(m.r[i][i], 0);
            let mut row = m.r[i].clone();
            row.sort_unstable();
            assert_eq!(row, vec![0, 4, 4, 4, 4, 8]);
            for j in 0..6 {
                assert_eq!(m.r[i][j], m.r[j][i]);
            }
        }
    }

    #[test]
    fn structured_matches_naive() {
        for (k, l_r, l_k) in [(2usize, 4usize, 2usize), (2, 6, 3), (3, 6, 2), (2, 8, 4)] {
            let c = cfg(10, k, l_r, l_k);
            let allocs = enumerate_allocations(&c).unwrap();
            let fast = distance_matrix_structured(&allocs, l_r)
                .expect("full enumeration is closed under relabeling");
            let naive = distance_matrix_naive(&allocs, l_r);
            assert_eq!(fast, naive, "k={k} l_r={l_r}");
        }
    }

    #[test]
    fn subset_falls_back_to_naive() {
        let c = cfg(10, 2, 6, 3);
        let allocs = enumerate_allocations(&c).unwrap();
        let subset: Vec<_> = allocs[..5].to_vec();
        let m = distance_matrix(&subset, 6);
        assert_eq!(m, distance_matrix_naive(&subset, 6));
    }

    #[test]
    fn h_distance_identity_channel_reduces_to_dist() {
        let mut c = cfg(10, 2, 4, 2);
        c.l_c = 4;
        let h = ChannelMatrix {
            h: CMat::identity(4, 4),
            model: ChannelModel::Explicit,
        };
        let freq = FrequencySelection::new(vec![0, 3], &c).unwrap();
        let allocs = enumerate_allocations(&c).unwrap();
        for a in &allocs {
            for b in &allocs {
                let hd = h_distance(a, b, &freq, &h, &c, false).unwrap();
                assert!((hd - allocation_distance(a, b, 4) as f64).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn h_distance_respects_singular_value_bound() {
        let c = cfg(10, 2, 6, 3);
        let h = make_rayleigh_channel(&c, 17);
        let freq = FrequencySelection::new(vec![2, 7], &c).unwrap();
        let allocs = enumerate_allocations(&c).unwrap();
        let bound: f64 = freq
            .indices()
            .iter()
            .map(|&m| {
                let w = steering_vector(m, &c);
                let ht = CMat::from_fn(c.l_c, c.l_r, |r, l| h.h[(r, l)] * w[l]);
                let s = ht.singular_values();
                s[0] * s[0]
            })
            .fold(0.0, f64::max);
        for a in &allocs {
            for b in &allocs {
                let hd = h_distance(a, b, &freq, &h, &c, false).unwrap();
                let d = allocation_distance(a, b, 6) as f64;
                assert!(hd <= bound * d + 1e-9);
            }
        }
    }

    #[test]
    fn h_distance_rejects_non_orthogonal_tones() {
        let mut c = cfg(10, 2, 4, 2);
        c.t_p = 1.23e-7; // t_p * delta_f not an integer
        let h = ChannelMatrix {
            h: CMat::identity(4, 4),
            model: ChannelModel::Explicit,
        };
        let freq = FrequencySelection::new(vec![0, 1], &c).unwrap();
        let allocs = enumerate_allocations(&c).unwrap();
        assert!(matches!(
            h_distance(&allocs[0], &allocs[1], &freq, &h, &c, false),
            Err(Error::NonOrthogonalTones)
        ));
        assert!(h_distance(&allocs[0], &allocs[1], &freq, &h, &c, true).is_ok());
    }

    #[test]
    fn pca_dimensions_and_isometry() {
        for (k, l_r, l_k, expect_dim) in [(2usize, 4usize, 2usize, 3usize), (2, 8, 4, 7)] {
            let c = cfg(10, k, l_r, l_k);
            let allocs = enumerate_allocations(&c).unwrap();
            let red = reduce_dimensions(&allocs, &c).unwrap();
            assert_eq!(red.intrinsic_dim, expect_dim, "l_r={l_r}");
            let dm = distance_matrix(&allocs, l_r);
            for i in 0..allocs.len() {
                for j in 0..allocs.len() {
                    let d = red.squared_distance(i, j);
                    let want = dm.r[i][j] as f64;
                    assert!(
                        (d - want).abs() <= 1e-9 * want.max(1.0),
                        "l_r={l_r} ({i},{j}): {d} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn design_identity_when_nb_equals_size() {
        let c = cfg(10, 2, 4, 2);
        let allocs = enumerate_allocations(&c).unwrap();
        let red = reduce_dimensions(&allocs, &c).unwrap();
        let dm = distance_matrix(&allocs, 4);
        let design = design_codebook(&red, &dm, 6, 1).unwrap();
        assert_eq!(design.selected, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(design.min_distance, 4);
    }

    #[test]
    fn design_nb2_attains_the_optimum() {
        let c = cfg(10, 2, 4, 2);
        let allocs = enumerate_allocations(&c).unwrap();
        let red = reduce_dimensions(&allocs, &c).unwrap();
        let dm = distance_matrix(&allocs, 4);
        let design = design_codebook(&red, &dm, 2, 7).unwrap();
        assert_eq!(design.min_distance, 8);
        assert_eq!(dm.r[design.selected[0]][design.selected[1]], 8);
    }

    #[test]
    fn design_is_deterministic_and_validates_inputs() {
        let c = cfg(10, 2, 6, 3);
        let allocs = enumerate_allocations(&c).unwrap();
        let red = reduce_dimensions(&allocs, &c).unwrap();
        let dm = distance_matrix(&allocs, 6);
        let a = design_codebook(&red, &dm, 4, 123).unwrap();
        let b = design_codebook(&red, &dm, 4, 123).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.selected.len(), 4);
        assert!(design_codebook(&red, &dm, 1, 0).is_err());
        assert!(design_codebook(&red, &dm, 21, 0).is_err());
    }
}
