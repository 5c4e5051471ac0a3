//! Codeword-space domain types, enumeration and the bit mapping.
//!
//! A codeword is a pair of a carrier subset and an antenna allocation. The
//! selection is stored ascending and allocation group `k` serves the `k`-th
//! smallest selected carrier, which anchors the otherwise ambiguous labeling
//! of groups. Enumerations are deterministic: carrier subsets in
//! lexicographic order, allocations in sequential-choice order (group 0
//! subset lexicographic over all antennas, group 1 over the remainder, ...).

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::combinatorics::{
    binomial, partition_count, rank_combination, unrank_combination, unrank_partition,
};
use crate::config::SystemConfig;
use crate::{Error, Result};

/// Ascending list of `K` distinct carrier-grid indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FrequencySelection {
    indices: Vec<usize>,
}

impl FrequencySelection {
    pub fn new(mut indices: Vec<usize>, cfg: &SystemConfig) -> Result<Self> {
        indices.sort_unstable();
        if indices.len() != cfg.k {
            return Err(Error::InvalidConfig(format!(
                "selection has {} carriers, expected {}",
                indices.len(),
                cfg.k
            )));
        }
        if indices.windows(2).any(|w| w[0] == w[1]) || indices.iter().any(|&i| i >= cfg.m) {
            return Err(Error::InvalidConfig(
                "carrier indices must be distinct and in 0..M".into(),
            ));
        }
        Ok(Self { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }
}

/// `K` disjoint antenna groups of size `L_K` covering all `L_R` antennas.
/// Group `k` is stored as a sorted index list and serves the `k`-th smallest
/// selected carrier.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AntennaAllocation {
    groups: Vec<Vec<usize>>,
}

impl AntennaAllocation {
    pub fn new(mut groups: Vec<Vec<usize>>, cfg: &SystemConfig) -> Result<Self> {
        for g in &mut groups {
            g.sort_unstable();
        }
        let alloc = Self { groups };
        alloc.check(cfg)?;
        Ok(alloc)
    }

    fn check(&self, cfg: &SystemConfig) -> Result<()> {
        if self.groups.len() != cfg.k || self.groups.iter().any(|g| g.len() != cfg.l_k) {
            return Err(Error::InvalidConfig(format!(
                "allocation must have {} groups of {} antennas",
                cfg.k, cfg.l_k
            )));
        }
        let mut used = vec![false; cfg.l_r];
        for g in &self.groups {
            for &a in g {
                if a >= cfg.l_r || used[a] {
                    return Err(Error::InvalidConfig(
                        "groups must partition the antenna array".into(),
                    ));
                }
                used[a] = true;
            }
        }
        Ok(())
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn group(&self, k: usize) -> &[usize] {
        &self.groups[k]
    }

    /// Group index of each antenna; length `L_R`.
    pub fn assignment(&self, l_r: usize) -> Vec<usize> {
        let mut out = vec![0usize; l_r];
        for (k, g) in self.groups.iter().enumerate() {
            for &a in g {
                out[a] = k;
            }
        }
        out
    }

    /// Binary selection vector `p_k` as 0.0/1.0 entries.
    pub fn selection_vector(&self, k: usize, l_r: usize) -> Vec<f64> {
        let mut p = vec![0.0; l_r];
        for &a in &self.groups[k] {
            p[a] = 1.0;
        }
        p
    }
}

/// One transmitted symbol: which carriers, and which antennas serve each.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Codeword {
    pub freq: FrequencySelection,
    pub alloc: AntennaAllocation,
}

/// All `C(M,K)` carrier subsets in lexicographic order; the position in this
/// list is the frequency-codeword rank.
pub fn enumerate_frequency_sets(cfg: &SystemConfig) -> Result<Vec<FrequencySelection>> {
    cfg.validate()?;
    let total = binomial(cfg.m, cfg.k)?;
    let total_usize = usize::try_from(total)
        .map_err(|_| Error::Overflow("materializing frequency enumeration".into()))?;
    let mut out = Vec::with_capacity(total_usize);
    for rank in 0..total {
        out.push(FrequencySelection {
            indices: unrank_combination(cfg.m, cfg.k, rank)?,
        });
    }
    Ok(out)
}

/// All `L_R!/(L_K!)^K` allocation patterns in sequential-choice order.
pub fn enumerate_allocations(cfg: &SystemConfig) -> Result<Vec<AntennaAllocation>> {
    cfg.validate()?;
    let total = partition_count(cfg.l_r, cfg.k, cfg.l_k)?;
    let total_usize = usize::try_from(total)
        .map_err(|_| Error::Overflow("materializing allocation enumeration".into()))?;
    let mut out = Vec::with_capacity(total_usize);
    for rank in 0..total {
        out.push(AntennaAllocation {
            groups: unrank_partition(cfg.l_r, cfg.k, cfg.l_k, rank)?,
        });
    }
    Ok(out)
}

/// Total codeword count `C(M,K) * L_R!/(L_K!)^K`, overflow-checked.
pub fn codeword_space_size(cfg: &SystemConfig) -> Result<u128> {
    cfg.validate()?;
    binomial(cfg.m, cfg.k)?
        .checked_mul(partition_count(cfg.l_r, cfg.k, cfg.l_k)?)
        .ok_or_else(|| Error::Overflow("computing |X|".into()))
}

/// Stirling approximation of the per-pulse bit budget,
/// `K log2 M + L_R log2 K`. Valid when `L_R >> K` and `M >> K`.
pub fn stirling_bit_approx(cfg: &SystemConfig) -> f64 {
    cfg.k as f64 * (cfg.m as f64).log2() + cfg.l_r as f64 * (cfg.k as f64).log2()
}

/// Ordered codeword list with its bit mapping.
///
/// Bits address only the first `2^floor(log2 N)` entries of each enumeration;
/// remaining codewords are never transmitted. The allocation list may be a
/// designed subset instead of the full enumeration.
#[derive(Debug, Clone)]
pub struct Codebook {
    cfg: SystemConfig,
    freq_sets: Vec<FrequencySelection>,
    allocs: Vec<AntennaAllocation>,
    alloc_index: HashMap<Vec<usize>, usize>,
    freq_bits: u32,
    alloc_bits: u32,
}

fn floor_log2(n: usize) -> u32 {
    debug_assert!(n >= 1);
    usize::BITS - 1 - n.leading_zeros()
}

impl Codebook {
    /// Codebook over the full frequency and allocation enumerations.
    pub fn full(cfg: &SystemConfig) -> Result<Self> {
        let allocs = enumerate_allocations(cfg)?;
        Self::with_allocations(cfg, allocs)
    }

    /// Codebook with a restricted (e.g. designed) allocation set.
    pub fn with_allocations(cfg: &SystemConfig, allocs: Vec<AntennaAllocation>) -> Result<Self> {
        cfg.validate()?;
        if allocs.is_empty() {
            return Err(Error::InvalidConfig("allocation set must be nonempty".into()));
        }
        for a in &allocs {
            a.check(cfg)?;
        }
        let freq_sets = enumerate_frequency_sets(cfg)?;
        let alloc_index = allocs
            .iter()
            .enumerate()
            .map(|(i, a)| (a.assignment(cfg.l_r), i))
            .collect();
        let freq_bits = floor_log2(freq_sets.len());
        let alloc_bits = floor_log2(allocs.len());
        if freq_bits + alloc_bits > 63 {
            return Err(Error::Overflow("bit payload exceeds 63 bits".into()));
        }
        Ok(Self {
            cfg: cfg.clone(),
            freq_sets,
            allocs,
            alloc_index,
            freq_bits,
            alloc_bits,
        })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.cfg
    }

    pub fn frequency_sets(&self) -> &[FrequencySelection] {
        &self.freq_sets
    }

    pub fn allocations(&self) -> &[AntennaAllocation] {
        &self.allocs
    }

    pub fn freq_bits(&self) -> u32 {
        self.freq_bits
    }

    pub fn alloc_bits(&self) -> u32 {
        self.alloc_bits
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.freq_bits + self.alloc_bits
    }

    pub fn used_freq_count(&self) -> usize {
        1usize << self.freq_bits
    }

    pub fn used_alloc_count(&self) -> usize {
        1usize << self.alloc_bits
    }

    /// Number of bit-addressable codewords.
    pub fn used_len(&self) -> usize {
        self.used_freq_count() * self.used_alloc_count()
    }

    /// Size of the unrestricted codeword space (all enumerated entries).
    pub fn all_len(&self) -> usize {
        self.freq_sets.len() * self.allocs.len()
    }

    /// Codeword at flat index `fi * used_alloc_count + ai` within the
    /// addressable prefix.
    pub fn used_codeword(&self, index: usize) -> Codeword {
        let ua = self.used_alloc_count();
        Codeword {
            freq: self.freq_sets[index / ua].clone(),
            alloc: self.allocs[index % ua].clone(),
        }
    }

    /// Iterate all enumerated codewords (used by the rate bounds, which
    /// model the full space rather than the bit-addressable prefix).
    pub fn iter_all(&self) -> impl Iterator<Item = Codeword> + '_ {
        self.freq_sets.iter().flat_map(move |f| {
            self.allocs.iter().map(move |a| Codeword {
                freq: f.clone(),
                alloc: a.clone(),
            })
        })
    }

    /// Map a bit payload (MSB-first, `bits_per_symbol()` wide) to a codeword.
    pub fn bits_to_codeword(&self, bits: u64, n_bits: u32) -> Result<Codeword> {
        if n_bits != self.bits_per_symbol() {
            return Err(Error::BitLength {
                got: n_bits,
                want: self.bits_per_symbol(),
            });
        }
        let fi = (bits >> self.alloc_bits) as usize;
        let ai = (bits & ((1u64 << self.alloc_bits) - 1)) as usize;
        Ok(Codeword {
            freq: self.freq_sets[fi].clone(),
            alloc: self.allocs[ai].clone(),
        })
    }

    /// Inverse of [`bits_to_codeword`]; fails when the codeword lies outside
    /// the addressable prefix (or, for designed codebooks, outside the set).
    pub fn codeword_to_bits(&self, cw: &Codeword) -> Result<u64> {
        let fi = rank_combination(self.cfg.m, cw.freq.indices())? as usize;
        let ai = *self
            .alloc_index
            .get(&cw.alloc.assignment(self.cfg.l_r))
            .ok_or_else(|| Error::CodewordOutOfRange {
                detail: "allocation not in the active set".into(),
            })?;
        if fi >= self.used_freq_count() || ai >= self.used_alloc_count() {
            return Err(Error::CodewordOutOfRange {
                detail: format!("freq rank {fi}, alloc rank {ai}"),
            });
        }
        Ok(((fi as u64) << self.alloc_bits) | ai as u64)
    }

    /// Lenient demapping for error counting: ranks are masked into the
    /// addressable prefix and an allocation missing from the set maps to
    /// rank 0. Deterministic, used by the BER harness where a decoder may
    /// legitimately land outside the prefix.
    pub fn demap_lenient(&self, cw: &Codeword) -> u64 {
        let fi = rank_combination(self.cfg.m, cw.freq.indices()).unwrap_or(0) as u64
            & (self.used_freq_count() as u64 - 1);
        let ai = self
            .alloc_index
            .get(&cw.alloc.assignment(self.cfg.l_r))
            .map(|&i| i as u64)
            .unwrap_or(0)
            & (self.used_alloc_count() as u64 - 1);
        (fi << self.alloc_bits) | ai
    }

    /// Write the allocation set in the codebook text format:
    /// a header `l_r k l_k n_b`, then one line per allocation listing the
    /// group index of every antenna. Lines starting with `#` are comments.
    pub fn save_allocations<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# majorcom allocation codebook v1")?;
        writeln!(
            w,
            "{} {} {} {}",
            self.cfg.l_r,
            self.cfg.k,
            self.cfg.l_k,
            self.allocs.len()
        )?;
        for a in &self.allocs {
            let line: Vec<String> = a
                .assignment(self.cfg.l_r)
                .iter()
                .map(|g| g.to_string())
                .collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }

    /// Load an allocation set written by [`save_allocations`] and build a
    /// codebook restricted to it.
    pub fn load_allocations<R: BufRead>(cfg: &SystemConfig, r: R) -> Result<Self> {
        let mut lines = r
            .lines()
            .collect::<std::io::Result<Vec<_>>>()?
            .into_iter()
            .map(|l| l.trim().to_string())
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty codebook file".into()))?;
        let head: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad header token '{t}'"))))
            .collect::<Result<_>>()?;
        if head.len() != 4 {
            return Err(Error::Parse("header must be 'l_r k l_k n_b'".into()));
        }
        let (l_r, k, l_k, n_b) = (head[0], head[1], head[2], head[3]);
        if l_r != cfg.l_r || k != cfg.k || l_k != cfg.l_k {
            return Err(Error::Parse(format!(
                "codebook dimensions ({l_r},{k},{l_k}) do not match the configuration"
            )));
        }
        let mut allocs = Vec::with_capacity(n_b);
        for line in lines {
            let assignment: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad group token '{t}'"))))
                .collect::<Result<_>>()?;
            if assignment.len() != l_r {
                return Err(Error::Parse("allocation line has wrong antenna count".into()));
            }
            let mut groups = vec![Vec::new(); k];
            for (antenna, &g) in assignment.iter().enumerate() {
                if g >= k {
                    return Err(Error::Parse(format!("group index {g} out of range")));
                }
                groups[g].push(antenna);
            }
            allocs.push(AntennaAllocation::new(groups, cfg)?);
        }
        if allocs.len() != n_b {
            return Err(Error::Parse(format!(
                "header announced {n_b} allocations, file has {}",
                allocs.len()
            )));
        }
        Self::with_allocations(cfg, allocs)
    }

    pub fn save_allocations_to(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.save_allocations(std::io::BufWriter::new(f))
    }

    pub fn load_allocations_from(cfg: &SystemConfig, path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::load_allocations(cfg, std::io::BufReader::new(f))
    }
}
