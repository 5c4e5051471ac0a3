//! Counting, ranking and unranking of the two index-modulation code spaces:
//! `K`-subsets of the carrier grid and ordered partitions of the antenna
//! array into `K` labeled groups of `L_K`.
//!
//! All counting uses checked 128-bit arithmetic; overflow is reported rather
//! than wrapped.

use crate::{Error, Result};

/// Binomial coefficient C(n, k) with overflow detection.
pub fn binomial(n: usize, k: usize) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut result: u128 = 1;
    for i in 1..=k as u128 {
        let n_i = n as u128 - (k as u128 - i);
        result = result
            .checked_mul(n_i)
            .ok_or_else(|| Error::Overflow(format!("computing C({n},{k})")))?
            / i;
    }
    Ok(result)
}

/// Number of ordered partitions of `l_r` antennas into `k` labeled groups of
/// `l_k`, i.e. `l_r! / (l_k!)^k`.
pub fn partition_count(l_r: usize, k: usize, l_k: usize) -> Result<u128> {
    if l_r != k * l_k {
        return Err(Error::InvalidConfig(format!(
            "partition_count requires l_r = k * l_k, got {l_r} != {k} * {l_k}"
        )));
    }
    // Product of C(remaining, l_k) over the k sequential group choices.
    let mut total: u128 = 1;
    for g in 0..k {
        let remaining = l_r - g * l_k;
        total = total
            .checked_mul(binomial(remaining, l_k)?)
            .ok_or_else(|| Error::Overflow(format!("counting partitions of {l_r} into {k} groups")))?;
    }
    Ok(total)
}

/// Unrank a `k`-combination of `0..n` in lexicographic order.
pub fn unrank_combination(n: usize, k: usize, mut rank: u128) -> Result<Vec<usize>> {
    if binomial(n, k)? <= rank {
        return Err(Error::CodewordOutOfRange {
            detail: format!("combination rank {rank} >= C({n},{k})"),
        });
    }
    let mut combo = Vec::with_capacity(k);
    let mut next = 0usize;
    for slot in 0..k {
        let mut c = next;
        loop {
            let count = binomial(n - c - 1, k - slot - 1)?;
            if count <= rank {
                rank -= count;
                c += 1;
            } else {
                combo.push(c);
                next = c + 1;
                break;
            }
        }
    }
    Ok(combo)
}

/// Lexicographic rank of a strictly increasing `k`-combination of `0..n`.
pub fn rank_combination(n: usize, indices: &[usize]) -> Result<u128> {
    let k = indices.len();
    let mut rank: u128 = 0;
    for (slot, &c) in indices.iter().enumerate() {
        let start = if slot == 0 { 0 } else { indices[slot - 1] + 1 };
        for j in start..c {
            rank += binomial(n - j - 1, k - slot - 1)?;
        }
    }
    Ok(rank)
}

/// Unrank an ordered partition of `0..l_r` into `k` labeled groups of `l_k`.
///
/// The order is the sequential-choice order: group 0 ranges over
/// lexicographic `l_k`-subsets of all antennas, group 1 over subsets of the
/// remainder, and so on. Returns the groups as sorted antenna-index lists.
pub fn unrank_partition(l_r: usize, k: usize, l_k: usize, mut rank: u128) -> Result<Vec<Vec<usize>>> {
    if partition_count(l_r, k, l_k)? <= rank {
        return Err(Error::CodewordOutOfRange {
            detail: format!("partition rank {rank} >= |P|"),
        });
    }
    let mut remaining: Vec<usize> = (0..l_r).collect();
    let mut groups = Vec::with_capacity(k);
    for g in 0..k {
        let suffix: u128 = {
            let mut s = 1u128;
            for g2 in g + 1..k {
                s *= binomial(l_r - g2 * l_k, l_k)?;
            }
            s
        };
        let digit = rank / suffix;
        rank %= suffix;
        let positions = unrank_combination(remaining.len(), l_k, digit)?;
        let group: Vec<usize> = positions.iter().map(|&p| remaining[p]).collect();
        remaining.retain(|a| !group.contains(a));
        groups.push(group);
    }
    Ok(groups)
}

/// Rank of an ordered partition in the order used by [`unrank_partition`].
pub fn rank_partition(l_r: usize, l_k: usize, groups: &[Vec<usize>]) -> Result<u128> {
    let k = groups.len();
    let mut remaining: Vec<usize> = (0..l_r).collect();
    let mut rank: u128 = 0;
    for (g, group) in groups.iter().enumerate() {
        let positions: Vec<usize> = group
            .iter()
            .map(|a| {
                remaining
                    .iter()
                    .position(|r| r == a)
                    .ok_or_else(|| Error::InvalidConfig("groups are not disjoint".into()))
            })
            .collect::<Result<_>>()?;
        let digit = rank_combination(remaining.len(), &positions)?;
        let mut suffix = 1u128;
        for g2 in g + 1..k {
            suffix *= binomial(l_r - g2 * l_k, l_k)?;
        }
        rank += digit * suffix;
        remaining.retain(|a| !group.contains(a));
    }
    Ok(rank)
}
