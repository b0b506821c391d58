//! Enumeration of small subsets, with seeded subsampling above a budget.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

use crate::jets::binomial;

/// Number of nonempty subsets of `0..n` with at most `kmax` elements,
/// saturating at `u128::MAX`.
pub fn count_subsets(n: usize, kmax: usize) -> u128 {
    (1..=kmax.min(n)).fold(0u128, |acc, k| acc.saturating_add(binomial_u128(n, k)))
}

fn binomial_u128(n: usize, k: usize) -> u128 {
    if n <= 60 {
        return binomial(n, k) as u128;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i + 1) as u128,
            None => return u128::MAX,
        };
    }
    acc
}

/// Subsets of `0..n` of size `1..=kmax`, ordered by size then lexicographically.
///
/// When there are more than `budget` of them, sizes are taken whole in
/// increasing order while they fit, and the first size that does not fit is
/// filled by seeded uniform sampling. Returns the subsets and whether the
/// enumeration was exhaustive.
pub fn subsets(n: usize, kmax: usize, budget: usize, seed: u64) -> (Vec<Vec<usize>>, bool) {
    let total = count_subsets(n, kmax);
    let mut out = Vec::new();
    if total <= budget as u128 {
        for k in 1..=kmax.min(n) {
            push_all(n, k, &mut out);
        }
        return (out, true);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 1..=kmax.min(n) {
        let remaining = budget.saturating_sub(out.len());
        if remaining == 0 {
            break;
        }
        let count = binomial_u128(n, k);
        if count <= remaining as u128 {
            push_all(n, k, &mut out);
            continue;
        }
        let mut picked: BTreeSet<Vec<usize>> = BTreeSet::new();
        while picked.len() < remaining {
            let mut s = sample(&mut rng, n, k).into_vec();
            s.sort_unstable();
            picked.insert(s);
        }
        out.extend(picked);
        break;
    }
    (out, false)
}

fn push_all(n: usize, k: usize, out: &mut Vec<Vec<usize>>) {
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if cur[i] < n - k + i {
                break;
            }
            if i == 0 {
                return;
            }
        }
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}
