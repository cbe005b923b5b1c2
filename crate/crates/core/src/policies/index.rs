//! Index formulas and top-K selection.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::env::{OptionId, PreferenceProfile, UserId};

/// `r + sqrt(2 ln t / n)`.
///
/// `n` must be positive; unsampled options are handled by the caller through
/// forced exploration.
pub fn ucb_index(mean: f64, n: u64, t: u64) -> f64 {
    debug_assert!(n >= 1 && t >= 1);
    mean + confidence_width(n, t)
}

/// `sqrt(2 ln t / n)`.
pub fn confidence_width(n: u64, t: u64) -> f64 {
    (2.0 * (t as f64).ln() / n as f64).sqrt()
}

/// Ratio of the observer's sample mean to a peer's, or `None` when the peer
/// mean is zero or not finite.
pub fn estimate_distortion(own_mean: f64, peer_mean: f64) -> Option<f64> {
    let d = own_mean / peer_mean;
    (peer_mean != 0.0 && d.is_finite()).then_some(d)
}

/// Pooled index: `numerator / mean_count + sqrt(2 ln t / width_count)`.
///
/// `mean_count` counts the samples behind `numerator`; `width_count` is the
/// raw pooled count across all users, which may include peer samples that
/// could not be converted.
pub fn pooled_index(numerator: f64, mean_count: u64, width_count: u64, t: u64) -> f64 {
    debug_assert!(mean_count >= 1 && width_count >= mean_count);
    numerator / mean_count as f64 + confidence_width(width_count, t)
}

/// Fraction of all selections that went to each option; uniform when nothing
/// has been selected yet.
pub fn group_frequency(counts: &[u64]) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return vec![1.0 / counts.len() as f64; counts.len()];
    }
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

/// `r - α (1 - β) sqrt(ln t / t) + sqrt(2 ln t / n)`.
pub fn part_info_index(mean: f64, n: u64, beta: f64, t: u64, alpha: f64) -> f64 {
    let lt = (t as f64).ln();
    mean - alpha * (1.0 - beta) * (lt / t as f64).sqrt() + confidence_width(n, t)
}

/// β^i_j = Σ_k (n^k_j)^{ω_k} / Σ_m Σ_k (n^k_m)^{ω_k}, with `0^ω = 0`.
///
/// `counts[k]` is user k's per-option decision counts and `weights[k]` its
/// exponent. All-zero counts give the uniform vector.
pub fn weighted_group_frequency(counts: &[&[u64]], weights: &[f64]) -> Vec<f64> {
    assert_eq!(counts.len(), weights.len());
    let n = counts.first().map_or(0, |c| c.len());
    let mut mass = vec![0.0; n];
    for (row, &w) in counts.iter().zip(weights) {
        for (m, &c) in mass.iter_mut().zip(row.iter()) {
            if c > 0 {
                *m += (c as f64).powf(w);
            }
        }
    }
    let total: f64 = mass.iter().sum();
    if total == 0.0 {
        return vec![1.0 / n as f64; n];
    }
    mass.iter().map(|m| m / total).collect()
}

/// Indices of the `k` largest values, ties broken uniformly at random.
/// Returned ascending.
///
/// Options that still need a first own sample should carry `f64::INFINITY`,
/// which puts them ahead of every finite index.
pub fn select_actions<R: Rng + ?Sized>(indices: &[f64], k: usize, rng: &mut R) -> Vec<OptionId> {
    assert!(k <= indices.len(), "k = {k} exceeds {} options", indices.len());
    let mut order: Vec<OptionId> = (0..indices.len()).collect();
    order.shuffle(rng);
    order.sort_by(|&a, &b| indices[b].total_cmp(&indices[a]));
    let mut chosen = order[..k].to_vec();
    chosen.sort_unstable();
    chosen
}

/// The user's true top-K set.
pub fn oracle_actions(profile: &PreferenceProfile, user: UserId) -> Vec<OptionId> {
    profile.top_set(user).to_vec()
}
