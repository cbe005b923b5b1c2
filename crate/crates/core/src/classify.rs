//! Group-identity estimation from public choice frequencies.
//!
//! Each user's preferred set is guessed as its K most frequently chosen
//! options, then matched to the known group set with the largest overlap.
//! Only decision counts are used, so this works under partial disclosure.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use crate::env::{GroupId, GroupStructure, OptionId, UserId};

/// The `k` options with the highest counts, ties (including unobserved
/// options used as padding) broken uniformly at random. Returned ascending.
pub fn estimate_top_set<R: Rng + ?Sized>(counts: &[u64], k: usize, rng: &mut R) -> Vec<OptionId> {
    assert!(k <= counts.len());
    let mut order: Vec<OptionId> = (0..counts.len()).collect();
    order.shuffle(rng);
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]));
    let mut set = order[..k].to_vec();
    set.sort_unstable();
    set
}

/// Group whose known set shares the most options with `estimated`; ties
/// broken uniformly at random.
pub fn assign_group<R: Rng + ?Sized>(
    estimated: &[OptionId],
    group_sets: &[Vec<OptionId>],
    rng: &mut R,
) -> GroupId {
    assert!(!group_sets.is_empty(), "at least one group set is required");
    let overlap = |l: usize| {
        group_sets[l]
            .iter()
            .filter(|j| estimated.contains(j))
            .count()
    };
    let best = (0..group_sets.len()).map(overlap).max().unwrap_or(0);
    let tied: Vec<GroupId> = (0..group_sets.len()).filter(|&l| overlap(l) == best).collect();
    *tied.choose(rng).expect("non-empty tie set")
}

/// One observer's current estimate of every user's group, itself included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassifierState {
    observer: UserId,
    estimated_sets: Vec<Vec<OptionId>>,
    groups: Vec<GroupId>,
}

impl ClassifierState {
    pub fn new(observer: UserId, users: usize) -> Self {
        ClassifierState {
            observer,
            estimated_sets: vec![Vec::new(); users],
            groups: vec![0; users],
        }
    }

    /// Reclassifies every user from `counts_of(k)`.
    pub fn refresh<'a, F, R>(&mut self, counts_of: F, group_sets: &[Vec<OptionId>], k: usize, rng: &mut R)
    where
        F: Fn(UserId) -> &'a [u64],
        R: Rng + ?Sized,
    {
        for u in 0..self.groups.len() {
            let set = estimate_top_set(counts_of(u), k, rng);
            self.groups[u] = assign_group(&set, group_sets, rng);
            self.estimated_sets[u] = set;
        }
    }

    pub fn observer(&self) -> UserId {
        self.observer
    }

    pub fn group_of(&self, user: UserId) -> GroupId {
        self.groups[user]
    }

    pub fn estimated_set(&self, user: UserId) -> &[OptionId] {
        &self.estimated_sets[user]
    }

    /// Whether the observer currently places `user` in its own group.
    pub fn same_group(&self, user: UserId) -> bool {
        user == self.observer || self.groups[user] == self.groups[self.observer]
    }
}

/// Fraction of (observer, peer) pairs, peer ≠ observer, whose estimated
/// group differs from the truth. Zero when there are no pairs.
pub fn misclassification_rate(truth: &GroupStructure, states: &[ClassifierState]) -> f64 {
    let mut pairs = 0usize;
    let mut wrong = 0usize;
    for s in states {
        for peer in 0..truth.membership().len() {
            if peer == s.observer {
                continue;
            }
            pairs += 1;
            if s.group_of(peer) != truth.group_of(peer) {
                wrong += 1;
            }
        }
    }
    if pairs == 0 {
        0.0
    } else {
        wrong as f64 / pairs as f64
    }
}
