//! Weak regret, theoretical bound curves and ensemble statistics.

use serde::{Deserialize, Serialize};

use crate::env::{OptionId, PreferenceProfile, RewardModel, UserId};
use crate::error::{Error, Result};
use crate::policies::Algorithm;

/// Formats a float with 17 significant digits, enough to round-trip.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegretMode {
    /// Against the rewards actually drawn.
    Realized,
    /// Against the true means of the chosen options.
    Pseudo,
}

/// Cumulative weak regret of one user after each step.
///
/// `actions[s]` and `rewards[s]` are the options chosen at step `s + 1` and
/// the rewards they produced.
pub fn weak_regret(
    actions: &[Vec<OptionId>],
    rewards: &[Vec<f64>],
    model: &RewardModel,
    profile: &PreferenceProfile,
    user: UserId,
    mode: RegretMode,
) -> Vec<f64> {
    let best: f64 = profile.top_set(user).iter().map(|&j| model.mean(user, j)).sum();
    let mut total = 0.0;
    actions
        .iter()
        .zip(rewards)
        .map(|(a, x)| {
            let got: f64 = match mode {
                RegretMode::Pseudo => a.iter().map(|&j| model.mean(user, j)).sum(),
                RegretMode::Realized => x.iter().sum(),
            };
            total += best - got;
            total
        })
        .collect()
}

/// Parameters of a logarithmic regret bound
/// `Σ_j ⌈c · ln t / (m · Δ_j^e)⌉ + offset` over the user's suboptimal options.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    pub constant: f64,
    pub divisor: f64,
    pub exponent: u8,
    pub offset: f64,
}

impl BoundCurve {
    /// Bound for `algorithm` with `users` pooled users. `epsilon` is the slack
    /// in the `6 + ε` constant of the PART variants. `None` for the oracle,
    /// whose regret is identically zero.
    pub fn for_algorithm(algorithm: Algorithm, users: usize, exponent: u8, epsilon: f64) -> Option<Self> {
        let (constant, divisor) = match algorithm {
            Algorithm::Oracle => return None,
            Algorithm::UcbIndividual => (8.0, 1.0),
            Algorithm::UcbCentralized | Algorithm::UFull | Algorithm::DFull => (8.0, users as f64),
            Algorithm::UPart | Algorithm::DPart => (6.0 + epsilon, 1.0),
        };
        Some(BoundCurve {
            constant,
            divisor,
            exponent,
            offset: 0.0,
        })
    }

    pub fn value(&self, profile: &PreferenceProfile, user: UserId, t: u64) -> f64 {
        let lt = (t.max(1) as f64).ln();
        let sum: f64 = profile
            .complement(user)
            .into_iter()
            .filter_map(|j| profile.gap(user, j))
            .map(|gap| (self.constant * lt / (self.divisor * gap.powi(self.exponent as i32))).ceil())
            .sum();
        sum + self.offset
    }
}

/// The bound evaluated on `t_grid`; all zeros for the oracle.
pub fn bound_curve(
    profile: &PreferenceProfile,
    user: UserId,
    users: usize,
    algorithm: Algorithm,
    exponent: u8,
    epsilon: f64,
    t_grid: &[u64],
) -> Vec<f64> {
    match BoundCurve::for_algorithm(algorithm, users, exponent, epsilon) {
        Some(b) => t_grid.iter().map(|&t| b.value(profile, user, t)).collect(),
        None => vec![0.0; t_grid.len()],
    }
}

/// Constant offset minimizing squared error between `observed` and `bound`
/// over the second half of the grid.
pub fn fit_offset(observed: &[f64], bound: &[f64]) -> f64 {
    assert_eq!(observed.len(), bound.len());
    let start = observed.len() / 2;
    let diffs: Vec<f64> = observed[start..]
        .iter()
        .zip(&bound[start..])
        .map(|(o, b)| o - b)
        .collect();
    if diffs.is_empty() {
        return 0.0;
    }
    order_free_sum(&diffs) / diffs.len() as f64
}

/// One replication's regret series on a grid of steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    pub t: Vec<u64>,
    pub pseudo: Vec<f64>,
    pub realized: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateTrace {
    pub t: Vec<u64>,
    pub replications: usize,
    pub pseudo: MeanSe,
    pub realized: MeanSe,
}

/// Mean and standard error per grid point. The result does not depend on the
/// order of `traces`.
pub fn aggregate(traces: &[RegretTrace]) -> Result<AggregateTrace> {
    let first = traces
        .first()
        .ok_or_else(|| Error::GridMismatch("no replications to aggregate".into()))?;
    for (r, tr) in traces.iter().enumerate() {
        if tr.t != first.t || tr.pseudo.len() != tr.t.len() || tr.realized.len() != tr.t.len() {
            return Err(Error::GridMismatch(format!("replication {r} differs from replication 0")));
        }
    }
    let column = |pick: fn(&RegretTrace) -> &Vec<f64>| {
        let mut mean = Vec::with_capacity(first.t.len());
        let mut stderr = Vec::with_capacity(first.t.len());
        for i in 0..first.t.len() {
            let values: Vec<f64> = traces.iter().map(|tr| pick(tr)[i]).collect();
            let (m, s) = mean_stderr(&values);
            mean.push(m);
            stderr.push(s);
        }
        MeanSe { mean, stderr }
    };
    Ok(AggregateTrace {
        t: first.t.clone(),
        replications: traces.len(),
        pseudo: column(|tr| &tr.pseudo),
        realized: column(|tr| &tr.realized),
    })
}

/// Sample mean and standard error (`s / sqrt(n)`, zero for `n = 1`),
/// independent of input order.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = order_free_sum(values) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = order_free_sum(&sq) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Pairwise sum of the values after sorting them, so any permutation of the
/// input gives a bit-identical result.
pub fn order_free_sum(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    pairwise(&sorted)
}

fn pairwise(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2 => v[0] + v[1],
        n => pairwise(&v[..n / 2]) + pairwise(&v[n / 2..]),
    }
}
