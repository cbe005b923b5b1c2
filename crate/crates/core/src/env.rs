//! Ground-truth world: per-user reward distributions, preference orderings and
//! the distortion structure linking users' valuations of the same option.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, Stream};

pub type OptionId = usize;
pub type UserId = usize;
pub type GroupId = usize;

/// Reward distribution family shared by every (user, option) pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    /// Exponential with the pair's mean.
    #[default]
    Exponential,
    /// Gaussian with the pair's mean and a fixed variance. Variance 0 is a
    /// point mass at the mean.
    Gaussian { variance: f64 },
}

/// How the per-(user, option) distortion scaling is drawn at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionConfig {
    /// Mean of the Gaussian scaling. Required: there is no sensible default.
    pub mean: f64,
    #[serde(default = "default_distortion_std")]
    pub std_dev: f64,
}

fn default_distortion_std() -> f64 {
    1.0
}

/// Which part of the group's ordering a distorted user must preserve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderRule {
    /// The full ranking of the group's base means.
    #[default]
    Full,
    /// Only the group's top-K set.
    TopK,
}

/// `false` disables clipping, `true` clips to `[0, 10 * max mean]`, a number
/// clips to `[0, bound]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClipSetting {
    Flag(bool),
    Bound(f64),
}

impl Default for ClipSetting {
    fn default() -> Self {
        ClipSetting::Flag(false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    /// Number of users M.
    pub users: usize,
    /// Number of options N.
    pub options: usize,
    /// Options chosen per step K.
    pub k: usize,
    /// Base means, one row of length N per group. G is the number of rows.
    pub group_means: Vec<Vec<f64>>,
    /// Group of each user; defaults to round-robin `user % G`.
    #[serde(default)]
    pub membership: Option<Vec<GroupId>>,
    pub distortion: DistortionConfig,
    #[serde(default)]
    pub family: Family,
    #[serde(default)]
    pub clip: ClipSetting,
    #[serde(default = "default_min_gap")]
    pub min_gap: f64,
    #[serde(default)]
    pub order: OrderRule,
    #[serde(default = "default_max_retries")]
    pub max_retries: usize,
}

fn default_min_gap() -> f64 {
    1e-6
}

fn default_max_retries() -> usize {
    10_000
}

impl WorldConfig {
    pub fn groups(&self) -> usize {
        self.group_means.len()
    }

    pub fn membership(&self) -> Vec<GroupId> {
        match &self.membership {
            Some(m) => m.clone(),
            None => (0..self.users).map(|u| u % self.groups().max(1)).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.users == 0 {
            return Err(Error::config("world.users", "must be at least 1"));
        }
        if self.options == 0 {
            return Err(Error::config("world.options", "must be at least 1"));
        }
        if self.k == 0 || self.k > self.options {
            return Err(Error::config(
                "world.k",
                format!("must satisfy 1 <= k <= options ({})", self.options),
            ));
        }
        if self.group_means.is_empty() {
            return Err(Error::config("world.group_means", "at least one group is required"));
        }
        for (g, row) in self.group_means.iter().enumerate() {
            let field = format!("world.group_means[{g}]");
            if row.len() != self.options {
                return Err(Error::config(
                    field,
                    format!("expected {} means, got {}", self.options, row.len()),
                ));
            }
            if row.iter().any(|&m| !(m.is_finite() && m > 0.0)) {
                return Err(Error::config(field, "means must be finite and positive"));
            }
            if min_pairwise_gap(row) < self.min_gap {
                return Err(Error::config(field, "means must be pairwise distinct"));
            }
        }
        let sets: Vec<Vec<OptionId>> = self.group_means.iter().map(|r| top_k(r, self.k)).collect();
        for a in 0..sets.len() {
            for b in a + 1..sets.len() {
                if sets[a] == sets[b] {
                    return Err(Error::config(
                        "world.group_means",
                        format!("groups {a} and {b} share the same top-{} set", self.k),
                    ));
                }
            }
        }
        if let Some(m) = &self.membership {
            if m.len() != self.users {
                return Err(Error::config("world.membership", "length must equal users"));
            }
            if let Some(&g) = m.iter().find(|&&g| g >= self.groups()) {
                return Err(Error::config(
                    "world.membership",
                    format!("group {g} out of range"),
                ));
            }
        }
        if !(self.distortion.mean.is_finite() && self.distortion.std_dev >= 0.0) {
            return Err(Error::config("world.distortion", "mean must be finite, std_dev >= 0"));
        }
        if self.distortion.std_dev == 0.0 && self.distortion.mean <= 0.0 {
            return Err(Error::config("world.distortion.mean", "must be positive when std_dev is 0"));
        }
        if let Family::Gaussian { variance } = self.family {
            if !(variance >= 0.0 && variance.is_finite()) {
                return Err(Error::config("world.family.variance", "must be finite and >= 0"));
            }
        }
        if let ClipSetting::Bound(b) = self.clip {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::config("world.clip", "bound must be finite and positive"));
            }
        }
        Ok(())
    }
}

/// Per-(user, option) means and the pairwise distortion tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardModel {
    users: usize,
    options: usize,
    means: Vec<f64>,
    distortion: Vec<f64>,
    family: Family,
    clip: Option<f64>,
}

/// One reward draw, with whether clipping altered it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draw {
    pub value: f64,
    pub clipped: bool,
}

impl RewardModel {
    /// Builds a model from a user x option mean matrix; the distortion tensor is
    /// derived as the ratio of means.
    pub fn from_means(means: Vec<Vec<f64>>, family: Family, clip: Option<f64>) -> Self {
        let users = means.len();
        let options = means.first().map_or(0, Vec::len);
        let flat: Vec<f64> = means.into_iter().flatten().collect();
        let mut distortion = vec![0.0; users * users * options];
        for i in 0..users {
            for k in 0..users {
                for j in 0..options {
                    distortion[(i * users + k) * options + j] = if i == k {
                        1.0
                    } else {
                        flat[i * options + j] / flat[k * options + j]
                    };
                }
            }
        }
        RewardModel {
            users,
            options,
            means: flat,
            distortion,
            family,
            clip,
        }
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn options(&self) -> usize {
        self.options
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn clip_bound(&self) -> Option<f64> {
        self.clip
    }

    pub fn mean(&self, user: UserId, option: OptionId) -> f64 {
        self.means[user * self.options + option]
    }

    pub fn user_means(&self, user: UserId) -> &[f64] {
        &self.means[user * self.options..(user + 1) * self.options]
    }

    /// True distortion δ^{i,k}_j = μ^i_j / μ^k_j.
    pub fn distortion(&self, i: UserId, k: UserId, option: OptionId) -> f64 {
        self.distortion[(i * self.users + k) * self.options + option]
    }

    pub fn draw<R: Rng + ?Sized>(&self, user: UserId, option: OptionId, rng: &mut R) -> Draw {
        let mean = self.mean(user, option);
        let raw = match self.family {
            Family::Exponential => {
                let e: f64 = rng.sample(Exp1);
                e * mean
            }
            Family::Gaussian { variance } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + variance.sqrt() * z
            }
        };
        match self.clip {
            Some(bound) => {
                let value = raw.clamp(0.0, bound);
                Draw {
                    value,
                    clipped: value != raw,
                }
            }
            None => Draw {
                value: raw,
                clipped: false,
            },
        }
    }
}

/// One draw from user `user`'s distribution for `option`.
///
/// Panics if either identifier is out of range.
pub fn sample_reward<R: Rng + ?Sized>(
    model: &RewardModel,
    user: UserId,
    option: OptionId,
    rng: &mut R,
) -> f64 {
    assert!(user < model.users, "user {user} out of range");
    assert!(option < model.options, "option {option} out of range");
    model.draw(user, option, rng).value
}

/// Per-user rankings, top-K sets and gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceProfile {
    k: usize,
    ranked: Vec<Vec<OptionId>>,
    top: Vec<Vec<OptionId>>,
    gaps: Vec<Vec<f64>>,
}

impl PreferenceProfile {
    pub fn from_model(model: &RewardModel, k: usize) -> Self {
        let mut ranked = Vec::with_capacity(model.users());
        let mut top = Vec::with_capacity(model.users());
        let mut gaps = Vec::with_capacity(model.users());
        for i in 0..model.users() {
            let means = model.user_means(i);
            let order = ranking(means);
            let kth = means[order[k - 1]];
            let mut set = order[..k].to_vec();
            set.sort_unstable();
            gaps.push(
                means
                    .iter()
                    .enumerate()
                    .map(|(j, &m)| if set.contains(&j) { 0.0 } else { kth - m })
                    .collect(),
            );
            ranked.push(order);
            top.push(set);
        }
        PreferenceProfile { k, ranked, top, gaps }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn users(&self) -> usize {
        self.top.len()
    }

    /// Options ordered from best to worst for `user`.
    pub fn ranked(&self, user: UserId) -> &[OptionId] {
        &self.ranked[user]
    }

    /// N^i_K, sorted ascending.
    pub fn top_set(&self, user: UserId) -> &[OptionId] {
        &self.top[user]
    }

    /// Ω \ N^i_K, sorted ascending.
    pub fn complement(&self, user: UserId) -> Vec<OptionId> {
        let n = self.ranked[user].len();
        (0..n).filter(|j| !self.top[user].contains(j)).collect()
    }

    /// Δ^i_j = μ^i_K − μ^i_j for j outside the top set; `None` inside it.
    pub fn gap(&self, user: UserId, option: OptionId) -> Option<f64> {
        if self.top[user].contains(&option) {
            None
        } else {
            Some(self.gaps[user][option])
        }
    }

    pub fn is_uniform(&self) -> bool {
        self.top.windows(2).all(|w| w[0] == w[1])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupStructure {
    sets: Vec<Vec<OptionId>>,
    membership: Vec<GroupId>,
}

impl GroupStructure {
    pub fn new(sets: Vec<Vec<OptionId>>, membership: Vec<GroupId>) -> Self {
        let sets = sets
            .into_iter()
            .map(|mut s| {
                s.sort_unstable();
                s
            })
            .collect();
        GroupStructure { sets, membership }
    }

    pub fn groups(&self) -> usize {
        self.sets.len()
    }

    /// Known preferred set N^l_K of every group, each sorted ascending.
    pub fn sets(&self) -> &[Vec<OptionId>] {
        &self.sets
    }

    pub fn group_of(&self, user: UserId) -> GroupId {
        self.membership[user]
    }

    pub fn membership(&self) -> &[GroupId] {
        &self.membership
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub model: RewardModel,
    pub profile: PreferenceProfile,
    pub groups: GroupStructure,
}

/// Constructs a world satisfying the linear valuation model exactly.
///
/// Every user's means are its group's base means scaled per option by a
/// positive Gaussian draw. A user's scaling is redrawn whole until its means
/// are pairwise distinct and respect the configured [`OrderRule`].
pub fn build_world(config: &WorldConfig, seed: u64) -> Result<World> {
    config.validate()?;
    let mut rng = stream(seed, Stream::World);
    let membership = config.membership();
    let base_order: Vec<Vec<OptionId>> = config.group_means.iter().map(|r| ranking(r)).collect();
    let group_sets: Vec<Vec<OptionId>> =
        config.group_means.iter().map(|r| top_k(r, config.k)).collect();

    let mut means = Vec::with_capacity(config.users);
    for &g in &membership {
        let base = &config.group_means[g];
        let mut accepted = None;
        for _ in 0..config.max_retries {
            let mut row = Vec::with_capacity(config.options);
            for &b in base {
                row.push(positive_scale(&config.distortion, config.max_retries, &mut rng)? * b);
            }
            let ordered = match config.order {
                OrderRule::Full => ranking(&row) == base_order[g],
                OrderRule::TopK => top_k(&row, config.k) == group_sets[g],
            };
            if ordered && min_pairwise_gap(&row) >= config.min_gap {
                accepted = Some(row);
                break;
            }
        }
        match accepted {
            Some(row) => means.push(row),
            None => {
                return Err(Error::WorldConstruction {
                    attempts: config.max_retries,
                    reason: format!("could not draw distorted means for a user of group {g} preserving its ordering"),
                })
            }
        }
    }

    let clip = match config.clip {
        ClipSetting::Flag(false) => None,
        ClipSetting::Flag(true) => {
            Some(10.0 * means.iter().flatten().cloned().fold(f64::MIN, f64::max))
        }
        ClipSetting::Bound(b) => Some(b),
    };
    let model = RewardModel::from_means(means, config.family, clip);
    let profile = PreferenceProfile::from_model(&model, config.k);
    let groups = GroupStructure::new(group_sets, membership);
    Ok(World {
        model,
        profile,
        groups,
    })
}

fn positive_scale<R: Rng + ?Sized>(cfg: &DistortionConfig, retries: usize, rng: &mut R) -> Result<f64> {
    if cfg.std_dev == 0.0 {
        return Ok(cfg.mean);
    }
    for _ in 0..retries {
        let z: f64 = rng.sample(StandardNormal);
        let s = cfg.mean + cfg.std_dev * z;
        if s > 0.0 {
            return Ok(s);
        }
    }
    Err(Error::WorldConstruction {
        attempts: retries,
        reason: "distortion draws never came out positive".into(),
    })
}

/// Indices sorted by decreasing value. Ties keep index order.
pub(crate) fn ranking(values: &[f64]) -> Vec<OptionId> {
    let mut idx: Vec<OptionId> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    idx
}

/// The `k` largest entries' indices, sorted ascending.
pub(crate) fn top_k(values: &[f64], k: usize) -> Vec<OptionId> {
    let mut set = ranking(values)[..k].to_vec();
    set.sort_unstable();
    set
}

fn min_pairwise_gap(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min)
}
