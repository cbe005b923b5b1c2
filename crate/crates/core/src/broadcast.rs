//! Shared record of everyone's decisions and, when the disclosure regime
//! allows it, their realized rewards.
//!
//! A step is complete once every user has published for it; completing a step
//! releases any rewards whose disclosure time has come.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::env::{OptionId, UserId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Disclosure {
    /// Decisions and rewards are visible at the end of the step they occur.
    #[serde(rename = "full")]
    FullPerStep,
    /// Rewards from steps `((m-1)L, mL]` become visible together at step `mL`.
    FullPeriodic { period: u64 },
    /// Decisions only.
    Partial,
}

impl Disclosure {
    pub fn shares_rewards(self) -> bool {
        !matches!(self, Disclosure::Partial)
    }

    /// Step at which a reward realized at `step` becomes visible to peers.
    pub fn release_step(self, step: u64) -> Option<u64> {
        match self {
            Disclosure::FullPerStep => Some(step),
            Disclosure::FullPeriodic { period } => Some(step.div_ceil(period) * period),
            Disclosure::Partial => None,
        }
    }

    pub fn visible_at(self, step: u64, t: u64) -> bool {
        self.release_step(step).is_some_and(|r| r <= t)
    }

    pub fn validate(self) -> Result<()> {
        match self {
            Disclosure::FullPeriodic { period: 0 } => {
                Err(Error::config("disclosure.period", "must be at least 1"))
            }
            _ => Ok(()),
        }
    }
}

/// A peer reward becoming visible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Release {
    /// Step at which the reward was realized.
    pub step: u64,
    pub user: UserId,
    pub option: OptionId,
    pub value: f64,
}

/// One step's decisions, `k` slots per user.
#[derive(Debug, Clone, Default)]
struct StepRecord {
    actions: Vec<OptionId>,
    rewards: Vec<f64>,
    published: Vec<bool>,
    released: Vec<Release>,
}

impl StepRecord {
    fn complete(&self) -> bool {
        self.published.iter().all(|&p| p)
    }

    fn entry(&self, user: UserId, k: usize) -> Option<(&[OptionId], &[f64])> {
        let span = user * k..(user + 1) * k;
        self.published[user].then(|| (&self.actions[span.clone()], &self.rewards[span]))
    }

    fn entries(&self, k: usize) -> impl Iterator<Item = (UserId, &[OptionId], &[f64])> {
        (0..self.published.len()).filter_map(move |u| self.entry(u, k).map(|(a, r)| (u, a, r)))
    }
}

/// Cumulative per-(user, option) statistics.
#[derive(Debug, Clone, PartialEq)]
struct Tally {
    options: usize,
    counts: Vec<u64>,
    sums: Vec<f64>,
}

impl Tally {
    fn new(users: usize, options: usize) -> Self {
        Tally {
            options,
            counts: vec![0; users * options],
            sums: vec![0.0; users * options],
        }
    }

    fn add(&mut self, user: UserId, option: OptionId, value: f64) {
        let idx = user * self.options + option;
        self.counts[idx] += 1;
        self.sums[idx] += value;
    }
}

#[derive(Debug, Clone)]
pub struct BroadcastLog {
    disclosure: Disclosure,
    users: usize,
    options: usize,
    k: usize,
    steps: Vec<StepRecord>,
    /// Counts of decisions and sums of every realized reward, visible or not.
    raw: Tally,
    /// Statistics of rewards released so far.
    released: Tally,
    pending: Vec<Release>,
}

impl BroadcastLog {
    pub fn new(disclosure: Disclosure, users: usize, options: usize, k: usize) -> Self {
        BroadcastLog {
            disclosure,
            users,
            options,
            k,
            steps: Vec::new(),
            raw: Tally::new(users, options),
            released: Tally::new(users, options),
            pending: Vec::new(),
        }
    }

    pub fn disclosure(&self) -> Disclosure {
        self.disclosure
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn options(&self) -> usize {
        self.options
    }

    /// Last step every user has published for.
    pub fn completed(&self) -> u64 {
        match self.steps.last() {
            Some(rec) if rec.complete() => self.steps.len() as u64,
            _ => self.steps.len().saturating_sub(1) as u64,
        }
    }

    /// Records `user`'s actions and the rewards realized for them at step `t`.
    ///
    /// Steps are published in lockstep: `t` must be the step after the last
    /// completed one.
    pub fn publish(
        &mut self,
        t: u64,
        user: UserId,
        actions: &[OptionId],
        rewards: &[f64],
    ) -> Result<()> {
        if user >= self.users {
            return Err(Error::InvalidActions {
                user,
                reason: format!("user out of range (M = {})", self.users),
            });
        }
        self.check_actions(user, actions)?;
        if rewards.len() != actions.len() {
            return Err(Error::InvalidActions {
                user,
                reason: "rewards must align with actions".into(),
            });
        }
        let next = self.completed() + 1;
        if t != next {
            return Err(Error::InvalidActions {
                user,
                reason: format!("publish for step {t} while step {next} is open"),
            });
        }
        if self.steps.len() < t as usize {
            self.steps.push(StepRecord {
                actions: vec![0; self.users * self.k],
                rewards: vec![0.0; self.users * self.k],
                published: vec![false; self.users],
                released: Vec::new(),
            });
        }
        let k = self.k;
        let rec = self.steps.last_mut().expect("step record exists");
        if rec.published[user] {
            return Err(Error::DuplicatePublish { user, step: t });
        }
        rec.published[user] = true;
        rec.actions[user * k..(user + 1) * k].copy_from_slice(actions);
        rec.rewards[user * k..(user + 1) * k].copy_from_slice(rewards);
        for (&option, &value) in actions.iter().zip(rewards) {
            self.raw.add(user, option, value);
            if self.disclosure.shares_rewards() {
                self.pending.push(Release {
                    step: t,
                    user,
                    option,
                    value,
                });
            }
        }
        if rec.complete() {
            self.complete_step(t);
        }
        Ok(())
    }

    fn check_actions(&self, user: UserId, actions: &[OptionId]) -> Result<()> {
        if actions.len() != self.k {
            return Err(Error::InvalidActions {
                user,
                reason: format!("expected {} actions, got {}", self.k, actions.len()),
            });
        }
        for (a, &x) in actions.iter().enumerate() {
            if x >= self.options {
                return Err(Error::InvalidActions {
                    user,
                    reason: format!("option {x} out of range"),
                });
            }
            if actions[..a].contains(&x) {
                return Err(Error::InvalidActions {
                    user,
                    reason: format!("option {x} chosen twice"),
                });
            }
        }
        Ok(())
    }

    fn complete_step(&mut self, t: u64) {
        let disclosure = self.disclosure;
        let mut due = Vec::new();
        self.pending.retain(|r| {
            let ready = disclosure.visible_at(r.step, t);
            if ready {
                due.push(*r);
            }
            !ready
        });
        for r in &due {
            self.released.add(r.user, r.option, r.value);
        }
        self.steps[t as usize - 1].released = due;
    }

    /// Rewards that became visible to peers when step `t` completed.
    pub fn releases_at(&self, t: u64) -> &[Release] {
        match t {
            0 => &[],
            _ => self
                .steps
                .get(t as usize - 1)
                .map_or(&[][..], |r| r.released.as_slice()),
        }
    }

    pub fn actions(&self, t: u64, user: UserId) -> Option<&[OptionId]> {
        let rec = self.steps.get((t as usize).checked_sub(1)?)?;
        rec.entry(user, self.k).map(|(a, _)| a)
    }

    pub fn rewards(&self, t: u64, user: UserId) -> Option<&[f64]> {
        let rec = self.steps.get((t as usize).checked_sub(1)?)?;
        rec.entry(user, self.k).map(|(_, r)| r)
    }

    /// Decision count n^k_j through the last completed step.
    pub fn decision_count(&self, user: UserId, option: OptionId) -> u64 {
        self.raw.counts[user * self.options + option]
    }

    /// Sum of every reward `user` realized from `option`, disclosed or not.
    /// Only the simulation loop and centralized baselines should read this.
    pub fn raw_sum(&self, user: UserId, option: OptionId) -> f64 {
        self.raw.sums[user * self.options + option]
    }

    /// Decision counts of `user` for every option.
    pub fn decision_counts(&self, user: UserId) -> &[u64] {
        self.user_row(&self.raw.counts, user)
    }

    /// Total decisions per option across all users.
    pub fn pooled_counts(&self) -> Vec<u64> {
        (0..self.options)
            .map(|j| (0..self.users).map(|k| self.decision_count(k, j)).sum())
            .collect()
    }

    /// What `observer` can see at step `t`.
    ///
    /// For the last completed step this reads the cached cumulative statistics;
    /// earlier steps are rebuilt from the history.
    pub fn peer_view(&self, t: u64, observer: UserId) -> PeerView {
        let shares = self.disclosure.shares_rewards();
        if t == self.completed() {
            let (counts, sums) = if shares {
                (Some(self.released.counts.clone()), Some(self.released.sums.clone()))
            } else {
                (None, None)
            };
            return PeerView {
                observer,
                t,
                users: self.users,
                options: self.options,
                decisions: self.raw.counts.clone(),
                own_sums: self.user_row(&self.raw.sums, observer).to_vec(),
                released_counts: counts,
                released_sums: sums,
            };
        }
        let t = t.min(self.completed());
        let mut raw = Tally::new(self.users, self.options);
        let mut released = Tally::new(self.users, self.options);
        for (s, rec) in self.steps.iter().take(t as usize).enumerate() {
            let step = s as u64 + 1;
            for (u, acts, rewards) in rec.entries(self.k) {
                for (&j, &x) in acts.iter().zip(rewards) {
                    raw.add(u, j, x);
                    if self.disclosure.visible_at(step, t) {
                        released.add(u, j, x);
                    }
                }
            }
        }
        PeerView {
            observer,
            t,
            users: self.users,
            options: self.options,
            own_sums: self.user_row(&raw.sums, observer).to_vec(),
            decisions: raw.counts,
            released_counts: shares.then(|| released.counts.clone()),
            released_sums: shares.then_some(released.sums),
        }
    }

    fn user_row<'a, T>(&self, data: &'a [T], user: UserId) -> &'a [T] {
        &data[user * self.options..(user + 1) * self.options]
    }

    /// Writes one CSV row per (t, user, option chosen).
    pub fn write_trace<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "user", "option", "reward", "disclosed"])?;
        let disclosed = if self.disclosure.shares_rewards() { "1" } else { "0" };
        for (s, rec) in self.steps.iter().enumerate() {
            for (u, acts, rewards) in rec.entries(self.k) {
                for (&j, &x) in acts.iter().zip(rewards) {
                    w.write_record([
                        (s + 1).to_string(),
                        u.to_string(),
                        j.to_string(),
                        crate::metrics::fmt_f64(x),
                        disclosed.to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Cumulative statistics visible to one observer.
#[derive(Debug, Clone, PartialEq)]
pub struct PeerView {
    observer: UserId,
    t: u64,
    users: usize,
    options: usize,
    decisions: Vec<u64>,
    own_sums: Vec<f64>,
    released_counts: Option<Vec<u64>>,
    released_sums: Option<Vec<f64>>,
}

impl PeerView {
    pub fn observer(&self) -> UserId {
        self.observer
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    /// n^k_j(t): decisions are always public.
    pub fn count(&self, user: UserId, option: OptionId) -> u64 {
        self.decisions[user * self.options + option]
    }

    pub fn counts_of(&self, user: UserId) -> &[u64] {
        &self.decisions[user * self.options..(user + 1) * self.options]
    }

    pub fn total_count(&self) -> u64 {
        self.decisions.iter().sum()
    }

    pub fn own_mean(&self, option: OptionId) -> Option<f64> {
        let n = self.count(self.observer, option);
        (n > 0).then(|| self.own_sums[option] / n as f64)
    }

    /// Number of `user`'s rewards from `option` visible to the observer.
    pub fn released_count(&self, user: UserId, option: OptionId) -> Result<u64> {
        if user == self.observer {
            return Ok(self.count(user, option));
        }
        self.released_counts
            .as_ref()
            .map(|c| c[user * self.options + option])
            .ok_or_else(|| Error::Disclosure(format!("reward counts of user {user} are withheld")))
    }

    /// Sample mean r^k_j(t) over `user`'s visible rewards, `None` before the
    /// first one.
    pub fn peer_mean(&self, user: UserId, option: OptionId) -> Result<Option<f64>> {
        if user == self.observer {
            return Ok(self.own_mean(option));
        }
        let (Some(counts), Some(sums)) = (&self.released_counts, &self.released_sums) else {
            return Err(Error::Disclosure(format!("reward means of user {user} are withheld")));
        };
        let idx = user * self.options + option;
        Ok((counts[idx] > 0).then(|| sums[idx] / counts[idx] as f64))
    }

    /// Sum of `user`'s rewards from `option` visible to the observer.
    pub fn released_sum(&self, user: UserId, option: OptionId) -> Result<f64> {
        if user == self.observer {
            return Ok(self.own_sums[option]);
        }
        self.released_sums
            .as_ref()
            .map(|s| s[user * self.options + option])
            .ok_or_else(|| Error::Disclosure(format!("reward sums of user {user} are withheld")))
    }

    pub fn shares_rewards(&self) -> bool {
        self.released_counts.is_some()
    }

    pub fn users(&self) -> usize {
        self.users
    }
}
