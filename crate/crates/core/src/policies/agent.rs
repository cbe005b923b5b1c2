use rand::Rng;

use super::index::{
    estimate_distortion, group_frequency, part_info_index, pooled_index, select_actions, ucb_index,
    weighted_group_frequency,
};
use super::{Algorithm, PolicyConfig};
use crate::broadcast::{BroadcastLog, PeerView};
use crate::classify::ClassifierState;
use crate::env::{OptionId, UserId, World};
use crate::error::{Error, Result};

/// Read-only inputs shared by every agent during one step.
#[derive(Clone, Copy)]
pub struct Context<'a> {
    pub world: &'a World,
    pub log: &'a BroadcastLog,
    pub config: &'a PolicyConfig,
}

/// One user's learning state.
#[derive(Debug, Clone)]
pub struct Agent {
    user: UserId,
    algorithm: Algorithm,
    users: usize,
    options: usize,
    k: usize,
    counts: Vec<u64>,
    sums: Vec<f64>,
    /// Σ δ̃(m)·X over peer rewards converted at arrival, indexed
    /// `[k * options + j]`.
    converted_sum: Vec<f64>,
    converted_count: Vec<u64>,
    /// Latest δ̃^{i,k}_j, indexed `[k * options + j]`.
    distortion: Vec<Option<f64>>,
    classifier: Option<ClassifierState>,
}

impl Agent {
    pub fn new(user: UserId, algorithm: Algorithm, users: usize, options: usize, k: usize) -> Self {
        Agent {
            user,
            algorithm,
            users,
            options,
            k,
            counts: vec![0; options],
            sums: vec![0.0; options],
            converted_sum: vec![0.0; users * options],
            converted_count: vec![0; users * options],
            distortion: vec![None; users * options],
            classifier: (algorithm == Algorithm::DPart).then(|| ClassifierState::new(user, users)),
        }
    }

    pub fn user(&self) -> UserId {
        self.user
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn count(&self, option: OptionId) -> u64 {
        self.counts[option]
    }

    pub fn sum(&self, option: OptionId) -> f64 {
        self.sums[option]
    }

    /// r^i_j, defined once the option has been sampled.
    pub fn mean(&self, option: OptionId) -> Option<f64> {
        (self.counts[option] > 0).then(|| self.sums[option] / self.counts[option] as f64)
    }

    /// Σ_m δ̃^{i,k}_j(m) X^k_j(m) over all peers and how many peer rewards it
    /// covers.
    pub fn converted(&self, option: OptionId) -> (f64, u64) {
        (0..self.users).fold((0.0, 0), |(s, n), k| {
            let (a, b) = self.converted_from(k, option);
            (s + a, n + b)
        })
    }

    /// The same sum restricted to rewards from `peer`.
    pub fn converted_from(&self, peer: UserId, option: OptionId) -> (f64, u64) {
        let i = peer * self.options + option;
        (self.converted_sum[i], self.converted_count[i])
    }

    pub fn distortion_estimate(&self, peer: UserId, option: OptionId) -> Option<f64> {
        self.distortion[peer * self.options + option]
    }

    pub fn classifier(&self) -> Option<&ClassifierState> {
        self.classifier.as_ref()
    }

    /// Index of every option at step `t`, from information through `t - 1`.
    /// Options without an own sample get `+inf` so they are forced in.
    ///
    /// D_PART reclassifies all users here, drawing tie-breaks from `class_rng`.
    pub fn indices<R: Rng + ?Sized>(
        &mut self,
        ctx: &Context<'_>,
        t: u64,
        class_rng: &mut R,
    ) -> Result<Vec<f64>> {
        let mut out = vec![f64::INFINITY; self.options];
        match self.algorithm {
            Algorithm::Oracle => {
                for &j in ctx.world.profile.top_set(self.user) {
                    out[j] = 1.0;
                }
                for j in ctx.world.profile.complement(self.user) {
                    out[j] = 0.0;
                }
            }
            Algorithm::UcbIndividual => {
                for (j, slot) in out.iter_mut().enumerate() {
                    if let Some(r) = self.mean(j) {
                        *slot = ucb_index(r, self.counts[j], t);
                    }
                }
            }
            Algorithm::UcbCentralized => {
                let model = &ctx.world.model;
                for (j, slot) in out.iter_mut().enumerate() {
                    if self.counts[j] == 0 {
                        continue;
                    }
                    let mut numerator = 0.0;
                    let mut n = 0;
                    for u in 0..self.users {
                        numerator += model.distortion(self.user, u, j) * ctx.log.raw_sum(u, j);
                        n += ctx.log.decision_count(u, j);
                    }
                    *slot = pooled_index(numerator, n, n, t);
                }
            }
            Algorithm::UFull | Algorithm::DFull => {
                let view = ctx.log.peer_view(t - 1, self.user);
                for (j, slot) in out.iter_mut().enumerate() {
                    *slot = full_info_index(self, &view, j, t, ctx.config)?;
                }
            }
            Algorithm::UPart => {
                let beta = group_frequency(&ctx.log.pooled_counts());
                self.part_indices(&mut out, &beta, t, ctx.config.alpha);
            }
            Algorithm::DPart => {
                let view = ctx.log.peer_view(t - 1, self.user);
                let classifier = self.classifier.as_mut().expect("D_PART agent has a classifier");
                classifier.refresh(|u| view.counts_of(u), ctx.world.groups.sets(), self.k, class_rng);
                let rows: Vec<&[u64]> = (0..self.users).map(|u| view.counts_of(u)).collect();
                let weights: Vec<f64> = (0..self.users)
                    .map(|u| if classifier.same_group(u) { 1.0 } else { ctx.config.omega_cross })
                    .collect();
                let beta = weighted_group_frequency(&rows, &weights);
                self.part_indices(&mut out, &beta, t, ctx.config.alpha);
            }
        }
        Ok(out)
    }

    fn part_indices(&self, out: &mut [f64], beta: &[f64], t: u64, alpha: f64) {
        for (j, slot) in out.iter_mut().enumerate() {
            if let Some(r) = self.mean(j) {
                *slot = part_info_index(r, self.counts[j], beta[j], t, alpha);
            }
        }
    }

    /// Chooses this user's K options for step `t`.
    pub fn act<R1: Rng + ?Sized, R2: Rng + ?Sized>(
        &mut self,
        ctx: &Context<'_>,
        t: u64,
        action_rng: &mut R1,
        class_rng: &mut R2,
    ) -> Result<Vec<OptionId>> {
        if self.algorithm == Algorithm::Oracle {
            return Ok(ctx.world.profile.top_set(self.user).to_vec());
        }
        let idx = self.indices(ctx, t, class_rng)?;
        Ok(select_actions(&idx, self.k, action_rng))
    }

    /// Folds in everything that became known when step `t` completed: the
    /// user's own rewards and, under reward disclosure, newly released peer
    /// rewards converted with the current distortion estimates.
    pub fn observe(&mut self, ctx: &Context<'_>, t: u64) -> Result<()> {
        let log = ctx.log;
        let actions = log
            .actions(t, self.user)
            .ok_or_else(|| Error::InvalidActions {
                user: self.user,
                reason: format!("no actions published at step {t}"),
            })?;
        let rewards = log.rewards(t, self.user).expect("rewards accompany actions");
        for (&j, &x) in actions.iter().zip(rewards) {
            self.counts[j] += 1;
            self.sums[j] += x;
        }
        if !self.algorithm.is_full() || !log.disclosure().shares_rewards() {
            return Ok(());
        }
        let view = log.peer_view(t, self.user);
        for k in (0..self.users).filter(|&k| k != self.user) {
            for j in 0..self.options {
                self.distortion[k * self.options + j] = self.current_distortion(&view, k, j, ctx.config)?;
            }
        }
        if ctx.config.retroactive_conversion {
            return Ok(());
        }
        for r in log.releases_at(t).iter().filter(|r| r.user != self.user) {
            let i = r.user * self.options + r.option;
            if let Some(d) = self.distortion[i] {
                self.converted_sum[i] += d * r.value;
                self.converted_count[i] += 1;
            }
        }
        Ok(())
    }

    fn current_distortion(
        &self,
        view: &PeerView,
        peer: UserId,
        option: OptionId,
        config: &PolicyConfig,
    ) -> Result<Option<f64>> {
        if let Some(p) = config.pinned_distortion {
            return Ok(Some(p));
        }
        let (Some(own), Some(theirs)) = (self.mean(option), view.peer_mean(peer, option)?) else {
            return Ok(None);
        };
        Ok(estimate_distortion(own, theirs))
    }
}

/// Pooled index over own rewards and converted peer rewards.
///
/// The mean covers own samples plus every peer sample that had a distortion
/// estimate when it was converted; the confidence width uses the raw count of
/// visible samples. With `cap_peer_samples` each peer contributes at most
/// `n^i_j` samples: its converted mean keeps full weight up to that count.
/// Returns `+inf` for an option the agent has not sampled itself, and a
/// disclosure error when peer rewards are withheld.
pub fn full_info_index(
    agent: &Agent,
    view: &PeerView,
    option: OptionId,
    t: u64,
    config: &PolicyConfig,
) -> Result<f64> {
    if !view.shares_rewards() {
        return Err(Error::Disclosure(
            "pooled index needs disclosed peer rewards".into(),
        ));
    }
    let own_n = agent.count(option);
    if own_n == 0 {
        return Ok(f64::INFINITY);
    }
    let cap = |n: u64| if config.cap_peer_samples { n.min(own_n) } else { n };
    let mut width_n = own_n;
    let mut numerator = agent.sum(option);
    let mut mean_n = own_n;
    for k in (0..view.users()).filter(|&k| k != agent.user) {
        let released = view.released_count(k, option)?;
        width_n += cap(released);
        let (sum, n) = if config.retroactive_conversion {
            match agent.current_distortion(view, k, option, config)? {
                Some(d) => (d * view.released_sum(k, option)?, released),
                None => (0.0, 0),
            }
        } else {
            agent.converted_from(k, option)
        };
        let used = cap(n);
        if used == n {
            numerator += sum;
        } else {
            numerator += sum * used as f64 / n as f64;
        }
        mean_n += used;
    }
    Ok(pooled_index(numerator, mean_n, width_n, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::broadcast::Disclosure;
    use crate::policies::confidence_width;
    use crate::env::{build_world, ClipSetting, DistortionConfig, Family, OrderRule, WorldConfig};

    fn world(users: usize) -> World {
        build_world(
            &WorldConfig {
                users,
                options: 2,
                k: 1,
                group_means: vec![vec![2.0, 1.0]],
                membership: None,
                distortion: DistortionConfig { mean: 1.0, std_dev: 0.0 },
                family: Family::Exponential,
                clip: ClipSetting::default(),
                min_gap: 1e-6,
                order: OrderRule::Full,
                max_retries: 10,
            },
            0,
        )
        .unwrap()
    }

    #[test]
    fn two_sample_pooling() {
        // own sample 2.0, peer sample 1.0, δ̃ pinned to 2.0
        let w = world(2);
        let config = PolicyConfig { pinned_distortion: Some(2.0), ..Default::default() };
        let mut log = BroadcastLog::new(Disclosure::FullPerStep, 2, 2, 1);
        log.publish(1, 0, &[0], &[2.0]).unwrap();
        log.publish(1, 1, &[0], &[1.0]).unwrap();
        let mut agent = Agent::new(0, Algorithm::UFull, 2, 2, 1);
        let ctx = Context { world: &w, log: &log, config: &config };
        agent.observe(&ctx, 1).unwrap();
        let view = log.peer_view(1, 0);
        assert_eq!(full_info_index(&agent, &view, 0, 1, &config).unwrap(), 2.0);
        assert_eq!(full_info_index(&agent, &view, 1, 1, &config).unwrap(), f64::INFINITY);
    }

    #[test]
    fn peer_samples_capped_at_own_count() {
        let w = world(2);
        let mut log = BroadcastLog::new(Disclosure::FullPerStep, 2, 2, 1);
        let mut agents = [true, false].map(|cap| {
            let config = PolicyConfig { pinned_distortion: Some(2.0), cap_peer_samples: cap, ..Default::default() };
            (Agent::new(0, Algorithm::UFull, 2, 2, 1), config)
        });
        for (t, own, peer) in [(1, (0, 2.0), 1.0), (2, (1, 0.5), 2.0), (3, (1, 0.5), 3.0)] {
            log.publish(t, 0, &[own.0], &[own.1]).unwrap();
            log.publish(t, 1, &[0], &[peer]).unwrap();
            for (agent, config) in agents.iter_mut() {
                agent.observe(&Context { world: &w, log: &log, config }, t).unwrap();
            }
        }
        let view = log.peer_view(3, 0);
        let t = 4;
        // one own sample and three converted peer samples worth 12 in total
        let (capped, config) = &agents[0];
        let want = (2.0 + 12.0 / 3.0) / 2.0 + confidence_width(2, t);
        assert!((full_info_index(capped, &view, 0, t, config).unwrap() - want).abs() < 1e-12);
        let (plain, config) = &agents[1];
        let want = (2.0 + 12.0) / 4.0 + confidence_width(4, t);
        assert!((full_info_index(plain, &view, 0, t, config).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn estimated_distortion_converts_peer_rewards() {
        let w = world(2);
        let config = PolicyConfig::default();
        let mut log = BroadcastLog::new(Disclosure::FullPerStep, 2, 2, 1);
        log.publish(1, 0, &[0], &[3.0]).unwrap();
        log.publish(1, 1, &[0], &[1.5]).unwrap();
        let mut agent = Agent::new(0, Algorithm::UFull, 2, 2, 1);
        let ctx = Context { world: &w, log: &log, config: &config };
        agent.observe(&ctx, 1).unwrap();
        assert_eq!(agent.distortion_estimate(1, 0), Some(2.0));
        assert_eq!(agent.distortion_estimate(1, 1), None);
        assert_eq!(agent.converted(0), (3.0, 1));
    }

    #[test]
    fn unavailable_estimate_only_widens() {
        // the peer sampled option 1 before the observer did
        let w = world(2);
        let config = PolicyConfig::default();
        let mut log = BroadcastLog::new(Disclosure::FullPerStep, 2, 2, 1);
        log.publish(1, 0, &[0], &[3.0]).unwrap();
        log.publish(1, 1, &[1], &[1.0]).unwrap();
        let mut agent = Agent::new(0, Algorithm::UFull, 2, 2, 1);
        agent.observe(&Context { world: &w, log: &log, config: &config }, 1).unwrap();
        log.publish(2, 0, &[1], &[0.5]).unwrap();
        log.publish(2, 1, &[0], &[2.0]).unwrap();
        agent.observe(&Context { world: &w, log: &log, config: &config }, 2).unwrap();
        // option 1: own 0.5; the peer's 1.0 arrived with no estimate
        assert_eq!(agent.converted(1), (0.0, 0));
        let view = log.peer_view(2, 0);
        let idx = full_info_index(&agent, &view, 1, 5, &config).unwrap();
        let expected = 0.5 + (2.0 * 5f64.ln() / 2.0).sqrt();
        assert!((idx - expected).abs() < 1e-15);
    }

    #[test]
    fn partial_disclosure_is_rejected() {
        let w = world(2);
        let config = PolicyConfig::default();
        let mut log = BroadcastLog::new(Disclosure::Partial, 2, 2, 1);
        log.publish(1, 0, &[0], &[3.0]).unwrap();
        log.publish(1, 1, &[0], &[1.5]).unwrap();
        let mut agent = Agent::new(0, Algorithm::UFull, 2, 2, 1);
        agent.observe(&Context { world: &w, log: &log, config: &config }, 1).unwrap();
        let view = log.peer_view(1, 0);
        assert!(matches!(
            full_info_index(&agent, &view, 0, 2, &config),
            Err(Error::Disclosure(_))
        ));
    }

    #[test]
    fn single_user_full_equals_ucb() {
        let w = world(1);
        let config = PolicyConfig::default();
        let mut log = BroadcastLog::new(Disclosure::FullPerStep, 1, 2, 1);
        let mut agent = Agent::new(0, Algorithm::UFull, 1, 2, 1);
        for (t, (j, x)) in [(0, 1.3), (1, 0.2), (0, 2.2), (0, 0.1)].into_iter().enumerate() {
            let t = t as u64 + 1;
            log.publish(t, 0, &[j], &[x]).unwrap();
            agent.observe(&Context { world: &w, log: &log, config: &config }, t).unwrap();
        }
        let view = log.peer_view(4, 0);
        for j in 0..2 {
            let full = full_info_index(&agent, &view, j, 9, &config).unwrap();
            assert_eq!(full, ucb_index(agent.mean(j).unwrap(), agent.count(j), 9));
        }
    }
}
