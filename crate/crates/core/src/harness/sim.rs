//! One replication: M agents advancing in lockstep over a shared log.
//!
//! Each step runs (1) every agent picks actions from the log through `t - 1`,
//! (2) rewards are read off the tape, (3) decisions and rewards are published,
//! (4) agents fold in what the completed step released.

use rand_chacha::ChaCha8Rng;

use crate::broadcast::{BroadcastLog, Disclosure};
use crate::classify::{misclassification_rate, ClassifierState};
use crate::env::{OptionId, World};
use crate::error::Result;
use crate::metrics::{bound_curve, RegretTrace};
use crate::policies::{select_actions, Agent, Algorithm, Context, PolicyConfig};
use crate::rng::{stream, Stream};

/// What happened in one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub t: u64,
    /// Per-user indices used for selection; empty for the oracle.
    pub indices: Vec<Vec<f64>>,
    pub actions: Vec<Vec<OptionId>>,
    pub rewards: Vec<Vec<f64>>,
    /// Fraction of misclassified (observer, peer) pairs, for D_PART only.
    pub err_rate: Option<f64>,
}

/// Stepping simulator for one (world, algorithm, seed).
pub struct Simulation<'a> {
    world: &'a World,
    algorithm: Algorithm,
    policy: &'a PolicyConfig,
    log: BroadcastLog,
    agents: Vec<Agent>,
    tape_rng: ChaCha8Rng,
    action_rng: ChaCha8Rng,
    class_rng: ChaCha8Rng,
    t: u64,
    clipped: u64,
}

impl<'a> Simulation<'a> {
    pub fn new(
        world: &'a World,
        algorithm: Algorithm,
        disclosure: Disclosure,
        policy: &'a PolicyConfig,
        seed: u64,
    ) -> Result<Self> {
        algorithm.check_disclosure(disclosure)?;
        let users = world.model.users();
        let options = world.model.options();
        let k = world.profile.k();
        Ok(Simulation {
            world,
            algorithm,
            policy,
            log: BroadcastLog::new(disclosure, users, options, k),
            agents: (0..users).map(|u| Agent::new(u, algorithm, users, options, k)).collect(),
            tape_rng: stream(seed, Stream::RewardTape),
            action_rng: stream(seed, Stream::Actions),
            class_rng: stream(seed, Stream::Classifier),
            t: 0,
            clipped: 0,
        })
    }

    pub fn step(&mut self) -> Result<StepOutcome> {
        let t = self.t + 1;
        let users = self.agents.len();
        let options = self.world.model.options();
        let mut indices = Vec::with_capacity(users);
        let mut actions = Vec::with_capacity(users);
        {
            let ctx = Context {
                world: self.world,
                log: &self.log,
                config: self.policy,
            };
            for agent in &mut self.agents {
                if self.algorithm == Algorithm::Oracle {
                    indices.push(Vec::new());
                    actions.push(self.world.profile.top_set(agent.user()).to_vec());
                    continue;
                }
                let idx = agent.indices(&ctx, t, &mut self.class_rng)?;
                actions.push(select_actions(&idx, self.world.profile.k(), &mut self.action_rng));
                indices.push(idx);
            }
        }
        let err_rate = (self.algorithm == Algorithm::DPart).then(|| {
            let states: Vec<ClassifierState> = self
                .agents
                .iter()
                .filter_map(|a| a.classifier().cloned())
                .collect();
            misclassification_rate(&self.world.groups, &states)
        });

        // the whole tape row is drawn so every algorithm sees the same rewards
        let mut tape = Vec::with_capacity(users * options);
        for u in 0..users {
            for j in 0..options {
                tape.push(self.world.model.draw(u, j, &mut self.tape_rng));
            }
        }
        let mut rewards = Vec::with_capacity(users);
        for (u, acts) in actions.iter().enumerate() {
            let row: Vec<f64> = acts
                .iter()
                .map(|&j| {
                    let d = tape[u * options + j];
                    self.clipped += d.clipped as u64;
                    d.value
                })
                .collect();
            self.log.publish(t, u, acts, &row)?;
            rewards.push(row);
        }
        let ctx = Context {
            world: self.world,
            log: &self.log,
            config: self.policy,
        };
        for agent in &mut self.agents {
            agent.observe(&ctx, t)?;
        }
        self.t = t;
        Ok(StepOutcome {
            t,
            indices,
            actions,
            rewards,
            err_rate,
        })
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn log(&self) -> &BroadcastLog {
        &self.log
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn clipped(&self) -> u64 {
        self.clipped
    }

    pub fn into_log(self) -> BroadcastLog {
        self.log
    }
}

/// Metrics of one replication on the recording grid.
#[derive(Debug, Clone)]
pub struct Replication {
    pub algorithm: Algorithm,
    pub seed: u64,
    /// One trace per user.
    pub traces: Vec<RegretTrace>,
    /// Per-user bound values on the grid.
    pub bounds: Vec<Vec<f64>>,
    pub err_rate: Option<Vec<f64>>,
    pub clipped: u64,
    pub log: Option<BroadcastLog>,
}

pub struct RunSpec<'a> {
    pub world: &'a World,
    pub algorithm: Algorithm,
    pub disclosure: Disclosure,
    pub policy: &'a PolicyConfig,
    pub horizon: u64,
    pub seed: u64,
    pub grid: &'a [u64],
    pub bound_exponent: u8,
    pub bound_epsilon: f64,
    pub keep_log: bool,
}

/// Runs `spec.horizon` steps and records cumulative regret at each grid point.
pub fn simulate(spec: &RunSpec<'_>) -> Result<Replication> {
    let world = spec.world;
    let users = world.model.users();
    let mut sim = Simulation::new(world, spec.algorithm, spec.disclosure, spec.policy, spec.seed)?;
    let best: Vec<f64> = (0..users)
        .map(|u| world.profile.top_set(u).iter().map(|&j| world.model.mean(u, j)).sum())
        .collect();
    let mut pseudo = vec![0.0; users];
    let mut realized = vec![0.0; users];
    let mut traces: Vec<RegretTrace> = (0..users)
        .map(|_| RegretTrace {
            t: Vec::with_capacity(spec.grid.len()),
            pseudo: Vec::with_capacity(spec.grid.len()),
            realized: Vec::with_capacity(spec.grid.len()),
        })
        .collect();
    let mut err = spec.algorithm.eq(&Algorithm::DPart).then(Vec::new);
    let mut next = spec.grid.iter().peekable();
    for _ in 0..spec.horizon {
        let out = sim.step()?;
        for u in 0..users {
            let mean_sum: f64 = out.actions[u].iter().map(|&j| world.model.mean(u, j)).sum();
            pseudo[u] += best[u] - mean_sum;
            realized[u] += best[u] - out.rewards[u].iter().sum::<f64>();
        }
        if next.peek() == Some(&&out.t) {
            next.next();
            for u in 0..users {
                traces[u].t.push(out.t);
                traces[u].pseudo.push(pseudo[u]);
                traces[u].realized.push(realized[u]);
            }
            if let (Some(e), Some(rate)) = (err.as_mut(), out.err_rate) {
                e.push(rate);
            }
        }
    }
    let grid: Vec<u64> = spec.grid.iter().copied().filter(|&t| t <= spec.horizon).collect();
    let bounds = (0..users)
        .map(|u| {
            bound_curve(
                &world.profile,
                u,
                users,
                spec.algorithm,
                spec.bound_exponent,
                spec.bound_epsilon,
                &grid,
            )
        })
        .collect();
    let clipped = sim.clipped();
    Ok(Replication {
        algorithm: spec.algorithm,
        seed: spec.seed,
        traces,
        bounds,
        err_rate: err,
        clipped,
        log: spec.keep_log.then(|| sim.into_log()),
    })
}
