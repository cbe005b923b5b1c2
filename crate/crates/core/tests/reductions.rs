use grouplearn::broadcast::Disclosure;
use grouplearn::env::{build_world, ClipSetting, DistortionConfig, Family, OrderRule, World, WorldConfig};
use grouplearn::harness::Simulation;
use grouplearn::policies::{full_info_index, Algorithm, PolicyConfig};

const SEEDS: std::ops::RangeInclusive<u64> = 1..=20;
const STEPS: usize = 100;

fn world(users: usize, group_means: Vec<Vec<f64>>, distortion: DistortionConfig, seed: u64) -> World {
    build_world(
        &WorldConfig {
            users,
            options: group_means[0].len(),
            k: 3,
            group_means,
            membership: None,
            distortion,
            family: Family::Exponential,
            clip: ClipSetting::default(),
            min_gap: 1e-6,
            order: OrderRule::Full,
            max_retries: 10_000,
        },
        seed,
    )
    .unwrap()
}

fn base(users: usize, seed: u64) -> World {
    world(
        users,
        vec![vec![0.25, 0.2, 0.15, 0.1, 0.05]],
        DistortionConfig { mean: 4.0, std_dev: 1.0 },
        seed,
    )
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// Runs `algs` side by side on the same world and seed and checks that every
/// step's indices and actions agree.
fn assert_equivalent(world: &World, disclosure: Disclosure, algs: &[Algorithm], policy: &PolicyConfig, seed: u64) {
    let mut sims: Vec<Simulation> = algs
        .iter()
        .map(|&a| Simulation::new(world, a, disclosure, policy, seed).unwrap())
        .collect();
    for _ in 0..STEPS {
        let outs: Vec<_> = sims.iter_mut().map(|s| s.step().unwrap()).collect();
        for (alg, out) in algs.iter().zip(&outs).skip(1) {
            assert_eq!(out.actions, outs[0].actions, "{alg} vs {} at t={}", algs[0], out.t);
            for (u, (a, b)) in out.indices.iter().zip(&outs[0].indices).enumerate() {
                for (j, (x, y)) in a.iter().zip(b).enumerate() {
                    assert!(close(*x, *y), "{alg} user {u} option {j} t={}: {x} vs {y}", out.t);
                }
            }
        }
    }
}

#[test]
fn single_user_full_reduces_to_ucb() {
    for seed in SEEDS {
        let w = base(1, seed);
        for cap in [true, false] {
            let policy = PolicyConfig { cap_peer_samples: cap, ..Default::default() };
            assert_equivalent(
                &w,
                Disclosure::FullPerStep,
                &[Algorithm::UcbIndividual, Algorithm::UFull, Algorithm::DFull],
                &policy,
                seed,
            );
        }
    }
}

#[test]
fn zero_alpha_part_reduces_to_ucb() {
    let policy = PolicyConfig { alpha: 0.0, ..Default::default() };
    for seed in SEEDS {
        let w = base(3, seed);
        assert_equivalent(
            &w,
            Disclosure::Partial,
            &[Algorithm::UcbIndividual, Algorithm::UPart, Algorithm::DPart],
            &policy,
            seed,
        );
        let diverse = world(
            4,
            vec![vec![0.25, 0.2, 0.15, 0.1, 0.05], vec![0.25, 0.2, 0.1, 0.15, 0.05]],
            DistortionConfig { mean: 4.0, std_dev: 1.0 },
            seed,
        );
        assert_equivalent(
            &diverse,
            Disclosure::Partial,
            &[Algorithm::UcbIndividual, Algorithm::DPart],
            &policy,
            seed,
        );
    }
}

#[test]
fn unit_distortion_pools_plain_sums() {
    let policy = PolicyConfig {
        pinned_distortion: Some(1.0),
        cap_peer_samples: false,
        ..Default::default()
    };
    for seed in SEEDS {
        let w = world(
            3,
            vec![vec![0.25, 0.2, 0.15, 0.1, 0.05]],
            DistortionConfig { mean: 1.0, std_dev: 0.0 },
            seed,
        );
        for u in 0..3 {
            for k in 0..3 {
                for j in 0..5 {
                    assert_eq!(w.model.distortion(u, k, j), 1.0);
                }
            }
        }
        let mut sim = Simulation::new(&w, Algorithm::UFull, Disclosure::FullPerStep, &policy, seed).unwrap();
        for _ in 0..STEPS {
            sim.step().unwrap();
            let log = sim.log();
            for agent in sim.agents() {
                for j in 0..5 {
                    let plain: f64 = (0..3).map(|u| log.raw_sum(u, j)).sum();
                    let n: u64 = (0..3).map(|u| log.decision_count(u, j)).sum();
                    let (conv, conv_n) = agent.converted(j);
                    assert!(close(agent.sum(j) + conv, plain), "seed {seed} option {j}");
                    assert_eq!(agent.count(j) + conv_n, n);
                    if agent.count(j) > 0 {
                        let t = sim.t() + 1;
                        let view = log.peer_view(sim.t(), agent.user());
                        let idx = full_info_index(agent, &view, j, t, &policy).unwrap();
                        let expect = plain / n as f64 + (2.0 * (t as f64).ln() / n as f64).sqrt();
                        assert!(close(idx, expect), "{idx} vs {expect}");
                    }
                }
            }
        }
    }
}

/// Rebuilds the streaming numerator from the raw event history: every peer
/// reward realized at step m is multiplied by the ratio of the observer's and
/// the peer's sample means through m.
fn replay_numerator(sim: &Simulation, observer: usize, option: usize) -> (f64, u64) {
    let log = sim.log();
    let users = log.users();
    let mut own = (0.0, 0u64);
    let mut peer = vec![(0.0, 0u64); users];
    let mut num = 0.0;
    let mut used = 0u64;
    for m in 1..=sim.t() {
        let mut arrived = Vec::new();
        for (u, tally) in peer.iter_mut().enumerate() {
            let acts = log.actions(m, u).unwrap();
            let rewards = log.rewards(m, u).unwrap();
            for (&j, &x) in acts.iter().zip(rewards) {
                if j != option {
                    continue;
                }
                if u == observer {
                    own.0 += x;
                    own.1 += 1;
                } else {
                    tally.0 += x;
                    tally.1 += 1;
                    arrived.push((u, x));
                }
            }
        }
        for (u, x) in arrived {
            if own.1 == 0 {
                continue;
            }
            let ratio = (own.0 / own.1 as f64) / (peer[u].0 / peer[u].1 as f64);
            num += ratio * x;
            used += 1;
        }
    }
    (num, used)
}

#[test]
fn streaming_conversion_matches_replay() {
    let policy = PolicyConfig::default();
    for seed in SEEDS {
        let w = base(3, seed);
        let mut sim = Simulation::new(&w, Algorithm::UFull, Disclosure::FullPerStep, &policy, seed).unwrap();
        for _ in 0..STEPS {
            sim.step().unwrap();
        }
        for agent in sim.agents() {
            for j in 0..5 {
                let (num, n) = replay_numerator(&sim, agent.user(), j);
                let (got, got_n) = agent.converted(j);
                assert_eq!(got_n, n, "seed {seed} user {} option {j}", agent.user());
                assert!(close(got, num), "{got} vs {num}");
            }
        }
    }
}

#[test]
fn periodic_one_matches_per_step() {
    let policy = PolicyConfig::default();
    for seed in SEEDS {
        let w = base(3, seed);
        let mut a = Simulation::new(&w, Algorithm::UFull, Disclosure::FullPerStep, &policy, seed).unwrap();
        let mut b = Simulation::new(&w, Algorithm::UFull, Disclosure::FullPeriodic { period: 1 }, &policy, seed).unwrap();
        for _ in 0..STEPS {
            assert_eq!(a.step().unwrap(), b.step().unwrap());
        }
    }
}

#[test]
fn oracle_has_zero_pseudo_regret() {
    let policy = PolicyConfig::default();
    for seed in SEEDS {
        let w = base(3, seed);
        let mut sim = Simulation::new(&w, Algorithm::Oracle, Disclosure::Partial, &policy, seed).unwrap();
        for _ in 0..STEPS {
            let out = sim.step().unwrap();
            for (u, acts) in out.actions.iter().enumerate() {
                assert_eq!(acts.as_slice(), w.profile.top_set(u));
            }
        }
    }
}

#[test]
fn scaling_rewards_keeps_oracle_choices() {
    let w = base(3, 5);
    let cfg_scaled = world(
        3,
        vec![vec![2.5, 2.0, 1.5, 1.0, 0.5]],
        DistortionConfig { mean: 4.0, std_dev: 1.0 },
        5,
    );
    for u in 0..3 {
        assert_eq!(w.profile.top_set(u), cfg_scaled.profile.top_set(u));
        for j in 0..5 {
            let ratio = cfg_scaled.model.mean(u, j) / w.model.mean(u, j);
            assert!((ratio - 10.0).abs() < 1e-12);
        }
    }
}
