//! Gated q-ary tree resolution over preambles.
//!
//! Every collision becomes a group in a FIFO queue. A scheduled group gets
//! `q` dedicated preambles in a later round and its members re-pick uniformly
//! among them; `floor(M / q)` groups fit in one round. Fresh UEs transmit
//! with `p = 1` on all preambles, but only in rounds where the queue is
//! empty; UEs activated while a tree is active wait for it to drain.

use std::collections::VecDeque;

use crate::error::{domain, Error, Result};
use crate::model::SystemConfig;
use crate::rng::RoundStreams;
use crate::scalar::Scalar;
use crate::traffic::BurstScenario;

use super::engine::Channel;
use super::{arrival_buckets, draw_activations, initial_ues, RunOptions, SimulationResult, TraceRow, UeStatus};

pub fn run_qtra<T: Scalar>(
    scenario: &BurstScenario,
    config: &SystemConfig<T>,
    q: u32,
    opts: &RunOptions,
) -> Result<SimulationResult> {
    config.validate()?;
    scenario.validate()?;
    if q < 2 || q > config.preambles {
        return Err(domain(format!("branching factor {q} must lie in [2, M]")));
    }
    let round_ms = config.round_duration_ms.to_f64_lossy();
    let rounds = draw_activations(scenario, round_ms, opts)?;
    let buckets = arrival_buckets(&rounds);
    let mut ues = initial_ues(&rounds);
    let total = ues.len();
    let mut streams = RoundStreams::new(opts.master_seed, opts.key(scenario));
    let mut channel = Channel::new(config.preambles);
    let slots = (config.preambles / q) as usize;
    let mut fresh: Vec<u32> = Vec::new();
    let mut queue: VecDeque<Vec<u32>> = VecDeque::new();
    let mut trace = Vec::new();
    let mut connected = 0usize;
    let mut round = 0usize;
    let nan = f64::NAN;
    while connected < total {
        if round >= opts.round_cap {
            return Err(Error::NonTermination { rounds: round, connected, total, trace: Box::new(trace) });
        }
        if let Some(arrivals) = buckets.get(round) {
            for &id in arrivals {
                ues[id as usize].status = UeStatus::Contending;
                fresh.push(id);
            }
        }
        let n_true = (fresh.len() + queue.iter().map(Vec::len).sum::<usize>()) as u64;
        let fresh_round = queue.is_empty();
        if fresh_round {
            channel.transmit(&fresh, 1.0, &mut streams.acb, &mut streams.preamble);
            fresh.clear();
        } else {
            let scheduled: Vec<Vec<u32>> = (0..slots.min(queue.len())).filter_map(|_| queue.pop_front()).collect();
            let blocks: Vec<(&[u32], u32, u32)> =
                scheduled.iter().enumerate().map(|(i, g)| (g.as_slice(), i as u32 * q, q)).collect();
            channel.transmit_on(&blocks, &mut streams.preamble);
        }
        let summary = channel.arbitrate(0, &mut streams.priority);
        for id in channel.winners() {
            let ue = &mut ues[id as usize];
            ue.status = UeStatus::Connected;
            ue.success_round = Some(round as u32);
        }
        connected += summary.successes as usize;
        queue.extend(channel.collided_groups());
        trace.push(TraceRow {
            round: round as u64,
            n_true,
            n_hat_prior: nan,
            n_hat_post: nan,
            delta_n: nan,
            q_boost: 0,
            p: 1.0,
            k: 0,
            idle: summary.idle,
            occupied: summary.occupied,
            successes: summary.successes,
            resources_rb: config.round_resources(0, summary.occupied).to_f64_lossy(),
            epsilon_r: nan,
            expected_rb: nan,
        });
        round += 1;
    }
    Ok(SimulationResult { protocol: format!("qtra{q}"), round_duration_ms: round_ms, ues, trace })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lone_ue_connects_without_tree() {
        let config = SystemConfig::<f64>::default();
        let r = run_qtra(&BurstScenario::delta(1), &config, 2, &RunOptions::new(1, 0)).unwrap();
        assert_eq!(r.rounds_to_resolution(), 1);
    }

    #[test]
    fn two_colliding_ues_binary_split() {
        // on a single preamble pair the expected number of extra split rounds
        // for two UEs is 2 (each split separates them with probability 1/2)
        let config = SystemConfig::<f64> { preambles: 2, ..SystemConfig::default() };
        let reps = 4000;
        let mut extra = 0.0;
        for rep in 0..reps {
            let r = run_qtra(&BurstScenario::delta(2), &config, 2, &RunOptions::new(77, rep)).unwrap();
            let first = &r.trace[0];
            if first.successes == 0 {
                extra += r.rounds_to_resolution() as f64 - 1.0;
            } else {
                assert_eq!(r.rounds_to_resolution(), 1);
            }
        }
        // half the bursts collide in round 0
        let mean_extra_given_collision = extra / (f64::from(reps as u32) / 2.0);
        assert!((mean_extra_given_collision - 2.0).abs() < 0.2, "{mean_extra_given_collision}");
    }

    #[test]
    fn rejects_bad_branching() {
        let config = SystemConfig::<f64>::default();
        assert!(run_qtra(&BurstScenario::delta(5), &config, 1, &RunOptions::new(1, 0)).is_err());
    }
}
