//! One contention round over the collision channel.
//!
//! The round is split in two halves so a controller can pick the CRS count
//! after seeing which preambles are idle: [`Channel::transmit`] runs ACB and
//! preamble selection, [`Channel::arbitrate`] draws priorities and resolves
//! every occupied preamble.

use rand::distr::{Bernoulli, Distribution};
use rand::{Rng, RngCore};
use rand_distr::Binomial;

use crate::rng::RoundStreams;

const NO_WINNER: u32 = u32::MAX;

/// Per-preamble scratch state reused across rounds.
#[derive(Debug, Clone)]
pub struct Channel {
    preambles: u32,
    occupants: Vec<u32>,
    best_level: Vec<u64>,
    best_count: Vec<u32>,
    best_id: Vec<u32>,
    transmitters: Vec<(u32, u32)>,
    occupied: u32,
}

/// Observable result of the arbitration half.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArbitrationSummary {
    pub idle: u32,
    pub occupied: u32,
    pub successes: u32,
}

impl Channel {
    pub fn new(preambles: u32) -> Self {
        let m = preambles as usize;
        Self {
            preambles,
            occupants: vec![0; m],
            best_level: vec![u64::MAX; m],
            best_count: vec![0; m],
            best_id: vec![NO_WINNER; m],
            transmitters: Vec::new(),
            occupied: 0,
        }
    }

    pub fn preambles(&self) -> u32 {
        self.preambles
    }

    fn reset(&mut self) {
        self.occupants.fill(0);
        self.best_level.fill(u64::MAX);
        self.best_count.fill(0);
        self.best_id.fill(NO_WINNER);
        self.transmitters.clear();
        self.occupied = 0;
    }

    fn place(&mut self, id: u32, preamble: u32) {
        let j = preamble as usize;
        if self.occupants[j] == 0 {
            self.occupied += 1;
        }
        self.occupants[j] += 1;
        self.transmitters.push((id, preamble));
    }

    /// ACB with probability `p` for every contender, then a uniform preamble
    /// choice for those that pass. Returns the number of idle preambles.
    pub fn transmit<R: RngCore>(&mut self, contenders: &[u32], p: f64, acb: &mut R, preamble: &mut R) -> u32 {
        self.reset();
        let m = self.preambles;
        if p >= 1.0 {
            for &id in contenders {
                let j = preamble.random_range(0..m);
                self.place(id, j);
            }
        } else {
            let gate = Bernoulli::new(p.clamp(0.0, 1.0)).expect("p is clamped to [0, 1]");
            for &id in contenders {
                if gate.sample(acb) {
                    let j = preamble.random_range(0..m);
                    self.place(id, j);
                }
            }
        }
        m - self.occupied
    }

    /// Anonymous variant for a fixed backlog: the number passing ACB is drawn
    /// as Binomial(n, p), which has the same law as `n` independent gates.
    pub fn transmit_anonymous<R: RngCore>(&mut self, n: u64, p: f64, acb: &mut R, preamble: &mut R) -> u32 {
        self.reset();
        let m = self.preambles;
        let passing = if p >= 1.0 {
            n
        } else {
            Binomial::new(n, p.clamp(0.0, 1.0)).expect("p is clamped to [0, 1]").sample(acb)
        };
        for id in 0..passing {
            let j = preamble.random_range(0..m);
            self.place(id as u32, j);
        }
        m - self.occupied
    }

    /// Places transmitters on given preambles without ACB (reserved access).
    pub fn transmit_on<R: RngCore>(&mut self, groups: &[(&[u32], u32, u32)], preamble: &mut R) -> u32 {
        self.reset();
        for &(ids, first, width) in groups {
            for &id in ids {
                let j = first + preamble.random_range(0..width);
                self.place(id, j);
            }
        }
        self.preambles - self.occupied
    }

    /// Adds transmitters on top of the current round (no reset).
    pub fn transmit_more<R: RngCore>(&mut self, contenders: &[u32], first: u32, width: u32, preamble: &mut R) {
        if width == 0 {
            return;
        }
        for &id in contenders {
            let j = first + preamble.random_range(0..width);
            self.place(id, j);
        }
    }

    pub fn idle(&self) -> u32 {
        self.preambles - self.occupied
    }

    pub fn occupied(&self) -> u32 {
        self.occupied
    }

    /// Draws a uniform priority level in `[0, 2^k)` for every transmitter and
    /// keeps, per preamble, the unique holder of the smallest level.
    pub fn arbitrate<R: RngCore>(&mut self, k: u32, priority: &mut R) -> ArbitrationSummary {
        for &(id, j) in &self.transmitters {
            let level = if k == 0 { 0 } else { priority.next_u64() >> (64 - k) };
            let j = j as usize;
            if level < self.best_level[j] {
                self.best_level[j] = level;
                self.best_count[j] = 1;
                self.best_id[j] = id;
            } else if level == self.best_level[j] {
                self.best_count[j] += 1;
            }
        }
        let successes = self.best_count.iter().filter(|&&c| c == 1).count() as u32;
        ArbitrationSummary { idle: self.idle(), occupied: self.occupied, successes }
    }

    /// Winners of the last arbitration.
    pub fn winners(&self) -> impl Iterator<Item = u32> + '_ {
        self.best_count.iter().zip(&self.best_id).filter(|(&c, _)| c == 1).map(|(_, &id)| id)
    }

    /// Transmitters on each preamble of the last round that did not win.
    pub fn collided_groups(&self) -> Vec<Vec<u32>> {
        let mut groups: Vec<Vec<u32>> = vec![Vec::new(); self.preambles as usize];
        for &(id, j) in &self.transmitters {
            let j = j as usize;
            if self.occupants[j] >= 2 {
                groups[j].push(id);
            }
        }
        groups.retain(|g| !g.is_empty());
        groups
    }
}

/// A full round at constant backlog `n` with a frozen operating point.
pub fn constant_backlog_round(channel: &mut Channel, n: u64, p: f64, k: u32, streams: &mut RoundStreams) -> ArbitrationSummary {
    channel.transmit_anonymous(n, p, &mut streams.acb, &mut streams.preamble);
    channel.arbitrate(k, &mut streams.priority)
}
