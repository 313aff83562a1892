//! Domain types, the collision-channel outcome model and binary-countdown
//! priority semantics.
//!
//! Priority level 0 is the highest priority. A level is transmitted as the
//! `k`-bit base-2 representation of `l - 1 - level` (with `l = 2^k`), most
//! significant bit first: a contender transmits in slots where its bit is 1
//! and listens where it is 0.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::scalar::Scalar;

/// Static channel and resource parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig<T> {
    /// Contention preambles per round.
    pub preambles: u32,
    /// Resource blocks consumed by the PRACH in every round.
    pub prach_rb: T,
    /// Resource blocks per MSG3 transmission.
    pub msg3_rb: T,
    /// Cost of one contention-resolution slot relative to a MSG3.
    pub crs_overhead: T,
    /// Upper bound on contention-resolution slots per round.
    pub k_max: u32,
    pub round_duration_ms: T,
}

impl<T: Scalar> Default for SystemConfig<T> {
    fn default() -> Self {
        Self {
            preambles: 54,
            prach_rb: T::c(6.0),
            msg3_rb: T::c(2.0),
            crs_overhead: T::c(0.07),
            k_max: 14,
            round_duration_ms: T::c(10.0),
        }
    }
}

impl<T: Scalar> SystemConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.preambles < 1 {
            return Err(domain("preambles must be at least 1"));
        }
        if !(self.prach_rb >= T::zero()) {
            return Err(domain("prach_rb must be non-negative"));
        }
        if !(self.msg3_rb > T::zero()) {
            return Err(domain("msg3_rb must be positive"));
        }
        if !(self.crs_overhead > T::zero() && self.crs_overhead <= T::one()) {
            return Err(domain("crs_overhead must lie in (0, 1]"));
        }
        if self.k_max > 30 {
            return Err(domain("k_max above 30 is not supported"));
        }
        if !(self.round_duration_ms > T::zero()) {
            return Err(domain("round_duration_ms must be positive"));
        }
        Ok(())
    }

    #[inline]
    pub fn m(&self) -> T {
        T::count(u64::from(self.preambles))
    }

    /// Resource blocks spent on one occupied preamble when `k` CRSs are allocated.
    #[inline]
    pub fn per_occupied_rb(&self, k: u32) -> T {
        self.msg3_rb * (T::one() + T::count(u64::from(k)) * self.crs_overhead)
    }

    /// Realized consumption of a round: `R1 + r3 (1 + k delta) M_O`.
    #[inline]
    pub fn round_resources(&self, k: u32, occupied: u32) -> T {
        self.prach_rb + self.per_occupied_rb(k) * T::count(u64::from(occupied))
    }
}

/// The per-round control pair: access probability and CRS count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint<T> {
    pub p: T,
    pub k: u32,
}

impl<T: Scalar> OperatingPoint<T> {
    pub fn new(p: T, k: u32) -> Result<Self> {
        if !(p > T::zero() && p <= T::one()) {
            return Err(domain(format!("access probability {p} outside (0, 1]")));
        }
        if k > 62 {
            return Err(domain(format!("k = {k} too large")));
        }
        Ok(Self { p, k })
    }

    /// Priority levels `l = 2^k`.
    #[inline]
    pub fn levels(&self) -> u64 {
        levels(self.k)
    }
}

#[inline]
pub fn levels(k: u32) -> u64 {
    1u64 << k
}

/// A priority level together with its countdown bit pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrioritySequence {
    pub level: u64,
    pub bits: Vec<u8>,
}

impl PrioritySequence {
    pub fn slots(&self) -> usize {
        self.bits.len()
    }
}

/// Encodes `level` as the `k` countdown bits of `2^k - 1 - level`, MSB first.
pub fn encode_priority(level: u64, k: u32) -> Result<PrioritySequence> {
    if k > 62 {
        return Err(domain(format!("k = {k} too large")));
    }
    let l = levels(k);
    if level >= l {
        return Err(domain(format!("priority level {level} outside [0, {}]", l - 1)));
    }
    let code = l - 1 - level;
    let bits = (0..k).rev().map(|b| ((code >> b) & 1) as u8).collect();
    Ok(PrioritySequence { level, bits })
}

/// Inverse of [`encode_priority`].
pub fn decode_priority(bits: &[u8]) -> Result<u64> {
    let k = bits.len() as u32;
    if k > 62 {
        return Err(domain("bit sequence too long"));
    }
    let mut code = 0u64;
    for &b in bits {
        if b > 1 {
            return Err(domain(format!("bit value {b} is not binary")));
        }
        code = (code << 1) | u64::from(b);
    }
    Ok(levels(k) - 1 - code)
}

/// Result of contention on a single preamble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreambleOutcome {
    Idle,
    /// Index of the winning contender.
    Success(usize),
    Collision,
}

/// Incremental unique-minimum tracker used to resolve one preamble.
///
/// Feeding contenders one at a time and calling [`PreambleArbiter::outcome`]
/// gives the same answer as [`resolve_preamble`] on the collected levels.
#[derive(Debug, Clone, Copy, Default)]
pub struct PreambleArbiter {
    contenders: u32,
    best_level: u64,
    best_count: u32,
    best_index: usize,
}

impl PreambleArbiter {
    #[inline]
    pub fn offer(&mut self, level: u64, index: usize) {
        if self.contenders == 0 || level < self.best_level {
            self.best_level = level;
            self.best_count = 1;
            self.best_index = index;
        } else if level == self.best_level {
            self.best_count += 1;
        }
        self.contenders += 1;
    }

    #[inline]
    pub fn contenders(&self) -> u32 {
        self.contenders
    }

    #[inline]
    pub fn outcome(&self) -> PreambleOutcome {
        match self.contenders {
            0 => PreambleOutcome::Idle,
            _ if self.best_count == 1 => PreambleOutcome::Success(self.best_index),
            _ => PreambleOutcome::Collision,
        }
    }
}

/// Resolves one preamble: the contender holding the strictly smallest level
/// wins; a shared minimum is a collision.
pub fn resolve_preamble(priority_levels: &[u64], k: u32) -> Result<PreambleOutcome> {
    let l = levels(k);
    let mut arbiter = PreambleArbiter::default();
    for (i, &level) in priority_levels.iter().enumerate() {
        if level >= l {
            return Err(domain(format!("priority level {level} outside [0, {}]", l - 1)));
        }
        arbiter.offer(level, i);
    }
    Ok(arbiter.outcome())
}

/// Slot-by-slot binary countdown: in every slot contenders whose bit is 1
/// transmit, those whose bit is 0 listen, and a listener that hears a
/// transmission drops out for good. Returns the indices still active after
/// the last slot.
pub fn countdown_survivors(sequences: &[PrioritySequence]) -> Vec<usize> {
    let slots = sequences.iter().map(|s| s.slots()).max().unwrap_or(0);
    let mut active: Vec<bool> = vec![true; sequences.len()];
    for slot in 0..slots {
        let busy = sequences
            .iter()
            .zip(&active)
            .any(|(s, &a)| a && s.bits[slot] == 1);
        if busy {
            for (s, a) in sequences.iter().zip(active.iter_mut()) {
                if *a && s.bits[slot] == 0 {
                    *a = false;
                }
            }
        }
    }
    active
        .iter()
        .enumerate()
        .filter_map(|(i, &a)| a.then_some(i))
        .collect()
}

/// Outcome of a preamble under the slot-by-slot countdown.
pub fn simulate_countdown(sequences: &[PrioritySequence]) -> PreambleOutcome {
    if sequences.is_empty() {
        return PreambleOutcome::Idle;
    }
    match countdown_survivors(sequences).as_slice() {
        [winner] => PreambleOutcome::Success(*winner),
        _ => PreambleOutcome::Collision,
    }
}

/// Observables of one contention round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome<T> {
    pub idle_preambles: u32,
    pub occupied_preambles: u32,
    pub successes: u32,
    pub consumed_resources: T,
}

impl<T: Scalar> RoundOutcome<T> {
    pub fn new(config: &SystemConfig<T>, k: u32, occupied: u32, successes: u32) -> Self {
        debug_assert!(occupied <= config.preambles && successes <= occupied);
        Self {
            idle_preambles: config.preambles - occupied,
            occupied_preambles: occupied,
            successes,
            consumed_resources: config.round_resources(k, occupied),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(level: u64, k: u32) -> PrioritySequence {
        encode_priority(level, k).unwrap()
    }

    #[test]
    fn encode_examples() {
        assert_eq!(seq(0, 2).bits, vec![1, 1]);
        assert_eq!(seq(3, 2).bits, vec![0, 0]);
        assert!(seq(0, 0).bits.is_empty());
        assert!(encode_priority(4, 2).is_err());
        assert!(encode_priority(1, 0).is_err());
    }

    #[test]
    fn decode_inverts_encode() {
        for k in 0..8 {
            for level in 0..levels(k) {
                assert_eq!(decode_priority(&seq(level, k).bits).unwrap(), level);
            }
        }
    }

    #[test]
    fn three_contender_countdown_example() {
        // bit patterns [1,0,0], [1,0,1], [0,0,1]
        let levels: Vec<u64> = [[1, 0, 0], [1, 0, 1], [0, 0, 1]]
            .iter()
            .map(|b| decode_priority(b).unwrap())
            .collect();
        assert_eq!(levels, vec![3, 2, 6]);
        assert_eq!(resolve_preamble(&levels, 3).unwrap(), PreambleOutcome::Success(1));
        let seqs: Vec<_> = levels.iter().map(|&l| seq(l, 3)).collect();
        assert_eq!(simulate_countdown(&seqs), PreambleOutcome::Success(1));
    }

    #[test]
    fn resolve_trivial_cases() {
        assert_eq!(resolve_preamble(&[], 3).unwrap(), PreambleOutcome::Idle);
        assert_eq!(resolve_preamble(&[2, 2], 2).unwrap(), PreambleOutcome::Collision);
        assert_eq!(resolve_preamble(&[0], 0).unwrap(), PreambleOutcome::Success(0));
        assert_eq!(resolve_preamble(&[7], 3).unwrap(), PreambleOutcome::Success(0));
        assert_eq!(resolve_preamble(&[0, 0], 0).unwrap(), PreambleOutcome::Collision);
        assert!(resolve_preamble(&[4], 2).is_err());
    }

    /// Exhaustive equivalence of the unique-minimum rule with the slot-level
    /// countdown for k <= 6 and up to 5 contenders. Contender sets are
    /// enumerated as non-decreasing level tuples; the rule and the countdown
    /// are both order-independent apart from the winner index, which is
    /// checked by level.
    #[test]
    fn arbitration_matches_countdown_exhaustively() {
        fn walk(k: u32, start: u64, current: &mut Vec<u64>, checked: &mut u64) {
            let rule = resolve_preamble(current, k).unwrap();
            let seqs: Vec<_> = current.iter().map(|&l| seq(l, k)).collect();
            let slotwise = simulate_countdown(&seqs);
            match (rule, slotwise) {
                (PreambleOutcome::Success(a), PreambleOutcome::Success(b)) => {
                    assert_eq!(current[a], current[b]);
                    assert!(current.iter().enumerate().all(|(i, &l)| i == a || l > current[a]));
                }
                (a, b) => assert_eq!(a, b, "levels {current:?}, k = {k}"),
            }
            *checked += 1;
            if current.len() == 5 {
                return;
            }
            for level in start..levels(k) {
                current.push(level);
                walk(k, level, current, checked);
                current.pop();
            }
        }
        for k in 0..=6 {
            let mut checked = 0;
            walk(k, 0, &mut Vec::new(), &mut checked);
            assert!(checked > 0);
        }
    }

    #[test]
    fn countdown_order_does_not_matter() {
        // Same multiset in different orders gives the same winning level.
        let a = [5u64, 1, 9, 1, 3];
        let b = [1u64, 9, 3, 1, 5];
        assert_eq!(resolve_preamble(&a, 4).unwrap(), PreambleOutcome::Collision);
        assert_eq!(resolve_preamble(&b, 4).unwrap(), PreambleOutcome::Collision);
        let c = [5u64, 2, 9, 1, 3];
        let seqs: Vec<_> = c.iter().map(|&l| seq(l, 4)).collect();
        assert_eq!(simulate_countdown(&seqs), PreambleOutcome::Success(3));
    }

    #[test]
    fn round_outcome_resource_identity() {
        let cfg = SystemConfig::<f64>::default();
        let r = RoundOutcome::new(&cfg, 3, 20, 12);
        assert_eq!(r.idle_preambles + r.occupied_preambles, 54);
        assert!((r.consumed_resources - (6.0 + 2.0 * 1.21 * 20.0)).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let mut c = SystemConfig::<f64>::default();
        assert!(c.validate().is_ok());
        c.crs_overhead = 0.0;
        assert!(c.validate().is_err());
        let c = SystemConfig::<f32> { preambles: 0, ..Default::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn operating_point_domain() {
        assert!(OperatingPoint::new(0.0_f64, 1).is_err());
        assert!(OperatingPoint::new(1.5_f64, 1).is_err());
        assert_eq!(OperatingPoint::new(0.5_f64, 3).unwrap().levels(), 8);
    }
}
