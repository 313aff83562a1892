//! Burst arrival processes.
//!
//! Round `i` (0-based) covers activation times `[i T, (i + 1) T)`; a UE
//! activated inside that interval first contends in round `i`.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::scalar::Scalar;
use crate::special::beta_inc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ArrivalShape {
    Beta { alpha: f64, beta: f64 },
    Uniform,
    Delta,
}

impl ArrivalShape {
    pub fn name(&self) -> &'static str {
        match self {
            ArrivalShape::Beta { .. } => "beta",
            ArrivalShape::Uniform => "uniform",
            ArrivalShape::Delta => "delta",
        }
    }
}

/// `N` UEs activated according to an arrival shape over a window of
/// `window_ms` milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurstScenario {
    pub ues: u64,
    pub shape: ArrivalShape,
    pub window_ms: f64,
}

impl BurstScenario {
    pub fn delta(ues: u64) -> Self {
        Self { ues, shape: ArrivalShape::Delta, window_ms: 10.0 }
    }

    pub fn uniform(ues: u64, window_ms: f64) -> Self {
        Self { ues, shape: ArrivalShape::Uniform, window_ms }
    }

    /// Beta(3, 4) over one second.
    pub fn beta(ues: u64) -> Self {
        Self { ues, shape: ArrivalShape::Beta { alpha: 3.0, beta: 4.0 }, window_ms: 1000.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if let ArrivalShape::Beta { alpha, beta } = self.shape {
            if !(alpha > 0.0 && beta > 0.0) {
                return Err(domain("beta arrivals need alpha > 0 and beta > 0"));
            }
        }
        if !matches!(self.shape, ArrivalShape::Delta) && !(self.window_ms > 0.0) {
            return Err(domain("activation window must be positive"));
        }
        Ok(())
    }

    /// Probability that a UE has activated strictly before time `t` (ms).
    pub fn activation_cdf<T: Scalar>(&self, t: T) -> T {
        if t <= T::zero() {
            return T::zero();
        }
        let window = T::c(self.window_ms);
        match self.shape {
            ArrivalShape::Delta => T::one(),
            ArrivalShape::Uniform => (t / window).min(T::one()),
            ArrivalShape::Beta { alpha, beta } => beta_inc(T::c(alpha), T::c(beta), (t / window).min(T::one())),
        }
    }

    /// `N` times the activation probability mass inside round `i`.
    pub fn expected_arrivals_in_round<T: Scalar>(&self, round: u64, round_duration: T) -> T {
        let start = T::count(round) * round_duration;
        let end = start + round_duration;
        let mass = match self.shape {
            ArrivalShape::Delta => {
                if round == 0 {
                    T::one()
                } else {
                    T::zero()
                }
            }
            _ => self.activation_cdf(end) - self.activation_cdf(start),
        };
        T::count(self.ues) * mass
    }

    /// Rounds that can receive arrivals; later rounds receive none.
    pub fn arrival_rounds<T: Scalar>(&self, round_duration: T) -> u64 {
        if self.ues == 0 {
            return 0;
        }
        match self.shape {
            ArrivalShape::Delta => 1,
            _ => (T::c(self.window_ms) / round_duration).ceil().to_u64().unwrap_or(0).max(1),
        }
    }

    /// Expected arrivals for every round that can receive them.
    pub fn expected_arrivals<T: Scalar>(&self, round_duration: T) -> Vec<T> {
        (0..self.arrival_rounds(round_duration))
            .map(|i| self.expected_arrivals_in_round(i, round_duration))
            .collect()
    }

    /// Draws `N` i.i.d. activation times in milliseconds.
    pub fn sample_activation_times<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        self.validate()?;
        let n = self.ues as usize;
        Ok(match self.shape {
            ArrivalShape::Delta => vec![0.0; n],
            ArrivalShape::Uniform => (0..n).map(|_| rng.random::<f64>() * self.window_ms).collect(),
            ArrivalShape::Beta { alpha, beta } => {
                let dist = Beta::new(alpha, beta).map_err(|e| domain(e.to_string()))?;
                (0..n)
                    .map(|_| {
                        // T_a * Beta draws land in [0, T_a]; keep the window half-open.
                        let t = dist.sample(rng) * self.window_ms;
                        t.min(self.window_ms * (1.0 - f64::EPSILON))
                    })
                    .collect()
            }
        })
    }
}

/// Maps activation times to the 0-based round in which each UE first contends.
pub fn activation_rounds(times_ms: &[f64], round_duration_ms: f64) -> Vec<u32> {
    times_ms.iter().map(|&t| (t / round_duration_ms).floor() as u32).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    #[test]
    fn delta_samples_are_zero() {
        let mut rng = stream(1, 0, Stream::Activation);
        assert_eq!(BurstScenario::delta(5).sample_activation_times(&mut rng).unwrap(), vec![0.0; 5]);
    }

    #[test]
    fn delta_expected_arrivals() {
        let s = BurstScenario::delta(700);
        assert_eq!(s.expected_arrivals_in_round(0, 10.0_f64), 700.0);
        assert_eq!(s.expected_arrivals_in_round(3, 10.0_f64), 0.0);
        assert_eq!(s.arrival_rounds(10.0_f64), 1);
    }

    #[test]
    fn uniform_expected_arrivals_are_flat() {
        let s = BurstScenario::uniform(1000, 1000.0);
        for i in 0..100 {
            assert!((s.expected_arrivals_in_round(i, 10.0_f64) - 10.0).abs() < 1e-9);
        }
        assert_eq!(s.expected_arrivals_in_round(100, 10.0_f64), 0.0);
    }

    #[test]
    fn expected_arrivals_sum_to_n() {
        for s in [BurstScenario::beta(4321), BurstScenario::uniform(4321, 1000.0), BurstScenario::delta(4321)] {
            let total: f64 = s.expected_arrivals(10.0).iter().sum();
            assert!((total - 4321.0).abs() < 1e-9, "{:?}: {total}", s.shape);
        }
        let total: f32 = BurstScenario::beta(1000).expected_arrivals(10.0_f32).iter().sum();
        assert!((total - 1000.0).abs() < 1e-2);
    }

    #[test]
    fn invalid_beta_rejected() {
        let s = BurstScenario { ues: 3, shape: ArrivalShape::Beta { alpha: 0.0, beta: 4.0 }, window_ms: 1000.0 };
        let mut rng = stream(1, 0, Stream::Activation);
        assert!(s.sample_activation_times(&mut rng).is_err());
    }

    #[test]
    fn activation_rounds_floor() {
        assert_eq!(activation_rounds(&[0.0, 9.99, 10.0, 995.0], 10.0), vec![0, 0, 1, 99]);
    }
}
