//! Pseudo-Bayesian backlog estimation with burst boosting.
//!
//! Each round the controller first corrects its a-priori backlog from the
//! number of idle preambles, then rolls the estimate forward by subtracting
//! the observed successes and adding a boosted arrival term while the
//! corrections keep pointing upward.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::scalar::Scalar;

/// Which estimate the next prior is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateBase {
    /// `n_prior_next = n_prior + q * delta - s`. Downward corrections are
    /// never applied, so an overshoot persists until the backlog drains.
    Prior,
    /// `n_prior_next = n_posterior + q * delta - s`.
    #[default]
    Posterior,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorState<T> {
    pub n_prior: T,
    pub n_posterior: T,
    pub delta_n: T,
    pub boost_q: u32,
}

/// Lower bound of the prior. The idle correction is proportional to the
/// prior, so a prior of zero could never move again.
pub const PRIOR_FLOOR: f64 = 1.0;

impl<T: Scalar> Default for EstimatorState<T> {
    fn default() -> Self {
        Self { n_prior: T::one(), n_posterior: T::one(), delta_n: T::zero(), boost_q: 0 }
    }
}

/// Correction of the prior given `idle` of `m` preambles were idle at access
/// probability `p`. Zero when no contenders are expected.
pub fn idle_correction<T: Scalar>(n_prior: T, p: T, idle: u32, m: u32) -> T {
    if !(n_prior > T::zero()) {
        return T::zero();
    }
    let mf = T::count(u64::from(m));
    let x = p * n_prior / mf;
    let expected_idle_fraction = (-x).exp();
    let denom = -(-x).exp_m1();
    if !(denom > T::zero()) {
        return T::zero();
    }
    p * n_prior * (expected_idle_fraction - T::count(u64::from(idle)) / mf) / denom
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacklogEstimator<T> {
    state: EstimatorState<T>,
    base: UpdateBase,
    preambles: u32,
}

impl<T: Scalar> BacklogEstimator<T> {
    pub fn new(preambles: u32, base: UpdateBase) -> Self {
        Self { state: EstimatorState::default(), base, preambles }
    }

    pub fn with_state(preambles: u32, base: UpdateBase, state: EstimatorState<T>) -> Self {
        Self { state, base, preambles }
    }

    pub fn state(&self) -> &EstimatorState<T> {
        &self.state
    }

    pub fn prior(&self) -> T {
        self.state.n_prior
    }

    pub fn posterior(&self) -> T {
        self.state.n_posterior
    }

    /// Posterior update from the idle-preamble count of the current round.
    pub fn observe_idle(&mut self, p: T, idle: u32) -> Result<&EstimatorState<T>> {
        if idle > self.preambles {
            return Err(domain(format!("idle count {idle} exceeds {} preambles", self.preambles)));
        }
        if !(p > T::zero() && p <= T::one()) {
            return Err(domain(format!("access probability {p} outside (0, 1]")));
        }
        let delta = idle_correction(self.state.n_prior, p, idle, self.preambles);
        self.state.delta_n = delta;
        self.state.n_posterior = (self.state.n_prior + delta).max(T::zero());
        Ok(&self.state)
    }

    /// Boost bookkeeping and the prior for the next round.
    pub fn observe_successes(&mut self, successes: u32) -> T {
        let delta = self.state.delta_n;
        self.state.boost_q = if delta > T::zero() { self.state.boost_q + 1 } else { 0 };
        let base = match self.base {
            UpdateBase::Prior => self.state.n_prior,
            UpdateBase::Posterior => self.state.n_posterior,
        };
        let boost = T::count(u64::from(self.state.boost_q)) * delta.max(T::zero());
        let next = (base + boost - T::count(u64::from(successes))).max(T::c(PRIOR_FLOOR));
        self.state.n_prior = next;
        next
    }
}
