//! Resource-constrained throughput maximization.
//!
//! The per-round problem is: maximize expected throughput over `(p, k)`
//! subject to expected consumption `R <= epsilon_r`. For a fixed `k` the
//! throughput is unimodal in `p` and consumption is increasing in `p`, so the
//! constrained optimum is `min(p_unconstrained, p_max)`; the outer problem is
//! a scan over `k in [0, k_max]`.

use serde::{Deserialize, Serialize};

use crate::analytics::{occupied_unchecked, resources_unchecked, throughput_and_slope_unchecked, throughput_unchecked};
use crate::error::{domain, Error, Result};
use crate::model::{levels, OperatingPoint, SystemConfig};
use crate::scalar::Scalar;

/// Per-round expected-consumption cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceBudget<T> {
    /// Resource blocks allowed per round.
    pub epsilon_r: T,
    /// Multiple of the d-ACB reference consumption the cap was derived from
    /// (1 when the cap was given directly).
    pub proportionality_c: T,
}

impl<T: Scalar> ResourceBudget<T> {
    pub fn fixed(epsilon_r: T) -> Self {
        Self { epsilon_r, proportionality_c: T::one() }
    }

    /// `C` times the expected consumption of d-ACB (`p = min(1, M / n)`, no
    /// CRSs) at backlog `n_hat`.
    pub fn proportional(c: T, n_hat: T, config: &SystemConfig<T>) -> Result<Self> {
        if !(c >= T::one()) {
            return Err(domain(format!("proportionality constant {c} must be at least 1")));
        }
        let n = n_hat.max(T::zero());
        let p = aloha_optimal_p(n, config.preambles);
        let reference = resources_unchecked(n, p, 0, config);
        Ok(Self { epsilon_r: c * reference, proportionality_c: c })
    }

    fn check(&self, config: &SystemConfig<T>) -> Result<()> {
        if !(self.epsilon_r > config.prach_rb) {
            return Err(Error::Infeasible {
                epsilon_r: self.epsilon_r.to_f64_lossy(),
                prach: config.prach_rb.to_f64_lossy(),
            });
        }
        Ok(())
    }
}

/// How the real-valued CRS count is turned into an integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrsRounding {
    /// Largest `k` whose expected consumption fits the budget.
    #[default]
    Floor,
    /// Nearest integer, ties to even.
    NearestEven,
}

/// Which idle-preamble term the CRS rule uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintMode {
    /// Expected idle preambles at the current estimate.
    #[default]
    Soft,
    /// Observed idle preambles of the current round.
    Hard,
}

/// Fixed-`k` maximizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedKMethod {
    /// Bisection on the analytic slope of the exact throughput sum.
    #[default]
    Exact,
    /// Root of the exponential approximation of the throughput.
    RootFind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OptimizerOptions {
    #[serde(default)]
    pub rounding: CrsRounding,
    #[serde(default)]
    pub constraint: ConstraintMode,
    #[serde(default)]
    pub fixed_k: FixedKMethod,
}

/// A solved operating point with its expected objectives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Solution<T> {
    pub point: OperatingPoint<T>,
    pub throughput: T,
    pub resources: T,
}

/// Throughput-maximizing access probability without CRSs: `min(1, M / n)`.
/// An empty backlog gets `p = 1`.
pub fn aloha_optimal_p<T: Scalar>(n: T, m: u32) -> T {
    if n <= T::zero() {
        return T::one();
    }
    (T::count(u64::from(m)) / n).min(T::one())
}

/// Rounds half-way cases to the even neighbour.
pub fn round_half_even<T: Scalar>(x: T) -> T {
    let r = x.round();
    if (x - x.trunc()).abs() == T::c(0.5) {
        let half = r / T::c(2.0);
        if half.trunc() != half {
            return r - x.signum();
        }
    }
    r
}

/// The real-valued CRS count at which expected consumption meets the budget,
/// given the expected (or observed) number of occupied preambles.
pub fn crs_count_real<T: Scalar>(occupied: T, budget: &ResourceBudget<T>, config: &SystemConfig<T>) -> Option<T> {
    if !(occupied > T::zero()) {
        return None;
    }
    let ratio = (budget.epsilon_r - config.prach_rb) / (config.msg3_rb * occupied);
    Some((ratio - T::one()) / config.crs_overhead)
}

/// CRS decision for a known occupied-preamble term, clamped to `[0, k_max]`.
pub fn crs_decision_for_occupancy<T: Scalar>(
    occupied: T,
    budget: &ResourceBudget<T>,
    config: &SystemConfig<T>,
    rounding: CrsRounding,
) -> u32 {
    let Some(raw) = crs_count_real(occupied, budget, config) else {
        return 0;
    };
    let k = match rounding {
        // guards against raw values a few ulps below an integer
        CrsRounding::Floor => (raw + T::c(1e-9)).floor(),
        CrsRounding::NearestEven => round_half_even(raw),
    };
    if !(k > T::zero()) {
        return 0;
    }
    k.min(T::count(u64::from(config.k_max))).to_u32().unwrap_or(config.k_max)
}

/// Number of CRSs for the round, from the budget and the expected occupancy
/// `M - M (1 - p / M)^n_hat`. Returns 0 when no preamble is expected to be
/// occupied.
pub fn crs_decision<T: Scalar>(
    n_hat: T,
    p: T,
    budget: &ResourceBudget<T>,
    config: &SystemConfig<T>,
    rounding: CrsRounding,
) -> u32 {
    let n = n_hat.max(T::zero());
    let occupied = occupied_unchecked(n, p, config.preambles);
    crs_decision_for_occupancy(occupied, budget, config, rounding)
}

/// Largest `p` whose expected consumption at `k` CRSs fits the budget, or
/// `None` when every `p <= 1` fits.
pub fn p_max<T: Scalar>(n: T, k: u32, budget: &ResourceBudget<T>, config: &SystemConfig<T>) -> Result<Option<T>> {
    budget.check(config)?;
    if n <= T::zero() {
        return Ok(None);
    }
    let m = config.m();
    let allowed_occupied = (budget.epsilon_r - config.prach_rb) / config.per_occupied_rb(k);
    let base = T::one() - allowed_occupied / m;
    if base <= T::zero() {
        return Ok(None);
    }
    let p = m - m * base.powf(T::one() / n);
    Ok(if p >= T::one() { None } else { Some(p) })
}

/// Maximizer of the exact expected throughput over `p in (0, 1]` at fixed `k`.
pub fn unconstrained_maximizer<T: Scalar>(n: T, k: u32, m: u32) -> T {
    let (_, slope_at_one) = throughput_and_slope_unchecked(n, T::one(), k, m);
    if slope_at_one >= T::zero() {
        return T::one();
    }
    bisect_slope(n, k, m, T::zero(), T::one())
}

// Slope is positive at `lo` and negative at `hi`.
fn bisect_slope<T: Scalar>(n: T, k: u32, m: u32, mut lo: T, mut hi: T) -> T {
    let tol = T::epsilon().sqrt() * T::c(1e-4);
    for _ in 0..200 {
        if hi - lo <= tol * hi {
            break;
        }
        let mid = (lo + hi) / T::c(2.0);
        let (_, slope) = throughput_and_slope_unchecked(n, mid, k, m);
        if slope > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / T::c(2.0)
}

/// Stationarity condition of the exponential throughput approximation in the
/// normalized load `x = n p / (M l)`.
pub fn stationarity<T: Scalar>(x: T, l: T) -> T {
    let one = T::one();
    let em1 = (-x).exp_m1(); // e^{-x} - 1
    let e_xl = (-x * l).exp();
    // (1 - x) - e^{-x} written as -(expm1(-x) + x)
    -(em1 + x) + e_xl * ((one - x * l) * em1 + x)
}

/// Access probability from the root of [`stationarity`] on
/// `(0, n / (M l)]`; falls back to `x = n / (M l)` when there is no sign
/// change. The result is capped at 1.
pub fn root_find_p<T: Scalar>(n: T, k: u32, m: u32) -> Result<T> {
    if !(n > T::zero()) {
        return Err(domain("root finding needs a positive backlog"));
    }
    let l = T::count(levels(k));
    let mf = T::count(u64::from(m));
    let x_hi = n / (mf * l);
    let x_star = if stationarity(x_hi, l) >= T::zero() {
        x_hi
    } else {
        // find a left end with positive value (the function vanishes at 0)
        let mut lo = x_hi;
        let mut found = false;
        for _ in 0..200 {
            lo = lo / T::c(2.0);
            if stationarity(lo, l) > T::zero() {
                found = true;
                break;
            }
        }
        if !found {
            x_hi
        } else {
            let mut hi = x_hi;
            let tol = T::c(1e-12).max(T::epsilon());
            for _ in 0..300 {
                if hi - lo <= tol {
                    break;
                }
                let mid = (lo + hi) / T::c(2.0);
                if stationarity(mid, l) > T::zero() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            (lo + hi) / T::c(2.0)
        }
    };
    Ok((x_star * mf * l / n).min(T::one()))
}

/// Constrained maximizer of throughput over `p` for a fixed `k`.
pub fn solve_fixed_k<T: Scalar>(
    n: T,
    k: u32,
    budget: &ResourceBudget<T>,
    config: &SystemConfig<T>,
    method: FixedKMethod,
) -> Result<T> {
    budget.check(config)?;
    if !(n >= T::zero()) {
        return Err(domain("backlog must be non-negative"));
    }
    if n <= T::one() {
        // S = n p for a single contender: increasing in p
        return Ok(p_max(n, k, budget, config)?.unwrap_or_else(T::one).min(T::one()));
    }
    let cap = p_max(n, k, budget, config)?;
    let m = config.preambles;
    match method {
        FixedKMethod::Exact => match cap {
            None => Ok(unconstrained_maximizer(n, k, m)),
            Some(pm) => {
                let (_, slope) = throughput_and_slope_unchecked(n, pm, k, m);
                if slope >= T::zero() {
                    Ok(pm)
                } else {
                    Ok(bisect_slope(n, k, m, T::zero(), pm))
                }
            }
        },
        FixedKMethod::RootFind => {
            let p = root_find_p(n, k, m)?;
            Ok(cap.map_or(p, |pm| p.min(pm)))
        }
    }
}

/// Scans `k in [0, k_max]`, solves each fixed-`k` problem and keeps the
/// highest throughput; equal throughputs go to the lower consumption.
pub fn solve<T: Scalar>(
    n_hat: T,
    budget: &ResourceBudget<T>,
    config: &SystemConfig<T>,
    method: FixedKMethod,
) -> Result<Solution<T>> {
    budget.check(config)?;
    let n = n_hat.max(T::zero());
    if n < T::one() {
        let point = OperatingPoint { p: T::one(), k: 0 };
        return Ok(Solution {
            point,
            throughput: throughput_unchecked(n, T::one(), 0, config.preambles),
            resources: resources_unchecked(n, T::one(), 0, config),
        });
    }
    let tie = T::c(1e-12);
    let mut best: Option<Solution<T>> = None;
    for k in 0..=config.k_max {
        let p = solve_fixed_k(n, k, budget, config, method)?;
        let candidate = Solution {
            point: OperatingPoint { p, k },
            throughput: throughput_unchecked(n, p, k, config.preambles),
            resources: resources_unchecked(n, p, k, config),
        };
        best = Some(match best {
            None => candidate,
            Some(b) => {
                let margin = tie * b.throughput.abs().max(T::one());
                if candidate.throughput > b.throughput + margin
                    || ((candidate.throughput - b.throughput).abs() <= margin && candidate.resources < b.resources)
                {
                    candidate
                } else {
                    b
                }
            }
        });
    }
    Ok(best.expect("k range is never empty"))
}

/// The operating point maximizing expected throughput under the budget.
pub fn solve_operating_point<T: Scalar>(
    n_hat: T,
    budget: &ResourceBudget<T>,
    config: &SystemConfig<T>,
) -> Result<OperatingPoint<T>> {
    Ok(solve(n_hat, budget, config, FixedKMethod::Exact)?.point)
}

/// d-ACB policy: `(min(1, M / n), 0)`.
pub fn dacb_point<T: Scalar>(n: T, config: &SystemConfig<T>) -> OperatingPoint<T> {
    OperatingPoint { p: aloha_optimal_p(n, config.preambles), k: 0 }
}

/// DBCA policy at backlog `n`: budget `C` times the d-ACB reference, then the
/// constrained solver.
pub fn dbca_point<T: Scalar>(n: T, c: T, config: &SystemConfig<T>, method: FixedKMethod) -> Result<OperatingPoint<T>> {
    let budget = ResourceBudget::proportional(c, n, config)?;
    Ok(solve(n, &budget, config, method)?.point)
}
