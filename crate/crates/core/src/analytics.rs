//! Closed-form single-round expectations, the throughput/resource Pareto
//! frontier and the drift predictor of burst resolution time.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::model::{levels, OperatingPoint, SystemConfig};
use crate::scalar::{pow_one_minus, Scalar};
use crate::traffic::BurstScenario;

fn check_inputs<T: Scalar>(n: T, p: T, m: u32) -> Result<()> {
    if !(n >= T::zero()) || !n.is_finite() {
        return Err(domain(format!("contender count {n} must be finite and non-negative")));
    }
    if !(p > T::zero() && p <= T::one()) {
        return Err(domain(format!("access probability {p} outside (0, 1]")));
    }
    if m == 0 {
        return Err(domain("at least one preamble is required"));
    }
    Ok(())
}

/// Expected successes in a round with `n` contenders, access probability
/// `p`, `2^k` priority levels and `m` preambles:
///
/// `S = (n p / l) * sum_{h=1..l} (1 - (h / l)(p / m))^(n - 1)`.
///
/// The sum is evaluated term by term.
pub fn expected_throughput<T: Scalar>(n: T, p: T, k: u32, m: u32) -> Result<T> {
    check_inputs(n, p, m)?;
    if k > 30 {
        return Err(domain(format!("k = {k} too large for direct summation")));
    }
    Ok(throughput_unchecked(n, p, k, m))
}

pub(crate) fn throughput_unchecked<T: Scalar>(n: T, p: T, k: u32, m: u32) -> T {
    if n == T::zero() {
        return T::zero();
    }
    let l = levels(k);
    let lf = T::count(l);
    let step = p / (lf * T::count(u64::from(m)));
    let e = n - T::one();
    let mut acc = T::zero();
    for h in 1..=l {
        acc = acc + pow_one_minus(T::count(h) * step, e);
    }
    n * p / lf * acc
}

/// Expected throughput and its derivative with respect to `p`.
pub fn throughput_and_slope<T: Scalar>(n: T, p: T, k: u32, m: u32) -> Result<(T, T)> {
    check_inputs(n, p, m)?;
    Ok(throughput_and_slope_unchecked(n, p, k, m))
}

pub(crate) fn throughput_and_slope_unchecked<T: Scalar>(n: T, p: T, k: u32, m: u32) -> (T, T) {
    if n == T::zero() {
        return (T::zero(), T::zero());
    }
    let l = levels(k);
    let lf = T::count(l);
    let unit = T::one() / (lf * T::count(u64::from(m)));
    let e = n - T::one();
    let mut sum = T::zero();
    let mut weighted = T::zero();
    for h in 1..=l {
        let hu = T::count(h) * unit;
        let x = hu * p;
        let g = pow_one_minus(x, e);
        let base = T::one() - x;
        let g_lower = if base > T::zero() { g / base } else { pow_one_minus(x, e - T::one()) };
        sum = sum + g;
        weighted = weighted + hu * g_lower;
    }
    let s = n * p / lf * sum;
    let ds = n / lf * (sum - p * e * weighted);
    (s, ds)
}

/// Expected occupied preambles: `m - m (1 - p / m)^n`.
pub fn expected_occupied<T: Scalar>(n: T, p: T, m: u32) -> Result<T> {
    check_inputs(n, p, m)?;
    Ok(occupied_unchecked(n, p, m))
}

pub(crate) fn occupied_unchecked<T: Scalar>(n: T, p: T, m: u32) -> T {
    if n == T::zero() {
        return T::zero();
    }
    let mf = T::count(u64::from(m));
    mf - mf * pow_one_minus(p / mf, n)
}

/// Expected uplink consumption `R1 + r3 (1 + k delta) E[M_O]`.
pub fn expected_resources<T: Scalar>(n: T, point: OperatingPoint<T>, config: &SystemConfig<T>) -> Result<T> {
    check_inputs(n, point.p, config.preambles)?;
    Ok(resources_unchecked(n, point.p, point.k, config))
}

pub(crate) fn resources_unchecked<T: Scalar>(n: T, p: T, k: u32, config: &SystemConfig<T>) -> T {
    config.prach_rb + config.per_occupied_rb(k) * occupied_unchecked(n, p, config.preambles)
}

/// One evaluated operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrontierPoint<T> {
    pub throughput: T,
    pub resources: T,
    pub point: OperatingPoint<T>,
}

impl<T: Scalar> FrontierPoint<T> {
    /// `self` is at least as good in both objectives and strictly better in one.
    pub fn dominates(&self, other: &Self) -> bool {
        self.throughput >= other.throughput
            && self.resources <= other.resources
            && (self.throughput > other.throughput || self.resources < other.resources)
    }
}

#[derive(Debug, Clone)]
pub struct ParetoFrontier<T> {
    /// Non-dominated points, by increasing resources.
    pub points: Vec<FrontierPoint<T>>,
    /// Achievable curve for every `k` in `[0, k_max]`, by increasing `p`.
    pub curves: Vec<Vec<FrontierPoint<T>>>,
    /// Least upper bound of frontier throughput as `k` grows without bound.
    pub throughput_supremum: T,
}

/// Uniform access-probability grid `res, 2 res, ..., 1`.
pub fn p_grid<T: Scalar>(resolution: T) -> Result<Vec<T>> {
    if !(resolution > T::zero() && resolution <= T::one()) {
        return Err(domain(format!("grid resolution {resolution} outside (0, 1]")));
    }
    let steps = (T::one() / resolution).round().to_u64().unwrap_or(0).max(1);
    let stepsf = T::count(steps);
    Ok((1..=steps).map(|j| T::count(j) / stepsf).collect())
}

/// Keeps the points not dominated by any other (higher throughput, lower
/// resources), sorted by increasing resources.
pub fn non_dominated<T: Scalar>(candidates: &[FrontierPoint<T>]) -> Vec<FrontierPoint<T>> {
    let mut sorted = candidates.to_vec();
    sorted.sort_by(|a, b| {
        a.resources
            .partial_cmp(&b.resources)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(b.throughput.partial_cmp(&a.throughput).unwrap_or(std::cmp::Ordering::Equal))
    });
    let mut out: Vec<FrontierPoint<T>> = Vec::new();
    for c in sorted {
        if out.last().map_or(true, |best| c.throughput > best.throughput) {
            out.push(c);
        }
    }
    out
}

/// Enumerates `(S, R)` over `k in [0, k_max]` and a `p` grid, then filters to
/// the Pareto-optimal set.
pub fn pareto_frontier<T: Scalar>(n: T, config: &SystemConfig<T>, p_resolution: T) -> Result<ParetoFrontier<T>> {
    config.validate()?;
    if !(n >= T::one()) {
        return Err(domain("the frontier needs at least one contender"));
    }
    let grid = p_grid(p_resolution)?;
    let curves: Vec<Vec<FrontierPoint<T>>> = (0..=config.k_max)
        .map(|k| {
            grid.iter()
                .map(|&p| FrontierPoint {
                    throughput: throughput_unchecked(n, p, k, config.preambles),
                    resources: resources_unchecked(n, p, k, config),
                    point: OperatingPoint { p, k },
                })
                .collect()
        })
        .collect();
    let all: Vec<_> = curves.iter().flatten().copied().collect();
    let points = non_dominated(&all);

    let grid_best = points.iter().map(|f| f.throughput).fold(T::neg_infinity(), T::max);
    // Throughput at p = 1 is a right Riemann sum with l = 2^k nodes of the
    // occupancy integral, the supremum over all (p, k). Its error expands in
    // 1/l, 1/l^2, 1/l^4, so two Richardson steps over the last three
    // doublings remove the leading terms.
    let throughput_supremum = if config.k_max >= 2 {
        let at_one = |k: u32| throughput_unchecked(n, T::one(), k, config.preambles);
        let (a, b, c) = (at_one(config.k_max - 2), at_one(config.k_max - 1), at_one(config.k_max));
        let two = T::c(2.0);
        let r_prev = two * b - a;
        let r_last = two * c - b;
        ((T::c(4.0) * r_last - r_prev) / T::c(3.0)).max(grid_best)
    } else {
        grid_best
    };
    Ok(ParetoFrontier { points, curves, throughput_supremum })
}

/// One round of the drift recursion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftRow<T> {
    pub round: usize,
    /// Expected backlog at the start of the round, this round's arrivals included.
    pub backlog: T,
    pub arrivals: T,
    pub successes: T,
    pub point: OperatingPoint<T>,
}

#[derive(Debug, Clone)]
pub struct DriftPrediction<T> {
    pub rounds_to_resolution: usize,
    pub trajectory: Vec<DriftRow<T>>,
    pub epsilon: T,
}

pub const DEFAULT_DRIFT_EPSILON: f64 = 1.0;
pub const DEFAULT_DRIFT_ROUND_CAP: usize = 1_000_000;

/// Iterates `E[n_{i+1}] = E[n_i] - S(E[n_i]) + E[a_{i+1}]` until the expected
/// backlog drops below `epsilon` with no arrivals left.
///
/// `policy` maps the expected backlog to the operating point used in the round.
pub fn drift_burst_resolution<T, F>(
    scenario: &BurstScenario,
    mut policy: F,
    config: &SystemConfig<T>,
    epsilon: T,
    round_cap: usize,
) -> Result<DriftPrediction<T>>
where
    T: Scalar,
    F: FnMut(T) -> Result<OperatingPoint<T>>,
{
    config.validate()?;
    scenario.validate()?;
    if !(epsilon > T::zero()) {
        return Err(domain("drift threshold epsilon must be positive"));
    }
    let arrivals = scenario.expected_arrivals(config.round_duration_ms);
    let mut trajectory = Vec::new();
    let mut backlog = T::zero();
    for round in 0..=round_cap {
        let a = arrivals.get(round).copied().unwrap_or_else(T::zero);
        backlog = backlog + a;
        if round >= arrivals.len() && backlog < epsilon {
            return Ok(DriftPrediction { rounds_to_resolution: round, trajectory, epsilon });
        }
        if round == round_cap {
            break;
        }
        let point = policy(backlog)?;
        // for a fractional backlog below one the formula can exceed the backlog
        let s = expected_throughput(backlog, point.p, point.k, config.preambles)?.min(backlog);
        trajectory.push(DriftRow { round, backlog, arrivals: a, successes: s, point });
        backlog = backlog - s;
    }
    Err(Error::Diverged { rounds: round_cap, backlog: backlog.to_f64_lossy() })
}
