//! Replication aggregates: mean service time, total resources and
//! efficiency, each with a Student-t confidence half-width.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{domain, Result};
use crate::sim::SimulationResult;

pub const CONFIDENCE: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SummaryOptions {
    /// Leave rounds without any occupied preamble out of the efficiency
    /// average.
    #[serde(default)]
    pub skip_idle_rounds: bool,
}

/// Mean with an optional confidence half-width (absent below two samples).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub ci_halfwidth: Option<f64>,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(domain("no samples to summarize"));
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        if samples.len() < 2 {
            return Ok(Self { mean, ci_halfwidth: None });
        }
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let t = StudentsT::new(0.0, 1.0, n - 1.0).map_err(|e| domain(e.to_string()))?;
        let quantile = t.inverse_cdf(0.5 + CONFIDENCE / 2.0);
        Ok(Self { mean, ci_halfwidth: Some(quantile * (var / n).sqrt()) })
    }

    pub fn relative_halfwidth(&self) -> Option<f64> {
        self.ci_halfwidth.map(|h| if self.mean == 0.0 { if h == 0.0 { 0.0 } else { f64::INFINITY } } else { h / self.mean.abs() })
    }

    pub fn lower(&self) -> f64 {
        self.mean - self.ci_halfwidth.unwrap_or(0.0)
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.ci_halfwidth.unwrap_or(0.0)
    }

    /// True when the confidence intervals do not overlap and `self` lies below.
    pub fn significantly_below(&self, other: &Estimate) -> bool {
        self.upper() < other.lower()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean_service_time: Estimate,
    pub total_resources: Estimate,
    pub efficiency: Estimate,
    pub rounds_to_resolution: Estimate,
    pub replications: usize,
}

impl MetricSummary {
    /// Largest relative CI half-width across the three headline metrics.
    pub fn worst_relative_halfwidth(&self) -> Option<f64> {
        [self.mean_service_time, self.total_resources, self.efficiency]
            .iter()
            .map(Estimate::relative_halfwidth)
            .try_fold(0.0_f64, |acc, h| h.map(|h| acc.max(h)))
    }
}

/// Average over a run's rounds of `s_i / R_i`.
pub fn run_efficiency(result: &SimulationResult, options: &SummaryOptions) -> f64 {
    let mut sum = 0.0;
    let mut rounds = 0usize;
    for row in &result.trace {
        if options.skip_idle_rounds && row.occupied == 0 {
            continue;
        }
        sum += f64::from(row.successes) / row.resources_rb;
        rounds += 1;
    }
    if rounds == 0 {
        0.0
    } else {
        sum / rounds as f64
    }
}

/// Mean service time of one run in milliseconds.
pub fn run_mean_service_time(result: &SimulationResult) -> f64 {
    let times = result.service_times_ms();
    if times.is_empty() {
        0.0
    } else {
        times.iter().sum::<f64>() / times.len() as f64
    }
}

pub fn summarize(results: &[SimulationResult], options: &SummaryOptions) -> Result<MetricSummary> {
    if results.is_empty() {
        return Err(domain("cannot summarize zero replications"));
    }
    let collect = |f: &dyn Fn(&SimulationResult) -> f64| results.iter().map(f).collect::<Vec<_>>();
    Ok(MetricSummary {
        mean_service_time: Estimate::from_samples(&collect(&run_mean_service_time))?,
        total_resources: Estimate::from_samples(&collect(&SimulationResult::total_resources))?,
        efficiency: Estimate::from_samples(&collect(&|r| run_efficiency(r, options)))?,
        rounds_to_resolution: Estimate::from_samples(&collect(&|r| r.rounds_to_resolution() as f64))?,
        replications: results.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{TraceRow, UeState, UeStatus};

    fn row(round: u64, occupied: u32, successes: u32, k: u32) -> TraceRow {
        let resources = 6.0 + 2.0 * (1.0 + f64::from(k) * 0.07) * f64::from(occupied);
        TraceRow {
            round,
            n_true: 0,
            n_hat_prior: 0.0,
            n_hat_post: 0.0,
            delta_n: 0.0,
            q_boost: 0,
            p: 1.0,
            k,
            idle: 54 - occupied,
            occupied,
            successes,
            resources_rb: resources,
            epsilon_r: f64::NAN,
            expected_rb: f64::NAN,
        }
    }

    fn single_ue() -> SimulationResult {
        SimulationResult {
            protocol: "x".into(),
            round_duration_ms: 10.0,
            ues: vec![UeState { id: 0, activation_round: 0, status: UeStatus::Connected, success_round: Some(0) }],
            trace: vec![row(0, 1, 1, 0)],
        }
    }

    #[test]
    fn single_run_single_ue() {
        let s = summarize(&[single_ue()], &SummaryOptions::default()).unwrap();
        assert_eq!(s.mean_service_time.mean, 10.0);
        assert_eq!(s.mean_service_time.ci_halfwidth, None);
        assert_eq!(s.total_resources.mean, 8.0);
        assert_eq!(s.efficiency.mean, 1.0 / 8.0);
    }

    #[test]
    fn idle_rounds_count_as_zero() {
        let mut r = single_ue();
        r.trace = vec![row(0, 0, 0, 0), row(1, 1, 1, 0)];
        r.ues[0].success_round = Some(1);
        assert_eq!(run_efficiency(&r, &SummaryOptions::default()), 0.5 / 8.0);
        assert_eq!(run_efficiency(&r, &SummaryOptions { skip_idle_rounds: true }), 1.0 / 8.0);
    }

    #[test]
    fn efficiency_round_terms_follow_definition() {
        let mut r = single_ue();
        r.trace = vec![row(0, 10, 4, 3), row(1, 20, 8, 3)];
        let want = (4.0 / (6.0 + 2.0 * 1.21 * 10.0) + 8.0 / (6.0 + 2.0 * 1.21 * 20.0)) / 2.0;
        assert!((run_efficiency(&r, &SummaryOptions::default()) - want).abs() < 1e-12);
        assert!(run_efficiency(&r, &SummaryOptions::default()) <= 54.0 / 6.0);
    }

    #[test]
    fn student_t_halfwidth() {
        let e = Estimate::from_samples(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(e.mean, 3.0);
        // t_{0.975, 4} = 2.776445
        let want = 2.776_445_105_197_8 * (2.5_f64 / 5.0).sqrt();
        assert!((e.ci_halfwidth.unwrap() - want).abs() < 1e-9);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(summarize(&[], &SummaryOptions::default()).is_err());
    }
}
