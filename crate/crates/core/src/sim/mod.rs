//! Round-synchronous burst simulation for DBCA, d-ACB and q-ary TRA.

mod engine;
mod qtra;

pub use engine::{constant_backlog_round, ArbitrationSummary, Channel};
pub use qtra::run_qtra;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{BacklogEstimator, UpdateBase};
use crate::model::SystemConfig;
use crate::optimizer::{
    aloha_optimal_p, crs_decision, crs_decision_for_occupancy, solve, ConstraintMode, OptimizerOptions,
    ResourceBudget,
};
use crate::analytics::resources_unchecked;
use crate::rng::{label_key, stream, RoundStreams, Stream};
use crate::scalar::Scalar;
use crate::traffic::{activation_rounds, BurstScenario};

pub const DEFAULT_ROUND_CAP: usize = 200_000;

/// One row of the per-round trace. Estimator columns are `NaN` for
/// protocols without an estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub round: u64,
    pub n_true: u64,
    pub n_hat_prior: f64,
    pub n_hat_post: f64,
    pub delta_n: f64,
    pub q_boost: u32,
    pub p: f64,
    pub k: u32,
    pub idle: u32,
    pub occupied: u32,
    pub successes: u32,
    pub resources_rb: f64,
    pub epsilon_r: f64,
    pub expected_rb: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UeStatus {
    Dormant,
    Contending,
    Connected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UeState {
    pub id: u32,
    pub activation_round: u32,
    pub status: UeStatus,
    pub success_round: Option<u32>,
}

impl UeState {
    pub fn service_time_ms(&self, round_duration_ms: f64) -> Option<f64> {
        self.success_round.map(|s| f64::from(s - self.activation_round + 1) * round_duration_ms)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub protocol: String,
    pub round_duration_ms: f64,
    pub ues: Vec<UeState>,
    pub trace: Vec<TraceRow>,
}

impl SimulationResult {
    /// Rounds until the last UE connected (0 for an empty burst).
    pub fn rounds_to_resolution(&self) -> u64 {
        self.ues.iter().filter_map(|u| u.success_round).max().map_or(0, |r| u64::from(r) + 1)
    }

    pub fn total_resources(&self) -> f64 {
        self.trace.iter().map(|r| r.resources_rb).sum()
    }

    pub fn service_times_ms(&self) -> Vec<f64> {
        self.ues.iter().filter_map(|u| u.service_time_ms(self.round_duration_ms)).collect()
    }

    pub fn total_successes(&self) -> u64 {
        self.trace.iter().map(|r| u64::from(r.successes)).sum()
    }
}

/// Seeding and termination controls shared by every protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub master_seed: u64,
    pub replication: u64,
    pub round_cap: usize,
}

impl RunOptions {
    pub fn new(master_seed: u64, replication: u64) -> Self {
        Self { master_seed, replication, round_cap: DEFAULT_ROUND_CAP }
    }

    /// Stream key: depends on the scenario and replication, not on the
    /// protocol, so protocols see identical activation draws.
    pub fn key(&self, scenario: &BurstScenario) -> u64 {
        label_key(&format!("{}:{}:{}:{}", scenario.shape.name(), scenario.ues, scenario.window_ms, self.replication))
    }
}

/// Which backlog the proportional budget is computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetReference {
    #[default]
    Estimated,
    Genie,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BudgetRule<T> {
    /// `C` times the d-ACB consumption at the current backlog estimate.
    Proportional { c: T },
    /// A constant cap in resource blocks.
    Fixed { epsilon_r: T },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbcaParams<T> {
    pub budget: BudgetRule<T>,
    pub optimizer: OptimizerOptions,
    pub estimator_base: UpdateBase,
    pub reference: BudgetReference,
}

impl<T: Scalar> DbcaParams<T> {
    pub fn proportional(c: T) -> Self {
        Self {
            budget: BudgetRule::Proportional { c },
            optimizer: OptimizerOptions::default(),
            estimator_base: UpdateBase::default(),
            reference: BudgetReference::default(),
        }
    }

    fn budget(&self, n: T, config: &SystemConfig<T>) -> Result<ResourceBudget<T>> {
        match self.budget {
            BudgetRule::Proportional { c } => ResourceBudget::proportional(c, n, config),
            BudgetRule::Fixed { epsilon_r } => Ok(ResourceBudget::fixed(epsilon_r)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DacbMode {
    #[default]
    Estimated,
    Genie,
}

/// What the controller decided and knew in one round, for the trace.
#[derive(Debug, Clone, Copy)]
struct Decision {
    k: u32,
    n_prior: f64,
    n_post: f64,
    delta_n: f64,
    q: u32,
    epsilon_r: f64,
    expected_rb: f64,
}

trait Controller<T: Scalar> {
    fn name(&self) -> String;
    /// Access probability published before the round.
    fn access_probability(&mut self, n_true: u64) -> T;
    /// CRS count after the idle preambles were observed.
    fn decide(&mut self, p: T, idle: u32, n_true: u64) -> Result<Decision>;
    /// End-of-round bookkeeping.
    fn finish(&mut self, successes: u32) -> Result<()>;
}

struct DbcaController<'a, T> {
    params: DbcaParams<T>,
    config: &'a SystemConfig<T>,
    estimator: BacklogEstimator<T>,
    p_next: T,
    n_true: u64,
}

impl<T: Scalar> DbcaController<'_, T> {
    fn reference_backlog(&self, estimate: T) -> T {
        match self.params.reference {
            BudgetReference::Estimated => estimate,
            BudgetReference::Genie => T::count(self.n_true),
        }
    }
}

impl<T: Scalar> Controller<T> for DbcaController<'_, T> {
    fn name(&self) -> String {
        "dbca".into()
    }

    fn access_probability(&mut self, n_true: u64) -> T {
        self.n_true = n_true;
        self.p_next
    }

    fn decide(&mut self, p: T, idle: u32, _n_true: u64) -> Result<Decision> {
        let prior = self.estimator.prior();
        let state = *self.estimator.observe_idle(p, idle)?;
        let n_post = state.n_posterior;
        let budget = self.params.budget(self.reference_backlog(n_post), self.config)?;
        let rounding = self.params.optimizer.rounding;
        let k = match self.params.optimizer.constraint {
            ConstraintMode::Soft => crs_decision(n_post, p, &budget, self.config, rounding),
            ConstraintMode::Hard => {
                let occupied = T::count(u64::from(self.config.preambles - idle));
                crs_decision_for_occupancy(occupied, &budget, self.config, rounding)
            }
        };
        let expected = resources_unchecked(n_post, p, k, self.config);
        Ok(Decision {
            k,
            n_prior: prior.to_f64_lossy(),
            n_post: n_post.to_f64_lossy(),
            delta_n: state.delta_n.to_f64_lossy(),
            q: state.boost_q,
            epsilon_r: budget.epsilon_r.to_f64_lossy(),
            expected_rb: expected.to_f64_lossy(),
        })
    }

    fn finish(&mut self, successes: u32) -> Result<()> {
        let prior = self.estimator.observe_successes(successes);
        self.p_next = if prior < T::one() {
            T::one()
        } else {
            let budget = self.params.budget(self.reference_backlog(prior), self.config)?;
            solve(prior, &budget, self.config, self.params.optimizer.fixed_k)?.point.p
        };
        Ok(())
    }
}

struct DacbController<'a, T> {
    mode: DacbMode,
    config: &'a SystemConfig<T>,
    estimator: BacklogEstimator<T>,
}

impl<T: Scalar> Controller<T> for DacbController<'_, T> {
    fn name(&self) -> String {
        match self.mode {
            DacbMode::Estimated => "dacb".into(),
            DacbMode::Genie => "dacb_genie".into(),
        }
    }

    fn access_probability(&mut self, n_true: u64) -> T {
        let n = match self.mode {
            DacbMode::Estimated => self.estimator.prior(),
            DacbMode::Genie => T::count(n_true),
        };
        aloha_optimal_p(n, self.config.preambles)
    }

    fn decide(&mut self, p: T, idle: u32, n_true: u64) -> Result<Decision> {
        let nan = f64::NAN;
        match self.mode {
            DacbMode::Estimated => {
                let prior = self.estimator.prior();
                let state = *self.estimator.observe_idle(p, idle)?;
                Ok(Decision {
                    k: 0,
                    n_prior: prior.to_f64_lossy(),
                    n_post: state.n_posterior.to_f64_lossy(),
                    delta_n: state.delta_n.to_f64_lossy(),
                    q: state.boost_q,
                    epsilon_r: nan,
                    expected_rb: resources_unchecked(state.n_posterior, p, 0, self.config).to_f64_lossy(),
                })
            }
            DacbMode::Genie => {
                let n = n_true as f64;
                Ok(Decision {
                    k: 0,
                    n_prior: n,
                    n_post: n,
                    delta_n: nan,
                    q: 0,
                    epsilon_r: nan,
                    expected_rb: resources_unchecked(T::count(n_true), p, 0, self.config).to_f64_lossy(),
                })
            }
        }
    }

    fn finish(&mut self, successes: u32) -> Result<()> {
        if self.mode == DacbMode::Estimated {
            self.estimator.observe_successes(successes);
        }
        Ok(())
    }
}

/// Activation rounds of every UE from the scenario's activation stream.
pub(crate) fn draw_activations(scenario: &BurstScenario, config_round_ms: f64, opts: &RunOptions) -> Result<Vec<u32>> {
    let mut rng = stream(opts.master_seed, opts.key(scenario), Stream::Activation);
    let times = scenario.sample_activation_times(&mut rng)?;
    Ok(activation_rounds(&times, config_round_ms))
}

/// Buckets of UE ids by activation round.
pub(crate) fn arrival_buckets(rounds: &[u32]) -> Vec<Vec<u32>> {
    let last = rounds.iter().copied().max().map_or(0, |r| r as usize + 1);
    let mut buckets = vec![Vec::new(); last];
    for (id, &r) in rounds.iter().enumerate() {
        buckets[r as usize].push(id as u32);
    }
    buckets
}

pub(crate) fn initial_ues(rounds: &[u32]) -> Vec<UeState> {
    rounds
        .iter()
        .enumerate()
        .map(|(id, &r)| UeState { id: id as u32, activation_round: r, status: UeStatus::Dormant, success_round: None })
        .collect()
}

fn run_controlled<T: Scalar, C: Controller<T>>(
    controller: &mut C,
    scenario: &BurstScenario,
    config: &SystemConfig<T>,
    opts: &RunOptions,
) -> Result<SimulationResult> {
    config.validate()?;
    scenario.validate()?;
    let round_ms = config.round_duration_ms.to_f64_lossy();
    let rounds = draw_activations(scenario, round_ms, opts)?;
    let buckets = arrival_buckets(&rounds);
    let mut ues = initial_ues(&rounds);
    let total = ues.len();
    let mut streams = RoundStreams::new(opts.master_seed, opts.key(scenario));
    let mut channel = Channel::new(config.preambles);
    let mut contending: Vec<u32> = Vec::new();
    let mut trace = Vec::new();
    let mut connected = 0usize;
    let mut round = 0usize;
    while connected < total {
        if round >= opts.round_cap {
            return Err(Error::NonTermination { rounds: round, connected, total, trace: Box::new(trace) });
        }
        if let Some(arrivals) = buckets.get(round) {
            for &id in arrivals {
                ues[id as usize].status = UeStatus::Contending;
                contending.push(id);
            }
        }
        let n_true = contending.len() as u64;
        let p = controller.access_probability(n_true);
        let idle = channel.transmit(&contending, p.to_f64_lossy(), &mut streams.acb, &mut streams.preamble);
        let decision = controller.decide(p, idle, n_true)?;
        let summary = channel.arbitrate(decision.k, &mut streams.priority);
        for id in channel.winners() {
            let ue = &mut ues[id as usize];
            ue.status = UeStatus::Connected;
            ue.success_round = Some(round as u32);
        }
        if summary.successes > 0 {
            contending.retain(|&id| ues[id as usize].status != UeStatus::Connected);
        }
        connected += summary.successes as usize;
        controller.finish(summary.successes)?;
        trace.push(TraceRow {
            round: round as u64,
            n_true,
            n_hat_prior: decision.n_prior,
            n_hat_post: decision.n_post,
            delta_n: decision.delta_n,
            q_boost: decision.q,
            p: p.to_f64_lossy(),
            k: decision.k,
            idle: summary.idle,
            occupied: summary.occupied,
            successes: summary.successes,
            resources_rb: config.round_resources(decision.k, summary.occupied).to_f64_lossy(),
            epsilon_r: decision.epsilon_r,
            expected_rb: decision.expected_rb,
        });
        round += 1;
    }
    Ok(SimulationResult { protocol: controller.name(), round_duration_ms: round_ms, ues, trace })
}

/// DBCA: estimator, CRS rule, BCCR round, then the constrained solver for
/// the next access probability.
pub fn run_dbca<T: Scalar>(
    scenario: &BurstScenario,
    config: &SystemConfig<T>,
    params: &DbcaParams<T>,
    opts: &RunOptions,
) -> Result<SimulationResult> {
    let mut controller = DbcaController {
        params: *params,
        config,
        estimator: BacklogEstimator::new(config.preambles, params.estimator_base),
        p_next: T::one(),
        n_true: 0,
    };
    run_controlled(&mut controller, scenario, config, opts)
}

/// Dynamic ACB without CRSs: `p = min(1, M / n)` from the estimator prior
/// or from the true backlog.
pub fn run_dacb<T: Scalar>(
    scenario: &BurstScenario,
    config: &SystemConfig<T>,
    mode: DacbMode,
    estimator_base: UpdateBase,
    opts: &RunOptions,
) -> Result<SimulationResult> {
    let mut controller = DacbController { mode, config, estimator: BacklogEstimator::new(config.preambles, estimator_base) };
    run_controlled(&mut controller, scenario, config, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SystemConfig<f64> {
        SystemConfig::default()
    }

    fn check_result(r: &SimulationResult, n: u64, config: &SystemConfig<f64>) {
        assert_eq!(r.ues.len() as u64, n);
        assert!(r.ues.iter().all(|u| u.status == UeStatus::Connected));
        assert_eq!(r.total_successes(), n);
        assert_eq!(r.trace.len() as u64, r.rounds_to_resolution());
        for row in &r.trace {
            assert_eq!(row.idle + row.occupied, config.preambles);
            assert!(row.successes <= row.occupied);
            let want = config.round_resources(row.k, row.occupied);
            assert!((row.resources_rb - want).abs() < 1e-9);
        }
        let total: f64 = r.trace.iter().map(|t| t.resources_rb).sum();
        assert!((total - r.total_resources()).abs() < 1e-6);
    }

    #[test]
    fn empty_burst() {
        let config = cfg();
        let r = run_dbca(&BurstScenario::delta(0), &config, &DbcaParams::proportional(1.0), &RunOptions::new(1, 0)).unwrap();
        assert_eq!(r.rounds_to_resolution(), 0);
        assert!(r.trace.is_empty());
    }

    #[test]
    fn single_ue_connects_in_first_round() {
        let config = cfg();
        let r = run_dacb(&BurstScenario::delta(1), &config, DacbMode::Estimated, UpdateBase::Prior, &RunOptions::new(1, 0)).unwrap();
        assert_eq!(r.rounds_to_resolution(), 1);
        assert_eq!(r.service_times_ms(), vec![10.0]);
        assert_eq!(r.trace[0].resources_rb, 8.0);
    }

    #[test]
    fn conservation_all_protocols() {
        let config = cfg();
        let opts = RunOptions::new(42, 3);
        for scenario in [BurstScenario::delta(800), BurstScenario::beta(800), BurstScenario::uniform(300, 500.0)] {
            let r = run_dbca(&scenario, &config, &DbcaParams::proportional(1.4), &opts).unwrap();
            check_result(&r, scenario.ues, &config);
            for mode in [DacbMode::Estimated, DacbMode::Genie] {
                let r = run_dacb(&scenario, &config, mode, UpdateBase::Prior, &opts).unwrap();
                check_result(&r, scenario.ues, &config);
                assert!(r.trace.iter().all(|t| t.k == 0));
            }
            for q in [2, 8] {
                let r = run_qtra(&scenario, &config, q, &opts).unwrap();
                check_result(&r, scenario.ues, &config);
            }
        }
    }

    #[test]
    fn genie_dacb_publishes_aloha_p() {
        let config = cfg();
        let r = run_dacb(&BurstScenario::delta(54), &config, DacbMode::Genie, UpdateBase::Prior, &RunOptions::new(1, 0)).unwrap();
        assert_eq!(r.trace[0].p, 1.0);
        for row in &r.trace {
            assert!((row.p - (54.0 / row.n_true as f64).min(1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let config = cfg();
        let params = DbcaParams::proportional(1.0);
        let a = run_dbca(&BurstScenario::beta(500), &config, &params, &RunOptions::new(9, 1)).unwrap();
        let b = run_dbca(&BurstScenario::beta(500), &config, &params, &RunOptions::new(9, 1)).unwrap();
        assert_eq!(format!("{:?}", a.trace), format!("{:?}", b.trace));
        let c = run_dbca(&BurstScenario::beta(500), &config, &params, &RunOptions::new(9, 2)).unwrap();
        assert_ne!(format!("{:?}", a.trace), format!("{:?}", c.trace));
    }

    #[test]
    fn paired_activations_across_protocols() {
        let config = cfg();
        let opts = RunOptions::new(5, 0);
        let s = BurstScenario::beta(300);
        let a = run_dbca(&s, &config, &DbcaParams::proportional(1.0), &opts).unwrap();
        let b = run_qtra(&s, &config, 2, &opts).unwrap();
        let act = |r: &SimulationResult| r.ues.iter().map(|u| u.activation_round).collect::<Vec<_>>();
        assert_eq!(act(&a), act(&b));
    }

    #[test]
    fn round_cap_reports_trace() {
        let config = cfg();
        let mut opts = RunOptions::new(1, 0);
        opts.round_cap = 3;
        match run_dacb(&BurstScenario::delta(2000), &config, DacbMode::Genie, UpdateBase::Prior, &opts) {
            Err(Error::NonTermination { rounds, trace, total, .. }) => {
                assert_eq!(rounds, 3);
                assert_eq!(trace.len(), 3);
                assert_eq!(total, 2000);
            }
            other => panic!("expected non-termination, got {other:?}"),
        }
    }

    #[test]
    fn soft_budget_respected_when_crs_used() {
        let config = cfg();
        let r = run_dbca(&BurstScenario::delta(3000), &config, &DbcaParams::proportional(1.0), &RunOptions::new(2, 0)).unwrap();
        for row in r.trace.iter().filter(|t| t.k > 0) {
            assert!(row.expected_rb <= row.epsilon_r + 1e-6, "{row:?}");
        }
    }

    #[test]
    fn bridge_constant_backlog() {
        let config = cfg();
        let mut streams = RoundStreams::new(17, 0);
        let mut ch = Channel::new(54);
        for &(n, p, k) in &[(10u64, 1.0, 0u32), (100, 0.3, 2), (1000, 0.05, 4)] {
            let rounds = 20_000;
            let (mut sum, mut sq) = (0.0, 0.0);
            for _ in 0..rounds {
                let s = f64::from(constant_backlog_round(&mut ch, n, p, k, &mut streams).successes);
                sum += s;
                sq += s * s;
            }
            let mean = sum / f64::from(rounds);
            let var = sq / f64::from(rounds) - mean * mean;
            let se = (var / f64::from(rounds)).sqrt();
            let want = crate::analytics::expected_throughput(n as f64, p, k, config.preambles).unwrap();
            assert!((mean - want).abs() < 4.0 * se.max(1e-9), "n={n} p={p} k={k}: {mean} vs {want}");
        }
    }
}
