//! Experiment orchestration behind the `analyze`, `simulate` and `validate`
//! commands.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::analytics::{drift_burst_resolution, expected_throughput, p_grid, pareto_frontier, resources_unchecked};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::metrics::{summarize, MetricSummary};
use crate::model::OperatingPoint;
use crate::optimizer::{dacb_point, root_find_p, solve, stationarity, ResourceBudget};
use crate::rng::RoundStreams;
use crate::sim::{constant_backlog_round, run_dacb, run_dbca, run_qtra, Channel, DacbMode, RunOptions, SimulationResult, TraceRow};
use crate::traffic::BurstScenario;

pub const SUMMARY_SCHEMA: &str = "dbca-summary/1";
pub const TRACE_SCHEMA: &str = "dbca-trace/1";
pub const ANALYZE_SCHEMA: &str = "dbca-analyze/1";

pub const SUMMARY_HEADER: [&str; 16] = [
    "scenario",
    "protocol",
    "variant",
    "N",
    "C_or_q",
    "replications",
    "mean_service_time_ms",
    "ci_service",
    "total_resources_rb",
    "ci_resources",
    "efficiency",
    "ci_efficiency",
    "rounds_to_resolution",
    "ci_rounds",
    "escalated",
    "ci_target_met",
];

pub const TRACE_HEADER: [&str; 14] = [
    "round",
    "n_true",
    "n_hat_prior",
    "n_hat_post",
    "delta_n",
    "q_boost",
    "p",
    "k",
    "idle",
    "occupied",
    "successes",
    "resources_rb",
    "epsilon_r",
    "expected_rb",
];

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Shortest round-trip text; `NaN` becomes an empty field.
fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn csv_writer(path: &Path, comment: &str) -> Result<csv::Writer<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut file = File::create(path)?;
    writeln!(file, "# {comment}")?;
    Ok(csv::Writer::from_writer(file))
}

fn comment(schema: &str, cfg: &ExperimentConfig) -> Result<String> {
    Ok(format!("schema={schema} config={} seed={} seeds=paired-by-scenario-and-replication", cfg.hash()?, cfg.master_seed))
}

/// Runs `f` on a pool of `threads` workers (the global pool when `None`).
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Config(format!("parallel: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProtocolSpec {
    Dbca { c: f64 },
    Dacb { mode: DacbMode },
    Qtra { q: u32 },
}

impl ProtocolSpec {
    pub fn protocol(&self) -> &'static str {
        match self {
            ProtocolSpec::Dbca { .. } => "dbca",
            ProtocolSpec::Dacb { .. } => "dacb",
            ProtocolSpec::Qtra { .. } => "qtra",
        }
    }

    pub fn variant(&self) -> String {
        match self {
            ProtocolSpec::Dbca { c } => format!("c{c}"),
            ProtocolSpec::Dacb { mode: DacbMode::Estimated } => "estimated".into(),
            ProtocolSpec::Dacb { mode: DacbMode::Genie } => "genie".into(),
            ProtocolSpec::Qtra { q } => format!("q{q}"),
        }
    }

    pub fn c_or_q(&self) -> Option<f64> {
        match self {
            ProtocolSpec::Dbca { c } => Some(*c),
            ProtocolSpec::Dacb { .. } => None,
            ProtocolSpec::Qtra { q } => Some(f64::from(*q)),
        }
    }

    pub fn run(&self, scenario: &BurstScenario, cfg: &ExperimentConfig, replication: u64) -> Result<SimulationResult> {
        let opts = RunOptions { master_seed: cfg.master_seed, replication, round_cap: cfg.round_cap };
        match *self {
            ProtocolSpec::Dbca { c } => run_dbca(scenario, &cfg.system, &cfg.dbca.params(c), &opts),
            ProtocolSpec::Dacb { mode } => run_dacb(scenario, &cfg.system, mode, cfg.dbca.estimator_base, &opts),
            ProtocolSpec::Qtra { q } => run_qtra(scenario, &cfg.system, q, &opts),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub scenario: BurstScenario,
    pub protocol: ProtocolSpec,
}

impl Cell {
    pub fn label(&self) -> String {
        format!("{}_N{}_{}_{}", self.scenario.shape.name(), self.scenario.ues, self.protocol.protocol(), self.protocol.variant())
    }
}

/// The scenario x protocol grid in output order.
pub fn cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let mut protocols: Vec<ProtocolSpec> = cfg.protocols.dbca_c.iter().map(|&c| ProtocolSpec::Dbca { c }).collect();
    protocols.extend(cfg.protocols.dacb.iter().map(|&mode| ProtocolSpec::Dacb { mode }));
    protocols.extend(cfg.protocols.qtra_q.iter().map(|&q| ProtocolSpec::Qtra { q }));
    let mut out = Vec::new();
    for scenario in cfg.scenarios.scenarios(cfg.system.round_duration_ms) {
        for &protocol in &protocols {
            out.push(Cell { scenario, protocol });
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub cell: Cell,
    pub summary: MetricSummary,
    pub results: Vec<SimulationResult>,
    pub escalated: bool,
    pub ci_target_met: Option<bool>,
}

/// Replications `range` of one cell, in index order.
pub fn run_replications(cell: &Cell, cfg: &ExperimentConfig, range: std::ops::Range<u64>) -> Result<Vec<SimulationResult>> {
    range.into_par_iter().map(|rep| cell.protocol.run(&cell.scenario, cfg, rep)).collect()
}

/// Runs a cell, doubling the replication count (up to `max_replications`)
/// while any headline CI is wider than `ci_target` of its mean.
pub fn run_cell(cell: &Cell, cfg: &ExperimentConfig) -> Result<CellOutcome> {
    let mut results = run_replications(cell, cfg, 0..cfg.replications as u64)?;
    let mut summary = summarize(&results, &cfg.metrics)?;
    let mut escalated = false;
    let met = |s: &MetricSummary| s.worst_relative_halfwidth().map(|w| w <= cfg.ci_target);
    while met(&summary) == Some(false) && results.len() < cfg.max_replications {
        let next = (results.len() * 2).min(cfg.max_replications);
        results.extend(run_replications(cell, cfg, results.len() as u64..next as u64)?);
        summary = summarize(&results, &cfg.metrics)?;
        escalated = true;
    }
    Ok(CellOutcome { cell: *cell, ci_target_met: met(&summary), summary, results, escalated })
}

pub fn summary_record(o: &CellOutcome) -> Vec<String> {
    let s = &o.summary;
    vec![
        o.cell.scenario.shape.name().to_string(),
        o.cell.protocol.protocol().to_string(),
        o.cell.protocol.variant(),
        o.cell.scenario.ues.to_string(),
        opt(o.cell.protocol.c_or_q()),
        s.replications.to_string(),
        num(s.mean_service_time.mean),
        opt(s.mean_service_time.ci_halfwidth),
        num(s.total_resources.mean),
        opt(s.total_resources.ci_halfwidth),
        num(s.efficiency.mean),
        opt(s.efficiency.ci_halfwidth),
        num(s.rounds_to_resolution.mean),
        opt(s.rounds_to_resolution.ci_halfwidth),
        o.escalated.to_string(),
        o.ci_target_met.map(|b| b.to_string()).unwrap_or_default(),
    ]
}

pub fn trace_record(r: &TraceRow) -> Vec<String> {
    vec![
        r.round.to_string(),
        r.n_true.to_string(),
        num(r.n_hat_prior),
        num(r.n_hat_post),
        num(r.delta_n),
        r.q_boost.to_string(),
        num(r.p),
        r.k.to_string(),
        r.idle.to_string(),
        r.occupied.to_string(),
        r.successes.to_string(),
        num(r.resources_rb),
        num(r.epsilon_r),
        num(r.expected_rb),
    ]
}

pub fn write_trace(path: &Path, cfg: &ExperimentConfig, result: &SimulationResult) -> Result<()> {
    let mut w = csv_writer(path, &comment(TRACE_SCHEMA, cfg)?)?;
    w.write_record(TRACE_HEADER).map_err(csv_err)?;
    for row in &result.trace {
        w.write_record(trace_record(row)).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SimulateReport {
    pub summary_path: PathBuf,
    pub trace_paths: Vec<PathBuf>,
    /// Per-cell outcomes without the raw replication results.
    pub outcomes: Vec<CellOutcome>,
}

/// Runs every cell of the grid and writes `summary.csv` (and per-replication
/// traces when enabled). Cells run one after another; replications of a cell
/// run in parallel and are merged in replication order.
pub fn simulate(cfg: &ExperimentConfig, out_dir: &Path, threads: Option<usize>) -> Result<SimulateReport> {
    cfg.validate()?;
    let summary_path = out_dir.join("summary.csv");
    let mut w = csv_writer(&summary_path, &comment(SUMMARY_SCHEMA, cfg)?)?;
    w.write_record(SUMMARY_HEADER).map_err(csv_err)?;
    let mut trace_paths = Vec::new();
    let mut outcomes = Vec::new();
    for cell in cells(cfg) {
        let mut outcome = with_threads(threads, || run_cell(&cell, cfg))??;
        w.write_record(summary_record(&outcome)).map_err(csv_err)?;
        if cfg.trace {
            for (rep, result) in outcome.results.iter().enumerate() {
                let path = out_dir.join("traces").join(format!("{}_r{rep}.csv", cell.label()));
                write_trace(&path, cfg, result)?;
                trace_paths.push(path);
            }
        }
        outcome.results.clear();
        outcomes.push(outcome);
    }
    w.flush()?;
    Ok(SimulateReport { summary_path, trace_paths, outcomes })
}

/// Writes throughput curves, the Pareto frontier with its per-k curves, and
/// drift predictions for every scenario under d-ACB and each DBCA budget.
pub fn analyze(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let sys = &cfg.system;
    let a = &cfg.analyze;
    let head = comment(ANALYZE_SCHEMA, cfg)?;
    let mut paths = Vec::new();

    let path = out_dir.join("curves.csv");
    let mut w = csv_writer(&path, &head)?;
    w.write_record(["n", "k", "p", "throughput", "occupied", "resources_rb"]).map_err(csv_err)?;
    let grid = p_grid(a.curve_p_resolution)?;
    for &n in &a.curve_n {
        for &k in &a.curve_k {
            for &p in &grid {
                let s = expected_throughput(n, p, k, sys.preambles)?;
                let occ = crate::analytics::expected_occupied(n, p, sys.preambles)?;
                let r = resources_unchecked(n, p, k, sys);
                w.write_record([num(n), k.to_string(), num(p), num(s), num(occ), num(r)]).map_err(csv_err)?;
            }
        }
    }
    w.flush()?;
    paths.push(path);

    let frontier = pareto_frontier(a.frontier_n, sys, a.frontier_p_resolution)?;
    let path = out_dir.join("frontier.csv");
    let mut w = csv_writer(&path, &format!("{head} n={} throughput_supremum={}", a.frontier_n, frontier.throughput_supremum))?;
    w.write_record(["throughput", "resources_rb", "p", "k"]).map_err(csv_err)?;
    for f in &frontier.points {
        w.write_record([num(f.throughput), num(f.resources), num(f.point.p), f.point.k.to_string()]).map_err(csv_err)?;
    }
    w.flush()?;
    paths.push(path);

    let path = out_dir.join("frontier_curves.csv");
    let mut w = csv_writer(&path, &format!("{head} n={}", a.frontier_n))?;
    w.write_record(["k", "p", "throughput", "resources_rb"]).map_err(csv_err)?;
    for f in frontier.curves.iter().flatten() {
        w.write_record([f.point.k.to_string(), num(f.point.p), num(f.throughput), num(f.resources)]).map_err(csv_err)?;
    }
    w.flush()?;
    paths.push(path);

    let drift_path = out_dir.join("drift.csv");
    let summary_path = out_dir.join("drift_summary.csv");
    let mut w = csv_writer(&drift_path, &head)?;
    let mut ws = csv_writer(&summary_path, &head)?;
    w.write_record(["scenario", "N", "policy", "round", "backlog", "arrivals", "successes", "p", "k"]).map_err(csv_err)?;
    ws.write_record(["scenario", "N", "policy", "rounds_to_resolution"]).map_err(csv_err)?;
    let mut policies: Vec<(String, Option<f64>)> = vec![("dacb".into(), None)];
    policies.extend(cfg.protocols.dbca_c.iter().map(|&c| (format!("dbca_c{c}"), Some(c))));
    for scenario in cfg.scenarios.scenarios(sys.round_duration_ms) {
        for (name, c) in &policies {
            let prediction = match c {
                None => drift_burst_resolution(&scenario, |n| Ok(dacb_point(n, sys)), sys, a.drift_epsilon, a.drift_round_cap)?,
                Some(c) => drift_burst_resolution(&scenario, dbca_drift_policy(*c, cfg), sys, a.drift_epsilon, a.drift_round_cap)?,
            };
            for row in &prediction.trajectory {
                w.write_record([
                    scenario.shape.name().to_string(),
                    scenario.ues.to_string(),
                    name.clone(),
                    row.round.to_string(),
                    num(row.backlog),
                    num(row.arrivals),
                    num(row.successes),
                    num(row.point.p),
                    row.point.k.to_string(),
                ])
                .map_err(csv_err)?;
            }
            ws.write_record([
                scenario.shape.name().to_string(),
                scenario.ues.to_string(),
                name.clone(),
                prediction.rounds_to_resolution.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    ws.flush()?;
    paths.push(drift_path);
    paths.push(summary_path);
    Ok(paths)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn table(&self) -> String {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
        let mut out = format!("{:width$}  {:6}  detail\n", "check", "result");
        for c in &self.checks {
            let verdict = if c.passed { "pass" } else { "FAIL" };
            out.push_str(&format!("{:width$}  {verdict:6}  {}\n", c.name, c.detail));
        }
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        out
    }
}

/// Test hooks for negative controls.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ValidateHooks {
    /// Scales the analytic throughput used by the bridge check.
    pub throughput_scale: Option<f64>,
}

pub fn validate(cfg: &ExperimentConfig, hooks: &ValidateHooks) -> Result<ValidationReport> {
    cfg.validate()?;
    let mut report = ValidationReport::default();
    if cfg.validate.checks.is_empty() {
        report.warnings.push("no checks configured; nothing was validated".into());
        return Ok(report);
    }
    for name in &cfg.validate.checks {
        let (passed, detail) = match name.as_str() {
            "bridge" => check_bridge(cfg, hooks)?,
            "solver" => check_solver(cfg)?,
            "root_finder" => check_root_finder(cfg)?,
            "drift" => check_drift(cfg)?,
            other => return Err(Error::Config(format!("validate.checks: unknown check '{other}'"))),
        };
        report.checks.push(CheckResult { name: name.clone(), passed, detail });
    }
    Ok(report)
}

/// Largest standard score of simulated mean successes against the analytic
/// value over `rounds` constant-backlog rounds.
pub fn bridge_z(n: u64, p: f64, k: u32, rounds: usize, analytic: f64, streams: &mut RoundStreams, channel: &mut Channel) -> f64 {
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..rounds {
        let s = f64::from(constant_backlog_round(channel, n, p, k, streams).successes);
        sum += s;
        sq += s * s;
    }
    let r = rounds as f64;
    let mean = sum / r;
    let var = (sq / r - mean * mean) * r / (r - 1.0);
    // Poisson floor: a point whose expected count over all rounds is tiny
    // can legitimately show zero sample variance
    let se = (var / r).sqrt().max((analytic.max(0.0) / r).sqrt());
    if se == 0.0 {
        if (mean - analytic).abs() < 1e-12 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (mean - analytic) / se
    }
}

fn check_bridge(cfg: &ExperimentConfig, hooks: &ValidateHooks) -> Result<(bool, String)> {
    let sys = &cfg.system;
    let scale = hooks.throughput_scale.unwrap_or(1.0);
    let mut streams = RoundStreams::new(cfg.master_seed, crate::rng::label_key("validate-bridge"));
    let mut channel = Channel::new(sys.preambles);
    let mut worst: f64 = 0.0;
    for n in [10u64, 100, 1000] {
        for p in [0.05, 0.3, 1.0] {
            for k in [0u32, 2, 4] {
                let analytic = scale * expected_throughput(n as f64, p, k, sys.preambles)?;
                let z = bridge_z(n, p, k, cfg.validate.bridge_rounds, analytic, &mut streams, &mut channel);
                worst = worst.max(z.abs());
            }
        }
    }
    Ok((worst <= 3.0, format!("max |z| = {worst:.3} over 27 points (limit 3)")))
}

/// Best feasible grid throughput over `k in [0, k_max]`.
pub fn grid_optimum(n: f64, budget: &ResourceBudget<f64>, sys: &crate::model::SystemConfig<f64>, resolution: f64) -> Result<f64> {
    let grid = p_grid(resolution)?;
    let mut best = f64::NEG_INFINITY;
    for k in 0..=sys.k_max {
        for &p in &grid {
            if resources_unchecked(n, p, k, sys) <= budget.epsilon_r {
                best = best.max(expected_throughput(n, p, k, sys.preambles)?);
            }
        }
    }
    Ok(best)
}

fn check_solver(cfg: &ExperimentConfig) -> Result<(bool, String)> {
    let sys = &cfg.system;
    let mut ok = true;
    let mut worst_gap: f64 = f64::NEG_INFINITY;
    for n in [10.0, 100.0, 1000.0, 5000.0] {
        for c in [1.0, 1.4, 1.8] {
            let budget = ResourceBudget::proportional(c, n, sys)?;
            let sol = solve(n, &budget, sys, cfg.dbca.optimizer.fixed_k)?;
            let grid = grid_optimum(n, &budget, sys, 1e-3)?;
            let gap = (grid - sol.throughput) / grid;
            worst_gap = worst_gap.max(gap);
            ok &= sol.resources <= budget.epsilon_r + 1e-6 && gap <= 1e-3;
        }
    }
    Ok((ok, format!("worst shortfall vs grid = {worst_gap:.2e} (limit 1e-3)")))
}

fn check_root_finder(cfg: &ExperimentConfig) -> Result<(bool, String)> {
    let sys = &cfg.system;
    let m = sys.preambles;
    // l = 1: the stationarity condition vanishes at x = 1
    let mut ok = stationarity(1.0_f64, 1.0).abs() < 1e-12;
    let mut x_err: f64 = 0.0;
    for n in [100.0, 1000.0, 5000.0] {
        let p = root_find_p(n, 0, m)?;
        let x = p * n / f64::from(m);
        x_err = x_err.max((x - 1.0).abs());
    }
    ok &= x_err <= 1e-9;
    let mut worst: f64 = 0.0;
    let grid = p_grid(1e-4)?;
    for n in [200.0, 1000.0, 5000.0] {
        for k in 1..=6 {
            let s_root = expected_throughput(n, root_find_p(n, k, m)?, k, m)?;
            let s_grid = grid.iter().map(|&p| expected_throughput(n, p, k, m).unwrap_or(0.0)).fold(0.0, f64::max);
            worst = worst.max((s_grid - s_root) / s_grid);
        }
    }
    ok &= worst <= 0.02;
    Ok((ok, format!("l=1 root error {x_err:.1e}; worst throughput gap {worst:.2e} (limit 2e-2)")))
}

fn check_drift(cfg: &ExperimentConfig) -> Result<(bool, String)> {
    let sys = &cfg.system;
    let scenario = BurstScenario::delta(1000);
    let drift = drift_burst_resolution(&scenario, |n| Ok(dacb_point(n, sys)), sys, cfg.analyze.drift_epsilon, cfg.analyze.drift_round_cap)?;
    let cell = Cell { scenario, protocol: ProtocolSpec::Dacb { mode: DacbMode::Genie } };
    let results = run_replications(&cell, cfg, 0..cfg.validate.drift_replications.max(1) as u64)?;
    let mean = results.iter().map(|r| r.rounds_to_resolution() as f64).sum::<f64>() / results.len() as f64;
    let predicted = drift.rounds_to_resolution as f64;
    let rel = (predicted - mean).abs() / mean;
    Ok((rel <= 0.10, format!("genie d-ACB delta N=1000: drift {predicted} vs sim {mean:.1} ({:.1}%, limit 10%)", rel * 100.0)))
}

/// The operating point the drift model uses for DBCA.
pub fn dbca_drift_policy(c: f64, cfg: &ExperimentConfig) -> impl FnMut(f64) -> Result<OperatingPoint<f64>> + '_ {
    move |n| crate::optimizer::dbca_point(n, c, &cfg.system, cfg.dbca.optimizer.fixed_k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.replications = 3;
        cfg.max_replications = 3;
        cfg.scenarios.ues = vec![200];
        cfg.scenarios.shapes = vec![crate::traffic::ArrivalShape::Delta];
        cfg.protocols.dbca_c = vec![1.0];
        cfg.analyze.frontier_p_resolution = 0.05;
        cfg.analyze.curve_n = vec![100.0];
        cfg.trace = true;
        cfg
    }

    #[test]
    fn simulate_writes_schema_and_is_deterministic() {
        let cfg = small();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ra = simulate(&cfg, a.path(), Some(1)).unwrap();
        let rb = simulate(&cfg, b.path(), Some(2)).unwrap();
        let text = fs::read_to_string(&ra.summary_path).unwrap();
        assert!(text.starts_with("# schema=dbca-summary/1 config="));
        assert_eq!(text, fs::read_to_string(&rb.summary_path).unwrap());
        assert_eq!(ra.trace_paths.len(), 5 * 3);
        for (pa, pb) in ra.trace_paths.iter().zip(&rb.trace_paths) {
            assert_eq!(fs::read(pa).unwrap(), fs::read(pb).unwrap());
        }
        let header = text.lines().nth(1).unwrap();
        assert_eq!(header, SUMMARY_HEADER.join(","));
    }

    #[test]
    fn single_replication_omits_ci() {
        let mut cfg = small();
        cfg.replications = 1;
        cfg.max_replications = 1;
        cfg.trace = false;
        let dir = tempfile::tempdir().unwrap();
        let r = simulate(&cfg, dir.path(), None).unwrap();
        let text = fs::read_to_string(r.summary_path).unwrap();
        let row: Vec<&str> = text.lines().nth(2).unwrap().split(',').collect();
        assert_eq!(row[5], "1");
        assert_eq!(row[7], "");
        assert_eq!(row[9], "");
    }

    #[test]
    fn escalation_raises_replications() {
        let mut cfg = small();
        cfg.ci_target = 1e-9;
        cfg.max_replications = 12;
        let cell = cells(&cfg)[0];
        let o = run_cell(&cell, &cfg).unwrap();
        assert!(o.escalated);
        assert_eq!(o.summary.replications, 12);
        assert_eq!(o.ci_target_met, Some(false));
    }

    #[test]
    fn analyze_writes_tables() {
        let cfg = small();
        let dir = tempfile::tempdir().unwrap();
        let paths = analyze(&cfg, dir.path()).unwrap();
        assert_eq!(paths.len(), 5);
        let curves = fs::read_to_string(&paths[0]).unwrap();
        // comment + header + 5 k values x 100 grid points
        assert_eq!(curves.lines().count(), 2 + 5 * 100);
    }

    #[test]
    fn validate_negative_control_and_empty_list() {
        let mut cfg = small();
        cfg.validate.checks = vec!["bridge".into()];
        cfg.validate.bridge_rounds = 2000;
        let bad = validate(&cfg, &ValidateHooks { throughput_scale: Some(1.1) }).unwrap();
        assert!(!bad.passed());
        cfg.validate.checks.clear();
        let empty = validate(&cfg, &ValidateHooks::default()).unwrap();
        assert!(empty.passed());
        assert_eq!(empty.warnings.len(), 1);
        cfg.validate.checks = vec!["nope".into()];
        assert!(validate(&cfg, &ValidateHooks::default()).is_err());
    }
}
