//! Batch studies behind the command-line tool: single-scenario analysis,
//! parameter sweeps, engine comparison and `q1` optimization.
//!
//! Every tabular output is CSV with a header row and numbers printed with
//! 12 significant digits, so that a fixed specification and seed always
//! produce the same bytes.

use std::fmt::Write as _;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::analytic::{
    self, geo_metrics, optimal_q1_transmission, optimize_total_delay, stability_region,
    AnalyticError, GeoMetrics, MuVariant, StabilityRegion, TotalDelayOptimum, TransmissionOptimum,
};
use crate::model::{ModelParams, ParamError};
use crate::qbd::{self, QbdError, StationaryDistribution};
use crate::scenario::ScenarioError;
use crate::sim::{self, replicate_seed, SimConfig, SimError, Summary};

/// Relative-deviation envelopes for the slot-averaged approximation.
pub const MU_SIMPLE_ENVELOPE: f64 = 0.08;
pub const DELAY_SIMPLE_ENVELOPE: f64 = 0.05;

#[derive(Debug, Error)]
pub enum StudyError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl StudyError {
    /// 0 success, 1 input or I/O error, 2 infeasible or unstable model.
    pub fn exit_code(&self) -> i32 {
        match self {
            StudyError::Infeasible(_) => 2,
            _ => 1,
        }
    }
}

impl From<AnalyticError> for StudyError {
    fn from(e: AnalyticError) -> Self {
        match e {
            AnalyticError::Domain { .. } => StudyError::Input(e.to_string()),
            _ => StudyError::Infeasible(e.to_string()),
        }
    }
}

impl From<QbdError> for StudyError {
    fn from(e: QbdError) -> Self {
        StudyError::Infeasible(e.to_string())
    }
}

/// Formats with 12 significant digits, dropping trailing zeros. Very large
/// or small magnitudes use exponent notation.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..12).contains(&exp) {
        let s = format!("{x:.11e}");
        let (mantissa, e) = s.split_once('e').expect("exponent form");
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        return format!("{mantissa}e{e}");
    }
    let decimals = (11 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".to_string()
    } else {
        s
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_sig).unwrap_or_default()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    AnalyticSimple,
    AnalyticRefined,
    Qbd,
    Sim,
}

impl Engine {
    pub const ALL: [Engine; 4] = [
        Engine::AnalyticSimple,
        Engine::AnalyticRefined,
        Engine::Qbd,
        Engine::Sim,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Engine::AnalyticSimple => "analytic-simple",
            Engine::AnalyticRefined => "analytic-refined",
            Engine::Qbd => "qbd",
            Engine::Sim => "sim",
        }
    }

    pub fn parse_list(s: &str) -> Result<Vec<Engine>, StudyError> {
        let engines = s
            .split(',')
            .map(|e| e.trim().parse())
            .collect::<Result<Vec<Engine>, _>>()?;
        if engines.is_empty() {
            return Err(StudyError::Input("at least one engine is needed".into()));
        }
        Ok(engines)
    }
}

impl FromStr for Engine {
    type Err = StudyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Engine::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| StudyError::Input(format!("unknown engine '{s}'")))
    }
}

/// Parameter swept by a study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Q1,
    Lambda,
    P1,
    P2,
}

impl FromStr for Axis {
    type Err = StudyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "q1" => Ok(Axis::Q1),
            "lambda" => Ok(Axis::Lambda),
            "p1" => Ok(Axis::P1),
            "p2" => Ok(Axis::P2),
            _ => Err(StudyError::Input(format!("unknown axis '{s}'"))),
        }
    }
}

impl Axis {
    fn apply(&self, base: &ModelParams, value: f64) -> Result<ModelParams, ParamError> {
        match self {
            Axis::Q1 => base.with_q1(value),
            Axis::Lambda => base.with_lambda(value),
            Axis::P1 => base.with_success(value, base.p2()),
            Axis::P2 => base.with_success(base.p1(), value),
        }
    }
}

/// Inclusive `start:stop:step` grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self, StudyError> {
        if !start.is_finite() || !stop.is_finite() || step.is_nan() || step <= 0.0 || stop < start {
            return Err(StudyError::Input(format!(
                "grid {start}:{stop}:{step} needs step > 0 and stop >= start"
            )));
        }
        Ok(Self { start, stop, step })
    }

    pub fn single(value: f64) -> Self {
        Self {
            start: value,
            stop: value,
            step: 1.0,
        }
    }

    /// Points `start + i * step` up to `stop`, tolerating rounding in the
    /// number of steps.
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| (self.start + i as f64 * self.step).min(self.stop))
            .collect()
    }
}

impl FromStr for Grid {
    type Err = StudyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || StudyError::Input(format!("grid '{s}' is not start:stop:step"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let nums = parts
            .iter()
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>, _>>()?;
        Grid::new(nums[0], nums[1], nums[2])
    }
}

/// Monte Carlo settings of a study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub slots: u64,
    pub warmup: u64,
    pub seed: u64,
    pub reps: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            slots: sim::DEFAULT_HORIZON,
            warmup: sim::DEFAULT_WARMUP,
            seed: 1,
            reps: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Scenario supplying every parameter that is not swept.
    pub base: ModelParams,
    pub axis: Axis,
    pub grid: Grid,
    pub engines: Vec<Engine>,
    pub sim: SimOptions,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<Vec<ModelParams>, StudyError> {
        if self.engines.is_empty() {
            return Err(StudyError::Input("at least one engine is needed".into()));
        }
        if self.sim.slots <= self.sim.warmup {
            return Err(StudyError::Input(format!(
                "--slots ({}) must exceed the warmup ({})",
                self.sim.slots, self.sim.warmup
            )));
        }
        if self.sim.reps == 0 {
            return Err(StudyError::Input("--reps must be at least 1".into()));
        }
        Ok(self
            .grid
            .points()
            .into_iter()
            .map(|v| self.axis.apply(&self.base, v))
            .collect::<Result<Vec<_>, _>>()?)
    }
}

/// Confidence intervals attached to simulation rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimInterval {
    pub mu: Summary,
    pub total_delay: Summary,
}

/// One `(grid point, engine)` result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub params: ModelParams,
    pub engine: Engine,
    pub mu: Option<f64>,
    pub d_q: Option<f64>,
    pub d_t: Option<f64>,
    pub total_delay: Option<f64>,
    pub stable: bool,
    pub interval: Option<SimInterval>,
}

pub const SWEEP_HEADER: [&str; 14] = [
    "q1",
    "engine",
    "mu",
    "d_q",
    "d_t",
    "total_delay",
    "stable",
    "mu_ci_low",
    "mu_ci_high",
    "total_delay_ci_low",
    "total_delay_ci_high",
    "lambda",
    "p1",
    "p2",
];

impl SweepRow {
    fn empty(params: ModelParams, engine: Engine) -> Self {
        Self {
            params,
            engine,
            mu: None,
            d_q: None,
            d_t: None,
            total_delay: None,
            stable: false,
            interval: None,
        }
    }

    fn with_delays(mut self, d_q: f64, d_t: f64) -> Self {
        self.stable = true;
        self.d_q = Some(d_q);
        self.d_t = Some(d_t);
        self.total_delay = Some(d_q + d_t);
        self
    }

    pub fn csv_record(&self) -> Vec<String> {
        let ci = |f: fn(&SimInterval) -> f64| self.interval.as_ref().map(f);
        let delay = |v: Option<f64>| if self.stable { v } else { None };
        vec![
            fmt_sig(self.params.q1()),
            self.engine.name().to_string(),
            fmt_opt(self.mu),
            fmt_opt(delay(self.d_q)),
            fmt_opt(delay(self.d_t)),
            fmt_opt(delay(self.total_delay)),
            self.stable.to_string(),
            fmt_opt(ci(|i| i.mu.ci_low)),
            fmt_opt(ci(|i| i.mu.ci_high)),
            fmt_opt(ci(|i| i.total_delay.ci_low)),
            fmt_opt(ci(|i| i.total_delay.ci_high)),
            fmt_sig(self.params.lambda()),
            fmt_sig(self.params.p1()),
            fmt_sig(self.params.p2()),
        ]
    }
}

fn analytic_row(params: &ModelParams, engine: Engine, variant: MuVariant) -> SweepRow {
    let row = SweepRow::empty(*params, engine);
    match geo_metrics(params, variant) {
        Ok(GeoMetrics {
            mu,
            d_q: Some(d_q),
            d_t,
            ..
        }) => SweepRow {
            mu: Some(mu),
            ..row.with_delays(d_q, d_t)
        },
        Ok(m) => SweepRow {
            mu: Some(m.mu),
            ..row
        },
        Err(_) => row,
    }
}

fn qbd_row(params: &ModelParams) -> SweepRow {
    let row = SweepRow::empty(*params, Engine::Qbd);
    let Ok(d_t) = analytic::transmission_delay(params) else {
        return row;
    };
    let row = SweepRow {
        mu: Some(1.0 / d_t),
        ..row
    };
    let blocks = qbd::build_blocks(params);
    match qbd::stationary_matrix_geometric(&blocks, qbd::DEFAULT_TOL) {
        Ok(dist) => {
            let m = qbd::metrics_from_stationary(&dist, params);
            row.with_delays(m.little_delay, d_t)
        }
        Err(_) => row,
    }
}

fn sim_row(params: &ModelParams, opts: &SimOptions, point: u64) -> Result<SweepRow, SimError> {
    let config = SimConfig {
        params: *params,
        horizon: opts.slots,
        seed: replicate_seed(opts.seed, point),
        warmup: opts.warmup,
        sample_queue_distribution: false,
    };
    let row = SweepRow::empty(*params, Engine::Sim);
    if opts.reps >= 2 {
        let rep = sim::replicate(&config, opts.reps)?;
        let row = SweepRow {
            mu: Some(rep.mu_hat.mean),
            interval: Some(SimInterval {
                mu: rep.mu_hat,
                total_delay: rep.total_delay_hat,
            }),
            ..row
        };
        Ok(if rep.any_unstable {
            row
        } else {
            row.with_delays(rep.dq_hat.mean, rep.dt_hat.mean)
        })
    } else {
        let r = sim::run_slots(&config)?;
        let row = SweepRow {
            mu: Some(r.mu_hat),
            ..row
        };
        Ok(if r.unstable_flag {
            row
        } else {
            row.with_delays(r.dq_hat, r.dt_hat)
        })
    }
}

/// Evaluates every engine at every grid point; rows come back in grid order,
/// then engine order, however the work was scheduled.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, StudyError> {
    let points = spec.validate()?;
    let per_point = points
        .par_iter()
        .enumerate()
        .map(|(i, params)| {
            spec.engines
                .iter()
                .map(|engine| {
                    Ok(match engine {
                        Engine::AnalyticSimple => analytic_row(params, *engine, MuVariant::Simple),
                        Engine::AnalyticRefined => {
                            analytic_row(params, *engine, MuVariant::Refined)
                        }
                        Engine::Qbd => qbd_row(params),
                        Engine::Sim => sim_row(params, &spec.sim, i as u64)?,
                    })
                })
                .collect::<Result<Vec<_>, StudyError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(per_point.into_iter().flatten().collect())
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), StudyError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for row in rows {
        w.write_record(row.csv_record())?;
    }
    w.flush()?;
    Ok(())
}

/// Runs the sweep and writes its CSV.
pub fn cmd_sweep<W: Write>(spec: &SweepSpec, out: W) -> Result<Vec<SweepRow>, StudyError> {
    let rows = sweep(spec)?;
    write_sweep_csv(&rows, out)?;
    Ok(rows)
}

/// Deviation of one analytic engine from the simulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngineDeviation {
    pub engine: Engine,
    /// Grid points where both the engine and the simulation are stable.
    pub points: usize,
    pub max_rel_mu: f64,
    pub mean_rel_mu: f64,
    pub max_rel_delay: f64,
    pub mean_rel_delay: f64,
    /// Points whose total delay lies inside the simulation interval; only
    /// counted when replicates provide one.
    pub delay_within_ci: Option<usize>,
    pub mu_within_ci: Option<usize>,
    /// Envelope breaches, e.g. `"mu 8.28% > 8% at q1=0.6 lambda=0.1"`.
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub deviations: Vec<EngineDeviation>,
}

impl CompareReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<18} {:>6} {:>10} {:>10} {:>10} {:>10} {:>8} {:>8}",
            "engine",
            "points",
            "max mu",
            "mean mu",
            "max delay",
            "mean delay",
            "mu in CI",
            "D in CI"
        );
        for d in &self.deviations {
            let ci = |c: Option<usize>| c.map_or("-".to_string(), |c| format!("{c}/{}", d.points));
            let _ = writeln!(
                s,
                "{:<18} {:>6} {:>9.3}% {:>9.3}% {:>9.3}% {:>9.3}% {:>8} {:>8}",
                d.engine.name(),
                d.points,
                100.0 * d.max_rel_mu,
                100.0 * d.mean_rel_mu,
                100.0 * d.max_rel_delay,
                100.0 * d.mean_rel_delay,
                ci(d.mu_within_ci),
                ci(d.delay_within_ci),
            );
            for v in &d.violations {
                let _ = writeln!(s, "  envelope breach: {v}");
            }
        }
        s
    }
}

/// Relative deviation of each analytic engine from the simulation over the
/// sweep, with the 8 % (service probability) and 5 % (total delay)
/// envelopes checked for the slot-averaged approximation.
pub fn compare_rows(rows: &[SweepRow], engines: &[Engine]) -> Result<CompareReport, StudyError> {
    let sims: Vec<&SweepRow> = rows.iter().filter(|r| r.engine == Engine::Sim).collect();
    if sims.is_empty() {
        return Err(StudyError::Input("comparison needs the sim engine".into()));
    }
    let key = |r: &SweepRow| {
        let p = r.params;
        [p.lambda(), p.q1(), p.p1(), p.p2()].map(f64::to_bits)
    };
    let mut deviations = Vec::new();
    for engine in engines.iter().filter(|e| **e != Engine::Sim) {
        let mut dev = EngineDeviation {
            engine: *engine,
            points: 0,
            max_rel_mu: 0.0,
            mean_rel_mu: 0.0,
            max_rel_delay: 0.0,
            mean_rel_delay: 0.0,
            delay_within_ci: None,
            mu_within_ci: None,
            violations: Vec::new(),
        };
        for row in rows.iter().filter(|r| r.engine == *engine) {
            let Some(sim) = sims.iter().find(|s| key(s) == key(row)) else {
                continue;
            };
            let (Some(mu), Some(mu_hat), Some(total), Some(total_hat)) =
                (row.mu, sim.mu, row.total_delay, sim.total_delay)
            else {
                continue;
            };
            if !(row.stable && sim.stable) || mu_hat <= 0.0 || total_hat <= 0.0 {
                continue;
            }
            let rel_mu = (mu - mu_hat).abs() / mu_hat;
            let rel_delay = (total - total_hat).abs() / total_hat;
            dev.points += 1;
            dev.max_rel_mu = dev.max_rel_mu.max(rel_mu);
            dev.max_rel_delay = dev.max_rel_delay.max(rel_delay);
            dev.mean_rel_mu += rel_mu;
            dev.mean_rel_delay += rel_delay;
            if let Some(ci) = &sim.interval {
                *dev.mu_within_ci.get_or_insert(0) += usize::from(ci.mu.covers(mu));
                *dev.delay_within_ci.get_or_insert(0) += usize::from(ci.total_delay.covers(total));
            }
            let at = format!(
                "q1={} lambda={} p1={} p2={}",
                fmt_sig(row.params.q1()),
                fmt_sig(row.params.lambda()),
                fmt_sig(row.params.p1()),
                fmt_sig(row.params.p2())
            );
            if *engine == Engine::AnalyticSimple {
                if rel_mu >= MU_SIMPLE_ENVELOPE {
                    dev.violations
                        .push(format!("mu {:.2}% >= 8% at {at}", 100.0 * rel_mu));
                }
                if rel_delay >= DELAY_SIMPLE_ENVELOPE {
                    dev.violations
                        .push(format!("delay {:.2}% >= 5% at {at}", 100.0 * rel_delay));
                }
            }
        }
        if dev.points > 0 {
            dev.mean_rel_mu /= dev.points as f64;
            dev.mean_rel_delay /= dev.points as f64;
        }
        deviations.push(dev);
    }
    Ok(CompareReport { deviations })
}

pub fn cmd_compare(spec: &SweepSpec) -> Result<(Vec<SweepRow>, CompareReport), StudyError> {
    if !spec.engines.contains(&Engine::Sim) || spec.engines.len() < 2 {
        return Err(StudyError::Input(
            "compare needs the sim engine and at least one analytic engine".into(),
        ));
    }
    let rows = sweep(spec)?;
    let report = compare_rows(&rows, &spec.engines)?;
    Ok((rows, report))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyzeReport {
    pub params: ModelParams,
    pub simple: GeoMetrics,
    pub refined: GeoMetrics,
    pub simple_region: StabilityRegion,
    pub refined_region: StabilityRegion,
}

impl AnalyzeReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario: {}", self.params);
        let _ = writeln!(
            s,
            "{:<10} {:>14} {:>14} {:>14} {:>14} {:>14} {:>14}  stable",
            "variant", "mu", "P(empty)", "mean queue", "D_Q", "D_T", "total"
        );
        for m in [&self.simple, &self.refined] {
            let name = match m.variant {
                MuVariant::Simple => "simple",
                MuVariant::Refined => "refined",
            };
            let cell = |v: Option<f64>| v.map_or("-".to_string(), fmt_sig);
            let _ = writeln!(
                s,
                "{:<10} {:>14} {:>14} {:>14} {:>14} {:>14} {:>14}  {}",
                name,
                fmt_sig(m.mu),
                cell(m.empty_prob),
                cell(m.mean_queue),
                cell(m.d_q),
                fmt_sig(m.d_t),
                cell(m.total_delay),
                m.stable
            );
        }
        for (name, r) in [
            ("simple", &self.simple_region),
            ("refined", &self.refined_region),
        ] {
            let _ = writeln!(s, "stable q1 ({name}): {}", describe_region(r));
        }
        s
    }
}

fn describe_region(r: &StabilityRegion) -> String {
    use analytic::StabilityKind::*;
    match (r.kind, r.threshold) {
        (AllQ1, _) => "all q1 in [0, 1]".to_string(),
        (None, _) => "none".to_string(),
        (Q1AboveThreshold, Some(t)) => format!("q1 > {}", fmt_sig(t)),
        (Q1BelowThreshold, Some(t)) => format!("q1 < {}", fmt_sig(t)),
        _ => unreachable!(),
    }
}

/// Closed-form metrics under both service approximations.
///
/// Returns the report even for unstable scenarios; [`analyze_verdict`] turns
/// an unstable refined model into an exit-code-2 error.
pub fn cmd_analyze(params: &ModelParams) -> Result<AnalyzeReport, StudyError> {
    let (l, p1, p2) = (params.lambda(), params.p1(), params.p2());
    Ok(AnalyzeReport {
        params: *params,
        simple: geo_metrics(params, MuVariant::Simple)?,
        refined: geo_metrics(params, MuVariant::Refined)?,
        simple_region: stability_region(l, p1, p2, MuVariant::Simple),
        refined_region: stability_region(l, p1, p2, MuVariant::Refined),
    })
}

/// The refined service probability is the exact stability boundary of the
/// chain, so only its verdict decides feasibility.
pub fn analyze_verdict(report: &AnalyzeReport) -> Result<(), StudyError> {
    if report.refined.stable {
        Ok(())
    } else {
        Err(StudyError::Infeasible(format!(
            "unstable: lambda = {} >= mu = {}",
            fmt_sig(report.params.lambda()),
            fmt_sig(report.refined.mu)
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizeReport {
    pub lambda: Option<f64>,
    pub p1: f64,
    pub p2: f64,
    pub total: Option<TotalDelayOptimum>,
    pub transmission: TransmissionOptimum,
}

impl OptimizeReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        if let (Some(l), Some(t)) = (self.lambda, &self.total) {
            let _ = writeln!(
                s,
                "total delay   (lambda={}, p1={}, p2={}): q1* = {}  D_Q+D_T = {} (D_Q = {}, D_T = {})",
                fmt_sig(l),
                fmt_sig(self.p1),
                fmt_sig(self.p2),
                fmt_sig(t.q1),
                fmt_sig(t.total_delay),
                fmt_sig(t.d_q),
                fmt_sig(t.d_t)
            );
        }
        let t = &self.transmission;
        let _ = writeln!(
            s,
            "transmission  (p1={}, p2={}): q1* = {}  D_T = {}{}",
            fmt_sig(self.p1),
            fmt_sig(self.p2),
            fmt_sig(t.q1),
            fmt_sig(t.d_t),
            if t.tie {
                "  (tie: every q1 gives the same D_T)"
            } else {
                ""
            }
        );
        s
    }
}

/// Minimizes the total delay (when `lambda` is given) and the transmission
/// delay alone.
pub fn cmd_optimize(lambda: Option<f64>, p1: f64, p2: f64) -> Result<OptimizeReport, StudyError> {
    let transmission = optimal_q1_transmission(p1, p2)?;
    let total = match lambda {
        Some(l) => Some(optimize_total_delay(l, p1, p2)?),
        None => None,
    };
    Ok(OptimizeReport {
        lambda,
        p1,
        p2,
        total,
        transmission,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    MatrixGeometric,
    Truncated,
}

impl FromStr for Solver {
    type Err = StudyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mg" | "matrix-geometric" => Ok(Solver::MatrixGeometric),
            "truncated" => Ok(Solver::Truncated),
            _ => Err(StudyError::Input(format!("unknown solver '{s}'"))),
        }
    }
}

/// Stationary distribution of the exact chain as `level,phase,probability`
/// CSV, up to `max_level` (default: every stored level).
pub fn cmd_qbd_dist<W: Write>(
    params: &ModelParams,
    solver: Solver,
    max_level: Option<usize>,
    out: W,
) -> Result<StationaryDistribution, StudyError> {
    let blocks = qbd::build_blocks(params);
    let dist = match solver {
        Solver::MatrixGeometric => qbd::stationary_matrix_geometric(&blocks, qbd::DEFAULT_TOL)?,
        Solver::Truncated => qbd::stationary_truncated_auto(&blocks)?,
    };
    let levels = max_level.unwrap_or(dist.truncation_level());
    dist.write_csv(out, levels)?;
    Ok(dist)
}
