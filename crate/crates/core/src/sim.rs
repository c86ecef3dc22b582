//! Slot-accurate Monte Carlo simulation of the transmitter queue.
//!
//! Each slot runs in this order:
//!
//! 1. If the head packet is in the second slot of a two-slot transmission,
//!    that transmission resolves at slot end with success `p2`.
//! 2. Otherwise, if the queue is non-empty, a duration is drawn (one slot
//!    with `q1`, two with `q2`). A one-slot transmission resolves at slot end
//!    with success `p1`; a two-slot one carries over to the next slot.
//! 3. A packet arrives at slot end with probability `lambda`. It cannot be
//!    served before the next slot.
//!
//! A failed packet stays at the head of the queue and draws a fresh duration
//! in the next slot. The system size is sampled at slot end, after the
//! departure and the arrival, which is the state the exact chain describes.
//!
//! Randomness comes from `Pcg64` (128-bit LCG state, 2^128 period) seeded
//! with `seed_from_u64`. Replicate `i` of a run with base seed `s` uses
//! seed `splitmix64(s + i)`. Golden outputs depend on both choices.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::ModelParams;

pub const DEFAULT_HORIZON: u64 = 1_000_000;
pub const DEFAULT_WARMUP: u64 = 10_000;
/// Number of batches used for the batch-means standard error of `qbar_hat`.
pub const BATCHES: u64 = 20;
/// System size at which a run is declared unstable and stopped.
pub const QUEUE_CAP: usize = 10_000_000;
/// 97.5 % standard normal quantile.
const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("horizon ({horizon}) must exceed warmup ({warmup})")]
    Horizon { horizon: u64, warmup: u64 },
    #[error("at least two replicates are needed, got {0}")]
    TooFewReplicates(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub params: ModelParams,
    pub horizon: u64,
    pub seed: u64,
    pub warmup: u64,
    pub sample_queue_distribution: bool,
}

impl SimConfig {
    /// Default horizon and warmup; the seed is always explicit.
    pub fn new(params: ModelParams, seed: u64) -> Self {
        Self {
            params,
            horizon: DEFAULT_HORIZON,
            seed,
            warmup: DEFAULT_WARMUP,
            sample_queue_distribution: true,
        }
    }

    pub fn with_horizon(mut self, horizon: u64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_warmup(mut self, warmup: u64) -> Self {
        self.warmup = warmup;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.horizon <= self.warmup {
            return Err(SimError::Horizon {
                horizon: self.horizon,
                warmup: self.warmup,
            });
        }
        Ok(())
    }
}

/// Estimates from one run. Rates and means cover the measurement window
/// (slots `warmup..horizon`); `arrived`, `served` and `backlog` cover the
/// whole run so that `arrived == served + backlog` holds exactly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    /// Completions per busy slot; both slots of a two-slot attempt are busy.
    pub mu_hat: f64,
    /// Time-average number of packets in the system.
    pub qbar_hat: f64,
    /// Batch-means standard error of `qbar_hat`.
    pub qbar_se: f64,
    /// `qbar_hat / lambda_hat`.
    pub dq_hat: f64,
    /// Mean slots from first transmission attempt to delivery, inclusive.
    pub dt_hat: f64,
    pub total_delay_hat: f64,
    /// Mean of departure slot minus arrival slot.
    pub sojourn_mean: f64,
    pub lambda_hat: f64,
    /// Empirical law of the system size; empty unless sampling was requested.
    pub queue_hist: Vec<f64>,
    pub served: u64,
    pub arrived: u64,
    pub backlog: u64,
    pub busy_slots: u64,
    pub measured_slots: u64,
    pub unstable_flag: bool,
}

impl SimReport {
    pub const CSV_HEADER: [&'static str; 14] = [
        "mu_hat",
        "qbar_hat",
        "qbar_se",
        "dq_hat",
        "dt_hat",
        "total_delay_hat",
        "sojourn_mean",
        "lambda_hat",
        "served",
        "arrived",
        "backlog",
        "busy_slots",
        "measured_slots",
        "unstable_flag",
    ];

    /// One CSV record matching [`SimReport::CSV_HEADER`].
    pub fn csv_record(&self) -> Vec<String> {
        use crate::study::fmt_sig;
        vec![
            fmt_sig(self.mu_hat),
            fmt_sig(self.qbar_hat),
            fmt_sig(self.qbar_se),
            fmt_sig(self.dq_hat),
            fmt_sig(self.dt_hat),
            fmt_sig(self.total_delay_hat),
            fmt_sig(self.sojourn_mean),
            fmt_sig(self.lambda_hat),
            self.served.to_string(),
            self.arrived.to_string(),
            self.backlog.to_string(),
            self.busy_slots.to_string(),
            self.measured_slots.to_string(),
            self.unstable_flag.to_string(),
        ]
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// A run is flagged unstable when its final backlog is both sizeable and
/// well beyond the square-root fluctuations of a critically loaded queue.
fn drifting(backlog: u64, measured_slots: u64) -> bool {
    let b = backlog as f64;
    b > 100.0 && b > 4.0 * (measured_slots as f64).sqrt()
}

/// Simulates `config.horizon` slots.
pub fn run_slots(config: &SimConfig) -> Result<SimReport, SimError> {
    config.validate()?;
    let p = &config.params;
    let (lambda, q1, p1, p2) = (p.lambda(), p.q1(), p.p1(), p.p2());
    let mut rng = Pcg64::seed_from_u64(config.seed);

    // Arrival slots of the packets in the system, head first.
    let mut queue: VecDeque<u64> = VecDeque::new();
    let mut mid_service = false;
    let mut head_start: Option<u64> = None;

    let (mut arrived, mut served) = (0u64, 0u64);
    let (mut window_arrivals, mut window_completions, mut busy_slots) = (0u64, 0u64, 0u64);
    let (mut dt_sum, mut sojourn_sum) = (0u64, 0u64);
    let mut area: u128 = 0;
    let mut hist: Vec<u64> = Vec::new();

    let window = config.horizon - config.warmup;
    let mut batch_area = vec![0u128; BATCHES as usize];
    let mut slots_run = config.horizon;
    let mut capped = false;

    for t in 0..config.horizon {
        let measuring = t >= config.warmup;
        let mut busy = false;
        let mut success = false;

        if mid_service {
            busy = true;
            mid_service = false;
            success = rng.random::<f64>() < p2;
        } else if !queue.is_empty() {
            busy = true;
            head_start.get_or_insert(t);
            if rng.random::<f64>() < q1 {
                success = rng.random::<f64>() < p1;
            } else {
                mid_service = true;
            }
        }

        if success {
            let arrival = queue.pop_front().expect("departure from an empty queue");
            let start = head_start.take().expect("departure without a start slot");
            served += 1;
            if measuring {
                window_completions += 1;
                dt_sum += t - start + 1;
                sojourn_sum += t - arrival;
            }
        }

        if rng.random::<f64>() < lambda {
            queue.push_back(t);
            arrived += 1;
            if measuring {
                window_arrivals += 1;
            }
        }

        if measuring {
            let len = queue.len();
            busy_slots += u64::from(busy);
            area += len as u128;
            batch_area[((t - config.warmup) * BATCHES / window) as usize] += len as u128;
            if config.sample_queue_distribution {
                if hist.len() <= len {
                    hist.resize(len + 1, 0);
                }
                hist[len] += 1;
            }
        }

        if queue.len() > QUEUE_CAP {
            capped = true;
            slots_run = t + 1;
            break;
        }
    }

    let measured_slots = slots_run.saturating_sub(config.warmup);
    let measured = measured_slots as f64;
    let qbar_hat = ratio(area as f64, measured);
    let lambda_hat = ratio(window_arrivals as f64, measured);
    let dq_hat = ratio(qbar_hat, lambda_hat);
    let dt_hat = ratio(dt_sum as f64, window_completions as f64);

    let qbar_se = if capped {
        0.0
    } else {
        let means: Vec<f64> = batch_area
            .iter()
            .enumerate()
            .map(|(i, a)| {
                // Offsets o with floor(o * BATCHES / window) == i.
                let lo = (i as u64 * window).div_ceil(BATCHES);
                let hi = ((i as u64 + 1) * window).div_ceil(BATCHES);
                let len = (hi - lo).max(1) as f64;
                *a as f64 / len
            })
            .collect();
        let stats = Summary::of(&means);
        stats.std / (BATCHES as f64).sqrt()
    };

    let queue_hist = hist.iter().map(|&c| ratio(c as f64, measured)).collect();
    let backlog = queue.len() as u64;
    Ok(SimReport {
        mu_hat: ratio(window_completions as f64, busy_slots as f64),
        qbar_hat,
        qbar_se,
        dq_hat,
        dt_hat,
        total_delay_hat: dq_hat + dt_hat,
        sojourn_mean: ratio(sojourn_sum as f64, window_completions as f64),
        lambda_hat,
        queue_hist,
        served,
        arrived,
        backlog,
        busy_slots,
        measured_slots,
        unstable_flag: capped || drifting(backlog, measured_slots),
    })
}

/// splitmix64 finalizer; a bijection on `u64`.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replicate `index` for base seed `base`.
pub fn replicate_seed(base: u64, index: u64) -> u64 {
    mix64(base.wrapping_add(index))
}

/// Sample mean, sample standard deviation and 95 % normal interval of the
/// mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let std = var.sqrt();
        let half = Z_95 * std / n.sqrt();
        Self {
            mean,
            std,
            ci_low: mean - half,
            ci_high: mean + half,
        }
    }

    pub fn covers(&self, value: f64) -> bool {
        self.ci_low <= value && value <= self.ci_high
    }
}

/// Independent replicates of one configuration and their summaries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateReport {
    pub runs: Vec<SimReport>,
    pub mu_hat: Summary,
    pub qbar_hat: Summary,
    pub dq_hat: Summary,
    pub dt_hat: Summary,
    pub total_delay_hat: Summary,
    pub sojourn_mean: Summary,
    pub lambda_hat: Summary,
    pub any_unstable: bool,
}

/// Runs `n_reps` replicates in parallel; the result depends only on the
/// configuration, never on scheduling.
pub fn replicate(config: &SimConfig, n_reps: usize) -> Result<ReplicateReport, SimError> {
    if n_reps < 2 {
        return Err(SimError::TooFewReplicates(n_reps));
    }
    config.validate()?;
    let runs = (0..n_reps as u64)
        .into_par_iter()
        .map(|i| run_slots(&config.with_seed(replicate_seed(config.seed, i))))
        .collect::<Result<Vec<_>, _>>()?;
    let summary = |f: fn(&SimReport) -> f64| {
        let values: Vec<f64> = runs.iter().map(f).collect();
        Summary::of(&values)
    };
    Ok(ReplicateReport {
        mu_hat: summary(|r| r.mu_hat),
        qbar_hat: summary(|r| r.qbar_hat),
        dq_hat: summary(|r| r.dq_hat),
        dt_hat: summary(|r| r.dt_hat),
        total_delay_hat: summary(|r| r.total_delay_hat),
        sojourn_mean: summary(|r| r.sojourn_mean),
        lambda_hat: summary(|r| r.lambda_hat),
        any_unstable: runs.iter().any(|r| r.unstable_flag),
        runs,
    })
}
