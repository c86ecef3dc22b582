//! Closed-form Geo/Geo/1 approximation of the queue.
//!
//! The transmitter is replaced by a server that completes a packet in each
//! busy slot with a fixed probability `mu`. Two choices of `mu` are offered:
//! the slot-averaged mixture ([`mu_simple`]) and the reciprocal of the exact
//! mean transmission time ([`mu_refined`]). The transmission delay itself is
//! exact and does not depend on the choice.

use serde::Serialize;
use thiserror::Error;

use crate::model::ModelParams;

/// Band inside which sign tests such as `p1` vs `p2 / 2` count as a tie.
pub const TIE_TOL: f64 = 1e-12;

/// Grid step and final bracket width of [`optimize_total_delay`].
const OPT_GRID_STEP: f64 = 1e-4;
const OPT_BRACKET_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error("queue is unstable: lambda = {lambda} >= mu = {mu}")]
    Unstable { lambda: f64, mu: f64 },
    #[error("no transmission can succeed (q-weighted success probability is 0)")]
    ZeroSuccess,
    #[error("no q1 in [0, 1] keeps the queue stable for lambda = {lambda}, p1 = {p1}, p2 = {p2}")]
    NoStableQ1 { lambda: f64, p1: f64, p2: f64 },
    #[error("{name} = {value} is outside its domain")]
    Domain { name: &'static str, value: f64 },
}

/// Which service-probability approximation feeds the queueing formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MuVariant {
    Simple,
    Refined,
}

/// `q1 p1 + q2 p2 / 2`.
pub fn mu_simple(params: &ModelParams) -> f64 {
    params.q1() * params.p1() + params.q2() * params.p2() / 2.0
}

/// `(p2 + q1 (p1 - p2)) / (2 - q1)`, the reciprocal of the mean number of
/// slots a packet spends in transmission. Evaluated as
/// `(q1 p1 + q2 p2) / (1 + q2)`, which is exact at `q1 = 1`.
pub fn mu_refined(params: &ModelParams) -> f64 {
    params.attempt_success() / (1.0 + params.q2())
}

pub fn service_probability(params: &ModelParams, variant: MuVariant) -> f64 {
    match variant {
        MuVariant::Simple => mu_simple(params),
        MuVariant::Refined => mu_refined(params),
    }
}

fn check_queue_inputs(lambda: f64, mu: f64) -> Result<(), AnalyticError> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(AnalyticError::Domain {
            name: "lambda",
            value: lambda,
        });
    }
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(AnalyticError::Domain {
            name: "mu",
            value: mu,
        });
    }
    if lambda >= mu {
        return Err(AnalyticError::Unstable { lambda, mu });
    }
    Ok(())
}

/// Stationary probability of `i` packets in the Geo/Geo/1 queue with late
/// arrivals and early departures.
pub fn stationary_geo(lambda: f64, mu: f64, i: u64) -> Result<f64, AnalyticError> {
    check_queue_inputs(lambda, mu)?;
    let empty = 1.0 - lambda / mu;
    if i == 0 {
        return Ok(empty);
    }
    let first = lambda / ((1.0 - lambda) * mu);
    let ratio = lambda * (1.0 - mu) / ((1.0 - lambda) * mu);
    Ok(empty * first * ratio.powf((i - 1) as f64))
}

/// `(1 - lambda) / (mu - lambda)`.
pub fn queueing_delay(lambda: f64, mu: f64) -> Result<f64, AnalyticError> {
    check_queue_inputs(lambda, mu)?;
    Ok((1.0 - lambda) / (mu - lambda))
}

/// Mean number of packets in the system; `lambda * queueing_delay` so that
/// Little's law holds exactly.
pub fn mean_queue(lambda: f64, mu: f64) -> Result<f64, AnalyticError> {
    Ok(lambda * queueing_delay(lambda, mu)?)
}

/// Mean slots from the first attempt of a packet to its delivery, from the
/// regenerative argument: `(q1 + 2 q2) / (1 - q1 (1 - p1) - q2 (1 - p2))`.
pub fn transmission_delay_regenerative(params: &ModelParams) -> Result<f64, AnalyticError> {
    let (q1, q2, p1, p2) = (params.q1(), params.q2(), params.p1(), params.p2());
    let denom = 1.0 - q1 * (1.0 - p1) - q2 * (1.0 - p2);
    if params.attempt_success() <= 0.0 || denom <= 0.0 {
        return Err(AnalyticError::ZeroSuccess);
    }
    Ok((q1 + 2.0 * q2) / denom)
}

/// Mean slots from the first attempt of a packet to its delivery,
/// `(2 - q1) / (p2 + q1 (p1 - p2))`.
pub fn transmission_delay(params: &ModelParams) -> Result<f64, AnalyticError> {
    let success = params.attempt_success();
    if success <= 0.0 {
        return Err(AnalyticError::ZeroSuccess);
    }
    let d_t = (1.0 + params.q2()) / success;
    debug_assert!({
        let other = transmission_delay_regenerative(params)?;
        (other - d_t).abs() <= 1e-9 * d_t.max(1.0)
    });
    Ok(d_t)
}

/// Closed-form metrics of one scenario under one `mu` approximation.
///
/// Queue-dependent fields are `None` when the queue is unstable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeoMetrics {
    pub variant: MuVariant,
    pub lambda: f64,
    pub mu: f64,
    pub stable: bool,
    pub empty_prob: Option<f64>,
    pub mean_queue: Option<f64>,
    pub d_q: Option<f64>,
    pub d_t: f64,
    pub total_delay: Option<f64>,
}

pub fn geo_metrics(params: &ModelParams, variant: MuVariant) -> Result<GeoMetrics, AnalyticError> {
    let lambda = params.lambda();
    let mu = service_probability(params, variant);
    let d_t = transmission_delay(params)?;
    let mut m = GeoMetrics {
        variant,
        lambda,
        mu,
        stable: false,
        empty_prob: None,
        mean_queue: None,
        d_q: None,
        d_t,
        total_delay: None,
    };
    match queueing_delay(lambda, mu) {
        Ok(d_q) => {
            m.stable = true;
            m.empty_prob = Some(1.0 - lambda / mu);
            m.mean_queue = Some(lambda * d_q);
            m.d_q = Some(d_q);
            m.total_delay = Some(d_q + d_t);
        }
        Err(AnalyticError::Unstable { .. }) => {}
        Err(e) => return Err(e),
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StabilityKind {
    AllQ1,
    None,
    Q1AboveThreshold,
    Q1BelowThreshold,
}

/// Set of `q1 ∈ [0, 1]` for which the queue is stable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityRegion {
    pub kind: StabilityKind,
    pub threshold: Option<f64>,
}

impl StabilityRegion {
    fn all() -> Self {
        Self {
            kind: StabilityKind::AllQ1,
            threshold: None,
        }
    }

    fn none() -> Self {
        Self {
            kind: StabilityKind::None,
            threshold: None,
        }
    }

    pub fn contains(&self, q1: f64) -> bool {
        match (self.kind, self.threshold) {
            (StabilityKind::AllQ1, _) => (0.0..=1.0).contains(&q1),
            (StabilityKind::None, _) => false,
            (StabilityKind::Q1AboveThreshold, Some(t)) => q1 > t && q1 <= 1.0,
            (StabilityKind::Q1BelowThreshold, Some(t)) => q1 < t && q1 >= 0.0,
            _ => unreachable!("threshold kinds always carry a threshold"),
        }
    }
}

/// Solves `slope * q1 > rhs` over `[0, 1]`.
fn linear_region(slope: f64, rhs: f64) -> StabilityRegion {
    if slope.abs() <= TIE_TOL {
        return if rhs < 0.0 {
            StabilityRegion::all()
        } else {
            StabilityRegion::none()
        };
    }
    let t = rhs / slope;
    if slope > 0.0 {
        if t < 0.0 {
            StabilityRegion::all()
        } else if t >= 1.0 {
            StabilityRegion::none()
        } else {
            StabilityRegion {
                kind: StabilityKind::Q1AboveThreshold,
                threshold: Some(t),
            }
        }
    } else if t > 1.0 {
        StabilityRegion::all()
    } else if t <= 0.0 {
        StabilityRegion::none()
    } else {
        StabilityRegion {
            kind: StabilityKind::Q1BelowThreshold,
            threshold: Some(t),
        }
    }
}

/// The `q1` values for which `lambda < mu(q1)`.
///
/// Simple: `q1 (2 p1 - p2) > 2 lambda - p2`.
/// Refined: `q1 (lambda + p1 - p2) > 2 lambda - p2`.
pub fn stability_region(lambda: f64, p1: f64, p2: f64, variant: MuVariant) -> StabilityRegion {
    let rhs = 2.0 * lambda - p2;
    let slope = match variant {
        MuVariant::Simple => 2.0 * p1 - p2,
        MuVariant::Refined => lambda + p1 - p2,
    };
    linear_region(slope, rhs)
}

/// Minimizer of the transmission delay over `q1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransmissionOptimum {
    pub q1: f64,
    pub d_t: f64,
    /// Set when every `q1` gives the same delay; `q1` is then 0.5.
    pub tie: bool,
}

pub fn optimal_q1_transmission(p1: f64, p2: f64) -> Result<TransmissionOptimum, AnalyticError> {
    if !(p2 > 0.0 && p2 <= 1.0) {
        return Err(AnalyticError::Domain {
            name: "p2",
            value: p2,
        });
    }
    let gap = 2.0 * p1 - p2;
    Ok(if gap.abs() <= TIE_TOL {
        TransmissionOptimum {
            q1: 0.5,
            d_t: 2.0 / p2,
            tie: true,
        }
    } else if gap > 0.0 {
        TransmissionOptimum {
            q1: 1.0,
            d_t: 1.0 / p1,
            tie: false,
        }
    } else {
        TransmissionOptimum {
            q1: 0.0,
            d_t: 2.0 / p2,
            tie: false,
        }
    })
}

/// Minimizer of `D_Q + D_T` with the refined service probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TotalDelayOptimum {
    pub q1: f64,
    pub total_delay: f64,
    pub d_q: f64,
    pub d_t: f64,
}

/// Refined total delay as a function of `q1`; `None` where unstable.
pub fn refined_total_delay(lambda: f64, p1: f64, p2: f64, q1: f64) -> Option<f64> {
    let params = ModelParams::new(lambda, q1, p1, p2).ok()?;
    let d_t = transmission_delay(&params).ok()?;
    let d_q = queueing_delay(lambda, mu_refined(&params)).ok()?;
    Some(d_q + d_t)
}

/// Grid search over `[0, 1]` at step 1e-4, then golden-section refinement
/// inside the stable neighbours of the best grid point. Unstable `q1` are
/// excluded from the search.
pub fn optimize_total_delay(
    lambda: f64,
    p1: f64,
    p2: f64,
) -> Result<TotalDelayOptimum, AnalyticError> {
    // Surface parameter-domain problems before the search hides them.
    ModelParams::new(lambda, 0.5, p1, p2).map_err(|_| AnalyticError::Domain {
        name: "scenario",
        value: lambda,
    })?;
    let f = |q1: f64| refined_total_delay(lambda, p1, p2, q1);
    let steps = (1.0 / OPT_GRID_STEP).round() as usize;
    let grid: Vec<(f64, Option<f64>)> = (0..=steps)
        .map(|i| {
            let q1 = (i as f64 * OPT_GRID_STEP).min(1.0);
            (q1, f(q1))
        })
        .collect();

    let (best_idx, _) = grid
        .iter()
        .enumerate()
        .filter_map(|(i, (_, v))| v.map(|v| (i, v)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(AnalyticError::NoStableQ1 { lambda, p1, p2 })?;

    let lo_idx = if best_idx > 0 && grid[best_idx - 1].1.is_some() {
        best_idx - 1
    } else {
        best_idx
    };
    let hi_idx = if best_idx < steps && grid[best_idx + 1].1.is_some() {
        best_idx + 1
    } else {
        best_idx
    };

    let mut best = (grid[best_idx].0, grid[best_idx].1.unwrap());
    let mut consider = |q1: f64| {
        if let Some(v) = f(q1) {
            if v < best.1 {
                best = (q1, v);
            }
        }
    };
    if hi_idx > lo_idx {
        let q = golden_section(grid[lo_idx].0, grid[hi_idx].0, |x| {
            f(x).unwrap_or(f64::INFINITY)
        });
        consider(q);
    }

    let q1 = best.0;
    let params = ModelParams::new(lambda, q1, p1, p2).expect("validated above");
    let d_t = transmission_delay(&params)?;
    let d_q = queueing_delay(lambda, mu_refined(&params))?;
    Ok(TotalDelayOptimum {
        q1,
        total_delay: d_q + d_t,
        d_q,
        d_t,
    })
}

fn golden_section<F: Fn(f64) -> f64>(mut a: f64, mut b: f64, f: F) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > OPT_BRACKET_TOL {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    // Endpoints are candidates too: the objective is often monotone.
    [a, b, 0.5 * (a + b)]
        .into_iter()
        .min_by(|x, y| f(*x).total_cmp(&f(*y)))
        .unwrap()
}
