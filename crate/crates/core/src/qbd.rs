//! Exact level-phase Markov chain of the transmitter.
//!
//! State `0` is the empty system. State `(k, phase)` for `k >= 1` has `k`
//! packets in the system, counting the head packet; phase 1 means the head
//! packet is half-way through a two-slot transmission. States are observed at
//! slot ends, after the departure and the (late) arrival of that slot.
//!
//! Levels `k >= 1` share the same 2×2 blocks: `up` (to `k + 1`), `local`
//! (within `k`) and `down` (to `k - 1`). Level 1 differs only in that its
//! downward transitions land in the empty state. The stationary law is
//! therefore matrix-geometric from level 1 on: `pi_{k+1} = pi_k R`.

use std::io::Write;

use nalgebra::{Matrix2, RowVector2, Vector2};
use serde::Serialize;
use thiserror::Error;

use crate::analytic::transmission_delay;
use crate::model::ModelParams;

/// Default stopping tolerance for the rate-matrix iteration (max norm).
pub const DEFAULT_TOL: f64 = 1e-15;
pub const MAX_RATE_ITERATIONS: usize = 1_000_000;
/// First truncation level tried by [`stationary_truncated_auto`].
pub const DEFAULT_TRUNCATION: usize = 400;
const MAX_TRUNCATION: usize = DEFAULT_TRUNCATION << 10;
/// Top-level mass beyond which a truncated solve is rejected.
pub const TRUNCATION_REJECT_MASS: f64 = 1e-6;
/// Top-level mass at which [`stationary_truncated_auto`] stops doubling.
pub const TRUNCATION_TARGET_MASS: f64 = 1e-9;
/// Mass left beyond the levels stored by the matrix-geometric solver.
const STORED_TAIL_MASS: f64 = 1e-15;
const MAX_STORED_LEVELS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QbdError {
    #[error("chain is not positive recurrent (mean level drift {drift:.3e} >= 0)")]
    Unstable { drift: f64 },
    #[error("rate matrix has spectral radius {radius} (>= 1 - 1e-9); chain is unstable")]
    SpectralRadius { radius: f64 },
    #[error("rate-matrix iteration did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("boundary equations are singular; the block construction is inconsistent")]
    SingularBoundary,
    #[error("truncation level {level} too small or chain unstable: top-level mass {mass:.3e}")]
    Truncation { level: usize, mass: f64 },
    #[error("truncation level {0} is below the minimum of 10")]
    TruncationTooLow(usize),
}

/// Phase of a non-empty level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    /// No transmission carried over from the previous slot.
    Idle = 0,
    /// The head packet is in the second slot of a two-slot transmission.
    MidService = 1,
}

/// Transition blocks of the chain, with phases ordered `(Idle, MidService)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QbdBlocks {
    pub params: ModelParams,
    /// Empty → empty.
    pub stay_empty: f64,
    /// Empty → level 1, per phase.
    pub empty_to_level1: RowVector2<f64>,
    /// Level 1 → empty, per phase.
    pub level1_to_empty: Vector2<f64>,
    /// `A0`: level `k` → `k + 1`.
    pub up: Matrix2<f64>,
    /// `A1`: level `k` → `k`.
    pub local: Matrix2<f64>,
    /// `A2`: level `k` → `k - 1`, for `k >= 2`.
    pub down: Matrix2<f64>,
}

/// Assembles the blocks from the per-slot rules.
///
/// From `(k, Idle)` a transmission starts: one slot with probability `q1`,
/// resolved at slot end with success `p1`, or two slots with `q2`, moving to
/// `MidService`. From `(k, MidService)` the second slot resolves with `p2`.
/// In both, one packet arrives at slot end with probability `lambda`.
pub fn build_blocks(params: &ModelParams) -> QbdBlocks {
    let l = params.lambda();
    let nl = 1.0 - l;
    let (q1, q2, p1, p2) = (params.q1(), params.q2(), params.p1(), params.p2());
    let (f1, f2) = (1.0 - p1, 1.0 - p2);

    let up = Matrix2::new(l * q1 * f1, l * q2, l * f2, 0.0);
    let local = Matrix2::new(nl * q1 * f1 + l * q1 * p1, nl * q2, l * p2 + nl * f2, 0.0);
    let down = Matrix2::new(nl * q1 * p1, 0.0, nl * p2, 0.0);

    let blocks = QbdBlocks {
        params: *params,
        stay_empty: nl,
        empty_to_level1: RowVector2::new(l, 0.0),
        level1_to_empty: down * Vector2::repeat(1.0),
        up,
        local,
        down,
    };
    debug_assert!(blocks.max_row_defect() < 1e-12);
    blocks
}

impl QbdBlocks {
    pub fn lambda(&self) -> f64 {
        self.params.lambda()
    }

    /// Largest `|row sum - 1|` over every distinct row of the full chain.
    pub fn max_row_defect(&self) -> f64 {
        let ones = Vector2::repeat(1.0);
        let repeating = (self.up + self.local + self.down) * ones;
        let level1 = (self.up + self.local) * ones + self.level1_to_empty;
        let empty = self.stay_empty + self.empty_to_level1.sum();
        repeating
            .iter()
            .chain(level1.iter())
            .chain(std::iter::once(&empty))
            .map(|s| (s - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Mean level increment per slot under the stationary phase law of
    /// `A0 + A1 + A2`; the chain is positive recurrent iff this is negative.
    pub fn mean_drift(&self) -> f64 {
        let a = self.up + self.local + self.down;
        let (to_mid, to_idle) = (a[(0, 1)], a[(1, 0)]);
        let theta = if to_mid + to_idle > 0.0 {
            RowVector2::new(to_idle, to_mid) / (to_mid + to_idle)
        } else {
            RowVector2::new(1.0, 0.0)
        };
        let ones = Vector2::repeat(1.0);
        (theta * self.up * ones)[0] - (theta * self.down * ones)[0]
    }
}

fn spectral_radius(m: &Matrix2<f64>) -> f64 {
    let tr = m.trace();
    let det = m.determinant();
    let disc = (tr * tr - 4.0 * det).max(0.0);
    0.5 * (tr.abs() + disc.sqrt())
}

fn max_abs(m: &Matrix2<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Converged rate matrix and its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateMatrix {
    pub r: Matrix2<f64>,
    pub spectral_radius: f64,
    pub iterations: usize,
}

/// Minimal nonnegative solution of `R = A0 + R A1 + R² A2`.
///
/// Iterates `R ← A0 (I - A1 - R A2)^-1` from `R = 0`; the iterates increase
/// monotonically to the minimal solution.
pub fn solve_rate_matrix(blocks: &QbdBlocks, tol: f64) -> Result<RateMatrix, QbdError> {
    if blocks.lambda() == 0.0 {
        return Ok(RateMatrix {
            r: Matrix2::zeros(),
            spectral_radius: 0.0,
            iterations: 0,
        });
    }
    let drift = blocks.mean_drift();
    if drift >= 0.0 {
        return Err(QbdError::Unstable { drift });
    }
    let eye = Matrix2::identity();
    let mut r: Matrix2<f64> = Matrix2::zeros();
    for it in 1..=MAX_RATE_ITERATIONS {
        let inv = (eye - blocks.local - r * blocks.down)
            .try_inverse()
            .ok_or(QbdError::SingularBoundary)?;
        let next = blocks.up * inv;
        let delta = max_abs(&(next - r));
        r = next;
        if delta < tol {
            let radius = spectral_radius(&r);
            if radius >= 1.0 - 1e-9 {
                return Err(QbdError::SpectralRadius { radius });
            }
            return Ok(RateMatrix {
                r,
                spectral_radius: radius,
                iterations: it,
            });
        }
    }
    Err(QbdError::NoConvergence {
        iterations: MAX_RATE_ITERATIONS,
    })
}

/// Stationary probabilities of the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution {
    pub pi_empty: f64,
    /// `level_phase[k - 1]` holds `[pi(k, Idle), pi(k, MidService)]` for
    /// `k = 1..=truncation_level()`.
    pub level_phase: Vec<[f64; 2]>,
    /// Present for matrix-geometric solutions; levels beyond the stored ones
    /// are then `pi_K R^(k - K)`.
    pub rate_matrix: Option<Matrix2<f64>>,
    /// Matrix-geometric: exact mass beyond the stored levels.
    /// Truncated: estimate of the mass the truncation cannot represent,
    /// extrapolated from the occupancy of the top two levels.
    pub tail_mass_bound: f64,
}

impl StationaryDistribution {
    fn all_empty() -> Self {
        Self {
            pi_empty: 1.0,
            level_phase: Vec::new(),
            rate_matrix: Some(Matrix2::zeros()),
            tail_mass_bound: 0.0,
        }
    }

    pub fn truncation_level(&self) -> usize {
        self.level_phase.len()
    }

    fn row(&self, level: usize) -> RowVector2<f64> {
        let [a, b] = self.level_phase[level - 1];
        RowVector2::new(a, b)
    }

    /// `[pi(k, Idle), pi(k, MidService)]`; level 0 reports the empty state
    /// in the first slot.
    pub fn level(&self, k: usize) -> [f64; 2] {
        if k == 0 {
            return [self.pi_empty, 0.0];
        }
        let top = self.truncation_level();
        if k <= top {
            return self.level_phase[k - 1];
        }
        match (&self.rate_matrix, top) {
            (Some(r), t) if t > 0 => {
                let v = self.row(t) * r.pow((k - t) as u32);
                [v[0], v[1]]
            }
            _ => [0.0, 0.0],
        }
    }

    pub fn level_mass(&self, k: usize) -> f64 {
        let [a, b] = self.level(k);
        a + b
    }

    /// Probability of `k` packets in the system for `k = 0..=truncation_level()`.
    pub fn level_marginal(&self) -> Vec<f64> {
        std::iter::once(self.pi_empty)
            .chain(self.level_phase.iter().map(|[a, b]| a + b))
            .collect()
    }

    /// Stored mass plus, for matrix-geometric solutions, the exact tail.
    pub fn total_mass(&self) -> f64 {
        let stored: f64 = self.level_marginal().iter().sum();
        match self.rate_matrix {
            Some(_) => stored + self.tail_mass_bound,
            None => stored,
        }
    }

    /// Mean number of packets in the system.
    pub fn mean_level(&self) -> f64 {
        let stored: f64 = self
            .level_phase
            .iter()
            .enumerate()
            .map(|(i, [a, b])| (i + 1) as f64 * (a + b))
            .sum();
        let top = self.truncation_level();
        match (&self.rate_matrix, top) {
            (Some(r), t) if t > 0 => {
                // sum_{j >= 1} (t + j) pi_t R^j 1
                let eye = Matrix2::identity();
                let Some(inv) = (eye - r).try_inverse() else {
                    return f64::INFINITY;
                };
                let ones = Vector2::repeat(1.0);
                let tail = self.row(t) * (r * inv * (t as f64) + r * inv * inv) * ones;
                stored + tail[0]
            }
            _ => stored,
        }
    }

    /// Total-variation distance, extending matrix-geometric solutions beyond
    /// their stored levels.
    pub fn total_variation(&self, other: &Self) -> f64 {
        let top = self.truncation_level().max(other.truncation_level());
        let mut sum = 0.0;
        for k in 0..=top {
            let (a, b) = (self.level(k), other.level(k));
            sum += (a[0] - b[0]).abs() + (a[1] - b[1]).abs();
        }
        let beyond = |d: &Self| -> f64 {
            if d.rate_matrix.is_none() {
                return 0.0;
            }
            let covered: f64 = (d.truncation_level() + 1..=top)
                .map(|k| d.level_mass(k))
                .sum();
            (d.tail_mass_bound - covered).max(0.0)
        };
        0.5 * (sum + beyond(self) + beyond(other))
    }

    /// Writes `level,phase,probability` rows for levels `0..=max_level`.
    /// The empty state is level 0, phase 0.
    pub fn write_csv<W: Write>(&self, out: W, max_level: usize) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["level", "phase", "probability"])?;
        w.write_record(["0", "0", &crate::study::fmt_sig(self.pi_empty)])?;
        for k in 1..=max_level {
            let probs = self.level(k);
            for (phase, p) in probs.iter().enumerate() {
                w.write_record([k.to_string(), phase.to_string(), crate::study::fmt_sig(*p)])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Stationary law via the rate matrix.
///
/// With `pi_0 = 1` provisionally, the level-1 balance
/// `pi_1 = pi_0 b + pi_1 A1 + pi_1 R A2` gives `pi_1`; higher levels follow
/// from `pi_{k+1} = pi_k R` and the total is normalized with `(I - R)^-1`.
pub fn stationary_matrix_geometric(
    blocks: &QbdBlocks,
    tol: f64,
) -> Result<StationaryDistribution, QbdError> {
    if blocks.lambda() == 0.0 {
        return Ok(StationaryDistribution::all_empty());
    }
    let rate = solve_rate_matrix(blocks, tol)?;
    let r = rate.r;
    let eye = Matrix2::identity();
    let boundary = (eye - blocks.local - r * blocks.down)
        .try_inverse()
        .ok_or(QbdError::SingularBoundary)?;
    let pi1 = blocks.empty_to_level1 * boundary;
    let tail_op = (eye - r).try_inverse().ok_or(QbdError::SingularBoundary)?;
    let ones = Vector2::repeat(1.0);
    let total = 1.0 + (pi1 * tail_op * ones)[0];
    let pi_empty = 1.0 / total;
    let mut row = pi1 * pi_empty;

    let mut level_phase = Vec::new();
    let mut tail = (row * tail_op * ones)[0];
    while tail > STORED_TAIL_MASS && level_phase.len() < MAX_STORED_LEVELS {
        level_phase.push([row[0], row[1]]);
        row *= r;
        tail = (row * tail_op * ones)[0];
    }
    Ok(StationaryDistribution {
        pi_empty,
        level_phase,
        rate_matrix: Some(r),
        tail_mass_bound: tail.max(0.0),
    })
}

/// Half-bandwidth of the transition matrix in the state order
/// `0, (1,0), (1,1), (2,0), (2,1), ...`.
const BAND: usize = 3;

/// Row-banded square matrix; entry `(i, j)` lives at `rows[i][j + BAND - i]`.
struct BandMatrix {
    rows: Vec<[f64; 2 * BAND + 1]>,
}

impl BandMatrix {
    fn zeros(n: usize) -> Self {
        Self {
            rows: vec![[0.0; 2 * BAND + 1]; n],
        }
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        if i.abs_diff(j) > BAND {
            0.0
        } else {
            self.rows[i][j + BAND - i]
        }
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(i.abs_diff(j) <= BAND, "entry ({i}, {j}) outside the band");
        self.rows[i][j + BAND - i] += v;
    }
}

fn state_index(level: usize, phase: usize) -> usize {
    if level == 0 {
        0
    } else {
        2 * level - 1 + phase
    }
}

/// Transition matrix of the chain cut at level `top`, with transitions above
/// `top` folded back into `top` (same phase).
fn truncated_matrix(blocks: &QbdBlocks, top: usize) -> BandMatrix {
    let n = 2 * top + 1;
    let mut p = BandMatrix::zeros(n);
    p.add(0, 0, blocks.stay_empty);
    for ph in 0..2 {
        p.add(0, state_index(1, ph), blocks.empty_to_level1[ph]);
    }
    for k in 1..=top {
        for i in 0..2 {
            let from = state_index(k, i);
            for j in 0..2 {
                p.add(from, state_index(k, j), blocks.local[(i, j)]);
                let up_level = if k == top { top } else { k + 1 };
                p.add(from, state_index(up_level, j), blocks.up[(i, j)]);
                if k >= 2 {
                    p.add(from, state_index(k - 1, j), blocks.down[(i, j)]);
                }
            }
            if k == 1 {
                p.add(from, 0, blocks.level1_to_empty[i]);
            }
        }
    }
    p
}

/// Stationary vector of a banded stochastic matrix by GTH state reduction
/// (no subtractions), eliminating states from the top down.
fn gth_banded(mut p: BandMatrix) -> Vec<f64> {
    let n = p.rows.len();
    let mut out_mass = vec![0.0; n];
    for m in (1..n).rev() {
        let lo = m.saturating_sub(BAND);
        let s: f64 = (lo..m).map(|j| p.get(m, j)).sum();
        out_mass[m] = s;
        if s <= 0.0 {
            // State m cannot reach lower states: it is transient or
            // unreachable from them, and carries no stationary mass.
            continue;
        }
        for i in lo..m {
            let pim = p.get(i, m);
            if pim == 0.0 {
                continue;
            }
            for j in lo..m {
                let pmj = p.get(m, j);
                if pmj != 0.0 {
                    p.add(i, j, pim * pmj / s);
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    x[0] = 1.0;
    for j in 1..n {
        if out_mass[j] <= 0.0 {
            continue;
        }
        let lo = j.saturating_sub(BAND);
        let inflow: f64 = (lo..j).map(|i| x[i] * p.get(i, j)).sum();
        x[j] = inflow / out_mass[j];
    }
    let total: f64 = x.iter().sum();
    x.iter().map(|v| v / total).collect()
}

/// Truncated solve without the top-mass check.
pub fn truncated_chain(blocks: &QbdBlocks, top: usize) -> StationaryDistribution {
    let x = gth_banded(truncated_matrix(blocks, top));
    let level_phase: Vec<[f64; 2]> = (1..=top)
        .map(|k| [x[state_index(k, 0)], x[state_index(k, 1)]])
        .collect();
    let top_mass = level_phase[top - 1][0] + level_phase[top - 1][1];
    let below = if top >= 2 {
        level_phase[top - 2][0] + level_phase[top - 2][1]
    } else {
        x[0]
    };
    let tail_mass_bound = if top_mass == 0.0 {
        0.0
    } else if below > 0.0 && top_mass < below {
        let ratio = top_mass / below;
        top_mass / (1.0 - ratio)
    } else {
        1.0
    };
    StationaryDistribution {
        pi_empty: x[0],
        level_phase,
        rate_matrix: None,
        tail_mass_bound,
    }
}

/// Stationary law of the chain truncated at level `top` (at least 10), solved
/// directly. Fails when the top level holds more than 1e-6 of the mass.
pub fn stationary_truncated(
    blocks: &QbdBlocks,
    top: usize,
) -> Result<StationaryDistribution, QbdError> {
    if top < 10 {
        return Err(QbdError::TruncationTooLow(top));
    }
    let dist = truncated_chain(blocks, top);
    let mass = dist.level_mass(top);
    if mass > TRUNCATION_REJECT_MASS {
        return Err(QbdError::Truncation { level: top, mass });
    }
    Ok(dist)
}

/// Truncated solve starting at level 400 and doubling until the top level
/// holds less than 1e-9 of the mass.
pub fn stationary_truncated_auto(blocks: &QbdBlocks) -> Result<StationaryDistribution, QbdError> {
    let mut top = DEFAULT_TRUNCATION;
    loop {
        let dist = truncated_chain(blocks, top);
        let mass = dist.level_mass(top);
        if mass < TRUNCATION_TARGET_MASS {
            return Ok(dist);
        }
        if top >= MAX_TRUNCATION {
            if mass > TRUNCATION_REJECT_MASS {
                return Err(QbdError::Truncation { level: top, mass });
            }
            return Ok(dist);
        }
        top *= 2;
    }
}

/// Performance figures read off a stationary distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactMetrics {
    pub empty_prob: f64,
    /// Mean packets in the system, the one in service included.
    pub mean_level: f64,
    /// `1 / D_T`, reported for comparison with the closed forms.
    pub service_prob_effective: f64,
    /// `mean_level / lambda`; zero without arrivals.
    pub little_delay: f64,
}

pub fn metrics_from_stationary(
    dist: &StationaryDistribution,
    params: &ModelParams,
) -> ExactMetrics {
    let mean_level = dist.mean_level();
    let lambda = params.lambda();
    ExactMetrics {
        empty_prob: dist.pi_empty,
        mean_level,
        service_prob_effective: transmission_delay(params).map_or(0.0, |d| 1.0 / d),
        little_delay: if lambda > 0.0 {
            mean_level / lambda
        } else {
            0.0
        },
    }
}
