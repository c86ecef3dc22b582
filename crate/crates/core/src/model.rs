//! Scenario parameters and the finite-blocklength channel mapping.
//!
//! A scenario is five probabilities: the per-slot arrival probability, the
//! probabilities of picking a one- or two-slot transmission, and the success
//! probability of each transmission length.

use std::f64::consts::{LOG2_E, SQRT_2};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on `q1 + q2 = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("{field} = {value} is outside [0, 1]")]
    OutOfRange { field: &'static str, value: f64 },
    #[error("q1 + q2 = {sum} (q1 = {q1}, q2 = {q2}) must equal 1")]
    NotNormalized { q1: f64, q2: f64, sum: f64 },
    #[error("p1 = {p1} exceeds p2 = {p2}; a two-slot transmission must not be less reliable")]
    SuccessOrder { p1: f64, p2: f64 },
    #[error("channel {field} must be {requirement}")]
    Channel {
        field: &'static str,
        requirement: &'static str,
    },
}

/// Validated scenario probabilities.
///
/// Fields are private so that every instance satisfies the invariants; use
/// [`ModelParams::new`] or [`validate_params`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    lambda: f64,
    q1: f64,
    q2: f64,
    p1: f64,
    p2: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RawParams {
    lambda: f64,
    q1: f64,
    q2: f64,
    p1: f64,
    p2: f64,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = ParamError;

    fn try_from(raw: RawParams) -> Result<Self, Self::Error> {
        validate_params(raw.lambda, raw.q1, raw.q2, raw.p1, raw.p2)
    }
}

impl From<ModelParams> for RawParams {
    fn from(p: ModelParams) -> Self {
        RawParams {
            lambda: p.lambda,
            q1: p.q1,
            q2: p.q2,
            p1: p.p1,
            p2: p.p2,
        }
    }
}

fn check_unit(field: &'static str, value: f64) -> Result<(), ParamError> {
    // NaN fails the range test as well.
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ParamError::OutOfRange { field, value })
    }
}

/// Validates all five probabilities, naming the first violated invariant.
pub fn validate_params(
    lambda: f64,
    q1: f64,
    q2: f64,
    p1: f64,
    p2: f64,
) -> Result<ModelParams, ParamError> {
    check_unit("lambda", lambda)?;
    check_unit("q1", q1)?;
    check_unit("q2", q2)?;
    check_unit("p1", p1)?;
    check_unit("p2", p2)?;
    let sum = q1 + q2;
    if (sum - 1.0).abs() > NORMALIZATION_TOL {
        return Err(ParamError::NotNormalized { q1, q2, sum });
    }
    if p1 > p2 {
        return Err(ParamError::SuccessOrder { p1, p2 });
    }
    Ok(ModelParams {
        lambda,
        q1,
        q2,
        p1,
        p2,
    })
}

impl ModelParams {
    /// Builds parameters from `q1` alone; `q2 = 1 - q1`.
    pub fn new(lambda: f64, q1: f64, p1: f64, p2: f64) -> Result<Self, ParamError> {
        validate_params(lambda, q1, 1.0 - q1, p1, p2)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn q1(&self) -> f64 {
        self.q1
    }

    pub fn q2(&self) -> f64 {
        self.q2
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn p2(&self) -> f64 {
        self.p2
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self, ParamError> {
        Self::new(lambda, self.q1, self.p1, self.p2)
    }

    pub fn with_q1(&self, q1: f64) -> Result<Self, ParamError> {
        Self::new(self.lambda, q1, self.p1, self.p2)
    }

    pub fn with_success(&self, p1: f64, p2: f64) -> Result<Self, ParamError> {
        validate_params(self.lambda, self.q1, self.q2, p1, p2)
    }

    /// Probability that a single transmission attempt succeeds, whatever its
    /// length.
    pub fn attempt_success(&self) -> f64 {
        self.q1 * self.p1 + self.q2 * self.p2
    }
}

impl fmt::Display for ModelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "lambda={} q1={} q2={} p1={} p2={}",
            self.lambda, self.q1, self.q2, self.p1, self.p2
        )
    }
}

/// Physical-layer description of one slot: channel uses, packet bits and
/// linear SNR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    n: u32,
    b: u32,
    gamma: f64,
}

impl ChannelSpec {
    pub fn new(n: u32, b: u32, gamma: f64) -> Result<Self, ParamError> {
        if n == 0 {
            return Err(ParamError::Channel {
                field: "n",
                requirement: "at least 1",
            });
        }
        if b == 0 {
            return Err(ParamError::Channel {
                field: "b",
                requirement: "at least 1",
            });
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(ParamError::Channel {
                field: "gamma",
                requirement: "a positive finite linear SNR",
            });
        }
        Ok(Self { n, b, gamma })
    }

    /// Same as [`ChannelSpec::new`] with the SNR given in dB.
    pub fn from_db(n: u32, b: u32, gamma_db: f64) -> Result<Self, ParamError> {
        Self::new(n, b, db_to_linear(gamma_db))
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn b(&self) -> u32 {
        self.b
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// The same channel with `factor` times as many channel uses.
    pub fn stretched(&self, factor: u32) -> Self {
        Self {
            n: self.n * factor,
            ..*self
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Gaussian tail probability `Q(x) = P(Z > x)`.
pub fn gaussian_q(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// AWGN channel dispersion in bits², `(1 - (1 + gamma)^-2) * log2(e)^2`.
pub fn awgn_dispersion(gamma: f64) -> f64 {
    (1.0 - (1.0 + gamma).powi(-2)) * LOG2_E * LOG2_E
}

/// Normal-approximation block error probability over the AWGN channel.
pub fn finite_blocklength_error(spec: &ChannelSpec) -> f64 {
    finite_blocklength_error_with(spec, awgn_dispersion)
}

/// Normal-approximation block error probability with a caller-supplied
/// dispersion `V(gamma)`.
pub fn finite_blocklength_error_with<V>(spec: &ChannelSpec, dispersion: V) -> f64
where
    V: Fn(f64) -> f64,
{
    let n = f64::from(spec.n);
    let b = f64::from(spec.b);
    let capacity = (1.0 + spec.gamma).log2();
    let numerator = n * capacity - b + 0.5 * n.log2();
    let arg = numerator / (dispersion(spec.gamma) * n).sqrt();
    gaussian_q(arg).clamp(0.0, 1.0)
}

/// Success probabilities of one- and two-slot transmissions; a two-slot
/// transmission gets twice the channel uses for the same bits.
pub fn derive_success_probs(spec: &ChannelSpec) -> (f64, f64) {
    derive_success_probs_with(spec, awgn_dispersion)
}

pub fn derive_success_probs_with<V>(spec: &ChannelSpec, dispersion: V) -> (f64, f64)
where
    V: Fn(f64) -> f64,
{
    let p1 = 1.0 - finite_blocklength_error_with(spec, &dispersion);
    let p2 = 1.0 - finite_blocklength_error_with(&spec.stretched(2), &dispersion);
    // With 2n uses the sender can always resend the n-use codeword, so p2 < p1
    // is an artifact of the approximation (tiny b, huge n) and is floored.
    (p1, p2.max(p1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_scenario_is_valid() {
        let p = validate_params(0.1, 0.5, 0.5, 0.3, 1.0).unwrap();
        assert_eq!(p.q2(), 0.5);
        assert_eq!(p.attempt_success(), 0.65);
    }

    #[test]
    fn rejects_reversed_success() {
        assert_eq!(
            validate_params(0.1, 0.5, 0.5, 1.0, 0.3),
            Err(ParamError::SuccessOrder { p1: 1.0, p2: 0.3 })
        );
    }

    #[test]
    fn rejects_unnormalized_durations() {
        assert!(matches!(
            validate_params(0.1, 0.7, 0.5, 0.3, 1.0),
            Err(ParamError::NotNormalized { .. })
        ));
    }

    #[test]
    fn rejects_out_of_range_and_nan() {
        assert!(matches!(
            ModelParams::new(1.2, 0.5, 0.3, 1.0),
            Err(ParamError::OutOfRange {
                field: "lambda",
                ..
            })
        ));
        assert!(matches!(
            ModelParams::new(0.1, f64::NAN, 0.3, 1.0),
            Err(ParamError::OutOfRange { field: "q1", .. })
        ));
        assert!(matches!(
            ModelParams::new(0.1, 0.5, -0.1, 1.0),
            Err(ParamError::OutOfRange { field: "p1", .. })
        ));
    }

    #[test]
    fn channel_invariants() {
        assert!(ChannelSpec::new(0, 10, 1.0).is_err());
        assert!(ChannelSpec::new(10, 0, 1.0).is_err());
        assert!(ChannelSpec::new(10, 10, 0.0).is_err());
        assert!(ChannelSpec::new(10, 10, f64::INFINITY).is_err());
        let c = ChannelSpec::from_db(10, 10, 10.0).unwrap();
        assert!((c.gamma() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn zero_argument_gives_one_half() {
        // n = 4, gamma = 1: n*log2(2) + log2(4)/2 = 5 bits exactly.
        let spec = ChannelSpec::new(4, 5, 1.0).unwrap();
        assert_eq!(finite_blocklength_error(&spec), 0.5);
    }

    #[test]
    fn huge_snr_drives_error_to_zero() {
        let spec = ChannelSpec::new(200, 100, 1e12).unwrap();
        assert!(finite_blocklength_error(&spec) < 1e-300);
        let (p1, p2) = derive_success_probs(&spec);
        assert_eq!((p1, p2), (1.0, 1.0));
    }

    #[test]
    fn custom_dispersion_is_used() {
        let spec = ChannelSpec::new(4, 5, 1.0).unwrap();
        // Any dispersion leaves a zero argument at zero.
        assert_eq!(finite_blocklength_error_with(&spec, |_| 42.0), 0.5);
        let spec = ChannelSpec::new(200, 100, 1.0).unwrap();
        let wide = finite_blocklength_error_with(&spec, |g| 4.0 * awgn_dispersion(g));
        assert!(wide > finite_blocklength_error(&spec));
    }

    #[test]
    fn degenerate_corner_keeps_order() {
        // Tiny packet, low SNR, many channel uses: the raw approximation
        // would rank the two-slot transmission below the one-slot one.
        let spec = ChannelSpec::new(1024, 1, 1e-3).unwrap();
        let raw_p2 = 1.0 - finite_blocklength_error(&spec.stretched(2));
        let (p1, p2) = derive_success_probs(&spec);
        assert!(raw_p2 < p1);
        assert_eq!(p2, p1);
    }

    #[test]
    fn params_roundtrip_through_json() {
        let p = ModelParams::new(0.1, 0.3, 0.1 + 0.2, 1.0 / 3.0 + 0.5).unwrap();
        let text = serde_json::to_string(&p).unwrap();
        let back: ModelParams = serde_json::from_str(&text).unwrap();
        assert_eq!(p, back);
        assert_eq!(p.q2().to_bits(), back.q2().to_bits());
    }

    #[test]
    fn json_with_invalid_values_is_rejected() {
        let text = r#"{"lambda":0.1,"q1":0.5,"q2":0.5,"p1":1.0,"p2":0.3}"#;
        assert!(serde_json::from_str::<ModelParams>(text).is_err());
    }
}
