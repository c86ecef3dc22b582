//! Scenario files.
//!
//! A scenario is a flat JSON document:
//!
//! ```json
//! { "lambda": 0.1, "q1": 0.5, "p1": 0.3, "p2": 1.0 }
//! ```
//!
//! or, deriving the success probabilities from a channel,
//!
//! ```json
//! { "lambda": 0.1, "q1": 0.5, "channel": { "n": 200, "b": 100, "gamma_db": 0.0 } }
//! ```
//!
//! `p1`/`p2` and `channel` are mutually exclusive. Command-line overrides
//! take precedence over file values.

use std::fs;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::model::{derive_success_probs, ChannelSpec, ModelParams, ParamError};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("scenario is missing {0}")]
    Missing(&'static str),
    #[error("{0}")]
    Conflict(&'static str),
    #[error(transparent)]
    Invalid(#[from] ParamError),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    lambda: Option<f64>,
    q1: Option<f64>,
    p1: Option<f64>,
    p2: Option<f64>,
    channel: Option<ChannelFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelFile {
    n: u32,
    b: u32,
    gamma_db: Option<f64>,
    gamma: Option<f64>,
}

/// Where the success probabilities come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SuccessSource {
    Explicit { p1: Option<f64>, p2: Option<f64> },
    Channel(ChannelSpec),
}

/// A partially specified scenario; resolved into [`ModelParams`] once all
/// overrides are applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub lambda: Option<f64>,
    pub q1: Option<f64>,
    pub success: SuccessSource,
}

/// Command-line values that replace scenario-file values.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub lambda: Option<f64>,
    pub q1: Option<f64>,
    pub p1: Option<f64>,
    pub p2: Option<f64>,
    pub gamma_db: Option<f64>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            lambda: None,
            q1: None,
            success: SuccessSource::Explicit { p1: None, p2: None },
        }
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = serde_json::from_str(text)?;
        let success = match file.channel {
            Some(ch) => {
                if file.p1.is_some() || file.p2.is_some() {
                    return Err(ScenarioError::Conflict(
                        "p1/p2 must be absent when a channel is given",
                    ));
                }
                let spec = match (ch.gamma, ch.gamma_db) {
                    (Some(_), Some(_)) => {
                        return Err(ScenarioError::Conflict(
                            "channel takes either gamma or gamma_db, not both",
                        ))
                    }
                    (Some(g), None) => ChannelSpec::new(ch.n, ch.b, g)?,
                    (None, Some(db)) => ChannelSpec::from_db(ch.n, ch.b, db)?,
                    (None, None) => return Err(ScenarioError::Missing("channel.gamma")),
                };
                SuccessSource::Channel(spec)
            }
            None => SuccessSource::Explicit {
                p1: file.p1,
                p2: file.p2,
            },
        };
        Ok(Self {
            lambda: file.lambda,
            q1: file.q1,
            success,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn apply(mut self, ov: &Overrides) -> Result<Self, ScenarioError> {
        self.lambda = ov.lambda.or(self.lambda);
        self.q1 = ov.q1.or(self.q1);
        match &mut self.success {
            SuccessSource::Explicit { p1, p2 } => {
                if ov.gamma_db.is_some() {
                    return Err(ScenarioError::Conflict(
                        "--gamma-db needs a scenario with a channel",
                    ));
                }
                *p1 = ov.p1.or(*p1);
                *p2 = ov.p2.or(*p2);
            }
            SuccessSource::Channel(spec) => {
                if ov.p1.is_some() || ov.p2.is_some() {
                    return Err(ScenarioError::Conflict(
                        "p1/p2 cannot be combined with a channel scenario",
                    ));
                }
                if let Some(db) = ov.gamma_db {
                    *spec = ChannelSpec::from_db(spec.n(), spec.b(), db)?;
                }
            }
        }
        Ok(self)
    }

    pub fn resolve(&self) -> Result<ModelParams, ScenarioError> {
        let lambda = self.lambda.ok_or(ScenarioError::Missing("lambda"))?;
        let q1 = self.q1.ok_or(ScenarioError::Missing("q1"))?;
        let (p1, p2) = match self.success {
            SuccessSource::Explicit { p1, p2 } => (
                p1.ok_or(ScenarioError::Missing("p1"))?,
                p2.ok_or(ScenarioError::Missing("p2"))?,
            ),
            SuccessSource::Channel(spec) => derive_success_probs(&spec),
        };
        Ok(ModelParams::new(lambda, q1, p1, p2)?)
    }

    /// Resolves with `lambda` and `q1` allowed to be missing, as needed by
    /// commands that sweep or optimize over them.
    pub fn success_probs(&self) -> Result<(f64, f64), ScenarioError> {
        match self.success {
            SuccessSource::Explicit { p1, p2 } => Ok((
                p1.ok_or(ScenarioError::Missing("p1"))?,
                p2.ok_or(ScenarioError::Missing("p2"))?,
            )),
            SuccessSource::Channel(spec) => Ok(derive_success_probs(&spec)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::finite_blocklength_error;

    #[test]
    fn explicit_scenario() {
        let s = Scenario::from_json(r#"{"lambda":0.1,"q1":0.5,"p1":0.3,"p2":1.0}"#).unwrap();
        let p = s.resolve().unwrap();
        assert_eq!((p.lambda(), p.q1(), p.p1(), p.p2()), (0.1, 0.5, 0.3, 1.0));
    }

    #[test]
    fn channel_scenario_derives_success() {
        let s = Scenario::from_json(
            r#"{"lambda":0.1,"q1":0.5,"channel":{"n":200,"b":100,"gamma":1.0}}"#,
        )
        .unwrap();
        let p = s.resolve().unwrap();
        let spec = ChannelSpec::new(200, 100, 1.0).unwrap();
        assert_eq!(p.p1(), 1.0 - finite_blocklength_error(&spec));
    }

    #[test]
    fn channel_and_explicit_conflict() {
        let err = Scenario::from_json(
            r#"{"lambda":0.1,"q1":0.5,"p1":0.3,"channel":{"n":200,"b":100,"gamma_db":0.0}}"#,
        )
        .unwrap_err();
        assert!(matches!(err, ScenarioError::Conflict(_)));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Scenario::from_json(r#"{"lambda":0.1,"q3":0.5}"#).is_err());
    }

    #[test]
    fn overrides_take_precedence() {
        let s = Scenario::from_json(r#"{"lambda":0.1,"q1":0.5,"p1":0.3,"p2":1.0}"#)
            .unwrap()
            .apply(&Overrides {
                q1: Some(0.2),
                p1: Some(0.6),
                ..Default::default()
            })
            .unwrap();
        let p = s.resolve().unwrap();
        assert_eq!((p.q1(), p.p1()), (0.2, 0.6));
    }

    #[test]
    fn gamma_override_replaces_channel_snr() {
        let s = Scenario::from_json(
            r#"{"lambda":0.1,"q1":0.5,"channel":{"n":200,"b":100,"gamma_db":0.0}}"#,
        )
        .unwrap()
        .apply(&Overrides {
            gamma_db: Some(30.0),
            ..Default::default()
        })
        .unwrap();
        let p = s.resolve().unwrap();
        assert_eq!(p.p1(), 1.0);
    }

    #[test]
    fn missing_fields_are_named() {
        let s = Scenario::from_json(r#"{"q1":0.5,"p1":0.3,"p2":1.0}"#).unwrap();
        assert!(matches!(s.resolve(), Err(ScenarioError::Missing("lambda"))));
    }
}
