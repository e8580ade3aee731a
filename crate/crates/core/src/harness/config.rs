use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use thiserror::Error;

use crate::circuit::{aes128_circuit, parse_circuit, random_circuit, Circuit, CircuitError, RandomCircuitParams};
use crate::engine::{Net, TripleParams};
use crate::fault::{FaultParseError, FaultScript};
use crate::ml::{parse_model, parse_query, Mode, Model, ModelError, ModelKind};
use crate::ring::Width;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Circuit { path: PathBuf, source: CircuitError },
    #[error("{path}: {source}")]
    Fault { path: PathBuf, source: FaultParseError },
    #[error("{path}: {source}")]
    Model { path: PathBuf, source: ModelError },
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

pub(crate) fn read_text(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Where a circuit comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CircuitSource {
    /// The built-in AES-128 circuit.
    Aes128,
    /// A pseudo-random arithmetic circuit.
    Random { seed: u64, gates: usize },
    /// A Bristol Fashion or native circuit file.
    File(PathBuf),
}

impl fmt::Display for CircuitSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CircuitSource::Aes128 => f.write_str("aes128"),
            CircuitSource::Random { seed, gates } => write!(f, "random(seed={seed}, gates={gates})"),
            CircuitSource::File(p) => write!(f, "{}", p.display()),
        }
    }
}

/// What a run evaluates.
#[derive(Clone, Debug, PartialEq)]
pub enum Workload {
    Circuit(CircuitSource),
    /// Secure prediction. Without files a random model and query of dimension
    /// `dim` are drawn from the run seed.
    Predict {
        kind: ModelKind,
        dim: usize,
        model: Option<PathBuf>,
        query: Option<PathBuf>,
    },
    /// Secure prediction on shares written by a dealer into a directory.
    Dealt(PathBuf),
}

impl fmt::Display for Workload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Workload::Circuit(c) => write!(f, "circuit {c}"),
            Workload::Predict {
                kind, dim, model: None, ..
            } => write!(f, "predict {kind} d={dim}"),
            Workload::Predict {
                kind, model: Some(m), ..
            } => write!(f, "predict {kind} model={}", m.display()),
            Workload::Dealt(dir) => write!(f, "predict from {}", dir.display()),
        }
    }
}

/// Everything `run` needs.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub mode: Mode,
    /// Fair output reconstruction; malicious circuits only.
    pub fair: bool,
    pub net: Net,
    /// Ring width for random circuits; must agree with a loaded circuit and is
    /// 64 for prediction.
    pub width: Option<Width>,
    pub workload: Workload,
    pub repetitions: usize,
    /// Seeds the key setup, the inputs and random workloads.
    pub seed: u64,
    /// Deviation script; malicious runs only.
    pub fault_script: Option<PathBuf>,
    pub triples: TripleParams,
    pub timeout: Duration,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Semi,
            fair: false,
            net: Net::Memory,
            width: None,
            workload: Workload::Circuit(CircuitSource::Random { seed: 1, gates: 120 }),
            repetitions: 1,
            seed: 1,
            fault_script: None,
            triples: TripleParams::default(),
            timeout: Duration::from_secs(30),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.repetitions == 0 {
            return Err(invalid("repetitions must be at least 1"));
        }
        if self.mode != Mode::Mal {
            if self.fault_script.is_some() {
                return Err(invalid("fault scripts need malicious mode"));
            }
            if self.fair {
                return Err(invalid("fair reconstruction needs malicious mode"));
            }
        }
        if self.triples.bucket == Some(0) {
            return Err(invalid("bucket size must be at least 1"));
        }
        match &self.workload {
            Workload::Predict { dim, model, .. } => {
                if self.fair {
                    return Err(invalid("fair reconstruction applies to circuits"));
                }
                if self.width.is_some_and(|w| w != Width::W64) {
                    return Err(invalid("prediction runs over a 64-bit ring"));
                }
                if model.is_none() && *dim == 0 {
                    return Err(invalid("dimension must be at least 1"));
                }
            }
            Workload::Dealt(_) => {
                if self.fair {
                    return Err(invalid("fair reconstruction applies to circuits"));
                }
                if self.width.is_some_and(|w| w != Width::W64) {
                    return Err(invalid("prediction runs over a 64-bit ring"));
                }
            }
            Workload::Circuit(CircuitSource::Random { gates, .. }) if *gates == 0 => {
                return Err(invalid("a random circuit needs at least one gate"));
            }
            Workload::Circuit(_) => {}
        }
        Ok(())
    }

    pub fn load_faults(&self) -> Result<FaultScript, ConfigError> {
        let Some(path) = &self.fault_script else {
            return Ok(FaultScript::default());
        };
        read_text(path)?.parse().map_err(|source| ConfigError::Fault {
            path: path.clone(),
            source,
        })
    }

    /// Builds or loads the circuit of a circuit workload.
    pub fn load_circuit(&self) -> Result<Circuit, ConfigError> {
        let Workload::Circuit(src) = &self.workload else {
            return Err(invalid("not a circuit workload"));
        };
        let c = match src {
            CircuitSource::Aes128 => aes128_circuit(),
            CircuitSource::Random { seed, gates } => {
                let params = RandomCircuitParams {
                    width: self.width.unwrap_or(Width::W32),
                    gates: *gates,
                    ..Default::default()
                };
                random_circuit(*seed, &params)
            }
            CircuitSource::File(path) => parse_circuit(&read_text(path)?).map_err(|source| ConfigError::Circuit {
                path: path.clone(),
                source,
            })?,
        };
        match self.width {
            Some(w) if w != c.width() => Err(invalid(format!("circuit has width {}, configured {w}", c.width()))),
            _ => Ok(c),
        }
    }

    /// Loads the model and query of a prediction workload, drawing random ones
    /// where no file is given.
    pub fn load_prediction(&self) -> Result<(Model, Vec<f64>), ConfigError> {
        let Workload::Predict {
            kind,
            dim,
            model,
            query,
        } = &self.workload
        else {
            return Err(invalid("not a prediction workload"));
        };
        let model = match model {
            Some(path) => {
                let m = parse_model(&read_text(path)?).map_err(|source| ConfigError::Model {
                    path: path.clone(),
                    source,
                })?;
                if m.kind != *kind {
                    return Err(invalid(format!(
                        "{} holds a {} model, not {kind}",
                        path.display(),
                        m.kind
                    )));
                }
                m
            }
            None => super::workload::random_model(*kind, *dim, self.seed),
        };
        let query = match query {
            Some(path) => parse_query(&read_text(path)?).map_err(|source| ConfigError::Model {
                path: path.clone(),
                source,
            })?,
            None => super::workload::random_query(model.dim(), self.seed),
        };
        if query.len() != model.dim() {
            return Err(invalid(format!(
                "query has {} values, model dimension is {}",
                query.len(),
                model.dim()
            )));
        }
        Ok((model, query))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_rules() {
        assert!(RunConfig::default().validate().is_ok());
        let zero = RunConfig {
            repetitions: 0,
            ..Default::default()
        };
        assert!(zero.validate().is_err());
        let semi_faults = RunConfig {
            fault_script: Some("x".into()),
            ..Default::default()
        };
        assert!(semi_faults.validate().is_err());
        let mal_faults = RunConfig {
            mode: Mode::Mal,
            ..semi_faults
        };
        assert!(mal_faults.validate().is_ok());
        let narrow = RunConfig {
            width: Some(Width::W32),
            workload: Workload::Predict {
                kind: ModelKind::LinReg,
                dim: 4,
                model: None,
                query: None,
            },
            ..Default::default()
        };
        assert!(narrow.validate().is_err());
    }

    #[test]
    fn width_must_match_loaded_circuit() {
        let cfg = RunConfig {
            width: Some(Width::W64),
            workload: Workload::Circuit(CircuitSource::Aes128),
            ..Default::default()
        };
        assert!(cfg.load_circuit().is_err());
        let cfg = RunConfig {
            width: Some(Width::W64),
            ..Default::default()
        };
        assert_eq!(cfg.load_circuit().unwrap().width(), Width::W64);
    }

    #[test]
    fn random_prediction_has_matching_query() {
        let cfg = RunConfig {
            workload: Workload::Predict {
                kind: ModelKind::SvmClass,
                dim: 12,
                model: None,
                query: None,
            },
            ..Default::default()
        };
        let (m, q) = cfg.load_prediction().unwrap();
        assert_eq!((m.dim(), q.len()), (12, 12));
    }
}
