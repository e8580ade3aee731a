use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{read_text, CircuitSource, ConfigError, RunConfig, Workload};
use crate::circuit::{aes128_reference, bits_to_bytes, bytes_to_bits, Circuit};
use crate::crypto::KeyMaterial;
use crate::engine::{run_circuit_mal, run_circuit_semi, MalRunOptions, Party, Result};
use crate::ml::{deal_inputs, predict_and_reveal, Mode, Model, ModelKind, PredictOptions, Prediction, SharedModel};
use crate::party::PartyId;
use crate::ring::{RingElement, Width};
use crate::sharing::{read_share_file, write_share_file, MaskedShare, ShareVec};

/// Offsets the run seed for the dealer, so dealt masks differ from the parties'
/// PRF streams.
const DEALER_SALT: u64 = 0x00de_a1e5;

/// A random model of `kind`; SVM kinds are built from support vectors.
pub fn random_model(kind: ModelKind, dim: usize, seed: u64) -> Model {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6d6f_64656c);
    let bias = rng.gen_range(-1.0..1.0);
    if kind.is_svm() {
        let n = 4;
        let alphas: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..0.25)).collect();
        let labels: Vec<f64> = (0..n).map(|_| if rng.gen() { 1.0 } else { -1.0 }).collect();
        let vectors: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        return Model::from_support_vectors(kind, &alphas, &labels, &vectors, bias).expect("valid support vectors");
    }
    let weights: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.5..0.5)).collect();
    match kind {
        ModelKind::LogReg => Model::logistic(weights, bias, 0.4).expect("valid threshold"),
        k => Model::linear(k, weights, bias).expect("non-empty model"),
    }
}

pub fn random_query(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0071_7565_7279);
    (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn random_inputs(c: &Circuit, seed: u64) -> Vec<RingElement> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0069_6e70);
    (0..c.inputs().len())
        .map(|_| RingElement::new(rng.gen(), c.width()))
        .collect()
}

/// Shares of a model and query, as a dealer hands them out.
#[derive(Clone, Debug)]
pub struct DealtInputs {
    pub kind: ModelKind,
    pub model: [SharedModel; 3],
    pub query: [Vec<MaskedShare>; 3],
}

pub fn deal(model: &Model, query: &[f64], seed: u64) -> std::result::Result<DealtInputs, ConfigError> {
    let mut dealer = KeyMaterial::from_u64_seed(seed ^ DEALER_SALT).dealer_view();
    let (m, q) = deal_inputs(model, query, &mut dealer).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(DealtInputs {
        kind: model.kind,
        model: m,
        query: q,
    })
}

fn share_path(dir: &Path, id: PartyId, what: &str) -> std::path::PathBuf {
    dir.join(format!("p{}.{what}.m3ps", id.index()))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ConfigError + '_ {
    move |source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes a manifest and two share files per party into `dir`.
pub fn write_dealt(dir: &Path, dealt: &DealtInputs) -> std::result::Result<(), ConfigError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let manifest = dir.join("manifest");
    let dim = dealt.query[0].len();
    fs::write(&manifest, format!("kind {}\ndim {dim}\n", dealt.kind)).map_err(io_err(&manifest))?;
    for id in PartyId::ALL {
        let i = id.index();
        let mut model = dealt.model[i].weights.clone();
        model.push(dealt.model[i].bias);
        for (what, v) in [("model", model), ("query", dealt.query[i].clone())] {
            let path = share_path(dir, id, what);
            let shares = ShareVec::new(v).map_err(|e| ConfigError::Invalid(e.to_string()))?;
            let f = File::create(&path).map_err(io_err(&path))?;
            write_share_file(BufWriter::new(f), &shares).map_err(io_err(&path))?;
        }
    }
    Ok(())
}

fn read_manifest(dir: &Path) -> std::result::Result<(ModelKind, usize), ConfigError> {
    let path = dir.join("manifest");
    let text = read_text(&path)?;
    let bad = |msg: &str| ConfigError::Invalid(format!("{}: {msg}", path.display()));
    let (mut kind, mut dim) = (None, None);
    for line in text.lines() {
        match line.split_once(' ') {
            Some(("kind", k)) => kind = Some(k.trim().parse::<ModelKind>().map_err(|e| bad(&e.to_string()))?),
            Some(("dim", d)) => dim = Some(d.trim().parse::<usize>().map_err(|_| bad("bad dim"))?),
            _ => {}
        }
    }
    Ok((
        kind.ok_or_else(|| bad("missing kind"))?,
        dim.ok_or_else(|| bad("missing dim"))?,
    ))
}

/// Reads one party's dealt shares.
pub fn read_dealt_party(dir: &Path, id: PartyId) -> std::result::Result<(SharedModel, Vec<MaskedShare>), ConfigError> {
    let (kind, dim) = read_manifest(dir)?;
    let load = |what: &str| -> std::result::Result<Vec<MaskedShare>, ConfigError> {
        let path = share_path(dir, id, what);
        let f = File::open(&path).map_err(io_err(&path))?;
        let v =
            read_share_file(BufReader::new(f)).map_err(|e| ConfigError::Invalid(format!("{}: {e}", path.display())))?;
        if v.role() != id || v.width() != Width::W64 {
            return Err(ConfigError::Invalid(format!(
                "{}: not 64-bit shares of {id}",
                path.display()
            )));
        }
        Ok(v.into_vec())
    };
    let mut weights = load("model")?;
    let query = load("query")?;
    if weights.len() != dim + 1 || query.len() != dim {
        return Err(ConfigError::Invalid(format!(
            "{}: share counts do not match dim {dim}",
            dir.display()
        )));
    }
    let bias = weights.pop().expect("dim + 1 entries");
    Ok((SharedModel { kind, weights, bias }, query))
}

pub fn read_dealt(dir: &Path) -> std::result::Result<DealtInputs, ConfigError> {
    let [a, b, c] = PartyId::ALL.map(|id| read_dealt_party(dir, id));
    let (a, b, c) = (a?, b?, c?);
    Ok(DealtInputs {
        kind: a.0.kind,
        model: [a.0, b.0, c.0],
        query: [a.1, b.1, c.1],
    })
}

/// What a finished run produced.
#[derive(Clone, Debug, PartialEq)]
pub enum JobOutput {
    Ring(Vec<RingElement>),
    /// Circuit outputs read as bytes, for boolean circuits.
    Bytes(Vec<u8>),
    Prediction(Prediction),
}

impl fmt::Display for JobOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JobOutput::Ring(v) => {
                let s: Vec<String> = v.iter().map(|x| x.value().to_string()).collect();
                f.write_str(&s.join(" "))
            }
            JobOutput::Bytes(b) => f.write_str(&hex::encode(b)),
            JobOutput::Prediction(p) => write!(f, "{p}"),
        }
    }
}

/// The reference a run's output is judged against.
#[derive(Clone, Debug, PartialEq)]
pub enum Expected {
    Exact(JobOutput),
    /// A regression value within `tolerance`.
    Near {
        value: f64,
        tolerance: f64,
    },
    /// A class label; only binding when the margin is clear of zero.
    Class {
        label: bool,
        margin: f64,
    },
}

/// Margins closer to zero than this may round either way in fixed point.
pub const CLEAR_MARGIN: f64 = 1.0 / 1024.0;

impl Expected {
    pub fn accepts(&self, out: &JobOutput) -> bool {
        match (self, out) {
            (Expected::Exact(e), o) => e == o,
            (Expected::Near { value, tolerance }, JobOutput::Prediction(Prediction::Value(v))) => {
                (v - value).abs() <= *tolerance
            }
            (Expected::Class { label, margin }, JobOutput::Prediction(Prediction::Class(c))) => {
                margin.abs() <= CLEAR_MARGIN || c == label
            }
            _ => false,
        }
    }
}

impl fmt::Display for Expected {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expected::Exact(o) => write!(f, "{o}"),
            Expected::Near { value, tolerance } => write!(f, "{value} (+/- {tolerance:e})"),
            Expected::Class { label, margin } => write!(f, "{} (margin {margin:.6})", u8::from(*label)),
        }
    }
}

#[derive(Clone, Debug)]
enum Task {
    Circuit {
        circuit: Circuit,
        inputs: [Vec<RingElement>; 3],
        bytes: bool,
        opts: MalRunOptions,
    },
    Predict(DealtInputs),
}

/// A workload made ready to run: circuit and inputs, or dealt shares.
#[derive(Clone, Debug)]
pub struct Job {
    task: Task,
    mode: Mode,
    predict: PredictOptions,
    pub expected: Option<Expected>,
    pub description: String,
}

impl Job {
    pub fn from_config(cfg: &RunConfig) -> std::result::Result<Job, ConfigError> {
        cfg.validate()?;
        let predict = PredictOptions {
            mode: cfg.mode,
            triples: cfg.triples,
            ..Default::default()
        };
        let (task, expected, description) = match &cfg.workload {
            Workload::Circuit(src) => {
                let circuit = cfg.load_circuit()?;
                let (all, expected, bytes) = match src {
                    CircuitSource::Aes128 => {
                        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                        let key: [u8; 16] = rng.gen();
                        let block: [u8; 16] = rng.gen();
                        let all = bytes_to_bits(&[key, block].concat());
                        (all, JobOutput::Bytes(aes128_reference(&key, &block).to_vec()), true)
                    }
                    _ => {
                        let all = random_inputs(&circuit, cfg.seed);
                        let out = circuit
                            .eval_plain(&all)
                            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
                        (all, JobOutput::Ring(out), false)
                    }
                };
                let inputs = circuit
                    .split_inputs(&all)
                    .map_err(|e| ConfigError::Invalid(e.to_string()))?;
                let description = format!("{src}: {circuit}");
                let opts = MalRunOptions {
                    triples: cfg.triples,
                    fair: cfg.fair,
                };
                (
                    Task::Circuit {
                        circuit,
                        inputs,
                        bytes,
                        opts,
                    },
                    Some(Expected::Exact(expected)),
                    description,
                )
            }
            Workload::Predict { .. } => {
                let (model, query) = cfg.load_prediction()?;
                let dealt = deal(&model, &query, cfg.seed)?;
                let d = model.dim();
                let margin = model.margin(&query).map_err(|e| ConfigError::Invalid(e.to_string()))?;
                let expected = if model.kind.is_classifier() {
                    Expected::Class {
                        label: margin >= 0.0,
                        margin,
                    }
                } else {
                    Expected::Near {
                        value: margin,
                        tolerance: (d as f64 + 1.0) * 2f64.powi(-13),
                    }
                };
                (Task::Predict(dealt), Some(expected), format!("{} d={d}", model.kind))
            }
            Workload::Dealt(dir) => {
                let dealt = read_dealt(dir)?;
                let description = format!("{} d={} from {}", dealt.kind, dealt.query[0].len(), dir.display());
                (Task::Predict(dealt), None, description)
            }
        };
        Ok(Job {
            task,
            mode: cfg.mode,
            predict,
            expected,
            description,
        })
    }

    /// Runs the job as one party.
    pub fn execute(&self, p: &mut Party) -> Result<JobOutput> {
        let i = p.id().index();
        match &self.task {
            Task::Circuit {
                circuit,
                inputs,
                bytes,
                opts,
            } => {
                let out = match self.mode {
                    Mode::Semi => run_circuit_semi(p, circuit, &inputs[i])?,
                    Mode::Mal => run_circuit_mal(p, circuit, &inputs[i], opts)?,
                };
                Ok(if *bytes {
                    JobOutput::Bytes(bits_to_bytes(&out))
                } else {
                    JobOutput::Ring(out)
                })
            }
            Task::Predict(d) => Ok(JobOutput::Prediction(predict_and_reveal(
                p,
                &d.model[i],
                &d.query[i],
                &self.predict,
            )?)),
        }
    }

    /// Multiplication gates, or vector coordinates for prediction.
    pub fn size(&self) -> usize {
        match &self.task {
            Task::Circuit { circuit, .. } => circuit.mul_count(),
            Task::Predict(d) => d.query[0].len(),
        }
    }

    pub fn is_circuit(&self) -> bool {
        matches!(self.task, Task::Circuit { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dealt_files_round_trip() {
        let dir = std::env::temp_dir().join(format!("mask3pc-dealt-{}", std::process::id()));
        let model = random_model(ModelKind::LogReg, 5, 3);
        let query = random_query(5, 3);
        let dealt = deal(&model, &query, 3).unwrap();
        write_dealt(&dir, &dealt).unwrap();
        let back = read_dealt(&dir).unwrap();
        assert_eq!(back.kind, ModelKind::LogReg);
        for i in 0..3 {
            assert_eq!(back.model[i].weights, dealt.model[i].weights);
            assert_eq!(back.model[i].bias, dealt.model[i].bias);
            assert_eq!(back.query[i], dealt.query[i]);
        }
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn expectations() {
        let near = Expected::Near {
            value: 1.0,
            tolerance: 0.1,
        };
        assert!(near.accepts(&JobOutput::Prediction(Prediction::Value(1.05))));
        assert!(!near.accepts(&JobOutput::Prediction(Prediction::Value(1.2))));
        let class = Expected::Class {
            label: true,
            margin: 1e-5,
        };
        assert!(class.accepts(&JobOutput::Prediction(Prediction::Class(false))));
        let class = Expected::Class {
            label: true,
            margin: 0.5,
        };
        assert!(!class.accepts(&JobOutput::Prediction(Prediction::Class(false))));
    }
}
