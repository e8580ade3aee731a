//! Linear prediction models, their plaintext evaluation and the text formats
//! for models and queries.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::ring::{fx_decode, fx_encode, RingElement, RingError, FRAC_BITS};

/// Fractional bits of a product of two encoded values; the bias is encoded at
/// this precision so it adds directly to a dot product.
pub const PRODUCT_FRAC_BITS: u32 = 2 * FRAC_BITS;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("a model needs at least one weight")]
    Empty,
    #[error("threshold must lie strictly between 0 and 1, got {0}")]
    Threshold(f64),
    #[error("{0} is not a support-vector model")]
    NotSvm(ModelKind),
    #[error("unknown model kind {0:?}")]
    Kind(String),
    #[error(transparent)]
    Encode(#[from] RingError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    LinReg,
    SvmReg,
    LogReg,
    SvmClass,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::LinReg,
        ModelKind::SvmReg,
        ModelKind::LogReg,
        ModelKind::SvmClass,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::LinReg => "linreg",
            ModelKind::SvmReg => "svmr",
            ModelKind::LogReg => "logr",
            ModelKind::SvmClass => "svmc",
        }
    }

    /// Classifiers output a bit; regressors a decimal value.
    pub fn is_classifier(self) -> bool {
        matches!(self, ModelKind::LogReg | ModelKind::SvmClass)
    }

    pub fn is_svm(self) -> bool {
        matches!(self, ModelKind::SvmReg | ModelKind::SvmClass)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, ModelError> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ModelError::Kind(s.to_string()))
    }
}

/// A prediction in the clear.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Prediction {
    Value(f64),
    /// Class label: 1 when the margin is non-negative.
    Class(bool),
}

impl fmt::Display for Prediction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prediction::Value(v) => write!(f, "{v}"),
            Prediction::Class(c) => write!(f, "{}", u8::from(*c)),
        }
    }
}

/// A linear model `w . z + b`. Support-vector models are stored aggregated and
/// logistic models keep their threshold apart from the bias.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub kind: ModelKind,
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Decision threshold on the sigmoid, logistic models only.
    pub threshold: Option<f64>,
}

/// A model encoded for sharing: weights at [`FRAC_BITS`], the bias (with any
/// threshold folded in) at [`PRODUCT_FRAC_BITS`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedModel {
    pub kind: ModelKind,
    pub weights: Vec<RingElement>,
    pub bias: RingElement,
}

impl Model {
    pub fn linear(kind: ModelKind, weights: Vec<f64>, bias: f64) -> Result<Model, ModelError> {
        if weights.is_empty() {
            return Err(ModelError::Empty);
        }
        let threshold = (kind == ModelKind::LogReg).then_some(0.5);
        Ok(Model {
            kind,
            weights,
            bias,
            threshold,
        })
    }

    pub fn logistic(weights: Vec<f64>, bias: f64, threshold: f64) -> Result<Model, ModelError> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(ModelError::Threshold(threshold));
        }
        let mut m = Model::linear(ModelKind::LogReg, weights, bias)?;
        m.threshold = Some(threshold);
        Ok(m)
    }

    /// Aggregates `sum_j alpha_j y_j x_j` into a single weight vector.
    pub fn from_support_vectors(
        kind: ModelKind,
        alphas: &[f64],
        labels: &[f64],
        vectors: &[Vec<f64>],
        bias: f64,
    ) -> Result<Model, ModelError> {
        if !kind.is_svm() {
            return Err(ModelError::NotSvm(kind));
        }
        let d = vectors.first().map(Vec::len).ok_or(ModelError::Empty)?;
        for (n, len) in [(alphas.len(), vectors.len()), (labels.len(), vectors.len())] {
            if n != len {
                return Err(ModelError::Dimension { expected: len, got: n });
            }
        }
        let mut w = vec![0.0; d];
        for ((a, y), x) in alphas.iter().zip(labels).zip(vectors) {
            if x.len() != d {
                return Err(ModelError::Dimension {
                    expected: d,
                    got: x.len(),
                });
            }
            for (wi, xi) in w.iter_mut().zip(x) {
                *wi += a * y * xi;
            }
        }
        Model::linear(kind, w, bias)
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// The bias the servers use: for logistic models the threshold moves into
    /// it as `b - ln(t / (1 - t))`.
    pub fn effective_bias(&self) -> f64 {
        match self.threshold {
            Some(t) if self.kind == ModelKind::LogReg => self.bias - (t / (1.0 - t)).ln(),
            _ => self.bias,
        }
    }

    fn check_dim(&self, query: &[f64]) -> Result<(), ModelError> {
        if query.len() != self.dim() {
            return Err(ModelError::Dimension {
                expected: self.dim(),
                got: query.len(),
            });
        }
        Ok(())
    }

    /// The margin `w . z + b'` in floating point.
    pub fn margin(&self, query: &[f64]) -> Result<f64, ModelError> {
        self.check_dim(query)?;
        Ok(self.weights.iter().zip(query).map(|(w, z)| w * z).sum::<f64>() + self.effective_bias())
    }

    /// Floating-point reference prediction.
    pub fn evaluate(&self, query: &[f64]) -> Result<Prediction, ModelError> {
        let m = self.margin(query)?;
        Ok(if self.kind.is_classifier() {
            Prediction::Class(m >= 0.0)
        } else {
            Prediction::Value(m)
        })
    }

    pub fn encode(&self) -> Result<EncodedModel, ModelError> {
        let weights = self
            .weights
            .iter()
            .map(|w| fx_encode(*w, FRAC_BITS))
            .collect::<Result<_, _>>()?;
        Ok(EncodedModel {
            kind: self.kind,
            weights,
            bias: fx_encode(self.effective_bias(), PRODUCT_FRAC_BITS)?,
        })
    }

    /// The exact ring value the secure pipeline computes before any sign
    /// extraction.
    pub fn margin_fixed(&self, query: &[f64]) -> Result<RingElement, ModelError> {
        self.check_dim(query)?;
        let enc = self.encode()?;
        let z = encode_query(query)?;
        Ok(enc.weights.iter().zip(&z).fold(enc.bias, |acc, (w, z)| acc + *w * *z))
    }

    /// Fixed-point reference prediction, bit-exact with the secure pipeline.
    pub fn evaluate_fixed(&self, query: &[f64]) -> Result<Prediction, ModelError> {
        Ok(decode_output(self.kind, self.margin_fixed(query)?))
    }
}

pub fn encode_query(query: &[f64]) -> Result<Vec<RingElement>, ModelError> {
    Ok(query
        .iter()
        .map(|z| fx_encode(*z, FRAC_BITS))
        .collect::<Result<_, _>>()?)
}

/// Reads a reconstructed margin: a decimal for regressors, the class label
/// `1 - msb` for classifiers.
pub fn decode_output(kind: ModelKind, margin: RingElement) -> Prediction {
    if kind.is_classifier() {
        Prediction::Class(!margin.msb().expect("margins live in a wide ring"))
    } else {
        Prediction::Value(fx_decode(margin, PRODUCT_FRAC_BITS))
    }
}

/// Reads a reconstructed sign bit (`1` = negative) as a class label.
pub fn decode_sign(sign: RingElement) -> Prediction {
    Prediction::Class(!sign.bit())
}

struct Lines<'a> {
    items: Vec<(usize, &'a str, Vec<&'a str>)>,
}

impl<'a> Lines<'a> {
    /// Splits `key value...` lines; lines that start with a number continue
    /// the previous key.
    fn parse(text: &'a str) -> Lines<'a> {
        let mut items: Vec<(usize, &str, Vec<&str>)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            let mut toks = line.split_whitespace();
            let Some(first) = toks.next() else { continue };
            if first.parse::<f64>().is_ok() {
                if let Some(last) = items.last_mut() {
                    last.2.push(first);
                    last.2.extend(toks);
                    continue;
                }
            }
            items.push((i + 1, first, toks.collect()));
        }
        Lines { items }
    }
}

fn numbers(line: usize, toks: &[&str]) -> Result<Vec<f64>, ModelError> {
    toks.iter()
        .map(|t| {
            t.parse::<f64>().map_err(|_| ModelError::Parse {
                line,
                msg: format!("not a number: {t:?}"),
            })
        })
        .collect()
}

fn single(line: usize, key: &str, toks: &[&str]) -> Result<f64, ModelError> {
    match numbers(line, toks)?.as_slice() {
        [x] => Ok(*x),
        _ => Err(ModelError::Parse {
            line,
            msg: format!("{key} takes one value"),
        }),
    }
}

/// Parses a model file.
///
/// ```text
/// kind svmc
/// dim 2
/// bias 0.25
/// support 0.5 1 0.1 0.2   # alpha label x_1 .. x_d
/// ```
///
/// Linear kinds list `weights` instead of `support` lines; `logr` may set a
/// `threshold` (default 0.5).
pub fn parse_model(text: &str) -> Result<Model, ModelError> {
    let mut kind = None;
    let mut dim = None;
    let mut bias = 0.0;
    let mut threshold = None;
    let mut weights = None;
    let (mut alphas, mut labels, mut vectors) = (Vec::new(), Vec::new(), Vec::new());
    for (line, key, toks) in Lines::parse(text).items {
        let bad = |msg: String| ModelError::Parse { line, msg };
        match key {
            "kind" => {
                kind = Some(
                    toks.first()
                        .ok_or_else(|| bad("kind needs a value".into()))?
                        .parse::<ModelKind>()?,
                )
            }
            "dim" => dim = Some(single(line, key, &toks)? as usize),
            "bias" => bias = single(line, key, &toks)?,
            "threshold" => threshold = Some(single(line, key, &toks)?),
            "weights" => weights = Some(numbers(line, &toks)?),
            "support" => {
                let v = numbers(line, &toks)?;
                if v.len() < 3 {
                    return Err(bad("support needs alpha, label and a vector".into()));
                }
                alphas.push(v[0]);
                labels.push(v[1]);
                vectors.push(v[2..].to_vec());
            }
            other => return Err(bad(format!("unknown key {other:?}"))),
        }
    }
    let kind = kind.ok_or(ModelError::Parse {
        line: 0,
        msg: "missing kind".into(),
    })?;
    let model = match (kind, weights) {
        (ModelKind::LogReg, Some(w)) => Model::logistic(w, bias, threshold.unwrap_or(0.5))?,
        (k, Some(w)) => Model::linear(k, w, bias)?,
        (k, None) if k.is_svm() => Model::from_support_vectors(k, &alphas, &labels, &vectors, bias)?,
        (k, None) => return Err(ModelError::NotSvm(k)),
    };
    if let Some(d) = dim {
        if d != model.dim() {
            return Err(ModelError::Dimension {
                expected: d,
                got: model.dim(),
            });
        }
    }
    Ok(model)
}

/// Writes a model in aggregated form, readable by [`parse_model`].
pub fn format_model(m: &Model) -> String {
    let mut s = format!("kind {}\ndim {}\nbias {}\n", m.kind, m.dim(), m.bias);
    if let Some(t) = m.threshold {
        s.push_str(&format!("threshold {t}\n"));
    }
    s.push_str("weights\n");
    for w in &m.weights {
        s.push_str(&format!("{w}\n"));
    }
    s
}

/// Parses a query file: an optional `dim` header and a `values` list.
pub fn parse_query(text: &str) -> Result<Vec<f64>, ModelError> {
    let mut dim = None;
    let mut values = None;
    for (line, key, toks) in Lines::parse(text).items {
        match key {
            "dim" => dim = Some(single(line, key, &toks)? as usize),
            "values" => values = Some(numbers(line, &toks)?),
            other => {
                return Err(ModelError::Parse {
                    line,
                    msg: format!("unknown key {other:?}"),
                })
            }
        }
    }
    let values = values.ok_or(ModelError::Parse {
        line: 0,
        msg: "missing values".into(),
    })?;
    match dim {
        Some(d) if d != values.len() => Err(ModelError::Dimension {
            expected: d,
            got: values.len(),
        }),
        _ => Ok(values),
    }
}

pub fn format_query(q: &[f64]) -> String {
    let mut s = format!("dim {}\nvalues\n", q.len());
    for z in q {
        s.push_str(&format!("{z}\n"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svm_aggregation_matches_the_kernel_sum() {
        let xs = vec![vec![1.0, 2.0], vec![-1.0, 0.5]];
        let m = Model::from_support_vectors(ModelKind::SvmReg, &[0.5, 2.0], &[1.0, -1.0], &xs, 0.1).unwrap();
        assert_eq!(m.weights, vec![0.5 + 2.0, 1.0 - 1.0]);
        let z = [0.3, -0.7];
        let direct: f64 = 0.5 * (0.3 - 1.4) - 2.0 * (-0.3 - 0.35) + 0.1;
        assert!((m.margin(&z).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn logistic_threshold_folds_into_the_bias() {
        let m = Model::logistic(vec![1.0], 0.0, 0.5).unwrap();
        assert_eq!(m.effective_bias(), 0.0);
        let m = Model::logistic(vec![1.0], 0.0, 0.8).unwrap();
        assert!((m.effective_bias() + 4f64.ln()).abs() < 1e-12);
        // sigmoid(z) >= 0.8 exactly when z >= ln 4
        assert_eq!(m.evaluate(&[1.3]).unwrap(), Prediction::Class(false));
        assert_eq!(m.evaluate(&[1.4]).unwrap(), Prediction::Class(true));
        assert!(Model::logistic(vec![1.0], 0.0, 1.0).is_err());
    }

    #[test]
    fn fixed_point_pipeline_tracks_the_float_one() {
        let m = Model::linear(ModelKind::LinReg, vec![0.25, -1.5, 0.75], -0.125).unwrap();
        let z = [1.0, 0.5, -2.0];
        let Prediction::Value(v) = m.evaluate_fixed(&z).unwrap() else {
            panic!()
        };
        assert_eq!(v, 0.25 - 0.75 - 1.5 - 0.125);
    }

    #[test]
    fn model_and_query_files_round_trip() {
        let m = Model::logistic(vec![0.5, -0.25], 0.125, 0.7).unwrap();
        assert_eq!(parse_model(&format_model(&m)).unwrap(), m);
        let q = vec![1.5, -2.0];
        assert_eq!(parse_query(&format_query(&q)).unwrap(), q);
        let svm = "kind svmc\ndim 2\nbias 0.5\nsupport 1 -1 0.5 0.5\nsupport 2 1\n  1 0\n";
        let m = parse_model(svm).unwrap();
        assert_eq!(m.weights, vec![1.5, -0.5]);
    }

    #[test]
    fn malformed_files_name_the_line() {
        assert_eq!(
            parse_model("kind linreg\nweights 1 x\n"),
            Err(ModelError::Parse {
                line: 2,
                msg: "not a number: \"x\"".into()
            })
        );
        assert!(matches!(parse_model("kind tree\n"), Err(ModelError::Kind(_))));
        assert!(matches!(
            parse_query("dim 3\nvalues 1 2\n"),
            Err(ModelError::Dimension { expected: 3, got: 2 })
        ));
    }
}
