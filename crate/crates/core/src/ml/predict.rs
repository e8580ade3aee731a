//! Secure prediction: a dot product plus bias, followed by sign extraction for
//! classifiers.

use super::bitext::{bitext_mal, bitext_prep_mal_with, bitext_prep_semi, bitext_semi, CmpOptions};
use super::dot::{dot_mal, dot_prep_semi, dot_semi, pair_up};
use super::model::{decode_output, decode_sign, encode_query, EncodedModel, Model, ModelError, ModelKind, Prediction};
use crate::crypto::KeySetup;
use crate::engine::{
    flush_checks, fresh_masks, prep_products_mal, rec_mal, rec_semi, Party, ProtocolError, RecPoints, Result,
    TripleParams, VerifState,
};
use crate::party::PartyId;
use crate::ring::{RingElement, Width};
use crate::sharing::{dealer_share, MaskedShare, ShareError};
use crate::transport::Phase;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Semi,
    Mal,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Semi => "semi",
            Mode::Mal => "mal",
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct PredictOptions {
    pub mode: Mode,
    pub cmp: CmpOptions,
    pub triples: TripleParams,
}

/// One party's shares of a model.
#[derive(Clone, Debug)]
pub struct SharedModel {
    pub kind: ModelKind,
    pub weights: Vec<MaskedShare>,
    pub bias: MaskedShare,
}

/// Shares of an encoded model for all three parties, dealt under `label`.
pub fn deal_model(model: &EncodedModel, dealer: &mut KeySetup, label: &str) -> Result<[SharedModel; 3], ShareError> {
    let weights = deal_vector(&model.weights, dealer, &format!("{label}.w"))?;
    let bias = dealer_share(model.bias, dealer, &format!("{label}.b"))?;
    Ok(PartyId::ALL.map(|id| SharedModel {
        kind: model.kind,
        weights: weights[id.index()].clone(),
        bias: bias[id.index()],
    }))
}

/// Shares of a vector for all three parties, dealt under `label`.
pub fn deal_vector(v: &[RingElement], dealer: &mut KeySetup, label: &str) -> Result<[Vec<MaskedShare>; 3], ShareError> {
    let mut out: [Vec<MaskedShare>; 3] = Default::default();
    for (i, x) in v.iter().enumerate() {
        let s = dealer_share(*x, dealer, &format!("{label}.{i}"))?;
        for id in PartyId::ALL {
            out[id.index()].push(s[id.index()]);
        }
    }
    Ok(out)
}

/// Encodes and deals a model and a query in one step.
pub fn deal_inputs(
    model: &Model,
    query: &[f64],
    dealer: &mut KeySetup,
) -> std::result::Result<([SharedModel; 3], [Vec<MaskedShare>; 3]), DealError> {
    if query.len() != model.dim() {
        return Err(ModelError::Dimension {
            expected: model.dim(),
            got: query.len(),
        }
        .into());
    }
    let m = deal_model(&model.encode()?, dealer, "model")?;
    let q = deal_vector(&encode_query(query)?, dealer, "query")?;
    Ok((m, q))
}

#[derive(Debug, thiserror::Error)]
pub enum DealError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Share(#[from] ShareError),
}

/// Evaluates the model on the query. Returns a sharing of the margin for
/// regressors and a boolean sharing of its sign bit for classifiers.
///
/// Runs its own offline phase, then the online phase.
pub fn predict(
    p: &mut Party,
    model: &SharedModel,
    query: &[MaskedShare],
    opts: &PredictOptions,
) -> Result<MaskedShare> {
    pair_up(&model.weights, query)?;
    let classify = model.kind.is_classifier();
    match opts.mode {
        Mode::Semi => {
            p.set_phase(Phase::Offline);
            let dot = dot_prep_semi(p, &model.weights, query)?;
            let cmp = if classify {
                Some(bitext_prep_semi(p, 1, model.bias.width(), &opts.cmp)?)
            } else {
                None
            };
            p.set_phase(Phase::Online);
            let margin = dot_semi(p, &dot, &model.weights, query)? + model.bias;
            match cmp {
                Some(cmp) => Ok(bitext_semi(p, &cmp, &[margin])?[0]),
                None => Ok(margin),
            }
        }
        Mode::Mal => {
            p.set_phase(Phase::Offline);
            let width = model.bias.width();
            let pairs = pair_up(&model.weights, query)?;
            let tag = p.tag("dot");
            let outs = fresh_masks(p, &tag, width, pairs.len())?;
            let (dot, cmp) = if classify {
                let out_mask = outs[1..].iter().fold(outs[0], |a, b| a + *b);
                let (cmp, mut extra) =
                    bitext_prep_mal_with(p, &[out_mask + model.bias], &[pairs], outs, &opts.cmp, &opts.triples)?;
                (extra.remove(0), Some(cmp))
            } else {
                (
                    prep_products_mal(p, &[pairs], outs, width, &opts.triples)?.remove(0),
                    None,
                )
            };
            p.set_phase(Phase::Online);
            let mut verif = VerifState::new();
            let margin = dot_mal(p, &dot, &model.weights, query, &mut verif)? + model.bias;
            match cmp {
                Some(cmp) => Ok(bitext_mal(p, &cmp, &[margin], &mut verif)?[0]),
                None => {
                    flush_checks(p, &mut verif)?;
                    Ok(margin)
                }
            }
        }
    }
}

/// Opens a prediction to every party in the output phase, verified in
/// malicious mode.
pub fn reveal(p: &mut Party, share: MaskedShare, mode: Mode) -> Result<RingElement> {
    p.set_phase(Phase::Output);
    let v = match mode {
        Mode::Semi => rec_semi(p, &[share], &PartyId::ALL)?.expect("every party is a target"),
        Mode::Mal => rec_mal(p, &[share], RecPoints::OUTPUT)?,
    };
    Ok(v[0])
}

/// Reads a revealed prediction.
pub fn decode_prediction(kind: ModelKind, revealed: RingElement) -> Prediction {
    if kind.is_classifier() && revealed.width() == Width::BIT {
        decode_sign(revealed)
    } else {
        decode_output(kind, revealed)
    }
}

/// Predicts and reveals in one call.
pub fn predict_and_reveal(
    p: &mut Party,
    model: &SharedModel,
    query: &[MaskedShare],
    opts: &PredictOptions,
) -> Result<Prediction> {
    let s = predict(p, model, query, opts)?;
    let v = reveal(p, s, opts.mode)?;
    Ok(decode_prediction(model.kind, v))
}

impl From<DealError> for ProtocolError {
    fn from(e: DealError) -> Self {
        ProtocolError::Input(e.to_string())
    }
}
