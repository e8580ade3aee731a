//! Secure prediction for linear models: dot products, sign extraction and the
//! regression and classification pipelines built from them.
//!
//! Values are fixed-point numbers in `Z_{2^64}` with 13 fractional bits; a dot
//! product carries 26, and the bias is encoded at 26 so no truncation is needed.

mod bitext;
mod dot;
mod model;
mod predict;

pub use bitext::{
    bitext_mal, bitext_prep_mal, bitext_prep_mal_with, bitext_prep_semi, bitext_semi, CmpOptions, CmpPrepMal,
    CmpPrepSemi, DEFAULT_MAGNITUDE_BITS,
};
pub use dot::{dot_mal, dot_prep_mal, dot_prep_semi, dot_semi};
pub use model::{
    decode_output, decode_sign, encode_query, format_model, format_query, parse_model, parse_query, EncodedModel,
    Model, ModelError, ModelKind, Prediction, PRODUCT_FRAC_BITS,
};
pub use predict::{
    deal_inputs, deal_model, deal_vector, decode_prediction, predict, predict_and_reveal, reveal, DealError, Mode,
    PredictOptions, SharedModel,
};
