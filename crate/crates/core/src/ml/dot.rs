//! Dot products of shared vectors.
//!
//! The semi-honest version shares one mask product for the whole vector, so it
//! costs the same as a single multiplication. The verified version keeps one
//! checked component per coordinate offline but still exchanges a single
//! masked sum online.

use crate::engine::{
    eval_products_mal, eval_products_semi, fresh_masks, prep_products_mal, prep_products_semi, MalPrep, Party,
    ProductPrep, ProtocolError, Result, TripleParams, VerifState,
};
use crate::sharing::MaskedShare;
use crate::transport::Point;

pub(crate) fn pair_up(xs: &[MaskedShare], ys: &[MaskedShare]) -> Result<Vec<(MaskedShare, MaskedShare)>> {
    if xs.len() != ys.len() {
        return Err(ProtocolError::Input(format!(
            "vector lengths differ: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.is_empty() {
        return Err(ProtocolError::Input("empty vectors".into()));
    }
    Ok(xs.iter().copied().zip(ys.iter().copied()).collect())
}

/// Offline phase: one ring element from `P0` to `P2`. Only the masks of the
/// inputs are used.
pub fn dot_prep_semi(p: &mut Party, xs: &[MaskedShare], ys: &[MaskedShare]) -> Result<ProductPrep> {
    let pairs = pair_up(xs, ys)?;
    let width = xs[0].width();
    let tag = p.tag("dot");
    let out = fresh_masks(p, &tag, width, 1)?;
    Ok(prep_products_semi(p, &[pairs], out, Point::MulGamma)?[0])
}

/// Online phase: the evaluators swap one share of the masked sum each.
pub fn dot_semi(p: &mut Party, prep: &ProductPrep, xs: &[MaskedShare], ys: &[MaskedShare]) -> Result<MaskedShare> {
    let pairs = pair_up(xs, ys)?;
    Ok(eval_products_semi(p, &[pairs], &[*prep], Point::DotMz)?[0])
}

/// Offline phase of the verified dot product: one verified component per
/// coordinate.
pub fn dot_prep_mal(p: &mut Party, xs: &[MaskedShare], ys: &[MaskedShare], params: &TripleParams) -> Result<MalPrep> {
    let pairs = pair_up(xs, ys)?;
    let width = xs[0].width();
    let tag = p.tag("dot");
    let outs = fresh_masks(p, &tag, width, pairs.len())?;
    Ok(prep_products_mal(p, &[pairs], outs, width, params)?.remove(0))
}

/// Online phase of the verified dot product. The product check is logged in
/// `verif` and runs at the next flush.
pub fn dot_mal(
    p: &mut Party,
    prep: &MalPrep,
    xs: &[MaskedShare],
    ys: &[MaskedShare],
    verif: &mut VerifState,
) -> Result<MaskedShare> {
    let pairs = pair_up(xs, ys)?;
    Ok(eval_products_mal(p, &[pairs], std::slice::from_ref(prep), Point::DotMz, verif)?[0])
}
