//! Sign extraction: a boolean sharing of `msb(a)` from an arithmetic sharing of `a`.
//!
//! The evaluators blind `a` with a positive random factor `r` they share, and
//! the sign of `r * a` is shared as a one-bit input. Because `r` is drawn from
//! `[1, 2^(l - 2 - k))` and `|a| <= 2^k`, the product never wraps and its sign
//! is the sign of `a`. The boolean output is `msb(r) xor msb(r * a)`, kept in
//! that form so the layout works for any `r`.

use crate::crypto::{hash_elements, KeyId};
use crate::engine::{
    eval_products_mal, flush_checks, flush_finish, flush_start, fresh_masks, input_masks, prep_products_mal, rec_recv,
    rec_send, recv_inputs, send_inputs, InputMask, MalPrep, Party, ProtocolError, RecPoints, Result, TripleParams,
    VerifState,
};
use crate::party::PartyId;
use crate::ring::{RingElement, Width};
use crate::sharing::MaskedShare;
use crate::transport::Point;

/// Default magnitude bound: inputs satisfy `|a| <= 2^31`.
pub const DEFAULT_MAGNITUDE_BITS: u32 = 31;

const REC_POINTS: RecPoints = RecPoints {
    share: Point::BitextRec,
    digest: Point::BitextRecDigest,
};

/// Parameters of sign extraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CmpOptions {
    /// `k` such that every input satisfies `|a| <= 2^k`.
    pub magnitude_bits: u32,
    /// Test hook: use this blinding factor instead of sampling one.
    pub force_r: Option<u64>,
    /// Test hook for the verified protocol: use these two factors.
    pub force_factors: Option<(u64, u64)>,
}

impl Default for CmpOptions {
    fn default() -> Self {
        CmpOptions {
            magnitude_bits: DEFAULT_MAGNITUDE_BITS,
            force_r: None,
            force_factors: None,
        }
    }
}

impl CmpOptions {
    pub fn with_magnitude_bits(mut self, k: u32) -> Self {
        self.magnitude_bits = k;
        self
    }

    /// Bits of the blinding factor: `r < 2^bits`.
    pub fn r_bits(&self, width: Width) -> Result<u32> {
        let l = width.bits();
        if width == Width::BIT || self.magnitude_bits + 3 > l {
            return Err(ProtocolError::Input(format!(
                "magnitude bound 2^{} leaves no room for blinding in a {l}-bit ring",
                self.magnitude_bits
            )));
        }
        Ok(l - 2 - self.magnitude_bits)
    }

    /// Bits of each factor in the verified protocol.
    pub fn factor_bits(&self, width: Width) -> Result<u32> {
        let b = self.r_bits(width)? / 2;
        if b == 0 {
            return Err(ProtocolError::Input(format!(
                "magnitude bound 2^{} leaves no room for two blinding factors in a {width}-bit ring",
                self.magnitude_bits
            )));
        }
        Ok(b)
    }

    /// Whether `a` satisfies the magnitude bound at `width`.
    pub fn admits(&self, a: RingElement) -> bool {
        a.as_signed().unsigned_abs() <= 1u64 << self.magnitude_bits
    }
}

fn check_forced(v: u64, bits: u32) -> Result<u64> {
    if v == 0 || v >> bits != 0 {
        return Err(ProtocolError::Input(format!("forced factor {v} outside [1, 2^{bits})")));
    }
    Ok(v)
}

fn sign_bit(v: RingElement) -> RingElement {
    RingElement::from_bool(v.msb().expect("wide ring"))
}

/// Offline material of semi-honest sign extraction.
#[derive(Clone, Debug)]
pub struct CmpPrepSemi {
    width: Width,
    /// Evaluators: blinding factors and additive blinds; empty at `P0`.
    r: Vec<RingElement>,
    blind: Vec<RingElement>,
    /// Masks of the sign bits `P0` shares.
    q_masks: Vec<InputMask>,
}

/// Offline phase for `n` sign extractions; no communication.
pub fn bitext_prep_semi(p: &mut Party, n: usize, width: Width, opts: &CmpOptions) -> Result<CmpPrepSemi> {
    let bits = opts.r_bits(width)?;
    let tag = p.tag("cmp");
    let (mut r, mut blind) = (Vec::new(), Vec::new());
    if p.id().is_evaluator() {
        let raw = p.sample_small(KeyId::K12, &tag, "r", bits, n)?;
        let forced = opts.force_r.map(|v| check_forced(v, bits)).transpose()?;
        r = raw
            .into_iter()
            .map(|x| RingElement::new(forced.unwrap_or(x), width))
            .collect();
        blind = p.sample(KeyId::K12, &tag, "blind", width, n)?;
    }
    let q_masks = input_masks(p, &vec![PartyId::P0; n], Width::BIT)?;
    Ok(CmpPrepSemi {
        width,
        r,
        blind,
        q_masks,
    })
}

/// Online phase, two rounds: the evaluators send blinded shares of `r * a` to
/// `P0`, who shares the sign of the sum.
pub fn bitext_semi(p: &mut Party, prep: &CmpPrepSemi, a: &[MaskedShare]) -> Result<Vec<MaskedShare>> {
    let me = p.id();
    let n = prep.q_masks.len();
    if a.len() != n {
        return Err(ProtocolError::Input(format!(
            "{n} comparisons prepared, {} given",
            a.len()
        )));
    }
    let width = prep.width;
    let mut q = Vec::new();
    match me {
        PartyId::P1 | PartyId::P2 => {
            let blinded: Vec<RingElement> = a
                .iter()
                .zip(prep.r.iter().zip(&prep.blind))
                .map(|(s, (r, b))| {
                    let (m, l) = s.parts();
                    if me == PartyId::P1 {
                        *r * (m - l) + *b
                    } else {
                        -(*r * l) - *b
                    }
                })
                .collect();
            p.net.send_elements(PartyId::P0, Point::BitextBlind, width, blinded)?;
        }
        PartyId::P0 => {
            let s1 = p.net.recv_elements(PartyId::P1, Point::BitextBlind, width, n)?;
            let s2 = p.net.recv_elements(PartyId::P2, Point::BitextBlind, width, n)?;
            q = s1.into_iter().zip(s2).map(|(x, y)| sign_bit(x + y)).collect();
        }
    }
    let known = send_inputs(p, &prep.q_masks, &q, Point::BitextQ)?;
    let qs = recv_inputs(p, &prep.q_masks, &known, Point::BitextQ, None)?;
    let ps: Vec<RingElement> = match me {
        PartyId::P0 => vec![RingElement::zero(Width::BIT); n],
        _ => prep.r.iter().map(|r| sign_bit(*r)).collect(),
    };
    Ok(qs
        .into_iter()
        .zip(ps)
        .map(|(q, pb)| q + MaskedShare::public(me, pb))
        .collect())
}

/// Offline material of verified sign extraction.
#[derive(Clone, Debug)]
pub struct CmpPrepMal {
    /// Shared blinding factors `r = r1 * r2`.
    r: Vec<MaskedShare>,
    /// Boolean sharings of `msb(r1) xor msb(r2)`.
    p_bits: Vec<MaskedShare>,
    /// Verified products `r * a`.
    ra: Vec<MalPrep>,
    /// Masks of the sign bits `P1` shares.
    q_masks: Vec<InputMask>,
}

/// Non-interactive sharings of the two factors: `r1` is known to the
/// evaluators and sits in the masked value, `r2` is known to `P0, P2` and sits
/// (negated) in the second mask half.
fn factor_shares(
    p: &mut Party,
    n: usize,
    width: Width,
    opts: &CmpOptions,
) -> Result<(Vec<MaskedShare>, Vec<MaskedShare>, Vec<MaskedShare>)> {
    let me = p.id();
    let bits = opts.factor_bits(width)?;
    let tag = p.tag("cmpm");
    let zero = RingElement::zero(width);
    let bzero = RingElement::zero(Width::BIT);
    let forced = opts
        .force_factors
        .map(|(a, b)| Ok::<_, ProtocolError>((check_forced(a, bits)?, check_forced(b, bits)?)))
        .transpose()?;
    let draw =
        |p: &mut Party, key: KeyId, stream: &str, pick: fn((u64, u64)) -> u64| -> Result<Option<Vec<RingElement>>> {
            if !p.keys.holds(key) {
                return Ok(None);
            }
            let raw = p.sample_small(key, &tag, stream, bits, n)?;
            Ok(Some(
                raw.into_iter()
                    .map(|x| RingElement::new(forced.map_or(x, pick), width))
                    .collect(),
            ))
        };
    let r1 = draw(p, KeyId::K12, "r1", |f| f.0)?;
    let r2 = draw(p, KeyId::K02, "r2", |f| f.1)?;
    let mut s1 = Vec::with_capacity(n);
    let mut s2 = Vec::with_capacity(n);
    let mut pb = Vec::with_capacity(n);
    for i in 0..n {
        let a = r1.as_ref().map(|v| v[i]);
        let b = r2.as_ref().map(|v| v[i]);
        s1.push(match me {
            PartyId::P0 => MaskedShare::from_parts(me, zero, zero),
            _ => MaskedShare::from_parts(me, a.expect("evaluators hold k12"), zero),
        });
        s2.push(MaskedShare::from_parts(me, zero, b.map_or(zero, |b| -b)));
        let p1 = a.map_or(bzero, sign_bit);
        let p2 = b.map_or(bzero, sign_bit);
        pb.push(match me {
            PartyId::P0 => MaskedShare::from_parts(me, bzero, p2),
            PartyId::P1 => MaskedShare::from_parts(me, p1, bzero),
            PartyId::P2 => MaskedShare::from_parts(me, p1, p2),
        });
    }
    Ok((s1, s2, pb))
}

/// Offline phase of verified sign extraction for inputs with the given masks,
/// with `extra` product groups preprocessed in the same batch.
///
/// The product `r1 * r2` is evaluated and verified here, so the online phase
/// only multiplies by `a`.
pub fn bitext_prep_mal_with(
    p: &mut Party,
    a_masks: &[MaskedShare],
    extra: &[Vec<(MaskedShare, MaskedShare)>],
    extra_outs: Vec<MaskedShare>,
    opts: &CmpOptions,
    params: &TripleParams,
) -> Result<(CmpPrepMal, Vec<MalPrep>)> {
    let n = a_masks.len();
    let Some(width) = a_masks.first().map(|a| a.width()) else {
        return Err(ProtocolError::Input("no comparisons requested".into()));
    };
    let (r1, r2, p_bits) = factor_shares(p, n, width, opts)?;
    let tag = p.tag("cmpm");
    let outs = fresh_masks(p, &tag, width, 2 * n)?;
    let r_outs = &outs[..n];
    let mut groups = extra.to_vec();
    groups.extend(r1.iter().zip(&r2).map(|(a, b)| vec![(*a, *b)]));
    groups.extend(r_outs.iter().zip(a_masks).map(|(r, a)| vec![(*r, *a)]));
    let mut all_outs = extra_outs;
    all_outs.extend_from_slice(&outs);
    let mut preps = prep_products_mal(p, &groups, all_outs, width, params)?;
    let ra = preps.split_off(extra.len() + n);
    let r_preps = preps.split_off(extra.len());

    let mut verif = VerifState::new();
    let r_groups: Vec<_> = r1.iter().zip(&r2).map(|(a, b)| vec![(*a, *b)]).collect();
    let r = eval_products_mal(p, &r_groups, &r_preps, Point::MulMz, &mut verif)?;
    flush_checks(p, &mut verif)?;
    let q_masks = input_masks(p, &vec![PartyId::P1; n], Width::BIT)?;
    Ok((CmpPrepMal { r, p_bits, ra, q_masks }, preps))
}

pub fn bitext_prep_mal(
    p: &mut Party,
    a_masks: &[MaskedShare],
    opts: &CmpOptions,
    params: &TripleParams,
) -> Result<CmpPrepMal> {
    Ok(bitext_prep_mal_with(p, a_masks, &[], Vec::new(), opts, params)?.0)
}

/// Online phase of verified sign extraction, three rounds.
///
/// Multiplies by `r`, opens `r * a` to `P0` and `P1`, and lets `P1` share its
/// sign while `P0` vouches for the masked sign bits to `P2`. Every product check
/// logged in `verif`, including earlier ones, is flushed alongside.
pub fn bitext_mal(
    p: &mut Party,
    prep: &CmpPrepMal,
    a: &[MaskedShare],
    verif: &mut VerifState,
) -> Result<Vec<MaskedShare>> {
    use PartyId::*;
    let me = p.id();
    let n = prep.r.len();
    if a.len() != n {
        return Err(ProtocolError::Input(format!(
            "{n} comparisons prepared, {} given",
            a.len()
        )));
    }
    let groups: Vec<_> = prep.r.iter().zip(a).map(|(r, a)| vec![(*r, *a)]).collect();
    let ra = eval_products_mal(p, &groups, &prep.ra, Point::MulMz, verif)?;

    let pending = flush_start(p, verif)?;
    rec_send(p, &ra, &[P0, P1], REC_POINTS, true)?;
    let opened = rec_recv(p, &ra, &[P0, P1], REC_POINTS, true)?;
    if me == P0 {
        flush_finish(p, pending)?;
        let mq: Vec<RingElement> = opened
            .as_ref()
            .expect("P0 is a target")
            .iter()
            .zip(&prep.q_masks)
            .map(|(v, mask)| sign_bit(*v) + mask.share.mask_share())
            .collect();
        p.net
            .send_digest(P2, Point::BitextQDigest, hash_elements(Width::BIT, &mq))?;
        let qs = recv_inputs(p, &prep.q_masks, &[], Point::BitextQ, None)?;
        return Ok(qs.into_iter().zip(&prep.p_bits).map(|(q, pb)| q + *pb).collect());
    }
    let q: Vec<RingElement> = match &opened {
        Some(v) => v.iter().map(|x| sign_bit(*x)).collect(),
        None => Vec::new(),
    };
    let known = send_inputs(p, &prep.q_masks, &q, Point::BitextQ)?;
    let qs = recv_inputs(p, &prep.q_masks, &known, Point::BitextQ, None)?;
    if me == P2 {
        let mq: Vec<RingElement> = qs.iter().map(|s| s.m().expect("evaluator view")).collect();
        if p.net.recv_digest(P0, Point::BitextQDigest)? != hash_elements(Width::BIT, &mq) {
            return Err(ProtocolError::abort(
                "bitext.q: P1 shared a sign bit P0 does not vouch for",
            ));
        }
    }
    flush_finish(p, pending)?;
    Ok(qs.into_iter().zip(&prep.p_bits).map(|(q, pb)| q + *pb).collect())
}
