//! Masks, input sharing and reconstruction.

use super::{Party, ProtocolError, Result};
use crate::crypto::{hash_elements, DigestBuilder, KeyId};
use crate::party::PartyId;
use crate::ring::{RingElement, Width};
use crate::sharing::MaskedShare;
use crate::transport::Point;

/// Fresh mask-only sharings: `lambda1` under k01, `lambda2` under k02.
pub fn fresh_masks(p: &mut Party, tag: &str, width: Width, n: usize) -> Result<Vec<MaskedShare>> {
    let me = p.id();
    let l1 = p.sample_if_held(KeyId::K01, tag, "l1", width, n)?;
    let l2 = p.sample_if_held(KeyId::K02, tag, "l2", width, n)?;
    let zero = RingElement::zero(width);
    Ok((0..n)
        .map(|i| {
            let a = l1.as_ref().map_or(zero, |v| v[i]);
            let b = l2.as_ref().map_or(zero, |v| v[i]);
            MaskedShare::mask_only(me, a, b)
        })
        .collect())
}

/// The mask of one input wire. The owner also learns the full mask.
#[derive(Clone, Copy, Debug)]
pub struct InputMask {
    pub owner: PartyId,
    pub share: MaskedShare,
    pub full: Option<RingElement>,
}

/// Input masks for wires with the given owners.
///
/// `P0`-owned inputs use k01 and k02; an evaluator's input draws the half its
/// co-evaluator cannot know from kP, so the owner sees both halves.
pub fn input_masks(p: &mut Party, owners: &[PartyId], width: Width) -> Result<Vec<InputMask>> {
    let me = p.id();
    let n = owners.len();
    let tag = p.tag("sh");
    let zero = RingElement::zero(width);
    let a01 = p.sample_if_held(KeyId::K01, &tag, "l1", width, n)?;
    let a02 = p.sample_if_held(KeyId::K02, &tag, "l2", width, n)?;
    let ap1 = p.sample(KeyId::KP, &tag, "l1p", width, n)?;
    let ap2 = p.sample(KeyId::KP, &tag, "l2p", width, n)?;
    let pick = |v: &Option<Vec<RingElement>>, i: usize| v.as_ref().map(|v| v[i]);
    Ok(owners
        .iter()
        .enumerate()
        .map(|(i, &owner)| {
            let (l1, l2) = match owner {
                PartyId::P0 => (pick(&a01, i), pick(&a02, i)),
                PartyId::P1 => (pick(&a01, i), Some(ap2[i])),
                PartyId::P2 => (Some(ap1[i]), pick(&a02, i)),
            };
            let full = (owner == me).then(|| l1.unwrap_or(zero) + l2.unwrap_or(zero));
            InputMask {
                owner,
                share: MaskedShare::mask_only(me, l1.unwrap_or(zero), l2.unwrap_or(zero)),
                full,
            }
        })
        .collect())
}

fn width_of(masks: &[InputMask]) -> Option<Width> {
    masks.first().map(|m| m.share.width())
}

/// Sends the masked values of this party's inputs, in wire order, at `point`.
///
/// Returns the masked value of every input this party owns (others `None`).
pub fn send_inputs(
    p: &mut Party,
    masks: &[InputMask],
    values: &[RingElement],
    point: Point,
) -> Result<Vec<Option<RingElement>>> {
    let me = p.id();
    let Some(width) = width_of(masks) else {
        return Ok(Vec::new());
    };
    let mine = masks.iter().filter(|m| m.owner == me).count();
    if values.len() != mine {
        return Err(ProtocolError::Input(format!(
            "{me} owns {mine} inputs, got {} values",
            values.len()
        )));
    }
    if let Some(v) = values.iter().find(|v| v.width() != width) {
        return Err(ProtocolError::Input(format!(
            "input width {} does not match {width}",
            v.width()
        )));
    }
    let mut vals = values.iter();
    let known: Vec<Option<RingElement>> = masks
        .iter()
        .map(|m| m.full.map(|l| *vals.next().expect("counted above") + l))
        .collect();
    if mine > 0 {
        let ms: Vec<RingElement> = known.iter().flatten().copied().collect();
        let to: &[PartyId] = match me {
            PartyId::P0 => &[PartyId::P1, PartyId::P2],
            PartyId::P1 => &[PartyId::P2],
            PartyId::P2 => &[PartyId::P1],
        };
        for &peer in to {
            p.net.send_elements(peer, point, width, ms.clone())?;
        }
    }
    Ok(known)
}

/// Completes input sharing. Evaluators log `P0`'s masked values into `log` for
/// the consistency check.
pub fn recv_inputs(
    p: &mut Party,
    masks: &[InputMask],
    known: &[Option<RingElement>],
    point: Point,
    log: Option<&mut DigestBuilder>,
) -> Result<Vec<MaskedShare>> {
    let me = p.id();
    let Some(width) = width_of(masks) else {
        return Ok(Vec::new());
    };
    if me == PartyId::P0 {
        return Ok(masks.iter().map(|m| m.share).collect());
    }
    let count = |o: PartyId| masks.iter().filter(|m| m.owner == o).count();
    let mut from = [Vec::new(), Vec::new(), Vec::new()];
    for peer in [PartyId::P0, me.co_evaluator()] {
        let n = count(peer);
        if n > 0 {
            from[peer.index()] = p.net.recv_elements(peer, point, width, n)?;
        }
    }
    if let Some(log) = log {
        log.update_elements(width, &from[0]);
    }
    let mut next = [0usize; 3];
    Ok(masks
        .iter()
        .zip(known)
        .map(|(mask, k)| {
            let m = k.unwrap_or_else(|| {
                let o = mask.owner.index();
                next[o] += 1;
                from[o][next[o] - 1]
            });
            mask.share.with_m(m)
        })
        .collect())
}

/// Semi-honest input sharing in one round.
pub fn share_inputs(p: &mut Party, masks: &[InputMask], values: &[RingElement]) -> Result<Vec<MaskedShare>> {
    let known = send_inputs(p, masks, values, Point::InputM)?;
    recv_inputs(p, masks, &known, Point::InputM, None)
}

/// Protocol points for the missing share and its digest.
#[derive(Clone, Copy, Debug)]
pub struct RecPoints {
    pub share: Point,
    pub digest: Point,
}

impl RecPoints {
    pub const OUTPUT: RecPoints = RecPoints {
        share: Point::RecShare,
        digest: Point::RecDigest,
    };
}

/// Sends what each target is missing; with `verify`, the third party sends a digest.
pub fn rec_send(p: &mut Party, vals: &[MaskedShare], targets: &[PartyId], pts: RecPoints, verify: bool) -> Result<()> {
    let me = p.id();
    let Some(width) = vals.first().map(|v| v.width()) else {
        return Ok(());
    };
    let m: Vec<RingElement> = vals.iter().filter_map(|v| v.m()).collect();
    let l1: Vec<RingElement> = vals.iter().filter_map(|v| v.lambda1()).collect();
    let l2: Vec<RingElement> = vals.iter().filter_map(|v| v.lambda2()).collect();
    for &t in targets.iter().filter(|t| **t != me) {
        use PartyId::*;
        match (t, me) {
            (P0, P1) => p.net.send_elements(P0, pts.share, width, m.clone())?,
            (P1, P2) => p.net.send_elements(P1, pts.share, width, l2.clone())?,
            (P2, P1) => p.net.send_elements(P2, pts.share, width, l1.clone())?,
            (P0, P2) if verify => p.net.send_digest(P0, pts.digest, hash_elements(width, &m))?,
            (P1, P0) if verify => p.net.send_digest(P1, pts.digest, hash_elements(width, &l2))?,
            (P2, P0) if verify => p.net.send_digest(P2, pts.digest, hash_elements(width, &l1))?,
            _ => {}
        }
    }
    Ok(())
}

/// Receives the missing share and returns the values, for targets only.
pub fn rec_recv(
    p: &mut Party,
    vals: &[MaskedShare],
    targets: &[PartyId],
    pts: RecPoints,
    verify: bool,
) -> Result<Option<Vec<RingElement>>> {
    let me = p.id();
    if !targets.contains(&me) {
        return Ok(None);
    }
    let Some(width) = vals.first().map(|v| v.width()) else {
        return Ok(Some(Vec::new()));
    };
    let n = vals.len();
    let (holder, checker) = match me {
        PartyId::P0 => (PartyId::P1, PartyId::P2),
        PartyId::P1 => (PartyId::P2, PartyId::P0),
        PartyId::P2 => (PartyId::P1, PartyId::P0),
    };
    let missing = p.net.recv_elements(holder, pts.share, width, n)?;
    if verify {
        let d = p.net.recv_digest(checker, pts.digest)?;
        if d != hash_elements(width, &missing) {
            return Err(ProtocolError::abort(format!(
                "{}: {holder} disagrees with {checker}",
                pts.share
            )));
        }
    }
    Ok(Some(
        vals.iter()
            .zip(missing)
            .map(|(v, x)| {
                let (a, b) = v.parts();
                match me {
                    PartyId::P0 => x - a - b,
                    _ => a - b - x,
                }
            })
            .collect(),
    ))
}

/// Reconstruction toward `targets` without verification.
pub fn rec_semi(p: &mut Party, vals: &[MaskedShare], targets: &[PartyId]) -> Result<Option<Vec<RingElement>>> {
    rec_send(p, vals, targets, RecPoints::OUTPUT, false)?;
    rec_recv(p, vals, targets, RecPoints::OUTPUT, false)
}

/// Reconstruction toward every party with the missing share checked against a digest.
pub fn rec_mal(p: &mut Party, vals: &[MaskedShare], pts: RecPoints) -> Result<Vec<RingElement>> {
    rec_send(p, vals, &PartyId::ALL, pts, true)?;
    Ok(rec_recv(p, vals, &PartyId::ALL, pts, true)?.expect("every party is a target"))
}
