//! Fair output reconstruction: either every honest party learns the outputs or
//! none does.
//!
//! Offline, each mask half is committed to the party that lacks it by both of its
//! holders, and each pair `P0-P1`, `P0-P2` commits to a proof-of-origin value.
//! Online, the evaluators commit to the masked values toward `P0`, `P0` decides,
//! the evaluators relay its decision to each other, and finally every commitment
//! is opened. An abort only counts if it carries an opening of an origin value,
//! which a lone corrupt evaluator cannot produce.

use super::{Party, ProtocolError, Result};
use crate::crypto::{commit, verify_open, Commitment, KeyId, Opening};
use crate::party::PartyId;
use crate::ring::{RingElement, Width};
use crate::sharing::MaskedShare;
use crate::transport::{Payload, Point, Signal};

/// Offline commitments and openings for one batch of outputs.
#[derive(Clone, Debug)]
pub struct FairPrep {
    count: usize,
    width: Width,
    /// Agreed commitments to the mask half this party lacks, per output.
    missing: Vec<Commitment>,
    /// Openings of this party's mask halves: `[lambda1, lambda2]`; `P1` has only
    /// the first, `P2` only the second.
    own: [Vec<Opening>; 2],
    /// Origin commitments: `[r1, r2]`; `r1` is known to `P0,P1`, `r2` to `P0,P2`.
    origin: [Option<Commitment>; 2],
    origin_open: [Option<Opening>; 2],
    /// Evaluators: randomness for committing to the masked values.
    m_rand: Vec<[u8; 32]>,
}

fn rand32(p: &mut Party, key: KeyId, tag: &str, stream: &str, n: usize) -> Result<Vec<[u8; 32]>> {
    let words = p.keys.sample_u64(key, &format!("{tag}/{stream}"), 4 * n)?;
    Ok(words
        .chunks(4)
        .map(|w| {
            let mut out = [0u8; 32];
            for (k, x) in w.iter().enumerate() {
                out[8 * k..8 * k + 8].copy_from_slice(&x.to_le_bytes());
            }
            out
        })
        .collect())
}

fn commit_all(vals: &[RingElement], rand: &[[u8; 32]]) -> (Vec<Commitment>, Vec<Opening>) {
    vals.iter().zip(rand).map(|(v, r)| commit(&v.to_le_bytes(), *r)).unzip()
}

fn recv_commitments(p: &mut Party, peer: PartyId, point: Point, n: usize) -> Result<Vec<Commitment>> {
    match p.net.recv(peer, point)? {
        Payload::Commitments(c) if c.len() == n => Ok(c),
        other => Err(p
            .net
            .type_error(peer, point, &format!("{n} commitments"), &other)
            .into()),
    }
}

/// Offline commitment exchange, one round. Receivers abort if the two holders of
/// a value disagree.
pub fn fair_offline(p: &mut Party, outputs: &[MaskedShare]) -> Result<FairPrep> {
    let me = p.id();
    let n = outputs.len();
    let width = outputs.first().map_or(Width::W64, |s| s.width());
    let tag = p.tag("frec");
    let zero = RingElement::zero(width);
    let l1: Vec<RingElement> = outputs.iter().map(|s| s.lambda1().unwrap_or(zero)).collect();
    let l2: Vec<RingElement> = outputs.iter().map(|s| s.lambda2().unwrap_or(zero)).collect();

    let mut own: [Vec<Opening>; 2] = Default::default();
    let mut origin: [Option<Commitment>; 2] = [None, None];
    let mut origin_open: [Option<Opening>; 2] = [None, None];
    for (half, key, vals) in [(0, KeyId::K01, &l1), (1, KeyId::K02, &l2)] {
        if !p.keys.holds(key) {
            continue;
        }
        let rs = rand32(p, key, &tag, &format!("l{}", half + 1), n)?;
        let (cs, os) = commit_all(vals, &rs);
        let r = p.keys.sample_one(key, &format!("{tag}/r{}", half + 1), Width::W64)?;
        let rr = rand32(p, key, &tag, &format!("r{}.rand", half + 1), 1)?;
        let (rc, ro) = commit(&r.to_le_bytes(), rr[0]);
        // lambda1 goes to P2, lambda2 to P1
        let to = if half == 0 { PartyId::P2 } else { PartyId::P1 };
        p.net.send(to, Point::FairCommit, Payload::Commitments(cs))?;
        p.net.send(to, Point::FairOrigin, Payload::Commitments(vec![rc]))?;
        own[half] = os;
        origin[half] = Some(rc);
        origin_open[half] = Some(ro);
    }
    let m_rand = if me.is_evaluator() {
        rand32(p, KeyId::K12, &tag, "m", n)?
    } else {
        Vec::new()
    };

    let mut missing = Vec::new();
    if me.is_evaluator() {
        // P1 lacks lambda2 (from P0 and P2); P2 lacks lambda1 (from P0 and P1)
        let half = if me == PartyId::P1 { 1 } else { 0 };
        let other = me.co_evaluator();
        let a = recv_commitments(p, PartyId::P0, Point::FairCommit, n)?;
        let ar = recv_commitments(p, PartyId::P0, Point::FairOrigin, 1)?;
        let b = recv_commitments(p, other, Point::FairCommit, n)?;
        let br = recv_commitments(p, other, Point::FairOrigin, 1)?;
        if a != b || ar != br {
            return Err(ProtocolError::abort(
                "frec.commit: P0 and the co-evaluator committed differently",
            ));
        }
        missing = a;
        origin[half] = Some(ar[0]);
    }
    Ok(FairPrep {
        count: n,
        width,
        missing,
        own,
        origin,
        origin_open,
        m_rand,
    })
}

fn try_recv(p: &mut Party, peer: PartyId, point: Point) -> Option<Payload> {
    p.net.recv(peer, point).ok()
}

/// Whether `s` is an abort carrying a valid opening of `c`.
fn proven_abort(s: &Option<Payload>, c: Option<&Commitment>) -> bool {
    match (s, c) {
        (Some(Payload::Signal(Signal::Abort(Some(o)))), Some(c)) => verify_open(c, o),
        _ => false,
    }
}

/// Reconstructs `vals` at every honest party, or aborts at all of them.
pub fn rec_fair(p: &mut Party, prep: &FairPrep, vals: &[MaskedShare]) -> Result<Vec<RingElement>> {
    use PartyId::*;
    let me = p.id();
    let n = prep.count;
    if vals.len() != n {
        return Err(ProtocolError::Input(format!(
            "{n} outputs prepared, {} given",
            vals.len()
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let width = prep.width;
    let zero = RingElement::zero(width);
    // origin openings double as evidence for a forged abort
    match me {
        P0 => {
            p.net.set_evidence(P1, prep.origin_open[1].clone());
            p.net.set_evidence(P2, prep.origin_open[0].clone());
        }
        P1 => p.net.set_evidence(P2, prep.origin_open[0].clone()),
        P2 => p.net.set_evidence(P1, prep.origin_open[1].clone()),
    }

    let (m_commit, m_open): (Vec<Commitment>, Vec<Opening>) = if me.is_evaluator() {
        let ms: Vec<RingElement> = vals.iter().map(|v| v.m().unwrap_or(zero)).collect();
        let (c, o) = commit_all(&ms, &prep.m_rand);
        p.net.send(P0, Point::FairCommitM, Payload::Commitments(c.clone()))?;
        (c, o)
    } else {
        (Vec::new(), Vec::new())
    };

    let agreed: Vec<Commitment>;
    if me == P0 {
        let c1 = recv_commitments(p, P1, Point::FairCommitM, n).ok();
        let c2 = recv_commitments(p, P2, Point::FairCommitM, n).ok();
        match (c1, c2) {
            (Some(a), Some(b)) if a == b => {
                agreed = a;
                for peer in [P1, P2] {
                    let _ = p.net.send(peer, Point::FairSignal, Payload::Signal(Signal::Continue));
                }
            }
            _ => {
                let _ = p.net.send(
                    P1,
                    Point::FairSignal,
                    Payload::Signal(Signal::Abort(prep.origin_open[1].clone())),
                );
                let _ = p.net.send(
                    P2,
                    Point::FairSignal,
                    Payload::Signal(Signal::Abort(prep.origin_open[0].clone())),
                );
                return Err(ProtocolError::abort(
                    "frec.commit.m: evaluators committed to different values",
                ));
            }
        }
    } else {
        let other = me.co_evaluator();
        let direct = try_recv(p, P0, Point::FairSignal);
        let relay = match &direct {
            Some(Payload::Signal(s)) => s.clone(),
            _ => Signal::Continue,
        };
        let _ = p.net.send(other, Point::FairForward, Payload::Signal(relay));
        let forwarded = try_recv(p, other, Point::FairForward);
        // an abort from P0 must open the origin value shared with the recipient;
        // a relayed one must open the origin value this party shares with P0
        let (mine, theirs) = if me == P1 { (0, 1) } else { (1, 0) };
        if proven_abort(&direct, prep.origin[theirs].as_ref()) || proven_abort(&forwarded, prep.origin[mine].as_ref()) {
            return Err(ProtocolError::abort("frec.signal: P0 aborted"));
        }
        agreed = m_commit;
    }

    let send_open = |p: &mut Party, to: PartyId, os: &[Opening]| {
        let _ = p.net.send(to, Point::FairOpen, Payload::Openings(os.to_vec()));
    };
    match me {
        P0 => {
            send_open(p, P2, &prep.own[0]);
            send_open(p, P1, &prep.own[1]);
        }
        P1 => {
            send_open(p, P2, &prep.own[0]);
            send_open(p, P0, &m_open);
        }
        P2 => {
            send_open(p, P1, &prep.own[1]);
            send_open(p, P0, &m_open);
        }
    }
    let expected: &[Commitment] = match me {
        P0 => &agreed,
        _ => &prep.missing,
    };
    let mut got: Vec<Option<RingElement>> = vec![None; n];
    for peer in me.others() {
        let Some(Payload::Openings(os)) = try_recv(p, peer, Point::FairOpen) else {
            continue;
        };
        for ((slot, c), o) in got.iter_mut().zip(expected).zip(&os) {
            if slot.is_none() && verify_open(c, o) && o.payload.len() == width.byte_len() {
                let mut b = [0u8; 8];
                b[..o.payload.len()].copy_from_slice(&o.payload);
                *slot = Some(RingElement::new(u64::from_le_bytes(b), width));
            }
        }
    }
    vals.iter()
        .zip(got)
        .map(|(v, x)| {
            let x = x.ok_or_else(|| ProtocolError::abort("frec.open: no valid opening"))?;
            let (a, b) = v.parts();
            Ok(match me {
                P0 => x - a - b,
                _ => a - b - x,
            })
        })
        .collect()
}
