//! Wire framing.
//!
//! Header: kind `u8`, payload length `u32`, phase `u8`, point `u16`, stamp `u32`,
//! width `u8`, item count `u32`, all little-endian. The payload follows.

use thiserror::Error;

use super::point::Point;
use crate::crypto::{Commitment, Digest, Opening};
use crate::ring::{pack, unpack, RingElement, Width};

pub const HEADER_LEN: usize = 17;
/// Upper bound on a single payload, as a guard against corrupt headers.
pub const MAX_PAYLOAD: usize = 1 << 30;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("truncated frame")]
    Truncated,
    #[error("unknown message kind {0}")]
    Kind(u8),
    #[error("unknown phase {0}")]
    Phase(u8),
    #[error("unknown protocol point {0}")]
    Point(u16),
    #[error("bad payload: {0}")]
    Payload(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    Offline,
    Online,
    /// Delivery of results to their recipient, metered apart from evaluation.
    Output,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::Offline, Phase::Online, Phase::Output];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Phase::Offline => "offline",
            Phase::Online => "online",
            Phase::Output => "output",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    RingElements,
    Digests,
    Commitments,
    Control,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::RingElements,
        Category::Digests,
        Category::Commitments,
        Category::Control,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::RingElements => "ring-elements",
            Category::Digests => "digests",
            Category::Commitments => "commitments",
            Category::Control => "control",
        }
    }
}

/// The distributor's verdict in fair reconstruction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Signal {
    Continue,
    Abort(Option<Opening>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Payload {
    Elements { width: Width, elems: Vec<RingElement> },
    Digests(Vec<Digest>),
    Commitments(Vec<Commitment>),
    Openings(Vec<Opening>),
    Signal(Signal),
    Abort(String),
}

impl Payload {
    pub fn elements(width: Width, elems: Vec<RingElement>) -> Self {
        Payload::Elements { width, elems }
    }

    pub fn kind(&self) -> u8 {
        match self {
            Payload::Elements { .. } => 1,
            Payload::Digests(_) => 2,
            Payload::Commitments(_) => 3,
            Payload::Openings(_) => 4,
            Payload::Signal(_) => 5,
            Payload::Abort(_) => 6,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Payload::Elements { .. } => "elements",
            Payload::Digests(_) => "digests",
            Payload::Commitments(_) => "commitments",
            Payload::Openings(_) => "openings",
            Payload::Signal(_) => "signal",
            Payload::Abort(_) => "abort",
        }
    }

    pub fn category(&self) -> Category {
        match self {
            Payload::Elements { .. } => Category::RingElements,
            Payload::Digests(_) => Category::Digests,
            Payload::Commitments(_) | Payload::Openings(_) => Category::Commitments,
            Payload::Signal(_) | Payload::Abort(_) => Category::Control,
        }
    }

    /// Number of elements, digests, commitments or openings; 1 for control messages.
    pub fn items(&self) -> u64 {
        match self {
            Payload::Elements { elems, .. } => elems.len() as u64,
            Payload::Digests(d) => d.len() as u64,
            Payload::Commitments(c) => c.len() as u64,
            Payload::Openings(o) => o.len() as u64,
            Payload::Signal(_) | Payload::Abort(_) => 1,
        }
    }

    /// Information bits carried; for ring elements this is `items * l`.
    pub fn bits(&self) -> u64 {
        match self {
            Payload::Elements { width, elems } => elems.len() as u64 * width.bits() as u64,
            _ => 8 * self.body().len() as u64,
        }
    }

    fn width_byte(&self) -> u8 {
        match self {
            Payload::Elements { width, .. } => width.bits() as u8,
            _ => 0,
        }
    }

    pub fn body(&self) -> Vec<u8> {
        match self {
            Payload::Elements { width, elems } => pack(*width, elems),
            Payload::Digests(ds) => ds.iter().flat_map(|d| d.0).collect(),
            Payload::Commitments(cs) => cs.iter().flat_map(|c| c.0 .0).collect(),
            Payload::Openings(os) => {
                let mut out = Vec::new();
                for o in os {
                    o.encode_into(&mut out);
                }
                out
            }
            Payload::Signal(Signal::Continue) => vec![0],
            Payload::Signal(Signal::Abort(None)) => vec![1],
            Payload::Signal(Signal::Abort(Some(o))) => {
                let mut out = vec![2];
                o.encode_into(&mut out);
                out
            }
            Payload::Abort(reason) => reason.as_bytes().to_vec(),
        }
    }

    fn decode(kind: u8, width: u8, count: usize, body: &[u8]) -> Result<Payload, FrameError> {
        let bad = |m: &str| FrameError::Payload(m.to_string());
        let digests = |body: &[u8]| -> Result<Vec<Digest>, FrameError> {
            if body.len() != 32 * count {
                return Err(bad("digest length"));
            }
            Ok(body.chunks_exact(32).map(|c| Digest(c.try_into().unwrap())).collect())
        };
        match kind {
            1 => {
                let w = Width::new(width as u32).map_err(|e| bad(&e.to_string()))?;
                let elems = unpack(w, body, count).map_err(|e| bad(&e.to_string()))?;
                Ok(Payload::Elements { width: w, elems })
            }
            2 => Ok(Payload::Digests(digests(body)?)),
            3 => Ok(Payload::Commitments(
                digests(body)?.into_iter().map(Commitment).collect(),
            )),
            4 => {
                let mut rest = body;
                let mut os = Vec::with_capacity(count);
                for _ in 0..count {
                    let (o, r) = Opening::decode_from(rest).ok_or_else(|| bad("opening"))?;
                    os.push(o);
                    rest = r;
                }
                if !rest.is_empty() {
                    return Err(bad("trailing bytes after openings"));
                }
                Ok(Payload::Openings(os))
            }
            5 => match body.first() {
                Some(0) if body.len() == 1 => Ok(Payload::Signal(Signal::Continue)),
                Some(1) if body.len() == 1 => Ok(Payload::Signal(Signal::Abort(None))),
                Some(2) => {
                    let (o, r) = Opening::decode_from(&body[1..]).ok_or_else(|| bad("signal opening"))?;
                    if !r.is_empty() {
                        return Err(bad("trailing bytes after signal"));
                    }
                    Ok(Payload::Signal(Signal::Abort(Some(o))))
                }
                _ => Err(bad("signal")),
            },
            6 => Ok(Payload::Abort(String::from_utf8_lossy(body).into_owned())),
            k => Err(FrameError::Kind(k)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub phase: Phase,
    pub point: Point,
    /// Dependency depth of this message within its phase.
    pub stamp: u32,
    pub payload: Payload,
}

impl Frame {
    pub fn encode(&self) -> Vec<u8> {
        let body = self.payload.body();
        let mut out = Vec::with_capacity(HEADER_LEN + body.len());
        out.push(self.payload.kind());
        out.extend_from_slice(&(body.len() as u32).to_le_bytes());
        out.push(self.phase as u8);
        out.extend_from_slice(&self.point.code().to_le_bytes());
        out.extend_from_slice(&self.stamp.to_le_bytes());
        out.push(self.payload.width_byte());
        out.extend_from_slice(&(self.payload.items() as u32).to_le_bytes());
        out.extend_from_slice(&body);
        out
    }

    /// Payload length announced by a header.
    pub fn body_len(header: &[u8; HEADER_LEN]) -> usize {
        u32::from_le_bytes(header[1..5].try_into().unwrap()) as usize
    }

    pub fn decode(bytes: &[u8]) -> Result<Frame, FrameError> {
        if bytes.len() < HEADER_LEN {
            return Err(FrameError::Truncated);
        }
        let header: &[u8; HEADER_LEN] = bytes[..HEADER_LEN].try_into().unwrap();
        let len = Self::body_len(header);
        if bytes.len() != HEADER_LEN + len {
            return Err(FrameError::Truncated);
        }
        let phase = match header[5] {
            0 => Phase::Offline,
            1 => Phase::Online,
            2 => Phase::Output,
            p => return Err(FrameError::Phase(p)),
        };
        let code = u16::from_le_bytes([header[6], header[7]]);
        let point = Point::from_code(code).ok_or(FrameError::Point(code))?;
        let stamp = u32::from_le_bytes(header[8..12].try_into().unwrap());
        let count = u32::from_le_bytes(header[13..17].try_into().unwrap()) as usize;
        let payload = Payload::decode(header[0], header[12], count, &bytes[HEADER_LEN..])?;
        Ok(Frame {
            phase,
            point,
            stamp,
            payload,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{commit, hash_digest};

    fn roundtrip(p: Payload) {
        let f = Frame {
            phase: Phase::Online,
            point: Point::MulMz,
            stamp: 7,
            payload: p,
        };
        let bytes = f.encode();
        assert_eq!(bytes.len(), HEADER_LEN + f.payload.body().len());
        assert_eq!(Frame::decode(&bytes).unwrap(), f);
    }

    #[test]
    fn all_payload_kinds_roundtrip() {
        let (c, o) = commit(b"x", [1; 32]);
        roundtrip(Payload::elements(Width::W32, vec![RingElement::new(5, Width::W32); 3]));
        roundtrip(Payload::elements(Width::BIT, vec![RingElement::from_bool(true); 9]));
        roundtrip(Payload::elements(Width::W64, vec![]));
        roundtrip(Payload::Digests(vec![hash_digest(b"a"), hash_digest(b"b")]));
        roundtrip(Payload::Commitments(vec![c]));
        roundtrip(Payload::Openings(vec![o.clone(), o.clone()]));
        roundtrip(Payload::Signal(Signal::Continue));
        roundtrip(Payload::Signal(Signal::Abort(None)));
        roundtrip(Payload::Signal(Signal::Abort(Some(o))));
        roundtrip(Payload::Abort("check failed".into()));
    }

    #[test]
    fn malformed_frames_are_rejected() {
        let f = Frame {
            phase: Phase::Offline,
            point: Point::Test,
            stamp: 1,
            payload: Payload::elements(Width::W32, vec![RingElement::zero(Width::W32)]),
        };
        let mut bytes = f.encode();
        assert_eq!(Frame::decode(&bytes[..HEADER_LEN + 2]), Err(FrameError::Truncated));
        bytes[0] = 42;
        assert_eq!(Frame::decode(&bytes), Err(FrameError::Kind(42)));
        let mut bytes = f.encode();
        bytes[5] = 9;
        assert_eq!(Frame::decode(&bytes), Err(FrameError::Phase(9)));
    }

    #[test]
    fn element_bits_and_categories() {
        let p = Payload::elements(Width::W64, vec![RingElement::zero(Width::W64); 3]);
        assert_eq!((p.items(), p.bits(), p.category()), (3, 192, Category::RingElements));
        let b = Payload::elements(Width::BIT, vec![RingElement::from_bool(false); 2]);
        assert_eq!(b.bits(), 2);
        assert_eq!(Payload::Signal(Signal::Continue).category(), Category::Control);
    }
}
