//! Scripted deviations, applied to outgoing messages of a corrupted party.
//!
//! One directive per line:
//!
//! ```text
//! point=mul.chi party=1 op=add-delta value=1
//! point=frec.signal party=0 op=replace value=0 to=2
//! ```
//!
//! `to=<peer>` restricts a directive to one recipient and `index=<i>` picks the
//! tampered item (default 0). Lines starting with `#` are comments.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::crypto::Opening;
use crate::party::PartyId;
use crate::ring::RingElement;
use crate::transport::{Payload, Point, Signal};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("fault script line {line}: {msg}")]
pub struct FaultParseError {
    pub line: usize,
    pub msg: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaultOp {
    AddDelta,
    Replace,
    Drop,
}

impl FaultOp {
    fn name(self) -> &'static str {
        match self {
            FaultOp::AddDelta => "add-delta",
            FaultOp::Replace => "replace",
            FaultOp::Drop => "drop",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FaultDirective {
    pub point: Point,
    pub party: PartyId,
    pub op: FaultOp,
    pub value: u64,
    pub to: Option<PartyId>,
    pub index: usize,
}

impl FaultDirective {
    pub fn new(point: Point, party: PartyId, op: FaultOp, value: u64) -> Self {
        FaultDirective {
            point,
            party,
            op,
            value,
            to: None,
            index: 0,
        }
    }

    pub fn to(mut self, peer: PartyId) -> Self {
        self.to = Some(peer);
        self
    }

    pub fn at(mut self, index: usize) -> Self {
        self.index = index;
        self
    }

    pub fn matches(&self, sender: PartyId, peer: PartyId, point: Point) -> bool {
        self.party == sender && self.point == point && self.to.is_none_or(|t| t == peer)
    }

    /// Rewrites `payload`; returns false when the message is to be dropped.
    /// `evidence` is what the sender could attach to a forged abort.
    pub fn apply(&self, payload: &mut Payload, evidence: Option<&Opening>) -> bool {
        let i = self.index;
        let v = self.value;
        match (self.op, payload) {
            (FaultOp::Drop, _) => return false,
            (op, Payload::Elements { width, elems }) => {
                if let Some(e) = elems.get_mut(i) {
                    let val = RingElement::new(v, *width);
                    *e = if op == FaultOp::AddDelta { *e + val } else { val };
                }
            }
            (op, Payload::Digests(ds)) => {
                if let Some(d) = ds.get_mut(i) {
                    tamper_bytes(op, &mut d.0, v);
                }
            }
            (op, Payload::Commitments(cs)) => {
                if let Some(c) = cs.get_mut(i) {
                    tamper_bytes(op, &mut c.0 .0, v);
                }
            }
            (op, Payload::Openings(os)) => {
                if let Some(o) = os.get_mut(i) {
                    if o.payload.is_empty() {
                        tamper_bytes(op, &mut o.randomness, v);
                    } else {
                        tamper_bytes(op, &mut o.payload, v);
                    }
                }
            }
            (_, Payload::Signal(s)) => {
                *s = Signal::Abort(evidence.cloned());
            }
            (_, Payload::Abort(_)) => {}
        }
        true
    }
}

fn tamper_bytes(op: FaultOp, bytes: &mut [u8], v: u64) {
    let n = bytes.len().min(8);
    let vb = v.to_le_bytes();
    for k in 0..n {
        match op {
            FaultOp::AddDelta => bytes[k] ^= vb[k],
            _ => bytes[k] = vb[k],
        }
    }
    if op == FaultOp::AddDelta && v == 0 && !bytes.is_empty() {
        bytes[0] ^= 1;
    }
}

impl fmt::Display for FaultDirective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "point={} party={} op={} value={:x}",
            self.point,
            self.party.index(),
            self.op.name(),
            self.value
        )?;
        if let Some(t) = self.to {
            write!(f, " to={}", t.index())?;
        }
        if self.index != 0 {
            write!(f, " index={}", self.index)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FaultScript {
    pub directives: Vec<FaultDirective>,
}

impl FaultScript {
    pub fn new(directives: Vec<FaultDirective>) -> Self {
        FaultScript { directives }
    }

    pub fn single(d: FaultDirective) -> Self {
        FaultScript { directives: vec![d] }
    }

    pub fn is_empty(&self) -> bool {
        self.directives.is_empty()
    }

    /// Parties named by at least one directive.
    pub fn corrupted(&self) -> Vec<PartyId> {
        let mut ps: Vec<_> = self.directives.iter().map(|d| d.party).collect();
        ps.sort();
        ps.dedup();
        ps
    }

    pub fn for_party(&self, p: PartyId) -> Vec<FaultDirective> {
        self.directives.iter().filter(|d| d.party == p).cloned().collect()
    }
}

impl fmt::Display for FaultScript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.directives {
            writeln!(f, "{d}")?;
        }
        Ok(())
    }
}

impl FromStr for FaultScript {
    type Err = FaultParseError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut directives = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| FaultParseError { line: n + 1, msg };
            let (mut point, mut party, mut op, mut value) = (None, None, None, None);
            let (mut to, mut index) = (None, 0usize);
            for tok in line.split_whitespace() {
                let (k, v) = tok
                    .split_once('=')
                    .ok_or_else(|| err(format!("expected key=value, got `{tok}`")))?;
                let party_of = |v: &str| {
                    v.parse::<usize>()
                        .ok()
                        .and_then(PartyId::from_index)
                        .ok_or_else(|| err(format!("bad party `{v}`")))
                };
                match k {
                    "point" => point = Some(v.parse::<Point>().map_err(err)?),
                    "party" => party = Some(party_of(v)?),
                    "to" => to = Some(party_of(v)?),
                    "op" => {
                        op = Some(match v {
                            "add-delta" => FaultOp::AddDelta,
                            "replace" => FaultOp::Replace,
                            "drop" => FaultOp::Drop,
                            _ => return Err(err(format!("bad op `{v}`"))),
                        })
                    }
                    "value" => {
                        let digits = v.trim_start_matches("0x");
                        value = Some(u64::from_str_radix(digits, 16).map_err(|_| err(format!("bad hex value `{v}`")))?)
                    }
                    "index" => index = v.parse().map_err(|_| err(format!("bad index `{v}`")))?,
                    _ => return Err(err(format!("unknown key `{k}`"))),
                }
            }
            let missing = |what: &str| err(format!("missing {what}"));
            directives.push(FaultDirective {
                point: point.ok_or_else(|| missing("point"))?,
                party: party.ok_or_else(|| missing("party"))?,
                op: op.ok_or_else(|| missing("op"))?,
                value: value.unwrap_or(0),
                to,
                index,
            });
        }
        Ok(FaultScript { directives })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::Width;

    #[test]
    fn parse_and_print_roundtrip() {
        let text = "# catalog\npoint=mul.chi party=1 op=add-delta value=1\n\npoint=frec.signal party=0 op=replace value=0x0 to=2\npoint=rec.share party=1 op=drop index=3\n";
        let s: FaultScript = text.parse().unwrap();
        assert_eq!(s.directives.len(), 3);
        assert_eq!(s.directives[1].to, Some(PartyId::P2));
        assert_eq!(s.directives[2].index, 3);
        assert_eq!(s.to_string().parse::<FaultScript>().unwrap(), s);
        assert_eq!(s.corrupted(), vec![PartyId::P0, PartyId::P1]);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let e = "point=mul.chi party=1 op=add-delta\npoint=bogus party=1 op=drop"
            .parse::<FaultScript>()
            .unwrap_err();
        assert_eq!(e.line, 2);
        assert!("point=mul.chi party=5 op=drop".parse::<FaultScript>().is_err());
        assert!("point=mul.chi op=drop".parse::<FaultScript>().is_err());
    }

    #[test]
    fn element_tampering() {
        let w = Width::W32;
        let mut p = Payload::elements(w, vec![RingElement::new(5, w), RingElement::new(6, w)]);
        let d = FaultDirective::new(Point::MulMz, PartyId::P1, FaultOp::AddDelta, 1).at(1);
        assert!(d.apply(&mut p, None));
        assert_eq!(
            p,
            Payload::elements(w, vec![RingElement::new(5, w), RingElement::new(7, w)])
        );
        let r = FaultDirective::new(Point::MulMz, PartyId::P1, FaultOp::Replace, 9);
        r.apply(&mut p, None);
        assert_eq!(
            p,
            Payload::elements(w, vec![RingElement::new(9, w), RingElement::new(7, w)])
        );
        let drop = FaultDirective::new(Point::MulMz, PartyId::P1, FaultOp::Drop, 0);
        assert!(!drop.apply(&mut p, None));
    }

    #[test]
    fn signal_forgery_uses_evidence() {
        let (_, o) = crate::crypto::commit(b"r", [3; 32]);
        let mut p = Payload::Signal(Signal::Continue);
        FaultDirective::new(Point::FairSignal, PartyId::P0, FaultOp::Replace, 0).apply(&mut p, Some(&o));
        assert_eq!(p, Payload::Signal(Signal::Abort(Some(o))));
    }

    #[test]
    fn recipient_filter() {
        let d = FaultDirective::new(Point::FairSignal, PartyId::P0, FaultOp::Replace, 0).to(PartyId::P2);
        assert!(d.matches(PartyId::P0, PartyId::P2, Point::FairSignal));
        assert!(!d.matches(PartyId::P0, PartyId::P1, Point::FairSignal));
        assert!(!d.matches(PartyId::P1, PartyId::P2, Point::FairSignal));
    }
}
