//! Communication accounting.
//!
//! Each endpoint meters what it sends and receives, per phase, peer and category,
//! plus per protocol point. Rounds are the largest dependency stamp sent in a phase.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::AddAssign;

use super::frame::{Category, Frame, Phase, HEADER_LEN};
use super::point::Point;
use crate::crypto::{Digest, DigestBuilder};
use crate::party::PartyId;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counter {
    pub messages: u64,
    pub items: u64,
    pub bytes: u64,
    pub bits: u64,
}

impl AddAssign for Counter {
    fn add_assign(&mut self, o: Counter) {
        self.messages += o.messages;
        self.items += o.items;
        self.bytes += o.bytes;
        self.bits += o.bits;
    }
}

impl Counter {
    fn of(frame: &Frame) -> Counter {
        Counter {
            messages: 1,
            items: frame.payload.items(),
            bytes: frame.payload.body().len() as u64,
            bits: frame.payload.bits(),
        }
    }
}

type Key = (Phase, PartyId, Category);

#[derive(Clone)]
pub struct CommMeter {
    party: PartyId,
    sent: BTreeMap<Key, Counter>,
    received: BTreeMap<Key, Counter>,
    labels: BTreeMap<(Phase, Point), Counter>,
    rounds: [u32; 3],
    transcripts: BTreeMap<PartyId, DigestBuilder>,
}

impl CommMeter {
    pub fn new(party: PartyId) -> Self {
        CommMeter {
            party,
            sent: BTreeMap::new(),
            received: BTreeMap::new(),
            labels: BTreeMap::new(),
            rounds: [0; 3],
            transcripts: BTreeMap::new(),
        }
    }

    pub fn party(&self) -> PartyId {
        self.party
    }

    fn account(map: &mut BTreeMap<Key, Counter>, peer: PartyId, frame: &Frame) {
        *map.entry((frame.phase, peer, frame.payload.category())).or_default() += Counter::of(frame);
        // framing overhead lands under control, without items
        map.entry((frame.phase, peer, Category::Control)).or_default().bytes += HEADER_LEN as u64;
    }

    pub(crate) fn record_send(&mut self, peer: PartyId, frame: &Frame, encoded: &[u8]) {
        Self::account(&mut self.sent, peer, frame);
        *self.labels.entry((frame.phase, frame.point)).or_default() += Counter::of(frame);
        let r = &mut self.rounds[frame.phase.index()];
        *r = (*r).max(frame.stamp);
        self.transcripts.entry(peer).or_default().update_bytes(encoded);
    }

    pub(crate) fn record_recv(&mut self, peer: PartyId, frame: &Frame) {
        Self::account(&mut self.received, peer, frame);
    }

    pub fn sent(&self, phase: Phase, peer: PartyId, cat: Category) -> Counter {
        self.sent.get(&(phase, peer, cat)).copied().unwrap_or_default()
    }

    pub fn received(&self, phase: Phase, peer: PartyId, cat: Category) -> Counter {
        self.received.get(&(phase, peer, cat)).copied().unwrap_or_default()
    }

    pub fn label(&self, phase: Phase, point: Point) -> Counter {
        self.labels.get(&(phase, point)).copied().unwrap_or_default()
    }

    pub fn rounds(&self, phase: Phase) -> u32 {
        self.rounds[phase.index()]
    }

    pub fn transcript(&self, peer: PartyId) -> Digest {
        self.transcripts.get(&peer).cloned().unwrap_or_default().finish()
    }
}

/// Aggregate of the three parties' meters.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MeterReport {
    /// Keyed by (phase, sender, receiver, category).
    pub sent: BTreeMap<(Phase, PartyId, PartyId, Category), Counter>,
    pub received: BTreeMap<(Phase, PartyId, PartyId, Category), Counter>,
    pub labels: BTreeMap<(Phase, Point), Counter>,
    pub rounds: [u32; 3],
    /// Hash of every frame sent on each directed link.
    pub transcripts: BTreeMap<(PartyId, PartyId), Digest>,
}

impl MeterReport {
    pub fn from_meters<'a>(meters: impl IntoIterator<Item = &'a CommMeter>) -> Self {
        let mut r = MeterReport::default();
        for m in meters {
            for (&(ph, peer, cat), c) in &m.sent {
                *r.sent.entry((ph, m.party, peer, cat)).or_default() += *c;
            }
            for (&(ph, peer, cat), c) in &m.received {
                *r.received.entry((ph, peer, m.party, cat)).or_default() += *c;
            }
            for (&k, c) in &m.labels {
                *r.labels.entry(k).or_default() += *c;
            }
            for ph in Phase::ALL {
                r.rounds[ph.index()] = r.rounds[ph.index()].max(m.rounds(ph));
            }
            for peer in m.party.others() {
                r.transcripts.insert((m.party, peer), m.transcript(peer));
            }
        }
        r
    }

    pub fn total(&self, phase: Phase, cat: Category) -> Counter {
        let mut c = Counter::default();
        for (&(ph, _, _, ct), v) in &self.sent {
            if ph == phase && ct == cat {
                c += *v;
            }
        }
        c
    }

    /// Ring elements sent in `phase`, all parties.
    pub fn elements(&self, phase: Phase) -> u64 {
        self.total(phase, Category::RingElements).items
    }

    /// Ring-element bits sent in `phase`, all parties.
    pub fn element_bits(&self, phase: Phase) -> u64 {
        self.total(phase, Category::RingElements).bits
    }

    pub fn label(&self, phase: Phase, point: Point) -> Counter {
        self.labels.get(&(phase, point)).copied().unwrap_or_default()
    }

    pub fn label_items(&self, phase: Phase, points: &[Point]) -> u64 {
        points.iter().map(|p| self.label(phase, *p).items).sum()
    }

    pub fn rounds(&self, phase: Phase) -> u32 {
        self.rounds[phase.index()]
    }

    /// All bytes on the directed link, framing included.
    pub fn pair_bytes(&self, from: PartyId, to: PartyId) -> u64 {
        self.sent
            .iter()
            .filter(|(&(_, f, t, _), _)| f == from && t == to)
            .map(|(_, c)| c.bytes)
            .sum()
    }

    /// Bytes counted at the sender equal bytes counted at the receiver on every link.
    pub fn conservation_holds(&self) -> bool {
        self.sent == self.received
    }

    /// Machine-readable `key=value` lines.
    pub fn key_values(&self) -> Vec<(String, String)> {
        let mut kv = Vec::new();
        for ph in Phase::ALL {
            let p = ph.name();
            kv.push((format!("{p}.rounds"), self.rounds(ph).to_string()));
            for cat in Category::ALL {
                let c = self.total(ph, cat);
                let n = cat.name();
                kv.push((format!("{p}.{n}.items"), c.items.to_string()));
                kv.push((format!("{p}.{n}.bytes"), c.bytes.to_string()));
                if cat == Category::RingElements {
                    kv.push((format!("{p}.{n}.bits"), c.bits.to_string()));
                }
            }
        }
        for (&(ph, point), c) in &self.labels {
            kv.push((
                format!("{}.point.{}.items", ph.name(), point.name()),
                c.items.to_string(),
            ));
        }
        for from in PartyId::ALL {
            for to in from.others() {
                kv.push((format!("link.{from}-{to}.bytes"), self.pair_bytes(from, to).to_string()));
            }
        }
        for (&(f, t), d) in &self.transcripts {
            kv.push((format!("transcript.{f}-{t}"), d.to_string()));
        }
        kv
    }

    /// Human-readable table keyed by phase and category.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for ph in Phase::ALL {
            let _ = writeln!(s, "[{}] rounds={}", ph.name(), self.rounds(ph));
            for cat in Category::ALL {
                let c = self.total(ph, cat);
                if c == Counter::default() {
                    continue;
                }
                let _ = writeln!(
                    s,
                    "  {:<14} items={:<10} bytes={:<12} messages={}",
                    cat.name(),
                    c.items,
                    c.bytes,
                    c.messages
                );
            }
            for (&(p, point), c) in &self.labels {
                if p == ph {
                    let _ = writeln!(s, "    {:<20} items={}", point.name(), c.items);
                }
            }
        }
        let _ = writeln!(s, "[links] bytes per directed pair");
        for from in PartyId::ALL {
            for to in from.others() {
                let _ = writeln!(s, "  {from}->{to} {}", self.pair_bytes(from, to));
            }
        }
        s
    }
}
