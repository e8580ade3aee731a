use std::collections::{HashMap, VecDeque};
use std::io;
use std::sync::mpsc::{Receiver, RecvTimeoutError};
use std::time::{Duration, Instant};

use thiserror::Error;

use super::frame::{Frame, Payload, Phase};
use super::meter::CommMeter;
use super::point::Point;
use crate::crypto::{Digest, Opening};
use crate::fault::FaultDirective;
use crate::party::PartyId;
use crate::ring::{RingElement, Width};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransportError {
    #[error("{0} disconnected")]
    Disconnected(PartyId),
    #[error("timed out waiting for {0}")]
    Timeout(PartyId),
    #[error("{peer} aborted: {reason}")]
    PeerAborted { peer: PartyId, reason: String },
    #[error("framing error from {peer} at {point}: {msg}")]
    Framing { peer: PartyId, point: Point, msg: String },
    #[error("i/o: {0}")]
    Io(String),
}

pub(crate) trait Sink: Send {
    fn send_frame(&mut self, bytes: Vec<u8>) -> io::Result<()>;
    fn close(&mut self) {}
}

/// Raw per-peer channels of one party, indexed by peer id.
#[derive(Default)]
pub struct Links {
    pub(crate) sinks: [Option<Box<dyn Sink>>; 3],
    pub(crate) sources: [Option<Receiver<Vec<u8>>>; 3],
}

/// One party's connection to its two peers.
///
/// Messages are addressed by protocol point; frames that arrive for another point
/// wait in a per-(peer, point) mailbox. Each frame carries a dependency stamp: a
/// send is stamped one past the largest stamp received so far in the phase.
pub struct Endpoint {
    id: PartyId,
    links: Links,
    mailbox: HashMap<(PartyId, Point), VecDeque<Frame>>,
    phase: Phase,
    clock: [u32; 3],
    timeout: Duration,
    meter: CommMeter,
    faults: Vec<FaultDirective>,
    evidence: [Option<Opening>; 3],
    aborted: [Option<String>; 3],
    phase_since: Instant,
    phase_time: [Duration; 3],
}

impl Endpoint {
    pub fn new(id: PartyId, links: Links) -> Self {
        Endpoint {
            id,
            links,
            mailbox: HashMap::new(),
            phase: Phase::Offline,
            clock: [0; 3],
            timeout: DEFAULT_TIMEOUT,
            meter: CommMeter::new(id),
            faults: Vec::new(),
            evidence: Default::default(),
            aborted: Default::default(),
            phase_since: Instant::now(),
            phase_time: [Duration::ZERO; 3],
        }
    }

    pub fn id(&self) -> PartyId {
        self.id
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn set_phase(&mut self, phase: Phase) {
        let now = Instant::now();
        self.phase_time[self.phase.index()] += now - self.phase_since;
        self.phase_since = now;
        self.phase = phase;
    }

    /// Wall-clock time spent in each phase so far, the current one included.
    pub fn phase_times(&self) -> [Duration; 3] {
        let mut t = self.phase_time;
        t[self.phase.index()] += self.phase_since.elapsed();
        t
    }

    pub fn set_timeout(&mut self, t: Duration) {
        self.timeout = t;
    }

    /// Installs deviations for this party; directives for other parties are ignored.
    pub fn set_faults(&mut self, faults: Vec<FaultDirective>) {
        self.faults = faults.into_iter().filter(|d| d.party == self.id).collect();
    }

    /// What a forged abort toward `peer` would carry.
    pub fn set_evidence(&mut self, peer: PartyId, opening: Option<Opening>) {
        self.evidence[peer.index()] = opening;
    }

    /// Current dependency layer in `phase`: the stamp the next send would carry minus one.
    pub fn round_mark(&self, phase: Phase) -> u32 {
        self.clock[phase.index()]
    }

    pub fn meter(&self) -> &CommMeter {
        &self.meter
    }

    pub fn send(&mut self, peer: PartyId, point: Point, mut payload: Payload) -> Result<(), TransportError> {
        assert_ne!(peer, self.id, "send to self");
        for d in &self.faults {
            if d.matches(self.id, peer, point) && !d.apply(&mut payload, self.evidence[peer.index()].as_ref()) {
                return Ok(());
            }
        }
        let frame = Frame {
            phase: self.phase,
            point,
            stamp: self.clock[self.phase.index()] + 1,
            payload,
        };
        let bytes = frame.encode();
        self.meter.record_send(peer, &frame, &bytes);
        let sink = self.links.sinks[peer.index()]
            .as_mut()
            .ok_or(TransportError::Disconnected(peer))?;
        sink.send_frame(bytes).map_err(|_| TransportError::Disconnected(peer))
    }

    pub fn send_elements(
        &mut self,
        peer: PartyId,
        point: Point,
        width: Width,
        elems: Vec<RingElement>,
    ) -> Result<(), TransportError> {
        self.send(peer, point, Payload::elements(width, elems))
    }

    pub fn send_digest(&mut self, peer: PartyId, point: Point, d: Digest) -> Result<(), TransportError> {
        self.send(peer, point, Payload::Digests(vec![d]))
    }

    /// Tells both peers this party has aborted. Delivery is best effort.
    pub fn notify_abort(&mut self, reason: &str) {
        for peer in self.id.others() {
            let _ = self.send(peer, Point::Abort, Payload::Abort(reason.to_string()));
        }
    }

    /// Next message from `peer` at `point`, in send order.
    pub fn recv(&mut self, peer: PartyId, point: Point) -> Result<Payload, TransportError> {
        if let Some(f) = self.mailbox.get_mut(&(peer, point)).and_then(VecDeque::pop_front) {
            return Ok(self.deliver(f));
        }
        loop {
            if let Some(reason) = &self.aborted[peer.index()] {
                return Err(TransportError::PeerAborted {
                    peer,
                    reason: reason.clone(),
                });
            }
            let source = self.links.sources[peer.index()]
                .as_ref()
                .ok_or(TransportError::Disconnected(peer))?;
            let bytes = match source.recv_timeout(self.timeout) {
                Ok(b) => b,
                Err(RecvTimeoutError::Timeout) => return Err(TransportError::Timeout(peer)),
                Err(RecvTimeoutError::Disconnected) => return Err(TransportError::Disconnected(peer)),
            };
            let frame = Frame::decode(&bytes).map_err(|e| TransportError::Framing {
                peer,
                point,
                msg: e.to_string(),
            })?;
            self.meter.record_recv(peer, &frame);
            if let Payload::Abort(reason) = &frame.payload {
                self.aborted[peer.index()] = Some(reason.clone());
                continue;
            }
            if frame.point == point {
                return Ok(self.deliver(frame));
            }
            self.mailbox.entry((peer, frame.point)).or_default().push_back(frame);
        }
    }

    fn deliver(&mut self, f: Frame) -> Payload {
        let c = &mut self.clock[f.phase.index()];
        *c = (*c).max(f.stamp);
        f.payload
    }

    pub fn recv_elements(
        &mut self,
        peer: PartyId,
        point: Point,
        width: Width,
        count: usize,
    ) -> Result<Vec<RingElement>, TransportError> {
        match self.recv(peer, point)? {
            Payload::Elements { width: w, elems } if w == width && elems.len() == count => Ok(elems),
            Payload::Elements { width: w, elems } => Err(TransportError::Framing {
                peer,
                point,
                msg: format!(
                    "expected {count} elements of width {width}, got {} of width {w}",
                    elems.len()
                ),
            }),
            other => Err(self.type_error(peer, point, "elements", &other)),
        }
    }

    pub fn recv_digest(&mut self, peer: PartyId, point: Point) -> Result<Digest, TransportError> {
        match self.recv(peer, point)? {
            Payload::Digests(ds) if ds.len() == 1 => Ok(ds[0]),
            other => Err(self.type_error(peer, point, "one digest", &other)),
        }
    }

    pub(crate) fn type_error(&self, peer: PartyId, point: Point, want: &str, got: &Payload) -> TransportError {
        TransportError::Framing {
            peer,
            point,
            msg: format!("expected {want}, got {} ({} items)", got.type_name(), got.items()),
        }
    }
}

impl Drop for Endpoint {
    fn drop(&mut self) {
        for s in self.links.sinks.iter_mut().flatten() {
            s.close();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::{memory_links, Category, Signal};
    use rand::{Rng, SeedableRng};
    use std::thread;

    fn endpoints() -> [Endpoint; 3] {
        let [a, b, c] = memory_links();
        [
            Endpoint::new(PartyId::P0, a),
            Endpoint::new(PartyId::P1, b),
            Endpoint::new(PartyId::P2, c),
        ]
    }

    #[test]
    fn element_send_is_metered() {
        let [mut p0, mut p1, _] = endpoints();
        let x = RingElement::new(7, Width::W32);
        p0.send_elements(PartyId::P1, Point::Test, Width::W32, vec![x]).unwrap();
        assert_eq!(
            p0.meter()
                .sent(Phase::Offline, PartyId::P1, Category::RingElements)
                .bytes,
            4
        );
        assert_eq!(
            p1.recv_elements(PartyId::P0, Point::Test, Width::W32, 1).unwrap(),
            vec![x]
        );
        let d = crate::crypto::hash_digest(b"x");
        p1.send_digest(PartyId::P0, Point::Test, d).unwrap();
        assert_eq!(
            p1.meter().sent(Phase::Offline, PartyId::P0, Category::Digests).bytes,
            32
        );
        assert_eq!(p0.recv_digest(PartyId::P1, Point::Test).unwrap(), d);
    }

    #[test]
    fn mailbox_reorders_by_point_and_keeps_fifo() {
        let [mut p0, mut p1, mut p2] = endpoints();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let w = Width::W64;
        let mut expect: Vec<(PartyId, Point, u64)> = Vec::new();
        for i in 0..200u64 {
            let (src, pt) = if rng.gen() {
                (&mut p0, Point::Test)
            } else {
                (&mut p2, Point::MulMz)
            };
            let point = if rng.gen_bool(0.5) { pt } else { Point::RecShare };
            src.send_elements(PartyId::P1, point, w, vec![RingElement::new(i, w)])
                .unwrap();
            expect.push((src.id(), point, i));
        }
        for pt in [Point::RecShare, Point::MulMz, Point::Test] {
            for from in [PartyId::P0, PartyId::P2] {
                for &(f, p, v) in &expect {
                    if f == from && p == pt {
                        let got = p1.recv_elements(from, pt, w, 1).unwrap();
                        assert_eq!(got[0].value(), v);
                    }
                }
            }
        }
    }

    #[test]
    fn stamps_count_dependency_layers() {
        let [mut p0, mut p1, mut p2] = endpoints();
        let w = Width::W32;
        let z = || vec![RingElement::zero(w)];
        assert_eq!(p0.meter().rounds(Phase::Offline), 0);
        p1.send_elements(PartyId::P2, Point::Test, w, z()).unwrap();
        p2.send_elements(PartyId::P1, Point::Test, w, z()).unwrap();
        p1.recv(PartyId::P2, Point::Test).unwrap();
        p2.recv(PartyId::P1, Point::Test).unwrap();
        assert_eq!(p1.meter().rounds(Phase::Offline), 1);
        p1.send_elements(PartyId::P0, Point::Test, w, z()).unwrap();
        p0.recv(PartyId::P1, Point::Test).unwrap();
        p0.send_elements(PartyId::P2, Point::Test, w, z()).unwrap();
        assert_eq!(p1.meter().rounds(Phase::Offline), 2);
        assert_eq!(p0.meter().rounds(Phase::Offline), 3);
        assert_eq!(p0.round_mark(Phase::Offline), 2);
        assert_eq!(p0.meter().rounds(Phase::Online), 0);
    }

    #[test]
    fn abort_and_disconnect_are_distinct() {
        let [mut p0, mut p1, p2] = endpoints();
        p0.notify_abort("bad digest");
        match p1.recv(PartyId::P0, Point::Test) {
            Err(TransportError::PeerAborted { peer, reason }) => {
                assert_eq!(peer, PartyId::P0);
                assert_eq!(reason, "bad digest");
            }
            other => panic!("unexpected {other:?}"),
        }
        drop(p2);
        assert_eq!(
            p1.recv(PartyId::P2, Point::Test),
            Err(TransportError::Disconnected(PartyId::P2))
        );
    }

    #[test]
    fn type_mismatch_is_a_framing_error() {
        let [mut p0, mut p1, _] = endpoints();
        p0.send(PartyId::P1, Point::Test, Payload::Signal(Signal::Continue))
            .unwrap();
        assert!(matches!(
            p1.recv_elements(PartyId::P0, Point::Test, Width::W32, 1),
            Err(TransportError::Framing { .. })
        ));
        p0.send_elements(PartyId::P1, Point::Test, Width::W64, vec![]).unwrap();
        assert!(matches!(
            p1.recv_elements(PartyId::P0, Point::Test, Width::W32, 0),
            Err(TransportError::Framing { .. })
        ));
    }

    #[test]
    fn timeout_surfaces() {
        let [_p0, mut p1, _p2] = endpoints();
        p1.set_timeout(Duration::from_millis(20));
        assert_eq!(
            p1.recv(PartyId::P0, Point::Test),
            Err(TransportError::Timeout(PartyId::P0))
        );
    }

    #[test]
    fn full_duplex_exchange_does_not_block() {
        let [_, p1, p2] = endpoints();
        let w = Width::W64;
        let h = thread::spawn(move || {
            let mut p2 = p2;
            p2.send_elements(PartyId::P1, Point::MulMz, w, vec![RingElement::one(w); 1000])
                .unwrap();
            p2.recv_elements(PartyId::P1, Point::MulMz, w, 1000).unwrap()
        });
        let mut p1 = p1;
        p1.send_elements(PartyId::P2, Point::MulMz, w, vec![RingElement::zero(w); 1000])
            .unwrap();
        let got = p1.recv_elements(PartyId::P2, Point::MulMz, w, 1000).unwrap();
        assert_eq!(got[0], RingElement::one(w));
        assert_eq!(h.join().unwrap()[0], RingElement::zero(w));
    }
}
