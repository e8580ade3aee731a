use std::io;
use std::sync::mpsc::{channel, Sender};

use super::endpoint::{Links, Sink};
use crate::party::PartyId;

struct ChannelSink(Sender<Vec<u8>>);

impl Sink for ChannelSink {
    fn send_frame(&mut self, bytes: Vec<u8>) -> io::Result<()> {
        self.0
            .send(bytes)
            .map_err(|_| io::Error::new(io::ErrorKind::BrokenPipe, "peer endpoint dropped"))
    }
}

/// In-process links for all three parties, indexed by party.
pub fn memory_links() -> [Links; 3] {
    let mut links: [Links; 3] = Default::default();
    for a in PartyId::ALL {
        for b in a.others() {
            let (tx, rx) = channel();
            links[a.index()].sinks[b.index()] = Some(Box::new(ChannelSink(tx)));
            links[b.index()].sources[a.index()] = Some(rx);
        }
    }
    links
}
