use std::io::{self, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::sync::mpsc::{channel, Sender};
use std::thread;
use std::time::{Duration, Instant};

use super::endpoint::{Links, Sink};
use super::frame::{Frame, HEADER_LEN, MAX_PAYLOAD};
use crate::party::PartyId;

struct StreamSink(TcpStream);

impl Sink for StreamSink {
    fn send_frame(&mut self, bytes: Vec<u8>) -> io::Result<()> {
        self.0.write_all(&bytes)
    }

    fn close(&mut self) {
        let _ = self.0.shutdown(Shutdown::Write);
    }
}

/// How one party joins the TCP mesh. Lower ids listen, higher ids dial.
pub struct TcpPlan {
    pub me: PartyId,
    /// Required unless `me` is `P2`, which only dials.
    pub listener: Option<TcpListener>,
    /// Listening address of every party; entries for higher ids are unused.
    pub peers: [SocketAddr; 3],
    pub connect_timeout: Duration,
}

fn reader(mut stream: TcpStream, tx: Sender<Vec<u8>>) {
    loop {
        let mut header = [0u8; HEADER_LEN];
        if stream.read_exact(&mut header).is_err() {
            return;
        }
        let len = Frame::body_len(&header);
        if len > MAX_PAYLOAD {
            return;
        }
        let mut frame = header.to_vec();
        frame.resize(HEADER_LEN + len, 0);
        if stream.read_exact(&mut frame[HEADER_LEN..]).is_err() || tx.send(frame).is_err() {
            return;
        }
    }
}

fn dial(addr: SocketAddr, deadline: Instant) -> io::Result<TcpStream> {
    loop {
        match TcpStream::connect(addr) {
            Ok(s) => return Ok(s),
            Err(e) if Instant::now() >= deadline => return Err(e),
            Err(_) => thread::sleep(Duration::from_millis(20)),
        }
    }
}

/// Connects `plan.me` to both peers; one duplex connection per pair.
pub fn tcp_links(plan: TcpPlan) -> io::Result<Links> {
    let me = plan.me;
    let deadline = Instant::now() + plan.connect_timeout;
    let mut streams: [Option<TcpStream>; 3] = Default::default();
    for peer in me.others().into_iter().filter(|p| *p < me) {
        let mut s = dial(plan.peers[peer.index()], deadline)?;
        s.write_all(&[me.index() as u8])?;
        streams[peer.index()] = Some(s);
    }
    let higher = me.others().into_iter().filter(|p| *p > me).count();
    if higher > 0 {
        let listener = plan
            .listener
            .as_ref()
            .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "listener required"))?;
        for _ in 0..higher {
            let (mut s, _) = listener.accept()?;
            let mut id = [0u8];
            s.read_exact(&mut id)?;
            let peer = PartyId::from_index(id[0] as usize)
                .filter(|p| *p > me && streams[p.index()].is_none())
                .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "unexpected peer id"))?;
            streams[peer.index()] = Some(s);
        }
    }
    let mut links = Links::default();
    for peer in me.others() {
        let s = streams[peer.index()].take().expect("connected above");
        s.set_nodelay(true)?;
        let (tx, rx) = channel();
        let rs = s.try_clone()?;
        thread::spawn(move || reader(rs, tx));
        links.sinks[peer.index()] = Some(Box::new(StreamSink(s)));
        links.sources[peer.index()] = Some(rx);
    }
    Ok(links)
}
