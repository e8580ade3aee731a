//! Runs a protocol at all three parties, one thread each.

use std::io;
use std::net::{SocketAddr, TcpListener};
use std::thread;
use std::time::{Duration, Instant};

use super::check::Backdoor;
use super::{Party, Result};
use crate::crypto::{KeyMaterial, KeySetup};
use crate::fault::FaultScript;
use crate::party::PartyId;
use crate::transport::{memory_links, tcp_links, CommMeter, Endpoint, Links, MeterReport, TcpPlan};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Net {
    /// In-process channels.
    #[default]
    Memory,
    /// Loopback TCP sockets.
    Tcp,
}

/// Everything a run needs besides the protocol itself.
#[derive(Clone)]
pub struct Setup {
    pub seed: u64,
    pub net: Net,
    pub faults: FaultScript,
    pub timeout: Duration,
    pub backdoor: Option<Backdoor>,
}

impl Default for Setup {
    fn default() -> Self {
        Setup {
            seed: 1,
            net: Net::Memory,
            faults: FaultScript::default(),
            timeout: Duration::from_secs(30),
            backdoor: None,
        }
    }
}

impl Setup {
    pub fn seeded(seed: u64) -> Self {
        Setup {
            seed,
            ..Default::default()
        }
    }

    pub fn with_faults(mut self, faults: FaultScript) -> Self {
        self.faults = faults;
        self
    }

    pub fn with_net(mut self, net: Net) -> Self {
        self.net = net;
        self
    }

    pub fn with_timeout(mut self, t: Duration) -> Self {
        self.timeout = t;
        self
    }

    pub fn with_backdoor(mut self, b: Backdoor) -> Self {
        self.backdoor = Some(b);
        self
    }
}

/// How one party's run ended.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PartyOutcome<T> {
    Output(T),
    /// A check failed here or a peer reported an abort; carries the check name.
    Aborted(String),
    /// Transport or input failure.
    Failed(String),
}

impl<T> PartyOutcome<T> {
    pub fn output(&self) -> Option<&T> {
        match self {
            PartyOutcome::Output(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_abort(&self) -> bool {
        matches!(self, PartyOutcome::Aborted(_))
    }
}

pub struct RunOutput<T> {
    pub outcomes: [PartyOutcome<T>; 3],
    pub report: MeterReport,
    pub elapsed: Duration,
    /// Slowest party's wall-clock time per phase.
    pub phase_times: [Duration; 3],
}

/// One party's result, its meter and its per-phase wall-clock times.
pub struct PartyRun<T> {
    pub outcome: PartyOutcome<T>,
    pub meter: CommMeter,
    pub phase_times: [Duration; 3],
}

impl<T> RunOutput<T> {
    /// The outputs of all three parties, if every party finished.
    pub fn outputs(&self) -> Option<[&T; 3]> {
        let [a, b, c] = &self.outcomes;
        Some([a.output()?, b.output()?, c.output()?])
    }

    pub fn any_abort(&self) -> bool {
        self.outcomes.iter().any(PartyOutcome::is_abort)
    }

    /// The first failure message, if any party failed outside the protocol.
    pub fn failure(&self) -> Option<&str> {
        self.outcomes.iter().find_map(|o| match o {
            PartyOutcome::Failed(m) => Some(m.as_str()),
            _ => None,
        })
    }

    /// The first abort reason, if any.
    pub fn abort_reason(&self) -> Option<&str> {
        self.outcomes.iter().find_map(|o| match o {
            PartyOutcome::Aborted(m) => Some(m.as_str()),
            _ => None,
        })
    }
}

/// Listeners for `P0` and `P1` on loopback and the matching plans.
pub fn tcp_plans_local() -> io::Result<[TcpPlan; 3]> {
    let l0 = TcpListener::bind("127.0.0.1:0")?;
    let l1 = TcpListener::bind("127.0.0.1:0")?;
    let a0 = l0.local_addr()?;
    let a1 = l1.local_addr()?;
    let peers: [SocketAddr; 3] = [a0, a1, a1];
    let plan = |me, listener| TcpPlan {
        me,
        listener,
        peers,
        connect_timeout: Duration::from_secs(10),
    };
    Ok([
        plan(PartyId::P0, Some(l0)),
        plan(PartyId::P1, Some(l1)),
        plan(PartyId::P2, None),
    ])
}

/// Runs `f` as one party over established links.
pub fn run_party<T>(
    id: PartyId,
    links: Links,
    keys: KeySetup,
    setup: &Setup,
    f: impl FnOnce(&mut Party) -> Result<T>,
) -> PartyRun<T> {
    let mut net = Endpoint::new(id, links);
    net.set_timeout(setup.timeout);
    net.set_faults(setup.faults.for_party(id));
    let mut party = Party::new(net, keys);
    if let Some(b) = &setup.backdoor {
        party.set_backdoor(b.clone());
    }
    let outcome = match f(&mut party) {
        Ok(v) => PartyOutcome::Output(v),
        Err(e) => {
            party.net.notify_abort(&e.to_string());
            match e.check() {
                Some(c) if e.is_abort() => PartyOutcome::Aborted(c),
                _ => PartyOutcome::Failed(e.to_string()),
            }
        }
    };
    PartyRun {
        outcome,
        meter: party.net.meter().clone(),
        phase_times: party.net.phase_times(),
    }
}

enum Wiring {
    Ready(Links),
    Dial(TcpPlan),
}

/// Runs `f` at all three parties and collects their outcomes and meters.
pub fn run_three<T, F>(setup: &Setup, f: F) -> RunOutput<T>
where
    T: Send,
    F: Fn(&mut Party) -> Result<T> + Sync,
{
    let keys = KeyMaterial::from_u64_seed(setup.seed).views();
    let wiring: Vec<Wiring> = match setup.net {
        Net::Memory => memory_links().into_iter().map(Wiring::Ready).collect(),
        Net::Tcp => match tcp_plans_local() {
            Ok(plans) => plans.into_iter().map(Wiring::Dial).collect(),
            Err(e) => {
                let fail = || PartyOutcome::Failed(format!("tcp setup: {e}"));
                return RunOutput {
                    outcomes: [fail(), fail(), fail()],
                    report: MeterReport::default(),
                    elapsed: Duration::ZERO,
                    phase_times: [Duration::ZERO; 3],
                };
            }
        },
    };
    let start = Instant::now();
    let f = &f;
    let results: Vec<PartyRun<T>> = thread::scope(|s| {
        let handles: Vec<_> = wiring
            .into_iter()
            .zip(keys)
            .zip(PartyId::ALL)
            .map(|((w, k), id)| {
                s.spawn(move || {
                    let links = match w {
                        Wiring::Ready(l) => l,
                        Wiring::Dial(plan) => match tcp_links(plan) {
                            Ok(l) => l,
                            Err(e) => {
                                return PartyRun {
                                    outcome: PartyOutcome::Failed(format!("tcp connect: {e}")),
                                    meter: CommMeter::new(id),
                                    phase_times: [Duration::ZERO; 3],
                                }
                            }
                        },
                    };
                    run_party(id, links, k, setup, f)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("party thread panicked"))
            .collect()
    });
    let elapsed = start.elapsed();
    let report = MeterReport::from_meters(results.iter().map(|r| &r.meter));
    let mut phase_times = [Duration::ZERO; 3];
    for r in &results {
        for (t, x) in phase_times.iter_mut().zip(r.phase_times) {
            *t = (*t).max(x);
        }
    }
    let mut it = results.into_iter().map(|r| r.outcome);
    let outcomes = [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()];
    RunOutput {
        outcomes,
        report,
        elapsed,
        phase_times,
    }
}
