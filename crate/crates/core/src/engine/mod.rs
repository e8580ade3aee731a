//! Three-party protocols over masked sharings.
//!
//! Every protocol function is called by all three parties in the same order with
//! their own [`Party`] context; role-specific behaviour is selected inside. Sends
//! within one communication round are issued before the matching receives, so
//! no party blocks on a message that depends on its own.

mod check;
mod fair;
mod mal;
mod prims;
mod runner;
mod semi;
mod triples;

use thiserror::Error;

pub use check::Backdoor;
pub use fair::{fair_offline, rec_fair, FairPrep};
pub use mal::{
    eval_products_mal, finish_products_mal, flush_checks, flush_finish, flush_start, prep_products_mal, rand_shared,
    run_circuit_mal, start_products_mal, MalComponent, MalPrep, MalRunOptions, PendingChecks, VerifState,
};
pub use prims::{
    fresh_masks, input_masks, rec_mal, rec_recv, rec_semi, rec_send, recv_inputs, send_inputs, share_inputs, InputMask,
    RecPoints,
};
pub use runner::{run_party, run_three, tcp_plans_local, Net, PartyOutcome, PartyRun, RunOutput, Setup};
pub use semi::{
    eval_products_semi, finish_products_semi, prep_products_semi, run_circuit_semi, start_products_semi, wire_masks,
    ProductPrep, WireMasks,
};
pub use triples::{bucket_size, gen_triples, prc_check, BucketMode, PrcPair, Triple, TripleParams, TriplePlan};

use crate::circuit::CircuitError;
use crate::crypto::{CryptoError, KeyId, KeySetup};
use crate::party::PartyId;
use crate::ring::{RingElement, Width};
use crate::sharing::ShareError;
use crate::transport::{Endpoint, Phase, TransportError};

#[derive(Debug, Error)]
pub enum ProtocolError {
    /// A verification failed at this party.
    #[error("abort: {check}")]
    Abort { check: String },
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Share(#[from] ShareError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("invalid input: {0}")]
    Input(String),
}

impl ProtocolError {
    pub fn abort(check: impl Into<String>) -> Self {
        ProtocolError::Abort { check: check.into() }
    }

    /// Whether this party stopped because a check failed here or at a peer.
    pub fn is_abort(&self) -> bool {
        matches!(
            self,
            ProtocolError::Abort { .. } | ProtocolError::Transport(TransportError::PeerAborted { .. })
        )
    }

    /// The failed check, for aborts.
    pub fn check(&self) -> Option<String> {
        match self {
            ProtocolError::Abort { check } => Some(check.clone()),
            ProtocolError::Transport(TransportError::PeerAborted { peer, reason }) => Some(format!("{peer}: {reason}")),
            _ => None,
        }
    }
}

pub type Result<T, E = ProtocolError> = std::result::Result<T, E>;

/// One party's protocol context: its network endpoint, its keys and an instance
/// counter that keeps PRF stream labels aligned across parties.
pub struct Party {
    pub net: Endpoint,
    pub keys: KeySetup,
    instance: u64,
    backdoor: Option<Backdoor>,
}

impl Party {
    pub fn new(net: Endpoint, keys: KeySetup) -> Self {
        Party {
            net,
            keys,
            instance: 0,
            backdoor: None,
        }
    }

    pub fn id(&self) -> PartyId {
        self.net.id()
    }

    pub fn set_phase(&mut self, phase: Phase) {
        self.net.set_phase(phase);
    }

    /// Attaches a debug observer that receives this party's share views.
    pub fn set_backdoor(&mut self, b: Backdoor) {
        self.backdoor = Some(b);
    }

    pub fn backdoor(&self) -> Option<&Backdoor> {
        self.backdoor.as_ref()
    }

    /// A fresh label prefix for one protocol instance.
    pub fn tag(&mut self, name: &str) -> String {
        self.instance += 1;
        format!("{name}#{}", self.instance)
    }

    pub fn sample(&mut self, key: KeyId, tag: &str, stream: &str, width: Width, n: usize) -> Result<Vec<RingElement>> {
        Ok(self.keys.sample(key, &format!("{tag}/{stream}"), width, n)?)
    }

    /// Samples under `key` only if this party holds it.
    pub fn sample_if_held(
        &mut self,
        key: KeyId,
        tag: &str,
        stream: &str,
        width: Width,
        n: usize,
    ) -> Result<Option<Vec<RingElement>>> {
        if self.keys.holds(key) {
            self.sample(key, tag, stream, width, n).map(Some)
        } else {
            Ok(None)
        }
    }

    /// Uniform values in `[1, 2^bits)` under `key`.
    pub fn sample_small(&mut self, key: KeyId, tag: &str, stream: &str, bits: u32, n: usize) -> Result<Vec<u64>> {
        let raw = self.keys.sample_u64(key, &format!("{tag}/{stream}"), n)?;
        let mask = if bits >= 64 { u64::MAX } else { (1u64 << bits) - 1 };
        Ok(raw.into_iter().map(|x| (x & mask).max(1)).collect())
    }
}
