//! Ordered point-to-point channels between the three parties, with metering.
//!
//! Two backends produce [`Links`]: in-process channels ([`memory_links`]) and TCP
//! ([`tcp_links`]). Both carry the same encoded frames, so meters and transcripts
//! do not depend on the backend.

mod endpoint;
mod frame;
mod mem;
mod meter;
mod point;
mod tcp;

pub use endpoint::{Endpoint, Links, TransportError, DEFAULT_TIMEOUT};
pub use frame::{Category, Frame, FrameError, Payload, Phase, Signal, HEADER_LEN};
pub use mem::memory_links;
pub use meter::{CommMeter, Counter, MeterReport};
pub use point::Point;
pub use tcp::{tcp_links, TcpPlan};
