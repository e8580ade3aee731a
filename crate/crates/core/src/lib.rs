pub mod circuit;
pub mod crypto;
pub mod engine;
pub mod fault;
pub mod harness;
pub mod ml;
pub mod party;
pub mod ring;
pub mod sharing;
pub mod transport;
