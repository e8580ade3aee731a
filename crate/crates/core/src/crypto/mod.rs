//! Pairwise PRF keys, hashing and hash commitments.

mod commit;
mod hash;
mod keys;

pub use commit::{commit, verify_open, Commitment, Opening, OPENING_RANDOMNESS_LEN};
pub use hash::{hash_digest, hash_elements, Digest, DigestBuilder};
pub use keys::{
    read_key_file, setup_keys, write_key_file, AuditEntry, CryptoError, KeyId, KeyMaterial, KeySetup, KEY_FILE_MAGIC,
};
