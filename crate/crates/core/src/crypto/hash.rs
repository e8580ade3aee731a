use std::fmt;

use sha2::{Digest as _, Sha256};

use crate::ring::{pack, RingElement, Width};

/// A SHA-256 output.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", hex::encode(&self.0[..8]))
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

pub fn hash_digest(data: &[u8]) -> Digest {
    Digest(Sha256::digest(data).into())
}

/// Digest of the packed encoding of `elems`.
pub fn hash_elements(width: Width, elems: &[RingElement]) -> Digest {
    hash_digest(&pack(width, elems))
}

/// Incremental hashing of element sequences.
#[derive(Clone, Default)]
pub struct DigestBuilder {
    inner: Sha256,
    items: usize,
}

impl DigestBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update_elements(&mut self, width: Width, elems: &[RingElement]) {
        self.inner.update(pack(width, elems));
        self.items += elems.len();
    }

    pub fn update_bytes(&mut self, bytes: &[u8]) {
        self.inner.update(bytes);
        self.items += 1;
    }

    pub fn is_empty(&self) -> bool {
        self.items == 0
    }

    pub fn finish(self) -> Digest {
        Digest(self.inner.finalize().into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngCore, SeedableRng};

    #[test]
    fn empty_input_matches_standard_vector() {
        assert_eq!(
            hash_digest(b"").to_string(),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        assert_eq!(hash_digest(b"abc"), hash_digest(b"abc"));
    }

    #[test]
    fn random_inputs_do_not_collide() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let (mut a, mut b) = ([0u8; 1024], [0u8; 1024]);
        rng.fill_bytes(&mut a);
        rng.fill_bytes(&mut b);
        assert_ne!(hash_digest(&a), hash_digest(&b));
    }

    #[test]
    fn builder_equals_one_shot() {
        let xs: Vec<_> = (0..5).map(|i| RingElement::new(i, Width::W32)).collect();
        let mut h = DigestBuilder::new();
        h.update_elements(Width::W32, &xs[..2]);
        h.update_elements(Width::W32, &xs[2..]);
        assert_eq!(h.finish(), hash_elements(Width::W32, &xs));
    }
}
