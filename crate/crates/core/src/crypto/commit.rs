use super::hash::{hash_digest, Digest};

pub const OPENING_RANDOMNESS_LEN: usize = 32;

/// Binding and hiding commitment `H(payload || randomness)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Commitment(pub Digest);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Opening {
    pub payload: Vec<u8>,
    pub randomness: [u8; OPENING_RANDOMNESS_LEN],
}

impl Opening {
    /// Serialized length: 4-byte payload length, payload, randomness.
    pub fn encoded_len(&self) -> usize {
        4 + self.payload.len() + OPENING_RANDOMNESS_LEN
    }

    pub fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.payload);
        out.extend_from_slice(&self.randomness);
    }

    /// Decodes one opening from the front of `bytes`, returning the rest.
    pub fn decode_from(bytes: &[u8]) -> Option<(Opening, &[u8])> {
        let len = u32::from_le_bytes(bytes.get(..4)?.try_into().ok()?) as usize;
        let payload = bytes.get(4..4 + len)?.to_vec();
        let randomness = bytes.get(4 + len..4 + len + OPENING_RANDOMNESS_LEN)?.try_into().ok()?;
        Some((
            Opening { payload, randomness },
            &bytes[4 + len + OPENING_RANDOMNESS_LEN..],
        ))
    }
}

pub fn commit(payload: &[u8], randomness: [u8; OPENING_RANDOMNESS_LEN]) -> (Commitment, Opening) {
    let opening = Opening {
        payload: payload.to_vec(),
        randomness,
    };
    (Commitment(digest_of(&opening)), opening)
}

pub fn verify_open(c: &Commitment, opening: &Opening) -> bool {
    c.0 == digest_of(opening)
}

fn digest_of(o: &Opening) -> Digest {
    let mut buf = Vec::with_capacity(o.payload.len() + OPENING_RANDOMNESS_LEN);
    buf.extend_from_slice(&o.payload);
    buf.extend_from_slice(&o.randomness);
    hash_digest(&buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn honest_open_verifies_and_tamper_fails() {
        let (c, o) = commit(b"payload", [9; 32]);
        assert!(verify_open(&c, &o));
        let mut bad = o.clone();
        bad.payload[0] ^= 1;
        assert!(!verify_open(&c, &bad));
        let mut bad = o;
        bad.randomness[31] ^= 0x80;
        assert!(!verify_open(&c, &bad));
    }

    #[test]
    fn randomness_changes_digest() {
        for i in 0..100u8 {
            let (a, _) = commit(b"same", [i; 32]);
            let (b, _) = commit(b"same", [i.wrapping_add(1); 32]);
            assert_ne!(a, b);
        }
    }

    #[test]
    fn opening_codec_roundtrip() {
        let (_, o) = commit(&[1, 2, 3], [4; 32]);
        let mut buf = Vec::new();
        o.encode_into(&mut buf);
        buf.push(0xaa);
        assert_eq!(buf.len(), o.encoded_len() + 1);
        let (back, rest) = Opening::decode_from(&buf).unwrap();
        assert_eq!(back, o);
        assert_eq!(rest, &[0xaa]);
        assert!(Opening::decode_from(&buf[..10]).is_none());
    }
}
