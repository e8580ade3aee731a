use std::collections::HashMap;
use std::fmt;
use std::io::{self, Read, Write};

use aes::cipher::{generic_array::GenericArray, BlockEncrypt, KeyInit};
use aes::Aes128;
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::party::PartyId;
use crate::ring::{RingElement, Width};

pub const KEY_FILE_MAGIC: [u8; 4] = *b"M3PK";

#[derive(Debug, Error)]
pub enum CryptoError {
    #[error("{party} does not hold key {key}")]
    MissingKey { party: String, key: KeyId },
    #[error("key file: {0}")]
    KeyFile(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// The four shared keys: one per pair plus one common to all.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KeyId {
    K01,
    K02,
    K12,
    KP,
}

impl KeyId {
    pub const ALL: [KeyId; 4] = [KeyId::K01, KeyId::K02, KeyId::K12, KeyId::KP];

    fn index(self) -> usize {
        self as usize
    }

    pub fn held_by(self, p: PartyId) -> bool {
        !matches!(
            (self, p),
            (KeyId::K01, PartyId::P2) | (KeyId::K02, PartyId::P1) | (KeyId::K12, PartyId::P0)
        )
    }

    /// The key shared by exactly the two given parties.
    pub fn pair(a: PartyId, b: PartyId) -> KeyId {
        use PartyId::*;
        match (a.min(b), a.max(b)) {
            (P0, P1) => KeyId::K01,
            (P0, P2) => KeyId::K02,
            (P1, P2) => KeyId::K12,
            _ => panic!("no pair key for {a},{b}"),
        }
    }
}

impl fmt::Display for KeyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KeyId::K01 => "k01",
            KeyId::K02 => "k02",
            KeyId::K12 => "k12",
            KeyId::KP => "kP",
        })
    }
}

/// The full key set as held by the dealer.
#[derive(Clone, PartialEq, Eq)]
pub struct KeyMaterial {
    keys: [[u8; 16]; 4],
}

impl fmt::Debug for KeyMaterial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("KeyMaterial(..)")
    }
}

impl KeyMaterial {
    /// Deterministic key derivation from a 128-bit seed.
    pub fn from_seed(seed: [u8; 16]) -> Self {
        let mut keys = [[0u8; 16]; 4];
        for id in KeyId::ALL {
            let mut h = Sha256::new();
            h.update(b"mask3pc/setup/");
            h.update(seed);
            h.update(id.to_string().as_bytes());
            keys[id.index()].copy_from_slice(&h.finalize()[..16]);
        }
        KeyMaterial { keys }
    }

    pub fn from_u64_seed(seed: u64) -> Self {
        let mut s = [0u8; 16];
        s[..8].copy_from_slice(&seed.to_le_bytes());
        Self::from_seed(s)
    }

    pub fn key(&self, id: KeyId) -> [u8; 16] {
        self.keys[id.index()]
    }

    pub fn view(&self, party: PartyId) -> KeySetup {
        KeySetup::build(Some(party), self)
    }

    /// A view holding every key; used by the dealer and test backdoors.
    pub fn dealer_view(&self) -> KeySetup {
        KeySetup::build(None, self)
    }

    pub fn views(&self) -> [KeySetup; 3] {
        PartyId::ALL.map(|p| self.view(p))
    }
}

/// Three per-party views derived from `seed`.
pub fn setup_keys(seed: [u8; 16]) -> [KeySetup; 3] {
    KeyMaterial::from_seed(seed).views()
}

pub fn write_key_file(mut w: impl Write, keys: &KeyMaterial) -> io::Result<()> {
    w.write_all(&KEY_FILE_MAGIC)?;
    for k in &keys.keys {
        w.write_all(k)?;
    }
    Ok(())
}

pub fn read_key_file(mut r: impl Read) -> Result<KeyMaterial, CryptoError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != KEY_FILE_MAGIC {
        return Err(CryptoError::KeyFile("bad magic".into()));
    }
    let mut keys = [[0u8; 16]; 4];
    for k in keys.iter_mut() {
        r.read_exact(k)?;
    }
    Ok(KeyMaterial { keys })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditEntry {
    pub key: KeyId,
    pub label: String,
    pub first_counter: u64,
    pub count: u64,
}

/// One party's keys with a monotone counter per (key, stream label).
#[derive(Clone)]
pub struct KeySetup {
    owner: Option<PartyId>,
    ciphers: [Option<Aes128>; 4],
    counters: HashMap<(KeyId, [u8; 8]), u64>,
    audit: Option<Vec<AuditEntry>>,
}

impl fmt::Debug for KeySetup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let held: Vec<_> = KeyId::ALL.into_iter().filter(|k| self.holds(*k)).collect();
        f.debug_struct("KeySetup")
            .field("owner", &self.owner)
            .field("keys", &held)
            .finish()
    }
}

impl KeySetup {
    fn build(owner: Option<PartyId>, m: &KeyMaterial) -> Self {
        let ciphers = KeyId::ALL.map(|id| {
            let held = owner.is_none_or(|p| id.held_by(p));
            held.then(|| Aes128::new(GenericArray::from_slice(&m.key(id))))
        });
        KeySetup {
            owner,
            ciphers,
            counters: HashMap::new(),
            audit: None,
        }
    }

    pub fn owner(&self) -> Option<PartyId> {
        self.owner
    }

    pub fn holds(&self, key: KeyId) -> bool {
        self.ciphers[key.index()].is_some()
    }

    /// Records every draw from now on.
    pub fn enable_audit(&mut self) {
        self.audit.get_or_insert_with(Vec::new);
    }

    pub fn audit_log(&self) -> &[AuditEntry] {
        self.audit.as_deref().unwrap_or(&[])
    }

    fn stream_id(label: &str) -> [u8; 8] {
        let mut h = Sha256::new();
        h.update(b"mask3pc/prf/");
        h.update(label.as_bytes());
        h.finalize()[..8].try_into().unwrap()
    }

    /// Draws `n` 128-bit blocks, advancing the counter by `n`.
    fn blocks(&mut self, key: KeyId, label: &str, n: usize) -> Result<Vec<[u8; 16]>, CryptoError> {
        let cipher = self.ciphers[key.index()]
            .as_ref()
            .ok_or_else(|| CryptoError::MissingKey {
                party: self.owner.map_or("dealer".into(), |p| p.to_string()),
                key,
            })?;
        let sid = Self::stream_id(label);
        let ctr = self.counters.entry((key, sid)).or_insert(0);
        let start = *ctr;
        let mut out = Vec::with_capacity(n);
        for i in 0..n as u64 {
            let mut block = [0u8; 16];
            block[..8].copy_from_slice(&sid);
            block[8..].copy_from_slice(&(start + i).to_le_bytes());
            let mut b = GenericArray::from(block);
            cipher.encrypt_block(&mut b);
            out.push(b.into());
        }
        *ctr = start + n as u64;
        if let Some(log) = self.audit.as_mut() {
            log.push(AuditEntry {
                key,
                label: label.to_string(),
                first_counter: start,
                count: n as u64,
            });
        }
        Ok(out)
    }

    /// `n` uniform ring elements from the stream `label` under `key`.
    pub fn sample(&mut self, key: KeyId, label: &str, width: Width, n: usize) -> Result<Vec<RingElement>, CryptoError> {
        Ok(self
            .blocks(key, label, n)?
            .into_iter()
            .map(|b| RingElement::new(u64::from_le_bytes(b[..8].try_into().unwrap()), width))
            .collect())
    }

    pub fn sample_one(&mut self, key: KeyId, label: &str, width: Width) -> Result<RingElement, CryptoError> {
        Ok(self.sample(key, label, width, 1)?[0])
    }

    /// Raw 64-bit draws.
    pub fn sample_u64(&mut self, key: KeyId, label: &str, n: usize) -> Result<Vec<u64>, CryptoError> {
        Ok(self
            .sample(key, label, Width::W64, n)?
            .into_iter()
            .map(|e| e.value())
            .collect())
    }

    /// 256 bits, e.g. commitment randomness.
    pub fn sample_bytes32(&mut self, key: KeyId, label: &str) -> Result<[u8; 32], CryptoError> {
        let b = self.blocks(key, label, 2)?;
        let mut out = [0u8; 32];
        out[..16].copy_from_slice(&b[0]);
        out[16..].copy_from_slice(&b[1]);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn seed(i: u64) -> [u8; 16] {
        let mut s = [0u8; 16];
        s[..8].copy_from_slice(&i.to_le_bytes());
        s
    }

    #[test]
    fn key_distribution_per_party() {
        let [p0, p1, p2] = setup_keys(seed(1));
        assert!(p0.holds(KeyId::K01) && p0.holds(KeyId::K02) && p0.holds(KeyId::KP));
        assert!(!p0.holds(KeyId::K12));
        assert!(p1.holds(KeyId::K01) && p1.holds(KeyId::K12) && p1.holds(KeyId::KP));
        assert!(!p1.holds(KeyId::K02));
        assert!(p2.holds(KeyId::K02) && p2.holds(KeyId::K12) && p2.holds(KeyId::KP));
        assert!(!p2.holds(KeyId::K01));
    }

    #[test]
    fn setup_is_deterministic() {
        let a = KeyMaterial::from_seed(seed(5));
        assert_eq!(a, KeyMaterial::from_seed(seed(5)));
        let [mut x, ..] = a.views();
        let [mut y, ..] = KeyMaterial::from_seed(seed(5)).views();
        assert_eq!(
            x.sample(KeyId::K01, "s", Width::W64, 4).unwrap(),
            y.sample(KeyId::K01, "s", Width::W64, 4).unwrap()
        );
    }

    #[test]
    fn distinct_seeds_give_distinct_keys() {
        let keys: HashSet<_> = (0..1000u64)
            .map(|i| KeyMaterial::from_seed(seed(i)).key(KeyId::K01))
            .collect();
        assert_eq!(keys.len(), 1000);
    }

    #[test]
    fn holders_agree_and_missing_key_errors() {
        let [mut p0, mut p1, mut p2] = setup_keys(seed(2));
        let a = p0.sample(KeyId::K01, "lambda1/wire7", Width::W32, 8).unwrap();
        let b = p1.sample(KeyId::K01, "lambda1/wire7", Width::W32, 8).unwrap();
        assert_eq!(a, b);
        let c = p2.sample(KeyId::K12, "lambda1/wire7", Width::W32, 8).unwrap();
        assert_ne!(a, c);
        assert!(matches!(
            p2.sample(KeyId::K01, "x", Width::W32, 1),
            Err(CryptoError::MissingKey { key: KeyId::K01, .. })
        ));
    }

    #[test]
    fn counter_advances() {
        let [mut p0, mut p1, _] = setup_keys(seed(3));
        let first = p0.sample(KeyId::KP, "s", Width::W64, 3).unwrap();
        let second = p0.sample(KeyId::KP, "s", Width::W64, 2).unwrap();
        let all = p1.sample(KeyId::KP, "s", Width::W64, 5).unwrap();
        assert_eq!([first, second].concat(), all);
    }

    #[test]
    fn key_and_label_separation() {
        let [mut p0, ..] = setup_keys(seed(4));
        let a = p0.sample_u64(KeyId::K01, "s", 10_000).unwrap();
        let b = p0.sample_u64(KeyId::K02, "s", 10_000).unwrap();
        let c = p0.sample_u64(KeyId::K01, "t", 10_000).unwrap();
        let sa: HashSet<_> = a.iter().collect();
        assert!(b.iter().all(|x| !sa.contains(x)));
        assert!(c.iter().all(|x| !sa.contains(x)));
    }

    #[test]
    fn uniform_mean_at_width_32() {
        let [mut p0, ..] = setup_keys(seed(6));
        let n = 100_000usize;
        let xs = p0.sample(KeyId::K01, "mean", Width::W32, n).unwrap();
        let mean = xs.iter().map(|x| x.value() as f64).sum::<f64>() / n as f64;
        let half = 2f64.powi(31);
        // uniform on [0, 2^32): sigma = 2^32 / sqrt(12)
        let sigma = 2f64.powi(32) / 12f64.sqrt() / (n as f64).sqrt();
        assert!((mean - half).abs() < 4.0 * sigma, "mean {mean}");
    }

    #[test]
    fn audit_log_never_repeats_an_index() {
        let [mut p1, ..] = setup_keys(seed(8));
        p1.enable_audit();
        for i in 0..50 {
            p1.sample(KeyId::KP, &format!("l{}", i % 7), Width::W64, 1 + i % 3)
                .unwrap();
        }
        let mut seen = HashSet::new();
        for e in p1.audit_log() {
            for c in e.first_counter..e.first_counter + e.count {
                assert!(seen.insert((e.key, e.label.clone(), c)));
            }
        }
    }

    #[test]
    fn key_file_roundtrip() {
        let m = KeyMaterial::from_seed(seed(9));
        let mut buf = Vec::new();
        write_key_file(&mut buf, &m).unwrap();
        assert_eq!(buf.len(), 4 + 64);
        assert_eq!(&buf[..4], &KEY_FILE_MAGIC);
        assert_eq!(&buf[4..20], &m.key(KeyId::K01));
        assert_eq!(&buf[52..68], &m.key(KeyId::KP));
        assert_eq!(read_key_file(&buf[..]).unwrap(), m);
        buf[0] = b'X';
        assert!(read_key_file(&buf[..]).is_err());
    }
}
