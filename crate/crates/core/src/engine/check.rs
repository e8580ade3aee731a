//! Debug observer that sees every party's share views.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use crate::party::PartyId;
use crate::ring::RingElement;
use crate::sharing::{reconstruct, MaskedShare, ShareError};

type Views = [Option<Vec<MaskedShare>>; 3];

/// Collects share views recorded by the parties under common keys, so tests can
/// reconstruct intermediate values. Never attached in production runs.
#[derive(Clone, Default)]
pub struct Backdoor {
    inner: Arc<Mutex<BTreeMap<String, Views>>>,
}

impl Backdoor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self, key: &str, party: PartyId, views: &[MaskedShare]) {
        let mut map = self.inner.lock().expect("backdoor lock");
        map.entry(key.to_string()).or_default()[party.index()] = Some(views.to_vec());
    }

    pub fn keys(&self) -> Vec<String> {
        self.inner.lock().expect("backdoor lock").keys().cloned().collect()
    }

    /// The three recorded view vectors for `key`, if all parties recorded one.
    pub fn views(&self, key: &str) -> Option<[Vec<MaskedShare>; 3]> {
        let map = self.inner.lock().expect("backdoor lock");
        let [a, b, c] = map.get(key)?.clone();
        Some([a?, b?, c?])
    }

    /// Reconstructs every value recorded under `key`, checking view consistency.
    pub fn reconstruct(&self, key: &str) -> Result<Vec<RingElement>, ShareError> {
        let [a, b, c] = self.views(key).ok_or(ShareError::Inconsistent("missing views"))?;
        if a.len() != b.len() || b.len() != c.len() {
            return Err(ShareError::Inconsistent("view vectors differ in length"));
        }
        a.iter()
            .zip(&b)
            .zip(&c)
            .map(|((x, y), z)| reconstruct(&[*x, *y, *z]))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::Width;
    use crate::sharing::share_with_mask;

    #[test]
    fn reconstructs_recorded_views() {
        let b = Backdoor::new();
        let e = |v| RingElement::new(v, Width::W32);
        let s = share_with_mask(e(7), e(3), e(9));
        for p in PartyId::ALL {
            b.record("w", p, &[s[p.index()]]);
        }
        assert_eq!(b.reconstruct("w").unwrap(), vec![e(7)]);
        assert!(b.reconstruct("missing").is_err());
    }
}
