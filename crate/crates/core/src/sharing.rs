//! Additive sharing between the evaluators and masked sharing across all three parties.
//!
//! A masked sharing of `v` fixes a mask `lambda = lambda1 + lambda2` and the masked
//! value `m = v + lambda`. `P0` holds both mask halves, `P1` holds `(m, lambda1)` and
//! `P2` holds `(m, lambda2)`. Boolean sharings are the width-1 case.

use std::io::{self, Read, Write};
use std::ops::{Add, Neg, Sub};

use thiserror::Error;

use crate::crypto::{CryptoError, KeyId, KeySetup};
use crate::party::PartyId;
use crate::ring::{pack, unpack, RingElement, RingError, Width};

pub const SHARE_FILE_MAGIC: [u8; 4] = *b"M3PS";

#[derive(Debug, Error)]
pub enum ShareError {
    #[error("share role mismatch: {0} vs {1}")]
    RoleMismatch(PartyId, PartyId),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error("{0} coefficients for {1} shares")]
    Arity(usize, usize),
    #[error("additive shares must come from P1 and P2, got {0} and {1}")]
    Holders(PartyId, PartyId),
    #[error("views are inconsistent: {0}")]
    Inconsistent(&'static str),
    #[error("empty share vector")]
    Empty,
    #[error("share file: {0}")]
    File(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

/// An evaluator's half of a two-out-of-two additive sharing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AdditiveShare {
    pub holder: PartyId,
    pub value: RingElement,
}

pub fn additive_reconstruct(a: AdditiveShare, b: AdditiveShare) -> Result<RingElement, ShareError> {
    let ok = matches!(
        (a.holder, b.holder),
        (PartyId::P1, PartyId::P2) | (PartyId::P2, PartyId::P1)
    );
    if !ok {
        return Err(ShareError::Holders(a.holder, b.holder));
    }
    Ok(a.value.try_add(b.value)?)
}

/// One party's view of a masked sharing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaskedShare {
    P0 { lambda1: RingElement, lambda2: RingElement },
    P1 { m: RingElement, lambda1: RingElement },
    P2 { m: RingElement, lambda2: RingElement },
}

impl MaskedShare {
    /// Builds a view from its role and two components, in the role's natural order.
    pub fn from_parts(role: PartyId, first: RingElement, second: RingElement) -> Self {
        match role {
            PartyId::P0 => MaskedShare::P0 {
                lambda1: first,
                lambda2: second,
            },
            PartyId::P1 => MaskedShare::P1 {
                m: first,
                lambda1: second,
            },
            PartyId::P2 => MaskedShare::P2 {
                m: first,
                lambda2: second,
            },
        }
    }

    pub fn parts(self) -> (RingElement, RingElement) {
        match self {
            MaskedShare::P0 { lambda1, lambda2 } => (lambda1, lambda2),
            MaskedShare::P1 { m, lambda1 } => (m, lambda1),
            MaskedShare::P2 { m, lambda2 } => (m, lambda2),
        }
    }

    /// Sharing of a public constant with a zero mask.
    pub fn public(role: PartyId, c: RingElement) -> Self {
        let z = RingElement::zero(c.width());
        match role {
            PartyId::P0 => Self::from_parts(role, z, z),
            _ => Self::from_parts(role, c, z),
        }
    }

    pub fn zero(role: PartyId, width: Width) -> Self {
        Self::public(role, RingElement::zero(width))
    }

    /// The mask part of a view with `m` still unknown (set later with [`with_m`]).
    ///
    /// [`with_m`]: MaskedShare::with_m
    pub fn mask_only(role: PartyId, lambda1: RingElement, lambda2: RingElement) -> Self {
        let z = RingElement::zero(lambda1.width());
        match role {
            PartyId::P0 => Self::from_parts(role, lambda1, lambda2),
            PartyId::P1 => Self::from_parts(role, z, lambda1),
            PartyId::P2 => Self::from_parts(role, z, lambda2),
        }
    }

    pub fn role(self) -> PartyId {
        match self {
            MaskedShare::P0 { .. } => PartyId::P0,
            MaskedShare::P1 { .. } => PartyId::P1,
            MaskedShare::P2 { .. } => PartyId::P2,
        }
    }

    pub fn width(self) -> Width {
        self.parts().0.width()
    }

    pub fn m(self) -> Option<RingElement> {
        match self {
            MaskedShare::P1 { m, .. } | MaskedShare::P2 { m, .. } => Some(m),
            MaskedShare::P0 { .. } => None,
        }
    }

    pub fn lambda1(self) -> Option<RingElement> {
        match self {
            MaskedShare::P0 { lambda1, .. } | MaskedShare::P1 { lambda1, .. } => Some(lambda1),
            MaskedShare::P2 { .. } => None,
        }
    }

    pub fn lambda2(self) -> Option<RingElement> {
        match self {
            MaskedShare::P0 { lambda2, .. } | MaskedShare::P2 { lambda2, .. } => Some(lambda2),
            MaskedShare::P1 { .. } => None,
        }
    }

    /// The evaluator's additive share of the mask; the full mask for `P0`.
    pub fn mask_share(self) -> RingElement {
        match self {
            MaskedShare::P0 { lambda1, lambda2 } => lambda1 + lambda2,
            MaskedShare::P1 { lambda1, .. } => lambda1,
            MaskedShare::P2 { lambda2, .. } => lambda2,
        }
    }

    /// Replaces the masked value; no-op for `P0`.
    pub fn with_m(self, m: RingElement) -> Self {
        match self {
            MaskedShare::P0 { .. } => self,
            MaskedShare::P1 { lambda1, .. } => MaskedShare::P1 { m, lambda1 },
            MaskedShare::P2 { lambda2, .. } => MaskedShare::P2 { m, lambda2 },
        }
    }

    fn zip(
        self,
        rhs: Self,
        f: impl Fn(RingElement, RingElement) -> Result<RingElement, RingError>,
    ) -> Result<Self, ShareError> {
        if self.role() != rhs.role() {
            return Err(ShareError::RoleMismatch(self.role(), rhs.role()));
        }
        let (a0, a1) = self.parts();
        let (b0, b1) = rhs.parts();
        Ok(Self::from_parts(self.role(), f(a0, b0)?, f(a1, b1)?))
    }

    pub fn try_add(self, rhs: Self) -> Result<Self, ShareError> {
        self.zip(rhs, RingElement::try_add)
    }

    pub fn try_sub(self, rhs: Self) -> Result<Self, ShareError> {
        self.zip(rhs, RingElement::try_sub)
    }

    /// Multiplication by a public coefficient.
    pub fn try_scale(self, c: RingElement) -> Result<Self, ShareError> {
        let (a, b) = self.parts();
        Ok(Self::from_parts(self.role(), a.try_mul(c)?, b.try_mul(c)?))
    }

    pub fn scale(self, c: RingElement) -> Self {
        self.try_scale(c).expect("ring width mismatch")
    }

    /// Adds a public constant; only the masked value moves.
    pub fn try_add_const(self, c: RingElement) -> Result<Self, ShareError> {
        match self {
            MaskedShare::P0 { lambda1, .. } => {
                lambda1.try_add(c)?;
                Ok(self)
            }
            _ => {
                let (m, l) = self.parts();
                Ok(Self::from_parts(self.role(), m.try_add(c)?, l))
            }
        }
    }

    pub fn add_const(self, c: RingElement) -> Self {
        self.try_add_const(c).expect("ring width mismatch")
    }
}

impl Add for MaskedShare {
    type Output = MaskedShare;
    fn add(self, rhs: Self) -> Self {
        self.try_add(rhs).expect("share mismatch")
    }
}

impl Sub for MaskedShare {
    type Output = MaskedShare;
    fn sub(self, rhs: Self) -> Self {
        self.try_sub(rhs).expect("share mismatch")
    }
}

impl Neg for MaskedShare {
    type Output = MaskedShare;
    fn neg(self) -> Self {
        let (a, b) = self.parts();
        Self::from_parts(self.role(), -a, -b)
    }
}

/// `sum(coeffs[i] * shares[i]) + constant`, computed locally.
pub fn lin_combine(
    coeffs: &[RingElement],
    shares: &[MaskedShare],
    constant: RingElement,
) -> Result<MaskedShare, ShareError> {
    if coeffs.len() != shares.len() {
        return Err(ShareError::Arity(coeffs.len(), shares.len()));
    }
    let first = shares.first().ok_or(ShareError::Empty)?;
    let mut acc = MaskedShare::zero(first.role(), constant.width());
    for (c, s) in coeffs.iter().zip(shares) {
        acc = acc.try_add(s.try_scale(*c)?)?;
    }
    acc.try_add_const(constant)
}

/// Shares of one value with uniform width and role.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShareVec {
    elems: Vec<MaskedShare>,
}

impl ShareVec {
    pub fn new(elems: Vec<MaskedShare>) -> Result<Self, ShareError> {
        let first = elems.first().ok_or(ShareError::Empty)?;
        for e in &elems {
            if e.role() != first.role() {
                return Err(ShareError::RoleMismatch(first.role(), e.role()));
            }
            if e.width() != first.width() {
                return Err(RingError::WidthMismatch(first.width().bits(), e.width().bits()).into());
            }
        }
        Ok(ShareVec { elems })
    }

    pub fn role(&self) -> PartyId {
        self.elems[0].role()
    }

    pub fn width(&self) -> Width {
        self.elems[0].width()
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn as_slice(&self) -> &[MaskedShare] {
        &self.elems
    }

    pub fn into_vec(self) -> Vec<MaskedShare> {
        self.elems
    }
}

/// The three views of `v` under explicit mask halves.
pub fn share_with_mask(v: RingElement, lambda1: RingElement, lambda2: RingElement) -> [MaskedShare; 3] {
    let m = v + lambda1 + lambda2;
    [
        MaskedShare::P0 { lambda1, lambda2 },
        MaskedShare::P1 { m, lambda1 },
        MaskedShare::P2 { m, lambda2 },
    ]
}

/// Trusted-dealer sharing with masks drawn from the pair keys.
pub fn dealer_share(v: RingElement, dealer: &mut KeySetup, label: &str) -> Result<[MaskedShare; 3], ShareError> {
    let l1 = dealer.sample_one(KeyId::K01, &format!("{label}/dealer.l1"), v.width())?;
    let l2 = dealer.sample_one(KeyId::K02, &format!("{label}/dealer.l2"), v.width())?;
    Ok(share_with_mask(v, l1, l2))
}

/// Recovers `v` from all three views, checking that they agree.
pub fn reconstruct(views: &[MaskedShare; 3]) -> Result<RingElement, ShareError> {
    let [MaskedShare::P0 { lambda1, lambda2 }, MaskedShare::P1 { m, lambda1: l1 }, MaskedShare::P2 { m: m2, lambda2: l2 }] =
        *views
    else {
        return Err(ShareError::Inconsistent("views are not ordered P0, P1, P2"));
    };
    if m != m2 {
        return Err(ShareError::Inconsistent("masked values differ"));
    }
    if lambda1 != l1 || lambda2 != l2 {
        return Err(ShareError::Inconsistent("mask halves differ"));
    }
    Ok(m.try_sub(lambda1)?.try_sub(lambda2)?)
}

/// Writes one party's share vector: magic, width, count, role, then the two packed columns.
pub fn write_share_file(mut w: impl Write, shares: &ShareVec) -> io::Result<()> {
    w.write_all(&SHARE_FILE_MAGIC)?;
    w.write_all(&[shares.width().bits() as u8])?;
    w.write_all(&(shares.len() as u32).to_le_bytes())?;
    w.write_all(&[shares.role().index() as u8])?;
    let (a, b): (Vec<_>, Vec<_>) = shares.as_slice().iter().map(|s| s.parts()).unzip();
    w.write_all(&pack(shares.width(), &a))?;
    w.write_all(&pack(shares.width(), &b))
}

pub fn read_share_file(mut r: impl Read) -> Result<ShareVec, ShareError> {
    let mut head = [0u8; 10];
    r.read_exact(&mut head)?;
    if head[..4] != SHARE_FILE_MAGIC {
        return Err(ShareError::File("bad magic".into()));
    }
    let width = Width::new(head[4] as u32)?;
    let count = u32::from_le_bytes(head[5..9].try_into().unwrap()) as usize;
    let role = PartyId::from_index(head[9] as usize).ok_or_else(|| ShareError::File("bad role".into()))?;
    let mut col = vec![0u8; width.packed_len(count)];
    r.read_exact(&mut col)?;
    let a = unpack(width, &col, count)?;
    r.read_exact(&mut col)?;
    let b = unpack(width, &col, count)?;
    ShareVec::new(
        a.into_iter()
            .zip(b)
            .map(|(x, y)| MaskedShare::from_parts(role, x, y))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::KeyMaterial;
    use proptest::prelude::*;

    fn el(v: u64) -> RingElement {
        RingElement::new(v, Width::W32)
    }

    fn map3(a: [MaskedShare; 3], f: impl Fn(MaskedShare) -> MaskedShare) -> [MaskedShare; 3] {
        a.map(f)
    }

    #[test]
    fn addition_example() {
        let x = share_with_mask(el(4), el(1), el(2));
        let y = share_with_mask(el(6), el(2), el(3));
        let z: Vec<_> = (0..3).map(|i| x[i] + y[i]).collect();
        let z: [MaskedShare; 3] = z.try_into().unwrap();
        assert_eq!(reconstruct(&z).unwrap(), el(10));
        assert_eq!(z[0].mask_share(), el(8));
    }

    #[test]
    fn identity_combination() {
        let x = share_with_mask(el(77), el(5), el(9));
        for s in x {
            assert_eq!(lin_combine(&[el(1)], &[s], el(0)).unwrap(), s);
        }
    }

    #[test]
    fn combination_errors() {
        let x = share_with_mask(el(1), el(2), el(3));
        assert!(matches!(
            lin_combine(&[el(1), el(1)], &[x[0], x[1]], el(0)),
            Err(ShareError::RoleMismatch(..))
        ));
        assert!(matches!(
            lin_combine(&[el(1)], &[], el(0)),
            Err(ShareError::Arity(1, 0))
        ));
        let wide = MaskedShare::zero(PartyId::P0, Width::W64);
        assert!(lin_combine(&[el(1)], &[wide], el(0)).is_err());
    }

    #[test]
    fn additive_cases() {
        let s = |h, v| AdditiveShare { holder: h, value: v };
        assert_eq!(
            additive_reconstruct(s(PartyId::P1, el(0)), s(PartyId::P2, el(0))).unwrap(),
            el(0)
        );
        assert_eq!(
            additive_reconstruct(s(PartyId::P1, el(1)), s(PartyId::P2, el(u32::MAX as u64))).unwrap(),
            el(0)
        );
        assert!(additive_reconstruct(s(PartyId::P1, el(1)), s(PartyId::P1, el(1))).is_err());
        let mut dealer = KeyMaterial::from_u64_seed(1).dealer_view();
        let r = dealer.sample_one(KeyId::K12, "split", Width::W32).unwrap();
        assert_eq!(
            additive_reconstruct(s(PartyId::P2, el(42) - r), s(PartyId::P1, r)).unwrap(),
            el(42)
        );
    }

    #[test]
    fn dealer_shares_reconstruct() {
        let mut dealer = KeyMaterial::from_u64_seed(3).dealer_view();
        for i in 0..1000u64 {
            let v = el(i.wrapping_mul(0x9e37_79b9));
            let views = dealer_share(v, &mut dealer, "t").unwrap();
            assert_eq!(reconstruct(&views).unwrap(), v);
        }
        let zero = share_with_mask(el(0), el(0), el(0));
        assert_eq!(zero[1].m(), Some(el(0)));
        let b = dealer_share(RingElement::from_bool(true), &mut dealer, "bit").unwrap();
        let (m, l1, l2) = (b[1].m().unwrap(), b[0].lambda1().unwrap(), b[0].lambda2().unwrap());
        assert_eq!((m.value() ^ l1.value() ^ l2.value()), 1);
    }

    #[test]
    fn reconstruct_detects_inconsistency() {
        let mut v = share_with_mask(el(5), el(1), el(1));
        v[2] = v[2].with_m(el(0));
        assert!(reconstruct(&v).is_err());
    }

    #[test]
    fn share_file_roundtrip() {
        for role in PartyId::ALL {
            for w in [Width::BIT, Width::W64] {
                let sv = ShareVec::new(
                    (0..11u64)
                        .map(|i| MaskedShare::from_parts(role, RingElement::new(i * 3, w), RingElement::new(i + 7, w)))
                        .collect(),
                )
                .unwrap();
                let mut buf = Vec::new();
                write_share_file(&mut buf, &sv).unwrap();
                assert_eq!(read_share_file(&buf[..]).unwrap(), sv);
            }
        }
    }

    proptest! {
        #[test]
        fn combination_commutes_with_reconstruction(
            x: u32, y: u32, c1: u32, c2: u32, k: u32, masks in proptest::array::uniform4(any::<u32>())
        ) {
            let xs = share_with_mask(el(x as u64), el(masks[0] as u64), el(masks[1] as u64));
            let ys = share_with_mask(el(y as u64), el(masks[2] as u64), el(masks[3] as u64));
            let coeffs = [el(c1 as u64), el(c2 as u64)];
            let zs: Vec<_> = (0..3).map(|i| lin_combine(&coeffs, &[xs[i], ys[i]], el(k as u64)).unwrap()).collect();
            let expect = el(c1 as u64) * el(x as u64) + el(c2 as u64) * el(y as u64) + el(k as u64);
            prop_assert_eq!(reconstruct(&zs.try_into().unwrap()).unwrap(), expect);
        }

        #[test]
        fn negation_and_boolean_xor(x: bool, y: bool, l: [bool; 4]) {
            let b = |v: bool| RingElement::from_bool(v);
            let xs = share_with_mask(b(x), b(l[0]), b(l[1]));
            let ys = share_with_mask(b(y), b(l[2]), b(l[3]));
            let zs: Vec<_> = (0..3).map(|i| xs[i] + ys[i]).collect();
            prop_assert_eq!(reconstruct(&zs.try_into().unwrap()).unwrap(), b(x ^ y));
            let neg = map3(xs, |s| -s);
            prop_assert_eq!(reconstruct(&neg).unwrap(), -b(x));
        }
    }
}
