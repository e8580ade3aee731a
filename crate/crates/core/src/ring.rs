//! Arithmetic over `Z_{2^l}` with the width carried in every element.
//!
//! Width 1 is the boolean ring: addition is XOR and multiplication is AND.
//! Width 8 exists for brute-force tests; protocol runs use 1, 32 or 64.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RingError {
    #[error("ring width mismatch: {0} vs {1}")]
    WidthMismatch(u32, u32),
    #[error("unsupported ring width {0}")]
    UnsupportedWidth(u32),
    #[error("msb is undefined on the boolean ring")]
    BooleanMsb,
    #[error("fixed-point value {0} overflows the integer part")]
    FixedPointRange(f64),
    #[error("expected {expected} bytes for {count} elements, got {got}")]
    Length { expected: usize, got: usize, count: usize },
}

/// Bit width `l` of a ring `Z_{2^l}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Width(u8);

impl Width {
    pub const BIT: Width = Width(1);
    pub const W8: Width = Width(8);
    pub const W32: Width = Width(32);
    pub const W64: Width = Width(64);

    pub fn new(bits: u32) -> Result<Self, RingError> {
        match bits {
            1 | 8 | 32 | 64 => Ok(Width(bits as u8)),
            _ => Err(RingError::UnsupportedWidth(bits)),
        }
    }

    pub fn bits(self) -> u32 {
        self.0 as u32
    }

    pub fn mask(self) -> u64 {
        if self.0 == 64 {
            u64::MAX
        } else {
            (1u64 << self.0) - 1
        }
    }

    /// Bytes per element on the wire when not bit-packed.
    pub fn byte_len(self) -> usize {
        (self.0 as usize).div_ceil(8)
    }

    /// Bytes needed for `count` packed elements.
    pub fn packed_len(self, count: usize) -> usize {
        if self.0 == 1 {
            count.div_ceil(8)
        } else {
            count * self.byte_len()
        }
    }

    pub fn reduce(self, v: u64) -> u64 {
        v & self.mask()
    }
}

impl fmt::Display for Width {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An element of `Z_{2^l}`. The value is always reduced.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct RingElement {
    value: u64,
    width: Width,
}

impl RingElement {
    pub fn new(value: u64, width: Width) -> Self {
        RingElement {
            value: width.reduce(value),
            width,
        }
    }

    pub fn zero(width: Width) -> Self {
        RingElement { value: 0, width }
    }

    pub fn one(width: Width) -> Self {
        RingElement { value: 1, width }
    }

    pub fn from_bool(b: bool) -> Self {
        RingElement::new(b as u64, Width::BIT)
    }

    /// Two's-complement embedding of a signed integer.
    pub fn from_signed(v: i64, width: Width) -> Self {
        RingElement::new(v as u64, width)
    }

    pub fn value(self) -> u64 {
        self.value
    }

    pub fn width(self) -> Width {
        self.width
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    /// Sign-extended two's-complement reading.
    pub fn as_signed(self) -> i64 {
        let bits = self.width.bits();
        if bits == 64 {
            self.value as i64
        } else {
            let shift = 64 - bits;
            ((self.value << shift) as i64) >> shift
        }
    }

    /// Bit `l-1`, the two's-complement sign.
    pub fn msb(self) -> Result<bool, RingError> {
        if self.width == Width::BIT {
            return Err(RingError::BooleanMsb);
        }
        Ok((self.value >> (self.width.bits() - 1)) & 1 == 1)
    }

    /// Low bit; for width 1 this is the element itself.
    pub fn bit(self) -> bool {
        self.value & 1 == 1
    }

    fn check(self, rhs: Self) -> Result<Width, RingError> {
        if self.width != rhs.width {
            Err(RingError::WidthMismatch(self.width.bits(), rhs.width.bits()))
        } else {
            Ok(self.width)
        }
    }

    pub fn try_add(self, rhs: Self) -> Result<Self, RingError> {
        let w = self.check(rhs)?;
        Ok(RingElement::new(self.value.wrapping_add(rhs.value), w))
    }

    pub fn try_sub(self, rhs: Self) -> Result<Self, RingError> {
        let w = self.check(rhs)?;
        Ok(RingElement::new(self.value.wrapping_sub(rhs.value), w))
    }

    pub fn try_mul(self, rhs: Self) -> Result<Self, RingError> {
        let w = self.check(rhs)?;
        Ok(RingElement::new(self.value.wrapping_mul(rhs.value), w))
    }

    pub fn scale(self, k: u64) -> Self {
        RingElement::new(self.value.wrapping_mul(k), self.width)
    }

    pub fn to_le_bytes(self) -> Vec<u8> {
        self.value.to_le_bytes()[..self.width.byte_len()].to_vec()
    }
}

impl fmt::Debug for RingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.value, self.width)
    }
}

impl fmt::Display for RingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

// Operators panic on width mismatch; the checked `try_*` forms return errors.
impl Add for RingElement {
    type Output = RingElement;
    fn add(self, rhs: Self) -> Self {
        self.try_add(rhs).expect("ring width mismatch")
    }
}

impl Sub for RingElement {
    type Output = RingElement;
    fn sub(self, rhs: Self) -> Self {
        self.try_sub(rhs).expect("ring width mismatch")
    }
}

impl Mul for RingElement {
    type Output = RingElement;
    fn mul(self, rhs: Self) -> Self {
        self.try_mul(rhs).expect("ring width mismatch")
    }
}

impl Neg for RingElement {
    type Output = RingElement;
    fn neg(self) -> Self {
        RingElement::new(self.value.wrapping_neg(), self.width)
    }
}

impl AddAssign for RingElement {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl SubAssign for RingElement {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

/// Sums a slice; the width is taken from `width` so empty slices work.
pub fn sum(width: Width, elems: impl IntoIterator<Item = RingElement>) -> RingElement {
    elems.into_iter().fold(RingElement::zero(width), |a, b| a + b)
}

/// Little-endian packing, `ceil(l/8)` bytes per element, 8 bits per byte at width 1.
pub fn pack(width: Width, elems: &[RingElement]) -> Vec<u8> {
    let mut out = vec![0u8; width.packed_len(elems.len())];
    if width == Width::BIT {
        for (i, e) in elems.iter().enumerate() {
            debug_assert_eq!(e.width(), width);
            if e.bit() {
                out[i / 8] |= 1 << (i % 8);
            }
        }
    } else {
        let n = width.byte_len();
        for (i, e) in elems.iter().enumerate() {
            debug_assert_eq!(e.width(), width);
            out[i * n..(i + 1) * n].copy_from_slice(&e.value.to_le_bytes()[..n]);
        }
    }
    out
}

pub fn unpack(width: Width, bytes: &[u8], count: usize) -> Result<Vec<RingElement>, RingError> {
    let expected = width.packed_len(count);
    if bytes.len() != expected {
        return Err(RingError::Length {
            expected,
            got: bytes.len(),
            count,
        });
    }
    if width == Width::BIT {
        return Ok((0..count)
            .map(|i| RingElement::from_bool((bytes[i / 8] >> (i % 8)) & 1 == 1))
            .collect());
    }
    let n = width.byte_len();
    Ok(bytes
        .chunks_exact(n)
        .map(|c| {
            let mut buf = [0u8; 8];
            buf[..n].copy_from_slice(c);
            RingElement::new(u64::from_le_bytes(buf), width)
        })
        .collect())
}

/// Default fractional bits of the fixed-point encoding.
pub const FRAC_BITS: u32 = 13;
/// Integer bits of the fixed-point encoding at the default precision.
pub const INT_BITS: u32 = 50;

/// Signed fixed-point number stored in `Z_{2^64}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FixedPoint {
    raw: RingElement,
    frac_bits: u32,
}

impl FixedPoint {
    pub fn encode(x: f64, frac_bits: u32) -> Result<Self, RingError> {
        Ok(FixedPoint {
            raw: fx_encode(x, frac_bits)?,
            frac_bits,
        })
    }

    pub fn from_raw(raw: RingElement, frac_bits: u32) -> Self {
        FixedPoint { raw, frac_bits }
    }

    pub fn raw(self) -> RingElement {
        self.raw
    }

    pub fn frac_bits(self) -> u32 {
        self.frac_bits
    }

    pub fn decode(self) -> f64 {
        fx_decode(self.raw, self.frac_bits)
    }

    /// Ring product; the fractional bits add up.
    pub fn mul_raw(self, rhs: FixedPoint) -> FixedPoint {
        FixedPoint {
            raw: self.raw * rhs.raw,
            frac_bits: self.frac_bits + rhs.frac_bits,
        }
    }
}

/// `round(x * 2^frac_bits) mod 2^64`, rounding half away from zero.
pub fn fx_encode(x: f64, frac_bits: u32) -> Result<RingElement, RingError> {
    let int_bits = 63 - frac_bits;
    if !x.is_finite() || x.abs() >= (int_bits as f64).exp2() {
        return Err(RingError::FixedPointRange(x));
    }
    let scaled = (x * (frac_bits as f64).exp2()).round();
    Ok(RingElement::from_signed(scaled as i64, Width::W64))
}

pub fn fx_decode(raw: RingElement, frac_bits: u32) -> f64 {
    raw.as_signed() as f64 / (frac_bits as f64).exp2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn el(v: u64, bits: u32) -> RingElement {
        RingElement::new(v, Width::new(bits).unwrap())
    }

    #[test]
    fn wraparound_and_boolean() {
        assert_eq!(el(u32::MAX as u64, 32) + el(1, 32), el(0, 32));
        assert_eq!(el(1, 1) + el(1, 1), el(0, 1));
        assert_eq!(el(1, 1) * el(1, 1), el(1, 1));
    }

    #[test]
    fn small_width_product_matches_wide_integer() {
        let oracle = (200u128 * 3) % 256;
        assert_eq!((el(200, 8) * el(3, 8)).value() as u128, oracle);
        assert_eq!(oracle, 88);
    }

    #[test]
    fn msb_cases() {
        assert!(el(0x80, 8).msb().unwrap());
        assert!(!el(0x7f, 8).msb().unwrap());
        assert_eq!(el(1, 1).msb(), Err(RingError::BooleanMsb));
        let minus_half = fx_encode(-0.5, FRAC_BITS).unwrap();
        assert_eq!(minus_half.value() as u128, (1u128 << 64) - (1u128 << 12));
        assert!(minus_half.msb().unwrap());
    }

    #[test]
    fn width_mismatch_is_an_error() {
        assert!(matches!(
            el(1, 32).try_add(el(1, 64)),
            Err(RingError::WidthMismatch(32, 64))
        ));
        assert!(Width::new(16).is_err());
    }

    #[test]
    fn fixed_point_examples() {
        assert_eq!(fx_encode(1.5, FRAC_BITS).unwrap().value(), 12288);
        assert_eq!(fx_encode(0.0, FRAC_BITS).unwrap().value(), 0);
        let minus_one = fx_encode(-1.0, FRAC_BITS).unwrap().value() as u128;
        assert_eq!(minus_one, (1u128 << 64) - 8192);
        assert!(fx_encode(2f64.powi(50), FRAC_BITS).is_err());
        assert!(fx_encode(f64::NAN, FRAC_BITS).is_err());
        // half-way cases round away from zero
        let tick = 2f64.powi(-14);
        assert_eq!(fx_encode(tick, FRAC_BITS).unwrap().as_signed(), 1);
        assert_eq!(fx_encode(-tick, FRAC_BITS).unwrap().as_signed(), -1);
    }

    #[test]
    fn packing_roundtrip_all_widths() {
        for bits in [1, 8, 32, 64] {
            let w = Width::new(bits).unwrap();
            let xs: Vec<_> = (0..13u64)
                .map(|i| RingElement::new(i.wrapping_mul(0x9e37_79b9_7f4a_7c15), w))
                .collect();
            let bytes = pack(w, &xs);
            assert_eq!(bytes.len(), w.packed_len(xs.len()));
            assert_eq!(unpack(w, &bytes, xs.len()).unwrap(), xs);
        }
        assert_eq!(pack(Width::W32, &[el(1, 32)]), vec![1, 0, 0, 0]);
        assert!(unpack(Width::W32, &[0; 3], 1).is_err());
    }

    fn any_width() -> impl Strategy<Value = Width> {
        prop_oneof![Just(Width::BIT), Just(Width::W8), Just(Width::W32), Just(Width::W64)]
    }

    proptest! {
        #[test]
        fn commutative_ring_laws(w in any_width(), a: u64, b: u64, c: u64) {
            let (a, b, c) = (RingElement::new(a, w), RingElement::new(b, w), RingElement::new(c, w));
            prop_assert_eq!((a + b) + c, a + (b + c));
            prop_assert_eq!(a * (b + c), a * b + a * c);
            prop_assert_eq!(a * b, b * a);
            prop_assert_eq!(a - a, RingElement::zero(w));
            prop_assert_eq!(a + (-a), RingElement::zero(w));
        }

        #[test]
        fn matches_big_integer_oracle(w in any_width(), a: u64, b: u64) {
            let m = 1u128 << w.bits();
            let (x, y) = (a as u128 % m, b as u128 % m);
            let prod = RingElement::new(a, w) * RingElement::new(b, w);
            prop_assert_eq!(prod.value() as u128, (x * y) % m);
            let s = RingElement::new(a, w) + RingElement::new(b, w);
            prop_assert_eq!(s.value() as u128, (x + y) % m);
        }

        #[test]
        fn fixed_point_roundtrip(x in -1.0e12f64..1.0e12) {
            let back = fx_decode(fx_encode(x, FRAC_BITS).unwrap(), FRAC_BITS);
            prop_assert!((back - x).abs() <= 2f64.powi(-(FRAC_BITS as i32)));
        }

        #[test]
        fn fixed_point_add_exact(a in -(1i64 << 40)..(1i64 << 40), b in -(1i64 << 40)..(1i64 << 40)) {
            let (x, y) = (a as f64 / 8192.0, b as f64 / 8192.0);
            let s = fx_encode(x, FRAC_BITS).unwrap() + fx_encode(y, FRAC_BITS).unwrap();
            prop_assert_eq!(fx_decode(s, FRAC_BITS), x + y);
        }

        #[test]
        fn fixed_point_product_has_double_precision(x in -2.0e5f64..2.0e5, y in -2.0e5f64..2.0e5) {
            prop_assume!(x.abs() < 262_144.0 && y.abs() < 262_144.0);
            let p = FixedPoint::encode(x, FRAC_BITS).unwrap().mul_raw(FixedPoint::encode(y, FRAC_BITS).unwrap());
            prop_assert_eq!(p.frac_bits(), 2 * FRAC_BITS);
            let qx = (x * 8192.0).round() / 8192.0;
            let qy = (y * 8192.0).round() / 8192.0;
            prop_assert_eq!(p.decode(), qx * qy);
        }
    }
}
