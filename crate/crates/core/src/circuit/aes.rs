//! AES-128 as a Bristol Fashion circuit.
//!
//! Inputs: the key (wires 0..128) then the plaintext (128..256); byte `i` bit `j`
//! (least significant first) sits at offset `8i + j`. Outputs follow the same
//! layout. The S-box is the Boyar-Peralta depth-16 circuit with 34 AND gates.

use std::fmt::Write as _;

use aes::cipher::{generic_array::GenericArray, BlockEncrypt, KeyInit};

use super::{parse_bristol, Circuit};
use crate::party::PartyId;
use crate::ring::{RingElement, Width};

/// S-box gates as `(output, left, op, right)`; inputs `U0..U7` (most significant
/// first), outputs `S0..S7`. `^` is XOR, `&` AND and `#` XNOR.
const SBOX: &[(&str, &str, char, &str)] = &[
    ("T1", "U0", '^', "U3"),
    ("T2", "U0", '^', "U5"),
    ("T3", "U0", '^', "U6"),
    ("T4", "U3", '^', "U5"),
    ("T5", "U4", '^', "U6"),
    ("T6", "T1", '^', "T5"),
    ("T7", "U1", '^', "U2"),
    ("T8", "U7", '^', "T6"),
    ("T9", "U7", '^', "T7"),
    ("T10", "T6", '^', "T7"),
    ("T11", "U1", '^', "U5"),
    ("T12", "U2", '^', "U5"),
    ("T13", "T3", '^', "T4"),
    ("T14", "T6", '^', "T11"),
    ("T15", "T5", '^', "T11"),
    ("T16", "T5", '^', "T12"),
    ("T17", "T9", '^', "T16"),
    ("T18", "U3", '^', "U7"),
    ("T19", "T7", '^', "T18"),
    ("T20", "T1", '^', "T19"),
    ("T21", "U6", '^', "U7"),
    ("T22", "T7", '^', "T21"),
    ("T23", "T2", '^', "T22"),
    ("T24", "T2", '^', "T10"),
    ("T25", "T20", '^', "T17"),
    ("T26", "T3", '^', "T16"),
    ("T27", "T1", '^', "T12"),
    ("M1", "T13", '&', "T6"),
    ("M2", "T23", '&', "T8"),
    ("M3", "T14", '^', "M1"),
    ("M4", "T19", '&', "U7"),
    ("M5", "M4", '^', "M1"),
    ("M6", "T3", '&', "T16"),
    ("M7", "T22", '&', "T9"),
    ("M8", "T26", '^', "M6"),
    ("M9", "T20", '&', "T17"),
    ("M10", "M9", '^', "M6"),
    ("M11", "T1", '&', "T15"),
    ("M12", "T4", '&', "T27"),
    ("M13", "M12", '^', "M11"),
    ("M14", "T2", '&', "T10"),
    ("M15", "M14", '^', "M11"),
    ("M16", "M3", '^', "M2"),
    ("M17", "M5", '^', "T24"),
    ("M18", "M8", '^', "M7"),
    ("M19", "M10", '^', "M15"),
    ("M20", "M16", '^', "M13"),
    ("M21", "M17", '^', "M15"),
    ("M22", "M18", '^', "M13"),
    ("M23", "M19", '^', "T25"),
    ("M24", "M22", '^', "M23"),
    ("M25", "M22", '&', "M20"),
    ("M26", "M21", '^', "M25"),
    ("M27", "M20", '^', "M21"),
    ("M28", "M23", '^', "M25"),
    ("M29", "M28", '&', "M27"),
    ("M30", "M26", '&', "M24"),
    ("M31", "M20", '&', "M23"),
    ("M32", "M27", '&', "M31"),
    ("M33", "M27", '^', "M25"),
    ("M34", "M21", '&', "M22"),
    ("M35", "M24", '&', "M34"),
    ("M36", "M24", '^', "M25"),
    ("M37", "M21", '^', "M29"),
    ("M38", "M32", '^', "M33"),
    ("M39", "M23", '^', "M30"),
    ("M40", "M35", '^', "M36"),
    ("M41", "M38", '^', "M40"),
    ("M42", "M37", '^', "M39"),
    ("M43", "M37", '^', "M38"),
    ("M44", "M39", '^', "M40"),
    ("M45", "M42", '^', "M41"),
    ("M46", "M44", '&', "T6"),
    ("M47", "M40", '&', "T8"),
    ("M48", "M39", '&', "U7"),
    ("M49", "M43", '&', "T16"),
    ("M50", "M38", '&', "T9"),
    ("M51", "M37", '&', "T17"),
    ("M52", "M42", '&', "T15"),
    ("M53", "M45", '&', "T27"),
    ("M54", "M41", '&', "T10"),
    ("M55", "M44", '&', "T13"),
    ("M56", "M40", '&', "T23"),
    ("M57", "M39", '&', "T19"),
    ("M58", "M43", '&', "T3"),
    ("M59", "M38", '&', "T22"),
    ("M60", "M37", '&', "T20"),
    ("M61", "M42", '&', "T1"),
    ("M62", "M45", '&', "T4"),
    ("M63", "M41", '&', "T2"),
    ("L0", "M61", '^', "M62"),
    ("L1", "M50", '^', "M56"),
    ("L2", "M46", '^', "M48"),
    ("L3", "M47", '^', "M55"),
    ("L4", "M54", '^', "M58"),
    ("L5", "M49", '^', "M61"),
    ("L6", "M62", '^', "L5"),
    ("L7", "M46", '^', "L3"),
    ("L8", "M51", '^', "M59"),
    ("L9", "M52", '^', "M53"),
    ("L10", "M53", '^', "L4"),
    ("L11", "M60", '^', "L2"),
    ("L12", "M48", '^', "M51"),
    ("L13", "M50", '^', "L0"),
    ("L14", "M52", '^', "M61"),
    ("L15", "M55", '^', "L1"),
    ("L16", "M56", '^', "L0"),
    ("L17", "M57", '^', "L1"),
    ("L18", "M58", '^', "L8"),
    ("L19", "M63", '^', "L4"),
    ("L20", "L0", '^', "L1"),
    ("L21", "L1", '^', "L7"),
    ("L22", "L3", '^', "L12"),
    ("L23", "L18", '^', "L2"),
    ("L24", "L15", '^', "L9"),
    ("L25", "L6", '^', "L10"),
    ("L26", "L7", '^', "L9"),
    ("L27", "L8", '^', "L10"),
    ("L28", "L11", '^', "L14"),
    ("L29", "L11", '^', "L17"),
    ("S0", "L6", '^', "L24"),
    ("S1", "L16", '#', "L26"),
    ("S2", "L19", '#', "L28"),
    ("S3", "L6", '^', "L21"),
    ("S4", "L20", '^', "L22"),
    ("S5", "L25", '^', "L29"),
    ("S6", "L13", '#', "L27"),
    ("S7", "L6", '#', "L23"),
];

/// Owner of each input group: the key with `P0`, the plaintext with `P1`.
pub const AES_INPUT_OWNERS: [PartyId; 2] = [PartyId::P0, PartyId::P1];

struct Builder {
    next: usize,
    gates: Vec<String>,
}

type Byte = [usize; 8];

impl Builder {
    fn fresh(&mut self) -> usize {
        self.next += 1;
        self.next - 1
    }

    fn xor(&mut self, a: usize, b: usize) -> usize {
        let o = self.fresh();
        self.gates.push(format!("2 1 {a} {b} {o} XOR"));
        o
    }

    fn and(&mut self, a: usize, b: usize) -> usize {
        let o = self.fresh();
        self.gates.push(format!("2 1 {a} {b} {o} AND"));
        o
    }

    fn inv(&mut self, a: usize) -> usize {
        let o = self.fresh();
        self.gates.push(format!("1 1 {a} {o} INV"));
        o
    }

    fn xor_byte(&mut self, a: Byte, b: Byte) -> Byte {
        std::array::from_fn(|j| self.xor(a[j], b[j]))
    }

    /// Multiplication by `x` in GF(2^8).
    fn xtime(&mut self, a: Byte) -> Byte {
        [
            a[7],
            self.xor(a[0], a[7]),
            a[1],
            self.xor(a[2], a[7]),
            self.xor(a[3], a[7]),
            a[4],
            a[5],
            a[6],
        ]
    }

    fn sbox(&mut self, x: Byte) -> Byte {
        let mut named = std::collections::HashMap::new();
        for k in 0..8 {
            named.insert(format!("U{k}"), x[7 - k]);
        }
        for &(out, l, op, r) in SBOX {
            let (a, b) = (named[l], named[r]);
            let w = match op {
                '^' => self.xor(a, b),
                '&' => self.and(a, b),
                _ => {
                    let t = self.xor(a, b);
                    self.inv(t)
                }
            };
            named.insert(out.to_string(), w);
        }
        std::array::from_fn(|j| named[&format!("S{}", 7 - j)])
    }

    fn add_const(&mut self, a: Byte, c: u8) -> Byte {
        std::array::from_fn(|j| if (c >> j) & 1 == 1 { self.inv(a[j]) } else { a[j] })
    }
}

/// The AES-128 encryption circuit, including key expansion, as Bristol text.
pub fn aes128_bristol() -> String {
    let mut b = Builder {
        next: 256,
        gates: Vec::new(),
    };
    let byte = |base: usize, i: usize| -> Byte { std::array::from_fn(|j| base + 8 * i + j) };
    let key: Vec<Byte> = (0..16).map(|i| byte(0, i)).collect();
    let mut state: Vec<Byte> = (0..16).map(|i| byte(128, i)).collect();

    let mut words: Vec<[Byte; 4]> = (0..4).map(|w| std::array::from_fn(|r| key[4 * w + r])).collect();
    let rcon = [0x01u8, 0x02, 0x04, 0x08, 0x10, 0x20, 0x40, 0x80, 0x1b, 0x36];
    for i in 4..44 {
        let prev = words[i - 1];
        let temp = if i % 4 == 0 {
            let mut t: [Byte; 4] = std::array::from_fn(|r| b.sbox(prev[(r + 1) % 4]));
            t[0] = b.add_const(t[0], rcon[i / 4 - 1]);
            t
        } else {
            prev
        };
        let back = words[i - 4];
        words.push(std::array::from_fn(|r| b.xor_byte(back[r], temp[r])));
    }
    let round_key = |r: usize| -> Vec<Byte> { (0..16).map(|k| words[4 * r + k / 4][k % 4]).collect() };

    let rk = round_key(0);
    state = (0..16).map(|k| b.xor_byte(state[k], rk[k])).collect();
    for round in 1..=10 {
        let sub: Vec<Byte> = state.iter().map(|s| b.sbox(*s)).collect();
        let shifted: Vec<Byte> = (0..16).map(|k| sub[k % 4 + 4 * ((k / 4 + k % 4) % 4)]).collect();
        let mixed = if round < 10 {
            let mut out = Vec::with_capacity(16);
            for c in 0..4 {
                let a: [Byte; 4] = std::array::from_fn(|r| shifted[4 * c + r]);
                let t01 = b.xor_byte(a[0], a[1]);
                let t23 = b.xor_byte(a[2], a[3]);
                let all = b.xor_byte(t01, t23);
                for r in 0..4 {
                    let pair = b.xor_byte(a[r], a[(r + 1) % 4]);
                    let x = b.xtime(pair);
                    let y = b.xor_byte(x, all);
                    out.push(b.xor_byte(y, a[r]));
                }
            }
            out
        } else {
            shifted
        };
        let rk = round_key(round);
        state = (0..16).map(|k| b.xor_byte(mixed[k], rk[k])).collect();
    }
    // the final round-key additions are the last 128 gates, so outputs are the last wires
    debug_assert_eq!(state[15][7], b.next - 1);

    let mut s = String::new();
    let _ = writeln!(s, "{} {}", b.gates.len(), b.next);
    let _ = writeln!(s, "2 128 128");
    let _ = writeln!(s, "1 128");
    let _ = writeln!(s);
    for g in &b.gates {
        let _ = writeln!(s, "{g}");
    }
    s
}

pub fn aes128_circuit() -> Circuit {
    parse_bristol(&aes128_bristol()).expect("generated AES circuit parses")
}

/// Encrypts one block with a standard AES-128 implementation.
pub fn aes128_reference(key: &[u8; 16], block: &[u8; 16]) -> [u8; 16] {
    let cipher = aes::Aes128::new(GenericArray::from_slice(key));
    let mut b = GenericArray::clone_from_slice(block);
    cipher.encrypt_block(&mut b);
    b.into()
}

/// Bytes as single-bit ring elements, least significant bit first.
pub fn bytes_to_bits(bytes: &[u8]) -> Vec<RingElement> {
    bytes
        .iter()
        .flat_map(|b| (0..8).map(move |j| RingElement::new(((b >> j) & 1) as u64, Width::BIT)))
        .collect()
}

/// Inverse of [`bytes_to_bits`]; a trailing partial byte is padded with zeros.
pub fn bits_to_bytes(bits: &[RingElement]) -> Vec<u8> {
    bits.chunks(8)
        .map(|c| {
            c.iter()
                .enumerate()
                .fold(0u8, |acc, (j, b)| acc | (((b.value() & 1) as u8) << j))
        })
        .collect()
}

/// A single S-box as a circuit on one byte, for testing.
pub fn aes_sbox_circuit() -> Circuit {
    let mut b = Builder {
        next: 8,
        gates: Vec::new(),
    };
    let out = b.sbox(std::array::from_fn(|j| j));
    // copy the outputs to the last wires, as Bristol requires
    let zero = b.xor(0, 0);
    let last: Vec<usize> = out.iter().map(|&w| b.xor(w, zero)).collect();
    debug_assert_eq!(*last.last().unwrap(), b.next - 1);
    let text = format!("{} {}\n1 8\n1 8\n\n{}\n", b.gates.len(), b.next, b.gates.join("\n"));
    parse_bristol(&text).expect("generated S-box circuit parses")
}

#[cfg(test)]
mod tests {
    use super::*;

    use bits_to_bytes as from_bits;
    use bytes_to_bits as to_bits;

    /// S-box from the field inverse and the affine map.
    fn sbox_oracle(x: u8) -> u8 {
        let mul = |mut a: u8, mut b: u8| {
            let mut p = 0u8;
            while b != 0 {
                if b & 1 == 1 {
                    p ^= a;
                }
                let hi = a & 0x80;
                a <<= 1;
                if hi != 0 {
                    a ^= 0x1b;
                }
                b >>= 1;
            }
            p
        };
        let inv = if x == 0 {
            0
        } else {
            (1..=255u8).find(|&y| mul(x, y) == 1).unwrap()
        };
        let mut s = inv;
        for k in 1..5 {
            s ^= inv.rotate_left(k);
        }
        s ^ 0x63
    }

    #[test]
    fn sbox_circuit_matches_field_oracle() {
        let c = aes_sbox_circuit();
        assert_eq!(c.mul_count(), 34);
        for x in 0..=255u8 {
            let out = c.eval_plain(&to_bits(&[x])).unwrap();
            assert_eq!(from_bits(&out)[0], sbox_oracle(x), "x={x:#04x}");
        }
    }

    #[test]
    fn fips197_vector() {
        let c = aes128_circuit();
        assert_eq!(c.mul_count(), 200 * 34);
        let key: Vec<u8> = (0..16).collect();
        let pt: Vec<u8> = (0..16).map(|i| i * 0x11).collect();
        let out = from_bits(&c.eval_plain(&to_bits(&[key.clone(), pt.clone()].concat())).unwrap());
        assert_eq!(hex::encode(&out), "69c4e0d86a7b0430d8cdb78070b4c55a");
        assert_eq!(
            out,
            aes128_reference(&key.try_into().unwrap(), &pt.try_into().unwrap()).to_vec()
        );
    }
}

#[cfg(test)]
mod shipped {
    const PATH: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/circuits/aes_128.txt");

    #[test]
    fn shipped_file_matches_generator() {
        let text = super::aes128_bristol();
        if std::env::var_os("MASK3PC_REGEN").is_some() {
            std::fs::write(PATH, &text).unwrap();
        }
        assert_eq!(std::fs::read_to_string(PATH).unwrap(), text);
    }
}
