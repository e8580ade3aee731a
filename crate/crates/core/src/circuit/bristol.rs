//! Bristol Fashion boolean circuits.
//!
//! XOR becomes ADD and AND becomes MUL at width 1. INV is rewritten as XOR with
//! a constant-one wire appended after the file's wires; EQW aliases wires. Input
//! group `g` is owned by party `g mod 3`.

use std::fmt::Write as _;

use super::{Circuit, CircuitError, Gate, GateKind, InputWire};
use crate::party::PartyId;
use crate::ring::Width;

fn perr(line: usize, msg: impl Into<String>) -> CircuitError {
    CircuitError::Parse { line, msg: msg.into() }
}

pub fn parse_bristol(text: &str) -> Result<Circuit, CircuitError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
        .filter(|(_, t)| !t.is_empty());
    let num = |ln: usize, t: &str| {
        t.parse::<usize>()
            .map_err(|_| perr(ln, format!("expected a number, got `{t}`")))
    };
    let mut header = |what: &str| lines.next().ok_or_else(|| perr(0, format!("missing {what}")));

    let (l1, t) = header("gate/wire counts")?;
    if t.len() != 2 {
        return Err(perr(l1, "expected `ngates nwires`"));
    }
    let (ngates, nwires) = (num(l1, t[0])?, num(l1, t[1])?);
    let (l2, t) = header("input groups")?;
    let groups: Vec<usize> = t.iter().map(|x| num(l2, x)).collect::<Result<_, _>>()?;
    if groups.is_empty() || groups[0] != groups.len() - 1 {
        return Err(perr(l2, "input line must be `niv n1 .. nk`"));
    }
    let (l3, t) = header("output groups")?;
    let outs: Vec<usize> = t.iter().map(|x| num(l3, x)).collect::<Result<_, _>>()?;
    if outs.is_empty() || outs[0] != outs.len() - 1 {
        return Err(perr(l3, "output line must be `nov m1 .. mk`"));
    }

    let mut inputs = Vec::new();
    for (g, &n) in groups[1..].iter().enumerate() {
        for _ in 0..n {
            inputs.push(InputWire {
                wire: inputs.len(),
                owner: PartyId::ALL[g % 3],
            });
        }
    }
    let n_out: usize = outs[1..].iter().sum();
    if inputs.len() > nwires || n_out > nwires {
        return Err(perr(l1, "more inputs or outputs than wires"));
    }

    let one = nwires;
    let mut uses_one = false;
    let mut alias: Vec<usize> = (0..nwires).collect();
    let mut defined = vec![false; nwires];
    for i in &inputs {
        defined[i.wire] = true;
    }
    let mut gates = Vec::new();
    let mut count = 0;
    let mut extra_zero: Option<usize> = None;
    for (ln, t) in lines {
        count += 1;
        let op = *t.last().unwrap();
        let arity = |k: usize| -> Result<Vec<usize>, CircuitError> {
            if t.len() < 3 {
                return Err(perr(ln, "truncated gate"));
            }
            let (ni, no) = (num(ln, t[0])?, num(ln, t[1])?);
            if ni != k || no != 1 || t.len() != 2 + ni + no + 1 {
                return Err(perr(ln, format!("{op} takes {k} inputs and 1 output")));
            }
            t[2..t.len() - 1].iter().map(|x| num(ln, x)).collect()
        };
        let wire = |w: usize, defined: &[bool]| -> Result<usize, CircuitError> {
            if w >= nwires {
                return Err(perr(ln, format!("wire {w} out of range")));
            }
            if !defined[w] {
                return Err(perr(ln, format!("dangling wire {w}")));
            }
            Ok(alias[w])
        };
        let ws = match op {
            "XOR" | "AND" => arity(2)?,
            "INV" | "EQW" | "EQ" => arity(1)?,
            _ => return Err(perr(ln, format!("unsupported gate `{op}`"))),
        };
        let out = *ws.last().unwrap();
        if out >= nwires {
            return Err(perr(ln, format!("wire {out} out of range")));
        }
        if defined[out] {
            return Err(perr(ln, format!("wire {out} assigned twice")));
        }
        match op {
            "XOR" | "AND" => {
                let (l, r) = (wire(ws[0], &defined)?, wire(ws[1], &defined)?);
                let kind = if op == "XOR" { GateKind::Add } else { GateKind::Mul };
                gates.push(Gate {
                    kind,
                    left: l,
                    right: r,
                    out,
                });
            }
            "INV" => {
                let a = wire(ws[0], &defined)?;
                uses_one = true;
                gates.push(Gate {
                    kind: GateKind::Add,
                    left: a,
                    right: one,
                    out,
                });
            }
            "EQW" => alias[out] = wire(ws[0], &defined)?,
            _ => {
                uses_one = true;
                match ws[0] {
                    1 => alias[out] = one,
                    0 => {
                        let z = *extra_zero.get_or_insert(out);
                        if z == out {
                            gates.push(Gate {
                                kind: GateKind::Add,
                                left: one,
                                right: one,
                                out,
                            });
                        } else {
                            alias[out] = z;
                        }
                    }
                    c => return Err(perr(ln, format!("EQ constant must be 0 or 1, got {c}"))),
                }
            }
        }
        defined[out] = true;
    }
    if count != ngates {
        return Err(perr(l1, format!("header declares {ngates} gates, found {count}")));
    }
    let outputs = (nwires - n_out..nwires)
        .map(|w| {
            if defined[w] {
                Ok(alias[w])
            } else {
                Err(perr(l3, format!("output wire {w} is never assigned")))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let wires = nwires + uses_one as usize;
    Circuit::new(Width::BIT, wires, inputs, uses_one.then_some(one), outputs, gates)
}

/// Writes a width-1 circuit back out. Gates with the constant wire become INV.
pub fn to_bristol(c: &Circuit) -> Result<String, CircuitError> {
    let bad = |m: &str| Err(CircuitError::Serialize(m.into()));
    if c.width() != Width::BIT {
        return bad("Bristol circuits are boolean");
    }
    let nwires = c.wires() - c.const_one().is_some() as usize;
    if c.const_one().is_some_and(|w| w != nwires) {
        return bad("constant wire must be the last wire");
    }
    if c.inputs().iter().enumerate().any(|(i, w)| w.wire != i) {
        return bad("inputs must be wires 0..I");
    }
    let n_out = c.output_count();
    if c.outputs().iter().enumerate().any(|(i, &o)| o != nwires - n_out + i) {
        return bad("outputs must be the last wires in order");
    }
    let mut groups: Vec<(PartyId, usize)> = Vec::new();
    for i in c.inputs() {
        match groups.last_mut() {
            Some((o, n)) if *o == i.owner => *n += 1,
            _ => groups.push((i.owner, 1)),
        }
    }
    let mut s = String::new();
    let _ = writeln!(s, "{} {}", c.gates().len(), nwires);
    let sizes: Vec<_> = groups.iter().map(|(_, n)| n.to_string()).collect();
    let _ = writeln!(s, "{} {}", groups.len(), sizes.join(" "));
    let _ = writeln!(s, "1 {n_out}");
    let _ = writeln!(s);
    let one = c.const_one();
    for g in c.gates() {
        match (g.kind, Some(g.left) == one, Some(g.right) == one) {
            (GateKind::Add, true, true) => {
                let _ = writeln!(s, "1 1 0 {} EQ", g.out);
            }
            (GateKind::Add, false, true) => {
                let _ = writeln!(s, "1 1 {} {} INV", g.left, g.out);
            }
            (GateKind::Add, true, false) => {
                let _ = writeln!(s, "1 1 {} {} INV", g.right, g.out);
            }
            (GateKind::Add, false, false) => {
                let _ = writeln!(s, "2 1 {} {} {} XOR", g.left, g.right, g.out);
            }
            (GateKind::Mul, false, false) => {
                let _ = writeln!(s, "2 1 {} {} {} AND", g.left, g.right, g.out);
            }
            (GateKind::Mul, _, _) => return bad("AND with the constant wire"),
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::RingElement;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn bits(v: &[u64]) -> Vec<RingElement> {
        v.iter().map(|&b| RingElement::new(b, Width::BIT)).collect()
    }

    #[test]
    fn single_gates() {
        let x = parse_bristol("1 3\n2 1 1\n1 1\n\n2 1 0 1 2 XOR\n").unwrap();
        assert_eq!((x.mul_count(), x.add_count()), (0, 1));
        let a = parse_bristol("1 3\n2 1 1\n1 1\n\n2 1 0 1 2 AND\n").unwrap();
        assert_eq!((a.mul_count(), a.depth()), (1, 1));
        assert_eq!(a.eval_plain(&bits(&[1, 1])).unwrap(), bits(&[1]));
        assert_eq!(a.inputs()[1].owner, PartyId::P1);
    }

    #[test]
    fn inv_eqw_and_constants() {
        let text = "4 6\n1 2\n1 3\n\n1 1 0 2 INV\n1 1 2 3 EQW\n2 1 3 1 4 AND\n1 1 1 5 EQ\n";
        let c = parse_bristol(text).unwrap();
        assert_eq!(c.const_one(), Some(6));
        for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let out = c.eval_plain(&bits(&[a, b])).unwrap();
            assert_eq!(out, bits(&[1 - a, (1 - a) & b, 1]));
        }
        let zero = parse_bristol("1 2\n1 1\n1 1\n\n1 1 0 1 EQ\n").unwrap();
        assert_eq!(zero.eval_plain(&bits(&[1])).unwrap(), bits(&[0]));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_bristol("1 3\n2 1 1\n1 1\n\n2 1 0 7 2 AND\n").unwrap_err();
        assert_eq!(
            e,
            CircuitError::Parse {
                line: 5,
                msg: "wire 7 out of range".into()
            }
        );
        let e = parse_bristol("2 4\n2 1 1\n1 1\n\n2 1 0 2 3 AND\n2 1 0 1 2 XOR\n").unwrap_err();
        assert_eq!(
            e,
            CircuitError::Parse {
                line: 5,
                msg: "dangling wire 2".into()
            }
        );
        assert!(matches!(
            parse_bristol("1 3\n2 1 1\n1 1\n\n2 1 0 1 2 OR\n"),
            Err(CircuitError::Parse { line: 5, .. })
        ));
        assert!(matches!(
            parse_bristol("2 3\n2 1 1\n1 1\n\n2 1 0 1 2 AND\n"),
            Err(CircuitError::Parse { line: 1, .. })
        ));
    }

    fn random_bristol(seed: u64) -> String {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n_in = rng.gen_range(2..6);
        let n_gates = rng.gen_range(1..40);
        let mut lines = Vec::new();
        for g in 0..n_gates {
            let out = n_in + g;
            let a = rng.gen_range(0..out);
            let b = rng.gen_range(0..out);
            lines.push(match rng.gen_range(0..3) {
                0 => format!("2 1 {a} {b} {out} XOR"),
                1 => format!("2 1 {a} {b} {out} AND"),
                _ => format!("1 1 {a} {out} INV"),
            });
        }
        let half = n_in / 2;
        format!(
            "{} {}\n2 {} {}\n1 1\n\n{}\n",
            n_gates,
            n_in + n_gates,
            half,
            n_in - half,
            lines.join("\n")
        )
    }

    proptest! {
        #[test]
        fn serialize_then_parse_preserves_gates(seed: u64) {
            let c = parse_bristol(&random_bristol(seed)).unwrap();
            let back = parse_bristol(&to_bristol(&c).unwrap()).unwrap();
            prop_assert_eq!(back.gates(), c.gates());
            prop_assert_eq!(back.outputs(), c.outputs());
            prop_assert_eq!(back.const_one(), c.const_one());
            prop_assert_eq!(back.inputs().len(), c.inputs().len());
        }
    }
}
