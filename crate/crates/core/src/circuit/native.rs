//! Plain-text arithmetic circuits.
//!
//! ```text
//! I O A M l
//! OWNERS 0 1 2          (optional, one owner per input; default round-robin)
//! OUTPUTS 5 6           (optional; default the last O wires)
//! ADD 0 1 3
//! MUL 3 2 4
//! ```
//!
//! Inputs are wires `0..I`.

use std::fmt::Write as _;

use super::{Circuit, CircuitError, Gate, GateKind, InputWire};
use crate::party::PartyId;
use crate::ring::Width;

fn perr(line: usize, msg: impl Into<String>) -> CircuitError {
    CircuitError::Parse { line, msg: msg.into() }
}

fn nums(line: usize, toks: &[&str]) -> Result<Vec<usize>, CircuitError> {
    toks.iter()
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| perr(line, format!("expected a number, got `{t}`")))
        })
        .collect()
}

pub fn parse_native(text: &str) -> Result<Circuit, CircuitError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hl, header) = lines.next().ok_or_else(|| perr(1, "empty circuit"))?;
    let h = nums(hl, &header.split_whitespace().collect::<Vec<_>>())?;
    let [n_in, n_out, n_add, n_mul, bits] = h[..] else {
        return Err(perr(hl, "header must be `I O A M l`"));
    };
    let width = Width::new(bits as u32).map_err(|e| perr(hl, e.to_string()))?;
    let mut owners: Vec<PartyId> = (0..n_in).map(|i| PartyId::ALL[i % 3]).collect();
    let mut outputs = None;
    let mut gates = Vec::new();
    for (ln, line) in lines {
        let toks: Vec<_> = line.split_whitespace().collect();
        match toks[0] {
            "OWNERS" => {
                let os = nums(ln, &toks[1..])?;
                if os.len() != n_in {
                    return Err(perr(ln, format!("{} owners for {n_in} inputs", os.len())));
                }
                owners = os
                    .into_iter()
                    .map(|o| PartyId::from_index(o).ok_or_else(|| perr(ln, format!("bad owner {o}"))))
                    .collect::<Result<_, _>>()?;
            }
            "OUTPUTS" => outputs = Some(nums(ln, &toks[1..])?),
            kw @ ("ADD" | "MUL") => {
                let [l, r, o] = nums(ln, &toks[1..])?[..] else {
                    return Err(perr(ln, "gate needs `left right out`"));
                };
                let kind = if kw == "ADD" { GateKind::Add } else { GateKind::Mul };
                gates.push((
                    ln,
                    Gate {
                        kind,
                        left: l,
                        right: r,
                        out: o,
                    },
                ));
            }
            other => return Err(perr(ln, format!("unknown keyword `{other}`"))),
        }
    }
    let adds = gates.iter().filter(|(_, g)| g.kind == GateKind::Add).count();
    if adds != n_add || gates.len() - adds != n_mul {
        return Err(perr(
            hl,
            format!(
                "header declares A={n_add} M={n_mul}, found A={adds} M={}",
                gates.len() - adds
            ),
        ));
    }
    let wires = gates
        .iter()
        .flat_map(|(_, g)| [g.left, g.right, g.out])
        .chain(outputs.iter().flatten().copied())
        .max()
        .map_or(n_in, |m| (m + 1).max(n_in));
    let outputs = outputs.unwrap_or_else(|| (wires - n_out.min(wires)..wires).collect());
    if outputs.len() != n_out {
        return Err(perr(hl, format!("header declares O={n_out}, found {}", outputs.len())));
    }
    let inputs = owners
        .into_iter()
        .enumerate()
        .map(|(wire, owner)| InputWire { wire, owner })
        .collect();
    let lines: Vec<usize> = gates.iter().map(|(l, _)| *l).collect();
    let gates = gates.into_iter().map(|(_, g)| g).collect();
    Circuit::new(width, wires, inputs, None, outputs, gates).map_err(|e| match e {
        CircuitError::Dangling { gate, wire } if gate < lines.len() => {
            perr(lines[gate], format!("wire {wire} used before definition"))
        }
        CircuitError::Redefined(w) => perr(hl, format!("wire {w} defined twice")),
        other => other,
    })
}

pub fn to_native(c: &Circuit) -> Result<String, CircuitError> {
    if c.const_one().is_some() {
        return Err(CircuitError::Serialize("native format has no constant wire".into()));
    }
    if c.inputs().iter().enumerate().any(|(i, w)| w.wire != i) {
        return Err(CircuitError::Serialize("inputs must be wires 0..I".into()));
    }
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{} {} {} {} {}",
        c.inputs().len(),
        c.output_count(),
        c.add_count(),
        c.mul_count(),
        c.width()
    );
    let owners: Vec<_> = c.inputs().iter().map(|i| i.owner.index().to_string()).collect();
    let _ = writeln!(s, "OWNERS {}", owners.join(" "));
    let outs: Vec<_> = c.outputs().iter().map(|o| o.to_string()).collect();
    let _ = writeln!(s, "OUTPUTS {}", outs.join(" "));
    for g in c.gates() {
        let kw = if g.kind == GateKind::Add { "ADD" } else { "MUL" };
        let _ = writeln!(s, "{kw} {} {} {}", g.left, g.right, g.out);
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{random_circuit, RandomCircuitParams};
    use crate::ring::RingElement;
    use proptest::prelude::*;

    #[test]
    fn parses_small_circuit() {
        let c = parse_native("3 1 1 1 32\nADD 0 1 3\nMUL 3 2 4\n").unwrap();
        let x = |v| RingElement::new(v, Width::W32);
        assert_eq!(c.eval_plain(&[x(2), x(3), x(4)]).unwrap(), vec![x(20)]);
        assert_eq!(c.inputs()[1].owner, PartyId::P1);
    }

    #[test]
    fn reports_line_numbers() {
        let e = parse_native("2 1 1 0 32\n\nADD 0 5 2\n").unwrap_err();
        assert_eq!(
            e,
            CircuitError::Parse {
                line: 3,
                msg: "wire 5 used before definition".into()
            }
        );
        assert!(matches!(
            parse_native("2 1 2 0 32\nADD 0 1 2\n"),
            Err(CircuitError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_native("2 1 1 0 32\nXOR 0 1 2\n"),
            Err(CircuitError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_native("2 1 0 0 16\n"),
            Err(CircuitError::Parse { line: 1, .. })
        ));
    }

    proptest! {
        #[test]
        fn serialize_then_parse_is_identity(seed: u64, gates in 1usize..80) {
            let c = random_circuit(seed, &RandomCircuitParams { gates, ..Default::default() });
            let back = parse_native(&to_native(&c).unwrap()).unwrap();
            prop_assert_eq!(back, c);
        }
    }
}
