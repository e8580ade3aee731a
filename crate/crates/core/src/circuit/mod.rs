//! Circuits of two-input ADD and MUL gates over `Z_{2^l}`.
//!
//! At width 1 these are XOR and AND. Inputs are owned by a party; a circuit may
//! also carry a constant-one wire, owned by `P1` and fixed to 1, which is how NOT
//! gates are expressed.

mod aes;
mod bristol;
mod native;
mod random;

use std::fmt;

use thiserror::Error;

pub use aes::{
    aes128_bristol, aes128_circuit, aes128_reference, aes_sbox_circuit, bits_to_bytes, bytes_to_bits, AES_INPUT_OWNERS,
};
pub use bristol::{parse_bristol, to_bristol};
pub use native::{parse_native, to_native};
pub use random::{random_circuit, RandomCircuitParams};

use crate::party::PartyId;
use crate::ring::{RingElement, Width};

/// Parses either text format: a native header has five numbers, a Bristol
/// header two.
pub fn parse_circuit(text: &str) -> Result<Circuit, CircuitError> {
    let header = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .ok_or_else(|| CircuitError::Parse {
            line: 1,
            msg: "empty circuit".into(),
        })?;
    match header.split_whitespace().count() {
        5 => parse_native(text),
        _ => parse_bristol(text),
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircuitError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("gate {gate} reads wire {wire} before it is defined")]
    Dangling { gate: usize, wire: usize },
    #[error("wire {0} is defined twice")]
    Redefined(usize),
    #[error("wire {wire} is out of range ({wires} wires)")]
    WireRange { wire: usize, wires: usize },
    #[error("expected {expected} inputs, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("input width {got} does not match circuit width {expected}")]
    Width { expected: Width, got: Width },
    #[error("cannot serialize: {0}")]
    Serialize(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    Add,
    Mul,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Gate {
    pub kind: GateKind,
    pub left: usize,
    pub right: usize,
    pub out: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct InputWire {
    pub wire: usize,
    pub owner: PartyId,
}

/// Gates to evaluate together: the multiplications of one depth, then the additions
/// that depend on them.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Layer {
    pub muls: Vec<usize>,
    pub adds: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    width: Width,
    wires: usize,
    inputs: Vec<InputWire>,
    const_one: Option<usize>,
    outputs: Vec<usize>,
    gates: Vec<Gate>,
    wire_depth: Vec<usize>,
    depth: usize,
}

impl Circuit {
    /// Validates topological order and single assignment.
    pub fn new(
        width: Width,
        wires: usize,
        inputs: Vec<InputWire>,
        const_one: Option<usize>,
        outputs: Vec<usize>,
        gates: Vec<Gate>,
    ) -> Result<Self, CircuitError> {
        let mut defined = vec![false; wires];
        let mut wire_depth = vec![0usize; wires];
        let define = |w: usize, defined: &mut Vec<bool>| -> Result<(), CircuitError> {
            if w >= wires {
                return Err(CircuitError::WireRange { wire: w, wires });
            }
            if std::mem::replace(&mut defined[w], true) {
                return Err(CircuitError::Redefined(w));
            }
            Ok(())
        };
        for i in inputs.iter().map(|i| i.wire).chain(const_one) {
            define(i, &mut defined)?;
        }
        let mut depth = 0;
        for (g, gate) in gates.iter().enumerate() {
            for w in [gate.left, gate.right] {
                if w >= wires || !defined[w] {
                    return Err(CircuitError::Dangling { gate: g, wire: w });
                }
            }
            define(gate.out, &mut defined)?;
            let d = wire_depth[gate.left].max(wire_depth[gate.right]) + (gate.kind == GateKind::Mul) as usize;
            wire_depth[gate.out] = d;
            depth = depth.max(d);
        }
        for &o in &outputs {
            if o >= wires || !defined[o] {
                return Err(CircuitError::Dangling {
                    gate: gates.len(),
                    wire: o,
                });
            }
        }
        Ok(Circuit {
            width,
            wires,
            inputs,
            const_one,
            outputs,
            gates,
            wire_depth,
            depth,
        })
    }

    pub fn width(&self) -> Width {
        self.width
    }

    pub fn wires(&self) -> usize {
        self.wires
    }

    /// User inputs, excluding the constant-one wire.
    pub fn inputs(&self) -> &[InputWire] {
        &self.inputs
    }

    pub fn const_one(&self) -> Option<usize> {
        self.const_one
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Multiplicative depth.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn wire_depth(&self, w: usize) -> usize {
        self.wire_depth[w]
    }

    /// Shared input wires, counting the constant-one wire.
    pub fn input_count(&self) -> usize {
        self.inputs.len() + self.const_one.is_some() as usize
    }

    pub fn output_count(&self) -> usize {
        self.outputs.len()
    }

    pub fn add_count(&self) -> usize {
        self.gates.iter().filter(|g| g.kind == GateKind::Add).count()
    }

    pub fn mul_count(&self) -> usize {
        self.gates.len() - self.add_count()
    }

    /// Every shared input wire with its owner, the constant-one wire last.
    pub fn all_input_wires(&self) -> Vec<InputWire> {
        let mut v = self.inputs.clone();
        if let Some(w) = self.const_one {
            v.push(InputWire {
                wire: w,
                owner: PartyId::P1,
            });
        }
        v
    }

    pub fn inputs_of(&self, owner: PartyId) -> Vec<usize> {
        self.inputs
            .iter()
            .filter(|i| i.owner == owner)
            .map(|i| i.wire)
            .collect()
    }

    /// Reassigns input owners, e.g. to split a benchmark circuit's inputs.
    pub fn with_owners(mut self, owners: &[PartyId]) -> Result<Self, CircuitError> {
        if owners.len() != self.inputs.len() {
            return Err(CircuitError::Arity {
                expected: self.inputs.len(),
                got: owners.len(),
            });
        }
        for (i, o) in self.inputs.iter_mut().zip(owners) {
            i.owner = *o;
        }
        Ok(self)
    }

    /// Splits a full input vector (circuit order) into per-owner vectors.
    pub fn split_inputs(&self, all: &[RingElement]) -> Result<[Vec<RingElement>; 3], CircuitError> {
        if all.len() != self.inputs.len() {
            return Err(CircuitError::Arity {
                expected: self.inputs.len(),
                got: all.len(),
            });
        }
        let mut out: [Vec<RingElement>; 3] = Default::default();
        for (i, v) in self.inputs.iter().zip(all) {
            out[i.owner.index()].push(*v);
        }
        Ok(out)
    }

    /// Evaluation order for the online phase.
    pub fn layers(&self) -> Vec<Layer> {
        let mut layers = vec![Layer::default(); self.depth + 1];
        for (i, g) in self.gates.iter().enumerate() {
            let d = self.wire_depth[g.out];
            match g.kind {
                GateKind::Mul => layers[d].muls.push(i),
                GateKind::Add => layers[d].adds.push(i),
            }
        }
        layers
    }

    /// Gate-by-gate evaluation in the clear.
    pub fn eval_plain(&self, inputs: &[RingElement]) -> Result<Vec<RingElement>, CircuitError> {
        let val = self.eval_wires(inputs)?;
        Ok(self.outputs.iter().map(|&o| val[o]).collect())
    }

    /// Plain value of every wire.
    pub fn eval_wires(&self, inputs: &[RingElement]) -> Result<Vec<RingElement>, CircuitError> {
        if inputs.len() != self.inputs.len() {
            return Err(CircuitError::Arity {
                expected: self.inputs.len(),
                got: inputs.len(),
            });
        }
        let mut val = vec![RingElement::zero(self.width); self.wires];
        for (i, v) in self.inputs.iter().zip(inputs) {
            if v.width() != self.width {
                return Err(CircuitError::Width {
                    expected: self.width,
                    got: v.width(),
                });
            }
            val[i.wire] = *v;
        }
        if let Some(w) = self.const_one {
            val[w] = RingElement::one(self.width);
        }
        for g in &self.gates {
            let (a, b) = (val[g.left], val[g.right]);
            val[g.out] = match g.kind {
                GateKind::Add => a + b,
                GateKind::Mul => a * b,
            };
        }
        Ok(val)
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "circuit l={} I={} O={} A={} M={} D={}",
            self.width,
            self.input_count(),
            self.output_count(),
            self.add_count(),
            self.mul_count(),
            self.depth
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn el(v: u64) -> RingElement {
        RingElement::new(v, Width::W32)
    }

    fn inp(wire: usize, owner: PartyId) -> InputWire {
        InputWire { wire, owner }
    }

    fn gate(kind: GateKind, left: usize, right: usize, out: usize) -> Gate {
        Gate { kind, left, right, out }
    }

    /// Naive recursive evaluator used as a second oracle.
    fn eval_recursive(c: &Circuit, inputs: &[RingElement], wire: usize) -> RingElement {
        if let Some(pos) = c.inputs().iter().position(|i| i.wire == wire) {
            return inputs[pos];
        }
        if c.const_one() == Some(wire) {
            return RingElement::one(c.width());
        }
        let g = c.gates().iter().find(|g| g.out == wire).unwrap();
        let (a, b) = (eval_recursive(c, inputs, g.left), eval_recursive(c, inputs, g.right));
        match g.kind {
            GateKind::Add => a + b,
            GateKind::Mul => a * b,
        }
    }

    #[test]
    fn parse_circuit_detects_the_format() {
        let native = to_native(&random_circuit(1, &RandomCircuitParams::default())).unwrap();
        assert_eq!(parse_circuit(&native).unwrap().width(), Width::W32);
        let bristol = to_bristol(&aes_sbox_circuit()).unwrap();
        assert_eq!(parse_circuit(&bristol).unwrap().mul_count(), 34);
        assert!(parse_circuit("\n\n").is_err());
    }

    #[test]
    fn sum_times_product_example() {
        let c = Circuit::new(
            Width::W32,
            5,
            vec![inp(0, PartyId::P0), inp(1, PartyId::P1), inp(2, PartyId::P2)],
            None,
            vec![4],
            vec![gate(GateKind::Add, 0, 1, 3), gate(GateKind::Mul, 3, 2, 4)],
        )
        .unwrap();
        assert_eq!(c.eval_plain(&[el(2), el(3), el(4)]).unwrap(), vec![el(20)]);
        assert_eq!((c.add_count(), c.mul_count(), c.depth()), (1, 1, 1));
        assert!(matches!(c.eval_plain(&[el(1)]), Err(CircuitError::Arity { .. })));
    }

    #[test]
    fn identity_circuit_passes_inputs_through() {
        let c = Circuit::new(
            Width::W32,
            2,
            vec![inp(0, PartyId::P1), inp(1, PartyId::P2)],
            None,
            vec![1, 0],
            vec![],
        )
        .unwrap();
        assert_eq!(c.eval_plain(&[el(7), el(9)]).unwrap(), vec![el(9), el(7)]);
        assert_eq!(c.layers().len(), 1);
    }

    #[test]
    fn validation_errors() {
        let ins = vec![inp(0, PartyId::P0)];
        assert!(matches!(
            Circuit::new(
                Width::W32,
                3,
                ins.clone(),
                None,
                vec![2],
                vec![gate(GateKind::Add, 0, 1, 2)]
            ),
            Err(CircuitError::Dangling { gate: 0, wire: 1 })
        ));
        assert!(matches!(
            Circuit::new(
                Width::W32,
                2,
                ins.clone(),
                None,
                vec![1],
                vec![gate(GateKind::Add, 0, 0, 0)]
            ),
            Err(CircuitError::Redefined(0))
        ));
        assert!(matches!(
            Circuit::new(Width::W32, 1, ins, None, vec![1], vec![]),
            Err(CircuitError::Dangling { .. })
        ));
    }

    #[test]
    fn layers_put_adds_after_their_multiplications() {
        let c = random_circuit(3, &RandomCircuitParams::default());
        let layers = c.layers();
        let mut ready = vec![false; c.wires()];
        for i in c.all_input_wires() {
            ready[i.wire] = true;
        }
        for layer in &layers {
            for &g in &layer.muls {
                let g = c.gates()[g];
                assert!(ready[g.left] && ready[g.right]);
            }
            for &g in &layer.muls {
                ready[c.gates()[g].out] = true;
            }
            for &g in &layer.adds {
                let g = c.gates()[g];
                assert!(ready[g.left] && ready[g.right]);
                ready[g.out] = true;
            }
        }
        assert!(ready
            .iter()
            .enumerate()
            .all(|(w, r)| *r || c.gates().iter().all(|g| g.out != w)));
    }

    #[test]
    fn random_circuits_agree_with_recursive_oracle() {
        for seed in 0..20 {
            let c = random_circuit(
                seed,
                &RandomCircuitParams {
                    max_depth: 5,
                    ..Default::default()
                },
            );
            let xs: Vec<_> = (0..c.inputs().len() as u64).map(|i| el(i * 7919 + seed)).collect();
            let fast = c.eval_plain(&xs).unwrap();
            let slow: Vec<_> = c.outputs().iter().map(|&o| eval_recursive(&c, &xs, o)).collect();
            assert_eq!(fast, slow);
            assert!(c.depth() <= 5);
        }
    }

    #[test]
    fn split_inputs_by_owner() {
        let c = random_circuit(1, &RandomCircuitParams::default());
        let xs: Vec<_> = (0..c.inputs().len() as u64).map(el).collect();
        let split = c.split_inputs(&xs).unwrap();
        for p in PartyId::ALL {
            assert_eq!(split[p.index()].len(), c.inputs_of(p).len());
        }
    }
}
