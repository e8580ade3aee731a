use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Circuit, Gate, GateKind, InputWire};
use crate::party::PartyId;
use crate::ring::Width;

/// Shape of a pseudo-random test circuit.
#[derive(Clone, Debug)]
pub struct RandomCircuitParams {
    pub width: Width,
    pub inputs: usize,
    pub gates: usize,
    pub outputs: usize,
    pub max_depth: usize,
    /// Probability that a gate is a multiplication.
    pub mul_ratio: f64,
}

impl Default for RandomCircuitParams {
    fn default() -> Self {
        RandomCircuitParams {
            width: Width::W32,
            inputs: 8,
            gates: 120,
            outputs: 4,
            max_depth: 8,
            mul_ratio: 0.5,
        }
    }
}

/// Deterministic circuit from `seed`. Outputs are the last gate outputs.
pub fn random_circuit(seed: u64, p: &RandomCircuitParams) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs: Vec<InputWire> = (0..p.inputs)
        .map(|wire| InputWire {
            wire,
            owner: PartyId::ALL[rng.gen_range(0..3)],
        })
        .collect();
    let mut depth = vec![0usize; p.inputs + p.gates];
    let mut gates = Vec::with_capacity(p.gates);
    for g in 0..p.gates {
        let out = p.inputs + g;
        // half the operands come from recent wires so depth actually grows
        let pick = |rng: &mut ChaCha8Rng| {
            if rng.gen_bool(0.5) {
                rng.gen_range(out.saturating_sub(6)..out)
            } else {
                rng.gen_range(0..out)
            }
        };
        let (left, right) = (pick(&mut rng), pick(&mut rng));
        let d = depth[left].max(depth[right]);
        let kind = if rng.gen_bool(p.mul_ratio) && d < p.max_depth {
            GateKind::Mul
        } else {
            GateKind::Add
        };
        depth[out] = d + (kind == GateKind::Mul) as usize;
        gates.push(Gate { kind, left, right, out });
    }
    let wires = p.inputs + p.gates;
    let outputs = (wires - p.outputs.min(wires)..wires).collect();
    Circuit::new(p.width, wires, inputs, None, outputs, gates).expect("generator emits valid circuits")
}
