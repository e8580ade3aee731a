//! Semi-honest circuit evaluation.

use super::prims::{fresh_masks, input_masks, rec_semi, share_inputs, InputMask};
use super::{Party, Result};
use crate::circuit::{Circuit, GateKind};
use crate::crypto::KeyId;
use crate::party::PartyId;
use crate::ring::{sum, RingElement};
use crate::sharing::MaskedShare;
use crate::transport::{Phase, Point};

/// Masks of every wire, fixed before the inputs are known.
#[derive(Clone, Debug)]
pub struct WireMasks {
    /// Mask-only view per wire.
    pub masks: Vec<MaskedShare>,
    /// Input wire masks in [`Circuit::all_input_wires`] order.
    pub inputs: Vec<InputMask>,
}

pub fn wire_masks(p: &mut Party, c: &Circuit) -> Result<WireMasks> {
    let me = p.id();
    let width = c.width();
    let wires = c.all_input_wires();
    let owners: Vec<PartyId> = wires.iter().map(|w| w.owner).collect();
    let inputs = input_masks(p, &owners, width)?;
    let mut masks = vec![MaskedShare::zero(me, width); c.wires()];
    for (w, m) in wires.iter().zip(&inputs) {
        masks[w.wire] = m.share;
    }
    let tag = p.tag("wire");
    let mut fresh = fresh_masks(p, &tag, width, c.mul_count())?.into_iter();
    for g in c.gates() {
        masks[g.out] = match g.kind {
            GateKind::Mul => fresh.next().expect("one mask per multiplication"),
            GateKind::Add => masks[g.left] + masks[g.right],
        };
    }
    Ok(WireMasks { masks, inputs })
}

/// Offline material of one product group (a multiplication or a dot product).
#[derive(Clone, Copy, Debug)]
pub struct ProductPrep {
    /// Mask of the output.
    pub out: MaskedShare,
    /// `P0`: the full sum of mask products; evaluators: their additive share.
    pub gamma: RingElement,
}

/// Offline phase for groups of factor pairs; each group yields one sum of
/// products under the matching mask in `outs`.
///
/// `P0` sends the second additive share of each group's mask product to `P2`.
pub fn prep_products_semi(
    p: &mut Party,
    groups: &[Vec<(MaskedShare, MaskedShare)>],
    outs: Vec<MaskedShare>,
    point: Point,
) -> Result<Vec<ProductPrep>> {
    let me = p.id();
    let n = groups.len();
    assert_eq!(outs.len(), n, "one output mask per group");
    let Some(width) = outs.first().map(|o| o.width()) else {
        return Ok(Vec::new());
    };
    let tag = p.tag("prod");
    let g1 = p.sample_if_held(KeyId::K01, &tag, "gamma1", width, n)?;
    let gammas: Vec<RingElement> = match me {
        PartyId::P0 => {
            let full: Vec<RingElement> = groups
                .iter()
                .map(|g| sum(width, g.iter().map(|(x, y)| x.mask_share() * y.mask_share())))
                .collect();
            if n > 0 {
                let g1 = g1.expect("P0 holds k01");
                let second = full.iter().zip(&g1).map(|(g, a)| *g - *a).collect();
                p.net.send_elements(PartyId::P2, point, width, second)?;
            }
            full
        }
        PartyId::P1 => g1.expect("P1 holds k01"),
        PartyId::P2 if n > 0 => p.net.recv_elements(PartyId::P0, point, width, n)?,
        PartyId::P2 => Vec::new(),
    };
    Ok(outs
        .into_iter()
        .zip(gammas)
        .map(|(out, gamma)| ProductPrep { out, gamma })
        .collect())
}

/// Evaluator's additive share of the masked output of one group.
fn product_share(me: PartyId, group: &[(MaskedShare, MaskedShare)], prep: &ProductPrep) -> RingElement {
    let width = prep.out.width();
    let terms = group.iter().map(|(x, y)| {
        let (mx, my) = (x.m().expect("evaluator view"), y.m().expect("evaluator view"));
        let cross = RingElement::zero(width) - mx * y.mask_share() - my * x.mask_share();
        if me == PartyId::P2 {
            cross + mx * my
        } else {
            cross
        }
    });
    sum(width, terms) + prep.out.mask_share() + prep.gamma
}

/// Online phase, first half: evaluators send their shares of each masked output.
pub fn start_products_semi(
    p: &mut Party,
    groups: &[Vec<(MaskedShare, MaskedShare)>],
    preps: &[ProductPrep],
    point: Point,
) -> Result<Vec<RingElement>> {
    let me = p.id();
    if me == PartyId::P0 || groups.is_empty() {
        return Ok(Vec::new());
    }
    let width = preps[0].out.width();
    let own: Vec<RingElement> = groups
        .iter()
        .zip(preps)
        .map(|(g, pr)| product_share(me, g, pr))
        .collect();
    p.net.send_elements(me.co_evaluator(), point, width, own.clone())?;
    Ok(own)
}

/// Online phase, second half: evaluators combine both shares into the masked output.
pub fn finish_products_semi(
    p: &mut Party,
    preps: &[ProductPrep],
    own: &[RingElement],
    point: Point,
) -> Result<Vec<MaskedShare>> {
    let me = p.id();
    if me == PartyId::P0 || preps.is_empty() {
        return Ok(preps.iter().map(|pr| pr.out).collect());
    }
    let width = preps[0].out.width();
    let other = p.net.recv_elements(me.co_evaluator(), point, width, preps.len())?;
    Ok(preps
        .iter()
        .zip(own.iter().zip(other))
        .map(|(pr, (a, b))| pr.out.with_m(*a + b))
        .collect())
}

pub fn eval_products_semi(
    p: &mut Party,
    groups: &[Vec<(MaskedShare, MaskedShare)>],
    preps: &[ProductPrep],
    point: Point,
) -> Result<Vec<MaskedShare>> {
    let own = start_products_semi(p, groups, preps, point)?;
    finish_products_semi(p, preps, &own, point)
}

/// Evaluates `c` on this party's inputs (in wire order). Every party learns the outputs.
pub fn run_circuit_semi(p: &mut Party, c: &Circuit, inputs: &[RingElement]) -> Result<Vec<RingElement>> {
    let me = p.id();
    p.set_phase(Phase::Offline);
    let wm = wire_masks(p, c)?;
    let mul_gates: Vec<usize> = (0..c.gates().len())
        .filter(|&i| c.gates()[i].kind == GateKind::Mul)
        .collect();
    let groups: Vec<Vec<(MaskedShare, MaskedShare)>> = mul_gates
        .iter()
        .map(|&i| {
            let g = c.gates()[i];
            vec![(wm.masks[g.left], wm.masks[g.right])]
        })
        .collect();
    let outs = mul_gates.iter().map(|&i| wm.masks[c.gates()[i].out]).collect();
    let preps = prep_products_semi(p, &groups, outs, Point::MulGamma)?;
    let mut prep_of = vec![usize::MAX; c.gates().len()];
    for (k, &i) in mul_gates.iter().enumerate() {
        prep_of[i] = k;
    }

    p.set_phase(Phase::Online);
    let mut vals = inputs.to_vec();
    if me == PartyId::P1 && c.const_one().is_some() {
        vals.push(RingElement::one(c.width()));
    }
    let shared = share_inputs(p, &wm.inputs, &vals)?;
    let mut wires = wm.masks.clone();
    for (w, s) in c.all_input_wires().iter().zip(shared) {
        wires[w.wire] = s;
    }
    for layer in c.layers() {
        if !layer.muls.is_empty() {
            let groups: Vec<_> = layer
                .muls
                .iter()
                .map(|&i| {
                    let g = c.gates()[i];
                    vec![(wires[g.left], wires[g.right])]
                })
                .collect();
            let lp: Vec<ProductPrep> = layer.muls.iter().map(|&i| preps[prep_of[i]]).collect();
            let outs = eval_products_semi(p, &groups, &lp, Point::MulMz)?;
            for (&i, o) in layer.muls.iter().zip(outs) {
                wires[c.gates()[i].out] = o;
            }
        }
        for &i in &layer.adds {
            let g = c.gates()[i];
            wires[g.out] = wires[g.left] + wires[g.right];
        }
    }
    if let Some(b) = p.backdoor() {
        b.record("wires", me, &wires);
    }
    let outs: Vec<MaskedShare> = c.outputs().iter().map(|&o| wires[o]).collect();
    Ok(rec_semi(p, &outs, &PartyId::ALL)?.expect("every party is a target"))
}
