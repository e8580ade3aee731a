//! Maliciously secure evaluation: verified products, deferred checks and the
//! full circuit driver.

use super::fair::{fair_offline, rec_fair};
use super::prims::{rec_mal, recv_inputs, send_inputs, RecPoints};
use super::semi::{finish_products_semi, prep_products_semi, start_products_semi, wire_masks, ProductPrep};
use super::triples::{cut_and_bucket, optimistic_finish, optimistic_prep, optimistic_start, Triple, TripleParams};
use super::{Party, ProtocolError, Result};
use crate::circuit::{Circuit, GateKind};
use crate::crypto::{hash_elements, Digest, DigestBuilder, KeyId};
use crate::party::PartyId;
use crate::ring::{sum, RingElement, Width};
use crate::sharing::MaskedShare;
use crate::transport::{Phase, Point};

/// A random sharing with no communication: `lambda1` under k01, `lambda2` under
/// k02 and the masked value under k12.
pub fn rand_shared(p: &mut Party, tag: &str, stream: &str, width: Width, n: usize) -> Result<Vec<MaskedShare>> {
    let me = p.id();
    let l1 = p.sample_if_held(KeyId::K01, tag, &format!("{stream}.l1"), width, n)?;
    let l2 = p.sample_if_held(KeyId::K02, tag, &format!("{stream}.l2"), width, n)?;
    let m = p.sample_if_held(KeyId::K12, tag, &format!("{stream}.m"), width, n)?;
    let (a, b) = match me {
        PartyId::P0 => (l1, l2),
        PartyId::P1 => (m, l1),
        PartyId::P2 => (m, l2),
    };
    let (a, b) = (a.expect("key held"), b.expect("key held"));
    Ok(a.into_iter()
        .zip(b)
        .map(|(x, y)| MaskedShare::from_parts(me, x, y))
        .collect())
}

/// Offline material of one product inside a verified group.
#[derive(Clone, Copy, Debug)]
pub struct MalComponent {
    /// Mask-only views of the factors.
    pub x: MaskedShare,
    pub y: MaskedShare,
    pub out: MaskedShare,
    /// `P0`: full mask product; evaluators: additive share.
    pub gamma: RingElement,
    /// `P0`: full pad correction; evaluators: additive share.
    pub chi: RingElement,
    /// Evaluator pads for the factors and the output; zero at `P0`.
    pub dx: RingElement,
    pub dy: RingElement,
    pub dz: RingElement,
}

/// Offline material of one verified product group.
#[derive(Clone, Debug)]
pub struct MalPrep {
    pub comps: Vec<MalComponent>,
    /// Summed output mask and mask product, used by the online exchange.
    pub group: ProductPrep,
}

/// Offline phase of verified products, in four rounds.
///
/// Each component gets the semi-honest preprocessing plus pads known to the
/// evaluators. The pads turn the preprocessing into a triple that is checked by
/// sacrificing a triple from a cut-and-choose batch.
///
/// `outs` holds one output mask per component; a group's output mask is the sum
/// over its components.
pub fn prep_products_mal(
    p: &mut Party,
    groups: &[Vec<(MaskedShare, MaskedShare)>],
    outs: Vec<MaskedShare>,
    width: Width,
    params: &TripleParams,
) -> Result<Vec<MalPrep>> {
    let me = p.id();
    let flat: Vec<(MaskedShare, MaskedShare)> = groups.iter().flatten().copied().collect();
    let n = flat.len();
    if n == 0 {
        return Ok(groups.iter().map(|_| empty_prep(me, width)).collect());
    }
    let singles: Vec<Vec<_>> = flat.iter().map(|xy| vec![*xy]).collect();
    let base = prep_products_semi(p, &singles, outs, Point::MulGamma)?;
    let plan = params.plan(n);
    let mut opt = optimistic_prep(p, width, plan.total())?;

    let tag = p.tag("mulm");
    let pads = p.sample_if_held(KeyId::K12, &tag, "pads", width, 4 * n)?;
    let zero = RingElement::zero(width);
    let pad = |k: usize, i: usize| pads.as_ref().map_or(zero, |v| v[k * n + i]);
    optimistic_start(p, &mut opt)?;
    let mut chi_own = Vec::new();
    if me.is_evaluator() {
        chi_own = (0..n)
            .map(|i| {
                let (x, y) = flat[i];
                let dz_share = if me == PartyId::P1 {
                    pad(3, i)
                } else {
                    pad(2, i) - pad(3, i)
                };
                pad(0, i) * y.mask_share() + pad(1, i) * x.mask_share() + dz_share - base[i].gamma
            })
            .collect();
        p.net
            .send_elements(PartyId::P0, Point::MulChi, width, chi_own.clone())?;
    }
    let trips = optimistic_finish(p, opt)?;
    let chi_parts = if me == PartyId::P0 {
        let c1 = p.net.recv_elements(PartyId::P1, Point::MulChi, width, n)?;
        let c2 = p.net.recv_elements(PartyId::P2, Point::MulChi, width, n)?;
        c1.into_iter().zip(c2).collect()
    } else {
        vec![(zero, zero); n]
    };

    let linked: Vec<Triple> = (0..n)
        .map(|i| {
            let (x, y) = flat[i];
            match me {
                PartyId::P0 => Triple {
                    a: x,
                    b: y,
                    c: MaskedShare::from_parts(me, chi_parts[i].0, chi_parts[i].1),
                },
                _ => {
                    let (dx, dy, dz) = (pad(0, i), pad(1, i), pad(2, i));
                    Triple {
                        a: MaskedShare::from_parts(me, dx, x.mask_share()),
                        b: MaskedShare::from_parts(me, dy, y.mask_share()),
                        c: MaskedShare::from_parts(me, dz + dx * dy, chi_own[i]),
                    }
                }
            }
        })
        .collect();
    cut_and_bucket(p, trips, &plan, &linked, params.mode)?;

    let mut comps = (0..n).map(|i| {
        let (x, y) = flat[i];
        MalComponent {
            x,
            y,
            out: base[i].out,
            gamma: base[i].gamma,
            chi: if me == PartyId::P0 {
                chi_parts[i].0 + chi_parts[i].1
            } else {
                chi_own[i]
            },
            dx: pad(0, i),
            dy: pad(1, i),
            dz: pad(2, i),
        }
    });
    Ok(groups
        .iter()
        .map(|g| {
            let comps: Vec<MalComponent> = comps.by_ref().take(g.len()).collect();
            if comps.is_empty() {
                return empty_prep(me, width);
            }
            let out = comps[1..].iter().fold(comps[0].out, |acc, c| acc + c.out);
            let gamma = sum(width, comps.iter().map(|c| c.gamma));
            MalPrep {
                comps,
                group: ProductPrep { out, gamma },
            }
        })
        .collect())
}

fn empty_prep(me: PartyId, width: Width) -> MalPrep {
    MalPrep {
        comps: Vec::new(),
        group: ProductPrep {
            out: MaskedShare::zero(me, width),
            gamma: RingElement::zero(width),
        },
    }
}

/// Checks deferred to the end of evaluation.
#[derive(Clone, Default)]
pub struct VerifState {
    width: Option<Width>,
    inputs: DigestBuilder,
    /// Evaluators: padded factors, two per component.
    mstar: Vec<RingElement>,
    /// Evaluators: expected padded output per group.
    expect: Vec<RingElement>,
    /// `P0`: the components of each group.
    dealer: Vec<Vec<MalComponent>>,
    groups: usize,
    comps: usize,
}

impl VerifState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Digest of `P0`'s masked inputs, compared between the evaluators.
    pub fn input_log(&mut self) -> &mut DigestBuilder {
        &mut self.inputs
    }

    pub fn is_empty(&self) -> bool {
        self.groups == 0 && self.inputs.is_empty()
    }

    fn set_width(&mut self, w: Width) {
        let have = *self.width.get_or_insert(w);
        assert_eq!(have, w, "one verification batch per width");
    }
}

pub fn start_products_mal(
    p: &mut Party,
    groups: &[Vec<(MaskedShare, MaskedShare)>],
    preps: &[MalPrep],
    point: Point,
) -> Result<Vec<RingElement>> {
    let gp: Vec<ProductPrep> = preps.iter().map(|x| x.group).collect();
    start_products_semi(p, groups, &gp, point)
}

/// Completes the exchange and logs what the deferred product check needs.
pub fn finish_products_mal(
    p: &mut Party,
    groups: &[Vec<(MaskedShare, MaskedShare)>],
    preps: &[MalPrep],
    own: &[RingElement],
    point: Point,
    verif: &mut VerifState,
) -> Result<Vec<MaskedShare>> {
    let me = p.id();
    let gp: Vec<ProductPrep> = preps.iter().map(|x| x.group).collect();
    let outs = finish_products_semi(p, &gp, own, point)?;
    for ((g, prep), out) in groups.iter().zip(preps).zip(&outs) {
        if prep.comps.is_empty() {
            continue;
        }
        verif.set_width(out.width());
        verif.groups += 1;
        verif.comps += prep.comps.len();
        if me == PartyId::P0 {
            verif.dealer.push(prep.comps.clone());
            continue;
        }
        let width = out.width();
        let mut e = out.m().expect("evaluator view");
        for ((x, y), c) in g.iter().zip(&prep.comps) {
            let (mx, my) = (x.m().expect("evaluator view"), y.m().expect("evaluator view"));
            verif.mstar.push(mx + c.dx);
            verif.mstar.push(my + c.dy);
            e = e - mx * my + c.dz;
        }
        debug_assert_eq!(e.width(), width);
        verif.expect.push(e);
    }
    Ok(outs)
}

pub fn eval_products_mal(
    p: &mut Party,
    groups: &[Vec<(MaskedShare, MaskedShare)>],
    preps: &[MalPrep],
    point: Point,
    verif: &mut VerifState,
) -> Result<Vec<MaskedShare>> {
    let own = start_products_mal(p, groups, preps, point)?;
    finish_products_mal(p, groups, preps, &own, point, verif)
}

/// Deferred checks whose first round has been sent.
pub struct PendingChecks {
    verif: VerifState,
    sh: Option<Digest>,
}

/// First round of the deferred checks: `P1` sends the padded factors to `P0`
/// with `P2` vouching by digest, and the evaluators swap input digests.
pub fn flush_start(p: &mut Party, verif: &mut VerifState) -> Result<PendingChecks> {
    let me = p.id();
    let v = std::mem::take(verif);
    let mut sh = None;
    if me.is_evaluator() {
        if let Some(w) = v.width {
            if me == PartyId::P1 {
                p.net.send_elements(PartyId::P0, Point::MStar, w, v.mstar.clone())?;
            } else {
                p.net
                    .send_digest(PartyId::P0, Point::MStarDigest, hash_elements(w, &v.mstar))?;
            }
        }
        if !v.inputs.is_empty() {
            let d = v.inputs.clone().finish();
            p.net.send_digest(me.co_evaluator(), Point::InputDigest, d)?;
            sh = Some(d);
        }
    }
    Ok(PendingChecks { verif: v, sh })
}

/// Second round: `P0` checks the padded factors and returns a digest of the
/// padded outputs, which the evaluators compare with their own.
pub fn flush_finish(p: &mut Party, pending: PendingChecks) -> Result<()> {
    let me = p.id();
    let PendingChecks { verif: v, sh } = pending;
    match me {
        PartyId::P1 | PartyId::P2 => {
            if let Some(sh) = sh {
                if p.net.recv_digest(me.co_evaluator(), Point::InputDigest)? != sh {
                    return Err(ProtocolError::abort(
                        "sh.digest: masked inputs differ between evaluators",
                    ));
                }
            }
            if let Some(w) = v.width {
                if p.net.recv_digest(PartyId::P0, Point::MStarZ)? != hash_elements(w, &v.expect) {
                    return Err(ProtocolError::abort("mul.mstar.z: product verification failed"));
                }
            }
        }
        PartyId::P0 => {
            let Some(w) = v.width else { return Ok(()) };
            let mstar = p.net.recv_elements(PartyId::P1, Point::MStar, w, 2 * v.comps)?;
            if p.net.recv_digest(PartyId::P2, Point::MStarDigest)? != hash_elements(w, &mstar) {
                return Err(ProtocolError::abort("mul.mstar: P1 and P2 disagree on padded values"));
            }
            let mut it = mstar.chunks(2);
            let zs: Vec<RingElement> = v
                .dealer
                .iter()
                .map(|g| {
                    sum(
                        w,
                        g.iter().map(|c| {
                            let s = it.next().expect("two per component");
                            let (lx, ly) = (c.x.mask_share(), c.y.mask_share());
                            c.out.mask_share() + c.gamma.scale(2) + c.chi - s[0] * ly - s[1] * lx
                        }),
                    )
                })
                .collect();
            let d = hash_elements(w, &zs);
            p.net.send_digest(PartyId::P1, Point::MStarZ, d)?;
            p.net.send_digest(PartyId::P2, Point::MStarZ, d)?;
        }
    }
    Ok(())
}

/// Runs every deferred check, in two rounds.
pub fn flush_checks(p: &mut Party, verif: &mut VerifState) -> Result<()> {
    let pending = flush_start(p, verif)?;
    flush_finish(p, pending)
}

/// Options of a malicious circuit run.
#[derive(Clone, Copy, Debug, Default)]
pub struct MalRunOptions {
    pub triples: TripleParams,
    /// Reconstruct outputs fairly.
    pub fair: bool,
}

/// Evaluates `c` with abort on any detected deviation.
pub fn run_circuit_mal(
    p: &mut Party,
    c: &Circuit,
    inputs: &[RingElement],
    opts: &MalRunOptions,
) -> Result<Vec<RingElement>> {
    let me = p.id();
    p.set_phase(Phase::Offline);
    let wm = wire_masks(p, c)?;
    let fair = if opts.fair {
        let masks: Vec<MaskedShare> = c.outputs().iter().map(|&o| wm.masks[o]).collect();
        Some(fair_offline(p, &masks)?)
    } else {
        None
    };
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
    let preps = prep_products_mal(p, &groups, outs, c.width(), &opts.triples)?;
    let mut prep_of = vec![usize::MAX; c.gates().len()];
    for (k, &i) in mul_gates.iter().enumerate() {
        prep_of[i] = k;
    }

    p.set_phase(Phase::Online);
    let mut verif = VerifState::new();
    let mut vals = inputs.to_vec();
    if me == PartyId::P1 && c.const_one().is_some() {
        vals.push(RingElement::one(c.width()));
    }
    let known = send_inputs(p, &wm.inputs, &vals, Point::InputM)?;
    let shared = recv_inputs(p, &wm.inputs, &known, Point::InputM, Some(verif.input_log()))?;
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
            let lp: Vec<MalPrep> = layer.muls.iter().map(|&i| preps[prep_of[i]].clone()).collect();
            let outs = eval_products_mal(p, &groups, &lp, Point::MulMz, &mut verif)?;
            for (&i, o) in layer.muls.iter().zip(outs) {
                wires[c.gates()[i].out] = o;
            }
        }
        for &i in &layer.adds {
            let g = c.gates()[i];
            wires[g.out] = wires[g.left] + wires[g.right];
        }
    }
    flush_checks(p, &mut verif)?;
    if let Some(b) = p.backdoor() {
        b.record("wires", me, &wires);
    }
    let outs: Vec<MaskedShare> = c.outputs().iter().map(|&o| wires[o]).collect();
    match fair {
        Some(prep) => rec_fair(p, &prep, &outs),
        None => rec_mal(p, &outs, RecPoints::OUTPUT),
    }
}
