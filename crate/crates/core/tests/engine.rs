use mask3pc::circuit::{aes_sbox_circuit, random_circuit, Circuit, RandomCircuitParams};
use mask3pc::crypto::KeyMaterial;
use mask3pc::engine::{
    gen_triples, prc_check, rand_shared, rec_mal, run_circuit_mal, run_circuit_semi, run_three, Backdoor,
    MalRunOptions, Net, PrcPair, RecPoints, Setup, Triple, TripleParams,
};
use mask3pc::fault::{FaultDirective, FaultOp, FaultScript};
use mask3pc::party::PartyId;
use mask3pc::ring::{RingElement, Width};
use mask3pc::sharing::dealer_share;
use mask3pc::transport::{Phase, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_inputs(c: &Circuit, seed: u64) -> Vec<RingElement> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..c.inputs().len())
        .map(|_| RingElement::new(rng.gen(), c.width()))
        .collect()
}

fn small_params() -> TripleParams {
    TripleParams::default().with_bucket(2)
}

#[test]
fn semi_matches_plain_and_every_wire_is_consistent() {
    for seed in 0..5 {
        let c = random_circuit(seed, &RandomCircuitParams::default());
        let inputs = random_inputs(&c, seed);
        let split = c.split_inputs(&inputs).unwrap();
        let bd = Backdoor::new();
        let run = run_three(&Setup::seeded(seed).with_backdoor(bd.clone()), |p| {
            run_circuit_semi(p, &c, &split[p.id().index()])
        });
        let want = c.eval_plain(&inputs).unwrap();
        for out in run.outputs().expect("honest run") {
            assert_eq!(out, &want);
        }
        assert_eq!(bd.reconstruct("wires").unwrap(), c.eval_wires(&inputs).unwrap());
    }
}

#[test]
fn semi_costs_follow_circuit_shape() {
    let c = random_circuit(3, &RandomCircuitParams::default());
    let inputs = random_inputs(&c, 3);
    let split = c.split_inputs(&inputs).unwrap();
    let run = run_three(&Setup::seeded(3), |p| run_circuit_semi(p, &c, &split[p.id().index()]));
    let r = &run.report;
    let m = c.mul_count() as u64;
    let p0 = c.inputs_of(PartyId::P0).len() as u64;
    let ev = c.inputs().len() as u64 - p0;
    assert_eq!(r.elements(Phase::Offline), m);
    assert_eq!(
        r.elements(Phase::Online),
        2 * p0 + ev + 2 * m + 3 * c.output_count() as u64
    );
    assert_eq!(r.rounds(Phase::Offline), 1);
    assert_eq!(r.rounds(Phase::Online), c.depth() as u32 + 2);
}

#[test]
fn offline_transcript_does_not_depend_on_inputs() {
    let c = random_circuit(9, &RandomCircuitParams::default());
    let offline = |seed: u64| {
        let inputs = random_inputs(&c, seed);
        let split = c.split_inputs(&inputs).unwrap();
        let run = run_three(&Setup::seeded(1), |p| {
            run_circuit_semi(p, &c, &split[p.id().index()])?;
            Ok(())
        });
        run.report.label(Phase::Offline, Point::MulGamma)
    };
    assert_eq!(offline(1), offline(2));
}

#[test]
fn mal_matches_plain() {
    for seed in 0..3 {
        let c = random_circuit(
            seed,
            &RandomCircuitParams {
                gates: 60,
                ..Default::default()
            },
        );
        let inputs = random_inputs(&c, seed);
        let split = c.split_inputs(&inputs).unwrap();
        for fair in [false, true] {
            let opts = MalRunOptions {
                triples: small_params(),
                fair,
            };
            let run = run_three(&Setup::seeded(seed), |p| {
                run_circuit_mal(p, &c, &split[p.id().index()], &opts)
            });
            let want = c.eval_plain(&inputs).unwrap();
            let outs = run
                .outputs()
                .unwrap_or_else(|| panic!("{:?}", run.outcomes.each_ref().map(|o| o.output().is_some())));
            for out in outs {
                assert_eq!(out, &want);
            }
        }
    }
}

#[test]
fn mal_sbox_over_tcp() {
    let c = aes_sbox_circuit();
    let x = 0x53u64;
    let inputs: Vec<RingElement> = (0..8).map(|j| RingElement::new((x >> j) & 1, Width::BIT)).collect();
    let split = c.split_inputs(&inputs).unwrap();
    let opts = MalRunOptions {
        triples: small_params(),
        fair: false,
    };
    let run = run_three(&Setup::seeded(4).with_net(Net::Tcp), |p| {
        run_circuit_mal(p, &c, &split[p.id().index()], &opts)
    });
    let out = run.outputs().expect("honest run")[0].clone();
    let byte: u64 = out.iter().enumerate().map(|(j, b)| b.value() << j).sum();
    assert_eq!(byte, 0xed);
}

#[test]
fn mal_tampered_product_share_aborts() {
    let c = random_circuit(
        5,
        &RandomCircuitParams {
            gates: 40,
            ..Default::default()
        },
    );
    let inputs = random_inputs(&c, 5);
    let split = c.split_inputs(&inputs).unwrap();
    let opts = MalRunOptions {
        triples: small_params(),
        fair: false,
    };
    let faults = FaultScript::single(FaultDirective::new(Point::MulMz, PartyId::P1, FaultOp::AddDelta, 1));
    let run = run_three(&Setup::seeded(5).with_faults(faults), |p| {
        run_circuit_mal(p, &c, &split[p.id().index()], &opts)
    });
    assert!(run.outcomes[2].is_abort(), "{:?}", run.abort_reason());
    assert!(run.outcomes[0].output().is_none());
}

#[test]
fn generated_triples_are_products() {
    let bd = Backdoor::new();
    let run = run_three(&Setup::seeded(2).with_backdoor(bd.clone()), |p| {
        let t = gen_triples(p, 16, Width::W32, &small_params())?;
        let flat: Vec<_> = t.iter().flat_map(|t| [t.a, t.b, t.c]).collect();
        if let Some(b) = p.backdoor() {
            b.record("trip", p.id(), &flat);
        }
        Ok(t.len())
    });
    assert_eq!(run.outputs().unwrap(), [&16, &16, &16]);
    let v = bd.reconstruct("trip").unwrap();
    for t in v.chunks(3) {
        assert_eq!(t[0] * t[1], t[2]);
    }
}

#[test]
fn prc_transfers_the_offset() {
    let w = Width::W32;
    for (delta, seed) in [(0u64, 1u64), (5, 2)] {
        let mut dealer = KeyMaterial::from_u64_seed(seed).dealer_view();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut e = || RingElement::new(rng.gen(), w);
        let (a, b, d, ee) = (e(), e(), e(), e());
        let vals = [a, b, a * b + RingElement::new(delta, w), d, ee, d * ee];
        let shared: Vec<_> = vals
            .iter()
            .enumerate()
            .map(|(i, v)| dealer_share(*v, &mut dealer, &format!("v{i}")).unwrap())
            .collect();
        let bd = Backdoor::new();
        let run = run_three(&Setup::seeded(seed).with_backdoor(bd.clone()), |p| {
            let s: Vec<_> = shared.iter().map(|x| x[p.id().index()]).collect();
            let pair = PrcPair {
                check: Triple {
                    a: s[0],
                    b: s[1],
                    c: s[2],
                },
                sacrifice: Triple {
                    a: s[3],
                    b: s[4],
                    c: s[5],
                },
            };
            prc_check(p, &[pair])
        });
        assert_eq!(bd.reconstruct("prc.tau").unwrap(), vec![RingElement::new(delta, w)]);
        assert_eq!(run.any_abort(), delta != 0);
    }
}

#[test]
fn rand_shared_needs_no_messages_and_rec_mal_opens_it() {
    let run = run_three(&Setup::seeded(8), |p| {
        let s = rand_shared(p, "t", "x", Width::W64, 4)?;
        p.set_phase(Phase::Online);
        rec_mal(p, &s, RecPoints::OUTPUT)
    });
    let outs = run.outputs().unwrap();
    assert_eq!(outs[0], outs[1]);
    assert_eq!(outs[1], outs[2]);
    assert_eq!(run.report.elements(Phase::Offline), 0);
    assert_eq!(run.report.label(Phase::Online, Point::RecShare).items, 12);
}

#[test]
fn mal_costs_follow_circuit_shape() {
    let c = random_circuit(
        7,
        &RandomCircuitParams {
            gates: 50,
            ..Default::default()
        },
    );
    let inputs = random_inputs(&c, 7);
    let split = c.split_inputs(&inputs).unwrap();
    let m = c.mul_count() as u64;
    let o = c.output_count() as u64;
    let p0 = c.inputs_of(PartyId::P0).len() as u64;
    let ev = c.inputs().len() as u64 - p0;
    for bucket in [2u64, 4] {
        let params = TripleParams::default().with_bucket(bucket as usize);
        let opened = params.plan(m as usize).opened as u64;
        for fair in [false, true] {
            let opts = MalRunOptions { triples: params, fair };
            let run = run_three(&Setup::seeded(7), |p| {
                run_circuit_mal(p, &c, &split[p.id().index()], &opts)
            });
            assert!(run.outputs().is_some());
            let r = &run.report;
            assert_eq!(r.elements(Phase::Offline), (9 * bucket + 3) * m + 12 * opened);
            assert_eq!(r.rounds(Phase::Offline), 4);
            let rec = if fair { 0 } else { 3 * o };
            assert_eq!(r.elements(Phase::Online), 2 * p0 + ev + 4 * m + rec);
            assert_eq!(r.rounds(Phase::Online), c.depth() as u32 + 4 + u32::from(fair) * 3);
            if fair {
                assert_eq!(r.label(Phase::Offline, Point::FairCommit).items, 4 * o);
                assert_eq!(r.label(Phase::Online, Point::FairCommitM).items, 2 * o);
                assert_eq!(r.label(Phase::Online, Point::FairOpen).items, 6 * o);
            }
        }
    }
}
