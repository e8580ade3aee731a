use mask3pc::crypto::KeyMaterial;
use mask3pc::engine::{flush_checks, run_three, RunOutput, Setup, TripleParams, VerifState};
use mask3pc::fault::{FaultDirective, FaultOp, FaultScript};
use mask3pc::ml::{
    bitext_mal, bitext_prep_mal, bitext_prep_semi, bitext_semi, deal_inputs, deal_vector, dot_mal, dot_prep_mal,
    dot_prep_semi, dot_semi, predict, predict_and_reveal, reveal, CmpOptions, Mode, Model, ModelKind, PredictOptions,
    Prediction,
};
use mask3pc::party::PartyId;
use mask3pc::ring::{fx_encode, RingElement, Width};
use mask3pc::sharing::MaskedShare;
use mask3pc::transport::{Phase, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn deal(vals: &[RingElement], seed: u64) -> [Vec<MaskedShare>; 3] {
    let mut dealer = KeyMaterial::from_u64_seed(seed ^ 0xdea1).dealer_view();
    deal_vector(vals, &mut dealer, "v").unwrap()
}

fn ring_vec(seed: u64, n: usize, width: Width) -> Vec<RingElement> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| RingElement::new(rng.gen(), width)).collect()
}

fn b2() -> TripleParams {
    TripleParams::default().with_bucket(2)
}

fn same<T: PartialEq + std::fmt::Debug + Clone>(run: &RunOutput<T>) -> T {
    let [a, b, c] = run
        .outputs()
        .unwrap_or_else(|| panic!("{:?} {:?}", run.abort_reason(), run.failure()));
    assert_eq!(a, b);
    assert_eq!(b, c);
    a.clone()
}

#[test]
fn dot_semi_small_example() {
    let w = Width::W64;
    let xs = deal(&[RingElement::new(1, w), RingElement::new(2, w)], 1);
    let ys = deal(&[RingElement::new(3, w), RingElement::new(4, w)], 2);
    let run = run_three(&Setup::seeded(1), |p| {
        let i = p.id().index();
        let prep = dot_prep_semi(p, &xs[i], &ys[i])?;
        p.set_phase(Phase::Online);
        let u = dot_semi(p, &prep, &xs[i], &ys[i])?;
        reveal(p, u, Mode::Semi)
    });
    assert_eq!(same(&run), RingElement::new(11, w));
}

#[test]
fn dot_semi_cost_is_independent_of_length() {
    for d in [1usize, 784, 10_000] {
        let (a, b) = (ring_vec(d as u64, d, Width::W64), ring_vec(d as u64 + 1, d, Width::W64));
        let want = a
            .iter()
            .zip(&b)
            .fold(RingElement::zero(Width::W64), |s, (x, y)| s + *x * *y);
        let (xs, ys) = (deal(&a, 3), deal(&b, 4));
        let run = run_three(&Setup::seeded(d as u64), |p| {
            let i = p.id().index();
            let prep = dot_prep_semi(p, &xs[i], &ys[i])?;
            p.set_phase(Phase::Online);
            let u = dot_semi(p, &prep, &xs[i], &ys[i])?;
            reveal(p, u, Mode::Semi)
        });
        assert_eq!(same(&run), want);
        assert_eq!(run.report.elements(Phase::Offline), 1, "d={d}");
        assert_eq!(run.report.elements(Phase::Online), 2, "d={d}");
        assert_eq!(run.report.rounds(Phase::Online), 1);
    }
}

#[test]
fn dot_mal_matches_and_costs_two_d_plus_two() {
    for d in [1usize, 3, 50] {
        let (a, b) = (
            ring_vec(7 * d as u64, d, Width::W64),
            ring_vec(9 * d as u64, d, Width::W64),
        );
        let want = a
            .iter()
            .zip(&b)
            .fold(RingElement::zero(Width::W64), |s, (x, y)| s + *x * *y);
        let (xs, ys) = (deal(&a, 5), deal(&b, 6));
        let params = b2();
        let run = run_three(&Setup::seeded(d as u64), |p| {
            let i = p.id().index();
            let prep = dot_prep_mal(p, &xs[i], &ys[i], &params)?;
            p.set_phase(Phase::Online);
            let mut verif = VerifState::new();
            let u = dot_mal(p, &prep, &xs[i], &ys[i], &mut verif)?;
            flush_checks(p, &mut verif)?;
            reveal(p, u, Mode::Mal)
        });
        assert_eq!(same(&run), want);
        let opened = params.plan(d).opened as u64;
        let d = d as u64;
        assert_eq!(run.report.elements(Phase::Offline) - 12 * opened, 21 * d);
        assert_eq!(run.report.elements(Phase::Online), 2 * d + 2);
    }
}

#[test]
fn dot_mal_tampered_share_aborts() {
    let a = ring_vec(1, 3, Width::W64);
    let (xs, ys) = (deal(&a, 1), deal(&a, 2));
    let faults = FaultScript::single(FaultDirective::new(Point::DotMz, PartyId::P1, FaultOp::AddDelta, 1));
    let run = run_three(&Setup::seeded(3).with_faults(faults), |p| {
        let i = p.id().index();
        let prep = dot_prep_mal(p, &xs[i], &ys[i], &b2())?;
        p.set_phase(Phase::Online);
        let mut verif = VerifState::new();
        let u = dot_mal(p, &prep, &xs[i], &ys[i], &mut verif)?;
        flush_checks(p, &mut verif)?;
        reveal(p, u, Mode::Mal)
    });
    assert!(run.outcomes[2].is_abort());
    assert!(run.outcomes.iter().all(|o| o.output().is_none()));
}

fn signs(mode: Mode, vals: &[RingElement], opts: CmpOptions, seed: u64) -> (Vec<bool>, RunOutput<Vec<RingElement>>) {
    let shares = deal(vals, seed);
    let run = run_three(&Setup::seeded(seed), |p| {
        let a = &shares[p.id().index()];
        p.set_phase(Phase::Offline);
        let out = match mode {
            Mode::Semi => {
                let prep = bitext_prep_semi(p, a.len(), vals[0].width(), &opts)?;
                p.set_phase(Phase::Online);
                bitext_semi(p, &prep, a)?
            }
            Mode::Mal => {
                let prep = bitext_prep_mal(p, a, &opts, &b2())?;
                p.set_phase(Phase::Online);
                bitext_mal(p, &prep, a, &mut VerifState::new())?
            }
        };
        out.into_iter()
            .map(|s| reveal(p, s, mode))
            .collect::<Result<Vec<_>, _>>()
    });
    let bits = same(&run).iter().map(|b| b.bit()).collect();
    (bits, run)
}

#[test]
fn bitext_reads_fixed_point_signs() {
    let vals = [fx_encode(-2.5, 13).unwrap(), fx_encode(2.5, 13).unwrap()];
    for mode in [Mode::Semi, Mode::Mal] {
        let (bits, _) = signs(mode, &vals, CmpOptions::default(), 11);
        assert_eq!(bits, vec![true, false], "{mode:?}");
    }
}

#[test]
fn bitext_exhaustive_at_eight_bits() {
    let w = Width::W8;
    let vals: Vec<RingElement> = (-4i64..=4).map(|a| RingElement::from_signed(a, w)).collect();
    let want: Vec<bool> = vals.iter().map(|v| v.msb().unwrap()).collect();
    let base = CmpOptions::default().with_magnitude_bits(2);
    let rb = base.r_bits(w).unwrap();
    for r in 1..1u64 << rb {
        let opts = CmpOptions {
            force_r: Some(r),
            ..base
        };
        assert_eq!(signs(Mode::Semi, &vals, opts, r).0, want, "r={r}");
    }
    let fb = base.factor_bits(w).unwrap();
    for r1 in 1..1u64 << fb {
        for r2 in 1..1u64 << fb {
            let opts = CmpOptions {
                force_factors: Some((r1, r2)),
                ..base
            };
            assert_eq!(signs(Mode::Mal, &vals, opts, r1 * 8 + r2).0, want, "r1={r1} r2={r2}");
        }
    }
}

#[test]
fn bitext_random_wide_inputs() {
    let opts = CmpOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let bound = 1i64 << opts.magnitude_bits;
    let vals: Vec<RingElement> = (0..500)
        .map(|_| RingElement::from_signed(rng.gen_range(-bound..=bound), Width::W64))
        .collect();
    let want: Vec<bool> = vals.iter().map(|v| v.msb().unwrap()).collect();
    for mode in [Mode::Semi, Mode::Mal] {
        assert_eq!(signs(mode, &vals, opts, 6).0, want);
    }
}

#[test]
fn bitext_costs() {
    let l = 64u64;
    let vals = [RingElement::from_signed(-5, Width::W64)];
    let (_, run) = signs(Mode::Semi, &vals, CmpOptions::default(), 1);
    assert_eq!(
        run.report
            .total(Phase::Offline, mask3pc::transport::Category::RingElements)
            .bits,
        0
    );
    assert_eq!(run.report.element_bits(Phase::Online), 2 * l + 2);
    assert_eq!(run.report.rounds(Phase::Online), 2);

    let (_, run) = signs(Mode::Mal, &vals, CmpOptions::default(), 2);
    assert_eq!(run.report.element_bits(Phase::Online), 6 * l + 1);
    assert_eq!(run.report.rounds(Phase::Online), 3);
    let opened = b2().plan(2).opened as u64;
    assert_eq!(run.report.element_bits(Phase::Offline) - 12 * opened * l, 46 * l);
}

#[test]
fn bitext_wrong_sign_share_aborts() {
    let vals = [
        RingElement::from_signed(-5, Width::W64),
        RingElement::from_signed(9, Width::W64),
    ];
    let shares = deal(&vals, 3);
    let faults = FaultScript::single(FaultDirective::new(Point::BitextQ, PartyId::P1, FaultOp::AddDelta, 1));
    let run = run_three(&Setup::seeded(3).with_faults(faults), |p| {
        let a = &shares[p.id().index()];
        let prep = bitext_prep_mal(p, a, &CmpOptions::default(), &b2())?;
        p.set_phase(Phase::Online);
        let out = bitext_mal(p, &prep, a, &mut VerifState::new())?;
        reveal(p, out[0], Mode::Mal)
    });
    assert!(run.outcomes[2].is_abort(), "{:?}", run.abort_reason());
    assert!(run.abort_reason().unwrap().contains("bitext.q"));
}

fn random_model(kind: ModelKind, d: usize, seed: u64) -> (Model, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let z: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let b = rng.gen_range(-1.0..1.0);
    let m = match kind {
        ModelKind::LogReg => Model::logistic(w, b, 0.3).unwrap(),
        k => Model::linear(k, w, b).unwrap(),
    };
    (m, z)
}

#[test]
fn predict_every_kind_in_both_modes() {
    for kind in ModelKind::ALL {
        for mode in [Mode::Semi, Mode::Mal] {
            let (model, z) = random_model(kind, 20, kind as u64);
            let mut dealer = KeyMaterial::from_u64_seed(77).dealer_view();
            let (ms, qs) = deal_inputs(&model, &z, &mut dealer).unwrap();
            let opts = PredictOptions {
                mode,
                triples: b2(),
                ..Default::default()
            };
            let run = run_three(&Setup::seeded(4), |p| {
                let i = p.id().index();
                predict_and_reveal(p, &ms[i], &qs[i], &opts)
            });
            assert_eq!(same(&run), model.evaluate_fixed(&z).unwrap(), "{kind} {mode:?}");
        }
    }
}

#[test]
fn linreg_784_tracks_plaintext_and_costs() {
    let d = 784;
    let l = 64u64;
    for mode in [Mode::Semi, Mode::Mal] {
        for kind in [ModelKind::LinReg, ModelKind::SvmClass] {
            let (model, z) = random_model(kind, d, 9);
            let mut dealer = KeyMaterial::from_u64_seed(9).dealer_view();
            let (ms, qs) = deal_inputs(&model, &z, &mut dealer).unwrap();
            let opts = PredictOptions {
                mode,
                triples: b2(),
                ..Default::default()
            };
            let run = run_three(&Setup::seeded(9), |p| {
                let i = p.id().index();
                predict_and_reveal(p, &ms[i], &qs[i], &opts)
            });
            let got = same(&run);
            match (got, model.evaluate(&z).unwrap()) {
                (Prediction::Value(a), Prediction::Value(b)) => {
                    assert!((a - b).abs() <= (d as f64 + 1.0) * 2f64.powi(-13), "{a} vs {b}")
                }
                (a, b) => {
                    if model.margin(&z).unwrap().abs() > 2f64.powi(-10) {
                        assert_eq!(a, b)
                    }
                }
            }
            let r = &run.report;
            let d = d as u64;
            let (bits, rounds) = match (mode, kind.is_classifier()) {
                (Mode::Semi, false) => (2 * l, 1),
                (Mode::Semi, true) => (4 * l + 2, 3),
                (Mode::Mal, false) => (2 * d * l + 2 * l, 3),
                (Mode::Mal, true) => (2 * d * l + 8 * l + 1, 4),
            };
            assert_eq!(r.element_bits(Phase::Online), bits, "{mode:?} {kind}");
            assert_eq!(r.rounds(Phase::Online), rounds, "{mode:?} {kind}");
        }
    }
}

#[test]
fn predict_rejects_length_mismatch() {
    let (model, z) = random_model(ModelKind::LinReg, 4, 1);
    let mut dealer = KeyMaterial::from_u64_seed(1).dealer_view();
    let (ms, qs) = deal_inputs(&model, &z, &mut dealer).unwrap();
    let run = run_three(&Setup::seeded(1), |p| {
        let i = p.id().index();
        predict(p, &ms[i], &qs[i][..3], &PredictOptions::default())
    });
    assert!(run.failure().unwrap().contains("lengths differ"));
}
