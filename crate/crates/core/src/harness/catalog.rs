//! Scripted deviations with the workload each one targets, and the judgement
//! of a faulty run: an honest party must abort or every honest output must be
//! correct.

use super::workload::{deal, random_inputs, random_model, random_query, DealtInputs};
use crate::circuit::{random_circuit, Circuit, RandomCircuitParams};
use crate::engine::{run_circuit_mal, run_three, MalRunOptions, PartyOutcome, RunOutput, Setup, TripleParams};
use crate::fault::{FaultDirective, FaultOp, FaultScript};
use crate::ml::{predict_and_reveal, Mode, ModelKind, PredictOptions, Prediction};
use crate::party::PartyId;
use crate::ring::RingElement;
use crate::transport::Point;

/// The protocol a fault case attacks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    /// A malicious circuit run with plain output reconstruction.
    Circuit,
    /// A malicious circuit run with fair output reconstruction.
    FairCircuit,
    /// Malicious secure classification, which runs the sign extraction.
    Classify,
}

#[derive(Clone, Debug)]
pub struct FaultCase {
    pub name: &'static str,
    pub target: Target,
    pub script: FaultScript,
}

impl FaultCase {
    fn new(name: &'static str, target: Target, d: FaultDirective) -> Self {
        FaultCase {
            name,
            target,
            script: FaultScript::single(d),
        }
    }

    pub fn corrupted(&self) -> Vec<PartyId> {
        self.script.corrupted()
    }
}

/// The standard deviation catalog: one case per attack on the malicious
/// protocols.
pub fn fault_catalog() -> Vec<FaultCase> {
    use PartyId::*;
    let d = FaultDirective::new;
    vec![
        FaultCase::new(
            "gamma-offset",
            Target::Circuit,
            d(Point::MulGamma, P0, FaultOp::AddDelta, 1),
        ),
        FaultCase::new(
            "chi-offset",
            Target::Circuit,
            d(Point::MulChi, P1, FaultOp::AddDelta, 1),
        ),
        FaultCase::new(
            "masked-product-offset",
            Target::Circuit,
            d(Point::MulMz, P1, FaultOp::AddDelta, 1),
        ),
        FaultCase::new(
            "inconsistent-input",
            Target::Circuit,
            d(Point::InputM, P0, FaultOp::AddDelta, 1).to(P2),
        ),
        FaultCase::new(
            "wrong-output-share",
            Target::Circuit,
            d(Point::RecShare, P1, FaultOp::AddDelta, 1).to(P0),
        ),
        FaultCase::new(
            "wrong-sign-share",
            Target::Classify,
            d(Point::BitextQ, P1, FaultOp::AddDelta, 1),
        ),
        FaultCase::new(
            "split-fair-signal",
            Target::FairCircuit,
            d(Point::FairSignal, P0, FaultOp::Replace, 0).to(P2),
        ),
        FaultCase::new(
            "corrupt-optimistic-triple",
            Target::Circuit,
            d(Point::TripGamma, P0, FaultOp::AddDelta, 1),
        ),
    ]
}

/// Deviations against fair reconstruction only.
pub fn fair_catalog() -> Vec<FaultCase> {
    use PartyId::*;
    let d = FaultDirective::new;
    let t = Target::FairCircuit;
    vec![
        FaultCase::new(
            "signal-abort-to-p2",
            t,
            d(Point::FairSignal, P0, FaultOp::Replace, 0).to(P2),
        ),
        FaultCase::new(
            "signal-abort-to-p1",
            t,
            d(Point::FairSignal, P0, FaultOp::Replace, 0).to(P1),
        ),
        FaultCase::new("signal-abort-to-both", t, d(Point::FairSignal, P0, FaultOp::Replace, 0)),
        FaultCase::new("forged-relay-p1", t, d(Point::FairForward, P1, FaultOp::Replace, 0)),
        FaultCase::new("forged-relay-p2", t, d(Point::FairForward, P2, FaultOp::Replace, 0)),
        FaultCase::new("divergent-commit-m", t, d(Point::FairCommitM, P1, FaultOp::AddDelta, 1)),
        FaultCase::new("bad-opening-p0", t, d(Point::FairOpen, P0, FaultOp::AddDelta, 1).to(P2)),
        FaultCase::new("bad-opening-p2", t, d(Point::FairOpen, P2, FaultOp::AddDelta, 1)),
        FaultCase::new("bad-mask-commit", t, d(Point::FairCommit, P1, FaultOp::AddDelta, 1)),
        FaultCase::new(
            "bad-origin-commit",
            t,
            d(Point::FairOrigin, P0, FaultOp::AddDelta, 1).to(P1),
        ),
    ]
}

/// What one faulty run did at the honest parties.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FaultVerdict {
    pub honest_aborts: usize,
    pub honest_outputs: usize,
    pub wrong_outputs: usize,
    pub honest: usize,
    /// First abort reason seen at an honest party.
    pub check: Option<String>,
}

impl FaultVerdict {
    /// Abort-or-correct: no honest party accepted a wrong value.
    pub fn safe(&self) -> bool {
        self.wrong_outputs == 0
    }

    /// Some honest party aborted and none accepted a wrong value.
    pub fn detected(&self) -> bool {
        self.safe() && self.honest_aborts > 0
    }

    /// Every honest party output, or none did.
    pub fn unanimous(&self) -> bool {
        self.honest_outputs == 0 || self.honest_outputs == self.honest
    }
}

fn judge<T: PartialEq>(run: &RunOutput<T>, corrupted: &[PartyId], want: &T) -> FaultVerdict {
    let mut v = FaultVerdict {
        honest_aborts: 0,
        honest_outputs: 0,
        wrong_outputs: 0,
        honest: 0,
        check: None,
    };
    for (id, o) in PartyId::ALL.iter().zip(&run.outcomes) {
        if corrupted.contains(id) {
            continue;
        }
        v.honest += 1;
        match o {
            PartyOutcome::Output(x) => {
                v.honest_outputs += 1;
                if x != want {
                    v.wrong_outputs += 1;
                }
            }
            PartyOutcome::Aborted(c) | PartyOutcome::Failed(c) => {
                v.honest_aborts += 1;
                v.check.get_or_insert_with(|| c.clone());
            }
        }
    }
    v
}

/// The circuit the circuit targets run: every party owns an input.
pub fn catalog_circuit(seed: u64) -> Circuit {
    let params = RandomCircuitParams {
        gates: 40,
        outputs: 3,
        max_depth: 5,
        ..Default::default()
    };
    let c = random_circuit(seed, &params);
    let owners: Vec<PartyId> = (0..c.inputs().len()).map(|i| PartyId::ALL[i % 3]).collect();
    c.with_owners(&owners).expect("one owner per input")
}

fn classify_inputs(seed: u64) -> (DealtInputs, bool) {
    // keep the margin clear of zero so the reference label is unambiguous
    let mut s = seed;
    loop {
        let model = random_model(ModelKind::SvmClass, 8, s);
        let query = random_query(8, s);
        let margin = model.margin(&query).expect("matching dimension");
        if margin.abs() > 0.01 {
            return (deal(&model, &query, s).expect("encodable model"), margin >= 0.0);
        }
        s = s.wrapping_add(0x1000);
    }
}

/// Runs `case` at `seed` under `params` and judges the outcome.
pub fn run_fault_case(case: &FaultCase, seed: u64, params: &TripleParams) -> FaultVerdict {
    let setup = Setup::seeded(seed).with_faults(case.script.clone());
    let corrupted = case.corrupted();
    match case.target {
        Target::Circuit | Target::FairCircuit => {
            let c = catalog_circuit(seed);
            let all = random_inputs(&c, seed);
            let split = c.split_inputs(&all).expect("matching arity");
            let want: Vec<RingElement> = c.eval_plain(&all).expect("matching arity");
            let opts = MalRunOptions {
                triples: *params,
                fair: case.target == Target::FairCircuit,
            };
            let run = run_three(&setup, |p| run_circuit_mal(p, &c, &split[p.id().index()], &opts));
            judge(&run, &corrupted, &want)
        }
        Target::Classify => {
            let (dealt, label) = classify_inputs(seed);
            let opts = PredictOptions {
                mode: Mode::Mal,
                triples: *params,
                ..Default::default()
            };
            let run = run_three(&setup, |p| {
                let i = p.id().index();
                predict_and_reveal(p, &dealt.model[i], &dealt.query[i], &opts)
            });
            judge(&run, &corrupted, &Prediction::Class(label))
        }
    }
}

/// An honest run of the catalog circuit, for comparison with faulty ones.
pub fn honest_circuit_run(
    seed: u64,
    params: &TripleParams,
    fair: bool,
) -> (RunOutput<Vec<RingElement>>, Vec<RingElement>) {
    let c = catalog_circuit(seed);
    let all = random_inputs(&c, seed);
    let split = c.split_inputs(&all).expect("matching arity");
    let want = c.eval_plain(&all).expect("matching arity");
    let opts = MalRunOptions { triples: *params, fair };
    let run = run_three(&Setup::seeded(seed), |p| {
        run_circuit_mal(p, &c, &split[p.id().index()], &opts)
    });
    (run, want)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::Width;

    #[test]
    fn catalog_covers_eight_attacks() {
        let cat = fault_catalog();
        assert!(cat.len() >= 8);
        let text: String = cat.iter().map(|c| c.script.to_string()).collect();
        for point in [
            "mul.gamma",
            "mul.chi",
            "mul.mz",
            "sh.m",
            "rec.share",
            "bitext.q",
            "frec.signal",
            "trip.gamma",
        ] {
            assert!(text.contains(&format!("point={point} ")), "{point}");
        }
    }

    #[test]
    fn every_case_is_detected_once() {
        let params = TripleParams::default().with_bucket(2);
        for case in fault_catalog() {
            let v = run_fault_case(&case, 1, &params);
            assert!(v.detected(), "{}: {v:?}", case.name);
        }
    }

    #[test]
    fn honest_catalog_circuit_has_inputs_at_every_party() {
        let c = catalog_circuit(3);
        assert_eq!(c.width(), Width::W32);
        for id in PartyId::ALL {
            assert!(!c.inputs_of(id).is_empty());
        }
        let (run, want) = honest_circuit_run(3, &TripleParams::default().with_bucket(2), true);
        assert_eq!(run.outputs().unwrap(), [&want, &want, &want]);
    }
}
