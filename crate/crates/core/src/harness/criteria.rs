//! The acceptance suite. Each criterion runs its workloads, compares against a
//! plaintext oracle or an exact cost formula, and reports pass or fail with a
//! short detail line. Cost constants live in [`CostTable`], so a tampered
//! constant shows up as a named failure.

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::catalog::{fair_catalog, fault_catalog, honest_circuit_run, run_fault_case};
use super::workload::{deal, random_inputs, random_model, random_query, CLEAR_MARGIN};
use crate::circuit::{
    aes128_circuit, aes128_reference, bits_to_bytes, bytes_to_bits, random_circuit, Circuit, RandomCircuitParams,
};
use crate::crypto::KeyMaterial;
use crate::engine::{
    bucket_size, flush_checks, gen_triples, prc_check, run_circuit_mal, run_circuit_semi, run_three, Backdoor,
    MalRunOptions, Net, PrcPair, RunOutput, Setup, Triple, TripleParams, VerifState,
};
use crate::fault::{FaultDirective, FaultOp, FaultScript};
use crate::ml::{
    bitext_mal, bitext_prep_mal, bitext_prep_semi, bitext_semi, deal_vector, dot_mal, dot_prep_mal, dot_prep_semi,
    dot_semi, predict_and_reveal, reveal, CmpOptions, Mode, ModelKind, PredictOptions, Prediction,
};
use crate::party::PartyId;
use crate::ring::{RingElement, Width};
use crate::sharing::{dealer_share, MaskedShare};
use crate::transport::{MeterReport, Phase, Point};

/// How much work each criterion does.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Scale {
    /// The counts the criteria are defined with.
    #[default]
    Full,
    /// Reduced counts for a fast smoke run.
    Quick,
}

impl Scale {
    fn pick(self, full: usize, quick: usize) -> usize {
        match self {
            Scale::Full => full,
            Scale::Quick => quick,
        }
    }
}

/// Online cost of one prediction pipeline: `per_dl * d * l + per_l * l + constant`
/// bits in `rounds` rounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PredictCost {
    pub mode: Mode,
    pub classify: bool,
    pub per_dl: u64,
    pub per_l: u64,
    pub constant: u64,
    pub rounds: u32,
}

/// Every cost constant the suite checks against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CostTable {
    pub semi_offline_per_mul: u64,
    pub semi_online_per_mul: u64,
    /// Online elements per output wire in semi-honest reconstruction.
    pub semi_online_per_output: u64,
    pub semi_offline_rounds: u32,
    /// Online rounds beyond the multiplicative depth.
    pub semi_extra_rounds: u32,
    pub mal_online_per_mul: u64,
    pub mal_offline_per_mul_b2: u64,
    pub mal_offline_per_mul_b4: u64,
    /// Offline elements per opened triple.
    pub mal_offline_per_opened: u64,
    pub fair_offline_commitments: u64,
    pub fair_online_commitments: u64,
    pub fair_online_openings: u64,
    pub dot_semi_offline: u64,
    pub dot_semi_online: u64,
    pub dot_mal_offline_per_coord: u64,
    /// Online bits as `(per_l, constant)`.
    pub bitext_semi_bits: (u64, u64),
    pub bitext_mal_bits: (u64, u64),
    pub predict: [PredictCost; 4],
}

impl Default for CostTable {
    fn default() -> Self {
        let pc = |mode, classify, per_dl, per_l, constant, rounds| PredictCost {
            mode,
            classify,
            per_dl,
            per_l,
            constant,
            rounds,
        };
        CostTable {
            semi_offline_per_mul: 1,
            semi_online_per_mul: 2,
            semi_online_per_output: 3,
            semi_offline_rounds: 1,
            semi_extra_rounds: 2,
            mal_online_per_mul: 4,
            mal_offline_per_mul_b2: 21,
            mal_offline_per_mul_b4: 39,
            mal_offline_per_opened: 12,
            fair_offline_commitments: 4,
            fair_online_commitments: 2,
            fair_online_openings: 6,
            dot_semi_offline: 1,
            dot_semi_online: 2,
            dot_mal_offline_per_coord: 21,
            bitext_semi_bits: (2, 2),
            bitext_mal_bits: (6, 1),
            predict: [
                pc(Mode::Semi, false, 0, 2, 0, 1),
                pc(Mode::Semi, true, 0, 4, 2, 3),
                pc(Mode::Mal, false, 2, 2, 0, 3),
                pc(Mode::Mal, true, 2, 8, 1, 4),
            ],
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct VerifyOptions {
    pub scale: Scale,
    pub costs: CostTable,
}

#[derive(Clone, Debug)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:>2} {} {} ({:.1} s): {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

/// Identifier and name of every criterion.
pub const CRITERIA: [(u8, &str); 11] = [
    (1, "semi-honest oracle equivalence"),
    (2, "malicious honest-run oracle equivalence"),
    (3, "communication meter formulas"),
    (4, "fault catalog: abort or correct"),
    (5, "cut-and-bucket soundness"),
    (6, "sacrifice check offset transfer"),
    (7, "fair reconstruction unanimity"),
    (8, "dot-product costs"),
    (9, "sign extraction correctness and costs"),
    (10, "end-to-end prediction"),
    (11, "transport independence; latency tables not reproduced"),
];

/// Collects failures; the first few end up in the detail line.
#[derive(Default)]
struct Findings {
    failures: Vec<String>,
}

impl Findings {
    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(msg());
        }
    }

    fn fail(&mut self, msg: String) {
        self.failures.push(msg);
    }

    fn finish(self, summary: String) -> (bool, String) {
        if self.failures.is_empty() {
            return (true, summary);
        }
        let n = self.failures.len();
        let mut shown: Vec<String> = self.failures.into_iter().take(3).collect();
        if n > 3 {
            shown.push(format!("and {} more", n - 3));
        }
        (false, shown.join("; "))
    }
}

/// Runs `f(0..n)` on a few worker threads, results in index order.
fn par_map<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let workers = thread::available_parallelism().map_or(1, |w| w.get()).clamp(1, 8);
    let next = AtomicUsize::new(0);
    let out: Mutex<Vec<Option<T>>> = Mutex::new((0..n).map(|_| None).collect());
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let v = f(i);
                out.lock().expect("result lock")[i] = Some(v);
            });
        }
    });
    out.into_inner()
        .expect("result lock")
        .into_iter()
        .map(|v| v.expect("every index ran"))
        .collect()
}

/// The common output of all three parties, or why there is none.
fn agreed<T: Clone + PartialEq>(run: &RunOutput<T>) -> Result<T, String> {
    match run.outputs() {
        Some([a, b, c]) if a == b && b == c => Ok(a.clone()),
        Some(_) => Err("parties disagree".into()),
        None => Err(run.abort_reason().or(run.failure()).unwrap_or("no output").to_string()),
    }
}

fn corpus_circuit(seed: u64) -> Circuit {
    let params = RandomCircuitParams {
        width: Width::W32,
        gates: 20 + (seed as usize * 37) % 181,
        max_depth: 8,
        ..Default::default()
    };
    random_circuit(seed, &params)
}

struct AesCase {
    circuit: Circuit,
    inputs: [Vec<RingElement>; 3],
    expected: Vec<u8>,
}

fn aes_case(seed: u64) -> AesCase {
    let circuit = aes128_circuit();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let key: [u8; 16] = rng.gen();
    let block: [u8; 16] = rng.gen();
    let inputs = circuit
        .split_inputs(&bytes_to_bits(&[key, block].concat()))
        .expect("256 input bits");
    AesCase {
        circuit,
        inputs,
        expected: aes128_reference(&key, &block).to_vec(),
    }
}

fn run_circuit(
    c: &Circuit,
    inputs: &[Vec<RingElement>; 3],
    mode: Mode,
    opts: &MalRunOptions,
    seed: u64,
) -> RunOutput<Vec<RingElement>> {
    run_three(&Setup::seeded(seed), |p| {
        let mine = &inputs[p.id().index()];
        match mode {
            Mode::Semi => run_circuit_semi(p, c, mine),
            Mode::Mal => run_circuit_mal(p, c, mine, opts),
        }
    })
}

fn oracle_equivalence(opts: &VerifyOptions, mode: Mode) -> (bool, String) {
    let n = opts.scale.pick(100, 10);
    let triples = TripleParams::default().with_bucket(bucket_size(1 << 10, 40));
    let mal = MalRunOptions { triples, fair: false };
    let results = par_map(n, |i| {
        let seed = i as u64;
        let c = corpus_circuit(seed);
        if c.depth() > 8 || c.gates().len() > 200 {
            return Err(format!("corpus circuit {seed} out of shape: {c}"));
        }
        let all = random_inputs(&c, seed);
        let want = c.eval_plain(&all).map_err(|e| e.to_string())?;
        let split = c.split_inputs(&all).map_err(|e| e.to_string())?;
        let got = agreed(&run_circuit(&c, &split, mode, &mal, seed)).map_err(|e| format!("circuit {seed}: {e}"))?;
        if got != want {
            return Err(format!("circuit {seed}: output differs from plaintext"));
        }
        Ok(c.mul_count())
    });
    let mut f = Findings::default();
    let mut muls = 0;
    for r in results {
        match r {
            Ok(m) => muls += m,
            Err(e) => f.fail(e),
        }
    }
    let aes = aes_case(7);
    match agreed(&run_circuit(&aes.circuit, &aes.inputs, mode, &mal, 7)) {
        Ok(out) => f.check(bits_to_bytes(&out) == aes.expected, || {
            "AES-128 ciphertext differs from reference".into()
        }),
        Err(e) => f.fail(format!("AES-128: {e}")),
    }
    let extra = if mode == Mode::Mal {
        format!(", bucket size {}", triples.plan(1 << 10).bucket)
    } else {
        String::new()
    };
    f.finish(format!(
        "{n} random circuits ({muls} mul gates) and AES-128 match their oracles exactly{extra}"
    ))
}

fn meter_formulas(opts: &VerifyOptions) -> (bool, String) {
    let t = &opts.costs;
    let mut f = Findings::default();
    let n = opts.scale.pick(20, 5);
    let mut checked = 0;
    let semi_shape = |c: &Circuit, r: &MeterReport, f: &mut Findings| {
        let m = c.mul_count() as u64;
        let o = c.output_count() as u64;
        let p0 = c.inputs_of(PartyId::P0).len() as u64;
        let ev = c.all_input_wires().len() as u64 - p0;
        let inputs = p0 + ev;
        let online = r.elements(Phase::Online);
        f.check(r.elements(Phase::Offline) == t.semi_offline_per_mul * m, || {
            format!(
                "semi offline {} != {}*{m}",
                r.elements(Phase::Offline),
                t.semi_offline_per_mul
            )
        });
        let exact = 2 * p0 + ev + t.semi_online_per_mul * m + t.semi_online_per_output * o;
        f.check(online == exact, || format!("semi online {online} != {exact} for {c}"));
        f.check(online <= 2 * inputs + 2 * m + 3 * o, || {
            format!("semi online {online} exceeds 2I+2M+3O for {c}")
        });
        f.check(r.rounds(Phase::Offline) == t.semi_offline_rounds, || {
            format!("semi offline rounds {}", r.rounds(Phase::Offline))
        });
        let want_rounds = c.depth() as u32 + t.semi_extra_rounds;
        f.check(r.rounds(Phase::Online) == want_rounds, || {
            format!(
                "semi online rounds {} != D+{} for {c}",
                r.rounds(Phase::Online),
                t.semi_extra_rounds
            )
        });
    };
    for seed in 0..n as u64 {
        let c = corpus_circuit(seed);
        let all = random_inputs(&c, seed);
        let split = c.split_inputs(&all).expect("matching arity");
        let run = run_circuit(&c, &split, Mode::Semi, &MalRunOptions::default(), seed);
        if let Err(e) = agreed(&run) {
            f.fail(format!("semi circuit {seed}: {e}"));
            continue;
        }
        semi_shape(&c, &run.report, &mut f);
        checked += 1;
    }
    let aes = aes_case(3);
    let run = run_circuit(&aes.circuit, &aes.inputs, Mode::Semi, &MalRunOptions::default(), 3);
    semi_shape(&aes.circuit, &run.report, &mut f);

    for (bucket, per_mul) in [(2usize, t.mal_offline_per_mul_b2), (4, t.mal_offline_per_mul_b4)] {
        let triples = TripleParams::default().with_bucket(bucket);
        let mal = MalRunOptions { triples, fair: false };
        for seed in 0..opts.scale.pick(10, 3) as u64 {
            let c = corpus_circuit(100 + seed);
            let all = random_inputs(&c, seed);
            let split = c.split_inputs(&all).expect("matching arity");
            let run = run_circuit(&c, &split, Mode::Mal, &mal, seed);
            if let Err(e) = agreed(&run) {
                f.fail(format!("mal circuit {seed}: {e}"));
                continue;
            }
            let r = &run.report;
            let m = c.mul_count() as u64;
            let o = c.output_count() as u64;
            let p0 = c.inputs_of(PartyId::P0).len() as u64;
            let ev = c.all_input_wires().len() as u64 - p0;
            let opened = triples.plan(m as usize).opened as u64;
            let offline = r.elements(Phase::Offline);
            let want = per_mul * m + t.mal_offline_per_opened * opened;
            f.check(offline == want, || {
                format!(
                    "mal offline at B={bucket}: {offline} != {per_mul}*{m} + {}*{opened}",
                    t.mal_offline_per_opened
                )
            });
            let online = r.elements(Phase::Online);
            let want = 2 * p0 + ev + t.mal_online_per_mul * m + 3 * o;
            f.check(online == want, || {
                format!("mal online {online} != {want} ({} per gate)", t.mal_online_per_mul)
            });
        }
    }
    f.finish(format!(
        "semi-honest: {checked} circuits and AES-128 at M offline, 2I+2M+3O online, D+2 rounds; \
         malicious: {} offline per gate at B=2, {} at B=4, {} online",
        t.mal_offline_per_mul_b2, t.mal_offline_per_mul_b4, t.mal_online_per_mul
    ))
}

fn fault_suite(opts: &VerifyOptions) -> (bool, String) {
    let seeds = opts.scale.pick(20, 3);
    let params = TripleParams::default().with_bucket(2);
    let cat = fault_catalog();
    let jobs: Vec<(usize, u64)> = (0..cat.len())
        .flat_map(|c| (0..seeds as u64).map(move |s| (c, s)))
        .collect();
    let verdicts = par_map(jobs.len(), |k| {
        let (c, s) = jobs[k];
        run_fault_case(&cat[c], s, &params)
    });
    let mut f = Findings::default();
    let mut aborts = 0;
    let mut wrong = 0;
    for ((c, s), v) in jobs.iter().zip(&verdicts) {
        wrong += v.wrong_outputs;
        if v.detected() {
            aborts += 1;
        } else {
            f.fail(format!("{} seed {s}: {v:?}", cat[*c].name));
        }
    }
    f.finish(format!(
        "{} scripts x {seeds} seeds: {aborts} runs aborted at an honest party, {wrong} wrong outputs accepted",
        cat.len()
    ))
}

fn bucket_soundness(opts: &VerifyOptions) -> (bool, String) {
    let runs = opts.scale.pick(5000, 300);
    let needed = 16;
    let params = TripleParams {
        bucket: Some(2),
        opened: Some(6),
        ..Default::default()
    };
    let plan = params.plan(needed);
    let results = par_map(runs, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + i as u64);
        let index = rng.gen_range(0..plan.total());
        let delta = rng.gen_range(1..1u64 << 32);
        let faults =
            FaultScript::single(FaultDirective::new(Point::TripGamma, PartyId::P0, FaultOp::AddDelta, delta).at(index));
        let run = run_three(&Setup::seeded(i as u64).with_faults(faults), |p| {
            gen_triples(p, needed, Width::W32, &params).map(|t| t.len())
        });
        // peers of an aborting party see a closed link; only a failure without any
        // abort is outside the protocol
        let stray = if run.any_abort() {
            None
        } else {
            run.failure().map(str::to_string)
        };
        (run.outputs().is_some(), stray)
    });
    let mut f = Findings::default();
    let escapes = results.iter().filter(|(accepted, _)| *accepted).count();
    for (_, fail) in &results {
        if let Some(m) = fail {
            f.fail(format!("run failed outside the protocol: {m}"));
        }
    }
    let bound = 1.0 / (needed as f64).powi(plan.bucket as i32);
    f.check(escapes * 256 <= 3 * runs, || {
        format!("{escapes}/{runs} corrupted batches accepted")
    });
    f.finish(format!(
        "N={needed} B={} C={}: {escapes}/{runs} corrupted batches accepted (rate {:.5}, bound {bound:.5}, limit {:.5})",
        plan.bucket,
        plan.opened,
        escapes as f64 / runs as f64,
        3.0 / 256.0
    ))
}

fn offset_transfer(opts: &VerifyOptions) -> (bool, String) {
    let n = opts.scale.pick(1000, 100);
    let w = Width::W64;
    let results = par_map(n, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(0x7a0 + i as u64);
        let mut e = || RingElement::new(rng.gen(), w);
        let (a, b, d, ee) = (e(), e(), e(), e());
        let delta = if i % 2 == 0 { RingElement::zero(w) } else { e() };
        let mut dealer = KeyMaterial::from_u64_seed(i as u64).dealer_view();
        let vals = [a, b, a * b + delta, d, ee, d * ee];
        let shared: Vec<[MaskedShare; 3]> = vals
            .iter()
            .enumerate()
            .map(|(k, v)| dealer_share(*v, &mut dealer, &format!("v{k}")).expect("matching widths"))
            .collect();
        let bd = Backdoor::new();
        let run = run_three(&Setup::seeded(i as u64).with_backdoor(bd.clone()), |p| {
            let s: Vec<MaskedShare> = shared.iter().map(|x| x[p.id().index()]).collect();
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
        let tau = bd.reconstruct("prc.tau").ok().and_then(|v| v.first().copied());
        (delta, tau, run.any_abort(), !run.any_abort() && run.failure().is_some())
    });
    let mut f = Findings::default();
    let mut nonzero = 0;
    for (i, (delta, tau, aborted, failed)) in results.iter().enumerate() {
        nonzero += usize::from(!delta.is_zero());
        f.check(*tau == Some(*delta), || format!("sample {i}: offset not transferred"));
        f.check(*aborted == !delta.is_zero(), || {
            format!("sample {i}: abort={aborted} with offset {delta}")
        });
        f.check(!failed, || format!("sample {i}: run failed"));
    }
    f.finish(format!(
        "{n} samples ({nonzero} with a nonzero offset): reconstructed offset exact, abort iff offset nonzero"
    ))
}

fn fair_unanimity(opts: &VerifyOptions) -> (bool, String) {
    let t = &opts.costs;
    let seeds = opts.scale.pick(50, 5);
    let params = TripleParams::default().with_bucket(2);
    let cat = fair_catalog();
    let jobs: Vec<(usize, u64)> = (0..cat.len())
        .flat_map(|c| (0..seeds as u64).map(move |s| (c, s)))
        .collect();
    let verdicts = par_map(jobs.len(), |k| {
        let (c, s) = jobs[k];
        run_fault_case(&cat[c], s, &params)
    });
    let mut f = Findings::default();
    let (mut all_out, mut all_abort) = (0, 0);
    for ((c, s), v) in jobs.iter().zip(&verdicts) {
        if !(v.unanimous() && v.safe()) {
            f.fail(format!("{} seed {s}: {v:?}", cat[*c].name));
        } else if v.honest_outputs > 0 {
            all_out += 1;
        } else {
            all_abort += 1;
        }
    }
    let (run, want) = honest_circuit_run(11, &params, true);
    match agreed(&run) {
        Ok(out) => f.check(out == want, || "honest fair run output differs from plaintext".into()),
        Err(e) => f.fail(format!("honest fair run: {e}")),
    }
    let o = want.len() as u64;
    let r = &run.report;
    let offline = r.label(Phase::Offline, Point::FairCommit).items;
    let commits = r.label(Phase::Online, Point::FairCommitM).items;
    let opens = r.label(Phase::Online, Point::FairOpen).items;
    f.check(offline == t.fair_offline_commitments * o, || {
        format!("offline commitments {offline} != {}*{o}", t.fair_offline_commitments)
    });
    f.check(commits <= t.fair_online_commitments * o, || {
        format!("online commitments {commits} > {}*{o}", t.fair_online_commitments)
    });
    f.check(opens <= t.fair_online_openings * o, || {
        format!("online openings {opens} > {}*{o}", t.fair_online_openings)
    });
    f.finish(format!(
        "{} scripts x {seeds} seeds: {all_out} all-output, {all_abort} all-abort, 0 split; \
         honest run per output: {} offline commitments, {} online commitments, {} openings",
        cat.len(),
        offline / o,
        commits / o,
        opens / o
    ))
}

fn deal_vec(vals: &[RingElement], seed: u64) -> [Vec<MaskedShare>; 3] {
    let mut dealer = KeyMaterial::from_u64_seed(seed ^ 0xdea1).dealer_view();
    deal_vector(vals, &mut dealer, "v").expect("matching widths")
}

fn ring_vec(seed: u64, n: usize, width: Width) -> Vec<RingElement> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| RingElement::new(rng.gen(), width)).collect()
}

fn dot_costs(opts: &VerifyOptions) -> (bool, String) {
    let t = &opts.costs;
    let mut f = Findings::default();
    let w = Width::W64;
    let params = TripleParams::default().with_bucket(2);
    let dims: &[usize] = match opts.scale {
        Scale::Full => &[1, 784, 10_000],
        Scale::Quick => &[1, 784],
    };
    for &d in dims {
        let (a, b) = (ring_vec(d as u64, d, w), ring_vec(d as u64 + 1, d, w));
        let want = a.iter().zip(&b).fold(RingElement::zero(w), |s, (x, y)| s + *x * *y);
        let (xs, ys) = (deal_vec(&a, 3), deal_vec(&b, 4));
        for mode in [Mode::Semi, Mode::Mal] {
            let run = run_three(&Setup::seeded(d as u64), |p| {
                let i = p.id().index();
                let u = match mode {
                    Mode::Semi => {
                        let prep = dot_prep_semi(p, &xs[i], &ys[i])?;
                        p.set_phase(Phase::Online);
                        dot_semi(p, &prep, &xs[i], &ys[i])?
                    }
                    Mode::Mal => {
                        let prep = dot_prep_mal(p, &xs[i], &ys[i], &params)?;
                        p.set_phase(Phase::Online);
                        let mut verif = VerifState::new();
                        let u = dot_mal(p, &prep, &xs[i], &ys[i], &mut verif)?;
                        flush_checks(p, &mut verif)?;
                        u
                    }
                };
                reveal(p, u, mode)
            });
            match agreed(&run) {
                Ok(v) => f.check(v == want, || format!("{} d={d}: wrong dot product", mode.name())),
                Err(e) => f.fail(format!("{} d={d}: {e}", mode.name())),
            }
            let r = &run.report;
            let (off, on) = (r.elements(Phase::Offline), r.elements(Phase::Online));
            let dd = d as u64;
            let (want_off, want_on) = match mode {
                Mode::Semi => (t.dot_semi_offline, t.dot_semi_online),
                Mode::Mal => {
                    let opened = params.plan(d).opened as u64;
                    (
                        t.dot_mal_offline_per_coord * dd + t.mal_offline_per_opened * opened,
                        2 * dd + 2,
                    )
                }
            };
            f.check(off == want_off, || {
                format!("{} d={d}: offline {off} != {want_off}", mode.name())
            });
            f.check(on == want_on, || {
                format!("{} d={d}: online {on} != {want_on}", mode.name())
            });
        }
    }
    f.finish(format!(
        "d in {dims:?}: semi-honest {} offline / {} online elements; malicious {}d offline / 2d+2 online",
        t.dot_semi_offline, t.dot_semi_online, t.dot_mal_offline_per_coord
    ))
}

/// Sign bits of `vals` through the chosen protocol, with the run's meter.
fn signs(mode: Mode, vals: &[RingElement], cmp: CmpOptions, seed: u64) -> Result<(Vec<bool>, MeterReport), String> {
    let shares = deal_vec(vals, seed);
    let params = TripleParams::default().with_bucket(2);
    let run = run_three(&Setup::seeded(seed), |p| {
        let a = &shares[p.id().index()];
        p.set_phase(Phase::Offline);
        let out = match mode {
            Mode::Semi => {
                let prep = bitext_prep_semi(p, a.len(), vals[0].width(), &cmp)?;
                p.set_phase(Phase::Online);
                bitext_semi(p, &prep, a)?
            }
            Mode::Mal => {
                let prep = bitext_prep_mal(p, a, &cmp, &params)?;
                p.set_phase(Phase::Online);
                bitext_mal(p, &prep, a, &mut VerifState::new())?
            }
        };
        out.into_iter()
            .map(|s| reveal(p, s, mode))
            .collect::<Result<Vec<_>, _>>()
    });
    let bits = agreed(&run)?.iter().map(|b| b.bit()).collect();
    Ok((bits, run.report))
}

fn comparison(opts: &VerifyOptions) -> (bool, String) {
    let t = &opts.costs;
    let mut f = Findings::default();
    let w8 = Width::W8;
    let small: Vec<RingElement> = (-4i64..=4).map(|a| RingElement::from_signed(a, w8)).collect();
    let want: Vec<bool> = small.iter().map(|v| v.bit_at_top()).collect();
    let base = CmpOptions::default().with_magnitude_bits(2);
    let mut cases = 0;
    let rb = base.r_bits(w8).expect("room at 8 bits");
    for r in 1..1u64 << rb {
        let cmp = CmpOptions {
            force_r: Some(r),
            ..base
        };
        match signs(Mode::Semi, &small, cmp, r) {
            Ok((bits, _)) => f.check(bits == want, || format!("8-bit semi r={r}: wrong sign")),
            Err(e) => f.fail(format!("8-bit semi r={r}: {e}")),
        }
        cases += 1;
    }
    let fb = base.factor_bits(w8).expect("room at 8 bits");
    for r1 in 1..1u64 << fb {
        for r2 in 1..1u64 << fb {
            let cmp = CmpOptions {
                force_factors: Some((r1, r2)),
                ..base
            };
            match signs(Mode::Mal, &small, cmp, r1 * 16 + r2) {
                Ok((bits, _)) => f.check(bits == want, || format!("8-bit mal r1={r1} r2={r2}: wrong sign")),
                Err(e) => f.fail(format!("8-bit mal r1={r1} r2={r2}: {e}")),
            }
            cases += 1;
        }
    }

    let n = opts.scale.pick(10_000, 500);
    let cmp = CmpOptions::default();
    let bound = 1i64 << cmp.magnitude_bits;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let wide: Vec<RingElement> = (0..n)
        .map(|_| RingElement::from_signed(rng.gen_range(-bound..=bound), Width::W64))
        .collect();
    let want: Vec<bool> = wide.iter().map(|v| v.bit_at_top()).collect();
    let mut wrong = 0;
    for mode in [Mode::Semi, Mode::Mal] {
        match signs(mode, &wide, cmp, 5) {
            Ok((bits, _)) => {
                let bad = bits.iter().zip(&want).filter(|(a, b)| a != b).count();
                wrong += bad;
                f.check(bad == 0, || format!("64-bit {}: {bad} wrong signs", mode.name()));
            }
            Err(e) => f.fail(format!("64-bit {}: {e}", mode.name())),
        }
    }

    let l = 64u64;
    let one = [RingElement::from_signed(-5, Width::W64)];
    for (mode, (per_l, c)) in [(Mode::Semi, t.bitext_semi_bits), (Mode::Mal, t.bitext_mal_bits)] {
        match signs(mode, &one, cmp, 1) {
            Ok((_, r)) => {
                let bits = r.element_bits(Phase::Online);
                f.check(bits == per_l * l + c, || {
                    format!("{} online bits {bits} != {per_l}l+{c}", mode.name())
                });
            }
            Err(e) => f.fail(format!("{} cost run: {e}", mode.name())),
        }
    }
    f.finish(format!(
        "8-bit exhaustive over {cases} blinding choices, {n} wide inputs per mode with {wrong} errors; \
         online bits {}l+{} semi-honest, {}l+{} malicious",
        t.bitext_semi_bits.0, t.bitext_semi_bits.1, t.bitext_mal_bits.0, t.bitext_mal_bits.1
    ))
}

fn prediction(opts: &VerifyOptions) -> (bool, String) {
    let t = &opts.costs;
    let mut f = Findings::default();
    let d = 784;
    let l = 64u64;
    let params = TripleParams::default().with_bucket(2);
    let seeds = opts.scale.pick(3, 1) as u64;
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for kind in ModelKind::ALL {
        for mode in [Mode::Semi, Mode::Mal] {
            for seed in 0..seeds {
                let model = random_model(kind, d, seed);
                let query = random_query(d, seed);
                let dealt = deal(&model, &query, seed).expect("encodable model");
                let popts = PredictOptions {
                    mode,
                    triples: params,
                    ..Default::default()
                };
                let run = run_three(&Setup::seeded(seed), |p| {
                    let i = p.id().index();
                    predict_and_reveal(p, &dealt.model[i], &dealt.query[i], &popts)
                });
                runs += 1;
                let tag = format!("{kind} {} seed {seed}", mode.name());
                let got = match agreed(&run) {
                    Ok(g) => g,
                    Err(e) => {
                        f.fail(format!("{tag}: {e}"));
                        continue;
                    }
                };
                let margin = model.margin(&query).expect("matching dimension");
                match got {
                    Prediction::Value(v) => {
                        let err = (v - margin).abs();
                        worst = worst.max(err);
                        f.check(err <= (d as f64 + 1.0) * 2f64.powi(-13), || {
                            format!("{tag}: error {err:e}")
                        });
                    }
                    Prediction::Class(c) => {
                        f.check(margin.abs() <= CLEAR_MARGIN || c == (margin >= 0.0), || {
                            format!("{tag}: label {c} for margin {margin}")
                        });
                    }
                }
                let cost = t
                    .predict
                    .iter()
                    .find(|pc| pc.mode == mode && pc.classify == kind.is_classifier())
                    .expect("cost row for every pipeline");
                let bits = run.report.element_bits(Phase::Online);
                let want = cost.per_dl * d as u64 * l + cost.per_l * l + cost.constant;
                f.check(bits == want, || format!("{tag}: online bits {bits} != {want}"));
                let rounds = run.report.rounds(Phase::Online);
                f.check(rounds == cost.rounds, || {
                    format!("{tag}: online rounds {rounds} != {}", cost.rounds)
                });
            }
        }
    }
    f.finish(format!(
        "d={d}: {runs} predictions, worst regression error {worst:.2e} (limit {:.2e}); online bits and rounds match the cost table",
        (d as f64 + 1.0) * 2f64.powi(-13)
    ))
}

fn transport_independence(_opts: &VerifyOptions) -> (bool, String) {
    let mut f = Findings::default();
    let params = TripleParams::default().with_bucket(2);
    let mut frames = 0usize;
    for fair in [false, true] {
        let c = super::catalog::catalog_circuit(21);
        let all = random_inputs(&c, 21);
        let split = c.split_inputs(&all).expect("matching arity");
        let opts = MalRunOptions { triples: params, fair };
        let on = |net| {
            run_three(&Setup::seeded(21).with_net(net), |p| {
                run_circuit_mal(p, &c, &split[p.id().index()], &opts)
            })
        };
        let (mem, tcp) = (on(Net::Memory), on(Net::Tcp));
        match (agreed(&mem), agreed(&tcp)) {
            (Ok(a), Ok(b)) => f.check(a == b, || format!("circuit fair={fair}: outputs differ")),
            (a, b) => f.fail(format!("circuit fair={fair}: {:?} / {:?}", a.err(), b.err())),
        }
        f.check(mem.report == tcp.report, || {
            format!("circuit fair={fair}: meters or transcripts differ")
        });
        frames += mem.report.transcripts.len();
    }
    let model = random_model(ModelKind::SvmClass, 16, 4);
    let dealt = deal(&model, &random_query(16, 4), 4).expect("encodable model");
    let popts = PredictOptions {
        mode: Mode::Mal,
        triples: params,
        ..Default::default()
    };
    let on = |net| {
        run_three(&Setup::seeded(4).with_net(net), |p| {
            let i = p.id().index();
            predict_and_reveal(p, &dealt.model[i], &dealt.query[i], &popts)
        })
    };
    let (mem, tcp) = (on(Net::Memory), on(Net::Tcp));
    f.check(agreed(&mem).ok() == agreed(&tcp).ok() && agreed(&mem).is_ok(), || {
        "classification outputs differ across transports".into()
    });
    f.check(mem.report == tcp.report, || {
        "classification meters or transcripts differ".into()
    });
    frames += mem.report.transcripts.len();
    f.finish(format!(
        "wall-clock tables need the original hardware and are not reproduced; \
         in-memory and TCP runs agree on outputs, meters and {frames} link transcripts"
    ))
}

/// Runs one criterion by id.
pub fn run_criterion(id: u8, opts: &VerifyOptions) -> Option<CriterionResult> {
    let (_, name) = *CRITERIA.iter().find(|(i, _)| *i == id)?;
    let start = Instant::now();
    let (passed, detail) = match id {
        1 => oracle_equivalence(opts, Mode::Semi),
        2 => oracle_equivalence(opts, Mode::Mal),
        3 => meter_formulas(opts),
        4 => fault_suite(opts),
        5 => bucket_soundness(opts),
        6 => offset_transfer(opts),
        7 => fair_unanimity(opts),
        8 => dot_costs(opts),
        9 => comparison(opts),
        10 => prediction(opts),
        11 => transport_independence(opts),
        _ => unreachable!("ids come from the table"),
    };
    Some(CriterionResult {
        id,
        name,
        passed,
        detail,
        elapsed: start.elapsed(),
    })
}

/// Runs every criterion in order.
pub fn verify(opts: &VerifyOptions) -> Vec<CriterionResult> {
    CRITERIA.iter().filter_map(|(id, _)| run_criterion(*id, opts)).collect()
}

trait TopBit {
    fn bit_at_top(self) -> bool;
}

impl TopBit for RingElement {
    fn bit_at_top(self) -> bool {
        self.msb().expect("multi-bit ring")
    }
}
