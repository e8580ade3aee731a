//! Fair output delivery: either every honest party learns the output or none
//! does, even when a corrupted party withholds or forges messages.
//!
//! ```bash
//! cargo run --example fair_reconstruction
//! ```

use mask3pc::engine::TripleParams;
use mask3pc::harness::{fair_catalog, honest_circuit_run, run_fault_case};
use mask3pc::transport::{Phase, Point};

fn main() {
    let params = TripleParams::default().with_bucket(2);

    let (run, want) = honest_circuit_run(2, &params, true);
    let [out, ..] = run.outputs().expect("honest run");
    assert_eq!(out, &want);
    let o = want.len() as u64;
    println!("honest run, {o} outputs");
    println!(
        "  offline commitments  {}",
        run.report.label(Phase::Offline, Point::FairCommit).items / o
    );
    println!(
        "  online commitments   {}",
        run.report.label(Phase::Online, Point::FairCommitM).items / o
    );
    println!(
        "  online openings      {}",
        run.report.label(Phase::Online, Point::FairOpen).items / o
    );
    println!("  online rounds        {}", run.report.rounds(Phase::Online));

    for case in fair_catalog() {
        let v = run_fault_case(&case, 2, &params);
        let outcome = match (v.unanimous(), v.honest_outputs) {
            (false, _) => "SPLIT",
            (true, 0) => "all honest parties abort",
            (true, _) => "all honest parties output",
        };
        println!("{:<22} {outcome}", case.name);
    }
}
