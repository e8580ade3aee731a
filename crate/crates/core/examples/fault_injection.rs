//! Scripted deviations against the malicious protocol.
//!
//! Each catalog entry corrupts one message of one party. The honest parties
//! either abort, naming the check that failed, or output the correct value.
//!
//! ```bash
//! cargo run --example fault_injection
//! ```

use mask3pc::engine::{run_circuit_mal, run_three, MalRunOptions, Setup, TripleParams};
use mask3pc::fault::FaultScript;
use mask3pc::harness::{catalog_circuit, fault_catalog, random_inputs, run_fault_case};

fn main() {
    let params = TripleParams::default().with_bucket(2);
    for case in fault_catalog() {
        let v = run_fault_case(&case, 1, &params);
        println!(
            "{:<28} honest aborts {} / {}, wrong outputs {}, check: {}",
            case.name,
            v.honest_aborts,
            v.honest,
            v.wrong_outputs,
            v.check.as_deref().unwrap_or("-")
        );
    }

    // A script in the text format accepted by `mask3pc run --faults`.
    let script: FaultScript = "point=mul.mz party=2 op=add-delta value=ff"
        .parse()
        .expect("valid script");
    let c = catalog_circuit(5);
    let all = random_inputs(&c, 5);
    let inputs = c.split_inputs(&all).expect("matching arity");
    let opts = MalRunOptions {
        triples: params,
        fair: false,
    };
    let run = run_three(&Setup::seeded(5).with_faults(script), |p| {
        run_circuit_mal(p, &c, &inputs[p.id().index()], &opts)
    });
    println!("custom script: abort reason {:?}", run.abort_reason());
}
