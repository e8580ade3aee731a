//! A random arithmetic circuit over Z_{2^32} with malicious security.
//!
//! Triples are produced by cut-and-bucket; the bucket size here follows from a
//! batch of 2^10 triples at 40 bits of statistical security.
//!
//! ```bash
//! cargo run --example malicious_circuit
//! ```

use mask3pc::circuit::{random_circuit, RandomCircuitParams};
use mask3pc::engine::{bucket_size, run_circuit_mal, run_three, MalRunOptions, Setup, TripleParams};
use mask3pc::harness::random_inputs;
use mask3pc::transport::Phase;

fn main() {
    let circuit = random_circuit(
        3,
        &RandomCircuitParams {
            gates: 200,
            ..Default::default()
        },
    );
    let all = random_inputs(&circuit, 3);
    let expected = circuit.eval_plain(&all).expect("matching arity");
    let inputs = circuit.split_inputs(&all).expect("matching arity");

    let bucket = bucket_size(1 << 10, 40);
    let opts = MalRunOptions {
        triples: TripleParams::default().with_bucket(bucket),
        fair: false,
    };
    let run = run_three(&Setup::seeded(3), |p| {
        run_circuit_mal(p, &circuit, &inputs[p.id().index()], &opts)
    });
    let [out, ..] = run.outputs().expect("honest run");
    assert_eq!(out, &expected);

    println!("{circuit}, bucket size {bucket}");
    println!(
        "outputs match the plaintext evaluation: {:?}",
        out.iter().map(|v| v.value()).collect::<Vec<_>>()
    );
    print!("{}", run.report.render());
    let m = circuit.mul_count() as u64;
    println!(
        "online elements per mul gate (excluding inputs and outputs): {}",
        (run.report.elements(Phase::Online) - inputs_and_outputs(&circuit)) / m
    );
}

fn inputs_and_outputs(c: &mask3pc::circuit::Circuit) -> u64 {
    let p0 = c.inputs_of(mask3pc::party::PartyId::P0).len() as u64;
    let rest = c.all_input_wires().len() as u64 - p0;
    2 * p0 + rest + 3 * c.output_count() as u64
}
