//! The same malicious run over in-process channels and over loopback TCP.
//! Outputs, meters and per-link transcript digests agree.
//!
//! For three separate processes use the command line:
//!
//! ```bash
//! mask3pc run --mode mal --circuit aes128 --role 0 --peers 127.0.0.1:7000,127.0.0.1:7001 &
//! mask3pc run --mode mal --circuit aes128 --role 1 --peers 127.0.0.1:7000,127.0.0.1:7001 &
//! mask3pc run --mode mal --circuit aes128 --role 2 --peers 127.0.0.1:7000,127.0.0.1:7001
//! ```
//!
//! ```bash
//! cargo run --example tcp
//! ```

use mask3pc::engine::{run_circuit_mal, run_three, MalRunOptions, Net, Setup, TripleParams};
use mask3pc::harness::{catalog_circuit, random_inputs};

fn main() {
    let c = catalog_circuit(8);
    let all = random_inputs(&c, 8);
    let inputs = c.split_inputs(&all).expect("matching arity");
    let opts = MalRunOptions {
        triples: TripleParams::default().with_bucket(2),
        fair: true,
    };
    let run = |net| {
        run_three(&Setup::seeded(8).with_net(net), |p| {
            run_circuit_mal(p, &c, &inputs[p.id().index()], &opts)
        })
    };
    let mem = run(Net::Memory);
    let tcp = run(Net::Tcp);

    println!("outputs equal:     {}", mem.outputs() == tcp.outputs());
    println!("meters equal:      {}", mem.report == tcp.report);
    for ((link, a), (_, b)) in mem.report.transcripts.iter().zip(&tcp.report.transcripts) {
        println!(
            "{link:?}: {} {}",
            hex::encode(&a.as_bytes()[..8]),
            if a == b { "same" } else { "DIFFERENT" }
        );
    }
    println!("wall clock: memory {:?}, tcp {:?}", mem.elapsed, tcp.elapsed);
}
