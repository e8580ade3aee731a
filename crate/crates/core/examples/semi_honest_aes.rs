//! AES-128 over the binary ring with semi-honest security.
//!
//! P0 holds the key, P1 holds the plaintext block; all three parties learn the
//! ciphertext. The meter shows one offline element and two online elements per
//! AND gate.
//!
//! ```bash
//! cargo run --example semi_honest_aes
//! ```

use mask3pc::circuit::{aes128_circuit, aes128_reference, bits_to_bytes, bytes_to_bits};
use mask3pc::engine::{run_circuit_semi, run_three, Setup};
use mask3pc::transport::Phase;

fn main() {
    let key = *b"an example key!!";
    let block = *b"sixteen byte msg";
    let circuit = aes128_circuit();
    println!("{circuit}");

    let inputs = circuit
        .split_inputs(&bytes_to_bits(&[key, block].concat()))
        .expect("key and block are 256 bits");
    let run = run_three(&Setup::seeded(7), |p| {
        run_circuit_semi(p, &circuit, &inputs[p.id().index()])
    });
    let [out, ..] = run.outputs().expect("honest run");
    let ciphertext = bits_to_bytes(out);

    println!("ciphertext {}", hex::encode(&ciphertext));
    println!("reference  {}", hex::encode(aes128_reference(&key, &block)));
    println!(
        "AND gates {}: offline {} elements, online {} elements in {} rounds",
        circuit.mul_count(),
        run.report.elements(Phase::Offline),
        run.report.elements(Phase::Online),
        run.report.rounds(Phase::Online),
    );
}
