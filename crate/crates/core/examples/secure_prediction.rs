//! Private linear prediction: the model owner deals its model, the client its
//! query, and the three servers compute the prediction without learning
//! either.
//!
//! ```bash
//! cargo run --example secure_prediction
//! ```

use mask3pc::crypto::KeyMaterial;
use mask3pc::engine::{run_three, Setup, TripleParams};
use mask3pc::harness::{random_model, random_query};
use mask3pc::ml::{deal_inputs, predict_and_reveal, Mode, ModelKind, PredictOptions};
use mask3pc::transport::Phase;

fn main() {
    let d = 784;
    for kind in ModelKind::ALL {
        let model = random_model(kind, d, 11);
        let query = random_query(d, 11);
        let mut dealer = KeyMaterial::from_u64_seed(99).dealer_view();
        let (shared_model, shared_query) = deal_inputs(&model, &query, &mut dealer).expect("encodable model");
        for mode in [Mode::Semi, Mode::Mal] {
            let opts = PredictOptions {
                mode,
                triples: TripleParams::default().with_bucket(2),
                ..Default::default()
            };
            let run = run_three(&Setup::seeded(11), |p| {
                let i = p.id().index();
                predict_and_reveal(p, &shared_model[i], &shared_query[i], &opts)
            });
            let [got, ..] = run.outputs().expect("honest run");
            println!(
                "{kind:<5} {:<4} secure {:<22} plaintext {:<22} online {} bits, {} rounds",
                mode.name(),
                got.to_string(),
                model.evaluate(&query).expect("matching dimension").to_string(),
                run.report.element_bits(Phase::Online),
                run.report.rounds(Phase::Online),
            );
        }
    }
}
