//! Sign extraction on shared fixed-point values.
//!
//! The input is blinded by a positive random factor, the blinded value is
//! opened, and its sign bit is re-shared. Inputs must stay below the
//! configured magnitude bound.
//!
//! ```bash
//! cargo run --example comparison
//! ```

use mask3pc::crypto::KeyMaterial;
use mask3pc::engine::{run_three, Setup, TripleParams, VerifState};
use mask3pc::ml::{bitext_mal, bitext_prep_mal, bitext_prep_semi, bitext_semi, deal_vector, reveal, CmpOptions, Mode};
use mask3pc::ring::{fx_encode, Width};
use mask3pc::transport::Phase;

fn main() {
    let values = [-3.5, -0.001, 0.0, 0.25, 1200.0];
    let encoded: Vec<_> = values.iter().map(|v| fx_encode(*v, 13).expect("in range")).collect();
    let mut dealer = KeyMaterial::from_u64_seed(1).dealer_view();
    let shares = deal_vector(&encoded, &mut dealer, "cmp").expect("matching widths");
    let cmp = CmpOptions::default();
    println!("inputs admitted up to 2^{} in magnitude", cmp.magnitude_bits);

    for mode in [Mode::Semi, Mode::Mal] {
        let run = run_three(&Setup::seeded(1), |p| {
            let a = &shares[p.id().index()];
            let signs = match mode {
                Mode::Semi => {
                    let prep = bitext_prep_semi(p, a.len(), Width::W64, &cmp)?;
                    p.set_phase(Phase::Online);
                    bitext_semi(p, &prep, a)?
                }
                Mode::Mal => {
                    let prep = bitext_prep_mal(p, a, &cmp, &TripleParams::default().with_bucket(2))?;
                    p.set_phase(Phase::Online);
                    bitext_mal(p, &prep, a, &mut VerifState::new())?
                }
            };
            signs
                .into_iter()
                .map(|s| reveal(p, s, mode))
                .collect::<Result<Vec<_>, _>>()
        });
        let [bits, ..] = run.outputs().expect("honest run");
        let negative: Vec<bool> = bits.iter().map(|b| b.bit()).collect();
        println!(
            "{:<4} negative {:?}; online {} bits per value",
            mode.name(),
            negative,
            run.report.element_bits(Phase::Online) / values.len() as u64
        );
    }
}
