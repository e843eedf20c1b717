//! Estimates Chebyshev degrees: of T_5, and of the linear-center
//! displacement g_0 restricted to a random chord of E(4, N).
//!
//! ```bash
//! cargo run --release --example remez_degree
//! ```

use cyclelab::commands::{estimate_remez, RemezArgs, RemezTarget};
use cyclelab::remez::{chebyshev_t, random_family, remez_check};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cyclelab::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let family = random_family((-1.0, 1.0), 500, &mut rng);
    let holds = family
        .iter()
        .filter(|pair| remez_check(|x| chebyshev_t(5, x), pair, 5.0).holds)
        .count();
    println!(
        "T_5 with exponent 5: inequality holds on {holds}/{} pairs",
        family.len()
    );

    for target in [RemezTarget::Chebyshev(5), RemezTarget::DisplacementLine] {
        let report = estimate_remez(&RemezArgs {
            target,
            degree: 2,
            norm: None,
            trials: 200,
            seed: 1,
        })?;
        println!(
            "{}: d_hat = {:.4} over {} pairs",
            report.f_descriptor, report.d_hat, report.trials
        );
    }
    Ok(())
}
