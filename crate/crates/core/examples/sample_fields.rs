//! Draws random degree-3 fields from the coefficient ball in the paper's
//! regime and prints their norms and linear parts.
//!
//! ```bash
//! cargo run --example sample_fields
//! ```

use cyclelab::field::{regime_norm, sample_real_field};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let degree = 3;
    let norm = regime_norm(degree);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    println!(
        "d = {degree}, s = {}, N = {norm:.6e}",
        degree * (degree + 3)
    );
    for j in 0..5 {
        let field = sample_real_field(degree, norm, &mut rng);
        let w = field.linear_part();
        println!(
            "field {j}: |v| = {:.6e}, a10 = {:+.3e}, b01 = {:+.3e}",
            field.coeff_norm(),
            w.a10.re,
            w.b01.re
        );
    }
    let field = sample_real_field(degree, norm, &mut rng);
    println!("{}", serde_json::to_string(&field).unwrap());
}
