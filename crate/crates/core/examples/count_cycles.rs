//! Counts the limit cycles of a cubic field with a known cycle at radius
//! 1/4, and of a random field from the coefficient ball.
//!
//! ```bash
//! cargo run --release --example count_cycles
//! ```

use cyclelab::field::{regime_norm, sample_real_field, PolyField};
use cyclelab::zeros::{count_cycles_of_sample, count_real_cycles, CountSettings, RealScanSettings};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cyclelab::Result<()> {
    // F = x (r^2 - 1/16), G = y (r^2 - 1/16)
    let mut field = PolyField::zero(3);
    for (k, i) in [(3, 0), (1, 2)] {
        field.set_a(k, i, 1.0);
    }
    for (k, i) in [(2, 1), (0, 3)] {
        field.set_b(k, i, 1.0);
    }
    field.set_a(1, 0, -1.0 / 16.0);
    field.set_b(0, 1, -1.0 / 16.0);
    let res = count_real_cycles(&field, &RealScanSettings::default())?;
    println!("known cycle: C = {}, radii {:?}", res.count, res.roots);

    let norm = regime_norm(2);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let settings = CountSettings::for_norm(norm, 2, 1e-10);
    for j in 0..3 {
        let sample = sample_real_field(2, norm, &mut rng);
        let counts = count_cycles_of_sample(&sample, &settings)?;
        println!(
            "sample {j}: C = {:?}, N_complex = {:?}, reliable = {}",
            counts.c, counts.n_complex, counts.reliable
        );
    }
    Ok(())
}
