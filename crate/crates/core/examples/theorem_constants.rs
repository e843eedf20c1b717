//! Evaluates the constants of the exponential tail bound for a range of
//! Chebyshev degrees.
//!
//! ```bash
//! cargo run --example theorem_constants
//! ```

use cyclelab::tails::theorem_constants;

fn main() -> cyclelab::Result<()> {
    println!("{:>6} {:>14} {:>8} {:>10}", "D", "C1", "C2", "C3");
    for d in [0.5, 1.0, 2.0, 4.0, 8.0, 100.0] {
        let k = theorem_constants(d)?;
        println!("{d:>6} {:>14.4} {:>8.4} {:>10.6}", k.c1, k.c2, k.c3);
    }
    Ok(())
}
