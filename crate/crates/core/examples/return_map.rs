//! Integrates the radial equation of the extremal field v0 and compares the
//! return map with its closed form `z e^{sqrt(2) pi N}`.
//!
//! ```bash
//! cargo run --example return_map
//! ```

use cyclelab::field::{regime_norm, PolyField};
use cyclelab::poincare::{displacement, integrate_radial, verify_prop1, DEFAULT_TOL};
use num_complex::Complex64;

fn main() -> cyclelab::Result<()> {
    let norm = regime_norm(2);
    let field = PolyField::v0(2, norm);
    let z0 = Complex64::new(0.5, 0.0);
    let traj = integrate_radial(&field, z0, DEFAULT_TOL)?;
    let exact = z0 * (std::f64::consts::SQRT_2 * std::f64::consts::PI * norm).exp();
    println!(
        "P(0.5) = {:.15}  closed form {:.15}  ({} steps, {} rejected)",
        traj.end.re, exact.re, traj.steps_taken, traj.steps_rejected
    );

    let g0 = displacement(&field, Complex64::default(), DEFAULT_TOL)?;
    println!("g(0) = {:.15e}", g0.g.re);

    let check = verify_prop1(&field, norm, z0, DEFAULT_TOL)?;
    println!(
        "|z(phi) - z0| <= {:.6e}: observed {:.6e}, margin {:.6e}",
        check.bound, check.observed, check.margin
    );
    Ok(())
}
