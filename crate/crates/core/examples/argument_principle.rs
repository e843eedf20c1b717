//! Counts zeros of polynomials in a disk by the winding number of the
//! boundary image and compares with the Jensen bound.
//!
//! ```bash
//! cargo run --example argument_principle
//! ```

use cyclelab::zeros::{count_complex_zeros, jensen_bound, ContourSettings};
use num_complex::Complex64;

fn main() -> cyclelab::Result<()> {
    let roots = [
        Complex64::new(0.2, 0.1),
        Complex64::new(-0.5, 0.3),
        Complex64::new(0.1, -0.6),
        Complex64::new(0.9, 0.0),
    ];
    let p = |z: Complex64| Ok(roots.iter().map(|r| z - r).product::<Complex64>());
    for rho in [0.3, 2.0 / 3.0, 0.95] {
        let res = count_complex_zeros(p, rho, &ContourSettings::default())?;
        let inside = roots.iter().filter(|r| r.norm() <= rho).count();
        println!(
            "rho = {rho:.3}: winding count {} (roots inside {inside}), {} contour samples",
            res.count, res.contour_samples
        );
    }

    // Jensen: zeros in |z| <= r bounded by log(M / |f(0)|) / log(1/r), with
    // M the maximum of |f| on the unit circle
    let m = (0..4096)
        .map(|j| {
            let z = Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / 4096.0);
            p(z).unwrap().norm()
        })
        .fold(0.0, f64::max);
    let f0 = p(Complex64::default()).unwrap().norm();
    for r in [0.3, 0.5, 0.7] {
        let bound = jensen_bound(m, f0, r)?;
        let inside = roots.iter().filter(|z| z.norm() <= r).count();
        println!("r = {r}: {inside} zeros <= Jensen bound {:.3}", bound.bound);
    }
    Ok(())
}
