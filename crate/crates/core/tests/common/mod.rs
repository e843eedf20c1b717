#![allow(dead_code)]

use cyclelab::field::PolyField;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

/// `F = x (r^2 - rho^2)`, `G = y (r^2 - rho^2)`: one cycle at radius `rho`.
pub fn known_cycle_field(rho: f64) -> PolyField {
    let mut field = PolyField::zero(3);
    field.set_a(1, 0, -rho * rho);
    field.set_a(3, 0, 1.0);
    field.set_a(1, 2, 1.0);
    field.set_b(0, 1, -rho * rho);
    field.set_b(2, 1, 1.0);
    field.set_b(0, 3, 1.0);
    field
}

/// Monic coefficients (constant term first) of `prod (z - r)`.
pub fn expand_roots(roots: &[Complex64]) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex64::default(); c.len() + 1];
        for (j, &cj) in c.iter().enumerate() {
            next[j + 1] += cj;
            next[j] -= r * cj;
        }
        c = next;
    }
    c
}

pub fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::default(), |acc, &c| acc * z + c)
}

/// Roots of a monic polynomial as eigenvalues of its companion matrix.
pub fn companion_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    let lead = coeffs[n];
    let m = DMatrix::from_fn(n, n, |r, c| {
        if r == 0 {
            -coeffs[n - 1 - c] / lead
        } else if r == c + 1 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::default()
        }
    });
    m.schur()
        .eigenvalues()
        .expect("triangular Schur form")
        .iter()
        .copied()
        .collect()
}

pub fn uniform_disk<R: Rng>(radius: f64, rng: &mut R) -> Complex64 {
    let r = radius * rng.random::<f64>().sqrt();
    Complex64::from_polar(r, std::f64::consts::TAU * rng.random::<f64>())
}

/// Maximum of `|f|` over a fine grid of the circle `|z| = r`.
pub fn circle_max<F: Fn(Complex64) -> Complex64>(f: F, r: f64, points: usize) -> f64 {
    (0..points)
        .map(|j| {
            f(Complex64::from_polar(
                r,
                std::f64::consts::TAU * j as f64 / points as f64,
            ))
            .norm()
        })
        .fold(0.0, f64::max)
}
