//! Degree-`d` polynomial perturbations of the linear center
//!
//! ```text
//! x' = -y + F(x, y),   F = sum a_ki x^k y^i
//! y' =  x + G(x, y),   G = sum b_ki x^k y^i,     1 <= k + i <= d
//! ```
//!
//! together with the polar data `P`, `Q` and `H = P / (1 + Q)` that drive the
//! radial equation `dr/dphi = H r`.
//!
//! Coefficients are stored densely in the canonical order `(k + i, k)`: all
//! linear terms first (`(0,1)`, `(1,0)`), then quadratic (`(0,2)`, `(1,1)`,
//! `(2,0)`), and so on. The same order is used for the flat real vector that
//! represents a point of the coefficient ball: the `a` block followed by the
//! `b` block.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported field degree.
pub const MAX_DEGREE: usize = 32;

/// Default lower bound for `|1 + Q|`.
pub const DEFAULT_DENOMINATOR_FLOOR: f64 = 0.5;

/// Number of `(k, i)` pairs with `1 <= k + i <= degree`.
pub fn pair_count(degree: usize) -> usize {
    degree * (degree + 3) / 2
}

/// Real dimension `s = d(d+3)` of the coefficient space.
pub fn real_dimension(degree: usize) -> usize {
    degree * (degree + 3)
}

/// Largest admissible coefficient norm `1 / (40 pi sqrt(d))`.
pub fn regime_norm(degree: usize) -> f64 {
    1.0 / (40.0 * PI * (degree as f64).sqrt())
}

/// The `(k, i)` pairs in canonical order.
pub fn index_pairs(degree: usize) -> impl Iterator<Item = (usize, usize)> {
    (1..=degree).flat_map(|m| (0..=m).map(move |k| (k, m - k)))
}

fn check_degree(degree: usize) -> Result<()> {
    if (1..=MAX_DEGREE).contains(&degree) {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "field degree {degree} outside 1..={MAX_DEGREE}"
        )))
    }
}

fn slot(k: usize, i: usize) -> usize {
    let m = k + i;
    m * (m + 1) / 2 - 1 + k
}

/// The degree-one part `w = (a10, a01, b10, b01)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LinearPart {
    pub a10: Complex64,
    pub a01: Complex64,
    pub b10: Complex64,
    pub b01: Complex64,
}

impl LinearPart {
    pub fn real(a10: f64, a01: f64, b10: f64, b01: f64) -> Self {
        Self {
            a10: a10.into(),
            a01: a01.into(),
            b10: b10.into(),
            b01: b01.into(),
        }
    }

    pub fn norm(&self) -> f64 {
        (self.a10.norm_sqr() + self.a01.norm_sqr() + self.b10.norm_sqr() + self.b01.norm_sqr())
            .sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolyField {
    degree: usize,
    a: Vec<Complex64>,
    b: Vec<Complex64>,
}

impl PolyField {
    /// # Panics
    /// If `degree` is 0 or above [`MAX_DEGREE`].
    pub fn zero(degree: usize) -> Self {
        assert!(
            (1..=MAX_DEGREE).contains(&degree),
            "field degree must lie in 1..={MAX_DEGREE}"
        );
        let n = pair_count(degree);
        Self {
            degree,
            a: vec![Complex64::default(); n],
            b: vec![Complex64::default(); n],
        }
    }

    /// Builds a field from a flat real vector of length `d(d+3)`: the `a`
    /// block then the `b` block, each in canonical order.
    pub fn from_real_coefficients(degree: usize, coeffs: &[f64]) -> Result<Self> {
        check_degree(degree)?;
        let n = pair_count(degree);
        if coeffs.len() != 2 * n {
            return Err(Error::Domain(format!(
                "expected {} real coefficients for degree {degree}, got {}",
                2 * n,
                coeffs.len()
            )));
        }
        Ok(Self {
            degree,
            a: coeffs[..n].iter().map(|&x| x.into()).collect(),
            b: coeffs[n..].iter().map(|&x| x.into()).collect(),
        })
    }

    /// Complex analogue of [`PolyField::from_real_coefficients`] (length `d(d+3)` complex
    /// entries).
    pub fn from_complex_coefficients(degree: usize, coeffs: &[Complex64]) -> Result<Self> {
        check_degree(degree)?;
        let n = pair_count(degree);
        if coeffs.len() != 2 * n {
            return Err(Error::Domain(format!(
                "expected {} complex coefficients for degree {degree}, got {}",
                2 * n,
                coeffs.len()
            )));
        }
        Ok(Self {
            degree,
            a: coeffs[..n].to_vec(),
            b: coeffs[n..].to_vec(),
        })
    }

    /// Field whose only nonzero coefficients are the linear part `w`.
    pub fn linear(degree: usize, w: LinearPart) -> Self {
        let mut field = Self::zero(degree);
        field.set_a(1, 0, w.a10);
        field.set_a(0, 1, w.a01);
        field.set_b(1, 0, w.b10);
        field.set_b(0, 1, w.b01);
        field
    }

    /// `x' = -y + (N/sqrt 2) x`, `y' = x + (N/sqrt 2) y`: a point on the
    /// boundary of the norm ball whose displacement at the origin is
    /// `e^{sqrt(2) pi N} - 1`.
    pub fn v0(degree: usize, norm: f64) -> Self {
        let lambda = norm / 2f64.sqrt();
        Self::linear(degree, LinearPart::real(lambda, 0.0, 0.0, lambda))
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn real_dimension(&self) -> usize {
        real_dimension(self.degree)
    }

    /// # Panics
    /// If `(k, i)` is not a valid monomial for this degree.
    pub fn a(&self, k: usize, i: usize) -> Complex64 {
        self.a[self.checked_slot(k, i)]
    }

    pub fn b(&self, k: usize, i: usize) -> Complex64 {
        self.b[self.checked_slot(k, i)]
    }

    pub fn set_a(&mut self, k: usize, i: usize, value: impl Into<Complex64>) {
        let s = self.checked_slot(k, i);
        self.a[s] = value.into();
    }

    pub fn set_b(&mut self, k: usize, i: usize, value: impl Into<Complex64>) {
        let s = self.checked_slot(k, i);
        self.b[s] = value.into();
    }

    fn checked_slot(&self, k: usize, i: usize) -> usize {
        let m = k + i;
        assert!(
            (1..=self.degree).contains(&m),
            "monomial x^{k} y^{i} out of range for degree {}",
            self.degree
        );
        slot(k, i)
    }

    pub fn coefficients(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.a.iter().chain(self.b.iter()).copied()
    }

    pub fn is_real(&self) -> bool {
        self.coefficients().all(|c| c.im == 0.0)
    }

    pub fn coeff_norm(&self) -> f64 {
        self.coefficients()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Projection onto the degree-one coefficients.
    pub fn linear_part(&self) -> LinearPart {
        LinearPart {
            a10: self.a(1, 0),
            a01: self.a(0, 1),
            b10: self.b(1, 0),
            b01: self.b(0, 1),
        }
    }

    /// Angular coefficients of `P` and `Q` as polynomials in `z`.
    pub fn polar_coefficients(&self, phi: f64) -> PolarCoefficients {
        let d = self.degree;
        let (s, c) = phi.sin_cos();
        let mut cpow = vec![1.0; d + 2];
        let mut spow = vec![1.0; d + 2];
        for j in 1..d + 2 {
            cpow[j] = cpow[j - 1] * c;
            spow[j] = spow[j - 1] * s;
        }
        let mut p = vec![Complex64::default(); d];
        let mut q = vec![Complex64::default(); d];
        for (idx, (k, i)) in index_pairs(d).enumerate() {
            let m = k + i;
            let (a, b) = (self.a[idx], self.b[idx]);
            // x F / r^2 and y G / r^2 contribute z^{m-1} cos^{k+1} sin^i and
            // z^{m-1} cos^k sin^{i+1}
            let ck1_si = cpow[k + 1] * spow[i];
            let ck_si1 = cpow[k] * spow[i + 1];
            p[m - 1] += a * ck1_si + b * ck_si1;
            q[m - 1] += b * ck1_si - a * ck_si1;
        }
        PolarCoefficients { p, q }
    }

    /// `P`, `Q`, `H` at `(z, phi)` with the default denominator floor.
    pub fn eval_polar(&self, z: Complex64, phi: f64) -> Result<PolarEvaluation> {
        self.eval_polar_with_floor(z, phi, DEFAULT_DENOMINATOR_FLOOR)
    }

    pub fn eval_polar_with_floor(
        &self,
        z: Complex64,
        phi: f64,
        floor: f64,
    ) -> Result<PolarEvaluation> {
        let (p, q) = self.polar_values(z, phi);
        finish_polar(p, q, floor)
    }

    /// `(P, Q)` by Horner in `z` without heap allocation.
    fn polar_values(&self, z: Complex64, phi: f64) -> (Complex64, Complex64) {
        let d = self.degree;
        let (s, c) = phi.sin_cos();
        let mut cpow = [1.0; MAX_DEGREE + 2];
        let mut spow = [1.0; MAX_DEGREE + 2];
        for j in 1..d + 2 {
            cpow[j] = cpow[j - 1] * c;
            spow[j] = spow[j - 1] * s;
        }
        let mut p = Complex64::default();
        let mut q = Complex64::default();
        for m in (1..=d).rev() {
            let base = m * (m + 1) / 2 - 1;
            let mut pm = Complex64::default();
            let mut qm = Complex64::default();
            for k in 0..=m {
                let i = m - k;
                let (a, b) = (self.a[base + k], self.b[base + k]);
                let ck1_si = cpow[k + 1] * spow[i];
                let ck_si1 = cpow[k] * spow[i + 1];
                pm += a * ck1_si + b * ck_si1;
                qm += b * ck1_si - a * ck_si1;
            }
            p = p * z + pm;
            q = q * z + qm;
        }
        (p, q)
    }
}

fn finish_polar(p: Complex64, q: Complex64, floor: f64) -> Result<PolarEvaluation> {
    let den = Complex64::new(1.0, 0.0) + q;
    let den_abs = den.norm();
    if !(den_abs >= floor) {
        return Err(Error::DenominatorNearZero {
            value: den_abs,
            floor,
        });
    }
    Ok(PolarEvaluation { p, q, h: p / den })
}

/// `P(z, phi) = sum_m p_m(phi) z^{m-1}` and likewise for `Q`, for a fixed
/// angle.
#[derive(Clone, Debug)]
pub struct PolarCoefficients {
    pub p: Vec<Complex64>,
    pub q: Vec<Complex64>,
}

impl PolarCoefficients {
    pub fn p_at(&self, z: Complex64) -> Complex64 {
        horner(&self.p, z)
    }

    pub fn q_at(&self, z: Complex64) -> Complex64 {
        horner(&self.q, z)
    }

    pub fn evaluate(&self, z: Complex64, floor: f64) -> Result<PolarEvaluation> {
        finish_polar(self.p_at(z), self.q_at(z), floor)
    }
}

fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::default(), |acc, &c| acc * z + c)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarEvaluation {
    pub p: Complex64,
    pub q: Complex64,
    pub h: Complex64,
}

pub fn coeff_norm(field: &PolyField) -> f64 {
    field.coeff_norm()
}

pub fn eval_polar(field: &PolyField, z: Complex64, phi: f64) -> Result<PolarEvaluation> {
    field.eval_polar(z, phi)
}

/// Uniform point in the closed Euclidean ball of the given radius.
///
/// Gaussian direction scaled by `radius * U^(1/dim)`.
pub fn sample_ball<R: Rng + ?Sized>(dim: usize, radius: f64, rng: &mut R) -> Vec<f64> {
    assert!(dim >= 1, "ball dimension must be positive");
    let mut v: Vec<f64>;
    let mut norm;
    loop {
        v = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            break;
        }
    }
    let u: f64 = rng.random();
    let scale = radius * u.powf(1.0 / dim as f64) / norm;
    for x in &mut v {
        *x *= scale;
    }
    // rounding can push the norm a few ulps past the radius
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > radius {
        let shrink = radius / n;
        for x in &mut v {
            *x *= shrink;
        }
    }
    v
}

/// Uniform real field in `E(s, radius)`.
pub fn sample_real_field<R: Rng + ?Sized>(degree: usize, radius: f64, rng: &mut R) -> PolyField {
    let v = sample_ball(real_dimension(degree), radius, rng);
    PolyField::from_real_coefficients(degree, &v).expect("dimension matches degree")
}

/// Uniform complex-coefficient field in the complex ball `B(s, radius)`.
pub fn sample_complex_field<R: Rng + ?Sized>(degree: usize, radius: f64, rng: &mut R) -> PolyField {
    let n = real_dimension(degree);
    let v = sample_ball(2 * n, radius, rng);
    let coeffs: Vec<Complex64> = v.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
    PolyField::from_complex_coefficients(degree, &coeffs).expect("dimension matches degree")
}

/// `delta_N = N sqrt(d) / (1 - N sqrt(d))`, the a-priori bound on `|H|`.
pub fn delta_bound(norm: f64, degree: usize) -> Result<f64> {
    let x = norm * (degree as f64).sqrt();
    if !(x < 1.0) || norm < 0.0 {
        return Err(Error::RegimeViolation(format!(
            "norm * sqrt(d) = {x} must lie in [0, 1)"
        )));
    }
    Ok(x / (1.0 - x))
}

/// Serialized form: `{degree, a: [[k, i, re, im], ...], b: [...]}` in
/// canonical order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FieldRecord {
    pub degree: usize,
    pub a: Vec<(usize, usize, f64, f64)>,
    pub b: Vec<(usize, usize, f64, f64)>,
}

impl From<&PolyField> for FieldRecord {
    fn from(field: &PolyField) -> Self {
        let entries = |coeffs: &[Complex64]| {
            index_pairs(field.degree)
                .zip(coeffs)
                .map(|((k, i), c)| (k, i, c.re, c.im))
                .collect()
        };
        FieldRecord {
            degree: field.degree,
            a: entries(&field.a),
            b: entries(&field.b),
        }
    }
}

impl TryFrom<FieldRecord> for PolyField {
    type Error = Error;

    fn try_from(record: FieldRecord) -> Result<Self> {
        check_degree(record.degree)?;
        let mut field = PolyField::zero(record.degree);
        let n = pair_count(record.degree);
        for (entries, target) in [(&record.a, &mut field.a), (&record.b, &mut field.b)] {
            let mut seen = vec![false; n];
            for &(k, i, re, im) in entries {
                let m = k + i;
                if m == 0 || m > record.degree {
                    return Err(Error::Domain(format!(
                        "monomial ({k},{i}) out of range for degree {}",
                        record.degree
                    )));
                }
                let s = slot(k, i);
                if std::mem::replace(&mut seen[s], true) {
                    return Err(Error::Domain(format!("duplicate monomial ({k},{i})")));
                }
                target[s] = Complex64::new(re, im);
            }
        }
        Ok(field)
    }
}

impl Serialize for PolyField {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        FieldRecord::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PolyField {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let record = FieldRecord::deserialize(deserializer)?;
        PolyField::try_from(record).map_err(serde::de::Error::custom)
    }
}
