//! Return map of the complexified radial equation `dz/dphi = H(z, phi) z`.
//!
//! The integrator is the Dormand-Prince 5(4) pair with FSAL, local
//! extrapolation and error-per-unit-step control: a step of length `h` is
//! accepted when its embedded error estimate is below
//! `tol * (1 + |z0|) * h / 2pi`, so the accumulated estimate over a full
//! turn never exceeds `tol * (1 + |z0|)`.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{delta_bound, regime_norm, LinearPart, PolyField, DEFAULT_DENOMINATOR_FLOOR};

/// Default relative tolerance of the radial integrator.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Starting points must lie in this open disk.
pub const START_RADIUS: f64 = 0.75;

/// Number of uniform checkpoints used by [`verify_prop1`] on top of the
/// accepted steps.
pub const PROP1_CHECKPOINTS: usize = 64;

const ESCAPE_RADIUS: f64 = 1.0;
const MIN_STEP: f64 = 1e-12;
// keeps the Hermite dense output accurate on slowly varying solutions
const MAX_STEP: f64 = TAU / 32.0;
const MAX_STEPS: usize = 1_000_000;
const LINEAR_DENOMINATOR_FLOOR: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrajectoryStatus {
    Completed,
    LeftDomain,
    StepFailure,
}

/// One accepted integration node. `dz` is the right-hand side at the node
/// and feeds the cubic Hermite interpolant between nodes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryPoint {
    pub phi: f64,
    pub z: Complex64,
    pub dz: Complex64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub start: Complex64,
    pub end: Complex64,
    pub samples: Vec<TrajectoryPoint>,
    pub steps_taken: usize,
    pub steps_rejected: usize,
    pub est_error: f64,
    pub status: TrajectoryStatus,
    /// Angle at which integration stopped early, if it did.
    pub exit_phi: Option<f64>,
}

impl Trajectory {
    /// Dense output by cubic Hermite interpolation between accepted nodes.
    /// `None` outside the integrated range.
    pub fn interpolate(&self, phi: f64) -> Option<Complex64> {
        let first = self.samples.first()?;
        let last = self.samples.last()?;
        if phi < first.phi || phi > last.phi {
            return None;
        }
        let j = self.samples.partition_point(|p| p.phi <= phi);
        if j == 0 {
            return Some(first.z);
        }
        if j == self.samples.len() {
            return Some(last.z);
        }
        let (p0, p1) = (&self.samples[j - 1], &self.samples[j]);
        let h = p1.phi - p0.phi;
        let t = (phi - p0.phi) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        Some(p0.z * h00 + p0.dz * (h10 * h) + p1.z * h01 + p1.dz * (h11 * h))
    }

    /// Writes `phi,re_z,im_z` rows for every accepted node.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "phi,re_z,im_z")?;
        for p in &self.samples {
            writeln!(out, "{},{},{}", p.phi, p.z.re, p.z.im)?;
        }
        Ok(())
    }
}

/// Dormand-Prince tableau.
mod dopri {
    pub const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    pub const A21: f64 = 1.0 / 5.0;
    pub const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
    pub const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
    pub const A5: [f64; 4] = [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
    ];
    pub const A6: [f64; 5] = [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
    ];
    // fifth-order weights; also the last stage row (FSAL)
    pub const B: [f64; 6] = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ];
    // fifth minus fourth order weights
    pub const E: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
}

struct Radial<'a> {
    field: &'a PolyField,
    floor: f64,
}

impl Radial<'_> {
    fn rhs(&self, phi: f64, z: Complex64) -> Result<Complex64> {
        Ok(self.field.eval_polar_with_floor(z, phi, self.floor)?.h * z)
    }
}

/// Settings for [`integrate_radial_with`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSettings {
    pub tol: f64,
    pub denominator_floor: f64,
    /// Integration halts once `|z|` reaches this radius.
    pub escape_radius: f64,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            denominator_floor: DEFAULT_DENOMINATOR_FLOOR,
            escape_radius: ESCAPE_RADIUS,
        }
    }
}

impl IntegratorSettings {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

/// Integrates `dz/dphi = H(z, phi) z` over `[0, 2pi]` from `z0`.
pub fn integrate_radial(field: &PolyField, z0: Complex64, tol: f64) -> Result<Trajectory> {
    integrate_radial_with(field, z0, &IntegratorSettings::with_tol(tol))
}

pub fn integrate_radial_with(
    field: &PolyField,
    z0: Complex64,
    settings: &IntegratorSettings,
) -> Result<Trajectory> {
    let tol = settings.tol;
    if !(tol > 0.0) {
        return Err(Error::Domain(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if !(z0.norm() < START_RADIUS) {
        return Err(Error::Domain(format!(
            "start point |z0| = {} must be below {START_RADIUS}",
            z0.norm()
        )));
    }
    let sys = Radial {
        field,
        floor: settings.denominator_floor,
    };
    let budget = tol * (1.0 + z0.norm()) / TAU;

    let mut phi = 0.0;
    let mut z = z0;
    let mut k1 = sys.rhs(phi, z)?;
    let mut samples = vec![TrajectoryPoint { phi, z, dz: k1 }];
    let mut h: f64 = 0.1;
    let mut est_error = 0.0;
    let mut accepted = 0;
    let mut rejected = 0;
    let mut status = TrajectoryStatus::Completed;
    let mut exit_phi = None;

    while phi < TAU {
        if accepted + rejected >= MAX_STEPS || h < MIN_STEP {
            status = TrajectoryStatus::StepFailure;
            exit_phi = Some(phi);
            break;
        }
        let last = phi + h >= TAU;
        if last {
            h = TAU - phi;
        }
        let step = dopri_step(&sys, phi, z, k1, h);
        let (z_new, k7, err) = match step {
            Ok(v) => v,
            // a stage left the admissible region: shrink and retry
            Err(Error::DenominatorNearZero { .. }) if h > MIN_STEP => {
                rejected += 1;
                h *= 0.25;
                continue;
            }
            Err(e) => return Err(e),
        };
        let allowed = budget * h;
        let ratio = err / allowed;
        if ratio <= 1.0 {
            phi = if last { TAU } else { phi + h };
            z = z_new;
            k1 = k7;
            est_error += err;
            accepted += 1;
            samples.push(TrajectoryPoint { phi, z, dz: k1 });
            if z.norm() >= settings.escape_radius && phi < TAU {
                status = TrajectoryStatus::LeftDomain;
                exit_phi = Some(phi);
                break;
            }
        } else {
            rejected += 1;
        }
        // error ~ h^5 against an allowance ~ h
        let factor = if ratio.is_nan() {
            0.2
        } else if ratio == 0.0 {
            5.0
        } else {
            (0.9 * ratio.powf(-0.25)).clamp(0.2, 5.0)
        };
        h = (h * if ratio <= 1.0 {
            factor
        } else {
            factor.min(1.0)
        })
        .min(MAX_STEP);
    }
    if status == TrajectoryStatus::Completed && z.norm() >= settings.escape_radius {
        status = TrajectoryStatus::LeftDomain;
        exit_phi = Some(TAU);
    }

    Ok(Trajectory {
        start: z0,
        end: z,
        samples,
        steps_taken: accepted,
        steps_rejected: rejected,
        est_error,
        status,
        exit_phi,
    })
}

fn dopri_step(
    sys: &Radial<'_>,
    phi: f64,
    z: Complex64,
    k1: Complex64,
    h: f64,
) -> Result<(Complex64, Complex64, f64)> {
    use dopri::*;
    let k2 = sys.rhs(phi + C[1] * h, z + k1 * (h * A21))?;
    let k3 = sys.rhs(phi + C[2] * h, z + (k1 * A3[0] + k2 * A3[1]) * h)?;
    let k4 = sys.rhs(
        phi + C[3] * h,
        z + (k1 * A4[0] + k2 * A4[1] + k3 * A4[2]) * h,
    )?;
    let k5 = sys.rhs(
        phi + C[4] * h,
        z + (k1 * A5[0] + k2 * A5[1] + k3 * A5[2] + k4 * A5[3]) * h,
    )?;
    let k6 = sys.rhs(
        phi + C[5] * h,
        z + (k1 * A6[0] + k2 * A6[1] + k3 * A6[2] + k4 * A6[3] + k5 * A6[4]) * h,
    )?;
    let z_new = z + (k1 * B[0] + k3 * B[2] + k4 * B[3] + k5 * B[4] + k6 * B[5]) * h;
    let k7 = sys.rhs(phi + h, z_new)?;
    let err_vec = (k1 * E[0] + k3 * E[2] + k4 * E[3] + k5 * E[4] + k6 * E[5] + k7 * E[6]) * h;
    Ok((z_new, k7, err_vec.norm()))
}

fn completed_end(traj: &Trajectory) -> Result<Complex64> {
    match traj.status {
        TrajectoryStatus::Completed => Ok(traj.end),
        TrajectoryStatus::LeftDomain => Err(Error::LeftDomain {
            phi: traj.exit_phi.unwrap_or(TAU),
        }),
        TrajectoryStatus::StepFailure => {
            let phi = traj.exit_phi.unwrap_or(0.0);
            let step = traj
                .samples
                .windows(2)
                .last()
                .map_or(0.0, |w| w[1].phi - w[0].phi);
            Err(Error::StepFailure { phi, step })
        }
    }
}

/// `P_v(z0)`, the value of the radial solution after one full turn.
pub fn poincare_map(field: &PolyField, z0: Complex64, tol: f64) -> Result<Complex64> {
    completed_end(&integrate_radial(field, z0, tol)?)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DisplacementValue {
    pub z: Complex64,
    pub g: Complex64,
    /// Set when `z = 0` and `g` is the continuation `e^{f(w)} - 1`.
    pub at_origin: bool,
}

/// `g_v(z) = P_v(z) / z - 1`, continued to `z = 0` through the linear part.
pub fn displacement(field: &PolyField, z: Complex64, tol: f64) -> Result<DisplacementValue> {
    if !(z.norm() < START_RADIUS) {
        return Err(Error::Domain(format!(
            "displacement needs |z| < {START_RADIUS}, got {}",
            z.norm()
        )));
    }
    if z == Complex64::default() {
        let f = linear_f(&field.linear_part(), tol.min(1e-12))?;
        return Ok(DisplacementValue {
            z,
            g: f.exp() - 1.0,
            at_origin: true,
        });
    }
    let end = poincare_map(field, z, tol)?;
    Ok(DisplacementValue {
        z,
        g: end / z - 1.0,
        at_origin: false,
    })
}

fn linear_integrand(w: &LinearPart, phi: f64) -> (Complex64, Complex64) {
    let (s, c) = phi.sin_cos();
    let (cc, ss, sc) = (c * c, s * s, s * c);
    let num = w.a10 * cc + w.b01 * ss + (w.a01 + w.b10) * sc;
    let den = Complex64::new(1.0, 0.0) + w.b10 * cc - w.a01 * ss + (w.b01 - w.a10) * sc;
    (num, den)
}

/// Exponent `f(w)` of the linear-center return map `P(z) = e^{f(w)} z`,
/// by the periodic trapezoid rule with grid doubling until two successive
/// values agree to `tol` (relative to `max(1, |f|)`).
pub fn linear_f(w: &LinearPart, tol: f64) -> Result<Complex64> {
    const DENOMINATOR_GRID: usize = 4096;
    const MAX_NODES: usize = 1 << 22;

    // denominator = alpha + beta cos 2phi + gamma sin 2phi; the triangle
    // inequality certifies the floor without scanning when it can
    let alpha = 1.0 + (w.b10 - w.a01) * 0.5;
    let beta = (w.b10 + w.a01) * 0.5;
    let gamma = (w.b01 - w.a10) * 0.5;
    let lower = alpha.norm() - beta.norm() - gamma.norm();
    let min_den = if lower >= LINEAR_DENOMINATOR_FLOOR {
        lower
    } else {
        (0..DENOMINATOR_GRID)
            .map(|j| {
                linear_integrand(w, TAU * j as f64 / DENOMINATOR_GRID as f64)
                    .1
                    .norm()
            })
            .fold(f64::INFINITY, f64::min)
    };
    if !(min_den >= LINEAR_DENOMINATOR_FLOOR) {
        return Err(Error::DenominatorNearZero {
            value: min_den,
            floor: LINEAR_DENOMINATOR_FLOOR,
        });
    }
    let integrand = |phi: f64| {
        let (num, den) = linear_integrand(w, phi);
        num / den
    };

    let mut n = 8;
    let mut sum: Complex64 = (0..n).map(|j| integrand(TAU * j as f64 / n as f64)).sum();
    let mut value = sum * (TAU / n as f64);
    loop {
        // midpoints of the current grid
        let mid: Complex64 = (0..n)
            .map(|j| integrand(TAU * (j as f64 + 0.5) / n as f64))
            .sum();
        sum += mid;
        n *= 2;
        let refined = sum * (TAU / n as f64);
        let converged = (refined - value).norm() <= tol * refined.norm().max(1.0);
        value = refined;
        if converged && n >= 32 {
            return Ok(value);
        }
        if n >= MAX_NODES {
            return Err(Error::Domain(format!(
                "trapezoid rule did not reach tolerance {tol} with {n} nodes"
            )));
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prop1Check {
    pub bound_holds: bool,
    /// `bound - observed`.
    pub margin: f64,
    pub bound: f64,
    pub observed: f64,
    /// Integration error allowance added to the bound.
    pub allowance: f64,
    /// `max |z(phi)| / |z(0)|`, to compare against `e^{2 pi delta_2N}`.
    pub max_modulus_ratio: f64,
    pub modulus_bound: f64,
}

/// Absolute slack granted to the a-priori bound for integration error.
pub const PROP1_ALLOWANCE: f64 = 1e-8;

/// Checks `max_phi |z(phi) - z(0)| <= 8 pi N sqrt(d) |z(0)|` for a field
/// with `coeff_norm <= 2N` and `N <= 1/(40 pi sqrt(d))`.
pub fn verify_prop1(field: &PolyField, norm: f64, z0: Complex64, tol: f64) -> Result<Prop1Check> {
    let d = field.degree();
    let sqrt_d = (d as f64).sqrt();
    if !(norm >= 0.0) || norm > regime_norm(d) * (1.0 + 1e-12) {
        return Err(Error::RegimeViolation(format!(
            "N = {norm} exceeds 1/(40 pi sqrt(d)) = {}",
            regime_norm(d)
        )));
    }
    if field.coeff_norm() > 2.0 * norm * (1.0 + 1e-12) {
        return Err(Error::RegimeViolation(format!(
            "coefficient norm {} exceeds 2N = {}",
            field.coeff_norm(),
            2.0 * norm
        )));
    }
    let traj = integrate_radial(field, z0, tol)?;
    completed_end(&traj)?;

    let checkpoints = (0..=PROP1_CHECKPOINTS)
        .filter_map(|j| traj.interpolate(TAU * j as f64 / PROP1_CHECKPOINTS as f64));
    let values: Vec<Complex64> = traj
        .samples
        .iter()
        .map(|p| p.z)
        .chain(checkpoints)
        .collect();
    let observed = values.iter().map(|z| (z - z0).norm()).fold(0.0, f64::max);
    let max_modulus = values.iter().map(|z| z.norm()).fold(0.0, f64::max);

    let bound = 8.0 * PI * norm * sqrt_d * z0.norm();
    let allowance = PROP1_ALLOWANCE + traj.est_error;
    let modulus_bound = (TAU * delta_bound(2.0 * norm, d)?).exp();
    Ok(Prop1Check {
        bound_holds: observed <= bound + allowance,
        margin: bound - observed,
        bound,
        observed,
        allowance,
        max_modulus_ratio: if z0.norm() > 0.0 {
            max_modulus / z0.norm()
        } else {
            1.0
        },
        modulus_bound,
    })
}
