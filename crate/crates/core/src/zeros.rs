//! Zero counting for the displacement function.
//!
//! Real limit cycles in `D_{1/2}` are positive zeros of `g_v`, found by a
//! sign scan over `[eps_inner, r_max]` with bisection. Complex zeros in a
//! closed disk are counted by the argument principle on an adaptively
//! refined circle. [`jensen_bound`] gives the a-priori bound on the latter.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{regime_norm, PolyField};
use crate::poincare::{
    displacement, integrate_radial_with, IntegratorSettings, TrajectoryStatus, DEFAULT_TOL,
};

/// Radius of the disk holding the counted real cycles.
pub const CYCLE_RADIUS: f64 = 0.5;
/// Contour radius for the rescaled displacement `z -> g_v(3z/4)`.
pub const CONTOUR_RADIUS: f64 = 2.0 / 3.0;
/// Rescaling factor mapping the closed `2/3` disk onto the closed `1/2` disk.
pub const RESCALE: f64 = 0.75;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ZeroCountResult {
    pub count: usize,
    pub reliable: bool,
    /// Radii of near-tangent minima of `|g|` that the sign scan cannot
    /// resolve.
    pub suspects: Vec<f64>,
    /// Function evaluations on the final contour (complex counter only).
    pub contour_samples: usize,
    /// Located simple crossings (real counter only).
    pub roots: Vec<f64>,
    /// Scan points on the final grid (real counter only).
    pub grid_points: usize,
    /// Scan points whose trajectory left the unit disk; counted as `g > 0`.
    pub escaped: usize,
    /// Accumulated argument in turns (complex counter only).
    pub winding: Option<f64>,
    /// Contour radii tried, in order; the last one produced the count.
    pub radius_trail: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealScanSettings {
    pub r_max: f64,
    pub eps_inner: f64,
    /// Initial number of scan points.
    pub grid: usize,
    /// Largest grid the resolution doubling may reach.
    pub max_grid: usize,
    /// Width at which bisection stops.
    pub root_tol: f64,
    pub integrator_tol: f64,
    /// `|g|` below this at a non-crossing local minimum marks a suspect.
    pub tangency_threshold: f64,
}

impl Default for RealScanSettings {
    fn default() -> Self {
        Self {
            r_max: CYCLE_RADIUS,
            eps_inner: 1e-3,
            grid: 512,
            max_grid: 8192,
            root_tol: 1e-10,
            integrator_tol: DEFAULT_TOL,
            // 8 pi N sqrt(d) = 1/5 at the largest admissible N
            tangency_threshold: 1e-9 * (1.0 + 0.2),
        }
    }
}

impl RealScanSettings {
    /// Defaults with the tangency threshold `1e-9 (1 + 8 pi N sqrt d)`.
    pub fn for_norm(norm: f64, degree: usize) -> Self {
        Self {
            tangency_threshold: 1e-9 * (1.0 + 8.0 * PI * norm * (degree as f64).sqrt()),
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.r_max > 0.0 && self.r_max < 0.75) {
            return Err(Error::Domain(format!(
                "r_max = {} must lie in (0, 3/4)",
                self.r_max
            )));
        }
        if !(self.eps_inner > 0.0 && self.eps_inner < self.r_max) {
            return Err(Error::Domain(format!(
                "eps_inner = {} must lie in (0, r_max)",
                self.eps_inner
            )));
        }
        if self.grid < 64 {
            return Err(Error::Domain(format!(
                "scan grid {} must be at least 64",
                self.grid
            )));
        }
        if !(self.root_tol > 0.0 && self.integrator_tol > 0.0) {
            return Err(Error::Domain("tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum RealG {
    Finite(f64),
    Escaped,
}

impl RealG {
    fn positive(self) -> bool {
        match self {
            RealG::Finite(v) => v >= 0.0,
            RealG::Escaped => true,
        }
    }

    fn magnitude(self) -> f64 {
        match self {
            RealG::Finite(v) => v.abs(),
            RealG::Escaped => f64::INFINITY,
        }
    }
}

fn real_g(field: &PolyField, r: f64, integrator: &IntegratorSettings) -> Result<RealG> {
    let traj = integrate_radial_with(field, Complex64::new(r, 0.0), integrator)?;
    match traj.status {
        TrajectoryStatus::Completed => Ok(RealG::Finite(traj.end.re / r - 1.0)),
        // a positive real orbit cannot cross the invariant origin, so leaving
        // the unit disk means it moved outward
        TrajectoryStatus::LeftDomain => Ok(RealG::Escaped),
        TrajectoryStatus::StepFailure => Err(Error::StepFailure {
            phi: traj.exit_phi.unwrap_or(0.0),
            step: 0.0,
        }),
    }
}

struct ScanSummary {
    crossings: Vec<usize>,
    suspects: Vec<usize>,
}

fn analyze(values: &[RealG], threshold: f64) -> ScanSummary {
    let crossings = (0..values.len() - 1)
        .filter(|&j| values[j].positive() != values[j + 1].positive())
        .collect();
    let suspects = (1..values.len() - 1)
        .filter(|&j| {
            let m = values[j].magnitude();
            m < threshold
                && m <= values[j - 1].magnitude()
                && m <= values[j + 1].magnitude()
                && values[j - 1].positive() == values[j].positive()
                && values[j + 1].positive() == values[j].positive()
        })
        .collect();
    ScanSummary {
        crossings,
        suspects,
    }
}

/// Counts real limit cycles with radius in `[eps_inner, r_max]` as sign
/// changes of the real displacement.
pub fn count_real_cycles(
    field: &PolyField,
    settings: &RealScanSettings,
) -> Result<ZeroCountResult> {
    if !field.is_real() {
        return Err(Error::Domain(
            "real cycle scan needs real coefficients".into(),
        ));
    }
    settings.validate()?;
    let integrator = IntegratorSettings::with_tol(settings.integrator_tol);
    let (lo, hi) = (settings.eps_inner, settings.r_max);
    let radius = |j: usize, n: usize| lo + (hi - lo) * j as f64 / (n - 1) as f64;

    let mut n = settings.grid;
    let mut values = (0..n)
        .map(|j| real_g(field, radius(j, n), &integrator))
        .collect::<Result<Vec<_>>>()?;
    if values
        .iter()
        .all(|v| v.magnitude() < settings.tangency_threshold)
    {
        return Err(Error::UnresolvedOrigin);
    }
    let mut summary = analyze(&values, settings.tangency_threshold);
    let mut converged = false;
    while 2 * n - 1 <= settings.max_grid {
        let n2 = 2 * n - 1;
        let mut refined = Vec::with_capacity(n2);
        for (j, &v) in values.iter().enumerate() {
            refined.push(v);
            if j + 1 < n {
                refined.push(real_g(field, radius(2 * j + 1, n2), &integrator)?);
            }
        }
        let next = analyze(&refined, settings.tangency_threshold);
        let stable = next.crossings.len() == summary.crossings.len()
            && next.suspects.len() == summary.suspects.len();
        values = refined;
        summary = next;
        n = n2;
        if stable {
            converged = true;
            break;
        }
    }

    let mut roots = Vec::with_capacity(summary.crossings.len());
    for &j in &summary.crossings {
        let (mut a, mut b) = (radius(j, n), radius(j + 1, n));
        let sign_a = values[j].positive();
        while b - a > settings.root_tol {
            let mid = 0.5 * (a + b);
            if real_g(field, mid, &integrator)?.positive() == sign_a {
                a = mid;
            } else {
                b = mid;
            }
        }
        roots.push(0.5 * (a + b));
    }
    let suspects: Vec<f64> = summary.suspects.iter().map(|&j| radius(j, n)).collect();
    Ok(ZeroCountResult {
        count: roots.len(),
        reliable: converged && suspects.is_empty(),
        suspects,
        contour_samples: 0,
        roots,
        grid_points: n,
        escaped: values
            .iter()
            .filter(|v| matches!(v, RealG::Escaped))
            .count(),
        winding: None,
        radius_trail: Vec::new(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourSettings {
    pub initial_points: usize,
    /// Radius nudges attempted when a zero sits on or near the contour.
    pub max_refine: usize,
    /// Relative size of one nudge step.
    pub nudge: f64,
    /// A zero closer than this to the contour (Newton estimate) triggers a
    /// nudge.
    pub near_zero_distance: f64,
    /// Cap on contour points per attempt.
    pub max_points: usize,
}

impl Default for ContourSettings {
    fn default() -> Self {
        Self {
            initial_points: 64,
            max_refine: 8,
            nudge: 0.01,
            near_zero_distance: 1e-6,
            max_points: 1 << 16,
        }
    }
}

const MAX_ARG_STEP: f64 = PI / 4.0;
const MIN_ARC: f64 = TAU / (1u64 << 40) as f64;

#[derive(Clone, Copy)]
struct ContourPoint {
    theta: f64,
    z: Complex64,
    f: Complex64,
}

enum Winding {
    Resolved {
        turns: f64,
        points: Vec<ContourPoint>,
    },
    NearZero,
}

fn arg_step(a: Complex64, b: Complex64) -> f64 {
    (b / a).arg()
}

fn total_turns(points: &[ContourPoint]) -> f64 {
    let n = points.len();
    (0..n)
        .map(|j| arg_step(points[j].f, points[(j + 1) % n].f))
        .sum::<f64>()
        / TAU
}

fn contour_point<F>(f: &mut F, r: f64, theta: f64) -> Result<ContourPoint>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let z = Complex64::from_polar(r, theta);
    Ok(ContourPoint { theta, z, f: f(z)? })
}

/// Inserts a midpoint into every arc for which `split` holds. Returns the
/// number of insertions.
fn split_arcs<F, S>(
    f: &mut F,
    r: f64,
    points: &mut Vec<ContourPoint>,
    mut split: S,
) -> Result<usize>
where
    F: FnMut(Complex64) -> Result<Complex64>,
    S: FnMut(&ContourPoint, &ContourPoint, f64) -> bool,
{
    let n = points.len();
    let mut out = Vec::with_capacity(2 * n);
    let mut inserted = 0;
    for j in 0..n {
        let p = points[j];
        let next = points[(j + 1) % n];
        let next_theta = if j + 1 == n {
            next.theta + TAU
        } else {
            next.theta
        };
        out.push(p);
        if split(&p, &next, next_theta - p.theta) {
            out.push(contour_point(f, r, 0.5 * (p.theta + next_theta))?);
            inserted += 1;
        }
    }
    *points = out;
    Ok(inserted)
}

fn wind_once<F>(f: &mut F, r: f64, settings: &ContourSettings) -> Result<Winding>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let n0 = settings.initial_points.max(8);
    let mut points = (0..n0)
        .map(|j| contour_point(f, r, TAU * j as f64 / n0 as f64))
        .collect::<Result<Vec<_>>>()?;
    let bad = |p: &ContourPoint| !(p.f.norm() > 0.0) || !p.f.re.is_finite() || !p.f.im.is_finite();
    loop {
        if points.iter().any(bad) {
            return Ok(Winding::NearZero);
        }
        let inserted = split_arcs(f, r, &mut points, |a, b, arc| {
            arc > MIN_ARC && arg_step(a.f, b.f).abs() >= MAX_ARG_STEP
        })?;
        if inserted == 0 {
            break;
        }
        if points.len() > settings.max_points {
            return Ok(Winding::NearZero);
        }
    }
    if points.iter().any(bad) {
        return Ok(Winding::NearZero);
    }
    let n = points.len();
    // an arc still turning fast at the minimum length straddles a zero
    let unresolved =
        (0..n).any(|j| arg_step(points[j].f, points[(j + 1) % n].f).abs() >= MAX_ARG_STEP);
    // Newton estimate of the distance from each node to the nearest zero
    let nearest = (0..n)
        .map(|j| {
            let (a, b) = (points[j], points[(j + 1) % n]);
            let slope = ((b.f - a.f) / (b.z - a.z)).norm();
            a.f.norm().min(b.f.norm()) / slope
        })
        .fold(f64::INFINITY, f64::min);
    if unresolved || nearest < settings.near_zero_distance {
        return Ok(Winding::NearZero);
    }
    Ok(Winding::Resolved {
        turns: total_turns(&points),
        points,
    })
}

/// Number of zeros (with multiplicity) of `f` in the closed disk of radius
/// `rho`, from the winding number of `f` along `|z| = rho`.
///
/// When a zero lies on or within `near_zero_distance` of the circle, the
/// radius is nudged by `±nudge`, `±2 nudge`, ... (relative). A nudged count
/// refers to the last radius in `radius_trail` and is marked unreliable.
pub fn count_complex_zeros<F>(
    mut f: F,
    rho: f64,
    settings: &ContourSettings,
) -> Result<ZeroCountResult>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Domain(format!(
            "contour radius {rho} must lie in (0, 1)"
        )));
    }
    let mut trail = Vec::new();
    for attempt in 0..=settings.max_refine {
        let step = attempt.div_ceil(2) as f64 * settings.nudge;
        let r = if attempt % 2 == 1 {
            rho * (1.0 + step)
        } else {
            rho * (1.0 - step)
        };
        trail.push(r);
        let (turns, mut points) = match wind_once(&mut f, r, settings)? {
            Winding::Resolved { turns, points } => (turns, points),
            Winding::NearZero => continue,
        };
        let count = turns.round();
        let off = (turns - count).abs();
        if off > 0.1 {
            return Err(Error::NonIntegerWinding { winding: turns });
        }
        // doubling the resolution must not move the count
        split_arcs(&mut f, r, &mut points, |_, _, _| true)?;
        let doubled = total_turns(&points);
        let stable = doubled.round() == count;
        return Ok(ZeroCountResult {
            count: count.max(0.0) as usize,
            reliable: attempt == 0 && stable && off < 1e-3 && count >= 0.0,
            suspects: Vec::new(),
            contour_samples: points.len(),
            roots: Vec::new(),
            grid_points: 0,
            escaped: 0,
            winding: Some(turns),
            radius_trail: trail,
        });
    }
    Err(Error::ZeroOnContour {
        attempts: settings.max_refine + 1,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JensenBound {
    pub m_f: f64,
    pub f0_abs: f64,
    pub r: f64,
    pub bound: f64,
}

/// `log(M_f / |f(0)|) / log(1/r)`, an upper bound for the number of zeros in
/// the closed disk of radius `r` of a function holomorphic on the unit disk
/// with `sup |f| = M_f`.
pub fn jensen_bound(m_f: f64, f0_abs: f64, r: f64) -> Result<JensenBound> {
    if !(f0_abs > 0.0) {
        return Err(Error::Domain("Jensen bound needs f(0) != 0".into()));
    }
    if !(m_f >= f0_abs) {
        return Err(Error::Domain(format!(
            "sup |f| = {m_f} is below |f(0)| = {f0_abs}"
        )));
    }
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Domain(format!("radius {r} must lie in (0, 1)")));
    }
    Ok(JensenBound {
        m_f,
        f0_abs,
        r,
        bound: (m_f / f0_abs).ln() / (1.0 / r).ln(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountSettings {
    pub scan: RealScanSettings,
    pub contour: ContourSettings,
    pub integrator_tol: f64,
}

impl Default for CountSettings {
    fn default() -> Self {
        Self {
            scan: RealScanSettings::default(),
            contour: ContourSettings::default(),
            integrator_tol: DEFAULT_TOL,
        }
    }
}

impl CountSettings {
    pub fn for_norm(norm: f64, degree: usize, integrator_tol: f64) -> Self {
        Self {
            scan: RealScanSettings {
                integrator_tol,
                ..RealScanSettings::for_norm(norm, degree)
            },
            contour: ContourSettings::default(),
            integrator_tol,
        }
    }
}

/// Real cycle count `C(v)` and complex zero count `N_{g,2/3}(v)` of one field.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleCounts {
    pub c: Option<usize>,
    pub n_complex: Option<usize>,
    pub reliable: bool,
    pub suspects: Vec<f64>,
    pub origin_unresolved: bool,
    pub note: Option<String>,
}

/// Computes `C(v)` over `(0, 1/2]` and the winding count of
/// `z -> g_v(3z/4)` on `|z| = 2/3`.
///
/// A displacement that vanishes along the whole scan (`UnresolvedOrigin`)
/// yields `C = 0` with `reliable` cleared and no complex count. A contour
/// failure leaves `n_complex` empty. Integration failures are returned as
/// errors.
pub fn count_cycles_of_sample(field: &PolyField, settings: &CountSettings) -> Result<SampleCounts> {
    let norm = field.coeff_norm();
    if norm > 2.0 * regime_norm(field.degree()) {
        return Err(Error::RegimeViolation(format!(
            "coefficient norm {norm} exceeds 2/(40 pi sqrt(d))"
        )));
    }
    let mut out = SampleCounts {
        reliable: true,
        ..SampleCounts::default()
    };
    match count_real_cycles(field, &settings.scan) {
        Ok(res) => {
            out.c = Some(res.count);
            out.reliable &= res.reliable;
            out.suspects = res.suspects;
        }
        Err(Error::UnresolvedOrigin) => {
            out.c = Some(0);
            out.reliable = false;
            out.origin_unresolved = true;
            out.note = Some("displacement vanishes on the scan segment".into());
            return Ok(out);
        }
        Err(e) => return Err(e),
    }
    let tol = settings.integrator_tol;
    let g = |w: Complex64| displacement(field, w * RESCALE, tol).map(|v| v.g);
    match count_complex_zeros(g, CONTOUR_RADIUS, &settings.contour) {
        Ok(res) => {
            out.n_complex = Some(res.count);
            out.reliable &= res.reliable;
        }
        Err(e @ (Error::ZeroOnContour { .. } | Error::NonIntegerWinding { .. })) => {
            out.reliable = false;
            out.note = Some(e.to_string());
        }
        Err(e) => return Err(e),
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::LinearPart;

    pub(crate) fn known_cycle_field(rho: f64) -> PolyField {
        // F = x (x^2 + y^2 - rho^2), G = y (x^2 + y^2 - rho^2)
        let mut field = PolyField::zero(3);
        field.set_a(1, 0, -rho * rho);
        field.set_a(3, 0, 1.0);
        field.set_a(1, 2, 1.0);
        field.set_b(0, 1, -rho * rho);
        field.set_b(2, 1, 1.0);
        field.set_b(0, 3, 1.0);
        field
    }

    fn poly(coeffs: &[Complex64]) -> impl Fn(Complex64) -> Result<Complex64> + '_ {
        move |z| {
            Ok(coeffs
                .iter()
                .rev()
                .fold(Complex64::default(), |acc, &c| acc * z + c))
        }
    }

    #[test]
    fn zero_field_is_unresolved() {
        let res = count_real_cycles(&PolyField::zero(2), &RealScanSettings::default());
        assert!(matches!(res, Err(Error::UnresolvedOrigin)));
        let counts =
            count_cycles_of_sample(&PolyField::zero(2), &CountSettings::default()).unwrap();
        assert_eq!(counts.c, Some(0));
        assert!(!counts.reliable && counts.origin_unresolved);
        assert_eq!(counts.n_complex, None);
    }

    #[test]
    fn linear_field_has_no_cycles() {
        let field = PolyField::linear(2, LinearPart::real(0.003, 0.0, 0.0, 0.003));
        let res = count_real_cycles(&field, &RealScanSettings::default()).unwrap();
        assert_eq!(res.count, 0);
        assert!(res.reliable);
    }

    #[test]
    fn known_cycle_is_located() {
        let field = known_cycle_field(0.25);
        let res = count_real_cycles(&field, &RealScanSettings::default()).unwrap();
        assert_eq!(res.count, 1);
        assert!((res.roots[0] - 0.25).abs() < 1e-6, "root {}", res.roots[0]);
        assert!(res.escaped > 0);
    }

    #[test]
    fn scan_rejects_bad_settings() {
        let field = PolyField::zero(2);
        let bad = RealScanSettings {
            grid: 10,
            ..RealScanSettings::default()
        };
        assert!(matches!(
            count_real_cycles(&field, &bad),
            Err(Error::Domain(_))
        ));
        let mut complex = PolyField::zero(2);
        complex.set_a(1, 0, Complex64::new(0.0, 0.001));
        assert!(count_real_cycles(&complex, &RealScanSettings::default()).is_err());
    }

    #[test]
    fn quadratic_polynomial_two_zeros() {
        let coeffs = [
            Complex64::new(-1.0 / 16.0, 0.0),
            Complex64::default(),
            Complex64::new(1.0, 0.0),
        ];
        let res = count_complex_zeros(poly(&coeffs), 0.5, &ContourSettings::default()).unwrap();
        assert_eq!(res.count, 2);
        assert!(res.reliable);
        assert!((res.winding.unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn exponential_has_no_zeros() {
        for rho in [0.1, 0.5, 0.9] {
            let res =
                count_complex_zeros(|z: Complex64| Ok(z.exp()), rho, &ContourSettings::default())
                    .unwrap();
            assert_eq!(res.count, 0);
            assert!(res.reliable);
        }
    }

    #[test]
    fn multiplicity_is_counted() {
        let f = |z: Complex64| Ok((z - 0.1).powi(3) * (z + Complex64::new(0.0, 0.2)));
        let res = count_complex_zeros(f, 0.5, &ContourSettings::default()).unwrap();
        assert_eq!(res.count, 4);
    }

    #[test]
    fn zero_on_contour_is_nudged() {
        let f = |z: Complex64| Ok(z - 0.5);
        let res = count_complex_zeros(f, 0.5, &ContourSettings::default()).unwrap();
        assert!(!res.reliable);
        assert_eq!(res.radius_trail.len(), 2);
        // the first nudge goes outward
        assert_eq!(res.count, 1);
    }

    #[test]
    fn identically_zero_fails() {
        let res = count_complex_zeros(
            |_| Ok(Complex64::default()),
            0.5,
            &ContourSettings::default(),
        );
        assert!(matches!(res, Err(Error::ZeroOnContour { attempts: 9 })));
    }

    #[test]
    fn jensen_cases() {
        assert_eq!(jensen_bound(2.0, 2.0, 0.5).unwrap().bound, 0.0);
        let b = jensen_bound(std::f64::consts::E, 1.0, 1.0 / std::f64::consts::E).unwrap();
        assert!((b.bound - 1.0).abs() < 1e-15);
        // (z - 0.1)^3: sup on the unit circle 1.1^3, |f(0)| = 1e-3
        let b = jensen_bound(1.1f64.powi(3), 1e-3, 0.5).unwrap();
        assert!((b.bound - 3.0 * 11f64.ln() / 2f64.ln()).abs() < 1e-12);
        assert!((b.bound - 10.38).abs() < 5e-3);
        assert!(jensen_bound(1.0, 0.0, 0.5).is_err());
        assert!(jensen_bound(0.5, 1.0, 0.5).is_err());
        assert!(jensen_bound(2.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn v0_sample_has_no_zeros() {
        let field = PolyField::v0(2, regime_norm(2));
        let counts = count_cycles_of_sample(&field, &CountSettings::default()).unwrap();
        assert_eq!((counts.c, counts.n_complex), (Some(0), Some(0)));
        assert!(counts.reliable);
    }
}
