//! Subcommands of the `cyclelab` binary. Each writes `manifest.json` with its
//! resolved configuration before computing, then its outputs.

use std::f64::consts::{PI, TAU};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{regime_norm, sample_ball, sample_complex_field, LinearPart, PolyField};
use crate::poincare::{
    displacement, integrate_radial, linear_f, verify_prop1, TrajectoryStatus, START_RADIUS,
};
use crate::remez::{chebyshev_t, estimate_cheb_degree, random_family, IntervalSubset};
use crate::tails::{
    run_experiment, theorem_constants, write_outputs, ExperimentConfig, RunManifest, TailReport,
    TheoremConstants,
};
use crate::zeros::{count_cycles_of_sample, CountSettings, SampleCounts};

/// Configuration echo and provenance of one invocation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CommandManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub wall_time_secs: Option<f64>,
}

impl CommandManifest {
    fn start<T: Serialize>(command: &str, config: &T, out_dir: &Path) -> Result<Self> {
        let manifest = Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: serde_json::to_value(config)?,
            wall_time_secs: None,
        };
        manifest.write(out_dir)?;
        Ok(manifest)
    }

    fn finish(mut self, started: Instant, out_dir: &Path) -> Result<()> {
        self.wall_time_secs = Some(started.elapsed().as_secs_f64());
        self.write(out_dir)
    }

    fn write(&self, out_dir: &Path) -> Result<()> {
        fs::create_dir_all(out_dir)?;
        write_json(&out_dir.join("manifest.json"), self)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

/// Reads a field record from a JSON file.
pub fn read_field(path: &Path) -> Result<PolyField> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

/// Reads one field record per line.
pub fn read_fields_jsonl(path: &Path) -> Result<Vec<PolyField>> {
    let mut fields = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            fields.push(serde_json::from_str(&line)?);
        }
    }
    Ok(fields)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleArgs {
    pub samples: u64,
    pub degree: usize,
    pub norm: Option<f64>,
    pub seed: u64,
    pub norm_check: bool,
    pub override_regime: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleSummary {
    pub samples: u64,
    pub norm: f64,
    pub max_norm: f64,
    /// Maximum norm recomputed from the re-read file.
    pub recheck_max_norm: Option<f64>,
    pub path: PathBuf,
}

/// Writes `fields.jsonl`: sample `i` is the field the tail experiment with
/// the same degree, norm and seed draws as its sample `i`.
pub fn cmd_sample(args: &SampleArgs, out_dir: &Path) -> Result<SampleSummary> {
    let config = ExperimentConfig {
        degree: args.degree,
        norm: args.norm,
        samples: args.samples,
        seed: args.seed,
        override_regime: args.override_regime,
        ..ExperimentConfig::default()
    };
    config.validate()?;
    let started = Instant::now();
    let manifest = CommandManifest::start("sample", args, out_dir)?;
    let path = out_dir.join("fields.jsonl");
    let mut out = BufWriter::new(File::create(&path)?);
    let mut max_norm: f64 = 0.0;
    for i in 0..args.samples {
        let (_, field) = config.sample_field(i);
        max_norm = max_norm.max(field.coeff_norm());
        serde_json::to_writer(&mut out, &field)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    drop(out);
    let recheck_max_norm = if args.norm_check {
        let fields = read_fields_jsonl(&path)?;
        Some(fields.iter().map(|f| f.coeff_norm()).fold(0.0, f64::max))
    } else {
        None
    };
    manifest.finish(started, out_dir)?;
    Ok(SampleSummary {
        samples: args.samples,
        norm: config.resolved_norm(),
        max_norm,
        recheck_max_norm,
        path,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PoincareReport {
    pub field: PolyField,
    pub z0: Complex64,
    pub end: Complex64,
    pub g: Complex64,
    pub status: TrajectoryStatus,
    pub steps_taken: usize,
    pub steps_rejected: usize,
    pub est_error: f64,
}

/// Integrates one trajectory, writing `trajectory.csv` and `poincare.json`.
pub fn cmd_poincare(
    field: &PolyField,
    z0: Complex64,
    tol: f64,
    out_dir: &Path,
) -> Result<PoincareReport> {
    #[derive(Serialize)]
    struct Config<'a> {
        field: &'a PolyField,
        z0: Complex64,
        tol: f64,
    }
    let started = Instant::now();
    let manifest = CommandManifest::start("poincare", &Config { field, z0, tol }, out_dir)?;
    let traj = integrate_radial(field, z0, tol)?;
    traj.write_csv(BufWriter::new(File::create(
        out_dir.join("trajectory.csv"),
    )?))?;
    let report = PoincareReport {
        field: field.clone(),
        z0,
        end: traj.end,
        g: if z0.norm() > 0.0 {
            traj.end / z0 - 1.0
        } else {
            Complex64::default()
        },
        status: traj.status,
        steps_taken: traj.steps_taken,
        steps_rejected: traj.steps_rejected,
        est_error: traj.est_error,
    };
    write_json(&out_dir.join("poincare.json"), &report)?;
    manifest.finish(started, out_dir)?;
    Ok(report)
}

/// Counts real cycles and complex zeros of one field, writing `count.json`.
pub fn cmd_count(
    field: &PolyField,
    settings: &CountSettings,
    out_dir: &Path,
) -> Result<SampleCounts> {
    #[derive(Serialize)]
    struct Config<'a> {
        field: &'a PolyField,
        settings: &'a CountSettings,
    }
    let started = Instant::now();
    let manifest = CommandManifest::start("count", &Config { field, settings }, out_dir)?;
    let counts = count_cycles_of_sample(field, settings)?;
    write_json(&out_dir.join("count.json"), &counts)?;
    manifest.finish(started, out_dir)?;
    Ok(counts)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyArgs {
    pub degree: usize,
    pub norm: Option<f64>,
    pub trials: u64,
    /// Starts per field for the trajectory bound.
    pub starts: usize,
    /// Points per field for the displacement bound.
    pub points: usize,
    pub seed: u64,
    pub tol: f64,
}

impl VerifyArgs {
    pub fn new(degree: usize, trials: u64, seed: u64) -> Self {
        Self {
            degree,
            norm: None,
            trials,
            starts: 5,
            points: 20,
            seed,
            tol: crate::poincare::DEFAULT_TOL,
        }
    }
}

/// Largest `|z|` of the displacement bound's sample points.
pub const G_POINT_RADIUS: f64 = 0.74;
/// Absolute slack of the displacement bound on top of the integration error.
pub const G_ALLOWANCE: f64 = 1e-8;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundFailure {
    pub trial: u64,
    pub field: PolyField,
    pub z: Complex64,
    pub kind: String,
    pub margin: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundReport {
    pub degree: usize,
    pub norm: f64,
    pub trials: u64,
    pub prop1_checks: u64,
    pub prop1_passed: u64,
    pub g_checks: u64,
    pub g_passed: u64,
    /// Smallest `8 pi N sqrt(d) |z0| - |z(phi) - z0|` seen.
    pub worst_prop1_margin: f64,
    /// Smallest `8 pi N sqrt(d) - |g_v(z)|` seen.
    pub worst_g_margin: f64,
    pub g_bound: f64,
    pub failures: Vec<BoundFailure>,
}

impl BoundReport {
    pub fn all_passed(&self) -> bool {
        self.prop1_passed == self.prop1_checks && self.g_passed == self.g_checks
    }
}

fn uniform_disk(radius: f64, rng: &mut ChaCha8Rng) -> Complex64 {
    let r = radius * rng.random::<f64>().sqrt();
    Complex64::from_polar(r, TAU * rng.random::<f64>())
}

/// Checks the trajectory and displacement bounds on fields drawn uniformly
/// from the complex coefficient ball `B(s, 2N)`.
pub fn verify_bounds(args: &VerifyArgs) -> Result<BoundReport> {
    let d = args.degree;
    let norm = args.norm.unwrap_or_else(|| regime_norm(d));
    let g_bound = 8.0 * PI * norm * (d as f64).sqrt();
    let mut report = BoundReport {
        degree: d,
        norm,
        trials: args.trials,
        prop1_checks: 0,
        prop1_passed: 0,
        g_checks: 0,
        g_passed: 0,
        worst_prop1_margin: f64::INFINITY,
        worst_g_margin: f64::INFINITY,
        g_bound,
        failures: Vec::new(),
    };
    for trial in 0..args.trials {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed ^ trial);
        let field = sample_complex_field(d, 2.0 * norm, &mut rng);
        for _ in 0..args.starts {
            let z0 = uniform_disk(START_RADIUS, &mut rng);
            let check = verify_prop1(&field, norm, z0, args.tol)?;
            report.prop1_checks += 1;
            report.worst_prop1_margin = report.worst_prop1_margin.min(check.margin);
            if check.bound_holds {
                report.prop1_passed += 1;
            } else {
                report.failures.push(BoundFailure {
                    trial,
                    field: field.clone(),
                    z: z0,
                    kind: "trajectory".into(),
                    margin: check.margin,
                });
            }
        }
        for _ in 0..args.points {
            let z = uniform_disk(G_POINT_RADIUS, &mut rng);
            let value = displacement(&field, z, args.tol)?;
            let allowance = G_ALLOWANCE
                + if z.norm() > 0.0 {
                    args.tol / z.norm()
                } else {
                    0.0
                };
            let margin = g_bound - value.g.norm();
            report.g_checks += 1;
            report.worst_g_margin = report.worst_g_margin.min(margin);
            if margin >= -allowance {
                report.g_passed += 1;
            } else {
                report.failures.push(BoundFailure {
                    trial,
                    field: field.clone(),
                    z,
                    kind: "displacement".into(),
                    margin,
                });
            }
        }
    }
    Ok(report)
}

/// Runs [`verify_bounds`], writing `bounds.json` and, if any check failed,
/// `failures.jsonl` with the offending fields.
pub fn cmd_verify_bounds(args: &VerifyArgs, out_dir: &Path) -> Result<BoundReport> {
    let started = Instant::now();
    let manifest = CommandManifest::start("verify-bounds", args, out_dir)?;
    let report = verify_bounds(args)?;
    write_json(&out_dir.join("bounds.json"), &report)?;
    if !report.failures.is_empty() {
        let mut out = BufWriter::new(File::create(out_dir.join("failures.jsonl"))?);
        for f in &report.failures {
            serde_json::to_writer(&mut out, f)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
    }
    manifest.finish(started, out_dir)?;
    Ok(report)
}

/// Function whose Chebyshev degree `cmd_remez` estimates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum RemezTarget {
    /// `g_0 = e^{f(w)} - 1` along a random chord of the real ball `E(4, N)`.
    DisplacementLine,
    /// The Chebyshev polynomial `T_n` on `[-1, 1]`.
    Chebyshev(usize),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RemezArgs {
    pub target: RemezTarget,
    pub degree: usize,
    pub norm: Option<f64>,
    pub trials: usize,
    pub seed: u64,
}

/// A chord `{point + t direction : t in [t0, t1]}` of a ball.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Chord {
    pub point: [f64; 4],
    pub direction: [f64; 4],
    pub interval: (f64, f64),
}

impl Chord {
    pub fn at(&self, t: f64) -> LinearPart {
        let w: Vec<f64> = (0..4)
            .map(|j| self.point[j] + t * self.direction[j])
            .collect();
        LinearPart::real(w[0], w[1], w[2], w[3])
    }
}

/// Random chord of `E(4, norm)` through a uniform point of the ball.
pub fn random_chord(norm: f64, rng: &mut ChaCha8Rng) -> Chord {
    let p = sample_ball(4, norm, rng);
    let u = sample_ball(4, 1.0, rng);
    let len = u
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    let u: Vec<f64> = u.iter().map(|x| x / len).collect();
    // |p + t u| = norm
    let pu: f64 = p.iter().zip(&u).map(|(a, b)| a * b).sum();
    let pp: f64 = p.iter().map(|x| x * x).sum();
    let disc = (pu * pu - pp + norm * norm).max(0.0).sqrt();
    Chord {
        point: [p[0], p[1], p[2], p[3]],
        direction: [u[0], u[1], u[2], u[3]],
        interval: (-pu - disc, -pu + disc),
    }
}

/// `g_0(w) = e^{f(w)} - 1` of a real linear part.
pub fn linear_displacement(w: &LinearPart) -> Result<f64> {
    Ok(linear_f(w, 1e-13)?.re.exp_m1())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RemezReport {
    pub d_hat: f64,
    pub trials: usize,
    pub worst_pair: IntervalSubset,
    pub f_descriptor: String,
    pub chord: Option<Chord>,
}

pub fn estimate_remez(args: &RemezArgs) -> Result<RemezReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    match args.target {
        RemezTarget::Chebyshev(n) => {
            let family = random_family((-1.0, 1.0), args.trials, &mut rng);
            let est = estimate_cheb_degree(|x| chebyshev_t(n, x), &family)?;
            Ok(RemezReport {
                d_hat: est.d_hat,
                trials: est.trials,
                worst_pair: est.worst_pair,
                f_descriptor: format!("T_{n} on [-1, 1]"),
                chord: None,
            })
        }
        RemezTarget::DisplacementLine => {
            let norm = args.norm.unwrap_or_else(|| regime_norm(args.degree));
            let chord = random_chord(norm, &mut rng);
            let family = random_family(chord.interval, args.trials, &mut rng);
            let f = |t: f64| linear_displacement(&chord.at(t)).unwrap_or(f64::NAN);
            let est = estimate_cheb_degree(f, &family)?;
            if !est.d_hat.is_finite() {
                return Err(Error::Domain("displacement failed along the chord".into()));
            }
            Ok(RemezReport {
                d_hat: est.d_hat,
                trials: est.trials,
                worst_pair: est.worst_pair,
                f_descriptor: format!("g_0 along a random chord of E(4, {norm})"),
                chord: Some(chord),
            })
        }
    }
}

/// Runs [`estimate_remez`], writing `remez.json`.
pub fn cmd_remez(args: &RemezArgs, out_dir: &Path) -> Result<RemezReport> {
    let started = Instant::now();
    let manifest = CommandManifest::start("remez", args, out_dir)?;
    let report = estimate_remez(args)?;
    write_json(&out_dir.join("remez.json"), &report)?;
    manifest.finish(started, out_dir)?;
    Ok(report)
}

/// Runs the tail experiment and writes all of its outputs.
pub fn cmd_tails(config: &ExperimentConfig, out_dir: &Path) -> Result<TailReport> {
    config.validate()?;
    fs::create_dir_all(out_dir)?;
    write_json(&out_dir.join("manifest.json"), &RunManifest::new(config))?;
    let output = run_experiment(config)?;
    write_outputs(out_dir, &output)?;
    Ok(output.report)
}

/// Evaluates the tail-bound constants, writing `constants.json`.
pub fn cmd_constants(d_hat: f64, out_dir: &Path) -> Result<TheoremConstants> {
    #[derive(Serialize)]
    struct Config {
        d_hat: f64,
    }
    let started = Instant::now();
    let manifest = CommandManifest::start("constants", &Config { d_hat }, out_dir)?;
    let k = theorem_constants(d_hat)?;
    write_json(&out_dir.join("constants.json"), &k)?;
    manifest.finish(started, out_dir)?;
    Ok(k)
}

/// Reads a slice description from TOML (`.toml`) or JSON.
pub fn read_slice(path: &Path) -> Result<crate::tails::SliceSpec> {
    let text = fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e == "toml") {
        Ok(toml::from_str(&text)?)
    } else {
        Ok(serde_json::from_str(&text)?)
    }
}
