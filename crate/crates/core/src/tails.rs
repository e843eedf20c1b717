//! Monte Carlo over the coefficient ball: distribution of the cycle count
//! `C(v)` and of the complex zero count `N_{g,2/3}(v)`, their empirical
//! tails, and the constants of the exponential tail bound.
//!
//! Sample `i` is drawn from a ChaCha8 stream seeded with `seed ^ i`, so a run
//! is a pure function of `(config, i)` per sample. Workers own contiguous
//! index ranges and results are concatenated in index order, which makes the
//! per-sample records identical for any worker count.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::ops::Range;
use std::path::Path;
use std::time::Instant;

use nalgebra::{DMatrix, Matrix4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::error::{Error, Result};
use crate::field::{real_dimension, regime_norm, sample_ball, PolyField, MAX_DEGREE};
use crate::poincare::DEFAULT_TOL;
use crate::zeros::{
    count_cycles_of_sample, ContourSettings, CountSettings, RealScanSettings, SampleCounts,
};

pub const CONFIDENCE: f64 = 0.95;

/// A ball of radius `radius` in the affine subspace `offset + span(frame)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceSpec {
    pub offset: Vec<f64>,
    /// Orthonormal vectors of length `s`.
    pub frame: Vec<Vec<f64>>,
    pub radius: f64,
}

impl SliceSpec {
    /// The whole ball `E(s, norm)` written as a slice.
    pub fn full_ball(degree: usize, norm: f64) -> Self {
        let s = real_dimension(degree);
        let frame = (0..s)
            .map(|j| (0..s).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self {
            offset: vec![0.0; s],
            frame,
            radius: norm,
        }
    }

    pub fn validate(&self, degree: usize, norm: f64, override_regime: bool) -> Result<()> {
        let s = real_dimension(degree);
        if self.offset.len() != s {
            return Err(Error::Config(format!(
                "slice offset has length {}, expected {s}",
                self.offset.len()
            )));
        }
        if self.frame.is_empty() || self.frame.iter().any(|e| e.len() != s) {
            return Err(Error::Config(format!(
                "slice frame must hold at least one vector of length {s}"
            )));
        }
        for (i, ei) in self.frame.iter().enumerate() {
            for (j, ej) in self.frame.iter().enumerate().skip(i) {
                let dot: f64 = ei.iter().zip(ej).map(|(a, b)| a * b).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                if (dot - target).abs() > 1e-9 {
                    return Err(Error::Config(format!(
                        "slice frame is not orthonormal (<e{i}, e{j}> = {dot})"
                    )));
                }
            }
        }
        if !(self.radius > 0.0) {
            return Err(Error::Config("slice radius must be positive".into()));
        }
        let offset_norm = self.offset.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !override_regime && offset_norm + self.radius > norm * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "slice reaches radius {} outside E(s, {norm})",
                offset_norm + self.radius
            )));
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let t = sample_ball(self.frame.len(), self.radius, rng);
        let mut v = self.offset.clone();
        for (tj, e) in t.iter().zip(&self.frame) {
            for (vi, ei) in v.iter_mut().zip(e) {
                *vi += tj * ei;
            }
        }
        v
    }

    /// `|E(4, norm)| / |pi(V)|`, where `pi` keeps the four linear
    /// coefficients. `pi(V)` is the ellipsoid `pi(offset) + A B_k(radius)`
    /// with `A` the projected frame, of volume `|B_4(radius)| sqrt(det A A^T)`.
    pub fn delta(&self, degree: usize, norm: f64) -> Result<f64> {
        let idx = linear_indices(degree);
        let k = self.frame.len();
        let a = DMatrix::from_fn(4, k, |r, c| self.frame[c][idx[r]]);
        let gram: Matrix4<f64> = (&a * a.transpose()).fixed_view::<4, 4>(0, 0).into_owned();
        let det = gram.determinant();
        if !(det > 1e-24) {
            return Err(Error::Config(
                "slice projects onto a set of zero 4-volume in the linear coefficients".into(),
            ));
        }
        Ok((norm / self.radius).powi(4) / det.sqrt())
    }
}

/// Positions of `a10, a01, b10, b01` in the flat coefficient vector.
fn linear_indices(degree: usize) -> [usize; 4] {
    let half = real_dimension(degree) / 2;
    // canonical order starts (0,1), (1,0)
    [1, 0, half + 1, half]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub degree: usize,
    /// Ball radius `N`; `1/(40 pi sqrt(d))` when absent.
    pub norm: Option<f64>,
    pub samples: u64,
    pub seed: u64,
    pub workers: usize,
    pub integrator_tol: f64,
    pub scan_grid: usize,
    pub eps_inner: f64,
    pub contour_points: usize,
    pub slice: Option<SliceSpec>,
    /// Allows `N` above `1/(40 pi sqrt(d))`.
    pub override_regime: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let scan = RealScanSettings::default();
        Self {
            degree: 2,
            norm: None,
            samples: 1000,
            seed: 0,
            workers: 1,
            integrator_tol: DEFAULT_TOL,
            scan_grid: scan.grid,
            eps_inner: scan.eps_inner,
            contour_points: ContourSettings::default().initial_points,
            slice: None,
            override_regime: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn resolved_norm(&self) -> f64 {
        self.norm.unwrap_or_else(|| regime_norm(self.degree))
    }

    pub fn dimension(&self) -> usize {
        real_dimension(self.degree)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.degree;
        if !(2..=MAX_DEGREE).contains(&d) {
            return Err(Error::Config(format!(
                "degree {d} outside 2..={MAX_DEGREE}"
            )));
        }
        let s = self.dimension();
        if s >= 3 * d * d {
            return Err(Error::Config(format!("dimension {s} is not below 3 d^2")));
        }
        let n = self.resolved_norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Config(format!("norm {n} must be positive")));
        }
        if !self.override_regime && n > regime_norm(d) * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "norm {n} exceeds 1/(40 pi sqrt(d)) = {}; set override_regime to proceed",
                regime_norm(d)
            )));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if !(self.integrator_tol > 0.0) {
            return Err(Error::Config("integrator_tol must be positive".into()));
        }
        self.count_settings().scan_validate()?;
        if let Some(slice) = &self.slice {
            slice.validate(d, n, self.override_regime)?;
        }
        Ok(())
    }

    pub fn count_settings(&self) -> CountSettings {
        let mut settings =
            CountSettings::for_norm(self.resolved_norm(), self.degree, self.integrator_tol);
        settings.scan.grid = self.scan_grid;
        settings.scan.eps_inner = self.eps_inner;
        settings.contour.initial_points = self.contour_points;
        settings
    }

    /// `delta` of the sampled region: 1 for the whole ball.
    pub fn delta(&self) -> Result<f64> {
        match &self.slice {
            Some(slice) => slice.delta(self.degree, self.resolved_norm()),
            None => Ok(1.0),
        }
    }

    /// Per-sample seed and field of sample `index`.
    pub fn sample_field(&self, index: u64) -> (u64, PolyField) {
        let seed = self.seed ^ index;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = match &self.slice {
            Some(slice) => slice.sample(&mut rng),
            None => sample_ball(self.dimension(), self.resolved_norm(), &mut rng),
        };
        let field =
            PolyField::from_real_coefficients(self.degree, &v).expect("slice dimension checked");
        (seed, field)
    }
}

trait ScanValidate {
    fn scan_validate(&self) -> Result<()>;
}

impl ScanValidate for CountSettings {
    fn scan_validate(&self) -> Result<()> {
        let s = &self.scan;
        if !(s.eps_inner > 0.0 && s.eps_inner < s.r_max) || s.grid < 64 {
            return Err(Error::Config(format!(
                "scan needs 0 < eps_inner < {} and grid >= 64",
                s.r_max
            )));
        }
        if self.contour.initial_points < 8 {
            return Err(Error::Config("contour_points must be at least 8".into()));
        }
        Ok(())
    }
}

/// Produces the counts of one sampled field.
pub trait SampleCounter: Sync {
    fn count(&self, sample_id: u64, seed: u64, field: &PolyField) -> Result<SampleCounts>;
}

impl SampleCounter for CountSettings {
    fn count(&self, _sample_id: u64, _seed: u64, field: &PolyField) -> Result<SampleCounts> {
        count_cycles_of_sample(field, self)
    }
}

/// One line of the per-sample JSON-lines output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample_id: u64,
    pub seed: u64,
    #[serde(rename = "C")]
    pub c: Option<usize>,
    #[serde(rename = "N_complex")]
    pub n_complex: Option<usize>,
    pub reliable: bool,
    pub suspects: Vec<f64>,
    pub integrator_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl SampleRecord {
    fn usable(&self) -> Option<(usize, usize)> {
        match (self.reliable, self.c, self.n_complex) {
            (true, Some(c), Some(n)) => Some((c, n)),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    #[serde(rename = "T")]
    pub t: usize,
    pub fraction: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Tail fractions under the two policies for unreliable samples: counted as
/// zero (`low`) or as exceeding every threshold (`high`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailBracket {
    #[serde(rename = "T")]
    pub t: usize,
    pub low: f64,
    pub high: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub counts: BTreeMap<usize, u64>,
}

impl Histogram {
    pub fn from_values<I: IntoIterator<Item = usize>>(values: I) -> Self {
        let mut counts = BTreeMap::new();
        for v in values {
            *counts.entry(v).or_insert(0) += 1;
        }
        Self { counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn max(&self) -> Option<usize> {
        self.counts.keys().next_back().copied()
    }

    /// Number of samples with count `>= t`.
    pub fn at_least(&self, t: usize) -> u64 {
        self.counts.range(t..).map(|(_, n)| n).sum()
    }

    /// `sum_i C_i`, computed as `sum_{T >= 1} #{C >= T}`.
    pub fn layer_cake_sum(&self) -> u64 {
        (1..=self.max().unwrap_or(0))
            .map(|t| self.at_least(t))
            .sum()
    }

    pub fn value_sum(&self) -> u64 {
        self.counts.iter().map(|(&v, &n)| v as u64 * n).sum()
    }
}

/// Two-sided Clopper-Pearson interval for `k` successes out of `n`.
pub fn clopper_pearson(k: u64, n: u64, confidence: f64) -> (f64, f64) {
    assert!(n > 0 && k <= n);
    let alpha = 1.0 - confidence;
    let (kf, nf) = (k as f64, n as f64);
    let lo = if k == 0 {
        0.0
    } else {
        Beta::new(kf, nf - kf + 1.0)
            .expect("positive shape parameters")
            .inverse_cdf(alpha / 2.0)
    };
    let hi = if k == n {
        1.0
    } else {
        Beta::new(kf + 1.0, nf - kf)
            .expect("positive shape parameters")
            .inverse_cdf(1.0 - alpha / 2.0)
    };
    (lo, hi)
}

/// Fraction of samples with count `>= t`, with a 95% Clopper-Pearson
/// interval. `None` for an empty histogram.
pub fn empirical_tail(hist: &Histogram, t: usize) -> Option<TailPoint> {
    let n = hist.total();
    if n == 0 {
        return None;
    }
    let k = hist.at_least(t);
    let (ci_lo, ci_hi) = clopper_pearson(k, n, CONFIDENCE);
    Some(TailPoint {
        t,
        fraction: k as f64 / n as f64,
        ci_lo,
        ci_hi,
    })
}

/// Tail curve for `T = 0 ..= max + 1`; only `T = 0` (fraction 1) when empty.
pub fn tail_curve(hist: &Histogram) -> Vec<TailPoint> {
    match hist.max() {
        None => vec![TailPoint {
            t: 0,
            fraction: 1.0,
            ci_lo: 1.0,
            ci_hi: 1.0,
        }],
        Some(max) => (0..=max + 1)
            .map(|t| empirical_tail(hist, t).expect("nonempty"))
            .collect(),
    }
}

/// Weighted least-squares slope of `-log tail(T)` against `T` over the
/// thresholds with a nonzero tail, with weights `#{C >= T}`.
pub fn fitted_rate(hist: &Histogram) -> Option<f64> {
    let n = hist.total() as f64;
    let points: Vec<(f64, f64, f64)> = (0..=hist.max()?)
        .filter_map(|t| {
            let k = hist.at_least(t);
            (k > 0).then(|| (t as f64, -(k as f64 / n).ln(), k as f64))
        })
        .collect();
    if points.len() < 2 {
        return None;
    }
    let w: f64 = points.iter().map(|p| p.2).sum();
    let mx = points.iter().map(|p| p.2 * p.0).sum::<f64>() / w;
    let my = points.iter().map(|p| p.2 * p.1).sum::<f64>() / w;
    let sxy: f64 = points.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| p.2 * (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub resolved_norm: f64,
    pub dimension: usize,
    pub count_settings: CountSettings,
    pub worker_ranges: Vec<(u64, u64)>,
    pub wall_time_secs: Option<f64>,
}

impl RunManifest {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            resolved_norm: config.resolved_norm(),
            dimension: config.dimension(),
            count_settings: config.count_settings(),
            worker_ranges: partition(config.samples, config.workers)
                .into_iter()
                .map(|r| (r.start, r.end))
                .collect(),
            wall_time_secs: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub samples: u64,
    pub reliable: u64,
    /// Samples left out of the histograms (unreliable or failed).
    pub excluded: u64,
    pub failed: u64,
    pub counts_histogram: Histogram,
    pub complex_histogram: Histogram,
    pub tail: Vec<TailPoint>,
    pub complex_tail: Vec<TailPoint>,
    pub tail_bracket: Vec<TailBracket>,
    pub mean_c: f64,
    pub mean_n_complex: f64,
    pub fitted_rate: Option<f64>,
    pub complex_fitted_rate: Option<f64>,
    pub delta: f64,
    /// `mean_c / (log delta + log d)`.
    pub c_hat: f64,
    pub manifest: RunManifest,
}

pub struct ExperimentOutput {
    pub report: TailReport,
    pub records: Vec<SampleRecord>,
}

/// Contiguous ranges covering `0..samples`, one per worker.
pub fn partition(samples: u64, workers: usize) -> Vec<Range<u64>> {
    let w = workers.max(1) as u64;
    let base = samples / w;
    let extra = samples % w;
    let mut start = 0;
    (0..w)
        .map(|j| {
            let len = base + u64::from(j < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

fn run_sample<C: SampleCounter>(
    config: &ExperimentConfig,
    counter: &C,
    index: u64,
) -> SampleRecord {
    let (seed, field) = config.sample_field(index);
    let mut record = SampleRecord {
        sample_id: index,
        seed,
        c: None,
        n_complex: None,
        reliable: false,
        suspects: Vec::new(),
        integrator_tol: config.integrator_tol,
        note: None,
    };
    match counter.count(index, seed, &field) {
        Ok(counts) => {
            record.c = counts.c;
            record.n_complex = counts.n_complex;
            record.reliable = counts.reliable;
            record.suspects = counts.suspects;
            record.note = counts.note;
        }
        Err(e) => record.note = Some(format!("error: {e}")),
    }
    record
}

/// Runs the experiment with the displacement-based counter.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    run_experiment_with(config, &config.count_settings())
}

/// Runs the experiment with any counter (synthetic counters are used to
/// test the statistics).
pub fn run_experiment_with<C: SampleCounter>(
    config: &ExperimentConfig,
    counter: &C,
) -> Result<ExperimentOutput> {
    config.validate()?;
    let started = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let ranges = partition(config.samples, config.workers);
    let chunks: Vec<Vec<SampleRecord>> = pool.install(|| {
        ranges
            .par_iter()
            .map(|r| r.clone().map(|i| run_sample(config, counter, i)).collect())
            .collect()
    });
    let records: Vec<SampleRecord> = chunks.into_iter().flatten().collect();
    let mut manifest = RunManifest::new(config);
    manifest.wall_time_secs = Some(started.elapsed().as_secs_f64());
    let report = aggregate(config, &records, manifest)?;
    Ok(ExperimentOutput { report, records })
}

/// Folds per-sample records into a report.
pub fn aggregate(
    config: &ExperimentConfig,
    records: &[SampleRecord],
    manifest: RunManifest,
) -> Result<TailReport> {
    let usable: Vec<(usize, usize)> = records.iter().filter_map(SampleRecord::usable).collect();
    let counts = Histogram::from_values(usable.iter().map(|u| u.0));
    let complex = Histogram::from_values(usable.iter().map(|u| u.1));
    let total = records.len() as u64;
    let reliable = usable.len() as u64;
    let excluded = total - reliable;
    let failed = records
        .iter()
        .filter(|r| r.c.is_none() && r.n_complex.is_none())
        .count() as u64;

    let tail = tail_curve(&counts);
    let tail_bracket = if total == 0 {
        Vec::new()
    } else {
        tail.iter()
            .map(|p| {
                // every sample has C >= 0
                let k = if p.t == 0 {
                    total
                } else {
                    counts.at_least(p.t)
                };
                let unknown = if p.t == 0 { 0 } else { excluded };
                TailBracket {
                    t: p.t,
                    low: k as f64 / total as f64,
                    high: (k + unknown) as f64 / total as f64,
                }
            })
            .collect()
    };
    let mean = |h: &Histogram| {
        if h.total() == 0 {
            0.0
        } else {
            h.layer_cake_sum() as f64 / h.total() as f64
        }
    };
    let mean_c = mean(&counts);
    let delta = config.delta()?;
    let (_, c_hat) = mean_vs_log_bound(mean_c, delta, config.degree)?;
    Ok(TailReport {
        samples: total,
        reliable,
        excluded,
        failed,
        tail,
        complex_tail: tail_curve(&complex),
        tail_bracket,
        mean_c,
        mean_n_complex: mean(&complex),
        fitted_rate: fitted_rate(&counts),
        complex_fitted_rate: fitted_rate(&complex),
        counts_histogram: counts,
        complex_histogram: complex,
        delta,
        c_hat,
        manifest,
    })
}

/// `(mean_C, mean_C / (log delta + log d))`.
pub fn mean_vs_log_bound(mean_c: f64, delta: f64, degree: usize) -> Result<(f64, f64)> {
    let denom = delta.ln() + (degree as f64).ln();
    if !(denom > 0.0) {
        return Err(Error::Domain(format!(
            "log delta + log d = {denom} must be positive"
        )));
    }
    Ok((mean_c, mean_c / denom))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

/// `C1 = 6 * 32^(1 + 1/(2D))`, `C2 = 2 + 1/(2D)`, `C3 = log(3/2) / D` for a
/// Chebyshev degree `D > 0`.
pub fn theorem_constants(d_hat: f64) -> Result<TheoremConstants> {
    if !(d_hat > 0.0) {
        return Err(Error::Domain(format!(
            "Chebyshev degree {d_hat} must be positive"
        )));
    }
    let half_inv = 1.0 / (2.0 * d_hat);
    Ok(TheoremConstants {
        c1: 6.0 * 32f64.powf(1.0 + half_inv),
        c2: 2.0 + half_inv,
        c3: 1.5f64.ln() / d_hat,
    })
}

pub fn write_jsonl<W: Write>(records: &[SampleRecord], out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_tail_csv<W: Write>(tail: &[TailPoint], out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "T,fraction,ci_lo,ci_hi")?;
    for p in tail {
        writeln!(out, "{},{},{},{}", p.t, p.fraction, p.ci_lo, p.ci_hi)?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `samples.jsonl`, `report.json`, `tail.csv` and `manifest.json`.
pub fn write_outputs(dir: &Path, output: &ExperimentOutput) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_jsonl(&output.records, File::create(dir.join("samples.jsonl"))?)?;
    write_tail_csv(&output.report.tail, File::create(dir.join("tail.csv"))?)?;
    serde_json::to_writer_pretty(File::create(dir.join("report.json"))?, &output.report)?;
    serde_json::to_writer_pretty(
        File::create(dir.join("manifest.json"))?,
        &output.report.manifest,
    )?;
    Ok(())
}
