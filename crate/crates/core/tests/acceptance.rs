//! Acceptance suite: one PASS/FAIL line per criterion, with its runtime
//! against the allowed budget. Exits nonzero if any criterion fails.

mod common;

use std::f64::consts::{PI, SQRT_2, TAU};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{circle_max, companion_roots, expand_roots, horner, known_cycle_field, uniform_disk};
use cyclelab::commands::{verify_bounds, BoundReport, VerifyArgs};
use cyclelab::field::{regime_norm, sample_ball, LinearPart, PolyField};
use cyclelab::poincare::{displacement, linear_f, poincare_map};
use cyclelab::remez::{estimate_cheb_degree, polynomial, random_family, remez_check};
use cyclelab::tails::{run_experiment, theorem_constants, write_jsonl, ExperimentConfig};
use cyclelab::zeros::{
    count_complex_zeros, count_real_cycles, jensen_bound, ContourSettings, RealScanSettings,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn linear_center_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let norm = regime_norm(2);
    let z0 = Complex64::new(0.5, 0.0);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let v = sample_ball(4, norm, &mut rng);
        let w = LinearPart::real(v[0], v[1], v[2], v[3]);
        let quad = linear_f(&w, 1e-14).unwrap();
        let end = poincare_map(&PolyField::linear(2, w), z0, 1e-12).unwrap();
        worst = worst.max((quad - (end / z0).ln()).norm());
    }
    let mut worst_diag: f64 = 0.0;
    for j in 0..20 {
        let lambda = norm * (j as f64 / 10.0 - 1.0);
        let w = LinearPart::real(lambda, 0.0, 0.0, lambda);
        worst_diag = worst_diag.max((linear_f(&w, 1e-14).unwrap() - TAU * lambda).norm());
    }
    outcome(
        worst <= 1e-8 && worst_diag <= 1e-12,
        format!("max |quadrature - log multiplier| = {worst:.2e}, diagonal error {worst_diag:.2e}"),
    )
}

fn v0_reproduction() -> Outcome {
    let norm = regime_norm(2);
    let field = PolyField::v0(2, norm);
    let g0 = displacement(&field, Complex64::default(), 1e-13).unwrap().g;
    let closed = (SQRT_2 * PI * norm).exp() - 1.0;
    let err = (g0 - closed).norm();
    outcome(
        err <= 1e-10 && g0.re > SQRT_2 * PI * norm,
        format!(
            "g0 = {:.15e}, closed form {closed:.15e}, error {err:.2e}",
            g0.re
        ),
    )
}

fn bound_suite() -> Vec<BoundReport> {
    [2, 3, 5]
        .iter()
        .map(|&d| verify_bounds(&VerifyArgs::new(d, 1000, 1000 + d as u64)).unwrap())
        .collect()
}

fn prop1_suite(reports: &[BoundReport]) -> Outcome {
    let passed: u64 = reports.iter().map(|r| r.prop1_passed).sum();
    let checks: u64 = reports.iter().map(|r| r.prop1_checks).sum();
    let worst = reports
        .iter()
        .map(|r| r.worst_prop1_margin)
        .fold(f64::INFINITY, f64::min);
    outcome(
        passed == checks && checks == 15_000,
        format!(
            "{passed}/{checks} trajectories within 8 pi N sqrt(d)|z0|, worst margin {worst:.3e}"
        ),
    )
}

fn displacement_suite(reports: &[BoundReport]) -> Outcome {
    let passed: u64 = reports.iter().map(|r| r.g_passed).sum();
    let checks: u64 = reports.iter().map(|r| r.g_checks).sum();
    let worst = reports
        .iter()
        .map(|r| r.worst_g_margin)
        .fold(f64::INFINITY, f64::min);
    outcome(
        passed == checks && checks == 60_000,
        format!("{passed}/{checks} points with |g| <= 8 pi N sqrt(d), worst margin {worst:.3e}"),
    )
}

fn argument_principle_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let rho = 2.0 / 3.0;
    let (mut agree, mut reliable, mut unreliable, mut unexplained) = (0, 0, 0, 0);
    for _ in 0..1000 {
        let degree = rng.random_range(1..=10);
        let roots: Vec<Complex64> = (0..degree).map(|_| uniform_disk(1.0, &mut rng)).collect();
        let coeffs = expand_roots(&roots);
        let oracle = companion_roots(&coeffs);
        let tally = oracle.iter().filter(|z| z.norm() <= rho).count();
        let near_contour = oracle.iter().any(|z| (z.norm() - rho).abs() <= 1e-6);
        match count_complex_zeros(|z| Ok(horner(&coeffs, z)), rho, &ContourSettings::default()) {
            Ok(res) if res.reliable => {
                reliable += 1;
                agree += usize::from(res.count == tally);
            }
            _ => {
                unreliable += 1;
                unexplained += usize::from(!near_contour);
            }
        }
    }
    outcome(
        agree == reliable && unreliable < 10 && unexplained == 0,
        format!("{agree}/{reliable} reliable counts match the companion oracle; {unreliable} unreliable ({unexplained} without a root near the contour)"),
    )
}

fn jensen_domination() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let settings = ContourSettings::default();
    let (mut checks, mut violations, mut mismatches) = (0, 0, 0);
    for family in 0..200 {
        let degree = rng.random_range(1..=8);
        let roots: Vec<Complex64> = (0..degree).map(|_| uniform_disk(1.4, &mut rng)).collect();
        let coeffs = expand_roots(&roots);
        let c = uniform_disk(2.0, &mut rng);
        let eps = 0.05 * rng.random::<f64>();
        // polynomials, exponential multiples, and polynomials plus a small sine
        let f = |z: Complex64| match family % 3 {
            0 => horner(&coeffs, z),
            1 => (c * z).exp() * horner(&coeffs, z),
            _ => horner(&coeffs, z) + eps * (3.0 * z).sin(),
        };
        let m = circle_max(f, 1.0, 16_384);
        let f0 = f(Complex64::default()).norm();
        if f0 < 1e-12 {
            continue;
        }
        for r in [0.3, 0.5, 0.7] {
            let res = count_complex_zeros(|z| Ok(f(z)), r, &settings).unwrap();
            if family % 3 != 2 {
                let known = roots.iter().filter(|z| z.norm() <= r).count();
                mismatches += usize::from(known != res.count);
            }
            let bound = jensen_bound(m, f0, r).unwrap().bound;
            checks += 1;
            violations += usize::from(res.count as f64 > bound);
        }
    }
    outcome(
        violations == 0 && mismatches == 0 && checks >= 590,
        format!("{checks} checks, {violations} Jensen violations, {mismatches} count mismatches"),
    )
}

fn remez_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let (mut checks, mut failures, mut over) = (0, 0, 0);
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..100 {
        let m = rng.random_range(1..=8);
        let coeffs: Vec<f64> = (0..=m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = |x: f64| polynomial(&coeffs, x);
        let family = random_family((-1.0, 1.0), 1000, &mut rng);
        for pair in &family {
            checks += 1;
            failures += usize::from(!remez_check(f, pair, m as f64).holds);
        }
        let est = estimate_cheb_degree(f, &family).unwrap();
        over += usize::from(est.d_hat > m as f64);
        worst_ratio = worst_ratio.max(est.d_hat / m as f64);
    }
    outcome(
        failures == 0 && over == 0,
        format!(
            "{}/{checks} checks hold; d_hat <= m for {}/100 (max d_hat/m = {worst_ratio:.3})",
            checks - failures,
            100 - over
        ),
    )
}

fn known_cycle() -> Outcome {
    let res = count_real_cycles(&known_cycle_field(0.25), &RealScanSettings::default()).unwrap();
    let err = res
        .roots
        .first()
        .map_or(f64::INFINITY, |r| (r - 0.25).abs());
    outcome(
        res.count == 1 && err <= 1e-6,
        format!("C = {}, radius error {err:.2e}", res.count),
    )
}

fn tail_experiment() -> Outcome {
    let config = ExperimentConfig {
        degree: 2,
        samples: 10_000,
        seed: 2009,
        workers: 1,
        ..ExperimentConfig::default()
    };
    let one = run_experiment(&config).unwrap();
    let eight = run_experiment(&ExperimentConfig {
        workers: 8,
        ..config
    })
    .unwrap();
    let jsonl = |records| {
        let mut buf = Vec::new();
        write_jsonl(records, &mut buf).unwrap();
        buf
    };
    let identical = jsonl(&one.records) == jsonl(&eight.records);

    let report = &one.report;
    let tail0 = report.tail[0].fraction == 1.0;
    let monotone = report
        .tail
        .windows(2)
        .all(|w| w[1].fraction <= w[0].fraction);
    let dominated = one
        .records
        .iter()
        .filter(|r| r.reliable)
        .all(|r| matches!((r.c, r.n_complex), (Some(c), Some(n)) if c <= n));
    let h = &report.counts_histogram;
    let layer_cake = h.layer_cake_sum() == h.value_sum()
        && report.mean_c == h.value_sum() as f64 / h.total().max(1) as f64;
    let c_hat = report.mean_c / 2f64.ln();
    outcome(
        identical && tail0 && monotone && dominated && layer_cake,
        format!(
            "jsonl identical 1 vs 8 workers: {identical}; tail(0) = 1: {tail0}; nonincreasing: {monotone}; C <= N_complex: {dominated}; layer-cake: {layer_cake}; mean_C = {}, c_hat = {c_hat:.4}, excluded {}/{}, histogram {:?}",
            report.mean_c, report.excluded, report.samples, h.counts
        ),
    )
}

fn constant_formulas() -> Outcome {
    let k = theorem_constants(1.0).unwrap();
    let c1 = 6.0 * 32.0 * 32f64.sqrt();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(1.0);
    outcome(
        close(k.c1, c1) && close(k.c2, 2.5) && close(k.c3, 1.5f64.ln()),
        format!("C1 = {}, C2 = {}, C3 = {}", k.c1, k.c2, k.c3),
    )
}

fn main() -> ExitCode {
    let mut all = true;
    let mut report = |n: usize, name: &str, budget: Duration, elapsed: Duration, o: Outcome| {
        let pass = o.pass && elapsed <= budget;
        all &= pass;
        println!(
            "{} criterion {n:>2} {name}: {} [{:.2?} of {:.0?}]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed,
            budget
        );
    };
    let secs = Duration::from_secs;
    let timed = |f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let o = f();
        (o, t.elapsed())
    };

    let (o, t) = timed(&linear_center_exactness);
    report(1, "linear-center exactness", secs(10), t, o);
    let (o, t) = timed(&v0_reproduction);
    report(2, "v0 reproduction", secs(1), t, o);

    let started = Instant::now();
    let bounds = bound_suite();
    let t = started.elapsed();
    // one ensemble serves both suites; each is charged the full run
    report(
        3,
        "trajectory bound suite",
        secs(300),
        t,
        prop1_suite(&bounds),
    );
    report(
        4,
        "displacement bound suite",
        secs(300),
        t,
        displacement_suite(&bounds),
    );

    let (o, t) = timed(&argument_principle_oracle);
    report(5, "argument-principle oracle", secs(60), t, o);
    let (o, t) = timed(&jensen_domination);
    report(6, "Jensen domination", secs(60), t, o);
    let (o, t) = timed(&remez_suite);
    report(7, "Remez suite", secs(120), t, o);
    let (o, t) = timed(&known_cycle);
    report(8, "known-cycle field", secs(1), t, o);
    let (o, t) = timed(&tail_experiment);
    report(9, "tail experiment", secs(1800), t, o);
    let (o, t) = timed(&constant_formulas);
    report(10, "constant formulas", secs(1), t, o);

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
