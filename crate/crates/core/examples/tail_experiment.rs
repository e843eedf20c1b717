//! Runs a small tail experiment over the degree-2 coefficient ball and
//! writes its outputs to `target/tail_experiment`.
//!
//! ```bash
//! cargo run --release --example tail_experiment
//! ```

use std::path::Path;

use cyclelab::tails::{run_experiment, write_outputs, ExperimentConfig};

fn main() -> cyclelab::Result<()> {
    let config = ExperimentConfig {
        degree: 2,
        samples: 200,
        seed: 2024,
        workers: 2,
        ..ExperimentConfig::default()
    };
    let output = run_experiment(&config)?;
    let report = &output.report;
    println!(
        "{} samples ({} excluded), mean C = {}, c_hat = {:.4}",
        report.samples, report.excluded, report.mean_c, report.c_hat
    );
    for (p, q) in report.tail.iter().zip(&report.complex_tail) {
        println!(
            "T = {}: C tail {:.4} [{:.4}, {:.4}], N_complex tail {:.4}",
            p.t, p.fraction, p.ci_lo, p.ci_hi, q.fraction
        );
    }
    let dir = Path::new("target/tail_experiment");
    write_outputs(dir, &output)?;
    println!("outputs written to {}", dir.display());
    Ok(())
}
