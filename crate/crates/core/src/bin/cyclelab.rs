use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use cyclelab::commands::{self, RemezArgs, RemezTarget, SampleArgs, VerifyArgs};
use cyclelab::field::{regime_norm, PolyField};
use cyclelab::poincare::DEFAULT_TOL;
use cyclelab::tails::ExperimentConfig;
use cyclelab::zeros::CountSettings;
use cyclelab::Result;

#[derive(Parser)]
#[command(
    name = "cyclelab",
    version,
    about = "Limit cycles of random planar polynomial fields near a linear center"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Degree d of the perturbation [default: 2].
    #[arg(long)]
    degree: Option<usize>,
    /// Ball radius N (default 1/(40 pi sqrt(d))).
    #[arg(long)]
    norm: Option<f64>,
    /// [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Integrator tolerance [default: 1e-10].
    #[arg(long)]
    tol: Option<f64>,
    /// Allow N above 1/(40 pi sqrt(d)).
    #[arg(long)]
    override_regime: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Draw fields uniformly from the coefficient ball.
    Sample {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        samples: u64,
        /// Re-read the output and recompute the largest norm.
        #[arg(long)]
        norm_check: bool,
    },
    /// Integrate one return-map trajectory.
    Poincare {
        #[command(flatten)]
        common: Common,
        /// Field record (JSON); the extremal field v0 when absent.
        #[arg(long)]
        field: Option<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        z0_re: f64,
        #[arg(long, default_value_t = 0.0)]
        z0_im: f64,
    },
    /// Count limit cycles and complex zeros of the displacement of one field.
    Count {
        #[command(flatten)]
        common: Common,
        /// Field record (JSON); the extremal field v0 when absent.
        #[arg(long)]
        field: Option<PathBuf>,
    },
    /// Check the trajectory and displacement bounds on random fields.
    VerifyBounds {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1000)]
        samples: u64,
    },
    /// Estimate a Chebyshev degree from random interval/subset pairs.
    Remez {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Use T_n instead of g_0 along a random chord.
        #[arg(long)]
        chebyshev: Option<usize>,
    },
    /// Run the Monte Carlo tail experiment.
    Tails {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        /// Slice description (TOML or JSON).
        #[arg(long)]
        slice: Option<PathBuf>,
        /// Experiment configuration (TOML); flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Evaluate the tail-bound constants at a Chebyshev degree.
    Constants {
        #[arg(long, default_value_t = 1.0)]
        d_hat: f64,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
}

impl Common {
    fn degree(&self) -> usize {
        self.degree.unwrap_or(2)
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn tol(&self) -> f64 {
        self.tol.unwrap_or(DEFAULT_TOL)
    }

    fn norm(&self) -> f64 {
        self.norm.unwrap_or_else(|| regime_norm(self.degree()))
    }
}

fn field_or_v0(path: Option<PathBuf>, common: &Common) -> Result<PolyField> {
    match path {
        Some(p) => commands::read_field(&p),
        None => Ok(PolyField::v0(common.degree(), common.norm())),
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sample {
            common,
            samples,
            norm_check,
        } => {
            let args = SampleArgs {
                samples,
                degree: common.degree(),
                norm: common.norm,
                seed: common.seed(),
                norm_check,
                override_regime: common.override_regime,
            };
            print_json(&commands::cmd_sample(&args, &common.out_dir)?)
        }
        Command::Poincare {
            common,
            field,
            z0_re,
            z0_im,
        } => {
            let field = field_or_v0(field, &common)?;
            let z0 = Complex64::new(z0_re, z0_im);
            print_json(&commands::cmd_poincare(
                &field,
                z0,
                common.tol(),
                &common.out_dir,
            )?)
        }
        Command::Count { common, field } => {
            let field = field_or_v0(field, &common)?;
            let settings = CountSettings::for_norm(common.norm(), field.degree(), common.tol());
            print_json(&commands::cmd_count(&field, &settings, &common.out_dir)?)
        }
        Command::VerifyBounds { common, samples } => {
            let args = VerifyArgs {
                norm: common.norm,
                tol: common.tol(),
                ..VerifyArgs::new(common.degree(), samples, common.seed())
            };
            let report = commands::cmd_verify_bounds(&args, &common.out_dir)?;
            println!(
                "trajectory bound: {}/{} passed, worst margin {:.3e}",
                report.prop1_passed, report.prop1_checks, report.worst_prop1_margin
            );
            println!(
                "displacement bound: {}/{} passed, worst margin {:.3e}",
                report.g_passed, report.g_checks, report.worst_g_margin
            );
            Ok(())
        }
        Command::Remez {
            common,
            samples,
            chebyshev,
        } => {
            let args = RemezArgs {
                target: chebyshev.map_or(RemezTarget::DisplacementLine, RemezTarget::Chebyshev),
                degree: common.degree(),
                norm: common.norm,
                trials: samples,
                seed: common.seed(),
            };
            print_json(&commands::cmd_remez(&args, &common.out_dir)?)
        }
        Command::Tails {
            common,
            samples,
            workers,
            slice,
            config,
        } => {
            let mut cfg = match config {
                Some(p) => ExperimentConfig::from_toml(&std::fs::read_to_string(p)?)?,
                None => ExperimentConfig::default(),
            };
            cfg.degree = common.degree.unwrap_or(cfg.degree);
            cfg.seed = common.seed.unwrap_or(cfg.seed);
            cfg.integrator_tol = common.tol.unwrap_or(cfg.integrator_tol);
            cfg.norm = common.norm.or(cfg.norm);
            cfg.override_regime |= common.override_regime;
            if let Some(n) = samples {
                cfg.samples = n;
            }
            if let Some(w) = workers {
                cfg.workers = w;
            }
            if let Some(p) = slice {
                cfg.slice = Some(commands::read_slice(&p)?);
            }
            let report = commands::cmd_tails(&cfg, &common.out_dir)?;
            println!(
                "{} samples, {} excluded, mean C = {}, c_hat = {}",
                report.samples, report.excluded, report.mean_c, report.c_hat
            );
            for p in &report.tail {
                println!("T = {}: {} [{}, {}]", p.t, p.fraction, p.ci_lo, p.ci_hi);
            }
            Ok(())
        }
        Command::Constants { d_hat, out_dir } => {
            print_json(&commands::cmd_constants(d_hat, &out_dir)?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
