//! `ssesprit` command-line interface.
//!
//! Exit codes: 0 on success, 1 for usage or input errors, 2 when the
//! numerical pipeline fails.

use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ssesprit::bounds::bound_report;
use ssesprit::esprit::{ss_esprit, EspritOptions, EstimationResult};
use ssesprit::experiments::{run_figure2, run_sweep, ExperimentConfig, Figure2Config, Method};
use ssesprit::music::{music_estimate, MusicOptions};
use ssesprit::signal_model::{add_noise, noise, nu_for_target_nsr, synthesize, NoiseSpec, SampleVector, SpectralModel};
use ssesprit::{Error, Execution};

#[derive(Parser, Debug)]
#[command(name = "ssesprit", version, about = "Single-snapshot ESPRIT spectral estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Model JSON to samples CSV, optionally with noise.
    Synth {
        #[arg(long)]
        input: PathBuf,
        /// Polynomial degree M; M + 1 samples are produced.
        #[arg(long = "m")]
        degree: usize,
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Samples CSV to estimation result JSON.
    Estimate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long = "s")]
        sparsity: Option<usize>,
        #[arg(long = "L")]
        split: Option<usize>,
        #[arg(long, value_enum, default_value_t = MethodArg::Esprit)]
        method: MethodArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Model JSON plus noise spec to bound report JSON.
    Bounds {
        #[arg(long)]
        input: PathBuf,
        #[arg(long = "m")]
        degree: usize,
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "L")]
        split: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// NSR sweep to CSV and SVG.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: ExperimentArgs,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long = "m")]
        degree: Option<usize>,
        /// Run trials on one thread.
        #[arg(long)]
        sequential: bool,
    },
    /// One 15-frequency real-amplitude reconstruction to SVG and JSON.
    Fig2 {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: ExperimentArgs,
    },
}

#[derive(Args, Debug)]
struct NoiseArgs {
    /// Per-component noise standard deviation.
    #[arg(long, conflicts_with = "nsr")]
    nu: Option<f64>,
    /// Target noise-to-signal ratio.
    #[arg(long)]
    nsr: Option<f64>,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "s")]
    sparsity: Option<usize>,
    #[arg(long = "L")]
    split: Option<usize>,
    /// Single NSR value replacing the grid.
    #[arg(long)]
    nsr: Option<f64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Esprit,
    Music,
    Both,
}

impl MethodArg {
    fn methods(self) -> Vec<Method> {
        match self {
            MethodArg::Esprit => vec![Method::Esprit],
            MethodArg::Music => vec![Method::Music],
            MethodArg::Both => vec![Method::Esprit, Method::Music],
        }
    }
}

fn read_model(path: &Path) -> Result<SpectralModel, Error> {
    SpectralModel::from_json(BufReader::new(File::open(path)?))
}

fn nu_from(args: &NoiseArgs, clean: &SampleVector) -> Result<f64, Error> {
    match (args.nu, args.nsr) {
        (Some(nu), _) => Ok(nu),
        (None, Some(nsr)) => nu_for_target_nsr(clean, nsr),
        (None, None) => Ok(0.0),
    }
}

/// Writes `contents` to `dir/name`, or to stdout when `dir` is `None`.
fn emit(dir: Option<&Path>, name: &str, contents: &[u8]) -> Result<(), Error> {
    match dir {
        Some(d) => {
            fs::create_dir_all(d)?;
            fs::write(d.join(name), contents)?;
        }
        None => io::stdout().write_all(contents)?,
    }
    Ok(())
}

fn json_bytes<T: serde::Serialize>(value: &T) -> Result<Vec<u8>, Error> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Synth {
            input,
            degree,
            noise: noise_args,
            seed,
            out,
        } => {
            let clean = synthesize(&read_model(&input)?, degree)?;
            let nu = nu_from(&noise_args, &clean)?;
            let y = add_noise(&clean, &NoiseSpec::new(nu, seed)?);
            let mut buf = Vec::new();
            y.write_csv(&mut buf)?;
            emit(out.as_deref(), "samples.csv", &buf)
        }
        Command::Estimate {
            input,
            sparsity,
            split,
            method,
            out,
        } => {
            let y = SampleVector::read_csv(BufReader::new(File::open(&input)?))?;
            let esprit = ss_esprit(
                &y,
                &EspritOptions {
                    sparsity,
                    split,
                    ..EspritOptions::default()
                },
            );
            let music = |s: usize| {
                music_estimate(
                    &y,
                    s,
                    &MusicOptions {
                        split,
                        ..MusicOptions::default()
                    },
                )
            };
            let value: serde_json::Value = match method {
                MethodArg::Esprit => serde_json::to_value(esprit?)?,
                MethodArg::Music => {
                    let s = match sparsity {
                        Some(s) => s,
                        None => esprit?.sparsity_used,
                    };
                    serde_json::to_value(music(s)?)?
                }
                MethodArg::Both => {
                    let esprit: EstimationResult = esprit?;
                    let music = music(sparsity.unwrap_or(esprit.sparsity_used))?;
                    serde_json::json!({ "esprit": esprit, "music": music })
                }
            };
            emit(out.as_deref(), "estimate.json", &json_bytes(&value)?)
        }
        Command::Bounds {
            input,
            degree,
            noise: noise_args,
            seed,
            split,
            out,
        } => {
            let model = read_model(&input)?;
            let clean = synthesize(&model, degree)?;
            let nu = nu_from(&noise_args, &clean)?;
            let eps = noise(degree + 1, &NoiseSpec::new(nu, seed)?);
            let report = bound_report(&model, &eps, split)?;
            emit(out.as_deref(), "bounds.json", &json_bytes(&report)?)
        }
        Command::Sweep {
            config,
            common,
            method,
            trials,
            degree,
            sequential,
        } => {
            let mut cfg = match config {
                Some(p) => ExperimentConfig::from_json_str(&fs::read_to_string(p)?)?,
                None => ExperimentConfig::default(),
            };
            if let Some(seed) = common.seed {
                cfg.seed = seed;
            }
            if let Some(s) = common.sparsity {
                cfg.sparsity = s;
            }
            if let Some(m) = degree {
                cfg.degree = m;
            }
            if common.split.is_some() {
                cfg.split_override = common.split;
            }
            if let Some(nsr) = common.nsr {
                cfg.nsr_grid = vec![nsr];
            }
            if let Some(m) = method {
                cfg.methods = m.methods();
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            cfg.validate()?;
            let exec = if sequential {
                Execution::Sequential
            } else {
                Execution::Parallel
            };
            let result = run_sweep(&cfg, exec)?;
            let mut csv = Vec::new();
            result.write_csv(&mut csv)?;
            emit(Some(&common.out), "sweep.csv", &csv)?;
            emit(Some(&common.out), "sweep.svg", result.to_svg().as_bytes())?;
            for m in &cfg.methods {
                match result.transition_nsr(*m) {
                    Some(t) => println!("{}: transition NSR {t}", m.name()),
                    None => println!("{}: no grid point reaches success rate 0.5", m.name()),
                }
            }
            Ok(())
        }
        Command::Fig2 { config, common } => {
            let mut cfg = match config {
                Some(p) => serde_json::from_str(&fs::read_to_string(p)?)?,
                None => Figure2Config::default(),
            };
            if let Some(seed) = common.seed {
                cfg.seed = seed;
            }
            if let Some(s) = common.sparsity {
                cfg.sparsity = s;
            }
            if common.split.is_some() {
                cfg.split_override = common.split;
            }
            if let Some(nsr) = common.nsr {
                cfg.nsr = nsr;
            }
            let result = run_figure2(&cfg)?;
            emit(Some(&common.out), "fig2.svg", result.to_svg().as_bytes())?;
            emit(Some(&common.out), "fig2.json", &json_bytes(&result)?)?;
            for o in &result.outcomes {
                println!("{}: hausdorff {:.4} RL", o.method.name(), o.hausdorff_rl);
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
