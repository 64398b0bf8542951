use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use w4_core::linalg::BlochAxis;
use w4_core::noise::NoiseModel;
use w4_core::protocol::{InitialTarget, N_QUBITS};
use w4_harness::config::OUTPUT_DIR_ENV;
use w4_harness::runner::{self, RESULTS_FILE, SUMMARY_FILE};
use w4_harness::{
    calibrate_noise, run_case, with_workers, CalibrationTarget, CaseId, ExperimentConfig,
    HarnessError, Result, TomographySettings,
};

const SCHEMA: &str = include_str!("../schema/experiment_config.schema.json");

#[derive(Parser)]
#[command(
    name = "w4reset",
    version,
    about = "Run W4 resetting-protocol experiments"
)]
struct Cli {
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output directory (overrides the config).
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    master_seed: Option<u64>,
    /// Noise model JSON, e.g. the output of `calibrate`.
    #[arg(long)]
    noise: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepCase {
    Case1a,
    Case1b,
    Case1c,
}

#[derive(Clone, Copy, ValueEnum)]
enum Initial {
    One,
    Minus,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    FiveQubitFidelity,
    InitialMixedD,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a JSON config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Angle sweep of a deterministic case.
    Sweep {
        #[arg(value_enum)]
        case: SweepCase,
        /// Free-evolution angles as multiples of π (default: the case's grid).
        #[arg(long, value_delimiter = ',')]
        phi_over_pi: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Random-interaction campaign.
    Random {
        #[arg(long, value_enum, default_value = "one")]
        initial: Initial,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Process tomography of the reset channel from exact reset states.
    Qpt {
        #[command(flatten)]
        common: Common,
    },
    /// Process tomography with bootstrap error bars from sampled tomography.
    Bootstrap {
        #[arg(long, default_value_t = 10_000)]
        shots: u64,
        #[arg(long, default_value_t = 200)]
        sets: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Fit the dephasing time to a measured observable.
    Calibrate {
        #[arg(long, value_enum, default_value = "five-qubit-fidelity")]
        target: Target,
        /// Target value (defaults to 0.386 for the fidelity, 0.098 for D).
        #[arg(long)]
        value: Option<f64>,
        /// Base model whose T1 and gate durations are kept.
        #[arg(long)]
        noise: Option<PathBuf>,
        /// Write the calibration result here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Rewrite plot data from an output directory's results and config echo.
    EmitPlots {
        #[arg(long, env = OUTPUT_DIR_ENV)]
        output_dir: PathBuf,
    },
    /// Print the JSON schema of experiment configs.
    Schema,
}

fn load_noise(path: &Path) -> Result<NoiseModel> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::config("noise", format!("{}: {e}", path.display())))?;
    // Accept either a bare model or a calibration result.
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| HarnessError::config("noise", e.to_string()))?;
    let model = value.get("model").cloned().unwrap_or(value);
    serde_json::from_value(model).map_err(|e| HarnessError::config("noise", e.to_string()))
}

fn apply_common(cfg: &mut ExperimentConfig, common: &Common) -> Result<()> {
    if let Some(dir) = &common.output_dir {
        cfg.output_dir = dir.clone();
    }
    if let Some(seed) = common.master_seed {
        cfg.master_seed = seed;
    }
    if let Some(path) = &common.noise {
        cfg.protocol.noise = Some(load_noise(path)?);
    }
    Ok(())
}

fn run_and_report(cfg: &ExperimentConfig) -> Result<()> {
    let rep = run_case(cfg)?;
    let s = &rep.summary;
    println!(
        "{}: {} runs ({} without reset), mean p_success {:.4}",
        cfg.case_id, s.n_runs, s.n_failed, s.mean_p_success
    );
    if let Some(d) = s.mean_trace_distance {
        println!("mean trace distance {d:.4}");
    }
    if let Some(p) = &s.process {
        print!("process fidelity {:.4}", p.process_fidelity);
        match &p.bootstrap {
            Some(b) => println!(" (bootstrap {:.4} ± {:.4})", b.mean, b.error_bar),
            None => println!(),
        }
    }
    println!("wrote {}", rep.results_path().display());
    Ok(())
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run { config, common } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            apply_common(&mut cfg, &common)?;
            run_and_report(&cfg)
        }
        Command::Sweep {
            case,
            phi_over_pi,
            common,
        } => {
            let id = match case {
                SweepCase::Case1a => CaseId::Case1a,
                SweepCase::Case1b => CaseId::Case1b,
                SweepCase::Case1c => CaseId::Case1c,
            };
            let mut cfg = ExperimentConfig::preset(id);
            if phi_over_pi.is_some() {
                cfg.sweep = phi_over_pi;
            }
            apply_common(&mut cfg, &common)?;
            run_and_report(&cfg)
        }
        Command::Random { initial, n, common } => {
            let mut cfg = ExperimentConfig::preset(CaseId::Case3Random);
            let axis = match initial {
                Initial::One => BlochAxis::One,
                Initial::Minus => BlochAxis::Minus,
            };
            cfg.protocol.initial_target = InitialTarget::Pure { axis };
            cfg.n_random = Some(n);
            apply_common(&mut cfg, &common)?;
            run_and_report(&cfg)
        }
        Command::Qpt { common } => {
            let mut cfg = ExperimentConfig::preset(CaseId::Case2Qpt);
            cfg.tomography = None;
            apply_common(&mut cfg, &common)?;
            run_and_report(&cfg)
        }
        Command::Bootstrap {
            shots,
            sets,
            common,
        } => {
            let mut cfg = ExperimentConfig::preset(CaseId::Case2Qpt);
            cfg.tomography = Some(TomographySettings {
                shots,
                n_bootstrap: sets,
            });
            apply_common(&mut cfg, &common)?;
            run_and_report(&cfg)
        }
        Command::Calibrate {
            target,
            value,
            noise,
            output,
        } => {
            let target = match target {
                Target::FiveQubitFidelity => CalibrationTarget::FiveQubitFidelity {
                    value: value.unwrap_or(0.386),
                },
                Target::InitialMixedD => CalibrationTarget::InitialMixedD {
                    value: value.unwrap_or(0.098),
                },
            };
            let base = match noise {
                Some(p) => load_noise(&p)?,
                None => NoiseModel::default_for(N_QUBITS),
            };
            let cal = calibrate_noise(target, &base)?;
            let text = serde_json::to_string_pretty(&cal)? + "\n";
            match output {
                Some(path) => {
                    std::fs::write(&path, text)
                        .map_err(|e| HarnessError::Io { path, source: e })?;
                    eprintln!("Tphi = {:.4} us, achieved {:.4}", cal.tphi_us, cal.achieved);
                }
                None => print!("{text}"),
            }
            Ok(())
        }
        Command::EmitPlots { output_dir } => {
            let summary = runner::read_summary(&output_dir.join(SUMMARY_FILE))?;
            let rows = w4_harness::results::read_results(&output_dir.join(RESULTS_FILE))?;
            let written = w4_harness::plots::emit_for_case(
                &summary.config,
                &rows,
                &output_dir.join(runner::PLOT_DIR),
            )?;
            println!("wrote {written:?}");
            Ok(())
        }
        Command::Schema => {
            print!("{SCHEMA}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.workers {
        Some(n) => with_workers(n, || execute(cli.command)).and_then(|r| r),
        None => execute(cli.command),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
