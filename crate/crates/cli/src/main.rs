//! `pacot`: command-line driver for the sensing and release models.
//!
//! Subcommands cover reservoir capacity, receptor kinetics, ratio
//! estimation, detection error sweeps, release transport, pump energy, the
//! bundled result-set presets, and scenario validation. Exit codes: 0 on
//! success, 1 for configuration and validation errors, 2 for numeric
//! failures.

mod checks;
mod commands;
mod config;
mod grid;
mod manifest;
mod output;
mod reproduce;

use std::path::PathBuf;
use std::process;

use anyhow::{bail, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use pacot_core::detection::Experiment;
use pacot_core::release::SweepVariable;

use crate::reproduce::Figure;

#[derive(Parser)]
#[command(
    name = "pacot",
    version,
    about = "Models a micropump-driven heavy-metal collector: receptor kinetics, \
             concentration-ratio detection, release transport, and pump energy"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Scenario config file of key = value lines.
    #[arg(long, global = true, value_name = "FILE")]
    scenario: Option<PathBuf>,
    /// Master seed, overriding the scenario's.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output path; stdout when omitted.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Worker threads for sweeps; all cores when omitted.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Reports reservoir capacity for a particle mix.
    Capacity(CapacityArgs),
    /// Simulates or solves the receptor binding chain.
    Kinetics {
        #[command(subcommand)]
        action: KineticsCommand,
    },
    /// Estimates concentration ratios from a dwell trace.
    Estimate(EstimateArgs),
    /// Sweeps detection error against a channel parameter.
    Detect {
        #[command(subcommand)]
        action: DetectCommand,
    },
    /// Sweeps release time against a pump parameter.
    Release {
        #[command(subcommand)]
        action: ReleaseCommand,
    },
    /// Sweeps pump energy consumption over time.
    Energy {
        #[command(subcommand)]
        action: EnergyCommand,
    },
    /// Regenerates the bundled result sets with a run manifest.
    Reproduce(ReproduceArgs),
    /// Checks scenario invariants and reports each one.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct CapacityArgs {
    /// Particle mix as symbol=fraction pairs, e.g. zn=0.4,cd=0.3,hg=0.3.
    #[arg(long)]
    mix: String,
    /// Device radius in millimetres; scenario value when omitted.
    #[arg(long)]
    radius_mm: Option<f64>,
    /// Device length in millimetres; scenario value when omitted.
    #[arg(long)]
    length_mm: Option<f64>,
}

#[derive(Subcommand)]
enum KineticsCommand {
    /// Samples a dwell trace of full bind/unbind cycles.
    Trace {
        /// Bind/unbind cycles to sample.
        #[arg(long, default_value_t = 10_000)]
        cycles: usize,
        /// Transmitted bit fixing the detected metal's level.
        #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
        bit: u8,
    },
    /// Solves the stationary distribution of the binding chain.
    Steady {
        /// Transmitted bit fixing the detected metal's level.
        #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
        bit: u8,
    },
}

#[derive(Args)]
struct EstimateArgs {
    /// Trace CSV produced by `kinetics trace`.
    #[arg(long, value_name = "FILE")]
    trace: PathBuf,
    /// Interval edge multiple for the dwell thresholds.
    #[arg(long, default_value_t = pacot_core::estimator::DEFAULT_THRESHOLD_MULTIPLE)]
    multiple: f64,
}

#[derive(Subcommand)]
enum DetectCommand {
    /// Evaluates the detection point across a grid.
    Sweep {
        /// Swept channel parameter.
        #[arg(long)]
        experiment: ExperimentArg,
        /// Push the receptor into saturation first.
        #[arg(long, default_value = "off")]
        saturation: Toggle,
        /// Sweep grid as start:stop:step-or-count.
        #[arg(long)]
        grid: String,
    },
}

#[derive(Subcommand)]
enum ReleaseCommand {
    /// Simulates first-passage release times across a grid.
    Sweep {
        /// Swept pump parameter.
        #[arg(long)]
        variable: VariableArg,
        /// Sweep grid as start:stop:step-or-count.
        #[arg(long)]
        grid: String,
        /// Particles per sweep point.
        #[arg(long, default_value_t = reproduce::RELEASE_PARTICLES)]
        particles: usize,
        /// Integration step in seconds; resolved from the drift when omitted.
        #[arg(long)]
        dt: Option<f64>,
    },
}

#[derive(Subcommand)]
enum EnergyCommand {
    /// Evaluates pump energy over time across a grid.
    Sweep {
        /// Swept pump parameter.
        #[arg(long)]
        variable: VariableArg,
        /// Sweep grid as start:stop:step-or-count.
        #[arg(long)]
        grid: String,
        /// End of the reported time span in seconds.
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
        /// Number of evenly spaced report times from zero to t-max.
        #[arg(long, default_value_t = 101)]
        t_steps: usize,
    },
}

#[derive(Args)]
struct ReproduceArgs {
    /// Result set to regenerate.
    target: FigureArg,
    /// Directory the artifacts are written into.
    #[arg(long, default_value = ".")]
    outdir: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    /// Also print every resolved parameter with its provenance.
    #[arg(long)]
    print_params: bool,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
enum ExperimentArg {
    AffinityRatio,
    BitRatio,
    InterfererMean,
    EventCount,
}

impl From<ExperimentArg> for Experiment {
    fn from(arg: ExperimentArg) -> Experiment {
        match arg {
            ExperimentArg::AffinityRatio => Experiment::AffinityRatio,
            ExperimentArg::BitRatio => Experiment::BitRatio,
            ExperimentArg::InterfererMean => Experiment::InterfererMean,
            ExperimentArg::EventCount => Experiment::EventCount,
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
enum VariableArg {
    Rpm,
    RadiusRatio,
    AspectRatio,
}

impl From<VariableArg> for SweepVariable {
    fn from(arg: VariableArg) -> SweepVariable {
        match arg {
            VariableArg::Rpm => SweepVariable::Rpm,
            VariableArg::RadiusRatio => SweepVariable::RadiusRatio,
            VariableArg::AspectRatio => SweepVariable::AspectRatio,
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum FigureArg {
    Fig4,
    Fig6,
    Fig7,
    Fig8,
    Fig9,
    Fig10,
    All,
}

impl FigureArg {
    fn figures(self) -> Vec<Figure> {
        match self {
            FigureArg::Fig4 => vec![Figure::Fig4],
            FigureArg::Fig6 => vec![Figure::Fig6],
            FigureArg::Fig7 => vec![Figure::Fig7],
            FigureArg::Fig8 => vec![Figure::Fig8],
            FigureArg::Fig9 => vec![Figure::Fig9],
            FigureArg::Fig10 => vec![Figure::Fig10],
            FigureArg::All => Figure::ALL.to_vec(),
        }
    }
}

/// Maps an error chain to the documented exit codes: numeric failures exit
/// 2, everything else is a validation error and exits 1.
fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(core) = cause.downcast_ref::<pacot_core::Error>() {
            return match core {
                pacot_core::Error::Numeric(_) | pacot_core::Error::IllConditioned { .. } => 2,
                _ => 1,
            };
        }
    }
    1
}

fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.global.threads {
        if threads == 0 {
            bail!("threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    let file = config::load_config(cli.global.scenario.as_deref())?;
    let out = cli.global.out.as_deref();
    match cli.command {
        Command::Capacity(args) => {
            let radius_mm = args.radius_mm.unwrap_or(file.config.device_radius_mm);
            let length_mm = args.length_mm.unwrap_or(file.config.device_length_mm);
            commands::run_capacity(&args.mix, radius_mm * 1e-3, length_mm * 1e-3, out)
        }
        Command::Kinetics { action } => {
            let scenario = config::build_scenario(&file, cli.global.seed)?;
            match action {
                KineticsCommand::Trace { cycles, bit } => {
                    commands::run_kinetics_trace(&scenario, cycles, bit, out)
                }
                KineticsCommand::Steady { bit } => {
                    commands::run_kinetics_steady(&scenario, bit, out)
                }
            }
        }
        Command::Estimate(args) => {
            let scenario = config::build_scenario(&file, cli.global.seed)?;
            commands::run_estimate(&scenario, &args.trace, args.multiple, out)
        }
        Command::Detect { action } => {
            let scenario = config::build_scenario(&file, cli.global.seed)?;
            let DetectCommand::Sweep { experiment, saturation, grid } = action;
            let grid = grid::parse_grid(&grid)?;
            commands::run_detect_sweep(
                &scenario,
                experiment.into(),
                &grid,
                saturation == Toggle::On,
                out,
            )
        }
        Command::Release { action } => {
            let scenario = config::build_scenario(&file, cli.global.seed)?;
            let ReleaseCommand::Sweep { variable, grid, particles, dt } = action;
            let grid = grid::parse_grid(&grid)?;
            commands::run_release_sweep(&scenario, variable.into(), &grid, particles, dt, out)
        }
        Command::Energy { action } => {
            let scenario = config::build_scenario(&file, cli.global.seed)?;
            let EnergyCommand::Sweep { variable, grid, t_max, t_steps } = action;
            let grid = grid::parse_grid(&grid)?;
            let times = commands::time_grid(t_max, t_steps)?;
            commands::run_energy_sweep(&scenario, variable.into(), &grid, &times, out)
        }
        Command::Reproduce(args) => {
            if out.is_some() {
                bail!("reproduce writes a directory of artifacts; use --outdir");
            }
            let scenario = config::build_scenario(&file, cli.global.seed)?;
            let command: Vec<String> = std::env::args()
                .enumerate()
                .map(|(index, arg)| {
                    if index == 0 {
                        PathBuf::from(&arg)
                            .file_name()
                            .map(|name| name.to_string_lossy().into_owned())
                            .unwrap_or(arg)
                    } else {
                        arg
                    }
                })
                .collect();
            reproduce::run_reproduce(
                &args.target.figures(),
                &file,
                &scenario,
                &args.outdir,
                command,
            )
        }
        Command::Validate(args) => checks::run_validate(&file, args.print_params, out),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            process::exit(code);
        }
    };
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        process::exit(exit_code(&err));
    }
}
