//! `siphon`: run the simulated experiments and fits from the command line.

mod commands;
mod config;
mod error;
mod input;
mod output;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{MmiConfig, RunConfig};
use error::CliError;
use output::Table;

#[derive(Parser)]
#[command(
    name = "siphon",
    version,
    about = "Lossy linear-optics simulator: HOM dips, MZI fringes and source calibration"
)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Overrides shared by the simulation commands.
#[derive(Args, Default)]
struct ModelArgs {
    #[arg(long)]
    n_max_pairs: Option<usize>,
    #[arg(long)]
    alpha_ov: Option<f64>,
    /// Replace the coupler with the ideal balanced one.
    #[arg(long, conflicts_with = "phi")]
    ideal_mmi: bool,
    /// Internal coupler phase, with the least loss it requires.
    #[arg(long)]
    phi: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Coincidences against the delay between the two photons.
    HomDip {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        xi_sq: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Dip visibility against pair probability per pulse.
    VisVsPower {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Single- and two-photon fringes against heater voltage.
    Fringe {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Smallest internal coupler phase allowed by each loss.
    Bound {
        /// Comma-separated losses in dB.
        #[arg(long, value_delimiter = ',')]
        loss_db: Option<Vec<f64>>,
    },
    /// Detector efficiencies and squeezing from count rates.
    FitCounts {
        /// CSV with columns intensity,c1,c2,cc.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        repetition_rate: Option<f64>,
    },
    /// Photon overlap and nominal visibility from measured visibilities.
    FitVisibility {
        #[command(flatten)]
        model: ModelArgs,
        /// CSV with columns xi_sq,v,sigma_v.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Run the numbered acceptance checks.
    Selftest {
        /// Run a single criterion.
        #[arg(long)]
        criterion: Option<usize>,
    },
}

impl ModelArgs {
    fn apply(&self, c: &mut RunConfig) {
        if let Some(n) = self.n_max_pairs {
            c.source.n_max_pairs = n;
        }
        if let Some(a) = self.alpha_ov {
            c.overlap.alpha_ov = a;
        }
        if self.ideal_mmi {
            c.mmi = MmiConfig::Ideal {};
        }
        if let Some(phi) = self.phi {
            c.mmi = MmiConfig::MinimalLoss { phi };
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if cli.seed.is_some() {
        config.seed = cli.seed;
    }
    let mut failed = 0;
    let table = match cli.command {
        Command::HomDip { model, xi_sq, points } => {
            model.apply(&mut config);
            config.source.xi_sq = xi_sq.unwrap_or(config.source.xi_sq);
            config.delay.points = points.unwrap_or(config.delay.points);
            commands::hom_dip(&config)?
        }
        Command::VisVsPower { model, points } => {
            model.apply(&mut config);
            config.power.points = points.unwrap_or(config.power.points);
            commands::vis_vs_power(&config)?
        }
        Command::Fringe { model, points } => {
            model.apply(&mut config);
            config.fringe.points = points.unwrap_or(config.fringe.points);
            commands::fringe(&config)?
        }
        Command::Bound { loss_db } => {
            if let Some(l) = loss_db {
                config.bound.loss_db = l;
            }
            commands::bound(&config)?
        }
        Command::FitCounts { input, repetition_rate } => {
            if let Some(path) = input {
                config.set_input(path);
            }
            config.fit.repetition_rate = repetition_rate.unwrap_or(config.fit.repetition_rate);
            commands::fit_counts(&config)?
        }
        Command::FitVisibility { model, input } => {
            model.apply(&mut config);
            if let Some(path) = input {
                config.set_input(path);
            }
            commands::fit_visibility(&config)?
        }
        Command::Selftest { criterion } => {
            let (table, n) = commands::selftest(&config, criterion)?;
            failed = n;
            table
        }
    };
    emit(&table, cli.format, cli.out.as_ref())?;
    match failed {
        0 => Ok(()),
        n => Err(CliError::Selftest(n, table.rows.len())),
    }
}

fn emit(table: &Table, format: Format, out: Option<&PathBuf>) -> Result<(), CliError> {
    let write = |w: &mut dyn Write| match format {
        Format::Csv => table.write_csv(&mut &mut *w),
        Format::Json => table.write_json(&mut &mut *w),
    };
    match out {
        Some(path) => {
            let io = |source| CliError::Io {
                path: path.clone(),
                source,
            };
            let mut w = BufWriter::new(File::create(path).map_err(io)?);
            write(&mut w).and_then(|_| w.flush()).map_err(io)
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            write(&mut w).and_then(|_| w.flush()).map_err(|source| CliError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
