//! `nhpp`: simulate, fit, select, study, and oracle-check NHPP regression
//! models from the command line.
//!
//! Every run is driven by a JSON config (`--config`) with flag overrides
//! (flags win) and writes a `manifest.json` that replays the run exactly.
//! Exit codes: 0 success, 2 configuration error, 3 numeric/fit error,
//! 4 I/O error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nhpp_core::{Error, SimMethod};

use config::{
    load_config, FitConfig, McmcSection, OracleConfig, SelectConfig, SimulateConfig, StudyConfig,
};

#[derive(Parser, Debug)]
#[command(
    name = "nhpp",
    about = "Bayesian fitting and variable selection for spatial Poisson process models",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct CommonOpts {
    /// JSON config file; command-line flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master random seed (required here or in the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for parallel fits and replicates.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory (created if missing).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Quadrature grid as NX,NY.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    /// Chain-length profile: sim2018, paper51, or paper52.
    #[arg(long)]
    profile: Option<String>,
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err("expected NX,NY".into());
    }
    let nx = parts[0].trim().parse().map_err(|_| "bad NX")?;
    let ny = parts[1].trim().parse().map_err(|_| "bad NY")?;
    if nx == 0 || ny == 0 {
        return Err("grid dimensions must be >= 1".into());
    }
    Ok((nx, ny))
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a data set from a scenario preset.
    Simulate {
        #[command(flatten)]
        common: CommonOpts,
        /// Scenario preset 1-4.
        #[arg(long)]
        preset: Option<u8>,
        /// Generation method: percell or thinning.
        #[arg(long)]
        method: Option<String>,
    },
    /// Fit one model and write its chain, summary, and criteria.
    Fit {
        #[command(flatten)]
        common: CommonOpts,
        /// Point-pattern CSV (header x,y).
        #[arg(long)]
        points: Option<PathBuf>,
    },
    /// Fit and rank a candidate set by DIC and LPML.
    Select {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        points: Option<PathBuf>,
    },
    /// Replicate a scenario study and emit the selection tables.
    Study {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        preset: Option<u8>,
        /// Number of replicates.
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long)]
        method: Option<String>,
    },
    /// Partition-refinement convergence check of the LPML estimator.
    Oracle {
        #[command(flatten)]
        common: CommonOpts,
        /// Use the built-in two-sample fixture.
        #[arg(long)]
        fixture: bool,
    },
}

fn parse_method(s: &str, grid: Option<(usize, usize)>) -> Result<SimMethod, Error> {
    match s {
        "percell" => {
            let (nx, ny) = grid.unwrap_or((100, 100));
            Ok(SimMethod::PerCell { nx, ny })
        }
        "thinning" => Ok(SimMethod::Thinning),
        other => Err(Error::Config(format!(
            "unknown method '{other}'; expected percell or thinning"
        ))),
    }
}

fn apply_mcmc_overrides(section: &mut McmcSection, common: &CommonOpts) {
    if let Some(p) = &common.profile {
        // The flag replaces the config's chain lengths wholesale.
        section.profile = Some(p.clone());
        section.n_iter = None;
        section.burn_in = None;
        section.thin = None;
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let common = match &cli.command {
        Command::Simulate { common, .. }
        | Command::Fit { common, .. }
        | Command::Select { common, .. }
        | Command::Study { common, .. }
        | Command::Oracle { common, .. } => common.clone(),
    };
    if let Some(jobs) = common.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    }

    match cli.command {
        Command::Simulate {
            common,
            preset,
            method,
        } => {
            let mut cfg: SimulateConfig = match &common.config {
                Some(path) => load_config(path)?,
                None => SimulateConfig {
                    preset: 0,
                    seed: None,
                    method: config::default_method(),
                    out_dir: None,
                },
            };
            if let Some(p) = preset {
                cfg.preset = p;
            }
            if let Some(s) = common.seed {
                cfg.seed = Some(s);
            }
            if let Some(d) = common.out_dir {
                cfg.out_dir = Some(d);
            }
            if let Some(m) = &method {
                cfg.method = parse_method(m, common.grid)?;
            } else if let Some((nx, ny)) = common.grid {
                if let SimMethod::PerCell { .. } = cfg.method {
                    cfg.method = SimMethod::PerCell { nx, ny };
                }
            }
            commands::cmd_simulate(cfg)
        }
        Command::Fit { common, points } => {
            let mut cfg: FitConfig = match &common.config {
                Some(path) => load_config(path)?,
                None => {
                    return Err(Error::Config(
                        "fit requires --config describing points, covariates, and model".into(),
                    ))
                }
            };
            apply_mcmc_overrides(&mut cfg.mcmc, &common);
            if let Some(p) = points {
                cfg.points = p;
            }
            if let Some(s) = common.seed {
                cfg.seed = Some(s);
            }
            if let Some(d) = common.out_dir {
                cfg.out_dir = Some(d);
            }
            if let Some(g) = common.grid {
                cfg.grid = Some(g);
            }
            commands::cmd_fit(cfg)
        }
        Command::Select { common, points } => {
            let mut cfg: SelectConfig =
                match &common.config {
                    Some(path) => load_config(path)?,
                    None => return Err(Error::Config(
                        "select requires --config describing points, covariates, and candidates"
                            .into(),
                    )),
                };
            apply_mcmc_overrides(&mut cfg.mcmc, &common);
            if let Some(p) = points {
                cfg.points = p;
            }
            if let Some(s) = common.seed {
                cfg.seed = Some(s);
            }
            if let Some(d) = common.out_dir {
                cfg.out_dir = Some(d);
            }
            if let Some(g) = common.grid {
                cfg.grid = Some(g);
            }
            commands::cmd_select(cfg)
        }
        Command::Study {
            common,
            preset,
            replicates,
            method,
        } => {
            let mut cfg: StudyConfig = match &common.config {
                Some(path) => load_config(path)?,
                None => StudyConfig {
                    preset: 0,
                    replicates: 0,
                    seed: None,
                    method: config::default_method(),
                    mcmc: McmcSection::default(),
                    out_dir: None,
                },
            };
            if let Some(p) = preset {
                cfg.preset = p;
            }
            if let Some(r) = replicates {
                cfg.replicates = r;
            }
            apply_mcmc_overrides(&mut cfg.mcmc, &common);
            if let Some(s) = common.seed {
                cfg.seed = Some(s);
            }
            if let Some(d) = common.out_dir {
                cfg.out_dir = Some(d);
            }
            if let Some(m) = &method {
                cfg.method = parse_method(m, common.grid)?;
            }
            if cfg.replicates == 0 {
                return Err(Error::Config(
                    "study needs --replicates >= 1 (or replicates in the config)".into(),
                ));
            }
            commands::cmd_study(cfg)
        }
        Command::Oracle { common, fixture } => {
            let mut cfg: OracleConfig = match &common.config {
                Some(path) => load_config(path)?,
                None => OracleConfig {
                    fixture: false,
                    points: None,
                    region: nhpp_core::Region::unit_square(),
                    covariates: Vec::new(),
                    model: Vec::new(),
                    prior: None,
                    mcmc: McmcSection::default(),
                    seed: None,
                    grid: None,
                    schedule: vec![25, 50, 100, 200],
                    out_dir: None,
                },
            };
            if fixture {
                cfg.fixture = true;
            }
            apply_mcmc_overrides(&mut cfg.mcmc, &common);
            if let Some(s) = common.seed {
                cfg.seed = Some(s);
            }
            if let Some(d) = common.out_dir {
                cfg.out_dir = Some(d);
            }
            if let Some(g) = common.grid {
                cfg.grid = Some(g);
            }
            commands::cmd_oracle(cfg)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::PointOutsideRegion { .. } => 2,
        Error::Numeric(_)
        | Error::Init(_)
        | Error::IntensityUnderflow { .. }
        | Error::ZeroIntensity { .. }
        | Error::PartitionOverflow { .. } => 3,
        Error::Io { .. } | Error::Parse { .. } => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
