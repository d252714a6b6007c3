//! Command-line entry point: audits, simulations, Monte Carlo analyses,
//! split planning, and configuration lints over engagement ledgers.

mod commands;
mod config;
mod csvio;
mod errors;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use adparity_core::intervention::SplitVariant;
use clap::{Parser, Subcommand};

use crate::commands::audit::AuditArgs;
use crate::commands::montecarlo::MonteCarloArgs;
use crate::commands::plan::PlanArgs;
use crate::commands::simulate::SimulateArgs;
use crate::config::{AuditSection, Issues, MonteCarloParams, MonteCarloSection};
use crate::errors::{CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "adparity",
    version,
    about = "Audit, simulate, and rebalance demographic skew in ad delivery"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Skew estimates, parity verdicts, and funnel rates over a ledger CSV
    Audit {
        /// Engagement ledger in the canonical CSV schema
        #[arg(long)]
        input: PathBuf,
        /// Optional scenario config supplying [audit] defaults
        #[arg(long)]
        config: Option<PathBuf>,
        /// Confidence level (default 0.99)
        #[arg(long)]
        level: Option<f64>,
        /// Aggregation window: daily, weekly, or whole (default weekly)
        #[arg(long)]
        window: Option<String>,
        /// Focal group: male or female (default male)
        #[arg(long)]
        focal: Option<String>,
        /// Pre-intervention skew; enables the scaled reach delta
        #[arg(long)]
        baseline_skew: Option<f64>,
        /// Report directory (default .)
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run the all-users baseline plus each configured split variant
    Simulate {
        /// Scenario config (market, campaign, intervention, run sections)
        #[arg(long)]
        config: PathBuf,
        /// Overrides [run].seed
        #[arg(long)]
        seed: Option<u64>,
        /// Confidence level for skew tables (default 0.99)
        #[arg(long)]
        level: Option<f64>,
        /// Skew series window: daily, weekly, or whole (default weekly)
        #[arg(long)]
        window: Option<String>,
        /// Report directory (default [output].directory, then .)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Unknown-user skew uncertainty under configurable priors
    Montecarlo {
        /// Optional scenario config supplying [montecarlo] settings
        #[arg(long)]
        config: Option<PathBuf>,
        /// Ledger whose per-label impression sums become the observed counts
        #[arg(long)]
        input: Option<PathBuf>,
        /// Draws per prior (default 1000)
        #[arg(long)]
        draws: Option<u64>,
        /// Overrides [montecarlo].seed
        #[arg(long)]
        seed: Option<u64>,
        /// Report directory (default [output].directory, then .)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Construct a budget-split plan document from a scenario config
    Plan {
        /// Scenario config (campaign and intervention sections)
        #[arg(long)]
        config: PathBuf,
        /// all_users, direct_split, or unknown_aware_split
        /// (default: first configured split variant)
        #[arg(long)]
        variant: Option<String>,
        /// Report directory (default [output].directory, then .)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Advisory checklist over a scenario config
    Lint {
        /// Scenario config to check; clean configs print nothing
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            err.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Audit {
            input,
            config,
            level,
            window,
            focal,
            baseline_skew,
            out,
        } => {
            let (section, config_sha256) = match config {
                Some(path) => {
                    let (cfg, digest) = config::load_config(&path)?;
                    (cfg.audit.unwrap_or_default(), Some(digest))
                }
                None => (AuditSection::default(), None),
            };
            let merged = AuditSection {
                level: level.or(section.level),
                window: window.or(section.window),
                focal: focal.or(section.focal),
                baseline_skew: baseline_skew.or(section.baseline_skew),
            };
            let mut issues = Issues::default();
            let params = config::validated_audit(&mut issues, &merged);
            let params = issues.into_result(params)?;
            commands::audit::run(&AuditArgs {
                input,
                out_dir: out,
                params,
                config_sha256,
            })
        }
        Command::Simulate {
            config,
            seed,
            level,
            window,
            out,
        } => {
            let (mut cfg, digest) = config::load_config(&config)?;
            let section = cfg.audit.take().unwrap_or_default();
            cfg.audit = Some(AuditSection {
                level: level.or(section.level),
                window: window.or(section.window),
                focal: section.focal,
                baseline_skew: section.baseline_skew,
            });
            let inputs = config::simulate_inputs(&cfg)?;
            let seed = seed.unwrap_or(inputs.run.seed);
            let out_dir = out
                .or_else(|| inputs.output_dir.clone().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("."));
            commands::simulate::run(&SimulateArgs {
                inputs,
                seed,
                out_dir,
                config_sha256: digest,
            })
        }
        Command::Montecarlo {
            config,
            input,
            draws,
            seed,
            out,
        } => {
            let (mut params, config_sha256, configured_out) = match config {
                Some(path) => {
                    let (cfg, digest) = config::load_config(&path)?;
                    let mut issues = Issues::default();
                    let params = match &cfg.montecarlo {
                        Some(section) => config::validated_montecarlo(&mut issues, section),
                        None => default_montecarlo_params(),
                    };
                    let configured_out = cfg
                        .output
                        .as_ref()
                        .and_then(|section| config::validated_output(&mut issues, section));
                    let params = issues.into_result(params)?;
                    (params, Some(digest), configured_out)
                }
                None => (default_montecarlo_params(), None, None),
            };
            if let Some(draws) = draws {
                params.draws = draws;
            }
            if let Some(seed) = seed {
                params.seed = seed;
            }
            if params.draws == 0 {
                return Err(CliError::Validation("--draws must be at least 1".into()));
            }
            let out_dir = out
                .or_else(|| configured_out.map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("."));
            commands::montecarlo::run(&MonteCarloArgs {
                params,
                input,
                out_dir,
                config_sha256,
            })
        }
        Command::Plan {
            config,
            variant,
            out,
        } => {
            let (cfg, digest) = config::load_config(&config)?;
            let inputs = config::plan_inputs(&cfg)?;
            let variant = match variant {
                Some(name) => config::parse_variant(&name)
                    .map_err(|e| CliError::Validation(format!("--variant: {e}")))?,
                None => inputs
                    .intervention
                    .split_variants
                    .first()
                    .copied()
                    .unwrap_or(SplitVariant::UnknownAwareSplit),
            };
            let out_dir = out
                .or_else(|| inputs.output_dir.clone().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("."));
            commands::plan::run(&PlanArgs {
                inputs,
                variant,
                out_dir,
                config_sha256: digest,
            })
        }
        Command::Lint { config } => {
            let (cfg, _) = config::load_config(&config)?;
            commands::lint::run(&cfg)
        }
    }
}

/// The [montecarlo] section's serde defaults, for runs without a config.
fn default_montecarlo_params() -> MonteCarloParams {
    let section: MonteCarloSection =
        toml::from_str("").expect("every montecarlo field has a default");
    let mut issues = Issues::default();
    let params = config::validated_montecarlo(&mut issues, &section);
    debug_assert!(issues.is_empty());
    params
}
