//! Command-line driver: runs the configured experiments and writes their
//! outputs. See the crate documentation and README for the config schema.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use spinmqc::error::Result;
use spinmqc::experiment::{self, BackendChoice, ExperimentConfig, ExperimentResults};

#[derive(Parser)]
#[command(
    name = "spinmqc",
    version,
    about = "Growth and localization of correlated spin clusters, measured by \
             multiple-quantum coherence spectra"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration (defaults to the built-in 12-spin profile)
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (overrides the config)
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Coupling-realization seed (overrides the config)
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Propagator backend (overrides the config)
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendArg>,
    /// Spin count N (overrides the config)
    #[arg(long, global = true, value_name = "N")]
    spins: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Unperturbed cluster growth (p = 0)
    Growth,
    /// Cluster growth under each configured perturbation strength
    Localize,
    /// Convergence of prepared clusters toward the localized size
    Equilibrium,
    /// Localization sweep plus the K_loc(p) power-law fit
    Fit,
    /// Growth, localization, equilibrium, and the fit in one run
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Eigen,
    Trotter,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_toml_path(path)?,
        None => ExperimentConfig::default_profile(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.output.dir = out;
    }
    if let Some(backend) = cli.backend {
        cfg.backend = match backend {
            BackendArg::Eigen => BackendChoice::Eigen,
            BackendArg::Trotter => BackendChoice::Trotter,
        };
    }
    if let Some(n) = cli.spins {
        cfg.system.n_spins = n;
    }
    cfg.validate()?;

    let sys = experiment::build_system(&cfg)?;
    println!(
        "system: {} | N = {} | d_rms·tau0 = {:.4e} | backend = {:?}",
        sys.label,
        sys.n_spins,
        sys.rms_coupling() * cfg.schedule.tau0_s,
        cfg.backend
    );

    let results = match cli.command {
        Command::Growth => ExperimentResults {
            growth: Some(experiment::run_growth(&cfg)?),
            ..Default::default()
        },
        Command::Localize => ExperimentResults {
            localization: experiment::run_localization(&cfg)?,
            ..Default::default()
        },
        Command::Equilibrium => ExperimentResults {
            equilibrium: experiment::run_equilibrium(&cfg)?,
            ..Default::default()
        },
        Command::Fit => {
            let localization = experiment::run_localization(&cfg)?;
            let analysis =
                experiment::analyze_localization(&localization, &cfg.plateau_params())?;
            ExperimentResults {
                localization,
                analysis: Some(analysis),
                ..Default::default()
            }
        }
        Command::All => experiment::run_all(&cfg)?,
    };

    summarize(&results);
    let written = experiment::emit_outputs(&results, &cfg)?;
    println!("wrote {} files to {}", written.len(), cfg.output.dir.display());
    Ok(())
}

/// Prints a one-line digest per trace plus the fit, so a terminal run is
/// informative without opening the output files.
fn summarize(results: &ExperimentResults) {
    if let Some(trace) = &results.growth {
        if let Some(last) = trace.points.last() {
            println!("growth:      p = 0, K({}) = {:.3}", last.n_cycles, last.k);
        }
    }
    for trace in &results.localization {
        if let Some(last) = trace.points.last() {
            println!("localize:    p = {}, K({}) = {:.3}", trace.p, last.n_cycles, last.k);
        }
    }
    for trace in &results.equilibrium {
        let k0 = trace.points.first().map(|pt| pt.k).unwrap_or(f64::NAN);
        if let Some(last) = trace.points.last() {
            println!(
                "equilibrium: p = {}, N0 = {}, K0 = {:.3}, K({}) = {:.3}",
                trace.p, trace.n_prep_cycles, k0, last.n_cycles, last.k
            );
        }
    }
    if let Some(analysis) = &results.analysis {
        for s in &analysis.summaries {
            println!(
                "plateau:     p = {}, localized = {}, K_loc = {:.3}, slope = {:.4}",
                s.p, s.plateau.localized, s.plateau.k_loc, s.plateau.slope
            );
        }
        match &analysis.fit {
            Some(fit) => println!(
                "fit:         K_loc ~ p^({:.3} +/- {:.3}), prefactor {:.3}",
                fit.exponent, fit.exponent_stderr, fit.prefactor
            ),
            None => println!("fit:         skipped (fewer than 3 localized traces)"),
        }
    }
}
