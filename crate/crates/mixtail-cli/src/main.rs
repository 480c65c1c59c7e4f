//! Command-line front end for the tail-bound toolkit. Exit codes: 0 success,
//! 2 validation/configuration error, 3 run completed but did not resolve
//! (failed certification, non-converged fit, unresolved Monte Carlo).

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use commands::Outcome;
use mixtail::Error;

#[derive(Parser)]
#[command(name = "mixtail-cli", version, about = "Tail bounds and experiments for V-/U-statistics of mixing series")]
struct Cli {
    /// Master seed (takes precedence over master_seed in the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker thread count. Accepted for interface stability; all results
    /// are computed with deterministic ordered reductions and are identical
    /// for every value.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Output directory for the JSON manifest and CSV artifacts.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Config file: TOML (default) or JSON by extension.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dotted-path overrides as `--key value` pairs, e.g. `--t 0.05`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the kernel catalog with its expansion constants (F, B, mu_a).
    Constants(CommonArgs),
    /// Expand a kernel and certify the sup error on a grid over many seeds.
    ExpandVerify(CommonArgs),
    /// Evaluate the exponential tail bounds over an x grid.
    TailBound(CommonArgs),
    /// Simulate an AR(1) path and write it as CSV.
    Simulate(CommonArgs),
    /// Run the Gumbel-calibrated multiple independence test on simulated pairs.
    IndepTest(CommonArgs),
    /// Tabulate moderate-deviation tail ratios for the Kendall statistic.
    MdpProbe(CommonArgs),
    /// Simulate partially-linear-model data and fit the penalized estimator.
    PlrFit(CommonArgs),
    /// Mean-squared-error rate study for the penalized estimator.
    RateStudy(CommonArgs),
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(run(cli));
}

/// The trailing override capture swallows everything after the subcommand,
/// including global flags; pull those back out so `--seed`, `--threads`, and
/// `--out` work in either position.
fn extract_globals(
    overrides: &[String],
) -> mixtail::Result<(Vec<String>, Option<u64>, Option<PathBuf>)> {
    let mut rest = Vec::with_capacity(overrides.len());
    let mut seed = None;
    let mut out = None;
    let mut it = overrides.iter();
    while let Some(key) = it.next() {
        match key.as_str() {
            "--seed" | "--threads" | "--out" => {
                let value = it.next().ok_or_else(|| {
                    Error::Config(format!("flag {key} is missing its value"))
                })?;
                match key.as_str() {
                    "--seed" => {
                        seed = Some(value.parse().map_err(|e| {
                            Error::Config(format!("invalid --seed {value}: {e}"))
                        })?)
                    }
                    "--out" => out = Some(PathBuf::from(value)),
                    // --threads is accepted and ignored: results are
                    // independent of the worker count by construction.
                    _ => {}
                }
            }
            _ => rest.push(key.clone()),
        }
    }
    Ok((rest, seed, out))
}

fn run(cli: Cli) -> i32 {
    let dispatch = |args: &CommonArgs, f: &dyn Fn(toml::Table, &std::path::Path) -> mixtail::Result<Outcome>| {
        let (overrides, seed, out) = extract_globals(&args.overrides)?;
        let seed = seed.or(cli.seed);
        let out = out.unwrap_or_else(|| cli.out.clone());
        let table = config::load(args.config.as_deref(), &overrides, seed)?;
        f(table, &out)
    };
    let result = match &cli.command {
        Command::Constants(a) => dispatch(a, &|t, out| {
            commands::constants(config::into_typed(t)?, out)
        }),
        Command::ExpandVerify(a) => dispatch(a, &|t, out| {
            commands::expand_verify(config::into_typed(t)?, out)
        }),
        Command::TailBound(a) => dispatch(a, &|t, out| {
            commands::tail_bound(config::into_typed(t)?, out)
        }),
        Command::Simulate(a) => dispatch(a, &|t, out| {
            commands::simulate(config::into_typed(t)?, out)
        }),
        Command::IndepTest(a) => dispatch(a, &|t, out| {
            commands::indep_test(config::into_typed(t)?, out)
        }),
        Command::MdpProbe(a) => dispatch(a, &|t, out| {
            commands::mdp_probe(config::into_typed(t)?, out)
        }),
        Command::PlrFit(a) => dispatch(a, &|t, out| {
            commands::plr_fit(config::into_typed(t)?, out)
        }),
        Command::RateStudy(a) => dispatch(a, &|t, out| {
            commands::rate_study(config::into_typed(t)?, out)
        }),
    };
    match result {
        Ok(Outcome::Success) => 0,
        Ok(Outcome::Inconclusive(msg)) => {
            eprintln!("inconclusive: {msg}");
            3
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::NonConverged(_) | Error::Resolution(_) => 3,
                _ => 2,
            }
        }
    }
}
