//! Command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mabeam_harness::config::KindSpec;
use mabeam_harness::output::{write_heatmap, write_montecarlo, write_robust, write_run};
use mabeam_harness::{
    heatmap, monte_carlo, robust, run_scenario, HarnessError, Result, ScenarioConfig, Scheme,
    OUT_DIR_ENV,
};

#[derive(Parser)]
#[command(
    name = "mabeam",
    version,
    about = "Movable-antenna near-field beamforming experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML scenario file; defaults apply to anything it omits.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory [default: $MABEAM_OUT_DIR or ./out].
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Scheme to run: proposed, construct, fpa, sa, as, pso, ff. Comma-separated for montecarlo.
    #[arg(long, global = true, value_delimiter = ',')]
    scheme: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Maximize the target gain while nulling the listed users.
    Null,
    /// Maximize the minimum gain over the target and the listed users.
    Multibeam,
    /// Closed-form layout for the configured scenario.
    Construct,
    /// Worst-case sum gain under bounded position errors.
    Robust,
    /// Gain map of the solved beam.
    Heatmap,
    /// Mean objective of each scheme over random user drops.
    Montecarlo {
        /// Overrides `montecarlo.trials`.
        #[arg(long)]
        trials: Option<usize>,
    },
}

fn single_scheme(common: &Common, default: Scheme) -> Result<Scheme> {
    match common.scheme.as_slice() {
        [] => Ok(default),
        [one] => one.parse(),
        _ => Err(HarnessError::Config(
            "this command takes a single --scheme".into(),
        )),
    }
}

fn out_dir(common: &Common) -> PathBuf {
    common
        .out_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn report(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn print_gains(label: &str, objective: f64, gains: &[f64]) {
    println!("{label}: objective {objective:.6}");
    for (i, g) in gains.iter().enumerate() {
        let who = if i == 0 {
            "target".to_string()
        } else {
            format!("user {i}")
        };
        println!("  {who}: gain {g:.6e}");
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let common = &cli.common;
    let mut config = match &common.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let dir = out_dir(common);
    let dir: &Path = &dir;
    match &cli.command {
        Command::Null | Command::Multibeam => {
            let (kind, prefix) = match cli.command {
                Command::Null => (KindSpec::Nulling, "null"),
                _ => (KindSpec::Multibeam, "multibeam"),
            };
            config.scenario = kind;
            config.validate()?;
            let rec = run_scenario(&config, single_scheme(common, Scheme::Proposed)?)?;
            print_gains(rec.scheme.name(), rec.objective, &rec.gains);
            report(&write_run(dir, prefix, &rec)?);
        }
        Command::Construct => {
            config.validate()?;
            let rec = run_scenario(&config, Scheme::Construct)?;
            print_gains("construct", rec.objective, &rec.gains);
            report(&write_run(dir, "construct", &rec)?);
        }
        Command::Robust => {
            config.validate()?;
            let study = robust(&config)?;
            for r in &study.rows {
                println!(
                    "eps/lambda {:.4}: approx {:.6e}, exact {:.6e}, gap {:.3} dB",
                    r.epsilon_over_lambda,
                    r.approx_sum_gain,
                    r.exact_sum_gain,
                    r.gap_db()
                );
            }
            report(&write_robust(dir, &study)?);
        }
        Command::Heatmap => {
            config.validate()?;
            let rec = run_scenario(&config, single_scheme(common, Scheme::Proposed)?)?;
            let map = heatmap(&rec, config.wavelength, &config.heatmap)?;
            if let Some((g, i, j)) = map.max() {
                println!("peak gain {g:.6} at row {i}, column {j}");
            }
            let mut paths = write_run(dir, "heatmap_run", &rec)?;
            paths.extend(write_heatmap(dir, "heatmap", &map)?);
            report(&paths);
        }
        Command::Montecarlo { trials } => {
            if let Some(t) = trials {
                config.montecarlo.trials = *t;
            }
            if !common.scheme.is_empty() {
                config.montecarlo.schemes = common.scheme.clone();
            }
            config.validate()?;
            let table = monte_carlo(
                &config,
                &config.montecarlo.drops(),
                &config.montecarlo.schemes()?,
            )?;
            for s in &table.summary {
                println!(
                    "{:>9}: mean {:.6} +/- {:.6} over {} trials",
                    s.scheme.name(),
                    s.mean,
                    s.std_err,
                    s.trials
                );
            }
            println!("redrawn degenerate drops: {}", table.redraws());
            report(&write_montecarlo(dir, &table)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
