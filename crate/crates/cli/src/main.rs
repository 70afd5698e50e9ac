//! `leobf`: run beamforming sweeps and write CSV/SVG results.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use leobf::config::{load_config, SystemConfig};
use leobf::experiment::{emit_outputs, run_experiment, ExperimentSpec, SweepVar};
use leobf::pipeline::Scheme;

#[derive(Debug, Parser)]
#[command(name = "leobf", version, about = "Networked LEO satellite beamforming sweeps")]
struct Args {
    /// System configuration (TOML). Defaults to the built-in reference system.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Sweep as `var=v1,v2,...` with var one of power_dbm, antennas, rfc, sats, uts.
    #[arg(long)]
    sweep: Option<String>,

    /// Comma-separated schemes: central, ring, star, mrt, zf, wmmse_s3, mrt_s3, zf_s3.
    #[arg(long, default_value = "central,ring,star,mrt,zf,wmmse_s3,mrt_s3,zf_s3")]
    schemes: String,

    /// Number of seeds, counted up from the configured rng_seed.
    #[arg(long, default_value_t = 10)]
    seeds: usize,

    /// Evaluated subcarriers; rates are scaled up to all subcarriers.
    #[arg(long = "k-eval", default_value_t = 1)]
    k_eval: usize,

    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Write 0 in the wall_ms column so repeated runs are byte-identical.
    #[arg(long)]
    no_timing: bool,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

fn parse_sweep(text: Option<&str>) -> Result<(SweepVar, Vec<f64>)> {
    let Some(text) = text else {
        return Ok((SweepVar::None, Vec::new()));
    };
    let (var, values) = text.split_once('=').context("--sweep expects var=v1,v2,...")?;
    let var: SweepVar = var.parse()?;
    if var == SweepVar::None {
        return Ok((var, Vec::new()));
    }
    let values = values
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .with_context(|| format!("bad sweep value '{v}'"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((var, values))
}

fn parse_schemes(text: &str) -> Result<Vec<Scheme>> {
    let schemes = text
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse::<Scheme>().map_err(anyhow::Error::from))
        .collect::<Result<Vec<_>>>()?;
    if schemes.is_empty() {
        bail!("no schemes given");
    }
    Ok(schemes)
}

fn run(args: Args) -> Result<bool> {
    let base = match &args.config {
        Some(p) => load_config(p).with_context(|| format!("loading {}", p.display()))?,
        None => SystemConfig::reference(),
    };
    let (sweep_var, sweep_values) = parse_sweep(args.sweep.as_deref())?;
    let spec = ExperimentSpec {
        base,
        sweep_var,
        sweep_values,
        schemes: parse_schemes(&args.schemes)?,
        num_seeds: args.seeds,
        k_eval: args.k_eval,
        record_timing: !args.no_timing,
    };
    let table = run_experiment(&spec)?;
    let files = emit_outputs(&table, &args.out)?;
    log::info!("wrote {} files to {}", files.len(), args.out.display());
    let failed = table.rows.iter().filter(|r| !r.ok()).count();
    if failed > 0 {
        eprintln!("{failed} of {} cells failed; see status column", table.rows.len());
    }
    Ok(failed == 0)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let level = match args.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
