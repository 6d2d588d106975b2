mod commands;
mod manifest;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(
    name = "nudge-nse",
    version,
    about = "Nudging data assimilation for 2D periodic Navier-Stokes"
)]
pub struct Cli {
    /// Worker threads for ensembles and sweeps.
    #[arg(long, global = true, env = "NUDGE_NSE_JOBS")]
    jobs: Option<usize>,
    /// error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Dotted-key override, e.g. --set solver.dt=0.002 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Directory receiving every output file.
    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,
    /// Replaces every sampling seed of the config (not the forcing seed).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Clone)]
pub struct ParamsArgs {
    #[arg(long)]
    pub grashof: f64,
    #[arg(long)]
    pub rho: f64,
    /// Check admissibility of this β instead of only advising.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Check the resolution condition for this h (needs --beta or uses β_min).
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub kappa0: f64,
    /// Constants as JSON, e.g. '{"c1_star": 2.0}'; omitted keys are 1.
    #[arg(long)]
    pub constants: Option<String>,
    /// H¹ stability constant of J entering the Type I ρ floors.
    #[arg(long, default_value_t = 1.0)]
    pub c_tilde1: f64,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = verify::Suite::All)]
    pub suite: verify::Suite,
    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone)]
pub struct InfoArgs {
    /// Snapshot container to describe; without it, prints build information.
    pub path: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the forced NSE (optionally after spin-up).
    Simulate(RunArgs),
    /// Nudge toward observations of a reference or twin truth.
    Assimilate(RunArgs),
    /// Decay of an ensemble of nudged solutions toward its truth ensemble.
    Ensemble(RunArgs),
    /// Advise β and h for given G and ρ.
    Params(ParamsArgs),
    /// Run the invariant suites.
    Verify(VerifyArgs),
    /// Describe a snapshot file or the build.
    Info(InfoArgs),
}

fn error_json(kind: &str, message: &str, extra: serde_json::Value) -> String {
    let mut e = json!({"kind": kind, "message": message});
    if let (Some(obj), Some(x)) = (e.as_object_mut(), extra.as_object()) {
        obj.extend(x.clone());
    }
    json!({ "error": e }).to_string()
}

fn describe(err: &anyhow::Error) -> String {
    if let Some(e) = err.downcast_ref::<nudge_nse::Error>() {
        let extra = match e {
            nudge_nse::Error::Config { key, .. } => json!({"key": key}),
            nudge_nse::Error::Member { index, .. } => json!({"member": index}),
            _ => json!({}),
        };
        return error_json(e.kind(), &e.to_string(), extra);
    }
    if let Some(v) = err.downcast_ref::<verify::SuiteFailed>() {
        return error_json("verify_failed", &v.to_string(), json!({"failed": v.failed}));
    }
    error_json("error", &format!("{err:#}"), json!({}))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            anyhow::bail!(nudge_nse::Error::InvalidArgument("--jobs must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global()?;
    }
    match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Assimilate(a) => commands::assimilate(&a),
        Command::Ensemble(a) => commands::ensemble(&a),
        Command::Params(a) => commands::params(&a),
        Command::Verify(a) => verify::run(&a),
        Command::Info(a) => commands::info(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            eprintln!("{}", error_json("usage", e.to_string().trim(), json!({})));
            return ExitCode::from(2);
        }
    };
    env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", describe(&e));
            ExitCode::FAILURE
        }
    }
}
