//! `stabilab` command-line driver.
//!
//! Errors are printed to stderr as one JSON object and the process exits
//! with status 2. `validate` exits with status 1 when the config has
//! violations.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use stabilab_core::{validate_config, run_experiment, Error, ExperimentConfig, ExperimentKind, Overrides};

/// Environment variable overriding the worker count.
const WORKERS_ENV: &str = "STABILAB_WORKERS";

#[derive(Parser)]
#[command(name = "stabilab", version, about = "Utility maximization stability experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run(RunArgs),
    /// Check a config file and list every violation.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compare the affine moment oracle against simulation.
    OracleCheck(OracleArgs),
}

#[derive(Args)]
struct ScalarFlags {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    paths: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    steps: Option<i64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl ScalarFlags {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            paths: self.paths,
            steps: self.steps,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    flags: ScalarFlags,
}

#[derive(Args)]
struct OracleArgs {
    /// Optional config; its kind is replaced by `oracle-check`.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    flags: ScalarFlags,
}

fn error_record(e: &Error) -> serde_json::Value {
    let mut rec = json!({ "error": e.code(), "message": e.to_string() });
    if let Error::Config(v) = e {
        rec["violations"] = serde_json::to_value(v).expect("violations serialize");
    }
    rec
}

fn load(path: &Path) -> Result<(ExperimentConfig, String), Error> {
    let text = std::fs::read_to_string(path)?;
    Ok((ExperimentConfig::parse(&text)?, text))
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn execute(mut cfg: ExperimentConfig, text: &str, base: &Path, flags: &ScalarFlags) -> Result<(), Error> {
    flags.overrides().apply(&mut cfg);
    let manifest = run_experiment(&cfg, text, base, &flags.out)?;
    for o in &manifest.outputs {
        println!("{}", flags.out.join(&o.file).display());
    }
    println!("{}", flags.out.join("manifest.json").display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Run(args) => {
            let (cfg, text) = load(&args.config)?;
            execute(cfg, &text, &base_dir(&args.config), &args.flags)?;
        }
        Command::Validate { config } => {
            let (cfg, _) = load(&config)?;
            let violations = validate_config(&cfg);
            println!("{}", json!({ "valid": violations.is_empty(), "violations": violations }));
            if !violations.is_empty() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::OracleCheck(args) => {
            let (mut cfg, text, base) = match &args.config {
                Some(p) => {
                    let (c, t) = load(p)?;
                    (c, t, base_dir(p))
                }
                None => {
                    let c = ExperimentConfig::minimal(ExperimentKind::OracleCheck);
                    let t = c.to_toml();
                    (c, t, PathBuf::new())
                }
            };
            cfg.kind = ExperimentKind::OracleCheck;
            execute(cfg, &text, &base, &args.flags)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Some(n) = std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not set worker count: {e}");
        }
    }
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", error_record(&e));
            ExitCode::from(2)
        }
    }
}
