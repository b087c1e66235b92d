use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use qnet_core::ratemodels::linspace;
use qnet_core::scenarios::{self, Dim, Report, ScenarioConfig, ScenarioKind};

use crate::config_io::{apply_override, parse_unvalidated, validate_located};
use crate::error::CliError;
use crate::output::emit_outputs;
use crate::units::{dim_name, parse_quantity};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "QNET_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "qnet-out";

#[derive(Debug, Parser)]
#[command(
    name = "qnet",
    version,
    about = "Satellite relay and repeater link simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write its report.
    Run(ScenarioArgs),
    /// Run a seeded ensemble.
    Mc {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        trials: usize,
    },
    /// Run the scenario once per value of one parameter.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Dotted parameter path, e.g. total_distance.
        #[arg(long)]
        param: String,
        /// Comma-separated values with units, e.g. "1000 km,2000 km".
        #[arg(long, conflicts_with_all = ["from", "to", "points"])]
        values: Option<String>,
        #[arg(long, requires_all = ["to", "points"])]
        from: Option<String>,
        #[arg(long)]
        to: Option<String>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// List the built-in presets.
    Presets,
    /// Check a configuration without running it.
    Validate(ScenarioArgs),
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    #[arg(long, conflicts_with = "config")]
    pub preset: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a field: path=value (repeatable).
    #[arg(long = "set", value_name = "PATH=VALUE")]
    pub overrides: Vec<String>,
    /// Output directory (default: $QNET_OUT_DIR, then ./qnet-out).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(short, long, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

fn load(args: &ScenarioArgs) -> Result<ScenarioConfig, CliError> {
    let (mut cfg, text) = match (&args.preset, &args.config) {
        (Some(name), None) => {
            let cfg = scenarios::preset(name).map_err(|e| CliError::Invalid {
                field: "preset".into(),
                reason: e.to_string(),
                at: None,
            })?;
            (cfg, String::new())
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            (parse_unvalidated(&text)?, text)
        }
        _ => {
            return Err(CliError::Usage(
                "give exactly one of --preset or --config".into(),
            ))
        }
    };
    for o in &args.overrides {
        apply_override(&mut cfg, o)?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    validate_located(&cfg, &text)?;
    Ok(cfg)
}

fn out_dir(args: &ScenarioArgs) -> PathBuf {
    args.out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn sweep_grid(
    param: &str,
    values: &Option<String>,
    from: &Option<String>,
    to: &Option<String>,
    points: Option<usize>,
) -> Result<Vec<f64>, CliError> {
    let def = scenarios::field(param).map_err(|_| CliError::UnknownKey {
        key: param.into(),
        at: None,
    })?;
    let q = |s: &str| {
        let dim = if def.dim == Dim::Seed {
            Dim::Count
        } else {
            def.dim
        };
        parse_quantity(s, dim).map_err(|_| CliError::UnitMismatch {
            field: param.into(),
            expected: dim_name(def.dim),
            found: format!("\"{}\"", s.trim()),
            at: None,
        })
    };
    match (values, from, to, points) {
        (Some(v), None, None, None) => v.split(',').map(q).collect(),
        (None, Some(a), Some(b), Some(n)) => {
            if n < 1 {
                return Err(CliError::Usage("--points must be at least 1".into()));
            }
            Ok(linspace(q(a)?, q(b)?, n))
        }
        _ => Err(CliError::Usage(
            "give --values or all of --from, --to, --points".into(),
        )),
    }
}

fn summary(report: &Report) -> String {
    let mut parts = vec![report.scenario.name().to_string()];
    if let Some(b) = report.budgets.first() {
        parts.push(format!("total = {:.2} dB", b.total));
    }
    if let Some(r) = report.results.first() {
        parts.push(format!("{} = {:.4e} {}", r.name, r.value, r.unit));
    }
    parts.join(", ")
}

fn finish(report: &Report, args: &ScenarioArgs, mode: &str) -> Result<(), CliError> {
    let dir = out_dir(args);
    let files = emit_outputs(report, &dir, mode)?;
    println!("{}", summary(report));
    if args.verbose > 0 {
        for n in &report.notes {
            eprintln!("note: {n}");
        }
        eprintln!("wrote {} files to {}", files.len(), dir.display());
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => {
            let cfg = load(&args)?;
            let report = scenarios::run_scenario(&cfg)?;
            finish(&report, &args, "run")
        }
        Command::Mc { scenario, trials } => {
            if trials == 0 {
                return Err(CliError::Usage("--trials must be at least 1".into()));
            }
            let cfg = load(&scenario)?;
            let report = scenarios::monte_carlo(&cfg, trials, cfg.seed)?;
            finish(&report, &scenario, "mc")
        }
        Command::Sweep {
            scenario,
            param,
            values,
            from,
            to,
            points,
        } => {
            let grid = sweep_grid(&param, &values, &from, &to, points)?;
            let cfg = load(&scenario)?;
            let report = scenarios::sweep(&cfg, &param, &grid)?;
            finish(&report, &scenario, "sweep")
        }
        Command::Presets => {
            for k in ScenarioKind::ALL {
                println!("{:<22}{}", k.name(), k.description());
            }
            Ok(())
        }
        Command::Validate(args) => {
            let cfg = load(&args)?;
            println!("ok {} {}", cfg.kind.name(), scenarios::config_hash(&cfg));
            Ok(())
        }
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.tag());
            e.exit_code()
        }
    }
}
