//! Command-line front end for the key-rate engine.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 for I/O errors.

pub mod config;
pub mod presets;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use cvqkd::nla::g_max;
use cvqkd::protocols::{key_rate, Detection, Protocol, Reconciliation};
use cvqkd::sweep::{max_distance, optimize_gain, sweep_curves, write_csv, SweepTemplate};
use thiserror::Error;

use crate::config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}", config_message(*line, message))]
    Config { line: Option<usize>, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn config_message(line: Option<usize>, message: &str) -> String {
    match line {
        Some(line) => format!("config line {line}: {message}"),
        None => format!("invalid configuration: {message}"),
    }
}

impl From<cvqkd::Error> for CliError {
    fn from(e: cvqkd::Error) -> Self {
        CliError::Config {
            line: None,
            message: e.to_string(),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Io { .. } => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "cvqkd", version, about = "Asymptotic CV-QKD key rates with noiseless linear amplifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Key rate at a single distance.
    Rate(CommonArgs),
    /// Key rate over a distance grid, as CSV.
    Sweep(CommonArgs),
    /// Largest distance with a positive effective key rate.
    MaxDistance(CommonArgs),
    /// Grid search for the amplifier gains maximizing the effective rate.
    Optimize(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// `key = value` configuration file.
    #[arg(long, value_name = "PATH", conflicts_with = "figure")]
    pub config: Option<PathBuf>,
    /// Bundled figure configuration.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(presets::FIGURES))]
    pub figure: Option<String>,
    /// Write the result here instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    pub dump_config: bool,
}

impl Command {
    fn args(&self) -> &CommonArgs {
        match self {
            Command::Rate(a) | Command::Sweep(a) | Command::MaxDistance(a) | Command::Optimize(a) => a,
        }
    }
}

pub fn load_config(args: &CommonArgs) -> Result<RunConfig, CliError> {
    if let Some(name) = &args.figure {
        return presets::preset(name);
    }
    match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Config {
                line: None,
                message: format!("cannot read {}: {source}", path.display()),
            })?;
            RunConfig::parse(&text)
        }
        None => Ok(RunConfig::default()),
    }
}

fn detection_label(d: Detection) -> &'static str {
    match d {
        Detection::Homodyne => "homodyne",
        Detection::Heterodyne => "heterodyne",
    }
}

pub fn cmd_rate(config: &RunConfig) -> Result<String, CliError> {
    let spec = config.spec()?;
    let result = key_rate(&spec)?;
    let template = config.template()?;
    let (l_alice, l_bob) = template.arm_lengths(config.distance_km);
    let mut out = String::new();
    let mut row = |key: &str, value: String| {
        let _ = writeln!(out, "{key:<22}{value}");
    };
    let protocol = match spec.protocol {
        Protocol::EntanglementInMiddle { .. } => "entanglement-in-middle",
        Protocol::UntrustedRelay { .. } => "untrusted-relay",
    };
    row("protocol", protocol.into());
    row(
        "detection",
        format!("{}/{}", detection_label(spec.detection_alice), detection_label(spec.detection_bob)),
    );
    row(
        "reconciliation",
        match spec.reconciliation {
            Reconciliation::Direct => "direct",
            Reconciliation::Reverse => "reverse",
        }
        .into(),
    );
    row("distance_km", config.distance_km.to_string());
    row("l_alice_km", l_alice.to_string());
    row("l_bob_km", l_bob.to_string());
    row("g_alice", spec.nla.alice().to_string());
    row("g_bob", spec.nla.bob().to_string());
    if let Some((ga, gb)) = result.relay_gains {
        row("relay_gain_alice", format!("{ga:.9e}"));
        row("relay_gain_bob", format!("{gb:.9e}"));
    }
    row("mutual_info_bits", format!("{:.9e}", result.mutual_info));
    row("holevo_bits", format!("{:.9e}", result.holevo));
    row("key_rate_raw", format!("{:.9e}", result.key_rate_raw));
    row("p_total", format!("{:.9e}", result.p_total));
    row("key_rate_effective", format!("{:.9e}", result.key_rate_effective));
    row("physical", if result.physical { "yes" } else { "no" }.into());
    Ok(out)
}

pub fn cmd_sweep(config: &RunConfig) -> Result<String, CliError> {
    let rows = sweep_curves(&config.template()?, &config.curves()?, &config.grid()?)?;
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).expect("writing to memory");
    Ok(String::from_utf8(buf).expect("CSV is ASCII"))
}

pub fn cmd_max_distance(config: &RunConfig) -> Result<String, CliError> {
    let template = config.template()?;
    let options = config.search_options();
    let mut out = String::from(
        "curve,g_alice,g_bob,max_distance_km,bracket_lo_km,bracket_hi_km,rate_lo,rate_hi,found,truncated\n",
    );
    for curve in config.curves()? {
        let t = SweepTemplate {
            spec: template.spec.with_nla(curve.nla),
            ..template
        };
        let m = max_distance(&t, options)?;
        let _ = writeln!(
            out,
            "{},{},{},{:.4},{:.4},{:.4},{:.9e},{:.9e},{},{}",
            curve.label,
            curve.nla.alice(),
            curve.nla.bob(),
            m.distance_km,
            m.bracket_km.0,
            m.bracket_km.1,
            m.bracket_rates.0,
            m.bracket_rates.1,
            u8::from(m.found),
            u8::from(m.truncated),
        );
    }
    Ok(out)
}

pub fn cmd_optimize(config: &RunConfig) -> Result<String, CliError> {
    let template = config.template()?;
    let opt = optimize_gain(&template, config.distance_km, config.loss_db_per_km, config.gain_search())?;
    let spec = template.spec_at(config.distance_km, config.loss_db_per_km)?;
    let mut out = String::new();
    let mut row = |key: &str, value: String| {
        let _ = writeln!(out, "{key:<22}{value}");
    };
    row("distance_km", config.distance_km.to_string());
    row("g_alice", format!("{:.4}", opt.g_alice));
    row("g_bob", format!("{:.4}", opt.g_bob));
    row("key_rate_effective", format!("{:.9e}", opt.key_rate_effective));
    row("g_max_alice", format!("{:.9e}", g_max(spec.channel_alice)));
    row("g_max_bob", format!("{:.9e}", g_max(spec.channel_bob)));
    row("search_limit_alice", format!("{:.9e}", opt.g_limit_alice));
    row("search_limit_bob", format!("{:.9e}", opt.g_limit_bob));
    row("evaluations", opt.evaluations.to_string());
    Ok(out)
}

/// Writes through a temporary file in the target directory, then renames it.
pub fn write_atomically(path: &Path, contents: &str) -> Result<(), CliError> {
    let io_error = |source| CliError::Io {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_error)?;
    tmp.write_all(contents.as_bytes()).map_err(io_error)?;
    tmp.persist(path).map_err(|e| io_error(e.error))?;
    Ok(())
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("cvqkd: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: &Command) -> Result<(), CliError> {
    let args = command.args();
    let config = load_config(args)?;
    let text = if args.dump_config {
        config.dump()
    } else {
        match command {
            Command::Rate(_) => cmd_rate(&config)?,
            Command::Sweep(_) => cmd_sweep(&config)?,
            Command::MaxDistance(_) => cmd_max_distance(&config)?,
            Command::Optimize(_) => cmd_optimize(&config)?,
        }
    };
    let destination = args.output.clone().or_else(|| config.output.as_ref().map(PathBuf::from));
    match destination {
        Some(path) => write_atomically(&path, &text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|()| stdout.flush())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}
