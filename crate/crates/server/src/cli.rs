//! `rcmctl`: simulate a script, compute metrics, or serve.
//!
//! Exit codes: 0 success, 1 usage, 2 invalid input, 3 runtime failure.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rcm_core::config::{Config, ConfigError};
use rcm_core::episode::{run_episode, EpisodeError};
use rcm_core::metrics::{
    episode_smoothness, rcm_deviation_series, render_text, write_table, EpisodeReport, MetricsError, SmoothnessOptions,
};
use rcm_core::record::{EpisodeRecord, RecordError};
use rcm_core::script::{CommandScript, ScriptError};

use crate::server::{serve, ServeOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "rcmctl", version, about = "RCM instrument simulator and control server")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a command script offline and write the episode CSV.
    Simulate(SimulateArgs),
    /// Deviation and smoothness report for one or more episode CSVs.
    Metrics(MetricsArgs),
    /// Start the control server.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub script: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Control period in seconds, overriding the config.
    #[arg(long)]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Table,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(required = true)]
    pub episodes: Vec<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Metric sample rate in Hz.
    #[arg(long, default_value_t = 5.0)]
    pub fs: f64,
    /// Use the recorded control rate instead of resampling.
    #[arg(long)]
    pub raw_rate_metrics: bool,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub format: ReportFormat,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub tcp_port: Option<u16>,
    #[arg(long)]
    pub ws_port: Option<u16>,
    /// Advance time only on `step` messages.
    #[arg(long)]
    pub test_mode: bool,
    #[arg(long)]
    pub dt: Option<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Script { path: PathBuf, source: ScriptError },
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error("{path}: {source}")]
    Metrics { path: PathBuf, source: MetricsError },
    #[error(transparent)]
    Episode(#[from] EpisodeError),
    #[error("{context}: {source}")]
    Io { context: String, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(ConfigError::Io { .. }) => EXIT_RUNTIME,
            CliError::Record(RecordError::Io { .. } | RecordError::Stream(_)) => EXIT_RUNTIME,
            CliError::Config(_) | CliError::Script { .. } | CliError::Record(_) | CliError::Metrics { .. } => {
                EXIT_INVALID
            }
            CliError::Episode(_) | CliError::Io { .. } => EXIT_RUNTIME,
        }
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

fn load_config(path: Option<&Path>, dt: Option<f64>) -> Result<Config, CliError> {
    let mut cfg = match path {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(dt) = dt {
        cfg.sim.dt = dt;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn simulate(args: &SimulateArgs) -> Result<EpisodeRecord, CliError> {
    let cfg = load_config(args.config.as_deref(), args.dt)?;
    let text = fs::read_to_string(&args.script).map_err(io_err(args.script.display().to_string()))?;
    let script: CommandScript =
        text.parse().map_err(|source| CliError::Script { path: args.script.clone(), source })?;
    let episode = run_episode(&script, &cfg.episode_setup())?;
    episode.write_csv_path(&args.out)?;
    Ok(episode)
}

pub fn metrics(args: &MetricsArgs) -> Result<Vec<EpisodeReport>, CliError> {
    let cfg = load_config(args.config.as_deref(), None)?;
    let opts = SmoothnessOptions { fs: (!args.raw_rate_metrics).then_some(args.fs), ..Default::default() };
    let mut reports = Vec::with_capacity(args.episodes.len());
    for path in &args.episodes {
        let episode = EpisodeRecord::read_csv_path(path)?;
        let wrap = |source| CliError::Metrics { path: path.clone(), source };
        reports.push(EpisodeReport {
            label: path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
            rows: episode.len(),
            duration_s: episode.duration(),
            deviation: rcm_deviation_series(&episode, &cfg.rcm.p_rcm, &cfg.calibration).map_err(wrap)?,
            smoothness: episode_smoothness(&episode, &opts).map_err(wrap)?,
            sparc_params: opts.sparc,
        });
    }
    Ok(reports)
}

fn write_report(args: &MetricsArgs, reports: &[EpisodeReport], out: &mut dyn Write) -> io::Result<()> {
    match args.format {
        ReportFormat::Text => out.write_all(render_text(reports).as_bytes()),
        ReportFormat::Table => write_table(reports, out).map_err(io::Error::other),
    }
}

fn run_serve(args: &ServeArgs) -> Result<(), CliError> {
    let mut cfg = load_config(args.config.as_deref(), args.dt)?;
    if let Some(p) = args.tcp_port {
        cfg.server.tcp_port = p;
    }
    if let Some(p) = args.ws_port {
        cfg.server.ws_port = p;
    }
    let opts = ServeOptions::from_config(&cfg, args.test_mode);
    let handle = serve(cfg, opts).map_err(io_err("starting server"))?;
    eprintln!(
        "listening: tcp {} ws ws://{}/ws",
        handle.tcp_addr(),
        handle.ws_addr().map(|a| a.to_string()).unwrap_or_default()
    );
    handle.wait();
    Ok(())
}

pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate(a) => {
            let ep = simulate(a)?;
            writeln!(stdout, "{} rows, {:.3} s -> {}", ep.len(), ep.duration(), a.out.display())
                .map_err(io_err("stdout"))?;
        }
        Command::Metrics(a) => {
            let reports = metrics(a)?;
            match &a.out {
                Some(path) => {
                    let mut f = fs::File::create(path).map_err(io_err(path.display().to_string()))?;
                    write_report(a, &reports, &mut f).map_err(io_err(path.display().to_string()))?;
                }
                None => write_report(a, &reports, stdout).map_err(io_err("stdout"))?,
            }
        }
        Command::Serve(a) => run_serve(a)?,
    }
    Ok(())
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli, &mut io::stdout().lock()) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
