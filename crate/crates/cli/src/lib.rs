//! Command-line front end: batch experiments, log analysis, replay and
//! the live-teaching server.

pub mod serve;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use gpc_core::env::{EnvConstants, EnvKind};
use gpc_core::error::{Error, Result};
use gpc_core::harness::{
    default_ablation, default_grid, read_runlog, replay_session, run_ablation, run_experiment, run_id, summarize,
    write_runlog, write_summary, AblationCase, Algorithm, EpisodeRow, ExperimentConfig, RunOptions,
};
use gpc_core::teach::SessionConfig;

#[derive(Debug, Parser)]
#[command(name = "gpc", version, about = "Learning control policies from corrective feedback")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one configuration over a list of seeds.
    Run(RunArgs),
    /// Aggregate run logs across seeds.
    Summarize(SummarizeArgs),
    /// Rebuild the model from a recorded step stream.
    Replay(ReplayArgs),
    /// Run the full benchmark suite.
    Grid(GridArgs),
    /// Serve live teaching sessions over WebSocket.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Experiment configuration file (TOML).
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Algorithm when no configuration file is given.
    #[arg(long)]
    pub algorithm: Option<Algorithm>,
    /// Environment when no configuration file is given.
    #[arg(long)]
    pub environment: Option<EnvKind>,
    /// Override a configuration value, e.g. `--set gpc.policy_std=0.2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Seeds as a list of values and ranges, e.g. `0..20` or `1,4,7..9`.
    #[arg(long, value_parser = parse_seeds)]
    pub seeds: Option<SeedList>,
    /// Environment constants file replacing the bundled one.
    #[arg(long)]
    pub constants: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output directory.
    #[arg(long, short, default_value = "results")]
    pub out: PathBuf,
    /// Worker threads (0: one per core).
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Also write per-seed step streams.
    #[arg(long)]
    pub streams: bool,
    /// Also write per-seed final model snapshots.
    #[arg(long)]
    pub snapshots: bool,
    /// Walking-mean window of the summary.
    #[arg(long, default_value_t = 3)]
    pub window: usize,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Ablation case when no configuration file is given.
    #[arg(long)]
    pub ablation: Option<AblationCase>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    /// Run logs to aggregate.
    #[arg(required = true)]
    pub logs: Vec<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub window: usize,
    /// Output file (stdout if absent).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Step stream written by `run --streams` or by a teaching session.
    pub stream: PathBuf,
    /// Write the rebuilt model snapshot here.
    #[arg(long)]
    pub snapshot_out: Option<PathBuf>,
    /// Fail unless the rebuilt model equals this snapshot byte for byte.
    #[arg(long)]
    pub expect: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Override applied to every cell, e.g. `--set episodes=10`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long, value_parser = parse_seeds)]
    pub seeds: Option<SeedList>,
    /// Restrict to these algorithms.
    #[arg(long, value_delimiter = ',')]
    pub algorithms: Vec<Algorithm>,
    /// Restrict to these environments.
    #[arg(long, value_delimiter = ',')]
    pub environments: Vec<EnvKind>,
    /// Skip the active-learning study.
    #[arg(long, conflicts_with = "ablation_only")]
    pub no_ablation: bool,
    /// Run only the active-learning study.
    #[arg(long)]
    pub ablation_only: bool,
    #[arg(long)]
    pub constants: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8765")]
    pub bind: String,
    /// Session defaults for clients whose handshake carries no configuration.
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Environment reset seed of default sessions.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Steps per second of default sessions.
    #[arg(long, default_value_t = 20.0)]
    pub rate: f64,
    /// Directory for step streams of every session.
    #[arg(long)]
    pub stream_dir: Option<PathBuf>,
    /// Directory for model snapshots of every session.
    #[arg(long)]
    pub snapshot_dir: Option<PathBuf>,
    /// Snapshot every this many episodes (0: only when a session ends).
    #[arg(long, default_value_t = 0)]
    pub snapshot_every: u32,
}

/// A parsed `--seeds` value; the alias keeps clap from treating it as a
/// multi-valued argument.
pub type SeedList = Vec<u64>;

/// Parses `0..20`, `3` and comma-separated mixtures of both.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let bad = || Error::Usage(format!("invalid seed list '{text}'"));
    let mut seeds = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once("..") {
            Some((lo, hi)) => {
                let lo: u64 = lo.trim().parse().map_err(|_| bad())?;
                let hi: u64 = hi.trim().parse().map_err(|_| bad())?;
                if hi <= lo {
                    return Err(bad());
                }
                seeds.extend(lo..hi);
            }
            None => seeds.push(part.parse().map_err(|_| bad())?),
        }
    }
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

fn load_constants(path: Option<&Path>) -> Result<EnvConstants> {
    match path {
        Some(p) => EnvConstants::from_toml(&read_text(p)?),
        None => Ok(EnvConstants::default()),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Usage(format!("cannot read {}: {e}", path.display())))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Usage(format!("cannot open {}: {e}", path.display())))
}

impl ExperimentArgs {
    /// Builds the configuration from the file or the defaults, then applies
    /// overrides and the seed list.
    pub fn resolve(&self, ablation: Option<AblationCase>) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, self.algorithm, self.environment) {
            (Some(path), None, None) => ExperimentConfig::from_toml(&read_text(path)?)?,
            (Some(_), _, _) => {
                return Err(Error::Usage("--algorithm/--environment cannot be combined with --config".into()))
            }
            (None, Some(alg), Some(env)) => match ablation {
                Some(case) if case != AblationCase::None => ExperimentConfig::ablation_defaults(alg, env, case),
                _ => ExperimentConfig::defaults(alg, env),
            },
            (None, _, _) => return Err(Error::Usage("give --config, or both --algorithm and --environment".into())),
        };
        if let (Some(_), Some(case)) = (&self.config, ablation) {
            cfg.ablation = case;
        }
        if let Some(seeds) = &self.seeds {
            cfg.seeds = seeds.clone();
        }
        if !self.overrides.is_empty() {
            cfg = cfg.with_overrides(&self.overrides)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl OutputArgs {
    fn options(&self) -> RunOptions {
        RunOptions {
            threads: self.threads,
            stream_dir: self.streams.then(|| self.out.join("streams")),
            snapshot_dir: self.snapshots.then(|| self.out.join("snapshots")),
        }
    }

    fn write_results(&self, name: &str, rows: &[EpisodeRow], out: &mut dyn Write) -> Result<()> {
        fs::create_dir_all(&self.out)?;
        let log = self.out.join(format!("{name}.runlog.csv"));
        write_runlog(BufWriter::new(File::create(&log)?), rows)?;
        writeln!(out, "wrote {}", log.display())?;
        if !rows.is_empty() {
            let summary = self.out.join(format!("{name}.summary.csv"));
            write_summary(BufWriter::new(File::create(&summary)?), &summarize(rows, self.window)?)?;
            writeln!(out, "wrote {}", summary.display())?;
        }
        Ok(())
    }
}

/// Executes a parsed command line, writing progress to `out`.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Run(args) => cmd_run(args, out),
        Command::Summarize(args) => cmd_summarize(args, out),
        Command::Replay(args) => cmd_replay(args, out),
        Command::Grid(args) => cmd_grid(args, out),
        Command::Serve(args) => cmd_serve(args, out),
    }
}

fn cmd_run(args: RunArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = args.experiment.resolve(args.ablation)?;
    let constants = load_constants(args.experiment.constants.as_deref())?;
    let rows = run_experiment(&cfg, &constants, &args.output.options())?;
    args.output.write_results(&run_id(&cfg), &rows, out)
}

fn cmd_summarize(args: SummarizeArgs, out: &mut dyn Write) -> Result<()> {
    let mut rows = Vec::new();
    for path in &args.logs {
        rows.extend(read_runlog(open(path)?)?);
    }
    let summary = summarize(&rows, args.window)?;
    match &args.out {
        Some(path) => {
            write_summary(BufWriter::new(File::create(path)?), &summary)?;
            writeln!(out, "wrote {}", path.display())?;
            Ok(())
        }
        None => write_summary(out, &summary),
    }
}

fn cmd_replay(args: ReplayArgs, out: &mut dyn Write) -> Result<()> {
    let replay = replay_session(open(&args.stream)?)?;
    let snapshot = replay.learner.snapshot_string()?;
    let (policy, human) = replay.learner.sizes();
    writeln!(
        out,
        "replayed {} steps: {} model updates, sizes {policy}/{human}, {} action mismatches",
        replay.steps,
        replay.learner.mutations(),
        replay.action_mismatches
    )?;
    if let Some(path) = &args.snapshot_out {
        fs::write(path, &snapshot)?;
        writeln!(out, "wrote {}", path.display())?;
    }
    if let Some(path) = &args.expect {
        if read_text(path)? != snapshot {
            return Err(Error::Usage(format!("replayed model differs from {}", path.display())));
        }
        writeln!(out, "model matches {}", path.display())?;
    }
    Ok(())
}

fn cmd_grid(args: GridArgs, out: &mut dyn Write) -> Result<()> {
    let constants = load_constants(args.constants.as_deref())?;
    let adjust = |mut cfg: ExperimentConfig| -> Result<ExperimentConfig> {
        if let Some(seeds) = &args.seeds {
            cfg.seeds = seeds.clone();
        }
        if args.overrides.is_empty() {
            Ok(cfg)
        } else {
            cfg.with_overrides(&args.overrides)
        }
    };
    let keep = |cfg: &ExperimentConfig| {
        (args.algorithms.is_empty() || args.algorithms.contains(&cfg.algorithm))
            && (args.environments.is_empty() || args.environments.contains(&cfg.environment))
    };
    let opts = args.output.options();
    let mut rows = Vec::new();
    if !args.ablation_only {
        for cfg in default_grid().into_iter().filter(keep) {
            let cfg = adjust(cfg)?;
            writeln!(out, "running {}", run_id(&cfg))?;
            rows.extend(run_experiment(&cfg, &constants, &opts)?);
        }
    }
    if !args.no_ablation {
        let base = adjust(default_ablation())?;
        writeln!(out, "running active-learning study on {}", base.environment)?;
        rows.extend(run_ablation(&base, &constants, &opts)?);
    }
    args.output.write_results("grid", &rows, out)
}

fn cmd_serve(args: ServeArgs, out: &mut dyn Write) -> Result<()> {
    let experiment = match (&args.experiment.config, args.experiment.algorithm, args.experiment.environment) {
        (None, None, None) => ExperimentArgs {
            algorithm: Some(Algorithm::GpcCs),
            environment: Some(EnvKind::Pendulum),
            config: None,
            overrides: args.experiment.overrides.clone(),
            seeds: None,
            constants: None,
        }
        .resolve(None)?,
        _ => args.experiment.resolve(None)?,
    };
    let mut session = SessionConfig::new("session", experiment);
    session.seed = args.seed;
    session.steps_per_second = args.rate;
    session.snapshot_every = args.snapshot_every;
    session.validate()?;
    let opts = serve::ServeOptions {
        session,
        constants: load_constants(args.experiment.constants.as_deref())?,
        stream_dir: args.stream_dir,
        snapshot_dir: args.snapshot_dir,
    };
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(async {
        let server = serve::Server::bind(&args.bind, opts).await?;
        writeln!(out, "listening on ws://{}", server.local_addr()?)?;
        out.flush()?;
        server.run().await
    })
}

/// Runs the command line and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let stdout = io::stdout();
    match execute(cli, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("0..3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("5, 1..3,9").unwrap(), vec![5, 1, 2, 9]);
        assert!(parse_seeds("3..3").is_err());
        assert!(parse_seeds("x").is_err());
        assert!(parse_seeds("").is_err());
    }
}
