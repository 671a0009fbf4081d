use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qkdsim::harness::{
    emit_replay, emit_report, run_experiment, run_replay, ExperimentConfig, OutputFormat, Overrides, ReplayFile,
};

/// Seeded simulator for BB84, SARG04, E91 and AGM06 key distribution.
///
/// Exit status: 0 key established (or replay continued), 2 session aborted
/// or no key, 1 usage or configuration error.
#[derive(Debug, Parser)]
#[command(name = "qkdsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the trials described by an experiment config.
    Run(RunArgs),
    /// Replay explicit bit and basis sequences through BB84.
    Replay(ReplayArgs),
    /// Check a config file without running it.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct Output {
    /// json-lines, csv or human.
    #[arg(long, value_parser = parse_format)]
    format: Option<OutputFormat>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's trial count.
    #[arg(long)]
    trials: Option<usize>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    /// Replay file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the replay file's seed.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Validate as a replay file instead of an experiment config.
    #[arg(long)]
    replay: bool,
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    s.parse::<OutputFormat>().map_err(|e| e.message)
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure(format!("cannot read {}: {e}", path.display())))
}

fn write_output(out: Option<&Path>, emit: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<(), Failure> {
    match out {
        Some(path) => {
            let mut buf = Vec::new();
            emit(&mut buf)?;
            fs::write(path, buf).map_err(|e| Failure(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            emit(&mut lock)?;
            lock.flush()?;
            Ok(())
        }
    }
}

fn run(args: RunArgs) -> Result<i32, Failure> {
    let mut config = ExperimentConfig::from_toml_str(&read(&args.config)?)?;
    config.apply(&Overrides {
        seed: args.seed,
        trials: args.trials,
        format: args.output.format,
    });
    let report = run_experiment(&config)?;
    write_output(args.output.out.as_deref(), |w| emit_report(&report, config.format, w))?;
    Ok(report.exit_code())
}

fn replay(args: ReplayArgs) -> Result<i32, Failure> {
    let mut file = ReplayFile::from_toml_str(&read(&args.config)?)?;
    if let Some(seed) = args.seed {
        file.seed = seed;
    }
    let report = run_replay(&file)?;
    let format = args.output.format.unwrap_or(OutputFormat::Human);
    write_output(args.output.out.as_deref(), |w| emit_replay(&report, format, w))?;
    Ok(report.exit_code())
}

fn validate(args: ValidateArgs) -> Result<i32, Failure> {
    let text = read(&args.config)?;
    if args.replay {
        let file = ReplayFile::from_toml_str(&text)?;
        println!("ok: replay of {} slots", file.plan()?.len());
    } else {
        let c = ExperimentConfig::from_toml_str(&text)?;
        println!(
            "ok: {} with {} slots, {} trial(s), adversary {}",
            c.protocol,
            c.slots,
            c.trials,
            c.adversary.name()
        );
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Replay(a) => replay(a),
        Command::Validate(a) => validate(a),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
