use std::path::PathBuf;
use std::process::ExitCode;

use amn_cli::commands::{self, EvalArgs, GenerateArgs, MatchArgs, OracleArgs, Preset, TrainArgs};
use amn_cli::eval::Baseline;
use amn_core::ir::Format;
use amn_core::matcher::SearchMode;
use amn_model::Ablation;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "amn", version, about = "Analogical matching network harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Dot,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Format {
        match f {
            OutFormat::Json => Format::Json,
            OutFormat::Dot => Format::Dot,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Greedy,
}

#[derive(Clone, Copy, ValueEnum)]
enum Ablate {
    NoSigNorm,
    NoSigGraph,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset (JSONL).
    Generate {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "default")]
        preset: Preset,
        /// TOML config whose [generator] section replaces the preset.
        #[arg(long, conflicts_with = "preset")]
        params: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model and write a checkpoint.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        batch: Option<usize>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        ablate: Option<Ablate>,
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long, default_value_t = 100)]
        log_every: u64,
    },
    /// Match two graphs with a trained model.
    Match {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long, default_value_t = 16)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "json")]
        format: OutFormat,
    },
    /// Match two graphs with the symbolic matcher.
    Oracle {
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long, value_enum, default_value = "exact")]
        mode: Mode,
        #[arg(long, value_enum, default_value = "json")]
        format: OutFormat,
    },
    /// Evaluate a checkpoint (or the exact matcher) on a dataset.
    Eval {
        #[arg(long, required_unless_present = "oracle_only")]
        ckpt: Option<PathBuf>,
        #[arg(long, conflicts_with = "ckpt")]
        oracle_only: bool,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 8)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "gold")]
        baseline: Baseline,
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Finite-difference gradient checks of every primitive and model stage.
    Gradcheck,
}

fn run(cmd: Command) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    match cmd {
        Command::Generate { n, seed, preset, params, out: path } => {
            commands::generate(&GenerateArgs { n, seed, preset, params, out: path }, &mut out)
        }
        Command::Train { data, config, steps, batch, lambda, lr, seed, ablate, ckpt, log_every } => {
            let ablate = ablate.map(|a| match a {
                Ablate::NoSigNorm => Ablation::NoSigNorm,
                Ablate::NoSigGraph => Ablation::NoSigGraph,
            });
            commands::train(
                &TrainArgs { data, config, steps, batch, lambda, lr, seed, ablate, ckpt, log_every },
                &mut out,
            )
        }
        Command::Match { ckpt, base, target, runs, seed, format } => {
            commands::match_pair(&MatchArgs { ckpt, base, target, runs, seed, format: format.into() }, &mut out)
        }
        Command::Oracle { base, target, mode, format } => {
            let mode = match mode {
                Mode::Exact => SearchMode::Exact,
                Mode::Greedy => SearchMode::Greedy,
            };
            commands::oracle(&OracleArgs { base, target, mode, format: format.into() }, &mut out)
        }
        Command::Eval { ckpt, oracle_only, data, runs, seed, baseline, limit, report } => {
            commands::eval(&EvalArgs { ckpt, oracle_only, data, runs, seed, baseline, limit, report }, &mut out)
        }
        Command::Gradcheck => commands::gradcheck(&mut out),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
