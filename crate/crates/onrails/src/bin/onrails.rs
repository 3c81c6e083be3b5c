//! Command-line front end for the batch pipelines. Data goes to `--out`
//! (or standard output), diagnostics to standard error; the exit code is
//! zero exactly when no error occurred.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use onrails::config::Config;
use onrails::pipeline;

#[derive(Parser)]
#[command(
    name = "onrails",
    version,
    about = "Offline driving-log simulation and evaluation"
)]
struct Cli {
    /// Configuration file (TOML); built-in defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel commands, overriding the config file.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dream-sample generation and evaluation.
    Dream {
        #[command(subcommand)]
        command: DreamCommand,
    },
    /// Score route runs: driving score, completion, infractions, comfort.
    Score(ScoreArgs),
    /// Emit commentary labels for every frame of a log.
    Label(LabelArgs),
    /// Build and sample training-data buckets.
    Buckets {
        #[command(subcommand)]
        command: BucketsCommand,
    },
}

#[derive(Subcommand)]
enum DreamCommand {
    /// Generate dream samples for every frame of a scene log.
    Generate(GenerateArgs),
    /// Evaluate predicted trajectories against generated samples.
    Eval(EvalArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Scene log (line-delimited records).
    #[arg(long)]
    log: PathBuf,
    /// Output file for the sample records.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Prediction records keyed by sample id.
    #[arg(long)]
    pred: PathBuf,
    /// Dream samples produced by `dream generate`.
    #[arg(long)]
    samples: PathBuf,
    /// CSV output path (standard output when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the full JSON report here.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    /// Route-run records.
    #[arg(long)]
    runs: PathBuf,
    /// CSV output path (standard output when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the full JSON report here.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct LabelArgs {
    /// Scene log to label.
    #[arg(long)]
    log: PathBuf,
    /// Output file (standard output when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum BucketsCommand {
    /// Build the bucket index (bucket name -> sorted frame ids).
    Build(BucketsBuildArgs),
    /// Sample an epoch of frame ids from a stored index.
    Sample(BucketsSampleArgs),
}

#[derive(Args)]
struct BucketsBuildArgs {
    #[arg(long)]
    log: PathBuf,
    /// Output file (standard output when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BucketsSampleArgs {
    /// Bucket index produced by `buckets build`.
    #[arg(long)]
    index: PathBuf,
    /// Number of frame ids to draw.
    #[arg(short, long)]
    n: usize,
    /// Output file (standard output when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn out_writer(path: Option<&Path>) -> std::io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn load_config(cli: &Cli) -> Result<Config, Box<dyn std::error::Error>> {
    let mut config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        config.dreamer.seed = seed;
    }
    if let Some(jobs) = cli.jobs {
        config.io.jobs = jobs;
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    let config = load_config(&cli)?;
    let jobs = config.io.jobs;
    match cli.command {
        Command::Dream { command } => match command {
            DreamCommand::Generate(args) => {
                let summary = pipeline::dream_generate(&args.log, &config, &args.out, jobs)?;
                println!("{}", serde_json::to_string_pretty(&summary)?);
            }
            DreamCommand::Eval(args) => {
                let report = pipeline::dream_eval(&args.pred, &args.samples)?;
                let mut w = out_writer(args.out.as_deref())?;
                w.write_all(pipeline::dream_report_csv(&report).as_bytes())?;
                w.flush()?;
                if let Some(json) = &args.json {
                    std::fs::write(json, serde_json::to_string_pretty(&report)?)?;
                }
            }
        },
        Command::Score(args) => {
            let report = pipeline::score_runs(&args.runs, &config)?;
            let mut w = out_writer(args.out.as_deref())?;
            w.write_all(pipeline::score_report_csv(&report)?.as_bytes())?;
            w.flush()?;
            if let Some(json) = &args.json {
                std::fs::write(json, serde_json::to_string_pretty(&report)?)?;
            }
        }
        Command::Label(args) => {
            let mut w = out_writer(args.out.as_deref())?;
            let count = pipeline::label_log(&args.log, &config, &mut w)?;
            w.flush()?;
            log::info!("labeled {count} frames");
        }
        Command::Buckets { command } => match command {
            BucketsCommand::Build(args) => {
                let index = pipeline::buckets_build(&args.log, &config)?;
                let mut w = out_writer(args.out.as_deref())?;
                serde_json::to_writer_pretty(&mut w, &index)?;
                w.write_all(b"\n")?;
                w.flush()?;
            }
            BucketsCommand::Sample(args) => {
                let seed = cli.seed.unwrap_or(config.dreamer.seed);
                let ids = pipeline::buckets_sample(&args.index, &config, args.n, seed)?;
                let mut w = out_writer(args.out.as_deref())?;
                for id in ids {
                    writeln!(w, "{id}")?;
                }
                w.flush()?;
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
