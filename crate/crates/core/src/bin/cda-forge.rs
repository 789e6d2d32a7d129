use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use cda_forge::augment::augment_round;
use cda_forge::data::{compute_stats, ingest_dataset, write_dataset, ColumnMap, DataError, Dataset, SourceFormat};
use cda_forge::eval::{evaluate_split, read_correctness};
use cda_forge::inference::{HttpFactory, InferenceError, ModelFactory};
use cda_forge::pipeline::{self, Backends, PipelineError, RunConfig, RunDir, RunOptions};
use cda_forge::trainer::hook_from_spec;

#[derive(Parser)]
#[command(name = "cda-forge", version, about = "Curriculum data augmentation for metaphor detection")]
struct Cli {
    /// Log filter, e.g. `info` or `cda_forge=debug`. Also read from RUST_LOG.
    #[arg(long, global = true, default_value = "info")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Keep only the instances the teacher labels correctly.
    Filter {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Start (or continue) a full run in a run directory.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        run_dir: PathBuf,
        /// Stop after this many stages (the run can be resumed later).
        #[arg(long)]
        max_stages: Option<usize>,
    },
    /// Continue an interrupted or failed run.
    Resume {
        run_dir: PathBuf,
        #[arg(long)]
        max_stages: Option<usize>,
    },
    /// Run one augmentation round over a seed file.
    Augment {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        iteration: u32,
        /// Where to write per-request outcomes.
        #[arg(long)]
        log_out: Option<PathBuf>,
    },
    /// Zero-shot evaluation of the base student (or the teacher).
    Evaluate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        teacher: bool,
    },
    /// Dataset statistics, optionally with correctness from a report file.
    Stats {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Evaluate the final student of a completed run on test sets.
    Report {
        run_dir: PathBuf,
        /// Test set files (canonical JSONL or CSV with default columns).
        #[arg(long = "test", required = true)]
        tests: Vec<PathBuf>,
        #[arg(long, default_value_t = 3)]
        trials: u32,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config value, e.g. `--set iterations=2 --set teacher.model_id=gpt-4o`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    /// `canonical-jsonl` or `columnar-csv`; inferred from the extension by default.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    sentence_col: Option<String>,
    #[arg(long)]
    target_col: Option<String>,
    #[arg(long)]
    label_col: Option<String>,
    #[arg(long)]
    delimiter: Option<char>,
    #[arg(long)]
    skip_invalid: bool,
}

/// Bad input from the user rather than a failing stage.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct UsageError(String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn load_config(args: &ConfigArgs) -> Result<RunConfig> {
    let text = match &args.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?,
        None => String::new(),
    };
    Ok(RunConfig::from_toml(&text, &args.overrides)?)
}

fn load_input(args: &InputArgs) -> Result<Dataset> {
    let format = match args.format.as_deref() {
        Some("canonical-jsonl") | Some("jsonl") => SourceFormat::CanonicalJsonl,
        Some("columnar-csv") | Some("csv") | Some("tsv") => SourceFormat::ColumnarCsv,
        Some(other) => return Err(usage(format!("unknown input format {other:?}"))),
        None => match args.input.extension().and_then(|e| e.to_str()) {
            Some("csv") | Some("tsv") => SourceFormat::ColumnarCsv,
            _ => SourceFormat::CanonicalJsonl,
        },
    };
    let mut map = ColumnMap {
        name: args.name.clone(),
        skip_invalid: args.skip_invalid,
        ..ColumnMap::default()
    };
    if let Some(c) = &args.sentence_col {
        map.sentence = c.clone();
    }
    if let Some(c) = &args.target_col {
        map.target_word = c.clone();
    }
    if let Some(c) = &args.label_col {
        map.label = c.clone();
    }
    match args.delimiter {
        Some(d) => map.delimiter = d,
        None if args.input.extension().is_some_and(|e| e == "tsv") => map.delimiter = '\t',
        None => {}
    }
    let ingested = ingest_dataset(&args.input, format, &map)
        .with_context(|| format!("reading {}", args.input.display()))?;
    if !ingested.rejected.is_empty() {
        tracing::warn!(rows = ingested.rejected.len(), "skipped invalid rows");
    }
    Ok(ingested.dataset)
}

fn backends(config: &RunConfig) -> Result<Backends> {
    let hook = hook_from_spec(&config.trainer.hook).map_err(|e| usage(e.to_string()))?;
    Ok(Backends::new(Arc::new(HttpFactory), hook))
}

fn finish_run(state: pipeline::RunState, run_dir: &Path) {
    if state.is_complete() {
        println!(
            "run complete: final checkpoint {} ({})",
            state.final_checkpoint.as_deref().unwrap_or("?"),
            run_dir.display()
        );
    } else if let Some(stage) = state.next_stage {
        println!("run paused before {stage}; continue with `cda-forge resume {}`", run_dir.display());
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Filter { cfg, input, out } => {
            let config = load_config(&cfg)?;
            let data = load_input(&input)?;
            let teacher = HttpFactory.connect(&config.teacher)?;
            let outcome = pipeline::teacher_filter(&*teacher, &data)?;
            write_dataset(&out, &outcome.dataset)?;
            println!("{}", serde_json::to_string_pretty(&outcome.summary)?);
        }
        Command::Run {
            cfg,
            input,
            run_dir,
            max_stages,
        } => {
            let config = load_config(&cfg)?;
            let data = load_input(&input)?;
            let backends = backends(&config)?;
            let options = RunOptions {
                halt_after_stages: max_stages,
            };
            let state = pipeline::run_cda_with(&config, &data, &run_dir, &backends, options)?;
            finish_run(state, &run_dir);
        }
        Command::Resume { run_dir, max_stages } => {
            let state = RunDir::new(&run_dir).load_state().map_err(|e| usage(e.to_string()))?;
            let backends = backends(&state.config)?;
            let options = RunOptions {
                halt_after_stages: max_stages,
            };
            let state = pipeline::resume(&run_dir, &backends, options)?;
            finish_run(state, &run_dir);
        }
        Command::Augment {
            cfg,
            input,
            out,
            iteration,
            log_out,
        } => {
            let config = load_config(&cfg)?;
            let seeds = load_input(&input)?;
            let teacher = HttpFactory.connect(&config.teacher)?;
            let history: HashSet<_> = seeds.iter().map(|i| i.dedup_key()).collect();
            let (aug, log) = augment_round(
                &*teacher,
                &seeds,
                &config.methods,
                iteration,
                &history,
                config.retries_per_generation,
            )?;
            write_dataset(&out, &aug)?;
            if let Some(path) = log_out {
                cda_forge::data::write_jsonl(&path, &log.entries)?;
            }
            println!("{}", serde_json::to_string_pretty(&log.summary)?);
        }
        Command::Evaluate {
            cfg,
            input,
            out,
            teacher,
        } => {
            let config = load_config(&cfg)?;
            let data = load_input(&input)?;
            let endpoint = if teacher { &config.teacher } else { &config.student_base };
            let model = HttpFactory.connect(endpoint)?;
            let (report, _) = evaluate_split(&*model, &data)?;
            if let Some(path) = out {
                report.write_jsonl(&path)?;
            }
            println!("{}", serde_json::to_string_pretty(&report.metrics)?);
        }
        Command::Stats { input, report } => {
            let data = load_input(&input)?;
            let correctness = report.as_deref().map(read_correctness).transpose()?;
            let stats = compute_stats(&data, correctness.as_ref())?;
            println!("{}", serde_json::to_string_pretty(&stats)?);
        }
        Command::Report { run_dir, tests, trials } => {
            if trials == 0 {
                bail!(usage("--trials must be at least 1"));
            }
            let tests = tests
                .iter()
                .map(|path| {
                    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                    load_input(&InputArgs {
                        input: path.clone(),
                        format: None,
                        name: Some(name),
                        sentence_col: None,
                        target_col: None,
                        label_col: None,
                        delimiter: None,
                        skip_invalid: false,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let report = pipeline::report_run(&run_dir, &tests, trials, &HttpFactory)?;
            print!("{}", report.render_markdown());
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    let missing_input = |e: &DataError| matches!(e, DataError::MissingFile(_));
    match err.downcast_ref::<PipelineError>() {
        Some(PipelineError::Config(_) | PipelineError::RunDirInUse(_) | PipelineError::NotARunDir(_)) => 1,
        Some(PipelineError::Data(e)) if missing_input(e) => 1,
        _ if err.downcast_ref::<DataError>().is_some_and(missing_input) => 1,
        _ if matches!(
            err.downcast_ref::<InferenceError>(),
            Some(InferenceError::MissingApiKey(_) | InferenceError::InvalidConfig(_))
        ) =>
        {
            1
        }
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(&cli.log));
    tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).init();

    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
