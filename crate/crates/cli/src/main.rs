use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use plc_cli::config::PipelineConfig;
use plc_cli::error::CliError;
use plc_cli::pipeline;
use plc_cli::workdir::Workspace;
use plc_core::lnn::Scorer;

#[derive(Parser)]
#[command(name = "plc", version, about = "Predicate extraction, pruning and weighted-AND classification over AMR session corpora")]
struct Cli {
    /// INI configuration file; built-in defaults otherwise.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the split, training and synthetic-corpus seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, env = "PLC_WORK_DIR")]
    work_dir: Option<PathBuf>,
    /// bounds-average or linear; eval reports this scorer first.
    #[arg(long, global = true)]
    scorer: Option<Scorer>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic corpus with planted class signal.
    Synth {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse every session file and extract predicates.
    Extract { corpus: Option<PathBuf> },
    /// Split samples and build the predicate universe and grounding tables.
    BuildDataset,
    /// Run the configured pruning chain.
    Prune,
    /// Train one weighted-AND gate per class.
    Train,
    /// Score the held-out samples: per-class ROC and accuracy.
    Eval,
    /// Write the top-k predicates per class.
    Explain {
        #[arg(long)]
        k: Option<usize>,
    },
    /// Time training at several predicate counts.
    Bench {
        #[arg(long, value_delimiter = ',')]
        counts: Option<Vec<usize>>,
    },
    /// extract, build-dataset, prune, train, eval and explain in one go.
    Run { corpus: Option<PathBuf> },
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::from_file(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.set_seed(s);
    }
    if let Some(s) = cli.scorer {
        cfg.train.scorer = s;
    }
    if let Some(w) = &cli.work_dir {
        cfg.work_dir = Some(w.clone());
    }
    match &cli.command {
        Command::Explain { k: Some(k) } => cfg.explain_k = *k,
        Command::Bench { counts: Some(c) } => cfg.bench_counts = c.clone(),
        Command::Extract { corpus: Some(c) } | Command::Run { corpus: Some(c) } => cfg.corpus = Some(c.clone()),
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn corpus_of(cfg: &PipelineConfig) -> Result<PathBuf, CliError> {
    cfg.corpus
        .clone()
        .ok_or_else(|| CliError::Usage("no corpus given (argument or [paths] corpus)".into()))
}

fn run(cli: Cli) -> Result<String, CliError> {
    let cfg = load_config(&cli)?;
    if let Command::Synth { out } = &cli.command {
        let out = out.clone().or_else(|| cfg.corpus.clone()).unwrap_or_else(|| PathBuf::from("corpus"));
        let s = pipeline::synth(&cfg, &out)?;
        return Ok(format!("{} -> {}", s, out.display()));
    }
    let ws = Workspace::open(&cfg.work_dir.clone().unwrap_or_else(|| PathBuf::from("work")))?;
    let (name, result) = match &cli.command {
        Command::Synth { .. } => unreachable!(),
        Command::Extract { .. } => ("extract", corpus_of(&cfg).and_then(|c| pipeline::extract(&cfg, &ws, &c)).map(|s| s.to_string())),
        Command::BuildDataset => ("build-dataset", pipeline::build_dataset(&cfg, &ws).map(|s| s.to_string())),
        Command::Prune => ("prune", pipeline::prune(&cfg, &ws).map(|s| s.to_string())),
        Command::Train => ("train", pipeline::train(&cfg, &ws).map(|s| s.to_string())),
        Command::Eval => ("eval", pipeline::eval(&cfg, &ws).map(|s| s.to_string())),
        Command::Explain { .. } => ("explain", pipeline::explain(&cfg, &ws).map(|r| r.render_text())),
        Command::Bench { .. } => ("bench", pipeline::bench(&cfg, &ws, &cfg.bench_counts).map(|s| s.to_string())),
        Command::Run { .. } => ("run", corpus_of(&cfg).and_then(|c| pipeline::run_all(&cfg, &ws, &c)).map(|s| s.to_string())),
    };
    let metrics = match &result {
        Ok(s) => s.lines().map(str::trim).collect::<Vec<_>>().join("; "),
        Err(e) => format!("error exit={}", e.exit_code()),
    };
    ws.log(name, &cfg.hash(), &metrics)?;
    result
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            println!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("plc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
