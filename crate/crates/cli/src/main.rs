use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};
use oie_cli::config::{require_file, PipelineConfig};
use oie_cli::eval::{precision_yield, read_annotations, write_table};
use oie_cli::pipeline::{build_trainset, extract, train_model, OutputFormat};
use oie_core::extractor::Triple;
use oie_core::neural::Task;
use oie_core::{Error, Result};

#[derive(Parser)]
#[command(name = "oie", version, about = "Open information extraction over dependency paths")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random choice, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Maximum number of worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Score threshold for extracted triples, overriding the configuration.
    #[arg(long, global = true)]
    threshold: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Argument,
    Preposition,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Jsonl,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Build tuples, seed matches and labelled samples.
    BuildTrainset {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Corpus to bootstrap from, overriding data.corpus.
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Train the argument or preposition classifier.
    Train {
        #[arg(long, value_enum)]
        task: TaskArg,
        /// Directory written by build-trainset.
        #[arg(long)]
        samples: PathBuf,
        /// Checkpoint to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract scored triples from a corpus.
    Extract {
        /// CoNLL corpus with dependency confidences.
        #[arg(long)]
        input: PathBuf,
        /// Checkpoint of the argument classifier.
        #[arg(long)]
        argument_model: PathBuf,
        /// Checkpoint of the preposition classifier.
        #[arg(long)]
        preposition_model: PathBuf,
        /// Output file.
        #[arg(long)]
        out: PathBuf,
        /// JSON Lines or one rendered triple per line.
        #[arg(long, value_enum, default_value = "jsonl")]
        format: FormatArg,
    },
    /// Precision over yield for annotated triples.
    Eval {
        /// Triples in JSON Lines.
        #[arg(long)]
        triples: PathBuf,
        /// `id<TAB>C|I` annotations.
        #[arg(long)]
        annotations: PathBuf,
        /// TSV output; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read_triples(path: &Path) -> Result<Vec<Triple>> {
    require_file(path, "triples file")?;
    let mut out = Vec::new();
    for (n, line) in std::io::BufRead::lines(BufReader::new(File::open(path)?)).enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: n + 1,
            message: format!("invalid triple: {}", e),
        })?);
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.set_seed(seed);
    }
    if let Some(t) = cli.threshold {
        config.extract.threshold = t;
    }
    config.validate()?;

    match cli.command {
        Command::BuildTrainset { out, corpus } => {
            if corpus.is_some() {
                config.data.corpus = corpus;
            }
            let report = build_trainset(&config, &out)?;
            info!(
                "stage=build_trainset verb_tuples={} noun_tuples={} seeds={} pairs={} negatives={}",
                report.verb_tuples, report.noun_tuples, report.seeds, report.pairs, report.negatives_kept
            );
        }
        Command::Train { task, samples, out } => {
            let task = match task {
                TaskArg::Argument => Task::Argument,
                TaskArg::Preposition => Task::Preposition,
            };
            let (_, log) = train_model(&config, task, &samples, &out)?;
            if let Some(last) = log.epochs.last() {
                info!("stage=train_done task={} loss={:.6} accuracy={:.4}", task, last.loss, last.accuracy);
            }
        }
        Command::Extract {
            input,
            argument_model,
            preposition_model,
            out,
            format,
        } => {
            let format = match format {
                FormatArg::Jsonl => OutputFormat::Jsonl,
                FormatArg::Text => OutputFormat::Text,
            };
            extract(&config, &input, &argument_model, &preposition_model, &out, format)?;
        }
        Command::Eval { triples, annotations, out } => {
            let triples = read_triples(&triples)?;
            require_file(&annotations, "annotation file")?;
            let marks = read_annotations(BufReader::new(File::open(&annotations)?))?;
            let (rows, missing) = precision_yield(&triples, &marks);
            for id in &missing {
                warn!("unannotated triple {} excluded", id);
            }
            info!("stage=eval annotated={} unannotated={}", rows.len(), missing.len());
            match out {
                Some(path) => {
                    let mut w = BufWriter::new(File::create(path)?);
                    write_table(&mut w, &rows)?;
                    w.flush()?;
                }
                None => {
                    let stdout = io::stdout();
                    write_table(&mut stdout.lock(), &rows)?;
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::FAILURE
        }
    }
}
