mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Cloze question generation, filtering, evaluation and analysis.
#[derive(Parser, Debug)]
#[command(name = "clozeforge", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct GlobalArgs {
    /// TOML config file; flags override its values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Size of the document worker pool
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct GenerateFlags {
    #[arg(long)]
    pub intro_fraction: Option<f64>,
    #[arg(long)]
    pub min_overlap: Option<usize>,
    #[arg(long)]
    pub placeholder: Option<String>,
    /// `builtin` or `exec:COMMAND`
    #[arg(long)]
    pub annotator: Option<String>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct SelectFlags {
    /// jaccard, tfidf, ans_len or none
    #[arg(long)]
    pub criterion: Option<String>,
    /// Count (e.g. 1000) or fraction (e.g. 0.1)
    #[arg(long)]
    pub top_k: Option<String>,
    #[arg(long, value_enum)]
    pub order: Option<OrderArg>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum OrderArg {
    Asc,
    Desc,
}

#[derive(ValueEnum, Debug, Clone, Copy, Default)]
pub enum CorpusFormatArg {
    #[default]
    Jsonl,
    TextDir,
}

#[derive(ValueEnum, Debug, Clone, Copy, Default)]
pub enum ExportFormat {
    #[default]
    Squad,
    Jsonl,
}

#[derive(ValueEnum, Debug, Clone, Copy, Default)]
pub enum QtypeMode {
    #[default]
    Rules,
    Trained,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a cloze dataset from a corpus
    Generate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: CorpusFormatArg,
        #[command(flatten)]
        gen: GenerateFlags,
        #[command(flatten)]
        select: SelectFlags,
    },
    /// Keep the top-k triples of a dataset by a criterion
    Filter {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        #[command(flatten)]
        select: SelectFlags,
    },
    /// Convert a dataset for QA training code
    Export {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: ExportFormat,
    },
    /// Counts, score histograms and an audit sample
    Stats {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        sample: usize,
        #[arg(long)]
        json: bool,
    },
    /// Draw a seeded random sample for manual answerability audit
    Sample {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, short)]
        n: usize,
        /// Also write the sampled triples as jsonl
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Score predictions against gold answers
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        /// span, factoid or list
        #[arg(long, default_value = "span")]
        task: String,
    },
    /// Regress per-question F1 on question features and bucket gains by type
    Analyze {
        #[arg(long)]
        pred_cloze: PathBuf,
        #[arg(long)]
        pred_sl: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        /// jsonl with qid, question, passage
        #[arg(long)]
        questions: PathBuf,
        /// JSON object of training-corpus token counts
        #[arg(long)]
        counts: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        qtype: QtypeMode,
        #[arg(long)]
        qtype_model: Option<PathBuf>,
        /// Directory for regression.json, regression.txt and gains.csv
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Train the coarse question-type classifier on TREC-format data
    TrainQtype {
        #[arg(long)]
        trec: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        #[arg(long, default_value_t = 30)]
        epochs: usize,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CLOZEFORGE_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
