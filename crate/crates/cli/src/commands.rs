use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use clozeforge::analysis::qtype::{parse_trec, LinearQuestionClassifier, TrainOptions};
use clozeforge::analysis::{analyze, AnalysisError, AnalysisInputs, CoarseModel, QuestionRecord, TokenCounts};
use clozeforge::corpus::{ingest_corpus, CorpusFormat, MarkerMode};
use clozeforge::dataset::{
    audit_sheet, export, import, sample_triples, select_subset, stats, DatasetError, SortOrder,
};
use clozeforge::metrics::{evaluate, read_answers, AnswerValue, EvalError, Task};
use clozeforge::{generate_corpus, AnnotatorHandle, ClozeTriple, Criterion, TopK};
use log::{info, warn};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::{Cli, Command, CorpusFormatArg, ExportFormat, GenerateFlags, OrderArg, QtypeMode, SelectFlags};

/// Marks errors caused by inconsistent data rather than bad usage.
#[derive(Debug)]
pub struct DataIntegrity(anyhow::Error);

impl fmt::Display for DataIntegrity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for DataIntegrity {}

fn integrity(e: impl Into<anyhow::Error>) -> anyhow::Error {
    anyhow::Error::new(DataIntegrity(e.into()))
}

pub fn exit_code(e: &anyhow::Error) -> u8 {
    if e.chain().any(|c| c.is::<DataIntegrity>()) {
        2
    } else {
        1
    }
}

fn dataset_error(e: DatasetError) -> anyhow::Error {
    match e {
        DatasetError::Io { .. } | DatasetError::Encode(_) => e.into(),
        DatasetError::Parse { .. } | DatasetError::CountMismatch { .. } => integrity(e),
    }
}

fn eval_error(e: EvalError) -> anyhow::Error {
    match e {
        EvalError::Io(_) => e.into(),
        _ => integrity(e),
    }
}

fn load_dataset(path: &Path) -> Result<(Vec<ClozeTriple>, clozeforge::dataset::DatasetManifest)> {
    import(path).map_err(dataset_error)
}

fn apply_generate_flags(cfg: &mut RunConfig, flags: &GenerateFlags) {
    if let Some(f) = flags.intro_fraction {
        cfg.segmentation.intro_fraction = f;
    }
    if let Some(n) = flags.min_overlap {
        cfg.cloze.min_overlap = n;
    }
    if let Some(p) = &flags.placeholder {
        cfg.cloze.placeholder = p.clone();
    }
    if let Some(a) = &flags.annotator {
        cfg.annotator = a.clone();
    }
}

fn apply_select_flags(cfg: &mut RunConfig, flags: &SelectFlags) -> Result<()> {
    if let Some(c) = &flags.criterion {
        cfg.selection.criterion = c.parse().map_err(|e: String| anyhow!(e))?;
    }
    if let Some(k) = &flags.top_k {
        cfg.selection.top_k = Some(k.parse().map_err(|e: String| anyhow!(e))?);
    }
    if let Some(o) = flags.order {
        cfg.selection.order = Some(match o {
            OrderArg::Asc => SortOrder::Ascending,
            OrderArg::Desc => SortOrder::Descending,
        });
    }
    Ok(())
}

fn select(triples: Vec<ClozeTriple>, cfg: &RunConfig) -> Result<Vec<ClozeTriple>> {
    let sel = &cfg.selection;
    if sel.criterion == Criterion::None {
        if sel.top_k.is_some() {
            warn!("top-k is ignored with criterion none");
        }
        return Ok(triples);
    }
    let top_k = sel.top_k.unwrap_or(TopK::Count(triples.len() as i64));
    select_subset(&triples, sel.criterion, top_k, sel.order).map_err(integrity)
}

/// sha256 over the corpus file, or over the sorted file names and contents
/// of a corpus directory.
fn corpus_hash(path: &Path) -> Result<String> {
    let mut hasher = Sha256::new();
    if path.is_dir() {
        let mut entries: Vec<_> = fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        entries.sort();
        for p in entries {
            hasher.update(p.file_name().unwrap_or_default().as_encoded_bytes());
            hasher.update([0]);
            hasher.update(fs::read(&p)?);
            hasher.update([0]);
        }
    } else {
        hasher.update(fs::read(path).with_context(|| format!("cannot read corpus {}", path.display()))?);
    }
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("cannot start worker pool")
}

pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = RunConfig::load(cli.global.config.as_deref())?;
    if let Some(s) = cli.global.seed {
        cfg.seed = s;
    }
    if let Some(w) = cli.global.workers {
        cfg.workers = w;
    }
    match cli.command {
        Command::Generate {
            input,
            output,
            format,
            gen,
            select: sel,
        } => {
            apply_generate_flags(&mut cfg, &gen);
            apply_select_flags(&mut cfg, &sel)?;
            cfg.validate()?;
            cmd_generate(&input, &output, format, &cfg)
        }
        Command::Filter { input, output, select: sel } => {
            apply_select_flags(&mut cfg, &sel)?;
            cfg.validate()?;
            cmd_filter(&input, &output, &cfg)
        }
        Command::Export { input, output, format } => cmd_export(&input, &output, format),
        Command::Stats { input, sample, json } => {
            let (triples, _) = load_dataset(&input)?;
            let report = stats(&triples, sample, cfg.seed);
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", report.render());
            }
            Ok(())
        }
        Command::Sample { input, n, output } => {
            let (triples, _) = load_dataset(&input)?;
            let picked = sample_triples(&triples, n, cfg.seed);
            if let Some(out) = output {
                let file = fs::File::create(&out).with_context(|| format!("cannot create {}", out.display()))?;
                let mut w = std::io::BufWriter::new(file);
                for t in &picked {
                    serde_json::to_writer(&mut w, t)?;
                    w.write_all(b"\n")?;
                }
                w.flush()?;
            }
            print!("{}", audit_sheet(&picked, cfg.seed));
            Ok(())
        }
        Command::Eval { pred, gold, task } => cmd_eval(&pred, &gold, &task),
        Command::Analyze {
            pred_cloze,
            pred_sl,
            gold,
            questions,
            counts,
            qtype,
            qtype_model,
            out_dir,
        } => cmd_analyze(
            &AnalyzePaths {
                pred_cloze: &pred_cloze,
                pred_sl: &pred_sl,
                gold: &gold,
                questions: &questions,
                counts: counts.as_deref(),
                qtype_model: qtype_model.as_deref(),
                out_dir: out_dir.as_deref(),
            },
            qtype,
            cfg.seed,
        ),
        Command::TrainQtype { trec, output, epochs } => {
            let text = fs::read_to_string(&trec).with_context(|| format!("cannot read {}", trec.display()))?;
            let examples = parse_trec(&text).map_err(integrity)?;
            let opts = TrainOptions {
                epochs,
                seed: cfg.seed,
                ..TrainOptions::default()
            };
            let model = LinearQuestionClassifier::train(&examples, opts).map_err(integrity)?;
            let correct = examples.iter().filter(|(c, q)| model.classify(q) == *c).count();
            fs::write(&output, serde_json::to_string(&model)? + "\n")
                .with_context(|| format!("cannot write {}", output.display()))?;
            eprintln!(
                "trained on {} questions, training accuracy {:.4}",
                examples.len(),
                correct as f64 / examples.len() as f64
            );
            Ok(())
        }
    }
}

fn cmd_generate(input: &Path, output: &Path, format: CorpusFormatArg, cfg: &RunConfig) -> Result<()> {
    let format = match format {
        CorpusFormatArg::Jsonl => CorpusFormat::Jsonl,
        CorpusFormatArg::TextDir => CorpusFormat::PlainTextDir,
    };
    let hash = corpus_hash(input)?;
    let ingested = ingest_corpus(input, format)?;
    if !ingested.skipped.is_empty() {
        warn!("{} malformed corpus records skipped", ingested.skipped.len());
    }
    if cfg.segmentation.marker_mode == MarkerMode::FractionOfSentences
        && ingested.documents.iter().any(|d| d.intro.is_some())
    {
        info!("explicit intro fields ignored in fraction-of-sentences mode");
    }
    let annotator = AnnotatorHandle::from_spec(&cfg.annotator).map_err(|e| anyhow!(e))?;
    let pool = thread_pool(cfg.workers)?;
    let run = pool.install(|| generate_corpus(&ingested.documents, &cfg.segmentation, &cfg.cloze, &annotator));
    if annotator.fallback_count() > 0 {
        warn!("{} sentences fell back to the builtin annotator", annotator.fallback_count());
    }
    let s = &run.stats;
    let triples = select(run.triples, cfg)?;
    export(&triples, output, &hash, cfg.manifest_value()).map_err(dataset_error)?;
    eprintln!(
        "documents {} (skipped {}, malformed {}), passages {}, candidates {}, pruned {}, duplicates {}, triples {}, written {}",
        s.documents,
        s.skipped,
        ingested.skipped.len(),
        s.passages,
        s.candidates,
        s.pruned,
        s.duplicates,
        s.triples,
        triples.len()
    );
    Ok(())
}

fn cmd_filter(input: &Path, output: &Path, cfg: &RunConfig) -> Result<()> {
    let (triples, manifest) = load_dataset(input)?;
    let before = triples.len();
    let kept = select(triples, cfg)?;
    let config = json!({"source": manifest.config, "selection": cfg.selection});
    export(&kept, output, &manifest.corpus_hash, config).map_err(dataset_error)?;
    eprintln!("kept {} of {} triples", kept.len(), before);
    Ok(())
}

/// SQuAD v1.1-style JSON: one article per source document, one paragraph per
/// passage.
fn squad_json(triples: &[ClozeTriple]) -> serde_json::Value {
    let mut docs: BTreeMap<&str, BTreeMap<usize, (&str, Vec<serde_json::Value>)>> = BTreeMap::new();
    for t in triples {
        let qa = json!({
            "id": t.id,
            "question": t.question,
            "answers": [{"text": t.answer.text, "answer_start": t.answer.start}],
        });
        docs.entry(&t.prov.doc)
            .or_default()
            .entry(t.prov.p)
            .or_insert((&t.passage, Vec::new()))
            .1
            .push(qa);
    }
    let data: Vec<serde_json::Value> = docs
        .into_iter()
        .map(|(doc, passages)| {
            let paragraphs: Vec<_> = passages
                .into_values()
                .map(|(context, qas)| json!({"context": context, "qas": qas}))
                .collect();
            json!({"title": doc, "paragraphs": paragraphs})
        })
        .collect();
    json!({"version": "1.1", "data": data})
}

fn cmd_export(input: &Path, output: &Path, format: ExportFormat) -> Result<()> {
    let (triples, manifest) = load_dataset(input)?;
    match format {
        ExportFormat::Squad => {
            let body = serde_json::to_string(&squad_json(&triples))? + "\n";
            fs::write(output, body).with_context(|| format!("cannot write {}", output.display()))?;
        }
        ExportFormat::Jsonl => {
            export(&triples, output, &manifest.corpus_hash, manifest.config).map_err(dataset_error)?;
        }
    }
    Ok(())
}

fn read_answer_file(path: &Path) -> Result<BTreeMap<String, AnswerValue>> {
    let file = fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    read_answers(BufReader::new(file))
        .map_err(eval_error)
        .with_context(|| format!("in {}", path.display()))
}

fn cmd_eval(pred: &Path, gold: &Path, task: &str) -> Result<()> {
    let task: Task = task.parse().map_err(|e: String| anyhow!(e))?;
    let golds = read_answer_file(gold)?;
    let preds = read_answer_file(pred)?;
    let report = evaluate(task, &preds, &golds).map_err(eval_error)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

struct AnalyzePaths<'a> {
    pred_cloze: &'a Path,
    pred_sl: &'a Path,
    gold: &'a Path,
    questions: &'a Path,
    counts: Option<&'a Path>,
    qtype_model: Option<&'a Path>,
    out_dir: Option<&'a Path>,
}

fn read_questions(path: &Path) -> Result<Vec<QuestionRecord>> {
    let file = fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line)
            .map_err(|e| integrity(anyhow!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push(rec);
    }
    if out.is_empty() {
        return Err(integrity(anyhow!("no questions in {}", path.display())));
    }
    Ok(out)
}

fn cmd_analyze(paths: &AnalyzePaths<'_>, qtype: QtypeMode, seed: u64) -> Result<()> {
    let questions = read_questions(paths.questions)?;
    let golds = read_answer_file(paths.gold)?;
    let pred_cloze = read_answer_file(paths.pred_cloze)?;
    let pred_sl = read_answer_file(paths.pred_sl)?;
    let counts: Option<TokenCounts> = match paths.counts {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            Some(serde_json::from_str(&text).map_err(|e| integrity(anyhow!("{}: {e}", p.display())))?)
        }
        None => None,
    };
    let trained = match (qtype, paths.qtype_model) {
        (QtypeMode::Trained, Some(p)) => Some(LinearQuestionClassifier::load(p)?),
        _ => None,
    };
    let model = match qtype {
        QtypeMode::Rules => CoarseModel::Rules,
        QtypeMode::Trained => CoarseModel::Trained(trained.as_ref()),
    };
    let inputs = AnalysisInputs {
        questions: &questions,
        golds: &golds,
        pred_cloze: &pred_cloze,
        pred_sl: &pred_sl,
        counts: counts.as_ref(),
    };
    let report = analyze(&inputs, &model, seed).map_err(|e| match e {
        AnalysisError::MissingQid { .. } | AnalysisError::Ols(_) => integrity(e),
        AnalysisError::Qtype(_) => e.into(),
    })?;
    let table = report.render_table();
    let csv = report.gains.to_csv();
    print!("{table}\n{csv}");
    if let Some(dir) = paths.out_dir {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        fs::write(dir.join("regression.json"), serde_json::to_string_pretty(&report)? + "\n")?;
        fs::write(dir.join("regression.txt"), &table)?;
        fs::write(dir.join("gains.csv"), &csv)?;
    }
    Ok(())
}

