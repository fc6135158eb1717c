//! Stage helpers shared by the subcommands, and the end-to-end run.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use reqa_core::bm25::Bm25Index;
use reqa_core::corpus::{Corpus, NqFilterSummary};
use reqa_core::encode::EncoderConfig;
use reqa_core::ivf::{IvfConfig, IvfIndex};
use reqa_core::stats::{compute_stats, DatasetStats};
use reqa_core::task::Task;
use reqa_core::RuleSplitter;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::artifacts::{self, read_json, sha256_hex, to_json_bytes, write_bytes, write_json, StaleGuard, TaskArtifacts};
use crate::config::{EncoderKind, InputFormat, RunConfig};
use crate::embed::{self, Encoded};
use crate::error::{Error, Result};
use crate::evaluate::{self, Backend};
use crate::nq::convert_nq;
use crate::report::{render_stats, render_table, ReportConfig, ReportEntry};
use crate::squad::parse_squad;
use crate::vectors::encode_vectors;

/// Name used for a corpus read from `path`.
pub fn source_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| "corpus".into(), |s| s.to_string_lossy().into_owned())
}

pub fn load_corpus(path: &Path, format: InputFormat) -> Result<(Corpus, Option<NqFilterSummary>)> {
    let name = source_name(path);
    match format {
        InputFormat::Squad => {
            let raw = fs::read(path).map_err(Error::io(path))?;
            Ok((parse_squad(&raw, &name)?, None))
        }
        InputFormat::NqSimplified => {
            let file = fs::File::open(path).map_err(Error::io(path))?;
            let (corpus, summary) = convert_nq(BufReader::new(file), &name)?;
            Ok((corpus, Some(summary)))
        }
    }
}

pub fn build_task(corpus: &Corpus) -> Result<Task> {
    Ok(Task::build(corpus, &RuleSplitter::default())?)
}

/// Reads either a task directory or a corpus file (SQuAD layout).
pub fn load_task_or_corpus(path: &Path) -> Result<TaskArtifacts> {
    if path.is_dir() {
        return artifacts::read_task(path);
    }
    let (corpus, _) = load_corpus(path, InputFormat::Squad)?;
    let task = build_task(&corpus)?;
    let manifest = artifacts::manifest_for(&task);
    Ok(TaskArtifacts { task, manifest })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bm25File {
    pub task_fingerprint: String,
    pub index: Bm25Index,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IvfFile {
    pub task_fingerprint: String,
    /// Digest of the answer vectors the index partitions.
    pub answers_sha256: String,
    pub config: IvfConfig,
    pub index: IvfIndex,
}

pub fn read_bm25(path: &Path, task_fingerprint: &str) -> Result<Bm25Index> {
    let file: Bm25File = read_json(path)?;
    if file.task_fingerprint != task_fingerprint {
        return Err(Error::Fingerprint {
            what: path.display().to_string(),
            expected: task_fingerprint.into(),
            found: file.task_fingerprint,
        });
    }
    Ok(file.index)
}

pub fn read_ivf(path: &Path, task_fingerprint: &str, answers: &reqa_core::EmbeddingMatrix) -> Result<IvfFile> {
    let file: IvfFile = read_json(path)?;
    if file.task_fingerprint != task_fingerprint {
        return Err(Error::Fingerprint {
            what: path.display().to_string(),
            expected: task_fingerprint.into(),
            found: file.task_fingerprint,
        });
    }
    let found = sha256_hex(&encode_vectors(answers));
    if file.answers_sha256 != found {
        return Err(Error::Fingerprint { what: format!("{} answer vectors", path.display()), expected: file.answers_sha256, found });
    }
    Ok(file)
}

/// Builds an IVF index, capping the list count at the number of answers.
pub fn build_ivf(task_fingerprint: &str, answers: &reqa_core::EmbeddingMatrix, config: IvfConfig) -> Result<IvfFile> {
    let config = IvfConfig { lists: config.lists.min(answers.rows()), ..config };
    let index = IvfIndex::build(answers, &config)?;
    Ok(IvfFile { task_fingerprint: task_fingerprint.into(), answers_sha256: sha256_hex(&encode_vectors(answers)), config, index })
}

pub fn encoder_system(encoded: &Encoded) -> &'static str {
    match encoded.encoder.kind {
        EncoderKind::HashTfidf => "hash-tfidf",
        EncoderKind::External => "external",
    }
}

/// Sentence and paragraph entries for a dense run.
pub fn dense_entries(
    task: &TaskArtifacts,
    encoded: &Encoded,
    ivf: Option<(&IvfFile, usize)>,
    cutoffs: &[usize],
) -> Result<Vec<ReportEntry>> {
    let (backend, backend_settings, system) = match ivf {
        None => (Backend::Exact, json!({ "kind": "exact" }), encoder_system(encoded).to_string()),
        Some((file, probes)) => (
            Backend::Ivf { index: &file.index, probes },
            json!({ "kind": "ivf", "lists": file.index.n_lists(), "probes": probes, "max_iters": file.config.max_iters, "seed": file.config.seed }),
            format!("{} (ivf {}/{})", encoder_system(encoded), probes, file.index.n_lists()),
        ),
    };
    let outcomes = evaluate::dense_outcomes(&task.task, &encoded.questions, &encoded.answers, backend)?;
    let settings = json!({
        "encoder": encoded.encoder,
        "vectors": {
            "answers": sha256_hex(&encode_vectors(&encoded.answers)),
            "questions": sha256_hex(&encode_vectors(&encoded.questions)),
        },
        "backend": backend_settings,
        "cutoffs": cutoffs,
    });
    let config = ReportConfig::new(task.fingerprint(), settings);
    Ok(evaluate::dense_reports(&task.task, &outcomes, cutoffs)?
        .into_iter()
        .map(|r| ReportEntry::new(system.clone(), r, config.clone()))
        .collect())
}

pub fn bm25_entry(task: &TaskArtifacts, index: &Bm25Index, cutoffs: &[usize]) -> Result<ReportEntry> {
    let report = evaluate::bm25_report(&task.task, index, cutoffs)?;
    let config = ReportConfig::new(task.fingerprint(), json!({ "bm25": { "k1": index.k1, "b": index.b }, "cutoffs": cutoffs }));
    Ok(ReportEntry::new("bm25", report, config))
}

/// Paths written by [`run_pipeline`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutputs {
    pub task_dir: PathBuf,
    pub answers: PathBuf,
    pub questions: PathBuf,
    pub bm25: Option<PathBuf>,
    pub ivf: Option<PathBuf>,
    pub report: PathBuf,
    pub table: PathBuf,
    pub stats: PathBuf,
    pub stats_markdown: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
struct RunRecord<'a> {
    fingerprint: String,
    task_fingerprint: &'a str,
    settings: serde_json::Value,
    nq_filter: Option<NqFilterSummary>,
    outputs: &'a RunOutputs,
}

/// Everything a run produced, kept in memory for callers and tests.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub outputs: RunOutputs,
    pub entries: Vec<ReportEntry>,
    pub stats: DatasetStats,
}

/// Convert, build the task, encode, index, evaluate and summarize.
///
/// The output directory carries a `.stale` marker until every artifact is
/// written, so an interrupted or failed run is recognizable.
pub fn run_pipeline(config: &RunConfig) -> Result<RunResult> {
    config.validate()?;
    let input = config.input.as_deref().ok_or_else(|| Error::Config("no input corpus given".into()))?;
    let out = config.out_dir.as_deref().ok_or_else(|| Error::Config("no output directory given".into()))?;
    let guard = StaleGuard::mark(out, "run")?;
    evaluate::with_threads(config.threads, || run_stages(config, input, out))?.and_then(|r| {
        guard.finish()?;
        Ok(r)
    })
}

fn run_stages(config: &RunConfig, input: &Path, out: &Path) -> Result<RunResult> {
    let (corpus, nq_filter) = load_corpus(input, config.format)?;
    let task_dir = out.join("task");
    let task = build_task(&corpus)?;
    drop(corpus);
    let manifest = artifacts::write_task(&task_dir, &task)?;
    let task = TaskArtifacts { task, manifest };

    let encoded = match config.encoder.kind {
        EncoderKind::HashTfidf => {
            let ec = EncoderConfig { dim: config.encoder.dim, alpha: config.encoder.alpha, seed: config.seed };
            ec.validate()?;
            embed::encode_hashing(&task.task, ec)?
        }
        EncoderKind::External => {
            let (a, q) = (config.encoder.answers.as_deref(), config.encoder.questions.as_deref());
            embed::load_external(&task.task, a.expect("validated"), q.expect("validated"))?
        }
    };
    let vec_dir = out.join("vectors");
    let (answers, questions) = embed::write_encoded(&vec_dir, task.fingerprint(), &encoded)?;

    let mut entries = dense_entries(&task, &encoded, None, &config.cutoffs)?;

    let ivf = if config.ann.enabled {
        let ivf_config =
            IvfConfig { lists: config.ann.lists, probes: config.ann.probes, max_iters: config.ann.max_iters, seed: config.seed };
        let file = build_ivf(task.fingerprint(), &encoded.answers, ivf_config)?;
        let path = out.join("ivf.json");
        write_json(&path, &file)?;
        let probes = config.ann.probes.min(file.index.n_lists());
        entries.extend(dense_entries(&task, &encoded, Some((&file, probes)), &config.cutoffs)?);
        Some(path)
    } else {
        None
    };

    let bm25 = if config.bm25.enabled {
        let index = evaluate::build_bm25(&task.task, config.bm25.k1, config.bm25.b)?;
        entries.push(bm25_entry(&task, &index, &config.cutoffs)?);
        let path = out.join("bm25.json");
        write_json(&path, &Bm25File { task_fingerprint: task.fingerprint().into(), index })?;
        Some(path)
    } else {
        None
    };

    let stats = compute_stats(&task.task)?;
    let outputs = RunOutputs {
        task_dir,
        answers,
        questions,
        bm25,
        ivf,
        report: out.join("report.json"),
        table: out.join("table.md"),
        stats: out.join("stats.json"),
        stats_markdown: out.join("stats.md"),
    };
    write_bytes(&outputs.report, &to_json_bytes(&entries))?;
    write_bytes(&outputs.table, render_table(&entries).as_bytes())?;
    write_json(&outputs.stats, &StatsFile { task_fingerprint: task.fingerprint().into(), stats: stats.clone() })?;
    write_bytes(&outputs.stats_markdown, render_stats(std::slice::from_ref(&stats)).as_bytes())?;
    write_json(
        &out.join("run.json"),
        &RunRecord {
            fingerprint: config.fingerprint(),
            task_fingerprint: task.fingerprint(),
            settings: config.settings(),
            nq_filter,
            outputs: &outputs,
        },
    )?;
    Ok(RunResult { outputs, entries, stats })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsFile {
    pub task_fingerprint: String,
    pub stats: DatasetStats,
}
