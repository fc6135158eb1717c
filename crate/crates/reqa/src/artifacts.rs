//! On-disk task directory: `paragraphs.jsonl`, `candidates.jsonl`,
//! `questions.jsonl`, `gold.jsonl` and a `task.json` manifest carrying a
//! content fingerprint over the four streams.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use reqa_core::task::{AnswerIndex, Candidate, Gold, GoldMap, ParagraphEntry, Question, QuestionSet, Task};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const TASK_FORMAT: &str = "reqa-task";
pub const TASK_VERSION: u32 = 1;
pub const STALE_MARKER: &str = ".stale";

const PARAGRAPHS: &str = "paragraphs.jsonl";
const CANDIDATES: &str = "candidates.jsonl";
const QUESTIONS: &str = "questions.jsonl";
const GOLD: &str = "gold.jsonl";
const MANIFEST: &str = "task.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskManifest {
    pub format: String,
    pub version: u32,
    pub source_name: String,
    pub segmenter: String,
    pub n_paragraphs: usize,
    pub n_candidates: usize,
    pub n_questions: usize,
    pub fingerprint: String,
}

#[derive(Serialize, Deserialize)]
struct ParagraphLine {
    row: u32,
    #[serde(flatten)]
    entry: ParagraphEntry,
}

#[derive(Serialize, Deserialize)]
struct QuestionLine {
    row: u32,
    #[serde(flatten)]
    question: Question,
}

#[derive(Serialize, Deserialize)]
struct GoldLine {
    row: u32,
    question_id: String,
    candidates: Vec<u32>,
    paragraphs: Vec<u32>,
}

/// A task together with the fingerprint of its serialized form.
#[derive(Debug, Clone)]
pub struct TaskArtifacts {
    pub task: Task,
    pub manifest: TaskManifest,
}

impl TaskArtifacts {
    pub fn fingerprint(&self) -> &str {
        &self.manifest.fingerprint
    }
}

struct Streams {
    paragraphs: Vec<u8>,
    candidates: Vec<u8>,
    questions: Vec<u8>,
    gold: Vec<u8>,
}

impl Streams {
    fn of(task: &Task) -> Streams {
        let index = &task.index;
        Streams {
            paragraphs: jsonl(index.paragraphs.iter().enumerate().map(|(i, p)| ParagraphLine { row: i as u32, entry: p.clone() })),
            candidates: jsonl(index.candidates.iter()),
            questions: jsonl(task.questions.questions.iter().enumerate().map(|(i, q)| QuestionLine { row: i as u32, question: q.clone() })),
            gold: jsonl(task.gold.entries.iter().zip(&task.questions.questions).enumerate().map(|(i, (g, q))| GoldLine {
                row: i as u32,
                question_id: q.question_id.clone(),
                candidates: g.candidates.clone(),
                paragraphs: g.paragraphs.clone(),
            })),
        }
    }

    fn named(&self) -> [(&'static str, &[u8]); 4] {
        [(PARAGRAPHS, &self.paragraphs), (CANDIDATES, &self.candidates), (QUESTIONS, &self.questions), (GOLD, &self.gold)]
    }

    fn fingerprint(&self, source_name: &str) -> String {
        let mut h = Sha256::new();
        h.update(TASK_FORMAT.as_bytes());
        h.update(TASK_VERSION.to_le_bytes());
        h.update((source_name.len() as u64).to_le_bytes());
        h.update(source_name.as_bytes());
        for (name, bytes) in self.named() {
            h.update(name.as_bytes());
            h.update((bytes.len() as u64).to_le_bytes());
            h.update(bytes);
        }
        format!("{:x}", h.finalize())
    }
}

fn jsonl<T: Serialize>(items: impl Iterator<Item = T>) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, &item).expect("task rows serialize");
        out.push(b'\n');
    }
    out
}

/// Fingerprint a task would carry once written.
pub fn task_fingerprint(task: &Task) -> String {
    Streams::of(task).fingerprint(&task.source_name)
}

pub fn manifest_for(task: &Task) -> TaskManifest {
    TaskManifest {
        format: TASK_FORMAT.into(),
        version: TASK_VERSION,
        source_name: task.source_name.clone(),
        segmenter: "rule".into(),
        n_paragraphs: task.index.paragraphs.len(),
        n_candidates: task.index.candidates.len(),
        n_questions: task.questions.len(),
        fingerprint: task_fingerprint(task),
    }
}

/// Marks a directory as holding incomplete output until [`StaleGuard::finish`].
pub struct StaleGuard {
    path: PathBuf,
}

impl StaleGuard {
    pub fn mark(dir: &Path, stage: &str) -> Result<StaleGuard> {
        fs::create_dir_all(dir).map_err(Error::io(dir))?;
        let path = dir.join(STALE_MARKER);
        fs::write(&path, format!("{stage}\n")).map_err(Error::io(&path))?;
        Ok(StaleGuard { path })
    }

    pub fn finish(self) -> Result<()> {
        fs::remove_file(&self.path).map_err(Error::io(&self.path))
    }
}

pub fn check_not_stale(dir: &Path) -> Result<()> {
    let marker = dir.join(STALE_MARKER);
    if marker.exists() {
        let stage = fs::read_to_string(&marker).unwrap_or_default();
        return Err(Error::Stale { path: dir.to_path_buf(), stage: stage.trim().to_string() });
    }
    Ok(())
}

pub fn write_task(dir: &Path, task: &Task) -> Result<TaskManifest> {
    let guard = StaleGuard::mark(dir, "index build")?;
    let streams = Streams::of(task);
    for (name, bytes) in streams.named() {
        write_bytes(&dir.join(name), bytes)?;
    }
    let manifest = manifest_for(task);
    write_json(&dir.join(MANIFEST), &manifest)?;
    guard.finish()?;
    Ok(manifest)
}

pub fn read_task(dir: &Path) -> Result<TaskArtifacts> {
    check_not_stale(dir)?;
    let manifest: TaskManifest = read_json(&dir.join(MANIFEST))?;
    if manifest.format != TASK_FORMAT || manifest.version != TASK_VERSION {
        return Err(Error::Config(format!("{}: unsupported task format {} v{}", dir.display(), manifest.format, manifest.version)));
    }
    let read = |name: &str| fs::read(dir.join(name)).map_err(Error::io(dir.join(name)));
    let streams = Streams { paragraphs: read(PARAGRAPHS)?, candidates: read(CANDIDATES)?, questions: read(QUESTIONS)?, gold: read(GOLD)? };
    let found = streams.fingerprint(&manifest.source_name);
    if found != manifest.fingerprint {
        return Err(Error::Fingerprint { what: dir.display().to_string(), expected: manifest.fingerprint, found });
    }

    let paragraph_lines: Vec<ParagraphLine> = parse_jsonl(PARAGRAPHS, &streams.paragraphs)?;
    let candidates: Vec<Candidate> = parse_jsonl(CANDIDATES, &streams.candidates)?;
    let question_lines: Vec<QuestionLine> = parse_jsonl(QUESTIONS, &streams.questions)?;
    let gold_lines: Vec<GoldLine> = parse_jsonl(GOLD, &streams.gold)?;

    let bad = |file: &str, row: usize, message: String| Error::Schema { path: format!("{file} line {}", row + 1), message };
    for (i, p) in paragraph_lines.iter().enumerate() {
        if p.row as usize != i {
            return Err(bad(PARAGRAPHS, i, format!("row {} out of order", p.row)));
        }
    }
    for (i, c) in candidates.iter().enumerate() {
        let para = paragraph_lines.get(c.paragraph as usize).map(|p| &p.entry);
        let consistent = c.candidate_id as usize == i
            && para.is_some_and(|p| {
                p.paragraph_id == c.paragraph_id
                    && (p.first_candidate + c.sentence_index) as usize == i
                    && c.sentence_index < p.sentence_count
            });
        if !consistent {
            return Err(bad(CANDIDATES, i, "candidate does not match its paragraph".into()));
        }
    }
    if gold_lines.len() != question_lines.len() {
        return Err(bad(GOLD, gold_lines.len(), format!("{} gold rows for {} questions", gold_lines.len(), question_lines.len())));
    }
    for (i, (q, g)) in question_lines.iter().zip(&gold_lines).enumerate() {
        if q.row as usize != i || q.question.paragraph as usize >= paragraph_lines.len() {
            return Err(bad(QUESTIONS, i, "question row or paragraph out of range".into()));
        }
        let in_range = g.candidates.iter().all(|&c| (c as usize) < candidates.len())
            && g.paragraphs.iter().all(|&p| (p as usize) < paragraph_lines.len());
        if g.row as usize != i || g.question_id != q.question.question_id || g.candidates.is_empty() || g.paragraphs.is_empty() || !in_range
        {
            return Err(bad(GOLD, i, "gold row does not match its question".into()));
        }
    }

    let task = Task {
        source_name: manifest.source_name.clone(),
        index: AnswerIndex { candidates, paragraphs: paragraph_lines.into_iter().map(|p| p.entry).collect() },
        questions: QuestionSet { questions: question_lines.into_iter().map(|q| q.question).collect() },
        gold: GoldMap { entries: gold_lines.into_iter().map(|g| Gold { candidates: g.candidates, paragraphs: g.paragraphs }).collect() },
    };
    Ok(TaskArtifacts { task, manifest })
}

fn parse_jsonl<T: DeserializeOwned>(name: &str, bytes: &[u8]) -> Result<Vec<T>> {
    bytes
        .split(|&b| b == b'\n')
        .enumerate()
        .filter(|(_, line)| !line.is_empty())
        .map(|(i, line)| {
            let mut de = serde_json::Deserializer::from_slice(line);
            serde_path_to_error::deserialize(&mut de)
                .map_err(|e| Error::Schema { path: format!("{name} line {}: {}", i + 1, e.path()), message: e.into_inner().to_string() })
        })
        .collect()
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(Error::io(parent))?;
    }
    let mut f = fs::File::create(path).map_err(Error::io(path))?;
    f.write_all(bytes).map_err(Error::io(path))
}

/// Pretty JSON with a trailing newline.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("value serializes");
    bytes.push(b'\n');
    bytes
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_bytes(path, &to_json_bytes(value))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(Error::io(path))?;
    let mut de = serde_json::Deserializer::from_slice(&bytes);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let at = format!("{}: {}", path.display(), e.path());
        Error::from_json(e.into_inner(), &bytes, Some(at))
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}
