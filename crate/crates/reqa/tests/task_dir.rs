use std::fs;

use reqa::artifacts::{read_task, task_fingerprint, write_task, StaleGuard};
use reqa::config::InputFormat;
use reqa::pipeline::{build_task, load_corpus};
use reqa::Error;
use reqa_core::corpus::{AnswerSpan, Article, Corpus, Paragraph, ParagraphId, QuestionRecord};

fn mini() -> Corpus {
    load_corpus(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/mini_squad.json").as_ref(), InputFormat::Squad).unwrap().0
}

#[test]
fn write_then_read_is_identity() {
    let task = build_task(&mini()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_task(dir.path(), &task).unwrap();
    assert_eq!(manifest.fingerprint, task_fingerprint(&task));
    assert_eq!((manifest.n_questions, manifest.n_paragraphs), (50, 11));
    let loaded = read_task(dir.path()).unwrap();
    assert_eq!(loaded.task, task);
    assert!(!dir.path().join(".stale").exists());

    let line = fs::read_to_string(dir.path().join("candidates.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(line.lines().next().unwrap()).unwrap();
    for key in ["candidate_id", "sentence", "paragraph_id", "sentence_index"] {
        assert!(first.get(key).is_some(), "{key}");
    }
}

#[test]
fn edited_stream_is_refused() {
    let task = build_task(&mini()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_task(dir.path(), &task).unwrap();
    let path = dir.path().join("gold.jsonl");
    let text = fs::read_to_string(&path).unwrap().replacen("mini-001", "mini-00x", 1);
    fs::write(&path, text).unwrap();
    assert!(matches!(read_task(dir.path()), Err(Error::Fingerprint { .. })));
}

#[test]
fn stale_directory_is_refused() {
    let task = build_task(&mini()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_task(dir.path(), &task).unwrap();
    let guard = StaleGuard::mark(dir.path(), "index encode").unwrap();
    let err = read_task(dir.path()).unwrap_err();
    assert_eq!(err.code(), "stale_artifact");
    guard.finish().unwrap();
    assert!(read_task(dir.path()).is_ok());
}

#[test]
fn candidates_come_from_contexts_only() {
    let qas = (0..5)
        .map(|i| QuestionRecord {
            question_id: format!("q{i}"),
            question_text: format!("Question {i}?"),
            answers: vec![AnswerSpan { start: 0, text: "One".into() }],
        })
        .collect();
    let corpus = Corpus::new(
        "three",
        vec![Article {
            title: "t".into(),
            paragraphs: vec![Paragraph {
                paragraph_id: ParagraphId { article: 0, paragraph: 0 },
                context: "One fish swam. Two birds flew! Did three cats sleep?".into(),
                qas,
            }],
        }],
    )
    .unwrap();
    let task = build_task(&corpus).unwrap();
    assert_eq!(task.index.len(), 3);
    assert_eq!(task.questions.len(), 5);
}
