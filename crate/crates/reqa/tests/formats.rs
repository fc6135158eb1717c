use std::fs;

use proptest::prelude::*;
use reqa::nq::convert_nq;
use reqa::squad::{parse_squad, write_squad};
use reqa::vectors::{decode_vectors, encode_vectors, manifest_path, read_matrix, write_matrix, VectorFileError};
use reqa::Error;
use reqa_core::corpus::{AnswerSpan, Article, Corpus, Paragraph, ParagraphId, QuestionRecord};
use reqa_core::EmbeddingMatrix;

const WORDS: &[&str] = &["river", "café", "naïve", "Tower", "1642", "über", "glass", "stone", "north", "eagle", "日本", "quay"];

fn corpus_strategy() -> impl Strategy<Value = Corpus> {
    let paragraph = (
        prop::collection::vec(prop::sample::select(WORDS), 1..30),
        prop::collection::vec((any::<prop::sample::Index>(), 1usize..4, "[A-Za-z ?]{1,20}"), 1..4),
    );
    let article = ("[A-Za-z_]{0,8}", prop::collection::vec(paragraph, 1..4));
    prop::collection::vec(article, 1..4).prop_map(|articles| {
        let mut n = 0;
        let articles = articles
            .into_iter()
            .map(|(title, paragraphs)| Article {
                title,
                paragraphs: paragraphs
                    .into_iter()
                    .map(|(words, questions)| {
                        let context = words.join(" ");
                        let len = context.chars().count();
                        let qas = questions
                            .into_iter()
                            .map(|(at, span, text)| {
                                n += 1;
                                let start = at.index(len);
                                let end = (start + span).min(len);
                                let answer: String = context.chars().skip(start).take(end - start).collect();
                                QuestionRecord {
                                    question_id: format!("q{n}"),
                                    question_text: format!("what {text}"),
                                    answers: vec![AnswerSpan { start, text: answer }],
                                }
                            })
                            .collect();
                        Paragraph { paragraph_id: ParagraphId { article: 0, paragraph: 0 }, context, qas }
                    })
                    .collect(),
            })
            .collect();
        Corpus::new("prop", articles).expect("generated spans are valid")
    })
}

proptest! {
    #[test]
    fn squad_round_trip(corpus in corpus_strategy()) {
        let bytes = write_squad(&corpus);
        let back = parse_squad(&bytes, "prop").unwrap();
        prop_assert_eq!(back.counts().questions, corpus.counts().questions);
        prop_assert_eq!(back, corpus);
    }

    #[test]
    fn rqav_round_trip((dim, rows) in (1usize..9).prop_flat_map(|d| (Just(d), prop::collection::vec(prop::collection::vec(prop::num::f32::NORMAL | prop::num::f32::SUBNORMAL | prop::num::f32::ZERO, d), 0..6)))) {
        let data: Vec<f32> = rows.concat();
        let rows = rows.len();
        let ids: Vec<String> = (0..rows).map(|i| format!("id-{i}")).collect();
        let m = EmbeddingMatrix::new(dim, data, ids).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.rqav");
        write_matrix(&path, &m).unwrap();
        let back = read_matrix(&path).unwrap();
        prop_assert_eq!(back.ids(), m.ids());
        prop_assert!(back.data().iter().zip(m.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}

#[test]
fn mini_corpus_counts() {
    let raw = fs::read(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/mini_squad.json")).unwrap();
    let corpus = parse_squad(&raw, "mini").unwrap();
    let c = corpus.counts();
    assert_eq!((c.articles, c.paragraphs, c.questions), (4, 11, 50));
}

#[test]
fn squad_error_kinds() {
    let good = r#"{"data":[{"title":"t","paragraphs":[{"context":"Alpha beta.","qas":[{"id":"x7","question":"What?","answers":[{"answer_start":6,"text":"beta"}]}]}]}]}"#;
    assert!(parse_squad(good.as_bytes(), "t").is_ok());

    match parse_squad(good.replace("\"beta\"", "\"gamma\"").as_bytes(), "t").unwrap_err() {
        Error::Corpus(e) => assert!(e.to_string().contains("x7")),
        e => panic!("{e:?}"),
    }
    match parse_squad(good.replace("\"context\":\"Alpha beta.\",", "").as_bytes(), "t").unwrap_err() {
        Error::Schema { path, .. } => assert_eq!(path, "data[0].paragraphs[0]"),
        e => panic!("{e:?}"),
    }
    match parse_squad(good.replace("\"answer_start\":6", "\"answer_start\":\"6\"").as_bytes(), "t").unwrap_err() {
        Error::Schema { path, .. } => assert_eq!(path, "data[0].paragraphs[0].qas[0].answers[0].answer_start"),
        e => panic!("{e:?}"),
    }
    let broken = good.replacen(':', "", 1);
    match parse_squad(broken.as_bytes(), "t").unwrap_err() {
        Error::Json { offset, .. } => assert_eq!(offset, 7),
        e => panic!("{e:?}"),
    }
    match parse_squad(format!("{good} trailing").as_bytes(), "t").unwrap_err() {
        Error::Json { offset, .. } => assert_eq!(offset, good.len() + 1),
        e => panic!("{e:?}"),
    }
    let blank = good.replace("Alpha beta.", "   ").replace("\"answer_start\":6,\"text\":\"beta\"", "\"answer_start\":0,\"text\":\" \"");
    assert_eq!(parse_squad(blank.as_bytes(), "t").unwrap_err().code(), "validation");
}

fn sample_matrix() -> EmbeddingMatrix {
    EmbeddingMatrix::new(3, vec![1.0, 2.0, 3.0, -4.0, 5.5, 0.0], vec!["a".into(), "b".into()]).unwrap()
}

#[test]
fn rqav_errors_are_distinct() {
    let bytes = encode_vectors(&sample_matrix());
    assert_eq!(bytes.len(), 20 + 6 * 4);

    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(decode_vectors(&bad), Err(VectorFileError::BadMagic { .. })));

    let mut bad = bytes.clone();
    bad[4] = 2;
    assert!(matches!(decode_vectors(&bad), Err(VectorFileError::Version(2))));

    assert!(matches!(decode_vectors(&bytes[..bytes.len() - 1]), Err(VectorFileError::Truncated { .. })));
    assert!(matches!(decode_vectors(&bytes[..12]), Err(VectorFileError::Truncated { .. })));

    let mut bad = bytes.clone();
    bad.extend_from_slice(&[0, 0, 0, 0]);
    assert!(matches!(decode_vectors(&bad), Err(VectorFileError::TrailingBytes { extra: 4, .. })));

    let mut bad = bytes.clone();
    bad[20 + 4 * 4..20 + 5 * 4].copy_from_slice(&f32::NAN.to_le_bytes());
    assert!(matches!(decode_vectors(&bad), Err(VectorFileError::NonFinite { row: 1, col: 1 })));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.rqav");
    write_matrix(&path, &sample_matrix()).unwrap();
    assert_eq!(fs::read_to_string(manifest_path(&path)).unwrap(), "a\nb\n");
    fs::write(manifest_path(&path), "a\nb\nc\n").unwrap();
    assert!(matches!(read_matrix(&path), Err(VectorFileError::ManifestMismatch { ids: 3, rows: 2 })));
    fs::remove_file(manifest_path(&path)).unwrap();
    assert!(matches!(read_matrix(&path), Err(VectorFileError::Io { .. })));
}

#[test]
fn nq_filter_rules() {
    let lines = [
        r#"{"question":"two spans","context":"Ada and Bob met.","block_type":"paragraph","spans":[{"start":0,"length":3},{"start":8,"length":3}]}"#,
        r#"{"question":"table","context":"Ada | 1815","block_type":"table","spans":[{"start":6,"length":4}]}"#,
        r#"{"question":"list","context":"Ada, Bob","block_type":"list","spans":[{"start":0,"length":3}]}"#,
        r#"{"id":"keep","question":"who wrote the notes","context":"Ada wrote the notes. They were long.","block_type":"paragraph","spans":[{"start":0,"length":3}]}"#,
        r#"{"question":"none","context":"Nothing here.","block_type":"paragraph","spans":[]}"#,
        r#"{"question":"untagged","context":"Ada.","spans":[{"start":0,"length":3}]}"#,
    ]
    .join("\n");
    let (corpus, summary) = convert_nq(lines.as_bytes(), "nq").unwrap();
    assert_eq!(summary.records_in, 6);
    assert_eq!(summary.retained, 1);
    assert_eq!(summary.dropped_multi_span, 1);
    assert_eq!(summary.dropped_non_paragraph, 2);
    assert_eq!(summary.dropped_no_span, 1);
    assert_eq!(summary.rejected_missing_block_type, 1);
    assert_eq!(summary.retained + summary.dropped(), summary.records_in);
    let (_, q) = corpus.questions().next().unwrap();
    assert_eq!(q.question_id, "keep");
    assert_eq!(q.answers[0].text, "Ada");

    let task = reqa::pipeline::build_task(&corpus).unwrap();
    assert_eq!(task.index.len(), 2);

    let outside = r#"{"question":"q","context":"short","block_type":"paragraph","spans":[{"start":3,"length":9}]}"#;
    assert_eq!(convert_nq(outside.as_bytes(), "nq").unwrap_err().code(), "validation");
}
