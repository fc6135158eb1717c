//! SQuAD 1.1 JSON: `data → paragraphs → {context, qas}`.

use reqa_core::corpus::{AnswerSpan, Article, Corpus, Paragraph, ParagraphId, QuestionRecord};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct SquadFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    version: Option<String>,
    data: Vec<SquadArticle>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SquadArticle {
    #[serde(default)]
    title: String,
    paragraphs: Vec<SquadParagraph>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SquadParagraph {
    context: String,
    qas: Vec<SquadQa>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SquadQa {
    id: String,
    question: String,
    answers: Vec<SquadAnswer>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SquadAnswer {
    answer_start: usize,
    text: String,
}

/// Parses and validates a SQuAD 1.1 file.
pub fn parse_squad(raw: &[u8], source_name: &str) -> Result<Corpus> {
    let mut de = serde_json::Deserializer::from_slice(raw);
    let file: SquadFile = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        Error::from_json(e.into_inner(), raw, Some(path))
    })?;
    de.end().map_err(|e| Error::from_json(e, raw, None))?;
    let articles = file
        .data
        .into_iter()
        .map(|a| Article {
            title: a.title,
            paragraphs: a
                .paragraphs
                .into_iter()
                .map(|p| Paragraph {
                    paragraph_id: ParagraphId { article: 0, paragraph: 0 },
                    context: p.context,
                    qas: p
                        .qas
                        .into_iter()
                        .map(|q| QuestionRecord {
                            question_id: q.id,
                            question_text: q.question,
                            answers: q.answers.into_iter().map(|a| AnswerSpan { start: a.answer_start, text: a.text }).collect(),
                        })
                        .collect(),
                })
                .collect(),
        })
        .collect();
    Ok(Corpus::new(source_name, articles)?)
}

/// Serializes a corpus back to SQuAD 1.1 layout.
pub fn write_squad(corpus: &Corpus) -> Vec<u8> {
    let file = SquadFile {
        version: Some("1.1".into()),
        data: corpus
            .articles
            .iter()
            .map(|a| SquadArticle {
                title: a.title.clone(),
                paragraphs: a
                    .paragraphs
                    .iter()
                    .map(|p| SquadParagraph {
                        context: p.context.clone(),
                        qas: p
                            .qas
                            .iter()
                            .map(|q| SquadQa {
                                id: q.question_id.clone(),
                                question: q.question_text.clone(),
                                answers: q.answers.iter().map(|a| SquadAnswer { answer_start: a.start, text: a.text.clone() }).collect(),
                            })
                            .collect(),
                    })
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_vec(&file).expect("corpus serializes")
}
