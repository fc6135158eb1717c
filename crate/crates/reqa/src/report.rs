//! Report files, Markdown tables and report comparison.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use reqa_core::metrics::{EvalReport, Granularity, Metrics};
use reqa_core::stats::DatasetStats;
use reqa_core::task::QuestionType;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::artifacts::sha256_hex;
use crate::error::{Error, Result};

/// Where a report came from. `fingerprint` covers the task and every
/// parameter in `settings`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub fingerprint: String,
    pub task_fingerprint: String,
    pub settings: Value,
}

impl ReportConfig {
    pub fn new(task_fingerprint: &str, settings: Value) -> Self {
        let payload = serde_json::json!({ "task": task_fingerprint, "settings": settings });
        Self {
            fingerprint: sha256_hex(&serde_json::to_vec(&payload).expect("settings serialize")),
            task_fingerprint: task_fingerprint.to_string(),
            settings,
        }
    }
}

/// One row of a report file: metrics for one system at one granularity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub system: String,
    pub granularity: Granularity,
    pub mrr: f64,
    pub r_at: BTreeMap<usize, f64>,
    pub r_at_any_hit: BTreeMap<usize, f64>,
    pub by_type: BTreeMap<QuestionType, Metrics>,
    pub n_questions: usize,
    pub n_candidates: usize,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub clamped: BTreeMap<usize, usize>,
    pub config: ReportConfig,
}

impl ReportEntry {
    pub fn new(system: impl Into<String>, report: EvalReport, config: ReportConfig) -> Self {
        Self {
            system: system.into(),
            granularity: report.granularity,
            mrr: report.mrr,
            r_at: report.r_at,
            r_at_any_hit: report.r_at_any_hit,
            by_type: report.by_type,
            n_questions: report.n_questions,
            n_candidates: report.n_candidates,
            clamped: report.clamped,
            config,
        }
    }
}

pub fn parse_report(bytes: &[u8]) -> Result<Vec<ReportEntry>> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        Error::from_json(e.into_inner(), bytes, Some(path))
    })
}

fn granularity_name(g: Granularity) -> &'static str {
    match g {
        Granularity::Sentence => "sentence",
        Granularity::Paragraph => "paragraph",
    }
}

fn cutoffs_of(entries: &[&ReportEntry]) -> Vec<usize> {
    let mut c: Vec<usize> = entries.iter().flat_map(|e| e.r_at.keys().copied()).collect();
    c.sort_unstable();
    c.dedup();
    c
}

fn header(out: &mut String, first: &str, cutoffs: &[usize]) {
    let _ = write!(out, "| {first} | MRR |");
    for n in cutoffs {
        let _ = write!(out, " R@{n} |");
    }
    out.push_str("\n|---|---:|");
    for _ in cutoffs {
        out.push_str("---:|");
    }
    out.push('\n');
}

fn metric_row(out: &mut String, label: &str, mrr: f64, r_at: &BTreeMap<usize, f64>, cutoffs: &[usize], signed: bool) {
    let fmt = |v: Option<f64>| match v {
        Some(v) if signed => format!("{v:+.4}"),
        Some(v) => format!("{v:.4}"),
        None => "n/a".into(),
    };
    let _ = write!(out, "| {label} | {} |", fmt(Some(mrr)));
    for n in cutoffs {
        let _ = write!(out, " {} |", fmt(r_at.get(n).copied()));
    }
    out.push('\n');
}

/// One table per granularity with a row per system, in the layout of a
/// multi-system retrieval comparison.
pub fn render_table(entries: &[ReportEntry]) -> String {
    let mut out = String::new();
    for g in [Granularity::Paragraph, Granularity::Sentence] {
        let rows: Vec<&ReportEntry> = entries.iter().filter(|e| e.granularity == g).collect();
        if rows.is_empty() {
            continue;
        }
        let cutoffs = cutoffs_of(&rows);
        let _ = writeln!(out, "### {}-level retrieval\n", granularity_name(g));
        header(&mut out, "Model", &cutoffs);
        for e in rows {
            metric_row(&mut out, &e.system, e.mrr, &e.r_at, &cutoffs, false);
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delta {
    pub granularity: Granularity,
    pub system_a: String,
    pub system_b: String,
    pub mrr: f64,
    pub r_at: BTreeMap<usize, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub task_fingerprint: String,
    pub deltas: Vec<Delta>,
    pub markdown: String,
}

fn task_of(entries: &[ReportEntry], name: &str) -> Result<String> {
    let first = entries.first().ok_or_else(|| Error::Compare(format!("report {name} is empty")))?;
    let fp = &first.config.task_fingerprint;
    if let Some(e) = entries.iter().find(|e| &e.config.task_fingerprint != fp) {
        return Err(Error::Compare(format!("report {name} mixes tasks {} and {}", fp, e.config.task_fingerprint)));
    }
    Ok(fp.clone())
}

/// Side-by-side metrics of two reports with `B − A` deltas.
///
/// Systems are paired by name within each granularity; when the two sides
/// have one system each under different names, those two are paired.
pub fn compare(a: &[ReportEntry], b: &[ReportEntry]) -> Result<Comparison> {
    let fa = task_of(a, "A")?;
    let fb = task_of(b, "B")?;
    if fa != fb {
        return Err(Error::Compare(format!("task fingerprints differ: A={fa}, B={fb}")));
    }
    let mut deltas = Vec::new();
    let mut md = String::new();
    for g in [Granularity::Paragraph, Granularity::Sentence] {
        let ra: Vec<&ReportEntry> = a.iter().filter(|e| e.granularity == g).collect();
        let rb: Vec<&ReportEntry> = b.iter().filter(|e| e.granularity == g).collect();
        if ra.is_empty() && rb.is_empty() {
            continue;
        }
        let mut pairs: Vec<(&ReportEntry, &ReportEntry)> =
            ra.iter().filter_map(|x| rb.iter().find(|y| y.system == x.system).map(|y| (*x, *y))).collect();
        if pairs.is_empty() && ra.len() == 1 && rb.len() == 1 {
            pairs.push((ra[0], rb[0]));
        }
        let all: Vec<&ReportEntry> = ra.iter().chain(&rb).copied().collect();
        let cutoffs = cutoffs_of(&all);
        let _ = writeln!(md, "### {}-level retrieval\n", granularity_name(g));
        header(&mut md, "Model", &cutoffs);
        for (side, rows) in [("A", &ra), ("B", &rb)] {
            for e in rows.iter() {
                metric_row(&mut md, &format!("{side}: {}", e.system), e.mrr, &e.r_at, &cutoffs, false);
            }
        }
        for (x, y) in pairs {
            let r_at = cutoffs.iter().filter_map(|n| Some((*n, y.r_at.get(n)? - x.r_at.get(n)?))).collect();
            let d = Delta { granularity: g, system_a: x.system.clone(), system_b: y.system.clone(), mrr: y.mrr - x.mrr, r_at };
            let label = if x.system == y.system { format!("Δ {}", x.system) } else { format!("Δ {} − {}", y.system, x.system) };
            metric_row(&mut md, &label, d.mrr, &d.r_at, &cutoffs, true);
            deltas.push(d);
        }
        md.push('\n');
    }
    Ok(Comparison { task_fingerprint: fa, deltas, markdown: md })
}

/// Counts, token statistics and question types as three Markdown tables.
pub fn render_stats(stats: &[DatasetStats]) -> String {
    let mut out =
        String::from("### Dataset size\n\n| Dataset | Questions | Candidate sentences | Candidate paragraphs |\n|---|---:|---:|---:|\n");
    for s in stats {
        let _ = writeln!(out, "| {} | {} | {} | {} |", s.source_name, s.questions, s.candidate_sentences, s.candidate_paragraphs);
    }
    out.push_str("\n### Token statistics\n\n| Dataset | Question length | Answer length | Query coverage (%) |\n|---|---:|---:|---:|\n");
    for s in stats {
        let _ = writeln!(
            out,
            "| {} | {:.1} ± {:.1} | {:.1} ± {:.1} | {:.1} ± {:.1} |",
            s.source_name,
            s.question_length.mean,
            s.question_length.std,
            s.answer_length.mean,
            s.answer_length.std,
            s.query_coverage.mean,
            s.query_coverage.std
        );
    }
    out.push_str("\n### Question types (%)\n\n| Dataset |");
    for t in QuestionType::ALL {
        let _ = write!(out, " {} |", t.as_str());
    }
    out.push_str("\n|---|");
    for _ in QuestionType::ALL {
        out.push_str("---:|");
    }
    out.push('\n');
    for s in stats {
        let _ = write!(out, "| {} |", s.source_name);
        for t in QuestionType::ALL {
            let _ = write!(out, " {:.1} |", s.question_types.get(&t).copied().unwrap_or(0.0));
        }
        out.push('\n');
    }
    out
}
