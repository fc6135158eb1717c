//! Simplified Natural Questions JSONL, one record per line.

use std::io::BufRead;

use reqa_core::corpus::{filter_nq_records, Corpus, NqFilterSummary, NqRecord};

use crate::error::{Error, Result};

/// Reads every non-blank line as an [`NqRecord`].
pub fn read_nq_records(reader: impl BufRead) -> Result<Vec<NqRecord>> {
    let mut records = Vec::new();
    let mut offset = 0usize;
    for (lineno, line) in reader.split(b'\n').enumerate() {
        let line = line.map_err(Error::io("<nq input>"))?;
        let start = offset;
        offset += line.len() + 1;
        if line.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        let mut de = serde_json::Deserializer::from_slice(&line);
        let record = serde_path_to_error::deserialize(&mut de)
            .map_err(|e| {
                let path = format!("line {}: {}", lineno + 1, e.path());
                Error::from_json(e.into_inner(), &line, Some(path))
            })
            .and_then(|r| de.end().map(|()| r).map_err(|e| Error::from_json(e, &line, None)))
            .map_err(|e| match e {
                Error::Json { offset, message } => Error::Json { offset: start + offset, message },
                e => e,
            })?;
        records.push(record);
    }
    Ok(records)
}

pub fn convert_nq(reader: impl BufRead, source_name: &str) -> Result<(Corpus, NqFilterSummary)> {
    let records = read_nq_records(reader)?;
    Ok(filter_nq_records(source_name, records)?)
}
