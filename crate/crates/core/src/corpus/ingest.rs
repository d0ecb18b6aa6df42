use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{DocType, PublicationRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Jsonl,
    Tsv,
}

impl InputFormat {
    /// Guesses the format from a file extension; anything but `.tsv`/`.tab` is JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") | Some("tab") => InputFormat::Tsv,
            _ => InputFormat::Jsonl,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Ingested {
    pub records: Vec<PublicationRecord>,
    /// Records skipped because their id had already been seen.
    pub duplicates: usize,
    /// Non-blank data lines read.
    pub lines: usize,
}

pub fn ingest_path(path: &Path, format: InputFormat) -> Result<Ingested> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_corpus(BufReader::new(file), format)
}

/// Parses a record stream. Ids are trimmed, the first occurrence of an id
/// wins, and reference lists are deduplicated in order.
pub fn ingest_corpus<R: BufRead>(reader: R, format: InputFormat) -> Result<Ingested> {
    let mut out = Ingested::default();
    let mut seen: HashSet<String> = HashSet::new();

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record = match format {
            InputFormat::Jsonl => parse_json_line(&line, line_no)?,
            InputFormat::Tsv => {
                if out.lines == 0 && is_tsv_header(&line) {
                    continue;
                }
                parse_tsv_line(&line, line_no)?
            }
        };
        out.lines += 1;
        if !seen.insert(record.id.clone()) {
            out.duplicates += 1;
            continue;
        }
        out.records.push(record);
    }
    Ok(out)
}

fn is_tsv_header(line: &str) -> bool {
    let mut cols = line.split('\t');
    matches!(
        (cols.next(), cols.next()),
        (Some(a), Some(b)) if a.trim().eq_ignore_ascii_case("id") && b.trim().eq_ignore_ascii_case("year")
    )
}

fn normalize_references<I: IntoIterator<Item = String>>(refs: I) -> Vec<String> {
    let mut seen = HashSet::new();
    refs.into_iter()
        .map(|r| r.trim().to_string())
        .filter(|r| !r.is_empty() && seen.insert(r.clone()))
        .collect()
}

fn check_year(year: i64, line: usize) -> Result<i32> {
    if year <= 0 || year > i32::MAX as i64 {
        return Err(Error::malformed(line, format!("year {year} out of range")));
    }
    Ok(year as i32)
}

fn text_field(obj: &serde_json::Map<String, Value>, key: &str, line: usize) -> Result<String> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(String::new()),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(other) => Err(Error::malformed(
            line,
            format!("field `{key}` must be a string, got {other}"),
        )),
    }
}

fn parse_json_line(line: &str, line_no: usize) -> Result<PublicationRecord> {
    let value: Value = serde_json::from_str(line)
        .map_err(|e| Error::malformed(line_no, format!("invalid JSON: {e}")))?;
    let Value::Object(obj) = value else {
        return Err(Error::malformed(line_no, "expected a JSON object"));
    };

    let id = match obj.get("id") {
        Some(Value::String(s)) => s.trim().to_string(),
        Some(Value::Number(n)) => n.to_string(),
        None | Some(Value::Null) => String::new(),
        Some(other) => {
            return Err(Error::malformed(line_no, format!("invalid id {other}")));
        }
    };
    if id.is_empty() {
        return Err(Error::MissingField {
            line: line_no,
            field: "id",
        });
    }

    let year = match obj.get("year") {
        Some(Value::Number(n)) => n
            .as_i64()
            .ok_or_else(|| Error::malformed(line_no, format!("year {n} is not an integer")))?,
        Some(Value::String(s)) => s
            .trim()
            .parse::<i64>()
            .map_err(|_| Error::malformed(line_no, format!("year {s:?} is not an integer")))?,
        None | Some(Value::Null) => {
            return Err(Error::MissingField {
                line: line_no,
                field: "year",
            })
        }
        Some(other) => {
            return Err(Error::malformed(line_no, format!("invalid year {other}")));
        }
    };
    let year = check_year(year, line_no)?;

    let doc_type = match obj.get("doc_type") {
        Some(Value::String(s)) => DocType::from(s.as_str()),
        None | Some(Value::Null) => DocType::Other("unknown".into()),
        Some(other) => {
            return Err(Error::malformed(
                line_no,
                format!("invalid doc_type {other}"),
            ));
        }
    };

    let references = match obj.get("references") {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Array(items)) => {
            let mut refs = Vec::with_capacity(items.len());
            for item in items {
                match item {
                    Value::String(s) => refs.push(s.clone()),
                    Value::Number(n) => refs.push(n.to_string()),
                    other => {
                        return Err(Error::malformed(
                            line_no,
                            format!("reference entries must be strings, got {other}"),
                        ))
                    }
                }
            }
            normalize_references(refs)
        }
        Some(other) => {
            return Err(Error::malformed(
                line_no,
                format!("references must be an array, got {other}"),
            ))
        }
    };

    Ok(PublicationRecord {
        id,
        year,
        doc_type,
        title: text_field(&obj, "title", line_no)?,
        abstract_text: text_field(&obj, "abstract", line_no)?,
        journal: text_field(&obj, "journal", line_no)?,
        references,
    })
}

fn parse_tsv_line(line: &str, line_no: usize) -> Result<PublicationRecord> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() > 7 {
        return Err(Error::malformed(
            line_no,
            format!("expected at most 7 columns, found {}", cols.len()),
        ));
    }
    let col = |i: usize| cols.get(i).copied().unwrap_or("");

    let id = col(0).trim().to_string();
    if id.is_empty() {
        return Err(Error::MissingField {
            line: line_no,
            field: "id",
        });
    }
    let year_raw = col(1).trim();
    if year_raw.is_empty() {
        return Err(Error::MissingField {
            line: line_no,
            field: "year",
        });
    }
    let year = year_raw
        .parse::<i64>()
        .map_err(|_| Error::malformed(line_no, format!("year {year_raw:?} is not an integer")))?;
    let year = check_year(year, line_no)?;
    let doc_type = match col(2).trim() {
        "" => DocType::Other("unknown".into()),
        s => DocType::from(s),
    };
    let references = normalize_references(col(6).split(';').map(str::to_string));

    Ok(PublicationRecord {
        id,
        year,
        doc_type,
        title: col(3).to_string(),
        abstract_text: col(4).to_string(),
        journal: col(5).to_string(),
        references,
    })
}

pub fn write_jsonl<W: Write>(records: &[PublicationRecord], mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

fn tsv_clean(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

pub fn write_tsv<W: Write>(records: &[PublicationRecord], mut out: W) -> Result<()> {
    writeln!(
        out,
        "id\tyear\tdoc_type\ttitle\tabstract\tjournal\treferences"
    )?;
    for r in records {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            tsv_clean(&r.id),
            r.year,
            tsv_clean(&r.doc_type.to_string()),
            tsv_clean(&r.title),
            tsv_clean(&r.abstract_text),
            tsv_clean(&r.journal),
            r.references
                .iter()
                .map(|s| tsv_clean(s))
                .collect::<Vec<_>>()
                .join(";")
        )?;
    }
    Ok(())
}
