use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::PublicationRecord;
use crate::error::{Error, Result};

pub const DEFAULT_MAX_NGRAM: usize = 3;

const STOPWORDS: &[&str] = &[
    "a", "about", "across", "after", "against", "all", "also", "among", "an", "and", "are", "as",
    "at", "be", "been", "between", "both", "but", "by", "can", "could", "do", "does", "during",
    "each", "for", "from", "has", "have", "how", "however", "if", "in", "into", "is", "it", "its",
    "may", "more", "most", "not", "of", "on", "or", "other", "our", "over", "such", "than", "that",
    "the", "their", "these", "this", "those", "through", "to", "under", "using", "was", "we",
    "were", "what", "when", "where", "which", "while", "with", "within", "without",
];

/// The field-delineating query phrases; a trailing `*` matches any word ending.
const QUERY_PHRASES: &[&str] = &[
    "ecological invasion*",
    "biological invasion*",
    "invasion biology",
    "invasion ecology",
    "invasive species",
    "alien species",
    "introduced species",
    "non-native species",
    "nonnative species",
    "nonindigenous species",
    "non-indigenous species",
    "allochthonous species",
    "exotic species",
];

pub fn default_stopwords() -> HashSet<String> {
    STOPWORDS.iter().map(|s| s.to_string()).collect()
}

pub fn default_exclusions() -> ExclusionList {
    ExclusionList::new(QUERY_PHRASES.iter().copied(), ExclusionMatch::Exact)
}

/// Reads a one-entry-per-line list; blank lines and `#` comments are skipped,
/// entries are trimmed and lowercased.
pub fn read_word_list<R: BufRead>(reader: R) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let entry = line.trim();
        if entry.is_empty() || entry.starts_with('#') {
            continue;
        }
        out.push(entry.to_lowercase());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExclusionMatch {
    #[default]
    Exact,
    Substring,
}

#[derive(Debug, Clone)]
struct ExclusionEntry {
    phrase: String,
    wildcard: bool,
}

#[derive(Debug, Clone, Default)]
pub struct ExclusionList {
    entries: Vec<ExclusionEntry>,
    mode: ExclusionMatch,
}

fn normalize_phrase(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

impl ExclusionList {
    pub fn new<I, S>(entries: I, mode: ExclusionMatch) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let entries = entries
            .into_iter()
            .filter_map(|e| {
                let norm = normalize_phrase(e.as_ref());
                let (phrase, wildcard) = match norm.strip_suffix('*') {
                    Some(p) => (p.trim_end().to_string(), true),
                    None => (norm, false),
                };
                (!phrase.is_empty()).then_some(ExclusionEntry { phrase, wildcard })
            })
            .collect();
        ExclusionList { entries, mode }
    }

    pub fn empty() -> Self {
        ExclusionList::default()
    }

    pub fn with_mode(mut self, mode: ExclusionMatch) -> Self {
        self.mode = mode;
        self
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Case-insensitive test of a term against every entry.
    pub fn excludes(&self, term: &str) -> bool {
        let term = normalize_phrase(term);
        self.entries.iter().any(|e| match (self.mode, e.wildcard) {
            (ExclusionMatch::Exact, false) => term == e.phrase,
            (ExclusionMatch::Exact, true) => term
                .strip_prefix(&e.phrase)
                .is_some_and(|rest| rest.chars().all(char::is_alphanumeric)),
            (ExclusionMatch::Substring, _) => term.contains(&e.phrase),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermVector {
    pub doc_id: String,
    pub terms: BTreeSet<String>,
}

/// Splits text into chunks of lowercase alphanumeric tokens. Whitespace
/// separates tokens; any other non-alphanumeric character also closes the chunk.
fn chunks(text: &str) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    let mut chunk: Vec<String> = Vec::new();
    let mut token = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            token.extend(ch.to_lowercase());
            continue;
        }
        if !token.is_empty() {
            chunk.push(std::mem::take(&mut token));
        }
        if !ch.is_whitespace() && !chunk.is_empty() {
            out.push(std::mem::take(&mut chunk));
        }
    }
    if !token.is_empty() {
        chunk.push(token);
    }
    if !chunk.is_empty() {
        out.push(chunk);
    }
    out
}

/// Stopword-bounded n-gram extraction over title and abstract. No n-gram
/// spans punctuation or contains a stopword; excluded terms are dropped.
pub fn extract_terms(
    record: &PublicationRecord,
    stopwords: &HashSet<String>,
    max_ngram: usize,
    exclusions: &ExclusionList,
) -> TermVector {
    let max_ngram = max_ngram.max(1);
    let mut terms = BTreeSet::new();
    // the title and abstract never join into one phrase
    for text in [record.title.as_str(), record.abstract_text.as_str()] {
        for chunk in chunks(text) {
            for run in chunk.split(|t| stopwords.contains(t)) {
                for start in 0..run.len() {
                    for len in 1..=max_ngram.min(run.len() - start) {
                        let term = run[start..start + len].join(" ");
                        if !exclusions.excludes(&term) {
                            terms.insert(term);
                        }
                    }
                }
            }
        }
    }
    TermVector {
        doc_id: record.id.clone(),
        terms,
    }
}

/// Reads `doc_id<TAB>term` rows into per-document presence sets, in order of
/// first appearance. An optional `doc_id<TAB>term` header line is skipped.
pub fn load_term_vectors<R: BufRead>(
    reader: R,
    exclusions: &ExclusionList,
) -> Result<Vec<TermVector>> {
    let mut order: Vec<TermVector> = Vec::new();
    let mut slot: HashMap<String, usize> = HashMap::new();
    let mut data_rows = 0usize;

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let row = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (doc, term) = line
            .split_once('\t')
            .ok_or_else(|| Error::malformed(row, "expected `doc_id<TAB>term`"))?;
        if data_rows == 0 && doc.trim() == "doc_id" && term.trim() == "term" {
            continue;
        }
        data_rows += 1;
        let doc = doc.trim();
        let term = normalize_phrase(term);
        if doc.is_empty() {
            return Err(Error::malformed(row, "empty doc_id"));
        }
        if term.is_empty() {
            return Err(Error::malformed(row, "empty term"));
        }
        let pos = *slot.entry(doc.to_string()).or_insert_with(|| {
            order.push(TermVector {
                doc_id: doc.to_string(),
                terms: BTreeSet::new(),
            });
            order.len() - 1
        });
        if !exclusions.excludes(&term) {
            order[pos].terms.insert(term);
        }
    }
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DocType;
    use proptest::prelude::*;

    fn record(title: &str, abs: &str) -> PublicationRecord {
        PublicationRecord {
            id: "d".into(),
            year: 2010,
            doc_type: DocType::Article,
            title: title.into(),
            abstract_text: abs.into(),
            journal: String::new(),
            references: vec![],
        }
    }

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn zebra_mussels_hand_trace() {
        let stop: HashSet<String> = ["of".to_string()].into();
        let tv = extract_terms(
            &record("Invasion of zebra mussels", ""),
            &stop,
            2,
            &ExclusionList::empty(),
        );
        assert_eq!(
            tv.terms,
            set(&["invasion", "zebra", "mussels", "zebra mussels"])
        );
    }

    #[test]
    fn query_phrase_is_excluded() {
        let tv = extract_terms(
            &record("Invasive species spread", ""),
            &default_stopwords(),
            3,
            &default_exclusions(),
        );
        assert!(!tv.terms.contains("invasive species"));
        assert!(tv.terms.contains("invasive"));
        assert!(tv.terms.contains("species spread"));
    }

    #[test]
    fn wildcard_phrase_matches_plural() {
        let ex = default_exclusions();
        assert!(ex.excludes("Biological Invasions"));
        assert!(ex.excludes("biological invasion"));
        assert!(!ex.excludes("biological invasions spread"));
        assert_eq!(ex.len(), 13);
    }

    #[test]
    fn substring_mode() {
        let ex = ExclusionList::new(["alien species"], ExclusionMatch::Substring);
        assert!(ex.excludes("alien species richness"));
        let exact = ex.clone().with_mode(ExclusionMatch::Exact);
        assert!(!exact.excludes("alien species richness"));
    }

    #[test]
    fn empty_text_gives_no_terms() {
        let tv = extract_terms(
            &record("", ""),
            &default_stopwords(),
            3,
            &default_exclusions(),
        );
        assert!(tv.terms.is_empty());
    }

    #[test]
    fn punctuation_breaks_phrases() {
        let tv = extract_terms(
            &record("crab, algae", "Great Lakes"),
            &HashSet::new(),
            3,
            &ExclusionList::empty(),
        );
        assert_eq!(
            tv.terms,
            set(&["crab", "algae", "great", "lakes", "great lakes"])
        );
    }

    #[test]
    fn word_list_skips_comments() {
        let list = read_word_list("# header\nThe\n\n  of \n#x\n".as_bytes()).unwrap();
        assert_eq!(list, ["the", "of"]);
    }

    #[test]
    fn term_rows_grouped_as_sets() {
        let tvs = load_term_vectors(
            "d1\ta\nd1\ta\nd1\tb\nzz\tc\n".as_bytes(),
            &ExclusionList::empty(),
        )
        .unwrap();
        assert_eq!(tvs.len(), 2);
        assert_eq!(tvs[0].terms, set(&["a", "b"]));
        assert_eq!(tvs[1].doc_id, "zz");
    }

    #[test]
    fn term_row_with_empty_term_errors() {
        let err = load_term_vectors(
            "doc_id\tterm\nd1\tx\nd1\t\n".as_bytes(),
            &ExclusionList::empty(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 3, .. }));
    }

    #[test]
    fn term_rows_apply_exclusions() {
        let tvs = load_term_vectors(
            "d1\tInvasive Species\nd1\tcrab\n".as_bytes(),
            &default_exclusions(),
        )
        .unwrap();
        assert_eq!(tvs[0].terms, set(&["crab"]));
    }

    proptest! {
        #[test]
        fn extraction_idempotent_and_clean(text in "[a-z ,.;]{0,80}") {
            let stop = default_stopwords();
            let ex = ExclusionList::new(["zz", "ab cd"], ExclusionMatch::Exact);
            let tv = extract_terms(&record(&text, ""), &stop, 3, &ex);
            let mut again = BTreeSet::new();
            for t in &tv.terms {
                prop_assert!(!t.is_empty());
                prop_assert!(!ex.excludes(t));
                prop_assert_eq!(t.to_lowercase(), t.clone());
                again.extend(extract_terms(&record(t, ""), &stop, 3, &ex).terms);
            }
            prop_assert_eq!(again, tv.terms);
        }
    }
}
