//! Publication records: ingestion, corpus filtering and term extraction.

mod ingest;
mod terms;

pub use ingest::{ingest_corpus, ingest_path, write_jsonl, write_tsv, Ingested, InputFormat};
pub use terms::{
    default_exclusions, default_stopwords, extract_terms, load_term_vectors, read_word_list,
    ExclusionList, ExclusionMatch, TermVector, DEFAULT_MAX_NGRAM,
};

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", from = "String")]
pub enum DocType {
    Article,
    Letter,
    Review,
    Other(String),
}

impl fmt::Display for DocType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DocType::Article => f.write_str("article"),
            DocType::Letter => f.write_str("letter"),
            DocType::Review => f.write_str("review"),
            DocType::Other(s) => f.write_str(s),
        }
    }
}

impl From<&str> for DocType {
    fn from(s: &str) -> Self {
        let norm = s.trim().to_lowercase();
        match norm.as_str() {
            "article" | "articles" => DocType::Article,
            "letter" | "letters" => DocType::Letter,
            "review" | "reviews" => DocType::Review,
            _ => DocType::Other(norm),
        }
    }
}

impl From<String> for DocType {
    fn from(s: String) -> Self {
        DocType::from(s.as_str())
    }
}

impl From<DocType> for String {
    fn from(d: DocType) -> Self {
        d.to_string()
    }
}

impl FromStr for DocType {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(DocType::from(s))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicationRecord {
    pub id: String,
    pub year: i32,
    pub doc_type: DocType,
    #[serde(default)]
    pub title: String,
    #[serde(default, rename = "abstract")]
    pub abstract_text: String,
    #[serde(default)]
    pub journal: String,
    #[serde(default)]
    pub references: Vec<String>,
}

/// Year window (inclusive on both ends) and admissible document types.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusFilter {
    pub year_min: i32,
    pub year_max: i32,
    pub allowed_doc_types: BTreeSet<DocType>,
}

impl Default for CorpusFilter {
    fn default() -> Self {
        CorpusFilter {
            year_min: 2000,
            year_max: 2017,
            allowed_doc_types: [DocType::Article, DocType::Letter, DocType::Review]
                .into_iter()
                .collect(),
        }
    }
}

impl CorpusFilter {
    pub fn new(
        year_min: i32,
        year_max: i32,
        allowed_doc_types: impl IntoIterator<Item = DocType>,
    ) -> Result<Self> {
        let filter = CorpusFilter {
            year_min,
            year_max,
            allowed_doc_types: allowed_doc_types.into_iter().collect(),
        };
        filter.validate()?;
        Ok(filter)
    }

    pub fn validate(&self) -> Result<()> {
        if self.year_min > self.year_max {
            return Err(Error::InvalidArgument(format!(
                "year_min {} exceeds year_max {}",
                self.year_min, self.year_max
            )));
        }
        if self.allowed_doc_types.is_empty() {
            return Err(Error::InvalidArgument(
                "corpus filter admits no document type".into(),
            ));
        }
        Ok(())
    }

    pub fn accepts(&self, record: &PublicationRecord) -> bool {
        (self.year_min..=self.year_max).contains(&record.year)
            && self.allowed_doc_types.contains(&record.doc_type)
    }
}

/// Keeps records inside the year window with an admitted document type.
/// Order is preserved; returns the kept records and the number dropped.
pub fn filter_corpus(
    records: Vec<PublicationRecord>,
    filter: &CorpusFilter,
) -> (Vec<PublicationRecord>, usize) {
    let before = records.len();
    let kept: Vec<_> = records.into_iter().filter(|r| filter.accepts(r)).collect();
    let dropped = before - kept.len();
    (kept, dropped)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, year: i32, doc_type: DocType) -> PublicationRecord {
        PublicationRecord {
            id: id.into(),
            year,
            doc_type,
            title: String::new(),
            abstract_text: String::new(),
            journal: String::new(),
            references: vec![],
        }
    }

    #[test]
    fn year_before_window_is_dropped() {
        let (kept, dropped) = filter_corpus(
            vec![rec("a", 1999, DocType::Article)],
            &CorpusFilter::default(),
        );
        assert!(kept.is_empty());
        assert_eq!(dropped, 1);
    }

    #[test]
    fn proceedings_are_dropped_by_default() {
        let r = rec("a", 2005, DocType::from("proceedings"));
        assert_eq!(r.doc_type, DocType::Other("proceedings".into()));
        let (kept, dropped) = filter_corpus(vec![r], &CorpusFilter::default());
        assert!(kept.is_empty());
        assert_eq!(dropped, 1);
    }

    #[test]
    fn boundary_year_review_is_kept() {
        let (kept, dropped) = filter_corpus(
            vec![rec("a", 2017, DocType::Review)],
            &CorpusFilter::default(),
        );
        assert_eq!(kept.len(), 1);
        assert_eq!(dropped, 0);
    }

    #[test]
    fn filter_preserves_order() {
        let input = vec![
            rec("c", 2001, DocType::Article),
            rec("x", 1980, DocType::Article),
            rec("a", 2002, DocType::Letter),
            rec("b", 2003, DocType::Review),
        ];
        let (kept, dropped) = filter_corpus(input, &CorpusFilter::default());
        let ids: Vec<_> = kept.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["c", "a", "b"]);
        assert_eq!(dropped, 1);
    }

    #[test]
    fn invalid_filters_rejected() {
        assert!(CorpusFilter::new(2010, 2000, [DocType::Article]).is_err());
        assert!(CorpusFilter::new(2000, 2010, []).is_err());
    }

    #[test]
    fn doc_type_plural_spellings() {
        assert_eq!(DocType::from("Letters"), DocType::Letter);
        assert_eq!(DocType::from(" REVIEW "), DocType::Review);
        assert_eq!(DocType::from("Article").to_string(), "article");
    }
}
