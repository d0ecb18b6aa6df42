//! Writes the bundled synthetic corpus.
//!
//! ```text
//! cargo run -p topomap --example make_synthetic -- crates/core/fixtures
//! ```

use std::path::PathBuf;

use topomap::synthetic::synthetic_corpus;

/// Seed of the bundled fixture.
const FIXTURE_SEED: u64 = 2017;

fn main() -> topomap::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("crates/core/fixtures"));
    let corpus = synthetic_corpus(FIXTURE_SEED);
    corpus.write_to(&dir)?;
    println!(
        "{} records, {} classified, {} microfields -> {}",
        corpus.records.len(),
        corpus.classification.len(),
        corpus.microfields.len(),
        dir.display()
    );
    Ok(())
}
