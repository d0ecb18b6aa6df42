//! Topic mapping of a publication corpus from its direct citation network.
//!
//! The pipeline ingests publication records, builds a weighted citation
//! graph restricted to its giant component, clusters it with a Leiden /
//! Constant Potts Model engine, projects the same corpus onto an external
//! classification, and compares the resulting cluster solutions through
//! NMI-ranked labels, topic affinity networks, flow matrices and coverage
//! curves.

pub mod analysis;
pub mod corpus;
pub mod error;
pub mod graph;
pub mod labeling;
pub mod leiden;
pub mod pipeline;
pub mod projection;
pub mod synthetic;

pub use error::{Error, ErrorKind, Result};
