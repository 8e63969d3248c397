//! Ontology entity linking: map free-text food mentions to ontology concept
//! identifiers with hybrid lexical/semantic retrieval, an LLM selector and
//! scorer, and a one-hop synonym retry.

pub mod agents;
pub mod cli;
pub mod eval;
pub mod ingest;
pub mod lexical;
pub mod pipeline;
pub mod provider;
pub mod retrieval;
pub mod vector;

pub use ingest::EntityRecord;
