//! Ontology ingestion: N-Triples parsing, concept filtering, facet
//! extraction and the JSON dump.

mod config;
mod curie;
mod dump;
mod extract;
mod ntriples;

pub use config::{
    default_file_config, ConfigError, IdPatternSpec, IngestConfig, IngestConfigFile, Relation, RelationSpec, OWL_CLASS,
    SKOS_CONCEPT,
};
pub use curie::{obo_purl, split_curie, CurieError, PrefixEntry, PrefixMap, PrefixMapError, OBO_PURL_BASE};
pub use dump::{dump_to_string, load_dump, load_dump_str, write_dump, DumpError, EntityRecord, UNDEFINED_DEFINITION};
pub use extract::{extract_entities, IngestReport, SkipReason, SYNONYM_PREDICATES};
pub use ntriples::{parse_ntriples, parse_ntriples_str, SyntaxError, Term, Triple, TripleSet};

use std::io::Read;

/// Parse an N-Triples source into an unfiltered triple set.
pub fn parse_graph<R: Read>(source: R) -> Result<TripleSet, SyntaxError> {
    parse_ntriples(source)
}

/// Parse and extract in one step.
pub fn ingest<R: Read>(source: R, config: &IngestConfig) -> Result<(Vec<EntityRecord>, IngestReport), SyntaxError> {
    let triples = parse_graph(source)?;
    Ok(extract_entities(&triples, config))
}
