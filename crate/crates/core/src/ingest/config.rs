use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::curie::{split_curie, CurieError, PrefixEntry, PrefixMap, PrefixMapError};

pub const OWL_CLASS: &str = "http://www.w3.org/2002/07/owl#Class";
pub const SKOS_CONCEPT: &str = "http://www.w3.org/2004/02/skos/core#Concept";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error(transparent)]
    Prefix(#[from] PrefixMapError),
    #[error("id pattern for {prefix}: {source}")]
    Pattern {
        prefix: String,
        #[source]
        source: regex::Error,
    },
    #[error("duplicate id pattern for prefix {0}")]
    DuplicatePattern(String),
    #[error("relation {0} has an empty name")]
    EmptyRelationName(String),
    #[error("relation {curie}: {source}")]
    Relation {
        curie: String,
        #[source]
        source: CurieError,
    },
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing {path}: {message}")]
    Parse { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationSpec {
    pub curie: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdPatternSpec {
    pub prefix: String,
    pub regex: String,
}

/// On-disk shape of the ingest configuration (JSON or TOML).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestConfigFile {
    pub prefixes: Vec<PrefixEntry>,
    #[serde(default)]
    pub relations: Vec<RelationSpec>,
    #[serde(default)]
    pub id_patterns: Vec<IdPatternSpec>,
    #[serde(default)]
    pub concept_classes: Option<Vec<String>>,
}

#[derive(Debug, Clone)]
pub struct Relation {
    pub curie: String,
    pub iri: String,
    pub name: String,
}

#[derive(Debug, Clone)]
struct IdPattern {
    prefix: String,
    regex: Regex,
}

/// Validated ingest configuration. Identifier patterns are always compiled
/// anchored, so they match the whole CURIE or nothing.
#[derive(Debug, Clone)]
pub struct IngestConfig {
    prefix_map: PrefixMap,
    relations: Vec<Relation>,
    id_patterns: Vec<IdPattern>,
    concept_classes: Vec<String>,
}

impl IngestConfig {
    pub fn from_file_config(file: IngestConfigFile) -> Result<Self, ConfigError> {
        let mut prefix_map = PrefixMap::default();
        for e in file.prefixes {
            prefix_map.insert(e.prefix, e.iri_base)?;
        }

        let mut id_patterns: Vec<IdPattern> = Vec::new();
        for p in file.id_patterns {
            if id_patterns.iter().any(|x| x.prefix == p.prefix) {
                return Err(ConfigError::DuplicatePattern(p.prefix));
            }
            let regex = Regex::new(&format!("^(?:{})$", p.regex)).map_err(|source| ConfigError::Pattern {
                prefix: p.prefix.clone(),
                source,
            })?;
            id_patterns.push(IdPattern {
                prefix: p.prefix,
                regex,
            });
        }

        let mut relations = Vec::new();
        for r in file.relations {
            if r.name.trim().is_empty() {
                return Err(ConfigError::EmptyRelationName(r.curie));
            }
            let iri = prefix_map.expand(&r.curie).map_err(|source| ConfigError::Relation {
                curie: r.curie.clone(),
                source,
            })?;
            relations.push(Relation {
                curie: r.curie,
                iri,
                name: r.name,
            });
        }

        let concept_classes = file
            .concept_classes
            .unwrap_or_else(|| vec![OWL_CLASS.to_string(), SKOS_CONCEPT.to_string()]);

        Ok(Self {
            prefix_map,
            relations,
            id_patterns,
            concept_classes,
        })
    }

    /// Reads `.toml` or `.json` by extension.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let display = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: display.clone(),
            source,
        })?;
        let file: IngestConfigFile = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| ConfigError::Parse {
                path: display.clone(),
                message: e.to_string(),
            })?
        } else {
            serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
                path: display.clone(),
                message: e.to_string(),
            })?
        };
        Self::from_file_config(file)
    }

    /// FoodOn-oriented defaults: FOODON plus the OBO namespaces FoodOn
    /// commonly references, and `rdfs:subClassOf` reported as `is_a`.
    pub fn foodon_default() -> Self {
        Self::from_file_config(default_file_config()).expect("built-in config is valid")
    }

    pub fn prefix_map(&self) -> &PrefixMap {
        &self.prefix_map
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn concept_classes(&self) -> &[String] {
        &self.concept_classes
    }

    pub fn relation_names(&self) -> impl Iterator<Item = &str> {
        self.relations.iter().map(|r| r.name.as_str())
    }

    /// True iff the CURIE's prefix has a configured pattern and the whole
    /// CURIE matches it.
    pub fn validate_curie(&self, curie: &str) -> bool {
        let Ok((prefix, _)) = split_curie(curie) else {
            return false;
        };
        self.id_patterns
            .iter()
            .find(|p| p.prefix == prefix)
            .is_some_and(|p| p.regex.is_match(curie))
    }
}

pub fn default_file_config() -> IngestConfigFile {
    let obo = |p: &str| PrefixEntry {
        prefix: p.to_string(),
        iri_base: format!("http://purl.obolibrary.org/obo/{p}_"),
    };
    IngestConfigFile {
        prefixes: vec![
            obo("FOODON"),
            obo("NCBITaxon"),
            obo("UBERON"),
            obo("CHEBI"),
            obo("RO"),
            obo("BFO"),
            obo("IAO"),
            PrefixEntry {
                prefix: "rdfs".into(),
                iri_base: "http://www.w3.org/2000/01/rdf-schema#".into(),
            },
        ],
        relations: vec![
            RelationSpec {
                curie: "rdfs:subClassOf".into(),
                name: "is_a".into(),
            },
            RelationSpec {
                curie: "RO:0001000".into(),
                name: "derives_from".into(),
            },
            RelationSpec {
                curie: "RO:0002162".into(),
                name: "in_taxon".into(),
            },
        ],
        id_patterns: vec![
            IdPatternSpec {
                prefix: "FOODON".into(),
                regex: r"FOODON:\d{8}".into(),
            },
            IdPatternSpec {
                prefix: "NCBITaxon".into(),
                regex: r"NCBITaxon:\d+".into(),
            },
            IdPatternSpec {
                prefix: "UBERON".into(),
                regex: r"UBERON:\d{7}".into(),
            },
            IdPatternSpec {
                prefix: "CHEBI".into(),
                regex: r"CHEBI:\d+".into(),
            },
        ],
        concept_classes: None,
    }
}
