//! CURIE <-> IRI mapping and identifier validation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const OBO_PURL_BASE: &str = "http://purl.obolibrary.org/obo/";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CurieError {
    #[error("no configured prefix matches IRI {0}")]
    NoPrefix(String),
    #[error("unknown CURIE prefix in {0}")]
    UnknownPrefix(String),
    #[error("not a CURIE: {0}")]
    Malformed(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PrefixMapError {
    #[error("duplicate prefix {0}")]
    DuplicatePrefix(String),
    #[error("duplicate IRI base {0}")]
    DuplicateBase(String),
    #[error("empty IRI base for prefix {0}")]
    EmptyBase(String),
    #[error("invalid prefix {0:?}")]
    InvalidPrefix(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrefixEntry {
    pub prefix: String,
    pub iri_base: String,
}

/// Prefix <-> IRI base table. Prefixes and bases are both unique, so the
/// longest matching base for an IRI is always unambiguous.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PrefixMap {
    entries: Vec<PrefixEntry>,
}

impl PrefixMap {
    pub fn new<I, P, B>(entries: I) -> Result<Self, PrefixMapError>
    where
        I: IntoIterator<Item = (P, B)>,
        P: Into<String>,
        B: Into<String>,
    {
        let mut map = PrefixMap::default();
        for (prefix, base) in entries {
            map.insert(prefix.into(), base.into())?;
        }
        Ok(map)
    }

    pub fn insert(&mut self, prefix: String, iri_base: String) -> Result<(), PrefixMapError> {
        if prefix.is_empty() || prefix.contains(':') || prefix.contains(char::is_whitespace) {
            return Err(PrefixMapError::InvalidPrefix(prefix));
        }
        if iri_base.is_empty() {
            return Err(PrefixMapError::EmptyBase(prefix));
        }
        if self.entries.iter().any(|e| e.prefix == prefix) {
            return Err(PrefixMapError::DuplicatePrefix(prefix));
        }
        if self.entries.iter().any(|e| e.iri_base == iri_base) {
            return Err(PrefixMapError::DuplicateBase(iri_base));
        }
        self.entries.push(PrefixEntry { prefix, iri_base });
        Ok(())
    }

    pub fn entries(&self) -> &[PrefixEntry] {
        &self.entries
    }

    pub fn base_for(&self, prefix: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|e| e.prefix == prefix)
            .map(|e| e.iri_base.as_str())
    }

    /// Compress an IRI using the longest matching base.
    pub fn to_curie(&self, iri: &str) -> Result<String, CurieError> {
        let entry = self
            .entries
            .iter()
            .filter(|e| iri.starts_with(&e.iri_base))
            .max_by_key(|e| e.iri_base.len())
            .ok_or_else(|| CurieError::NoPrefix(iri.to_string()))?;
        let local = &iri[entry.iri_base.len()..];
        if local.is_empty() {
            return Err(CurieError::NoPrefix(iri.to_string()));
        }
        // A generic OBO base leaves "FOODON_03302340" as the local part; the
        // OBO convention turns the ontology-id underscore into the CURIE colon.
        if entry.iri_base == OBO_PURL_BASE {
            if let Some((ns, id)) = local.split_once('_') {
                if !ns.is_empty() && !id.is_empty() && ns.chars().all(|c| c.is_ascii_alphanumeric()) {
                    return Ok(format!("{ns}:{id}"));
                }
            }
        }
        Ok(format!("{}:{}", entry.prefix, local))
    }

    pub fn expand(&self, curie: &str) -> Result<String, CurieError> {
        let (prefix, local) = split_curie(curie)?;
        let base = self
            .base_for(prefix)
            .ok_or_else(|| CurieError::UnknownPrefix(curie.to_string()))?;
        Ok(format!("{base}{local}"))
    }
}

pub fn split_curie(curie: &str) -> Result<(&str, &str), CurieError> {
    match curie.split_once(':') {
        Some((p, l)) if !p.is_empty() && !l.is_empty() => Ok((p, l)),
        _ => Err(CurieError::Malformed(curie.to_string())),
    }
}

/// OBO PURL for a CURIE: `FOODON:03302340` -> `http://purl.obolibrary.org/obo/FOODON_03302340`.
pub fn obo_purl(curie: &str) -> String {
    format!("{OBO_PURL_BASE}{}", curie.replacen(':', "_", 1))
}
