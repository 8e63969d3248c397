//! Inverted index with per-field BM25 scoring over concept labels, synonyms,
//! definitions and relation names.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::EntityRecord;

#[derive(Debug, Error)]
pub enum LexicalError {
    #[error("duplicate CURIE {0} in corpus")]
    DuplicateCurie(String),
    #[error("index file: {0}")]
    Persist(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Lowercase, split on anything that is not alphanumeric, drop empties.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Label,
    Synonyms,
    Definition,
    Relations,
}

impl Field {
    pub const ALL: [Field; 4] = [Field::Label, Field::Synonyms, Field::Definition, Field::Relations];

    fn idx(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
    /// Indexed by [`Field`] order: label, synonyms, definition, relations.
    pub boosts: [f64; 4],
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self {
            k1: 1.2,
            b: 0.75,
            boosts: [3.0, 2.0, 1.0, 0.5],
        }
    }
}

impl Bm25Params {
    pub fn boost(&self, field: Field) -> f64 {
        self.boosts[field.idx()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc: u32,
    pub field: Field,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredHit {
    pub curie: String,
    pub score: f64,
    pub matched_surface: Option<String>,
}

/// Order by descending score, ties by ascending CURIE.
pub fn hit_order(a: &ScoredHit, b: &ScoredHit) -> std::cmp::Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.curie.cmp(&b.curie))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct DocEntry {
    curie: String,
    /// Label then synonyms, as written in the dump.
    surfaces: Vec<String>,
}

/// The four field texts a record contributes to the index.
pub fn field_texts(record: &EntityRecord) -> [String; 4] {
    let definition = if record.has_definition() {
        record.definition.clone()
    } else {
        String::new()
    };
    [
        record.label.clone(),
        record.synonyms.join(" "),
        definition,
        record.relations.keys().cloned().collect::<Vec<_>>().join(" "),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexicalIndex {
    params: Bm25Params,
    docs: Vec<DocEntry>,
    field_lengths: Vec<[u32; 4]>,
    avg_field_lengths: [f64; 4],
    postings: BTreeMap<String, Vec<Posting>>,
}

impl LexicalIndex {
    pub fn build(records: &[EntityRecord], params: Bm25Params) -> Result<Self, LexicalError> {
        let mut sorted: Vec<&EntityRecord> = records.iter().collect();
        sorted.sort_by(|a, b| a.curie.cmp(&b.curie));
        if let Some(w) = sorted.windows(2).find(|w| w[0].curie == w[1].curie) {
            return Err(LexicalError::DuplicateCurie(w[0].curie.clone()));
        }

        let mut docs = Vec::with_capacity(sorted.len());
        let mut field_lengths = Vec::with_capacity(sorted.len());
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut totals = [0u64; 4];

        for (doc, record) in sorted.iter().enumerate() {
            let doc = doc as u32;
            let mut lengths = [0u32; 4];
            for (field, text) in Field::ALL.iter().zip(field_texts(record)) {
                let tokens = tokenize(&text);
                lengths[field.idx()] = tokens.len() as u32;
                totals[field.idx()] += tokens.len() as u64;
                let mut tf: BTreeMap<String, u32> = BTreeMap::new();
                for t in tokens {
                    *tf.entry(t).or_default() += 1;
                }
                for (token, tf) in tf {
                    postings
                        .entry(token)
                        .or_default()
                        .push(Posting { doc, field: *field, tf });
                }
            }
            field_lengths.push(lengths);
            docs.push(DocEntry {
                curie: record.curie.clone(),
                surfaces: record.surface_forms().map(str::to_string).collect(),
            });
        }

        let n = docs.len().max(1) as f64;
        let avg_field_lengths = totals.map(|t| t as f64 / n);

        Ok(Self {
            params,
            docs,
            field_lengths,
            avg_field_lengths,
            postings,
        })
    }

    pub fn params(&self) -> &Bm25Params {
        &self.params
    }

    pub fn doc_count(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn curie(&self, doc: u32) -> Option<&str> {
        self.docs.get(doc as usize).map(|d| d.curie.as_str())
    }

    pub fn postings(&self, token: &str) -> &[Posting] {
        self.postings.get(token).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn term_frequency(&self, curie: &str, field: Field, token: &str) -> u32 {
        let Some(doc) = self.docs.iter().position(|d| d.curie == curie) else {
            return 0;
        };
        self.postings(token)
            .iter()
            .find(|p| p.doc as usize == doc && p.field == field)
            .map_or(0, |p| p.tf)
    }

    /// Boosted sum of per-field BM25 scores; a field's document frequency
    /// counts the documents containing the token in that field. Repeated
    /// query tokens count once.
    pub fn search(&self, query: &str, k: usize) -> Vec<ScoredHit> {
        if k == 0 || self.docs.is_empty() {
            return Vec::new();
        }
        let mut tokens = tokenize(query);
        tokens.sort();
        tokens.dedup();

        let Bm25Params { k1, b, .. } = self.params;
        let n = self.docs.len() as f64;
        let mut scores: HashMap<u32, f64> = HashMap::new();
        for token in &tokens {
            let postings = self.postings(token);
            if postings.is_empty() {
                continue;
            }
            let mut df = [0usize; 4];
            for p in postings {
                df[p.field.idx()] += 1;
            }
            for p in postings {
                let f = p.field.idx();
                let dff = df[f] as f64;
                let idf = (1.0 + (n - dff + 0.5) / (dff + 0.5)).ln();
                let tf = p.tf as f64;
                let len = self.field_lengths[p.doc as usize][f] as f64;
                let norm = 1.0 - b + b * len / self.avg_field_lengths[f];
                let term = idf * tf * (k1 + 1.0) / (tf + k1 * norm);
                *scores.entry(p.doc).or_default() += self.params.boosts[f] * term;
            }
        }

        let mut hits: Vec<ScoredHit> = scores
            .into_iter()
            .map(|(doc, score)| ScoredHit {
                curie: self.docs[doc as usize].curie.clone(),
                score,
                matched_surface: None,
            })
            .collect();
        hits.sort_by(hit_order);
        hits.truncate(k);

        let needle = query.trim().to_lowercase();
        if !needle.is_empty() {
            for hit in &mut hits {
                let doc = self
                    .docs
                    .binary_search_by(|d| d.curie.as_str().cmp(&hit.curie))
                    .expect("hit refers to an indexed doc");
                hit.matched_surface = self.docs[doc]
                    .surfaces
                    .iter()
                    .find(|s| s.trim().to_lowercase() == needle)
                    .cloned();
            }
        }
        hits
    }

    pub fn save(&self, path: &Path) -> Result<(), LexicalError> {
        let text = serde_json::to_string(self).map_err(|e| LexicalError::Persist(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, LexicalError> {
        let text = std::fs::read_to_string(path)?;
        let index: Self = serde_json::from_str(&text).map_err(|e| LexicalError::Persist(e.to_string()))?;
        index.check().map_err(LexicalError::Persist)?;
        Ok(index)
    }

    fn check(&self) -> Result<(), String> {
        if self.field_lengths.len() != self.docs.len() {
            return Err("field length table does not match document count".into());
        }
        for (token, list) in &self.postings {
            for p in list {
                if p.doc as usize >= self.docs.len() {
                    return Err(format!("posting for {token:?} names unknown doc {}", p.doc));
                }
                if p.tf == 0 {
                    return Err(format!("zero term frequency for {token:?}"));
                }
            }
        }
        Ok(())
    }
}

pub fn build_lexical_index(records: &[EntityRecord], params: Bm25Params) -> Result<LexicalIndex, LexicalError> {
    LexicalIndex::build(records, params)
}

pub fn search_lexical(index: &LexicalIndex, query: &str, k: usize) -> Vec<ScoredHit> {
    index.search(query, k)
}
