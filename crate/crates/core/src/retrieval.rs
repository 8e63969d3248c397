//! Hybrid retrieval: lexical and semantic hit lists concatenated lexical
//! first, deduplicated by CURIE, reordered by surface-form rules and
//! truncated. Scores from the two branches are never compared.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{load_dump, DumpError, EntityRecord};
use crate::lexical::{tokenize, Bm25Params, LexicalError, LexicalIndex, ScoredHit};
use crate::vector::{embed_unit, query_text, EmbeddingProvider, VectorError, VectorIndex};

pub const RELATION_TARGET_CAP: usize = 3;

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("CURIE {0} is not in the dump")]
    UnknownCurie(String),
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error(transparent)]
    Lexical(#[from] LexicalError),
    #[error(transparent)]
    Dump(#[from] DumpError),
    #[error("invalid retrieval config: {0}")]
    Config(String),
    #[error("indexes out of sync: {0}")]
    Mismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RetrievalConfig {
    pub k_lex: usize,
    pub k_sem: usize,
    pub k_tot: usize,
    pub snippet_chars: usize,
    pub top_synonyms: usize,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            k_lex: 15,
            k_sem: 15,
            k_tot: 30,
            snippet_chars: 300,
            top_synonyms: 5,
        }
    }
}

impl RetrievalConfig {
    /// Sets both branch sizes and resets `k_tot` to their sum.
    pub fn with_branch_sizes(k_lex: usize, k_sem: usize) -> Self {
        Self {
            k_lex,
            k_sem,
            k_tot: k_lex + k_sem,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), RetrievalError> {
        if self.k_tot > self.k_lex + self.k_sem {
            return Err(RetrievalError::Config(format!(
                "k_tot {} exceeds k_lex + k_sem = {}",
                self.k_tot,
                self.k_lex + self.k_sem
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
}

impl Mention {
    pub fn new(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            context: None,
        }
    }

    pub fn with_context(text: impl Into<String>, context: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            context: Some(context.into()),
        }
    }

    pub fn is_valid(&self) -> bool {
        !self.text.trim().is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Lexical,
    Semantic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub curie: String,
    pub label: String,
    pub matched_surface: Option<String>,
    pub synonyms_shown: Vec<String>,
    pub definition_snippet: String,
    pub relations_shown: Vec<(String, Vec<String>)>,
    pub branch: Branch,
    pub branch_rank: usize,
}

pub fn definition_snippet(definition: &str, max_chars: usize) -> String {
    if definition.chars().count() <= max_chars {
        return definition.to_string();
    }
    let mut s: String = definition.chars().take(max_chars).collect();
    s.push('…');
    s
}

pub fn candidate_payload(
    records: &BTreeMap<String, EntityRecord>,
    hit: &ScoredHit,
    branch: Branch,
    rank: usize,
    config: &RetrievalConfig,
) -> Result<Candidate, RetrievalError> {
    let record = records
        .get(&hit.curie)
        .ok_or_else(|| RetrievalError::UnknownCurie(hit.curie.clone()))?;
    Ok(Candidate {
        curie: record.curie.clone(),
        label: record.label.clone(),
        matched_surface: hit.matched_surface.clone(),
        synonyms_shown: record.synonyms.iter().take(config.top_synonyms).cloned().collect(),
        definition_snippet: definition_snippet(&record.definition, config.snippet_chars),
        relations_shown: record
            .relations
            .iter()
            .map(|(name, targets)| {
                (
                    name.clone(),
                    targets.iter().take(RELATION_TARGET_CAP).cloned().collect(),
                )
            })
            .collect(),
        branch,
        branch_rank: rank,
    })
}

/// Ordering tier of a record against the mention: 0 exact label/synonym
/// match, 1 a single surface form covers every mention token, 2 otherwise.
pub fn match_tier(record: &EntityRecord, mention: &str) -> u8 {
    if record.exact_surface(mention).is_some() {
        return 0;
    }
    let wanted: HashSet<String> = tokenize(mention).into_iter().collect();
    if wanted.is_empty() {
        return 2;
    }
    let covers = record.surface_forms().any(|s| {
        let have: HashSet<String> = tokenize(s).into_iter().collect();
        wanted.is_subset(&have)
    });
    if covers {
        1
    } else {
        2
    }
}

/// Drop repeated CURIEs (first occurrence wins), stable-partition by
/// [`match_tier`] against `mention`, truncate to `k_tot`. Candidates whose
/// record is missing sort last.
pub fn promote_and_truncate(
    candidates: impl IntoIterator<Item = Candidate>,
    mention: &str,
    records: &BTreeMap<String, EntityRecord>,
    k_tot: usize,
) -> Vec<Candidate> {
    let mut seen = HashSet::new();
    let mut out: Vec<Candidate> = candidates
        .into_iter()
        .filter(|c| seen.insert(c.curie.clone()))
        .collect();
    out.sort_by_key(|c| records.get(&c.curie).map_or(3, |r| match_tier(r, mention)));
    for c in &mut out {
        if c.matched_surface.is_none() {
            if let Some(r) = records.get(&c.curie) {
                c.matched_surface = r.exact_surface(mention).map(str::to_string);
            }
        }
    }
    out.truncate(k_tot);
    out
}

/// Concatenate lexical then semantic candidates and apply the fusion rules.
pub fn fuse(
    lexical: Vec<Candidate>,
    semantic: Vec<Candidate>,
    mention: &str,
    records: &BTreeMap<String, EntityRecord>,
    k_tot: usize,
) -> Vec<Candidate> {
    promote_and_truncate(lexical.into_iter().chain(semantic), mention, records, k_tot)
}

/// Interleave several candidate lists round-robin (first of each list, then
/// second of each, ...), then dedup/promote against `original` and cap.
pub fn fuse_round_robin(
    lists: Vec<Vec<Candidate>>,
    original: &str,
    records: &BTreeMap<String, EntityRecord>,
    k_tot: usize,
) -> Vec<Candidate> {
    let longest = lists.iter().map(Vec::len).max().unwrap_or(0);
    let mut iters: Vec<_> = lists.into_iter().map(Vec::into_iter).collect();
    let mut interleaved = Vec::new();
    for _ in 0..longest {
        for it in iters.iter_mut() {
            if let Some(c) = it.next() {
                interleaved.push(c);
            }
        }
    }
    promote_and_truncate(interleaved, original, records, k_tot)
}

/// The dump plus both indexes built over it, and the embedder used for
/// semantic queries.
pub struct Indexes {
    records: BTreeMap<String, EntityRecord>,
    lexical: LexicalIndex,
    vector: VectorIndex,
    embedder: Box<dyn EmbeddingProvider>,
}

impl Indexes {
    pub fn build(
        records: Vec<EntityRecord>,
        params: Bm25Params,
        embedder: Box<dyn EmbeddingProvider>,
    ) -> Result<Self, RetrievalError> {
        let lexical = LexicalIndex::build(&records, params)?;
        let vector = VectorIndex::build(&records, embedder.as_ref())?;
        Self::from_parts(records, lexical, vector, embedder)
    }

    pub fn from_parts(
        records: Vec<EntityRecord>,
        lexical: LexicalIndex,
        vector: VectorIndex,
        embedder: Box<dyn EmbeddingProvider>,
    ) -> Result<Self, RetrievalError> {
        vector.check_provider(embedder.as_ref())?;
        let records: BTreeMap<String, EntityRecord> = records.into_iter().map(|r| (r.curie.clone(), r)).collect();
        if lexical.doc_count() != records.len() || vector.len() != records.len() {
            return Err(RetrievalError::Mismatch(format!(
                "dump has {} records, lexical index {}, vector index {}",
                records.len(),
                lexical.doc_count(),
                vector.len()
            )));
        }
        if let Some(c) = vector.curies().iter().find(|c| !records.contains_key(*c)) {
            return Err(RetrievalError::Mismatch(format!("vector index has unknown CURIE {c}")));
        }
        Ok(Self {
            records,
            lexical,
            vector,
            embedder,
        })
    }

    /// Load a dump and the persisted indexes built from it.
    pub fn load(
        dump: &Path,
        lexical: &Path,
        vector: &Path,
        embedder: Box<dyn EmbeddingProvider>,
    ) -> Result<Self, RetrievalError> {
        let file = std::fs::File::open(dump).map_err(DumpError::from)?;
        let records = load_dump(std::io::BufReader::new(file))?;
        Self::from_parts(
            records,
            LexicalIndex::load(lexical)?,
            VectorIndex::load(vector)?,
            embedder,
        )
    }

    pub fn records(&self) -> &BTreeMap<String, EntityRecord> {
        &self.records
    }

    pub fn record(&self, curie: &str) -> Option<&EntityRecord> {
        self.records.get(curie)
    }

    pub fn lexical(&self) -> &LexicalIndex {
        &self.lexical
    }

    pub fn vector(&self) -> &VectorIndex {
        &self.vector
    }

    pub fn embedder(&self) -> &dyn EmbeddingProvider {
        self.embedder.as_ref()
    }
}

pub fn retrieve(
    mention: &Mention,
    indexes: &Indexes,
    config: &RetrievalConfig,
) -> Result<Vec<Candidate>, RetrievalError> {
    config.validate()?;
    let lexical_hits = indexes.lexical.search(&mention.text, config.k_lex);
    let semantic_hits = if config.k_sem == 0 || indexes.vector.is_empty() {
        Vec::new()
    } else {
        let text = query_text(&mention.text, mention.context.as_deref());
        let q = embed_unit(indexes.embedder(), &text).map_err(VectorError::Query)?;
        indexes.vector.search(&q, config.k_sem)?
    };

    let to_candidates = |hits: Vec<ScoredHit>, branch| -> Result<Vec<Candidate>, RetrievalError> {
        hits.iter()
            .enumerate()
            .map(|(rank, hit)| candidate_payload(&indexes.records, hit, branch, rank, config))
            .collect()
    };
    let lexical = to_candidates(lexical_hits, Branch::Lexical)?;
    let semantic = to_candidates(semantic_hits, Branch::Semantic)?;
    Ok(fuse(lexical, semantic, &mention.text, &indexes.records, config.k_tot))
}
