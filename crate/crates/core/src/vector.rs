//! Dense concept embeddings and exact cosine k-nearest-neighbour search.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::hash::Hasher;
use std::io::{Read, Write};
use std::path::Path;

use fnv::FnvHasher;
use thiserror::Error;

use crate::ingest::EntityRecord;
use crate::lexical::{tokenize, ScoredHit};
use crate::provider::{HttpSettings, JsonClient, ProviderError};

pub const DEFAULT_DIMENSION: usize = 384;
const FALLBACK_SEED: u64 = 0x6f6e_746f_6c69_6e6b;
const MAGIC: &[u8; 8] = b"ONTOLVEC";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum VectorError {
    #[error("embedding {curie}: {source}")]
    Provider {
        curie: String,
        #[source]
        source: ProviderError,
    },
    #[error("query embedding: {0}")]
    Query(#[source] ProviderError),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("duplicate CURIE {0}")]
    DuplicateCurie(String),
    #[error("index was built with provider {index}, not {provider}")]
    ProviderMismatch { index: String, provider: String },
    #[error("vector index file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> &str;
    fn dimension(&self) -> usize;
    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError>;
}

/// Text embedded for a concept: label, synonyms, then the definition when
/// one exists.
pub fn embedding_text(record: &EntityRecord) -> String {
    let mut text = record.label.clone();
    if !record.synonyms.is_empty() {
        text.push_str("; synonyms: ");
        text.push_str(&record.synonyms.join(", "));
    }
    if record.has_definition() {
        text.push_str("; ");
        text.push_str(&record.definition);
    }
    text
}

/// Query text for the semantic branch: the mention, with context appended
/// after a single space.
pub fn query_text(mention: &str, context: Option<&str>) -> String {
    match context.map(str::trim).filter(|c| !c.is_empty()) {
        Some(c) => format!("{mention} {c}"),
        None => mention.to_string(),
    }
}

/// Hashed bag-of-tokens embedding. Empty token lists map to `e_0`.
pub fn fallback_embed(text: &str, dimension: usize) -> Vec<f64> {
    assert!(dimension >= 1, "dimension must be positive");
    let mut v = vec![0.0f64; dimension];
    for token in tokenize(text) {
        let mut h = FnvHasher::with_key(FALLBACK_SEED);
        h.write(token.as_bytes());
        v[(h.finish() % dimension as u64) as usize] += 1.0;
    }
    normalize(&mut v);
    v
}

/// L2-normalize in place; an all-zero vector becomes `e_0`.
pub fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        v.iter_mut().for_each(|x| *x = 0.0);
        if let Some(first) = v.first_mut() {
            *first = 1.0;
        }
        return;
    }
    v.iter_mut().for_each(|x| *x /= norm);
}

#[derive(Debug, Clone)]
pub struct FallbackEmbedder {
    dimension: usize,
}

impl FallbackEmbedder {
    pub const NAME: &'static str = "hashed-bow-fnv1a";

    pub fn new(dimension: usize) -> Self {
        assert!(dimension >= 1, "dimension must be positive");
        Self { dimension }
    }
}

impl Default for FallbackEmbedder {
    fn default() -> Self {
        Self::new(DEFAULT_DIMENSION)
    }
}

impl EmbeddingProvider for FallbackEmbedder {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        Ok(fallback_embed(text, self.dimension))
    }
}

/// Remote embedding endpoint (`POST {base_url}/embeddings`).
pub struct HttpEmbedder {
    client: JsonClient,
    name: String,
    dimension: usize,
}

impl HttpEmbedder {
    pub fn new(settings: HttpSettings, dimension: usize) -> Result<Self, ProviderError> {
        let name = format!("http:{}", settings.model);
        Ok(Self {
            client: JsonClient::new(settings)?,
            name,
            dimension,
        })
    }
}

impl EmbeddingProvider for HttpEmbedder {
    fn name(&self) -> &str {
        &self.name
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        let body = serde_json::json!({ "model": self.client.settings().model, "input": text });
        let resp = self.client.post("embeddings", &body)?;
        let arr = resp["data"][0]["embedding"]
            .as_array()
            .ok_or_else(|| ProviderError::Response("missing data[0].embedding".into()))?;
        arr.iter()
            .map(|x| {
                x.as_f64()
                    .ok_or_else(|| ProviderError::Response("non-numeric embedding value".into()))
            })
            .collect()
    }
}

/// Embed with the provider and return a unit `f32` vector.
pub fn embed_unit(provider: &dyn EmbeddingProvider, text: &str) -> Result<Vec<f32>, ProviderError> {
    let mut v = provider.embed(text)?;
    if v.len() != provider.dimension() {
        return Err(ProviderError::Response(format!(
            "provider {} returned {} components, expected {}",
            provider.name(),
            v.len(),
            provider.dimension()
        )));
    }
    normalize(&mut v);
    Ok(v.into_iter().map(|x| x as f32).collect())
}

fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex {
    dimension: usize,
    provider_name: String,
    curies: Vec<String>,
    /// Row-major, `curies.len() * dimension`.
    data: Vec<f32>,
}

impl VectorIndex {
    pub fn build(records: &[EntityRecord], provider: &dyn EmbeddingProvider) -> Result<Self, VectorError> {
        let mut sorted: Vec<&EntityRecord> = records.iter().collect();
        sorted.sort_by(|a, b| a.curie.cmp(&b.curie));
        if let Some(w) = sorted.windows(2).find(|w| w[0].curie == w[1].curie) {
            return Err(VectorError::DuplicateCurie(w[0].curie.clone()));
        }
        let dimension = provider.dimension();
        let mut data = Vec::with_capacity(sorted.len() * dimension);
        let mut curies = Vec::with_capacity(sorted.len());
        for r in sorted {
            let v = embed_unit(provider, &embedding_text(r)).map_err(|source| VectorError::Provider {
                curie: r.curie.clone(),
                source,
            })?;
            data.extend_from_slice(&v);
            curies.push(r.curie.clone());
        }
        Ok(Self {
            dimension,
            provider_name: provider.name().to_string(),
            curies,
            data,
        })
    }

    /// Assemble an index from precomputed rows. Rows are normalized; CURIEs
    /// must be unique and are sorted together with their rows.
    pub fn from_rows(
        provider_name: impl Into<String>,
        dimension: usize,
        rows: Vec<(String, Vec<f64>)>,
    ) -> Result<Self, VectorError> {
        let mut rows = rows;
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(VectorError::DuplicateCurie(w[0].0.clone()));
        }
        let mut data = Vec::with_capacity(rows.len() * dimension);
        let mut curies = Vec::with_capacity(rows.len());
        for (curie, mut v) in rows {
            if v.len() != dimension {
                return Err(VectorError::DimensionMismatch {
                    expected: dimension,
                    actual: v.len(),
                });
            }
            normalize(&mut v);
            data.extend(v.into_iter().map(|x| x as f32));
            curies.push(curie);
        }
        Ok(Self {
            dimension,
            provider_name: provider_name.into(),
            curies,
            data,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn provider_name(&self) -> &str {
        &self.provider_name
    }

    pub fn len(&self) -> usize {
        self.curies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curies.is_empty()
    }

    pub fn curies(&self) -> &[String] {
        &self.curies
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn check_provider(&self, provider: &dyn EmbeddingProvider) -> Result<(), VectorError> {
        if provider.name() != self.provider_name || provider.dimension() != self.dimension {
            return Err(VectorError::ProviderMismatch {
                index: format!("{} ({}d)", self.provider_name, self.dimension),
                provider: format!("{} ({}d)", provider.name(), provider.dimension()),
            });
        }
        Ok(())
    }

    /// Exact top-k by dot product (cosine on unit rows), descending, ties by
    /// ascending CURIE.
    pub fn search(&self, query: &[f32], k: usize) -> Result<Vec<ScoredHit>, VectorError> {
        if query.len() != self.dimension {
            return Err(VectorError::DimensionMismatch {
                expected: self.dimension,
                actual: query.len(),
            });
        }
        if k == 0 {
            return Ok(Vec::new());
        }
        // Min-heap on rank quality: the root is the weakest of the kept rows.
        let mut heap: BinaryHeap<Reverse<Ranked>> = BinaryHeap::with_capacity(k + 1);
        for i in 0..self.curies.len() {
            let item = Ranked {
                score: dot(self.row(i), query),
                row: i,
            };
            if heap.len() < k {
                heap.push(Reverse(item));
            } else if let Some(Reverse(weakest)) = heap.peek() {
                if item > *weakest {
                    heap.pop();
                    heap.push(Reverse(item));
                }
            }
        }
        let mut ranked: Vec<Ranked> = heap.into_iter().map(|Reverse(r)| r).collect();
        ranked.sort_by(|a, b| b.cmp(a));
        Ok(ranked
            .into_iter()
            .map(|r| ScoredHit {
                curie: self.curies[r.row].clone(),
                score: r.score,
                matched_surface: None,
            })
            .collect())
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), VectorError> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(self.dimension as u32).to_le_bytes())?;
        w.write_all(&(self.curies.len() as u32).to_le_bytes())?;
        write_str(&mut w, &self.provider_name)?;
        for x in &self.data {
            w.write_all(&x.to_le_bytes())?;
        }
        for c in &self.curies {
            write_str(&mut w, c)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, VectorError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(VectorError::Format("bad magic".into()));
        }
        let version = read_u32(&mut r)?;
        if version != FORMAT_VERSION {
            return Err(VectorError::Format(format!("unsupported version {version}")));
        }
        let dimension = read_u32(&mut r)? as usize;
        let count = read_u32(&mut r)? as usize;
        let provider_name = read_str(&mut r)?;
        let mut data = Vec::with_capacity(count * dimension);
        let mut buf = [0u8; 4];
        for _ in 0..count * dimension {
            r.read_exact(&mut buf)?;
            data.push(f32::from_le_bytes(buf));
        }
        let mut curies = Vec::with_capacity(count);
        for _ in 0..count {
            curies.push(read_str(&mut r)?);
        }
        let index = Self {
            dimension,
            provider_name,
            curies,
            data,
        };
        for i in 0..count {
            let norm = dot(index.row(i), index.row(i)).sqrt();
            if (norm - 1.0).abs() > 1e-6 {
                return Err(VectorError::Format(format!("row {i} is not unit length ({norm})")));
            }
        }
        if index.curies.windows(2).any(|w| w[0] >= w[1]) {
            return Err(VectorError::Format("CURIEs not strictly sorted".into()));
        }
        Ok(index)
    }

    pub fn save(&self, path: &Path) -> Result<(), VectorError> {
        let file = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn load(path: &Path) -> Result<Self, VectorError> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }
}

#[derive(Debug, Clone, Copy)]
struct Ranked {
    score: f64,
    row: usize,
}

// Greater means better: higher score, then lower row (= lower CURIE).
impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then_with(|| other.row.cmp(&self.row))
    }
}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ranked {}

fn write_str<W: Write>(w: &mut W, s: &str) -> std::io::Result<()> {
    w.write_all(&(s.len() as u32).to_le_bytes())?;
    w.write_all(s.as_bytes())
}

fn read_u32<R: Read>(r: &mut R) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_str<R: Read>(r: &mut R) -> Result<String, VectorError> {
    let len = read_u32(r)? as usize;
    let mut b = vec![0u8; len];
    r.read_exact(&mut b)?;
    String::from_utf8(b).map_err(|e| VectorError::Format(e.to_string()))
}

pub fn build_vector_index(
    records: &[EntityRecord],
    provider: &dyn EmbeddingProvider,
) -> Result<VectorIndex, VectorError> {
    VectorIndex::build(records, provider)
}

pub fn search_semantic(index: &VectorIndex, query: &[f32], k: usize) -> Result<Vec<ScoredHit>, VectorError> {
    index.search(query, k)
}
