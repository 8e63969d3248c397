//! Accuracy metrics over run records, adjudication of disagreements, and
//! the side-by-side export consumed by the comparison app.

mod adjudication;
mod compare;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::ConceptId;
use crate::ingest::split_curie;
use crate::pipeline::LinkResult;

pub use adjudication::{
    adjudicate, adjudicate_mismatch, label_distribution, parse_adjudication, Adjudication, AdjudicationError,
    AdjudicationLabel, LabelShare, Mismatch,
};
pub use compare::{export_comparison, ComparisonExport, ComparisonRow, ComparisonSide};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("no run records to evaluate")]
    EmptyRun,
    #[error("no gold annotation for mention {0:?}")]
    MissingGold(String),
    #[error("duplicate gold annotation for mention {0:?}")]
    DuplicateGold(String),
    #[error("invalid gold annotation for {mention:?}: {message}")]
    InvalidGold { mention: String, message: String },
    #[error("runs are not aligned; unmatched mentions: {0:?}")]
    MentionMismatch(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldAnnotation {
    pub mention: String,
    pub targets: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    pub mention: String,
    pub y_first: ConceptId,
    pub y_final: ConceptId,
    pub hops: u32,
    pub used_synonyms: bool,
}

impl From<&LinkResult> for RunRecord {
    /// Error-tagged results count as abstentions on both passes.
    fn from(r: &LinkResult) -> Self {
        let (y_first, y_final) = if r.is_error() {
            (ConceptId::Abstain, ConceptId::Abstain)
        } else {
            (r.first_id.clone(), r.final_id.clone())
        };
        Self {
            mention: r.mention.clone(),
            y_first,
            y_final,
            hops: r.hops,
            used_synonyms: r.used_synonyms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub m: usize,
    pub acc1_overall: f64,
    pub acc1_first: f64,
    pub acc1_final: f64,
    pub retry_rate: f64,
    pub synonym_rate: f64,
    pub tau: Option<f64>,
}

/// Index gold annotations by exact mention string.
pub fn gold_index(gold: &[GoldAnnotation]) -> Result<HashMap<&str, &GoldAnnotation>, EvalError> {
    let mut index = HashMap::with_capacity(gold.len());
    for g in gold {
        if g.targets.is_empty() {
            return Err(EvalError::InvalidGold {
                mention: g.mention.clone(),
                message: "no targets".into(),
            });
        }
        if let Some(bad) = g.targets.iter().find(|t| split_curie(t).is_err()) {
            return Err(EvalError::InvalidGold {
                mention: g.mention.clone(),
                message: format!("{bad:?} is not a CURIE"),
            });
        }
        if index.insert(g.mention.as_str(), g).is_some() {
            return Err(EvalError::DuplicateGold(g.mention.clone()));
        }
    }
    Ok(index)
}

fn hit(y: &ConceptId, gold: &GoldAnnotation) -> bool {
    y.curie().is_some_and(|c| gold.targets.iter().any(|t| t == c))
}

pub fn compute_metrics(records: &[RunRecord], gold: &[GoldAnnotation]) -> Result<EvalReport, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyRun);
    }
    let index = gold_index(gold)?;
    let (mut overall, mut first, mut last, mut retries, mut synonyms) = (0usize, 0usize, 0usize, 0usize, 0usize);
    for r in records {
        let g = index
            .get(r.mention.as_str())
            .ok_or_else(|| EvalError::MissingGold(r.mention.clone()))?;
        let f = hit(&r.y_first, g);
        let l = hit(&r.y_final, g);
        overall += usize::from(f || l);
        first += usize::from(f);
        last += usize::from(l);
        retries += usize::from(r.hops > 1);
        synonyms += usize::from(r.used_synonyms);
    }
    let m = records.len();
    let rate = |n: usize| n as f64 / m as f64;
    Ok(EvalReport {
        m,
        acc1_overall: rate(overall),
        acc1_first: rate(first),
        acc1_final: rate(last),
        retry_rate: rate(retries),
        synonym_rate: rate(synonyms),
        tau: None,
    })
}

/// Records whose final prediction misses every gold target.
pub fn mismatches(records: &[RunRecord], gold: &[GoldAnnotation]) -> Result<Vec<Mismatch>, EvalError> {
    let index = gold_index(gold)?;
    let mut out = Vec::new();
    for r in records {
        let g = index
            .get(r.mention.as_str())
            .ok_or_else(|| EvalError::MissingGold(r.mention.clone()))?;
        if !hit(&r.y_final, g) {
            out.push(Mismatch {
                query: r.mention.clone(),
                chosen: r.y_final.clone(),
                gold: g.targets.clone(),
            });
        }
    }
    Ok(out)
}
