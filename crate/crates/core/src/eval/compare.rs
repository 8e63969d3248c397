use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::ingest::{obo_purl, EntityRecord};
use crate::pipeline::LinkResult;

/// One system's mapping for a mention, enriched from the dump. Abstentions
/// and CURIEs without a dump entry leave the text fields empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonSide {
    pub curie: String,
    pub label: Option<String>,
    pub definition: Option<String>,
    pub synonyms: Vec<String>,
    pub purl: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonRow {
    pub mention: String,
    pub system_a: ComparisonSide,
    pub system_b: ComparisonSide,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonExport {
    pub rows: Vec<ComparisonRow>,
}

fn side(result: &LinkResult, records: &BTreeMap<String, EntityRecord>) -> ComparisonSide {
    let curie = result.final_id.as_str().to_string();
    match result.final_id.curie() {
        None => ComparisonSide {
            curie,
            label: None,
            definition: None,
            synonyms: Vec::new(),
            purl: None,
        },
        Some(c) => {
            let record = records.get(c);
            ComparisonSide {
                label: record.map(|r| r.label.clone()).or_else(|| result.label.clone()),
                definition: record.map(|r| r.definition.clone()),
                synonyms: record.map(|r| r.synonyms.clone()).unwrap_or_default(),
                purl: Some(obo_purl(c)),
                curie,
            }
        }
    }
}

/// Align two runs by mention (rows follow `run_a` order).
pub fn export_comparison(
    run_a: &[LinkResult],
    run_b: &[LinkResult],
    records: &BTreeMap<String, EntityRecord>,
) -> Result<ComparisonExport, EvalError> {
    let b: HashMap<&str, &LinkResult> = run_b.iter().map(|r| (r.mention.as_str(), r)).collect();
    let a_mentions: HashSet<&str> = run_a.iter().map(|r| r.mention.as_str()).collect();
    let mut unmatched: Vec<String> = run_a
        .iter()
        .filter(|r| !b.contains_key(r.mention.as_str()))
        .chain(run_b.iter().filter(|r| !a_mentions.contains(r.mention.as_str())))
        .map(|r| r.mention.clone())
        .collect();
    // A mention repeated within one run cannot be aligned either.
    for run in [run_a, run_b] {
        let mut seen = HashSet::new();
        unmatched.extend(
            run.iter()
                .filter(|r| !seen.insert(r.mention.as_str()))
                .map(|r| r.mention.clone()),
        );
    }
    if !unmatched.is_empty() {
        unmatched.sort();
        unmatched.dedup();
        return Err(EvalError::MentionMismatch(unmatched));
    }
    let rows = run_a
        .iter()
        .map(|ra| ComparisonRow {
            mention: ra.mention.clone(),
            system_a: side(ra, records),
            system_b: side(b[ra.mention.as_str()], records),
        })
        .collect();
    Ok(ComparisonExport { rows })
}
