use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::agents::{parse_agent_json, AgentError, AgentKind, Agents, CallLog, ConceptId};
use crate::ingest::EntityRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AdjudicationLabel {
    #[serde(rename = "Exact_Match")]
    ExactMatch,
    #[serde(rename = "Class_vs_Taxon")]
    ClassVsTaxon,
    #[serde(rename = "Hierarchy_Drift")]
    HierarchyDrift,
    #[serde(rename = "Synonym_or_Lexical")]
    SynonymOrLexical,
    #[serde(rename = "Cross_Ontology_Equivalent")]
    CrossOntologyEquivalent,
    #[serde(rename = "Dataset_Annotation_Error")]
    DatasetAnnotationError,
    #[serde(rename = "Model_Incorrect")]
    ModelIncorrect,
    #[serde(rename = "Other")]
    Other,
}

impl AdjudicationLabel {
    pub const ALL: [AdjudicationLabel; 8] = [
        Self::ExactMatch,
        Self::ClassVsTaxon,
        Self::HierarchyDrift,
        Self::SynonymOrLexical,
        Self::CrossOntologyEquivalent,
        Self::DatasetAnnotationError,
        Self::ModelIncorrect,
        Self::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::ExactMatch => "Exact_Match",
            Self::ClassVsTaxon => "Class_vs_Taxon",
            Self::HierarchyDrift => "Hierarchy_Drift",
            Self::SynonymOrLexical => "Synonym_or_Lexical",
            Self::CrossOntologyEquivalent => "Cross_Ontology_Equivalent",
            Self::DatasetAnnotationError => "Dataset_Annotation_Error",
            Self::ModelIncorrect => "Model_Incorrect",
            Self::Other => "Other",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.as_str() == s.trim())
    }
}

/// A prediction that disagrees with every gold target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mismatch {
    pub query: String,
    pub chosen: ConceptId,
    pub gold: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Adjudication {
    pub query: String,
    pub chosen: ConceptId,
    pub selected_gold: String,
    pub label: AdjudicationLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Error)]
pub enum AdjudicationError {
    #[error("case {0:?} has no gold terms")]
    EmptyGold(String),
    #[error(transparent)]
    Agent(#[from] AgentError),
}

fn term_json(r: &EntityRecord) -> Value {
    json!({"id": r.curie, "label": r.label, "definition": r.definition, "synonyms": r.synonyms})
}

/// Classify how `chosen` relates to the most appropriate gold term.
/// Identical identifiers short-circuit to `Exact_Match` without a call.
pub fn adjudicate(
    agents: &Agents<'_>,
    query: &str,
    chosen: &EntityRecord,
    gold: &[EntityRecord],
    log: &mut CallLog,
) -> Result<Adjudication, AdjudicationError> {
    let first = gold
        .first()
        .ok_or_else(|| AdjudicationError::EmptyGold(query.to_string()))?;
    let result = |selected_gold: &str, label, note| Adjudication {
        query: query.to_string(),
        chosen: ConceptId::Curie(chosen.curie.clone()),
        selected_gold: selected_gold.to_string(),
        label,
        note,
    };
    if let Some(same) = gold.iter().find(|g| g.curie == chosen.curie) {
        return Ok(result(&same.curie, AdjudicationLabel::ExactMatch, None));
    }
    let input = json!({
        "query": query,
        "chosen": term_json(chosen),
        "gold": gold.iter().map(term_json).collect::<Vec<_>>(),
    });
    let values = HashMap::from([("input_json", crate::agents::pretty_json(&input))]);
    let response = agents.call(AgentKind::Adjudicator, &agents.prompts().adjudicator, &values, log)?;
    let gold_ids: Vec<&str> = gold.iter().map(|g| g.curie.as_str()).collect();
    let (selected, label, note) = parse_adjudication(&response, &gold_ids);
    Ok(result(selected.unwrap_or(&first.curie), label, note))
}

/// Validate an adjudicator answer. Unknown labels, gold terms outside the
/// case and malformed answers all become `Other` with a note.
pub fn parse_adjudication<'g>(
    response: &str,
    gold: &[&'g str],
) -> (Option<&'g str>, AdjudicationLabel, Option<String>) {
    let obj = match parse_agent_json(response, &["selected_gold", "label"]) {
        Ok(o) => o,
        Err(e) => return (None, AdjudicationLabel::Other, Some(format!("malformed response: {e}"))),
    };
    let selected_raw = obj["selected_gold"].as_str().unwrap_or_default().trim();
    let label_raw = obj["label"].as_str().unwrap_or_default();
    let selected = gold.iter().copied().find(|g| *g == selected_raw);
    match (selected, AdjudicationLabel::parse(label_raw)) {
        (Some(g), Some(label)) => (Some(g), label, None),
        (Some(g), None) => (
            Some(g),
            AdjudicationLabel::Other,
            Some(format!("unknown label {label_raw:?}")),
        ),
        (None, _) => (
            None,
            AdjudicationLabel::Other,
            Some(format!("selected gold {selected_raw:?} is not in the gold set")),
        ),
    }
}

/// Adjudicate one mismatch, looking terms up in `records` (missing ones are
/// stubbed). An abstention is `Model_Incorrect` without a provider call.
pub fn adjudicate_mismatch(
    agents: &Agents<'_>,
    case: &Mismatch,
    records: &BTreeMap<String, EntityRecord>,
    log: &mut CallLog,
) -> Result<Adjudication, AdjudicationError> {
    let lookup = |c: &str| records.get(c).cloned().unwrap_or_else(|| EntityRecord::stub(c));
    let gold: Vec<EntityRecord> = case.gold.iter().map(|c| lookup(c)).collect();
    match case.chosen.curie() {
        Some(c) => adjudicate(agents, &case.query, &lookup(c), &gold, log),
        None => {
            let first = gold
                .first()
                .ok_or_else(|| AdjudicationError::EmptyGold(case.query.clone()))?;
            Ok(Adjudication {
                query: case.query.clone(),
                chosen: ConceptId::Abstain,
                selected_gold: first.curie.clone(),
                label: AdjudicationLabel::ModelIncorrect,
                note: Some("no term was chosen".into()),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelShare {
    pub count: usize,
    pub percent: f64,
}

/// Count per label with percentages rounded half-up to one decimal.
/// Labels that never occur are omitted.
pub fn label_distribution(labels: &[AdjudicationLabel]) -> BTreeMap<AdjudicationLabel, LabelShare> {
    let mut counts: BTreeMap<AdjudicationLabel, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(*l).or_default() += 1;
    }
    let total = labels.len();
    counts
        .into_iter()
        .map(|(label, count)| {
            // Tenths of a percent, rounded half-up in integer arithmetic.
            let tenths = (2000 * count + total) / (2 * total);
            let share = LabelShare {
                count,
                percent: tenths as f64 / 10.0,
            };
            (label, share)
        })
        .collect()
}
