use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::selector::SelectorDecision;
use super::{parse_agent_json, pretty_json, AgentError, AgentKind, Agents, CallLog};
use crate::ingest::EntityRecord;
use crate::retrieval::{Candidate, Mention};

pub const MAX_ALTERNATIVES: usize = 3;
pub const UNPARSEABLE_ASSESSMENT: &str = "unparseable assessment";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alternative {
    pub curie: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explanation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceAssessment {
    pub score: f64,
    pub explanation: String,
    pub alternatives: Vec<Alternative>,
}

impl Agents<'_> {
    /// Assess the selector's choice against the original mention. Malformed
    /// answers fail closed to a score of 0.
    pub fn score(
        &self,
        mention: &Mention,
        decision: &SelectorDecision,
        chosen: &EntityRecord,
        candidates: &[Candidate],
        tau: f64,
        log: &mut CallLog,
    ) -> Result<ConfidenceAssessment, AgentError> {
        if decision.chosen_id.is_abstain() {
            return Err(AgentError::NothingToScore);
        }
        let others: Vec<&Candidate> = candidates.iter().filter(|c| c.curie != chosen.curie).collect();
        let listing = if others.is_empty() {
            "(none)".to_string()
        } else {
            others
                .iter()
                .map(|c| format!("- {} \"{}\"", c.curie, c.label))
                .collect::<Vec<_>>()
                .join("\n")
        };
        let input = json!({
            "mention": mention.text,
            "chosen": {
                "id": chosen.curie,
                "label": chosen.label,
                "definition": chosen.definition,
                "synonyms": chosen.synonyms,
            },
            "selector_rationale": decision.explanation,
            "tau": tau,
            "candidates": others.iter().map(|c| json!({"id": c.curie, "label": c.label})).collect::<Vec<_>>(),
        });
        let synonyms = if chosen.synonyms.is_empty() {
            "(none)".to_string()
        } else {
            chosen.synonyms.join("; ")
        };
        let values = HashMap::from([
            ("mention", mention.text.clone()),
            ("chosen_id", chosen.curie.clone()),
            ("chosen_label", chosen.label.clone()),
            ("chosen_definition", chosen.definition.clone()),
            ("chosen_synonyms", synonyms),
            ("selector_rationale", decision.explanation.clone()),
            ("candidates", listing),
            ("tau", format!("{tau}")),
            ("input_json", pretty_json(&input)),
        ]);
        let response = self.call(AgentKind::Scorer, &self.prompts.scorer, &values, log)?;
        Ok(interpret_assessment(&response, &chosen.curie, candidates, tau))
    }
}

pub(crate) fn interpret_assessment(
    response: &str,
    chosen: &str,
    candidates: &[Candidate],
    tau: f64,
) -> ConfidenceAssessment {
    let unparseable = || ConfidenceAssessment {
        score: 0.0,
        explanation: UNPARSEABLE_ASSESSMENT.to_string(),
        alternatives: Vec::new(),
    };
    let Ok(obj) = parse_agent_json(response, &["score", "explanation"]) else {
        return unparseable();
    };
    let score = match &obj["score"] {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse::<f64>().ok(),
        _ => None,
    };
    let Some(score) = score.filter(|s| !s.is_nan()) else {
        return unparseable();
    };
    let score = score.clamp(0.0, 1.0);
    let explanation = match &obj["explanation"] {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };

    let mut alternatives: Vec<Alternative> = Vec::new();
    if score < tau {
        if let Some(Value::Array(items)) = obj.get("alternatives") {
            for item in items {
                let (id, why) = match item {
                    Value::String(s) => (Some(s.trim().to_string()), None),
                    Value::Object(o) => (
                        ["id", "curie", "chosen_id"]
                            .iter()
                            .find_map(|k| o.get(*k).and_then(Value::as_str))
                            .map(|s| s.trim().to_string()),
                        ["explanation", "reason"]
                            .iter()
                            .find_map(|k| o.get(*k).and_then(Value::as_str))
                            .map(str::to_string),
                    ),
                    _ => (None, None),
                };
                let Some(id) = id else { continue };
                let Some(cand) = candidates.iter().find(|c| c.curie == id) else {
                    continue;
                };
                if id == chosen || alternatives.iter().any(|a| a.curie == id) {
                    continue;
                }
                alternatives.push(Alternative {
                    curie: id,
                    label: Some(cand.label.clone()),
                    explanation: why,
                });
                if alternatives.len() == MAX_ALTERNATIVES {
                    break;
                }
            }
        }
    }
    ConfidenceAssessment {
        score,
        explanation,
        alternatives,
    }
}
