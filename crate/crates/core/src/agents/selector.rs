use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{parse_agent_json, pretty_json, AgentError, AgentKind, Agents, CallLog, ConceptId};
use crate::retrieval::{Candidate, Mention};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorDecision {
    pub chosen_id: ConceptId,
    pub explanation: String,
}

/// Numbered, human-readable candidate listing used in prompts.
pub fn render_candidates(candidates: &[Candidate]) -> String {
    let mut out = String::new();
    for (i, c) in candidates.iter().enumerate() {
        out.push_str(&format!("{}. ID: {}\n   Label: {}\n", i + 1, c.curie, c.label));
        if let Some(m) = &c.matched_surface {
            out.push_str(&format!("   Matched surface form: {m}\n"));
        }
        out.push_str(&format!("   Definition: {}\n", c.definition_snippet));
        let syns = if c.synonyms_shown.is_empty() {
            "(none)".to_string()
        } else {
            c.synonyms_shown.join("; ")
        };
        out.push_str(&format!("   Synonyms: {syns}\n"));
        for (name, targets) in &c.relations_shown {
            out.push_str(&format!("   Relation {name}: {}\n", targets.join(", ")));
        }
    }
    out.trim_end().to_string()
}

fn candidates_json(candidates: &[Candidate]) -> Value {
    Value::Array(
        candidates
            .iter()
            .map(|c| {
                json!({
                    "id": c.curie,
                    "label": c.label,
                    "matched_surface": c.matched_surface,
                    "synonyms": c.synonyms_shown,
                    "definition": c.definition_snippet,
                })
            })
            .collect(),
    )
}

pub(super) fn context_line(mention: &Mention) -> String {
    match mention.context.as_deref().map(str::trim).filter(|c| !c.is_empty()) {
        Some(c) => format!("Context: {c}"),
        None => String::new(),
    }
}

impl Agents<'_> {
    pub fn render_selector_prompt(
        &self,
        mention: &Mention,
        candidates: &[Candidate],
    ) -> Result<(String, String), AgentError> {
        self.prompts
            .selector
            .render(&selector_values(mention, candidates)?)
            .map_err(Into::into)
    }

    /// Pick one candidate or abstain. Answers naming a CURIE outside the
    /// candidate list, and unparseable answers, become abstentions.
    pub fn select(
        &self,
        mention: &Mention,
        candidates: &[Candidate],
        log: &mut CallLog,
    ) -> Result<SelectorDecision, AgentError> {
        let values = selector_values(mention, candidates)?;
        let response = self.call(AgentKind::Selector, &self.prompts.selector, &values, log)?;
        Ok(interpret_selection(&response, candidates))
    }
}

fn selector_values<'k>(mention: &Mention, candidates: &[Candidate]) -> Result<HashMap<&'k str, String>, AgentError> {
    if candidates.is_empty() {
        return Err(AgentError::EmptyCandidates);
    }
    let input = json!({
        "mention": mention.text,
        "context": mention.context,
        "candidates": candidates_json(candidates),
    });
    Ok(HashMap::from([
        ("mention", mention.text.clone()),
        ("context_line", context_line(mention)),
        ("candidates", render_candidates(candidates)),
        ("input_json", pretty_json(&input)),
    ]))
}

pub(crate) fn interpret_selection(response: &str, candidates: &[Candidate]) -> SelectorDecision {
    let obj = match parse_agent_json(response, &["chosen_id"]) {
        Ok(obj) => obj,
        Err(e) => {
            return SelectorDecision {
                chosen_id: ConceptId::Abstain,
                explanation: format!("unparseable selection ({e})"),
            }
        }
    };
    let explanation = obj
        .get("explanation")
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string();
    let raw = match &obj["chosen_id"] {
        Value::String(s) => s.trim().to_string(),
        Value::Number(n) => n.to_string(),
        Value::Null => String::new(),
        other => other.to_string(),
    };
    let chosen = ConceptId::parse(&raw);
    match &chosen {
        ConceptId::Abstain => SelectorDecision {
            chosen_id: ConceptId::Abstain,
            explanation,
        },
        ConceptId::Curie(c) if candidates.iter().any(|cand| &cand.curie == c) => SelectorDecision {
            chosen_id: chosen,
            explanation,
        },
        ConceptId::Curie(c) => SelectorDecision {
            chosen_id: ConceptId::Abstain,
            explanation: format!(
                "selector returned {c}, which is not among the candidates; treated as abstention. {explanation}"
            )
            .trim_end()
            .to_string(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{MockProvider, PromptSet};
    use crate::retrieval::Branch;

    fn cand(curie: &str, label: &str, synonyms: &[&str], definition: &str) -> Candidate {
        Candidate {
            curie: curie.into(),
            label: label.into(),
            matched_surface: None,
            synonyms_shown: synonyms.iter().map(|s| s.to_string()).collect(),
            definition_snippet: definition.into(),
            relations_shown: vec![],
            branch: Branch::Lexical,
            branch_rank: 0,
        }
    }

    #[test]
    fn prompt_lists_candidates_and_rules() {
        let prompts = PromptSet::builtin();
        let mock = MockProvider::new();
        let agents = Agents::new(&mock, &prompts);
        let cands = vec![
            cand(
                "FOODON:03540141",
                "01410 - pita bread (efsa foodex2)",
                &[],
                "Alternative name: Lebanese bread.",
            ),
            cand(
                "FOODON:00005570",
                "lebanon bologna",
                &[],
                "A smoked, fermented beef sausage.",
            ),
            cand("FOODON:03302684", "middle east bread", &[], "Undefined"),
        ];
        let (system, user) = agents
            .render_selector_prompt(&Mention::new("LEBANESE"), &cands)
            .unwrap();
        assert!(user.contains("FOODON:03540141"));
        assert!(system.contains("Rule 1 (exact match)"));
        assert!(system.contains("Rule 2 (specificity)"));
        assert!(system.contains("\"chosen_id\""));

        let (_, one) = agents.render_selector_prompt(&Mention::new("x"), &cands[..1]).unwrap();
        assert_eq!(one.matches(". ID: ").count(), 1);

        assert!(matches!(
            agents.render_selector_prompt(&Mention::new("x"), &[]),
            Err(AgentError::EmptyCandidates)
        ));
    }

    #[test]
    fn out_of_set_answer_becomes_abstain() {
        let cands = vec![cand("F:1", "a", &[], "")];
        let d = interpret_selection(r#"{"chosen_id":"F:9","explanation":"because"}"#, &cands);
        assert!(d.chosen_id.is_abstain());
        assert!(d.explanation.contains("F:9"));
    }

    #[test]
    fn numeric_abstain_and_garbage() {
        let cands = vec![cand("F:1", "a", &[], "")];
        assert!(interpret_selection(r#"{"chosen_id":-1,"explanation":"none"}"#, &cands)
            .chosen_id
            .is_abstain());
        let d = interpret_selection("I pick the first one", &cands);
        assert!(d.chosen_id.is_abstain());
        assert!(d.explanation.starts_with("unparseable selection"));
        let ok = interpret_selection("```json\n{\"chosen_id\":\"F:1\",\"explanation\":\"e\"}\n```", &cands);
        assert_eq!(ok.chosen_id, ConceptId::Curie("F:1".into()));
    }
}
