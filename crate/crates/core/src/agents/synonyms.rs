use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::selector::context_line;
use super::{parse_agent_json, pretty_json, AgentError, AgentKind, Agents, CallLog};
use crate::retrieval::Mention;

pub const MAX_SYNONYMS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynonymProposal {
    pub synonyms: Vec<String>,
    pub failure_reason: String,
}

impl Agents<'_> {
    /// Ask for up to five reformulations of the mention, conditioned on why
    /// the previous link was rejected. A malformed answer yields an empty
    /// proposal.
    pub fn generate_synonyms(
        &self,
        mention: &Mention,
        failure_reason: &str,
        log: &mut CallLog,
    ) -> Result<SynonymProposal, AgentError> {
        if failure_reason.trim().is_empty() {
            return Err(AgentError::EmptyFailureReason);
        }
        let input = json!({
            "mention": mention.text,
            "context": mention.context,
            "failure_reason": failure_reason,
        });
        let values = HashMap::from([
            ("mention", mention.text.clone()),
            ("context_line", context_line(mention)),
            ("failure_reason", failure_reason.to_string()),
            ("input_json", pretty_json(&input)),
        ]);
        let response = self.call(AgentKind::SynonymGenerator, &self.prompts.synonyms, &values, log)?;
        let raw: Vec<String> = match parse_agent_json(&response, &["synonyms"]) {
            Ok(obj) => match &obj["synonyms"] {
                Value::Array(items) => items.iter().filter_map(Value::as_str).map(str::to_string).collect(),
                _ => Vec::new(),
            },
            Err(_) => Vec::new(),
        };
        Ok(SynonymProposal {
            synonyms: clean_synonyms(raw, &mention.text),
            failure_reason: failure_reason.to_string(),
        })
    }
}

/// Trim, drop blanks and the original mention, dedupe ignoring case, keep
/// the first five.
pub(crate) fn clean_synonyms(raw: Vec<String>, mention: &str) -> Vec<String> {
    let original = mention.trim().to_lowercase();
    let mut seen = HashSet::new();
    raw.into_iter()
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .filter(|s| s.to_lowercase() != original)
        .filter(|s| seen.insert(s.to_lowercase()))
        .take(MAX_SYNONYMS)
        .collect()
}
