//! Deterministic offline provider. It reads the structured JSON block that
//! every bundled prompt ends with and answers from simple rules, an optional
//! fixture table, or scripted replies.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::{AgentKind, CompletionProvider, ProviderError};

const MOCK_LOW_SCORE: f64 = 0.2;
const MOCK_REFORMULATION_SCORE: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MockReply {
    Text { text: String },
    Error { error: String },
}

/// Canned replies for one agent, optionally limited to one mention. Replies
/// are consumed in order; the last one repeats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptRule {
    pub task: AgentKind,
    #[serde(default)]
    pub mention: Option<String>,
    pub responses: Vec<MockReply>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedAdjudication {
    pub query: String,
    pub chosen: String,
    pub selected_gold: String,
    pub label: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockFixture {
    /// Lower-cased mention to proposed reformulations.
    #[serde(default)]
    pub synonyms: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub adjudications: Vec<ScriptedAdjudication>,
    #[serde(default)]
    pub scripts: Vec<ScriptRule>,
}

impl MockFixture {
    pub fn load(path: &Path) -> Result<Self, ProviderError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ProviderError::Other(format!("reading {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ProviderError::Other(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MockCall {
    pub task: Option<AgentKind>,
    pub system: String,
    pub user: String,
}

#[derive(Debug, Default)]
pub struct MockProvider {
    fixture: MockFixture,
    cursors: Mutex<HashMap<usize, usize>>,
    calls: Mutex<Vec<MockCall>>,
}

impl MockProvider {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_fixture(fixture: MockFixture) -> Self {
        Self {
            fixture,
            ..Self::default()
        }
    }

    pub fn calls(&self) -> Vec<MockCall> {
        self.calls.lock().expect("mock call log").clone()
    }

    pub fn count(&self, task: AgentKind) -> usize {
        self.calls
            .lock()
            .expect("mock call log")
            .iter()
            .filter(|c| c.task == Some(task))
            .count()
    }

    fn scripted(&self, task: AgentKind, mention: &str) -> Option<MockReply> {
        let (idx, rule) = self.fixture.scripts.iter().enumerate().find(|(_, r)| {
            r.task == task
                && !r.responses.is_empty()
                && r.mention.as_deref().is_none_or(|m| m.eq_ignore_ascii_case(mention))
        })?;
        let mut cursors = self.cursors.lock().expect("mock cursors");
        let pos = cursors.entry(idx).or_insert(0);
        let reply = rule.responses[(*pos).min(rule.responses.len() - 1)].clone();
        *pos += 1;
        Some(reply)
    }

    fn select(&self, input: &Map<String, Value>) -> Value {
        let mention = str_field(input, "mention");
        let cands = array_field(input, "candidates");
        let matches = |c: &Value| {
            let mut forms = vec![str_at(c, "label"), str_at(c, "matched_surface")];
            if let Some(Value::Array(s)) = c.get("synonyms") {
                forms.extend(s.iter().map(|v| v.as_str().unwrap_or_default()));
            }
            forms.iter().any(|f| !f.is_empty() && same(f, &mention))
        };
        match cands.iter().find(|c| matches(c)) {
            Some(c) => json!({
                "chosen_id": str_at(c, "id"),
                "explanation": "Rule 1: a surface form of this term equals the mention."
            }),
            None => match cands.first() {
                Some(c) => json!({
                    "chosen_id": str_at(c, "id"),
                    "explanation": "No exact surface match; taking the top-ranked candidate."
                }),
                None => json!({"chosen_id": "-1", "explanation": "No candidates."}),
            },
        }
    }

    fn score(&self, input: &Map<String, Value>) -> Value {
        let mention = str_field(input, "mention");
        let tau = input.get("tau").and_then(Value::as_f64).unwrap_or(0.6);
        let chosen = input.get("chosen").cloned().unwrap_or(Value::Null);
        let chosen_id = str_at(&chosen, "id");
        let mut forms = vec![str_at(&chosen, "label")];
        if let Some(Value::Array(s)) = chosen.get("synonyms") {
            forms.extend(s.iter().map(|v| v.as_str().unwrap_or_default()));
        }
        let known = self
            .fixture
            .synonyms
            .get(&mention.to_lowercase())
            .cloned()
            .unwrap_or_default();
        let (score, explanation) = if forms.iter().any(|f| same(f, &mention)) {
            (
                1.0,
                "The chosen term carries the mention as a surface form.".to_string(),
            )
        } else if forms.iter().any(|f| known.iter().any(|k| same(f, k))) {
            (
                MOCK_REFORMULATION_SCORE,
                "The chosen term matches a known reformulation of the mention.".to_string(),
            )
        } else {
            (
                MOCK_LOW_SCORE,
                "No surface form of the chosen term matches the mention; identity is uncertain.".to_string(),
            )
        };
        let alternatives: Vec<Value> = if score < tau {
            array_field(input, "candidates")
                .iter()
                .map(|c| str_at(c, "id"))
                .filter(|id| !id.is_empty() && *id != chosen_id)
                .take(3)
                .map(|id| json!({"id": id, "explanation": "Another candidate worth checking."}))
                .collect()
        } else {
            Vec::new()
        };
        json!({"score": score, "explanation": explanation, "alternatives": alternatives})
    }

    fn synonyms(&self, input: &Map<String, Value>) -> Value {
        let mention = str_field(input, "mention");
        let synonyms = self
            .fixture
            .synonyms
            .get(&mention.to_lowercase())
            .cloned()
            .unwrap_or_default();
        json!({"synonyms": synonyms})
    }

    fn adjudicate(&self, input: &Map<String, Value>) -> Value {
        let query = str_field(input, "query");
        let chosen = input
            .get("chosen")
            .map(|c| str_at(c, "id"))
            .unwrap_or_default()
            .to_string();
        let gold = array_field(input, "gold");
        if let Some(a) = self
            .fixture
            .adjudications
            .iter()
            .find(|a| same(&a.query, &query) && a.chosen == chosen)
        {
            return json!({"selected_gold": a.selected_gold, "label": a.label});
        }
        let first = gold.first().map(|g| str_at(g, "id")).unwrap_or_default();
        json!({"selected_gold": first, "label": "Other"})
    }
}

impl CompletionProvider for MockProvider {
    fn name(&self) -> &str {
        "mock"
    }

    fn complete(&self, system: &str, user: &str) -> Result<String, ProviderError> {
        let input = last_json_block(user);
        let task = input.as_ref().and_then(detect_task);
        self.calls.lock().expect("mock call log").push(MockCall {
            task,
            system: system.to_string(),
            user: user.to_string(),
        });
        let (Some(input), Some(task)) = (input, task) else {
            return Err(ProviderError::Other("mock: no structured input in prompt".into()));
        };
        let mention = match task {
            AgentKind::Adjudicator => str_field(&input, "query"),
            _ => str_field(&input, "mention"),
        };
        if let Some(reply) = self.scripted(task, &mention) {
            return match reply {
                MockReply::Text { text } => Ok(text),
                MockReply::Error { error } => Err(ProviderError::Other(error)),
            };
        }
        let answer = match task {
            AgentKind::Selector => self.select(&input),
            AgentKind::Scorer => self.score(&input),
            AgentKind::SynonymGenerator => self.synonyms(&input),
            AgentKind::Adjudicator => self.adjudicate(&input),
        };
        Ok(answer.to_string())
    }
}

fn detect_task(input: &Map<String, Value>) -> Option<AgentKind> {
    if input.contains_key("gold") {
        Some(AgentKind::Adjudicator)
    } else if input.contains_key("failure_reason") {
        Some(AgentKind::SynonymGenerator)
    } else if input.contains_key("chosen") {
        Some(AgentKind::Scorer)
    } else if input.contains_key("candidates") {
        Some(AgentKind::Selector)
    } else {
        None
    }
}

fn last_json_block(text: &str) -> Option<Map<String, Value>> {
    let start = text.rfind("```json\n")? + "```json\n".len();
    let end = text[start..].find("\n```")? + start;
    match serde_json::from_str(&text[start..end]) {
        Ok(Value::Object(map)) => Some(map),
        _ => None,
    }
}

fn same(a: &str, b: &str) -> bool {
    a.trim().to_lowercase() == b.trim().to_lowercase()
}

fn str_at<'v>(v: &'v Value, key: &str) -> &'v str {
    v.get(key).and_then(Value::as_str).unwrap_or_default()
}

fn str_field(m: &Map<String, Value>, key: &str) -> String {
    m.get(key).and_then(Value::as_str).unwrap_or_default().to_string()
}

fn array_field(m: &Map<String, Value>, key: &str) -> Vec<Value> {
    match m.get(key) {
        Some(Value::Array(a)) => a.clone(),
        _ => Vec::new(),
    }
}
