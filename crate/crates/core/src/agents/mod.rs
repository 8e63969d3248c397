//! LLM agents: selector, scorer and synonym generator, behind a
//! provider-agnostic completion interface.
//!
//! Every agent renders a versioned prompt, sends a `(system, user)` pair to a
//! [`CompletionProvider`], and parses a JSON answer. Each call is appended to
//! a [`CallLog`] with the prompt version, texts, response and timing.

mod http;
mod json;
mod mock;
mod prompts;
mod scorer;
mod selector;
mod synonyms;

use std::collections::HashMap;
use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use crate::provider::ProviderError;
pub use http::HttpCompletionProvider;
pub use json::{first_json_object, parse_agent_json, ParseError};
pub use mock::{MockCall, MockFixture, MockProvider, MockReply, ScriptRule, ScriptedAdjudication};
pub use prompts::{PromptError, PromptSet, PromptTemplate};
pub use scorer::{Alternative, ConfidenceAssessment, UNPARSEABLE_ASSESSMENT};
pub use selector::{render_candidates, SelectorDecision};
pub use synonyms::{SynonymProposal, MAX_SYNONYMS};

pub const ABSTAIN: &str = "-1";

pub trait CompletionProvider: Send + Sync {
    fn name(&self) -> &str;
    fn complete(&self, system: &str, user: &str) -> Result<String, ProviderError>;
}

/// A concept identifier or an explicit abstention (serialized as `"-1"`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConceptId {
    Curie(String),
    Abstain,
}

impl ConceptId {
    pub fn parse(s: &str) -> Self {
        let s = s.trim();
        if s == ABSTAIN || s.is_empty() {
            ConceptId::Abstain
        } else {
            ConceptId::Curie(s.to_string())
        }
    }

    pub fn curie(&self) -> Option<&str> {
        match self {
            ConceptId::Curie(c) => Some(c),
            ConceptId::Abstain => None,
        }
    }

    pub fn is_abstain(&self) -> bool {
        matches!(self, ConceptId::Abstain)
    }

    pub fn as_str(&self) -> &str {
        match self {
            ConceptId::Curie(c) => c,
            ConceptId::Abstain => ABSTAIN,
        }
    }
}

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl From<&str> for ConceptId {
    fn from(s: &str) -> Self {
        ConceptId::parse(s)
    }
}

impl Serialize for ConceptId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for ConceptId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(ConceptId::parse(&s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Selector,
    Scorer,
    SynonymGenerator,
    Adjudicator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentCall {
    pub agent: AgentKind,
    pub prompt_version: String,
    pub system: String,
    pub user: String,
    pub response: Option<String>,
    pub error: Option<String>,
    pub elapsed_ms: u64,
}

pub type CallLog = Vec<AgentCall>;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("no candidates to choose from")]
    EmptyCandidates,
    #[error("cannot score an abstention")]
    NothingToScore,
    #[error("failure reason must not be empty")]
    EmptyFailureReason,
}

/// Agent front end bound to one provider and one prompt set.
#[derive(Clone, Copy)]
pub struct Agents<'a> {
    provider: &'a dyn CompletionProvider,
    prompts: &'a PromptSet,
}

impl<'a> Agents<'a> {
    pub fn new(provider: &'a dyn CompletionProvider, prompts: &'a PromptSet) -> Self {
        Self { provider, prompts }
    }

    pub fn provider(&self) -> &'a dyn CompletionProvider {
        self.provider
    }

    pub fn prompts(&self) -> &'a PromptSet {
        self.prompts
    }

    /// Render `template`, call the provider, and log the exchange.
    pub fn call(
        &self,
        kind: AgentKind,
        template: &PromptTemplate,
        values: &HashMap<&str, String>,
        log: &mut CallLog,
    ) -> Result<String, AgentError> {
        let (system, user) = template.render(values)?;
        let started = Instant::now();
        let result = self.provider.complete(&system, &user);
        let elapsed_ms = started.elapsed().as_millis() as u64;
        let (response, error) = match &result {
            Ok(text) => (Some(text.clone()), None),
            Err(e) => (None, Some(e.to_string())),
        };
        log.push(AgentCall {
            agent: kind,
            prompt_version: template.version.clone(),
            system,
            user,
            response,
            error,
            elapsed_ms,
        });
        Ok(result?)
    }
}

pub fn pretty_json(value: &serde_json::Value) -> String {
    serde_json::to_string_pretty(value).expect("JSON value serializes")
}
