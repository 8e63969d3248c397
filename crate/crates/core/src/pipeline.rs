//! Retrieve, select, score; below the threshold, one synonym hop.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{
    Agents, Alternative, CallLog, CompletionProvider, ConceptId, ConfidenceAssessment, PromptSet, SelectorDecision,
};
use crate::retrieval::{fuse_round_robin, retrieve, Candidate, Indexes, Mention, RetrievalConfig};

pub const NO_CANDIDATES: &str = "no candidates retrieved";
pub const NOT_SCORED: &str = "not scored: the selector abstained";

#[derive(Debug, Error, PartialEq)]
pub enum PipelineError {
    #[error("tau must be within [0, 1], got {0}")]
    Tau(f64),
    #[error("invalid retrieval config: {0}")]
    Retrieval(String),
    #[error("malformed result: {0}")]
    Result(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub tau: f64,
    pub max_hops: u32,
    pub retrieval: RetrievalConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            tau: 0.6,
            max_hops: 1,
            retrieval: RetrievalConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(PipelineError::Tau(self.tau));
        }
        self.retrieval
            .validate()
            .map_err(|e| PipelineError::Retrieval(e.to_string()))
    }
}

/// Material for human review, attached when the final confidence is below
/// the threshold.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Review {
    pub rejection_rationale: String,
    pub synonym_proposals: Vec<String>,
    pub alternatives: Vec<Alternative>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkResult {
    pub mention: String,
    pub final_id: ConceptId,
    pub label: Option<String>,
    pub selector_rationale: String,
    pub scorer_rationale: String,
    pub confidence: f64,
    pub hops: u32,
    pub used_synonyms: bool,
    pub first_id: ConceptId,
    pub review: Option<Review>,
    pub error: Option<String>,
}

impl LinkResult {
    pub fn is_error(&self) -> bool {
        self.error.is_some()
    }

    fn failed(mention: &str, hops: u32, first_id: ConceptId, error: String) -> Self {
        Self {
            mention: mention.to_string(),
            final_id: ConceptId::Abstain,
            label: None,
            selector_rationale: String::new(),
            scorer_rationale: String::new(),
            confidence: 0.0,
            hops,
            used_synonyms: false,
            first_id,
            review: None,
            error: Some(error),
        }
    }
}

struct Pass {
    decision: SelectorDecision,
    assessment: ConfidenceAssessment,
}

impl Pass {
    /// Why this pass was not accepted, fed to the synonym generator.
    fn failure_reason(&self) -> String {
        if self.decision.chosen_id.is_abstain() {
            let why = self.decision.explanation.trim();
            if why.is_empty() {
                "the selector abstained".to_string()
            } else {
                why.to_string()
            }
        } else {
            self.assessment.explanation.clone()
        }
    }
}

fn run_pass(
    agents: &Agents<'_>,
    mention: &Mention,
    candidates: &[Candidate],
    indexes: &Indexes,
    tau: f64,
    log: &mut CallLog,
) -> Result<Pass, String> {
    let decision = agents.select(mention, candidates, log).map_err(|e| e.to_string())?;
    let assessment = match decision.chosen_id.curie() {
        None => ConfidenceAssessment {
            score: 0.0,
            explanation: NOT_SCORED.to_string(),
            alternatives: Vec::new(),
        },
        Some(curie) => {
            let record = indexes
                .record(curie)
                .ok_or_else(|| format!("selected CURIE {curie} is not in the dump"))?;
            agents
                .score(mention, &decision, record, candidates, tau, log)
                .map_err(|e| e.to_string())?
        }
    };
    Ok(Pass { decision, assessment })
}

fn finish(
    mention: &Mention,
    indexes: &Indexes,
    pass: Pass,
    first_id: ConceptId,
    hops: u32,
    proposals: Vec<String>,
    tau: f64,
) -> LinkResult {
    let confidence = pass.assessment.score;
    let used_synonyms = !proposals.is_empty();
    let review = (confidence < tau).then(|| Review {
        rejection_rationale: pass.failure_reason(),
        synonym_proposals: proposals,
        alternatives: pass.assessment.alternatives.clone(),
    });
    LinkResult {
        mention: mention.text.clone(),
        label: pass
            .decision
            .chosen_id
            .curie()
            .and_then(|c| indexes.record(c))
            .map(|r| r.label.clone()),
        final_id: pass.decision.chosen_id,
        selector_rationale: pass.decision.explanation,
        scorer_rationale: pass.assessment.explanation,
        confidence,
        hops,
        used_synonyms,
        first_id,
        review,
        error: None,
    }
}

/// Link one mention. Provider and retrieval failures produce an
/// error-tagged result instead of an `Err`.
pub fn link(
    mention: &Mention,
    indexes: &Indexes,
    agents: &Agents<'_>,
    config: &PipelineConfig,
    log: &mut CallLog,
) -> LinkResult {
    if !mention.is_valid() {
        return LinkResult::failed(&mention.text, 1, ConceptId::Abstain, "empty mention".to_string());
    }
    let tau = config.tau;

    let first = match retrieve(mention, indexes, &config.retrieval) {
        Ok(c) => c,
        Err(e) => return LinkResult::failed(&mention.text, 1, ConceptId::Abstain, e.to_string()),
    };
    if first.is_empty() {
        return LinkResult {
            mention: mention.text.clone(),
            final_id: ConceptId::Abstain,
            label: None,
            selector_rationale: NO_CANDIDATES.to_string(),
            scorer_rationale: NOT_SCORED.to_string(),
            confidence: 0.0,
            hops: 1,
            used_synonyms: false,
            first_id: ConceptId::Abstain,
            review: (tau > 0.0).then(|| Review {
                rejection_rationale: NO_CANDIDATES.to_string(),
                ..Review::default()
            }),
            error: None,
        };
    }
    let pass1 = match run_pass(agents, mention, &first, indexes, tau, log) {
        Ok(p) => p,
        Err(e) => return LinkResult::failed(&mention.text, 1, ConceptId::Abstain, e),
    };
    let first_id = pass1.decision.chosen_id.clone();
    if pass1.assessment.score >= tau || config.max_hops == 0 {
        return finish(mention, indexes, pass1, first_id, 1, Vec::new(), tau);
    }

    let fail = |e: String| LinkResult::failed(&mention.text, 2, first_id.clone(), e);
    let proposal = match agents.generate_synonyms(mention, &pass1.failure_reason(), log) {
        Ok(p) => p,
        Err(e) => return fail(e.to_string()),
    };
    let mut lists = vec![first];
    for synonym in &proposal.synonyms {
        let query = Mention {
            text: synonym.clone(),
            context: mention.context.clone(),
        };
        match retrieve(&query, indexes, &config.retrieval) {
            Ok(c) => lists.push(c),
            Err(e) => return fail(e.to_string()),
        }
    }
    let fused = fuse_round_robin(lists, &mention.text, indexes.records(), config.retrieval.k_tot);
    let pass2 = match run_pass(agents, mention, &fused, indexes, tau, log) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    // Below threshold on both passes: keep the better one, the first on ties.
    let best = if pass2.assessment.score > pass1.assessment.score {
        pass2
    } else {
        pass1
    };
    finish(mention, indexes, best, first_id, 2, proposal.synonyms, tau)
}

/// Calls made while linking one mention of a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MentionLog {
    pub index: usize,
    pub mention: String,
    pub calls: CallLog,
}

/// Link every mention, preserving input order. With `jobs > 1` mentions are
/// processed in parallel; the log is still ordered by mention index.
pub fn link_batch(
    mentions: &[Mention],
    indexes: &Indexes,
    provider: &dyn CompletionProvider,
    prompts: &PromptSet,
    config: &PipelineConfig,
    jobs: usize,
) -> (Vec<LinkResult>, Vec<MentionLog>) {
    let one = |(index, mention): (usize, &Mention)| {
        let agents = Agents::new(provider, prompts);
        let mut calls = CallLog::new();
        let result = link(mention, indexes, &agents, config, &mut calls);
        let log = MentionLog {
            index,
            mention: mention.text.clone(),
            calls,
        };
        (result, log)
    };
    let pairs: Vec<(LinkResult, MentionLog)> = if jobs > 1 && mentions.len() > 1 {
        use rayon::prelude::*;
        match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
            Ok(pool) => pool.install(|| mentions.par_iter().enumerate().map(one).collect()),
            Err(_) => mentions.iter().enumerate().map(one).collect(),
        }
    } else {
        mentions.iter().enumerate().map(one).collect()
    };
    pairs.into_iter().unzip()
}

/// On-the-wire layout; field order is the serialized key order.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResultWire {
    mention: String,
    final_id: ConceptId,
    label: Option<String>,
    selector_rationale: String,
    scorer_rationale: String,
    confidence: f64,
    hops: u32,
    used_synonyms: bool,
    first_id: ConceptId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rejection_rationale: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    synonym_proposals: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alternatives: Option<Vec<Alternative>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

impl From<&LinkResult> for ResultWire {
    fn from(r: &LinkResult) -> Self {
        let review = r.review.clone();
        Self {
            mention: r.mention.clone(),
            final_id: r.final_id.clone(),
            label: r.label.clone(),
            selector_rationale: r.selector_rationale.clone(),
            scorer_rationale: r.scorer_rationale.clone(),
            confidence: r.confidence,
            hops: r.hops,
            used_synonyms: r.used_synonyms,
            first_id: r.first_id.clone(),
            rejection_rationale: review.as_ref().map(|v| v.rejection_rationale.clone()),
            synonym_proposals: review.as_ref().map(|v| v.synonym_proposals.clone()),
            alternatives: review.map(|v| v.alternatives),
            error: r.error.clone(),
        }
    }
}

/// One compact JSON object. The review keys appear only on results that
/// carry a review, which the pipeline attaches iff confidence < tau.
pub fn serialize_result(result: &LinkResult) -> String {
    serde_json::to_string(&ResultWire::from(result)).expect("result serializes")
}

pub fn parse_result(text: &str) -> Result<LinkResult, PipelineError> {
    let w: ResultWire = serde_json::from_str(text).map_err(|e| PipelineError::Result(e.to_string()))?;
    let review = match (w.rejection_rationale, w.synonym_proposals, w.alternatives) {
        (None, None, None) => None,
        (Some(rejection_rationale), Some(synonym_proposals), Some(alternatives)) => Some(Review {
            rejection_rationale,
            synonym_proposals,
            alternatives,
        }),
        _ => {
            return Err(PipelineError::Result(
                "rejection_rationale, synonym_proposals and alternatives must appear together".into(),
            ))
        }
    };
    if !(0.0..=1.0).contains(&w.confidence) {
        return Err(PipelineError::Result(format!(
            "confidence {} outside [0, 1]",
            w.confidence
        )));
    }
    Ok(LinkResult {
        mention: w.mention,
        final_id: w.final_id,
        label: w.label,
        selector_rationale: w.selector_rationale,
        scorer_rationale: w.scorer_rationale,
        confidence: w.confidence,
        hops: w.hops,
        used_synonyms: w.used_synonyms,
        first_id: w.first_id,
        review,
        error: w.error,
    })
}

/// Parse a JSON-lines results file; blank lines are skipped.
pub fn parse_results(text: &str) -> Result<Vec<LinkResult>, PipelineError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_result(l).map_err(|e| PipelineError::Result(format!("line {}: {e}", i + 1))))
        .collect()
}
