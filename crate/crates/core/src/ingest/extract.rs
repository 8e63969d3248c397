//! Concept filtering and facet extraction over a parsed triple set.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use serde::Serialize;

use super::config::IngestConfig;
use super::dump::{EntityRecord, UNDEFINED_DEFINITION};
use super::ntriples::{Term, TripleSet};

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const RDFS_LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";
pub const RDFS_SUBCLASS_OF: &str = "http://www.w3.org/2000/01/rdf-schema#subClassOf";
pub const SKOS_PREF_LABEL: &str = "http://www.w3.org/2004/02/skos/core#prefLabel";
pub const SKOS_BROADER: &str = "http://www.w3.org/2004/02/skos/core#broader";
pub const IAO_DEFINITION: &str = "http://purl.obolibrary.org/obo/IAO_0000115";
pub const OWL_ON_PROPERTY: &str = "http://www.w3.org/2002/07/owl#onProperty";
pub const OWL_SOME_VALUES_FROM: &str = "http://www.w3.org/2002/07/owl#someValuesFrom";
pub const OWL_ALL_VALUES_FROM: &str = "http://www.w3.org/2002/07/owl#allValuesFrom";
pub const OWL_HAS_VALUE: &str = "http://www.w3.org/2002/07/owl#hasValue";

pub const SYNONYM_PREDICATES: [&str; 4] = [
    "http://www.geneontology.org/formats/oboInOwl#hasExactSynonym",
    "http://www.geneontology.org/formats/oboInOwl#hasRelatedSynonym",
    "http://www.geneontology.org/formats/oboInOwl#hasBroadSynonym",
    "http://www.geneontology.org/formats/oboInOwl#hasNarrowSynonym",
];

const PROPERTY_TYPES: [&str; 5] = [
    "http://www.w3.org/2002/07/owl#ObjectProperty",
    "http://www.w3.org/2002/07/owl#DatatypeProperty",
    "http://www.w3.org/2002/07/owl#AnnotationProperty",
    "http://www.w3.org/1999/02/22-rdf-syntax-ns#Property",
    "http://www.w3.org/2002/07/owl#TransitiveProperty",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    /// Typed, but not as a configured concept class (or typed as a property).
    NotConcept,
    BlankNode,
    NoPrefix,
    InvalidId,
    MissingLabel,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub typed_subjects: usize,
    pub emitted: usize,
    /// Subjects whose CURIE collided with an earlier subject and were merged into it.
    pub merged: usize,
    pub skipped: BTreeMap<SkipReason, usize>,
}

impl IngestReport {
    pub fn skipped_total(&self) -> usize {
        self.skipped.values().sum()
    }

    fn skip(&mut self, reason: SkipReason) {
        *self.skipped.entry(reason).or_default() += 1;
    }
}

#[derive(Default)]
struct SubjectFacts<'a> {
    types: Vec<&'a str>,
    by_predicate: HashMap<&'a str, Vec<&'a Term>>,
}

impl<'a> SubjectFacts<'a> {
    fn objects(&self, predicate: &str) -> &[&'a Term] {
        self.by_predicate.get(predicate).map(Vec::as_slice).unwrap_or(&[])
    }

    fn literals(&self, predicate: &str) -> impl Iterator<Item = &'a str> + '_ {
        self.objects(predicate)
            .iter()
            .filter_map(|t| t.as_literal())
            .map(str::trim)
            .filter(|s| !s.is_empty())
    }
}

/// Collected facets for one CURIE before the hierarchy pass.
struct Draft<'a> {
    curie: String,
    subjects: Vec<&'a Term>,
}

pub fn extract_entities(triples: &TripleSet, config: &IngestConfig) -> (Vec<EntityRecord>, IngestReport) {
    let mut facts: HashMap<&Term, SubjectFacts<'_>> = HashMap::new();
    let mut typed_order: Vec<&Term> = Vec::new();
    for t in triples {
        let entry = facts.entry(&t.subject).or_default();
        if t.predicate == RDF_TYPE {
            if let Some(ty) = t.object.as_iri() {
                if entry.types.is_empty() {
                    typed_order.push(&t.subject);
                }
                entry.types.push(ty);
            }
        }
        entry
            .by_predicate
            .entry(t.predicate.as_str())
            .or_default()
            .push(&t.object);
    }

    let mut report = IngestReport {
        typed_subjects: typed_order.len(),
        ..Default::default()
    };
    let concept_classes: HashSet<&str> = config.concept_classes().iter().map(String::as_str).collect();
    let prefix_map = config.prefix_map();

    let mut drafts: BTreeMap<String, Draft<'_>> = BTreeMap::new();
    for subject in typed_order {
        let f = &facts[subject];
        let is_concept = f.types.iter().any(|t| concept_classes.contains(t));
        let is_property = f.types.iter().any(|t| PROPERTY_TYPES.contains(t));
        if !is_concept || is_property {
            report.skip(SkipReason::NotConcept);
            continue;
        }
        let Term::Iri(iri) = subject else {
            report.skip(SkipReason::BlankNode);
            continue;
        };
        let Ok(curie) = prefix_map.to_curie(iri) else {
            report.skip(SkipReason::NoPrefix);
            continue;
        };
        if !config.validate_curie(&curie) {
            report.skip(SkipReason::InvalidId);
            continue;
        }
        let has_label = f.literals(RDFS_LABEL).next().is_some() || f.literals(SKOS_PREF_LABEL).next().is_some();
        if !has_label && !drafts.contains_key(&curie) {
            report.skip(SkipReason::MissingLabel);
            continue;
        }
        match drafts.get_mut(&curie) {
            Some(d) => {
                d.subjects.push(subject);
                report.merged += 1;
            }
            None => {
                drafts.insert(
                    curie.clone(),
                    Draft {
                        curie,
                        subjects: vec![subject],
                    },
                );
            }
        }
    }

    let to_target = |term: &Term| -> Option<String> { term.as_iri().and_then(|iri| prefix_map.to_curie(iri).ok()) };

    let mut records: Vec<EntityRecord> = Vec::with_capacity(drafts.len());
    for draft in drafts.values() {
        let subject_facts: Vec<&SubjectFacts<'_>> = draft.subjects.iter().map(|s| &facts[*s]).collect();

        let mut labels: Vec<&str> = subject_facts.iter().flat_map(|f| f.literals(RDFS_LABEL)).collect();
        if labels.is_empty() {
            labels = subject_facts.iter().flat_map(|f| f.literals(SKOS_PREF_LABEL)).collect();
        }
        let label = labels.iter().min().copied().unwrap_or_default().to_string();

        // Extra labels first, then synonyms by predicate kind in file order.
        let mut seen: HashSet<String> = HashSet::from([label.to_lowercase()]);
        let mut synonyms = Vec::new();
        let extra_labels = labels.iter().copied();
        let syn_literals = SYNONYM_PREDICATES
            .iter()
            .flat_map(|p| subject_facts.iter().flat_map(move |f| f.literals(p)));
        for s in extra_labels.chain(syn_literals) {
            if seen.insert(s.to_lowercase()) {
                synonyms.push(s.to_string());
            }
        }

        let definition = subject_facts
            .iter()
            .flat_map(|f| f.literals(IAO_DEFINITION))
            .min()
            .unwrap_or(UNDEFINED_DEFINITION)
            .to_string();

        let mut parents = BTreeSet::new();
        for f in &subject_facts {
            for o in f.objects(RDFS_SUBCLASS_OF).iter().chain(f.objects(SKOS_BROADER)) {
                if let Some(c) = to_target(o) {
                    if c != draft.curie && config.validate_curie(&c) {
                        parents.insert(c);
                    }
                }
            }
        }

        let mut relations: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for rel in config.relations() {
            let mut targets = BTreeSet::new();
            for f in &subject_facts {
                for o in f.objects(&rel.iri) {
                    if let Some(c) = to_target(o) {
                        targets.insert(c);
                    }
                }
                // Existential / universal / value restrictions hung off subClassOf.
                for o in f.objects(RDFS_SUBCLASS_OF) {
                    let Term::Blank(_) = o else { continue };
                    let Some(restriction) = facts.get(*o) else { continue };
                    let on_rel = restriction
                        .objects(OWL_ON_PROPERTY)
                        .iter()
                        .any(|p| p.as_iri() == Some(rel.iri.as_str()));
                    if !on_rel {
                        continue;
                    }
                    for filler in [OWL_SOME_VALUES_FROM, OWL_ALL_VALUES_FROM, OWL_HAS_VALUE] {
                        for target in restriction.objects(filler) {
                            if let Some(c) = to_target(target) {
                                targets.insert(c);
                            }
                        }
                    }
                }
            }
            targets.remove(&draft.curie);
            if !targets.is_empty() {
                relations.entry(rel.name.clone()).or_default().extend(targets);
            }
        }
        for targets in relations.values_mut() {
            targets.sort();
            targets.dedup();
        }

        records.push(EntityRecord {
            curie: draft.curie.clone(),
            label,
            synonyms,
            definition,
            relations,
            parents: parents.into_iter().collect(),
            ancestors: Vec::new(),
        });
    }

    fill_ancestors(&mut records);
    report.emitted = records.len();
    (records, report)
}

/// Transitive closure over `parents`, excluding the record itself. Cycles
/// terminate because each walk visits a CURIE at most once.
fn fill_ancestors(records: &mut [EntityRecord]) {
    let parents: HashMap<String, Vec<String>> = records.iter().map(|r| (r.curie.clone(), r.parents.clone())).collect();
    for r in records.iter_mut() {
        let mut seen: BTreeSet<String> = BTreeSet::new();
        let mut queue: VecDeque<&str> = r.parents.iter().map(String::as_str).collect();
        while let Some(c) = queue.pop_front() {
            if !seen.insert(c.to_string()) {
                continue;
            }
            if let Some(ps) = parents.get(c) {
                queue.extend(ps.iter().map(String::as_str));
            }
        }
        seen.remove(&r.curie);
        r.ancestors = seen.into_iter().collect();
    }
}
