//! Shared generators and brute-force oracles for the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};

use ontolink::agents::{Alternative, ConceptId};
use ontolink::lexical::{Bm25Params, ScoredHit};
use ontolink::pipeline::{LinkResult, Review};
use ontolink::retrieval::{Branch, Candidate};
use ontolink::EntityRecord;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SCORE_TOLERANCE: f64 = 1e-9;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const VOCAB: [&str; 24] = [
    "wheat", "flour", "whole", "rice", "bread", "onion", "raw", "dried", "apple", "juice", "milk", "cheese",
    "parmesan", "soy", "sauce", "walnut", "oil", "sugar", "brown", "white", "pita", "sausage", "smoked", "salt",
];

const RELATION_NAMES: [&str; 3] = ["is_a", "derives_from", "in_taxon"];

fn phrase(rng: &mut ChaCha8Rng, min: usize, max: usize) -> String {
    let n = rng.random_range(min..=max);
    (0..n)
        .map(|_| *VOCAB.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn record(curie: &str, label: &str, synonyms: &[&str]) -> EntityRecord {
    EntityRecord {
        curie: curie.to_string(),
        label: label.to_string(),
        synonyms: synonyms.iter().map(|s| s.to_string()).collect(),
        definition: "Undefined".to_string(),
        relations: BTreeMap::new(),
        parents: Vec::new(),
        ancestors: Vec::new(),
    }
}

/// Random records over a small vocabulary, so tokens overlap heavily.
pub fn random_corpus(rng: &mut ChaCha8Rng, n: usize) -> Vec<EntityRecord> {
    (0..n)
        .map(|i| {
            let label = phrase(rng, 1, 4);
            let mut seen: HashSet<String> = HashSet::from([label.to_lowercase()]);
            let synonyms: Vec<String> = (0..rng.random_range(0..4))
                .map(|_| phrase(rng, 1, 3))
                .filter(|s| seen.insert(s.to_lowercase()))
                .collect();
            let definition = if rng.random_bool(0.3) {
                "Undefined".to_string()
            } else {
                format!("A {}.", phrase(rng, 2, 12))
            };
            let mut relations = BTreeMap::new();
            for name in RELATION_NAMES {
                if rng.random_bool(0.3) {
                    relations.insert(name.to_string(), vec![format!("T:{:04}", rng.random_range(0..50))]);
                }
            }
            EntityRecord {
                curie: format!("T:{:05}", i * 7 + rng.random_range(0..7)),
                label,
                synonyms,
                definition,
                relations,
                parents: Vec::new(),
                ancestors: Vec::new(),
            }
        })
        .collect()
}

pub fn random_query(rng: &mut ChaCha8Rng) -> String {
    let mut q = phrase(rng, 1, 4);
    if rng.random_bool(0.2) {
        q.push_str(" zzzunseen");
    }
    if rng.random_bool(0.2) {
        q = q.to_uppercase();
    }
    q
}

fn oracle_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            cur.extend(c.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn oracle_fields(r: &EntityRecord) -> [Vec<String>; 4] {
    let definition = if r.definition == "Undefined" { "" } else { &r.definition };
    let relations: Vec<&str> = r.relations.keys().map(String::as_str).collect();
    [
        oracle_tokens(&r.label),
        oracle_tokens(&r.synonyms.join(" ")),
        oracle_tokens(definition),
        oracle_tokens(&relations.join(" ")),
    ]
}

/// Scores every document straight from the per-field BM25 formula. Returns
/// all documents with a positive score, best first, ties by CURIE.
pub fn bm25_oracle(records: &[EntityRecord], query: &str, params: &Bm25Params) -> Vec<(String, f64)> {
    let docs: Vec<[Vec<String>; 4]> = records.iter().map(oracle_fields).collect();
    let n = docs.len() as f64;
    let mut q: Vec<String> = oracle_tokens(query);
    q.sort();
    q.dedup();
    let mut out = Vec::new();
    for (i, d) in docs.iter().enumerate() {
        let mut score = 0.0;
        let mut matched = false;
        for f in 0..4 {
            let avg = docs.iter().map(|x| x[f].len() as f64).sum::<f64>() / n;
            for t in &q {
                let tf = d[f].iter().filter(|x| *x == t).count() as f64;
                if tf == 0.0 {
                    continue;
                }
                matched = true;
                let df = docs.iter().filter(|x| x[f].contains(t)).count() as f64;
                let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
                let len = d[f].len() as f64;
                let tf_part = tf * (params.k1 + 1.0) / (tf + params.k1 * (1.0 - params.b + params.b * len / avg));
                score += params.boosts[f] * idf * tf_part;
            }
        }
        if matched {
            out.push((records[i].curie.clone(), score));
        }
    }
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}

/// Position-wise comparison against the oracle's top-k. A different CURIE
/// at a position is accepted only when its oracle score ties the expected
/// one within the tolerance.
pub fn compare_with_oracle(actual: &[ScoredHit], oracle: &[(String, f64)], k: usize) -> Result<(), String> {
    let expected = &oracle[..oracle.len().min(k)];
    if actual.len() != expected.len() {
        return Err(format!("expected {} hits, got {}", expected.len(), actual.len()));
    }
    let lookup: BTreeMap<&str, f64> = oracle.iter().map(|(c, s)| (c.as_str(), *s)).collect();
    let mut seen = HashSet::new();
    for (i, (hit, (curie, score))) in actual.iter().zip(expected).enumerate() {
        if !seen.insert(hit.curie.as_str()) {
            return Err(format!("duplicate hit {}", hit.curie));
        }
        if (hit.score - score).abs() > SCORE_TOLERANCE {
            return Err(format!("rank {i}: score {} vs oracle {}", hit.score, score));
        }
        if &hit.curie != curie {
            let Some(own) = lookup.get(hit.curie.as_str()) else {
                return Err(format!("rank {i}: {} has no oracle score", hit.curie));
            };
            if (own - score).abs() > SCORE_TOLERANCE {
                return Err(format!("rank {i}: {} where oracle ranks {}", hit.curie, curie));
            }
        }
    }
    Ok(())
}

/// Random unit-ish rows with a few exact duplicates to force ties.
pub fn random_rows(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<(String, Vec<f64>)> {
    let mut rows: Vec<(String, Vec<f64>)> = Vec::with_capacity(n);
    for i in 0..n {
        let v = if i > 0 && rng.random_bool(0.05) {
            rows[rng.random_range(0..i)].1.clone()
        } else if rng.random_bool(0.1) {
            (0..dim).map(|_| rng.random_range(-2i32..=2) as f64).collect()
        } else {
            (0..dim).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()
        };
        rows.push((format!("V:{i:06}"), v));
    }
    rows
}

/// Exhaustive ranking of unit rows by dot product, ties by CURIE.
pub fn knn_oracle(rows: &[(String, Vec<f32>)], query: &[f32], k: usize) -> Vec<(String, f64)> {
    let mut all: Vec<(String, f64)> = rows
        .iter()
        .map(|(c, r)| {
            let mut s = 0.0f64;
            for (a, b) in r.iter().zip(query) {
                s += *a as f64 * *b as f64;
            }
            (c.clone(), s)
        })
        .collect();
    all.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

pub fn candidate(r: &EntityRecord, branch: Branch, rank: usize) -> Candidate {
    Candidate {
        curie: r.curie.clone(),
        label: r.label.clone(),
        matched_surface: None,
        synonyms_shown: r.synonyms.iter().take(5).cloned().collect(),
        definition_snippet: r.definition.clone(),
        relations_shown: Vec::new(),
        branch,
        branch_rank: rank,
    }
}

/// Tier by the surface-form rules, computed without the crate:
/// 0 exact label/synonym, 1 one surface form holds every mention token.
pub fn oracle_tier(r: &EntityRecord, mention: &str) -> u8 {
    let m = mention.trim().to_lowercase();
    let forms: Vec<&String> = std::iter::once(&r.label).chain(&r.synonyms).collect();
    if !m.is_empty() && forms.iter().any(|f| f.trim().to_lowercase() == m) {
        return 0;
    }
    let wanted: HashSet<String> = oracle_tokens(mention).into_iter().collect();
    if !wanted.is_empty()
        && forms.iter().any(|f| {
            let have: HashSet<String> = oracle_tokens(f).into_iter().collect();
            wanted.is_subset(&have)
        })
    {
        1
    } else {
        2
    }
}

fn random_text(rng: &mut ChaCha8Rng) -> String {
    const PIECES: [&str; 10] = [
        "onion",
        "é",
        "\"quoted\"",
        "back\\slash",
        "new\nline",
        "tab\t",
        "日本",
        " ",
        "-1",
        "{x}",
    ];
    (0..rng.random_range(0..6))
        .map(|_| *PIECES.choose(rng).unwrap())
        .collect()
}

fn random_id(rng: &mut ChaCha8Rng) -> ConceptId {
    if rng.random_bool(0.2) {
        ConceptId::Abstain
    } else {
        ConceptId::Curie(format!("FOODON:{:08}", rng.random_range(0..100_000_000u32)))
    }
}

/// A well-formed result: the review is present iff confidence < tau.
pub fn random_result(rng: &mut ChaCha8Rng, tau: f64) -> LinkResult {
    let confidence = match rng.random_range(0..5) {
        0 => 0.0,
        1 => 1.0,
        2 => tau,
        _ => rng.random::<f64>(),
    };
    let hops = rng.random_range(1..=2);
    let used_synonyms = hops == 2 && rng.random_bool(0.7);
    let final_id = random_id(rng);
    let review = (confidence < tau).then(|| Review {
        rejection_rationale: random_text(rng),
        synonym_proposals: (0..rng.random_range(0..=5)).map(|_| random_text(rng)).collect(),
        alternatives: (0..rng.random_range(0..=3))
            .map(|_| Alternative {
                curie: format!("FOODON:{:08}", rng.random_range(0..1000u32)),
                label: rng.random_bool(0.5).then(|| random_text(rng)),
                explanation: rng.random_bool(0.5).then(|| random_text(rng)),
            })
            .collect(),
    });
    LinkResult {
        mention: random_text(rng),
        label: final_id.curie().map(|_| random_text(rng)),
        final_id,
        selector_rationale: random_text(rng),
        scorer_rationale: random_text(rng),
        confidence,
        hops,
        used_synonyms,
        first_id: random_id(rng),
        review,
        error: rng.random_bool(0.05).then(|| random_text(rng)),
    }
}

/// Deterministic toy ontology in N-Triples: `n` classes with labels,
/// synonyms, definitions and a shallow hierarchy. Returns the text and the
/// (label, CURIE) pairs.
pub fn toy_ontology(n: usize, seed: u64) -> (String, Vec<(String, String)>) {
    let mut rng = rng(seed);
    let obo = "http://purl.obolibrary.org/obo/";
    let mut out = String::new();
    let mut labels = Vec::new();
    let mut used = HashSet::new();
    for i in 0..n {
        let id = format!("FOODON_{:08}", 3_400_000 + i);
        let iri = format!("<{obo}{id}>");
        let mut label = phrase(&mut rng, 1, 3);
        while !used.insert(label.clone()) {
            label = phrase(&mut rng, 2, 4);
        }
        out.push_str(&format!(
            "{iri} <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://www.w3.org/2002/07/owl#Class> .\n"
        ));
        out.push_str(&format!(
            "{iri} <http://www.w3.org/2000/01/rdf-schema#label> \"{label}\"@en .\n"
        ));
        if rng.random_bool(0.5) {
            let syn = phrase(&mut rng, 2, 3);
            if syn != label {
                out.push_str(&format!(
                    "{iri} <http://www.geneontology.org/formats/oboInOwl#hasExactSynonym> \"{syn}\" .\n"
                ));
            }
        }
        if rng.random_bool(0.6) {
            out.push_str(&format!(
                "{iri} <{obo}IAO_0000115> \"A food made of {}.\" .\n",
                phrase(&mut rng, 2, 6)
            ));
        }
        if i > 0 {
            let parent = format!("FOODON_{:08}", 3_400_000 + rng.random_range(0..i));
            out.push_str(&format!(
                "{iri} <http://www.w3.org/2000/01/rdf-schema#subClassOf> <{obo}{parent}> .\n"
            ));
        }
        labels.push((label, id.replace('_', ":")));
    }
    (out, labels)
}

pub struct FusionCase {
    pub records: BTreeMap<String, EntityRecord>,
    pub lexical: Vec<Candidate>,
    pub semantic: Vec<Candidate>,
    pub mention: String,
}

pub fn random_fusion_case(rng: &mut ChaCha8Rng, k_lex: usize, k_sem: usize) -> FusionCase {
    let n = rng.random_range(5..=60);
    let corpus = random_corpus(rng, n);
    let pick = |rng: &mut ChaCha8Rng, k: usize, branch: Branch| -> Vec<Candidate> {
        let take = rng.random_range(0..=k.min(corpus.len()));
        let mut chosen: Vec<&EntityRecord> = corpus.choose_multiple(rng, take).collect();
        // Shuffle-equivalent order: choose_multiple order is random already.
        chosen.truncate(k);
        chosen
            .iter()
            .enumerate()
            .map(|(i, r)| candidate(r, branch, i))
            .collect()
    };
    let lexical = pick(rng, k_lex, Branch::Lexical);
    let semantic = pick(rng, k_sem, Branch::Semantic);
    let some = corpus.choose(rng).unwrap();
    let mention = match rng.random_range(0..4) {
        0 => some.label.to_uppercase(),
        1 => some
            .synonyms
            .first()
            .cloned()
            .unwrap_or_else(|| format!("  {}  ", some.label)),
        2 => {
            let toks: Vec<&str> = some.label.split(' ').collect();
            toks[..rng.random_range(1..=toks.len())].join(" ")
        }
        _ => random_query(rng),
    };
    FusionCase {
        records: corpus.into_iter().map(|r| (r.curie.clone(), r)).collect(),
        lexical,
        semantic,
        mention,
    }
}

/// Check fused output against the rules, including an independently built
/// expected list.
pub fn check_fusion(case: &FusionCase, out: &[Candidate], k_tot: usize) -> Result<(), String> {
    let mut seen = HashSet::new();
    let firsts: Vec<&Candidate> = case
        .lexical
        .iter()
        .chain(&case.semantic)
        .filter(|c| seen.insert(c.curie.clone()))
        .collect();

    if out.len() != firsts.len().min(k_tot) {
        return Err(format!("length {} vs {}", out.len(), firsts.len().min(k_tot)));
    }
    if out.len() > k_tot {
        return Err("exceeds k_tot".into());
    }
    let mut ids = HashSet::new();
    for c in out {
        if !ids.insert(&c.curie) {
            return Err(format!("duplicate {}", c.curie));
        }
        let first = firsts
            .iter()
            .find(|f| f.curie == c.curie)
            .ok_or_else(|| format!("{} was never retrieved", c.curie))?;
        if first.branch != c.branch || first.branch_rank != c.branch_rank {
            return Err(format!("{} is not its first occurrence", c.curie));
        }
    }
    let tiers: Vec<u8> = out
        .iter()
        .map(|c| oracle_tier(&case.records[&c.curie], &case.mention))
        .collect();
    if tiers.windows(2).any(|w| w[0] > w[1]) {
        return Err(format!("tiers out of order: {tiers:?}"));
    }
    for (c, t) in out.iter().zip(&tiers) {
        if (*t == 0) != c.matched_surface.is_some() {
            return Err(format!("{}: matched_surface inconsistent with tier {t}", c.curie));
        }
    }
    // Within a tier and a branch, the branch order is kept.
    for w in out.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let same_tier =
            oracle_tier(&case.records[&a.curie], &case.mention) == oracle_tier(&case.records[&b.curie], &case.mention);
        if same_tier && a.branch == b.branch && a.branch_rank > b.branch_rank {
            return Err(format!("branch order broken between {} and {}", a.curie, b.curie));
        }
    }
    let mut expected: Vec<(u8, usize, &str)> = firsts
        .iter()
        .enumerate()
        .map(|(pos, c)| {
            (
                oracle_tier(&case.records[&c.curie], &case.mention),
                pos,
                c.curie.as_str(),
            )
        })
        .collect();
    expected.sort();
    let expected: Vec<&str> = expected.iter().take(k_tot).map(|e| e.2).collect();
    let got: Vec<&str> = out.iter().map(|c| c.curie.as_str()).collect();
    if got != expected {
        return Err(format!("order {got:?} vs expected {expected:?}"));
    }
    Ok(())
}

pub fn indexes(records: Vec<EntityRecord>) -> ontolink::retrieval::Indexes {
    ontolink::retrieval::Indexes::build(
        records,
        Bm25Params::default(),
        Box::new(ontolink::vector::FallbackEmbedder::default()),
    )
    .unwrap()
}

pub fn with_definition(mut r: EntityRecord, definition: &str) -> EntityRecord {
    r.definition = definition.to_string();
    r
}

/// The three candidates for the mention "LEBANESE".
pub fn lebanese_records() -> Vec<EntityRecord> {
    vec![
        with_definition(
            record("FOODON:03540141", "01410 - pita bread (efsa foodex2)", &[]),
            "Flat leavened bread; also known as Lebanese bread or Arabic bread.",
        ),
        with_definition(
            record("FOODON:00005570", "lebanon bologna", &[]),
            "Smoked, fermented beef sausage from Pennsylvania.",
        ),
        record("FOODON:03302684", "middle east bread", &[]),
    ]
}

/// Scripted selector choosing pita bread, a scorer rejecting it with two
/// alternatives, and two reformulations.
pub fn lebanese_fixture() -> ontolink::agents::MockFixture {
    serde_json::from_value(serde_json::json!({
        "synonyms": {"lebanese": ["lebanese cuisine", "lebanese bread"]},
        "scripts": [
            {"task": "selector", "mention": "LEBANESE", "responses": [
                {"text": "{\"chosen_id\": \"FOODON:03540141\", \"explanation\": \"Its definition lists Lebanese bread as another name.\"}"}
            ]},
            {"task": "scorer", "mention": "LEBANESE", "responses": [
                {"text": "{\"score\": 0.2, \"explanation\": \"The mention names an origin, the term a bread.\", \"alternatives\": [\"FOODON:03302684\", \"FOODON:00005570\", \"FOODON:03540141\"]}"}
            ]}
        ]
    }))
    .unwrap()
}

/// Random run records over a small CURIE pool plus gold for each mention.
pub fn random_run(
    rng: &mut ChaCha8Rng,
    n: usize,
) -> (Vec<ontolink::eval::RunRecord>, Vec<ontolink::eval::GoldAnnotation>) {
    use ontolink::agents::ConceptId;
    let pool = ["X:1", "X:2", "X:3", "X:4", "-1"];
    let pick = |rng: &mut ChaCha8Rng| ConceptId::parse(pool[rng.random_range(0..pool.len())]);
    let mut records = Vec::with_capacity(n);
    let mut gold = Vec::with_capacity(n);
    for i in 0..n {
        let mention = format!("m{i}");
        let hops = rng.random_range(1..=2);
        records.push(ontolink::eval::RunRecord {
            mention: mention.clone(),
            y_first: pick(rng),
            y_final: pick(rng),
            hops,
            used_synonyms: hops > 1 && rng.random_bool(0.5),
        });
        let k = rng.random_range(1..=2);
        let targets = pool[..4].choose_multiple(rng, k).map(|s| s.to_string()).collect();
        gold.push(ontolink::eval::GoldAnnotation { mention, targets });
    }
    (records, gold)
}

pub fn published_labels() -> Vec<ontolink::eval::AdjudicationLabel> {
    use ontolink::eval::AdjudicationLabel::*;
    // The remaining six are not broken down per bucket; any split works.
    [
        (ExactMatch, 293),
        (SynonymOrLexical, 29),
        (ClassVsTaxon, 18),
        (ModelIncorrect, 35),
        (HierarchyDrift, 3),
        (DatasetAnnotationError, 2),
        (Other, 1),
    ]
    .into_iter()
    .flat_map(|(l, n)| std::iter::repeat_n(l, n))
    .collect()
}

pub fn ontolink_bin() -> std::process::Command {
    std::process::Command::new(env!("CARGO_BIN_EXE_ontolink"))
}

/// Run the binary in `dir`, returning (exit code, stdout, stderr).
pub fn ontolink(dir: &std::path::Path, args: &[&str]) -> (i32, String, String) {
    let out = ontolink_bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn ontolink");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

pub const E2E_OUTPUTS: [&str; 9] = [
    "dump.json",
    "index/lexical.json",
    "index/vectors.bin",
    "results.jsonl",
    "calls.json",
    "report.json",
    "mismatches.json",
    "adjudications.json",
    "compare.json",
];

/// ingest -> index -> link -> eval -> adjudicate -> compare-export over a
/// toy ontology in `dir`. Returns every output file's bytes.
pub fn e2e_run(dir: &std::path::Path, concepts: usize, seed: u64) -> BTreeMap<String, Vec<u8>> {
    let (nt, labels) = toy_ontology(concepts, seed);
    std::fs::write(dir.join("onto.nt"), nt).unwrap();
    let mut mentions: Vec<serde_json::Value> = Vec::new();
    let mut gold: Vec<serde_json::Value> = Vec::new();
    let mut g = rng(seed ^ 0x5eed);
    for (i, (label, curie)) in labels.iter().enumerate() {
        // Every third mention is perturbed so some runs retry.
        let mention = if i % 3 == 0 {
            format!("{label} pieces")
        } else {
            label.clone()
        };
        let target = if i % 7 == 0 {
            &labels[g.random_range(0..labels.len())].1
        } else {
            curie
        };
        mentions.push(serde_json::json!({"mention": mention}));
        gold.push(serde_json::json!({"mention": mention, "targets": [target]}));
    }
    std::fs::write(dir.join("mentions.json"), serde_json::to_string(&mentions).unwrap()).unwrap();
    std::fs::write(dir.join("gold.json"), serde_json::to_string(&gold).unwrap()).unwrap();
    let synonyms: BTreeMap<String, Vec<String>> = labels
        .iter()
        .step_by(3)
        .map(|(l, _)| (format!("{l} pieces"), vec![l.clone()]))
        .collect();
    std::fs::write(
        dir.join("mock.json"),
        serde_json::to_string(&serde_json::json!({"synonyms": synonyms})).unwrap(),
    )
    .unwrap();

    let steps: [&[&str]; 6] = [
        &[
            "ingest",
            "onto.nt",
            "--out",
            "dump.json",
            "--report",
            "ingest-report.json",
        ],
        &["index", "dump.json", "--out-dir", "index"],
        &[
            "link",
            "--dump",
            "dump.json",
            "--index-dir",
            "index",
            "--mentions",
            "mentions.json",
            "--mock-fixture",
            "mock.json",
            "--jobs",
            "4",
            "--out",
            "results.jsonl",
            "--log",
            "calls.json",
        ],
        &[
            "eval",
            "results.jsonl",
            "--gold",
            "gold.json",
            "--tau",
            "0.6",
            "--out",
            "report.json",
            "--mismatches-out",
            "mismatches.json",
        ],
        &[
            "adjudicate",
            "mismatches.json",
            "--dump",
            "dump.json",
            "--out",
            "adjudications.json",
            "--distribution-out",
            "distribution.json",
        ],
        &[
            "compare-export",
            "results.jsonl",
            "results.jsonl",
            "--dump",
            "dump.json",
            "--out",
            "compare.json",
        ],
    ];
    for args in steps {
        let (code, _, err) = ontolink(dir, args);
        assert_eq!(code, 0, "{args:?} failed: {err}");
    }
    E2E_OUTPUTS
        .iter()
        .map(|f| {
            let bytes = std::fs::read(dir.join(f)).unwrap();
            let bytes = if *f == "calls.json" {
                strip_timings(&bytes)
            } else {
                bytes
            };
            (f.to_string(), bytes)
        })
        .collect()
}

/// The call log records wall-clock latency; drop it before comparing runs.
pub fn strip_timings(bytes: &[u8]) -> Vec<u8> {
    fn walk(v: &mut serde_json::Value) {
        match v {
            serde_json::Value::Object(m) => {
                m.remove("elapsed_ms");
                m.values_mut().for_each(walk);
            }
            serde_json::Value::Array(a) => a.iter_mut().for_each(walk),
            _ => {}
        }
    }
    let mut v: serde_json::Value = serde_json::from_slice(bytes).unwrap();
    walk(&mut v);
    serde_json::to_vec_pretty(&v).unwrap()
}
