mod common;

use ontolink::lexical::{build_lexical_index, search_lexical, Bm25Params, Field, LexicalIndex};
use ontolink::EntityRecord;

use common::{bm25_oracle, compare_with_oracle, random_corpus, random_query, record, rng};

fn labels_only() -> Vec<EntityRecord> {
    vec![
        record("F:1", "whole wheat flour", &[]),
        record("F:2", "wheat flour food product", &[]),
        record("F:3", "rice flour", &[]),
    ]
}

#[test]
fn three_document_corpus_matches_hand_computation() {
    let params = Bm25Params::default();
    let index = build_lexical_index(&labels_only(), params).unwrap();
    let hits = search_lexical(&index, "wheat flour", 10);

    // N = 3, label lengths 3, 4, 2 (average 3); df(wheat) = 2, df(flour) = 3.
    let idf_wheat = (1.0f64 + 1.5 / 2.5).ln();
    let idf_flour = (1.0f64 + 0.5 / 3.5).ln();
    let part = |len: f64| 2.2 / (1.0 + 1.2 * (0.25 + 0.75 * len / 3.0));
    let expected = [
        ("F:1", 3.0 * part(3.0) * (idf_wheat + idf_flour)),
        ("F:2", 3.0 * part(4.0) * (idf_wheat + idf_flour)),
        ("F:3", 3.0 * part(2.0) * idf_flour),
    ];
    assert_eq!(hits.len(), 3);
    for (hit, (curie, score)) in hits.iter().zip(expected) {
        assert_eq!(hit.curie, curie);
        assert!((hit.score - score).abs() < 1e-12, "{} {} {}", curie, hit.score, score);
    }
    let oracle = bm25_oracle(&labels_only(), "wheat flour", &params);
    compare_with_oracle(&hits, &oracle, 10).unwrap();
}

#[test]
fn graham_flour_hits_synonym_field() {
    let r = record(
        "FOODON:03302340",
        "whole wheat flour",
        &["wholemeal flour", "graham flour"],
    );
    let index = build_lexical_index(&[r], Bm25Params::default()).unwrap();
    let postings = index.postings("graham");
    assert_eq!(postings.len(), 1);
    assert_eq!(postings[0].field, Field::Synonyms);
    let hits = search_lexical(&index, "Graham Flour", 5);
    assert_eq!(hits[0].matched_surface.as_deref(), Some("graham flour"));
    assert!(search_lexical(&index, "quinoa", 5).is_empty());
}

#[test]
fn randomized_against_oracle() {
    let mut r = rng(11);
    let params = Bm25Params::default();
    for _ in 0..10 {
        let n = rand::Rng::random_range(&mut r, 1..=60);
        let corpus = random_corpus(&mut r, n);
        let index = build_lexical_index(&corpus, params).unwrap();
        for _ in 0..5 {
            let q = random_query(&mut r);
            let k = rand::Rng::random_range(&mut r, 1..=20);
            compare_with_oracle(&search_lexical(&index, &q, k), &bm25_oracle(&corpus, &q, &params), k)
                .unwrap_or_else(|e| panic!("query {q:?}: {e}"));
        }
    }
}

#[test]
fn persisted_index_answers_identically() {
    let mut r = rng(5);
    let corpus = random_corpus(&mut r, 40);
    let index = build_lexical_index(&corpus, Bm25Params::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lex.json");
    index.save(&path).unwrap();
    let loaded = LexicalIndex::load(&path).unwrap();
    for q in ["wheat flour", "smoked sausage", "milk"] {
        assert_eq!(loaded.search(q, 10), index.search(q, 10));
    }
    let path2 = dir.path().join("lex2.json");
    build_lexical_index(&corpus, Bm25Params::default())
        .unwrap()
        .save(&path2)
        .unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
}
