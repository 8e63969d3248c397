mod common;

use ontolink::retrieval::{fuse, fuse_round_robin, Branch, RetrievalConfig};

use common::{candidate, check_fusion, random_fusion_case, record, rng};

#[test]
fn random_cases_follow_the_rules() {
    let cfg = RetrievalConfig::default();
    let mut r = rng(21);
    for i in 0..200 {
        let case = random_fusion_case(&mut r, cfg.k_lex, cfg.k_sem);
        let out = fuse(
            case.lexical.clone(),
            case.semantic.clone(),
            &case.mention,
            &case.records,
            cfg.k_tot,
        );
        check_fusion(&case, &out, cfg.k_tot).unwrap_or_else(|e| panic!("case {i}: {e}"));
    }
}

#[test]
fn small_k_tot_truncates_after_promotion() {
    let mut r = rng(2);
    for _ in 0..100 {
        let case = random_fusion_case(&mut r, 15, 15);
        let out = fuse(
            case.lexical.clone(),
            case.semantic.clone(),
            &case.mention,
            &case.records,
            4,
        );
        check_fusion(&case, &out, 4).unwrap();
    }
}

#[test]
fn round_robin_interleaves_then_promotes() {
    let recs = [
        record("F:1", "baking soda", &[]),
        record("F:2", "soda water", &[]),
        record("F:3", "sodium bicarbonate", &[]),
        record("F:4", "bicarbonate of soda", &[]),
    ];
    let records = recs.iter().map(|r| (r.curie.clone(), r.clone())).collect();
    let a = vec![
        candidate(&recs[1], Branch::Lexical, 0),
        candidate(&recs[0], Branch::Lexical, 1),
    ];
    let b = vec![
        candidate(&recs[3], Branch::Lexical, 0),
        candidate(&recs[2], Branch::Semantic, 0),
    ];
    let out = fuse_round_robin(vec![a, b], "sodium bicarbonate", &records, 30);
    let ids: Vec<&str> = out.iter().map(|c| c.curie.as_str()).collect();
    // Interleaved: F:2, F:4, F:1, F:3; only F:3 matches exactly.
    assert_eq!(ids, ["F:3", "F:2", "F:4", "F:1"]);
    assert_eq!(out[0].matched_surface.as_deref(), Some("sodium bicarbonate"));
}
