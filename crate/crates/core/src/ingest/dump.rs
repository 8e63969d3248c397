//! The per-concept JSON dump: one [`EntityRecord`] per ontology concept.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const UNDEFINED_DEFINITION: &str = "Undefined";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntityRecord {
    pub curie: String,
    pub label: String,
    pub synonyms: Vec<String>,
    pub definition: String,
    pub relations: BTreeMap<String, Vec<String>>,
    pub parents: Vec<String>,
    pub ancestors: Vec<String>,
}

impl EntityRecord {
    pub fn has_definition(&self) -> bool {
        self.definition != UNDEFINED_DEFINITION
    }

    /// Label followed by synonyms.
    pub fn surface_forms(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.label.as_str()).chain(self.synonyms.iter().map(String::as_str))
    }

    /// The label or synonym equal to `text` ignoring case and surrounding
    /// whitespace.
    pub fn exact_surface(&self, text: &str) -> Option<&str> {
        let needle = text.trim().to_lowercase();
        if needle.is_empty() {
            return None;
        }
        self.surface_forms().find(|s| s.trim().to_lowercase() == needle)
    }

    /// Placeholder used when a referenced CURIE has no dump entry.
    pub fn stub(curie: &str) -> Self {
        Self {
            curie: curie.to_string(),
            label: curie.to_string(),
            synonyms: Vec::new(),
            definition: UNDEFINED_DEFINITION.to_string(),
            relations: BTreeMap::new(),
            parents: Vec::new(),
            ancestors: Vec::new(),
        }
    }

    pub fn check_invariants(&self) -> Result<(), String> {
        if self.label.trim().is_empty() {
            return Err(format!("{}: empty label", self.curie));
        }
        let label = self.label.to_lowercase();
        let mut seen = std::collections::HashSet::new();
        for s in &self.synonyms {
            let lower = s.to_lowercase();
            if lower == label {
                return Err(format!("{}: synonym repeats the label", self.curie));
            }
            if !seen.insert(lower) {
                return Err(format!("{}: duplicate synonym {s:?}", self.curie));
            }
        }
        if let Some(p) = self.parents.iter().find(|p| !self.ancestors.contains(p)) {
            return Err(format!("{}: parent {p} missing from ancestors", self.curie));
        }
        if self.ancestors.contains(&self.curie) {
            return Err(format!("{}: lists itself as ancestor", self.curie));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum DumpError {
    #[error("dump schema: {0}")]
    Schema(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Serialize records sorted by CURIE as a 2-space indented JSON array with a
/// trailing newline.
pub fn dump_to_string(records: &[EntityRecord]) -> String {
    let mut sorted: Vec<&EntityRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.curie.cmp(&b.curie));
    let mut out = serde_json::to_string_pretty(&sorted).expect("records serialize");
    out.push('\n');
    out
}

pub fn write_dump<W: Write>(records: &[EntityRecord], mut sink: W) -> Result<(), DumpError> {
    sink.write_all(dump_to_string(records).as_bytes())?;
    sink.flush()?;
    Ok(())
}

pub fn load_dump<R: Read>(mut source: R) -> Result<Vec<EntityRecord>, DumpError> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    load_dump_str(&text)
}

pub fn load_dump_str(text: &str) -> Result<Vec<EntityRecord>, DumpError> {
    let records: Vec<EntityRecord> = serde_json::from_str(text).map_err(|e| DumpError::Schema(e.to_string()))?;
    for r in &records {
        r.check_invariants().map_err(DumpError::Schema)?;
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn whole_wheat_flour() -> EntityRecord {
        EntityRecord {
            curie: "FOODON:03302340".into(),
            label: "whole wheat flour".into(),
            synonyms: vec!["wholemeal flour".into(), "graham flour".into()],
            definition: UNDEFINED_DEFINITION.into(),
            relations: BTreeMap::from([("is_a".to_string(), vec!["FOODON:00001210".to_string()])]),
            parents: vec!["FOODON:00001210".into()],
            ancestors: vec!["FOODON:00001210".into()],
        }
    }

    #[test]
    fn round_trip_single_record() {
        let rec = whole_wheat_flour();
        let mut buf = Vec::new();
        write_dump(std::slice::from_ref(&rec), &mut buf).unwrap();
        assert_eq!(load_dump(buf.as_slice()).unwrap(), vec![rec]);
    }

    #[test]
    fn key_order_is_fixed() {
        let text = dump_to_string(&[whole_wheat_flour()]);
        let keys = [
            "curie",
            "label",
            "synonyms",
            "definition",
            "relations",
            "parents",
            "ancestors",
        ];
        let positions: Vec<usize> = keys.iter().map(|k| text.find(&format!("\"{k}\"")).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]), "{text}");
        assert!(text.starts_with("[\n  {\n    \"curie\""));
    }

    #[test]
    fn missing_label_is_schema_error() {
        let text = r#"[{"curie":"FOODON:1","synonyms":[],"definition":"Undefined","relations":{},"parents":[],"ancestors":[]}]"#;
        assert!(matches!(load_dump_str(text), Err(DumpError::Schema(_))));
    }

    #[test]
    fn unknown_key_is_schema_error() {
        let mut v = serde_json::to_value(vec![whole_wheat_flour()]).unwrap();
        v[0]["extra"] = serde_json::json!(1);
        assert!(matches!(load_dump_str(&v.to_string()), Err(DumpError::Schema(_))));
    }

    #[test]
    fn output_sorted_by_curie() {
        let mut a = whole_wheat_flour();
        a.curie = "FOODON:09999999".into();
        let b = whole_wheat_flour();
        let text = dump_to_string(&[a, b]);
        let loaded = load_dump_str(&text).unwrap();
        assert_eq!(loaded[0].curie, "FOODON:03302340");
        assert_eq!(loaded[1].curie, "FOODON:09999999");
    }

    #[test]
    fn exact_surface_ignores_case() {
        let r = whole_wheat_flour();
        assert_eq!(r.exact_surface(" Graham Flour "), Some("graham flour"));
        assert_eq!(r.exact_surface("graham"), None);
    }

    fn arb_record() -> impl Strategy<Value = EntityRecord> {
        (
            "[A-Z]{2,6}:[0-9]{1,8}",
            "[a-z][a-z ]{0,15}",
            proptest::collection::btree_set("[a-z]{1,10}", 0..5),
            "[ -~]{0,40}",
            proptest::collection::btree_map(
                "[a-z_]{1,8}",
                proptest::collection::vec("[A-Z]{2}:[0-9]{3}", 1..3),
                0..3,
            ),
            proptest::collection::vec("[A-Z]{2}:[0-9]{3}", 0..3),
        )
            .prop_map(|(curie, label, syns, definition, relations, parents)| {
                let syns = syns
                    .into_iter()
                    .filter(|s| s.to_lowercase() != label.to_lowercase())
                    .collect();
                let mut ancestors = parents.clone();
                ancestors.push("ZZ:999".into());
                ancestors.retain(|a| a != &curie);
                let parents = parents.into_iter().filter(|p| p != &curie).collect();
                EntityRecord {
                    curie,
                    label,
                    synonyms: syns,
                    definition,
                    relations,
                    parents,
                    ancestors,
                }
            })
    }

    proptest! {
        #[test]
        fn dump_round_trip_identity(records in proptest::collection::vec(arb_record(), 0..8)) {
            let mut sorted = records.clone();
            sorted.sort_by(|a, b| a.curie.cmp(&b.curie));
            let loaded = load_dump_str(&dump_to_string(&records)).unwrap();
            prop_assert_eq!(loaded, sorted);
        }
    }
}
