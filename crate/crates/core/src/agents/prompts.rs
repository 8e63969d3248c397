//! Versioned prompt templates with `{{name}}` placeholders.
//!
//! File layout:
//!
//! ```text
//! version: selector/1
//! --- system ---
//! ...system text...
//! --- user ---
//! ...user text...
//! ```

use std::collections::HashMap;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PromptError {
    #[error("template {name}: {message}")]
    Format { name: String, message: String },
    #[error("template {name}: no value for placeholder {{{{{key}}}}}")]
    MissingValue { name: String, key: String },
    #[error("reading {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: String,
    pub version: String,
    pub system: String,
    pub user: String,
}

fn placeholder_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{\{([A-Za-z0-9_]+)\}\}").unwrap())
}

impl PromptTemplate {
    pub fn parse(name: &str, text: &str) -> Result<Self, PromptError> {
        let err = |message: &str| PromptError::Format {
            name: name.to_string(),
            message: message.to_string(),
        };
        let text = text.replace("\r\n", "\n");
        let (first, rest) = text.split_once('\n').ok_or_else(|| err("empty template"))?;
        let version = first
            .strip_prefix("version:")
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .ok_or_else(|| err("first line must be 'version: <id>'"))?;
        let rest = rest
            .strip_prefix("--- system ---\n")
            .ok_or_else(|| err("missing '--- system ---' section"))?;
        let (system, user) = rest
            .split_once("\n--- user ---\n")
            .ok_or_else(|| err("missing '--- user ---' section"))?;
        Ok(Self {
            name: name.to_string(),
            version: version.to_string(),
            system: system.trim_end().to_string(),
            user: user.trim_end().to_string(),
        })
    }

    pub fn placeholders(&self) -> Vec<String> {
        let mut names: Vec<String> = placeholder_re()
            .captures_iter(&self.system)
            .chain(placeholder_re().captures_iter(&self.user))
            .map(|c| c[1].to_string())
            .collect();
        names.sort();
        names.dedup();
        names
    }

    /// Single-pass substitution: values are inserted verbatim and never
    /// re-scanned for placeholders.
    pub fn render(&self, values: &HashMap<&str, String>) -> Result<(String, String), PromptError> {
        let fill = |text: &str| -> Result<String, PromptError> {
            let mut missing = None;
            let out = placeholder_re().replace_all(text, |c: &regex::Captures<'_>| match values.get(&c[1]) {
                Some(v) => v.clone(),
                None => {
                    missing.get_or_insert_with(|| c[1].to_string());
                    String::new()
                }
            });
            match missing {
                Some(key) => Err(PromptError::MissingValue {
                    name: self.name.clone(),
                    key,
                }),
                None => Ok(out.into_owned()),
            }
        };
        Ok((fill(&self.system)?, fill(&self.user)?))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    pub selector: PromptTemplate,
    pub scorer: PromptTemplate,
    pub synonyms: PromptTemplate,
    pub adjudicator: PromptTemplate,
}

const BUILTIN: [(&str, &str); 4] = [
    ("selector", include_str!("../../prompts/selector.txt")),
    ("scorer", include_str!("../../prompts/scorer.txt")),
    ("synonyms", include_str!("../../prompts/synonyms.txt")),
    ("adjudicator", include_str!("../../prompts/adjudicator.txt")),
];

impl PromptSet {
    pub fn builtin() -> Self {
        let get = |i: usize| PromptTemplate::parse(BUILTIN[i].0, BUILTIN[i].1).expect("bundled prompt parses");
        Self {
            selector: get(0),
            scorer: get(1),
            synonyms: get(2),
            adjudicator: get(3),
        }
    }

    /// Load `<name>.txt` files from `dir`; any file not present falls back
    /// to the bundled template.
    pub fn load_dir(dir: &Path) -> Result<Self, PromptError> {
        let mut set = Self::builtin();
        for (name, slot) in [
            ("selector", &mut set.selector),
            ("scorer", &mut set.scorer),
            ("synonyms", &mut set.synonyms),
            ("adjudicator", &mut set.adjudicator),
        ] {
            let path = dir.join(format!("{name}.txt"));
            if !path.exists() {
                continue;
            }
            let text = std::fs::read_to_string(&path).map_err(|e| PromptError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            *slot = PromptTemplate::parse(name, &text)?;
        }
        Ok(set)
    }
}

impl Default for PromptSet {
    fn default() -> Self {
        Self::builtin()
    }
}
