//! Lenient extraction of the JSON object an agent was asked to return.

use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("no JSON object found in response")]
    MalformedResponse,
    #[error("response is missing key {0:?}")]
    MissingKey(String),
}

/// Find the first parseable JSON object in `text`, tolerating markdown
/// fences and prose around it, and check that every expected key exists.
pub fn parse_agent_json(text: &str, expected_keys: &[&str]) -> Result<Map<String, Value>, ParseError> {
    let obj = first_json_object(text).ok_or(ParseError::MalformedResponse)?;
    for key in expected_keys {
        if !obj.contains_key(*key) {
            return Err(ParseError::MissingKey((*key).to_string()));
        }
    }
    Ok(obj)
}

pub fn first_json_object(text: &str) -> Option<Map<String, Value>> {
    let body = strip_fences(text);
    for (start, _) in body.match_indices('{') {
        if let Some(end) = matching_brace(&body[start..]) {
            if let Ok(Value::Object(map)) = serde_json::from_str(&body[start..start + end]) {
                return Some(map);
            }
        }
    }
    None
}

/// Contents of the first fenced block if there is one, else the input.
fn strip_fences(text: &str) -> &str {
    let Some(open) = text.find("```") else {
        return text;
    };
    let after = &text[open + 3..];
    // Skip an info string such as `json`.
    let body_start = after.find('\n').map_or(after.len(), |i| i + 1);
    let body = &after[body_start..];
    match body.find("```") {
        Some(close) if body[..close].contains('{') => &body[..close],
        _ => text,
    }
}

/// Byte length of the balanced `{...}` at the start of `s`, honouring
/// string literals and escapes.
fn matching_brace(s: &str) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, c) in s.char_indices() {
        if in_string {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth = depth.checked_sub(1)?;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
            _ => {}
        }
    }
    None
}
