//! Bundled word lists and their loaders.
//!
//! All resource files are UTF-8, one entry per line, `#` starts a comment
//! line. The irregular-verb table uses `inflected<TAB>lemma`.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

pub const DEFAULT_VERBS: &str = include_str!("../resources/verbs.txt");
pub const DEFAULT_IRREGULAR_VERBS: &str = include_str!("../resources/irregular_verbs.tsv");
pub const DEFAULT_ABBREVIATIONS: &str = include_str!("../resources/abbreviations.txt");

#[derive(Debug, thiserror::Error)]
pub enum ResourceError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{name} line {line}: expected `inflected<TAB>lemma`, got {text:?}")]
    Malformed { name: String, line: usize, text: String },
}

fn entries(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Parses a one-lemma-per-line list; entries are lowercased.
pub fn parse_word_list(text: &str) -> HashSet<String> {
    entries(text).map(|(_, l)| l.to_lowercase()).collect()
}

/// Parses the abbreviation list, keeping entries lowercased for
/// case-insensitive lookup.
pub fn parse_abbreviations(text: &str) -> HashSet<String> {
    parse_word_list(text)
}

pub fn parse_irregular_table(name: &str, text: &str) -> Result<HashMap<String, String>, ResourceError> {
    let mut table = HashMap::new();
    for (line, entry) in entries(text) {
        let mut fields = entry.split('\t').map(str::trim).filter(|f| !f.is_empty());
        match (fields.next(), fields.next(), fields.next()) {
            (Some(inflected), Some(lemma), None) => {
                table.insert(inflected.to_lowercase(), lemma.to_lowercase());
            }
            _ => {
                return Err(ResourceError::Malformed {
                    name: name.to_string(),
                    line,
                    text: entry.to_string(),
                })
            }
        }
    }
    Ok(table)
}

/// Reads `path` when given, otherwise returns the bundled default.
pub fn read_or_default(path: Option<&Path>, default: &'static str) -> Result<String, ResourceError> {
    match path {
        Some(p) => fs::read_to_string(p).map_err(|source| ResourceError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => Ok(default.to_string()),
    }
}
