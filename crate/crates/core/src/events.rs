//! Candidate event harvesting: phrase parsing, verb-phrase filtering and
//! grouping of inflected surface forms under a verb-lemma + object key.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::resources::{self, ResourceError};

const ARTICLES: [&str; 3] = ["a", "an", "the"];

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PhraseToken {
    pub surface: String,
    pub pos: Option<String>,
}

/// One line of the phrase inventory.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RawPhrase {
    pub text: String,
    pub tokens: Vec<PhraseToken>,
}

impl RawPhrase {
    /// Builds an untagged phrase from whitespace-separated text.
    pub fn untagged(text: &str) -> Option<Self> {
        let tokens: Vec<PhraseToken> = text
            .split_whitespace()
            .map(|s| PhraseToken { surface: s.to_string(), pos: None })
            .collect();
        if tokens.is_empty() {
            return None;
        }
        Some(RawPhrase { text: join_surfaces(&tokens), tokens })
    }
}

fn join_surfaces(tokens: &[PhraseToken]) -> String {
    tokens.iter().map(|t| t.surface.as_str()).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("phrase line {line}: malformed token {token:?}")]
pub struct PhraseLineError {
    pub line: usize,
    pub token: String,
}

/// Parses a phrase inventory. Lines are 1-based in errors. Bad lines are
/// reported and skipped; the rest of the list is still returned.
pub fn parse_phrase_list<I, S>(lines: I) -> (Vec<RawPhrase>, Vec<PhraseLineError>)
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut phrases = Vec::new();
    let mut seen = HashSet::new();
    let mut errors = Vec::new();

    'lines: for (i, line) in lines.into_iter().enumerate() {
        let line = line.as_ref().trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = Vec::new();
        for raw in line.split_whitespace() {
            let mut parts = raw.split('/');
            let surface = parts.next().unwrap_or_default();
            let pos = parts.next();
            if parts.next().is_some() || surface.is_empty() || pos.is_some_and(str::is_empty) {
                errors.push(PhraseLineError { line: i + 1, token: raw.to_string() });
                continue 'lines;
            }
            tokens.push(PhraseToken {
                surface: surface.to_string(),
                pos: pos.map(str::to_string),
            });
        }
        let phrase = RawPhrase { text: join_surfaces(&tokens), tokens };
        if seen.insert(phrase.clone()) {
            phrases.push(phrase);
        }
    }
    (phrases, errors)
}

/// Rule-based English verb lemmatizer backed by an irregular-form table and
/// a verb lexicon. Suffix-stripping candidates are checked against the
/// lexicon first; without a lexicon hit a fixed heuristic decides.
#[derive(Debug, Clone)]
pub struct Lemmatizer {
    irregular: HashMap<String, String>,
    lexicon: HashSet<String>,
}

impl Lemmatizer {
    pub fn new(lexicon: HashSet<String>, irregular: HashMap<String, String>) -> Self {
        Self { irregular, lexicon }
    }

    pub fn from_texts(lexicon: &str, irregular: &str) -> Result<Self, ResourceError> {
        Ok(Self::new(
            resources::parse_word_list(lexicon),
            resources::parse_irregular_table("irregular verbs", irregular)?,
        ))
    }

    /// The bundled English resources.
    pub fn english() -> Self {
        Self::from_texts(resources::DEFAULT_VERBS, resources::DEFAULT_IRREGULAR_VERBS)
            .expect("bundled irregular table is well formed")
    }

    pub fn is_verb_lemma(&self, lemma: &str) -> bool {
        self.lexicon.contains(lemma)
    }

    pub fn lemmatize(&self, token: &str) -> String {
        let word = token.to_lowercase();
        if let Some(lemma) = self.irregular.get(&word) {
            return lemma.clone();
        }
        if self.lexicon.contains(&word) {
            return word;
        }
        let candidates = suffix_candidates(&word);
        candidates
            .iter()
            .find(|c| self.lexicon.contains(c.as_str()))
            .or_else(|| candidates.first())
            .cloned()
            .unwrap_or(word)
    }
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

fn undouble(stem: &str) -> Option<String> {
    let mut rev = stem.chars().rev();
    match (rev.next(), rev.next()) {
        (Some(a), Some(b)) if a == b && !is_vowel(a) && !matches!(a, 'l' | 's' | 'z') => {
            Some(stem[..stem.len() - a.len_utf8()].to_string())
        }
        _ => None,
    }
}

/// Candidate lemmas in preference order; the first one is the heuristic
/// answer when no candidate is a known verb.
fn suffix_candidates(word: &str) -> Vec<String> {
    let n = word.chars().count();
    let mut out = Vec::new();
    let stem_variants = |stem: &str, out: &mut Vec<String>| {
        if let Some(u) = undouble(stem) {
            out.push(u);
        }
        out.push(stem.to_string());
        out.push(format!("{stem}e"));
    };

    if n > 4 && (word.ends_with("ies") || word.ends_with("ied")) {
        out.push(format!("{}y", &word[..word.len() - 3]));
        out.push(word[..word.len() - 1].to_string());
    } else if n >= 5 && word.ends_with("ing") {
        stem_variants(&word[..word.len() - 3], &mut out);
    } else if n >= 4 && word.ends_with("ed") {
        stem_variants(&word[..word.len() - 2], &mut out);
        out.push(word[..word.len() - 1].to_string());
    } else if n >= 4 && word.ends_with("es") {
        let stem = &word[..word.len() - 2];
        if ["sh", "ch", "ss", "x", "z", "o"].iter().any(|s| stem.ends_with(s)) {
            out.push(stem.to_string());
            out.push(word[..word.len() - 1].to_string());
        } else {
            out.push(word[..word.len() - 1].to_string());
            out.push(stem.to_string());
        }
    } else if n >= 3 && word.ends_with('s') && !word.ends_with("ss") {
        out.push(word[..word.len() - 1].to_string());
    }
    out
}

/// Keeps phrases whose first token is a verb: by POS tag when the first
/// token is tagged, by lexicon membership of its lemma otherwise.
pub fn filter_verb_phrases(phrases: Vec<RawPhrase>, lemmatizer: &Lemmatizer) -> Vec<RawPhrase> {
    phrases
        .into_iter()
        .filter(|p| match p.tokens.first() {
            None => false,
            Some(PhraseToken { pos: Some(tag), .. }) => is_verb_tag(tag),
            Some(first) => lemmatizer.is_verb_lemma(&lemmatizer.lemmatize(&first.surface)),
        })
        .collect()
}

/// Penn Treebank `VB*` or universal `VERB`.
fn is_verb_tag(tag: &str) -> bool {
    let upper = tag.to_ascii_uppercase();
    upper.starts_with("VB") || upper == "VERB"
}

/// The grouping key of an event.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventKey {
    pub verb_lemma: String,
    pub object_tokens: Vec<String>,
}

impl EventKey {
    pub fn id(&self) -> String {
        std::iter::once(self.verb_lemma.as_str())
            .chain(self.object_tokens.iter().map(String::as_str))
            .collect::<Vec<_>>()
            .join("_")
    }

    /// Space-joined lemma form, e.g. "play music".
    pub fn canonical(&self) -> String {
        std::iter::once(self.verb_lemma.as_str())
            .chain(self.object_tokens.iter().map(String::as_str))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

pub fn normalize_event(phrase: &RawPhrase, lemmatizer: &Lemmatizer) -> EventKey {
    let mut tokens = phrase.tokens.iter().map(|t| t.surface.to_lowercase());
    let verb_lemma = tokens.next().map(|v| lemmatizer.lemmatize(&v)).unwrap_or_default();
    let object_tokens = tokens
        .skip_while(|t| ARTICLES.contains(&t.as_str()))
        .collect();
    EventKey { verb_lemma, object_tokens }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub id: String,
    pub verb_lemma: String,
    pub object_tokens: Vec<String>,
    pub surface_forms: BTreeSet<String>,
}

impl Event {
    pub fn key(&self) -> EventKey {
        EventKey {
            verb_lemma: self.verb_lemma.clone(),
            object_tokens: self.object_tokens.clone(),
        }
    }

    pub fn canonical(&self) -> String {
        self.key().canonical()
    }
}

/// One event per distinct normalized key, sorted by id.
pub fn group_events(phrases: &[RawPhrase], lemmatizer: &Lemmatizer) -> Vec<Event> {
    let mut groups: BTreeMap<EventKey, BTreeSet<String>> = BTreeMap::new();
    for phrase in phrases {
        let key = normalize_event(phrase, lemmatizer);
        if key.verb_lemma.is_empty() {
            continue;
        }
        groups.entry(key).or_default().insert(phrase.text.clone());
    }
    let mut events: Vec<Event> = groups
        .into_iter()
        .map(|(key, surface_forms)| Event {
            id: key.id(),
            verb_lemma: key.verb_lemma,
            object_tokens: key.object_tokens,
            surface_forms,
        })
        .collect();
    events.sort_by(|a, b| a.id.cmp(&b.id));
    events
}
