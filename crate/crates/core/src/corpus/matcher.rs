use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::events::{Event, EventKey, Lemmatizer};

use super::segment::SentenceRecord;

/// Half-open token interval `[start, end)` over [`tokenize`] output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct MatchSpan {
    pub start: usize,
    pub end: usize,
}

impl From<[usize; 2]> for MatchSpan {
    fn from([start, end]: [usize; 2]) -> Self {
        MatchSpan { start, end }
    }
}

impl From<MatchSpan> for [usize; 2] {
    fn from(s: MatchSpan) -> Self {
        [s.start, s.end]
    }
}

/// Whitespace split, edge punctuation stripped, lowercased; tokens that
/// are pure punctuation are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

/// Leftmost window whose verb token lemmatizes to the event's verb lemma and
/// is followed, in order, by the object tokens with at most `max_gap`
/// intervening tokens overall.
pub fn match_tokens(lemmas: &[String], tokens: &[String], key: &EventKey, max_gap: usize) -> Option<MatchSpan> {
    (0..tokens.len())
        .filter(|&i| lemmas[i] == key.verb_lemma)
        .find_map(|i| {
            let mut pos = i;
            for object in &key.object_tokens {
                pos = (pos + 1..tokens.len()).find(|&j| tokens[j] == *object)?;
            }
            let end = pos + 1;
            let gap = end - i - 1 - key.object_tokens.len();
            (gap <= max_gap).then_some(MatchSpan { start: i, end })
        })
}

pub fn match_event(
    sentence: &SentenceRecord,
    event: &Event,
    max_gap: usize,
    lemmatizer: &Lemmatizer,
) -> Option<MatchSpan> {
    let tokens = tokenize(&sentence.text);
    let lemmas: Vec<String> = tokens.iter().map(|t| lemmatizer.lemmatize(t)).collect();
    match_tokens(&lemmas, &tokens, &event.key(), max_gap)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceSentence {
    pub event_id: String,
    #[serde(flatten)]
    pub sentence: SentenceRecord,
    pub span: MatchSpan,
}

impl EvidenceSentence {
    pub fn sort_key(&self) -> (&str, &str, usize) {
        (&self.event_id, &self.sentence.doc_id, self.sentence.sentence_index)
    }
}

/// Matches many events against a sentence at once, indexing events by verb
/// lemma so each sentence is tokenized and lemmatized only once.
pub struct EventIndex<'a> {
    by_lemma: HashMap<&'a str, Vec<(&'a Event, EventKey)>>,
    lemmatizer: &'a Lemmatizer,
    max_gap: usize,
}

impl<'a> EventIndex<'a> {
    pub fn new(events: &'a [Event], lemmatizer: &'a Lemmatizer, max_gap: usize) -> Self {
        let mut by_lemma: HashMap<&str, Vec<_>> = HashMap::new();
        for e in events {
            by_lemma.entry(e.verb_lemma.as_str()).or_default().push((e, e.key()));
        }
        Self { by_lemma, lemmatizer, max_gap }
    }

    /// One evidence record per event found in the sentence.
    pub fn matches(&self, sentence: &SentenceRecord) -> Vec<EvidenceSentence> {
        let tokens = tokenize(&sentence.text);
        let lemmas: Vec<String> = tokens.iter().map(|t| self.lemmatizer.lemmatize(t)).collect();
        let mut candidate_lemmas: Vec<&str> = lemmas
            .iter()
            .map(String::as_str)
            .filter(|l| self.by_lemma.contains_key(l))
            .collect();
        candidate_lemmas.sort_unstable();
        candidate_lemmas.dedup();

        let mut out = Vec::new();
        for lemma in candidate_lemmas {
            for (event, key) in &self.by_lemma[lemma] {
                if let Some(span) = match_tokens(&lemmas, &tokens, key, self.max_gap) {
                    out.push(EvidenceSentence {
                        event_id: event.id.clone(),
                        sentence: sentence.clone(),
                        span,
                    });
                }
            }
        }
        out.sort_by(|a, b| a.event_id.cmp(&b.event_id));
        out
    }
}
