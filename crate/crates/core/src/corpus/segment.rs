use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::resources;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub doc_id: String,
    pub sentence_index: usize,
    pub text: String,
}

const TERMINALS: [char; 3] = ['.', '!', '?'];
const CLOSERS: [char; 7] = ['"', '\'', '\u{201d}', '\u{2019}', ')', ']', '.'];
const OPENERS: [char; 6] = ['"', '\'', '\u{201c}', '\u{2018}', '(', '['];

/// Punctuation-driven sentence splitter with an abbreviation exception list.
///
/// A boundary is a run of `.`, `!` or `?` (optionally followed by closing
/// quotes or brackets), then whitespace, then an uppercase letter or an
/// opening quote. A `.` boundary is suppressed when the token it ends is a
/// listed abbreviation or a single-letter initial.
#[derive(Debug, Clone)]
pub struct Segmenter {
    abbreviations: HashSet<String>,
}

impl Default for Segmenter {
    fn default() -> Self {
        Self::new(resources::parse_abbreviations(resources::DEFAULT_ABBREVIATIONS))
    }
}

impl Segmenter {
    /// `abbreviations` are matched case-insensitively, trailing period included.
    pub fn new(abbreviations: HashSet<String>) -> Self {
        Self {
            abbreviations: abbreviations.into_iter().map(|a| a.to_lowercase()).collect(),
        }
    }

    pub fn segment(&self, doc_id: &str, text: &str) -> Vec<SentenceRecord> {
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let n = chars.len();
        let mut pieces = Vec::new();
        let mut start = 0usize;
        let mut i = 0usize;

        while i < n {
            let c = chars[i].1;
            if !TERMINALS.contains(&c) {
                i += 1;
                continue;
            }
            let mut j = i + 1;
            while j < n && (TERMINALS.contains(&chars[j].1) || CLOSERS.contains(&chars[j].1)) {
                j += 1;
            }
            if j >= n || !chars[j].1.is_whitespace() {
                i = j.max(i + 1);
                continue;
            }
            let mut k = j;
            while k < n && chars[k].1.is_whitespace() {
                k += 1;
            }
            let opens_sentence = k < n && (chars[k].1.is_uppercase() || OPENERS.contains(&chars[k].1));
            if opens_sentence && !(c == '.' && self.is_abbreviation(text, &chars, i)) {
                pieces.push(&text[start..chars[j].0]);
                start = chars[k].0;
            }
            i = j;
        }
        pieces.push(&text[start..]);

        pieces
            .into_iter()
            .map(|p| p.split_whitespace().collect::<Vec<_>>().join(" "))
            .filter(|p| !p.is_empty())
            .enumerate()
            .map(|(sentence_index, text)| SentenceRecord {
                doc_id: doc_id.to_string(),
                sentence_index,
                text,
            })
            .collect()
    }

    /// Whether the whitespace-delimited token ending at `chars[dot]` is an
    /// abbreviation or initial.
    fn is_abbreviation(&self, text: &str, chars: &[(usize, char)], dot: usize) -> bool {
        let mut s = dot;
        while s > 0 && !chars[s - 1].1.is_whitespace() {
            s -= 1;
        }
        let end = chars[dot].0 + chars[dot].1.len_utf8();
        let token = text[chars[s].0..end].trim_start_matches(|c| OPENERS.contains(&c));
        let lower = token.to_lowercase();
        if self.abbreviations.contains(&lower) {
            return true;
        }
        let mut it = token.chars();
        matches!((it.next(), it.next(), it.next()), (Some(a), Some('.'), None) if a.is_alphabetic() && a.is_uppercase())
    }
}

/// Free-function form using the bundled abbreviation list.
pub fn segment_sentences(doc_id: &str, text: &str) -> Vec<SentenceRecord> {
    Segmenter::default().segment(doc_id, text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn texts(input: &str) -> Vec<String> {
        segment_sentences("d", input).into_iter().map(|s| s.text).collect()
    }

    #[test]
    fn splits_two_sentences() {
        assert_eq!(texts("He left. She stayed."), ["He left.", "She stayed."]);
    }

    #[test]
    fn abbreviation_suppresses_split() {
        assert_eq!(
            texts("Dr. Lee began playing music in school."),
            ["Dr. Lee began playing music in school."]
        );
        assert_eq!(texts("He moved to the U.S. In 1990 he left."), ["He moved to the U.S. In 1990 he left."]);
        assert_eq!(texts("Music, e.g. Jazz, is fun. Yes!"), ["Music, e.g. Jazz, is fun.", "Yes!"]);
    }

    #[test]
    fn initials_do_not_split() {
        assert_eq!(texts("J. Smith played golf. It rained."), ["J. Smith played golf.", "It rained."]);
    }

    #[test]
    fn empty_input_has_no_sentences() {
        assert!(texts("").is_empty());
        assert!(texts("   \n\t ").is_empty());
    }

    #[test]
    fn lowercase_after_period_does_not_split() {
        assert_eq!(texts("It cost 3.5 dollars. ok then."), ["It cost 3.5 dollars. ok then."]);
    }

    #[test]
    fn quotes_and_other_terminals() {
        assert_eq!(
            texts("\"Stop!\" she said. \"Why?\" He asked. Really?! Yes."),
            ["\"Stop!\" she said.", "\"Why?\"", "He asked.", "Really?!", "Yes."]
        );
    }

    #[test]
    fn indices_are_zero_based_and_whitespace_collapsed() {
        let s = segment_sentences("doc", "A  b\nx. D e.");
        assert_eq!(s[0].sentence_index, 0);
        assert_eq!(s[0].text, "A b x.");
        assert_eq!(s[1].sentence_index, 1);
        assert_eq!(s[1].doc_id, "doc");
    }

    proptest! {
        #[test]
        fn concatenation_preserves_non_whitespace(input in "[A-Za-z .!?\"'\n]{0,120}") {
            let joined = texts(&input).join(" ");
            let strip = |s: &str| s.chars().filter(|c| !c.is_whitespace()).collect::<String>();
            prop_assert_eq!(strip(&joined), strip(&input));
        }
    }
}
