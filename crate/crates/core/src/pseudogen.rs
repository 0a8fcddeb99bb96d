//! Pseudo-labeled duration QA generation in the MC-TACO line format.
//!
//! One question per event: a sampled evidence sentence as context, the
//! probing question, three plausible answers in the episodic units and four
//! implausible answers in units far from every episodic unit.

use std::collections::HashSet;
use std::io::{self, Write};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::EvidenceSentence;
use crate::units::DurationUnit;

pub const POSITIVES: usize = 3;
pub const NEGATIVES: usize = 4;
pub const MAX_ATTEMPTS: usize = 100;
pub const CATEGORY: &str = "Event Duration";

/// Inclusive number range per unit, indexed by [`DurationUnit::index`].
pub type UnitRanges = [(u32, u32); 8];

pub const DEFAULT_UNIT_RANGES: UnitRanges = [
    (1, 59),
    (1, 59),
    (1, 23),
    (1, 6),
    (1, 3),
    (1, 11),
    (1, 9),
    (1, 9),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub unit_ranges: UnitRanges,
    pub quantifiers: Vec<String>,
    pub quantifier_prob: f64,
    pub negative_distance: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            unit_ranges: DEFAULT_UNIT_RANGES,
            quantifiers: vec!["a few".into(), "several".into(), "a couple of".into()],
            quantifier_prob: 0.25,
            negative_distance: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenError {
    #[error("no evidence sentence to use as context")]
    EmptyEvidence,
    #[error("episodic unit set is empty")]
    EmptyEpisodic,
    #[error("no unit is at least {distance} steps from every episodic unit")]
    NoNegativeUnits { distance: usize },
    #[error("could not draw {POSITIVES}+{NEGATIVES} distinct answers in {MAX_ATTEMPTS} attempts")]
    Collisions,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Magnitude {
    Number(u32),
    Quantifier(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Plausible,
    NotPlausible,
}

impl Label {
    pub fn as_yes_no(self) -> &'static str {
        match self {
            Label::Plausible => "yes",
            Label::NotPlausible => "no",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PseudoAnswer {
    pub text: String,
    pub unit: DurationUnit,
    pub magnitude: Magnitude,
    pub label: Label,
}

/// "1 day", "5 hours", "a few weeks".
pub fn render_answer(magnitude: &Magnitude, unit: DurationUnit) -> String {
    match magnitude {
        Magnitude::Number(1) => format!("1 {}", unit.singular()),
        Magnitude::Number(n) => format!("{n} {}", unit.plural()),
        Magnitude::Quantifier(q) => format!("{q} {}", unit.plural()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PseudoQuestion {
    pub event_id: String,
    pub context: String,
    pub question: String,
    pub answers: Vec<PseudoAnswer>,
}

/// Uniform pick among the evidence as given (callers pass it sorted).
pub fn select_context<'a, R: Rng + ?Sized>(
    evidence: &'a [EvidenceSentence],
    rng: &mut R,
) -> Result<&'a EvidenceSentence, GenError> {
    evidence.choose(rng).ok_or(GenError::EmptyEvidence)
}

/// Units at least `distance` steps from every episodic unit.
pub fn negative_units(episodic: &[DurationUnit], distance: usize) -> Vec<DurationUnit> {
    DurationUnit::ALL
        .into_iter()
        .filter(|u| episodic.iter().all(|e| e.distance(*u) >= distance))
        .collect()
}

fn draw_answer<R: Rng + ?Sized>(units: &[DurationUnit], label: Label, config: &GenConfig, rng: &mut R) -> PseudoAnswer {
    let unit = *units.choose(rng).expect("unit set checked non-empty");
    let (lo, hi) = config.unit_ranges[unit.index()];
    let number = rng.random_range(lo..=hi);
    let magnitude = if !config.quantifiers.is_empty() && rng.random::<f64>() < config.quantifier_prob {
        Magnitude::Quantifier(config.quantifiers.choose(rng).expect("non-empty").clone())
    } else {
        Magnitude::Number(number)
    };
    PseudoAnswer { text: render_answer(&magnitude, unit), unit, magnitude, label }
}

/// Three plausible then four implausible answers, redrawing any answer
/// whose text repeats an earlier one, then shuffled.
pub fn generate_answers<R: Rng + ?Sized>(
    episodic: &[DurationUnit],
    config: &GenConfig,
    rng: &mut R,
) -> Result<Vec<PseudoAnswer>, GenError> {
    if episodic.is_empty() {
        return Err(GenError::EmptyEpisodic);
    }
    let negatives = negative_units(episodic, config.negative_distance);
    if negatives.is_empty() {
        return Err(GenError::NoNegativeUnits { distance: config.negative_distance });
    }

    let plan = std::iter::repeat_n((episodic, Label::Plausible), POSITIVES)
        .chain(std::iter::repeat_n((negatives.as_slice(), Label::NotPlausible), NEGATIVES));
    let mut answers = Vec::with_capacity(POSITIVES + NEGATIVES);
    let mut texts = HashSet::new();
    let mut attempts = 0;
    for (units, label) in plan {
        loop {
            attempts += 1;
            if attempts > MAX_ATTEMPTS {
                return Err(GenError::Collisions);
            }
            let answer = draw_answer(units, label, config, rng);
            if texts.insert(answer.text.clone()) {
                answers.push(answer);
                break;
            }
        }
    }
    answers.shuffle(rng);
    Ok(answers)
}

/// Builds the question for one event from its episodic units and evidence.
pub fn generate_question(
    event_id: &str,
    question: &str,
    episodic: &[DurationUnit],
    evidence: &[EvidenceSentence],
    config: &GenConfig,
    seed: u64,
) -> Result<PseudoQuestion, GenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let context = select_context(evidence, &mut rng)?;
    let answers = generate_answers(episodic, config, &mut rng)?;
    Ok(PseudoQuestion {
        event_id: event_id.to_string(),
        context: context.sentence.text.clone(),
        question: question.to_string(),
        answers,
    })
}

fn tsv_field(s: &str) -> String {
    s.split(['\t', '\n', '\r']).collect::<Vec<_>>().join(" ")
}

/// Writes one tab-separated line per answer: context, question, answer,
/// yes/no, category. Questions are ordered by event id. Returns the number
/// of lines written.
pub fn emit_mctaco<W: Write>(questions: &[PseudoQuestion], out: &mut W) -> io::Result<usize> {
    let mut ordered: Vec<&PseudoQuestion> = questions.iter().collect();
    ordered.sort_by(|a, b| a.event_id.cmp(&b.event_id));
    let mut lines = 0;
    for q in ordered {
        let (context, question) = (tsv_field(&q.context), tsv_field(&q.question));
        for a in &q.answers {
            writeln!(out, "{context}\t{question}\t{}\t{}\t{CATEGORY}", tsv_field(&a.text), a.label.as_yes_no())?;
            lines += 1;
        }
    }
    out.flush()?;
    Ok(lines)
}

/// Plausible-answer counts per unit.
pub fn distribution_report(questions: &[PseudoQuestion]) -> [u64; 8] {
    let mut counts = [0u64; 8];
    for a in questions.iter().flat_map(|q| &q.answers).filter(|a| a.label == Label::Plausible) {
        counts[a.unit.index()] += 1;
    }
    counts
}

pub fn distribution_csv(counts: &[u64; 8]) -> String {
    let mut out = String::from("unit,count\n");
    for u in DurationUnit::ALL {
        out.push_str(&format!("{},{}\n", u.plural(), counts[u.index()]));
    }
    out
}
