//! MC-TACO style evaluation: Exact Match and per-question F1.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::pseudogen::Label;

pub const DURATION_CATEGORY: &str = "Event Duration";
pub const OFFICIAL_TRAIN_QUESTIONS: usize = 126;
pub const OFFICIAL_TEST_QUESTIONS: usize = 314;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InstanceKey {
    pub context: String,
    pub question: String,
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QaInstance {
    pub context: String,
    pub question: String,
    pub answer: String,
    pub gold_label: Label,
    pub category: Option<String>,
}

impl QaInstance {
    pub fn key(&self) -> InstanceKey {
        InstanceKey {
            context: self.context.clone(),
            question: self.question.clone(),
            answer: self.answer.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuestionGroup {
    pub context: String,
    pub question: String,
    pub instances: Vec<QaInstance>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("line {line}: expected 4 or 5 tab-separated fields, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("line {line}: label must be yes or no, found {found:?}")]
    BadLabel { line: usize, found: String },
    #[error("line {line}: conflicting duplicate of an earlier instance")]
    Conflict { line: usize },
    #[error("prediction coverage mismatch: {} missing, {} extra (first missing: {:?}, first extra: {:?})",
        missing.len(), extra.len(), missing.first(), extra.first())]
    Coverage {
        missing: Vec<InstanceKey>,
        extra: Vec<InstanceKey>,
    },
}

fn parse_label(line: usize, s: &str) -> Result<Label, EvalError> {
    match s.trim() {
        "yes" => Ok(Label::Plausible),
        "no" => Ok(Label::NotPlausible),
        other => Err(EvalError::BadLabel { line, found: other.to_string() }),
    }
}

fn parse_line(line_no: usize, line: &str) -> Result<QaInstance, EvalError> {
    let fields: Vec<&str> = line.split('\t').collect();
    if !(4..=5).contains(&fields.len()) {
        return Err(EvalError::FieldCount { line: line_no, found: fields.len() });
    }
    Ok(QaInstance {
        context: fields[0].to_string(),
        question: fields[1].to_string(),
        answer: fields[2].to_string(),
        gold_label: parse_label(line_no, fields[3])?,
        category: fields.get(4).map(|c| c.trim().to_string()),
    })
}

fn data_lines<'a, I, S>(lines: I) -> impl Iterator<Item = (usize, String)> + 'a
where
    I: IntoIterator<Item = S> + 'a,
    S: AsRef<str> + 'a,
{
    lines
        .into_iter()
        .enumerate()
        .map(|(i, l)| (i + 1, l.as_ref().trim_end_matches(['\r', '\n']).to_string()))
        .filter(|(_, l)| !l.trim().is_empty())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadedGold {
    pub groups: Vec<QuestionGroup>,
    /// Exact repeats of an earlier (context, question, answer, label) line.
    pub duplicates: usize,
}

/// Groups gold lines by (context, question) in first-seen order. With a
/// category filter, only lines whose fifth field equals it are kept.
pub fn load_mctaco<I, S>(lines: I, category: Option<&str>) -> Result<LoadedGold, EvalError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut groups: Vec<QuestionGroup> = Vec::new();
    let mut group_index: HashMap<(String, String), usize> = HashMap::new();
    let mut labels: HashMap<InstanceKey, Label> = HashMap::new();
    let mut duplicates = 0;

    for (line_no, line) in data_lines(lines) {
        let inst = parse_line(line_no, &line)?;
        if let Some(want) = category {
            if inst.category.as_deref() != Some(want) {
                continue;
            }
        }
        match labels.get(&inst.key()) {
            Some(l) if *l == inst.gold_label => {
                duplicates += 1;
                continue;
            }
            Some(_) => return Err(EvalError::Conflict { line: line_no }),
            None => {
                labels.insert(inst.key(), inst.gold_label);
            }
        }
        let key = (inst.context.clone(), inst.question.clone());
        let idx = *group_index.entry(key).or_insert_with(|| {
            groups.push(QuestionGroup {
                context: inst.context.clone(),
                question: inst.question.clone(),
                instances: Vec::new(),
            });
            groups.len() - 1
        });
        groups[idx].instances.push(inst);
    }
    Ok(LoadedGold { groups, duplicates })
}

/// Prediction lines: context, question, answer, yes/no (a fifth field is
/// tolerated so gold files can be scored against themselves).
pub fn load_predictions<I, S>(lines: I) -> Result<HashMap<InstanceKey, Label>, EvalError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut out = HashMap::new();
    for (line_no, line) in data_lines(lines) {
        let inst = parse_line(line_no, &line)?;
        match out.insert(inst.key(), inst.gold_label) {
            Some(prev) if prev != inst.gold_label => return Err(EvalError::Conflict { line: line_no }),
            _ => {}
        }
    }
    Ok(out)
}

/// Warning text when a duration split does not have its published size.
pub fn check_official_size(split: &str, groups: usize) -> Option<String> {
    let expected = match split {
        "train" => OFFICIAL_TRAIN_QUESTIONS,
        "test" => OFFICIAL_TEST_QUESTIONS,
        _ => return None,
    };
    (groups != expected).then(|| format!("{split} split has {groups} question groups, expected {expected}"))
}

fn check_coverage(gold: &[QuestionGroup], pred: &HashMap<InstanceKey, Label>) -> Result<(), EvalError> {
    let gold_keys: HashSet<InstanceKey> = gold.iter().flat_map(|g| g.instances.iter().map(QaInstance::key)).collect();
    let mut missing: Vec<_> = gold_keys.iter().filter(|k| !pred.contains_key(*k)).cloned().collect();
    let mut extra: Vec<_> = pred.keys().filter(|k| !gold_keys.contains(*k)).cloned().collect();
    if missing.is_empty() && extra.is_empty() {
        return Ok(());
    }
    missing.sort();
    extra.sort();
    Err(EvalError::Coverage { missing, extra })
}

pub fn exact_match(gold: &[QuestionGroup], pred: &HashMap<InstanceKey, Label>) -> Result<f64, EvalError> {
    check_coverage(gold, pred)?;
    if gold.is_empty() {
        return Ok(0.0);
    }
    let correct = gold
        .iter()
        .filter(|g| g.instances.iter().all(|i| pred[&i.key()] == i.gold_label))
        .count();
    Ok(correct as f64 / gold.len() as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Overlap {
    true_pos: usize,
    predicted: usize,
    gold: usize,
}

fn overlap(g: &QuestionGroup, pred: &HashMap<InstanceKey, Label>) -> Overlap {
    let mut o = Overlap::default();
    for i in &g.instances {
        let p = pred[&i.key()] == Label::Plausible;
        let t = i.gold_label == Label::Plausible;
        o.predicted += usize::from(p);
        o.gold += usize::from(t);
        o.true_pos += usize::from(p && t);
    }
    o
}

fn f1_of(o: Overlap) -> f64 {
    match (o.predicted, o.gold) {
        (0, 0) => 1.0,
        (0, _) | (_, 0) => 0.0,
        _ => 2.0 * o.true_pos as f64 / (o.predicted + o.gold) as f64,
    }
}

/// Mean over questions of the F1 between predicted-plausible and
/// gold-plausible answer sets.
pub fn f1(gold: &[QuestionGroup], pred: &HashMap<InstanceKey, Label>) -> Result<f64, EvalError> {
    check_coverage(gold, pred)?;
    if gold.is_empty() {
        return Ok(0.0);
    }
    Ok(gold.iter().map(|g| f1_of(overlap(g, pred))).sum::<f64>() / gold.len() as f64)
}

/// F1 over plausible answers pooled across all questions.
pub fn f1_micro(gold: &[QuestionGroup], pred: &HashMap<InstanceKey, Label>) -> Result<f64, EvalError> {
    check_coverage(gold, pred)?;
    let total = gold.iter().map(|g| overlap(g, pred)).fold(Overlap::default(), |a, b| Overlap {
        true_pos: a.true_pos + b.true_pos,
        predicted: a.predicted + b.predicted,
        gold: a.gold + b.gold,
    });
    Ok(f1_of(total))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub em: f64,
    pub f1: f64,
    pub questions: usize,
    pub micro: bool,
}

pub fn evaluate(gold: &[QuestionGroup], pred: &HashMap<InstanceKey, Label>, micro: bool) -> Result<Metrics, EvalError> {
    Ok(Metrics {
        em: exact_match(gold, pred)?,
        f1: if micro { f1_micro(gold, pred)? } else { f1(gold, pred)? },
        questions: gold.len(),
        micro,
    })
}
