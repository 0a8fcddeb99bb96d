//! Duration plausibility queries and the predictors that answer them.
//!
//! Every evidence sentence is probed with all eight units; a predictor marks
//! each (sentence, unit) pair plausible or not.

mod mock;
mod pattern;
mod remote;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::EvidenceSentence;
use crate::events::Event;
use crate::units::DurationUnit;

pub use mock::MockPredictor;
pub use pattern::{pattern_predict, PatternPredictor};
pub use remote::{RemoteConfig, RemotePredictor};

/// The probing question for an event, e.g. "How long does it take to play music?".
pub fn question_text(event: &Event) -> String {
    format!("How long does it take to {}?", event.canonical())
}

/// Deterministic id of the (sentence, unit) probe.
pub fn query_id(event_id: &str, doc_id: &str, sentence_index: usize, unit: DurationUnit) -> String {
    format!("{event_id}|{doc_id}|{sentence_index}|{}", unit.plural())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitQuery {
    pub query_id: String,
    pub event_id: String,
    pub doc_id: String,
    pub sentence_index: usize,
    pub sentence_text: String,
    pub question_text: String,
    pub unit: DurationUnit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitVerdict {
    pub query_id: String,
    pub plausible: bool,
    pub score: Option<f64>,
}

/// The eight per-unit probes for one evidence sentence.
pub fn build_queries(evidence: &EvidenceSentence, event: &Event) -> Vec<UnitQuery> {
    debug_assert_eq!(evidence.event_id, event.id);
    let question = question_text(event);
    let s = &evidence.sentence;
    DurationUnit::ALL
        .into_iter()
        .map(|unit| UnitQuery {
            query_id: query_id(&event.id, &s.doc_id, s.sentence_index, unit),
            event_id: event.id.clone(),
            doc_id: s.doc_id.clone(),
            sentence_index: s.sentence_index,
            sentence_text: s.text.clone(),
            question_text: question.clone(),
            unit,
        })
        .collect()
}

#[derive(Debug, thiserror::Error)]
pub enum PredictError {
    #[error("predictor transport failed after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("predictor protocol error for query {query_id:?}: {message}")]
    Protocol { query_id: String, message: String },
}

/// Answers plausibility queries. Implementations must tolerate concurrent
/// calls; the order of returned verdicts is irrelevant.
pub trait Predictor: Send + Sync {
    fn predict_batch(&self, queries: &[UnitQuery]) -> Result<Vec<UnitVerdict>, PredictError>;
}

/// Runs `predictor` and returns exactly one verdict per query, in query
/// order. Missing, unknown or duplicated ids are protocol errors.
pub fn predict(queries: &[UnitQuery], predictor: &dyn Predictor) -> Result<Vec<UnitVerdict>, PredictError> {
    if queries.is_empty() {
        return Ok(Vec::new());
    }
    let verdicts = predictor.predict_batch(queries)?;
    let mut by_id: HashMap<&str, Option<UnitVerdict>> =
        queries.iter().map(|q| (q.query_id.as_str(), None)).collect();
    for v in verdicts {
        match by_id.get_mut(v.query_id.as_str()) {
            None => {
                return Err(PredictError::Protocol {
                    message: "verdict for unknown query".into(),
                    query_id: v.query_id,
                })
            }
            Some(Some(_)) => {
                return Err(PredictError::Protocol {
                    message: "duplicate verdict".into(),
                    query_id: v.query_id,
                })
            }
            Some(slot) => *slot = Some(v),
        }
    }
    queries
        .iter()
        .map(|q| {
            by_id
                .get_mut(q.query_id.as_str())
                .and_then(Option::take)
                .ok_or_else(|| PredictError::Protocol {
                    query_id: q.query_id.clone(),
                    message: "no verdict returned".into(),
                })
        })
        .collect()
}
