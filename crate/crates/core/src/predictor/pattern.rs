use regex::Regex;

use crate::units::DurationUnit;

use super::{PredictError, Predictor, UnitQuery, UnitVerdict};

const NUMBER: &str = r"(?:\d+|one|two|three|four|five|six|seven|eight|nine|ten|eleven|twelve)";
const QUANTIFIER: &str = r"(?:a\s+few|several|a\s+couple\s+of)";

/// Explicit-duration baseline: a unit is plausible iff the sentence states
/// it with a cue such as "for two hours" or "lasted several days".
#[derive(Debug, Clone)]
pub struct PatternPredictor {
    per_unit: Vec<Regex>,
}

impl Default for PatternPredictor {
    fn default() -> Self {
        let per_unit = DurationUnit::ALL
            .into_iter()
            .map(|u| {
                let word = format!("(?:{}|{})", u.singular(), u.plural());
                let amount = format!("(?:{NUMBER}|{QUANTIFIER})");
                let pattern = format!(
                    r"(?i)\b(?:(?:for|lasted|spent)\s+{amount}|in\s+{NUMBER}|over\s+the\s+next\s+{NUMBER})\s+{word}\b"
                );
                Regex::new(&pattern).expect("pattern table compiles")
            })
            .collect();
        Self { per_unit }
    }
}

impl PatternPredictor {
    pub fn is_plausible(&self, sentence: &str, unit: DurationUnit) -> bool {
        self.per_unit[unit.index()].is_match(sentence)
    }
}

impl Predictor for PatternPredictor {
    fn predict_batch(&self, queries: &[UnitQuery]) -> Result<Vec<UnitVerdict>, PredictError> {
        Ok(queries
            .iter()
            .map(|q| UnitVerdict {
                query_id: q.query_id.clone(),
                plausible: self.is_plausible(&q.sentence_text, q.unit),
                score: None,
            })
            .collect())
    }
}

/// One-shot form of [`PatternPredictor::is_plausible`].
pub fn pattern_predict(sentence: &str, unit: DurationUnit) -> bool {
    PatternPredictor::default().is_plausible(sentence, unit)
}
