use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::seeding::derive_seed;
use crate::sim::{LabelModel, NoiseModel, SimError, Truth};

use super::{PredictError, Predictor, UnitQuery, UnitVerdict};

/// Simulated draft model. Each sentence gets one label drawn from its
/// event's truth with the configured accuracy and noise; the query at that
/// unit is plausible, the other seven are not. Draws are keyed by
/// (seed, event, document, sentence), so verdicts do not depend on batching.
#[derive(Debug, Clone)]
pub struct MockPredictor {
    seed: u64,
    models: HashMap<String, LabelModel>,
    default_model: Option<LabelModel>,
}

impl MockPredictor {
    pub fn new(
        truths: HashMap<String, Truth>,
        default_truth: Option<Truth>,
        accuracy: f64,
        noise: NoiseModel,
        seed: u64,
    ) -> Result<Self, SimError> {
        let models = truths
            .into_iter()
            .map(|(id, t)| LabelModel::new(t, accuracy, noise).map(|m| (id, m)))
            .collect::<Result<_, _>>()?;
        let default_model = default_truth.map(|t| LabelModel::new(t, accuracy, noise)).transpose()?;
        Ok(Self { seed, models, default_model })
    }

    fn verdict(&self, q: &UnitQuery) -> UnitVerdict {
        let model = self.models.get(&q.event_id).or(self.default_model.as_ref());
        let sentence_key = format!("{}|{}|{}", q.event_id, q.doc_id, q.sentence_index);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, &sentence_key));
        let label = model.map(|m| m.draw_label(&mut rng));
        let jitter: [f64; 8] = std::array::from_fn(|_| rng.random::<f64>());
        let plausible = label == Some(q.unit);
        let u = jitter[q.unit.index()];
        let score = if plausible { 0.5 + 0.5 * u } else { 0.5 * u };
        UnitVerdict {
            query_id: q.query_id.clone(),
            plausible,
            score: Some(score),
        }
    }
}

impl Predictor for MockPredictor {
    fn predict_batch(&self, queries: &[UnitQuery]) -> Result<Vec<UnitVerdict>, PredictError> {
        Ok(queries.iter().map(|q| self.verdict(q)).collect())
    }
}
