use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::seeding::derive_seed;

use super::matcher::EvidenceSentence;

/// Single-pass uniform sample of at most `k` items (Algorithm R).
#[derive(Debug, Clone)]
pub struct Reservoir<T> {
    k: usize,
    seen: u64,
    items: Vec<T>,
    rng: ChaCha8Rng,
}

impl<T> Reservoir<T> {
    pub fn new(k: usize, seed: u64) -> Self {
        assert!(k >= 1, "reservoir capacity must be positive");
        Self {
            k,
            seen: 0,
            items: Vec::with_capacity(k),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn offer(&mut self, item: T) {
        if self.items.len() < self.k {
            self.items.push(item);
        } else {
            let j = self.rng.random_range(0..=self.seen);
            if (j as usize) < self.k {
                self.items[j as usize] = item;
            }
        }
        self.seen += 1;
    }

    pub fn seen(&self) -> u64 {
        self.seen
    }

    pub fn into_items(self) -> Vec<T> {
        self.items
    }
}

/// Per-event sampled evidence plus bookkeeping about match counts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleOutcome {
    /// Sampled sentences per event, sorted by (doc_id, sentence_index).
    pub evidence: BTreeMap<String, Vec<EvidenceSentence>>,
    /// Total matches seen per event before sampling.
    pub matched: BTreeMap<String, u64>,
    /// Events whose match count fell below `min_sentences`.
    pub under_evidenced: Vec<String>,
}

impl SampleOutcome {
    pub fn is_under_evidenced(&self, event_id: &str) -> bool {
        self.under_evidenced.binary_search_by(|e| e.as_str().cmp(event_id)).is_ok()
    }

    /// Events with enough evidence for voting, in event-id order.
    pub fn eligible(&self) -> impl Iterator<Item = (&String, &Vec<EvidenceSentence>)> {
        self.evidence.iter().filter(|(id, _)| !self.is_under_evidenced(id))
    }
}

/// Streaming per-event sampler. Each event gets its own reservoir seeded by
/// `seed XOR hash(event_id)`, so an event's sample depends only on the seed
/// and the order of that event's own matches.
#[derive(Debug)]
pub struct EvidenceSampler {
    k: usize,
    seed: u64,
    reservoirs: BTreeMap<String, Reservoir<EvidenceSentence>>,
}

impl EvidenceSampler {
    pub fn new(k: usize, seed: u64) -> Self {
        Self { k, seed, reservoirs: BTreeMap::new() }
    }

    pub fn offer(&mut self, evidence: EvidenceSentence) {
        let (k, seed) = (self.k, self.seed);
        self.reservoirs
            .entry(evidence.event_id.clone())
            .or_insert_with_key(|id| Reservoir::new(k, derive_seed(seed, id)))
            .offer(evidence);
    }

    pub fn finish(self, min_sentences: usize) -> SampleOutcome {
        let mut out = SampleOutcome::default();
        for (event_id, reservoir) in self.reservoirs {
            let seen = reservoir.seen();
            let mut items = reservoir.into_items();
            items.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
            if (seen as usize) < min_sentences {
                out.under_evidenced.push(event_id.clone());
            }
            out.matched.insert(event_id.clone(), seen);
            out.evidence.insert(event_id, items);
        }
        out
    }
}

pub fn sample_sentences<I>(matches: I, k: usize, seed: u64, min_sentences: usize) -> SampleOutcome
where
    I: IntoIterator<Item = EvidenceSentence>,
{
    let mut sampler = EvidenceSampler::new(k, seed);
    for m in matches {
        sampler.offer(m);
    }
    sampler.finish(min_sentences)
}
