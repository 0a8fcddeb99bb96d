//! Monte-Carlo check that voting recovers the true typical duration when the
//! per-sentence predictor is noisy.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::units::DurationUnit;
use crate::voting::{classify_counts, Counts, DurationHistogram, DEFAULT_NEIGHBOR_THRESHOLD};

/// How wrong labels are spread over the non-true units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    Uniform,
    /// Weight `decay^d` where `d` is the distance to the nearest true unit.
    AdjacentGeometric { decay: f64 },
}

impl NoiseModel {
    /// Normalized weights over all eight units; true units get zero.
    pub fn weights(&self, truth: &[DurationUnit]) -> [f64; 8] {
        let mut w = [0.0; 8];
        for u in DurationUnit::ALL {
            if truth.contains(&u) {
                continue;
            }
            w[u.index()] = match *self {
                NoiseModel::Uniform => 1.0,
                NoiseModel::AdjacentGeometric { decay } => {
                    let d = truth.iter().map(|t| t.distance(u)).min().unwrap_or(1);
                    decay.powi(d as i32)
                }
            };
        }
        let total: f64 = w.iter().sum();
        if total > 0.0 {
            w.iter_mut().for_each(|x| *x /= total);
        }
        w
    }
}

/// The ground-truth typical duration of a simulated event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Truth {
    Single { unit: DurationUnit },
    /// Correct labels go to `episodic` with probability `share`, else to
    /// `habitual`.
    Bimodal { episodic: DurationUnit, habitual: DurationUnit, share: f64 },
}

impl Truth {
    pub fn single(unit: DurationUnit) -> Self {
        Truth::Single { unit }
    }

    pub fn bimodal(episodic: DurationUnit, habitual: DurationUnit) -> Self {
        Truth::Bimodal { episodic, habitual, share: 0.5 }
    }

    pub fn units(&self) -> Vec<DurationUnit> {
        match *self {
            Truth::Single { unit } => vec![unit],
            Truth::Bimodal { episodic, habitual, .. } => vec![episodic, habitual],
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("accuracy must lie in [0, 1], got {0}")]
    Accuracy(f64),
    #[error("decay must lie in (0, 1], got {0}")]
    Decay(f64),
    #[error("bimodal share must lie in [0, 1], got {0}")]
    Share(f64),
    #[error("bimodal truth needs two distinct units")]
    SameUnits,
    #[error("k and trials must be positive")]
    Empty,
    #[error("neighbor threshold must lie in (0, 1], got {0}")]
    Threshold(f64),
}

/// Draws per-sentence labels for a given truth, accuracy and noise model.
#[derive(Debug, Clone)]
pub struct LabelModel {
    truth: Truth,
    accuracy: f64,
    noise_weights: [f64; 8],
    noise: Option<WeightedIndex<f64>>,
}

impl LabelModel {
    pub fn new(truth: Truth, accuracy: f64, noise: NoiseModel) -> Result<Self, SimError> {
        if !(0.0..=1.0).contains(&accuracy) {
            return Err(SimError::Accuracy(accuracy));
        }
        if let NoiseModel::AdjacentGeometric { decay } = noise {
            if !(decay > 0.0 && decay <= 1.0) {
                return Err(SimError::Decay(decay));
            }
        }
        if let Truth::Bimodal { episodic, habitual, share } = truth {
            if episodic == habitual {
                return Err(SimError::SameUnits);
            }
            if !(0.0..=1.0).contains(&share) {
                return Err(SimError::Share(share));
            }
        }
        let noise_weights = noise.weights(&truth.units());
        let noise = WeightedIndex::new(noise_weights).ok();
        Ok(Self { truth, accuracy, noise_weights, noise })
    }

    pub fn truth(&self) -> Truth {
        self.truth
    }

    fn true_label<R: Rng + ?Sized>(&self, rng: &mut R) -> DurationUnit {
        match self.truth {
            Truth::Single { unit } => unit,
            Truth::Bimodal { episodic, habitual, share } => {
                if rng.random::<f64>() < share {
                    episodic
                } else {
                    habitual
                }
            }
        }
    }

    /// One label per sentence: a true unit with probability `accuracy`,
    /// otherwise a noise unit.
    pub fn draw_label<R: Rng + ?Sized>(&self, rng: &mut R) -> DurationUnit {
        let correct = rng.random::<f64>() < self.accuracy;
        match (&self.noise, correct) {
            (Some(noise), false) => DurationUnit::ALL[noise.sample(rng)],
            _ => self.true_label(rng),
        }
    }

    /// Independent per-unit plausibility: each true unit with probability
    /// `accuracy` (split by share when bimodal), each other unit `u` with
    /// probability `(1 - accuracy) * weight(u)`.
    pub fn draw_plausible_set<R: Rng + ?Sized>(&self, rng: &mut R) -> [bool; 8] {
        let mut out = [false; 8];
        for u in DurationUnit::ALL {
            let p = match self.truth {
                Truth::Single { unit } if unit == u => self.accuracy,
                Truth::Bimodal { episodic, share, .. } if episodic == u => self.accuracy * share,
                Truth::Bimodal { habitual, share, .. } if habitual == u => self.accuracy * (1.0 - share),
                _ => (1.0 - self.accuracy) * self.noise_weights[u.index()],
            };
            out[u.index()] = rng.random::<f64>() < p;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub truth: Truth,
    pub accuracy: f64,
    pub noise: NoiseModel,
    /// Sentences per trial.
    pub k: usize,
    pub trials: usize,
    pub seed: u64,
    pub threshold: f64,
    /// Sample eight independent plausibility flags per sentence instead of a
    /// single label.
    pub multi_label: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            truth: Truth::single(DurationUnit::Hours),
            accuracy: 0.6,
            noise: NoiseModel::Uniform,
            k: 50,
            trials: 10_000,
            seed: 0,
            threshold: DEFAULT_NEIGHBOR_THRESHOLD,
            multi_label: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<LabelModel, SimError> {
        if self.k == 0 || self.trials == 0 {
            return Err(SimError::Empty);
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(SimError::Threshold(self.threshold));
        }
        LabelModel::new(self.truth, self.accuracy, self.noise)
    }
}

pub fn sample_trial<R: Rng + ?Sized>(cfg: &SimConfig, model: &LabelModel, rng: &mut R) -> DurationHistogram {
    let mut counts: Counts = [0; 8];
    for _ in 0..cfg.k {
        if cfg.multi_label {
            for (c, hit) in counts.iter_mut().zip(model.draw_plausible_set(rng)) {
                *c += u32::from(hit);
            }
        } else {
            counts[model.draw_label(rng).index()] += 1;
        }
    }
    DurationHistogram { event_id: "simulated".into(), counts, sentence_count: cfg.k as u32 }
}

/// Generator for trial `trial`: the seed picks the key, the trial index the
/// stream, so any trial can be replayed in isolation.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    /// Trials whose episodic span contains the true unit (bimodal truth: both
    /// true units inside episodic ∪ habitual).
    pub recovery_rate: f64,
    /// Trials where every true unit lands in episodic ∪ habitual.
    pub acquired_rate: f64,
    pub successes: Vec<bool>,
    pub mean_histogram: [f64; 8],
}

#[derive(Debug, Clone, Copy)]
struct TrialOutcome {
    recovered: bool,
    acquired: bool,
    counts: Counts,
}

fn run_trial(cfg: &SimConfig, model: &LabelModel, trial: usize) -> TrialOutcome {
    let mut rng = trial_rng(cfg.seed, trial);
    let h = sample_trial(cfg, model, &mut rng);
    let typical = classify_counts(&h.event_id, &h.counts, cfg.threshold);
    let truth = cfg.truth.units();
    let (recovered, acquired) = match &typical {
        None => (false, false),
        Some(t) => {
            let habitual = t.habitual.as_deref().unwrap_or(&[]);
            let anywhere = truth.iter().all(|u| t.episodic.contains(u) || habitual.contains(u));
            let recovered = match cfg.truth {
                Truth::Single { unit } => t.episodic.contains(&unit),
                Truth::Bimodal { .. } => anywhere,
            };
            (recovered, anywhere)
        }
    };
    TrialOutcome { recovered, acquired, counts: h.counts }
}

pub fn run(cfg: &SimConfig) -> Result<SimResult, SimError> {
    let model = cfg.validate()?;
    let outcomes: Vec<TrialOutcome> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, &model, t))
        .collect();

    let n = outcomes.len() as f64;
    let successes: Vec<bool> = outcomes.iter().map(|o| o.recovered).collect();
    let recovered = successes.iter().filter(|s| **s).count();
    let acquired = outcomes.iter().filter(|o| o.acquired).count();
    let mut mean_histogram = [0.0; 8];
    for o in &outcomes {
        for (m, c) in mean_histogram.iter_mut().zip(o.counts) {
            *m += f64::from(c);
        }
    }
    mean_histogram.iter_mut().for_each(|m| *m /= n);
    Ok(SimResult {
        recovery_rate: recovered as f64 / n,
        acquired_rate: acquired as f64 / n,
        successes,
        mean_histogram,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: f64,
    pub k: usize,
    pub recovery_rate: f64,
}

/// Grid of runs over accuracies and sentence counts. Each cell reuses the
/// base seed, so a 1x1 sweep equals a single run and cells sharing `k`
/// see common random numbers.
pub fn sweep(p_values: &[f64], k_values: &[usize], base: &SimConfig) -> Result<Vec<SweepRow>, SimError> {
    if p_values.is_empty() || k_values.is_empty() {
        return Err(SimError::Empty);
    }
    let mut rows = Vec::with_capacity(p_values.len() * k_values.len());
    for &p in p_values {
        for &k in k_values {
            let cfg = SimConfig { accuracy: p, k, ..base.clone() };
            rows.push(SweepRow { p, k, recovery_rate: run(&cfg)?.recovery_rate });
        }
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("p,k,recovery_rate\n");
    for r in rows {
        out.push_str(&format!("{},{},{:.6}\n", r.p, r.k, r.recovery_rate));
    }
    out
}
