//! Majority voting over per-sentence duration verdicts.
//!
//! Each sentence votes for every unit it was judged plausible at. A unit is
//! a peak when its count is positive and strictly exceeds each existing
//! neighbour. A peak absorbs an immediate neighbour whose count reaches
//! `threshold` times the peak count. With two peaks, the lower-unit peak is
//! the episodic duration and the higher one the habitual duration.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::units::DurationUnit;

pub const DEFAULT_NEIGHBOR_THRESHOLD: f64 = 0.75;

pub type Counts = [u32; DurationUnit::COUNT];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DurationHistogram {
    pub event_id: String,
    pub counts: Counts,
    pub sentence_count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VotingError {
    #[error("event {0}: empty evidence")]
    EmptyEvidence(String),
    #[error("event {event_id}: count {count} at {unit} exceeds sentence count {sentence_count}")]
    CountExceedsSentences {
        event_id: String,
        unit: DurationUnit,
        count: u32,
        sentence_count: u32,
    },
}

impl DurationHistogram {
    pub fn new(event_id: impl Into<String>, counts: Counts, sentence_count: u32) -> Result<Self, VotingError> {
        let event_id = event_id.into();
        if sentence_count == 0 {
            return Err(VotingError::EmptyEvidence(event_id));
        }
        for unit in DurationUnit::ALL {
            let count = counts[unit.index()];
            if count > sentence_count {
                return Err(VotingError::CountExceedsSentences { event_id, unit, count, sentence_count });
            }
        }
        Ok(Self { event_id, counts, sentence_count })
    }

    pub fn count(&self, unit: DurationUnit) -> u32 {
        self.counts[unit.index()]
    }
}

/// One (sentence, unit) verdict, as consumed by [`build_histogram`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitVote {
    pub doc_id: String,
    pub sentence_index: usize,
    pub unit: DurationUnit,
    pub plausible: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistogramBuild {
    pub histogram: DurationHistogram,
    /// Sentences dropped because their eight-unit query set was incomplete
    /// or contradictory.
    pub excluded_sentences: usize,
}

pub fn build_histogram<I>(event_id: &str, votes: I) -> Result<HistogramBuild, VotingError>
where
    I: IntoIterator<Item = UnitVote>,
{
    let mut per_sentence: BTreeMap<(String, usize), [Option<bool>; 8]> = BTreeMap::new();
    let mut conflicting = std::collections::BTreeSet::new();
    for v in votes {
        let key = (v.doc_id, v.sentence_index);
        let slot = &mut per_sentence.entry(key.clone()).or_default()[v.unit.index()];
        match slot {
            Some(prev) if *prev != v.plausible => {
                conflicting.insert(key);
            }
            _ => *slot = Some(v.plausible),
        }
    }

    let mut counts = [0u32; 8];
    let mut sentences = 0u32;
    let mut excluded = 0usize;
    for (key, verdicts) in &per_sentence {
        if conflicting.contains(key) || verdicts.iter().any(Option::is_none) {
            excluded += 1;
            continue;
        }
        sentences += 1;
        for (c, v) in counts.iter_mut().zip(verdicts) {
            *c += u32::from(*v == Some(true));
        }
    }
    if excluded > 0 {
        log::warn!("event {event_id}: {excluded} sentence(s) with incomplete verdicts excluded");
    }
    Ok(HistogramBuild {
        histogram: DurationHistogram::new(event_id, counts, sentences)?,
        excluded_sentences: excluded,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Peak {
    pub unit: DurationUnit,
    pub count: u32,
}

/// Strict local maxima with positive count, in ascending unit order.
pub fn detect_peaks(counts: &Counts) -> Vec<Peak> {
    DurationUnit::ALL
        .into_iter()
        .filter(|u| {
            let c = counts[u.index()];
            c > 0 && u.neighbors().all(|n| c > counts[n.index()])
        })
        .map(|unit| Peak { unit, count: counts[unit.index()] })
        .collect()
}

/// The peak's unit plus each immediate neighbour reaching `threshold` of the
/// peak count, never taking another peak's unit. Returned in ascending order.
pub fn expand_peak(counts: &Counts, peak: Peak, other_peaks: &[Peak], threshold: f64) -> Vec<DurationUnit> {
    let peak_count = f64::from(counts[peak.unit.index()]);
    let mut units: Vec<DurationUnit> = peak
        .unit
        .neighbors()
        .filter(|n| other_peaks.iter().all(|p| p.unit != *n))
        // Ratio form keeps the test exact under integer scaling of counts.
        .filter(|n| f64::from(counts[n.index()]) / peak_count >= threshold)
        .chain(std::iter::once(peak.unit))
        .collect();
    units.sort();
    units
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypicalDuration {
    pub event_id: String,
    pub episodic: Vec<DurationUnit>,
    pub habitual: Option<Vec<DurationUnit>>,
    pub episodic_peak: Peak,
    pub habitual_peak: Option<Peak>,
}

impl TypicalDuration {
    pub fn is_bimodal(&self) -> bool {
        self.habitual.is_some()
    }

    fn check_invariants(&self) {
        let contiguous = |units: &[DurationUnit], peak: DurationUnit| {
            !units.is_empty()
                && units.len() <= 3
                && units.contains(&peak)
                && units.windows(2).all(|w| w[1].index() == w[0].index() + 1)
        };
        assert!(contiguous(&self.episodic, self.episodic_peak.unit), "episodic span invalid: {self:?}");
        if let (Some(h), Some(hp)) = (&self.habitual, &self.habitual_peak) {
            assert!(contiguous(h, hp.unit), "habitual span invalid: {self:?}");
            assert!(self.episodic.last() < h.first(), "episodic must precede habitual: {self:?}");
        }
    }
}

/// Typical duration from raw counts, or `None` when every count is zero.
///
/// More than two peaks: the two largest counts are kept (lower unit wins
/// ties). No peak but some votes: the first argmax unit stands in as a
/// single peak. A unit adjacent to both kept peaks goes to the episodic one.
pub fn classify_counts(event_id: &str, counts: &Counts, threshold: f64) -> Option<TypicalDuration> {
    let mut peaks = detect_peaks(counts);
    if peaks.len() > 2 {
        peaks.sort_by(|a, b| b.count.cmp(&a.count).then(a.unit.cmp(&b.unit)));
        peaks.truncate(2);
        peaks.sort_by_key(|p| p.unit);
    }
    if peaks.is_empty() {
        let max = *counts.iter().max()?;
        if max == 0 {
            return None;
        }
        let unit = DurationUnit::ALL.into_iter().find(|u| counts[u.index()] == max)?;
        peaks.push(Peak { unit, count: max });
    }

    let typical = match peaks.as_slice() {
        [single] => TypicalDuration {
            event_id: event_id.to_string(),
            episodic: expand_peak(counts, *single, &[], threshold),
            habitual: None,
            episodic_peak: *single,
            habitual_peak: None,
        },
        [low, high] => {
            let episodic = expand_peak(counts, *low, &[*high], threshold);
            let habitual = expand_peak(counts, *high, &[*low], threshold)
                .into_iter()
                .filter(|u| !episodic.contains(u))
                .collect();
            TypicalDuration {
                event_id: event_id.to_string(),
                episodic,
                habitual: Some(habitual),
                episodic_peak: *low,
                habitual_peak: Some(*high),
            }
        }
        _ => unreachable!("at most two peaks remain"),
    };
    typical.check_invariants();
    Some(typical)
}

pub fn classify_typical(h: &DurationHistogram, threshold: f64) -> Option<TypicalDuration> {
    classify_counts(&h.event_id, &h.counts, threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use DurationUnit::*;

    const FIXTURE: Counts = [0, 10, 8, 1, 0, 2, 9, 3];

    fn vote(doc: &str, i: usize, unit: DurationUnit, plausible: bool) -> UnitVote {
        UnitVote { doc_id: doc.into(), sentence_index: i, unit, plausible }
    }

    fn sentence_votes(doc: &str, i: usize, yes: &[DurationUnit]) -> Vec<UnitVote> {
        DurationUnit::ALL.into_iter().map(|u| vote(doc, i, u, yes.contains(&u))).collect()
    }

    #[test]
    fn histogram_all_hours() {
        let votes: Vec<_> = (0..50).flat_map(|i| sentence_votes("d", i, &[Hours])).collect();
        let b = build_histogram("e", votes).unwrap();
        assert_eq!(b.histogram.counts, [0, 0, 50, 0, 0, 0, 0, 0]);
        assert_eq!(b.histogram.sentence_count, 50);
        assert_eq!(b.excluded_sentences, 0);
    }

    #[test]
    fn histogram_multi_label_count() {
        let mut votes = sentence_votes("d", 0, &[Minutes, Hours]);
        votes.extend(sentence_votes("d", 1, &[Hours]));
        votes.reverse();
        let b = build_histogram("e", votes).unwrap();
        assert_eq!(b.histogram.counts, [0, 1, 2, 0, 0, 0, 0, 0]);
        assert_eq!(b.histogram.sentence_count, 2);
    }

    #[test]
    fn histogram_of_nothing_is_an_error() {
        assert_eq!(build_histogram("e", vec![]), Err(VotingError::EmptyEvidence("e".into())));
    }

    #[test]
    fn incomplete_sentences_are_excluded() {
        let mut votes = sentence_votes("d", 0, &[Hours]);
        votes.extend(sentence_votes("d", 1, &[Days]).into_iter().skip(1));
        votes.extend(sentence_votes("d", 2, &[Years]));
        votes.push(vote("d", 2, Years, false));
        let b = build_histogram("e", votes).unwrap();
        assert_eq!(b.histogram.counts, [0, 0, 1, 0, 0, 0, 0, 0]);
        assert_eq!(b.excluded_sentences, 2);
    }

    #[test]
    fn histogram_validation() {
        assert!(DurationHistogram::new("e", [3, 0, 0, 0, 0, 0, 0, 0], 2).is_err());
        assert!(DurationHistogram::new("e", [0; 8], 0).is_err());
    }

    #[test]
    fn peaks_of_fixture() {
        assert_eq!(detect_peaks(&FIXTURE), vec![Peak { unit: Minutes, count: 10 }, Peak { unit: Years, count: 9 }]);
        assert_eq!(detect_peaks(&[0, 0, 50, 0, 0, 0, 0, 0]), vec![Peak { unit: Hours, count: 50 }]);
        assert!(detect_peaks(&[5; 8]).is_empty());
    }

    #[test]
    fn boundary_peaks() {
        assert_eq!(detect_peaks(&[3, 1, 0, 0, 0, 0, 1, 4]), vec![Peak { unit: Seconds, count: 3 }, Peak { unit: Decades, count: 4 }]);
    }

    #[test]
    fn neighbor_rule_on_fixture() {
        let peaks = detect_peaks(&FIXTURE);
        assert_eq!(expand_peak(&FIXTURE, peaks[0], &peaks[1..], 0.75), [Minutes, Hours]);
        assert_eq!(expand_peak(&FIXTURE, peaks[1], &peaks[..1], 0.75), [Years]);
    }

    #[test]
    fn neighbor_rule_is_inclusive_and_two_sided() {
        let counts = [0, 3, 4, 3, 0, 0, 0, 0];
        let p = Peak { unit: Hours, count: 4 };
        assert_eq!(expand_peak(&counts, p, &[], 0.75), [Minutes, Hours, Days]);
        assert_eq!(expand_peak(&counts, p, &[], 0.8), [Hours]);
    }

    #[test]
    fn classify_fixture() {
        let t = classify_counts("e", &FIXTURE, 0.75).unwrap();
        assert_eq!(t.episodic, [Minutes, Hours]);
        assert_eq!(t.habitual, Some(vec![Years]));
        assert_eq!(t.episodic_peak, Peak { unit: Minutes, count: 10 });
        assert_eq!(t.habitual_peak, Some(Peak { unit: Years, count: 9 }));
    }

    #[test]
    fn single_peak_is_episodic() {
        let t = classify_counts("have_lunch", &[2, 30, 9, 1, 0, 0, 0, 0], 0.75).unwrap();
        assert_eq!(t.episodic, [Minutes]);
        assert!(t.habitual.is_none());
    }

    #[test]
    fn two_peaks_split_episodic_and_habitual() {
        let t = classify_counts("play_golf", &[0, 2, 20, 5, 1, 3, 12, 4], 0.75).unwrap();
        assert_eq!(t.episodic, [Hours]);
        assert_eq!(t.habitual, Some(vec![Years]));
    }

    #[test]
    fn more_than_two_peaks_keeps_the_largest() {
        let t = classify_counts("e", &[5, 0, 9, 0, 5, 0, 7, 0], 0.75).unwrap();
        assert_eq!(t.episodic_peak.unit, Hours);
        assert_eq!(t.habitual_peak.unwrap().unit, Years);
        // tie between seconds and weeks for second place: lower unit wins
        let t = classify_counts("e", &[5, 0, 9, 0, 5, 0, 0, 0], 0.75).unwrap();
        assert_eq!((t.episodic_peak.unit, t.habitual_peak.unwrap().unit), (Seconds, Hours));
    }

    #[test]
    fn flat_and_plateau_use_argmax_fallback() {
        let t = classify_counts("e", &[5; 8], 0.75).unwrap();
        assert_eq!(t.episodic, [Seconds, Minutes]);
        let t = classify_counts("e", &[0, 5, 5, 0, 0, 0, 0, 0], 0.75).unwrap();
        assert_eq!(t.episodic, [Minutes, Hours]);
        assert!(classify_counts("e", &[0; 8], 0.75).is_none());
    }

    #[test]
    fn shared_neighbor_goes_to_episodic() {
        let t = classify_counts("e", &[0, 10, 9, 10, 0, 0, 0, 0], 0.75).unwrap();
        assert_eq!(t.episodic, [Minutes, Hours]);
        assert_eq!(t.habitual, Some(vec![Days]));
    }

    fn counts_strategy() -> impl Strategy<Value = Counts> {
        prop::array::uniform8(0u32..60)
    }

    proptest! {
        #[test]
        fn peaks_are_never_adjacent(counts in counts_strategy()) {
            let peaks = detect_peaks(&counts);
            for w in peaks.windows(2) {
                prop_assert!(w[0].unit.distance(w[1].unit) >= 2);
            }
        }

        #[test]
        fn scaling_counts_changes_nothing(counts in counts_strategy(), c in 1u32..50) {
            let scaled = counts.map(|x| x * c);
            let a = classify_counts("e", &counts, 0.75);
            let b = classify_counts("e", &scaled, 0.75);
            prop_assert_eq!(a.as_ref().map(|t| (&t.episodic, &t.habitual)), b.as_ref().map(|t| (&t.episodic, &t.habitual)));
        }
    }
}
