//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Criterion 9 reads the official duration splits from
//! `MCTACO_DURATION_TEST` / `MCTACO_DURATION_TRAIN` when set.

use std::collections::HashSet;
use std::fs;
use std::panic;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use typical_duration::corpus::{EvidenceSentence, MatchSpan, Reservoir, SentenceRecord};
use typical_duration::eval::{self, DURATION_CATEGORY};
use typical_duration::pseudogen::{emit_mctaco, generate_question, GenConfig, Label, Magnitude, PseudoQuestion};
use typical_duration::sim::{self, NoiseModel, SimConfig, Truth};
use typical_duration::voting::{classify_counts, detect_peaks, Counts, DEFAULT_NEIGHBOR_THRESHOLD};
use typical_duration::DurationUnit;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------------------
// Independent voting rule: bitmask spans, integer threshold test (4n >= 3p),
// top-two selection by repeated first-maximum scans.

type Spans = Option<(u8, Option<u8>)>;

fn oracle_classify(c: &Counts) -> Spans {
    let peak = |i: usize| c[i] > 0 && (i == 0 || c[i] > c[i - 1]) && (i == 7 || c[i] > c[i + 1]);
    let mut peaks: Vec<usize> = (0..8).filter(|&i| peak(i)).collect();
    if peaks.len() > 2 {
        let first_max = |cands: &[usize]| {
            let mut best = cands[0];
            for &i in cands {
                if c[i] > c[best] {
                    best = i;
                }
            }
            best
        };
        let a = first_max(&peaks);
        let rest: Vec<usize> = peaks.iter().copied().filter(|&i| i != a).collect();
        let b = first_max(&rest);
        peaks = vec![a.min(b), a.max(b)];
    }
    if peaks.is_empty() {
        let max = *c.iter().max().unwrap();
        if max == 0 {
            return None;
        }
        peaks.push(c.iter().position(|&x| x == max).unwrap());
    }
    let span = |p: usize, other: Option<usize>| -> u8 {
        let mut m = 1u8 << p;
        for n in [p.wrapping_sub(1), p + 1] {
            if n < 8 && Some(n) != other && 4 * c[n] >= 3 * c[p] {
                m |= 1 << n;
            }
        }
        m
    };
    match peaks[..] {
        [p] => Some((span(p, None), None)),
        [lo, hi] => {
            let e = span(lo, Some(hi));
            Some((e, Some(span(hi, Some(lo)) & !e)))
        }
        _ => unreachable!(),
    }
}

fn mask(units: &[DurationUnit]) -> u8 {
    units.iter().fold(0, |m, u| m | 1 << u.index())
}

fn implementation_spans(c: &Counts) -> Spans {
    classify_counts("x", c, DEFAULT_NEIGHBOR_THRESHOLD).map(|t| (mask(&t.episodic), t.habitual.as_deref().map(mask)))
}

fn all_histograms_0_to_5() -> impl ParallelIterator<Item = Counts> {
    (0..6u32.pow(8)).into_par_iter().map(|mut n| {
        let mut c = [0u32; 8];
        for slot in &mut c {
            *slot = n % 6;
            n /= 6;
        }
        c
    })
}

fn c1_oracle_equivalence() -> Check {
    let start = Instant::now();
    let mismatches: Vec<Counts> = all_histograms_0_to_5()
        .filter(|c| implementation_spans(c) != oracle_classify(c))
        .collect();
    let elapsed = start.elapsed();
    ensure(mismatches.is_empty(), || format!("{} mismatches, first {:?}", mismatches.len(), mismatches[0]))?;
    ensure(elapsed < Duration::from_secs(300), || format!("took {elapsed:?}"))?;
    Ok(format!("1679616/1679616 histograms agree in {:.1}s", elapsed.as_secs_f64()))
}

fn c2_scale_invariance() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0;
    for _ in 0..10_000 {
        let c: Counts = std::array::from_fn(|_| rng.random_range(0..=50));
        let base = implementation_spans(&c);
        for k in [2, 3, 10] {
            let scaled = c.map(|x| x * k);
            ensure(implementation_spans(&scaled) == base, || format!("{c:?} scaled by {k} changes the result"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} scaled histograms unchanged"))
}

fn c3_peak_non_adjacency() -> Check {
    let violations = all_histograms_0_to_5()
        .filter(|c| {
            let peaks = detect_peaks(c);
            peaks.iter().enumerate().any(|(i, a)| peaks[i + 1..].iter().any(|b| a.unit.distance(b.unit) < 2))
        })
        .count();
    ensure(violations == 0, || format!("{violations} histograms with adjacent peaks"))?;
    Ok("0 adjacent peak pairs over 1679616 histograms".into())
}

fn c4_hand_traced_fixture() -> Check {
    use DurationUnit::*;
    let t = classify_counts("fixture", &[0, 10, 8, 1, 0, 2, 9, 3], 0.75).ok_or("no typical duration")?;
    ensure(t.episodic == vec![Minutes, Hours], || format!("episodic {:?}", t.episodic))?;
    ensure(t.habitual == Some(vec![Years]), || format!("habitual {:?}", t.habitual))?;
    Ok("episodic {minutes, hours}, habitual {years}".into())
}

// ---------------------------------------------------------------------------

fn contiguous_spans() -> Vec<Vec<DurationUnit>> {
    (1..=3)
        .flat_map(|len| (0..=8 - len).map(move |s| (s..s + len).map(|i| DurationUnit::ALL[i]).collect()))
        .collect()
}

fn evidence(n: usize) -> Vec<EvidenceSentence> {
    (0..n)
        .map(|i| EvidenceSentence {
            event_id: "e".into(),
            sentence: SentenceRecord { doc_id: "doc".into(), sentence_index: i, text: format!("sentence {i}") },
            span: MatchSpan { start: 0, end: 1 },
        })
        .collect()
}

fn pseudo_questions(n: usize, seed: u64) -> Vec<PseudoQuestion> {
    let spans = contiguous_spans();
    let ev = evidence(5);
    let config = GenConfig::default();
    (0..n)
        .map(|i| {
            let span = &spans[i % spans.len()];
            let event = format!("event_{i:05}");
            let question = format!("How long does it take to do thing {i}?");
            generate_question(&event, &question, span, &ev, &config, seed ^ i as u64).expect("generation")
        })
        .collect()
}

fn tsv(questions: &[PseudoQuestion]) -> Vec<u8> {
    let mut out = Vec::new();
    emit_mctaco(questions, &mut out).unwrap();
    out
}

fn c5_pseudo_constraints() -> Check {
    let config = GenConfig::default();
    let spans = contiguous_spans();
    let questions = pseudo_questions(10_000, 5);
    for (i, q) in questions.iter().enumerate() {
        let episodic = &spans[i % spans.len()];
        let yes = q.answers.iter().filter(|a| a.label == Label::Plausible).count();
        ensure(yes == 3 && q.answers.len() == 7, || format!("{}: {yes} yes of {}", q.event_id, q.answers.len()))?;
        let texts: HashSet<&str> = q.answers.iter().map(|a| a.text.as_str()).collect();
        ensure(texts.len() == 7, || format!("{}: duplicate answer texts", q.event_id))?;
        for a in &q.answers {
            match a.label {
                Label::Plausible => ensure(episodic.contains(&a.unit), || format!("{}: positive {}", q.event_id, a.text))?,
                Label::NotPlausible => ensure(episodic.iter().all(|e| e.distance(a.unit) >= 2), || {
                    format!("{}: negative {} within distance 2 of {episodic:?}", q.event_id, a.text)
                })?,
            }
            if let Magnitude::Number(n) = a.magnitude {
                let (lo, hi) = config.unit_ranges[a.unit.index()];
                ensure(lo <= n && n <= hi, || format!("{}: {} outside [{lo}, {hi}]", q.event_id, a.text))?;
                if a.unit == DurationUnit::Hours {
                    ensure((1..=23).contains(&n), || format!("hours answer {}", a.text))?;
                }
            }
        }
    }
    let again = tsv(&pseudo_questions(10_000, 5));
    ensure(tsv(&questions) == again, || "same seed produced different TSV bytes".into())?;
    ensure(tsv(&pseudo_questions(10_000, 6)) != again, || "different seeds produced identical TSV".into())?;
    Ok(format!("10000 questions valid, {} TSV bytes reproduced", again.len()))
}

fn c6_metric_fixtures() -> Check {
    let gold = [
        "c1\tq1\ta1\tyes",
        "c1\tq1\ta2\tno",
        "c2\tq2\ta1\tyes",
        "c2\tq2\ta2\tyes",
        "c2\tq2\ta3\tno",
    ];
    let pred = [
        "c1\tq1\ta1\tyes",
        "c1\tq1\ta2\tno",
        "c2\tq2\ta1\tyes",
        "c2\tq2\ta2\tno",
        "c2\tq2\ta3\tyes",
    ];
    let groups = eval::load_mctaco(gold, None).map_err(|e| e.to_string())?.groups;
    let p = eval::load_predictions(pred).map_err(|e| e.to_string())?;
    let em = eval::exact_match(&groups, &p).map_err(|e| e.to_string())?;
    let f1 = eval::f1(&groups, &p).map_err(|e| e.to_string())?;
    ensure(em == 0.5 && f1 == 0.75, || format!("fixture EM={em} F1={f1}"))?;

    let bytes = tsv(&pseudo_questions(400, 1));
    let text = String::from_utf8(bytes).map_err(|e| e.to_string())?;
    let lines: Vec<&str> = text.lines().collect();
    let gold = eval::load_mctaco(&lines, Some(DURATION_CATEGORY)).map_err(|e| e.to_string())?.groups;
    let pred = eval::load_predictions(&lines).map_err(|e| e.to_string())?;
    let (em_rt, f1_rt) = (
        eval::exact_match(&gold, &pred).map_err(|e| e.to_string())?,
        eval::f1(&gold, &pred).map_err(|e| e.to_string())?,
    );
    ensure(em_rt == 1.0 && f1_rt == 1.0, || format!("round trip EM={em_rt} F1={f1_rt}"))?;
    Ok(format!("fixture EM=0.5 F1=0.75; round trip over {} groups EM=1 F1=1", gold.len()))
}

// ---------------------------------------------------------------------------

fn c7_simulation() -> Check {
    let start = Instant::now();
    let base = SimConfig { truth: Truth::single(DurationUnit::Hours), trials: 10_000, seed: 7, ..SimConfig::default() };
    let mut notes = Vec::new();
    let mut failures = Vec::new();

    for noise in [NoiseModel::Uniform, NoiseModel::AdjacentGeometric { decay: 0.5 }] {
        for k in [1, 3, 5, 10, 20, 50] {
            let r = sim::run(&SimConfig { accuracy: 1.0, k, noise, ..base.clone() }).map_err(|e| e.to_string())?;
            if r.recovery_rate != 1.0 {
                failures.push(format!("p=1 k={k} {noise:?}: {}", r.recovery_rate));
            }
        }
    }
    notes.push("p=1 -> 1.0".to_string());

    let main = sim::run(&SimConfig { accuracy: 0.6, k: 50, ..base.clone() }).map_err(|e| e.to_string())?;
    notes.push(format!("p=0.6 k=50 recovery={:.4} (acquired in either span {:.4})", main.recovery_rate, main.acquired_rate));
    if main.recovery_rate < 0.99 {
        failures.push(format!("p=0.6 k=50 recovery {:.4} < 0.99", main.recovery_rate));
    }

    let rows = sim::sweep(&[0.6], &[5, 10, 20, 50], &base).map_err(|e| e.to_string())?;
    let rates: Vec<f64> = rows.iter().map(|r| r.recovery_rate).collect();
    notes.push(format!("k=5,10,20,50 -> {rates:.4?}"));
    for w in rates.windows(2) {
        if w[1] < w[0] - 0.02 {
            failures.push(format!("recovery drops from {:.4} to {:.4}", w[0], w[1]));
        }
    }

    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(60) {
        failures.push(format!("took {elapsed:?}"));
    }
    let summary = format!("{} [{:.1}s]", notes.join("; "), elapsed.as_secs_f64());
    if failures.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{}; {summary}", failures.join("; ")))
    }
}

// ---------------------------------------------------------------------------

fn copy_dir(from: &Path, to: &Path) -> std::io::Result<()> {
    fs::create_dir_all(to)?;
    for entry in fs::read_dir(from)? {
        let entry = entry?;
        let target = to.join(entry.file_name());
        if entry.path().is_dir() {
            copy_dir(&entry.path(), &target)?;
        } else {
            fs::copy(entry.path(), &target)?;
        }
    }
    Ok(())
}

fn c8_end_to_end() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    copy_dir(&Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/mini"), dir.path()).map_err(|e| e.to_string())?;
    for stage in ["harvest", "sample", "predict", "vote", "generate"] {
        let out = Command::new(env!("CARGO_BIN_EXE_typical-duration"))
            .current_dir(dir.path())
            .args(["--config", "config.toml", "--out-dir", "out", "--set", "predictor_mode=pattern", stage])
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), || format!("{stage}: {}", String::from_utf8_lossy(&out.stderr)))?;
    }
    let typical = fs::read_to_string(dir.path().join("out/typical.jsonl")).map_err(|e| e.to_string())?;
    let record: serde_json::Value = typical
        .lines()
        .skip(1)
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
        .find(|r| r["event_id"] == "play_music")
        .ok_or("play_music missing from typical.jsonl")?;
    let episodic: Vec<&str> = record["episodic"].as_array().unwrap().iter().filter_map(|u| u.as_str()).collect();
    ensure(episodic.contains(&"hours"), || format!("play_music episodic {episodic:?}"))?;

    let pseudo = fs::read_to_string(dir.path().join("out/pseudo.tsv")).map_err(|e| e.to_string())?;
    let groups = eval::load_mctaco(pseudo.lines(), Some(DURATION_CATEGORY)).map_err(|e| e.to_string())?.groups;
    ensure(!groups.is_empty() && groups.iter().all(|g| g.instances.len() == 7), || "malformed pseudo.tsv".into())?;
    Ok(format!("play_music episodic {episodic:?}; pseudo.tsv has {} questions", groups.len()))
}

fn c9_mctaco_loader() -> Check {
    // Size check on synthetic splits: exact size is silent, anything else warns.
    let lines = |n: usize| -> Vec<String> {
        (0..n).map(|i| format!("ctx {i}\tq {i}?\t1 hour\tyes\t{DURATION_CATEGORY}")).collect()
    };
    let g = eval::load_mctaco(lines(314), Some(DURATION_CATEGORY)).map_err(|e| e.to_string())?;
    ensure(eval::check_official_size("test", g.groups.len()).is_none(), || "314 groups warned".into())?;
    let g = eval::load_mctaco(lines(126), Some(DURATION_CATEGORY)).map_err(|e| e.to_string())?;
    ensure(eval::check_official_size("train", g.groups.len()).is_none(), || "126 groups warned".into())?;
    ensure(eval::check_official_size("test", 313).is_some(), || "size mismatch not reported".into())?;

    let mut notes = vec!["synthetic 314/126 splits load silently, mismatch warns".to_string()];
    for (var, split) in [("MCTACO_DURATION_TEST", "test"), ("MCTACO_DURATION_TRAIN", "train")] {
        let Ok(path) = std::env::var(var) else {
            notes.push(format!("{var} unset, official {split} split not checked"));
            continue;
        };
        let text = fs::read_to_string(&path).map_err(|e| format!("{path}: {e}"))?;
        let g = eval::load_mctaco(text.lines(), Some(DURATION_CATEGORY)).map_err(|e| format!("{path}: {e}"))?;
        match eval::check_official_size(split, g.groups.len()) {
            None => notes.push(format!("official {split}: {} groups", g.groups.len())),
            Some(w) => notes.push(format!("WARNING {w}")),
        }
    }
    Ok(notes.join("; "))
}

fn c10_reservoir_uniformity() -> Check {
    let (n, k, seeds) = (200usize, 50usize, 10_000u64);
    let mut freq = vec![0u64; n];
    for seed in 0..seeds {
        let mut r = Reservoir::new(k, seed);
        (0..n).for_each(|i| r.offer(i));
        let items = r.into_items();
        ensure(items.len() == k, || format!("seed {seed}: {} items", items.len()))?;
        items.into_iter().for_each(|i| freq[i] += 1);
    }
    let expected = (seeds as usize * k) as f64 / n as f64;
    let stat: f64 = freq.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
    let dist = ChiSquared::new((n - 1) as f64).map_err(|e| e.to_string())?;
    let critical = dist.inverse_cdf(0.99);
    let p_value = 1.0 - dist.cdf(stat);
    ensure(stat <= critical, || format!("chi2={stat:.2} > {critical:.2} (p={p_value:.4})"))?;
    Ok(format!("chi2={stat:.2} <= {critical:.2} at df=199, p={p_value:.3}"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("voting oracle equivalence", c1_oracle_equivalence),
        ("scale invariance", c2_scale_invariance),
        ("peak non-adjacency", c3_peak_non_adjacency),
        ("hand-traced fixture", c4_hand_traced_fixture),
        ("pseudo-data constraints", c5_pseudo_constraints),
        ("metric fixtures", c6_metric_fixtures),
        ("simulation recovery", c7_simulation),
        ("end-to-end smoke", c8_end_to_end),
        ("MC-TACO loader", c9_mctaco_loader),
        ("reservoir uniformity", c10_reservoir_uniformity),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str()) || *f == id.to_string()) {
            continue;
        }
        let result = panic::catch_unwind(check).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match result {
            Ok(detail) => println!("PASS criterion {id:>2} {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {id:>2} {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("acceptance: {failed} criterion(s) failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
