use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{Cli, CliError, Command, EvalArgs, GlobalArgs, NoiseKind, SimulateArgs};
use crate::artifacts::{self, *};
use crate::config::{PipelineConfig, PredictorMode};
use crate::corpus::{list_corpus_files, scan_corpus, EventIndex, EvidenceSentence, Segmenter};
use crate::eval;
use crate::events::{filter_verb_phrases, group_events, parse_phrase_list, Event, Lemmatizer};
use crate::predictor::{self, build_queries, MockPredictor, PatternPredictor, Predictor, RemotePredictor};
use crate::pseudogen::{distribution_csv, distribution_report, emit_mctaco, generate_question};
use crate::resources::{self, read_or_default};
use crate::seeding::derive_seed;
use crate::sim::{self, NoiseModel, SimConfig, Truth};
use crate::voting::{build_histogram, classify_typical, UnitVote};

/// Runs one subcommand, printing its one-line summary on success.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Eval(args) => cmd_eval(&args),
        Command::Simulate(args) => cmd_simulate(&args, cli.global.seed.unwrap_or(0)),
        command => {
            let cfg = load_config(&cli.global, &command)?;
            fs::create_dir_all(&cfg.out_dir).map_err(|e| failure(&cfg.out_dir, e))?;
            echo_config(&cfg)?;
            match command {
                Command::Harvest { .. } => cmd_harvest(&cfg),
                Command::Sample { .. } => cmd_sample(&cfg),
                Command::Predict { .. } => cmd_predict(&cfg),
                Command::Vote => cmd_vote(&cfg),
                Command::Generate { limit } => cmd_generate(&cfg, limit),
                Command::Report => cmd_report(&cfg),
                Command::Eval(_) | Command::Simulate(_) => unreachable!(),
            }
        }
    }
}

fn load_config(global: &GlobalArgs, command: &Command) -> Result<PipelineConfig, CliError> {
    let quoted = |p: &Path| toml::Value::String(p.display().to_string()).to_string();
    let mut overrides = global.overrides.clone();
    if let Some(d) = &global.out_dir {
        overrides.push(format!("out_dir={}", quoted(d)));
    }
    if let Some(s) = global.seed {
        overrides.push(format!("seed={s}"));
    }
    match command {
        Command::Harvest { phrases: Some(p) } => overrides.push(format!("phrase_list={}", quoted(p))),
        Command::Sample { corpus: Some(c) } => overrides.push(format!("corpus_dir={}", quoted(c))),
        Command::Predict { mode, endpoint } => {
            if let Some(m) = mode {
                overrides.push(format!("predictor_mode=\"{}\"", m.as_str()));
            }
            if let Some(e) = endpoint {
                overrides.push(format!("predictor_endpoint={}", toml::Value::String(e.clone())));
            }
        }
        _ => {}
    }
    Ok(PipelineConfig::load(global.config.as_deref(), &overrides)?)
}

fn echo_config(cfg: &PipelineConfig) -> Result<(), CliError> {
    let text = cfg.to_toml();
    log::info!("effective config:\n{text}");
    let path = cfg.out_dir.join(CONFIG_ECHO_FILE);
    fs::write(&path, text).map_err(|e| failure(&path, e))
}

fn failure(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Failure(format!("{}: {e}", path.display()))
}

fn out(cfg: &PipelineConfig, name: &str) -> PathBuf {
    cfg.out_dir.join(name)
}

fn lemmatizer(cfg: &PipelineConfig) -> Result<Lemmatizer, CliError> {
    let verbs = read_or_default(cfg.verbs.as_deref(), resources::DEFAULT_VERBS).map_err(resource_error)?;
    let irregular =
        read_or_default(cfg.irregular_verbs.as_deref(), resources::DEFAULT_IRREGULAR_VERBS).map_err(resource_error)?;
    Lemmatizer::from_texts(&verbs, &irregular).map_err(resource_error)
}

fn segmenter(cfg: &PipelineConfig) -> Result<Segmenter, CliError> {
    let text = read_or_default(cfg.abbreviations.as_deref(), resources::DEFAULT_ABBREVIATIONS).map_err(resource_error)?;
    Ok(Segmenter::new(resources::parse_abbreviations(&text)))
}

fn resource_error(e: resources::ResourceError) -> CliError {
    match e {
        resources::ResourceError::Io { ref source, ref path } if source.kind() == std::io::ErrorKind::NotFound => {
            CliError::MissingInput { what: "resource", path: PathBuf::from(path) }
        }
        other => CliError::Failure(other.to_string()),
    }
}

fn read_lines(path: &Path, what: &'static str) -> Result<Vec<String>, CliError> {
    let file = fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::MissingInput { what, path: path.to_path_buf() },
        _ => failure(path, e),
    })?;
    BufReader::new(file).lines().collect::<Result<_, _>>().map_err(|e| failure(path, e))
}

fn cmd_harvest(cfg: &PipelineConfig) -> Result<(), CliError> {
    let lines = read_lines(&cfg.phrase_list, "phrase list")?;
    let (phrases, errors) = parse_phrase_list(&lines);
    for e in &errors {
        log::warn!("{}: {e}", cfg.phrase_list.display());
    }
    let lem = lemmatizer(cfg)?;
    let total = phrases.len();
    let verbs = filter_verb_phrases(phrases, &lem);
    let events = group_events(&verbs, &lem);
    if events.is_empty() {
        log::warn!("no events harvested from {}", cfg.phrase_list.display());
    }
    let path = out(cfg, EVENTS_FILE);
    write_jsonl(&path, &events)?;
    println!(
        "harvest: {} events from {total} phrases ({} non-verb, {} malformed lines) -> {}",
        events.len(),
        total - verbs.len(),
        errors.len(),
        path.display()
    );
    Ok(())
}

fn cmd_sample(cfg: &PipelineConfig) -> Result<(), CliError> {
    let events: Vec<Event> = read_jsonl(&out(cfg, EVENTS_FILE))?;
    if !cfg.corpus_dir.is_dir() {
        return Err(CliError::MissingInput { what: "corpus directory", path: cfg.corpus_dir.clone() });
    }
    let files = list_corpus_files(&cfg.corpus_dir).map_err(|e| failure(&cfg.corpus_dir, e))?;
    let lem = lemmatizer(cfg)?;
    let seg = segmenter(cfg)?;
    let index = EventIndex::new(&events, &lem, cfg.max_gap);
    let scan = scan_corpus(&files, &index, &seg, cfg.k_sentences, cfg.seed, cfg.min_sentences);
    for s in &scan.skipped {
        log::warn!("skipped corpus file {}: {}", s.doc_id, s.reason);
    }

    let under: Vec<UnderEvidencedRecord> = events
        .iter()
        .map(|e| UnderEvidencedRecord {
            event_id: e.id.clone(),
            matched: scan.outcome.matched.get(&e.id).copied().unwrap_or(0),
        })
        .filter(|r| (r.matched as usize) < cfg.min_sentences)
        .collect();
    let evidence: Vec<EvidenceSentence> = scan.outcome.eligible().flat_map(|(_, v)| v.iter().cloned()).collect();
    let eligible = scan.outcome.eligible().count();

    let path = out(cfg, EVIDENCE_FILE);
    write_jsonl(&path, &evidence)?;
    write_jsonl(&out(cfg, UNDER_EVIDENCED_FILE), &under)?;
    println!(
        "sample: {} sentences for {eligible} events from {} files ({} sentences scanned); {} under-evidenced; {} warnings -> {}",
        evidence.len(),
        scan.files,
        scan.sentences,
        under.len(),
        scan.skipped.len(),
        path.display()
    );
    Ok(())
}

fn build_predictor(cfg: &PipelineConfig) -> Result<Box<dyn Predictor>, CliError> {
    Ok(match cfg.predictor_mode {
        PredictorMode::Pattern => Box::new(PatternPredictor::default()),
        PredictorMode::Remote => Box::new(RemotePredictor::new(cfg.remote_config())?),
        PredictorMode::Mock => {
            let truths = cfg.mock_truths.iter().map(|(id, u)| (id.clone(), Truth::single(*u))).collect();
            let mock = MockPredictor::new(
                truths,
                cfg.mock_default_unit.map(Truth::single),
                cfg.mock_accuracy,
                NoiseModel::Uniform,
                cfg.seed,
            )
            .map_err(|e| CliError::Failure(e.to_string()))?;
            Box::new(mock)
        }
    })
}

fn cmd_predict(cfg: &PipelineConfig) -> Result<(), CliError> {
    let events: Vec<Event> = read_jsonl(&out(cfg, EVENTS_FILE))?;
    let evidence: Vec<EvidenceSentence> = read_jsonl(&out(cfg, EVIDENCE_FILE))?;
    let by_id: HashMap<&str, &Event> = events.iter().map(|e| (e.id.as_str(), e)).collect();

    let mut queries = Vec::with_capacity(evidence.len() * 8);
    for (i, ev) in evidence.iter().enumerate() {
        let event = by_id.get(ev.event_id.as_str()).ok_or_else(|| {
            CliError::Schema(format!(
                "{} line {}: event_id {:?} not in {EVENTS_FILE}",
                out(cfg, EVIDENCE_FILE).display(),
                i + 2,
                ev.event_id
            ))
        })?;
        queries.extend(build_queries(ev, event));
    }

    let predictor = build_predictor(cfg)?;
    let verdicts = predictor::predict(&queries, predictor.as_ref())?;
    let records: Vec<VerdictRecord> = queries
        .into_iter()
        .zip(verdicts)
        .map(|(q, v)| VerdictRecord {
            query_id: q.query_id,
            event_id: q.event_id,
            doc_id: q.doc_id,
            sentence_index: q.sentence_index,
            unit: q.unit,
            plausible: v.plausible,
            score: v.score,
        })
        .collect();
    let path = out(cfg, VERDICTS_FILE);
    write_jsonl(&path, &records)?;
    println!(
        "predict: {} verdicts ({} plausible) for {} sentences with the {} predictor -> {}",
        records.len(),
        records.iter().filter(|r| r.plausible).count(),
        evidence.len(),
        cfg.predictor_mode.as_str(),
        path.display()
    );
    Ok(())
}

fn cmd_vote(cfg: &PipelineConfig) -> Result<(), CliError> {
    let verdicts: Vec<VerdictRecord> = read_jsonl(&out(cfg, VERDICTS_FILE))?;
    let mut by_event: BTreeMap<String, Vec<UnitVote>> = BTreeMap::new();
    for v in verdicts {
        by_event.entry(v.event_id).or_default().push(UnitVote {
            doc_id: v.doc_id,
            sentence_index: v.sentence_index,
            unit: v.unit,
            plausible: v.plausible,
        });
    }

    let mut records = Vec::new();
    let (mut dropped, mut excluded) = (0, 0);
    for (event_id, votes) in by_event {
        let built = match build_histogram(&event_id, votes) {
            Ok(b) => b,
            Err(e) => {
                log::warn!("{e}");
                dropped += 1;
                continue;
            }
        };
        excluded += built.excluded_sentences;
        let h = built.histogram;
        match classify_typical(&h, cfg.neighbor_threshold) {
            Some(t) => records.push(TypicalRecord::new(t, h.counts, h.sentence_count)),
            None => {
                log::warn!("event {event_id}: no plausible votes, no typical duration");
                dropped += 1;
            }
        }
    }
    let path = out(cfg, TYPICAL_FILE);
    write_jsonl(&path, &records)?;
    println!(
        "vote: {} typical durations ({} bimodal), {dropped} events dropped, {excluded} sentences excluded -> {}",
        records.len(),
        records.iter().filter(|r| r.habitual.is_some()).count(),
        path.display()
    );
    Ok(())
}

fn cmd_generate(cfg: &PipelineConfig, limit: Option<usize>) -> Result<(), CliError> {
    let typical: Vec<TypicalRecord> = read_jsonl(&out(cfg, TYPICAL_FILE))?;
    let evidence: Vec<EvidenceSentence> = read_jsonl(&out(cfg, EVIDENCE_FILE))?;
    let events: Vec<Event> = read_jsonl(&out(cfg, EVENTS_FILE))?;
    let by_id: HashMap<&str, &Event> = events.iter().map(|e| (e.id.as_str(), e)).collect();
    let mut evidence_by_event: HashMap<&str, Vec<EvidenceSentence>> = HashMap::new();
    for e in &evidence {
        evidence_by_event.entry(e.event_id.as_str()).or_default().push(e.clone());
    }
    for v in evidence_by_event.values_mut() {
        v.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    }

    let mut selected: Vec<&TypicalRecord> = typical.iter().collect();
    let evidence_count = |t: &TypicalRecord| evidence_by_event.get(t.event_id.as_str()).map_or(0, Vec::len);
    selected.sort_by(|a, b| evidence_count(b).cmp(&evidence_count(a)).then_with(|| a.event_id.cmp(&b.event_id)));
    if let Some(n) = limit {
        selected.truncate(n);
    }
    for t in &selected {
        if !by_id.contains_key(t.event_id.as_str()) {
            return Err(CliError::Schema(format!("{}: event_id {:?} not in {EVENTS_FILE}", TYPICAL_FILE, t.event_id)));
        }
    }

    let gen = cfg.gen_config();
    let results: Vec<_> = selected
        .par_iter()
        .map(|t| {
            let event = by_id[t.event_id.as_str()];
            let ev = evidence_by_event.get(t.event_id.as_str()).map_or(&[][..], Vec::as_slice);
            let seed = derive_seed(cfg.seed, &t.event_id);
            (t.event_id.as_str(), generate_question(&t.event_id, &predictor::question_text(event), &t.episodic, ev, &gen, seed))
        })
        .collect();
    let mut questions = Vec::new();
    let mut skipped = 0;
    for (id, r) in results {
        match r {
            Ok(q) => questions.push(q),
            Err(e) => {
                log::warn!("event {id}: {e}");
                skipped += 1;
            }
        }
    }

    let path = out(cfg, PSEUDO_FILE);
    let file = fs::File::create(&path).map_err(|e| failure(&path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let lines = emit_mctaco(&questions, &mut w).map_err(|e| failure(&path, e))?;
    let dist_path = out(cfg, DISTRIBUTION_FILE);
    fs::write(&dist_path, distribution_csv(&distribution_report(&questions))).map_err(|e| failure(&dist_path, e))?;
    println!(
        "generate: {} questions ({lines} lines), {skipped} events skipped -> {}",
        questions.len(),
        path.display()
    );
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<(), CliError> {
    let gold_lines = read_lines(&args.gold, "gold file")?;
    let pred_lines = read_lines(&args.pred, "prediction file")?;
    let schema = |path: &Path, e: eval::EvalError| CliError::Schema(format!("{}: {e}", path.display()));
    let gold = eval::load_mctaco(&gold_lines, args.category.as_deref()).map_err(|e| schema(&args.gold, e))?;
    if gold.duplicates > 0 {
        log::warn!("{}: {} repeated lines ignored", args.gold.display(), gold.duplicates);
    }
    if let Some(split) = &args.split {
        if let Some(w) = eval::check_official_size(split, gold.groups.len()) {
            log::warn!("{w}");
            eprintln!("warning: {w}");
        }
    }
    let pred = eval::load_predictions(&pred_lines).map_err(|e| schema(&args.pred, e))?;
    let m = eval::evaluate(&gold.groups, &pred, args.micro).map_err(|e| schema(&args.pred, e))?;
    println!("EM={:.6}", m.em);
    println!("F1={:.6}", m.f1);
    println!("{}", serde_json::to_string(&m).expect("metrics serialize"));
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs, seed: u64) -> Result<(), CliError> {
    let truth = match args.habitual {
        None => Truth::single(args.unit),
        Some(h) => Truth::Bimodal { episodic: args.unit, habitual: h, share: args.share },
    };
    let noise = match args.noise {
        NoiseKind::Uniform => NoiseModel::Uniform,
        NoiseKind::AdjacentGeometric => NoiseModel::AdjacentGeometric { decay: args.decay },
    };
    let base = SimConfig {
        truth,
        accuracy: args.p[0],
        noise,
        k: args.k[0],
        trials: args.trials,
        seed,
        threshold: args.threshold,
        multi_label: args.multi_label,
    };
    let rows = sim::sweep(&args.p, &args.k, &base).map_err(|e| CliError::Failure(e.to_string()))?;
    let csv = sim::sweep_csv(&rows);
    match &args.out {
        Some(path) => fs::write(path, &csv).map_err(|e| failure(path, e))?,
        None => std::io::stdout().write_all(csv.as_bytes()).map_err(|e| CliError::Failure(e.to_string()))?,
    }
    let worst = rows.iter().map(|r| r.recovery_rate).fold(f64::INFINITY, f64::min);
    eprintln!("simulate: {} cells x {} trials, lowest recovery {worst:.6}", rows.len(), args.trials);
    Ok(())
}

fn cmd_report(cfg: &PipelineConfig) -> Result<(), CliError> {
    fn count<T: Artifact>(path: &Path) -> Result<Option<Vec<T>>, CliError> {
        match read_jsonl::<T>(path) {
            Ok(v) => Ok(Some(v)),
            Err(artifacts::ArtifactError::Missing { .. }) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }
    let show = |name: &str, n: Option<usize>| match n {
        Some(n) => println!("{name}: {n} records"),
        None => println!("{name}: absent"),
    };
    let events = count::<Event>(&out(cfg, EVENTS_FILE))?;
    show(EVENTS_FILE, events.as_ref().map(Vec::len));
    let evidence = count::<EvidenceSentence>(&out(cfg, EVIDENCE_FILE))?;
    show(EVIDENCE_FILE, evidence.as_ref().map(Vec::len));
    show(UNDER_EVIDENCED_FILE, count::<UnderEvidencedRecord>(&out(cfg, UNDER_EVIDENCED_FILE))?.map(|v| v.len()));
    show(VERDICTS_FILE, count::<VerdictRecord>(&out(cfg, VERDICTS_FILE))?.map(|v| v.len()));
    let typical = count::<TypicalRecord>(&out(cfg, TYPICAL_FILE))?;
    show(TYPICAL_FILE, typical.as_ref().map(Vec::len));
    if let Some(t) = &typical {
        let mut peaks = [0usize; 8];
        for r in t {
            peaks[r.peaks[0].unit.index()] += 1;
        }
        let parts: Vec<String> = crate::DurationUnit::ALL
            .into_iter()
            .map(|u| format!("{}={}", u.plural(), peaks[u.index()]))
            .collect();
        println!("episodic peaks: {}", parts.join(" "));
        println!("bimodal events: {}", t.iter().filter(|r| r.habitual.is_some()).count());
    }
    match fs::read_to_string(out(cfg, PSEUDO_FILE)) {
        Ok(text) => println!("{PSEUDO_FILE}: {} lines", text.lines().count()),
        Err(_) => println!("{PSEUDO_FILE}: absent"),
    }
    Ok(())
}
