//! Corpus reading, sentence segmentation, event matching and evidence
//! sampling.

mod matcher;
mod sampling;
mod segment;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use matcher::{match_event, match_tokens, tokenize, EventIndex, EvidenceSentence, MatchSpan};
pub use sampling::{sample_sentences, EvidenceSampler, Reservoir, SampleOutcome};
pub use segment::{segment_sentences, Segmenter, SentenceRecord};

/// Files processed in parallel before their matches are fed, in order, to
/// the sampler.
const CHUNK_FILES: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusFile {
    pub doc_id: String,
    pub path: PathBuf,
}

/// `.txt` and `.sents` files under `dir`, recursively, sorted by doc id
/// (the path relative to `dir`).
pub fn list_corpus_files(dir: &Path) -> std::io::Result<Vec<CorpusFile>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
                continue;
            }
            let ext = path.extension().and_then(|e| e.to_str());
            if matches!(ext, Some("txt") | Some("sents")) {
                let rel = path.strip_prefix(dir).unwrap_or(&path);
                let doc_id = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
                out.push(CorpusFile { doc_id, path });
            }
        }
    }
    out.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    Ok(out)
}

/// Sentences of one file: `.txt` is segmented, `.sents` holds one sentence
/// per non-empty line.
pub fn read_sentences(file: &CorpusFile, segmenter: &Segmenter) -> std::io::Result<Vec<SentenceRecord>> {
    let text = fs::read_to_string(&file.path)?;
    if file.path.extension().and_then(|e| e.to_str()) == Some("sents") {
        Ok(text
            .lines()
            .map(|l| l.split_whitespace().collect::<Vec<_>>().join(" "))
            .filter(|l| !l.is_empty())
            .enumerate()
            .map(|(sentence_index, text)| SentenceRecord {
                doc_id: file.doc_id.clone(),
                sentence_index,
                text,
            })
            .collect())
    } else {
        Ok(segmenter.segment(&file.doc_id, &text))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedFile {
    pub doc_id: String,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct CorpusScan {
    pub outcome: SampleOutcome,
    pub files: usize,
    pub sentences: usize,
    pub skipped: Vec<SkippedFile>,
}

/// Segments and matches every file, feeding matches to the sampler in
/// (doc_id, sentence_index) order. Unreadable files are skipped and
/// reported. Results do not depend on the thread count.
pub fn scan_corpus(
    files: &[CorpusFile],
    index: &EventIndex<'_>,
    segmenter: &Segmenter,
    k: usize,
    seed: u64,
    min_sentences: usize,
) -> CorpusScan {
    let mut sampler = EvidenceSampler::new(k, seed);
    let mut scan = CorpusScan { files: files.len(), ..Default::default() };

    for chunk in files.chunks(CHUNK_FILES) {
        let results: Vec<_> = chunk
            .par_iter()
            .map(|f| {
                read_sentences(f, segmenter).map(|sentences| {
                    let n = sentences.len();
                    let matches: Vec<_> = sentences.iter().flat_map(|s| index.matches(s)).collect();
                    (n, matches)
                })
            })
            .collect();
        for (file, result) in chunk.iter().zip(results) {
            match result {
                Ok((n, matches)) => {
                    scan.sentences += n;
                    matches.into_iter().for_each(|m| sampler.offer(m));
                }
                Err(e) => scan.skipped.push(SkippedFile { doc_id: file.doc_id.clone(), reason: e.to_string() }),
            }
        }
    }
    scan.outcome = sampler.finish(min_sentences);
    scan
}
