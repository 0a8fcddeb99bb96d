use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::header::CONTENT_TYPE;
use serde::{Deserialize, Serialize};

use super::{PredictError, Predictor, UnitQuery, UnitVerdict};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    /// Base URL of the inference service, e.g. `http://127.0.0.1:8080`.
    pub endpoint: String,
    pub path: String,
    pub batch_size: usize,
    pub max_in_flight: usize,
    /// Retries after the first attempt.
    pub retries: u32,
    pub backoff_ms: u64,
    pub timeout_ms: u64,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            endpoint: "http://127.0.0.1:8080".into(),
            path: "/predict".into(),
            batch_size: 32,
            max_in_flight: 4,
            retries: 3,
            backoff_ms: 200,
            timeout_ms: 60_000,
        }
    }
}

impl RemoteConfig {
    pub fn url(&self) -> String {
        format!("{}/{}", self.endpoint.trim_end_matches('/'), self.path.trim_start_matches('/'))
    }
}

#[derive(Debug, Serialize)]
struct WireQuery<'a> {
    id: &'a str,
    sentence: &'a str,
    question: &'a str,
    answer: &'a str,
}

#[derive(Debug, Deserialize)]
struct WireVerdict {
    id: String,
    plausible: Option<bool>,
    score: Option<f64>,
}

/// Client for a plausibility service speaking line-delimited JSON over
/// `POST <endpoint>/predict`.
///
/// Queries go out in batches of `batch_size` with at most `max_in_flight`
/// requests outstanding. Transport failures and non-2xx statuses are retried
/// with exponential backoff; once a batch exhausts its retries the whole
/// call fails. Malformed responses fail immediately.
type BatchSlot = Option<Result<Vec<UnitVerdict>, PredictError>>;

#[derive(Debug, Clone)]
pub struct RemotePredictor {
    config: RemoteConfig,
    client: Client,
}

impl RemotePredictor {
    pub fn new(config: RemoteConfig) -> Result<Self, PredictError> {
        let client = Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| PredictError::Transport { attempts: 0, message: e.to_string() })?;
        Ok(Self { config, client })
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn request_body(batch: &[UnitQuery]) -> String {
        let mut body = String::new();
        for q in batch {
            let line = WireQuery {
                id: &q.query_id,
                sentence: &q.sentence_text,
                question: &q.question_text,
                answer: q.unit.plural(),
            };
            body.push_str(&serde_json::to_string(&line).expect("query serializes"));
            body.push('\n');
        }
        body
    }

    fn send_once(&self, url: &str, body: &str) -> Result<String, String> {
        let response = self
            .client
            .post(url)
            .header(CONTENT_TYPE, "application/x-ndjson")
            .body(body.to_string())
            .send()
            .map_err(|e| e.to_string())?;
        let status = response.status();
        if !status.is_success() {
            return Err(format!("HTTP {status}"));
        }
        response.text().map_err(|e| e.to_string())
    }

    fn send_batch(&self, batch: &[UnitQuery]) -> Result<Vec<UnitVerdict>, PredictError> {
        let url = self.config.url();
        let body = Self::request_body(batch);
        let attempts = self.config.retries + 1;
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                let delay = self.config.backoff_ms.saturating_mul(1 << (attempt - 1).min(16));
                thread::sleep(Duration::from_millis(delay));
            }
            match self.send_once(&url, &body) {
                Ok(text) => return parse_response(batch, &text),
                Err(e) => {
                    log::warn!("predict batch attempt {}/{attempts} failed: {e}", attempt + 1);
                    last = e;
                }
            }
        }
        Err(PredictError::Transport { attempts, message: last })
    }
}

/// Checks that the response holds exactly one well-formed verdict per
/// request id.
fn parse_response(batch: &[UnitQuery], text: &str) -> Result<Vec<UnitVerdict>, PredictError> {
    let mut pending: HashMap<&str, bool> = batch.iter().map(|q| (q.query_id.as_str(), false)).collect();
    let mut out = Vec::with_capacity(batch.len());
    for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let wire: WireVerdict = serde_json::from_str(line).map_err(|e| PredictError::Protocol {
            query_id: id_hint(line),
            message: format!("response line {}: {e}", n + 1),
        })?;
        let protocol = |message: &str| PredictError::Protocol { query_id: wire.id.clone(), message: message.into() };
        match pending.get_mut(wire.id.as_str()) {
            None => return Err(protocol("id not in request")),
            Some(true) => return Err(protocol("id answered twice")),
            Some(seen) => *seen = true,
        }
        if let Some(s) = wire.score {
            if !(0.0..=1.0).contains(&s) {
                return Err(protocol("score outside [0, 1]"));
            }
        }
        let plausible = match (wire.plausible, wire.score) {
            (Some(p), _) => p,
            (None, Some(s)) => s >= 0.5,
            (None, None) => return Err(protocol("neither plausible nor score given")),
        };
        out.push(UnitVerdict { query_id: wire.id, plausible, score: wire.score });
    }
    if let Some(q) = batch.iter().find(|q| !pending[q.query_id.as_str()]) {
        return Err(PredictError::Protocol { query_id: q.query_id.clone(), message: "missing from response".into() });
    }
    Ok(out)
}

fn id_hint(line: &str) -> String {
    serde_json::from_str::<serde_json::Value>(line)
        .ok()
        .and_then(|v| v.get("id").and_then(|i| i.as_str()).map(str::to_string))
        .unwrap_or_else(|| "<unparseable>".into())
}

impl Predictor for RemotePredictor {
    fn predict_batch(&self, queries: &[UnitQuery]) -> Result<Vec<UnitVerdict>, PredictError> {
        let batches: Vec<&[UnitQuery]> = queries.chunks(self.config.batch_size.max(1)).collect();
        let workers = self.config.max_in_flight.clamp(1, batches.len().max(1));
        let next = AtomicUsize::new(0);
        let abort = AtomicBool::new(false);
        let results: Mutex<Vec<BatchSlot>> = Mutex::new((0..batches.len()).map(|_| None).collect());

        thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    if abort.load(Ordering::Relaxed) {
                        break;
                    }
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(batch) = batches.get(i) else { break };
                    let r = self.send_batch(batch);
                    if r.is_err() {
                        abort.store(true, Ordering::Relaxed);
                    }
                    results.lock().expect("result slots")[i] = Some(r);
                });
            }
        });

        let mut verdicts = Vec::with_capacity(queries.len());
        for r in results.into_inner().expect("result slots") {
            match r {
                Some(Ok(v)) => verdicts.extend(v),
                Some(Err(e)) => return Err(e),
                None => {}
            }
        }
        Ok(verdicts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::tests::{evidence, play_music};
    use crate::predictor::build_queries;

    fn batch() -> Vec<UnitQuery> {
        let e = play_music();
        build_queries(&evidence(&e, "d", 0, "They played music for two hours."), &e)
    }

    #[test]
    fn request_lines_use_plural_unit_answers() {
        let body = RemotePredictor::request_body(&batch());
        let lines: Vec<serde_json::Value> = body.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines.len(), 8);
        assert_eq!(lines[2]["answer"], "hours");
        assert_eq!(lines[2]["id"], "play_music|d|0|hours");
        assert_eq!(lines[0]["question"], "How long does it take to play music?");
        assert_eq!(lines[0]["sentence"], "They played music for two hours.");
    }

    #[test]
    fn response_parsing_rules() {
        let b = batch();
        let ok: String = b
            .iter()
            .map(|q| format!("{{\"id\":{:?},\"score\":{}}}\n", q.query_id, if q.unit.index() == 2 { 0.9 } else { 0.1 }))
            .collect();
        let v = parse_response(&b, &ok).unwrap();
        assert_eq!(v.iter().filter(|v| v.plausible).count(), 1);

        let explicit = ok.replacen("\"score\":0.1", "\"plausible\":true,\"score\":0.1", 1);
        let v = parse_response(&b, &explicit).unwrap();
        assert!(v[0].plausible);

        let missing: String = ok.lines().skip(1).map(|l| format!("{l}\n")).collect();
        assert!(matches!(parse_response(&b, &missing), Err(PredictError::Protocol { query_id, .. }) if query_id == b[0].query_id));

        let garbage = format!("{ok}{{\"id\":\"play_music|d|0|hours\",\"plausible\":\"yes\"}}\n");
        assert!(matches!(parse_response(&b, &garbage), Err(PredictError::Protocol { query_id, .. }) if query_id == "play_music|d|0|hours"));

        let bad_score = ok.replacen("0.1", "1.5", 1);
        assert!(parse_response(&b, &bad_score).is_err());

        let neither = ok.replacen(",\"score\":0.1", "", 1);
        assert!(parse_response(&b, &neither).is_err());
    }

    #[test]
    fn url_joining() {
        let c = RemoteConfig { endpoint: "http://h:1/".into(), ..Default::default() };
        assert_eq!(c.url(), "http://h:1/predict");
    }
}
