//! Completion-endpoint judge.
//!
//! Wire format (OpenAI-style text completions):
//!
//! ```text
//! POST {base_url}/completions
//! {"model": "...", "prompt": ["...", "..."], "max_tokens": 16, "temperature": 0.0}
//!
//! 200 OK
//! {"choices": [{"index": 0, "text": "Passage A"}, {"index": 1, "text": "Passage B"}]}
//! ```
//!
//! One batch is one request carrying every prompt. Backends that only accept a
//! single prompt (`multi_prompt = false`) get one concurrent request per prompt;
//! the batch still counts as a single logical inference call.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::model::{Candidate, DocId, Preference};

use super::{ComparisonRequest, OracleError};

pub const DEFAULT_TEMPLATE: &str = "Given a query \"{query}\", which of the following two passages is more relevant to the query?\n\nPassage A: \"{passage_a}\"\n\nPassage B: \"{passage_b}\"\n\nOutput Passage A or Passage B:";

pub const LABEL_FIRST: &str = "Passage A";
pub const LABEL_SECOND: &str = "Passage B";

fn default_api_key_env() -> String {
    "PRP_SORT_API_KEY".to_string()
}

fn default_timeout_secs() -> u64 {
    60
}

fn default_template() -> String {
    DEFAULT_TEMPLATE.to_string()
}

fn default_max_tokens() -> u32 {
    16
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmEndpoint {
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the API key, if any.
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default = "default_template")]
    pub template: String,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    /// 0 or 1.
    #[serde(default)]
    pub retries: u8,
    #[serde(default = "default_true")]
    pub multi_prompt: bool,
}

impl LlmEndpoint {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model: model.into(),
            api_key_env: default_api_key_env(),
            timeout_secs: default_timeout_secs(),
            template: default_template(),
            max_tokens: default_max_tokens(),
            retries: 0,
            multi_prompt: true,
        }
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        if self.retries > 1 {
            return Err(OracleError::InvalidConfig("at most one retry is supported".into()));
        }
        if self.base_url.is_empty() {
            return Err(OracleError::InvalidConfig("empty LLM base_url".into()));
        }
        Ok(())
    }
}

/// Fills `{query}`, `{passage_a}` and `{passage_b}` in one left-to-right pass,
/// so placeholder-like text inside passages is left alone.
pub fn render_template(template: &str, query: &str, passage_a: &str, passage_b: &str) -> String {
    let mut out = String::with_capacity(template.len() + query.len() + passage_a.len() + passage_b.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open..];
        let (value, len) = if tail.starts_with("{query}") {
            (query, "{query}".len())
        } else if tail.starts_with("{passage_a}") {
            (passage_a, "{passage_a}".len())
        } else if tail.starts_with("{passage_b}") {
            (passage_b, "{passage_b}".len())
        } else {
            ("{", 1)
        };
        out.push_str(value);
        rest = &tail[len..];
    }
    out.push_str(rest);
    out
}

pub fn build_prp_prompt(
    template: &str,
    query: &str,
    a: &Candidate,
    b: &Candidate,
) -> Result<String, OracleError> {
    let text_a = a.text.as_deref().ok_or_else(|| OracleError::MissingText(a.doc.clone()))?;
    let text_b = b.text.as_deref().ok_or_else(|| OracleError::MissingText(b.doc.clone()))?;
    Ok(render_template(template, query, text_a, text_b))
}

/// Maps a completion to a preference. Returns `(First, true)` when neither
/// label appears; otherwise whichever label occurs first wins.
pub fn parse_label(completion: &str) -> (Preference, bool) {
    let lower = completion.to_ascii_lowercase();
    let a = lower.find(&LABEL_FIRST.to_ascii_lowercase());
    let b = lower.find(&LABEL_SECOND.to_ascii_lowercase());
    match (a, b) {
        (Some(x), Some(y)) if y < x => (Preference::Second, false),
        (Some(_), _) => (Preference::First, false),
        (None, Some(_)) => (Preference::Second, false),
        (None, None) => (Preference::First, true),
    }
}

#[derive(Serialize)]
struct CompletionRequest<'a, P: Serialize> {
    model: &'a str,
    prompt: P,
    max_tokens: u32,
    temperature: f64,
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    #[serde(default)]
    index: Option<usize>,
    text: String,
}

/// HTTP client for one endpoint. Safe to share across concurrent runs.
#[derive(Debug)]
pub struct LlmClient {
    endpoint: LlmEndpoint,
    http: reqwest::blocking::Client,
    api_key: Option<String>,
    fallbacks: AtomicU64,
    calls: AtomicU64,
}

impl LlmClient {
    pub fn new(endpoint: LlmEndpoint) -> Result<Self, OracleError> {
        endpoint.validate()?;
        let api_key = std::env::var(&endpoint.api_key_env).ok().filter(|k| !k.is_empty());
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(endpoint.timeout_secs))
            .build()
            .map_err(|e| OracleError::BackendFailure(e.to_string()))?;
        Ok(Self {
            endpoint,
            http,
            api_key,
            fallbacks: AtomicU64::new(0),
            calls: AtomicU64::new(0),
        })
    }

    pub fn endpoint(&self) -> &LlmEndpoint {
        &self.endpoint
    }

    /// Completions that matched neither label.
    pub fn parse_fallbacks(&self) -> u64 {
        self.fallbacks.load(Ordering::Relaxed)
    }

    /// Logical inference calls issued so far.
    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    fn url(&self) -> String {
        format!("{}/completions", self.endpoint.base_url.trim_end_matches('/'))
    }

    fn post<P: Serialize>(&self, prompt: P) -> Result<Vec<String>, OracleError> {
        let body = CompletionRequest {
            model: &self.endpoint.model,
            prompt,
            max_tokens: self.endpoint.max_tokens,
            temperature: 0.0,
        };
        let mut attempt = 0;
        loop {
            match self.post_once(&body) {
                Ok(texts) => return Ok(texts),
                Err(e) if attempt < self.endpoint.retries => {
                    log::warn!("LLM request failed ({e}); retrying");
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn post_once<P: Serialize>(&self, body: &CompletionRequest<'_, P>) -> Result<Vec<String>, OracleError> {
        let mut req = self.http.post(self.url()).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .map_err(|e| OracleError::BackendFailure(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(OracleError::BackendFailure(format!("HTTP {status}")));
        }
        let parsed: CompletionResponse = resp
            .json()
            .map_err(|e| OracleError::BackendFailure(format!("bad response body: {e}")))?;
        let mut choices: Vec<(usize, String)> = parsed
            .choices
            .into_iter()
            .enumerate()
            .map(|(pos, c)| (c.index.unwrap_or(pos), c.text))
            .collect();
        choices.sort_by_key(|(i, _)| *i);
        Ok(choices.into_iter().map(|(_, t)| t).collect())
    }

    /// One logical inference over all `prompts`.
    pub fn compare_batch(&self, prompts: &[String]) -> Result<Vec<Preference>, OracleError> {
        if prompts.is_empty() {
            return Ok(Vec::new());
        }
        let texts = if self.endpoint.multi_prompt {
            self.post(prompts)?
        } else {
            std::thread::scope(|s| {
                let handles: Vec<_> = prompts
                    .iter()
                    .map(|p| s.spawn(move || self.post(p.as_str())))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| {
                        let mut texts = h.join().map_err(|_| OracleError::BackendFailure("worker panicked".into()))??;
                        if texts.is_empty() {
                            return Err(OracleError::BackendFailure("empty choices".into()));
                        }
                        Ok(texts.swap_remove(0))
                    })
                    .collect::<Result<Vec<_>, _>>()
            })?
        };
        if texts.len() != prompts.len() {
            return Err(OracleError::BackendFailure(format!(
                "expected {} completions, got {}",
                prompts.len(),
                texts.len()
            )));
        }
        self.calls.fetch_add(1, Ordering::Relaxed);
        Ok(texts
            .iter()
            .map(|t| {
                let (pref, fallback) = parse_label(t);
                if fallback {
                    self.fallbacks.fetch_add(1, Ordering::Relaxed);
                    log::warn!("unparseable completion {t:?}; defaulting to first passage");
                }
                pref
            })
            .collect())
    }
}

pub fn llm_compare_batch(client: &LlmClient, prompts: &[String]) -> Result<Vec<Preference>, OracleError> {
    client.compare_batch(prompts)
}

/// Binds a shared client to one query's text and passages.
#[derive(Debug)]
pub struct LlmOracle {
    client: Arc<LlmClient>,
    query: String,
    candidates: HashMap<DocId, Candidate>,
}

impl LlmOracle {
    pub fn new(client: Arc<LlmClient>, query: impl Into<String>, candidates: &[Candidate]) -> Result<Self, OracleError> {
        if let Some(c) = candidates.iter().find(|c| c.text.is_none()) {
            return Err(OracleError::MissingText(c.doc.clone()));
        }
        Ok(Self {
            client,
            query: query.into(),
            candidates: candidates.iter().map(|c| (c.doc.clone(), c.clone())).collect(),
        })
    }

    fn candidate(&self, id: &DocId) -> Result<&Candidate, OracleError> {
        self.candidates
            .get(id)
            .ok_or_else(|| OracleError::UnknownDoc(id.clone()))
    }

    pub(crate) fn infer_batch(&mut self, reqs: &[ComparisonRequest]) -> Result<Vec<Preference>, OracleError> {
        let template = &self.client.endpoint().template;
        let prompts = reqs
            .iter()
            .map(|r| {
                build_prp_prompt(template, &self.query, self.candidate(&r.first)?, self.candidate(&r.second)?)
            })
            .collect::<Result<Vec<_>, _>>()?;
        self.client.compare_batch(&prompts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(id: &str, text: &str) -> Candidate {
        Candidate::new(DocId::new(id).unwrap()).with_text(text)
    }

    #[test]
    fn template_substitution() {
        let p = build_prp_prompt("Q:{query} A:{passage_a} B:{passage_b}", "q", &cand("1", "x"), &cand("2", "y")).unwrap();
        assert_eq!(p, "Q:q A:x B:y");
        let again = build_prp_prompt("Q:{query} A:{passage_a} B:{passage_b}", "q", &cand("1", "x"), &cand("2", "y")).unwrap();
        assert_eq!(p.as_bytes(), again.as_bytes());
    }

    #[test]
    fn swapped_candidates_swap_passages_only() {
        let a = cand("1", "alpha text");
        let b = cand("2", "beta");
        let ab = build_prp_prompt(DEFAULT_TEMPLATE, "query", &a, &b).unwrap();
        let ba = build_prp_prompt(DEFAULT_TEMPLATE, "query", &b, &a).unwrap();
        assert_ne!(ab, ba);
        assert_eq!(ab.replace("alpha text", "#").replace("beta", "alpha text").replace('#', "beta"), ba);
    }

    #[test]
    fn placeholders_inside_passages_are_not_expanded() {
        let p = render_template("{passage_a}|{passage_b}|{other}", "Q", "{query}", "{passage_a}");
        assert_eq!(p, "{query}|{passage_a}|{other}");
    }

    #[test]
    fn missing_text_rejected() {
        let no_text = Candidate::new(DocId::new("3").unwrap());
        assert!(matches!(
            build_prp_prompt(DEFAULT_TEMPLATE, "q", &cand("1", "x"), &no_text),
            Err(OracleError::MissingText(d)) if d.as_str() == "3"
        ));
    }

    #[test]
    fn label_parsing() {
        assert_eq!(parse_label("Passage A"), (Preference::First, false));
        assert_eq!(parse_label("Passage B is more relevant"), (Preference::Second, false));
        assert_eq!(parse_label("  passage b"), (Preference::Second, false));
        assert_eq!(parse_label("Passage B, not Passage A"), (Preference::Second, false));
        assert_eq!(parse_label("neither"), (Preference::First, true));
    }

    #[test]
    fn retries_limited_to_one() {
        let mut e = LlmEndpoint::new("http://localhost:1", "m");
        e.retries = 2;
        assert!(e.validate().is_err());
    }
}
