//! Blocking client for OpenAI-compatible chat-completions endpoints with image input.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use base64::Engine as _;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Sampler, SamplerError};

pub const DEFAULT_PROMPT: &str = "Here is an image of a chart. \n\
Please extract the numerical data it represents and return it in TSV (tab-separated values) format with appropriate headers. \n\
Copy the headers exactly as they are in the image. \n\
IMPORTANT: For the TSV, use tab (\\t) as the separator.\n\
Remember: The sole output should be the TSV table surrounded by ```tsv ```. Nothing else.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub endpoint_url: String,
    pub model_id: String,
    pub temperature: f64,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: String,
    pub request_timeout_secs: f64,
    pub max_retries: u32,
    pub prompt_text: String,
    /// First retry delay; doubles per attempt with jitter.
    pub backoff_base_secs: f64,
    /// Minimum spacing between request starts across all threads sharing a limiter; 0 disables.
    pub min_request_interval_secs: f64,
    pub max_tokens: Option<u32>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            endpoint_url: "https://api.openai.com/v1/chat/completions".to_string(),
            model_id: String::new(),
            temperature: 0.0,
            api_key_env: "OPENAI_API_KEY".to_string(),
            request_timeout_secs: 120.0,
            max_retries: 3,
            prompt_text: DEFAULT_PROMPT.to_string(),
            backoff_base_secs: 1.0,
            min_request_interval_secs: 0.0,
            max_tokens: None,
        }
    }
}

impl SamplerConfig {
    // Negated comparisons also reject NaN.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), String> {
        if !(self.temperature >= 0.0) {
            return Err(format!("temperature must be >= 0, got {}", self.temperature));
        }
        if !(self.request_timeout_secs > 0.0) {
            return Err("request_timeout_secs must be positive".to_string());
        }
        Ok(())
    }
}

/// Request and token counters, shareable across samplers.
#[derive(Debug, Default)]
pub struct UsageCounters {
    pub requests: AtomicU64,
    pub prompt_tokens: AtomicU64,
    pub completion_tokens: AtomicU64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Usage {
    pub requests: u64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl UsageCounters {
    pub fn snapshot(&self) -> Usage {
        Usage {
            requests: self.requests.load(Ordering::Relaxed),
            prompt_tokens: self.prompt_tokens.load(Ordering::Relaxed),
            completion_tokens: self.completion_tokens.load(Ordering::Relaxed),
        }
    }
}

/// Spaces request starts at least `interval` apart.
#[derive(Debug)]
pub struct RateLimiter {
    interval: Duration,
    next: Mutex<Instant>,
}

impl RateLimiter {
    pub fn new(interval: Duration) -> Self {
        Self {
            interval,
            next: Mutex::new(Instant::now()),
        }
    }

    pub fn wait(&self) {
        if self.interval.is_zero() {
            return;
        }
        let wait_until = {
            let mut next = self.next.lock().unwrap_or_else(|e| e.into_inner());
            let now = Instant::now();
            let slot = (*next).max(now);
            *next = slot + self.interval;
            slot
        };
        let now = Instant::now();
        if wait_until > now {
            std::thread::sleep(wait_until - now);
        }
    }
}

/// Samples one chart image from a chat-completions endpoint.
pub struct VlmSampler {
    cfg: SamplerConfig,
    data_url: String,
    api_key: String,
    agent: ureq::Agent,
    limiter: Arc<RateLimiter>,
    usage: Arc<UsageCounters>,
}

impl VlmSampler {
    pub fn new(image: &[u8], cfg: SamplerConfig) -> Result<Self, SamplerError> {
        let limiter = Arc::new(RateLimiter::new(Duration::from_secs_f64(cfg.min_request_interval_secs)));
        Self::with_shared(image, cfg, limiter, Arc::new(UsageCounters::default()))
    }

    /// Builds a sampler that shares a rate limiter and usage counters with others.
    pub fn with_shared(
        image: &[u8],
        cfg: SamplerConfig,
        limiter: Arc<RateLimiter>,
        usage: Arc<UsageCounters>,
    ) -> Result<Self, SamplerError> {
        let api_key = std::env::var(&cfg.api_key_env)
            .map_err(|_| SamplerError::MissingCredentials(cfg.api_key_env.clone()))?;
        let mime = sniff_mime(image).ok_or_else(|| SamplerError::Image("unrecognized image format".to_string()))?;
        let data_url = format!(
            "data:{mime};base64,{}",
            base64::engine::general_purpose::STANDARD.encode(image)
        );
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs_f64(cfg.request_timeout_secs)))
            .build()
            .into();
        Ok(Self {
            cfg,
            data_url,
            api_key,
            agent,
            limiter,
            usage,
        })
    }

    pub fn usage(&self) -> Usage {
        self.usage.snapshot()
    }

    fn request_body(&self) -> Value {
        let mut body = json!({
            "model": self.cfg.model_id,
            "temperature": self.cfg.temperature,
            "messages": [{
                "role": "user",
                "content": [
                    {"type": "text", "text": self.cfg.prompt_text},
                    {"type": "image_url", "image_url": {"url": self.data_url}},
                ],
            }],
        });
        if let Some(max) = self.cfg.max_tokens {
            body["max_tokens"] = json!(max);
        }
        body
    }

    fn backoff(&self, attempt: u32) {
        let base = self.cfg.backoff_base_secs * 2f64.powi(attempt as i32);
        let jitter: f64 = rand::rng().random_range(0.5..1.5);
        std::thread::sleep(Duration::from_secs_f64((base * jitter).max(0.0)));
    }

    fn complete(&self) -> Result<String, SamplerError> {
        let body = self.request_body().to_string();
        let mut attempt = 0u32;
        loop {
            self.limiter.wait();
            self.usage.requests.fetch_add(1, Ordering::Relaxed);
            let result = self
                .agent
                .post(&self.cfg.endpoint_url)
                .header("Authorization", &format!("Bearer {}", self.api_key))
                .header("Content-Type", "application/json")
                .send(body.as_str());
            let retryable = match result {
                Err(e) => SamplerError::Transport(e.to_string()),
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    let text = resp.body_mut().read_to_string().unwrap_or_default();
                    match status {
                        200..=299 => return self.parse_response(&text),
                        401 | 403 => return Err(SamplerError::Auth(status)),
                        429 => SamplerError::RateLimited(attempt + 1),
                        500..=599 => SamplerError::Transport(format!("HTTP {status}: {}", truncate(&text))),
                        _ => {
                            return Err(SamplerError::Transport(format!("HTTP {status}: {}", truncate(&text))))
                        }
                    }
                }
            };
            if attempt >= self.cfg.max_retries {
                return Err(retryable);
            }
            log::debug!("retrying after: {retryable}");
            self.backoff(attempt);
            attempt += 1;
        }
    }

    fn parse_response(&self, text: &str) -> Result<String, SamplerError> {
        let v: Value = serde_json::from_str(text).map_err(|e| SamplerError::MalformedResponse(e.to_string()))?;
        if let Some(usage) = v.get("usage") {
            let field = |k: &str| usage.get(k).and_then(Value::as_u64).unwrap_or(0);
            self.usage.prompt_tokens.fetch_add(field("prompt_tokens"), Ordering::Relaxed);
            self.usage
                .completion_tokens
                .fetch_add(field("completion_tokens"), Ordering::Relaxed);
        }
        let content = &v["choices"][0]["message"]["content"];
        match content {
            Value::String(s) => Ok(s.clone()),
            Value::Array(parts) => {
                let texts: Vec<&str> = parts
                    .iter()
                    .filter(|p| p["type"] == "text")
                    .filter_map(|p| p["text"].as_str())
                    .collect();
                if texts.is_empty() {
                    Err(SamplerError::MalformedResponse("no text part in first choice".to_string()))
                } else {
                    Ok(texts.concat())
                }
            }
            _ => Err(SamplerError::MalformedResponse("first choice has no text content".to_string())),
        }
    }
}

impl Sampler for VlmSampler {
    fn sample(&self, _draw_index: usize) -> Result<String, SamplerError> {
        self.complete()
    }
}

/// One-shot request for a single image.
pub fn vlm_sample(image: &[u8], cfg: &SamplerConfig) -> Result<String, SamplerError> {
    VlmSampler::new(image, cfg.clone())?.complete()
}

fn truncate(s: &str) -> &str {
    match s.char_indices().nth(200) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

fn sniff_mime(bytes: &[u8]) -> Option<&'static str> {
    if bytes.starts_with(b"\x89PNG\r\n\x1a\n") {
        Some("image/png")
    } else if bytes.starts_with(&[0xFF, 0xD8, 0xFF]) {
        Some("image/jpeg")
    } else if bytes.starts_with(b"GIF87a") || bytes.starts_with(b"GIF89a") {
        Some("image/gif")
    } else if bytes.len() >= 12 && &bytes[..4] == b"RIFF" && &bytes[8..12] == b"WEBP" {
        Some("image/webp")
    } else {
        None
    }
}
