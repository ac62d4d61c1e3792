//! Sources of raw table text: a live chat-completions endpoint, a seeded noise oracle
//! over a known table, and replay of previously stored replies.

pub mod simulated;
pub mod vlm;

pub use simulated::{simulated_sample, NoiseModel, SimulatedSampler};
pub use vlm::{vlm_sample, SamplerConfig, VlmSampler, DEFAULT_PROMPT};

/// Produces the `draw_index`-th raw reply for one chart.
pub trait Sampler: Sync {
    fn sample(&self, draw_index: usize) -> Result<String, SamplerError>;
}

impl<S: Sampler + ?Sized> Sampler for &S {
    fn sample(&self, draw_index: usize) -> Result<String, SamplerError> {
        (**self).sample(draw_index)
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum SamplerError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("authentication rejected (HTTP {0})")]
    Auth(u16),
    #[error("rate limited after {0} attempts")]
    RateLimited(u32),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("cannot read image: {0}")]
    Image(String),
    #[error("missing credentials: environment variable {0} is not set")]
    MissingCredentials(String),
    /// A recorded failure replayed verbatim.
    #[error("{0}")]
    Recorded(String),
    /// The sample stream has no more draws (replay past the stored samples).
    #[error("sample stream exhausted")]
    Exhausted,
}

/// Replays stored replies; `Err` entries reproduce recorded sampler failures.
#[derive(Debug, Clone)]
pub struct ReplaySampler {
    draws: Vec<Result<String, String>>,
}

impl ReplaySampler {
    pub fn new(draws: Vec<Result<String, String>>) -> Self {
        Self { draws }
    }

    pub fn from_texts(texts: impl IntoIterator<Item = String>) -> Self {
        Self::new(texts.into_iter().map(Ok).collect())
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }
}

impl Sampler for ReplaySampler {
    fn sample(&self, draw_index: usize) -> Result<String, SamplerError> {
        match self.draws.get(draw_index) {
            Some(Ok(text)) => Ok(text.clone()),
            Some(Err(reason)) => Err(SamplerError::Recorded(reason.clone())),
            None => Err(SamplerError::Exhausted),
        }
    }
}

/// Calls `f(draw_index)`; handy for tests and ad-hoc samplers.
pub struct FnSampler<F>(pub F);

impl<F> Sampler for FnSampler<F>
where
    F: Fn(usize) -> Result<String, SamplerError> + Sync,
{
    fn sample(&self, draw_index: usize) -> Result<String, SamplerError> {
        (self.0)(draw_index)
    }
}
