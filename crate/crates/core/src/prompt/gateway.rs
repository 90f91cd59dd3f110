//! Provider calls with retries, rate limiting and an on-disk transcript cache.

use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::provider::{Provider, ProviderError};
use super::{
    parse_response, CotStage, FewShotExemplar, ParseError, PromptError, PromptRequest, Prompts,
};
use crate::corpus::Sentence;

const WINDOW: Duration = Duration::from_secs(60);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Extra attempts after a response without a usable `<output>` block.
    pub max_unparseable: u32,
    pub max_rate_limit_retries: u32,
    pub base_backoff: Duration,
    pub max_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_unparseable: 2,
            max_rate_limit_retries: 5,
            base_backoff: Duration::from_secs(1),
            max_backoff: Duration::from_secs(60),
        }
    }
}

impl RetryPolicy {
    /// Wait before rate-limit retry number `attempt` (0-based).
    pub fn backoff(&self, attempt: u32, hint: Option<Duration>) -> Duration {
        let exp = self
            .base_backoff
            .saturating_mul(1u32.checked_shl(attempt).unwrap_or(u32::MAX));
        hint.unwrap_or(exp).max(exp).min(self.max_backoff)
    }
}

pub trait Clock: Send + Sync {
    /// Time since an arbitrary fixed origin.
    fn now(&self) -> Duration;
    fn sleep(&self, d: Duration);
}

#[derive(Debug)]
pub struct SystemClock {
    origin: Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        SystemClock {
            origin: Instant::now(),
        }
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }

    fn sleep(&self, d: Duration) {
        std::thread::sleep(d);
    }
}

/// Test clock: `sleep` advances time instantly and is recorded.
#[derive(Debug, Default)]
pub struct ManualClock {
    state: Mutex<(Duration, Vec<Duration>)>,
}

impl ManualClock {
    pub fn advance(&self, d: Duration) {
        self.state.lock().expect("clock lock").0 += d;
    }

    pub fn sleeps(&self) -> Vec<Duration> {
        self.state.lock().expect("clock lock").1.clone()
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Duration {
        self.state.lock().expect("clock lock").0
    }

    fn sleep(&self, d: Duration) {
        let mut s = self.state.lock().expect("clock lock");
        s.0 += d;
        s.1.push(d);
    }
}

#[derive(Debug, Default)]
struct LimiterState {
    in_flight: usize,
    starts: VecDeque<Duration>,
}

/// Caps concurrent requests and requests started per minute. `rpm == 0`
/// disables the per-minute cap.
#[derive(Debug)]
pub struct Limiter {
    max_in_flight: usize,
    rpm: u32,
    state: Mutex<LimiterState>,
    freed: Condvar,
}

impl Limiter {
    pub fn new(max_in_flight: usize, rpm: u32) -> Self {
        Limiter {
            max_in_flight: max_in_flight.max(1),
            rpm,
            state: Mutex::new(LimiterState::default()),
            freed: Condvar::new(),
        }
    }

    pub fn unlimited() -> Self {
        Limiter::new(usize::MAX, 0)
    }

    pub fn in_flight(&self) -> usize {
        self.state.lock().expect("limiter lock").in_flight
    }

    pub fn acquire<'a>(&'a self, clock: &dyn Clock) -> Permit<'a> {
        let mut st = self.state.lock().expect("limiter lock");
        loop {
            while st.in_flight >= self.max_in_flight {
                st = self.freed.wait(st).expect("limiter lock");
            }
            if self.rpm == 0 {
                break;
            }
            let now = clock.now();
            while st
                .starts
                .front()
                .is_some_and(|&t| now.saturating_sub(t) >= WINDOW)
            {
                st.starts.pop_front();
            }
            if st.starts.len() < self.rpm as usize {
                st.starts.push_back(now);
                break;
            }
            let wait = (st.starts[0] + WINDOW).saturating_sub(now);
            drop(st);
            clock.sleep(wait);
            st = self.state.lock().expect("limiter lock");
        }
        st.in_flight += 1;
        Permit { limiter: self }
    }
}

#[must_use]
pub struct Permit<'a> {
    limiter: &'a Limiter,
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        self.limiter.state.lock().expect("limiter lock").in_flight -= 1;
        self.limiter.freed.notify_one();
    }
}

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    template_version: String,
    request: PromptRequest,
    response: String,
}

/// Responses stored as `<sha256>.json`, keyed by template version and the
/// full request.
#[derive(Debug, Clone)]
pub struct TranscriptCache {
    dir: PathBuf,
}

impl TranscriptCache {
    pub fn open(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(TranscriptCache {
            dir: dir.to_path_buf(),
        })
    }

    pub fn key(request: &PromptRequest) -> String {
        let mut h = Sha256::new();
        h.update(request.template_version.as_bytes());
        h.update([0]);
        h.update(serde_json::to_vec(request).expect("requests serialize"));
        hex::encode(h.finalize())
    }

    fn path(&self, request: &PromptRequest) -> PathBuf {
        self.dir.join(format!("{}.json", Self::key(request)))
    }

    pub fn get(&self, request: &PromptRequest) -> Option<String> {
        let text = std::fs::read_to_string(self.path(request)).ok()?;
        let entry: CacheEntry = serde_json::from_str(&text).ok()?;
        (entry.request == *request).then_some(entry.response)
    }

    pub fn put(&self, request: &PromptRequest, response: &str) -> std::io::Result<()> {
        let entry = CacheEntry {
            template_version: request.template_version.clone(),
            request: request.clone(),
            response: response.to_string(),
        };
        let tmp = self.dir.join(format!("{}.tmp", Self::key(request)));
        std::fs::write(
            &tmp,
            serde_json::to_vec_pretty(&entry).expect("entries serialize"),
        )?;
        std::fs::rename(tmp, self.path(request))
    }
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error(transparent)]
    Provider(ProviderError),
    #[error("no <output> block after {attempts} attempts; last response: {raw:?}")]
    Unparseable { raw: String, attempts: u32 },
    #[error("empty <output> block after {attempts} attempts; last response: {raw:?}")]
    EmptyOutput { raw: String, attempts: u32 },
    #[error("still rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("transcript cache: {0}")]
    Cache(#[from] std::io::Error),
}

impl GatewayError {
    /// Provider text behind a parse failure.
    pub fn raw(&self) -> Option<&str> {
        match self {
            GatewayError::Unparseable { raw, .. } | GatewayError::EmptyOutput { raw, .. } => {
                Some(raw)
            }
            _ => None,
        }
    }
}

pub struct Gateway<P> {
    provider: P,
    pub policy: RetryPolicy,
    limiter: Limiter,
    cache: Option<TranscriptCache>,
    clock: Arc<dyn Clock>,
}

impl<P: Provider> Gateway<P> {
    pub fn new(provider: P) -> Self {
        Gateway {
            provider,
            policy: RetryPolicy::default(),
            limiter: Limiter::unlimited(),
            cache: None,
            clock: Arc::new(SystemClock::default()),
        }
    }

    pub fn with_policy(mut self, policy: RetryPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_limits(mut self, max_in_flight: usize, rpm: u32) -> Self {
        self.limiter = Limiter::new(max_in_flight, rpm);
        self
    }

    pub fn with_cache(mut self, cache: TranscriptCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn provider(&self) -> &P {
        &self.provider
    }

    fn call(&self, request: &PromptRequest) -> Result<String, GatewayError> {
        let mut attempt = 0;
        loop {
            let result = {
                let _permit = self.limiter.acquire(self.clock.as_ref());
                self.provider.complete(request)
            };
            match result {
                Ok(text) => return Ok(text),
                Err(ProviderError::RateLimited { retry_after }) => {
                    if attempt >= self.policy.max_rate_limit_retries {
                        return Err(GatewayError::RateLimited {
                            attempts: attempt + 1,
                        });
                    }
                    self.clock.sleep(self.policy.backoff(attempt, retry_after));
                    attempt += 1;
                }
                Err(e) => return Err(GatewayError::Provider(e)),
            }
        }
    }

    /// Raw provider text, served from the cache when present.
    pub fn complete_raw(&self, request: &PromptRequest) -> Result<String, GatewayError> {
        if let Some(hit) = self.cache.as_ref().and_then(|c| c.get(request)) {
            return Ok(hit);
        }
        let text = self.call(request)?;
        if let Some(c) = &self.cache {
            c.put(request, &text)?;
        }
        Ok(text)
    }

    /// Sends `request` until a response parses, at most
    /// `1 + max_unparseable` times. Only parseable responses are cached.
    pub fn correct(&self, request: &PromptRequest) -> Result<Sentence, GatewayError> {
        request.check()?;
        if let Some(hit) = self.cache.as_ref().and_then(|c| c.get(request)) {
            if let Ok(s) = parse_response(&hit) {
                return Ok(s);
            }
        }
        let mut attempts = 0;
        loop {
            let text = self.call(request)?;
            attempts += 1;
            match parse_response(&text) {
                Ok(s) => {
                    if let Some(c) = &self.cache {
                        c.put(request, &text)?;
                    }
                    return Ok(s);
                }
                Err(e) if attempts > self.policy.max_unparseable => {
                    return Err(match e {
                        ParseError::Unparseable { raw } => {
                            GatewayError::Unparseable { raw, attempts }
                        }
                        ParseError::EmptyOutput { raw } => {
                            GatewayError::EmptyOutput { raw, attempts }
                        }
                    });
                }
                Err(_) => {}
            }
        }
    }
}

/// Builds the prompt for `source` and returns the provider's parsed correction.
pub fn correct_with_provider<P, B>(
    source: &Sentence,
    builder: B,
    gateway: &Gateway<P>,
) -> Result<Sentence, GatewayError>
where
    P: Provider,
    B: FnOnce(&Sentence) -> Result<PromptRequest, PromptError>,
{
    let request = builder(source)?;
    gateway.correct(&request)
}

/// Two-stage chain of thought: the reasoning reply is fed back into the
/// answer-stage prompt.
pub fn correct_cot<P: Provider>(
    source: &Sentence,
    exemplars: &[FewShotExemplar],
    prompts: &Prompts,
    gateway: &Gateway<P>,
) -> Result<Sentence, GatewayError> {
    let first = prompts.cot(source, exemplars, CotStage::Reasoning, None)?;
    let reasoning = gateway.complete_raw(&first)?;
    let second = prompts.cot(source, exemplars, CotStage::Answer, Some(&reasoning))?;
    gateway.correct(&second)
}
