//! Content-addressed response cache and the cache-aware call path shared by
//! every pipeline step.

use std::path::{Path, PathBuf};

use crate::gateway::{
    call_with_retry, read_fixture_dir, write_fixture, ChatRequest, ChatResponse, FixtureEntry, Gateway, GatewayError,
    RetryPolicy,
};

/// On-disk cache: one `<fingerprint>.json` file per stored completion, in the
/// same format as replay fixtures. Entries never expire.
#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ResponseCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// `Ok(None)` on a miss; `Err` describes an unreadable entry.
    pub fn get(&self, fingerprint: &str) -> Result<Option<FixtureEntry>, String> {
        let path = self.dir.join(format!("{fingerprint}.json"));
        let text = match std::fs::read_to_string(&path) {
            Ok(text) => text,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(format!("cache entry {fingerprint}: {e}")),
        };
        serde_json::from_str(&text).map(Some).map_err(|e| format!("cache entry {fingerprint} is corrupt: {e}"))
    }

    pub fn put(&self, fingerprint: &str, entry: &FixtureEntry) -> std::io::Result<()> {
        write_fixture(&self.dir, fingerprint, entry).map(|_| ())
    }

    pub fn len(&self) -> usize {
        read_fixture_dir(&self.dir).map(|m| m.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Call accounting for one unit of work (one review, one grouping call).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Usage {
    /// Units that went to the gateway, successful or not. Each extra attempt
    /// is a retry, so `calls + retries` is the number of gateway requests.
    pub calls: u64,
    pub cache_hits: u64,
    pub retries: u64,
}

/// Serves `request` from the cache when a stored entry parses, otherwise
/// calls the gateway with retries and stores the successful response.
/// Unreadable or unparseable cache entries are treated as misses and noted
/// in `diagnostics`.
pub fn lookup_or_call_parsed<T>(
    request: &ChatRequest,
    gateway: &dyn Gateway,
    cache: Option<&ResponseCache>,
    policy: &RetryPolicy,
    usage: &mut Usage,
    diagnostics: &mut Vec<String>,
    parse: impl Fn(&str) -> Result<T, GatewayError>,
) -> Result<T, GatewayError> {
    let fingerprint = request.fingerprint();
    if let Some(cache) = cache {
        match cache.get(&fingerprint) {
            Ok(Some(entry)) => match parse(&entry.text) {
                Ok(value) => {
                    usage.cache_hits += 1;
                    return Ok(value);
                }
                Err(e) => diagnostics.push(format!("cache entry {fingerprint} unusable ({e}); refetching")),
            },
            Ok(None) => {}
            Err(e) => diagnostics.push(format!("{e}; treating as miss")),
        }
    }

    let outcome = call_with_retry(gateway, request, policy, |response| parse(&response.text));
    let retried = match outcome {
        Ok(retried) => retried,
        Err(error) => {
            usage.calls += 1;
            usage.retries += u64::from(error.attempts().saturating_sub(1));
            return Err(error);
        }
    };
    usage.calls += 1;
    usage.retries += u64::from(retried.retries);
    if let Some(cache) = cache {
        let entry = FixtureEntry { text: retried.response.text.clone(), model: retried.response.model.clone() };
        if let Err(e) = cache.put(&fingerprint, &entry) {
            diagnostics.push(format!("failed to store cache entry {fingerprint}: {e}"));
        }
    }
    Ok(retried.value)
}

pub fn lookup_or_call(
    request: &ChatRequest,
    gateway: &dyn Gateway,
    cache: Option<&ResponseCache>,
    policy: &RetryPolicy,
    usage: &mut Usage,
    diagnostics: &mut Vec<String>,
) -> Result<ChatResponse, GatewayError> {
    let model = request.model.clone();
    lookup_or_call_parsed(request, gateway, cache, policy, usage, diagnostics, |text| {
        Ok(ChatResponse { text: text.to_string(), model: model.clone(), latency_ms: 0 })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::ReplayBackend;

    #[test]
    fn miss_then_hit() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::new(dir.path());
        let request = ChatRequest::new("m", "s", "u");
        let mut backend = ReplayBackend::default();
        backend.insert(&request, "hello");
        let policy = RetryPolicy::immediate(1);

        let mut usage = Usage::default();
        let mut diags = Vec::new();
        let first = lookup_or_call(&request, &backend, Some(&cache), &policy, &mut usage, &mut diags).unwrap();
        assert_eq!(first.text, "hello");
        assert_eq!(usage, Usage { calls: 1, cache_hits: 0, retries: 0 });

        let second = lookup_or_call(&request, &backend, Some(&cache), &policy, &mut usage, &mut diags).unwrap();
        assert_eq!(second.text, "hello");
        assert_eq!(usage, Usage { calls: 1, cache_hits: 1, retries: 0 });
        assert_eq!(backend.calls(), 1);
        assert!(diags.is_empty());
    }

    #[test]
    fn corrupt_entry_is_a_miss() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::new(dir.path());
        let request = ChatRequest::new("m", "s", "u");
        std::fs::write(dir.path().join(format!("{}.json", request.fingerprint())), "{oops").unwrap();
        let mut backend = ReplayBackend::default();
        backend.insert(&request, "fresh");

        let mut usage = Usage::default();
        let mut diags = Vec::new();
        let response =
            lookup_or_call(&request, &backend, Some(&cache), &RetryPolicy::immediate(1), &mut usage, &mut diags)
                .unwrap();
        assert_eq!(response.text, "fresh");
        assert_eq!(backend.calls(), 1);
        assert_eq!(diags.len(), 1);
        assert!(diags[0].contains("corrupt"));
        assert_eq!(cache.get(&request.fingerprint()).unwrap().unwrap().text, "fresh");
    }

    #[test]
    fn failures_are_not_cached() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::new(dir.path());
        let backend = ReplayBackend::default();
        let mut usage = Usage::default();
        let err = lookup_or_call(
            &ChatRequest::new("m", "s", "u"),
            &backend,
            Some(&cache),
            &RetryPolicy::immediate(2),
            &mut usage,
            &mut Vec::new(),
        )
        .unwrap_err();
        assert!(matches!(err, GatewayError::NoFixture(_)));
        assert!(cache.is_empty());
        assert_eq!(usage, Usage { calls: 1, cache_hits: 0, retries: 0 });
    }
}
