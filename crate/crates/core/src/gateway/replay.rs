use std::collections::HashMap;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use super::{ChatRequest, ChatResponse, Gateway, GatewayError};

/// On-disk form of one recorded completion: `<fingerprint>.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub text: String,
    pub model: String,
}

/// Writes `<dir>/<fingerprint>.json` via a temp file and rename, so
/// concurrent readers never observe a partial entry.
pub fn write_fixture(dir: &Path, fingerprint: &str, entry: &FixtureEntry) -> io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{fingerprint}.json"));
    let tmp = dir.join(format!(".{fingerprint}.{}.tmp", std::process::id()));
    std::fs::write(&tmp, crate::domain::to_canonical_json(entry))?;
    std::fs::rename(&tmp, &path)?;
    Ok(path)
}

/// Loads every `*.json` fixture in `dir`, keyed by file stem.
pub fn read_fixture_dir(dir: &Path) -> io::Result<HashMap<String, FixtureEntry>> {
    let mut entries = HashMap::new();
    for item in std::fs::read_dir(dir)? {
        let path = item?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else { continue };
        let text = std::fs::read_to_string(&path)?;
        let entry: FixtureEntry = serde_json::from_str(&text)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("{}: {e}", path.display())))?;
        entries.insert(stem.to_string(), entry);
    }
    Ok(entries)
}

/// Offline backend serving recorded completions by request fingerprint.
/// Never touches the network; counts every call it receives.
#[derive(Debug, Default)]
pub struct ReplayBackend {
    fixtures: HashMap<String, FixtureEntry>,
    calls: AtomicU64,
}

impl ReplayBackend {
    pub fn new(fixtures: HashMap<String, FixtureEntry>) -> Self {
        ReplayBackend { fixtures, calls: AtomicU64::new(0) }
    }

    pub fn from_dir(dir: &Path) -> io::Result<Self> {
        Ok(Self::new(read_fixture_dir(dir)?))
    }

    pub fn insert(&mut self, request: &ChatRequest, text: impl Into<String>) {
        self.fixtures.insert(request.fingerprint(), FixtureEntry { text: text.into(), model: request.model.clone() });
    }

    pub fn len(&self) -> usize {
        self.fixtures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixtures.is_empty()
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn reset_calls(&self) {
        self.calls.store(0, Ordering::SeqCst);
    }
}

impl Gateway for ReplayBackend {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let fingerprint = request.fingerprint();
        match self.fixtures.get(&fingerprint) {
            Some(entry) => Ok(ChatResponse { text: entry.text.clone(), model: entry.model.clone(), latency_ms: 0 }),
            None => Err(GatewayError::NoFixture(fingerprint)),
        }
    }
}

/// Wraps another backend and writes each successful completion as a
/// fixture file for later replay.
pub struct RecordingBackend<G> {
    inner: G,
    dir: PathBuf,
    recorded: AtomicU64,
}

impl<G: Gateway> RecordingBackend<G> {
    pub fn new(inner: G, dir: impl Into<PathBuf>) -> Self {
        RecordingBackend { inner, dir: dir.into(), recorded: AtomicU64::new(0) }
    }

    pub fn recorded(&self) -> u64 {
        self.recorded.load(Ordering::SeqCst)
    }

    pub fn inner(&self) -> &G {
        &self.inner
    }
}

impl<G: Gateway> Gateway for RecordingBackend<G> {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let response = self.inner.complete(request)?;
        let entry = FixtureEntry { text: response.text.clone(), model: response.model.clone() };
        write_fixture(&self.dir, &request.fingerprint(), &entry)
            .map_err(|e| GatewayError::Transport(format!("writing fixture: {e}")))?;
        self.recorded.fetch_add(1, Ordering::SeqCst);
        Ok(response)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replay_serves_recorded_text() {
        let request = ChatRequest::new("m", "s", "u");
        let mut backend = ReplayBackend::default();
        backend.insert(&request, "[]");
        assert_eq!(backend.complete(&request).unwrap().text, "[]");

        let other = ChatRequest::new("m", "s", "other");
        assert!(matches!(backend.complete(&other), Err(GatewayError::NoFixture(fp)) if fp == other.fingerprint()));
        assert_eq!(backend.calls(), 2);
    }

    #[test]
    fn record_then_replay_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let request = ChatRequest::new("m", "s", "u");
        let mut source = ReplayBackend::default();
        source.insert(&request, "{\"attributes\":[]}");

        let recorder = RecordingBackend::new(source, dir.path());
        recorder.complete(&request).unwrap();
        assert_eq!(recorder.recorded(), 1);
        assert!(recorder.complete(&ChatRequest::new("m", "s", "x")).is_err());
        assert_eq!(recorder.recorded(), 1);

        let replay = ReplayBackend::from_dir(dir.path()).unwrap();
        assert_eq!(replay.len(), 1);
        assert_eq!(replay.complete(&request).unwrap().text, "{\"attributes\":[]}");
    }
}
