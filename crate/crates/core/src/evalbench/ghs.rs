use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::{LazyLock, Mutex};

use regex::Regex;

use super::EvalError;

pub const GHS_CODE_PATTERN: &str = r"\bH\d{3}\b";

static CODE: LazyLock<Regex> = LazyLock::new(|| Regex::new(GHS_CODE_PATTERN).expect("ghs regex"));
static CACHE_WRITE: Mutex<()> = Mutex::new(());

/// Hazard-code lookup against a PUG-View style endpoint with an on-disk
/// JSON cache (`id -> [codes]`).
#[derive(Debug, Clone)]
pub struct GhsFetcher {
    pub base_url: String,
    pub cache_path: PathBuf,
    pub timeout_seconds: u64,
}

fn read_cache(path: &Path) -> Result<BTreeMap<String, BTreeSet<String>>, EvalError> {
    match std::fs::read_to_string(path) {
        Ok(text) => {
            serde_json::from_str(&text).map_err(|e| EvalError::Parse(format!("ghs cache {}: {e}", path.display())))
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(BTreeMap::new()),
        Err(e) => Err(EvalError::Io(format!("cannot read {}: {e}", path.display()))),
    }
}

/// Hazard codes anywhere in a response body.
pub(crate) fn extract_codes(body: &str) -> Result<BTreeSet<String>, EvalError> {
    let v: serde_json::Value = serde_json::from_str(body).map_err(|e| EvalError::Parse(e.to_string()))?;
    let mut out = BTreeSet::new();
    collect(&v, &mut out);
    Ok(out)
}

fn collect(v: &serde_json::Value, out: &mut BTreeSet<String>) {
    match v {
        serde_json::Value::String(s) => out.extend(CODE.find_iter(s).map(|m| m.as_str().to_string())),
        serde_json::Value::Array(a) => a.iter().for_each(|x| collect(x, out)),
        serde_json::Value::Object(o) => o.values().for_each(|x| collect(x, out)),
        _ => {}
    }
}

impl GhsFetcher {
    pub fn new(base_url: impl Into<String>, cache_path: impl Into<PathBuf>) -> Self {
        GhsFetcher { base_url: base_url.into(), cache_path: cache_path.into(), timeout_seconds: 30 }
    }

    pub fn url_for(&self, id: &str) -> String {
        format!(
            "{}/rest/pug_view/data/compound/{id}/JSON?heading=GHS+Classification",
            self.base_url.trim_end_matches('/')
        )
    }

    pub fn cached(&self, id: &str) -> Result<Option<BTreeSet<String>>, EvalError> {
        Ok(read_cache(&self.cache_path)?.remove(id))
    }

    /// Cached codes, or one GET on a miss followed by a cache write.
    pub fn fetch_ghs_remote(&self, id: &str) -> Result<BTreeSet<String>, EvalError> {
        if let Some(codes) = self.cached(id)? {
            return Ok(codes);
        }
        let body = self.get(id)?;
        let codes = extract_codes(&body)?;
        self.store(id, &codes)?;
        Ok(codes)
    }

    fn store(&self, id: &str, codes: &BTreeSet<String>) -> Result<(), EvalError> {
        let _guard = CACHE_WRITE.lock().unwrap_or_else(|e| e.into_inner());
        let mut cache = read_cache(&self.cache_path)?;
        cache.insert(id.to_string(), codes.clone());
        let text = serde_json::to_string_pretty(&cache).map_err(|e| EvalError::Parse(e.to_string()))?;
        let tmp = self.cache_path.with_extension("json.tmp");
        let io = |e: std::io::Error| EvalError::Io(format!("cannot write {}: {e}", self.cache_path.display()));
        std::fs::write(&tmp, text).map_err(io)?;
        std::fs::rename(&tmp, &self.cache_path).map_err(io)
    }

    #[cfg(feature = "http")]
    fn get(&self, id: &str) -> Result<String, EvalError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(self.timeout_seconds))
            .build()
            .map_err(|e| EvalError::Http(e.to_string()))?;
        let resp = client.get(self.url_for(id)).send().map_err(|e| EvalError::Http(e.to_string()))?;
        let status = resp.status();
        if status.as_u16() == 404 {
            return Err(EvalError::NotFound(id.to_string()));
        }
        let body = resp.text().map_err(|e| EvalError::Http(e.to_string()))?;
        if !status.is_success() {
            return Err(EvalError::Http(format!(
                "status {}: {}",
                status.as_u16(),
                body.chars().take(200).collect::<String>()
            )));
        }
        Ok(body)
    }

    #[cfg(not(feature = "http"))]
    fn get(&self, _id: &str) -> Result<String, EvalError> {
        Err(EvalError::Http("built without the http feature".into()))
    }
}
