//! Result bundles and the digest-keyed disk cache.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const CACHE_ENV: &str = "MINMOD_CACHE_DIR";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultBundle {
    pub schema: u32,
    pub tool_version: String,
    pub spec_digest: Option<String>,
    /// Canonical form of the command and the options that affect outputs.
    pub command: String,
    pub outputs: serde_json::Value,
    /// Seconds since the Unix epoch when the outputs were first computed.
    pub timestamp: u64,
}

impl ResultBundle {
    pub fn new(spec_digest: Option<String>, command: String, outputs: serde_json::Value) -> Self {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        ResultBundle { schema: 1, tool_version: VERSION.to_string(), spec_digest, command, outputs, timestamp }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle serializes") + "\n"
    }
}

/// Key over everything that determines the outputs.
pub fn cache_key(spec_digest: Option<&str>, command: &str) -> String {
    let mut h = Sha256::new();
    h.update(VERSION.as_bytes());
    h.update([0]);
    h.update(spec_digest.unwrap_or("").as_bytes());
    h.update([0]);
    h.update(command.as_bytes());
    format!("{:x}", h.finalize())
}

pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    /// `--cache-dir` wins over the environment; no directory means no caching.
    pub fn locate(flag: Option<&Path>) -> Option<Cache> {
        flag.map(Path::to_path_buf)
            .or_else(|| std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
            .map(|dir| Cache { dir })
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let text = fs::read_to_string(self.path(key)).ok()?;
        // only serve entries that still parse as bundles
        serde_json::from_str::<ResultBundle>(&text).ok().map(|_| text)
    }

    pub fn put(&self, key: &str, text: &str) -> Result<(), CliError> {
        fs::create_dir_all(&self.dir).map_err(|e| CliError::Io(format!("{}: {e}", self.dir.display())))?;
        let tmp = self.dir.join(format!("{key}.tmp"));
        fs::write(&tmp, text).map_err(|e| CliError::Io(format!("{}: {e}", tmp.display())))?;
        fs::rename(&tmp, self.path(key)).map_err(|e| CliError::Io(format!("{}: {e}", self.dir.display())))
    }
}
