use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Everything needed to rerun a command and get the same bytes back.
#[derive(Clone, Debug, Default, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Grid, window, caps and other command settings, as given or defaulted.
    pub settings: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            ..Self::default()
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.settings.insert(key.to_string(), value.to_string());
    }
}

/// Where a result goes: a file (with a `.manifest.json` sibling) or stdout.
pub struct Output {
    pub path: Option<PathBuf>,
}

impl Output {
    pub fn manifest_path(path: &Path) -> PathBuf {
        let mut name = path.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }

    pub fn record(&self, manifest: &mut RunManifest) {
        if let Some(path) = &self.path {
            manifest.outputs.push(path.display().to_string());
            manifest.outputs.push(Self::manifest_path(path).display().to_string());
        } else {
            manifest.outputs.push("-".into());
        }
    }

    /// Writes a JSON result with the manifest embedded under `"manifest"`.
    pub fn json<T: Serialize>(&self, result: &T, manifest: &RunManifest) -> Result<()> {
        let mut value = serde_json::to_value(result)?;
        if let serde_json::Value::Object(map) = &mut value {
            map.insert("manifest".into(), serde_json::to_value(manifest)?);
        }
        let text = serde_json::to_string_pretty(&value)? + "\n";
        self.write(text.as_bytes(), manifest)
    }

    /// Writes CSV text; the manifest goes to the sibling file, or to stderr
    /// when writing to stdout.
    pub fn csv(&self, text: &[u8], manifest: &RunManifest) -> Result<()> {
        self.write(text, manifest)?;
        if self.path.is_none() {
            eprintln!("{}", serde_json::to_string(manifest)?);
        }
        Ok(())
    }

    fn write(&self, bytes: &[u8], manifest: &RunManifest) -> Result<()> {
        match &self.path {
            Some(path) => {
                std::fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
                let side = Self::manifest_path(path);
                let text = serde_json::to_string_pretty(manifest)? + "\n";
                std::fs::write(&side, text).with_context(|| format!("cannot write {}", side.display()))?;
            }
            None => {
                use std::io::Write;
                std::io::stdout().lock().write_all(bytes)?;
            }
        }
        Ok(())
    }
}
