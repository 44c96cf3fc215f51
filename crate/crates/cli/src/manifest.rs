use std::fs;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::exit::{Failure, DATA};

pub const FILE_NAME: &str = "manifest.json";
const PINNED_TIME: &str = "1970-01-01T00:00:00Z";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// The full argument set, enough to rerun the command.
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    pub started: String,
    pub finished: String,
    /// Paths relative to the output directory.
    pub outputs: Vec<String>,
    pub exit_code: u8,
}

pub fn timestamp(reproducible: bool) -> String {
    if reproducible {
        PINNED_TIME.to_string()
    } else {
        Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
    }
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path).map_err(|e| Failure::new(DATA, format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::new(DATA, format!("{}: {e}", path.display())))
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, Failure> {
        let path = dir.join(FILE_NAME);
        write_json(&path, self)?;
        Ok(path)
    }
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
