//! File emission helpers: LF line endings, '.' decimals, UTF-8, no
//! timestamps — reruns of the same config produce byte-identical files.

use serde::Serialize;
use std::path::{Path, PathBuf};

use crate::config::content_hash;
use crate::CliError;

pub fn ensure_dir(dir: &str) -> Result<PathBuf, CliError> {
    let path = PathBuf::from(dir);
    std::fs::create_dir_all(&path)
        .map_err(|e| CliError::Io(format!("creating {}: {e}", path.display())))?;
    Ok(path)
}

pub fn write_text(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Io(format!("serializing {}: {e}", path.display())))?;
    write_text(path, &(text + "\n"))
}

/// Manifest embedding the resolved config verbatim plus a content hash.
pub fn manifest(command: &str, config: &impl Serialize) -> serde_json::Value {
    serde_json::json!({
        "tool": { "name": "kmpsim", "version": env!("CARGO_PKG_VERSION") },
        "command": command,
        "config_hash": content_hash(config),
        "config": serde_json::to_value(config).expect("config serializes"),
    })
}
