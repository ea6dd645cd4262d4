use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::RunConfig;

const CONFIG_PREFIX: &str = "# config: ";

/// Comment preamble for CSV artifacts: version, schema and the config.
pub fn csv_preamble(config: &RunConfig) -> Result<String> {
    Ok(format!(
        "# effscan {} schema={}\n{CONFIG_PREFIX}{}\n",
        effscan::VERSION,
        config.schema(),
        serde_json::to_string(config)?
    ))
}

/// JSON artifact: `schema`, `version`, `config`, then the payload fields.
pub fn json_artifact<T: Serialize>(config: &RunConfig, payload: &T) -> Result<String> {
    let mut doc = Map::new();
    doc.insert("schema".into(), Value::String(config.schema()));
    doc.insert("version".into(), Value::String(effscan::VERSION.into()));
    doc.insert("config".into(), serde_json::to_value(config)?);
    match serde_json::to_value(payload)? {
        Value::Object(fields) => doc.extend(fields),
        other => {
            doc.insert("result".into(), other);
        }
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(doc))?;
    text.push('\n');
    Ok(text)
}

/// Writes next to the destination and renames, so a failed run never leaves
/// a partial file behind. `None` writes to stdout.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    let Some(path) = path else {
        let mut out = std::io::stdout().lock();
        out.write_all(text.as_bytes())?;
        return Ok(out.flush()?);
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating a temporary file in {}", dir.display()))?;
    tmp.write_all(text.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path)
        .map_err(|e| anyhow!("writing {}: {}", path.display(), e.error))?;
    Ok(())
}

/// Recovers the embedded config from a CSV or JSON artifact.
pub fn embedded_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Some(line) = text.lines().find_map(|l| l.strip_prefix(CONFIG_PREFIX)) {
        return serde_json::from_str(line).context("parsing the embedded config line");
    }
    let doc: Value = serde_json::from_str(&text)
        .with_context(|| format!("{} is neither a CSV nor a JSON artifact", path.display()))?;
    match doc.get("config") {
        Some(cfg) => Ok(serde_json::from_value(cfg.clone())?),
        None => bail!("{} carries no embedded config", path.display()),
    }
}
