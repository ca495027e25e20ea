//! Flag / config-file merging.
//!
//! Each subcommand's flags are serialized (unset flags omitted) and laid over the
//! matching object from the JSON config file; the merged object is deserialized into
//! the command's resolved config, which is echoed into every output document.

use std::path::Path;

use anyhow::Context;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

/// Loads the config file, if any. A file may hold either the command's keys at top
/// level or a `{"<command>": {...}}` section.
pub fn load_file(path: Option<&Path>, command: &str) -> Result<Map<String, Value>, CliError> {
    let Some(path) = path else {
        return Ok(Map::new());
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))
        .map_err(CliError::Domain)?;
    let value: Value = serde_json::from_str(&text)
        .with_context(|| format!("parsing config {}", path.display()))
        .map_err(CliError::Domain)?;
    let Value::Object(mut obj) = value else {
        return Err(CliError::Usage(format!(
            "config {} must hold a JSON object",
            path.display()
        )));
    };
    match obj.remove(command) {
        Some(Value::Object(section)) => Ok(section),
        Some(_) => Err(CliError::Usage(format!(
            "config section {command:?} must be an object"
        ))),
        None => Ok(obj),
    }
}

pub fn merge<F: Serialize, C: DeserializeOwned>(
    flags: &F,
    mut file: Map<String, Value>,
) -> Result<C, CliError> {
    let Value::Object(flag_values) =
        serde_json::to_value(flags).map_err(|e| CliError::Domain(e.into()))?
    else {
        unreachable!("flag structs serialize to objects");
    };
    for (k, v) in flag_values {
        if !v.is_null() {
            file.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(file))
        .map_err(|e| CliError::Usage(format!("invalid configuration: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Serialize)]
    struct Flags {
        d: Option<usize>,
        seed: Option<u64>,
    }

    #[derive(Deserialize, Debug, PartialEq)]
    struct Resolved {
        d: usize,
        #[serde(default)]
        seed: u64,
    }

    #[test]
    fn flags_override_file() {
        let mut file = Map::new();
        file.insert("d".into(), 3.into());
        file.insert("seed".into(), 9.into());
        let r: Resolved = merge(
            &Flags {
                d: Some(2),
                seed: None,
            },
            file,
        )
        .unwrap();
        assert_eq!(r, Resolved { d: 2, seed: 9 });
    }

    #[test]
    fn missing_required_is_usage_error() {
        let r: Result<Resolved, _> = merge(
            &Flags {
                d: None,
                seed: None,
            },
            Map::new(),
        );
        assert!(matches!(r, Err(CliError::Usage(_))));
    }
}
