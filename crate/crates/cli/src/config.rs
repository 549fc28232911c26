use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::commands::CliError;

pub fn load(path: &Path) -> Result<toml::Table, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    text.parse::<toml::Table>()
        .map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
}

/// Fill every flag left unset on the command line from the config table.
/// Keys may use `-` or `_`; keys for other subcommands are ignored.
pub fn merge<T: Serialize + DeserializeOwned>(args: T, table: &toml::Table) -> Result<T, CliError> {
    if table.is_empty() {
        return Ok(args);
    }
    let mut v = serde_json::to_value(&args).map_err(|e| CliError::Usage(e.to_string()))?;
    let obj = v.as_object_mut().expect("argument structs serialize to objects");
    for (k, val) in table {
        let key = k.replace('-', "_");
        if let Some(slot) = obj.get_mut(&key) {
            // switches read as false when absent
            if slot.is_null() || *slot == serde_json::Value::Bool(false) {
                *slot = serde_json::to_value(val).map_err(|e| CliError::Usage(e.to_string()))?;
            }
        }
    }
    serde_json::from_value(v).map_err(|e| CliError::Usage(format!("bad config value: {e}")))
}
