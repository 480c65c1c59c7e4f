//! Config loading: TOML primary, JSON accepted, dotted-path `--key value`
//! overrides applied on top, unknown keys rejected at deserialization.

use std::path::Path;

use mixtail::{Error, Result};
use serde::de::DeserializeOwned;

pub fn load(path: Option<&Path>, overrides: &[String], cli_seed: Option<u64>) -> Result<toml::Table> {
    let mut table = match path {
        None => toml::Table::new(),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
            if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
                let json: serde_json::Value = serde_json::from_str(&text)
                    .map_err(|e| Error::Config(format!("invalid JSON config: {e}")))?;
                toml::Table::try_from(json)
                    .map_err(|e| Error::Config(format!("config is not a table: {e}")))?
            } else {
                toml::from_str(&text)
                    .map_err(|e| Error::Config(format!("invalid TOML config: {e}")))?
            }
        }
    };
    apply_overrides(&mut table, overrides)?;
    if let Some(seed) = cli_seed {
        table.insert("master_seed".into(), toml::Value::Integer(seed as i64));
    }
    Ok(table)
}

fn apply_overrides(table: &mut toml::Table, overrides: &[String]) -> Result<()> {
    let mut it = overrides.iter();
    while let Some(key) = it.next() {
        let key = key
            .strip_prefix("--")
            .ok_or_else(|| Error::Config(format!("override key must start with --: {key}")))?;
        let raw = it
            .next()
            .ok_or_else(|| Error::Config(format!("override --{key} is missing its value")))?;
        set_path(table, key, parse_value(raw))?;
    }
    Ok(())
}

/// Values are parsed with TOML syntax (so numbers, booleans, and arrays all
/// work); anything that does not parse is taken as a bare string.
fn parse_value(raw: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn set_path(table: &mut toml::Table, dotted: &str, value: toml::Value) -> Result<()> {
    let mut parts = dotted.split('.').peekable();
    let mut current = table;
    while let Some(part) = parts.next() {
        if parts.peek().is_none() {
            current.insert(part.to_string(), value);
            return Ok(());
        }
        let entry = current
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        current = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override path {dotted}: {part} is not a table")))?;
    }
    unreachable!()
}

pub fn into_typed<T: DeserializeOwned>(table: toml::Table) -> Result<T> {
    toml::Value::Table(table)
        .try_into()
        .map_err(|e| Error::Config(format!("invalid configuration: {e}")))
}
