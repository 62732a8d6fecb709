//! Parameter sweeps and multi-run presets. Runs are independent and each one
//! writes into its own directory, so results do not depend on scheduling.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::{Format, ScenarioConfig};
use crate::error::CliError;
use crate::output::write_json;
use crate::presets::Preset;
use crate::run::{execute, Command};

/// JSON-pointer paths mapped to replacement values.
pub type Override = Map<String, Value>;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndexEntry {
    pub name: String,
    pub directory: String,
    pub command: Command,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overrides: Option<Override>,
    pub status: &'static str,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

struct Job {
    name: String,
    command: Command,
    config: Result<ScenarioConfig, CliError>,
    overrides: Option<Override>,
}

pub fn load_overrides(path: &Path) -> Result<Vec<Override>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("overrides: malformed JSON: {e}")))?;
    let Value::Array(items) = value else {
        return Err(CliError::Config("overrides: expected an array of objects".into()));
    };
    items
        .into_iter()
        .enumerate()
        .map(|(i, v)| match v {
            Value::Object(m) => Ok(m),
            _ => Err(CliError::Config(format!("overrides[{i}]: expected an object of pointer/value pairs"))),
        })
        .collect()
}

/// Replaces (or inserts into an existing object) every pointer target.
pub fn apply_override(base: &Value, ov: &Override) -> Result<Value, CliError> {
    let mut doc = base.clone();
    for (pointer, value) in ov {
        if let Some(slot) = doc.pointer_mut(pointer) {
            *slot = value.clone();
            continue;
        }
        let missing = || CliError::Config(format!("override {pointer}: no such location"));
        let split = pointer.rfind('/').ok_or_else(missing)?;
        let key = pointer[split + 1..].replace("~1", "/").replace("~0", "~");
        match doc.pointer_mut(&pointer[..split]) {
            Some(Value::Object(map)) => {
                map.insert(key, value.clone());
            }
            _ => return Err(missing()),
        }
    }
    Ok(doc)
}

fn run_jobs(jobs: Vec<Job>, out: &Path, parallel: usize, format: Option<Format>) -> Result<Vec<IndexEntry>, CliError> {
    std::fs::create_dir_all(out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| {
        jobs.into_par_iter()
            .map(|job| {
                let result = job.config.and_then(|cfg| execute(job.command, &cfg, &out.join(&job.name), format));
                let (status, exit_code, error) = match &result {
                    Ok(_) => ("ok", 0, None),
                    Err(e) => ("failed", e.exit_code(), Some(e.to_string())),
                };
                IndexEntry {
                    directory: job.name.clone(),
                    name: job.name,
                    command: job.command,
                    overrides: job.overrides,
                    status,
                    exit_code,
                    error,
                }
            })
            .collect()
    }))
}

fn write_index(out: &Path, header: Value, entries: &[IndexEntry]) -> Result<(), CliError> {
    let mut index = header;
    index["runs"] = serde_json::to_value(entries).expect("index serializes");
    write_json(out, "index.json", &index)?;
    Ok(())
}

/// Runs `command` once per override set in `out/run_NNNN` and writes `index.json`.
/// Failed runs are recorded and the sweep continues.
pub fn sweep(
    command: Command,
    base: &ScenarioConfig,
    overrides: &[Override],
    out: &Path,
    parallel: usize,
    format: Option<Format>,
) -> Result<Vec<IndexEntry>, CliError> {
    let base_value = base.to_value();
    let jobs = overrides
        .iter()
        .enumerate()
        .map(|(i, ov)| Job {
            name: format!("run_{i:04}"),
            command,
            config: apply_override(&base_value, ov).and_then(ScenarioConfig::from_value),
            overrides: Some(ov.clone()),
        })
        .collect();
    let entries = run_jobs(jobs, out, parallel, format)?;
    write_index(out, json!({ "command": command.name(), "base_config": base_value }), &entries)?;
    Ok(entries)
}

/// Runs every scenario of a preset in `out/<run name>` and writes `index.json`.
pub fn reproduce(preset: &Preset, out: &Path, parallel: usize, format: Option<Format>) -> Result<Vec<IndexEntry>, CliError> {
    let jobs = preset
        .runs
        .iter()
        .map(|r| Job { name: r.name.clone(), command: r.command, config: Ok(r.config.clone()), overrides: None })
        .collect();
    let entries = run_jobs(jobs, out, parallel, format)?;
    write_index(out, json!({ "preset": preset.id, "description": preset.description }), &entries)?;
    Ok(entries)
}

/// Highest exit code among the runs, `0` when all succeeded.
pub fn overall_exit_code(entries: &[IndexEntry]) -> i32 {
    entries.iter().map(|e| e.exit_code).max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_replace_and_insert() {
        let base = json!({"a": {"b": [1, 2]}, "c": {}});
        let mut ov = Override::new();
        ov.insert("/a/b/1".into(), json!(5));
        ov.insert("/c/new".into(), json!("x"));
        let out = apply_override(&base, &ov).unwrap();
        assert_eq!(out, json!({"a": {"b": [1, 5]}, "c": {"new": "x"}}));

        let mut bad = Override::new();
        bad.insert("/a/b/7".into(), json!(0));
        assert!(apply_override(&base, &bad).is_err());
        let mut deep = Override::new();
        deep.insert("/x/y/z".into(), json!(0));
        assert!(apply_override(&base, &deep).is_err());
    }

    #[test]
    fn exit_code_is_worst_run() {
        let e = |code| IndexEntry {
            name: String::new(),
            directory: String::new(),
            command: Command::Simulate,
            overrides: None,
            status: "ok",
            exit_code: code,
            error: None,
        };
        assert_eq!(overall_exit_code(&[]), 0);
        assert_eq!(overall_exit_code(&[e(0), e(3), e(2)]), 3);
    }
}
