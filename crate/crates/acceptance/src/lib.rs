//! Golden-file plumbing for the acceptance suite.
//!
//! A golden file pins the numbers a run produced together with the hash of
//! the configuration that produced them. A hash mismatch is a failure, never
//! a silent comparison. `UPDATE_GOLDEN=1` rewrites the files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde_json::{json, Value};

pub fn updating() -> bool {
    std::env::var_os("UPDATE_GOLDEN").is_some_and(|v| v != "0" && !v.is_empty())
}

/// Compares `values` against `dir/name.json` to relative tolerance `rel_tol`
/// (absolute below `1e-14`), or rewrites the file when `update` is set.
/// Returns a description of every mismatch.
pub fn check(
    dir: &Path,
    name: &str,
    hash: &str,
    values: &BTreeMap<String, f64>,
    rel_tol: f64,
    update: bool,
) -> Result<(), String> {
    let path = dir.join(format!("{name}.json"));
    if update {
        let doc = json!({ "config_hash": hash, "values": values });
        fs::create_dir_all(dir).map_err(|e| e.to_string())?;
        fs::write(&path, serde_json::to_string_pretty(&doc).unwrap() + "\n").map_err(|e| e.to_string())?;
        return Ok(());
    }
    let text = fs::read_to_string(&path)
        .map_err(|e| format!("{}: {e}; rerun with UPDATE_GOLDEN=1 to create it", path.display()))?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let pinned_hash = doc["config_hash"].as_str().unwrap_or("");
    if pinned_hash != hash {
        return Err(format!("{name}: golden file belongs to config {pinned_hash}, run uses {hash}"));
    }
    let mut problems = Vec::new();
    for (key, &got) in values {
        match doc["values"][key].as_f64() {
            None => problems.push(format!("{key} missing")),
            Some(want) => {
                let gap = (got - want).abs();
                if gap > rel_tol * want.abs().max(1e-14) {
                    problems.push(format!("{key} = {got:e}, pinned {want:e}"));
                }
            }
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(format!("{name}: {}", problems.join("; ")))
    }
}
