//! Summaries and all-or-nothing output writing.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};
use tempfile::NamedTempFile;

use crate::error::{CliError, Result};

/// Ordered key/value summary printed after a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    fields: Map<String, Value>,
}

impl Summary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.fields.insert(key.to_string(), value.into());
        self
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.fields.get(key)
    }

    /// One `key: value` line per field; arrays are space-joined.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.fields {
            out.push_str(k);
            out.push_str(": ");
            out.push_str(&scalar_text(v));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(&Value::Object(self.fields.clone())).expect("summary serializes");
        s.push('\n');
        s
    }
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(scalar_text).collect::<Vec<_>>().join(" "),
        Value::Null => "none".into(),
        other => other.to_string(),
    }
}

/// Files produced by a command, held in memory until every computation
/// has succeeded.
#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
}

fn parent_dir(path: &Path) -> &Path {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}

impl Outputs {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, path: PathBuf, bytes: impl Into<Vec<u8>>) {
        self.files.push((path, bytes.into()));
    }

    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        self.files.iter().map(|(p, _)| p.as_path())
    }

    /// Stages every file next to its destination, then renames them into
    /// place. A failure while staging leaves no destination touched.
    pub fn commit(self) -> Result<()> {
        let mut staged = Vec::with_capacity(self.files.len());
        for (path, bytes) in self.files {
            let mut tmp = NamedTempFile::new_in(parent_dir(&path)).map_err(|e| CliError::write_failed(&path, e))?;
            tmp.write_all(&bytes)
                .and_then(|_| tmp.as_file().sync_all())
                .map_err(|e| CliError::write_failed(&path, e))?;
            staged.push((tmp, path));
        }
        for (tmp, path) in staged {
            tmp.persist(&path).map_err(|e| CliError::write_failed(&path, e.error))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_and_json_keep_order() {
        let mut s = Summary::new();
        s.put("dims", vec![191, 236, 171, 1]).put("format", "analyze75").put("chi", 2);
        assert_eq!(s.to_text(), "dims: 191 236 171 1\nformat: analyze75\nchi: 2\n");
        assert_eq!(s.to_json(), "{\"dims\":[191,236,171,1],\"format\":\"analyze75\",\"chi\":2}\n");
    }

    #[test]
    fn failed_staging_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("a.txt");
        let mut out = Outputs::new();
        out.add(good.clone(), "a");
        out.add(dir.path().join("missing/b.txt"), "b");
        assert!(out.commit().is_err());
        assert!(!good.exists());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn commit_writes_all() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = Outputs::new();
        out.add(dir.path().join("a.txt"), "a");
        out.add(dir.path().join("b.bin"), vec![1u8, 2]);
        out.commit().unwrap();
        assert_eq!(std::fs::read(dir.path().join("b.bin")).unwrap(), [1, 2]);
    }
}
