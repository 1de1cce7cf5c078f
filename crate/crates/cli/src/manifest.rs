//! Run manifests: flat `key = value` files whose keys mirror the long flags.
//!
//! Blank lines and lines starting with `#` are ignored. Keys may use `-` or
//! `_`. The `command` key names the subcommand when none is given on the
//! command line. A value given as a flag always wins over the manifest.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{CliError, Result};

/// Seed used for any stochastic step when none is configured.
pub const DEFAULT_SEED: u64 = 20_100_601;

/// Parsed manifest file contents.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ManifestFile {
    values: BTreeMap<String, String>,
}

fn normalize_key(key: &str) -> String {
    key.trim().replace('_', "-")
}

impl ManifestFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Parse(format!("manifest line {}: expected 'key = value'", i + 1)))?;
            let key = normalize_key(k);
            if key.is_empty() {
                return Err(CliError::Parse(format!("manifest line {}: empty key", i + 1)));
            }
            if values.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(CliError::Parse(format!("manifest line {}: duplicate key '{key}'", i + 1)));
            }
        }
        Ok(Self { values })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }
}

/// Fully resolved description of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<PathBuf>,
    pub params: BTreeMap<String, String>,
    pub outputs: Vec<PathBuf>,
    pub seed: u64,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            inputs: Vec::new(),
            params: BTreeMap::new(),
            outputs: Vec::new(),
            seed: DEFAULT_SEED,
        }
    }

    /// Every input path must exist.
    pub fn validate(&self) -> Result<()> {
        match self.inputs.iter().find(|p| !p.exists()) {
            Some(p) => Err(CliError::missing_input(p)),
            None => Ok(()),
        }
    }
}

/// Merges flag values with manifest values and records the result.
pub struct Resolver<'a> {
    file: &'a ManifestFile,
    /// Manifest paths are relative to the manifest's directory.
    base: PathBuf,
    used: BTreeSet<String>,
    pub run: RunManifest,
}

impl<'a> Resolver<'a> {
    pub fn new(command: &str, file: &'a ManifestFile, base: PathBuf) -> Result<Self> {
        let mut run = RunManifest::new(command);
        if let Some(seed) = file.get("seed") {
            run.seed = seed
                .parse()
                .map_err(|e| CliError::Usage(format!("invalid value for 'seed': {e}")))?;
        }
        Ok(Self {
            file,
            base,
            used: BTreeSet::new(),
            run,
        })
    }

    fn lookup(&mut self, key: &str) -> Option<&'a str> {
        self.used.insert(key.to_string());
        self.file.get(key)
    }

    fn lookup_parsed<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.lookup(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::Usage(format!("invalid value for '{key}': {e}")))
            })
            .transpose()
    }

    /// Optional scalar parameter.
    pub fn param<T: FromStr + ToString>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        let v = match flag {
            Some(v) => Some(v),
            None => self.lookup_parsed(key)?,
        };
        if let Some(v) = &v {
            self.run.params.insert(key.to_string(), v.to_string());
        }
        Ok(v)
    }

    pub fn param_or<T: FromStr + ToString>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let v = self.param(key, flag)?.unwrap_or(default);
        self.run.params.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    pub fn switch(&mut self, key: &str, flag: bool) -> Result<bool> {
        let v = flag || self.lookup_parsed::<bool>(key)?.unwrap_or(false);
        self.run.params.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    fn path_value(&mut self, key: &str, flag: Option<PathBuf>) -> Option<PathBuf> {
        let from_file = self.lookup(key).map(|v| self.base.join(v));
        flag.or(from_file)
    }

    pub fn input(&mut self, key: &str, flag: Option<PathBuf>) -> Result<PathBuf> {
        let p = self
            .path_value(key, flag)
            .ok_or_else(|| CliError::Usage(format!("missing required input '{key}'")))?;
        self.run.inputs.push(p.clone());
        Ok(p)
    }

    pub fn optional_input(&mut self, key: &str, flag: Option<PathBuf>) -> Option<PathBuf> {
        let p = self.path_value(key, flag)?;
        self.run.inputs.push(p.clone());
        Some(p)
    }

    /// Whitespace-separated list in the manifest.
    pub fn inputs(&mut self, key: &str, flag: Vec<PathBuf>) -> Vec<PathBuf> {
        let from_file: Vec<PathBuf> = self
            .lookup(key)
            .map(|v| v.split_whitespace().map(|p| self.base.join(p)).collect())
            .unwrap_or_default();
        let list = if flag.is_empty() { from_file } else { flag };
        self.run.inputs.extend(list.iter().cloned());
        list
    }

    pub fn output(&mut self, key: &str, flag: Option<PathBuf>) -> Result<PathBuf> {
        let p = self
            .path_value(key, flag)
            .ok_or_else(|| CliError::Usage(format!("missing required output '{key}'")))?;
        self.run.outputs.push(p.clone());
        Ok(p)
    }

    pub fn optional_output(&mut self, key: &str, flag: Option<PathBuf>) -> Option<PathBuf> {
        let p = self.path_value(key, flag)?;
        self.run.outputs.push(p.clone());
        Some(p)
    }

    /// Rejects manifest keys the command never asked for, checks inputs, and
    /// hands back the resolved manifest.
    pub fn finish(self) -> Result<RunManifest> {
        if let Some(k) = self
            .file
            .keys()
            .find(|k| !matches!(*k, "command" | "seed") && !self.used.contains(*k))
        {
            return Err(CliError::Usage(format!(
                "manifest key '{k}' is not used by '{}'",
                self.run.command
            )));
        }
        self.run.validate()?;
        Ok(self.run)
    }
}
