//! Config loading, shared config pieces and output writers.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use qsb_core::io::write_table;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

/// Seed used when neither `--seed` nor the config gives one.
pub const DEFAULT_SEED: u64 = 42;

pub fn read_json_value(path: &Path) -> CliResult<Value> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(path, e.to_string()))
}

/// Deserializes with the JSON path of the offending field in the message.
pub fn from_value<T: DeserializeOwned>(path: &Path, value: Value) -> CliResult<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let at = e.path().to_string();
        CliError::config(path, format!("at `{at}`: {}", e.inner()))
    })
}

pub fn load_config<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    from_value(path, read_json_value(path)?)
}

/// Overlays the keys of `overrides` onto `base`, recursing into objects.
pub fn merge(base: &mut Value, overrides: Value) {
    match (base, overrides) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

/// Resolves `p` against the directory of the config file.
pub fn resolve(config_path: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        return p.to_path_buf();
    }
    config_path.parent().map_or_else(|| p.to_path_buf(), |d| d.join(p))
}

/// `--seed` wins over the config seed, which wins over the default.
pub fn effective_seed(flag: Option<u64>, config: Option<u64>) -> u64 {
    flag.or(config).unwrap_or(DEFAULT_SEED)
}

/// A time grid given as a point count on `[0, 1]` or as explicit values.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum TimeGrid {
    Count(usize),
    Values(Vec<f64>),
}

impl Default for TimeGrid {
    fn default() -> Self {
        TimeGrid::Count(101)
    }
}

impl TimeGrid {
    pub fn values(&self, config_path: &Path) -> CliResult<Vec<f64>> {
        let v = match self {
            TimeGrid::Count(n) if *n >= 2 => (0..*n).map(|i| i as f64 / (*n - 1) as f64).collect(),
            TimeGrid::Count(n) => {
                return Err(CliError::config(
                    config_path,
                    format!("t_grid needs at least 2 points, got {n}"),
                ))
            }
            TimeGrid::Values(v) => v.clone(),
        };
        if v.is_empty() || v.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(CliError::config(
                config_path,
                "t_grid values must be nonempty and lie in [0, 1]",
            ));
        }
        Ok(v)
    }
}

pub struct OutDir(PathBuf);

impl OutDir {
    pub fn create(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self(dir.to_path_buf()))
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }

    pub fn table(&self, name: &str, (header, rows): (Vec<String>, Vec<Vec<String>>)) -> CliResult<()> {
        let path = self.path(name);
        let file = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        write_table(BufWriter::new(file), &header, &rows)?;
        Ok(())
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> CliResult<()> {
        let text = serde_json::to_string_pretty(value).expect("output values serialize");
        self.text(name, &text)
    }

    pub fn text(&self, name: &str, text: &str) -> CliResult<()> {
        let path = self.path(name);
        let mut file = BufWriter::new(fs::File::create(&path).map_err(|e| CliError::io(&path, e))?);
        file.write_all(text.as_bytes())
            .and_then(|_| file.write_all(b"\n"))
            .and_then(|_| file.flush())
            .map_err(|e| CliError::io(&path, e))
    }
}

/// Prints a JSON summary on stdout.
pub fn print_summary(value: &Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("summary serializes"));
}

/// Returns an error listing `failures` when nonempty.
pub fn check(failures: Vec<String>) -> CliResult<()> {
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failures))
    }
}
