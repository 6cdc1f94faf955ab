use std::collections::BTreeSet;
use std::path::Path;

use serde::de::DeserializeOwned;

use super::dataset::DatasetArgs;
use super::path::PathArgs;
use super::select::SelectArgs;
use super::simulate::SimulateArgs;
use super::CliError;

/// Contents of a `--config` file. Keys mirror the long flag names.
#[derive(Debug, Default)]
pub struct FileConfig {
    pub simulate: SimulateArgs,
    pub select: SelectArgs,
    pub path: PathArgs,
}

/// Deserializes one table, collecting the keys `T` does not know.
fn section<T: DeserializeOwned>(value: &toml::Value, unknown: &mut BTreeSet<String>) -> Result<T, CliError> {
    serde_ignored::deserialize(value.clone(), |path| {
        unknown.insert(path.to_string());
    })
    .map_err(|e: toml::de::Error| CliError::Config(e.message().trim_end().to_string()))
}

/// A `select` or `path` table: its own keys plus the dataset keys.
fn with_dataset<T: DeserializeOwned>(
    name: &str,
    value: &toml::Value,
) -> Result<(T, DatasetArgs), CliError> {
    let mut own = BTreeSet::new();
    let mut data = BTreeSet::new();
    let args = section(value, &mut own)?;
    let ds = section(value, &mut data)?;
    let unknown: Vec<String> = own.intersection(&data).map(|k| format!("{name}.{k}")).collect();
    if !unknown.is_empty() {
        return Err(CliError::Config(format!("unknown keys: {}", unknown.join(", "))));
    }
    Ok((args, ds))
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(path.display().to_string(), e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Parses a config document; keys that match no option are rejected.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::Config(e.message().trim_end().to_string()))?;
        let mut cfg = FileConfig::default();
        for (name, value) in &table {
            match name.as_str() {
                "simulate" => {
                    let mut unknown = BTreeSet::new();
                    cfg.simulate = section(value, &mut unknown)?;
                    if !unknown.is_empty() {
                        let keys: Vec<String> = unknown.iter().map(|k| format!("simulate.{k}")).collect();
                        return Err(CliError::Config(format!("unknown keys: {}", keys.join(", "))));
                    }
                }
                "select" => {
                    let (args, data): (SelectArgs, _) = with_dataset(name, value)?;
                    cfg.select = SelectArgs { data, ..args };
                }
                "path" => {
                    let (args, data): (PathArgs, _) = with_dataset(name, value)?;
                    cfg.path = PathArgs { data, ..args };
                }
                other => return Err(CliError::Config(format!("unknown table [{other}]"))),
            }
        }
        Ok(cfg)
    }
}

/// Field-wise `flag.or(file)` for option fields and `flag || file` for
/// switches.
macro_rules! merge_fields {
    ($flags:expr, $file:expr; opt: $($o:ident),* ; switch: $($s:ident),* $(;)?) => {{
        let mut flags = $flags;
        let file = $file;
        $( flags.$o = flags.$o.or(file.$o); )*
        $( flags.$s = flags.$s || file.$s; )*
        flags
    }};
}
pub(crate) use merge_fields;
