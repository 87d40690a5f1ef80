//! `key = value` config files and flag/file/default resolution.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::CliError;

/// Values read from a config file, keyed by long flag name.
#[derive(Debug, Default)]
pub struct FileConfig {
    values: BTreeMap<String, (String, usize)>,
    source: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path, known: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text, known)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        cfg.source = Some(path.to_path_buf());
        Ok(cfg)
    }

    /// Blank lines and `#` comments are skipped. Keys may use `_` or `-`.
    pub fn parse(text: &str, known: &[String]) -> Result<Self, String> {
        let mut values = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split_once('#').map_or(raw, |(before, _)| before).trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {lineno}: expected `key = value`"))?;
            let key = normalize(key.trim());
            if !known.contains(&key) {
                return Err(format!("line {lineno}: unknown key `{key}`"));
            }
            if values.insert(key.clone(), (value.trim().to_string(), lineno)).is_some() {
                return Err(format!("line {lineno}: `{key}` set twice"));
            }
        }
        Ok(FileConfig {
            values,
            source: None,
        })
    }

    fn lookup<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        let Some((raw, line)) = self.values.get(key) else {
            return Ok(None);
        };
        raw.parse().map(Some).map_err(|e| {
            let origin = self
                .source
                .as_deref()
                .map_or_else(|| "config".into(), |p| p.display().to_string());
            CliError::Input(format!("{origin}: line {line}: {key}: {e}"))
        })
    }
}

fn normalize(key: &str) -> String {
    key.replace('_', "-")
}

/// Resolves each setting as flag, then file, then default, and records the
/// outcome for report headers.
pub struct Resolver<'a> {
    file: &'a FileConfig,
    header: Vec<(String, String)>,
}

impl<'a> Resolver<'a> {
    pub fn new(file: &'a FileConfig, command: &str) -> Self {
        Resolver {
            file,
            header: vec![("command".into(), command.into())],
        }
    }

    pub fn value<T: FromStr + Display>(
        &mut self,
        key: &str,
        flag: Option<T>,
        default: T,
    ) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        let v = match flag {
            Some(v) => v,
            None => self.file.lookup(key)?.unwrap_or(default),
        };
        self.header.push((key.into(), v.to_string()));
        Ok(v)
    }

    pub fn optional<T: FromStr + Display>(
        &mut self,
        key: &str,
        flag: Option<T>,
    ) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        let v = match flag {
            Some(v) => Some(v),
            None => self.file.lookup(key)?,
        };
        let shown = v.as_ref().map_or_else(|| "none".into(), T::to_string);
        self.header.push((key.into(), shown));
        Ok(v)
    }

    pub fn required<T: FromStr + Display>(
        &mut self,
        key: &str,
        flag: Option<T>,
    ) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        self.optional(key, flag)?
            .ok_or_else(|| CliError::Input(format!("missing required setting --{key}")))
    }

    pub fn path(&mut self, key: &str, flag: Option<PathBuf>) -> Result<PathBuf, CliError> {
        self.required::<DisplayPath>(key, flag.map(DisplayPath))
            .map(|p| p.0)
    }

    pub fn optional_path(
        &mut self,
        key: &str,
        flag: Option<PathBuf>,
    ) -> Result<Option<PathBuf>, CliError> {
        Ok(self.optional::<DisplayPath>(key, flag.map(DisplayPath))?.map(|p| p.0))
    }

    pub fn header(&self) -> &[(String, String)] {
        &self.header
    }
}

struct DisplayPath(PathBuf);

impl FromStr for DisplayPath {
    type Err = std::convert::Infallible;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(DisplayPath(PathBuf::from(s)))
    }
}

impl Display for DisplayPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0.display())
    }
}
