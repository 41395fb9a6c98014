//! `key = value` configuration documents, one entry per line, `#` comments.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, (usize, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected `key = value`, found {line:?}"),
                });
            };
            let key = key.trim().to_string();
            if entries
                .insert(key.clone(), (i + 1, value.trim().to_string()))
                .is_some()
            {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("duplicate key {key:?}"),
                });
            }
        }
        Ok(KeyValues { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|_| Error::Parse {
                line: *line,
                message: format!("invalid value {v:?} for {key}"),
            }),
        }
    }

    /// Comma-separated list value.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split(',')
                .map(|item| {
                    item.trim().parse().map_err(|_| Error::Parse {
                        line: *line,
                        message: format!("invalid list item {item:?} for {key}"),
                    })
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    /// Rejects keys outside `known`.
    pub fn check_known(&self, known: impl Fn(&str) -> bool) -> Result<()> {
        match self.entries.iter().find(|(k, _)| !known(k)) {
            Some((k, (line, _))) => Err(Error::Parse {
                line: *line,
                message: format!("unknown key {k:?}"),
            }),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_values_lists_comments() {
        let kv = KeyValues::parse(
            "# header\nseed = 7\n\nphase.1.duration = 60, 120  # seconds\nname=x\n",
        )
        .unwrap();
        assert_eq!(kv.get::<u64>("seed").unwrap(), Some(7));
        assert_eq!(
            kv.get_list::<usize>("phase.1.duration").unwrap(),
            Some(vec![60, 120])
        );
        assert_eq!(kv.raw("name"), Some("x"));
        assert_eq!(kv.get::<u64>("missing").unwrap(), None);
        assert!(kv.get::<u64>("name").is_err());
        assert!(kv.check_known(|k| k != "name").is_err());
    }

    #[test]
    fn rejects_malformed() {
        assert!(KeyValues::parse("seed 7").is_err());
        assert!(KeyValues::parse("a = 1\na = 2").is_err());
    }
}
