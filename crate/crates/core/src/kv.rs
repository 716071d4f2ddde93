//! Minimal `key = value` text documents (store metadata, synthetic specs,
//! CLI config files). Blank lines and `#` comments are ignored; keys may repeat.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvDoc {
    entries: Vec<(String, String)>,
}

impl KvDoc {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("line {}: expected key = value", lineno + 1)))?;
            let key = k.trim();
            if key.is_empty() {
                return Err(Error::Format(format!("line {}: empty key", lineno + 1)));
            }
            entries.push((key.to_string(), v.trim().to_string()));
        }
        Ok(Self { entries })
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    /// Last value for `key`.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.entries.iter().filter(move |(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(k, _)| k.as_str())
    }

    pub fn parse_value<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|_| Error::Format(format!("bad value for {key}: {v:?}"))))
            .transpose()
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.parse_value(key)?.ok_or_else(|| Error::Format(format!("missing key {key}")))
    }

    /// Whitespace- or comma-separated triple.
    pub fn triple<T: FromStr + Copy>(&self, key: &str) -> Result<Option<[T; 3]>> {
        self.get(key).map(|v| parse_triple(key, v)).transpose()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

pub fn parse_triple<T: FromStr + Copy>(key: &str, v: &str) -> Result<[T; 3]> {
    let parts: Vec<T> = v
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| Error::Format(format!("bad value for {key}: {v:?}"))))
        .collect::<Result<_>>()?;
    match parts.as_slice() {
        [a, b, c] => Ok([*a, *b, *c]),
        _ => Err(Error::Format(format!("{key} needs three values, got {v:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_repeated_keys_and_comments() {
        let doc = KvDoc::parse("# header\ndims = 4 5 6\ncut = 0 3 2\n\ncut = 1 9 1 # trailing\n").unwrap();
        assert_eq!(doc.triple::<usize>("dims").unwrap(), Some([4, 5, 6]));
        assert_eq!(doc.get_all("cut").collect::<Vec<_>>(), vec!["0 3 2", "1 9 1"]);
        assert!(KvDoc::parse("novalue\n").is_err());
    }
}
