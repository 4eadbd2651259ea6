// SPDX-License-Identifier: Apache-2.0

//! Line-oriented `key = value` text with optional `[section]` headers and
//! `#` comments. Device parameter files, library overrides, variation specs
//! and the corpus manifest all share this format.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KvEntry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KvSection {
    /// `None` for entries that precede the first header.
    pub name: Option<String>,
    pub line: usize,
    pub entries: Vec<KvEntry>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KvDocument {
    pub sections: Vec<KvSection>,
}

impl KvSection {
    pub fn get(&self, key: &str) -> Option<&KvEntry> {
        self.entries.iter().find(|e| e.key == key)
    }

    pub fn parse_value<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::parse(e.line, format!("bad value `{}` for `{}`", e.value, key))),
        }
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.parse_value(key)?.ok_or_else(|| {
            let name = self.name.as_deref().unwrap_or("<top>");
            Error::parse(self.line, format!("section [{name}] is missing `{key}`"))
        })
    }

    /// Errors on any key not in `known`.
    pub fn check_keys(&self, known: &[&str]) -> Result<()> {
        for e in &self.entries {
            if !known.contains(&e.key.as_str()) {
                return Err(Error::parse(e.line, format!("unknown key `{}`", e.key)));
            }
        }
        Ok(())
    }
}

impl KvDocument {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections = vec![KvSection {
            name: None,
            line: 0,
            entries: Vec::new(),
        }];
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::parse(line_no, "unterminated section header"))?
                    .trim();
                if name.is_empty() {
                    return Err(Error::parse(line_no, "empty section name"));
                }
                sections.push(KvSection {
                    name: Some(name.to_string()),
                    line: line_no,
                    entries: Vec::new(),
                });
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(line_no, format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(Error::parse(line_no, "empty key"));
            }
            let section = sections.last_mut().expect("at least one section");
            if section.get(key).is_some() {
                return Err(Error::parse(line_no, format!("duplicate key `{key}`")));
            }
            section.entries.push(KvEntry {
                key: key.to_string(),
                value: value.to_string(),
                line: line_no,
            });
        }
        if sections[0].entries.is_empty() {
            sections.remove(0);
        }
        Ok(KvDocument { sections })
    }

    pub fn section(&self, name: &str) -> Option<&KvSection> {
        self.sections.iter().find(|s| s.name.as_deref() == Some(name))
    }

    pub fn top(&self) -> Option<&KvSection> {
        self.sections.iter().find(|s| s.name.is_none())
    }
}

/// Accumulates `key = value` lines. Floats are written with the shortest
/// representation that round-trips.
#[derive(Debug, Default)]
pub struct KvWriter {
    out: String,
}

impl KvWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn comment(&mut self, text: &str) -> &mut Self {
        for l in text.lines() {
            let _ = writeln!(self.out, "# {l}");
        }
        self
    }

    pub fn section(&mut self, name: &str) -> &mut Self {
        if !self.out.is_empty() && !self.out.ends_with("\n\n") {
            self.out.push('\n');
        }
        let _ = writeln!(self.out, "[{name}]");
        self
    }

    pub fn entry(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        let _ = writeln!(self.out, "{key} = {value}");
        self
    }

    pub fn float(&mut self, key: &str, value: f64) -> &mut Self {
        let _ = writeln!(self.out, "{key} = {value:e}");
        self
    }

    pub fn finish(self) -> String {
        self.out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_comments() {
        let doc = KvDocument::parse("# hdr\na = 1\n[nmos]\nn = 1.5 # swing\n\n[pmos]\nn=1.7\n").unwrap();
        assert_eq!(doc.sections.len(), 3);
        assert_eq!(doc.top().unwrap().require::<i32>("a").unwrap(), 1);
        assert_eq!(doc.section("nmos").unwrap().require::<f64>("n").unwrap(), 1.5);
        assert_eq!(doc.section("pmos").unwrap().require::<f64>("n").unwrap(), 1.7);
    }

    #[test]
    fn errors_carry_line_numbers() {
        match KvDocument::parse("a = 1\nbogus line\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match KvDocument::parse("[x]\na=1\na=2\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(KvDocument::parse("[x\n").is_err());
    }

    #[test]
    fn float_round_trip() {
        let mut w = KvWriter::new();
        w.section("s").float("v", 1.234_567_890_123_456_7e-9);
        let doc = KvDocument::parse(&w.finish()).unwrap();
        let v: f64 = doc.section("s").unwrap().require("v").unwrap();
        assert_eq!(v, 1.234_567_890_123_456_7e-9);
    }
}
