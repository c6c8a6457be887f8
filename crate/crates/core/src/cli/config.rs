//! Flat sectioned key-value configuration files.
//!
//! ```text
//! # comment
//! [run]
//! kind = balayage
//! seed = 7
//!
//! [balayage]
//! points = 0 0; 1 0 2
//! h = 0.02
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. A section header is
//! `[name]` on its own line; every other line is `key = value`, where the value
//! runs to the end of the line and is trimmed. Keys must be unique within a
//! section and every key must follow a section header.

use crate::error::{Error, Result};

/// One `key = value` line, with positions for error reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
    /// 1-based column of the first value character.
    pub value_column: usize,
    pub key_column: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

impl Section {
    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigFile {
    pub sections: Vec<Section>,
}

impl ConfigFile {
    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }
}

pub(crate) fn parse_error<T>(line: usize, column: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Parse {
        line,
        column,
        message: message.into(),
    })
}

fn valid_name(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

pub fn parse_config(text: &str) -> Result<ConfigFile> {
    let mut cfg = ConfigFile::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let indent = raw.len() - raw.trim_start().len();
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        if let Some(rest) = body.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                return parse_error(
                    line,
                    indent + body.len() + 1,
                    "expected ']' to close the section header",
                );
            };
            let name = name.trim();
            if !valid_name(name) {
                return parse_error(line, indent + 2, format!("invalid section name '{name}'"));
            }
            if cfg.section(name).is_some() {
                return parse_error(line, indent + 2, format!("duplicate section [{name}]"));
            }
            cfg.sections.push(Section {
                name: name.to_string(),
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let Some(eq) = raw.find('=') else {
            return parse_error(line, indent + 1, "expected 'key = value' or '[section]'");
        };
        let key = raw[..eq].trim();
        if !valid_name(key) {
            return parse_error(line, indent + 1, format!("invalid key '{key}'"));
        }
        let after = &raw[eq + 1..];
        let value = after.trim();
        let value_column = eq + 2 + (after.len() - after.trim_start().len());
        let Some(section) = cfg.sections.last_mut() else {
            return parse_error(
                line,
                indent + 1,
                format!("key '{key}' appears before any section header"),
            );
        };
        if section.get(key).is_some() {
            return parse_error(
                line,
                indent + 1,
                format!("duplicate key '{key}' in [{}]", section.name),
            );
        }
        section.entries.push(Entry {
            key: key.to_string(),
            value: value.to_string(),
            line,
            value_column,
            key_column: indent + 1,
        });
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_values() {
        let cfg = parse_config(
            "# top\n[run]\nkind = sample\n\n[sample]\n  n =  16 \nholes = 1 2 3; 4 5 6\n",
        )
        .unwrap();
        assert_eq!(cfg.sections.len(), 2);
        let s = cfg.section("sample").unwrap();
        let n = s.get("n").unwrap();
        assert_eq!(
            (n.value.as_str(), n.line, n.value_column, n.key_column),
            ("16", 6, 8, 3)
        );
        assert_eq!(s.get("holes").unwrap().value, "1 2 3; 4 5 6");
    }

    #[test]
    fn reports_positions() {
        let cases = [
            ("[run\n", 1, 5),
            ("kind = x\n", 1, 1),
            ("[run]\njust words\n", 2, 1),
            ("[run]\na = 1\na = 2\n", 3, 1),
            ("[run]\n[run]\n", 2, 2),
            ("[run]\n  bad key = 1\n", 2, 3),
        ];
        for (text, line, column) in cases {
            match parse_config(text) {
                Err(Error::Parse {
                    line: l, column: c, ..
                }) => assert_eq!((l, c), (line, column), "{text:?}"),
                other => panic!("{text:?} gave {other:?}"),
            }
        }
    }

    #[test]
    fn empty_value_is_allowed() {
        let cfg = parse_config("[a]\nk =\n").unwrap();
        assert_eq!(cfg.section("a").unwrap().get("k").unwrap().value, "");
    }
}
