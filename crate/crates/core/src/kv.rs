//! Flat `key = value` text blocks used by config files, study specs and reports.
//!
//! Format: one `key = value` pair per line, `#` starts a comment, blank lines
//! ignored. Keys are case-sensitive. Values keep everything after the first
//! `=` (trimmed), so paths with spaces work without quoting.

use std::collections::BTreeMap;

#[derive(Debug, Clone, Default)]
pub struct KvBlock {
    entries: BTreeMap<String, String>,
}

impl KvBlock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(format!("line {}: expected `key = value`", idx + 1));
            };
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(format!("line {}: empty key", idx + 1));
            }
            entries.insert(key, value.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str, String> {
        self.get(key).ok_or_else(|| format!("missing key `{key}`"))
    }

    pub fn parse_as<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| format!("key `{key}`: cannot parse `{raw}`")),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_render_round_trip() {
        let text = "# comment\na = 1\nb = two words\n\nc=3\n";
        let kv = KvBlock::parse(text).unwrap();
        assert_eq!(kv.get("a"), Some("1"));
        assert_eq!(kv.get("b"), Some("two words"));
        assert_eq!(kv.get("c"), Some("3"));
        let again = KvBlock::parse(&kv.render()).unwrap();
        assert_eq!(again.get("b"), Some("two words"));
    }

    #[test]
    fn rejects_line_without_separator() {
        assert!(KvBlock::parse("just words\n").is_err());
    }
}
