//! Comma-separated text tables with `#` comment lines.
//!
//! Layout: any number of comment lines, one header line, one record per line.
//! Comments of the form `# tag: key=value key=value` carry metadata; all other
//! comments are kept verbatim as notes. Floats are written with 17
//! significant digits so a save/load round trip is exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    /// Comment lines without the leading `# `.
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub records: Vec<Record>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    /// 1-based line number in the source file (0 for records built in memory).
    pub line: usize,
    pub fields: Vec<String>,
}

/// Formats a float so that parsing it back yields the same bits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Renders a metadata comment `tag: key=value ...`.
pub fn meta_comment<'a>(tag: &str, pairs: impl IntoIterator<Item = (&'a str, f64)>) -> String {
    let mut s = format!("{tag}:");
    for (k, v) in pairs {
        let _ = write!(s, " {k}={}", fmt_f64(v));
    }
    s
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            comments: Vec::new(),
            header: header.iter().map(|h| h.to_string()).collect(),
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, fields: Vec<String>) {
        debug_assert_eq!(fields.len(), self.header.len());
        self.records.push(Record { line: 0, fields });
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        out.push_str(&self.header.join(","));
        out.push('\n');
        for r in &self.records {
            out.push_str(&r.fields.join(","));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut table = Table::default();
        let mut have_header = false;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let raw = raw.strip_suffix('\r').unwrap_or(raw);
            if let Some(c) = raw.strip_prefix('#') {
                if have_header {
                    return Err(parse_err(line, 1, "comment after header"));
                }
                table.comments.push(c.strip_prefix(' ').unwrap_or(c).to_string());
                continue;
            }
            if raw.is_empty() {
                continue;
            }
            let fields: Vec<String> = raw.split(',').map(|f| f.trim().to_string()).collect();
            if !have_header {
                table.header = fields;
                have_header = true;
                continue;
            }
            if fields.len() != table.header.len() {
                let column = fields.len().min(table.header.len()) + 1;
                return Err(parse_err(
                    line,
                    column,
                    &format!("expected {} fields, found {}", table.header.len(), fields.len()),
                ));
            }
            table.records.push(Record { line, fields });
        }
        if !have_header {
            return Err(parse_err(text.lines().count() + 1, 1, "missing header row"));
        }
        Ok(table)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Fails unless the header is exactly `expected`.
    pub fn expect_header(&self, expected: &[&str]) -> Result<()> {
        let line = self.comments.len() + 1;
        for (i, want) in expected.iter().enumerate() {
            match self.header.get(i) {
                Some(h) if h == want => {}
                Some(h) => return Err(parse_err(line, i + 1, &format!("expected column `{want}`, found `{h}`"))),
                None => return Err(parse_err(line, i + 1, &format!("missing column `{want}`"))),
            }
        }
        if self.header.len() > expected.len() {
            let extra = &self.header[expected.len()];
            return Err(parse_err(line, expected.len() + 1, &format!("unexpected column `{extra}`")));
        }
        Ok(())
    }

    /// Metadata for `tag`, with the comment's line number, if present.
    pub fn meta(&self, tag: &str) -> Result<Option<(usize, BTreeMap<String, f64>)>> {
        let prefix = format!("{tag}:");
        for (i, c) in self.comments.iter().enumerate() {
            let Some(rest) = c.strip_prefix(&prefix) else {
                continue;
            };
            let line = i + 1;
            let mut map = BTreeMap::new();
            for item in rest.split_whitespace() {
                let (k, v) = item
                    .split_once('=')
                    .ok_or_else(|| parse_err(line, 1, &format!("`{item}` is not key=value")))?;
                let v: f64 = v
                    .parse()
                    .map_err(|_| parse_err(line, 1, &format!("`{k}` has non-numeric value `{v}`")))?;
                map.insert(k.to_string(), v);
            }
            return Ok(Some((line, map)));
        }
        Ok(None)
    }

    /// Comments that are not metadata for any of `tags`.
    pub fn notes(&self, tags: &[&str]) -> Vec<String> {
        self.comments
            .iter()
            .filter(|c| !tags.iter().any(|t| c.starts_with(&format!("{t}:"))))
            .cloned()
            .collect()
    }
}

impl Record {
    pub fn f64(&self, column: usize) -> Result<f64> {
        let s = &self.fields[column];
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(parse_err(self.line, column + 1, &format!("`{s}` is not a finite number"))),
        }
    }

    pub fn str(&self, column: usize) -> &str {
        &self.fields[column]
    }

    pub fn error(&self, column: usize, message: &str) -> Error {
        parse_err(self.line, column + 1, message)
    }
}

pub(crate) fn parse_err(line: usize, column: usize, message: &str) -> Error {
    Error::Parse {
        line,
        column,
        message: message.to_string(),
    }
}

/// Reads required keys from a metadata map.
pub(crate) fn meta_values<const N: usize>(
    line: usize,
    map: &BTreeMap<String, f64>,
    keys: [&str; N],
) -> Result<[f64; N]> {
    let mut out = [0.0; N];
    for (slot, key) in out.iter_mut().zip(keys) {
        *slot = *map
            .get(key)
            .ok_or_else(|| parse_err(line, 1, &format!("metadata is missing `{key}`")))?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_everything() {
        let mut t = Table::new(&["a", "b"]);
        t.comments.push("made by hand".into());
        t.comments.push(meta_comment("scale", [("x", 0.1), ("y", 1e-300)]));
        t.push(vec![fmt_f64(0.1 + 0.2), "tag".into()]);
        let back = Table::parse(&t.to_text()).unwrap();
        assert_eq!(back.comments, t.comments);
        assert_eq!(back.header, t.header);
        assert_eq!(back.records[0].f64(0).unwrap(), 0.1 + 0.2);
        assert_eq!(back.records[0].line, 4);
        let (_, meta) = back.meta("scale").unwrap().unwrap();
        assert_eq!(meta["y"], 1e-300);
        assert_eq!(back.notes(&["scale"]), vec!["made by hand".to_string()]);
    }

    #[test]
    fn errors_name_line_and_column() {
        let text = "a,b\n1,2\n3,oops\n";
        let t = Table::parse(text).unwrap();
        match t.records[1].f64(1) {
            Err(Error::Parse { line: 3, column: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        match Table::parse("a,b\n1,2,3\n") {
            Err(Error::Parse { line: 2, column: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
        match Table::parse("a,c\n").unwrap().expect_header(&["a", "b"]) {
            Err(Error::Parse { line: 1, column: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(Table::parse("# only a comment\n").is_err());
    }

    #[test]
    fn tolerates_crlf() {
        let t = Table::parse("a,b\r\n1,2\r\n").unwrap();
        assert_eq!(t.records[0].f64(1).unwrap(), 2.0);
    }
}
