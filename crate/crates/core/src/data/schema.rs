//! Dataset schemas and their plain-text config format.
//!
//! A schema file is a list of `key = value` lines. Blank lines and lines
//! starting with `#` are ignored. Multi-valued entries separate items with
//! `|`. See `docs/schema-format.md` for the full grammar.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Categorical,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
}

/// Which raw cell values of a sensitive column count as privileged.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PrivilegedRule {
    /// Any of the listed raw values.
    OneOf(Vec<String>),
    /// Numeric cell `>= threshold`.
    AtLeast(f64),
    /// Numeric cell `> threshold`.
    Above(f64),
    /// Numeric cell `<= threshold`.
    AtMost(f64),
    /// Numeric cell `< threshold`.
    Below(f64),
}

impl PrivilegedRule {
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        let threshold = |rest: &str| {
            rest.trim()
                .parse::<f64>()
                .map_err(|_| Error::Schema(format!("bad numeric threshold in `{t}`")))
        };
        if let Some(rest) = t.strip_prefix(">=") {
            Ok(Self::AtLeast(threshold(rest)?))
        } else if let Some(rest) = t.strip_prefix("<=") {
            Ok(Self::AtMost(threshold(rest)?))
        } else if let Some(rest) = t.strip_prefix('>').filter(|r| r.trim().parse::<f64>().is_ok()) {
            Ok(Self::Above(threshold(rest)?))
        } else if let Some(rest) = t.strip_prefix('<').filter(|r| r.trim().parse::<f64>().is_ok()) {
            Ok(Self::Below(threshold(rest)?))
        } else {
            let values = split_list(t);
            if values.is_empty() {
                return Err(Error::Schema("empty privileged value list".into()));
            }
            Ok(Self::OneOf(values))
        }
    }

    pub fn is_threshold(&self) -> bool {
        !matches!(self, Self::OneOf(_))
    }

    pub fn matches_text(&self, raw: &str) -> bool {
        match self {
            Self::OneOf(values) => values.iter().any(|v| v == raw),
            _ => raw.trim().parse::<f64>().is_ok_and(|x| self.matches_number(x)),
        }
    }

    pub fn matches_number(&self, x: f64) -> bool {
        match self {
            Self::OneOf(values) => values.iter().any(|v| v.parse::<f64>().is_ok_and(|y| y == x)),
            Self::AtLeast(t) => x >= *t,
            Self::Above(t) => x > *t,
            Self::AtMost(t) => x <= *t,
            Self::Below(t) => x < *t,
        }
    }

    fn to_text(&self) -> String {
        match self {
            Self::OneOf(values) => values.join(" | "),
            Self::AtLeast(t) => format!(">={t}"),
            Self::Above(t) => format!(">{t}"),
            Self::AtMost(t) => format!("<={t}"),
            Self::Below(t) => format!("<{t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitiveSpec {
    pub column: String,
    pub privileged: PrivilegedRule,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schema {
    pub name: String,
    pub columns: Vec<ColumnSpec>,
    pub label_column: String,
    /// Raw label values mapped to the favorable label (1).
    pub favorable: Vec<String>,
    /// Raw label values mapped to 0. When empty, any single non-favorable
    /// value is accepted.
    pub unfavorable: Vec<String>,
    pub sensitive: Vec<SensitiveSpec>,
    pub strata_columns: Vec<String>,
    pub delimiter: u8,
    pub has_header: bool,
    pub missing_tokens: Vec<String>,
}

fn split_list(value: &str) -> Vec<String> {
    value
        .split('|')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_owned)
        .collect()
}

fn parse_delimiter(value: &str) -> Result<u8> {
    match value {
        "comma" | "," => Ok(b','),
        "semicolon" | ";" => Ok(b';'),
        "tab" | "\\t" => Ok(b'\t'),
        "space" => Ok(b' '),
        s if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        s => Err(Error::Schema(format!("unsupported delimiter `{s}`"))),
    }
}

fn parse_bool(value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        s => Err(Error::Schema(format!("expected true/false, got `{s}`"))),
    }
}

impl Schema {
    pub fn parse(text: &str) -> Result<Self> {
        let mut name = String::from("dataset");
        let mut columns = Vec::new();
        let mut label = None;
        let mut favorable = Vec::new();
        let mut unfavorable = Vec::new();
        let mut sensitive = Vec::new();
        let mut strata = Vec::new();
        let mut delimiter = b',';
        let mut has_header = true;
        let mut missing = vec![String::new(), "?".to_owned(), "NA".to_owned()];

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Schema(format!("line {}: expected `key = value`", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "name" => name = value.to_owned(),
                "label" => label = Some(value.to_owned()),
                "favorable" => favorable = split_list(value),
                "unfavorable" => unfavorable = split_list(value),
                "strata" => {
                    strata = value
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(str::to_owned)
                        .collect()
                }
                "delimiter" => delimiter = parse_delimiter(value)?,
                "header" => has_header = parse_bool(value)?,
                // `missing` keeps the empty cell as missing in addition to the listed tokens
                "missing" => {
                    missing = split_list(value);
                    missing.insert(0, String::new());
                }
                "column" => {
                    let mut parts = value.split_whitespace();
                    let (Some(col), Some(kind), None) = (parts.next(), parts.next(), parts.next()) else {
                        return Err(Error::Schema(format!(
                            "line {}: expected `column = <name> <categorical|numeric>`",
                            lineno + 1
                        )));
                    };
                    let kind = match kind {
                        "categorical" | "cat" => ColumnKind::Categorical,
                        "numeric" | "num" => ColumnKind::Numeric,
                        k => return Err(Error::Schema(format!("line {}: unknown column kind `{k}`", lineno + 1))),
                    };
                    columns.push(ColumnSpec {
                        name: col.to_owned(),
                        kind,
                    });
                }
                "sensitive" => {
                    let (col, rule) = value.split_once(':').ok_or_else(|| {
                        Error::Schema(format!(
                            "line {}: expected `sensitive = <column>: <privileged>`",
                            lineno + 1
                        ))
                    })?;
                    sensitive.push(SensitiveSpec {
                        column: col.trim().to_owned(),
                        privileged: PrivilegedRule::parse(rule)?,
                    });
                }
                k => return Err(Error::Schema(format!("line {}: unknown key `{k}`", lineno + 1))),
            }
        }

        let schema = Schema {
            name,
            columns,
            label_column: label.ok_or_else(|| Error::Schema("missing `label`".into()))?,
            favorable,
            unfavorable,
            sensitive,
            strata_columns: strata,
            delimiter,
            has_header,
            missing_tokens: missing,
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Resolves a preset name (`adult`, `compas`, `german`, `bank`) or a
    /// schema file path.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        match preset(name_or_path) {
            Some(text) => Self::parse(text),
            None => Self::from_file(Path::new(name_or_path)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.columns.is_empty() {
            return Err(Error::Schema("no columns declared".into()));
        }
        for (i, c) in self.columns.iter().enumerate() {
            if self.columns[..i].iter().any(|o| o.name == c.name) {
                return Err(Error::Schema(format!("duplicate column `{}`", c.name)));
            }
        }
        match self.column(&self.label_column) {
            None => {
                return Err(Error::Schema(format!(
                    "label column `{}` not declared",
                    self.label_column
                )))
            }
            Some(c) if c.kind != ColumnKind::Categorical => {
                return Err(Error::Schema("label column must be categorical".into()))
            }
            _ => {}
        }
        if self.favorable.is_empty() {
            return Err(Error::Schema("missing `favorable` label value".into()));
        }
        for s in &self.sensitive {
            let col = self
                .column(&s.column)
                .ok_or_else(|| Error::Schema(format!("sensitive column `{}` not declared", s.column)))?;
            if s.column == self.label_column {
                return Err(Error::Schema("label column cannot be sensitive".into()));
            }
            if col.kind != ColumnKind::Categorical && !s.privileged.is_threshold() {
                return Err(Error::Schema(format!(
                    "sensitive column `{}` is numeric; use a threshold rule such as `>=25`",
                    s.column
                )));
            }
            if self.sensitive.iter().filter(|o| o.column == s.column).count() > 1 {
                return Err(Error::Schema(format!("sensitive column `{}` declared twice", s.column)));
            }
        }
        for z in &self.strata_columns {
            if self.column(z).is_none() {
                return Err(Error::Schema(format!("strata column `{z}` not declared")));
            }
            if *z == self.label_column || self.sensitive.iter().any(|s| s.column == *z) {
                return Err(Error::Schema(format!(
                    "strata column `{z}` must not be the label or a sensitive column"
                )));
            }
        }
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<&ColumnSpec> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Keeps only the named sensitive features as protected. The remaining
    /// declared sensitive columns become ordinary features.
    pub fn with_protected(mut self, names: &[String]) -> Result<Self> {
        if names.is_empty() {
            return Ok(self);
        }
        for n in names {
            if !self.sensitive.iter().any(|s| &s.column == n) {
                return Err(Error::Schema(format!("`{n}` is not a declared sensitive column")));
            }
        }
        self.sensitive.retain(|s| names.contains(&s.column));
        self.sensitive
            .sort_by_key(|s| names.iter().position(|n| *n == s.column).unwrap_or(usize::MAX));
        Ok(self)
    }

    pub fn with_strata(mut self, strata: Vec<String>) -> Result<Self> {
        self.strata_columns = strata;
        self.validate()?;
        Ok(self)
    }

    pub fn is_missing(&self, cell: &str) -> bool {
        self.missing_tokens.iter().any(|m| m == cell)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "name = {}", self.name);
        let delim = match self.delimiter {
            b'\t' => "tab".to_owned(),
            b' ' => "space".to_owned(),
            d => (d as char).to_string(),
        };
        let _ = writeln!(out, "delimiter = {delim}");
        let _ = writeln!(out, "header = {}", self.has_header);
        let tokens: Vec<&str> = self
            .missing_tokens
            .iter()
            .filter(|t| !t.is_empty())
            .map(String::as_str)
            .collect();
        let _ = writeln!(out, "missing = {}", tokens.join(" | "));
        let _ = writeln!(out, "label = {}", self.label_column);
        let _ = writeln!(out, "favorable = {}", self.favorable.join(" | "));
        if !self.unfavorable.is_empty() {
            let _ = writeln!(out, "unfavorable = {}", self.unfavorable.join(" | "));
        }
        for s in &self.sensitive {
            let _ = writeln!(out, "sensitive = {}: {}", s.column, s.privileged.to_text());
        }
        if !self.strata_columns.is_empty() {
            let _ = writeln!(out, "strata = {}", self.strata_columns.join(", "));
        }
        for c in &self.columns {
            let kind = match c.kind {
                ColumnKind::Categorical => "categorical",
                ColumnKind::Numeric => "numeric",
            };
            let _ = writeln!(out, "column = {} {}", c.name, kind);
        }
        out
    }
}

pub const PRESET_NAMES: [&str; 4] = ["adult", "compas", "german", "bank"];

pub fn preset(name: &str) -> Option<&'static str> {
    match name {
        "adult" => Some(include_str!("../../presets/adult.schema")),
        "compas" => Some(include_str!("../../presets/compas.schema")),
        "german" => Some(include_str!("../../presets/german.schema")),
        "bank" => Some(include_str!("../../presets/bank.schema")),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse() {
        for name in PRESET_NAMES {
            let s = Schema::resolve(name).unwrap();
            assert_eq!(s.name, name);
            assert!(!s.sensitive.is_empty());
        }
        let adult = Schema::resolve("adult").unwrap();
        // 14 features plus the label
        assert_eq!(adult.columns.len(), 15);
    }

    #[test]
    fn text_round_trip() {
        let s = Schema::resolve("bank").unwrap();
        let again = Schema::parse(&s.to_text()).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn rejects_strata_overlapping_sensitive() {
        let text = "label = y\nfavorable = 1\nsensitive = a: p\nstrata = a\ncolumn = a cat\ncolumn = y cat\n";
        assert!(matches!(Schema::parse(text), Err(Error::Schema(_))));
    }

    #[test]
    fn rejects_numeric_sensitive_without_threshold() {
        let text = "label = y\nfavorable = 1\nsensitive = a: 3\ncolumn = a num\ncolumn = y cat\n";
        assert!(Schema::parse(text).is_err());
        let text = "label = y\nfavorable = 1\nsensitive = a: >=3\ncolumn = a num\ncolumn = y cat\n";
        assert!(Schema::parse(text).is_ok());
    }

    #[test]
    fn rejects_undeclared_label() {
        let text = "label = y\nfavorable = 1\ncolumn = a cat\n";
        assert!(Schema::parse(text).is_err());
    }

    #[test]
    fn privileged_rules() {
        assert!(PrivilegedRule::parse(">=25").unwrap().matches_text("25"));
        assert!(!PrivilegedRule::parse(">=25").unwrap().matches_text("24.9"));
        let r = PrivilegedRule::parse("A91 | A93").unwrap();
        assert!(r.matches_text("A93"));
        assert!(!r.matches_text("A92"));
        // a bare `>50K` is a categorical value, not a threshold
        assert_eq!(
            PrivilegedRule::parse(">50K").unwrap(),
            PrivilegedRule::OneOf(vec![">50K".into()])
        );
    }

    #[test]
    fn protected_subset_keeps_order_of_request() {
        let s = Schema::resolve("adult")
            .unwrap()
            .with_protected(&["race".into(), "sex".into()])
            .unwrap();
        let names: Vec<_> = s.sensitive.iter().map(|s| s.column.as_str()).collect();
        assert_eq!(names, ["race", "sex"]);
        assert!(Schema::resolve("adult")
            .unwrap()
            .with_protected(&["age".into()])
            .is_err());
    }
}
