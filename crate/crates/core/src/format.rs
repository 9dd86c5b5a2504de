//! Node-format templates for per-token output.
//!
//! Directives:
//!
//! | directive      | expands to                                             |
//! |----------------|--------------------------------------------------------|
//! | `%m`           | surface                                                |
//! | `%f[n]`        | feature field `n`, empty when absent                   |
//! | `%F<c>[i,j,..]`| fields `i, j, ..` joined with the character `c`, absent fields skipped |
//! | `%H`           | whole feature record as display text                   |
//! | `%%`           | a literal `%`                                          |
//! | `\t` `\n` `\\` | tab, newline, backslash                                |

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::lattice::Token;

/// Template used when none is given: surface, tab, display record.
pub const DEFAULT_TEMPLATE: &str = "%m\\t%H\\n";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad node format at offset {offset}: {message}")]
pub struct FormatError {
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Part {
    Literal(String),
    Surface,
    Field(usize),
    Join { sep: char, fields: Vec<usize> },
    Record,
}

/// A parsed, validated template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeFormat {
    source: String,
    parts: Vec<Part>,
}

impl Default for NodeFormat {
    fn default() -> Self {
        DEFAULT_TEMPLATE.parse().expect("default template is valid")
    }
}

impl fmt::Display for NodeFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn error(&self, at: usize, message: impl Into<String>) -> FormatError {
        FormatError {
            offset: at,
            message: message.into(),
        }
    }

    fn index_list(&mut self, at: usize) -> Result<Vec<usize>, FormatError> {
        if self.bump() != Some('[') {
            return Err(self.error(at, "expected '[' after field directive"));
        }
        let close = self.text[self.pos..]
            .find(']')
            .ok_or_else(|| self.error(at, "missing ']'"))?;
        let inner = &self.text[self.pos..self.pos + close];
        self.pos += close + 1;
        inner
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| self.error(at, format!("bad field index {s:?}")))
            })
            .collect()
    }
}

impl FromStr for NodeFormat {
    type Err = FormatError;

    fn from_str(template: &str) -> Result<Self, FormatError> {
        let mut c = Cursor {
            text: template,
            pos: 0,
        };
        let mut parts = Vec::new();
        let mut lit = String::new();
        let flush = |lit: &mut String, parts: &mut Vec<Part>| {
            if !lit.is_empty() {
                parts.push(Part::Literal(std::mem::take(lit)));
            }
        };
        while let Some(ch) = c.bump() {
            let at = c.pos - ch.len_utf8();
            match ch {
                '\\' => match c.bump() {
                    Some('t') => lit.push('\t'),
                    Some('n') => lit.push('\n'),
                    Some('\\') => lit.push('\\'),
                    Some(other) => return Err(c.error(at, format!("unknown escape \\{other}"))),
                    None => return Err(c.error(at, "dangling backslash")),
                },
                '%' => {
                    let part = match c.bump() {
                        Some('%') => {
                            lit.push('%');
                            continue;
                        }
                        Some('m') => Part::Surface,
                        Some('H') => Part::Record,
                        Some('f') => {
                            let idx = c.index_list(at)?;
                            if idx.len() != 1 {
                                return Err(c.error(at, "%f takes exactly one index"));
                            }
                            Part::Field(idx[0])
                        }
                        Some('F') => {
                            let sep = c
                                .bump()
                                .ok_or_else(|| c.error(at, "%F needs a separator"))?;
                            Part::Join {
                                sep,
                                fields: c.index_list(at)?,
                            }
                        }
                        Some(other) => {
                            return Err(c.error(at, format!("unknown directive %{other}")))
                        }
                        None => return Err(c.error(at, "dangling '%'")),
                    };
                    flush(&mut lit, &mut parts);
                    parts.push(part);
                }
                _ => lit.push(ch),
            }
        }
        flush(&mut lit, &mut parts);
        Ok(Self {
            source: template.to_string(),
            parts,
        })
    }
}

impl NodeFormat {
    pub fn parse(template: &str) -> Result<Self, FormatError> {
        template.parse()
    }

    /// Appends the expansion for `token` to `out`.
    pub fn write(&self, token: &Token, out: &mut String) {
        let feature = &token.feature;
        for part in &self.parts {
            match part {
                Part::Literal(s) => out.push_str(s),
                Part::Surface => out.push_str(&token.surface),
                Part::Field(i) => out.push_str(feature.field(*i).unwrap_or("")),
                Part::Join { sep, fields } => {
                    let mut first = true;
                    for v in fields.iter().filter_map(|&i| feature.field(i)) {
                        if !first {
                            out.push(*sep);
                        }
                        first = false;
                        out.push_str(v);
                    }
                }
                Part::Record => out.push_str(&feature.display_csv()),
            }
        }
    }

    pub fn format(&self, token: &Token) -> String {
        let mut s = String::new();
        self.write(token, &mut s);
        s
    }
}
