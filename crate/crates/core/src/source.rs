//! Parsers for MeCab-style dictionary sources: the lexicon CSV, `matrix.def`,
//! `char.def` and `unk.def`.
//!
//! Every parser is a pure function over the file text. Errors carry the
//! 1-based line number they were found on.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::csv;

/// A parse or validation failure in a source file.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct SourceError {
    /// 1-based line, or `None` for whole-file problems (e.g. a missing
    /// `DEFAULT` category).
    pub line: Option<usize>,
    pub message: String,
}

impl SourceError {
    pub(crate) fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            message: message.into(),
        }
    }

    pub(crate) fn file(message: impl Into<String>) -> Self {
        Self {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for SourceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// One dictionary word as written in the lexicon source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    pub surface: String,
    pub left_id: u32,
    pub right_id: u32,
    pub word_cost: i32,
    /// Everything after the fourth column, verbatim (quotes included).
    pub feature_csv: String,
}

fn parse_entry(line_no: usize, line: &str) -> Result<LexiconEntry, SourceError> {
    let (head, rest) = csv::split_leading(line, 4)
        .map_err(|_| SourceError::at(line_no, "unterminated quoted field"))?;
    if head.len() < 4 {
        return Err(SourceError::at(
            line_no,
            format!("expected at least 4 columns, found {}", head.len()),
        ));
    }
    if head[0].is_empty() {
        return Err(SourceError::at(line_no, "empty surface"));
    }
    let int = |idx: usize, what: &str| -> Result<i64, SourceError> {
        head[idx].trim().parse::<i64>().map_err(|_| {
            SourceError::at(
                line_no,
                format!("{what} is not an integer: {:?}", head[idx]),
            )
        })
    };
    let ctx = |idx: usize, what: &str| -> Result<u32, SourceError> {
        let v = int(idx, what)?;
        u32::try_from(v).map_err(|_| SourceError::at(line_no, format!("{what} out of range: {v}")))
    };
    let left_id = ctx(1, "left id")?;
    let right_id = ctx(2, "right id")?;
    let cost = int(3, "word cost")?;
    let word_cost = i32::try_from(cost)
        .map_err(|_| SourceError::at(line_no, format!("word cost out of range: {cost}")))?;
    Ok(LexiconEntry {
        surface: head[0].to_string(),
        left_id,
        right_id,
        word_cost,
        feature_csv: rest.unwrap_or("").to_string(),
    })
}

/// Parses lexicon CSV text, one entry per line, in file order.
pub fn parse_lexicon(text: &str) -> Result<Vec<LexiconEntry>, SourceError> {
    csv::lines(text).map(|(n, l)| parse_entry(n, l)).collect()
}

/// Renders entries back into lexicon CSV. Inverse of [`parse_lexicon`].
pub fn render_lexicon(entries: &[LexiconEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        csv::push_field(&mut out, &e.surface);
        out.push_str(&format!(",{},{},{}", e.left_id, e.right_id, e.word_cost));
        if !e.feature_csv.is_empty() {
            out.push(',');
            out.push_str(&e.feature_csv);
        }
        out.push('\n');
    }
    out
}

/// Dense bigram cost table indexed by (previous right id, next left id).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectionMatrix {
    right_size: usize,
    left_size: usize,
    costs: Vec<i16>,
}

impl ConnectionMatrix {
    /// Builds a matrix from row-major costs (`right_size` rows of
    /// `left_size`).
    pub fn from_costs(right_size: usize, left_size: usize, costs: Vec<i16>) -> Option<Self> {
        if right_size == 0 || left_size == 0 || costs.len() != right_size * left_size {
            return None;
        }
        Some(Self {
            right_size,
            left_size,
            costs,
        })
    }

    pub fn right_size(&self) -> usize {
        self.right_size
    }

    pub fn left_size(&self) -> usize {
        self.left_size
    }

    #[inline]
    pub fn cost(&self, right_id: u32, left_id: u32) -> i16 {
        self.costs[right_id as usize * self.left_size + left_id as usize]
    }

    pub fn costs(&self) -> &[i16] {
        &self.costs
    }
}

/// Parses `matrix.def`: a `right_size left_size` header followed by one
/// `right left cost` line per cell. Blank lines are ignored.
pub fn parse_matrix(text: &str) -> Result<ConnectionMatrix, SourceError> {
    let mut lines = csv::lines(text).filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines
        .next()
        .ok_or_else(|| SourceError::file("matrix header missing"))?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    let parse_dim = |s: &str| s.parse::<usize>().ok().filter(|&v| v > 0 && v <= 1 << 16);
    let (right_size, left_size) = match dims.as_slice() {
        [r, l] => match (parse_dim(r), parse_dim(l)) {
            (Some(r), Some(l)) => (r, l),
            _ => return Err(SourceError::at(hline, "malformed matrix header")),
        },
        _ => return Err(SourceError::at(hline, "malformed matrix header")),
    };
    let cells = right_size * left_size;
    let mut costs = vec![0i16; cells];
    let mut seen = vec![false; cells];
    let mut count = 0usize;
    for (n, line) in lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        let [r, l, c] = parts.as_slice() else {
            return Err(SourceError::at(n, "expected `right left cost`"));
        };
        let (Ok(r), Ok(l), Ok(c)) = (r.parse::<usize>(), l.parse::<usize>(), c.parse::<i64>())
        else {
            return Err(SourceError::at(n, "non-integer matrix cell"));
        };
        if r >= right_size || l >= left_size {
            return Err(SourceError::at(
                n,
                format!("matrix cell ({r}, {l}) out of range for {right_size}x{left_size}"),
            ));
        }
        let cost = i16::try_from(c).map_err(|_| {
            SourceError::at(n, format!("connection cost {c} does not fit in 16 bits"))
        })?;
        let idx = r * left_size + l;
        if seen[idx] {
            return Err(SourceError::at(
                n,
                format!("duplicate matrix cell ({r}, {l})"),
            ));
        }
        seen[idx] = true;
        costs[idx] = cost;
        count += 1;
    }
    if count != cells {
        return Err(SourceError::file(format!(
            "matrix cell count mismatch: header declares {cells}, found {count}"
        )));
    }
    Ok(ConnectionMatrix {
        right_size,
        left_size,
        costs,
    })
}

/// Maximum number of categories; category sets are stored as a bitmask.
pub const MAX_CATEGORIES: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharCategory {
    pub name: String,
    /// Emit unknown candidates even where a known word starts.
    pub invoke: bool,
    /// Emit one candidate spanning the maximal same-category run.
    pub group: bool,
    /// Emit candidates of 1..=length characters.
    pub length: u8,
}

/// Category assignment of one codepoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CharInfo {
    /// Index of the default (first-listed) category.
    pub default: u8,
    /// Bitmask of all categories the codepoint belongs to, default included.
    pub mask: u32,
}

impl CharInfo {
    #[inline]
    pub fn is_kind_of(self, category: u8) -> bool {
        self.mask & (1 << category) != 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CharRange {
    pub start: u32,
    /// Inclusive.
    pub end: u32,
    pub info: CharInfo,
}

/// Character categories from `char.def` and the codepoint mapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharCategoryTable {
    categories: Vec<CharCategory>,
    ranges: Vec<CharRange>,
    fallback: CharInfo,
}

impl CharCategoryTable {
    /// Assembles a table from already-resolved parts: `ranges` must be sorted
    /// and disjoint, and every index must name a category.
    pub fn from_parts(
        categories: Vec<CharCategory>,
        ranges: Vec<CharRange>,
    ) -> Result<Self, SourceError> {
        if categories.len() > MAX_CATEGORIES {
            return Err(SourceError::file(format!(
                "too many categories ({}, at most {MAX_CATEGORIES})",
                categories.len()
            )));
        }
        let default = categories
            .iter()
            .position(|c| c.name == "DEFAULT")
            .ok_or_else(|| SourceError::file("category DEFAULT is not declared"))?;
        let valid_mask = if categories.len() == 32 {
            u32::MAX
        } else {
            (1u32 << categories.len()) - 1
        };
        for (i, r) in ranges.iter().enumerate() {
            let bad_index = r.info.default as usize >= categories.len()
                || r.info.mask & !valid_mask != 0
                || !r.info.is_kind_of(r.info.default);
            let unordered = r.start > r.end || (i > 0 && ranges[i - 1].end >= r.start);
            if bad_index || unordered || r.end > char::MAX as u32 {
                return Err(SourceError::file(format!(
                    "invalid character range {:#06X}..{:#06X}",
                    r.start, r.end
                )));
            }
        }
        let default = default as u8;
        Ok(Self {
            categories,
            ranges,
            fallback: CharInfo {
                default,
                mask: 1 << default,
            },
        })
    }

    pub fn categories(&self) -> &[CharCategory] {
        &self.categories
    }

    pub fn ranges(&self) -> &[CharRange] {
        &self.ranges
    }

    pub fn category_index(&self, name: &str) -> Option<u8> {
        self.categories
            .iter()
            .position(|c| c.name == name)
            .map(|i| i as u8)
    }

    pub fn category(&self, index: u8) -> &CharCategory {
        &self.categories[index as usize]
    }

    /// Category assignment of `c`; unmapped codepoints fall back to DEFAULT.
    pub fn lookup(&self, c: char) -> CharInfo {
        let cp = c as u32;
        let i = self.ranges.partition_point(|r| r.end < cp);
        match self.ranges.get(i) {
            Some(r) if r.start <= cp => r.info,
            _ => self.fallback,
        }
    }
}

fn parse_codepoint(s: &str) -> Option<u32> {
    let hex = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X"))?;
    u32::from_str_radix(hex, 16)
        .ok()
        .filter(|&v| v <= char::MAX as u32)
}

/// Parses `char.def`. Category lines are `NAME invoke group length`;
/// mapping lines are `0xXXXX NAME...` or `0xXXXX..0xYYYY NAME...`. On
/// overlap, later mapping lines win. `#` starts a comment.
pub fn parse_char_def(text: &str) -> Result<CharCategoryTable, SourceError> {
    let mut categories: Vec<CharCategory> = Vec::new();
    let mut mappings: Vec<(usize, u32, u32, Vec<&str>)> = Vec::new();

    for (n, raw) in csv::lines(text) {
        let line = raw.split('#').next().unwrap_or("");
        let parts: Vec<&str> = line.split_whitespace().collect();
        let Some(&first) = parts.first() else {
            continue;
        };
        if first.starts_with("0x") || first.starts_with("0X") {
            let (start, end) = match first.split_once("..") {
                Some((a, b)) => (parse_codepoint(a), parse_codepoint(b)),
                None => (parse_codepoint(first), parse_codepoint(first)),
            };
            let (Some(start), Some(end)) = (start, end) else {
                return Err(SourceError::at(n, format!("malformed codepoint {first:?}")));
            };
            if start > end {
                return Err(SourceError::at(
                    n,
                    format!("range start {start:#06X} is after end {end:#06X}"),
                ));
            }
            if parts.len() < 2 {
                return Err(SourceError::at(n, "mapping line names no category"));
            }
            mappings.push((n, start, end, parts[1..].to_vec()));
        } else {
            let [name, invoke, group, length] = parts.as_slice() else {
                return Err(SourceError::at(n, "expected `NAME invoke group length`"));
            };
            let flag = |s: &str| match s {
                "0" => Ok(false),
                "1" => Ok(true),
                _ => Err(SourceError::at(n, format!("expected 0 or 1, found {s:?}"))),
            };
            let length = length
                .parse::<u8>()
                .ok()
                .filter(|&l| l <= 15)
                .ok_or_else(|| SourceError::at(n, format!("invalid length {length:?}")))?;
            if categories.iter().any(|c| c.name == *name) {
                return Err(SourceError::at(
                    n,
                    format!("category {name} declared twice"),
                ));
            }
            if categories.len() == MAX_CATEGORIES {
                return Err(SourceError::at(
                    n,
                    format!("too many categories (at most {MAX_CATEGORIES})"),
                ));
            }
            categories.push(CharCategory {
                name: name.to_string(),
                invoke: flag(invoke)?,
                group: flag(group)?,
                length,
            });
        }
    }

    if !categories.iter().any(|c| c.name == "DEFAULT") {
        return Err(SourceError::file("category DEFAULT is not declared"));
    }

    // resolve names, then flatten overlapping mappings into disjoint ranges
    let mut resolved: Vec<(u32, u32, CharInfo)> = Vec::with_capacity(mappings.len());
    for (n, start, end, names) in mappings {
        let mut info = CharInfo {
            default: 0,
            mask: 0,
        };
        for (k, name) in names.iter().enumerate() {
            let idx = categories
                .iter()
                .position(|c| c.name == *name)
                .ok_or_else(|| SourceError::at(n, format!("undeclared category {name}")))?
                as u8;
            if k == 0 {
                info.default = idx;
            }
            info.mask |= 1 << idx;
        }
        resolved.push((start, end, info));
    }
    let ranges = flatten_ranges(&resolved);
    CharCategoryTable::from_parts(categories, ranges)
}

/// Later entries override earlier ones where they overlap.
fn flatten_ranges(mappings: &[(u32, u32, CharInfo)]) -> Vec<CharRange> {
    let mut bounds: Vec<u32> = mappings.iter().flat_map(|&(s, e, _)| [s, e + 1]).collect();
    bounds.sort_unstable();
    bounds.dedup();
    let mut out: Vec<CharRange> = Vec::new();
    for w in bounds.windows(2) {
        let (lo, hi) = (w[0], w[1] - 1);
        let Some(&(_, _, info)) = mappings.iter().rev().find(|&&(s, e, _)| s <= lo && hi <= e)
        else {
            continue;
        };
        match out.last_mut() {
            Some(last) if last.end + 1 == lo && last.info == info => last.end = hi,
            _ => out.push(CharRange {
                start: lo,
                end: hi,
                info,
            }),
        }
    }
    out
}

/// Unknown-word templates from `unk.def`, in file order. The surface column
/// holds a category name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UnknownTemplates {
    pub entries: Vec<LexiconEntry>,
}

impl UnknownTemplates {
    /// Templates grouped by category name, file order kept within a group.
    pub fn by_category(&self) -> BTreeMap<&str, Vec<&LexiconEntry>> {
        let mut map: BTreeMap<&str, Vec<&LexiconEntry>> = BTreeMap::new();
        for e in &self.entries {
            map.entry(e.surface.as_str()).or_default().push(e);
        }
        map
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn parse_unk_def(text: &str) -> Result<UnknownTemplates, SourceError> {
    Ok(UnknownTemplates {
        entries: parse_lexicon(text)?,
    })
}

fn check_ids(
    line: usize,
    entry: &LexiconEntry,
    matrix: &ConnectionMatrix,
) -> Result<(), SourceError> {
    if entry.left_id as usize >= matrix.left_size() {
        return Err(SourceError::at(
            line,
            format!(
                "left id {} out of range (matrix left size {})",
                entry.left_id,
                matrix.left_size()
            ),
        ));
    }
    if entry.right_id as usize >= matrix.right_size() {
        return Err(SourceError::at(
            line,
            format!(
                "right id {} out of range (matrix right size {})",
                entry.right_id,
                matrix.right_size()
            ),
        ));
    }
    Ok(())
}

/// Checks every entry's context ids against the matrix dimensions. Lines
/// are reported assuming one entry per line of the source file.
pub fn validate_entries(
    entries: &[LexiconEntry],
    matrix: &ConnectionMatrix,
) -> Result<(), SourceError> {
    entries
        .iter()
        .enumerate()
        .try_for_each(|(i, e)| check_ids(i + 1, e, matrix))
}

/// Checks unknown templates against the character table and the matrix:
/// each template names a declared category, each category has a template.
pub fn validate_unknown(
    unk: &UnknownTemplates,
    chars: &CharCategoryTable,
    matrix: &ConnectionMatrix,
) -> Result<(), SourceError> {
    for (i, e) in unk.entries.iter().enumerate() {
        if chars.category_index(&e.surface).is_none() {
            return Err(SourceError::at(
                i + 1,
                format!("category {} is not declared in char.def", e.surface),
            ));
        }
        check_ids(i + 1, e, matrix)?;
    }
    for c in chars.categories() {
        if !unk.entries.iter().any(|e| e.surface == c.name) {
            return Err(SourceError::file(format!(
                "category {} has no unknown-word template",
                c.name
            )));
        }
    }
    Ok(())
}
