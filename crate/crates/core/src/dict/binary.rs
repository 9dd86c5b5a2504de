//! `.ktd` serialization.
//!
//! Layout: magic `KTWR`, `u32` format version, then seven sections in fixed
//! order, each a `u32` byte length followed by its payload. All integers are
//! little-endian.

use std::fmt;
use std::sync::Arc;

use super::schema::{FeatureSchema, PosLayout, Role};
use super::{CompiledDictionary, DictMeta, Entry};
use crate::source::{CharCategory, CharCategoryTable, CharInfo, CharRange, ConnectionMatrix};
use crate::trie::DoubleArrayTrie;

pub const MAGIC: &[u8; 4] = b"KTWR";
pub const FORMAT_VERSION: u32 = 1;

const SECTIONS: [&str; 7] = [
    "meta", "trie", "entries", "matrix", "chars", "unk", "schema",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LoadErrorKind {
    NotADictionary,
    FormatVersion {
        found: u32,
        expected: u32,
    },
    Truncated {
        section: &'static str,
    },
    Corrupt {
        section: &'static str,
        detail: String,
    },
}

/// Failure to load a compiled dictionary. `meta` holds whatever metadata
/// could be read before the failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadError {
    pub kind: LoadErrorKind,
    pub meta: Option<DictMeta>,
}

impl LoadError {
    fn new(kind: LoadErrorKind) -> Self {
        Self { kind, meta: None }
    }

    /// Name of the section that failed, if the failure is section-specific.
    pub fn section(&self) -> Option<&'static str> {
        match &self.kind {
            LoadErrorKind::Truncated { section } | LoadErrorKind::Corrupt { section, .. } => {
                Some(section)
            }
            _ => None,
        }
    }
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            LoadErrorKind::NotADictionary => f.write_str("not a dictionary file"),
            LoadErrorKind::FormatVersion { found, expected } => write!(
                f,
                "dictionary format version {found} is not supported (expected {expected}); \
                 rebuild the dictionary with this version of build-dict"
            ),
            LoadErrorKind::Truncated { section } => {
                write!(f, "dictionary file is truncated in section `{section}`")
            }
            LoadErrorKind::Corrupt { section, detail } => {
                write!(f, "dictionary section `{section}` is corrupt: {detail}")
            }
        }
    }
}

impl std::error::Error for LoadError {}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn i16(&mut self, v: i16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn i32(&mut self, v: i32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn len(&mut self, v: usize) {
        self.u32(u32::try_from(v).expect("section item count fits in u32"));
    }
    fn str(&mut self, s: &str) {
        self.len(s.len());
        self.buf.extend_from_slice(s.as_bytes());
    }
    fn entry(&mut self, e: &Entry) {
        self.u16(e.left_id);
        self.u16(e.right_id);
        self.i16(e.word_cost);
        self.u32(e.surface.0);
        self.u32(e.surface.1);
        self.u32(e.feature.0);
        self.u32(e.feature.1);
    }
}

fn section(out: &mut Vec<u8>, fill: impl FnOnce(&mut Writer)) {
    let mut w = Writer { buf: Vec::new() };
    fill(&mut w);
    let len = u32::try_from(w.buf.len()).expect("section fits in 4 GiB");
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(&w.buf);
}

fn meta_text(m: &DictMeta) -> String {
    format!(
        "name={}\nversion={}\nentry_count={}\nformat_version={}\nsource_note={}\n",
        m.name, m.version, m.entry_count, m.format_version, m.source_note
    )
}

pub(super) fn save(d: &CompiledDictionary) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());

    section(&mut out, |w| {
        w.buf.extend_from_slice(meta_text(&d.meta).as_bytes())
    });
    section(&mut out, |w| {
        let t = &d.trie;
        w.len(t.base().len());
        t.base().iter().for_each(|&v| w.i32(v));
        t.check().iter().for_each(|&v| w.i32(v));
        w.len(t.value_offsets().len());
        t.value_offsets().iter().for_each(|&v| w.u32(v));
        w.len(t.values().len());
        t.values().iter().for_each(|&v| w.u32(v));
    });
    section(&mut out, |w| {
        w.str(&d.pool);
        w.len(d.entries.len());
        d.entries.iter().for_each(|e| w.entry(e));
    });
    section(&mut out, |w| {
        let m = &d.matrix;
        w.len(m.right_size());
        w.len(m.left_size());
        m.costs().iter().for_each(|&c| w.i16(c));
    });
    section(&mut out, |w| {
        let c = &d.chars;
        w.len(c.categories().len());
        for cat in c.categories() {
            w.str(&cat.name);
            w.u8(cat.invoke as u8);
            w.u8(cat.group as u8);
            w.u8(cat.length);
        }
        w.len(c.ranges().len());
        for r in c.ranges() {
            w.u32(r.start);
            w.u32(r.end);
            w.u8(r.info.default);
            w.u32(r.info.mask);
        }
    });
    section(&mut out, |w| {
        w.len(d.unknown.len());
        for templates in &d.unknown {
            w.len(templates.len());
            templates.iter().for_each(|e| w.entry(e));
        }
    });
    section(&mut out, |w| {
        let s = &d.schema;
        w.str(s.name());
        w.len(s.field_names().len());
        s.field_names().iter().for_each(|f| w.str(f));
        let roles: Vec<(Role, usize)> = s.roles().collect();
        w.len(roles.len());
        for (role, idx) in roles {
            w.str(role.name());
            w.len(idx);
        }
        w.u8(match s.pos_layout() {
            PosLayout::Split => 0,
            PosLayout::Joined => 1,
        });
        w.u8(s.join_pos() as u8);
    });
    out
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
    section: &'static str,
}

type Res<T> = Result<T, LoadErrorKind>;

impl<'a> Reader<'a> {
    fn corrupt(&self, detail: impl Into<String>) -> LoadErrorKind {
        LoadErrorKind::Corrupt {
            section: self.section,
            detail: detail.into(),
        }
    }

    fn take(&mut self, n: usize) -> Res<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.data.len())
            .ok_or_else(|| self.corrupt("section shorter than its contents"))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Res<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Res<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Res<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }
    fn i16(&mut self) -> Res<i16> {
        Ok(i16::from_le_bytes(self.array()?))
    }
    fn u32(&mut self) -> Res<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }
    fn i32(&mut self) -> Res<i32> {
        Ok(i32::from_le_bytes(self.array()?))
    }
    fn bool(&mut self) -> Res<bool> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(self.corrupt(format!("invalid flag {v}"))),
        }
    }

    /// A count of items each at least `item_size` bytes long.
    fn count(&mut self, item_size: usize) -> Res<usize> {
        let n = self.u32()? as usize;
        if n.saturating_mul(item_size) > self.data.len() - self.pos {
            return Err(self.corrupt("item count exceeds section size"));
        }
        Ok(n)
    }

    fn vec<T>(&mut self, n: usize, mut item: impl FnMut(&mut Self) -> Res<T>) -> Res<Vec<T>> {
        (0..n).map(|_| item(self)).collect()
    }

    fn str(&mut self) -> Res<&'a str> {
        let n = self.count(1)?;
        let bytes = self.take(n)?;
        std::str::from_utf8(bytes).map_err(|_| self.corrupt("invalid UTF-8"))
    }

    fn entry(&mut self) -> Res<Entry> {
        Ok(Entry {
            left_id: self.u16()?,
            right_id: self.u16()?,
            word_cost: self.i16()?,
            surface: (self.u32()?, self.u32()?),
            feature: (self.u32()?, self.u32()?),
        })
    }

    fn finish(&self) -> Res<()> {
        if self.pos != self.data.len() {
            return Err(self.corrupt("trailing bytes"));
        }
        Ok(())
    }
}

fn parse_meta(r: &mut Reader<'_>) -> Res<DictMeta> {
    let text = std::str::from_utf8(r.data).map_err(|_| r.corrupt("invalid UTF-8"))?;
    r.pos = r.data.len();
    let get = |key: &str| -> Res<String> {
        text.lines()
            .find_map(|l| l.strip_prefix(key).and_then(|rest| rest.strip_prefix('=')))
            .map(str::to_string)
            .ok_or_else(|| r.corrupt(format!("missing key {key}")))
    };
    let num = |s: String, key: &str| -> Res<u32> {
        s.parse().map_err(|_| LoadErrorKind::Corrupt {
            section: "meta",
            detail: format!("{key} is not a number"),
        })
    };
    let name = get("name")?;
    let version = get("version")?;
    let entry_count = num(get("entry_count")?, "entry_count")?;
    let format_version = num(get("format_version")?, "format_version")?;
    let source_note = get("source_note")?;
    Ok(DictMeta {
        name,
        version,
        entry_count,
        format_version,
        source_note,
    })
}

fn parse_trie(r: &mut Reader<'_>) -> Res<DoubleArrayTrie> {
    let n = r.count(8)?;
    let base = r.vec(n, |r| r.i32())?;
    let check = r.vec(n, |r| r.i32())?;
    let n = r.count(4)?;
    let offsets = r.vec(n, |r| r.u32())?;
    let n = r.count(4)?;
    let values = r.vec(n, |r| r.u32())?;
    DoubleArrayTrie::from_parts(base, check, offsets, values).map_err(|e| r.corrupt(e.to_string()))
}

fn parse_matrix(r: &mut Reader<'_>) -> Res<ConnectionMatrix> {
    let right = r.u32()? as usize;
    let left = r.u32()? as usize;
    let cells = right
        .checked_mul(left)
        .filter(|&c| c.saturating_mul(2) <= r.data.len() - r.pos)
        .ok_or_else(|| r.corrupt("dimensions exceed section size"))?;
    let costs = r.vec(cells, |r| r.i16())?;
    ConnectionMatrix::from_costs(right, left, costs).ok_or_else(|| r.corrupt("empty matrix"))
}

fn parse_chars(r: &mut Reader<'_>) -> Res<CharCategoryTable> {
    let n = r.count(7)?;
    let categories = r.vec(n, |r| {
        Ok(CharCategory {
            name: r.str()?.to_string(),
            invoke: r.bool()?,
            group: r.bool()?,
            length: r.u8()?,
        })
    })?;
    let n = r.count(13)?;
    let ranges = r.vec(n, |r| {
        Ok(CharRange {
            start: r.u32()?,
            end: r.u32()?,
            info: CharInfo {
                default: r.u8()?,
                mask: r.u32()?,
            },
        })
    })?;
    CharCategoryTable::from_parts(categories, ranges).map_err(|e| r.corrupt(e.to_string()))
}

fn parse_schema(r: &mut Reader<'_>) -> Res<FeatureSchema> {
    let name = r.str()?.to_string();
    let n = r.count(4)?;
    let fields = r.vec(n, |r| Ok(r.str()?.to_string()))?;
    let n = r.count(8)?;
    let roles = r.vec(n, |r| {
        let role: Role = r.str()?.parse().map_err(|_| r.corrupt("unknown role"))?;
        Ok((role, r.u32()? as usize))
    })?;
    let layout = match r.u8()? {
        0 => PosLayout::Split,
        1 => PosLayout::Joined,
        v => return Err(r.corrupt(format!("invalid POS layout {v}"))),
    };
    let join = r.bool()?;
    FeatureSchema::new(name, fields, &roles, layout, join).map_err(|e| r.corrupt(e.to_string()))
}

pub(super) fn load(bytes: &[u8]) -> Result<CompiledDictionary, LoadError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(LoadError::new(LoadErrorKind::NotADictionary));
    }
    let Some(version) = bytes.get(4..8) else {
        return Err(LoadError::new(LoadErrorKind::Truncated {
            section: "header",
        }));
    };
    let version = u32::from_le_bytes(version.try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(LoadError::new(LoadErrorKind::FormatVersion {
            found: version,
            expected: FORMAT_VERSION,
        }));
    }

    let mut pos = 8;
    let mut slices: Vec<Reader<'_>> = Vec::with_capacity(SECTIONS.len());
    let mut meta: Option<DictMeta> = None;
    for name in SECTIONS {
        let fail = |kind, meta: &Option<DictMeta>| LoadError {
            kind,
            meta: meta.clone(),
        };
        let Some(len) = bytes.get(pos..pos + 4) else {
            return Err(fail(LoadErrorKind::Truncated { section: name }, &meta));
        };
        let len = u32::from_le_bytes(len.try_into().expect("4 bytes")) as usize;
        pos += 4;
        let Some(data) = bytes.get(pos..pos + len) else {
            return Err(fail(LoadErrorKind::Truncated { section: name }, &meta));
        };
        pos += len;
        let mut reader = Reader {
            data,
            pos: 0,
            section: name,
        };
        if name == "meta" {
            meta = Some(parse_meta(&mut reader).map_err(|k| fail(k, &None))?);
        }
        slices.push(reader);
    }
    let meta = meta.expect("meta is the first section");
    let with_meta = |kind| LoadError {
        kind,
        meta: Some(meta.clone()),
    };
    if pos != bytes.len() {
        return Err(with_meta(LoadErrorKind::Corrupt {
            section: "schema",
            detail: "trailing bytes after the last section".into(),
        }));
    }
    if meta.format_version != FORMAT_VERSION {
        return Err(with_meta(LoadErrorKind::Corrupt {
            section: "meta",
            detail: "format_version disagrees with the header".into(),
        }));
    }

    let mut it = slices.into_iter().skip(1);
    let mut next = || it.next().expect("one reader per section");

    let trie = {
        let mut r = next();
        let t = parse_trie(&mut r).and_then(|t| r.finish().map(|_| t));
        t.map_err(with_meta)?
    };
    let (pool, entries) = {
        let mut r = next();
        let res = (|| {
            let pool = r.str()?.to_string();
            let n = r.count(22)?;
            let entries = r.vec(n, |r| r.entry())?;
            r.finish()?;
            Ok((pool, entries))
        })();
        res.map_err(with_meta)?
    };
    let matrix = {
        let mut r = next();
        let m = parse_matrix(&mut r).and_then(|m| r.finish().map(|_| m));
        m.map_err(with_meta)?
    };
    let chars = {
        let mut r = next();
        let c = parse_chars(&mut r).and_then(|c| r.finish().map(|_| c));
        c.map_err(with_meta)?
    };
    let unknown = {
        let mut r = next();
        let res = (|| {
            let n = r.count(4)?;
            let u = r.vec(n, |r| {
                let k = r.count(22)?;
                r.vec(k, |r| r.entry())
            })?;
            r.finish()?;
            Ok(u)
        })();
        res.map_err(with_meta)?
    };
    let schema = {
        let mut r = next();
        let s = parse_schema(&mut r).and_then(|s| r.finish().map(|_| s));
        s.map_err(with_meta)?
    };

    // cross-section consistency
    let corrupt = |section, detail: &str| {
        with_meta(LoadErrorKind::Corrupt {
            section,
            detail: detail.to_string(),
        })
    };
    if meta.entry_count as usize != entries.len() {
        return Err(corrupt("entries", "entry count disagrees with meta"));
    }
    let text_ok = |(start, len): (u32, u32)| {
        let start = start as usize;
        pool.get(start..start + len as usize).is_some()
    };
    let entry_ok = |e: &Entry| {
        text_ok(e.surface)
            && text_ok(e.feature)
            && (e.left_id as usize) < matrix.left_size()
            && (e.right_id as usize) < matrix.right_size()
    };
    if !entries.iter().all(entry_ok) {
        return Err(corrupt("entries", "entry references out of range"));
    }
    if trie.values().iter().any(|&id| id as usize >= entries.len()) {
        return Err(corrupt("trie", "value is not a valid entry index"));
    }
    if unknown.len() != chars.categories().len()
        || unknown
            .iter()
            .any(|t| t.is_empty() || t.len() > u16::MAX as usize)
    {
        return Err(corrupt(
            "unk",
            "templates do not match character categories",
        ));
    }
    if !unknown.iter().flatten().all(entry_ok) {
        return Err(corrupt("unk", "template references out of range"));
    }

    Ok(CompiledDictionary::assemble(
        trie,
        entries,
        unknown,
        pool,
        matrix,
        chars,
        Arc::new(schema),
        meta,
    ))
}
