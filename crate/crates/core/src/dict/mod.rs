//! Compiled dictionaries: one immutable bundle of trie, entry table,
//! connection matrix, character categories, unknown-word templates, feature
//! schema and version metadata.

mod binary;
mod manifest;
pub mod schema;

use std::fmt;
use std::sync::{Arc, OnceLock};

use thiserror::Error;

use crate::features::{parse_feature, render_feature, FeatureRecord};
use crate::source::{
    validate_entries, validate_unknown, CharCategoryTable, ConnectionMatrix, LexiconEntry,
    SourceError, UnknownTemplates,
};
use crate::trie::DoubleArrayTrie;

pub use binary::{LoadError, LoadErrorKind, FORMAT_VERSION, MAGIC};
pub use manifest::{compile_dir, MetaOverrides, MANIFEST_FILE};
pub use schema::{FeatureSchema, PosLayout, Role, SchemaError};

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("{}", fmt_source(file, source))]
    Source { file: String, source: SourceError },
    #[error("{file}: required file is missing")]
    MissingFile { file: String },
    #[error("{file}: {message}")]
    Io { file: String, message: String },
    #[error("invalid dictionary: {0}")]
    Invalid(String),
}

fn fmt_source(file: &str, e: &SourceError) -> String {
    match e.line {
        Some(line) => format!("{file}:{line}: {}", e.message),
        None => format!("{file}: {}", e.message),
    }
}

impl CompileError {
    fn source(file: &str, source: SourceError) -> Self {
        Self::Source {
            file: file.to_string(),
            source,
        }
    }
}

/// One lexicon source file.
#[derive(Debug, Clone)]
pub struct LexiconFile {
    pub name: String,
    pub entries: Vec<LexiconEntry>,
}

/// Dictionary identity, as recorded at build time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DictMeta {
    pub name: String,
    pub version: String,
    pub entry_count: u32,
    pub format_version: u32,
    /// Free-form provenance, e.g. patches applied to the upstream source.
    pub source_note: String,
}

impl fmt::Display for DictMeta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} ({} entries, format {})",
            self.name, self.version, self.entry_count, self.format_version
        )
    }
}

/// Caller-supplied part of [`DictMeta`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MetaInput {
    pub name: String,
    pub version: String,
    pub source_note: String,
}

/// A lexicon or unknown-word entry with its strings held in the pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Entry {
    pub left_id: u16,
    pub right_id: u16,
    pub word_cost: i16,
    surface: (u32, u32),
    feature: (u32, u32),
}

/// Identifies where a lattice node's word came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EntryRef {
    Known(u32),
    Unknown { category: u8, template: u16 },
}

pub struct CompiledDictionary {
    trie: DoubleArrayTrie,
    entries: Vec<Entry>,
    /// Per category index, in unk.def order.
    unknown: Vec<Vec<Entry>>,
    pool: String,
    matrix: ConnectionMatrix,
    chars: CharCategoryTable,
    schema: Arc<FeatureSchema>,
    meta: DictMeta,
    known_features: Vec<OnceLock<FeatureRecord>>,
    unknown_features: Vec<Vec<OnceLock<FeatureRecord>>>,
}

impl fmt::Debug for CompiledDictionary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompiledDictionary")
            .field("meta", &self.meta)
            .field("schema", &self.schema.name())
            .finish_non_exhaustive()
    }
}

impl PartialEq for CompiledDictionary {
    fn eq(&self, other: &Self) -> bool {
        self.trie == other.trie
            && self.entries == other.entries
            && self.unknown == other.unknown
            && self.pool == other.pool
            && self.matrix == other.matrix
            && self.chars == other.chars
            && self.schema == other.schema
            && self.meta == other.meta
    }
}

struct PoolBuilder {
    pool: String,
}

impl PoolBuilder {
    fn push(&mut self, s: &str) -> Result<(u32, u32), CompileError> {
        let start = u32::try_from(self.pool.len())
            .map_err(|_| CompileError::Invalid("string pool exceeds 4 GiB".into()))?;
        self.pool.push_str(s);
        Ok((start, s.len() as u32))
    }
}

fn check_meta_value(key: &str, value: &str) -> Result<(), CompileError> {
    if value.contains(['\n', '\r']) {
        return Err(CompileError::Invalid(format!(
            "meta {key} contains a line break"
        )));
    }
    Ok(())
}

/// Compiles validated sources. Entries are ordered by surface (bytewise),
/// then by source order; output is a pure function of the inputs.
pub fn compile(
    lexicon: &[LexiconFile],
    matrix: &ConnectionMatrix,
    chars: &CharCategoryTable,
    unk: &UnknownTemplates,
    schema: &FeatureSchema,
    meta: &MetaInput,
) -> Result<CompiledDictionary, CompileError> {
    check_meta_value("name", &meta.name)?;
    check_meta_value("version", &meta.version)?;
    check_meta_value("source_note", &meta.source_note)?;
    if meta.name.is_empty() || meta.version.is_empty() {
        return Err(CompileError::Invalid(
            "dictionary name and version must be set".into(),
        ));
    }

    let source_schema = Arc::new(schema.clone());
    let stored_schema = Arc::new(schema.with_split_layout());
    // feature text is stored with POS levels split
    let normalize = |file: &str, line: usize, e: &LexiconEntry| -> Result<String, CompileError> {
        let record = parse_feature(&e.feature_csv, &source_schema)
            .map_err(|err| CompileError::source(file, SourceError::at(line, err.to_string())))?;
        Ok(match schema.pos_layout() {
            PosLayout::Split => e.feature_csv.clone(),
            PosLayout::Joined => render_feature(&record.rebind(&stored_schema)),
        })
    };
    let cost = |file: &str, line: usize, e: &LexiconEntry| -> Result<i16, CompileError> {
        i16::try_from(e.word_cost).map_err(|_| {
            CompileError::source(
                file,
                SourceError::at(
                    line,
                    format!("word cost {} does not fit in 16 bits", e.word_cost),
                ),
            )
        })
    };

    let mut flat: Vec<(&LexiconEntry, String, i16)> = Vec::new();
    for file in lexicon {
        validate_entries(&file.entries, matrix).map_err(|e| CompileError::source(&file.name, e))?;
        for (i, e) in file.entries.iter().enumerate() {
            let feature = normalize(&file.name, i + 1, e)?;
            flat.push((e, feature, cost(&file.name, i + 1, e)?));
        }
    }
    if flat.len() > u32::MAX as usize {
        return Err(CompileError::Invalid("too many entries".into()));
    }
    flat.sort_by(|a, b| a.0.surface.as_bytes().cmp(b.0.surface.as_bytes()));

    validate_unknown(unk, chars, matrix).map_err(|e| CompileError::source("unk.def", e))?;

    let mut pool = PoolBuilder {
        pool: String::new(),
    };
    let mut entries = Vec::with_capacity(flat.len());
    let mut keys: Vec<&[u8]> = Vec::new();
    let mut values: Vec<Vec<u32>> = Vec::new();
    for (id, (e, feature, word_cost)) in flat.iter().enumerate() {
        let surface = e.surface.as_bytes();
        if keys.last() == Some(&surface) {
            values.last_mut().expect("parallel to keys").push(id as u32);
        } else {
            keys.push(surface);
            values.push(vec![id as u32]);
        }
        entries.push(Entry {
            left_id: e.left_id as u16,
            right_id: e.right_id as u16,
            word_cost: *word_cost,
            surface: pool.push(&e.surface)?,
            feature: pool.push(feature)?,
        });
    }
    let trie = DoubleArrayTrie::build(&keys, &values)
        .map_err(|e| CompileError::Invalid(format!("trie: {e}")))?;

    let mut unknown: Vec<Vec<Entry>> = vec![Vec::new(); chars.categories().len()];
    for (i, e) in unk.entries.iter().enumerate() {
        let cat = chars
            .category_index(&e.surface)
            .expect("validated against char.def") as usize;
        let feature = normalize("unk.def", i + 1, e)?;
        unknown[cat].push(Entry {
            left_id: e.left_id as u16,
            right_id: e.right_id as u16,
            word_cost: cost("unk.def", i + 1, e)?,
            surface: pool.push(&e.surface)?,
            feature: pool.push(&feature)?,
        });
    }
    if unknown.iter().any(|t| t.len() > u16::MAX as usize) {
        return Err(CompileError::Invalid(
            "too many templates for one category".into(),
        ));
    }

    let meta = DictMeta {
        name: meta.name.clone(),
        version: meta.version.clone(),
        entry_count: entries.len() as u32,
        format_version: FORMAT_VERSION,
        source_note: meta.source_note.clone(),
    };
    Ok(CompiledDictionary::assemble(
        trie,
        entries,
        unknown,
        pool.pool,
        matrix.clone(),
        chars.clone(),
        stored_schema,
        meta,
    ))
}

/// Borrowed view of one entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EntryView<'a> {
    pub surface: &'a str,
    pub left_id: u16,
    pub right_id: u16,
    pub word_cost: i16,
    pub feature_csv: &'a str,
}

impl CompiledDictionary {
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        trie: DoubleArrayTrie,
        entries: Vec<Entry>,
        unknown: Vec<Vec<Entry>>,
        pool: String,
        matrix: ConnectionMatrix,
        chars: CharCategoryTable,
        schema: Arc<FeatureSchema>,
        meta: DictMeta,
    ) -> Self {
        let known_features = (0..entries.len()).map(|_| OnceLock::new()).collect();
        let unknown_features = unknown
            .iter()
            .map(|t| (0..t.len()).map(|_| OnceLock::new()).collect())
            .collect();
        Self {
            trie,
            entries,
            unknown,
            pool,
            matrix,
            chars,
            schema,
            meta,
            known_features,
            unknown_features,
        }
    }

    pub fn meta(&self) -> &DictMeta {
        &self.meta
    }

    pub fn schema(&self) -> &Arc<FeatureSchema> {
        &self.schema
    }

    pub fn trie(&self) -> &DoubleArrayTrie {
        &self.trie
    }

    pub fn matrix(&self) -> &ConnectionMatrix {
        &self.matrix
    }

    pub fn chars(&self) -> &CharCategoryTable {
        &self.chars
    }

    pub fn num_entries(&self) -> usize {
        self.entries.len()
    }

    fn text(&self, (start, len): (u32, u32)) -> &str {
        &self.pool[start as usize..(start + len) as usize]
    }

    fn view(&self, e: &Entry) -> EntryView<'_> {
        EntryView {
            surface: self.text(e.surface),
            left_id: e.left_id,
            right_id: e.right_id,
            word_cost: e.word_cost,
            feature_csv: self.text(e.feature),
        }
    }

    pub fn entry(&self, id: u32) -> EntryView<'_> {
        self.view(&self.entries[id as usize])
    }

    pub(crate) fn raw_entry(&self, r: EntryRef) -> &Entry {
        match r {
            EntryRef::Known(id) => &self.entries[id as usize],
            EntryRef::Unknown { category, template } => {
                &self.unknown[category as usize][template as usize]
            }
        }
    }

    pub fn resolve(&self, r: EntryRef) -> EntryView<'_> {
        self.view(self.raw_entry(r))
    }

    /// Unknown-word templates for a category index.
    pub fn unknown_templates(&self, category: u8) -> impl Iterator<Item = EntryView<'_>> {
        self.unknown[category as usize].iter().map(|e| self.view(e))
    }

    pub(crate) fn num_unknown_templates(&self, category: u8) -> usize {
        self.unknown[category as usize].len()
    }

    /// Parsed feature record of an entry, computed once and cached.
    pub fn features(&self, r: EntryRef) -> &FeatureRecord {
        let cell = match r {
            EntryRef::Known(id) => &self.known_features[id as usize],
            EntryRef::Unknown { category, template } => {
                &self.unknown_features[category as usize][template as usize]
            }
        };
        cell.get_or_init(|| {
            // validated at compile or load time
            parse_feature(self.resolve(r).feature_csv, &self.schema)
                .unwrap_or_else(|_| FeatureRecord::empty(&self.schema))
        })
    }

    /// All entries as `LexiconEntry` values, in entry-id order.
    pub fn lexicon(&self) -> Vec<LexiconEntry> {
        self.entries
            .iter()
            .map(|e| {
                let v = self.view(e);
                LexiconEntry {
                    surface: v.surface.to_string(),
                    left_id: v.left_id.into(),
                    right_id: v.right_id.into(),
                    word_cost: v.word_cost.into(),
                    feature_csv: v.feature_csv.to_string(),
                }
            })
            .collect()
    }

    pub fn save(&self) -> Vec<u8> {
        binary::save(self)
    }

    pub fn load(bytes: &[u8]) -> Result<Self, LoadError> {
        binary::load(bytes)
    }
}
