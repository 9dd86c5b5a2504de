//! Compiling a dictionary source directory.
//!
//! A source directory holds one or more lexicon `*.csv` files, `matrix.def`,
//! `char.def`, `unk.def` and a `dict.toml` manifest naming the dictionary
//! and its feature schema.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use super::schema::{FeatureSchema, PosLayout, Role};
use super::{compile, CompileError, CompiledDictionary, LexiconFile, MetaInput};
use crate::source::{parse_char_def, parse_lexicon, parse_matrix, parse_unk_def};

pub const MANIFEST_FILE: &str = "dict.toml";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    dictionary: DictionarySection,
    schema: SchemaSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DictionarySection {
    name: String,
    version: String,
    #[serde(default)]
    source_note: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemaSection {
    preset: Option<String>,
    name: Option<String>,
    fields: Option<Vec<String>>,
    #[serde(default)]
    roles: BTreeMap<String, usize>,
    pos_layout: Option<String>,
    join_pos: Option<bool>,
}

/// Values that replace the manifest's `[dictionary]` entries.
#[derive(Debug, Clone, Default)]
pub struct MetaOverrides {
    pub name: Option<String>,
    pub version: Option<String>,
    pub source_note: Option<String>,
}

fn manifest_error(message: impl Into<String>) -> CompileError {
    CompileError::Io {
        file: MANIFEST_FILE.into(),
        message: message.into(),
    }
}

impl SchemaSection {
    fn build(&self) -> Result<FeatureSchema, CompileError> {
        let layout = match self.pos_layout.as_deref() {
            None => None,
            Some("split") => Some(PosLayout::Split),
            Some("joined") => Some(PosLayout::Joined),
            Some(other) => {
                return Err(manifest_error(format!(
                    "pos_layout must be \"split\" or \"joined\", not {other:?}"
                )))
            }
        };
        let base = match &self.preset {
            Some(p) => Some(FeatureSchema::preset(p).map_err(|e| manifest_error(e.to_string()))?),
            None => None,
        };
        let name = self
            .name
            .clone()
            .or_else(|| base.as_ref().map(|b| b.name().to_string()))
            .ok_or_else(|| manifest_error("schema needs a preset or a name"))?;
        let fields = self
            .fields
            .clone()
            .or_else(|| base.as_ref().map(|b| b.field_names().to_vec()))
            .ok_or_else(|| manifest_error("schema needs a preset or a field list"))?;
        let roles: Vec<(Role, usize)> = if self.roles.is_empty() {
            base.as_ref()
                .map(|b| b.roles().collect())
                .unwrap_or_default()
        } else {
            self.roles
                .iter()
                .map(|(k, &v)| {
                    Ok((
                        k.parse::<Role>()
                            .map_err(|e| manifest_error(e.to_string()))?,
                        v,
                    ))
                })
                .collect::<Result<_, CompileError>>()?
        };
        let layout = layout
            .or_else(|| base.as_ref().map(|b| b.pos_layout()))
            .unwrap_or(PosLayout::Split);
        let join = self
            .join_pos
            .or_else(|| base.as_ref().map(|b| b.join_pos()))
            .unwrap_or(layout == PosLayout::Joined);
        FeatureSchema::new(name, fields, &roles, layout, join)
            .map_err(|e| manifest_error(e.to_string()))
    }
}

fn read(dir: &Path, file: &str) -> Result<String, CompileError> {
    let path = dir.join(file);
    if !path.exists() {
        return Err(CompileError::MissingFile { file: file.into() });
    }
    fs::read_to_string(&path).map_err(|e| CompileError::Io {
        file: file.into(),
        message: e.to_string(),
    })
}

/// Reads and compiles every source file in `dir`.
pub fn compile_dir(
    dir: &Path,
    overrides: &MetaOverrides,
) -> Result<CompiledDictionary, CompileError> {
    if !dir.is_dir() {
        return Err(CompileError::Io {
            file: dir.display().to_string(),
            message: "not a directory".into(),
        });
    }
    let manifest: Manifest =
        toml::from_str(&read(dir, MANIFEST_FILE)?).map_err(|e| manifest_error(e.to_string()))?;
    let schema = manifest.schema.build()?;

    let source = |file: &str, e| CompileError::Source {
        file: file.into(),
        source: e,
    };
    let matrix = parse_matrix(&read(dir, "matrix.def")?).map_err(|e| source("matrix.def", e))?;
    let chars = parse_char_def(&read(dir, "char.def")?).map_err(|e| source("char.def", e))?;
    let unk = parse_unk_def(&read(dir, "unk.def")?).map_err(|e| source("unk.def", e))?;

    let mut csv_names: Vec<String> = fs::read_dir(dir)
        .map_err(|e| CompileError::Io {
            file: dir.display().to_string(),
            message: e.to_string(),
        })?
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().into_string().ok())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    csv_names.sort();
    if csv_names.is_empty() {
        return Err(CompileError::MissingFile {
            file: "*.csv".into(),
        });
    }
    let mut lexicon = Vec::with_capacity(csv_names.len());
    for name in csv_names {
        let entries = parse_lexicon(&read(dir, &name)?).map_err(|e| source(&name, e))?;
        lexicon.push(LexiconFile { name, entries });
    }

    let d = manifest.dictionary;
    let meta = MetaInput {
        name: overrides.name.clone().unwrap_or(d.name),
        version: overrides.version.clone().unwrap_or(d.version),
        source_note: overrides.source_note.clone().unwrap_or(d.source_note),
    };
    compile(&lexicon, &matrix, &chars, &unk, &schema, &meta)
}
