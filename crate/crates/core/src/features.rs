//! Structured access to per-token feature fields.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::csv;
use crate::dict::schema::{FeatureSchema, PosLayout, Role, SchemaError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FeatureError {
    #[error("unterminated quoted field in feature text")]
    UnterminatedQuote,
}

/// Parsed feature fields of one token. `*` and empty fields are absent.
#[derive(Clone, PartialEq, Eq)]
pub struct FeatureRecord {
    fields: Arc<[Option<Box<str>>]>,
    schema: Arc<FeatureSchema>,
}

impl fmt::Debug for FeatureRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FeatureRecord")
            .field("schema", &self.schema.name())
            .field("fields", &self.fields)
            .finish()
    }
}

fn normalize(field: &str) -> Option<Box<str>> {
    match field {
        "" | "*" => None,
        f => Some(f.into()),
    }
}

/// Parses feature text according to `schema`. With a joined POS layout the
/// field in the `pos1` slot is split on `-` into the four POS slots (levels
/// past the fourth stay attached to `pos4`).
pub fn parse_feature(
    feature_csv: &str,
    schema: &Arc<FeatureSchema>,
) -> Result<FeatureRecord, FeatureError> {
    let raw = csv::split_fields(feature_csv).map_err(|_| FeatureError::UnterminatedQuote)?;
    let mut fields: Vec<Option<Box<str>>> = Vec::with_capacity(schema.field_names().len());
    match (schema.pos_layout(), schema.pos_base()) {
        (PosLayout::Joined, Some(base)) => {
            for (i, f) in raw.iter().enumerate() {
                if i != base {
                    fields.push(normalize(f));
                    continue;
                }
                let mut levels = f.splitn(4, '-');
                for _ in 0..4 {
                    fields.push(levels.next().and_then(normalize));
                }
            }
        }
        _ => fields.extend(raw.iter().map(|f| normalize(f))),
    }
    // a lone empty field is an empty record
    if raw.len() == 1 && raw[0].is_empty() {
        fields.clear();
    }
    Ok(FeatureRecord {
        fields: fields.into(),
        schema: Arc::clone(schema),
    })
}

/// Renders a record in its schema's layout, absent fields as `*`. Inverse
/// of [`parse_feature`].
pub fn render_feature(record: &FeatureRecord) -> String {
    let schema = &record.schema;
    let joined = match schema.pos_layout() {
        PosLayout::Joined => schema.pos_base(),
        PosLayout::Split => None,
    };
    let mut out = String::new();
    let mut i = 0;
    let mut first = true;
    while i < record.fields.len() {
        if !first {
            out.push(',');
        }
        first = false;
        if Some(i) == joined {
            out.push_str(&record.joined_pos(i));
            i += 4;
        } else {
            csv::push_field(&mut out, record.fields[i].as_deref().unwrap_or("*"));
            i += 1;
        }
    }
    out
}

impl FeatureRecord {
    pub fn empty(schema: &Arc<FeatureSchema>) -> Self {
        Self {
            fields: Vec::new().into(),
            schema: Arc::clone(schema),
        }
    }

    /// The same fields interpreted under another schema.
    pub(crate) fn rebind(&self, schema: &Arc<FeatureSchema>) -> Self {
        Self {
            fields: Arc::clone(&self.fields),
            schema: Arc::clone(schema),
        }
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    /// Number of fields actually present in the source row.
    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    /// Field `index`, absent past the end of the row.
    pub fn field(&self, index: usize) -> Option<&str> {
        self.fields.get(index).and_then(|f| f.as_deref())
    }

    pub fn fields(&self) -> impl Iterator<Item = Option<&str>> + '_ {
        self.fields.iter().map(|f| f.as_deref())
    }

    /// Value of `role`; an error only when the schema does not define it.
    pub fn get(&self, role: Role) -> Result<Option<&str>, SchemaError> {
        let idx = self
            .schema
            .role_index(role)
            .ok_or_else(|| SchemaError::UndefinedRole {
                role,
                schema: self.schema.name().to_string(),
            })?;
        Ok(self.field(idx))
    }

    /// Like [`get`](Self::get), with the role given by name.
    pub fn get_role(&self, role: &str) -> Result<Option<&str>, SchemaError> {
        self.get(role.parse()?)
    }

    pub fn lemma(&self) -> Option<&str> {
        self.get(Role::Lemma).ok().flatten()
    }

    pub fn pron(&self) -> Option<&str> {
        self.get(Role::Pron).ok().flatten()
    }

    /// POS levels as one hyphen-joined string, skipping absent levels.
    pub fn pos(&self) -> Option<String> {
        let base = self.schema.pos_base()?;
        let s = self.joined_pos(base);
        (s != "*").then_some(s)
    }

    fn joined_pos(&self, base: usize) -> String {
        let levels: Vec<&str> = (base..base + 4).filter_map(|i| self.field(i)).collect();
        if levels.is_empty() {
            "*".to_string()
        } else {
            levels.join("-")
        }
    }

    /// The whole record as comma-separated display text: absent fields as
    /// `*`, POS levels hyphen-joined when the schema asks for it.
    pub fn display_csv(&self) -> String {
        let joined = if self.schema.join_pos() {
            self.schema.pos_base()
        } else {
            None
        };
        let mut out = String::new();
        let mut i = 0;
        while i < self.fields.len() {
            if i > 0 {
                out.push(',');
            }
            if Some(i) == joined {
                out.push_str(&self.joined_pos(i));
                i += 4;
            } else {
                out.push_str(self.field(i).unwrap_or("*"));
                i += 1;
            }
        }
        out
    }
}
