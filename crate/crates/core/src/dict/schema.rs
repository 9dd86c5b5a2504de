use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Named feature roles a schema may map onto field positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Pos1,
    Pos2,
    Pos3,
    Pos4,
    CType,
    CForm,
    Lemma,
    Reading,
    Pron,
    Accent,
}

impl Role {
    pub const ALL: [Role; 10] = [
        Role::Pos1,
        Role::Pos2,
        Role::Pos3,
        Role::Pos4,
        Role::CType,
        Role::CForm,
        Role::Lemma,
        Role::Reading,
        Role::Pron,
        Role::Accent,
    ];

    pub const POS: [Role; 4] = [Role::Pos1, Role::Pos2, Role::Pos3, Role::Pos4];

    pub fn name(self) -> &'static str {
        match self {
            Role::Pos1 => "pos1",
            Role::Pos2 => "pos2",
            Role::Pos3 => "pos3",
            Role::Pos4 => "pos4",
            Role::CType => "cType",
            Role::CForm => "cForm",
            Role::Lemma => "lemma",
            Role::Reading => "reading",
            Role::Pron => "pron",
            Role::Accent => "accent",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Role {
    type Err = SchemaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Role::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| SchemaError::UnknownRole(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("unknown feature role {0:?}")]
    UnknownRole(String),
    #[error("role {role} is not defined in schema {schema}")]
    UndefinedRole { role: Role, schema: String },
    #[error("schema {schema}: {message}")]
    Invalid { schema: String, message: String },
    #[error("unknown schema preset {0:?}")]
    UnknownPreset(String),
}

/// How the part-of-speech levels appear in feature text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PosLayout {
    /// Four separate CSV fields.
    Split,
    /// One field with levels joined by `-`, expanded into the `pos1..pos4`
    /// slots on parse.
    Joined,
}

/// Column semantics of a dictionary's feature text.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FeatureSchema {
    name: String,
    field_names: Vec<String>,
    roles: [Option<u16>; 10],
    pos_layout: PosLayout,
    join_pos: bool,
}

impl FeatureSchema {
    /// `join_pos` selects hyphen-joined POS levels in display output.
    pub fn new(
        name: impl Into<String>,
        field_names: Vec<String>,
        roles: &[(Role, usize)],
        pos_layout: PosLayout,
        join_pos: bool,
    ) -> Result<Self, SchemaError> {
        let name = name.into();
        let schema_name = name.clone();
        let invalid = |message: String| SchemaError::Invalid {
            schema: schema_name.clone(),
            message,
        };
        if field_names.is_empty() {
            return Err(invalid("no fields".into()));
        }
        if field_names.len() > u16::MAX as usize {
            return Err(invalid("too many fields".into()));
        }
        let mut slots = [None; 10];
        for &(role, idx) in roles {
            if idx >= field_names.len() {
                return Err(invalid(format!(
                    "role {role} maps to field {idx}, but only {} fields exist",
                    field_names.len()
                )));
            }
            if slots[role.slot()].replace(idx as u16).is_some() {
                return Err(invalid(format!("role {role} mapped twice")));
            }
        }
        let schema = Self {
            name,
            field_names,
            roles: slots,
            pos_layout,
            join_pos,
        };
        if (pos_layout == PosLayout::Joined || join_pos) && schema.pos_base().is_none() {
            return Err(invalid(
                "joined POS needs pos1..pos4 mapped to consecutive fields".into(),
            ));
        }
        Ok(schema)
    }

    /// UniDic 2.1.2 field inventory (as distributed in unidic-lite).
    pub fn unidic_lite() -> Self {
        const FIELDS: [&str; 26] = [
            "pos1",
            "pos2",
            "pos3",
            "pos4",
            "cType",
            "cForm",
            "lForm",
            "lemma",
            "orth",
            "pron",
            "orthBase",
            "pronBase",
            "goshu",
            "iType",
            "iForm",
            "fType",
            "fForm",
            "kana",
            "kanaBase",
            "form",
            "formBase",
            "iConType",
            "fConType",
            "aType",
            "aConType",
            "aModeType",
        ];
        Self::new(
            "unidic-lite",
            FIELDS.iter().map(|s| s.to_string()).collect(),
            &[
                (Role::Pos1, 0),
                (Role::Pos2, 1),
                (Role::Pos3, 2),
                (Role::Pos4, 3),
                (Role::CType, 4),
                (Role::CForm, 5),
                (Role::Reading, 6),
                (Role::Lemma, 7),
                (Role::Pron, 9),
                (Role::Accent, 23),
            ],
            PosLayout::Split,
            true,
        )
        .expect("preset is valid")
    }

    /// IPAdic's nine feature columns. IPAdic carries no accent information.
    pub fn ipadic() -> Self {
        const FIELDS: [&str; 9] = [
            "pos1", "pos2", "pos3", "pos4", "cType", "cForm", "baseForm", "reading", "pron",
        ];
        Self::new(
            "ipadic",
            FIELDS.iter().map(|s| s.to_string()).collect(),
            &[
                (Role::Pos1, 0),
                (Role::Pos2, 1),
                (Role::Pos3, 2),
                (Role::Pos4, 3),
                (Role::CType, 4),
                (Role::CForm, 5),
                (Role::Lemma, 6),
                (Role::Reading, 7),
                (Role::Pron, 8),
            ],
            PosLayout::Split,
            false,
        )
        .expect("preset is valid")
    }

    pub fn preset(name: &str) -> Result<Self, SchemaError> {
        match name {
            "unidic-lite" => Ok(Self::unidic_lite()),
            "ipadic" => Ok(Self::ipadic()),
            other => Err(SchemaError::UnknownPreset(other.to_string())),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn field_names(&self) -> &[String] {
        &self.field_names
    }

    pub fn pos_layout(&self) -> PosLayout {
        self.pos_layout
    }

    pub fn join_pos(&self) -> bool {
        self.join_pos
    }

    /// Field index of `role`, if the schema defines it.
    pub fn role_index(&self, role: Role) -> Option<usize> {
        self.roles[role.slot()].map(usize::from)
    }

    pub fn roles(&self) -> impl Iterator<Item = (Role, usize)> + '_ {
        Role::ALL
            .into_iter()
            .filter_map(|r| self.role_index(r).map(|i| (r, i)))
    }

    /// The same schema, describing text whose POS levels are already split.
    pub fn with_split_layout(&self) -> Self {
        Self {
            pos_layout: PosLayout::Split,
            ..self.clone()
        }
    }

    /// First POS field when pos1..pos4 occupy four consecutive fields.
    pub(crate) fn pos_base(&self) -> Option<usize> {
        let base = self.role_index(Role::Pos1)?;
        Role::POS
            .iter()
            .enumerate()
            .all(|(k, &r)| self.role_index(r) == Some(base + k))
            .then_some(base)
    }
}
