//! The analysis entry point: load a dictionary once, then tag many texts.

#![allow(clippy::result_large_err)]

use std::env;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::dict::{CompiledDictionary, DictMeta, LoadErrorKind, FORMAT_VERSION};
use crate::format::{FormatError, NodeFormat};
use crate::lattice::{tokenize_into, Lattice, Token};

/// Environment variable naming the dictionary directory.
pub const DICDIR_ENV: &str = "KOTOWARI_DICDIR";
/// Location tried when neither a path nor the environment variable is given.
pub const DEFAULT_DICDIR: &str = "dic";
/// File name looked up inside a dictionary directory.
pub const DICT_FILE: &str = "sys.ktd";
pub const FAQ_URL: &str = "README.md#faq";

const REPORT_NOTE: &str = "Bug reports and questions are welcome in any language. \
                           日本語での報告も歓迎します。";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiagnosticKind {
    MissingDictionary,
    Unreadable,
    NotADictionary,
    VersionMismatch,
    Truncated,
    Corrupt,
    BadTemplate,
}

/// A construction failure with enough context to act on it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub headline: String,
    pub probable_cause: String,
    pub debug_info: Vec<(String, String)>,
    pub faq_url: String,
    pub note: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "error: {}", self.headline)?;
        writeln!(f, "probable cause: {}", self.probable_cause)?;
        writeln!(f, "debug info:")?;
        for (k, v) in &self.debug_info {
            writeln!(f, "  {k}: {v}")?;
        }
        writeln!(f, "FAQ: {}", self.faq_url)?;
        write!(f, "note: {}", self.note)
    }
}

impl std::error::Error for Diagnostic {}

impl Diagnostic {
    fn new(
        kind: DiagnosticKind,
        headline: impl Into<String>,
        probable_cause: impl Into<String>,
        debug_info: Vec<(String, String)>,
    ) -> Self {
        Self {
            kind,
            headline: headline.into(),
            probable_cause: probable_cause.into(),
            debug_info,
            faq_url: FAQ_URL.into(),
            note: REPORT_NOTE.into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TaggerConfig {
    pub dicdir: Option<PathBuf>,
    /// Node format; `None` uses [`crate::format::DEFAULT_TEMPLATE`].
    pub format_template: Option<String>,
    pub emit_eos: bool,
}

impl Default for TaggerConfig {
    fn default() -> Self {
        Self {
            dicdir: None,
            format_template: None,
            emit_eos: true,
        }
    }
}

/// Where the dictionary was looked for, in priority order.
fn search_locations(explicit: Option<&Path>) -> (PathBuf, Vec<(String, String)>) {
    let env_value = env::var_os(DICDIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from);
    let mut info = vec![
        (
            "explicit path".to_string(),
            explicit.map_or("(none)".into(), |p| p.display().to_string()),
        ),
        (
            DICDIR_ENV.to_string(),
            env_value
                .as_ref()
                .map_or("(not set)".into(), |p| p.display().to_string()),
        ),
        ("default location".to_string(), DEFAULT_DICDIR.to_string()),
    ];
    let chosen = explicit
        .map(Path::to_path_buf)
        .or(env_value)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_DICDIR));
    let file = if chosen.is_dir() {
        chosen.join(DICT_FILE)
    } else {
        chosen
    };
    info.push(("searched".to_string(), file.display().to_string()));
    (file, info)
}

fn meta_info(meta: &DictMeta, info: &mut Vec<(String, String)>) {
    info.push(("dictionary name".into(), meta.name.clone()));
    info.push(("dictionary version".into(), meta.version.clone()));
    info.push(("entry count".into(), meta.entry_count.to_string()));
}

/// Loads the dictionary at `path` (a `.ktd` file or a directory holding
/// one), explaining any failure.
pub fn load_dictionary(path: Option<&Path>) -> Result<CompiledDictionary, Diagnostic> {
    let (file, mut info) = search_locations(path);
    if !file.exists() {
        return Err(Diagnostic::new(
            DiagnosticKind::MissingDictionary,
            format!("no dictionary found at {}", file.display()),
            "dictionary not installed or wrong path",
            info,
        ));
    }
    let bytes = fs::read(&file).map_err(|e| {
        info.push(("io error".into(), e.to_string()));
        Diagnostic::new(
            DiagnosticKind::Unreadable,
            format!("cannot read {}", file.display()),
            "the dictionary file exists but is not readable (permissions, or a directory without sys.ktd)",
            info.clone(),
        )
    })?;
    CompiledDictionary::load(&bytes).map_err(|e| {
        info.push(("file size".into(), bytes.len().to_string()));
        if let Some(meta) = &e.meta {
            meta_info(meta, &mut info);
        }
        let (kind, cause) = match &e.kind {
            LoadErrorKind::NotADictionary => (
                DiagnosticKind::NotADictionary,
                "the path points at a file that is not a compiled dictionary \
                 (a source directory or CSV needs build-dict first)"
                    .to_string(),
            ),
            LoadErrorKind::FormatVersion { found, expected } => {
                info.push(("format version seen".into(), found.to_string()));
                info.push(("format version expected".into(), expected.to_string()));
                (
                    DiagnosticKind::VersionMismatch,
                    "the dictionary was built by a different version of this tool; \
                     rebuild it with build-dict"
                        .to_string(),
                )
            }
            LoadErrorKind::Truncated { section } => {
                info.push(("section".into(), section.to_string()));
                (
                    DiagnosticKind::Truncated,
                    format!(
                        "the file ends inside section `{section}` (interrupted copy or download)"
                    ),
                )
            }
            LoadErrorKind::Corrupt { section, detail } => {
                info.push(("section".into(), section.to_string()));
                info.push(("detail".into(), detail.clone()));
                (
                    DiagnosticKind::Corrupt,
                    format!("section `{section}` holds inconsistent data; rebuild the dictionary"),
                )
            }
        };
        info.push((
            "format version supported".into(),
            FORMAT_VERSION.to_string(),
        ));
        Diagnostic::new(
            kind,
            format!("failed to load {}: {e}", file.display()),
            cause,
            info,
        )
    })
}

fn template_diagnostic(template: &str, e: FormatError) -> Diagnostic {
    Diagnostic::new(
        DiagnosticKind::BadTemplate,
        format!("invalid node format: {e}"),
        "the output template uses an unknown directive or malformed field list",
        vec![("template".into(), template.into())],
    )
}

/// Splits `line` on ASCII and ideographic spaces, yielding non-empty
/// segments with their character offsets.
fn segments(line: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut chars = line.char_indices().enumerate().peekable();
    std::iter::from_fn(move || {
        while chars.next_if(|(_, (_, c))| is_space(*c)).is_some() {}
        let (start_char, (start_byte, _)) = chars.next()?;
        let mut end_byte = line.len();
        while let Some(&(_, (b, c))) = chars.peek() {
            if is_space(c) {
                end_byte = b;
                break;
            }
            chars.next();
        }
        Some((start_char, &line[start_byte..end_byte]))
    })
}

fn is_space(c: char) -> bool {
    c == ' ' || c == '\u{3000}'
}

/// A loaded dictionary plus output settings. Cheap to share; all per-call
/// state is local, so one tagger may serve many threads.
#[derive(Debug, Clone)]
pub struct Tagger {
    dict: Arc<CompiledDictionary>,
    format: NodeFormat,
    emit_eos: bool,
}

impl Tagger {
    pub fn new(config: TaggerConfig) -> Result<Self, Diagnostic> {
        // validate the template before paying for the dictionary load
        let format = Self::node_format(config.format_template.as_deref())?;
        let dict = load_dictionary(config.dicdir.as_deref())?;
        Ok(Self {
            dict: Arc::new(dict),
            format,
            emit_eos: config.emit_eos,
        })
    }

    /// Wraps an already loaded dictionary; only the template can fail.
    pub fn from_dictionary(
        dict: impl Into<Arc<CompiledDictionary>>,
        config: &TaggerConfig,
    ) -> Result<Self, Diagnostic> {
        Ok(Self {
            dict: dict.into(),
            format: Self::node_format(config.format_template.as_deref())?,
            emit_eos: config.emit_eos,
        })
    }

    fn node_format(template: Option<&str>) -> Result<NodeFormat, Diagnostic> {
        match template {
            None => Ok(NodeFormat::default()),
            Some(t) => NodeFormat::parse(t).map_err(|e| template_diagnostic(t, e)),
        }
    }

    pub fn dictionary(&self) -> &CompiledDictionary {
        &self.dict
    }

    pub fn node_format_template(&self) -> &NodeFormat {
        &self.format
    }

    /// Tokens of every line of `text` (split on `\n`), in order. Spaces
    /// separate tokens and never appear in a surface.
    pub fn tag(&self, text: &str) -> Vec<Token> {
        let mut out = Vec::new();
        let mut lattice = Lattice::default();
        for (i, line) in text.split('\n').enumerate() {
            self.tag_line_into(line, i, &mut lattice, &mut out);
        }
        out
    }

    fn tag_line_into(&self, line: &str, index: usize, lattice: &mut Lattice, out: &mut Vec<Token>) {
        for (offset, seg) in segments(line) {
            tokenize_into(&self.dict, seg, offset, index, lattice, out);
        }
    }

    /// Tokens of a single line; `line` should not contain `\n`.
    pub fn tag_line(&self, line: &str) -> Vec<Token> {
        let mut out = Vec::new();
        self.tag_line_into(line, 0, &mut Lattice::default(), &mut out);
        out
    }

    /// Surfaces separated by single spaces, one output line per input line.
    pub fn wakati(&self, text: &str) -> String {
        let mut out = String::with_capacity(text.len() * 2);
        let mut tokens = Vec::new();
        let mut lattice = Lattice::default();
        for (i, line) in text.split('\n').enumerate() {
            if i > 0 {
                out.push('\n');
            }
            tokens.clear();
            self.tag_line_into(line, i, &mut lattice, &mut tokens);
            for (j, t) in tokens.iter().enumerate() {
                if j > 0 {
                    out.push(' ');
                }
                out.push_str(&t.surface);
            }
        }
        out
    }

    pub fn format_token(&self, token: &Token) -> String {
        self.format.format(token)
    }

    /// Appends the formatted tokens of `line`, then `EOS` when enabled.
    pub fn write_line(&self, line: &str, out: &mut String) {
        for t in self.tag_line(line) {
            self.format.write(&t, out);
        }
        if self.emit_eos {
            out.push_str("EOS\n");
        }
    }
}
