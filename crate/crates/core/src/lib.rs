//! Dictionary-driven Japanese morphological analysis: MeCab-format sources
//! are compiled into a single `.ktd` file, text is segmented by a
//! minimum-cost path through a word lattice, and each token carries
//! structured dictionary features.
//!
//! ```no_run
//! use kotowari::tagger::{Tagger, TaggerConfig};
//!
//! let tagger = Tagger::new(TaggerConfig::default()).unwrap();
//! let words: Vec<String> = tagger.tag("麩菓子は美味しい").into_iter().map(|t| t.surface).collect();
//! ```

pub mod bench;
pub mod cli;
mod csv;
pub mod dict;
pub mod features;
pub mod format;
pub mod lattice;
pub mod source;
pub mod tagger;
pub mod trie;

pub use dict::CompiledDictionary;
pub use features::FeatureRecord;
pub use lattice::Token;
pub use tagger::{Diagnostic, Tagger, TaggerConfig};
