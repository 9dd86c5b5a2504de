#![allow(dead_code)]

pub mod checks;
pub mod oracle;

use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use kotowari::dict::{compile_dir, CompiledDictionary, MetaOverrides};
use kotowari::tagger::{Tagger, TaggerConfig};

pub const SAMPLE: &str = "麩菓子は、麩を主材料とした日本の菓子。";
pub const SAMPLE_SURFACES: [&str; 15] = [
    "麩", "菓子", "は", "、", "麩", "を", "主材", "料", "と", "し", "た", "日本", "の", "菓子",
    "。",
];
pub const LEMMA_SENTENCE: &str = "麩を用いた菓子は江戸時代からすでに存在していた。";

pub fn manifest_dir() -> &'static Path {
    Path::new(env!("CARGO_MANIFEST_DIR"))
}

pub fn toy_source() -> PathBuf {
    manifest_dir().join("dict/toy")
}

pub fn fixture(name: &str) -> PathBuf {
    manifest_dir().join("tests/fixtures").join(name)
}

pub fn toy_dict() -> Arc<CompiledDictionary> {
    static DICT: OnceLock<Arc<CompiledDictionary>> = OnceLock::new();
    DICT.get_or_init(|| {
        Arc::new(
            compile_dir(&toy_source(), &MetaOverrides::default()).expect("toy dictionary compiles"),
        )
    })
    .clone()
}

pub fn toy_tagger() -> Tagger {
    Tagger::from_dictionary(toy_dict(), &TaggerConfig::default()).unwrap()
}

pub fn table1_template() -> String {
    std::fs::read_to_string(toy_source().join("table1.fmt")).unwrap()
}

pub fn surfaces(tagger: &Tagger, text: &str) -> Vec<String> {
    tagger.tag(text).into_iter().map(|t| t.surface).collect()
}

/// Writes the compiled toy dictionary as `sys.ktd` inside a fresh directory.
pub fn toy_dicdir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("sys.ktd"), toy_dict().save()).unwrap();
    dir
}

/// Lines of the 50-sentence fixture corpus.
pub fn corpus50() -> Vec<String> {
    std::fs::read_to_string(fixture("corpus50.txt"))
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect()
}
