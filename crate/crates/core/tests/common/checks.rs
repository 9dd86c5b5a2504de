//! End-to-end checks shared by the acceptance harness and the regular
//! test targets. Each returns a short detail string on success.

use std::fs;
use std::io::Write;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use kotowari::bench::run_bench;
use kotowari::dict::{compile_dir, CompiledDictionary, MetaOverrides, FORMAT_VERSION};
use kotowari::lattice::{build_lattice, tokenize, viterbi, Token};
use kotowari::tagger::{DiagnosticKind, Tagger, TaggerConfig, FAQ_URL};
use kotowari::trie::DoubleArrayTrie;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use super::oracle::{random_keys, Instance, NaiveDictionary};
use super::*;

pub type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

pub fn gold_segmentation() -> Check {
    let dict = toy_dict();
    // warm the feature cache so the timing covers analysis only
    let _ = tokenize(&dict, SAMPLE);
    let start = Instant::now();
    let tokens = tokenize(&dict, SAMPLE);
    let elapsed = start.elapsed();
    let got: Vec<&str> = tokens.iter().map(|t| t.surface.as_str()).collect();
    ensure!(got == SAMPLE_SURFACES, "got {got:?}");
    ensure!(elapsed < Duration::from_millis(1), "took {elapsed:?}");

    // the decoded path must be the unique minimum over all segmentations
    let sol = Instance::from_source_dir(&toy_source(), SAMPLE).solve();
    let (best, _) = sol.best.as_ref().ok_or("oracle found no path")?;
    let ties = sol.costs.iter().filter(|&&c| c == *best).count();
    ensure!(ties == 1, "{ties} paths share the minimum cost {best}");
    let spans: Vec<(usize, usize)> = tokens.iter().map(|t| (t.span.start, t.span.end)).collect();
    let oracle: Vec<(usize, usize)> = sol.best_spans().iter().map(|&(s, e, _)| (s, e)).collect();
    ensure!(
        spans == oracle,
        "oracle path {oracle:?} differs from {spans:?}"
    );
    Ok(format!(
        "15 surfaces in {:.0} us; unique minimum among {} paths",
        elapsed.as_secs_f64() * 1e6,
        sol.costs.len()
    ))
}

fn lemma_of<'a>(tokens: &'a [Token], surface: &str) -> Option<&'a str> {
    tokens
        .iter()
        .find(|t| t.surface == surface)?
        .feature
        .lemma()
}

pub fn gold_lemmas() -> Check {
    let tokens = toy_tagger().tag(LEMMA_SENTENCE);
    let surfaces: Vec<&str> = tokens.iter().map(|t| t.surface.as_str()).collect();
    let expected_surfaces = [
        "麩",
        "を",
        "用い",
        "た",
        "菓子",
        "は",
        "江戸",
        "時代",
        "から",
        "すでに",
        "存在",
        "し",
        "て",
        "い",
        "た",
        "。",
    ];
    ensure!(surfaces == expected_surfaces, "segmentation {surfaces:?}");
    for (surface, lemma) in [
        ("用い", "用いる"),
        ("し", "為る"),
        ("い", "居る"),
        ("すでに", "既に"),
        ("江戸", "エド"),
    ] {
        let got = lemma_of(&tokens, surface);
        ensure!(
            got == Some(lemma),
            "lemma({surface}) = {got:?}, expected {lemma}"
        );
    }
    Ok("用いる 為る 居る 既に エド".into())
}

pub const VERB_CASES: [(&str, &[&str]); 6] = [
    ("見た", &["見", "た"]),
    ("見ました", &["見", "まし", "た"]),
    ("見なかった", &["見", "なかっ", "た"]),
    ("受け渡した", &["受け渡し", "た"]),
    ("遊べませんでした", &["遊べ", "ませ", "ん", "でし", "た"]),
    ("赤かった", &["赤かっ", "た"]),
];

pub fn gold_verbs() -> Check {
    let tagger = toy_tagger();
    for (input, expected) in VERB_CASES {
        let got = surfaces(&tagger, input);
        ensure!(got == expected, "{input} -> {got:?}");
    }
    Ok(format!(
        "{} conjugated forms split as expected",
        VERB_CASES.len()
    ))
}

pub fn viterbi_oracle(instances: usize, seed: u64) -> Check {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(seed);
    let mut paths = 0usize;
    let mut tied = 0usize;
    for i in 0..instances {
        let inst = Instance::random(&mut rng, i % 2 == 1);
        let dict = inst.compile();
        let sol = inst.solve();
        let (best, _) = sol
            .best
            .as_ref()
            .ok_or_else(|| format!("instance {i}: oracle found no path"))?;
        paths += sol.costs.len();
        if sol.costs.iter().filter(|&&c| c == *best).count() > 1 {
            tied += 1;
        }

        let mut lattice = build_lattice(&dict, &inst.sentence);
        let path =
            viterbi(&mut lattice, dict.matrix()).map_err(|e| format!("instance {i}: {e}"))?;
        let got: Vec<_> = path
            .iter()
            .map(|n| (n.start_char, n.end_char, n.entry))
            .collect();
        ensure!(
            got == sol.best_spans(),
            "instance {i} ({inst:?}): decoded {got:?}, oracle {:?}",
            sol.best_spans()
        );
        ensure!(
            lattice.best_cost() == Some(*best),
            "instance {i}: cost {:?}, oracle {best}",
            lattice.best_cost()
        );
        ensure!(
            sol.costs.iter().all(|&c| c >= *best),
            "instance {i}: an enumerated path is cheaper than the decoded one"
        );
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!(
        "{instances}/{instances} agree ({paths} paths enumerated, {tied} instances with tied minima) in {:.2} s",
        elapsed.as_secs_f64()
    ))
}

pub fn trie_oracle(n_keys: usize, seed: u64) -> Check {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(seed);
    let keys = random_keys(&mut rng, n_keys);
    let values: Vec<Vec<u32>> = (0..keys.len())
        .map(|i| {
            (0..rng.gen_range(1..=3))
                .map(|j| (i * 3 + j) as u32)
                .collect()
        })
        .collect();
    let trie = DoubleArrayTrie::build(&keys, &values).map_err(|e| e.to_string())?;
    let naive = NaiveDictionary::new(&keys, &values);

    for k in &keys {
        ensure!(
            trie.exact_lookup(k) == naive.exact(k),
            "exact_lookup({k:?})"
        );
    }
    // probe texts: concatenated keys, keys with tails, random noise
    let mut probes = 0usize;
    for round in 0..400 {
        let mut text = Vec::new();
        match round % 3 {
            0 => {
                for _ in 0..rng.gen_range(1..=4) {
                    text.extend_from_slice(&keys[rng.gen_range(0..keys.len())]);
                }
            }
            1 => {
                let k = &keys[rng.gen_range(0..keys.len())];
                text.extend_from_slice(&k[..rng.gen_range(0..=k.len())]);
                text.push(rng.gen());
            }
            _ => text.extend((0..rng.gen_range(0..24)).map(|_| rng.gen::<u8>())),
        }
        ensure!(
            trie.exact_lookup(&text) == naive.exact(&text),
            "exact_lookup probe {text:?}"
        );
        for pos in 0..=text.len() {
            let got = trie.common_prefix_search(&text, pos);
            let want = naive.prefixes(&text, pos);
            ensure!(
                got == want,
                "common_prefix_search({text:?}, {pos}): {got:?} vs {want:?}"
            );
            probes += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!(
        "{} keys, {probes} prefix probes agree in {:.2} s",
        keys.len(),
        elapsed.as_secs_f64()
    ))
}

const FUZZ_POOL: &[(u32, u32)] = &[
    (0x30, 0x39),       // digits
    (0x20, 0x7E),       // printable ASCII
    (0x3041, 0x309F),   // hiragana
    (0x30A1, 0x30FF),   // katakana
    (0x4E00, 0x4E80),   // kanji
    (0xFF10, 0xFF5A),   // full-width
    (0x1F600, 0x1F64F), // emoji
    (0x0400, 0x04FF),   // unmapped (Cyrillic)
    (0xE000, 0xE0FF),   // unmapped (private use)
    (0x3000, 0x3000),   // ideographic space
];

pub fn random_text(rng: &mut StdRng, max_len: usize, toy_words: &[&str]) -> String {
    let mut s = String::new();
    for _ in 0..rng.gen_range(0..=max_len) {
        if rng.gen_bool(0.15) {
            s.push_str(toy_words[rng.gen_range(0..toy_words.len())]);
            continue;
        }
        let (lo, hi) = FUZZ_POOL[rng.gen_range(0..FUZZ_POOL.len())];
        if let Some(c) = char::from_u32(rng.gen_range(lo..=hi)) {
            s.push(c);
        }
    }
    s
}

/// Coverage of one line: surfaces tile the non-space characters exactly.
pub fn check_coverage(tagger: &Tagger, line: &str) -> Result<(), String> {
    let tokens = tagger.tag(line);
    let chars: Vec<char> = line.chars().collect();
    let mut covered = vec![false; chars.len()];
    let mut last_end = 0;
    for t in &tokens {
        ensure!(!t.surface.is_empty(), "{line:?}: empty token");
        ensure!(t.span.start >= last_end, "{line:?}: overlapping spans");
        let s: String = chars[t.span.clone()].iter().collect();
        ensure!(
            s == t.surface,
            "{line:?}: span {:?} is {s:?}, surface {:?}",
            t.span,
            t.surface
        );
        ensure!(
            !t.surface.contains([' ', '\u{3000}']),
            "{line:?}: space inside {:?}",
            t.surface
        );
        covered[t.span.clone()].iter_mut().for_each(|c| *c = true);
        last_end = t.span.end;
    }
    for (i, c) in chars.iter().enumerate() {
        let space = *c == ' ' || *c == '\u{3000}';
        ensure!(
            covered[i] != space,
            "{line:?}: char {i} {c:?} covered={}",
            covered[i]
        );
    }
    let joined: String = tokens.iter().map(|t| t.surface.as_str()).collect();
    let stripped: String = line
        .chars()
        .filter(|c| *c != ' ' && *c != '\u{3000}')
        .collect();
    ensure!(joined == stripped, "{line:?}: surfaces join to {joined:?}");
    Ok(())
}

pub fn coverage_fuzz(n: usize, seed: u64) -> Check {
    let tagger = toy_tagger();
    let mut rng = StdRng::seed_from_u64(seed);
    let words = ["麩", "菓子", "すもも", "も", "2023", "見", "た", "受け渡し"];
    let mut tokens = 0;
    let mut lengths = 0;
    for _ in 0..n {
        let text = random_text(&mut rng, 30, &words);
        lengths += text.chars().count();
        let result = std::panic::catch_unwind(|| check_coverage(&tagger, &text));
        match result {
            Ok(r) => r?,
            Err(_) => return Err(format!("panic on {text:?}")),
        }
        tokens += tagger.tag(&text).len();
    }
    Ok(format!(
        "{n} strings ({lengths} chars, {tokens} tokens), all covered"
    ))
}

pub fn digit_grouping() -> Check {
    let dict = toy_dict();
    ensure!(
        dict.trie().exact_lookup("2023".as_bytes()).is_none(),
        "toy dictionary lists 2023"
    );
    let tokens = toy_tagger().tag("2023年");
    let got: Vec<(&str, bool)> = tokens
        .iter()
        .map(|t| (t.surface.as_str(), t.is_unknown))
        .collect();
    ensure!(got == [("2023", true), ("年", false)], "got {got:?}");
    let long = "1".repeat(60);
    let lens: Vec<usize> = toy_tagger()
        .tag(&long)
        .iter()
        .map(|t| t.span.len())
        .collect();
    ensure!(lens == [24, 24, 12], "60 digits split as {lens:?}");
    Ok("2023年 -> 2023(unknown) 年".into())
}

fn analysis(tagger: &Tagger, line: &str) -> Vec<(String, std::ops::Range<usize>, String, bool)> {
    tagger
        .tag(line)
        .into_iter()
        .map(|t| (t.surface, t.span, t.feature.display_csv(), t.is_unknown))
        .collect()
}

pub fn round_trip() -> Check {
    let first = compile_dir(&toy_source(), &MetaOverrides::default()).map_err(|e| e.to_string())?;
    let second =
        compile_dir(&toy_source(), &MetaOverrides::default()).map_err(|e| e.to_string())?;
    let bytes = first.save();
    ensure!(
        bytes == second.save(),
        "two compiles produced different bytes"
    );
    let loaded = CompiledDictionary::load(&bytes).map_err(|e| e.to_string())?;
    ensure!(loaded == first, "loaded dictionary differs structurally");
    ensure!(loaded.save() == bytes, "re-save differs");

    let a = Tagger::from_dictionary(first, &TaggerConfig::default()).unwrap();
    let b = Tagger::from_dictionary(loaded, &TaggerConfig::default()).unwrap();
    let corpus = corpus50();
    ensure!(corpus.len() == 50, "corpus has {} lines", corpus.len());
    for line in &corpus {
        ensure!(
            analysis(&a, line) == analysis(&b, line),
            "analysis differs on {line:?}"
        );
    }
    Ok(format!("{} bytes, 50 sentences identical", bytes.len()))
}

pub fn kotowari_bin() -> &'static str {
    env!("CARGO_BIN_EXE_kotowari")
}

/// Runs the binary with `args`, feeding `stdin`.
pub fn run_bin(args: &[&str], stdin: &str, envs: &[(&str, &str)]) -> (i32, Vec<u8>, String) {
    let mut cmd = Command::new(kotowari_bin());
    cmd.args(args)
        .env_remove("KOTOWARI_DICDIR")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    for (k, v) in envs {
        cmd.env(k, v);
    }
    let mut child = cmd.spawn().expect("spawn kotowari");
    child
        .stdin
        .take()
        .unwrap()
        .write_all(stdin.as_bytes())
        .unwrap();
    let out = child.wait_with_output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        out.stdout,
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

pub fn cli_goldens() -> Check {
    let dir = toy_dicdir();
    let dic = dir.path().to_str().unwrap();
    let input = format!("{SAMPLE}\n");
    let template = table1_template();
    let cases: [(&str, Vec<&str>); 3] = [
        ("sample.default.txt", vec!["-d", dic]),
        ("sample.wakati.txt", vec!["-d", dic, "-O", "wakati"]),
        ("sample.table1.txt", vec!["-d", dic, "-F", &template]),
    ];
    for (golden, args) in &cases {
        let want =
            fs::read(fixture("golden").join(golden)).map_err(|e| format!("{golden}: {e}"))?;
        let (code, out, err) = run_bin(args, &input, &[]);
        ensure!(code == 0, "{golden}: exit {code}: {err}");
        ensure!(
            out == want,
            "{golden}: output differs:\n{}",
            String::from_utf8_lossy(&out)
        );
    }
    let default = fs::read_to_string(fixture("golden/sample.default.txt")).unwrap();
    ensure!(
        default.ends_with("\nEOS\n"),
        "default golden lacks trailing EOS"
    );
    ensure!(
        default.lines().count() == 16,
        "default golden has {} lines",
        default.lines().count()
    );
    ensure!(
        default.starts_with("麩\t")
            && default
                .lines()
                .next()
                .unwrap()
                .contains("名詞-普通名詞-一般"),
        "first line is {:?}",
        default.lines().next()
    );
    Ok("default, wakati and table1 outputs byte-exact".into())
}

/// Builds each kind of broken dictionary file and returns (label, path,
/// expected kind).
pub fn broken_dictionaries(
    dir: &std::path::Path,
) -> Vec<(&'static str, std::path::PathBuf, DiagnosticKind)> {
    let good = toy_dict().save();
    let mut out = vec![(
        "missing path",
        dir.join("no/such/dictionary"),
        DiagnosticKind::MissingDictionary,
    )];
    let bad_magic = dir.join("bad_magic.ktd");
    fs::write(&bad_magic, b"MeCab dictionary, honest").unwrap();
    out.push(("bad magic", bad_magic, DiagnosticKind::NotADictionary));

    let mut v = good.clone();
    v[4..8].copy_from_slice(&(FORMAT_VERSION + 1).to_le_bytes());
    let version = dir.join("version.ktd");
    fs::write(&version, v).unwrap();
    out.push(("version mismatch", version, DiagnosticKind::VersionMismatch));

    let truncated = dir.join("truncated.ktd");
    fs::write(&truncated, &good[..good.len() / 2]).unwrap();
    out.push(("truncation", truncated, DiagnosticKind::Truncated));
    out
}

pub fn diagnostics() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let mut seen = Vec::new();
    for (label, path, kind) in broken_dictionaries(dir.path()) {
        let d = Tagger::new(TaggerConfig {
            dicdir: Some(path.clone()),
            ..TaggerConfig::default()
        })
        .err()
        .ok_or_else(|| format!("{label}: tagger constructed"))?;
        ensure!(d.kind == kind, "{label}: kind {:?}", d.kind);
        let text = d.to_string();
        ensure!(!d.probable_cause.is_empty(), "{label}: no probable cause");
        ensure!(
            text.contains("probable cause: "),
            "{label}: cause missing from text"
        );
        ensure!(!d.debug_info.is_empty(), "{label}: no debug info");
        ensure!(
            text.contains(&path.display().to_string()),
            "{label}: path missing"
        );
        ensure!(
            text.contains("FAQ") && text.contains(FAQ_URL),
            "{label}: no FAQ link"
        );
        ensure!(text.contains("any language"), "{label}: no language note");
        if kind == DiagnosticKind::MissingDictionary {
            ensure!(
                d.probable_cause == "dictionary not installed or wrong path",
                "{label}: cause {:?}",
                d.probable_cause
            );
        }
        if kind == DiagnosticKind::Truncated {
            ensure!(
                d.debug_info.iter().any(|(k, _)| k == "section")
                    && text.contains("truncated in section"),
                "{label}: no section named"
            );
        }
        if kind == DiagnosticKind::VersionMismatch {
            ensure!(
                text.contains(&format!("format version seen: {}", FORMAT_VERSION + 1)),
                "{label}: version not shown"
            );
        }
        seen.push(label);
    }
    Ok(seen.join(", "))
}

/// Repeats the fixture corpus until it reaches `bytes`.
pub fn bench_corpus(bytes: usize) -> String {
    let lines = corpus50();
    let mut s = String::with_capacity(bytes + 256);
    while s.len() < bytes {
        for l in &lines {
            s.push_str(l);
            s.push('\n');
        }
    }
    s
}

pub fn bench_harness() -> Check {
    let corpus = bench_corpus(1 << 20);
    let start = Instant::now();
    let tagger = Tagger::from_dictionary(
        CompiledDictionary::load(&toy_dict().save()).unwrap(),
        &TaggerConfig::default(),
    )
    .unwrap();
    let construction = start.elapsed();
    let mut report = run_bench(&tagger, &corpus, 10).map_err(|e| e.to_string())?;
    report.construction = Some(construction);
    ensure!(report.runs.len() == 10, "{} runs", report.runs.len());
    let text = report.to_string();
    ensure!(
        text.matches("run ").count() == 10 && text.contains("mean_ms="),
        "report:\n{text}"
    );

    let repeated = format!("{SAMPLE}\n").repeat(1000);
    let r = run_bench(&tagger, &repeated, 1).map_err(|e| e.to_string())?;
    ensure!(r.tokens == 15000, "sample x1000 gave {} tokens", r.tokens);
    ensure!(r.mean() == r.runs[0], "single-run mean differs");

    Ok(format!(
        "{} bytes, 10 runs, mean {:.1} ms, {} tokens every run, {:.2}M chars/s (unoptimized builds are slower)",
        corpus.len(),
        report.mean().as_secs_f64() * 1000.0,
        report.tokens,
        report.chars_per_sec() / 1e6
    ))
}
