//! Brute-force reference implementations used to check the trie and the
//! decoder. Nothing here calls into the lattice or trie code.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fs;
use std::path::Path;

use kotowari::dict::{
    compile, CompiledDictionary, EntryRef, FeatureSchema, LexiconFile, MetaInput,
};
use kotowari::source::{parse_char_def, parse_lexicon, parse_matrix, parse_unk_def};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

// ---- trie ----

/// Exact lookup by hash map.
pub struct NaiveDictionary {
    map: HashMap<Vec<u8>, Vec<u32>>,
    keys: Vec<Vec<u8>>,
}

impl NaiveDictionary {
    pub fn new(keys: &[Vec<u8>], values: &[Vec<u32>]) -> Self {
        Self {
            map: keys.iter().cloned().zip(values.iter().cloned()).collect(),
            keys: keys.to_vec(),
        }
    }

    pub fn exact(&self, key: &[u8]) -> Option<&[u32]> {
        self.map.get(key).map(Vec::as_slice)
    }

    /// Every key that `text[start..]` starts with, shortest first.
    pub fn prefixes(&self, text: &[u8], start: usize) -> Vec<(usize, &[u32])> {
        let rest = &text[start..];
        let mut out: Vec<(usize, &[u32])> = self
            .keys
            .iter()
            .filter(|k| rest.starts_with(k))
            .map(|k| (k.len(), self.map[k].as_slice()))
            .collect();
        out.sort_by_key(|&(len, _)| len);
        out
    }
}

/// Sorted, unique, non-empty random keys over a small alphabet so that
/// prefixes are shared often. Mixes one- and multi-byte characters.
pub fn random_keys(rng: &mut StdRng, n: usize) -> Vec<Vec<u8>> {
    const ALPHABET: [&str; 8] = ["a", "b", "c", "\u{ff}", "あ", "い", "麩", "😀"];
    let mut keys = std::collections::BTreeSet::new();
    while keys.len() < n {
        let len = rng.gen_range(1..=6);
        let mut k = Vec::new();
        for _ in 0..len {
            k.extend_from_slice(ALPHABET.choose(rng).unwrap().as_bytes());
        }
        if rng.gen_bool(0.05) {
            // arbitrary bytes, not necessarily UTF-8
            k.push(rng.gen());
        }
        keys.insert(k);
    }
    keys.into_iter().collect()
}

// ---- decoder ----

#[derive(Debug, Clone)]
pub struct Category {
    pub name: String,
    pub invoke: bool,
    pub group: bool,
    pub length: u8,
    /// (left_id, right_id, cost) per template.
    pub templates: Vec<(u16, u16, i16)>,
}

/// A random small dictionary plus a sentence to decode.
#[derive(Debug, Clone)]
pub struct Instance {
    pub lexicon: Vec<(String, u16, u16, i16)>,
    /// Category 0 is DEFAULT.
    pub categories: Vec<Category>,
    /// (first, last, categories) in file order; later lines win.
    pub mappings: Vec<(char, char, Vec<usize>)>,
    pub ids: usize,
    /// `matrix[right * ids + left]`
    pub matrix: Vec<i16>,
    pub sentence: String,
}

// sorted by codepoint so any (a, b) pair with a <= b is a valid range
const ALPHABET: [char; 8] = ['a', 'b', 'c', 'd', 'あ', 'い', '字', '漢'];

impl Instance {
    /// `tie_heavy` draws costs from a tiny range so equal-cost paths are
    /// common.
    pub fn random(rng: &mut StdRng, tie_heavy: bool) -> Self {
        let cost = |rng: &mut StdRng| -> i16 {
            if tie_heavy {
                rng.gen_range(-2..=2)
            } else {
                rng.gen()
            }
        };
        let ids = rng.gen_range(1..=4);
        let sentence: String = (0..rng.gen_range(0..=10))
            .map(|_| *ALPHABET.choose(rng).unwrap())
            .collect();
        let chars: Vec<char> = sentence.chars().collect();

        let mut lexicon = Vec::new();
        for _ in 0..rng.gen_range(0..=15) {
            let len = rng.gen_range(1..=3);
            let surface: String = if !chars.is_empty() && rng.gen_bool(0.7) {
                let start = rng.gen_range(0..chars.len());
                let end = (start + len).min(chars.len());
                chars[start..end].iter().collect()
            } else {
                (0..len).map(|_| *ALPHABET.choose(rng).unwrap()).collect()
            };
            let l = rng.gen_range(0..ids) as u16;
            let r = rng.gen_range(0..ids) as u16;
            lexicon.push((surface, l, r, cost(rng)));
        }

        let names = ["DEFAULT", "ONE", "TWO", "THREE"];
        let n_cat = rng.gen_range(1..=names.len());
        let categories = (0..n_cat)
            .map(|i| Category {
                name: names[i].to_string(),
                invoke: rng.gen_bool(0.4),
                group: rng.gen_bool(0.5),
                length: rng.gen_range(0..=3),
                templates: (0..rng.gen_range(1..=2))
                    .map(|_| {
                        (
                            rng.gen_range(0..ids) as u16,
                            rng.gen_range(0..ids) as u16,
                            cost(rng),
                        )
                    })
                    .collect(),
            })
            .collect();

        let mut mappings = Vec::new();
        for _ in 0..rng.gen_range(0..=5) {
            let a = rng.gen_range(0..ALPHABET.len());
            let b = rng.gen_range(a..ALPHABET.len().min(a + 3));
            let mut cats: Vec<usize> = (0..n_cat).collect();
            cats.shuffle(rng);
            cats.truncate(rng.gen_range(1..=n_cat));
            mappings.push((ALPHABET[a], ALPHABET[b], cats));
        }

        let matrix = (0..ids * ids).map(|_| cost(rng)).collect();
        Self {
            lexicon,
            categories,
            mappings,
            ids,
            matrix,
            sentence,
        }
    }

    /// The dictionary in `dir` (MeCab source layout) with `sentence`.
    /// Only the file parsers are shared with the code under test.
    pub fn from_source_dir(dir: &Path, sentence: &str) -> Self {
        let read = |f: &str| fs::read_to_string(dir.join(f)).unwrap();
        let mut lexicon = Vec::new();
        let mut files: Vec<_> = fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .filter(|n| n.ends_with(".csv"))
            .collect();
        files.sort();
        for f in files {
            for e in parse_lexicon(&read(&f)).unwrap() {
                lexicon.push((
                    e.surface,
                    e.left_id as u16,
                    e.right_id as u16,
                    e.word_cost as i16,
                ));
            }
        }
        let matrix_src = parse_matrix(&read("matrix.def")).unwrap();
        assert_eq!(matrix_src.right_size(), matrix_src.left_size());
        let table = parse_char_def(&read("char.def")).unwrap();
        let unk = parse_unk_def(&read("unk.def")).unwrap();
        let categories = table
            .categories()
            .iter()
            .map(|c| Category {
                name: c.name.clone(),
                invoke: c.invoke,
                group: c.group,
                length: c.length,
                templates: unk
                    .entries
                    .iter()
                    .filter(|t| t.surface == c.name)
                    .map(|t| (t.left_id as u16, t.right_id as u16, t.word_cost as i16))
                    .collect(),
            })
            .collect::<Vec<_>>();
        let mappings = table
            .ranges()
            .iter()
            .map(|r| {
                let mut cats = vec![r.info.default as usize];
                cats.extend(
                    (0..categories.len())
                        .filter(|&i| i != r.info.default as usize && r.info.mask >> i & 1 == 1),
                );
                (
                    char::from_u32(r.start).unwrap(),
                    char::from_u32(r.end).unwrap(),
                    cats,
                )
            })
            .collect();
        let default = table.category_index("DEFAULT").unwrap() as usize;
        assert_eq!(default, 0, "oracle assumes DEFAULT is declared first");
        Self {
            lexicon,
            categories,
            mappings,
            ids: matrix_src.right_size(),
            matrix: matrix_src.costs().to_vec(),
            sentence: sentence.to_string(),
        }
    }

    pub fn lexicon_text(&self) -> String {
        self.lexicon
            .iter()
            .enumerate()
            .map(|(i, (s, l, r, c))| format!("{s},{l},{r},{c},w{i}\n"))
            .collect()
    }

    pub fn matrix_text(&self) -> String {
        let mut s = format!("{} {}\n", self.ids, self.ids);
        for r in 0..self.ids {
            for l in 0..self.ids {
                s.push_str(&format!("{r} {l} {}\n", self.matrix[r * self.ids + l]));
            }
        }
        s
    }

    pub fn char_def_text(&self) -> String {
        let mut s = String::new();
        for c in &self.categories {
            s.push_str(&format!(
                "{} {} {} {}\n",
                c.name, c.invoke as u8, c.group as u8, c.length
            ));
        }
        for (lo, hi, cats) in &self.mappings {
            let names: Vec<&str> = cats
                .iter()
                .map(|&i| self.categories[i].name.as_str())
                .collect();
            s.push_str(&format!(
                "0x{:04X}..0x{:04X} {}\n",
                *lo as u32,
                *hi as u32,
                names.join(" ")
            ));
        }
        s
    }

    pub fn unk_def_text(&self) -> String {
        let mut s = String::new();
        for c in &self.categories {
            for (t, (l, r, cost)) in c.templates.iter().enumerate() {
                s.push_str(&format!("{},{l},{r},{cost},u{t}\n", c.name));
            }
        }
        s
    }

    pub fn compile(&self) -> CompiledDictionary {
        compile(
            &[LexiconFile {
                name: "lex.csv".into(),
                entries: parse_lexicon(&self.lexicon_text()).unwrap(),
            }],
            &parse_matrix(&self.matrix_text()).unwrap(),
            &parse_char_def(&self.char_def_text()).unwrap(),
            &parse_unk_def(&self.unk_def_text()).unwrap(),
            &FeatureSchema::ipadic(),
            &MetaInput {
                name: "oracle".into(),
                version: "0".into(),
                source_note: String::new(),
            },
        )
        .unwrap()
    }

    fn conn(&self, right: u16, left: u16) -> i64 {
        self.matrix[right as usize * self.ids + left as usize] as i64
    }

    /// (default category, category set) of `c`.
    fn char_class(&self, c: char) -> (usize, Vec<usize>) {
        let mut class = (0, vec![0]);
        for (lo, hi, cats) in &self.mappings {
            if *lo <= c && c <= *hi {
                class = (cats[0], cats.clone());
            }
        }
        class
    }

    /// Every candidate word starting at `pos`.
    fn candidates(&self, chars: &[char], pos: usize) -> Vec<Cand> {
        let mut out = Vec::new();
        // entry ids follow a stable sort by surface bytes
        let mut order: Vec<usize> = (0..self.lexicon.len()).collect();
        order.sort_by(|&a, &b| {
            self.lexicon[a]
                .0
                .as_bytes()
                .cmp(self.lexicon[b].0.as_bytes())
        });
        for (id, &src) in order.iter().enumerate() {
            let (surface, l, r, c) = &self.lexicon[src];
            let w: Vec<char> = surface.chars().collect();
            if chars[pos..].starts_with(&w) {
                out.push(Cand {
                    start: pos,
                    end: pos + w.len(),
                    key: (pos, 0, id as u32, 0),
                    left: *l,
                    right: *r,
                    cost: *c,
                });
            }
        }
        let has_known = !out.is_empty();

        let (cat, _) = self.char_class(chars[pos]);
        let info = &self.categories[cat];
        if info.invoke || !has_known {
            let mut run = pos + 1;
            while run < chars.len() && self.char_class(chars[run]).1.contains(&cat) {
                run += 1;
            }
            let mut spans = Vec::new();
            let mut group_end = None;
            if info.group {
                let end = run.min(pos + 24);
                spans.push(end);
                group_end = Some(end);
            }
            for k in 1..=info.length as usize {
                let end = pos + k;
                if end > run {
                    break;
                }
                if Some(end) != group_end {
                    spans.push(end);
                }
            }
            if spans.is_empty() && !has_known {
                spans.push(pos + 1);
            }
            for end in spans {
                for (t, (l, r, c)) in info.templates.iter().enumerate() {
                    out.push(Cand {
                        start: pos,
                        end,
                        key: (pos, 1, cat as u32, t as u32),
                        left: *l,
                        right: *r,
                        cost: *c,
                    });
                }
            }
        }
        out
    }

    /// Enumerates every segmentation of the sentence.
    pub fn solve(&self) -> Solution {
        let chars: Vec<char> = self.sentence.chars().collect();
        let cands: Vec<Vec<Cand>> = (0..chars.len())
            .map(|p| self.candidates(&chars, p))
            .collect();
        let mut sol = Solution {
            best: None,
            costs: Vec::new(),
        };
        let mut path = Vec::new();
        self.walk(&cands, chars.len(), 0, 0, 0, &mut path, &mut sol);
        sol
    }

    #[allow(clippy::too_many_arguments)]
    fn walk(
        &self,
        cands: &[Vec<Cand>],
        n: usize,
        pos: usize,
        right: u16,
        acc: i64,
        path: &mut Vec<Cand>,
        sol: &mut Solution,
    ) {
        if pos == n {
            let total = acc + self.conn(right, 0);
            sol.costs.push(total);
            let better = match &sol.best {
                None => true,
                Some((c, best)) => match total.cmp(c) {
                    Ordering::Less => true,
                    Ordering::Greater => false,
                    Ordering::Equal => reversed_keys(path) < reversed_keys(best),
                },
            };
            if better {
                sol.best = Some((total, path.clone()));
            }
            return;
        }
        for c in &cands[pos] {
            let next = acc + self.conn(right, c.left) + c.cost as i64;
            path.push(*c);
            self.walk(cands, n, c.end, c.right, next, path, sol);
            path.pop();
        }
    }

    /// Rough upper bound on the number of paths, to keep enumeration cheap.
    pub fn path_count(&self) -> u128 {
        let chars: Vec<char> = self.sentence.chars().collect();
        let n = chars.len();
        let mut ways = vec![0u128; n + 1];
        ways[n] = 1;
        for p in (0..n).rev() {
            ways[p] = self
                .candidates(&chars, p)
                .iter()
                .map(|c| ways[c.end])
                .fold(0u128, |a, b| a.saturating_add(b));
        }
        ways[0]
    }
}

type Key = (usize, u8, u32, u32);

fn reversed_keys(path: &[Cand]) -> Vec<Key> {
    path.iter().rev().map(|c| c.key).collect()
}

#[derive(Debug, Clone, Copy)]
pub struct Cand {
    pub start: usize,
    pub end: usize,
    key: Key,
    left: u16,
    right: u16,
    cost: i16,
}

impl Cand {
    pub fn entry(&self) -> EntryRef {
        match self.key {
            (_, 0, id, _) => EntryRef::Known(id),
            (_, _, cat, t) => EntryRef::Unknown {
                category: cat as u8,
                template: t as u16,
            },
        }
    }
}

pub struct Solution {
    /// Cheapest total cost with the tie-break winner.
    pub best: Option<(i64, Vec<Cand>)>,
    /// Total cost of every path.
    pub costs: Vec<i64>,
}

impl Solution {
    pub fn best_spans(&self) -> Vec<(usize, usize, EntryRef)> {
        self.best
            .as_ref()
            .map(|(_, p)| p.iter().map(|c| (c.start, c.end, c.entry())).collect())
            .unwrap_or_default()
    }
}
