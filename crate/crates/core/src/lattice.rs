//! Lattice construction and Viterbi decoding.
//!
//! Known words come from a common-prefix search at each reachable position.
//! Unknown words are generated from the character category of the first
//! character: when the category has `invoke` set or no known word starts
//! there, one candidate for the maximal same-category run (`group`, capped
//! at [`MAX_GROUPING_LEN`]) and one per length `1..=length` inside that run.
//!
//! The decoder minimizes the sum of word costs and connection costs,
//! including BOS and EOS transitions (context id 0 on both sides).
//! Among equally cheap predecessors it prefers the one starting earliest,
//! then known over unknown, then the lower entry index.

use std::ops::Range;

use thiserror::Error;

use crate::dict::{CompiledDictionary, EntryRef};
use crate::features::FeatureRecord;
use crate::source::{CharInfo, ConnectionMatrix};

/// Longest unknown-word run produced by a grouping category.
pub const MAX_GROUPING_LEN: usize = 24;

/// Context id of the virtual BOS and EOS nodes.
pub const BOS_EOS_ID: u16 = 0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("no path reaches the end of the sentence (dictionary lacks unknown-word templates?)")]
    Disconnected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeNode {
    pub start_char: usize,
    pub end_char: usize,
    pub entry: EntryRef,
    pub left_id: u16,
    pub right_id: u16,
    pub word_cost: i16,
    /// Cheapest accumulated cost from BOS through this node; `None` until
    /// decoded or when unreachable.
    pub best_cost: Option<i64>,
    /// Index of the best predecessor node, `None` for BOS.
    pub best_prev: Option<usize>,
}

impl LatticeNode {
    pub fn is_unknown(&self) -> bool {
        matches!(self.entry, EntryRef::Unknown { .. })
    }

    /// Total order used for tie-breaking between predecessors.
    pub fn tie_key(&self) -> (usize, EntryRef) {
        (self.start_char, self.entry)
    }
}

/// Candidate segmentation graph of one sentence.
#[derive(Debug, Clone, Default)]
pub struct Lattice {
    len_char: usize,
    /// Sorted by start position.
    nodes: Vec<LatticeNode>,
    /// Node indices grouped by end position.
    ends: Vec<Vec<usize>>,
    eos_cost: Option<i64>,
    eos_prev: Option<usize>,
}

impl Lattice {
    pub fn len_char(&self) -> usize {
        self.len_char
    }

    pub fn nodes(&self) -> &[LatticeNode] {
        &self.nodes
    }

    /// Nodes starting at `pos`.
    pub fn starting_at(&self, pos: usize) -> impl Iterator<Item = &LatticeNode> {
        let lo = self.nodes.partition_point(|n| n.start_char < pos);
        self.nodes[lo..]
            .iter()
            .take_while(move |n| n.start_char == pos)
    }

    /// Cost of the best full path, once decoded.
    pub fn best_cost(&self) -> Option<i64> {
        self.eos_cost
    }

    fn reset(&mut self, len_char: usize) {
        self.len_char = len_char;
        self.nodes.clear();
        self.ends.iter_mut().for_each(Vec::clear);
        self.ends.resize_with(len_char + 1, Vec::new);
        self.eos_cost = None;
        self.eos_prev = None;
    }

    fn reachable(&self, pos: usize) -> bool {
        pos == 0 || !self.ends[pos].is_empty()
    }

    /// Adds a node; nodes must be pushed in non-decreasing start order.
    pub fn push(&mut self, node: LatticeNode) {
        debug_assert!(node.start_char < node.end_char && node.end_char <= self.len_char);
        debug_assert!(self
            .nodes
            .last()
            .is_none_or(|n| n.start_char <= node.start_char));
        self.ends[node.end_char].push(self.nodes.len());
        self.nodes.push(node);
    }

    /// Empty lattice over a sentence of `len_char` characters, for callers
    /// assembling nodes by hand.
    pub fn with_len(len_char: usize) -> Self {
        let mut l = Self::default();
        l.reset(len_char);
        l
    }
}

struct Sentence<'a> {
    text: &'a str,
    /// Byte offset of each character, plus the total length.
    offsets: Vec<usize>,
    infos: Vec<CharInfo>,
}

impl<'a> Sentence<'a> {
    fn new(dict: &CompiledDictionary, text: &'a str) -> Self {
        let mut offsets = Vec::with_capacity(text.len() + 1);
        let mut infos = Vec::with_capacity(text.len());
        for (i, c) in text.char_indices() {
            offsets.push(i);
            infos.push(dict.chars().lookup(c));
        }
        offsets.push(text.len());
        Self {
            text,
            offsets,
            infos,
        }
    }

    fn len(&self) -> usize {
        self.infos.len()
    }

    fn char_at_byte(&self, byte: usize) -> usize {
        self.offsets.partition_point(|&o| o < byte)
    }

    /// End of the run of characters compatible with the category of `pos`.
    fn run_end(&self, pos: usize, limit: usize) -> usize {
        let cat = self.infos[pos].default;
        let max = self.len().min(pos.saturating_add(limit));
        (pos + 1..max)
            .find(|&k| !self.infos[k].is_kind_of(cat))
            .unwrap_or(max)
    }
}

fn node(dict: &CompiledDictionary, entry: EntryRef, start: usize, end: usize) -> LatticeNode {
    let v = dict.resolve(entry);
    LatticeNode {
        start_char: start,
        end_char: end,
        entry,
        left_id: v.left_id,
        right_id: v.right_id,
        word_cost: v.word_cost,
        best_cost: None,
        best_prev: None,
    }
}

fn push_unknown(
    dict: &CompiledDictionary,
    lattice: &mut Lattice,
    category: u8,
    start: usize,
    end: usize,
) {
    for t in 0..dict.num_unknown_templates(category) {
        let entry = EntryRef::Unknown {
            category,
            template: t as u16,
        };
        lattice.push(node(dict, entry, start, end));
    }
}

fn fill(dict: &CompiledDictionary, sentence: &Sentence<'_>, lattice: &mut Lattice) {
    let bytes = sentence.text.as_bytes();
    for pos in 0..sentence.len() {
        if !lattice.reachable(pos) {
            continue;
        }
        let mut has_known = false;
        for (len, ids) in dict.trie().common_prefix_iter(bytes, sentence.offsets[pos]) {
            let end = sentence.char_at_byte(sentence.offsets[pos] + len);
            for &id in ids {
                lattice.push(node(dict, EntryRef::Known(id), pos, end));
            }
            has_known = true;
        }

        let info = sentence.infos[pos];
        let cat = dict.chars().category(info.default);
        if has_known && !cat.invoke {
            continue;
        }
        let mut emitted = false;
        let run_end = sentence.run_end(pos, usize::MAX);
        let mut group_end = None;
        if cat.group {
            let end = run_end.min(pos + MAX_GROUPING_LEN);
            push_unknown(dict, lattice, info.default, pos, end);
            group_end = Some(end);
            emitted = true;
        }
        for k in 1..=cat.length as usize {
            let end = pos + k;
            if end > run_end {
                break;
            }
            if group_end == Some(end) {
                continue;
            }
            push_unknown(dict, lattice, info.default, pos, end);
            emitted = true;
        }
        if !emitted && !has_known {
            push_unknown(dict, lattice, info.default, pos, pos + 1);
        }
    }
}

/// Builds the lattice of `sentence`. Positions no path can reach are
/// skipped.
pub fn build_lattice(dict: &CompiledDictionary, sentence: &str) -> Lattice {
    let mut lattice = Lattice::default();
    build_lattice_into(dict, sentence, &mut lattice);
    lattice
}

/// Like [`build_lattice`], reusing `lattice`'s allocations.
pub fn build_lattice_into(dict: &CompiledDictionary, sentence: &str, lattice: &mut Lattice) {
    let s = Sentence::new(dict, sentence);
    lattice.reset(s.len());
    fill(dict, &s, lattice);
}

/// Chooses the cheapest predecessor among `candidates` for a node with
/// left context `left_id`.
fn best_predecessor(
    lattice: &Lattice,
    matrix: &ConnectionMatrix,
    pos: usize,
    left_id: u16,
) -> Option<(i64, Option<usize>)> {
    if pos == 0 {
        return Some((
            i64::from(matrix.cost(BOS_EOS_ID.into(), left_id.into())),
            None,
        ));
    }
    let mut best: Option<(i64, usize)> = None;
    for &u in &lattice.ends[pos] {
        let prev = &lattice.nodes[u];
        let Some(prev_cost) = prev.best_cost else {
            continue;
        };
        let cost = prev_cost + i64::from(matrix.cost(prev.right_id.into(), left_id.into()));
        let better = match best {
            None => true,
            Some((c, b)) => cost < c || (cost == c && prev.tie_key() < lattice.nodes[b].tie_key()),
        };
        if better {
            best = Some((cost, u));
        }
    }
    best.map(|(c, u)| (c, Some(u)))
}

/// Decodes the minimum-cost path, BOS and EOS excluded.
pub fn viterbi(
    lattice: &mut Lattice,
    matrix: &ConnectionMatrix,
) -> Result<Vec<LatticeNode>, LatticeError> {
    for i in 0..lattice.nodes.len() {
        let n = lattice.nodes[i];
        if let Some((cost, prev)) = best_predecessor(lattice, matrix, n.start_char, n.left_id) {
            let node = &mut lattice.nodes[i];
            node.best_cost = Some(cost + i64::from(n.word_cost));
            node.best_prev = prev;
        }
    }
    let (cost, prev) = best_predecessor(lattice, matrix, lattice.len_char, BOS_EOS_ID)
        .ok_or(LatticeError::Disconnected)?;
    lattice.eos_cost = Some(cost);
    lattice.eos_prev = prev;

    let mut path = Vec::new();
    let mut cur = prev;
    while let Some(i) = cur {
        path.push(lattice.nodes[i]);
        cur = lattice.nodes[i].best_prev;
    }
    path.reverse();
    Ok(path)
}

/// One analyzed word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    /// Character span within the analyzed text.
    pub span: Range<usize>,
    /// Index of the input line the token came from.
    pub line: usize,
    pub entry: EntryRef,
    pub is_unknown: bool,
    pub feature: FeatureRecord,
    pub word_cost: i16,
}

impl Token {
    pub fn surface(&self) -> &str {
        &self.surface
    }
}

fn tokens_from_path(
    dict: &CompiledDictionary,
    sentence: &str,
    path: &[LatticeNode],
    offset: usize,
    line: usize,
    out: &mut Vec<Token>,
) {
    let mut chars = sentence
        .char_indices()
        .map(|(i, _)| i)
        .chain([sentence.len()]);
    let mut cursor = 0usize;
    let mut byte_start = chars.next().unwrap_or(0);
    for n in path {
        debug_assert_eq!(n.start_char, cursor);
        let byte_end = chars
            .nth(n.end_char - cursor - 1)
            .expect("path stays inside the sentence");
        out.push(Token {
            surface: sentence[byte_start..byte_end].to_string(),
            span: offset + n.start_char..offset + n.end_char,
            line,
            entry: n.entry,
            is_unknown: n.is_unknown(),
            feature: dict.features(n.entry).clone(),
            word_cost: n.word_cost,
        });
        cursor = n.end_char;
        byte_start = byte_end;
    }
}

/// Segments `sentence` into tokens whose surfaces concatenate back to it.
pub fn tokenize(dict: &CompiledDictionary, sentence: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut lattice = Lattice::default();
    tokenize_into(dict, sentence, 0, 0, &mut lattice, &mut out);
    out
}

/// Appends the tokens of `sentence` to `out`, shifting spans by `offset`.
pub(crate) fn tokenize_into(
    dict: &CompiledDictionary,
    sentence: &str,
    offset: usize,
    line: usize,
    lattice: &mut Lattice,
    out: &mut Vec<Token>,
) {
    build_lattice_into(dict, sentence, lattice);
    // compile and load reject dictionaries without templates for every
    // category, so every reachable position has an outgoing node
    let path =
        viterbi(lattice, dict.matrix()).expect("lattice over a validated dictionary is connected");
    tokens_from_path(dict, sentence, &path, offset, line, out);
}
