//! Byte-wise double-array trie.
//!
//! A state `s` has a transition on byte `b` to `t = base[s] + b + 1` iff
//! `check[t] == s`. Label `0` is reserved for the end-of-key marker: the
//! terminal slot `base[s]` (when owned by `s`) stores `-(key_index + 1)` in
//! its own `base` cell. Free slots have `check == -1`.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrieError {
    #[error("key {0} is empty")]
    EmptyKey(usize),
    #[error("key {0} is not strictly greater than the previous key")]
    Unsorted(usize),
    #[error("{keys} keys but {values} value lists")]
    LengthMismatch { keys: usize, values: usize },
    #[error("too many trie nodes")]
    TooLarge,
    #[error("malformed trie arrays: {0}")]
    Malformed(&'static str),
}

const FREE: i32 = -1;
const ROOT: usize = 0;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DoubleArrayTrie {
    base: Vec<i32>,
    check: Vec<i32>,
    /// `values[value_offsets[k]..value_offsets[k + 1]]` belong to key `k`.
    value_offsets: Vec<u32>,
    values: Vec<u32>,
}

struct Builder<'a, K> {
    keys: &'a [K],
    base: Vec<i32>,
    check: Vec<i32>,
    next_check_pos: usize,
}

impl<K: AsRef<[u8]>> Builder<'_, K> {
    fn ensure(&mut self, len: usize) {
        if len > self.check.len() {
            let new_len = len.max(self.check.len() * 2);
            self.base.resize(new_len, 0);
            self.check.resize(new_len, FREE);
        }
    }

    fn is_free(&self, pos: usize) -> bool {
        pos >= self.check.len() || self.check[pos] == FREE
    }

    /// Finds the smallest base such that every `base + label` slot is free.
    fn find_base(&mut self, labels: &[usize]) -> usize {
        let first = labels[0];
        let mut pos = self.next_check_pos.max(first + 1);
        let start = pos;
        let mut occupied = 0usize;
        loop {
            if !self.is_free(pos) {
                occupied += 1;
                pos += 1;
                continue;
            }
            let base = pos - first;
            if labels[1..].iter().all(|&l| self.is_free(base + l)) {
                // skip densely packed prefixes on later searches
                if occupied * 20 >= (pos - start + 1) * 19 {
                    self.next_check_pos = pos;
                }
                return base;
            }
            pos += 1;
        }
    }

    fn build(&mut self) -> Result<(), TrieError> {
        // (state, key range, depth)
        let mut stack = vec![(ROOT, 0usize, self.keys.len(), 0usize)];
        let mut labels = Vec::new();
        let mut children = Vec::new();
        while let Some((state, lo, hi, depth)) = stack.pop() {
            labels.clear();
            children.clear();
            let mut i = lo;
            while i < hi {
                let key = self.keys[i].as_ref();
                if key.len() == depth {
                    labels.push(0);
                    children.push((i, i + 1));
                    i += 1;
                    continue;
                }
                let byte = key[depth];
                let mut j = i + 1;
                while j < hi && self.keys[j].as_ref()[depth] == byte {
                    j += 1;
                }
                labels.push(byte as usize + 1);
                children.push((i, j));
                i = j;
            }
            if labels.is_empty() {
                // only the root of an empty key set
                self.base[state] = 1;
                continue;
            }
            let base = self.find_base(&labels);
            let max = base + labels.last().copied().unwrap_or(0);
            if max >= i32::MAX as usize {
                return Err(TrieError::TooLarge);
            }
            self.ensure(max + 1);
            self.base[state] = base as i32;
            for &label in &labels {
                self.check[base + label] = state as i32;
            }
            // push in reverse so children are expanded in label order
            for (&label, &(clo, chi)) in labels.iter().zip(&children).rev() {
                let child = base + label;
                if label == 0 {
                    self.base[child] = -(clo as i32) - 1;
                } else {
                    stack.push((child, clo, chi, depth + 1));
                }
            }
        }
        Ok(())
    }
}

impl DoubleArrayTrie {
    /// Builds a trie over strictly ascending, non-empty keys. `values[k]` is
    /// the entry-id list returned for `keys[k]`.
    pub fn build<K: AsRef<[u8]>>(keys: &[K], values: &[Vec<u32>]) -> Result<Self, TrieError> {
        if keys.len() != values.len() {
            return Err(TrieError::LengthMismatch {
                keys: keys.len(),
                values: values.len(),
            });
        }
        if keys.len() >= i32::MAX as usize {
            return Err(TrieError::TooLarge);
        }
        for (i, k) in keys.iter().enumerate() {
            if k.as_ref().is_empty() {
                return Err(TrieError::EmptyKey(i));
            }
            if i > 0 && keys[i - 1].as_ref() >= k.as_ref() {
                return Err(TrieError::Unsorted(i));
            }
        }

        let mut b = Builder {
            keys,
            base: vec![0; 512],
            check: vec![FREE; 512],
            next_check_pos: 1,
        };
        b.check[ROOT] = 0;
        b.build()?;

        let used = b
            .check
            .iter()
            .rposition(|&c| c != FREE)
            .map_or(1, |p| p + 1);
        b.base.truncate(used);
        b.check.truncate(used);

        let mut value_offsets = Vec::with_capacity(values.len() + 1);
        let mut flat = Vec::new();
        value_offsets.push(0);
        for v in values {
            flat.extend_from_slice(v);
            value_offsets.push(u32::try_from(flat.len()).map_err(|_| TrieError::TooLarge)?);
        }
        Ok(Self {
            base: b.base,
            check: b.check,
            value_offsets,
            values: flat,
        })
    }

    /// Reassembles a trie from serialized arrays, rejecting arrays whose
    /// terminal slots or value offsets are out of range.
    pub fn from_parts(
        base: Vec<i32>,
        check: Vec<i32>,
        value_offsets: Vec<u32>,
        values: Vec<u32>,
    ) -> Result<Self, TrieError> {
        if base.len() != check.len() || base.is_empty() {
            return Err(TrieError::Malformed("base/check length"));
        }
        if value_offsets.first() != Some(&0)
            || value_offsets.windows(2).any(|w| w[0] > w[1])
            || *value_offsets.last().unwrap_or(&0) as usize != values.len()
        {
            return Err(TrieError::Malformed("value offsets"));
        }
        let keys = value_offsets.len() - 1;
        for (i, &c) in check.iter().enumerate() {
            if c < FREE || c as i64 >= check.len() as i64 {
                return Err(TrieError::Malformed("check out of range"));
            }
            if i != ROOT && c != FREE && base[i] < 0 && (-(base[i] as i64) - 1) as usize >= keys {
                return Err(TrieError::Malformed("terminal key index"));
            }
        }
        Ok(Self {
            base,
            check,
            value_offsets,
            values,
        })
    }

    pub fn base(&self) -> &[i32] {
        &self.base
    }

    pub fn check(&self) -> &[i32] {
        &self.check
    }

    pub fn value_offsets(&self) -> &[u32] {
        &self.value_offsets
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn num_keys(&self) -> usize {
        self.value_offsets.len() - 1
    }

    #[inline]
    fn child(&self, state: usize, label: usize) -> Option<usize> {
        let t = self.base[state] as i64 + label as i64;
        if t < 0 || t as usize >= self.check.len() {
            return None;
        }
        let t = t as usize;
        (self.check[t] == state as i32).then_some(t)
    }

    #[inline]
    fn terminal(&self, state: usize) -> Option<&[u32]> {
        let t = self.child(state, 0)?;
        let v = self.base[t];
        if v >= 0 {
            return None;
        }
        let k = (-(v as i64) - 1) as usize;
        let lo = *self.value_offsets.get(k)? as usize;
        let hi = *self.value_offsets.get(k + 1)? as usize;
        self.values.get(lo..hi)
    }

    /// Entry ids stored for exactly `key`.
    pub fn exact_lookup(&self, key: &[u8]) -> Option<&[u32]> {
        let mut s = ROOT;
        for &b in key {
            s = self.child(s, b as usize + 1)?;
        }
        if s == ROOT {
            return None;
        }
        self.terminal(s)
    }

    /// Iterates over every key that is a prefix of `text[start..]`, shortest
    /// first, yielding `(match length in bytes, entry ids)`.
    pub fn common_prefix_iter<'t, 's>(
        &'t self,
        text: &'s [u8],
        start: usize,
    ) -> PrefixIter<'t, 's> {
        PrefixIter {
            trie: self,
            text,
            start,
            pos: start,
            state: Some(ROOT),
        }
    }

    pub fn common_prefix_search(&self, text: &[u8], start: usize) -> Vec<(usize, &[u32])> {
        self.common_prefix_iter(text, start).collect()
    }
}

pub struct PrefixIter<'t, 's> {
    trie: &'t DoubleArrayTrie,
    text: &'s [u8],
    start: usize,
    pos: usize,
    state: Option<usize>,
}

impl<'t> Iterator for PrefixIter<'t, '_> {
    type Item = (usize, &'t [u32]);

    fn next(&mut self) -> Option<Self::Item> {
        let trie = self.trie;
        while let Some(s) = self.state {
            let Some(&b) = self.text.get(self.pos) else {
                self.state = None;
                break;
            };
            self.pos += 1;
            self.state = trie.child(s, b as usize + 1);
            if let Some(t) = self.state {
                if let Some(ids) = trie.terminal(t) {
                    return Some((self.pos - self.start, ids));
                }
            }
        }
        None
    }
}
