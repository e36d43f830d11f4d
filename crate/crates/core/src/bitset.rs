// Copyright 2026 The grarule Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Fixed-width bitsets over `u64` words.
//!
//! Every object set in the crate (granule extensions, relation rows,
//! recommended item sets) is a [`BitSet`]. Coverage and confidence are
//! computed with popcounts over these words.

use std::fmt;

const WORD_BITS: usize = 64;

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitSet {
    len: usize,
    words: Vec<u64>,
}

#[inline]
fn words_for(len: usize) -> usize {
    len.div_ceil(WORD_BITS)
}

impl BitSet {
    /// An empty set over a universe of `len` objects.
    pub fn new(len: usize) -> Self {
        BitSet {
            len,
            words: vec![0; words_for(len)],
        }
    }

    /// The set containing every object of the universe.
    pub fn full(len: usize) -> Self {
        let mut set = BitSet {
            len,
            words: vec![!0; words_for(len)],
        };
        set.clear_tail();
        set
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(len: usize, indices: I) -> Self {
        let mut set = BitSet::new(len);
        for i in indices {
            set.insert(i);
        }
        set
    }

    #[inline]
    fn clear_tail(&mut self) {
        let rem = self.len % WORD_BITS;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    /// Universe size (number of addressable bits).
    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Panics if `i` is outside the universe.
    #[inline]
    pub fn insert(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range for width {}", self.len);
        self.words[i / WORD_BITS] |= 1 << (i % WORD_BITS);
    }

    #[inline]
    pub fn remove(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range for width {}", self.len);
        self.words[i / WORD_BITS] &= !(1 << (i % WORD_BITS));
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        i < self.len && self.words[i / WORD_BITS] & (1 << (i % WORD_BITS)) != 0
    }

    #[inline]
    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// `|self ∩ other|` without allocating. Widths must agree.
    #[inline]
    pub fn intersection_count(&self, other: &BitSet) -> usize {
        debug_assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn intersection(&self, other: &BitSet) -> BitSet {
        let mut out = self.clone();
        out.intersect_with(other);
        out
    }

    pub fn intersect_with(&mut self, other: &BitSet) {
        assert_eq!(self.len, other.len, "bitset width mismatch");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn union_with(&mut self, other: &BitSet) {
        assert_eq!(self.len, other.len, "bitset width mismatch");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn is_subset(&self, other: &BitSet) -> bool {
        self.len == other.len
            && self
                .words
                .iter()
                .zip(&other.words)
                .all(|(a, b)| a & !b == 0)
    }

    pub fn is_disjoint(&self, other: &BitSet) -> bool {
        self.intersection_count(other) == 0
    }

    /// Indices of set bits in ascending order.
    pub fn ones(&self) -> Ones<'_> {
        Ones {
            words: &self.words,
            word_idx: 0,
            current: self.words.first().copied().unwrap_or(0),
        }
    }

    /// Lower-case hex of the words, least significant word first, each word
    /// as 16 digits.
    pub fn to_hex(&self) -> String {
        let mut s = String::with_capacity(self.words.len() * 16);
        for w in &self.words {
            s.push_str(&format!("{w:016x}"));
        }
        s
    }

    pub fn from_hex(len: usize, hex: &str) -> Option<BitSet> {
        let n = words_for(len);
        if hex.len() != n * 16 || !hex.is_ascii() {
            return None;
        }
        let mut words = Vec::with_capacity(n);
        for i in 0..n {
            words.push(u64::from_str_radix(&hex[i * 16..(i + 1) * 16], 16).ok()?);
        }
        let set = BitSet { len, words };
        let mut trimmed = set.clone();
        trimmed.clear_tail();
        (trimmed == set).then_some(set)
    }
}

pub struct Ones<'a> {
    words: &'a [u64],
    word_idx: usize,
    current: u64,
}

impl Iterator for Ones<'_> {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        loop {
            if self.current != 0 {
                let bit = self.current.trailing_zeros() as usize;
                self.current &= self.current - 1;
                return Some(self.word_idx * WORD_BITS + bit);
            }
            self.word_idx += 1;
            if self.word_idx >= self.words.len() {
                return None;
            }
            self.current = self.words[self.word_idx];
        }
    }
}

impl fmt::Debug for BitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitSet({}){{", self.len)?;
        for (n, i) in self.ones().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn full_masks_tail_bits() {
        let s = BitSet::full(70);
        assert_eq!(s.count_ones(), 70);
        assert!(!s.contains(70));
        assert_eq!(BitSet::full(0).count_ones(), 0);
        assert_eq!(BitSet::full(64).count_ones(), 64);
    }

    #[test]
    fn hex_rejects_bits_past_width() {
        let s = BitSet::from_hex(3, "000000000000000f");
        assert!(s.is_none());
        let s = BitSet::from_hex(4, "000000000000000f").unwrap();
        assert_eq!(s.count_ones(), 4);
    }

    proptest! {
        #[test]
        fn set_ops_agree_with_bool_vectors(
            a in proptest::collection::vec(any::<bool>(), 0..200),
            seed in any::<u64>(),
        ) {
            let b: Vec<bool> = a.iter().enumerate()
                .map(|(i, _)| (seed.rotate_left(i as u32 % 64) ^ i as u64) & 1 == 1)
                .collect();
            let sa = BitSet::from_indices(a.len(), (0..a.len()).filter(|&i| a[i]));
            let sb = BitSet::from_indices(b.len(), (0..b.len()).filter(|&i| b[i]));
            let and = (0..a.len()).filter(|&i| a[i] && b[i]).count();
            prop_assert_eq!(sa.intersection_count(&sb), and);
            prop_assert_eq!(sa.intersection(&sb).count_ones(), and);
            let mut u = sa.clone();
            u.union_with(&sb);
            prop_assert_eq!(u.count_ones(), (0..a.len()).filter(|&i| a[i] || b[i]).count());
            prop_assert_eq!(
                sa.is_subset(&sb),
                (0..a.len()).all(|i| !a[i] || b[i])
            );
            let ones: Vec<usize> = sa.ones().collect();
            prop_assert_eq!(ones, (0..a.len()).filter(|&i| a[i]).collect::<Vec<_>>());
            prop_assert_eq!(BitSet::from_hex(sa.len(), &sa.to_hex()), Some(sa));
        }
    }
}
