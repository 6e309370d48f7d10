//! Bit-packed vectors and square matrices with popcount kernels.
//!
//! Bits are stored little-endian inside 64-bit words: bit `i` lives in word
//! `i / 64` at position `i % 64`. Padding bits past `len` are always zero.

use alloc::vec;
use alloc::vec::Vec;

pub(crate) const WORD_BITS: usize = 64;

#[inline]
pub(crate) fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD_BITS)
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct BitVec {
    words: Vec<u64>,
    len: usize,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; words_for(len)],
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = Self {
            words: vec![!0; words_for(len)],
            len,
        };
        v.clear_padding();
        v
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut v = Self::zeros(len);
        for i in indices {
            v.set(i);
        }
        v
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / WORD_BITS] >> (i % WORD_BITS) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / WORD_BITS] |= 1 << (i % WORD_BITS);
    }

    #[inline]
    pub fn unset(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / WORD_BITS] &= !(1 << (i % WORD_BITS));
    }

    pub fn clear(&mut self) {
        self.words.fill(0);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Sets every bit in `start..end`.
    pub fn set_range(&mut self, start: usize, end: usize) {
        debug_assert!(start <= end && end <= self.len);
        for i in start..end {
            self.set(i);
        }
    }

    /// True if any bit in `start..end` is set.
    pub fn any_in_range(&self, start: usize, end: usize) -> bool {
        any_in_range(&self.words, start, end)
    }

    pub fn or_assign(&mut self, other: &[u64]) {
        debug_assert_eq!(self.words.len(), other.len());
        for (a, b) in self.words.iter_mut().zip(other) {
            *a |= b;
        }
    }

    pub fn iter_ones(&self) -> Ones<'_> {
        Ones::new(&self.words)
    }

    fn clear_padding(&mut self) {
        let tail = self.len % WORD_BITS;
        if tail != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
    }
}

/// Popcount of `a & b`.
#[inline]
pub fn and_count(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones()).sum()
}

/// True if any bit in `start..end` of `words` is set.
pub fn any_in_range(words: &[u64], start: usize, end: usize) -> bool {
    if start >= end {
        return false;
    }
    let (first, last) = (start / WORD_BITS, (end - 1) / WORD_BITS);
    let lo_mask = !0u64 << (start % WORD_BITS);
    let hi_mask = !0u64 >> (WORD_BITS - 1 - (end - 1) % WORD_BITS);
    if first == last {
        return words[first] & lo_mask & hi_mask != 0;
    }
    words[first] & lo_mask != 0
        || words[first + 1..last].iter().any(|&w| w != 0)
        || words[last] & hi_mask != 0
}

/// Iterator over set bit positions, ascending.
pub struct Ones<'a> {
    words: &'a [u64],
    index: usize,
    current: u64,
}

impl<'a> Ones<'a> {
    pub fn new(words: &'a [u64]) -> Self {
        Self {
            words,
            index: 0,
            current: words.first().copied().unwrap_or(0),
        }
    }
}

impl Iterator for Ones<'_> {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        while self.current == 0 {
            self.index += 1;
            if self.index >= self.words.len() {
                return None;
            }
            self.current = self.words[self.index];
        }
        let bit = self.current.trailing_zeros() as usize;
        self.current &= self.current - 1;
        Some(self.index * WORD_BITS + bit)
    }
}

/// Square bit matrix, one packed row per neuron.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BitMatrix {
    n: usize,
    stride: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn new(n: usize) -> Self {
        let stride = words_for(n);
        Self {
            n,
            stride,
            data: vec![0; stride * n],
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.stride..(i + 1) * self.stride]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[i * self.stride + j / WORD_BITS] >> (j % WORD_BITS) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize) {
        self.data[i * self.stride + j / WORD_BITS] |= 1 << (j % WORD_BITS);
    }

    /// Sets `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set_sym(&mut self, i: usize, j: usize) {
        self.set(i, j);
        self.set(j, i);
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// `out[i] = popcount(row_i & state)` for every row.
    ///
    /// Sparse states accumulate the rows of their active neurons (valid for
    /// symmetric matrices, which is all this crate stores); dense states take
    /// one popcount per row.
    pub fn symmetric_scores(&self, state: &BitVec, active: usize, out: &mut [u32]) {
        debug_assert_eq!(state.len(), self.n);
        debug_assert_eq!(out.len(), self.n);
        if active * 4 < self.stride * WORD_BITS / 8 {
            out.fill(0);
            for j in state.iter_ones() {
                for i in Ones::new(self.row(j)) {
                    out[i] += 1;
                }
            }
        } else {
            for (i, o) in out.iter_mut().enumerate() {
                *o = and_count(self.row(i), state.words());
            }
        }
    }
}
