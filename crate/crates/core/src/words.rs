//! Dense indexing of all action words up to a length bound.
//!
//! Words are numbered by length, then lexicographically in signature action
//! order, so index order is exactly the enumeration order used for canonical
//! counterexamples.

use std::ops::Range;

use thiserror::Error;

use crate::model::ActionId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordSpaceError {
    #[error("{words} words up to length {max_len} exceed the limit of {limit}")]
    TooLarge {
        words: u128,
        max_len: usize,
        limit: usize,
    },
}

/// Default ceiling on the number of words an enumeration may touch.
pub const DEFAULT_WORD_LIMIT: usize = 50_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordSpace {
    k: usize,
    max_len: usize,
    /// `offsets[n]` is the index of the first word of length `n`; one extra
    /// entry holds the total count.
    offsets: Vec<usize>,
    powers: Vec<usize>,
}

impl WordSpace {
    pub fn new(num_actions: usize, max_len: usize, limit: usize) -> Result<Self, WordSpaceError> {
        let mut offsets = vec![0usize];
        let mut powers = vec![1usize];
        let mut total: u128 = 0;
        let mut pow: u128 = 1;
        for n in 0..=max_len {
            total += pow;
            if total > limit as u128 {
                // Report the full count for the message.
                let mut words = total;
                let mut p = pow;
                for _ in n + 1..=max_len {
                    p = p.saturating_mul(num_actions as u128);
                    words = words.saturating_add(p);
                }
                return Err(WordSpaceError::TooLarge {
                    words,
                    max_len,
                    limit,
                });
            }
            offsets.push(total as usize);
            pow *= num_actions as u128;
            if n < max_len {
                powers.push(pow.min(usize::MAX as u128) as usize);
            }
        }
        Ok(WordSpace {
            k: num_actions,
            max_len,
            offsets,
            powers,
        })
    }

    pub fn num_actions(&self) -> usize {
        self.k
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn total(&self) -> usize {
        self.offsets[self.max_len + 1]
    }

    /// Indices of the words of length `n`.
    pub fn len_range(&self, n: usize) -> Range<usize> {
        self.offsets[n]..self.offsets[n + 1]
    }

    /// Indices of the words of length at most `n`.
    pub fn upto(&self, n: usize) -> Range<usize> {
        0..self.offsets[n + 1]
    }

    pub fn len_of(&self, idx: usize) -> usize {
        self.offsets.partition_point(|&o| o <= idx) - 1
    }

    /// Index of the word of length `len` with base-k value `value`.
    #[inline]
    pub fn from_value(&self, len: usize, value: usize) -> usize {
        self.offsets[len] + value
    }

    pub fn index(&self, word: &[ActionId]) -> usize {
        let value = word.iter().fold(0, |v, a| v * self.k + a.index());
        self.from_value(word.len(), value)
    }

    pub fn word(&self, idx: usize) -> Vec<ActionId> {
        let mut out = Vec::new();
        self.decode_into(idx, &mut out);
        out
    }

    pub fn decode_into(&self, idx: usize, out: &mut Vec<ActionId>) {
        let n = self.len_of(idx);
        let mut value = idx - self.offsets[n];
        out.clear();
        out.resize(n, ActionId(0));
        for slot in out.iter_mut().rev() {
            *slot = ActionId::from_index(value % self.k);
            value /= self.k;
        }
    }

    /// The word without its last action, and that action.
    #[inline]
    pub fn split_last(&self, idx: usize) -> Option<(usize, ActionId)> {
        let n = self.len_of(idx);
        if n == 0 {
            return None;
        }
        let value = idx - self.offsets[n];
        Some((
            self.offsets[n - 1] + value / self.k,
            ActionId::from_index(value % self.k),
        ))
    }

    /// Index of `x·y` where `x` and `y` are given by index; the caller keeps
    /// the total length within the bound.
    #[inline]
    pub fn concat(&self, x: usize, y: usize) -> usize {
        let (lx, ly) = (self.len_of(x), self.len_of(y));
        let vx = x - self.offsets[lx];
        let vy = y - self.offsets[ly];
        self.offsets[lx + ly] + vx * self.powers[ly] + vy
    }
}
