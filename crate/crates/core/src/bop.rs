//! Bag-of-patterns construction over all window lengths.

use std::collections::BTreeMap;

use rustc_hash::FxHashMap as HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WeaselError};
use crate::fourier::twiddles;
use crate::scalar::Scalar;
use crate::series::TimeSeries;
use crate::symbolic::{SymbolicModel, Word, MAX_WORD_LEN, SYMBOL_BITS};

/// Smallest window length considered.
pub const MIN_WINDOW: usize = 8;
/// Window lengths must fit in the key's 12-bit field.
pub const MAX_WINDOW: usize = (1 << WINDOW_BITS) - 1;

const WORD_BITS: u32 = SYMBOL_BITS * MAX_WORD_LEN as u32;
const WINDOW_BITS: u32 = 12;
const KIND_SHIFT: u32 = 2 * WORD_BITS;
const WINDOW_SHIFT: u32 = KIND_SHIFT + 1;
const WORD_MASK: u64 = (1 << WORD_BITS) - 1;

/// `(window length, unigram|bigram, previous word, word)` packed into 45 bits:
///
/// ```text
/// bits 33..45  window length
/// bit  32      1 = bigram
/// bits 16..32  previous word (bigrams only)
/// bits  0..16  word
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WordKey(pub u64);

impl WordKey {
    #[inline]
    pub fn unigram(window_len: usize, word: u32) -> Self {
        Self(((window_len as u64) << WINDOW_SHIFT) | u64::from(word))
    }

    #[inline]
    pub fn bigram(window_len: usize, prev: u32, word: u32) -> Self {
        Self(
            ((window_len as u64) << WINDOW_SHIFT)
                | (1 << KIND_SHIFT)
                | (u64::from(prev) << WORD_BITS)
                | u64::from(word),
        )
    }

    pub fn window_len(self) -> usize {
        (self.0 >> WINDOW_SHIFT) as usize
    }

    pub fn is_bigram(self) -> bool {
        (self.0 >> KIND_SHIFT) & 1 == 1
    }

    pub fn word(self) -> u32 {
        (self.0 & WORD_MASK) as u32
    }

    pub fn prev_word(self) -> Option<u32> {
        self.is_bigram()
            .then_some(((self.0 >> WORD_BITS) & WORD_MASK) as u32)
    }
}

impl fmt::Display for WordKey {
    /// Renders like `75 aa ca` with letters for symbols; word length is not
    /// stored in the key, so leading `a`s of short words are not shown.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn letters(code: u32) -> String {
            let len = ((32 - code.leading_zeros()).div_ceil(SYMBOL_BITS)).max(1) as usize;
            Word::unpack(code, len)
                .symbols
                .iter()
                .map(|&s| char::from(b'a' + s))
                .collect()
        }
        write!(f, "{}", self.window_len())?;
        if let Some(prev) = self.prev_word() {
            write!(f, " {}", letters(prev))?;
        }
        write!(f, " {}", letters(self.word()))
    }
}

/// Sparse word counts of one series across every window length.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BagOfPatterns {
    counts: HashMap<WordKey, u32>,
}

impl BagOfPatterns {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn increment(&mut self, key: WordKey) {
        *self.counts.entry(key).or_insert(0) += 1;
    }

    pub fn get(&self, key: WordKey) -> u32 {
        self.counts.get(&key).copied().unwrap_or(0)
    }

    /// Number of distinct keys.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (WordKey, u32)> + '_ {
        self.counts.iter().map(|(&k, &c)| (k, c))
    }

    /// Entries ordered by key.
    pub fn sorted(&self) -> Vec<(WordKey, u32)> {
        let mut v: Vec<_> = self.iter().collect();
        v.sort_unstable_by_key(|e| e.0);
        v
    }

    pub fn total(&self) -> u64 {
        self.counts.values().map(|&c| u64::from(c)).sum()
    }

    /// Total unigram occurrences for one window length.
    pub fn unigram_total(&self, window_len: usize) -> u64 {
        self.iter()
            .filter(|(k, _)| !k.is_bigram() && k.window_len() == window_len)
            .map(|(_, c)| u64::from(c))
            .sum()
    }

    /// Key-wise addition.
    pub fn merge(&mut self, other: &BagOfPatterns) {
        for (k, c) in other.iter() {
            *self.counts.entry(k).or_insert(0) += c;
        }
    }
}

/// Every window length in `[w_min, min(w_max, n)]`, optionally thinned by `stride`.
pub fn window_lengths(
    n: usize,
    w_min: usize,
    w_max: Option<usize>,
    stride: usize,
) -> Result<Vec<usize>> {
    if w_min < MIN_WINDOW {
        return Err(WeaselError::Config(format!(
            "minimum window length {w_min} is below {MIN_WINDOW}"
        )));
    }
    if stride == 0 {
        return Err(WeaselError::Config("window stride must be positive".into()));
    }
    let upper = w_max.unwrap_or(n).min(n).min(MAX_WINDOW);
    if w_min > upper {
        return Err(WeaselError::Config(format!(
            "empty window range [{w_min}, {upper}] for series length {n}"
        )));
    }
    Ok((w_min..=upper).step_by(stride).collect())
}

/// A model with its cached twiddle factors.
type Prepared<'m, T> = (&'m SymbolicModel<T>, Vec<(T, T)>);

/// Builds bags from a fixed set of per-length models, caching the twiddle
/// tables so that many series can be processed cheaply.
pub struct BagBuilder<'m, T: Scalar> {
    models: Vec<Prepared<'m, T>>,
    bigrams: bool,
    epsilon: T,
}

impl<'m, T: Scalar> BagBuilder<'m, T> {
    /// Fails if any of `lengths` has no model.
    pub fn new(
        models: &'m BTreeMap<usize, SymbolicModel<T>>,
        lengths: &[usize],
        bigrams: bool,
        epsilon: T,
    ) -> Result<Self> {
        let models = lengths
            .iter()
            .map(|w| {
                models
                    .get(w)
                    .map(|m| (m, twiddles(m.window_len)))
                    .ok_or_else(|| {
                        WeaselError::Config(format!("no symbolic model for window length {w}"))
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            models,
            bigrams,
            epsilon,
        })
    }

    /// Unigrams for every sliding window of every length that fits the
    /// series; bigrams pair the word at offset `a` with the word at `a - w`.
    pub fn build(&self, ts: &TimeSeries<T>) -> BagOfPatterns {
        let mut bag = BagOfPatterns::new();
        let values = ts.values();
        for (model, table) in &self.models {
            let w = model.window_len;
            if w > values.len() {
                continue;
            }
            let words = model.sliding_words(values, table, self.epsilon);
            for (a, &word) in words.iter().enumerate() {
                bag.increment(WordKey::unigram(w, word));
                if self.bigrams && a >= w {
                    bag.increment(WordKey::bigram(w, words[a - w], word));
                }
            }
        }
        bag
    }
}

/// One bag for `ts` over `lengths`.
pub fn build_bag<T: Scalar>(
    ts: &TimeSeries<T>,
    models: &BTreeMap<usize, SymbolicModel<T>>,
    lengths: &[usize],
    bigrams: bool,
    epsilon: T,
) -> Result<BagOfPatterns> {
    Ok(BagBuilder::new(models, lengths, bigrams, epsilon)?.build(ts))
}
