//! Chi-squared pruning of the joint bag-of-patterns feature space.

use std::cmp::Ordering;
use rustc_hash::FxHashMap as HashMap;

use serde::{Deserialize, Serialize};

use crate::bop::{BagOfPatterns, WordKey};
use crate::error::{Result, WeaselError};
use crate::scalar::Scalar;

/// Retained features, ordered by decreasing chi-squared statistic.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "", from = "Vec<(WordKey, T)>", into = "Vec<(WordKey, T)>")]
pub struct FeatureDictionary<T: Scalar> {
    entries: Vec<(WordKey, T)>,
    index: HashMap<WordKey, u32>,
}

impl<T: Scalar> PartialEq for FeatureDictionary<T> {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl<T: Scalar> From<Vec<(WordKey, T)>> for FeatureDictionary<T> {
    fn from(entries: Vec<(WordKey, T)>) -> Self {
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, (k, _))| (*k, i as u32))
            .collect();
        Self { entries, index }
    }
}

impl<T: Scalar> From<FeatureDictionary<T>> for Vec<(WordKey, T)> {
    fn from(d: FeatureDictionary<T>) -> Self {
        d.entries
    }
}

impl<T: Scalar> FeatureDictionary<T> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn column(&self, key: WordKey) -> Option<usize> {
        self.index.get(&key).map(|&i| i as usize)
    }

    /// `(key, chi2)` in column order.
    pub fn entries(&self) -> &[(WordKey, T)] {
        &self.entries
    }
}

/// Sparse vector with strictly increasing indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector<T> {
    pub indices: Vec<u32>,
    pub values: Vec<T>,
}

impl<T: Scalar> SparseVector<T> {
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.indices
            .iter()
            .zip(&self.values)
            .map(|(&i, &v)| (i as usize, v))
    }

    pub fn dot(&self, dense: &[T]) -> T {
        self.iter().map(|(i, v)| dense[i] * v).sum()
    }

    pub fn squared_norm(&self) -> T {
        self.values.iter().map(|&v| v * v).sum()
    }
}

/// Per-class totals of every key, plus per-class total word mass.
#[derive(Debug, Clone, Default)]
pub struct ClassCounts {
    pub n_classes: usize,
    rows: HashMap<WordKey, u32>,
    table: Vec<u64>,
    pub class_totals: Vec<u64>,
}

impl ClassCounts {
    pub fn new(n_classes: usize) -> Self {
        Self {
            n_classes,
            rows: HashMap::default(),
            table: Vec::new(),
            class_totals: vec![0; n_classes],
        }
    }

    fn row_mut(&mut self, key: WordKey) -> &mut [u64] {
        let k = self.n_classes;
        let next = self.rows.len() as u32;
        let r = *self.rows.entry(key).or_insert(next) as usize;
        if r == next as usize {
            self.table.resize(self.table.len() + k, 0);
        }
        &mut self.table[r * k..(r + 1) * k]
    }

    pub fn add(&mut self, bag: &BagOfPatterns, class: usize) {
        for (key, count) in bag.iter() {
            self.row_mut(key)[class] += u64::from(count);
            self.class_totals[class] += u64::from(count);
        }
    }

    /// Number of distinct keys.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, key: WordKey) -> Option<&[u64]> {
        let k = self.n_classes;
        self.rows
            .get(&key)
            .map(|&r| &self.table[r as usize * k..(r as usize + 1) * k])
    }

    pub fn iter(&self) -> impl Iterator<Item = (WordKey, &[u64])> + '_ {
        let k = self.n_classes;
        self.rows
            .iter()
            .map(move |(&key, &r)| (key, &self.table[r as usize * k..(r as usize + 1) * k]))
    }

    /// Accumulators combine by addition.
    pub fn merge(mut self, other: ClassCounts) -> ClassCounts {
        for (key, row) in other.iter() {
            self.row_mut(key).iter_mut().zip(row).for_each(|(a, b)| *a += b);
        }
        self.class_totals
            .iter_mut()
            .zip(other.class_totals)
            .for_each(|(a, b)| *a += b);
        self
    }
}

/// Pearson statistic of the 2 x k table whose rows are "this feature" and
/// "every other word", columns the classes.
pub fn chi_squared<T: Scalar>(feature: &[u64], class_totals: &[u64]) -> T {
    let n: u64 = class_totals.iter().sum();
    if n == 0 {
        return T::zero();
    }
    let nt = T::from_u64(n).expect("count");
    let row: T = T::from_u64(feature.iter().sum()).expect("count");
    let rest = nt - row;
    let mut stat = T::zero();
    for (&observed, &total) in feature.iter().zip(class_totals) {
        let total = T::from_u64(total).expect("count");
        let observed = T::from_u64(observed).expect("count");
        for (o, e) in [
            (observed, row * total / nt),
            (total - observed, rest * total / nt),
        ] {
            if e > T::zero() {
                stat += (o - e) * (o - e) / e;
            }
        }
    }
    stat
}

/// Keeps the keys whose statistic reaches `threshold`.
pub fn chi_squared_filter<T: Scalar>(
    bags: &[BagOfPatterns],
    classes: &[usize],
    threshold: T,
) -> Result<FeatureDictionary<T>> {
    if bags.len() != classes.len() {
        return Err(WeaselError::ShapeMismatch {
            expected: bags.len(),
            found: classes.len(),
        });
    }
    let n_classes = classes.iter().max().map_or(0, |m| m + 1);
    let mut counts = ClassCounts::new(n_classes);
    for (bag, &y) in bags.iter().zip(classes) {
        counts.add(bag, y);
    }
    filter_counts(&counts, threshold)
}

/// Filtering step on an already aggregated table.
pub fn filter_counts<T: Scalar>(counts: &ClassCounts, threshold: T) -> Result<FeatureDictionary<T>> {
    let present = counts.class_totals.iter().filter(|&&t| t > 0).count();
    if present < 2 {
        return Err(WeaselError::InsufficientClasses(present));
    }
    let mut kept: Vec<(WordKey, T)> = counts
        .iter()
        .map(|(key, row)| (key, chi_squared::<T>(row, &counts.class_totals)))
        .filter(|(_, chi)| *chi >= threshold)
        .collect();
    kept.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });
    Ok(FeatureDictionary::from(kept))
}

/// How bag counts are turned into feature values.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scaling {
    /// Raw counts.
    #[default]
    Raw,
    /// Counts scaled to unit Euclidean norm.
    L2,
}

/// Projects a bag onto the dictionary; unknown keys are dropped.
pub fn vectorize<T: Scalar>(
    bag: &BagOfPatterns,
    dict: &FeatureDictionary<T>,
    scaling: Scaling,
) -> SparseVector<T> {
    let mut entries: Vec<(u32, T)> = bag
        .iter()
        .filter_map(|(k, c)| dict.index.get(&k).map(|&i| (i, T::from_u32(c).expect("count"))))
        .collect();
    entries.sort_unstable_by_key(|e| e.0);
    let (indices, mut values): (Vec<u32>, Vec<T>) = entries.into_iter().unzip();
    if scaling == Scaling::L2 {
        let norm = values.iter().map(|&v| v * v).sum::<T>().sqrt();
        if norm > T::zero() {
            values.iter_mut().for_each(|v| *v /= norm);
        }
    }
    SparseVector { indices, values }
}
