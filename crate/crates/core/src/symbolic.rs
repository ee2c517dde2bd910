//! Supervised symbolic representation of windows.
//!
//! Each window length gets its own [`SymbolicModel`]: the `l` Fourier values
//! with the largest one-way ANOVA F statistic across classes, each quantized
//! by entropy-driven bins fitted on the order line of that value.

use std::borrow::Borrow;
use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WeaselError};
use crate::fourier::{
    coefficient_subset, dft_with, half_spectrum_len, twiddles, CoefficientId,
    FourierCoefficients, MomentaryDft, Part,
};
use crate::scalar::Scalar;
use crate::series::znormalize;

/// Two information-gain values closer than this are treated as equal.
pub const GAIN_TOLERANCE: f64 = 1e-12;

/// Bits used per symbol when packing words; supports alphabets up to 4.
pub const SYMBOL_BITS: u32 = 2;
pub const MAX_ALPHABET: usize = 1 << SYMBOL_BITS;
pub const MAX_WORD_LEN: usize = 8;

/// One-way ANOVA F statistic `MS_B / MS_W` over the given groups.
///
/// Returns `+inf` when the groups have no spread of their own but different
/// means, and `0` when all group means coincide.
pub fn anova_f<T: Scalar, G: AsRef<[T]>>(groups: &[G]) -> Result<T> {
    let groups: Vec<&[T]> = groups
        .iter()
        .map(AsRef::as_ref)
        .filter(|g| !g.is_empty())
        .collect();
    if groups.len() < 2 {
        return Err(WeaselError::InsufficientGroups(groups.len()));
    }
    let k = groups.len();
    let total: usize = groups.iter().map(|g| g.len()).sum();
    let grand_mean = groups.iter().flat_map(|g| g.iter().copied()).sum::<T>() / T::from_count(total);

    let mut ss_between = T::zero();
    let mut ss_within = T::zero();
    for g in &groups {
        let mean = g.iter().copied().sum::<T>() / T::from_count(g.len());
        let d = mean - grand_mean;
        ss_between += T::from_count(g.len()) * d * d;
        ss_within += g.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>();
    }
    if ss_between <= T::zero() {
        return Ok(T::zero());
    }
    if ss_within <= T::zero() || total == k {
        return Ok(T::infinity());
    }
    let ms_between = ss_between / T::from_count(k - 1);
    let ms_within = ss_within / T::from_count(total - k);
    Ok(ms_between / ms_within)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnovaScore<T> {
    pub id: CoefficientId,
    pub f_value: T,
}

/// Descending F, ties broken by lower index then real before imaginary.
fn score_order<T: Scalar>(a: &AnovaScore<T>, b: &AnovaScore<T>) -> Ordering {
    b.f_value
        .partial_cmp(&a.f_value)
        .unwrap_or(Ordering::Equal)
        .then(a.id.cmp(&b.id))
}

/// F statistic for every Fourier value of `spectra`, sorted best first.
pub fn score_coefficients<T: Scalar, S: Borrow<FourierCoefficients<T>>>(
    spectra: &[S],
    classes: &[usize],
) -> Result<Vec<AnovaScore<T>>> {
    if spectra.len() != classes.len() {
        return Err(WeaselError::ShapeMismatch {
            expected: spectra.len(),
            found: classes.len(),
        });
    }
    let n_classes = classes.iter().max().map_or(0, |m| m + 1);
    let m = spectra.iter().map(|fc| fc.borrow().len()).min().unwrap_or(0);
    let mut groups: Vec<Vec<T>> = vec![Vec::new(); n_classes];
    let mut scores = Vec::with_capacity(2 * m);
    for id in CoefficientId::all(m) {
        groups.iter_mut().for_each(Vec::clear);
        for (fc, &class) in spectra.iter().zip(classes) {
            groups[class].push(fc.borrow().get(id).expect("index below min spectrum length"));
        }
        let f_value = anova_f(&groups)?;
        scores.push(AnovaScore { id, f_value });
    }
    scores.sort_by(score_order);
    Ok(scores)
}

/// The `l` Fourier values with the largest F statistic.
pub fn select_coefficients<T: Scalar, S: Borrow<FourierCoefficients<T>>>(
    spectra: &[S],
    classes: &[usize],
    l: usize,
) -> Result<Vec<AnovaScore<T>>> {
    let available = 2 * spectra.iter().map(|fc| fc.borrow().len()).min().unwrap_or(0);
    if l > available {
        return Err(WeaselError::Config(format!(
            "word length {l} exceeds the {available} available Fourier values"
        )));
    }
    let mut scores = score_coefficients(spectra, classes)?;
    scores.truncate(l);
    Ok(scores)
}

/// First `l` Fourier values skipping the (always zero) DC term:
/// real1, imag1, real2, imag2, ...
pub fn low_pass_coefficients(m: usize, l: usize) -> Result<Vec<CoefficientId>> {
    let ids: Vec<_> = CoefficientId::all(m).skip(2).take(l).collect();
    if ids.len() < l {
        return Err(WeaselError::Config(format!(
            "word length {l} exceeds the {} non-constant Fourier values",
            ids.len()
        )));
    }
    Ok(ids)
}

fn entropy_of_counts<T: Scalar>(counts: &[usize], total: usize) -> T {
    if total == 0 {
        return T::zero();
    }
    let n = T::from_count(total);
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = T::from_count(c) / n;
            -p * p.log2()
        })
        .sum()
}

fn class_counts(labels: impl Iterator<Item = usize>) -> (Vec<usize>, usize) {
    let mut counts = Vec::new();
    let mut total = 0;
    for y in labels {
        if y >= counts.len() {
            counts.resize(y + 1, 0);
        }
        counts[y] += 1;
        total += 1;
    }
    (counts, total)
}

/// Base-2 entropy of a multiset of class ids.
pub fn entropy<T: Scalar>(labels: &[usize]) -> Result<T> {
    if labels.is_empty() {
        return Err(WeaselError::EmptyPartition);
    }
    let (counts, total) = class_counts(labels.iter().copied());
    Ok(entropy_of_counts(&counts, total))
}

/// Information gain of splitting `values` into `<= sp` and `> sp`.
pub fn split_gain<T: Scalar>(values: &[(T, usize)], sp: T) -> Result<T> {
    if values.is_empty() {
        return Err(WeaselError::EmptyPartition);
    }
    let (all, n) = class_counts(values.iter().map(|&(_, y)| y));
    let (left, n_left) = class_counts(values.iter().filter(|(v, _)| *v <= sp).map(|&(_, y)| y));
    let n_right = n - n_left;
    if n_left == 0 || n_right == 0 {
        return Err(WeaselError::InvalidSplit(sp.as_f64()));
    }
    let right: Vec<usize> = all
        .iter()
        .enumerate()
        .map(|(y, &c)| c - left.get(y).copied().unwrap_or(0))
        .collect();
    let total = entropy_of_counts::<T>(&all, n);
    let weighted = (T::from_count(n_left) * entropy_of_counts::<T>(&left, n_left)
        + T::from_count(n_right) * entropy_of_counts::<T>(&right, n_right))
        / T::from_count(n);
    Ok((total - weighted).max(T::zero()).min(total))
}

/// Strictly increasing split points; `len() + 1` bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent, bound = "")]
pub struct BinBoundaries<T: Scalar>(Vec<T>);

impl<T: Scalar> BinBoundaries<T> {
    pub fn new(points: Vec<T>) -> Result<Self> {
        if points.windows(2).any(|p| p[0] >= p[1]) || points.iter().any(|p| !p.is_finite()) {
            return Err(WeaselError::Config(
                "bin boundaries must be finite and strictly increasing".into(),
            ));
        }
        Ok(Self(points))
    }

    pub fn points(&self) -> &[T] {
        &self.0
    }

    pub fn bins(&self) -> usize {
        self.0.len() + 1
    }

    /// Bin index of `v`; a value equal to a boundary falls into the lower bin.
    #[inline]
    pub fn symbol(&self, v: T) -> u8 {
        self.0.partition_point(|&b| b < v) as u8
    }
}

/// Appends boundaries past everything seen so far until `count` exist.
fn pad_boundaries<T: Scalar>(points: &mut Vec<T>, max_value: T, count: usize) {
    let mut last = points.last().copied().map_or(max_value, |b| b.max(max_value));
    while points.len() < count {
        last += T::one();
        points.push(last);
    }
}

fn sort_pairs<T: Scalar>(values: &[(T, usize)]) -> Vec<(T, usize)> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));
    sorted
}

/// Best information-gain split of a sorted order line. Candidates sit between
/// consecutive distinct values; near-equal gains go to the split whose left
/// side is closest to half the partition, then to the leftmost one.
///
/// Returns `(left_len, gain)`, or `None` when all values are equal.
fn best_split<T: Scalar>(sorted: &[(T, usize)], n_classes: usize) -> Option<(usize, T)> {
    let n = sorted.len();
    let mut total = vec![0usize; n_classes];
    for &(_, y) in sorted {
        total[y] += 1;
    }
    let parent = entropy_of_counts::<T>(&total, n);
    let nt = T::from_count(n);

    let mut left = vec![0usize; n_classes];
    let mut right = total.clone();
    let mut candidates: Vec<(usize, T)> = Vec::new();
    for i in 1..n {
        let y = sorted[i - 1].1;
        left[y] += 1;
        right[y] -= 1;
        if sorted[i - 1].0 < sorted[i].0 {
            let weighted = (T::from_count(i) * entropy_of_counts::<T>(&left, i)
                + T::from_count(n - i) * entropy_of_counts::<T>(&right, n - i))
                / nt;
            let gain = (parent - weighted).max(T::zero()).min(parent);
            candidates.push((i, gain));
        }
    }
    pick_split(&candidates, n)
}

pub(crate) fn pick_split<T: Scalar>(candidates: &[(usize, T)], n: usize) -> Option<(usize, T)> {
    let best = candidates.iter().map(|c| c.1).fold(T::neg_infinity(), T::max);
    let tol = T::lit(GAIN_TOLERANCE);
    candidates
        .iter()
        .filter(|c| c.1 >= best - tol)
        .min_by_key(|c| (2 * c.0).abs_diff(n))
        .copied()
}

/// Entropy-based binning of one Fourier value into `alphabet` bins.
///
/// The order line is split greedily: each step takes a partition (impure
/// before pure, then larger before smaller, then leftmost), cuts it at its
/// maximal-gain split point, until `alphabet - 1` boundaries exist. When no
/// partition can be cut any further the remaining boundaries are padded at
/// unit steps above the largest value.
pub fn fit_bins<T: Scalar>(values: &[(T, usize)], alphabet: usize) -> Result<BinBoundaries<T>> {
    if values.is_empty() {
        return Err(WeaselError::EmptyPartition);
    }
    if alphabet < 2 {
        return Err(WeaselError::Config(format!("alphabet size {alphabet} < 2")));
    }
    let sorted = sort_pairs(values);
    let n_classes = sorted.iter().map(|p| p.1).max().unwrap_or(0) + 1;
    #[allow(clippy::single_range_in_vec_init)]
    let mut partitions = vec![0..sorted.len()];
    let mut points = Vec::with_capacity(alphabet - 1);

    while points.len() < alphabet - 1 {
        let pick = partitions
            .iter()
            .enumerate()
            .filter(|(_, r)| sorted[r.start].0 < sorted[r.end - 1].0)
            .min_by_key(|(_, r)| {
                let pure = sorted[(*r).clone()].iter().all(|p| p.1 == sorted[r.start].1);
                (pure, std::cmp::Reverse(r.len()), r.start)
            })
            .map(|(i, _)| i);
        let Some(i) = pick else { break };
        let range = partitions[i].clone();
        let (left_len, _) =
            best_split(&sorted[range.clone()], n_classes).expect("partition has distinct values");
        let cut = range.start + left_len;
        points.push(midpoint(sorted[cut - 1].0, sorted[cut].0));
        partitions.splice(i..=i, [range.start..cut, cut..range.end]);
    }
    points.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    pad_boundaries(&mut points, sorted[sorted.len() - 1].0, alphabet - 1);
    BinBoundaries::new(points)
}

#[inline]
fn midpoint<T: Scalar>(a: T, b: T) -> T {
    a + (b - a) / T::lit(2.0)
}

/// Label-agnostic quantiles, used when supervision is switched off.
pub fn equi_depth_bins<T: Scalar>(values: &[T], alphabet: usize) -> Result<BinBoundaries<T>> {
    if values.is_empty() {
        return Err(WeaselError::EmptyPartition);
    }
    if alphabet < 2 {
        return Err(WeaselError::Config(format!("alphabet size {alphabet} < 2")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let n = sorted.len();
    let mut points: Vec<T> = Vec::with_capacity(alphabet - 1);
    for i in 1..alphabet {
        let idx = i * n / alphabet;
        if idx == 0 || idx >= n {
            continue;
        }
        let b = if sorted[idx - 1] < sorted[idx] {
            midpoint(sorted[idx - 1], sorted[idx])
        } else {
            sorted[idx]
        };
        if points.last().is_none_or(|&last| b > last) {
            points.push(b);
        }
    }
    pad_boundaries(&mut points, sorted[n - 1], alphabet - 1);
    BinBoundaries::new(points)
}

/// A discrete word: one symbol in `0..alphabet` per selected Fourier value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    pub symbols: Vec<u8>,
}

impl Word {
    /// Packs the symbols into an integer, first symbol most significant.
    pub fn pack(&self) -> u32 {
        self.symbols
            .iter()
            .fold(0u32, |acc, &s| (acc << SYMBOL_BITS) | u32::from(s))
    }

    pub fn unpack(code: u32, len: usize) -> Self {
        let mask = (1u32 << SYMBOL_BITS) - 1;
        let symbols = (0..len)
            .rev()
            .map(|i| ((code >> (SYMBOL_BITS * i as u32)) & mask) as u8)
            .collect();
        Self { symbols }
    }
}

/// Discretizer for one window length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SymbolicModel<T: Scalar> {
    pub window_len: usize,
    pub alphabet: usize,
    pub coefficients: Vec<CoefficientId>,
    pub boundaries: Vec<BinBoundaries<T>>,
}

impl<T: Scalar> SymbolicModel<T> {
    pub fn word_len(&self) -> usize {
        self.coefficients.len()
    }

    /// The model for a shorter word. Coefficients are kept in selection
    /// order, so this equals fitting with `word_len` directly.
    pub fn truncated(&self, word_len: usize) -> Self {
        let l = word_len.min(self.word_len());
        SymbolicModel {
            window_len: self.window_len,
            alphabet: self.alphabet,
            coefficients: self.coefficients[..l].to_vec(),
            boundaries: self.boundaries[..l].to_vec(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.coefficients.len() != self.boundaries.len() {
            return Err(WeaselError::ShapeMismatch {
                expected: self.coefficients.len(),
                found: self.boundaries.len(),
            });
        }
        if self.word_len() > MAX_WORD_LEN || self.alphabet > MAX_ALPHABET || self.alphabet < 2 {
            return Err(WeaselError::Config(format!(
                "word length {} / alphabet {} outside the packable range",
                self.word_len(),
                self.alphabet
            )));
        }
        let m = half_spectrum_len(self.window_len);
        if let Some(id) = self.coefficients.iter().find(|id| id.index >= m) {
            return Err(WeaselError::CoefficientOutOfRange(id.to_string()));
        }
        if self.boundaries.iter().any(|b| b.bins() != self.alphabet) {
            return Err(WeaselError::Config("boundary count does not match alphabet".into()));
        }
        Ok(())
    }

    /// Word of a single raw window: z-normalize, transform, project, quantize.
    pub fn transform(&self, window: &[T], epsilon: T) -> Result<Word> {
        if window.len() != self.window_len {
            return Err(WeaselError::ShapeMismatch {
                expected: self.window_len,
                found: window.len(),
            });
        }
        let fc = normalized_spectrum(window, &twiddles(self.window_len), epsilon);
        let values = coefficient_subset(&fc, &self.coefficients)?;
        let symbols = values
            .iter()
            .zip(&self.boundaries)
            .map(|(&v, b)| b.symbol(v))
            .collect();
        Ok(Word { symbols })
    }

    /// Packed words of every sliding window of `series`, in offset order.
    ///
    /// Uses an incremental transform plus running window statistics; agrees with
    /// [`SymbolicModel::transform`] up to floating point rounding.
    pub fn sliding_words(&self, series: &[T], table: &[(T, T)], epsilon: T) -> Vec<u32> {
        let w = self.window_len;
        if series.len() < w {
            return Vec::new();
        }
        let mut ks: Vec<usize> = self.coefficients.iter().map(|c| c.index).collect();
        ks.sort_unstable();
        ks.dedup();
        let slots: Vec<usize> = self
            .coefficients
            .iter()
            .map(|c| ks.binary_search(&c.index).expect("index present"))
            .collect();

        // Window statistics from prefix sums of the globally centered series.
        let shift = series.iter().copied().sum::<T>() / T::from_count(series.len());
        let mut prefix = Vec::with_capacity(series.len() + 1);
        let mut prefix_sq = Vec::with_capacity(series.len() + 1);
        let (mut s, mut s2) = (T::zero(), T::zero());
        prefix.push(s);
        prefix_sq.push(s2);
        for &x in series {
            let c = x - shift;
            s += c;
            s2 += c * c;
            prefix.push(s);
            prefix_sq.push(s2);
        }
        let wt = T::from_count(w);

        let mut words = Vec::with_capacity(series.len() - w + 1);
        let mut dft = MomentaryDft::new(series, w, &ks, table);
        loop {
            let a = dft.offset();
            let mean = (prefix[a + w] - prefix[a]) / wt;
            let var = ((prefix_sq[a + w] - prefix_sq[a]) / wt - mean * mean).max(T::zero());
            let std = var.sqrt();
            let coefs = dft.coefficients();
            let mut code = 0u32;
            for ((id, &slot), bins) in self.coefficients.iter().zip(&slots).zip(&self.boundaries) {
                let v = if std <= epsilon || id.index == 0 {
                    T::zero()
                } else {
                    let (re, im) = coefs[slot];
                    match id.part {
                        Part::Real => re / std,
                        Part::Imag => im / std,
                    }
                };
                code = (code << SYMBOL_BITS) | u32::from(bins.symbol(v));
            }
            words.push(code);
            if !dft.advance() {
                break;
            }
        }
        words
    }
}

/// Half spectrum of the z-normalized window. The DC term of a mean-centered
/// window is zero by construction and is stored as an exact zero.
pub fn normalized_spectrum<T: Scalar>(
    window: &[T],
    table: &[(T, T)],
    epsilon: T,
) -> FourierCoefficients<T> {
    let z = znormalize(window, epsilon);
    let mut fc = dft_with(&z, table);
    fc.reals[0] = T::zero();
    fc
}

/// Fits the discretizer for one window length from labeled training spectra
/// (one per disjoint window).
///
/// Supervised: top-`l` ANOVA selection plus information-gain bins.
/// Unsupervised: low-pass selection plus equi-depth bins.
pub fn fit_symbolic_model<T: Scalar, S: Borrow<FourierCoefficients<T>>>(
    window_len: usize,
    spectra: &[S],
    classes: &[usize],
    word_len: usize,
    alphabet: usize,
    supervised: bool,
) -> Result<SymbolicModel<T>> {
    if spectra.is_empty() {
        return Err(WeaselError::Config(format!(
            "no training windows for window length {window_len}"
        )));
    }
    let coefficients = if supervised {
        select_coefficients(spectra, classes, word_len)?
            .into_iter()
            .map(|s| s.id)
            .collect::<Vec<_>>()
    } else {
        low_pass_coefficients(half_spectrum_len(window_len), word_len)?
    };
    let boundaries = coefficients
        .iter()
        .map(|&id| {
            if supervised {
                let values: Vec<(T, usize)> = spectra
                    .iter()
                    .zip(classes)
                    .map(|(fc, &y)| (fc.borrow().get(id).expect("validated index"), y))
                    .collect();
                fit_bins(&values, alphabet)
            } else {
                let values: Vec<T> = spectra
                    .iter()
                    .map(|fc| fc.borrow().get(id).expect("validated index"))
                    .collect();
                equi_depth_bins(&values, alphabet)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let model = SymbolicModel {
        window_len,
        alphabet,
        coefficients,
        boundaries,
    };
    model.validate()?;
    Ok(model)
}
