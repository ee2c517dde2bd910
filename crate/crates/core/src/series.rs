//! Time series containers, windowing and z-normalization.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WeaselError};
use crate::scalar::Scalar;

/// Threshold below which a window's standard deviation counts as zero.
pub const DEFAULT_EPSILON: f64 = 1e-8;

/// A finite, non-empty sequence of real values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TimeSeries<T: Scalar> {
    values: Vec<T>,
}

impl<T: Scalar> TimeSeries<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(WeaselError::EmptySeries);
        }
        if let Some(position) = values.iter().position(|v| !v.is_finite()) {
            return Err(WeaselError::NonFinite { position });
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; kept for API symmetry with slices.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }
}

/// A contiguous view of `len` values starting at the 1-based `offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window<'a, T> {
    pub offset: usize,
    pub values: &'a [T],
}

impl<T> Window<'_, T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_window(len: usize, window: usize) -> Result<()> {
    if window == 0 || window > len {
        Err(WeaselError::InvalidWindowLength { window, len })
    } else {
        Ok(())
    }
}

/// All `n - w + 1` overlapping windows of length `w`, in offset order.
pub fn sliding_windows<T: Scalar>(ts: &TimeSeries<T>, w: usize) -> Result<Vec<Window<'_, T>>> {
    check_window(ts.len(), w)?;
    Ok(ts
        .values
        .windows(w)
        .enumerate()
        .map(|(i, values)| Window {
            offset: i + 1,
            values,
        })
        .collect())
}

/// Non-overlapping windows at offsets `1, 1 + w, 1 + 2w, ...`; a trailing
/// remainder shorter than `w` is dropped.
pub fn disjoint_windows<T: Scalar>(ts: &TimeSeries<T>, w: usize) -> Result<Vec<Window<'_, T>>> {
    if w == 0 {
        return Err(WeaselError::InvalidWindowLength {
            window: w,
            len: ts.len(),
        });
    }
    // w > n is allowed here and yields no windows; callers treat that length as unfittable.
    Ok(ts
        .values
        .chunks_exact(w)
        .enumerate()
        .map(|(i, values)| Window {
            offset: i * w + 1,
            values,
        })
        .collect())
}

/// Population mean and standard deviation.
pub fn mean_std<T: Scalar>(values: &[T]) -> (T, T) {
    let n = T::from_count(values.len());
    let mean = values.iter().copied().sum::<T>() / n;
    let var = values
        .iter()
        .map(|&v| (v - mean) * (v - mean))
        .sum::<T>()
        / n;
    (mean, var.sqrt())
}

/// Subtracts the mean and divides by the population standard deviation.
/// Windows whose deviation is at most `epsilon` map to all zeros.
pub fn znormalize<T: Scalar>(values: &[T], epsilon: T) -> Vec<T> {
    if values.is_empty() {
        return Vec::new();
    }
    let (mean, std) = mean_std(values);
    if std <= epsilon {
        return vec![T::zero(); values.len()];
    }
    values.iter().map(|&v| (v - mean) / std).collect()
}

/// Series paired with string class labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LabeledDataset<T: Scalar> {
    series: Vec<TimeSeries<T>>,
    labels: Vec<String>,
}

impl<T: Scalar> LabeledDataset<T> {
    pub fn new(samples: Vec<(TimeSeries<T>, String)>) -> Self {
        let (series, labels) = samples.into_iter().unzip();
        Self { series, labels }
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn series(&self) -> &[TimeSeries<T>] {
        &self.series
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TimeSeries<T>, &str)> {
        self.series
            .iter()
            .zip(self.labels.iter().map(String::as_str))
    }

    /// Distinct labels in sorted order.
    pub fn classes(&self) -> Vec<String> {
        self.labels
            .iter()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn min_len(&self) -> usize {
        self.series.iter().map(TimeSeries::len).min().unwrap_or(0)
    }

    pub fn max_len(&self) -> usize {
        self.series.iter().map(TimeSeries::len).max().unwrap_or(0)
    }

    /// Sub-dataset with the samples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            series: indices.iter().map(|&i| self.series[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i].clone()).collect(),
        }
    }

    /// Checks the training precondition of at least two distinct labels.
    pub fn require_classes(&self) -> Result<Vec<String>> {
        let classes = self.classes();
        if classes.len() < 2 {
            return Err(WeaselError::InsufficientClasses(classes.len()));
        }
        Ok(classes)
    }
}
