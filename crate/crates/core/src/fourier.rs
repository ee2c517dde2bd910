//! Discrete Fourier transform of (normalized) windows.
//!
//! The forward transform is unnormalized: coefficient `k` of a window
//! `x_0..x_{w-1}` is `sum_t x_t * exp(-2*pi*i*k*t/w)`. Only the
//! non-redundant half spectrum `k = 0..=w/2` is kept.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WeaselError};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Real,
    Imag,
}

/// Identifies one real-valued Fourier value: the real or imaginary part of
/// coefficient `index`. Ordering is by index first, real before imaginary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CoefficientId {
    pub index: usize,
    pub part: Part,
}

impl CoefficientId {
    pub const fn real(index: usize) -> Self {
        Self {
            index,
            part: Part::Real,
        }
    }

    pub const fn imag(index: usize) -> Self {
        Self {
            index,
            part: Part::Imag,
        }
    }

    /// All ids of a half spectrum with `m` coefficients, in canonical order.
    pub fn all(m: usize) -> impl Iterator<Item = CoefficientId> {
        (0..m).flat_map(|k| [Self::real(k), Self::imag(k)])
    }
}

impl fmt::Display for CoefficientId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.part {
            Part::Real => write!(f, "real{}", self.index),
            Part::Imag => write!(f, "imag{}", self.index),
        }
    }
}

/// Number of retained coefficients for a window of length `w`.
pub const fn half_spectrum_len(w: usize) -> usize {
    w / 2 + 1
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourierCoefficients<T> {
    pub window_len: usize,
    pub reals: Vec<T>,
    pub imags: Vec<T>,
}

impl<T: Scalar> FourierCoefficients<T> {
    pub fn len(&self) -> usize {
        self.reals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reals.is_empty()
    }

    pub fn get(&self, id: CoefficientId) -> Option<T> {
        match id.part {
            Part::Real => self.reals.get(id.index).copied(),
            Part::Imag => self.imags.get(id.index).copied(),
        }
    }
}

/// `(cos, sin)` of `2*pi*j/w` for `j = 0..w`, exact at multiples of a quarter turn
/// so that imag_0 and the Nyquist imaginary part come out as exact zeros.
pub(crate) fn twiddles<T: Scalar>(w: usize) -> Vec<(T, T)> {
    (0..w)
        .map(|j| {
            let (c, s) = if (4 * j) % w == 0 {
                match 4 * j / w {
                    0 => (1.0, 0.0),
                    1 => (0.0, 1.0),
                    2 => (-1.0, 0.0),
                    _ => (0.0, -1.0),
                }
            } else {
                let angle = 2.0 * std::f64::consts::PI * j as f64 / w as f64;
                (angle.cos(), angle.sin())
            };
            (T::lit(c), T::lit(s))
        })
        .collect()
}

/// Coefficient `k` by direct summation against a precomputed twiddle table.
pub(crate) fn coefficient_with<T: Scalar>(values: &[T], k: usize, table: &[(T, T)]) -> (T, T) {
    let w = values.len();
    let mut re = T::zero();
    let mut im = T::zero();
    let mut j = 0usize;
    for &x in values {
        let (c, s) = table[j];
        re += x * c;
        im -= x * s;
        j += k;
        if j >= w {
            j -= w;
        }
    }
    (re, im)
}

pub(crate) fn dft_with<T: Scalar>(values: &[T], table: &[(T, T)]) -> FourierCoefficients<T> {
    let w = values.len();
    let m = half_spectrum_len(w);
    let mut reals = Vec::with_capacity(m);
    let mut imags = Vec::with_capacity(m);
    for k in 0..m {
        let (re, im) = coefficient_with(values, k % w.max(1), table);
        reals.push(re);
        imags.push(im);
    }
    FourierCoefficients {
        window_len: w,
        reals,
        imags,
    }
}

/// Half-spectrum DFT of a window of length `w >= 2`.
pub fn dft<T: Scalar>(values: &[T]) -> Result<FourierCoefficients<T>> {
    if values.len() < 2 {
        return Err(WeaselError::InvalidWindowLength {
            window: values.len(),
            len: values.len(),
        });
    }
    if let Some(position) = values.iter().position(|v| !v.is_finite()) {
        return Err(WeaselError::NonFinite { position });
    }
    Ok(dft_with(values, &twiddles(values.len())))
}

/// Projects `fc` onto `ids`, preserving their order.
pub fn coefficient_subset<T: Scalar>(
    fc: &FourierCoefficients<T>,
    ids: &[CoefficientId],
) -> Result<Vec<T>> {
    ids.iter()
        .map(|&id| {
            fc.get(id)
                .ok_or_else(|| WeaselError::CoefficientOutOfRange(id.to_string()))
        })
        .collect()
}

/// Incrementally updated DFT coefficients for consecutive window offsets of
/// one series. Each step costs O(|ks|) instead of O(|ks| * w).
pub struct MomentaryDft<'a, T> {
    series: &'a [T],
    window_len: usize,
    offset: usize,
    rotations: Vec<(T, T)>,
    state: Vec<(T, T)>,
}

impl<'a, T: Scalar> MomentaryDft<'a, T> {
    /// Starts at offset 0. `ks` must be `< window_len`, and `window_len <= series.len()`.
    pub fn new(series: &'a [T], window_len: usize, ks: &[usize], table: &[(T, T)]) -> Self {
        debug_assert!(window_len >= 1 && window_len <= series.len());
        let head = &series[..window_len];
        let state = ks
            .iter()
            .map(|&k| coefficient_with(head, k, table))
            .collect();
        let rotations = ks.iter().map(|&k| table[k % window_len]).collect();
        Self {
            series,
            window_len,
            offset: 0,
            rotations,
            state,
        }
    }

    /// 0-based offset of the current window.
    pub fn offset(&self) -> usize {
        self.offset
    }

    /// `(re, im)` of each requested coefficient for the current window.
    pub fn coefficients(&self) -> &[(T, T)] {
        &self.state
    }

    /// Moves one step to the right; returns false at the end of the series.
    pub fn advance(&mut self) -> bool {
        let next = self.offset + self.window_len;
        if next >= self.series.len() {
            return false;
        }
        let delta = self.series[next] - self.series[self.offset];
        for ((re, im), &(c, s)) in self.state.iter_mut().zip(&self.rotations) {
            let r = *re + delta;
            let i = *im;
            *re = r * c - i * s;
            *im = r * s + i * c;
        }
        self.offset += 1;
        true
    }
}
