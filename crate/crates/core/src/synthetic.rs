//! Seeded synthetic two-class problems used by the ablation and acceptance
//! tests. Every generator returns balanced train/test sets labeled "A"/"B".

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::scalar::Scalar;
use crate::series::{LabeledDataset, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    /// A: noise plus a sine burst at a random offset and phase. B: noise only.
    ShiftInvariance,
    /// Both classes: a sine of random phase; periods differ slightly.
    FineFrequency,
    /// Both classes contain the same two motifs, a short gap apart, at a
    /// random offset; only their order differs.
    BigramOrder,
    /// A: noise plus a four-cycle burst whose length is drawn from
    /// {16, 32, 64}. B: noise only.
    MultiScale,
    /// Both classes are pure noise.
    PureNoise,
}

impl SyntheticKind {
    pub const ALL: [SyntheticKind; 5] = [
        SyntheticKind::ShiftInvariance,
        SyntheticKind::FineFrequency,
        SyntheticKind::BigramOrder,
        SyntheticKind::MultiScale,
        SyntheticKind::PureNoise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SyntheticKind::ShiftInvariance => "shift-invariance",
            SyntheticKind::FineFrequency => "fine-frequency",
            SyntheticKind::BigramOrder => "bigram-order",
            SyntheticKind::MultiScale => "multi-scale",
            SyntheticKind::PureNoise => "pure-noise",
        }
    }
}

fn noise(rng: &mut ChaCha8Rng, n: usize, sigma: f64) -> Vec<f64> {
    let normal = Normal::new(0.0, sigma).expect("positive sigma");
    (0..n).map(|_| normal.sample(rng)).collect()
}

/// Adds `motif` to `x` starting at `offset`.
fn place(x: &mut [f64], motif: &[f64], offset: usize) {
    for (v, m) in x[offset..].iter_mut().zip(motif) {
        *v += m;
    }
}

fn sine_burst(len: usize, period: f64, amplitude: f64, phase: f64) -> Vec<f64> {
    (0..len)
        .map(|t| amplitude * (2.0 * PI * t as f64 / period + phase).sin())
        .collect()
}

fn sample(kind: SyntheticKind, class_a: bool, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match kind {
        SyntheticKind::ShiftInvariance => {
            let mut x = noise(rng, n, 1.0);
            if class_a {
                let len = 32.min(n);
                let offset = rng.random_range(0..=n - len);
                let phase = rng.random_range(0.0..2.0 * PI);
                place(&mut x, &sine_burst(len, 8.0, 1.9, phase), offset);
            }
            x
        }
        SyntheticKind::FineFrequency => {
            let period = if class_a { 12.0 } else { 14.0 };
            let phase = rng.random_range(0.0..2.0 * PI);
            let mut x = noise(rng, n, 1.0);
            place(&mut x, &sine_burst(n, period, 1.0, phase), 0);
            x
        }
        SyntheticKind::BigramOrder => {
            let len = 32.min(n / 4);
            let gap = len / 4;
            let first = sine_burst(len, 8.0, 2.0, 0.0);
            let second = sine_burst(len, 16.0, 2.0, 0.0);
            let (a, b) = if class_a { (first, second) } else { (second, first) };
            let mut x = noise(rng, n, 1.0);
            let offset = rng.random_range(0..=n - 2 * len - gap);
            place(&mut x, &a, offset);
            place(&mut x, &b, offset + len + gap);
            x
        }
        SyntheticKind::MultiScale => {
            let mut x = noise(rng, n, 1.0);
            if class_a {
                let scales = [16usize, 32, 64];
                let len = scales[rng.random_range(0..scales.len())].min(n);
                let offset = rng.random_range(0..=n - len);
                place(&mut x, &sine_burst(len, len as f64 / 4.0, 2.0, 0.0), offset);
            }
            x
        }
        SyntheticKind::PureNoise => noise(rng, n, 1.0),
    }
}

fn build<T: Scalar>(kind: SyntheticKind, count: usize, n: usize, rng: &mut ChaCha8Rng) -> LabeledDataset<T> {
    LabeledDataset::new(
        (0..count)
            .map(|i| {
                let class_a = i % 2 == 0;
                let values = sample(kind, class_a, n, rng).into_iter().map(T::lit).collect();
                let label = if class_a { "A" } else { "B" };
                (TimeSeries::new(values).expect("finite samples"), label.to_string())
            })
            .collect(),
    )
}

/// `(train, test)` of the given sizes and series length `n`.
pub fn generate<T: Scalar>(
    kind: SyntheticKind,
    n_train: usize,
    n_test: usize,
    n: usize,
    seed: u64,
) -> (LabeledDataset<T>, LabeledDataset<T>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let train = build(kind, n_train, n, &mut rng);
    let test = build(kind, n_test, n, &mut rng);
    (train, test)
}
