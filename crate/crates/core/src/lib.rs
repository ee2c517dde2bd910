//! Time series classification with a bag of supervised symbolic Fourier
//! words.
//!
//! Every sliding window of every length is z-normalized, Fourier transformed
//! and turned into a short word using the Fourier values that best separate
//! the classes (ANOVA F-test) and bins that maximize information gain. Words
//! and pairs of consecutive non-overlapping words from all window lengths are
//! counted in one sparse bag, pruned with a chi-squared test, and classified
//! with L2-regularized logistic regression.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! and `*32` aliases below name the common instantiations.
//!
//! ```no_run
//! use weasel::{fit_weasel, load_ucr, WeaselConfig, WeaselModel64};
//!
//! let (train, test) = load_ucr::<f64>("Coffee_TRAIN.tsv", "Coffee_TEST.tsv")?;
//! let model: WeaselModel64 = fit_weasel(&train, &WeaselConfig::default())?;
//! println!("accuracy {:.3}", model.accuracy(&test)?);
//! # Ok::<(), weasel::WeaselError>(())
//! ```

pub mod bop;
pub mod error;
pub mod fourier;
pub mod harness;
pub mod linear;
pub mod pipeline;
pub mod scalar;
pub mod selection;
pub mod series;
pub mod symbolic;
pub mod synthetic;

pub use bop::{build_bag, window_lengths, BagBuilder, BagOfPatterns, WordKey};
pub use error::{Result, WeaselError};
pub use fourier::{coefficient_subset, dft, CoefficientId, FourierCoefficients, Part};
pub use harness::{
    load_dataset, load_ucr, nn_accuracy, nn_euclidean, run_benchmark, BenchVariant, BenchmarkReport,
    BenchmarkRow,
};
pub use linear::{train_linear, LinearModel, LinearParams};
pub use pipeline::{cross_validate, fit_weasel, FitStats, Prediction, WeaselConfig, WeaselModel};
pub use scalar::Scalar;
pub use selection::{chi_squared_filter, vectorize, FeatureDictionary, Scaling, SparseVector};
pub use series::{disjoint_windows, sliding_windows, znormalize, LabeledDataset, TimeSeries, Window};
pub use symbolic::{
    anova_f, entropy, fit_bins, select_coefficients, split_gain, BinBoundaries, SymbolicModel, Word,
};

pub type TimeSeries64 = TimeSeries<f64>;
pub type TimeSeries32 = TimeSeries<f32>;
pub type LabeledDataset64 = LabeledDataset<f64>;
pub type LabeledDataset32 = LabeledDataset<f32>;
pub type SymbolicModel64 = SymbolicModel<f64>;
pub type SymbolicModel32 = SymbolicModel<f32>;
pub type LinearModel64 = LinearModel<f64>;
pub type LinearModel32 = LinearModel<f32>;
pub type WeaselModel64 = WeaselModel<f64>;
pub type WeaselModel32 = WeaselModel<f32>;
