//! End-to-end training with cross-validated word length, prediction and
//! model persistence.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bop::{window_lengths, BagBuilder, BagOfPatterns, MIN_WINDOW};
use crate::error::{Result, WeaselError};
use crate::fourier::{half_spectrum_len, twiddles, FourierCoefficients};
use crate::linear::{argmax, train_linear, LinearModel, LinearParams};
use crate::scalar::Scalar;
use crate::selection::{filter_counts, vectorize, ClassCounts, FeatureDictionary, Scaling};
use crate::series::{disjoint_windows, LabeledDataset, TimeSeries, DEFAULT_EPSILON};
use crate::symbolic::{fit_symbolic_model, normalized_spectrum, SymbolicModel, MAX_ALPHABET, MAX_WORD_LEN};

pub const MODEL_FORMAT: &str = "weasel-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeaselConfig {
    pub alphabet: usize,
    /// Candidate word lengths; the best one is picked by cross-validation.
    pub word_lengths: Vec<usize>,
    pub chi_threshold: f64,
    pub w_min: usize,
    /// Largest window length; defaults to the series length.
    pub w_max: Option<usize>,
    /// Use every `window_stride`-th window length only.
    pub window_stride: usize,
    /// Restrict to one window length (ablation).
    pub single_window: Option<usize>,
    pub bigrams: bool,
    /// ANOVA selection with information-gain bins; otherwise low-pass
    /// coefficients with equi-depth bins.
    pub supervised: bool,
    pub folds: usize,
    pub seed: u64,
    pub scaling: Scaling,
    pub epsilon: f64,
    pub linear: LinearParams,
}

impl Default for WeaselConfig {
    fn default() -> Self {
        Self {
            alphabet: 4,
            word_lengths: vec![4, 6, 8],
            chi_threshold: 2.0,
            w_min: MIN_WINDOW,
            w_max: None,
            window_stride: 1,
            single_window: None,
            bigrams: true,
            supervised: true,
            folds: 10,
            seed: 0,
            scaling: Scaling::Raw,
            epsilon: DEFAULT_EPSILON,
            linear: LinearParams::default(),
        }
    }
}

impl WeaselConfig {
    pub fn validate(&self) -> Result<()> {
        if !(2..=MAX_ALPHABET).contains(&self.alphabet) {
            return Err(WeaselError::Config(format!(
                "alphabet size must be in 2..={MAX_ALPHABET}, got {}",
                self.alphabet
            )));
        }
        if self.word_lengths.is_empty()
            || self.word_lengths.iter().any(|&l| l == 0 || l > MAX_WORD_LEN)
        {
            return Err(WeaselError::Config(format!(
                "word lengths must be in 1..={MAX_WORD_LEN}, got {:?}",
                self.word_lengths
            )));
        }
        if !(self.chi_threshold.is_finite() && self.epsilon > 0.0) {
            return Err(WeaselError::Config("invalid threshold or epsilon".into()));
        }
        if !(self.linear.reg_tradeoff > 0.0 && self.linear.tolerance > 0.0) {
            return Err(WeaselError::Config(
                "regularization trade-off and tolerance must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Window lengths used for series of (minimum) length `n`.
    pub fn lengths_for(&self, n: usize) -> Result<Vec<usize>> {
        match self.single_window {
            Some(w) => window_lengths(n, w, Some(w), 1),
            None => window_lengths(n, self.w_min, self.w_max, self.window_stride),
        }
    }

    fn min_len(&self) -> usize {
        self.single_window.unwrap_or(self.w_min)
    }
}

/// Numbers collected while fitting.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitStats {
    /// Folds actually used (0 when cross-validation was skipped).
    pub folds: usize,
    /// Mean validation accuracy per candidate word length.
    pub cv_accuracy: Vec<(usize, f64)>,
    /// Distinct keys in the training bags before chi-squared filtering.
    pub features_pre: usize,
    pub features_post: usize,
}

/// Trained classifier: per-length discretizers, feature dictionary, linear
/// weights and class labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct WeaselModel<T: Scalar> {
    pub format: String,
    pub version: u32,
    pub config: WeaselConfig,
    pub classes: Vec<String>,
    pub word_len: usize,
    pub window_lengths: Vec<usize>,
    pub symbolic: BTreeMap<usize, SymbolicModel<T>>,
    pub dictionary: FeatureDictionary<T>,
    pub linear: LinearModel<T>,
    pub stats: FitStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<T> {
    pub class: usize,
    pub label: String,
    pub scores: Vec<T>,
}

/// Stratified fold id per sample: each class is shuffled and dealt round-robin.
pub fn stratified_folds(classes: &[usize], folds: usize, seed: u64) -> Vec<usize> {
    let n_classes = classes.iter().max().map_or(0, |m| m + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; classes.len()];
    let mut next = 0;
    for class in 0..n_classes {
        let mut members: Vec<usize> = (0..classes.len()).filter(|&i| classes[i] == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            assignment[i] = next % folds;
            next += 1;
        }
    }
    assignment
}

/// Class index of every sample, with classes in sorted label order.
fn encode_labels<T: Scalar>(data: &LabeledDataset<T>, classes: &[String]) -> Vec<usize> {
    data.labels()
        .iter()
        .map(|l| classes.binary_search(l).expect("label from the class list"))
        .collect()
}

/// A training run over a subset of the samples with one word length.
struct Plan {
    word_len: usize,
    train: Vec<usize>,
    validation: Vec<usize>,
}

struct Stage<T: Scalar> {
    models: BTreeMap<usize, SymbolicModel<T>>,
    lengths: Vec<usize>,
    dictionary: FeatureDictionary<T>,
    linear: LinearModel<T>,
    features_pre: usize,
}

/// Normalized spectra of the disjoint windows of every series, grouped by series.
fn disjoint_spectra<T: Scalar>(
    data: &LabeledDataset<T>,
    w: usize,
    epsilon: T,
) -> Vec<Vec<FourierCoefficients<T>>> {
    let table = twiddles(w);
    data.series()
        .iter()
        .map(|ts| {
            disjoint_windows(ts, w)
                .expect("w > 0")
                .iter()
                .map(|win| normalized_spectrum(win.values, &table, epsilon))
                .collect()
        })
        .collect()
}

/// Fits the discretizers of every plan. Each window length is processed
/// independently so that only one length's spectra are held in memory.
/// Plans sharing a training set share one fit at their longest word.
fn fit_symbolic_models<T: Scalar>(
    data: &LabeledDataset<T>,
    labels: &[usize],
    lengths: &[usize],
    plans: &[Plan],
    config: &WeaselConfig,
) -> Result<Vec<BTreeMap<usize, SymbolicModel<T>>>> {
    let epsilon = T::lit(config.epsilon);
    let mut groups: Vec<(&[usize], Vec<usize>)> = Vec::new();
    for (p, plan) in plans.iter().enumerate() {
        match groups.iter_mut().find(|g| g.0 == plan.train.as_slice()) {
            Some(g) => g.1.push(p),
            None => groups.push((&plan.train, vec![p])),
        }
    }
    let per_length = lengths
        .par_iter()
        .map(|&w| {
            let spectra = disjoint_spectra(data, w, epsilon);
            let m = half_spectrum_len(w);
            let mut models = vec![None; plans.len()];
            for (train, members) in &groups {
                let Some(l) = members
                    .iter()
                    .map(|&p| plans[p].word_len)
                    .filter(|&l| l <= m)
                    .max()
                else {
                    continue;
                };
                let mut fcs = Vec::new();
                let mut ys = Vec::new();
                for &i in train.iter() {
                    for fc in &spectra[i] {
                        fcs.push(fc);
                        ys.push(labels[i]);
                    }
                }
                let model = fit_symbolic_model(w, &fcs, &ys, l, config.alphabet, config.supervised)?;
                for &p in members {
                    if plans[p].word_len <= m {
                        models[p] = Some(model.truncated(plans[p].word_len));
                    }
                }
            }
            Ok((w, models))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = vec![BTreeMap::new(); plans.len()];
    for (w, models) in per_length {
        for (slot, model) in out.iter_mut().zip(models) {
            if let Some(m) = model {
                slot.insert(w, m);
            }
        }
    }
    Ok(out)
}

fn bags_for<T: Scalar>(builder: &BagBuilder<'_, T>, data: &LabeledDataset<T>, indices: &[usize]) -> Vec<BagOfPatterns> {
    indices
        .par_iter()
        .map(|&i| builder.build(&data.series()[i]))
        .collect()
}

fn train_stage<T: Scalar>(
    data: &LabeledDataset<T>,
    labels: &[usize],
    n_classes: usize,
    models: BTreeMap<usize, SymbolicModel<T>>,
    train: &[usize],
    config: &WeaselConfig,
) -> Result<Stage<T>> {
    let lengths: Vec<usize> = models.keys().copied().collect();
    if lengths.is_empty() {
        return Err(WeaselError::Config(
            "no window length has enough Fourier coefficients for the word length".into(),
        ));
    }
    let builder = BagBuilder::new(&models, &lengths, config.bigrams, T::lit(config.epsilon))?;
    let bags = bags_for(&builder, data, train);
    let mut counts = ClassCounts::new(n_classes);
    for (bag, &i) in bags.iter().zip(train) {
        counts.add(bag, labels[i]);
    }
    let dictionary = filter_counts(&counts, T::lit(config.chi_threshold))?;
    let vectors: Vec<_> = bags
        .iter()
        .map(|b| vectorize(b, &dictionary, config.scaling))
        .collect();
    let ys: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
    let linear = train_linear(&vectors, &ys, n_classes, dictionary.len(), &config.linear)?;
    drop(builder);
    Ok(Stage {
        features_pre: counts.len(),
        models,
        lengths,
        dictionary,
        linear,
    })
}

fn stage_accuracy<T: Scalar>(
    stage: &Stage<T>,
    data: &LabeledDataset<T>,
    labels: &[usize],
    validation: &[usize],
    config: &WeaselConfig,
) -> Result<f64> {
    let builder = BagBuilder::new(&stage.models, &stage.lengths, config.bigrams, T::lit(config.epsilon))?;
    let correct = bags_for(&builder, data, validation)
        .iter()
        .zip(validation)
        .filter(|(bag, &i)| {
            stage.linear.predict(&vectorize(bag, &stage.dictionary, config.scaling)) == labels[i]
        })
        .count();
    Ok(correct as f64 / validation.len().max(1) as f64)
}

/// Mean cross-validated accuracy for each candidate word length.
///
/// The number of folds is capped by the smallest class size.
pub fn cross_validate<T: Scalar>(
    train: &LabeledDataset<T>,
    config: &WeaselConfig,
) -> Result<(usize, Vec<(usize, f64)>)> {
    config.validate()?;
    let classes = train.require_classes()?;
    let labels = encode_labels(train, &classes);
    let lengths = config.lengths_for(train.min_len())?;
    let folds = effective_folds(&labels, classes.len(), config.folds);
    if folds < 2 {
        return Err(WeaselError::Config(
            "cross-validation needs at least two samples per class".into(),
        ));
    }
    let scores = cv_scores(train, &labels, classes.len(), &lengths, folds, config)?;
    Ok((folds, scores))
}

fn effective_folds(labels: &[usize], n_classes: usize, requested: usize) -> usize {
    let smallest = (0..n_classes)
        .map(|c| labels.iter().filter(|&&y| y == c).count())
        .min()
        .unwrap_or(0);
    let folds = requested.min(smallest);
    if folds < requested {
        log::warn!("reducing cross-validation folds from {requested} to {folds} (smallest class has {smallest} samples)");
    }
    folds
}

fn cv_scores<T: Scalar>(
    data: &LabeledDataset<T>,
    labels: &[usize],
    n_classes: usize,
    lengths: &[usize],
    folds: usize,
    config: &WeaselConfig,
) -> Result<Vec<(usize, f64)>> {
    let assignment = stratified_folds(labels, folds, config.seed);
    let mut word_lengths = config.word_lengths.clone();
    word_lengths.sort_unstable();
    word_lengths.dedup();
    let plans: Vec<Plan> = word_lengths
        .iter()
        .flat_map(|&l| {
            let assignment = &assignment;
            (0..folds).map(move |f| Plan {
                word_len: l,
                train: (0..labels.len()).filter(|&i| assignment[i] != f).collect(),
                validation: (0..labels.len()).filter(|&i| assignment[i] == f).collect(),
            })
        })
        .collect();
    let models = fit_symbolic_models(data, labels, lengths, &plans, config)?;
    let accuracies = plans
        .par_iter()
        .zip(models)
        .map(|(plan, models)| {
            if models.is_empty() {
                return Ok(None);
            }
            let stage = train_stage(data, labels, n_classes, models, &plan.train, config)?;
            stage_accuracy(&stage, data, labels, &plan.validation, config).map(Some)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(word_lengths
        .iter()
        .enumerate()
        .filter_map(|(j, &l)| {
            let accs: Vec<f64> = accuracies[j * folds..(j + 1) * folds].iter().flatten().copied().collect();
            (accs.len() == folds).then(|| (l, accs.iter().sum::<f64>() / folds as f64))
        })
        .collect())
}

/// Trains the full pipeline. With several candidate word lengths the one
/// with the best mean cross-validated accuracy wins (ties go to the
/// shorter word), then everything is refitted on all of `train`.
pub fn fit_weasel<T: Scalar>(train: &LabeledDataset<T>, config: &WeaselConfig) -> Result<WeaselModel<T>> {
    config.validate()?;
    let classes = train.require_classes()?;
    let labels = encode_labels(train, &classes);
    let n = train.min_len();
    if n < config.min_len() {
        return Err(WeaselError::TooShort {
            len: n,
            min: config.min_len(),
        });
    }
    let lengths = config.lengths_for(n)?;

    let mut candidates = config.word_lengths.clone();
    candidates.sort_unstable();
    candidates.dedup();
    let mut stats = FitStats::default();
    let word_len = if candidates.len() == 1 {
        candidates[0]
    } else {
        let folds = effective_folds(&labels, classes.len(), config.folds);
        if folds < 2 {
            log::warn!("too few samples per class for cross-validation; using word length {}", candidates[0]);
            candidates[0]
        } else {
            stats.folds = folds;
            stats.cv_accuracy = cv_scores(train, &labels, classes.len(), &lengths, folds, config)?;
            let mut best: Option<(usize, f64)> = None;
            for &(l, acc) in &stats.cv_accuracy {
                if best.is_none_or(|b| acc > b.1) {
                    best = Some((l, acc));
                }
            }
            best.map(|b| b.0).ok_or_else(|| {
                WeaselError::Config("no candidate word length fits the window lengths".into())
            })?
        }
    };

    let all: Vec<usize> = (0..train.len()).collect();
    let plan = Plan {
        word_len,
        train: all.clone(),
        validation: Vec::new(),
    };
    let models = fit_symbolic_models(train, &labels, &lengths, std::slice::from_ref(&plan), config)?
        .pop()
        .expect("one plan");
    let stage = train_stage(train, &labels, classes.len(), models, &all, config)?;
    stats.features_pre = stage.features_pre;
    stats.features_post = stage.dictionary.len();
    Ok(WeaselModel {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        config: config.clone(),
        classes,
        word_len,
        window_lengths: stage.lengths,
        symbolic: stage.models,
        dictionary: stage.dictionary,
        linear: stage.linear,
        stats,
    })
}

impl<T: Scalar> WeaselModel<T> {
    fn builder(&self) -> Result<BagBuilder<'_, T>> {
        BagBuilder::new(
            &self.symbolic,
            &self.window_lengths,
            self.config.bigrams,
            T::lit(self.config.epsilon),
        )
    }

    fn check_len(&self, ts: &TimeSeries<T>) -> Result<()> {
        let min = self.window_lengths.first().copied().unwrap_or(self.config.w_min);
        if ts.len() < min {
            return Err(WeaselError::TooShort { len: ts.len(), min });
        }
        Ok(())
    }

    fn decide(&self, bag: &BagOfPatterns) -> Prediction<T> {
        let x = vectorize(bag, &self.dictionary, self.config.scaling);
        let scores = self.linear.scores(&x);
        let class = argmax(&scores);
        Prediction {
            class,
            label: self.classes[class].clone(),
            scores,
        }
    }

    /// The bag a series is mapped to before vectorization.
    pub fn bag_of_patterns(&self, ts: &TimeSeries<T>) -> Result<BagOfPatterns> {
        self.check_len(ts)?;
        Ok(self.builder()?.build(ts))
    }

    pub fn predict(&self, ts: &TimeSeries<T>) -> Result<Prediction<T>> {
        let bag = self.bag_of_patterns(ts)?;
        Ok(self.decide(&bag))
    }

    /// Predicts many series, in parallel on the current rayon pool.
    pub fn predict_all(&self, series: &[TimeSeries<T>]) -> Result<Vec<Prediction<T>>> {
        series.iter().try_for_each(|ts| self.check_len(ts))?;
        let builder = self.builder()?;
        Ok(series
            .par_iter()
            .map(|ts| self.decide(&builder.build(ts)))
            .collect())
    }

    /// Fraction of `data` predicted correctly.
    pub fn accuracy(&self, data: &LabeledDataset<T>) -> Result<f64> {
        let predictions = self.predict_all(data.series())?;
        let correct = predictions
            .iter()
            .zip(data.labels())
            .filter(|(p, l)| &p.label == *l)
            .count();
        Ok(correct as f64 / data.len().max(1) as f64)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let header: serde_json::Value = serde_json::from_str(text)?;
        let format = header.get("format").and_then(|v| v.as_str()).unwrap_or_default();
        let version = header.get("version").and_then(|v| v.as_u64()).unwrap_or_default();
        if format != MODEL_FORMAT || version != u64::from(MODEL_VERSION) {
            return Err(WeaselError::ModelFormat(format!("{format:?} version {version}")));
        }
        let model: Self = serde_json::from_str(text)?;
        model.check()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    fn check(&self) -> Result<()> {
        let bad = |msg: &str| Err(WeaselError::ModelFormat(msg.to_string()));
        if self.linear.n_features != self.dictionary.len() {
            return bad("weight matrix does not match the feature dictionary");
        }
        if self.linear.n_classes() != self.classes.len() {
            return bad("weight matrix does not match the class list");
        }
        if self
            .symbolic
            .values()
            .any(|m| m.word_len() != self.word_len || m.alphabet != self.config.alphabet)
        {
            return bad("symbolic models disagree on word length or alphabet");
        }
        if self.window_lengths.iter().any(|w| !self.symbolic.contains_key(w)) {
            return bad("window length without a symbolic model");
        }
        Ok(())
    }
}
