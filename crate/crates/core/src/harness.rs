//! UCR-format loading, the 1-NN Euclidean baseline and the benchmark runner.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WeaselError};
use crate::pipeline::{fit_weasel, WeaselConfig};
use crate::scalar::Scalar;
use crate::series::{LabeledDataset, TimeSeries};

/// Parses UCR text: one series per line, label first, then the values,
/// separated by commas or whitespace (detected per file).
pub fn parse_ucr<T: Scalar>(text: &str, path: &Path) -> Result<LabeledDataset<T>> {
    let err = |line: usize, message: String| WeaselError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let comma = text.contains(',');
    let mut samples = Vec::new();
    let mut expected_len = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields: Box<dyn Iterator<Item = &str>> = if comma {
            Box::new(line.split(',').map(str::trim))
        } else {
            Box::new(line.split_whitespace())
        };
        let label = fields.next().unwrap_or_default();
        if label.is_empty() {
            return Err(err(line_no, "missing label".into()));
        }
        let values = fields
            .enumerate()
            .map(|(j, f)| {
                let v: f64 = f
                    .parse()
                    .map_err(|_| err(line_no, format!("value {} ({f:?}) is not a number", j + 1)))?;
                if !v.is_finite() {
                    return Err(err(line_no, format!("value {} is not finite", j + 1)));
                }
                Ok(T::lit(v))
            })
            .collect::<Result<Vec<T>>>()?;
        if values.is_empty() {
            return Err(err(line_no, "row has a label but no values".into()));
        }
        match expected_len {
            None => expected_len = Some(values.len()),
            Some(n) if n != values.len() => {
                return Err(err(
                    line_no,
                    format!("row has {} values, expected {n}", values.len()),
                ))
            }
            _ => {}
        }
        let ts = TimeSeries::new(values).map_err(|e| err(line_no, e.to_string()))?;
        samples.push((ts, label.to_string()));
    }
    if samples.is_empty() {
        return Err(err(0, "no records".into()));
    }
    Ok(LabeledDataset::new(samples))
}

pub fn load_dataset<T: Scalar>(path: impl AsRef<Path>) -> Result<LabeledDataset<T>> {
    let path = path.as_ref();
    parse_ucr(&fs::read_to_string(path)?, path)
}

/// Loads a train/test pair; both must have the same series length.
pub fn load_ucr<T: Scalar>(
    train: impl AsRef<Path>,
    test: impl AsRef<Path>,
) -> Result<(LabeledDataset<T>, LabeledDataset<T>)> {
    let train_set = load_dataset(train.as_ref())?;
    let test_set = load_dataset(test.as_ref())?;
    if train_set.max_len() != test_set.max_len() {
        return Err(WeaselError::Parse {
            path: test.as_ref().to_path_buf(),
            line: 1,
            message: format!(
                "series length {} differs from the training length {}",
                test_set.max_len(),
                train_set.max_len()
            ),
        });
    }
    Ok((train_set, test_set))
}

/// Label of the training series closest in squared Euclidean distance;
/// the earliest one wins ties.
pub fn nn_euclidean<'a, T: Scalar>(train: &'a LabeledDataset<T>, query: &TimeSeries<T>) -> Result<&'a str> {
    let mut best: Option<(T, &str)> = None;
    for (ts, label) in train.iter() {
        if ts.len() != query.len() {
            return Err(WeaselError::ShapeMismatch {
                expected: ts.len(),
                found: query.len(),
            });
        }
        let d: T = ts
            .values()
            .iter()
            .zip(query.values())
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum();
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, label));
        }
    }
    best.map(|b| b.1).ok_or(WeaselError::InsufficientClasses(0))
}

pub fn nn_accuracy<T: Scalar>(train: &LabeledDataset<T>, test: &LabeledDataset<T>) -> Result<f64> {
    let mut correct = 0;
    for (ts, label) in test.iter() {
        if nn_euclidean(train, ts)? == label {
            correct += 1;
        }
    }
    Ok(correct as f64 / test.len().max(1) as f64)
}

/// One line of the benchmark CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub dataset: String,
    pub variant: String,
    pub accuracy: f64,
    pub train_ms: f64,
    pub predict_ms_mean: f64,
    pub chosen_l: Option<usize>,
    pub features_pre: usize,
    pub features_post: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchmarkReport {
    pub rows: Vec<BenchmarkRow>,
}

impl BenchmarkReport {
    pub fn to_csv(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        if self.rows.is_empty() {
            writer.write_record([
                "dataset",
                "variant",
                "accuracy",
                "train_ms",
                "predict_ms_mean",
                "chosen_l",
                "features_pre",
                "features_post",
            ])?;
        }
        for row in &self.rows {
            writer.serialize(row)?;
        }
        let bytes = writer.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let rows = reader.deserialize().collect::<std::result::Result<Vec<BenchmarkRow>, _>>()?;
        Ok(Self { rows })
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_csv()?)?;
        Ok(())
    }

    /// Rank of each variant per dataset (1 = best accuracy, ties share the
    /// average rank), averaged over datasets.
    pub fn mean_ranks(&self) -> Vec<(String, f64)> {
        let mut variants: Vec<String> = Vec::new();
        let mut datasets: Vec<String> = Vec::new();
        for row in &self.rows {
            if !variants.contains(&row.variant) {
                variants.push(row.variant.clone());
            }
            if !datasets.contains(&row.dataset) {
                datasets.push(row.dataset.clone());
            }
        }
        let mut totals = vec![(0.0, 0usize); variants.len()];
        for ds in &datasets {
            let rows: Vec<&BenchmarkRow> = self.rows.iter().filter(|r| &r.dataset == ds).collect();
            for r in &rows {
                let better = rows.iter().filter(|o| o.accuracy > r.accuracy).count() as f64;
                let same = rows.iter().filter(|o| o.accuracy == r.accuracy).count() as f64;
                let rank = better + (same + 1.0) / 2.0;
                let slot = variants.iter().position(|v| v == &r.variant).expect("known variant");
                totals[slot].0 += rank;
                totals[slot].1 += 1;
            }
        }
        variants
            .into_iter()
            .zip(totals)
            .map(|(v, (sum, n))| (v, sum / n.max(1) as f64))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum VariantKind {
    Weasel(Box<WeaselConfig>),
    NearestNeighbor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchVariant {
    pub name: String,
    pub kind: VariantKind,
}

impl BenchVariant {
    pub fn weasel(config: WeaselConfig) -> Self {
        Self {
            name: variant_name(&config),
            kind: VariantKind::Weasel(Box::new(config)),
        }
    }

    pub fn nearest_neighbor() -> Self {
        Self {
            name: "1nn-ed".into(),
            kind: VariantKind::NearestNeighbor,
        }
    }
}

pub fn variant_name(config: &WeaselConfig) -> String {
    let sup = if config.supervised { "supervised" } else { "unsupervised" };
    let grams = if config.bigrams { "bigrams" } else { "unigrams" };
    match config.single_window {
        Some(w) => format!("single-window-{w}+{sup}+{grams}"),
        None => format!("{sup}+{grams}"),
    }
}

/// The five ablation settings: one window length (supervised, bigrams) and
/// every combination of supervision and bigrams over all window lengths.
pub fn ablation_variants(base: &WeaselConfig, single_window: usize) -> Vec<BenchVariant> {
    let mut out = vec![BenchVariant::weasel(WeaselConfig {
        single_window: Some(single_window),
        supervised: true,
        bigrams: true,
        ..base.clone()
    })];
    for (supervised, bigrams) in [(false, false), (false, true), (true, false), (true, true)] {
        out.push(BenchVariant::weasel(WeaselConfig {
            single_window: None,
            supervised,
            bigrams,
            ..base.clone()
        }));
    }
    out
}

/// Train/test files of a UCR dataset directory (`*_TRAIN*`, `*_TEST*`).
pub fn find_split_files(dir: &Path) -> Option<(PathBuf, PathBuf)> {
    let mut train = None;
    let mut test = None;
    let mut entries: Vec<PathBuf> = fs::read_dir(dir).ok()?.flatten().map(|e| e.path()).collect();
    entries.sort();
    for p in entries.into_iter().filter(|p| p.is_file()) {
        let name = p.file_name()?.to_string_lossy().to_string();
        if train.is_none() && name.contains("_TRAIN") {
            train = Some(p);
        } else if test.is_none() && name.contains("_TEST") {
            test = Some(p);
        }
    }
    Some((train?, test?))
}

/// Dataset directories under `root`: `root` itself if it holds a split,
/// otherwise every immediate subdirectory that does, sorted by name.
pub fn discover_datasets(root: &Path) -> Vec<(String, PathBuf, PathBuf)> {
    let name_of = |p: &Path| {
        p.file_name()
            .map(|n| n.to_string_lossy().to_string())
            .unwrap_or_else(|| p.display().to_string())
    };
    if let Some((train, test)) = find_split_files(root) {
        return vec![(name_of(root), train, test)];
    }
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)
        .map(|rd| rd.flatten().map(|e| e.path()).filter(|p| p.is_dir()).collect())
        .unwrap_or_default();
    dirs.sort();
    dirs.into_iter()
        .filter_map(|d| find_split_files(&d).map(|(tr, te)| (name_of(&d), tr, te)))
        .collect()
}

/// Fits and evaluates one variant. Prediction time is measured per series
/// around the full pipeline (bag construction included).
pub fn evaluate_variant<T: Scalar>(
    name: &str,
    train: &LabeledDataset<T>,
    test: &LabeledDataset<T>,
    variant: &BenchVariant,
) -> Result<BenchmarkRow> {
    let mut row = BenchmarkRow {
        dataset: name.to_string(),
        variant: variant.name.clone(),
        accuracy: 0.0,
        train_ms: 0.0,
        predict_ms_mean: 0.0,
        chosen_l: None,
        features_pre: 0,
        features_post: 0,
    };
    let mut correct = 0;
    match &variant.kind {
        VariantKind::Weasel(config) => {
            let start = Instant::now();
            let model = fit_weasel(train, config)?;
            row.train_ms = start.elapsed().as_secs_f64() * 1e3;
            row.chosen_l = Some(model.word_len);
            row.features_pre = model.stats.features_pre;
            row.features_post = model.stats.features_post;
            let start = Instant::now();
            for (ts, label) in test.iter() {
                if model.predict(ts)?.label == label {
                    correct += 1;
                }
            }
            row.predict_ms_mean = start.elapsed().as_secs_f64() * 1e3 / test.len().max(1) as f64;
        }
        VariantKind::NearestNeighbor => {
            let start = Instant::now();
            for (ts, label) in test.iter() {
                if nn_euclidean(train, ts)? == label {
                    correct += 1;
                }
            }
            row.predict_ms_mean = start.elapsed().as_secs_f64() * 1e3 / test.len().max(1) as f64;
        }
    }
    row.accuracy = correct as f64 / test.len().max(1) as f64;
    Ok(row)
}

/// Runs every variant on every dataset found under `roots`. Failing
/// datasets are logged and skipped.
pub fn run_benchmark<T: Scalar>(roots: &[PathBuf], variants: &[BenchVariant]) -> BenchmarkReport {
    let mut report = BenchmarkReport::default();
    for root in roots {
        for (name, train_path, test_path) in discover_datasets(root) {
            let (train, test) = match load_ucr::<T>(&train_path, &test_path) {
                Ok(pair) => pair,
                Err(e) => {
                    log::error!("{name}: {e}");
                    continue;
                }
            };
            for variant in variants {
                match evaluate_variant(&name, &train, &test, variant) {
                    Ok(row) => {
                        log::info!(
                            "{name} {}: accuracy {:.4}, train {:.0} ms",
                            row.variant,
                            row.accuracy,
                            row.train_ms
                        );
                        report.rows.push(row);
                    }
                    Err(e) => log::error!("{name} {}: {e}", variant.name),
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<LabeledDataset<f64>> {
        parse_ucr(text, Path::new("mem"))
    }

    #[test]
    fn parses_comma_and_tab() {
        let d = parse("1,0.5,0.7\n2,0.1,0.2").unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.series()[0].values(), &[0.5, 0.7]);
        assert_eq!(d.classes(), ["1", "2"]);
        let t = parse("1\t0.5\t0.7\n2\t0.1\t0.2\n").unwrap();
        assert_eq!(t, d);
        let s = parse("  1  0.5 0.7\n\n2 0.1   0.2").unwrap();
        assert_eq!(s, d);
    }

    #[test]
    fn labels_kept_verbatim() {
        let d = parse("1.0,1,2\n-1,3,4").unwrap();
        assert_eq!(d.labels(), ["1.0", "-1"]);
    }

    #[test]
    fn parse_errors_carry_line() {
        match parse("1,0.5,0.7\n2,0.1") {
            Err(WeaselError::Parse { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("expected 2"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("1,0.5,x"), Err(WeaselError::Parse { line: 1, .. })));
        assert!(matches!(parse("1,NaN,0.2"), Err(WeaselError::Parse { line: 1, .. })));
        assert!(matches!(parse(""), Err(WeaselError::Parse { line: 0, .. })));
        assert!(matches!(parse("1\n"), Err(WeaselError::Parse { line: 1, .. })));
    }

    fn tiny() -> LabeledDataset<f64> {
        let ts = |v: &[f64]| TimeSeries::new(v.to_vec()).unwrap();
        LabeledDataset::new(vec![
            (ts(&[0.0, 0.0]), "a".into()),
            (ts(&[3.0, 4.0]), "b".into()),
            (ts(&[1.0, 1.0]), "c".into()),
        ])
    }

    #[test]
    fn nearest_neighbor_table() {
        let train = tiny();
        let q = TimeSeries::new(vec![2.0, 2.0]).unwrap();
        // squared distances 8, 5, 2
        assert_eq!(nn_euclidean(&train, &q).unwrap(), "c");
        let q = TimeSeries::new(vec![3.0, 4.0]).unwrap();
        assert_eq!(nn_euclidean(&train, &q).unwrap(), "b");
        // equidistant (0.5 each) to "a" and "c": earlier index wins
        let q = TimeSeries::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(nn_euclidean(&train, &q).unwrap(), "a");
        let q = TimeSeries::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(nn_euclidean(&train, &q), Err(WeaselError::ShapeMismatch { .. })));
    }

    #[test]
    fn csv_round_trip() {
        let report = BenchmarkReport {
            rows: vec![
                BenchmarkRow {
                    dataset: "Gun,Point".into(),
                    variant: "supervised+bigrams".into(),
                    accuracy: 0.973_333_333_333_333_3,
                    train_ms: 1_234.567_891,
                    predict_ms_mean: 0.1 + 0.2,
                    chosen_l: Some(6),
                    features_pre: 12345,
                    features_post: 6789,
                },
                BenchmarkRow {
                    dataset: "Gun,Point".into(),
                    variant: "1nn-ed".into(),
                    accuracy: 0.9,
                    train_ms: 0.0,
                    predict_ms_mean: 1e-3,
                    chosen_l: None,
                    features_pre: 0,
                    features_post: 0,
                },
            ],
        };
        let text = report.to_csv().unwrap();
        assert!(text.starts_with(
            "dataset,variant,accuracy,train_ms,predict_ms_mean,chosen_l,features_pre,features_post\n"
        ));
        assert_eq!(BenchmarkReport::from_csv(&text).unwrap(), report);
        let empty = BenchmarkReport::default();
        assert_eq!(BenchmarkReport::from_csv(&empty.to_csv().unwrap()).unwrap(), empty);
    }

    #[test]
    fn ranks_average_ties() {
        let row = |ds: &str, v: &str, acc: f64| BenchmarkRow {
            dataset: ds.into(),
            variant: v.into(),
            accuracy: acc,
            train_ms: 0.0,
            predict_ms_mean: 0.0,
            chosen_l: None,
            features_pre: 0,
            features_post: 0,
        };
        let report = BenchmarkReport {
            rows: vec![
                row("x", "a", 0.9),
                row("x", "b", 0.8),
                row("y", "a", 0.5),
                row("y", "b", 0.5),
            ],
        };
        assert_eq!(report.mean_ranks(), vec![("a".into(), 1.25), ("b".into(), 1.75)]);
    }

    #[test]
    fn ablation_matrix_has_five_settings() {
        let v = ablation_variants(&WeaselConfig::default(), 32);
        let names: Vec<_> = v.iter().map(|v| v.name.as_str()).collect();
        assert_eq!(
            names,
            [
                "single-window-32+supervised+bigrams",
                "unsupervised+unigrams",
                "unsupervised+bigrams",
                "supervised+unigrams",
                "supervised+bigrams"
            ]
        );
    }

    #[test]
    fn empty_directory_gives_empty_report() {
        let dir = tempfile::tempdir().unwrap();
        let report = run_benchmark::<f64>(&[dir.path().to_path_buf()], &[BenchVariant::nearest_neighbor()]);
        assert!(report.rows.is_empty());
    }
}
