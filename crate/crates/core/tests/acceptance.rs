//! Acceptance suite. Runs every criterion in order, prints one PASS/FAIL
//! line each and exits non-zero if any failed.
//!
//! Runs single-threaded so the timing criteria are comparable across
//! machines.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use weasel::harness::{ablation_variants, evaluate_variant, BenchmarkRow};
use weasel::selection::chi_squared;
use weasel::synthetic::{generate, SyntheticKind};
use weasel::{
    anova_f, chi_squared_filter, dft, entropy, fit_bins, fit_weasel, nn_accuracy, split_gain, BagOfPatterns,
    LabeledDataset64, TimeSeries64, WeaselConfig, WeaselModel64, WordKey,
};

// Thresholds.
const BIN_ORACLE_SETS: usize = 200;
const BIN_ORACLE_MAX_SECS: f64 = 5.0;
const DFT_WINDOWS: usize = 100;
const DFT_LENGTHS: [usize; 4] = [8, 16, 31, 64];
const DFT_TOLERANCE: f64 = 1e-6;
const DFT_MAX_SECS: f64 = 1.0;
const GAIN_MULTISETS: usize = 1000;
const ANOVA_TOLERANCE: f64 = 1e-9;
const ANOVA_AFFINE_SETS: usize = 500;
const CHI_TABLES: usize = 500;
const CHI_TOLERANCE: f64 = 1e-9;
const CHI_THRESHOLD: f64 = 2.0;
const SHIFT_TRAIN: usize = 200;
const SHIFT_TEST: usize = 200;
const SERIES_LEN: usize = 128;
const SHIFT_MAX_ED: f64 = 0.75;
const SHIFT_MIN_ACCURACY: f64 = 0.95;
const SHIFT_MAX_SECS: f64 = 120.0;
const SUITE_TRAIN: usize = 100;
const SUITE_TEST: usize = 100;
const SUITE_REPLICATES: u64 = 3;
const SINGLE_WINDOW: usize = 32;
const BIGRAM_MIN_GAP: f64 = 0.05;
const MIN_REDUCTION: f64 = 0.10;
const PERSIST_SERIES: usize = 100;
const MAX_PREDICT_MS: f64 = 100.0;
const SCALING_LENGTHS: [usize; 3] = [128, 256, 512];
const MAX_EXPONENT: f64 = 2.2;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Shared fits of the ablation suite, reused by the feature-space checks.
#[derive(Default)]
struct SuiteRuns {
    rows: Vec<(u64, BenchmarkRow)>,
    bound_violations: Vec<String>,
}

fn random_labeled(rng: &mut ChaCha8Rng) -> Vec<(f64, usize)> {
    loop {
        let n = rng.random_range(2..=60);
        let k = rng.random_range(2..=4);
        let coarse = rng.random_bool(0.5);
        let values: Vec<(f64, usize)> = (0..n)
            .map(|_| {
                let v = if coarse {
                    rng.random_range(-8i32..8) as f64 * 0.5
                } else {
                    rng.random_range(-10.0..10.0)
                };
                (v, rng.random_range(0..k))
            })
            .collect();
        if values.iter().any(|v| v.0 != values[0].0) {
            return values;
        }
    }
}

fn criterion_bins() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut mismatches = 0;
    for _ in 0..BIN_ORACLE_SETS {
        let values = random_labeled(&mut rng);
        let mut distinct: Vec<f64> = values.iter().map(|v| v.0).collect();
        distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
        distinct.dedup();
        let n = values.len();
        // every midpoint, its gain and its left size
        let candidates: Vec<(f64, f64, usize)> = distinct
            .windows(2)
            .map(|p| {
                let sp = p[0] + (p[1] - p[0]) / 2.0;
                let gain: f64 = split_gain(&values, sp).unwrap();
                (sp, gain, values.iter().filter(|v| v.0 <= sp).count())
            })
            .collect();
        let best = candidates.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
        let expected = candidates
            .iter()
            .filter(|c| c.1 >= best - 1e-12)
            .min_by_key(|c| (2 * c.2).abs_diff(n))
            .unwrap()
            .0;
        let fitted = fit_bins(&values, 2).unwrap();
        if fitted.points() != [expected] {
            mismatches += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        mismatches == 0 && secs < BIN_ORACLE_MAX_SECS,
        format!("{mismatches}/{BIN_ORACLE_SETS} mismatches, {secs:.2}s"),
    )
}

fn criterion_dft() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for w in DFT_LENGTHS {
        for _ in 0..DFT_WINDOWS {
            let x: Vec<f64> = (0..w).map(|_| rng.random_range(-10.0..10.0)).collect();
            let fc = dft(&x).unwrap();
            for k in 0..=w / 2 {
                let (mut re, mut im) = (0.0, 0.0);
                for (t, &v) in x.iter().enumerate() {
                    let a = -2.0 * PI * (k * t) as f64 / w as f64;
                    re += v * a.cos();
                    im += v * a.sin();
                }
                worst = worst.max((fc.reals[k] - re).abs()).max((fc.imags[k] - im).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= DFT_TOLERANCE && secs < DFT_MAX_SECS,
        format!("max error {worst:.2e}, {secs:.3}s"),
    )
}

fn criterion_gain() -> Outcome {
    let half: f64 = entropy(&[0, 0, 1, 1]).unwrap();
    let perfect: f64 = split_gain(&[(1.0, 0), (2.0, 0), (3.0, 1), (4.0, 1)], 2.5).unwrap();
    let useless: f64 = split_gain(&[(1.0, 0), (2.0, 1), (3.0, 0), (4.0, 1)], 2.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut violations = 0;
    for _ in 0..GAIN_MULTISETS {
        let values = random_labeled(&mut rng);
        let labels: Vec<usize> = values.iter().map(|v| v.1).collect();
        let ent: f64 = entropy(&labels).unwrap();
        let mut distinct: Vec<f64> = values.iter().map(|v| v.0).collect();
        distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
        distinct.dedup();
        let sp = distinct[rng.random_range(0..distinct.len() - 1)];
        let ig: f64 = split_gain(&values, sp).unwrap();
        if !(0.0..=ent).contains(&ig) {
            violations += 1;
        }
    }
    outcome(
        half == 1.0 && perfect == 1.0 && useless == 0.0 && violations == 0,
        format!(
            "Ent([A,A,B,B])={half}, perfect IG={perfect}, useless IG={useless}, {violations}/{GAIN_MULTISETS} bound violations"
        ),
    )
}

/// One-way ANOVA written out from sums of squares.
fn anova_oracle(groups: &[Vec<f64>]) -> f64 {
    let n: usize = groups.iter().map(Vec::len).sum();
    let k = groups.len();
    let grand = groups.iter().flatten().sum::<f64>() / n as f64;
    let mut ssb = 0.0;
    let mut ssw = 0.0;
    for g in groups {
        let mean = g.iter().sum::<f64>() / g.len() as f64;
        ssb += g.len() as f64 * (mean - grand).powi(2);
        ssw += g.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    }
    (ssb / (k - 1) as f64) / (ssw / (n - k) as f64)
}

fn criterion_anova() -> Outcome {
    let example: f64 = anova_f(&[vec![1.0, 2.0, 3.0], vec![2.0, 3.0, 4.0]]).unwrap();
    let oracle = anova_oracle(&[vec![1.0, 2.0, 3.0], vec![2.0, 3.0, 4.0]]);
    let identical: f64 = anova_f(&[vec![1.0, 5.0, 2.0], vec![1.0, 5.0, 2.0]]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..ANOVA_AFFINE_SETS {
        let k = rng.random_range(2..=4);
        let groups: Vec<Vec<f64>> = (0..k)
            .map(|g| {
                let size = rng.random_range(2..=15);
                (0..size).map(|_| rng.random_range(-5.0..5.0) + g as f64).collect()
            })
            .collect();
        let a = rng.random_range(0.1..10.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let b = rng.random_range(-100.0..100.0);
        let moved: Vec<Vec<f64>> = groups
            .iter()
            .map(|g| g.iter().map(|v| a * v + b).collect())
            .collect();
        let f: f64 = anova_f(&groups).unwrap();
        let g: f64 = anova_f(&moved).unwrap();
        worst = worst.max((f - g).abs() / f.abs().max(1.0));
    }
    outcome(
        (example - 1.5).abs() <= ANOVA_TOLERANCE
            && (oracle - 1.5).abs() <= ANOVA_TOLERANCE
            && identical == 0.0
            && worst <= 1e-9,
        format!("F={example}, identical F={identical}, worst affine deviation {worst:.2e}"),
    )
}

/// Pearson statistic over the explicit 2 x k table.
fn chi_oracle(feature: &[u64], totals: &[u64]) -> f64 {
    let table: Vec<[f64; 2]> = feature
        .iter()
        .zip(totals)
        .map(|(&f, &t)| [f as f64, (t - f) as f64])
        .collect();
    let n: f64 = table.iter().map(|c| c[0] + c[1]).sum();
    let rows = [table.iter().map(|c| c[0]).sum::<f64>(), table.iter().map(|c| c[1]).sum::<f64>()];
    let mut stat = 0.0;
    for col in &table {
        let col_sum = col[0] + col[1];
        for r in 0..2 {
            let e = rows[r] * col_sum / n;
            if e > 0.0 {
                stat += (col[r] - e).powi(2) / e;
            }
        }
    }
    stat
}

fn bag(words: &[(u32, u32)]) -> BagOfPatterns {
    let mut b = BagOfPatterns::new();
    for &(word, count) in words {
        for _ in 0..count {
            b.increment(WordKey::unigram(8, word));
        }
    }
    b
}

fn criterion_chi() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..CHI_TABLES {
        let k = rng.random_range(2..=4);
        let totals: Vec<u64> = (0..k).map(|_| rng.random_range(1..500)).collect();
        let feature: Vec<u64> = totals.iter().map(|&t| rng.random_range(0..=t)).collect();
        let got: f64 = chi_squared(&feature, &totals);
        let want = chi_oracle(&feature, &totals);
        worst = worst.max((got - want).abs() / want.max(1.0));
    }

    // word 1 keeps the same share in both classes
    let bags = vec![bag(&[(1, 10), (2, 40), (3, 50)]), bag(&[(1, 10), (2, 5), (3, 85)])];
    let dict = chi_squared_filter::<f64>(&bags, &[0, 1], CHI_THRESHOLD).unwrap();
    let uniform_removed = dict.column(WordKey::unigram(8, 1)).is_none();
    let others_kept = dict.column(WordKey::unigram(8, 2)).is_some();

    let mut monotone = true;
    for trial in 0..50 {
        let bags: Vec<BagOfPatterns> = (0..12)
            .map(|_| {
                let words: Vec<(u32, u32)> = (0..20).map(|w| (w, rng.random_range(0..6))).collect();
                bag(&words)
            })
            .collect();
        let classes: Vec<usize> = (0..12).map(|i| (i + trial) % 3).collect();
        let mut previous: Option<Vec<WordKey>> = None;
        for threshold in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
            let kept: Vec<WordKey> = chi_squared_filter::<f64>(&bags, &classes, threshold)
                .unwrap()
                .entries()
                .iter()
                .map(|e| e.0)
                .collect();
            if let Some(prev) = &previous {
                monotone &= kept.iter().all(|k| prev.contains(k));
            }
            previous = Some(kept);
        }
    }
    outcome(
        worst <= CHI_TOLERANCE && uniform_removed && others_kept && monotone,
        format!(
            "worst deviation {worst:.2e}, uniform removed {uniform_removed}, monotone {monotone}"
        ),
    )
}

fn criterion_shift(model_out: &mut Option<(WeaselModel64, LabeledDataset64)>) -> Outcome {
    let (train, test) = generate::<f64>(SyntheticKind::ShiftInvariance, SHIFT_TRAIN, SHIFT_TEST, SERIES_LEN, 6);
    let ed = nn_accuracy(&train, &test).unwrap();
    let start = Instant::now();
    let model = fit_weasel(&train, &WeaselConfig::default()).unwrap();
    let acc = model.accuracy(&test).unwrap();
    let secs = start.elapsed().as_secs_f64();
    *model_out = Some((model, test));
    outcome(
        ed <= SHIFT_MAX_ED && acc >= SHIFT_MIN_ACCURACY && secs < SHIFT_MAX_SECS,
        format!("1-NN ED {ed:.3}, WEASEL {acc:.3}, {secs:.1}s"),
    )
}

fn variant_mean(rows: &[(u64, BenchmarkRow)], variant: &str, dataset: Option<&str>) -> f64 {
    let picked: Vec<f64> = rows
        .iter()
        .filter(|(_, r)| r.variant == variant && dataset.is_none_or(|d| r.dataset == d))
        .map(|(_, r)| r.accuracy)
        .collect();
    picked.iter().sum::<f64>() / picked.len() as f64
}

fn run_suite() -> SuiteRuns {
    let mut runs = SuiteRuns::default();
    let variants = ablation_variants(&WeaselConfig::default(), SINGLE_WINDOW);
    for replicate in 1..=SUITE_REPLICATES {
        for kind in SyntheticKind::ALL {
            let (train, test) = generate::<f64>(kind, SUITE_TRAIN, SUITE_TEST, SERIES_LEN, 100 + replicate);
            for variant in &variants {
                let row = evaluate_variant(kind.name(), &train, &test, variant).unwrap();
                if variant.name == "supervised+bigrams" {
                    // c^l unigrams plus c^2l bigrams per usable window length
                    let config = WeaselConfig::default();
                    let lengths = config.lengths_for(SERIES_LEN).unwrap();
                    let l = row.chosen_l.unwrap() as u32;
                    let c = config.alphabet as u64;
                    let bound: u64 = lengths
                        .iter()
                        .filter(|&&w| w / 2 + 1 >= l as usize)
                        .map(|_| c.pow(l) + c.pow(2 * l))
                        .sum();
                    if row.features_post > row.features_pre || row.features_pre as u64 > bound {
                        runs.bound_violations.push(format!(
                            "{} replicate {replicate}: pre {} post {} bound {bound}",
                            row.dataset, row.features_pre, row.features_post
                        ));
                    }
                }
                runs.rows.push((replicate, row));
            }
        }
    }
    runs
}

fn criterion_ablation(runs: &SuiteRuns) -> Outcome {
    let rows = &runs.rows;
    let best = variant_mean(rows, "supervised+bigrams", None);
    let others: Vec<(&str, f64)> = ["unsupervised+unigrams", "supervised+unigrams", "unsupervised+bigrams"]
        .iter()
        .map(|&v| (v, variant_mean(rows, v, None)))
        .collect();
    let ordering = others.iter().all(|o| best >= o.1);
    let single_name = format!("single-window-{SINGLE_WINDOW}+supervised+bigrams");
    let multi = variant_mean(rows, "supervised+bigrams", Some("multi-scale"));
    let single = variant_mean(rows, &single_name, Some("multi-scale"));
    let bigram = variant_mean(rows, "supervised+bigrams", Some("bigram-order"));
    let unigram = variant_mean(rows, "supervised+unigrams", Some("bigram-order"));
    let gap = bigram - unigram;
    let detail = format!(
        "supervised+bigrams {best:.3} vs {}; multi-scale multi {multi:.3} vs single {single:.3}; bigram-order gap {:+.1} points",
        others
            .iter()
            .map(|o| format!("{} {:.3}", o.0, o.1))
            .collect::<Vec<_>>()
            .join(", "),
        gap * 100.0
    );
    outcome(ordering && multi >= single && gap >= BIGRAM_MIN_GAP, detail)
}

fn criterion_features(runs: &SuiteRuns) -> Outcome {
    let mut worst = f64::INFINITY;
    let mut worst_name = String::new();
    for (replicate, row) in runs.rows.iter().filter(|(_, r)| r.variant == "supervised+bigrams") {
        let removed = 1.0 - row.features_post as f64 / row.features_pre as f64;
        if removed < worst {
            worst = removed;
            worst_name = format!("{} replicate {replicate}", row.dataset);
        }
    }
    let bounded = runs.bound_violations.is_empty();
    outcome(
        bounded && worst >= MIN_REDUCTION,
        format!(
            "bounds hold {bounded}{}, smallest reduction {:.1}% ({worst_name})",
            if bounded { String::new() } else { format!(" {:?}", runs.bound_violations) },
            worst * 100.0
        ),
    )
}

fn criterion_persistence() -> Outcome {
    let (train, _) = generate::<f64>(SyntheticKind::ShiftInvariance, 40, 0, 96, 9);
    let config = WeaselConfig {
        seed: 0,
        ..WeaselConfig::default()
    };
    let first = fit_weasel(&train, &config).unwrap().to_json().unwrap();
    let second = fit_weasel(&train, &config).unwrap().to_json().unwrap();
    let identical = first == second;

    let model = WeaselModel64::from_json(&first).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    model.save(&path).unwrap();
    let loaded = WeaselModel64::load(&path).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut differing = 0;
    for _ in 0..PERSIST_SERIES {
        let ts = TimeSeries64::new((0..96).map(|_| rng.random_range(-3.0..3.0)).collect()).unwrap();
        let a = model.predict(&ts).unwrap();
        let b = loaded.predict(&ts).unwrap();
        if a.class != b.class || a.scores != b.scores {
            differing += 1;
        }
    }
    outcome(
        identical && differing == 0,
        format!(
            "serialized models identical {identical} ({} bytes), {differing}/{PERSIST_SERIES} predictions differ after reload",
            first.len()
        ),
    )
}

fn mean_predict_ms(model: &WeaselModel64, test: &LabeledDataset64) -> f64 {
    let start = Instant::now();
    for ts in test.series() {
        std::hint::black_box(model.predict(ts).unwrap());
    }
    start.elapsed().as_secs_f64() * 1e3 / test.len() as f64
}

fn criterion_performance(shift: &(WeaselModel64, LabeledDataset64)) -> Outcome {
    let at_128 = mean_predict_ms(&shift.0, &shift.1);
    let config = WeaselConfig {
        word_lengths: vec![4],
        ..WeaselConfig::default()
    };
    let mut points = BTreeMap::new();
    for n in SCALING_LENGTHS {
        let (train, test) = generate::<f64>(SyntheticKind::ShiftInvariance, 20, 20, n, 11);
        let model = fit_weasel(&train, &config).unwrap();
        points.insert(n, mean_predict_ms(&model, &test));
    }
    // least-squares slope in log-log space
    let xs: Vec<f64> = points.keys().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = points.values().map(|t| t.ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    outcome(
        at_128 <= MAX_PREDICT_MS && slope < MAX_EXPONENT,
        format!(
            "{at_128:.2} ms per prediction at n=128; {}; exponent {slope:.2}",
            points
                .iter()
                .map(|(n, t)| format!("n={n}: {t:.2} ms"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn main() -> ExitCode {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build_global()
        .expect("global thread pool");

    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut report = |name: &'static str, o: Outcome| {
        println!("[{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((name, o));
    };
    report("1 binning oracle", criterion_bins());
    report("2 dft oracle", criterion_dft());
    report("3 entropy and gain identities", criterion_gain());
    report("4 anova f", criterion_anova());
    report("5 chi-squared filter", criterion_chi());
    let mut shift = None;
    report("6 shift-invariance suite", criterion_shift(&mut shift));
    let runs = run_suite();
    report("7 ablation ordering", criterion_ablation(&runs));
    report("8 feature space", criterion_features(&runs));
    report("9 determinism and persistence", criterion_persistence());
    report(
        "10 prediction performance",
        criterion_performance(shift.as_ref().expect("shift suite model")),
    );

    let failed: Vec<&str> = results.iter().filter(|r| !r.1.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
