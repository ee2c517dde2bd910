use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use weasel::harness::{ablation_variants, evaluate_variant, BenchVariant};
use weasel::{
    load_dataset, load_ucr, run_benchmark, BenchmarkReport, Scaling, WeaselConfig, WeaselModel64,
};

/// Exit code when a benchmark found nothing to run.
const EXIT_NOTHING_RUN: u8 = 2;

#[derive(Parser)]
#[command(name = "weasel", version, about = "Bag-of-patterns time series classification")]
struct Cli {
    /// Worker threads (0 = one per core, 1 = single-threaded timing).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and save it as JSON.
    Fit {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Predict the label of every series in a UCR file.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Write `index,predicted,actual` rows here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Accuracy on a test split, from a saved model or a fresh fit.
    Eval {
        #[arg(long, required_unless_present = "model")]
        train: Option<PathBuf>,
        #[arg(long)]
        test: PathBuf,
        #[arg(long, conflicts_with = "train")]
        model: Option<PathBuf>,
        #[arg(long, value_enum)]
        baseline: Option<Baseline>,
        /// Write the report rows as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run every dataset directory found under the given roots.
    Bench {
        #[arg(required = true)]
        roots: Vec<PathBuf>,
        /// Run the five ablation settings instead of the configured one.
        #[arg(long)]
        ablation: bool,
        #[arg(long, value_enum)]
        baseline: Option<Baseline>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Baseline {
    /// 1-NN with Euclidean distance.
    Ed,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    #[arg(long)]
    wmin: Option<usize>,
    #[arg(long)]
    wmax: Option<usize>,
    /// Use every n-th window length only.
    #[arg(long)]
    window_stride: Option<usize>,
    /// Chi-squared threshold.
    #[arg(long)]
    chi: Option<f64>,
    #[arg(long)]
    alphabet: Option<usize>,
    /// Candidate word lengths, e.g. 4,6,8.
    #[arg(long, value_delimiter = ',')]
    word_lengths: Option<Vec<usize>>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    no_bigrams: bool,
    /// Low-pass coefficients and equi-depth bins.
    #[arg(long)]
    unsupervised: bool,
    #[arg(long)]
    single_window: Option<usize>,
    /// Scale feature vectors to unit length.
    #[arg(long)]
    l2: bool,
}

impl ConfigArgs {
    fn to_config(&self) -> Result<WeaselConfig> {
        let mut c = WeaselConfig::default();
        if let Some(v) = self.wmin {
            c.w_min = v;
        }
        c.w_max = self.wmax;
        if let Some(v) = self.window_stride {
            c.window_stride = v;
        }
        if let Some(v) = self.chi {
            c.chi_threshold = v;
        }
        if let Some(v) = self.alphabet {
            c.alphabet = v;
        }
        if let Some(v) = &self.word_lengths {
            c.word_lengths = v.clone();
        }
        if let Some(v) = self.folds {
            c.folds = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        c.bigrams = !self.no_bigrams;
        c.supervised = !self.unsupervised;
        c.single_window = self.single_window;
        if self.l2 {
            c.scaling = Scaling::L2;
        }
        c.validate()?;
        Ok(c)
    }
}

fn dataset_name(path: &Path) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset");
    stem.trim_end_matches("_TEST").trim_end_matches("_TRAIN").to_string()
}

fn write_report(report: &BenchmarkReport, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            report.write_csv(path)?;
            log::info!("wrote {}", path.display());
        }
        None => print!("{}", report.to_csv()?),
    }
    Ok(())
}

fn fit(train: &Path, model_path: &Path, config: WeaselConfig) -> Result<()> {
    let data = load_dataset::<f64>(train)?;
    let model = weasel::fit_weasel(&data, &config)?;
    model.save(model_path)?;
    for (l, acc) in &model.stats.cv_accuracy {
        println!("cv word length {l}: {acc:.4}");
    }
    println!(
        "word length {}, {} window lengths, features {} -> {}",
        model.word_len,
        model.window_lengths.len(),
        model.stats.features_pre,
        model.stats.features_post
    );
    Ok(())
}

fn predict(model: &Path, test: &Path, out: Option<&Path>) -> Result<()> {
    let model = WeaselModel64::load(model)?;
    let data = load_dataset::<f64>(test)?;
    let predictions = model.predict_all(data.series())?;
    let mut text = String::from("index,predicted,actual\n");
    for (i, (p, actual)) in predictions.iter().zip(data.labels()).enumerate() {
        text.push_str(&format!("{i},{},{actual}\n", p.label));
    }
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn eval(
    train: Option<&Path>,
    test: &Path,
    model: Option<&Path>,
    baseline: Option<Baseline>,
    out: Option<&Path>,
    config: WeaselConfig,
) -> Result<()> {
    if let Some(path) = model {
        if baseline.is_some() {
            bail!("--baseline needs --train");
        }
        let model = WeaselModel64::load(path)?;
        let data = load_dataset::<f64>(test)?;
        println!("accuracy {:.4}", model.accuracy(&data)?);
        return Ok(());
    }
    let train = train.context("--train or --model is required")?;
    let (train_data, test_data) = load_ucr::<f64>(train, test)?;
    let name = dataset_name(train);
    let mut report = BenchmarkReport::default();
    let mut variants = vec![BenchVariant::weasel(config)];
    if baseline.is_some() {
        variants.push(BenchVariant::nearest_neighbor());
    }
    for v in &variants {
        let row = evaluate_variant(&name, &train_data, &test_data, v)?;
        println!("{}: accuracy {:.4}", row.variant, row.accuracy);
        report.rows.push(row);
    }
    if let Some(path) = out {
        write_report(&report, Some(path))?;
    }
    Ok(())
}

fn bench(
    roots: &[PathBuf],
    ablation: bool,
    baseline: Option<Baseline>,
    out: Option<&Path>,
    config: WeaselConfig,
) -> Result<bool> {
    let mut variants = if ablation {
        let w = config.single_window.unwrap_or(32);
        ablation_variants(&WeaselConfig { single_window: None, ..config }, w)
    } else {
        vec![BenchVariant::weasel(config)]
    };
    if baseline.is_some() {
        variants.push(BenchVariant::nearest_neighbor());
    }
    let report = run_benchmark::<f64>(roots, &variants);
    if report.rows.is_empty() {
        eprintln!("no datasets were run");
        return Ok(false);
    }
    write_report(&report, out)?;
    if out.is_some() {
        for (variant, rank) in report.mean_ranks() {
            println!("{rank:.3}\t{variant}");
        }
    }
    Ok(true)
}

fn run(cli: Cli) -> Result<ExitCode> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .context("configuring the thread pool")?;
    match cli.command {
        Command::Fit { train, model, config } => fit(&train, &model, config.to_config()?)?,
        Command::Predict { model, test, out } => predict(&model, &test, out.as_deref())?,
        Command::Eval {
            train,
            test,
            model,
            baseline,
            out,
            config,
        } => eval(
            train.as_deref(),
            &test,
            model.as_deref(),
            baseline,
            out.as_deref(),
            config.to_config()?,
        )?,
        Command::Bench {
            roots,
            ablation,
            baseline,
            out,
            config,
        } => {
            if !bench(&roots, ablation, baseline, out.as_deref(), config.to_config()?)? {
                return Ok(ExitCode::from(EXIT_NOTHING_RUN));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
