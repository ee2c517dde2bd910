//! Runs the ablation variants and the 1-NN baseline on the synthetic suite.
//!
//! Usage: `cargo run --release --example ablation [n_train] [n_test] [seed]`

use std::time::Instant;

use weasel::harness::{ablation_variants, evaluate_variant, BenchVariant};
use weasel::synthetic::{generate, SyntheticKind};
use weasel::WeaselConfig;

fn main() -> weasel::Result<()> {
    let args: Vec<u64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let n_train = args.first().copied().unwrap_or(100) as usize;
    let n_test = args.get(1).copied().unwrap_or(100) as usize;
    let seed = args.get(2).copied().unwrap_or(1);
    let mut variants = ablation_variants(&WeaselConfig::default(), 32);
    variants.push(BenchVariant::nearest_neighbor());
    println!("dataset,variant,accuracy,train_ms,predict_ms_mean,chosen_l,features_pre,features_post");
    let only = std::env::var("KIND").ok();
    for kind in SyntheticKind::ALL {
        if only.as_deref().is_some_and(|k| k != kind.name()) {
            continue;
        }
        let (train, test) = generate::<f64>(kind, n_train, n_test, 128, seed);
        for v in &variants {
            let start = Instant::now();
            let row = evaluate_variant(kind.name(), &train, &test, v)?;
            println!(
                "{},{},{:.3},{:.0},{:.2},{:?},{},{} ({:.1}s)",
                row.dataset,
                row.variant,
                row.accuracy,
                row.train_ms,
                row.predict_ms_mean,
                row.chosen_l,
                row.features_pre,
                row.features_post,
                start.elapsed().as_secs_f64()
            );
        }
    }
    Ok(())
}
