//! Synthetic inputs shared by the pipeline benchmarks.

use barrace_core::{ItemRecord, RankingDataset};

/// Deterministic `items × periods` dataset with plenty of rank churn.
pub fn synthetic_dataset(items: usize, periods: usize) -> RankingDataset {
    let records = (0..items)
        .map(|i| ItemRecord::new(format!("item-{i:03}"), format!("cat-{}", i % 7)))
        .collect();
    let labels = (0..periods).map(|p| format!("{}", 2000 + p)).collect();
    let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
    let values = (0..items)
        .map(|_| {
            (0..periods)
                .map(|_| {
                    state ^= state << 13;
                    state ^= state >> 7;
                    state ^= state << 17;
                    (state % 10_000) as f64 / 10.0
                })
                .collect()
        })
        .collect();
    RankingDataset::new(records, labels, values).expect("synthetic dataset is valid")
}
