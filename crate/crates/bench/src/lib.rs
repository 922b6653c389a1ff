//! Shared fixtures for the benchmarks.

use strata_core::{demo, synth, Dataset};

/// Complete-case demo data of roughly `n` rows.
pub fn demo_data(n: usize, seed: u64) -> Dataset {
    let (data, _) = synth::generate(&demo::spec(n, seed), &demo::schema()).expect("demo spec is valid");
    let (data, _) = strata_core::ingest::complete_cases(&data, &demo::CLUSTER_COLUMNS).expect("demo columns");
    let (data, _) = strata_core::ingest::complete_cases(&data, &demo::VALIDATION_FEATURES).expect("demo columns");
    data
}
