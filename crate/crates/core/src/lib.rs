//! Clustering, embedding, validation and inference for survey-style tabular data.
//!
//! The crate is organised as one module per pipeline stage:
//!
//! * [`ingest`] loads delimiter-separated data against a JSON schema, masks
//!   survey non-response codes and draws seeded subsamples.
//! * [`inference`] runs the chi-square test of independence and the pooled
//!   two-proportion z-test, with condition checks.
//! * [`kmodes`] and [`kprototypes`] cluster categorical and mixed data.
//! * [`tsne`] computes exact t-SNE embeddings for visual inspection.
//! * [`gbdt`] trains a boosted-tree classifier with ordered target statistics
//!   to check that cluster labels are predictable from the features.
//! * [`report`] renders profiles, tables and deterministic SVG charts.
//! * [`synth`] generates synthetic survey data with planted clusters.
//! * [`pipeline`] wires all of the above into a reproducible run.

pub mod demo;
pub mod error;
pub mod gbdt;
pub mod inference;
pub mod ingest;
pub mod kmodes;
pub mod kprototypes;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod special;
pub mod synth;
pub mod tsne;

pub use error::{Error, Result};

pub use inference::{
    chi_square_independence, crosstab, expected_counts, two_prop_z, Alternative, ChiSquareResult,
    ConditionReport, ContingencyTable, TwoPropZResult,
};
pub use ingest::{Cell, ColumnKind, ColumnSchema, Dataset, SampleSpec};
pub use kmodes::{elbow_sweep, fit_kmodes, CategoricalMatrix, KModesConfig, KModesModel};
pub use gbdt::{fit_gbdt, predict, GbdtConfig, GbdtModel, ValidationReport};
pub use kprototypes::{centroid_table, fit_kprototypes, KPrototypesConfig, KPrototypesModel, MixedMatrix};
pub use tsne::{fit_tsne, Embedding, TsneConfig};
pub use pipeline::{run_demo, run_report, DemoConfig, ReportConfig, ReportSummary, RunManifest, RunRecorder};
