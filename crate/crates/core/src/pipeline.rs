//! End-to-end report runs and the manifest that records them.
//!
//! A [`RunRecorder`] owns an output directory. Every artifact goes through
//! [`RunRecorder::write`], which stores the bytes and their SHA-256 digest;
//! [`RunRecorder::finish`] then writes `manifest.json`. Nothing in a manifest
//! depends on the wall clock: the timestamp comes from `SOURCE_DATE_EPOCH`
//! (0 when unset), so identical runs give identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::demo;
use crate::error::{Error, Result};
use crate::gbdt::{fit_gbdt, GbdtConfig};
use crate::inference::{chi_square_independence, crosstab, two_prop_z, Alternative};
use crate::ingest::{complete_case_rows, sample_indices, schema_to_json, write_csv, Dataset, SampleSpec};
use crate::kmodes::{self, CategoricalMatrix};
use crate::kprototypes::{self, centroid_table, fit_kprototypes, KPrototypesConfig, MixedMatrix};
use crate::report::{self, Orientation};
use crate::rng::RNG_ALGORITHM;
use crate::synth::{self, GeneratorSpec};
use crate::tsne::{encode_mixed_for_tsne, fit_tsne, TsneConfig};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<FileDigest>,
    /// Paths are relative to the output directory.
    pub outputs: Vec<FileDigest>,
    pub versions: BTreeMap<String, String>,
    pub source_date_epoch: u64,
}

impl RunManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn source_date_epoch() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.trim().parse().ok()).unwrap_or(0)
}

pub struct RunRecorder {
    dir: PathBuf,
    manifest: RunManifest,
}

impl RunRecorder {
    pub fn new(dir: impl Into<PathBuf>, command: Vec<String>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        let versions = BTreeMap::from([
            ("strata-core".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("rng".to_string(), RNG_ALGORITHM.to_string()),
        ]);
        let manifest = RunManifest {
            command,
            seeds: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            versions,
            source_date_epoch: source_date_epoch(),
        };
        Ok(RunRecorder { dir, manifest })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    pub fn seed(&mut self, name: &str, value: u64) {
        self.manifest.seeds.insert(name.to_string(), value);
    }

    /// Reads an input file and records its digest under the path as given.
    pub fn input(&mut self, path: impl AsRef<Path>) -> Result<Vec<u8>> {
        let path = path.as_ref();
        let bytes = fs::read(path)?;
        self.manifest.inputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
            bytes: bytes.len() as u64,
        });
        Ok(bytes)
    }

    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<PathBuf> {
        let bytes = bytes.as_ref();
        if name == MANIFEST_FILE || self.manifest.outputs.iter().any(|o| o.path == name) {
            return Err(Error::InvalidArgument(format!("artifact `{name}` written twice")));
        }
        let path = self.dir.join(name);
        fs::write(&path, bytes)?;
        self.manifest.outputs.push(FileDigest {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text)
    }

    pub fn finish(self) -> Result<RunManifest> {
        let mut text = serde_json::to_string_pretty(&self.manifest)?;
        text.push('\n');
        fs::write(self.dir.join(MANIFEST_FILE), text)?;
        Ok(self.manifest)
    }
}

/// Settings for [`run_report`]. The defaults describe the bundled demo.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    /// Clustered columns, numeric and categorical.
    pub columns: Vec<String>,
    /// Features for the boosted-tree validation.
    pub validation_features: Vec<String>,
    /// Column pairs tested for independence on the data.
    pub chi2_pairs: Vec<(String, String)>,
    pub k: usize,
    pub k_min: usize,
    pub k_max: usize,
    pub gamma: Option<f64>,
    pub restarts: usize,
    pub seed: u64,
    /// Rows embedded with t-SNE; larger inputs are subsampled.
    pub tsne_points: usize,
    pub perplexity: f64,
    pub tsne_iterations: usize,
    pub gbdt_rounds: usize,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            columns: demo::CLUSTER_COLUMNS.iter().map(|c| c.to_string()).collect(),
            validation_features: demo::VALIDATION_FEATURES.iter().map(|c| c.to_string()).collect(),
            chi2_pairs: vec![(demo::CITIZEN.to_string(), demo::WORKS_FOR_PAY.to_string())],
            k: 5,
            k_min: 1,
            k_max: 8,
            gamma: None,
            restarts: 10,
            seed: 42,
            tsne_points: 800,
            perplexity: 30.0,
            tsne_iterations: 1000,
            gbdt_rounds: 200,
        }
    }
}

/// Headline numbers of a report run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub rows_used: usize,
    pub rows_dropped: usize,
    pub kmodes_knee: Option<usize>,
    pub kproto_knee: usize,
    pub cluster_sizes: Vec<usize>,
    pub kproto_cost: f64,
    /// Agreement with the planted labels, when they are known.
    pub adjusted_rand_index: Option<f64>,
    pub validation_accuracy: f64,
    pub top_features: Vec<String>,
    pub final_kl: f64,
}

/// `row,cluster` lines keyed by the row's position in the source data.
pub fn labels_csv(rows: &[usize], labels: &[usize]) -> String {
    let mut out = String::from("row,cluster\n");
    for (r, l) in rows.iter().zip(labels) {
        out.push_str(&format!("{r},{l}\n"));
    }
    out
}

/// Parses [`labels_csv`] output into `(row, cluster)` pairs.
pub fn parse_labels_csv(text: &str) -> Result<Vec<(usize, usize)>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |j: usize| {
            rec.get(j).and_then(|v| v.trim().parse::<usize>().ok()).ok_or_else(|| {
                Error::InvalidArgument(format!("labels line {}: expected `row,cluster` integers", i + 2))
            })
        };
        out.push((field(0)?, field(1)?));
    }
    Ok(out)
}

fn strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

pub fn csv_bytes(data: &Dataset) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    write_csv(data, &mut out, b',')?;
    Ok(out)
}

/// Clusters, embeds and validates `data`, writing every table and chart
/// through `rec`. `truth` holds planted labels aligned with `data`'s rows.
pub fn run_report(
    data: &Dataset,
    truth: Option<&[usize]>,
    config: &ReportConfig,
    rec: &mut RunRecorder,
) -> Result<ReportSummary> {
    if let Some(t) = truth {
        if t.len() != data.n_rows() {
            return Err(Error::LengthMismatch { left: data.n_rows(), right: t.len() });
        }
    }
    rec.seed("report", config.seed);
    let columns = strs(&config.columns);
    let features = strs(&config.validation_features);

    let mut tests = Vec::new();
    for (a, b) in &config.chi2_pairs {
        let table = crosstab(data, a, b)?;
        let result = chi_square_independence(&table, 0.05, None)?;
        tests.push(serde_json::json!({
            "rows": a, "columns": b, "observed": table.observed,
            "verdict": result.verdict(), "result": result,
        }));
    }
    if !tests.is_empty() {
        rec.write_json("independence_tests.json", &tests)?;
    }

    let mut needed: Vec<&str> = columns.clone();
    for f in &features {
        if !needed.contains(f) {
            needed.push(f);
        }
    }
    let kept = complete_case_rows(data, &needed)?;
    let dropped = data.n_rows() - kept.len();
    let data = data.select_rows(&kept);
    let truth: Option<Vec<usize>> = truth.map(|t| kept.iter().map(|&r| t[r]).collect());

    let categorical: Vec<&str> =
        columns.iter().copied().filter(|c| data.column(c).map(|s| s.is_categorical()).unwrap_or(false)).collect();
    let mut kmodes_knee = None;
    if !categorical.is_empty() {
        let cat = CategoricalMatrix::from_dataset(&data, &categorical)?;
        let sweep = kmodes::elbow_sweep(&cat, config.k_min..=config.k_max, config.seed, config.restarts)?;
        let (spec, knee, svg) = report::elbow_chart(&sweep)?;
        rec.write("elbow_kmodes.csv", spec.to_csv(b',')?)?;
        rec.write("elbow_kmodes.svg", svg)?;
        kmodes_knee = Some(knee.k);
    }

    let mixed = MixedMatrix::from_dataset(&data, &columns)?;
    let mut base = KPrototypesConfig::new(config.k).seed(config.seed).restarts(config.restarts);
    if let Some(g) = config.gamma {
        base = base.gamma(g);
    }
    let sweep_models = kprototypes::elbow_sweep_models(&mixed, config.k_min..=config.k_max, &base)?;
    let sweep: Vec<(usize, f64)> = sweep_models.iter().map(|m| (m.k, m.cost)).collect();
    let (spec, kproto_knee, svg) = report::elbow_chart(&sweep)?;
    rec.write("elbow_kproto.csv", spec.to_csv(b',')?)?;
    rec.write("elbow_kproto.svg", svg)?;

    let model = fit_kprototypes(&mixed, &base)?;
    let schema = data.schema().to_vec();
    rec.write_json("kproto_model.json", &model.to_json(&schema)?)?;
    let centroids = centroid_table(&model, &schema)?;
    rec.write("centroids.txt", centroids.to_text())?;
    rec.write("centroids.csv", centroids.to_csv(b',')?)?;

    let mut profile_vars = columns.clone();
    for f in &features {
        if !profile_vars.contains(f) {
            profile_vars.push(f);
        }
    }
    let profiles = report::cluster_profiles(&data, &model.assignments, &profile_vars)?;
    rec.write_json("profiles.json", &profiles)?;
    rec.write("typical_members.txt", report::typical_member_table(&profiles, &schema))?;

    let n = data.n_rows();
    let picked = if n > config.tsne_points {
        sample_indices(n, SampleSpec { size: config.tsne_points, seed: config.seed })?
    } else {
        (0..n).collect()
    };
    let subset = data.select_rows(&picked);
    let labels: Vec<usize> = picked.iter().map(|&i| model.assignments[i]).collect();
    let (points, _) = encode_mixed_for_tsne(&subset, &columns)?;
    let tsne = TsneConfig { perplexity: config.perplexity, iterations: config.tsne_iterations, seed: config.seed, ..TsneConfig::default() };
    if let Some(w) = tsne.perplexity_warning() {
        log::warn!("{w}");
    }
    let embedding = fit_tsne(&points, &tsne)?;
    rec.write("embedding.csv", embedding.to_csv(Some(&labels), b',')?)?;
    let (_, svg) = report::scatter_chart(&embedding.coords, &labels, "t-SNE projection of the clusters")?;
    rec.write("embedding.svg", svg)?;

    let feats = MixedMatrix::from_dataset(&data, &features)?;
    let gbdt = GbdtConfig::default().seed(config.seed).rounds(config.gbdt_rounds);
    let (_, validation) = fit_gbdt(&feats, &model.assignments, &gbdt)?;
    rec.write_json("validation.json", &validation.to_json())?;
    rec.write("importance.txt", validation.importance_text())?;

    let adjusted_rand_index = match &truth {
        Some(t) => Some(synth::adjusted_rand_index(&model.assignments, t)?),
        None => None,
    };
    let summary = ReportSummary {
        rows_used: n,
        rows_dropped: dropped,
        kmodes_knee,
        kproto_knee: kproto_knee.k,
        cluster_sizes: model.cluster_sizes(),
        kproto_cost: model.cost,
        adjusted_rand_index,
        validation_accuracy: validation.test_accuracy,
        top_features: validation.importance_ranking.iter().take(3).map(|(f, _)| f.clone()).collect(),
        final_kl: embedding.final_kl,
    };
    rec.write_json("summary.json", &summary)?;
    Ok(summary)
}

/// Writes the population charts and the two sample tests that come with the
/// bundled survey tables.
pub fn run_fixture_tests(rec: &mut RunRecorder) -> Result<()> {
    let population = demo::population_dataset();
    let work = demo::worked_last_week_population();
    let offer = demo::insurance_offered_population();
    for (name, col, fixture) in [
        ("population_work", demo::WORKS_FOR_PAY, work),
        ("population_insurance", demo::EMPLOYER_INSURANCE, offer),
    ] {
        let mut table = crosstab(&population, demo::CITIZEN, col)?;
        table.row_labels = fixture.row_labels;
        let (spec, svg) = report::segmented_bar(&table, Orientation::Vertical)?;
        rec.write(&format!("{name}.csv"), spec.to_csv(b',')?)?;
        rec.write(&format!("{name}.svg"), svg)?;
    }
    let chi2 = chi_square_independence(&demo::worked_last_week_sample(), 0.05, Some(demo::POPULATION_N))?;
    let (x1, n1, x2, n2) = demo::INSURANCE_SAMPLE;
    let z = two_prop_z(x1, n1, x2, n2, Alternative::Greater, 0.05, Some(demo::POPULATION_N))?;
    let doc = serde_json::json!({
        "chi_square": { "verdict": chi2.verdict(), "result": chi2 },
        "two_proportion_z": { "verdict": z.verdict(), "result": z },
    });
    rec.write_json("sample_tests.json", &doc)?;
    Ok(())
}

/// Size and seed of the bundled demo data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoConfig {
    pub n_rows: usize,
    pub data_seed: u64,
    pub report: ReportConfig,
}

impl Default for DemoConfig {
    fn default() -> Self {
        DemoConfig { n_rows: 2000, data_seed: 7, report: ReportConfig::default() }
    }
}

/// Generates the demo data and runs every stage on it.
pub fn run_demo(config: &DemoConfig, rec: &mut RunRecorder) -> Result<ReportSummary> {
    let spec: GeneratorSpec = demo::spec(config.n_rows, config.data_seed);
    let schema = demo::schema();
    rec.seed("data", config.data_seed);
    rec.write("generator.json", spec.to_json()?)?;
    rec.write("schema.json", schema_to_json(&schema)?)?;
    let (data, labels) = synth::generate(&spec, &schema)?;
    rec.write("data.csv", csv_bytes(&data)?)?;
    let rows: Vec<usize> = (0..labels.len()).collect();
    rec.write("labels.csv", labels_csv(&rows, &labels))?;
    run_fixture_tests(rec)?;
    run_report(&data, Some(&labels), &config.report, rec)
}
