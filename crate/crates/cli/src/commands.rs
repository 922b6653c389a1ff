use std::collections::BTreeMap;
use std::path::Path;

use strata_core::ingest::{complete_case_rows, parse_schema, read_csv, sample_indices, schema_to_json};
use strata_core::kmodes::{self, InitMethod};
use strata_core::pipeline::{self, csv_bytes, labels_csv, parse_labels_csv};
use strata_core::report;
use strata_core::synth::{self, GeneratorSpec};
use strata_core::tsne::encode_mixed_for_tsne;
use strata_core::{
    centroid_table, chi_square_independence, crosstab, demo, fit_gbdt, fit_kmodes, fit_kprototypes, fit_tsne,
    two_prop_z, Alternative, CategoricalMatrix, ColumnSchema, ConditionReport, ContingencyTable, Dataset,
    DemoConfig, Error, GbdtConfig, KModesConfig, KPrototypesConfig, MixedMatrix, ReportConfig, Result,
    RunRecorder, SampleSpec, TsneConfig,
};

use crate::args::*;

/// What a successful command asks `main` to exit with.
#[derive(Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// A condition check failed under `--strict`.
    ConditionWarning,
}

fn delimiter(c: char) -> Result<u8> {
    u8::try_from(c).map_err(|_| Error::InvalidArgument(format!("delimiter `{c}` is not a single byte")))
}

fn command_line() -> Vec<String> {
    std::env::args().skip(1).collect()
}

fn recorder(dir: &Path) -> Result<RunRecorder> {
    RunRecorder::new(dir, command_line())
}

/// Reads an input file, recording its digest when there is a run.
fn read_input(rec: Option<&mut RunRecorder>, path: &Path) -> Result<Vec<u8>> {
    match rec {
        Some(r) => r.input(path),
        None => Ok(std::fs::read(path)?),
    }
}

fn load(mut rec: Option<&mut RunRecorder>, data: &Path, schema: &Path, delim: char) -> Result<Dataset> {
    let schema_text = String::from_utf8_lossy(&read_input(rec.as_deref_mut(), schema)?).into_owned();
    let schema = parse_schema(&schema_text)?;
    let bytes = read_input(rec, data)?;
    let data = read_csv(bytes.as_slice(), &schema, delimiter(delim)?)?;
    log::info!("loaded {} rows x {} columns", data.n_rows(), data.n_cols());
    Ok(data)
}

fn strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

/// Complete-case rows over `columns`, logging how many were dropped.
fn usable_rows(data: &Dataset, columns: &[&str]) -> Result<Vec<usize>> {
    let rows = complete_case_rows(data, columns)?;
    let dropped = data.n_rows() - rows.len();
    if dropped > 0 {
        log::warn!("dropped {dropped} of {} rows with missing values", data.n_rows());
    }
    Ok(rows)
}

/// Rows that are complete over `columns` and carry a label, with their labels.
fn labelled_rows(
    rec: &mut RunRecorder,
    data: &Dataset,
    columns: &[&str],
    labels: &Path,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let text = String::from_utf8_lossy(&rec.input(labels)?).into_owned();
    let map: BTreeMap<usize, usize> = parse_labels_csv(&text)?.into_iter().collect();
    if let Some((&r, _)) = map.iter().find(|(&r, _)| r >= data.n_rows()) {
        return Err(Error::InvalidArgument(format!("label for row {r} but the data has {} rows", data.n_rows())));
    }
    let rows: Vec<usize> = usable_rows(data, columns)?.into_iter().filter(|r| map.contains_key(r)).collect();
    let y = rows.iter().map(|r| map[r]).collect();
    Ok((rows, y))
}

fn print_conditions(conditions: &ConditionReport) {
    for d in &conditions.details {
        eprintln!("  {d}");
    }
}

fn finish_test(conditions: &ConditionReport, strict: bool) -> Status {
    if conditions.all_pass() {
        return Status::Ok;
    }
    log::warn!("a condition check failed");
    print_conditions(conditions);
    if strict {
        Status::ConditionWarning
    } else {
        Status::Ok
    }
}

fn test_recorder(test: &TestArgs) -> Result<Option<RunRecorder>> {
    let mut rec = test.out.as_deref().map(recorder).transpose()?;
    if let Some(r) = rec.as_mut() {
        r.seed("seed", test.seed);
    }
    Ok(rec)
}

fn write_test_result(rec: Option<RunRecorder>, doc: &serde_json::Value) -> Result<()> {
    if let Some(mut rec) = rec {
        rec.write_json("result.json", doc)?;
        rec.finish()?;
    }
    Ok(())
}

pub fn parse_counts(text: &str) -> Result<ContingencyTable> {
    let rows = text
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|v| {
                    v.trim().parse::<u64>().map_err(|_| Error::InvalidArgument(format!("bad count `{}`", v.trim())))
                })
                .collect::<Result<Vec<u64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    ContingencyTable::from_counts(rows)
}

pub fn chi2(args: &Chi2Args) -> Result<Status> {
    let mut rec = test_recorder(&args.test)?;
    let table = match (&args.counts, &args.data) {
        (Some(counts), _) => parse_counts(counts)?,
        (None, Some(data)) => {
            let schema = args.schema.as_deref().expect("clap requires --schema");
            let data = load(rec.as_mut(), data, schema, args.delimiter)?;
            crosstab(&data, args.rows_var.as_deref().unwrap_or_default(), args.cols_var.as_deref().unwrap_or_default())?
        }
        (None, None) => unreachable!("clap requires an input"),
    };
    let result = chi_square_independence(&table, args.test.alpha, args.test.population_n)?;
    let doc = serde_json::json!({ "table": table, "result": result, "verdict": result.verdict() });
    println!("{}", serde_json::to_string_pretty(&doc)?);
    println!(
        "chi2 = {:.4}, df = {}, p = {:.4}: {}",
        result.statistic,
        result.df,
        result.p_value,
        result.verdict()
    );
    write_test_result(rec, &doc)?;
    Ok(finish_test(&result.conditions, args.test.strict))
}

pub fn twoprop(args: &TwopropArgs) -> Result<Status> {
    let alternative = match args.alternative {
        AlternativeArg::Greater => Alternative::Greater,
        AlternativeArg::Less => Alternative::Less,
        AlternativeArg::TwoSided => Alternative::TwoSided,
    };
    let t = &args.test;
    let rec = test_recorder(t)?;
    let result = two_prop_z(args.x1, args.n1, args.x2, args.n2, alternative, t.alpha, t.population_n)?;
    let doc = serde_json::json!({ "result": result, "verdict": result.verdict() });
    println!("{}", serde_json::to_string_pretty(&doc)?);
    println!("z = {:.4}, p = {:.5}, pooled = {:.4}: {}", result.z, result.p_value, result.pooled, result.verdict());
    write_test_result(rec, &doc)?;
    Ok(finish_test(&result.conditions, t.strict))
}

pub fn generate(args: &GenerateArgs) -> Result<Status> {
    let mut rec = recorder(&args.out.out)?;
    let (mut spec, schema): (GeneratorSpec, Vec<ColumnSchema>) = match &args.spec {
        Some(path) => {
            let spec = GeneratorSpec::from_json(&String::from_utf8_lossy(&rec.input(path)?))?;
            let schema = match &args.schema {
                Some(s) => parse_schema(&String::from_utf8_lossy(&rec.input(s)?))?,
                None => demo::schema(),
            };
            (spec, schema)
        }
        None => (demo::spec(args.rows, 7), demo::schema()),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    rec.seed("data", spec.seed);
    let (data, labels) = synth::generate(&spec, &schema)?;
    rec.write("generator.json", spec.to_json()?)?;
    rec.write("schema.json", schema_to_json(&schema)?)?;
    rec.write("data.csv", csv_bytes(&data)?)?;
    let rows: Vec<usize> = (0..labels.len()).collect();
    rec.write("labels.csv", labels_csv(&rows, &labels))?;
    rec.finish()?;
    println!("wrote {} rows to {}", data.n_rows(), args.out.out.display());
    Ok(Status::Ok)
}

pub fn cluster(args: &ClusterArgs) -> Result<Status> {
    let mut rec = recorder(&args.out.out)?;
    rec.seed("cluster", args.seed);
    let data = load(Some(&mut rec), &args.data.data, &args.data.schema, args.data.delimiter)?;
    let columns = strs(&args.columns);
    let rows = usable_rows(&data, &columns)?;
    let subset = data.select_rows(&rows);
    let schema = subset.schema().to_vec();

    if let Some(range) = &args.k_range {
        let sweep = match args.algo {
            Algo::Kmodes => {
                let points = CategoricalMatrix::from_dataset(&subset, &columns)?;
                kmodes::elbow_sweep(&points, range.clone(), args.seed, args.restarts)?
            }
            Algo::Kproto => {
                let points = MixedMatrix::from_dataset(&subset, &columns)?;
                strata_core::kprototypes::elbow_sweep(&points, range.clone(), &kproto_config(args, 1))?
            }
        };
        let (spec, knee, svg) = report::elbow_chart(&sweep)?;
        rec.write("elbow.csv", spec.to_csv(b',')?)?;
        rec.write("elbow.svg", svg)?;
        rec.finish()?;
        for (k, cost) in &sweep {
            println!("k = {k}: cost {cost:.4}");
        }
        println!("knee at k = {} (second difference {:.4})", knee.k, knee.score);
        return Ok(Status::Ok);
    }

    let k = args.k.expect("clap requires --k or --k-range");
    let (assignments, cost) = match args.algo {
        Algo::Kmodes => {
            let points = CategoricalMatrix::from_dataset(&subset, &columns)?;
            let init = match args.init {
                InitArg::Random => InitMethod::RandomPoints,
                InitArg::Huang => InitMethod::HuangDensity,
            };
            let config = KModesConfig::new(k).seed(args.seed).restarts(args.restarts).max_iter(args.max_iter).init(init);
            let model = fit_kmodes(&points, &config)?;
            rec.write_json("model.json", &model.to_json(&schema)?)?;
            (model.assignments, model.cost)
        }
        Algo::Kproto => {
            let points = MixedMatrix::from_dataset(&subset, &columns)?;
            let model = fit_kprototypes(&points, &kproto_config(args, k))?;
            rec.write_json("model.json", &model.to_json(&schema)?)?;
            let table = centroid_table(&model, &schema)?;
            rec.write("centroids.txt", table.to_text())?;
            rec.write("centroids.csv", table.to_csv(b',')?)?;
            println!("{}", table.to_text());
            (model.assignments, model.cost)
        }
    };
    let profiles = report::cluster_profiles(&subset, &assignments, &columns)?;
    rec.write_json("profiles.json", &profiles)?;
    let typical = report::typical_member_table(&profiles, &schema);
    rec.write("typical_members.txt", &typical)?;
    rec.write("assignments.csv", labels_csv(&rows, &assignments))?;
    rec.finish()?;
    if args.algo == Algo::Kmodes {
        println!("{typical}");
    }
    println!("k = {k}, cost = {cost:.4}, rows clustered = {}", rows.len());
    Ok(Status::Ok)
}

fn kproto_config(args: &ClusterArgs, k: usize) -> KPrototypesConfig {
    let mut config = KPrototypesConfig::new(k).seed(args.seed).restarts(args.restarts).standardize(!args.raw);
    config.max_iter = args.max_iter;
    if let Some(g) = args.gamma {
        config = config.gamma(g);
    }
    config
}

pub fn embed(args: &EmbedArgs) -> Result<Status> {
    let mut rec = recorder(&args.out.out)?;
    rec.seed("embed", args.seed);
    let data = load(Some(&mut rec), &args.data.data, &args.data.schema, args.data.delimiter)?;
    let columns = strs(&args.columns);
    let (mut rows, mut labels) = match &args.labels {
        Some(path) => labelled_rows(&mut rec, &data, &columns, path)?,
        None => {
            let rows = usable_rows(&data, &columns)?;
            let zeros = vec![0; rows.len()];
            (rows, zeros)
        }
    };
    if rows.len() > args.max_points {
        log::warn!("embedding a seeded sample of {} of {} rows", args.max_points, rows.len());
        let pick = sample_indices(rows.len(), SampleSpec { size: args.max_points, seed: args.seed })?;
        rows = pick.iter().map(|&i| rows[i]).collect();
        labels = pick.iter().map(|&i| labels[i]).collect();
    }
    let (points, _) = encode_mixed_for_tsne(&data.select_rows(&rows), &columns)?;
    let config = TsneConfig::new(args.perplexity).iterations(args.iterations).learning_rate(args.learning_rate).seed(args.seed);
    let embedding = fit_tsne(&points, &config)?;
    rec.write("embedding.csv", embedding_csv(&rows, &embedding.coords, &labels))?;
    let (_, svg) = report::scatter_chart(&embedding.coords, &labels, "t-SNE projection")?;
    rec.write("embedding.svg", svg)?;
    rec.write_json("kl_trace.json", &embedding.kl_trace)?;
    rec.finish()?;
    println!("embedded {} rows: KL {:.4} -> {:.4}", rows.len(), embedding.initial_kl, embedding.final_kl);
    Ok(Status::Ok)
}

fn embedding_csv(rows: &[usize], coords: &[[f64; 2]], labels: &[usize]) -> String {
    let mut out = String::from("row,y1,y2,cluster\n");
    for ((r, c), l) in rows.iter().zip(coords).zip(labels) {
        out.push_str(&format!("{r},{},{},{l}\n", c[0], c[1]));
    }
    out
}

pub fn validate(args: &ValidateArgs) -> Result<Status> {
    let mut rec = recorder(&args.out.out)?;
    rec.seed("validate", args.seed);
    let data = load(Some(&mut rec), &args.data.data, &args.data.schema, args.data.delimiter)?;
    let features = strs(&args.features);
    let (rows, labels) = labelled_rows(&mut rec, &data, &features, &args.labels)?;
    let matrix = MixedMatrix::from_dataset(&data.select_rows(&rows), &features)?;
    let config = GbdtConfig {
        learning_rate: args.learning_rate,
        max_depth: args.depth,
        test_fraction: args.test_fraction,
        ..GbdtConfig::default().seed(args.seed).rounds(args.rounds)
    };
    let (_, report) = fit_gbdt(&matrix, &labels, &config)?;
    rec.write_json("validation.json", &report.to_json())?;
    rec.write("importance.txt", report.importance_text())?;
    rec.finish()?;
    println!("{}", report.importance_text());
    println!("accuracy: {:.4} on {} held-out rows", report.test_accuracy, report.test_size);
    Ok(Status::Ok)
}

pub fn report(args: &ReportArgs) -> Result<Status> {
    let mut rec = recorder(&args.out.out)?;
    let mut config = ReportConfig {
        k: args.k,
        k_min: *args.k_range.start(),
        k_max: *args.k_range.end(),
        gamma: args.gamma,
        restarts: args.restarts,
        seed: args.seed,
        tsne_points: args.tsne_points,
        perplexity: args.perplexity,
        tsne_iterations: args.tsne_iterations,
        gbdt_rounds: args.rounds,
        ..ReportConfig::default()
    };
    let summary = match &args.data {
        None => {
            let demo = DemoConfig { n_rows: args.rows, data_seed: args.data_seed, report: config };
            pipeline::run_demo(&demo, &mut rec)?
        }
        Some(data) => {
            let schema = args.schema.as_deref().expect("clap requires --schema");
            let data = load(Some(&mut rec), data, schema, args.delimiter)?;
            config.columns = args.columns.clone();
            config.validation_features = args.features.clone();
            config.chi2_pairs.clear();
            pipeline::run_report(&data, None, &config, &mut rec)?
        }
    };
    let manifest = rec.finish()?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    println!("accuracy: {:.4}", summary.validation_accuracy);
    println!("wrote {} artifacts and manifest.json to {}", manifest.outputs.len(), args.out.out.display());
    Ok(Status::Ok)
}
