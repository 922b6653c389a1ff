//! K-Modes clustering of purely categorical data.
//!
//! Dissimilarity is the plain Hamming count of mismatched attributes and each
//! cluster is summarised by its per-column mode. Fitting alternates a batch
//! assignment step with a batch mode update until the assignment vector stops
//! changing.
//!
//! Tie rules, fixed so every run is reproducible from its seed:
//! * a point equidistant from several modes joins the lowest cluster index;
//! * a column with several most-frequent codes takes the one that occurs
//!   first among the members (in row order). This rule does not depend on the
//!   numeric value of the codes, so relabeling categories never changes a fit.

use std::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Code, ColumnSchema, Dataset};
use crate::rng;

/// Row-major `n x m` matrix of category codes with no missing cells.
#[derive(Clone, Debug, PartialEq)]
pub struct CategoricalMatrix {
    n: usize,
    m: usize,
    codes: Vec<Code>,
    columns: Vec<String>,
}

impl CategoricalMatrix {
    pub fn new(rows: Vec<Vec<Code>>) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        let columns = (0..m).map(|j| format!("x{j}")).collect();
        Self::with_columns(rows, columns)
    }

    pub fn with_columns(rows: Vec<Vec<Code>>, columns: Vec<String>) -> Result<Self> {
        let n = rows.len();
        let m = columns.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != m) {
            return Err(Error::LengthMismatch { left: bad.len(), right: m });
        }
        Ok(CategoricalMatrix { n, m, codes: rows.concat(), columns })
    }

    /// Extracts categorical `columns` from complete-case data.
    pub fn from_dataset(data: &Dataset, columns: &[&str]) -> Result<Self> {
        let mut cols = Vec::with_capacity(columns.len());
        for name in columns {
            let codes = data.codes(name)?;
            if codes.iter().any(Option::is_none) {
                return Err(Error::MissingData(name.to_string()));
            }
            cols.push(codes.into_iter().map(|c| c.unwrap_or_default()).collect::<Vec<_>>());
        }
        let rows = (0..data.n_rows()).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
        Self::with_columns(rows, columns.iter().map(|s| s.to_string()).collect())
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_cols(&self) -> usize {
        self.m
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn row(&self, i: usize) -> &[Code] {
        &self.codes[i * self.m..(i + 1) * self.m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Code]> {
        self.codes.chunks(self.m.max(1)).take(self.n)
    }
}

/// Number of positions where `x` and `y` differ.
pub fn hamming(x: &[Code], y: &[Code]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    Ok(mismatches(x, y))
}

#[inline]
pub(crate) fn mismatches(x: &[Code], y: &[Code]) -> usize {
    x.iter().zip(y).filter(|(a, b)| a != b).count()
}

/// Most frequent code among `values`; ties go to the code seen first.
pub(crate) fn mode_first_seen(values: impl Iterator<Item = Code>) -> Option<Code> {
    // (code, count), in order of first appearance
    let mut tally: Vec<(Code, usize)> = Vec::new();
    for v in values {
        match tally.iter_mut().find(|(c, _)| *c == v) {
            Some(entry) => entry.1 += 1,
            None => tally.push((v, 1)),
        }
    }
    let mut best: Option<(Code, usize)> = None;
    for (code, count) in tally {
        if best.is_none_or(|(_, c)| count > c) {
            best = Some((code, count));
        }
    }
    best.map(|(c, _)| c)
}

/// Per-column modes of the rows listed in `members`.
pub fn column_modes(points: &CategoricalMatrix, members: &[usize]) -> Result<Vec<Code>> {
    if members.is_empty() {
        return Err(Error::EmptyCluster(0));
    }
    let mut sorted = members.to_vec();
    sorted.sort_unstable();
    Ok((0..points.m)
        .map(|j| mode_first_seen(sorted.iter().map(|&i| points.row(i)[j])).expect("non-empty"))
        .collect())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMethod {
    /// `k` distinct data rows drawn uniformly.
    #[default]
    RandomPoints,
    /// Codes drawn per column by frequency, then snapped to the nearest row.
    HuangDensity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KModesConfig {
    pub k: usize,
    pub init: InitMethod,
    pub seed: u64,
    pub max_iter: usize,
    pub n_restarts: usize,
}

impl KModesConfig {
    pub fn new(k: usize) -> Self {
        KModesConfig { k, init: InitMethod::RandomPoints, seed: 0, max_iter: 100, n_restarts: 10 }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn restarts(mut self, n: usize) -> Self {
        self.n_restarts = n;
        self
    }

    pub fn init(mut self, init: InitMethod) -> Self {
        self.init = init;
        self
    }

    pub fn max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KModesModel {
    pub k: usize,
    pub columns: Vec<String>,
    pub modes: Vec<Vec<Code>>,
    pub assignments: Vec<usize>,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    pub seed: u64,
    pub cost_trace: Vec<f64>,
}

impl KModesModel {
    /// Total Hamming distance of each point to the mode of its cluster.
    pub fn recompute_cost(&self, points: &CategoricalMatrix) -> f64 {
        total_cost(points, &self.modes, &self.assignments)
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }

    /// JSON document with modes rendered against the schema's labels.
    pub fn to_json(&self, schema: &[ColumnSchema]) -> Result<serde_json::Value> {
        let modes = self
            .modes
            .iter()
            .map(|mode| labelled_codes(&self.columns, mode, schema))
            .collect::<Result<Vec<_>>>()?;
        Ok(serde_json::json!({
            "algorithm": "kmodes",
            "k": self.k,
            "columns": self.columns,
            "modes": modes,
            "assignments": self.assignments,
            "cost": self.cost,
            "iterations": self.iterations,
            "converged": self.converged,
            "seed": self.seed,
            "rng": rng::RNG_ALGORITHM,
            "cost_trace": self.cost_trace,
        }))
    }
}

pub(crate) fn labelled_codes(
    columns: &[String],
    codes: &[Code],
    schema: &[ColumnSchema],
) -> Result<serde_json::Value> {
    let mut obj = serde_json::Map::new();
    for (name, &code) in columns.iter().zip(codes) {
        let col = schema
            .iter()
            .find(|c| &c.name == name)
            .ok_or_else(|| Error::SchemaMismatch(format!("column `{name}` not in schema")))?;
        obj.insert(
            name.clone(),
            serde_json::json!({ "code": code, "label": col.label(code).unwrap_or("") }),
        );
    }
    Ok(serde_json::Value::Object(obj))
}

fn total_cost(points: &CategoricalMatrix, modes: &[Vec<Code>], assign: &[usize]) -> f64 {
    assign
        .iter()
        .enumerate()
        .map(|(i, &l)| mismatches(points.row(i), &modes[l]))
        .sum::<usize>() as f64
}

fn nearest(row: &[Code], modes: &[Vec<Code>]) -> (usize, usize) {
    let mut best = (0, usize::MAX);
    for (l, mode) in modes.iter().enumerate() {
        let d = mismatches(row, mode);
        if d < best.1 {
            best = (l, d);
        }
    }
    best
}

fn assign_all(points: &CategoricalMatrix, modes: &[Vec<Code>]) -> Vec<usize> {
    (0..points.n).map(|i| nearest(points.row(i), modes).0).collect()
}

fn recompute_modes(points: &CategoricalMatrix, assign: &[usize], k: usize, modes: &mut [Vec<Code>]) -> Vec<usize> {
    let mut members = vec![Vec::new(); k];
    for (i, &l) in assign.iter().enumerate() {
        members[l].push(i);
    }
    let mut empty = Vec::new();
    for (l, m) in members.iter().enumerate() {
        if m.is_empty() {
            empty.push(l);
        } else {
            modes[l] = column_modes(points, m).expect("non-empty");
        }
    }
    empty
}

/// Moves the worst-fitting point (largest distance to its own mode, taken
/// from a cluster with at least two members) into each empty cluster.
fn reseed_empty(points: &CategoricalMatrix, assign: &mut [usize], modes: &mut [Vec<Code>], empty: &[usize]) {
    for &l in empty {
        let mut sizes = vec![0usize; modes.len()];
        for &a in assign.iter() {
            sizes[a] += 1;
        }
        let mut worst: Option<(usize, usize)> = None;
        for i in 0..points.n {
            if sizes[assign[i]] < 2 {
                continue;
            }
            let d = mismatches(points.row(i), &modes[assign[i]]);
            if worst.is_none_or(|(_, wd)| d > wd) {
                worst = Some((i, d));
            }
        }
        if let Some((i, _)) = worst {
            assign[i] = l;
            modes[l] = points.row(i).to_vec();
        }
    }
}

struct Run {
    modes: Vec<Vec<Code>>,
    assign: Vec<usize>,
    cost: f64,
    trace: Vec<f64>,
    iterations: usize,
    converged: bool,
}

fn run_from(points: &CategoricalMatrix, mut modes: Vec<Vec<Code>>, max_iter: usize) -> Run {
    let k = modes.len();
    let mut assign = assign_all(points, &modes);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let empty = recompute_modes(points, &assign, k, &mut modes);
        if !empty.is_empty() {
            reseed_empty(points, &mut assign, &mut modes, &empty);
            recompute_modes(points, &assign, k, &mut modes);
        }
        trace.push(total_cost(points, &modes, &assign));
        let next = assign_all(points, &modes);
        if next == assign {
            converged = true;
            break;
        }
        assign = next;
    }
    let cost = total_cost(points, &modes, &assign);
    Run { modes, assign, cost, trace, iterations, converged }
}

fn init_random_points(points: &CategoricalMatrix, k: usize, rng: &mut rng::Rng) -> Vec<Vec<Code>> {
    let mut idx: Vec<usize> = (0..points.n).collect();
    idx.shuffle(rng);
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    for &i in &idx {
        if chosen.len() == k {
            break;
        }
        if chosen.iter().all(|&c| points.row(c) != points.row(i)) {
            chosen.push(i);
        }
    }
    // Fewer than k distinct rows: pad with the remaining shuffled rows.
    for &i in &idx {
        if chosen.len() == k {
            break;
        }
        if !chosen.contains(&i) {
            chosen.push(i);
        }
    }
    chosen.iter().map(|&i| points.row(i).to_vec()).collect()
}

fn init_huang(points: &CategoricalMatrix, k: usize, rng: &mut rng::Rng) -> Vec<Vec<Code>> {
    let freqs: Vec<Vec<(Code, usize)>> = (0..points.m)
        .map(|j| {
            let mut tally: Vec<(Code, usize)> = Vec::new();
            for row in points.rows() {
                match tally.iter_mut().find(|(c, _)| *c == row[j]) {
                    Some(e) => e.1 += 1,
                    None => tally.push((row[j], 1)),
                }
            }
            tally
        })
        .collect();
    let mut used: Vec<usize> = Vec::with_capacity(k);
    let mut modes = Vec::with_capacity(k);
    for _ in 0..k {
        let draft: Vec<Code> = freqs
            .iter()
            .map(|tally| {
                let mut u = rng.random_range(0..points.n);
                for &(code, count) in tally {
                    if u < count {
                        return code;
                    }
                    u -= count;
                }
                unreachable!("frequencies sum to n")
            })
            .collect();
        let mut best: Option<(usize, usize)> = None;
        for i in (0..points.n).filter(|i| !used.contains(i)) {
            let d = mismatches(points.row(i), &draft);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        let i = best.map_or(0, |(i, _)| i);
        used.push(i);
        modes.push(points.row(i).to_vec());
    }
    modes
}

fn check_k(points: &CategoricalMatrix, k: usize) -> Result<()> {
    if k == 0 || k > points.n {
        return Err(Error::KOutOfRange { k, n: points.n });
    }
    Ok(())
}

fn into_model(points: &CategoricalMatrix, run: Run, seed: u64) -> KModesModel {
    KModesModel {
        k: run.modes.len(),
        columns: points.columns.clone(),
        modes: run.modes,
        assignments: run.assign,
        cost: run.cost,
        iterations: run.iterations,
        converged: run.converged,
        seed,
        cost_trace: run.trace,
    }
}

/// Best-of-restarts K-Modes fit. Restart `r` draws from RNG stream `r` of
/// `config.seed`, so the result does not depend on scheduling.
pub fn fit_kmodes(points: &CategoricalMatrix, config: &KModesConfig) -> Result<KModesModel> {
    check_k(points, config.k)?;
    if config.n_restarts == 0 || config.max_iter == 0 {
        return Err(Error::InvalidArgument("n_restarts and max_iter must be positive".into()));
    }
    let runs: Vec<Run> = (0..config.n_restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream(config.seed, r as u64);
            let modes = match config.init {
                InitMethod::RandomPoints => init_random_points(points, config.k, &mut rng),
                InitMethod::HuangDensity => init_huang(points, config.k, &mut rng),
            };
            run_from(points, modes, config.max_iter)
        })
        .collect();
    let best = pick_best(runs);
    Ok(into_model(points, best, config.seed))
}

fn pick_best(runs: Vec<Run>) -> Run {
    let mut best: Option<Run> = None;
    for run in runs {
        if best.as_ref().is_none_or(|b| run.cost < b.cost) {
            best = Some(run);
        }
    }
    best.expect("at least one run")
}

/// Index of the point farthest from its own mode (lowest index on ties).
fn worst_fit(points: &CategoricalMatrix, model: &KModesModel) -> usize {
    let mut worst = (0, 0);
    for i in 0..points.n {
        let d = mismatches(points.row(i), &model.modes[model.assignments[i]]);
        if d > worst.1 {
            worst = (i, d);
        }
    }
    worst.0
}

/// Fits every `k` in `k_range` and returns the models. Each `k` after the
/// first also runs from the previous solution plus the worst-fit point as an
/// extra mode, which makes the cost curve non-increasing.
pub fn elbow_sweep_models(
    points: &CategoricalMatrix,
    k_range: RangeInclusive<usize>,
    seed: u64,
    n_restarts: usize,
) -> Result<Vec<KModesModel>> {
    check_k(points, *k_range.start())?;
    check_k(points, *k_range.end())?;
    let mut models: Vec<KModesModel> = Vec::new();
    for k in k_range {
        let config = KModesConfig::new(k).seed(seed).restarts(n_restarts);
        let mut model = fit_kmodes(points, &config)?;
        if let Some(prev) = models.last() {
            let mut modes = prev.modes.clone();
            modes.push(points.row(worst_fit(points, prev)).to_vec());
            let warm = run_from(points, modes, config.max_iter);
            if warm.cost < model.cost {
                model = into_model(points, warm, seed);
            }
        }
        models.push(model);
    }
    Ok(models)
}

/// `(k, best cost)` for each `k` in the range.
pub fn elbow_sweep(
    points: &CategoricalMatrix,
    k_range: RangeInclusive<usize>,
    seed: u64,
    n_restarts: usize,
) -> Result<Vec<(usize, f64)>> {
    Ok(elbow_sweep_models(points, k_range, seed, n_restarts)?
        .into_iter()
        .map(|m| (m.k, m.cost))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[&[Code]]) -> CategoricalMatrix {
        CategoricalMatrix::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn hamming_basics() {
        assert_eq!(hamming(&[1, 2, 3], &[1, 2, 3]).unwrap(), 0);
        assert_eq!(hamming(&[1, 2, 1], &[1, 1, 2]).unwrap(), 2);
        assert!(matches!(hamming(&[1], &[1, 2]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn modes_of_small_clusters() {
        let pts = matrix(&[&[1, 5], &[1, 6], &[2, 6], &[2, 5]]);
        assert_eq!(column_modes(&pts, &[2]).unwrap(), vec![2, 6]);
        assert_eq!(column_modes(&pts, &[0, 1, 2]).unwrap(), vec![1, 6]);
        // {1, 2} tie in column 0, {5, 6} tie in column 1: first seen wins.
        assert_eq!(column_modes(&pts, &[0, 2]).unwrap(), vec![1, 5]);
        assert!(matches!(column_modes(&pts, &[]), Err(Error::EmptyCluster(_))));
    }

    #[test]
    fn k_equals_n_is_a_perfect_fit() {
        let pts = matrix(&[&[1, 1], &[1, 2], &[2, 1], &[2, 2], &[3, 3]]);
        let model = fit_kmodes(&pts, &KModesConfig::new(5).seed(1)).unwrap();
        assert_eq!(model.cost, 0.0);
        let mut modes = model.modes.clone();
        modes.sort();
        assert_eq!(modes, vec![vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2], vec![3, 3]]);
    }

    #[test]
    fn duplicate_groups_separate() {
        let pts = matrix(&[&[1, 1, 1], &[2, 2, 2], &[1, 1, 1], &[2, 2, 2]]);
        for init in [InitMethod::RandomPoints, InitMethod::HuangDensity] {
            let model = fit_kmodes(&pts, &KModesConfig::new(2).seed(9).init(init)).unwrap();
            assert_eq!(model.cost, 0.0);
            assert_eq!(model.assignments[0], model.assignments[2]);
            assert_ne!(model.assignments[0], model.assignments[1]);
        }
    }

    #[test]
    fn k_out_of_range() {
        let pts = matrix(&[&[1], &[2]]);
        assert!(matches!(fit_kmodes(&pts, &KModesConfig::new(0)), Err(Error::KOutOfRange { .. })));
        assert!(matches!(fit_kmodes(&pts, &KModesConfig::new(3)), Err(Error::KOutOfRange { .. })));
        assert!(elbow_sweep(&pts, 1..=3, 0, 2).is_err());
    }

    #[test]
    fn single_cluster_closed_form() {
        let pts = matrix(&[&[1, 1, 2], &[1, 2, 2], &[2, 1, 2], &[1, 1, 1], &[3, 3, 3]]);
        let global = column_modes(&pts, &[0, 1, 2, 3, 4]).unwrap();
        let expected: usize = pts.rows().map(|r| mismatches(r, &global)).sum();
        let sweep = elbow_sweep(&pts, 1..=5, 4, 3).unwrap();
        assert_eq!(sweep[0], (1, expected as f64));
        assert_eq!(sweep[4], (5, 0.0));
        assert!(sweep.windows(2).all(|w| w[1].1 <= w[0].1));
    }

    #[test]
    fn fewer_distinct_rows_than_k() {
        let pts = matrix(&[&[1, 1], &[1, 1], &[1, 1], &[2, 2]]);
        let model = fit_kmodes(&pts, &KModesConfig::new(3).seed(2)).unwrap();
        assert_eq!(model.cost, 0.0);
        assert!(model.assignments.iter().all(|&a| a < 3));
    }

    #[test]
    fn model_json_has_labels() {
        let schema = vec![ColumnSchema::categorical("A", &[(1, "yes"), (2, "no")], &[])];
        let pts = CategoricalMatrix::with_columns(vec![vec![1], vec![2]], vec!["A".into()]).unwrap();
        let model = fit_kmodes(&pts, &KModesConfig::new(2)).unwrap();
        let doc = model.to_json(&schema).unwrap();
        let labels: Vec<&str> = doc["modes"]
            .as_array()
            .unwrap()
            .iter()
            .map(|m| m["A"]["label"].as_str().unwrap())
            .collect();
        assert!(labels.contains(&"yes") && labels.contains(&"no"));
    }
}
