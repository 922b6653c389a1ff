//! K-Prototypes clustering of mixed numeric and categorical data.
//!
//! The dissimilarity between a row and a prototype is the squared Euclidean
//! distance over numeric attributes plus `gamma` times the number of
//! categorical mismatches. Fitting follows the incremental scheme: an initial
//! pass assigns rows one at a time, in an order shuffled per restart, and
//! refreshes the receiving prototype after each assignment. Full
//! reallocation passes then move any row whose nearest prototype is strictly
//! closer than its own, refreshing both prototypes on every move, until a
//! pass moves nothing.
//!
//! Numeric columns are z-scored before fitting by default. Costs are reported
//! in the working (scaled) space; prototypes are reported in original units.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Code, ColumnSchema, Dataset};
use crate::kmodes::{fit_kmodes, labelled_codes, mismatches, CategoricalMatrix, KModesConfig};
use crate::rng;

#[derive(Clone, Debug, PartialEq)]
pub struct MixedMatrix {
    n: usize,
    numeric: Vec<f64>,
    categorical: Vec<Code>,
    numeric_columns: Vec<String>,
    categorical_columns: Vec<String>,
    means: Vec<f64>,
    stds: Vec<f64>,
}

impl MixedMatrix {
    /// `numeric` and `categorical` hold one inner vector per row; either
    /// block may have zero columns but both must have `n` rows.
    pub fn new(
        numeric: Vec<Vec<f64>>,
        categorical: Vec<Vec<Code>>,
        numeric_columns: Vec<String>,
        categorical_columns: Vec<String>,
    ) -> Result<Self> {
        let n = numeric.len().max(categorical.len());
        let p = numeric_columns.len();
        let q = categorical_columns.len();
        if p + q == 0 {
            return Err(Error::NoNumericAndNoCategorical);
        }
        let numeric = if p == 0 { vec![Vec::new(); n] } else { numeric };
        let categorical = if q == 0 { vec![Vec::new(); n] } else { categorical };
        if numeric.len() != n || categorical.len() != n {
            return Err(Error::LengthMismatch { left: numeric.len(), right: categorical.len() });
        }
        if let Some(r) = numeric.iter().find(|r| r.len() != p) {
            return Err(Error::DimensionMismatch(format!("numeric row has {} cells, expected {p}", r.len())));
        }
        if let Some(r) = categorical.iter().find(|r| r.len() != q) {
            return Err(Error::DimensionMismatch(format!("categorical row has {} cells, expected {q}", r.len())));
        }
        if numeric.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("numeric cells must be finite".into()));
        }
        let numeric = numeric.concat();
        let (means, stds) = column_moments(&numeric, n, p);
        Ok(MixedMatrix {
            n,
            numeric,
            categorical: categorical.concat(),
            numeric_columns,
            categorical_columns,
            means,
            stds,
        })
    }

    pub fn numeric_only(rows: Vec<Vec<f64>>) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        Self::new(rows, Vec::new(), (0..p).map(|j| format!("u{j}")).collect(), Vec::new())
    }

    pub fn categorical_only(rows: Vec<Vec<Code>>) -> Result<Self> {
        let q = rows.first().map_or(0, Vec::len);
        Self::new(Vec::new(), rows, Vec::new(), (0..q).map(|j| format!("c{j}")).collect())
    }

    /// Extracts `columns` from complete-case data, splitting them by kind.
    pub fn from_dataset(data: &Dataset, columns: &[&str]) -> Result<Self> {
        let mut num_names = Vec::new();
        let mut cat_names = Vec::new();
        for name in columns {
            if data.column(name)?.is_categorical() {
                cat_names.push(*name);
            } else {
                num_names.push(*name);
            }
        }
        let mut num_cols = Vec::new();
        for name in &num_names {
            let vals = data.reals(name)?;
            if vals.iter().any(Option::is_none) {
                return Err(Error::MissingData(name.to_string()));
            }
            num_cols.push(vals.into_iter().flatten().collect::<Vec<_>>());
        }
        let mut cat_cols = Vec::new();
        for name in &cat_names {
            let codes = data.codes(name)?;
            if codes.iter().any(Option::is_none) {
                return Err(Error::MissingData(name.to_string()));
            }
            cat_cols.push(codes.into_iter().flatten().collect::<Vec<_>>());
        }
        let n = data.n_rows();
        let numeric = (0..n).map(|i| num_cols.iter().map(|c| c[i]).collect()).collect();
        let categorical = (0..n).map(|i| cat_cols.iter().map(|c| c[i]).collect()).collect();
        Self::new(
            numeric,
            categorical,
            num_names.iter().map(|s| s.to_string()).collect(),
            cat_names.iter().map(|s| s.to_string()).collect(),
        )
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_numeric(&self) -> usize {
        self.numeric_columns.len()
    }

    pub fn n_categorical(&self) -> usize {
        self.categorical_columns.len()
    }

    pub fn numeric_columns(&self) -> &[String] {
        &self.numeric_columns
    }

    pub fn categorical_columns(&self) -> &[String] {
        &self.categorical_columns
    }

    pub fn numeric_row(&self, i: usize) -> &[f64] {
        let p = self.n_numeric();
        &self.numeric[i * p..(i + 1) * p]
    }

    pub fn categorical_row(&self, i: usize) -> &[Code] {
        let q = self.n_categorical();
        &self.categorical[i * q..(i + 1) * q]
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    /// Population standard deviations of the numeric columns.
    pub fn stds(&self) -> &[f64] {
        &self.stds
    }

    /// Rows restricted to `indices`, with moments recomputed.
    pub fn select_rows(&self, indices: &[usize]) -> MixedMatrix {
        let numeric = indices.iter().map(|&i| self.numeric_row(i).to_vec()).collect();
        let categorical = indices.iter().map(|&i| self.categorical_row(i).to_vec()).collect();
        MixedMatrix::new(numeric, categorical, self.numeric_columns.clone(), self.categorical_columns.clone())
            .expect("same layout")
    }

    fn scaling(&self, standardize: bool) -> Scaling {
        let p = self.n_numeric();
        if standardize {
            Scaling {
                offset: self.means.clone(),
                scale: self.stds.iter().map(|&s| if s > 0.0 { s } else { 1.0 }).collect(),
            }
        } else {
            Scaling { offset: vec![0.0; p], scale: vec![1.0; p] }
        }
    }
}

fn column_moments(values: &[f64], n: usize, p: usize) -> (Vec<f64>, Vec<f64>) {
    let mut means = vec![0.0; p];
    let mut stds = vec![0.0; p];
    if n == 0 {
        return (means, stds);
    }
    for j in 0..p {
        let mean = (0..n).map(|i| values[i * p + j]).sum::<f64>() / n as f64;
        let var = (0..n).map(|i| (values[i * p + j] - mean).powi(2)).sum::<f64>() / n as f64;
        means[j] = mean;
        stds[j] = var.sqrt();
    }
    (means, stds)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub offset: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Scaling {
    fn forward(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(self.offset.iter().zip(&self.scale)).map(|(v, (o, s))| (v - o) / s).collect()
    }

    fn inverse(&self, z: &[f64]) -> Vec<f64> {
        z.iter().zip(self.offset.iter().zip(&self.scale)).map(|(v, (o, s))| v * s + o).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prototype {
    pub numeric: Vec<f64>,
    pub categorical: Vec<Code>,
}

/// Squared numeric distance plus `gamma` times the categorical mismatches.
pub fn mixed_distance(numeric: &[f64], categorical: &[Code], proto: &Prototype, gamma: f64) -> Result<f64> {
    if numeric.len() != proto.numeric.len() || categorical.len() != proto.categorical.len() {
        return Err(Error::DimensionMismatch(format!(
            "row ({}, {}) vs prototype ({}, {})",
            numeric.len(),
            categorical.len(),
            proto.numeric.len(),
            proto.categorical.len()
        )));
    }
    Ok(distance(numeric, categorical, proto, gamma))
}

#[inline]
fn distance(numeric: &[f64], categorical: &[Code], proto: &Prototype, gamma: f64) -> f64 {
    let num: f64 = numeric.iter().zip(&proto.numeric).map(|(a, b)| (a - b) * (a - b)).sum();
    num + gamma * mismatches(categorical, &proto.categorical) as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KPrototypesConfig {
    pub k: usize,
    /// Categorical weight; `None` picks half the mean working-space numeric
    /// standard deviation (1.0 when there are no numeric columns).
    pub gamma: Option<f64>,
    pub seed: u64,
    pub max_iter: usize,
    pub n_restarts: usize,
    pub standardize: bool,
}

impl KPrototypesConfig {
    pub fn new(k: usize) -> Self {
        KPrototypesConfig { k, gamma: None, seed: 0, max_iter: 100, n_restarts: 10, standardize: true }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn gamma(mut self, gamma: f64) -> Self {
        self.gamma = Some(gamma);
        self
    }

    pub fn restarts(mut self, n: usize) -> Self {
        self.n_restarts = n;
        self
    }

    pub fn standardize(mut self, on: bool) -> Self {
        self.standardize = on;
        self
    }
}

/// Location and spread of one numeric attribute within one cluster, in
/// original units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumericSpread {
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    /// `1.4826 * MAD`, a robust standard deviation.
    pub robust_std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KPrototypesModel {
    pub k: usize,
    pub numeric_columns: Vec<String>,
    pub categorical_columns: Vec<String>,
    /// Prototypes in original units.
    pub prototypes: Vec<Prototype>,
    pub assignments: Vec<usize>,
    pub gamma: f64,
    /// Cost in the working space.
    pub cost: f64,
    pub seed: u64,
    pub cost_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub scaling: Scaling,
    /// `[cluster][numeric column]`.
    pub numeric_spread: Vec<Vec<NumericSpread>>,
}

impl KPrototypesModel {
    pub fn working_prototype(&self, l: usize) -> Prototype {
        Prototype {
            numeric: self.scaling.forward(&self.prototypes[l].numeric),
            categorical: self.prototypes[l].categorical.clone(),
        }
    }

    /// Cost recomputed from the stored prototypes, assignments and scaling.
    pub fn recompute_cost(&self, points: &MixedMatrix) -> f64 {
        let protos: Vec<Prototype> = (0..self.k).map(|l| self.working_prototype(l)).collect();
        (0..points.n)
            .map(|i| {
                let z = self.scaling.forward(points.numeric_row(i));
                distance(&z, points.categorical_row(i), &protos[self.assignments[i]], self.gamma)
            })
            .sum()
    }

    /// Working-space distance of row `i` to every prototype.
    pub fn distances(&self, points: &MixedMatrix, i: usize) -> Vec<f64> {
        let z = self.scaling.forward(points.numeric_row(i));
        (0..self.k)
            .map(|l| distance(&z, points.categorical_row(i), &self.working_prototype(l), self.gamma))
            .collect()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }

    pub fn to_json(&self, schema: &[ColumnSchema]) -> Result<serde_json::Value> {
        let prototypes = self
            .prototypes
            .iter()
            .map(|p| {
                let numeric: serde_json::Map<String, serde_json::Value> = self
                    .numeric_columns
                    .iter()
                    .cloned()
                    .zip(p.numeric.iter().map(|&v| serde_json::json!(v)))
                    .collect();
                Ok(serde_json::json!({
                    "numeric": numeric,
                    "categorical": labelled_codes(&self.categorical_columns, &p.categorical, schema)?,
                }))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(serde_json::json!({
            "algorithm": "kprototypes",
            "k": self.k,
            "numeric_columns": self.numeric_columns,
            "categorical_columns": self.categorical_columns,
            "prototypes": prototypes,
            "assignments": self.assignments,
            "gamma": self.gamma,
            "cost": self.cost,
            "iterations": self.iterations,
            "converged": self.converged,
            "seed": self.seed,
            "rng": rng::RNG_ALGORITHM,
            "cost_trace": self.cost_trace,
        }))
    }
}

/// Working-space copy of the data the fit runs on.
struct Work<'a> {
    n: usize,
    p: usize,
    q: usize,
    numeric: Vec<f64>,
    cat: &'a MixedMatrix,
    gamma: f64,
}

impl Work<'_> {
    fn num(&self, i: usize) -> &[f64] {
        &self.numeric[i * self.p..(i + 1) * self.p]
    }

    fn cat(&self, i: usize) -> &[Code] {
        self.cat.categorical_row(i)
    }

    fn dist(&self, i: usize, proto: &Prototype) -> f64 {
        distance(self.num(i), self.cat(i), proto, self.gamma)
    }

    fn nearest(&self, i: usize, protos: &[Prototype]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (l, proto) in protos.iter().enumerate() {
            let d = self.dist(i, proto);
            if d < best.1 {
                best = (l, d);
            }
        }
        best
    }
}

#[derive(Clone)]
struct Cluster {
    sums: Vec<f64>,
    tallies: Vec<Vec<(Code, usize)>>,
    members: BTreeSet<usize>,
}

impl Cluster {
    fn new(p: usize, q: usize) -> Self {
        Cluster { sums: vec![0.0; p], tallies: vec![Vec::new(); q], members: BTreeSet::new() }
    }

    fn add(&mut self, w: &Work, i: usize) {
        for (s, v) in self.sums.iter_mut().zip(w.num(i)) {
            *s += v;
        }
        for (t, &c) in self.tallies.iter_mut().zip(w.cat(i)) {
            match t.iter_mut().find(|(code, _)| *code == c) {
                Some(e) => e.1 += 1,
                None => t.push((c, 1)),
            }
        }
        self.members.insert(i);
    }

    fn remove(&mut self, w: &Work, i: usize) {
        for (s, v) in self.sums.iter_mut().zip(w.num(i)) {
            *s -= v;
        }
        for (t, &c) in self.tallies.iter_mut().zip(w.cat(i)) {
            if let Some(e) = t.iter_mut().find(|(code, _)| *code == c) {
                e.1 -= 1;
            }
        }
        self.members.remove(&i);
    }

    fn resum(&mut self, w: &Work) {
        self.sums.iter_mut().for_each(|s| *s = 0.0);
        for &i in &self.members {
            for (s, v) in self.sums.iter_mut().zip(w.num(i)) {
                *s += v;
            }
        }
    }

    /// Mean and per-column mode of the members; ties take the code that
    /// occurs first in row order. `None` when empty.
    fn prototype(&self, w: &Work) -> Option<Prototype> {
        let count = self.members.len();
        if count == 0 {
            return None;
        }
        let numeric = self.sums.iter().map(|s| s / count as f64).collect();
        let categorical = self
            .tallies
            .iter()
            .enumerate()
            .map(|(j, t)| {
                let top = t.iter().map(|e| e.1).max().unwrap_or(0);
                let tied: Vec<Code> = t.iter().filter(|e| e.1 == top).map(|e| e.0).collect();
                if tied.len() == 1 {
                    tied[0]
                } else {
                    self.members
                        .iter()
                        .map(|&i| w.cat(i)[j])
                        .find(|c| tied.contains(c))
                        .expect("tied code has members")
                }
            })
            .collect();
        Some(Prototype { numeric, categorical })
    }
}

struct Run {
    protos: Vec<Prototype>,
    assign: Vec<usize>,
    cost: f64,
    trace: Vec<f64>,
    iterations: usize,
    converged: bool,
}

fn total_cost(w: &Work, protos: &[Prototype], assign: &[usize]) -> f64 {
    (0..w.n).map(|i| w.dist(i, &protos[assign[i]])).sum()
}

fn refresh(w: &Work, clusters: &[Cluster], protos: &mut [Prototype], l: usize) {
    if let Some(p) = clusters[l].prototype(w) {
        protos[l] = p;
    }
}

fn reseed_empty(w: &Work, clusters: &mut [Cluster], protos: &mut [Prototype], assign: &mut [usize]) {
    for l in 0..clusters.len() {
        if !clusters[l].members.is_empty() {
            continue;
        }
        let mut worst: Option<(usize, f64)> = None;
        for i in 0..w.n {
            if clusters[assign[i]].members.len() < 2 {
                continue;
            }
            let d = w.dist(i, &protos[assign[i]]);
            if worst.is_none_or(|(_, wd)| d > wd) {
                worst = Some((i, d));
            }
        }
        if let Some((i, _)) = worst {
            let from = assign[i];
            clusters[from].remove(w, i);
            clusters[l].add(w, i);
            assign[i] = l;
            refresh(w, clusters, protos, from);
            refresh(w, clusters, protos, l);
        }
    }
}

/// Reallocation passes until no row moves or `max_iter` passes elapse.
fn reallocate(w: &Work, mut clusters: Vec<Cluster>, mut protos: Vec<Prototype>, mut assign: Vec<usize>, max_iter: usize) -> Run {
    reseed_empty(w, &mut clusters, &mut protos, &mut assign);
    let mut trace = vec![total_cost(w, &protos, &assign)];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut moved = 0;
        for i in 0..w.n {
            let cur = assign[i];
            if clusters[cur].members.len() < 2 {
                continue;
            }
            let (best, d_best) = w.nearest(i, &protos);
            if best != cur && d_best < w.dist(i, &protos[cur]) {
                clusters[cur].remove(w, i);
                clusters[best].add(w, i);
                assign[i] = best;
                refresh(w, &clusters, &mut protos, cur);
                refresh(w, &clusters, &mut protos, best);
                moved += 1;
            }
        }
        for l in 0..clusters.len() {
            clusters[l].resum(w);
            refresh(w, &clusters, &mut protos, l);
        }
        trace.push(total_cost(w, &protos, &assign));
        if moved == 0 {
            converged = true;
            break;
        }
    }
    let cost = total_cost(w, &protos, &assign);
    Run { protos, assign, cost, trace, iterations, converged }
}

/// Incremental initial allocation from seed prototypes, visiting rows in
/// `order`, then reallocation.
fn run_from_seeds(w: &Work, seeds: Vec<Prototype>, order: &[usize], max_iter: usize) -> Run {
    let k = seeds.len();
    let mut protos = seeds;
    let mut clusters = vec![Cluster::new(w.p, w.q); k];
    let mut assign = vec![0; w.n];
    for &i in order {
        let (l, _) = w.nearest(i, &protos);
        clusters[l].add(w, i);
        assign[i] = l;
        refresh(w, &clusters, &mut protos, l);
    }
    reallocate(w, clusters, protos, assign, max_iter)
}

/// Batch assignment to the given prototypes, then reallocation.
fn run_from_prototypes(w: &Work, protos: Vec<Prototype>, max_iter: usize) -> Run {
    let k = protos.len();
    let mut clusters = vec![Cluster::new(w.p, w.q); k];
    let mut assign = vec![0; w.n];
    for (i, slot) in assign.iter_mut().enumerate() {
        let (l, _) = w.nearest(i, &protos);
        clusters[l].add(w, i);
        *slot = l;
    }
    let mut protos = protos;
    for l in 0..k {
        refresh(w, &clusters, &mut protos, l);
    }
    reallocate(w, clusters, protos, assign, max_iter)
}

fn seed_rows(w: &Work, k: usize, rng: &mut rng::Rng) -> Vec<Prototype> {
    let mut idx: Vec<usize> = (0..w.n).collect();
    idx.shuffle(rng);
    let same = |a: usize, b: usize| w.num(a) == w.num(b) && w.cat(a) == w.cat(b);
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    for &i in &idx {
        if chosen.len() == k {
            break;
        }
        if chosen.iter().all(|&c| !same(c, i)) {
            chosen.push(i);
        }
    }
    for &i in &idx {
        if chosen.len() == k {
            break;
        }
        if !chosen.contains(&i) {
            chosen.push(i);
        }
    }
    chosen
        .iter()
        .map(|&i| Prototype { numeric: w.num(i).to_vec(), categorical: w.cat(i).to_vec() })
        .collect()
}

fn prepare<'a>(points: &'a MixedMatrix, config: &KPrototypesConfig) -> Result<(Work<'a>, Scaling)> {
    if config.k == 0 || config.k > points.n {
        return Err(Error::KOutOfRange { k: config.k, n: points.n });
    }
    if config.n_restarts == 0 || config.max_iter == 0 {
        return Err(Error::InvalidArgument("n_restarts and max_iter must be positive".into()));
    }
    let scaling = points.scaling(config.standardize);
    let p = points.n_numeric();
    let numeric: Vec<f64> = (0..points.n).flat_map(|i| scaling.forward(points.numeric_row(i))).collect();
    let gamma = match config.gamma {
        Some(g) if g >= 0.0 && g.is_finite() => g,
        Some(g) => return Err(Error::InvalidArgument(format!("gamma must be non-negative, got {g}"))),
        None if p == 0 => 1.0,
        None => {
            let (_, stds) = column_moments(&numeric, points.n, p);
            0.5 * stds.iter().sum::<f64>() / p as f64
        }
    };
    let work = Work { n: points.n, p, q: points.n_categorical(), numeric, cat: points, gamma };
    Ok((work, scaling))
}

fn numeric_spread(points: &MixedMatrix, assign: &[usize], k: usize) -> Vec<Vec<NumericSpread>> {
    let p = points.n_numeric();
    (0..k)
        .map(|l| {
            let rows: Vec<usize> = (0..points.n).filter(|&i| assign[i] == l).collect();
            (0..p)
                .map(|j| {
                    let vals: Vec<f64> = rows.iter().map(|&i| points.numeric_row(i)[j]).collect();
                    spread(&vals)
                })
                .collect()
        })
        .collect()
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn spread(vals: &[f64]) -> NumericSpread {
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let std = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let mut sorted = vals.to_vec();
    sorted.sort_by(f64::total_cmp);
    let med = median(&sorted);
    let mut dev: Vec<f64> = vals.iter().map(|v| (v - med).abs()).collect();
    dev.sort_by(f64::total_cmp);
    NumericSpread { mean, median: med, std, robust_std: 1.4826 * median(&dev) }
}

fn into_model(points: &MixedMatrix, w: &Work, scaling: Scaling, run: Run, seed: u64) -> KPrototypesModel {
    let k = run.protos.len();
    // Exact means from the final partition; cancels incremental drift.
    let mut clusters = vec![Cluster::new(w.p, w.q); k];
    for (i, &l) in run.assign.iter().enumerate() {
        clusters[l].add(w, i);
    }
    let mut protos = run.protos;
    for l in 0..k {
        refresh(w, &clusters, &mut protos, l);
    }
    let cost = if w.p == 0 { run.cost } else { total_cost(w, &protos, &run.assign) };
    let prototypes = protos
        .into_iter()
        .map(|p| Prototype { numeric: scaling.inverse(&p.numeric), categorical: p.categorical })
        .collect();
    KPrototypesModel {
        k,
        numeric_columns: points.numeric_columns.clone(),
        categorical_columns: points.categorical_columns.clone(),
        prototypes,
        numeric_spread: numeric_spread(points, &run.assign, k),
        assignments: run.assign,
        gamma: w.gamma,
        cost,
        seed,
        cost_trace: run.trace,
        iterations: run.iterations,
        converged: run.converged,
        scaling,
    }
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

pub fn fit_kprototypes(points: &MixedMatrix, config: &KPrototypesConfig) -> Result<KPrototypesModel> {
    let (work, scaling) = prepare(points, config)?;
    if work.p == 0 {
        return Ok(categorical_reduction(points, &work, scaling, config));
    }
    let runs: Vec<Run> = (0..config.n_restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream(config.seed, r as u64);
            let seeds = seed_rows(&work, config.k, &mut rng);
            let mut order: Vec<usize> = (0..work.n).collect();
            order.shuffle(&mut rng);
            run_from_seeds(&work, seeds, &order, config.max_iter)
        })
        .collect();
    Ok(into_model(points, &work, scaling, pick_best(runs), config.seed))
}

/// Without numeric columns the mixed cost is `gamma` times the K-Modes cost,
/// so the K-Modes engine is run with the same seed and restart policy.
fn categorical_reduction(points: &MixedMatrix, w: &Work, scaling: Scaling, config: &KPrototypesConfig) -> KPrototypesModel {
    let rows = (0..points.n).map(|i| points.categorical_row(i).to_vec()).collect();
    let cat = CategoricalMatrix::with_columns(rows, points.categorical_columns.clone()).expect("validated layout");
    let km = fit_kmodes(&cat, &KModesConfig::new(config.k).seed(config.seed).restarts(config.n_restarts).max_iter(config.max_iter))
        .expect("validated k");
    let run = Run {
        protos: km.modes.iter().map(|m| Prototype { numeric: Vec::new(), categorical: m.clone() }).collect(),
        assign: km.assignments,
        cost: w.gamma * km.cost,
        trace: km.cost_trace.iter().map(|c| w.gamma * c).collect(),
        iterations: km.iterations,
        converged: km.converged,
    };
    into_model(points, w, scaling, run, config.seed)
}

/// K-Prototypes counterpart of [`crate::kmodes::elbow_sweep_models`]: every
/// `k` after the first is also warm-started from the previous prototypes
/// plus the worst-fit row, so the costs never increase with `k`.
pub fn elbow_sweep_models(
    points: &MixedMatrix,
    k_range: RangeInclusive<usize>,
    base: &KPrototypesConfig,
) -> Result<Vec<KPrototypesModel>> {
    for k in [*k_range.start(), *k_range.end()] {
        if k == 0 || k > points.n {
            return Err(Error::KOutOfRange { k, n: points.n });
        }
    }
    let mut models: Vec<KPrototypesModel> = Vec::new();
    for k in k_range {
        let config = KPrototypesConfig { k, ..base.clone() };
        let mut model = fit_kprototypes(points, &config)?;
        if let Some(prev) = models.last() {
            let (work, scaling) = prepare(points, &config)?;
            let mut protos: Vec<Prototype> = (0..prev.k).map(|l| prev.working_prototype(l)).collect();
            let mut worst = (0, f64::NEG_INFINITY);
            for i in 0..work.n {
                let d = work.dist(i, &protos[prev.assignments[i]]);
                if d > worst.1 {
                    worst = (i, d);
                }
            }
            protos.push(Prototype { numeric: work.num(worst.0).to_vec(), categorical: work.cat(worst.0).to_vec() });
            let warm = run_from_prototypes(&work, protos, config.max_iter);
            if warm.cost < model.cost {
                model = into_model(points, &work, scaling, warm, config.seed);
            }
        }
        models.push(model);
    }
    Ok(models)
}

pub fn elbow_sweep(
    points: &MixedMatrix,
    k_range: RangeInclusive<usize>,
    base: &KPrototypesConfig,
) -> Result<Vec<(usize, f64)>> {
    Ok(elbow_sweep_models(points, k_range, base)?.into_iter().map(|m| (m.k, m.cost)).collect())
}

/// One rendered centroid row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentroidRow {
    pub cluster: usize,
    pub size: usize,
    pub numeric: Vec<f64>,
    /// Numeric centroid pulled away from the cluster's bulk by outliers.
    pub anomalous: Vec<bool>,
    pub codes: Vec<Code>,
    pub cells: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentroidTable {
    pub header: Vec<String>,
    pub rows: Vec<CentroidRow>,
}

/// Flag threshold in robust standard deviations between mean and median.
pub const ANOMALY_ROBUST_SIGMAS: f64 = 3.0;

fn is_anomalous(s: &NumericSpread) -> bool {
    let gap = (s.mean - s.median).abs();
    gap > ANOMALY_ROBUST_SIGMAS * s.robust_std && gap > 1e-9 * s.mean.abs().max(1.0)
}

/// Centroids with numeric means in original units (two decimals, `*` when
/// anomalous) followed by categorical modes rendered as `code (label)`.
pub fn centroid_table(model: &KPrototypesModel, schema: &[ColumnSchema]) -> Result<CentroidTable> {
    let lookup = |name: &String, categorical: bool| {
        schema
            .iter()
            .find(|c| &c.name == name && c.is_categorical() == categorical)
            .ok_or_else(|| Error::SchemaMismatch(format!("column `{name}` missing or of the wrong kind")))
    };
    for name in &model.numeric_columns {
        lookup(name, false)?;
    }
    let cat_schema = model
        .categorical_columns
        .iter()
        .map(|n| lookup(n, true))
        .collect::<Result<Vec<_>>>()?;

    let mut header = vec!["Cluster".to_string(), "Size".to_string()];
    header.extend(model.numeric_columns.iter().cloned());
    header.extend(model.categorical_columns.iter().cloned());

    let sizes = model.cluster_sizes();
    let rows = (0..model.k)
        .map(|l| {
            let proto = &model.prototypes[l];
            let anomalous: Vec<bool> = model.numeric_spread[l].iter().map(is_anomalous).collect();
            let mut cells: Vec<String> = proto
                .numeric
                .iter()
                .zip(&anomalous)
                .map(|(v, &a)| format!("{v:.2}{}", if a { "*" } else { "" }))
                .collect();
            for (col, &code) in cat_schema.iter().zip(&proto.categorical) {
                cells.push(format!("{code} ({})", col.label(code).unwrap_or("?")));
            }
            CentroidRow {
                cluster: l,
                size: sizes[l],
                numeric: proto.numeric.clone(),
                anomalous,
                codes: proto.categorical.clone(),
                cells,
            }
        })
        .collect();
    Ok(CentroidTable { header, rows })
}

impl CentroidTable {
    fn string_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                let mut v = vec![r.cluster.to_string(), r.size.to_string()];
                v.extend(r.cells.iter().cloned());
                v
            })
            .collect()
    }

    pub fn has_anomaly(&self) -> bool {
        self.rows.iter().any(|r| r.anomalous.iter().any(|&a| a))
    }

    /// Aligned plain-text rendering.
    pub fn to_text(&self) -> String {
        let mut out = crate::report::align_table(&self.header, &self.string_rows());
        if self.has_anomaly() {
            out.push_str("* mean far from the cluster median; outliers likely drive this centroid\n");
        }
        out
    }

    pub fn to_csv(&self, delimiter: u8) -> Result<String> {
        let mut wtr = csv::WriterBuilder::new().delimiter(delimiter).from_writer(Vec::new());
        wtr.write_record(&self.header)?;
        for row in self.string_rows() {
            wtr.write_record(&row)?;
        }
        let bytes = wtr.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("utf-8 input"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn distance_examples() {
        let proto = Prototype { numeric: vec![1.0, 2.0], categorical: vec![1, 2, 3] };
        assert_eq!(mixed_distance(&[1.0, 2.0], &[1, 2, 3], &proto, 0.7).unwrap(), 0.0);
        assert_eq!(mixed_distance(&[4.0, 2.0], &[1, 2, 3], &proto, 0.7).unwrap(), 9.0);
        assert_eq!(mixed_distance(&[4.0, 2.0], &[1, 2, 3], &proto, 123.0).unwrap(), 9.0);
        assert_eq!(mixed_distance(&[1.0, 2.0], &[2, 2, 4], &proto, 0.5).unwrap(), 1.0);
        assert!(matches!(
            mixed_distance(&[1.0], &[1, 2, 3], &proto, 0.5),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn empty_layout_is_rejected() {
        assert!(matches!(
            MixedMatrix::new(vec![vec![]], vec![vec![]], vec![], vec![]),
            Err(Error::NoNumericAndNoCategorical)
        ));
    }

    #[test]
    fn k_bounds() {
        let pts = MixedMatrix::numeric_only(vec![vec![1.0], vec![2.0]]).unwrap();
        assert!(matches!(fit_kprototypes(&pts, &KPrototypesConfig::new(3)), Err(Error::KOutOfRange { .. })));
        assert!(matches!(fit_kprototypes(&pts, &KPrototypesConfig::new(0)), Err(Error::KOutOfRange { .. })));
    }

    #[test]
    fn default_gamma_is_half_mean_std() {
        let pts = MixedMatrix::new(
            vec![vec![0.0, 0.0], vec![2.0, 4.0], vec![4.0, 8.0], vec![6.0, 12.0]],
            vec![vec![1], vec![1], vec![2], vec![2]],
            vec!["a".into(), "b".into()],
            vec!["c".into()],
        )
        .unwrap();
        let m = fit_kprototypes(&pts, &KPrototypesConfig::new(2)).unwrap();
        assert_abs_diff_eq!(m.gamma, 0.5, epsilon = 1e-12);
        let raw = fit_kprototypes(&pts, &KPrototypesConfig::new(2).standardize(false)).unwrap();
        assert_abs_diff_eq!(raw.gamma, 0.5 * (pts.stds()[0] + pts.stds()[1]) / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn single_cluster_is_global_centroid() {
        let pts = MixedMatrix::new(
            vec![vec![1.0], vec![2.0], vec![6.0]],
            vec![vec![3], vec![4], vec![4]],
            vec!["h".into()],
            vec!["c".into()],
        )
        .unwrap();
        let m = fit_kprototypes(&pts, &KPrototypesConfig::new(1)).unwrap();
        assert_abs_diff_eq!(m.prototypes[0].numeric[0], 3.0, epsilon = 1e-12);
        assert_eq!(m.prototypes[0].categorical, vec![4]);
    }

    #[test]
    fn anomaly_flag_uses_robust_spread() {
        let skewed = spread(&[40.0, 40.0, 40.0, 40.0, 40.0, 40.0, 40.0, 168.0]);
        assert!(is_anomalous(&skewed));
        let tidy = spread(&[38.0, 39.0, 40.0, 41.0, 42.0]);
        assert!(!is_anomalous(&tidy));
    }
}
