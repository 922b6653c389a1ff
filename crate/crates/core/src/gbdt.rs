//! Gradient-boosted decision trees for multiclass classification.
//!
//! Categorical columns are turned into one numeric feature per class with
//! ordered target statistics: along one seeded permutation of the training
//! rows, each row sees only the targets of earlier rows with the same code.
//! Rows outside training are encoded with statistics over all training rows.
//!
//! Each round fits one regression tree per class to the softmax residuals
//! `y - p`, with Newton leaf values. Trees are depth-limited binary trees grown
//! level by level; splits maximise the reduction in squared error.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Code;
use crate::kprototypes::MixedMatrix;
use crate::rng;

const MIN_ROWS: usize = 20;
const MAX_HALVINGS: usize = 30;
const LEAF_CLAMP: f64 = 50.0;

/// Running-average encoding of `column` against `targets` along
/// `permutation`. The result is indexed by row.
pub fn ordered_target_stat(column: &[Code], targets: &[f64], permutation: &[usize], smoothing: f64) -> Result<Vec<f64>> {
    if column.len() != targets.len() {
        return Err(Error::LengthMismatch { left: column.len(), right: targets.len() });
    }
    if permutation.len() != column.len() {
        return Err(Error::LengthMismatch { left: column.len(), right: permutation.len() });
    }
    if !(smoothing > 0.0 && smoothing.is_finite()) {
        return Err(Error::InvalidArgument(format!("smoothing must be positive, got {smoothing}")));
    }
    let n = column.len();
    let prior = if n == 0 { 0.0 } else { targets.iter().sum::<f64>() / n as f64 };
    let mut seen: BTreeMap<Code, (f64, f64)> = BTreeMap::new();
    let mut out = vec![f64::NAN; n];
    for &r in permutation {
        if r >= n || !out[r].is_nan() {
            return Err(Error::InvalidArgument("permutation must list every row once".into()));
        }
        out[r] = match seen.get(&column[r]) {
            Some(&(sum, count)) => (sum + smoothing * prior) / (count + smoothing),
            None => prior,
        };
        let e = seen.entry(column[r]).or_insert((0.0, 0.0));
        e.0 += targets[r];
        e.1 += 1.0;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbdtConfig {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub seed: u64,
    pub test_fraction: f64,
    pub cat_smoothing: f64,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        GbdtConfig {
            n_rounds: 200,
            learning_rate: 0.1,
            max_depth: 4,
            min_samples_leaf: 5,
            seed: 0,
            test_fraction: 0.25,
            cat_smoothing: 1.0,
        }
    }
}

impl GbdtConfig {
    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn rounds(mut self, n: usize) -> Self {
        self.n_rounds = n;
        self
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.max_depth == 0 || self.min_samples_leaf == 0 {
            return bad("max_depth and min_samples_leaf must be positive");
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad("test_fraction must lie in (0, 1)");
        }
        if !(self.cat_smoothing > 0.0 && self.cat_smoothing.is_finite()) {
            return bad("cat_smoothing must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// Regression tree over encoded features; node 0 is the root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split { feature, threshold, left, right } => {
                    at = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    fn scaled(mut self, factor: f64) -> Tree {
        for node in &mut self.nodes {
            if let Node::Leaf { value } = node {
                *value *= factor;
            }
        }
        self
    }
}

/// Full-training target statistics for one categorical column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryEncoding {
    pub column: String,
    /// Per-class prior (training class frequency).
    pub prior: Vec<f64>,
    /// `code -> (per-class target sums, count)`.
    pub table: BTreeMap<Code, (Vec<f64>, f64)>,
}

impl CategoryEncoding {
    fn encode(&self, code: Code, smoothing: f64) -> impl Iterator<Item = f64> + '_ {
        let entry = self.table.get(&code);
        self.prior.iter().enumerate().map(move |(c, &pr)| match entry {
            Some((sums, count)) => (sums[c] + smoothing * pr) / (count + smoothing),
            None => pr,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    /// Original label values; class `c` of the model is `classes[c]`.
    pub classes: Vec<usize>,
    pub numeric_columns: Vec<String>,
    pub categorical_columns: Vec<String>,
    /// Log class priors.
    pub base_scores: Vec<f64>,
    pub learning_rate: f64,
    pub cat_smoothing: f64,
    /// `trees[round][class]`.
    pub trees: Vec<Vec<Tree>>,
    /// Per original feature (numeric then categorical), summing to 100.
    pub feature_importance: Vec<f64>,
    pub encoding_state: Vec<CategoryEncoding>,
    /// Training log-loss before the first round and after each round.
    pub loss_trace: Vec<f64>,
}

impl GbdtModel {
    pub fn feature_names(&self) -> Vec<String> {
        self.numeric_columns.iter().chain(&self.categorical_columns).cloned().collect()
    }

    fn encode_row(&self, numeric: &[f64], categorical: &[Code]) -> Vec<f64> {
        let mut x = numeric.to_vec();
        for (enc, &code) in self.encoding_state.iter().zip(categorical) {
            x.extend(enc.encode(code, self.cat_smoothing));
        }
        x
    }

    fn scores(&self, x: &[f64]) -> Vec<f64> {
        let mut f = self.base_scores.clone();
        for round in &self.trees {
            for (c, tree) in round.iter().enumerate() {
                f[c] += self.learning_rate * tree.predict(x);
            }
        }
        f
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// Label value (an entry of `GbdtModel::classes`).
    pub class: usize,
    pub probabilities: Vec<f64>,
}

fn softmax(f: &[f64]) -> Vec<f64> {
    let m = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = f.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

pub fn predict(model: &GbdtModel, rows: &MixedMatrix) -> Result<Vec<Prediction>> {
    if rows.numeric_columns() != model.numeric_columns.as_slice()
        || rows.categorical_columns() != model.categorical_columns.as_slice()
    {
        return Err(Error::SchemaMismatch(format!(
            "model expects numeric {:?} and categorical {:?}",
            model.numeric_columns, model.categorical_columns
        )));
    }
    Ok((0..rows.n_rows())
        .into_par_iter()
        .map(|i| {
            let x = model.encode_row(rows.numeric_row(i), rows.categorical_row(i));
            let probabilities = softmax(&model.scores(&x));
            Prediction { class: model.classes[argmax(&probabilities)], probabilities }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub test_accuracy: f64,
    pub train_size: usize,
    pub test_size: usize,
    pub classes: Vec<usize>,
    /// Rows are true classes, columns predicted classes.
    pub confusion: Vec<Vec<u64>>,
    /// Features by decreasing importance; ties keep feature order.
    pub importance_ranking: Vec<(String, f64)>,
}

impl ValidationReport {
    pub fn to_json(&self) -> serde_json::Value {
        let table: Vec<serde_json::Value> = self
            .importance_ranking
            .iter()
            .enumerate()
            .map(|(r, (f, v))| serde_json::json!({"rank": r + 1, "feature": f, "importance": v}))
            .collect();
        serde_json::json!({
            "test_accuracy": self.test_accuracy,
            "train_size": self.train_size,
            "test_size": self.test_size,
            "classes": self.classes,
            "confusion": self.confusion,
            "feature_importance": table,
        })
    }

    /// Aligned importance table: rank, feature, importance.
    pub fn importance_text(&self) -> String {
        let header = ["Rank".to_string(), "Feature".to_string(), "Importance".to_string()];
        let rows: Vec<Vec<String>> = self
            .importance_ranking
            .iter()
            .enumerate()
            .map(|(r, (f, v))| vec![(r + 1).to_string(), f.clone(), format!("{v:.6}")])
            .collect();
        crate::report::align_table(&header, &rows)
    }
}

/// Seeded per-class split; every class keeps at least one training row.
fn stratified_split(labels: &[usize], k: usize, fraction: f64, rng: &mut rng::Rng) -> (Vec<usize>, Vec<usize>) {
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for rows in &mut by_class {
        rows.shuffle(rng);
        let n_test = ((rows.len() as f64 * fraction).round() as usize).min(rows.len().saturating_sub(1));
        test.extend_from_slice(&rows[..n_test]);
        train.extend_from_slice(&rows[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// The `(train, test)` row indices [`fit_gbdt`] uses for `labels` under
/// `config`: a seeded split stratified by class, both parts sorted.
pub fn train_test_split(labels: &[usize], config: &GbdtConfig) -> (Vec<usize>, Vec<usize>) {
    let classes: Vec<usize> = labels.iter().copied().collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let y: Vec<usize> = labels.iter().map(|l| classes.binary_search(l).expect("known class")).collect();
    stratified_split(&y, classes.len(), config.test_fraction, &mut rng::stream(config.seed, 0))
}

fn log_loss(f: &[Vec<f64>], y: &[usize]) -> f64 {
    let total: f64 = f
        .iter()
        .zip(y)
        .map(|(fi, &c)| {
            let m = fi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + fi.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
            lse - fi[c]
        })
        .sum();
    total / y.len() as f64
}

struct Grower<'a> {
    /// `x[row][feature]`.
    x: &'a [Vec<f64>],
    /// Rows sorted by each feature (ties by row index).
    order: &'a [Vec<usize>],
    max_depth: usize,
    min_leaf: usize,
    k: usize,
}

struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

impl Grower<'_> {
    fn leaf_value(&self, r: &[f64], rows: impl Iterator<Item = usize>) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for i in rows {
            num += r[i];
            den += r[i].abs() * (1.0 - r[i].abs());
        }
        if num == 0.0 {
            return 0.0;
        }
        let k = self.k as f64;
        ((k - 1.0) / k * num / den.max(1e-12)).clamp(-LEAF_CLAMP, LEAF_CLAMP)
    }

    /// Returns the tree and `(feature, gain)` for each split.
    fn grow(&self, r: &[f64]) -> (Tree, Vec<(usize, f64)>) {
        let n = self.x.len();
        let mut node_of: Vec<usize> = vec![0; n];
        let mut nodes: Vec<Node> = vec![Node::Leaf { value: 0.0 }];
        let mut gains = Vec::new();
        let mut frontier: Vec<usize> = vec![0];
        for depth in 0..=self.max_depth {
            if frontier.is_empty() {
                break;
            }
            let mut totals: BTreeMap<usize, (f64, usize)> = frontier.iter().map(|&a| (a, (0.0, 0))).collect();
            for i in 0..n {
                if let Some(t) = totals.get_mut(&node_of[i]) {
                    t.0 += r[i];
                    t.1 += 1;
                }
            }
            let mut best: BTreeMap<usize, Candidate> = BTreeMap::new();
            if depth < self.max_depth {
                for (f, order) in self.order.iter().enumerate() {
                    // node -> (left sum, left count, last value)
                    let mut run: BTreeMap<usize, (f64, usize, f64)> = BTreeMap::new();
                    for &i in order {
                        let a = node_of[i];
                        let Some(&(s, cnt)) = totals.get(&a) else { continue };
                        if cnt < 2 * self.min_leaf {
                            continue;
                        }
                        let v = self.x[i][f];
                        let st = run.entry(a).or_insert((0.0, 0, f64::NEG_INFINITY));
                        if st.1 >= self.min_leaf && cnt - st.1 >= self.min_leaf && v > st.2 {
                            let (sl, nl) = (st.0, st.1 as f64);
                            let (sr, nr) = (s - st.0, (cnt - st.1) as f64);
                            let gain = sl * sl / nl + sr * sr / nr - s * s / cnt as f64;
                            if gain > 1e-12 && best.get(&a).is_none_or(|b| gain > b.gain) {
                                best.insert(a, Candidate { gain, feature: f, threshold: 0.5 * (st.2 + v) });
                            }
                        }
                        st.0 += r[i];
                        st.1 += 1;
                        st.2 = v;
                    }
                }
            }
            let mut next = Vec::new();
            let mut children: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
            for &a in &frontier {
                match best.get(&a) {
                    Some(c) => {
                        let left = nodes.len();
                        nodes.push(Node::Leaf { value: 0.0 });
                        nodes.push(Node::Leaf { value: 0.0 });
                        nodes[a] = Node::Split { feature: c.feature, threshold: c.threshold, left, right: left + 1 };
                        gains.push((c.feature, c.gain));
                        children.insert(a, (left, left + 1));
                        next.push(left);
                        next.push(left + 1);
                    }
                    None => {
                        let value = self.leaf_value(r, (0..n).filter(|&i| node_of[i] == a));
                        nodes[a] = Node::Leaf { value };
                    }
                }
            }
            for i in 0..n {
                if let Some(&(l, rt)) = children.get(&node_of[i]) {
                    let Node::Split { feature, threshold, .. } = nodes[node_of[i]] else { unreachable!() };
                    node_of[i] = if self.x[i][feature] <= threshold { l } else { rt };
                }
            }
            frontier = next;
        }
        (Tree { nodes }, gains)
    }
}

/// Trains on a stratified split of the rows and reports accuracy on the
/// held-out part. `labels` are arbitrary class values.
pub fn fit_gbdt(features: &MixedMatrix, labels: &[usize], config: &GbdtConfig) -> Result<(GbdtModel, ValidationReport)> {
    config.validate()?;
    let n = features.n_rows();
    if labels.len() != n {
        return Err(Error::LengthMismatch { left: n, right: labels.len() });
    }
    if n < MIN_ROWS {
        return Err(Error::TooFewRows { needed: MIN_ROWS, found: n });
    }
    let classes: Vec<usize> = labels.iter().copied().collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    if classes.len() < 2 {
        return Err(Error::SingleClass);
    }
    let k = classes.len();
    let y: Vec<usize> = labels.iter().map(|l| classes.binary_search(l).expect("known class")).collect();

    let (train, test) = stratified_split(&y, k, config.test_fraction, &mut rng::stream(config.seed, 0));
    let y_train: Vec<usize> = train.iter().map(|&i| y[i]).collect();
    let nt = train.len();

    let prior: Vec<f64> = (0..k).map(|c| y_train.iter().filter(|&&v| v == c).count() as f64 / nt as f64).collect();

    // Encoded training matrix: numeric columns, then one column per
    // (categorical column, class) pair.
    let p = features.n_numeric();
    let q = features.n_categorical();
    let mut perm: Vec<usize> = (0..nt).collect();
    perm.shuffle(&mut rng::stream(config.seed, 1));
    let mut x_train: Vec<Vec<f64>> = train.iter().map(|&i| features.numeric_row(i).to_vec()).collect();
    let mut encoding_state = Vec::with_capacity(q);
    let mut origin: Vec<usize> = (0..p).collect();
    for j in 0..q {
        let column: Vec<Code> = train.iter().map(|&i| features.categorical_row(i)[j]).collect();
        let mut table: BTreeMap<Code, (Vec<f64>, f64)> = BTreeMap::new();
        for (&code, &c) in column.iter().zip(&y_train) {
            let e = table.entry(code).or_insert_with(|| (vec![0.0; k], 0.0));
            e.0[c] += 1.0;
            e.1 += 1.0;
        }
        for c in 0..k {
            let targets: Vec<f64> = y_train.iter().map(|&v| if v == c { 1.0 } else { 0.0 }).collect();
            let enc = ordered_target_stat(&column, &targets, &perm, config.cat_smoothing)?;
            for (row, v) in x_train.iter_mut().zip(enc) {
                row.push(v);
            }
            origin.push(p + j);
        }
        encoding_state.push(CategoryEncoding {
            column: features.categorical_columns()[j].clone(),
            prior: prior.clone(),
            table,
        });
    }
    let d = origin.len();
    let order: Vec<Vec<usize>> = (0..d)
        .map(|f| {
            let mut idx: Vec<usize> = (0..nt).collect();
            idx.sort_by(|&a, &b| x_train[a][f].total_cmp(&x_train[b][f]).then(a.cmp(&b)));
            idx
        })
        .collect();

    let base_scores: Vec<f64> = prior.iter().map(|p| p.ln()).collect();
    let mut f: Vec<Vec<f64>> = vec![base_scores.clone(); nt];
    let mut loss_trace = vec![log_loss(&f, &y_train)];
    let mut trees = Vec::with_capacity(config.n_rounds);
    let mut raw_importance = vec![0.0; p + q];
    let grower = Grower { x: &x_train, order: &order, max_depth: config.max_depth, min_leaf: config.min_samples_leaf, k };

    for _ in 0..config.n_rounds {
        let probs: Vec<Vec<f64>> = f.iter().map(|fi| softmax(fi)).collect();
        let grown: Vec<(Tree, Vec<(usize, f64)>)> = (0..k)
            .into_par_iter()
            .map(|c| {
                let r: Vec<f64> = (0..nt).map(|i| (if y_train[i] == c { 1.0 } else { 0.0 }) - probs[i][c]).collect();
                grower.grow(&r)
            })
            .collect();
        let outputs: Vec<Vec<f64>> = grown.iter().map(|(t, _)| x_train.iter().map(|x| t.predict(x)).collect()).collect();
        let current = *loss_trace.last().expect("non-empty");
        let mut factor = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let cand: Vec<Vec<f64>> = f
                .iter()
                .enumerate()
                .map(|(i, fi)| fi.iter().enumerate().map(|(c, v)| v + config.learning_rate * factor * outputs[c][i]).collect())
                .collect();
            let loss = log_loss(&cand, &y_train);
            if loss <= current {
                accepted = Some((cand, loss));
                break;
            }
            factor *= 0.5;
        }
        match accepted {
            Some((cand, loss)) => {
                f = cand;
                loss_trace.push(loss);
                for (_, splits) in &grown {
                    for &(feat, gain) in splits {
                        raw_importance[origin[feat]] += gain;
                    }
                }
                trees.push(grown.into_iter().map(|(t, _)| t.scaled(factor)).collect());
            }
            None => {
                loss_trace.push(current);
                trees.push(grown.into_iter().map(|(t, _)| t.scaled(0.0)).collect());
            }
        }
    }

    let total: f64 = raw_importance.iter().sum();
    let feature_importance: Vec<f64> =
        raw_importance.iter().map(|&v| if total > 0.0 { 100.0 * v / total } else { 0.0 }).collect();

    let model = GbdtModel {
        classes: classes.clone(),
        numeric_columns: features.numeric_columns().to_vec(),
        categorical_columns: features.categorical_columns().to_vec(),
        base_scores,
        learning_rate: config.learning_rate,
        cat_smoothing: config.cat_smoothing,
        trees,
        feature_importance,
        encoding_state,
        loss_trace,
    };

    let test_rows = features.select_rows(&test);
    let preds = if test.is_empty() { Vec::new() } else { predict(&model, &test_rows)? };
    let mut confusion = vec![vec![0u64; k]; k];
    for (&i, pr) in test.iter().zip(&preds) {
        let pc = classes.binary_search(&pr.class).expect("known class");
        confusion[y[i]][pc] += 1;
    }
    let correct: u64 = (0..k).map(|c| confusion[c][c]).sum();
    let test_accuracy = if test.is_empty() { 0.0 } else { correct as f64 / test.len() as f64 };
    let mut importance_ranking: Vec<(String, f64)> =
        model.feature_names().into_iter().zip(model.feature_importance.iter().copied()).collect();
    importance_ranking.sort_by(|a, b| b.1.total_cmp(&a.1));
    let report = ValidationReport {
        test_accuracy,
        train_size: nt,
        test_size: test.len(),
        classes,
        confusion,
        importance_ranking,
    };
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ordered_stat_first_row_is_prior() {
        let col = [1, 2, 1, 1, 2, 2];
        let t = [1.0, 0.0, 0.0, 1.0, 1.0, 0.0];
        let perm = [0, 1, 2, 3, 4, 5];
        let enc = ordered_target_stat(&col, &t, &perm, 1.0).unwrap();
        let prior = 0.5;
        assert_eq!(enc[0], prior);
        assert_eq!(enc[1], prior);
        assert_abs_diff_eq!(enc[2], (1.0 + prior) / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(enc[3], (1.0 + prior) / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(enc[4], (0.0 + prior) / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(enc[5], (1.0 + prior) / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn ordered_stat_follows_permutation() {
        let col = [7, 7, 7];
        let t = [1.0, 0.0, 0.0];
        let enc = ordered_target_stat(&col, &t, &[2, 1, 0], 1.0).unwrap();
        let prior = 1.0 / 3.0;
        assert_eq!(enc[2], prior);
        assert_abs_diff_eq!(enc[1], prior / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(enc[0], prior / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn ordered_stat_constant_target() {
        let enc = ordered_target_stat(&[1, 2, 1, 3], &[0.7; 4], &[3, 1, 0, 2], 2.0).unwrap();
        assert!(enc.iter().all(|&v| (v - 0.7).abs() < 1e-15));
    }

    #[test]
    fn ordered_stat_length_mismatch() {
        assert!(matches!(ordered_target_stat(&[1, 2], &[1.0], &[0, 1], 1.0), Err(Error::LengthMismatch { .. })));
    }

    fn toy(n: usize) -> (MixedMatrix, Vec<usize>) {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 - n as f64 / 2.0 + 0.5, (i * 7 % 5) as f64]).collect();
        let labels = rows.iter().map(|r| usize::from(r[0] > 0.0)).collect();
        (MixedMatrix::numeric_only(rows).unwrap(), labels)
    }

    #[test]
    fn separable_toy_is_perfect() {
        let (x, y) = toy(60);
        let (model, report) = fit_gbdt(&x, &y, &GbdtConfig::default().rounds(20)).unwrap();
        assert_eq!(report.test_accuracy, 1.0);
        assert_eq!(model.feature_importance[1], 0.0);
        assert_abs_diff_eq!(model.feature_importance.iter().sum::<f64>(), 100.0, epsilon = 1e-9);
    }

    #[test]
    fn zero_rounds_predicts_priors() {
        let (x, y) = toy(40);
        let (model, _) = fit_gbdt(&x, &y, &GbdtConfig::default().rounds(0)).unwrap();
        for p in predict(&model, &x).unwrap() {
            assert_abs_diff_eq!(p.probabilities[0], 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn input_errors() {
        let (x, y) = toy(10);
        assert!(matches!(fit_gbdt(&x, &y, &GbdtConfig::default()), Err(Error::TooFewRows { .. })));
        let (x, _) = toy(30);
        assert!(matches!(fit_gbdt(&x, &[3; 30], &GbdtConfig::default()), Err(Error::SingleClass)));
    }
}
