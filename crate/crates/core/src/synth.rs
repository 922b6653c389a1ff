//! Seeded synthetic survey data with planted cluster structure.
//!
//! Each row first draws a blueprint by weight, then draws every column from
//! that blueprint's distribution. A `noise_rate` fraction of cells is then
//! redrawn uniformly, and a `missing_rate` fraction is blanked out.

use std::collections::BTreeMap;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Cell, Code, ColumnSchema, Dataset};
use crate::rng;

/// A secondary normal component mixed into a numeric column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outliers {
    pub rate: f64,
    pub mean: f64,
    pub std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumericDist {
    pub mean: f64,
    pub std: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    /// Round draws to whole numbers.
    #[serde(default)]
    pub integer: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outliers: Option<Outliers>,
}

impl NumericDist {
    pub fn new(mean: f64, std: f64) -> Self {
        NumericDist { mean, std, min: None, max: None, integer: false, outliers: None }
    }

    pub fn bounded(mut self, min: f64, max: f64) -> Self {
        self.min = Some(min);
        self.max = Some(max);
        self
    }

    pub fn integer(mut self) -> Self {
        self.integer = true;
        self
    }

    pub fn with_outliers(mut self, rate: f64, mean: f64, std: f64) -> Self {
        self.outliers = Some(Outliers { rate, mean, std });
        self
    }

    fn finish(&self, v: f64) -> f64 {
        let v = v.max(self.min.unwrap_or(f64::NEG_INFINITY)).min(self.max.unwrap_or(f64::INFINITY));
        if self.integer {
            v.round()
        } else {
            v
        }
    }

    fn range(&self) -> (f64, f64) {
        (self.min.unwrap_or(self.mean - 3.0 * self.std), self.max.unwrap_or(self.mean + 3.0 * self.std))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Blueprint {
    #[serde(default)]
    pub name: String,
    pub weight: f64,
    /// `column -> [(code, probability)]`.
    #[serde(default)]
    pub categorical: BTreeMap<String, Vec<(Code, f64)>>,
    #[serde(default)]
    pub numeric: BTreeMap<String, NumericDist>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub n_rows: usize,
    pub blueprints: Vec<Blueprint>,
    #[serde(default)]
    pub noise_rate: f64,
    #[serde(default)]
    pub missing_rate: f64,
    #[serde(default)]
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    fn validate(&self, schema: &[ColumnSchema]) -> Result<()> {
        let arg = |m: String| Err(Error::InvalidArgument(m));
        if self.blueprints.is_empty() {
            return arg("at least one blueprint is required".into());
        }
        let wsum: f64 = self.blueprints.iter().map(|b| b.weight).sum();
        if (wsum - 1.0).abs() > 1e-9 || self.blueprints.iter().any(|b| !(b.weight >= 0.0)) {
            return arg(format!("blueprint weights must be non-negative and sum to 1, got {wsum}"));
        }
        for (name, rate) in [("noise_rate", self.noise_rate), ("missing_rate", self.missing_rate)] {
            if !(0.0..=1.0).contains(&rate) {
                return arg(format!("{name} must lie in [0, 1], got {rate}"));
            }
        }
        for (b, bp) in self.blueprints.iter().enumerate() {
            let mismatch = |m: String| Err(Error::SchemaMismatch(format!("blueprint {b}: {m}")));
            let expected: usize = schema.len();
            if bp.categorical.len() + bp.numeric.len() != expected {
                return mismatch(format!("describes {} columns, schema has {expected}", bp.categorical.len() + bp.numeric.len()));
            }
            for col in schema {
                if col.is_categorical() {
                    let Some(dist) = bp.categorical.get(&col.name) else {
                        return mismatch(format!("no categorical distribution for `{}`", col.name));
                    };
                    if let Some((code, _)) = dist.iter().find(|(c, _)| !col.has_code(*c)) {
                        return mismatch(format!("code {code} is not valid for `{}`", col.name));
                    }
                    let total: f64 = dist.iter().map(|d| d.1).sum();
                    if (total - 1.0).abs() > 1e-9 || dist.iter().any(|d| !(d.1 >= 0.0)) {
                        return mismatch(format!("probabilities for `{}` must sum to 1", col.name));
                    }
                } else {
                    let Some(dist) = bp.numeric.get(&col.name) else {
                        return mismatch(format!("no numeric distribution for `{}`", col.name));
                    };
                    if !(dist.std >= 0.0 && dist.mean.is_finite()) {
                        return mismatch(format!("invalid normal for `{}`", col.name));
                    }
                    if let Some(o) = &dist.outliers {
                        if !(0.0..=1.0).contains(&o.rate) || !(o.std >= 0.0) {
                            return mismatch(format!("invalid outlier component for `{}`", col.name));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn normal(rng: &mut rng::Rng, mean: f64, std: f64) -> f64 {
    Normal::new(mean, std).expect("validated std").sample(rng)
}

/// Draws `spec.n_rows` rows and returns them with their blueprint indices.
pub fn generate(spec: &GeneratorSpec, schema: &[ColumnSchema]) -> Result<(Dataset, Vec<usize>)> {
    spec.validate(schema)?;
    let mut rng = rng::seeded(spec.seed);
    let picker = WeightedIndex::new(spec.blueprints.iter().map(|b| b.weight))
        .map_err(|e| Error::InvalidArgument(format!("blueprint weights: {e}")))?;
    let code_pickers: Vec<Vec<Option<WeightedIndex<f64>>>> = spec
        .blueprints
        .iter()
        .map(|bp| {
            schema
                .iter()
                .map(|col| {
                    bp.categorical
                        .get(&col.name)
                        .map(|d| WeightedIndex::new(d.iter().map(|x| x.1)).expect("validated probabilities"))
                })
                .collect()
        })
        .collect();

    let mut rows = Vec::with_capacity(spec.n_rows);
    let mut labels = Vec::with_capacity(spec.n_rows);
    for _ in 0..spec.n_rows {
        let b = picker.sample(&mut rng);
        let bp = &spec.blueprints[b];
        let mut row = Vec::with_capacity(schema.len());
        for (j, col) in schema.iter().enumerate() {
            let noisy = rng.random::<f64>() < spec.noise_rate;
            let cell = if col.is_categorical() {
                let code = if noisy {
                    col.categories[rng.random_range(0..col.categories.len())].code
                } else {
                    let dist = &bp.categorical[&col.name];
                    dist[code_pickers[b][j].as_ref().expect("categorical").sample(&mut rng)].0
                };
                Cell::Code(code)
            } else {
                let dist = &bp.numeric[&col.name];
                let v = if noisy {
                    let (lo, hi) = dist.range();
                    if hi > lo {
                        rng.random_range(lo..=hi)
                    } else {
                        lo
                    }
                } else {
                    match &dist.outliers {
                        Some(o) if rng.random::<f64>() < o.rate => normal(&mut rng, o.mean, o.std),
                        _ => normal(&mut rng, dist.mean, dist.std),
                    }
                };
                Cell::Real(dist.finish(v))
            };
            let missing = rng.random::<f64>() < spec.missing_rate;
            row.push(if missing { Cell::Missing } else { cell });
        }
        rows.push(row);
        labels.push(b);
    }
    Ok((Dataset::new(schema.to_vec(), rows)?, labels))
}

/// Adjusted Rand index between two labelings of the same rows.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    let n = a.len() as f64;
    let mut joint: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut ra: BTreeMap<usize, f64> = BTreeMap::new();
    let mut rb: BTreeMap<usize, f64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_default() += 1.0;
        *ra.entry(x).or_default() += 1.0;
        *rb.entry(y).or_default() += 1.0;
    }
    let c2 = |v: f64| v * (v - 1.0) / 2.0;
    let index: f64 = joint.values().map(|&v| c2(v)).sum();
    let sa: f64 = ra.values().map(|&v| c2(v)).sum();
    let sb: f64 = rb.values().map(|&v| c2(v)).sum();
    let expected = sa * sb / c2(n);
    let max = 0.5 * (sa + sb);
    if (max - expected).abs() < f64::EPSILON {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

/// True when the two labelings induce the same partition of the rows.
pub fn same_partition(a: &[usize], b: &[usize]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut fwd: BTreeMap<usize, usize> = BTreeMap::new();
    let mut back: BTreeMap<usize, usize> = BTreeMap::new();
    a.iter().zip(b).all(|(&x, &y)| *fwd.entry(x).or_insert(y) == y && *back.entry(y).or_insert(x) == x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> Vec<ColumnSchema> {
        vec![
            ColumnSchema::categorical("A", &[(1, "a"), (2, "b")], &[9]),
            ColumnSchema::numeric("X", &[999]),
        ]
    }

    fn blueprint(weight: f64, code: Code, mean: f64) -> Blueprint {
        Blueprint {
            name: String::new(),
            weight,
            categorical: [("A".to_string(), vec![(code, 1.0)])].into_iter().collect(),
            numeric: [("X".to_string(), NumericDist::new(mean, 0.0))].into_iter().collect(),
        }
    }

    #[test]
    fn noiseless_single_blueprint() {
        let spec = GeneratorSpec { n_rows: 50, blueprints: vec![blueprint(1.0, 2, 4.5)], noise_rate: 0.0, missing_rate: 0.0, seed: 3 };
        let (data, labels) = generate(&spec, &schema()).unwrap();
        assert!(labels.iter().all(|&l| l == 0));
        assert!(data.rows().iter().all(|r| r[0] == Cell::Code(2) && r[1] == Cell::Real(4.5)));
    }

    #[test]
    fn weights_must_sum_to_one() {
        let spec = GeneratorSpec { n_rows: 5, blueprints: vec![blueprint(0.7, 1, 0.0)], noise_rate: 0.0, missing_rate: 0.0, seed: 0 };
        assert!(matches!(generate(&spec, &schema()), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn schema_mismatch() {
        let mut bp = blueprint(1.0, 1, 0.0);
        bp.categorical.insert("A".into(), vec![(3, 1.0)]);
        let spec = GeneratorSpec { n_rows: 5, blueprints: vec![bp], noise_rate: 0.0, missing_rate: 0.0, seed: 0 };
        assert!(matches!(generate(&spec, &schema()), Err(Error::SchemaMismatch(_))));
    }

    #[test]
    fn ari_bounds() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[5, 5, 2, 2]).unwrap(), 1.0);
        assert!(adjusted_rand_index(&[0, 1, 0, 1], &[0, 0, 1, 1]).unwrap() < 0.0);
        assert!(same_partition(&[0, 0, 1], &[2, 2, 0]));
        assert!(!same_partition(&[0, 0, 1], &[2, 1, 0]));
    }
}
