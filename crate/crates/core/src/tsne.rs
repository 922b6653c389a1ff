//! Exact t-SNE.
//!
//! Conditional affinities `p_{j|i}` are Gaussian with a per-point bandwidth
//! found by bisection so that `2^H(P_i)` (entropy in bits) matches the target
//! perplexity. They are symmetrised into a joint distribution `P`, and a 2-D
//! layout is found by minimising `KL(P || Q)` where `Q` uses a Student-t
//! kernel. Everything is O(n^2) in time; inputs are capped at
//! [`MAX_POINTS`].

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Dataset;
use crate::rng;

pub const MAX_POINTS: usize = 5_000;
/// Floor applied to `P` and `Q` entries so logarithms stay finite.
pub const PROB_FLOOR: f64 = 1e-12;
/// Entropy tolerance of the bandwidth search, in bits.
pub const ENTROPY_TOL: f64 = 1e-10;
pub const MAX_BISECTIONS: usize = 200;
pub const RECOMMENDED_PERPLEXITY: (f64, f64) = (5.0, 50.0);

const INIT_STD: f64 = 1e-4;
const EXAGGERATION: f64 = 4.0;
const EXAGGERATION_ITERS: usize = 100;
const MOMENTUM_SWITCH: usize = 250;
const MIN_GAIN: f64 = 0.01;
const KL_EVERY: usize = 50;

/// Dense row-major `n x n` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        SquareMatrix { n, data: vec![0.0; n * n] }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("matrix is not square".into()));
        }
        Ok(SquareMatrix { n, data: rows.concat() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn sum(&self) -> f64 {
        (0..self.n).map(|i| self.row(i).iter().sum::<f64>()).sum()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }
}

/// Squared Euclidean distances between all pairs of rows.
pub fn pairwise_sq_dists(points: &[Vec<f64>]) -> Result<SquareMatrix> {
    let n = points.len();
    let d = points.first().map_or(0, Vec::len);
    if n > 0 && d == 0 {
        return Err(Error::DimensionMismatch("points need at least one coordinate".into()));
    }
    if points.iter().any(|p| p.len() != d) {
        return Err(Error::DimensionMismatch("ragged point matrix".into()));
    }
    let data: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            (0..n).map(move |j| {
                if i == j {
                    0.0
                } else {
                    points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum()
                }
            })
        })
        .collect();
    Ok(SquareMatrix { n, data })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AffinityMatrix {
    /// Row `i` holds `p_{j|i}`.
    pub p: SquareMatrix,
    /// Gaussian bandwidths; infinite for rows whose distances are all equal.
    pub sigmas: Vec<f64>,
    pub perplexity: f64,
}

impl AffinityMatrix {
    /// `2^H(P_i)` with the entropy in bits.
    pub fn row_perplexity(&self, i: usize) -> f64 {
        let h: f64 = self.p.row(i).iter().filter(|&&v| v > 0.0).map(|&v| -v * v.log2()).sum();
        h.exp2()
    }
}

/// Gaussian row for precision `beta` over shifted distances; returns the
/// entropy in bits.
fn gaussian_row(shifted: &[f64], i: usize, beta: f64, out: &mut [f64]) -> f64 {
    let mut total = 0.0;
    let mut weighted = 0.0;
    for (j, (&d, o)) in shifted.iter().zip(out.iter_mut()).enumerate() {
        if j == i {
            *o = 0.0;
            continue;
        }
        let w = (-beta * d).exp();
        *o = w;
        total += w;
        weighted += w * d;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
    (total.ln() + beta * weighted / total) / std::f64::consts::LN_2
}

fn calibrate_row(dists: &[f64], i: usize, perplexity: f64) -> (Vec<f64>, f64) {
    let n = dists.len();
    let mut out = vec![0.0; n];
    let dmin = dists.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &d)| d).fold(f64::INFINITY, f64::min);
    let shifted: Vec<f64> = dists.iter().map(|&d| d - dmin).collect();
    let spread = shifted.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &d)| d).fold(0.0, f64::max);
    if spread == 0.0 {
        for (j, o) in out.iter_mut().enumerate() {
            *o = if j == i { 0.0 } else { 1.0 / (n - 1) as f64 };
        }
        return (out, f64::INFINITY);
    }
    let target = perplexity.log2();
    let mean = shifted.iter().sum::<f64>() / (n - 1) as f64;
    let mut beta = 1.0 / mean;
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    for _ in 0..MAX_BISECTIONS {
        let h = gaussian_row(&shifted, i, beta, &mut out);
        let diff = h - target;
        if diff.abs() < ENTROPY_TOL {
            break;
        }
        if diff > 0.0 {
            lo = beta;
            beta = if hi.is_finite() { 0.5 * (lo + hi) } else { beta * 2.0 };
        } else {
            hi = beta;
            beta = 0.5 * (lo + hi);
        }
    }
    gaussian_row(&shifted, i, beta, &mut out);
    (out, (0.5 / beta).sqrt())
}

/// Per-row bandwidth search so each row's perplexity matches `perplexity`.
/// Rows whose off-diagonal distances are all equal (for example a point
/// whose neighbours are all duplicates of each other) become uniform.
pub fn calibrate_affinities(dists: &SquareMatrix, perplexity: f64) -> Result<AffinityMatrix> {
    let n = dists.n;
    if !(perplexity.is_finite() && perplexity >= 1.0) {
        return Err(Error::InvalidArgument(format!("perplexity must be at least 1, got {perplexity}")));
    }
    if n < 2 || perplexity >= (n - 1) as f64 {
        return Err(Error::PerplexityTooLarge { perplexity, limit: n.saturating_sub(1) as f64 });
    }
    let rows: Vec<(Vec<f64>, f64)> =
        (0..n).into_par_iter().map(|i| calibrate_row(dists.row(i), i, perplexity)).collect();
    let sigmas = rows.iter().map(|r| r.1).collect();
    let data = rows.into_iter().flat_map(|r| r.0).collect();
    Ok(AffinityMatrix { p: SquareMatrix { n, data }, sigmas, perplexity })
}

/// Joint distribution `P_ij = (p_{j|i} + p_{i|j}) / 2n`, floored and
/// renormalised.
pub fn symmetrize(cond: &AffinityMatrix) -> SquareMatrix {
    let n = cond.p.n;
    let mut data: Vec<f64> = (0..n)
        .flat_map(|i| {
            (0..n).map(move |j| {
                if i == j {
                    0.0
                } else {
                    ((cond.p.get(i, j) + cond.p.get(j, i)) / (2.0 * n as f64)).max(PROB_FLOOR)
                }
            })
        })
        .collect();
    let total: f64 = data.chunks(n.max(1)).map(|r| r.iter().sum::<f64>()).sum();
    data.iter_mut().for_each(|v| *v /= total);
    SquareMatrix { n, data }
}

/// Student-t kernel `num_ij = 1 / (1 + |y_i - y_j|^2)` and its normalisation
/// `Q`, floored at [`PROB_FLOOR`].
pub fn low_dim_affinities(coords: &[[f64; 2]]) -> (SquareMatrix, SquareMatrix) {
    let n = coords.len();
    let num = kernel(coords);
    let total = row_sums_total(&num);
    let q = SquareMatrix {
        n,
        data: num
            .data
            .iter()
            .enumerate()
            .map(|(idx, &v)| if idx / n == idx % n { 0.0 } else { (v / total).max(PROB_FLOOR) })
            .collect(),
    };
    (q, num)
}

fn kernel(coords: &[[f64; 2]]) -> SquareMatrix {
    let n = coords.len();
    let data = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            (0..n).map(move |j| {
                if i == j {
                    0.0
                } else {
                    let dx = coords[i][0] - coords[j][0];
                    let dy = coords[i][1] - coords[j][1];
                    1.0 / (1.0 + dx * dx + dy * dy)
                }
            })
        })
        .collect();
    SquareMatrix { n, data }
}

/// Sum of all entries, summed row by row in index order.
fn row_sums_total(m: &SquareMatrix) -> f64 {
    let rows: Vec<f64> = (0..m.n).into_par_iter().map(|i| m.row(i).iter().sum()).collect();
    rows.iter().sum()
}

fn kl(p: &SquareMatrix, num: &SquareMatrix, total: f64, exaggeration: f64) -> f64 {
    let rows: Vec<f64> = (0..p.n)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..p.n {
                if i != j {
                    let pij = exaggeration * p.get(i, j);
                    let qij = (num.get(i, j) / total).max(PROB_FLOOR);
                    acc += pij * (pij / qij).ln();
                }
            }
            acc
        })
        .collect();
    rows.iter().sum()
}

fn gradient(p: &SquareMatrix, coords: &[[f64; 2]], num: &SquareMatrix, total: f64, exaggeration: f64) -> Vec<[f64; 2]> {
    (0..p.n)
        .into_par_iter()
        .map(|i| {
            let mut g = [0.0; 2];
            for j in 0..p.n {
                if i == j {
                    continue;
                }
                let w = num.get(i, j);
                let q = (w / total).max(PROB_FLOOR);
                let f = 4.0 * (exaggeration * p.get(i, j) - q) * w;
                g[0] += f * (coords[i][0] - coords[j][0]);
                g[1] += f * (coords[i][1] - coords[j][1]);
            }
            g
        })
        .collect()
}

/// `KL(P || Q)` in nats and its gradient with respect to the coordinates.
pub fn kl_and_gradient(p: &SquareMatrix, coords: &[[f64; 2]]) -> Result<(f64, Vec<[f64; 2]>)> {
    if p.n != coords.len() {
        return Err(Error::LengthMismatch { left: p.n, right: coords.len() });
    }
    let num = kernel(coords);
    let total = row_sums_total(&num);
    Ok((kl(p, &num, total, 1.0), gradient(p, coords, &num, total, 1.0)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig { perplexity: 30.0, iterations: 1000, learning_rate: 200.0, seed: 0 }
    }
}

impl TsneConfig {
    pub fn new(perplexity: f64) -> Self {
        TsneConfig { perplexity, ..Default::default() }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    /// The default of 200 suits hundreds of points or more; on a few dozen
    /// the layout overshoots and keeps expanding, and 10 to 50 works better.
    pub fn learning_rate(mut self, rate: f64) -> Self {
        self.learning_rate = rate;
        self
    }

    /// Message when the perplexity lies outside the recommended range.
    pub fn perplexity_warning(&self) -> Option<String> {
        let (lo, hi) = RECOMMENDED_PERPLEXITY;
        (self.perplexity < lo || self.perplexity > hi).then(|| {
            format!("perplexity {} is outside the 5–50 recommended range", self.perplexity)
        })
    }

    fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidArgument("iterations must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidArgument("learning rate must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub coords: Vec<[f64; 2]>,
    pub initial_kl: f64,
    pub final_kl: f64,
    /// `(iteration, KL)` pairs, starting with iteration 0.
    pub kl_trace: Vec<(usize, f64)>,
    pub config: TsneConfig,
    pub seed: u64,
}

impl Embedding {
    /// `id,y1,y2` rows, plus a `cluster` column when labels are given.
    pub fn to_csv(&self, labels: Option<&[usize]>, delimiter: u8) -> Result<String> {
        if let Some(l) = labels {
            if l.len() != self.coords.len() {
                return Err(Error::LengthMismatch { left: self.coords.len(), right: l.len() });
            }
        }
        let mut wtr = csv::WriterBuilder::new().delimiter(delimiter).from_writer(Vec::new());
        let mut header = vec!["id", "y1", "y2"];
        if labels.is_some() {
            header.push("cluster");
        }
        wtr.write_record(&header)?;
        for (i, c) in self.coords.iter().enumerate() {
            let mut rec = vec![i.to_string(), c[0].to_string(), c[1].to_string()];
            if let Some(l) = labels {
                rec.push(l[i].to_string());
            }
            wtr.write_record(&rec)?;
        }
        let bytes = wtr.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("utf-8 input"))
    }
}

fn check_points(points: &[Vec<f64>]) -> Result<()> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints { needed: 3, found: points.len() });
    }
    if points.len() > MAX_POINTS {
        return Err(Error::TooManyPoints(points.len()));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("points must be finite".into()));
    }
    Ok(())
}

/// Embeds `points` in 2-D starting from a seeded Gaussian layout.
pub fn fit_tsne(points: &[Vec<f64>], config: &TsneConfig) -> Result<Embedding> {
    check_points(points)?;
    let mut rng = rng::seeded(config.seed);
    let normal = Normal::new(0.0, INIT_STD).expect("valid std");
    let init = (0..points.len()).map(|_| [normal.sample(&mut rng), normal.sample(&mut rng)]).collect();
    fit_tsne_from(points, init, config)
}

/// Embeds `points` in 2-D starting from the given layout.
pub fn fit_tsne_from(points: &[Vec<f64>], init: Vec<[f64; 2]>, config: &TsneConfig) -> Result<Embedding> {
    check_points(points)?;
    config.validate()?;
    if init.len() != points.len() {
        return Err(Error::LengthMismatch { left: points.len(), right: init.len() });
    }
    if let Some(w) = config.perplexity_warning() {
        log::warn!("{w}");
    }
    let cond = calibrate_affinities(&pairwise_sq_dists(points)?, config.perplexity)?;
    let p = symmetrize(&cond);
    // Optimise offsets from the first starting point. The dynamics only see
    // differences, so a translated start yields a translated result.
    let anchor = init[0];
    let rel = init.iter().map(|y| [y[0] - anchor[0], y[1] - anchor[1]]).collect();
    let mut e = optimize(&p, rel, config);
    for y in &mut e.coords {
        y[0] += anchor[0];
        y[1] += anchor[1];
    }
    Ok(e)
}

fn optimize(p: &SquareMatrix, mut y: Vec<[f64; 2]>, config: &TsneConfig) -> Embedding {
    let n = y.len();
    let mut update = vec![[0.0f64; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];

    let num = kernel(&y);
    let initial_kl = kl(p, &num, row_sums_total(&num), 1.0);
    let mut kl_trace = vec![(0, initial_kl)];

    for iter in 0..config.iterations {
        let exaggeration = if iter < EXAGGERATION_ITERS { EXAGGERATION } else { 1.0 };
        let momentum = if iter < MOMENTUM_SWITCH { 0.5 } else { 0.8 };
        let num = kernel(&y);
        let total = row_sums_total(&num);
        let grad = gradient(p, &y, &num, total, exaggeration);
        for i in 0..n {
            for d in 0..2 {
                let g = grad[i][d];
                let gain = &mut gains[i][d];
                *gain = if (g > 0.0) != (update[i][d] > 0.0) { *gain + 0.2 } else { *gain * 0.8 };
                *gain = gain.max(MIN_GAIN);
                update[i][d] = momentum * update[i][d] - config.learning_rate * *gain * g;
                y[i][d] += update[i][d];
            }
        }
        if (iter + 1) % KL_EVERY == 0 {
            let num = kernel(&y);
            kl_trace.push((iter + 1, kl(p, &num, row_sums_total(&num), 1.0)));
        }
    }
    let num = kernel(&y);
    let final_kl = kl(p, &num, row_sums_total(&num), 1.0).max(0.0);
    Embedding { coords: y, initial_kl, final_kl, kl_trace, config: config.clone(), seed: config.seed }
}

/// One-hot codes (schema category order) followed by z-scored numeric
/// columns, in the order given. Returns the matrix and its column names,
/// e.g. `EDUC=1` for indicators. Constant numeric columns become zeros.
pub fn encode_mixed_for_tsne(data: &Dataset, columns: &[&str]) -> Result<(Vec<Vec<f64>>, Vec<String>)> {
    let n = data.n_rows();
    let mut blocks: Vec<Vec<f64>> = Vec::new();
    let mut names = Vec::new();
    for name in columns {
        let col = data.column(name)?;
        if col.is_categorical() {
            let codes = data.codes(name)?;
            if codes.iter().any(Option::is_none) {
                return Err(Error::MissingData(name.to_string()));
            }
            for cat in &col.categories {
                names.push(format!("{name}={}", cat.code));
                blocks.push(codes.iter().map(|c| if *c == Some(cat.code) { 1.0 } else { 0.0 }).collect());
            }
        } else {
            let vals = data.reals(name)?;
            if vals.iter().any(Option::is_none) {
                return Err(Error::MissingData(name.to_string()));
            }
            let vals: Vec<f64> = vals.into_iter().flatten().collect();
            let mean = vals.iter().sum::<f64>() / n.max(1) as f64;
            let std = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n.max(1) as f64).sqrt();
            names.push(name.to_string());
            if std > 0.0 {
                blocks.push(vals.iter().map(|v| (v - mean) / std).collect());
            } else {
                log::warn!("{}", Error::ConstantColumn(name.to_string()));
                blocks.push(vec![0.0; n]);
            }
        }
    }
    let matrix = (0..n).map(|i| blocks.iter().map(|b| b[i]).collect()).collect();
    Ok((matrix, names))
}
