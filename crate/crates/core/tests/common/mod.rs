//! Brute-force oracles and small fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Code = i64;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Every split of `0..n` into two non-empty groups, as 0/1 labels with
/// point 0 always in group 0.
pub fn two_partitions(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0u32..1 << (n - 1)).filter(|&m| m != 0).map(move |mask| {
        (0..n).map(|i| if i == 0 { 0 } else { ((mask >> (i - 1)) & 1) as usize }).collect()
    })
}

fn mode_cost(rows: &[Vec<Code>], members: &[usize]) -> f64 {
    let m = rows[0].len();
    let mut cost = 0;
    for j in 0..m {
        let mut counts: HashMap<Code, usize> = HashMap::new();
        for &i in members {
            *counts.entry(rows[i][j]).or_default() += 1;
        }
        cost += members.len() - counts.values().max().copied().unwrap_or(0);
    }
    cost as f64
}

/// Optimal k = 2 K-Modes cost by enumerating every partition.
pub fn kmodes_optimum(rows: &[Vec<Code>]) -> f64 {
    two_partitions(rows.len())
        .map(|labels| {
            (0..2)
                .map(|g| {
                    let members: Vec<usize> = (0..rows.len()).filter(|&i| labels[i] == g).collect();
                    mode_cost(rows, &members)
                })
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

fn wcss(rows: &[Vec<f64>], members: &[usize]) -> f64 {
    let p = rows[0].len();
    let mut total = 0.0;
    for j in 0..p {
        let mean = members.iter().map(|&i| rows[i][j]).sum::<f64>() / members.len() as f64;
        total += members.iter().map(|&i| (rows[i][j] - mean).powi(2)).sum::<f64>();
    }
    total
}

/// Optimal k = 2 within-cluster sum of squares and a partition achieving it.
pub fn kmeans_optimum(rows: &[Vec<f64>]) -> (f64, Vec<usize>) {
    let mut best = (f64::INFINITY, Vec::new());
    for labels in two_partitions(rows.len()) {
        let cost: f64 = (0..2)
            .map(|g| {
                let members: Vec<usize> = (0..rows.len()).filter(|&i| labels[i] == g).collect();
                wcss(rows, &members)
            })
            .sum();
        if cost < best.0 {
            best = (cost, labels);
        }
    }
    best
}

/// True when two label vectors describe the same grouping.
pub fn same_partition(a: &[usize], b: &[usize]) -> bool {
    let mut fwd = HashMap::new();
    let mut back = HashMap::new();
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| *fwd.entry(x).or_insert(y) == y && *back.entry(y).or_insert(x) == x)
}

/// Small random categorical instance: n in 4..=8 rows, m in 1..=3 columns.
pub fn small_codes(rng: &mut ChaCha8Rng) -> Vec<Vec<Code>> {
    let n = rng.random_range(4..=8);
    let m = rng.random_range(1..=3);
    (0..n).map(|_| (0..m).map(|_| rng.random_range(1..=3)).collect()).collect()
}

pub fn small_reals(rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = rng.random_range(4..=8);
    let p = rng.random_range(1..=3);
    (0..n).map(|_| (0..p).map(|_| rng.random_range(-10.0..10.0)).collect()).collect()
}

/// Isotropic Gaussian blobs in `dim` dimensions; returns points and labels.
pub fn blobs(centers: &[Vec<f64>], per: usize, sd: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    use rand_distr::{Distribution, Normal};
    let mut r = rng(seed);
    let noise = Normal::new(0.0, sd).unwrap();
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..per {
            points.push(center.iter().map(|x| x + noise.sample(&mut r)).collect());
            labels.push(c);
        }
    }
    (points, labels)
}
