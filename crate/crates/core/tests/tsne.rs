mod common;

use proptest::prelude::*;
use rand::Rng;
use strata_core::tsne::{
    calibrate_affinities, fit_tsne_from, kl_and_gradient, low_dim_affinities, pairwise_sq_dists, symmetrize,
    SquareMatrix,
};
use strata_core::{fit_tsne, TsneConfig};

fn points(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = common::rng(seed);
    (0..n).map(|_| (0..d).map(|_| r.random_range(-5.0..5.0)).collect()).collect()
}

fn coords(n: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut r = common::rng(seed);
    (0..n).map(|_| [r.random_range(-3.0..3.0), r.random_range(-3.0..3.0)]).collect()
}

fn joint(x: &[Vec<f64>], perplexity: f64) -> SquareMatrix {
    symmetrize(&calibrate_affinities(&pairwise_sq_dists(x).unwrap(), perplexity).unwrap())
}

#[test]
fn distances_match_double_loop() {
    let x = points(10, 4, 1);
    let d = pairwise_sq_dists(&x).unwrap();
    for i in 0..10 {
        for j in 0..10 {
            let naive: f64 = x[i].iter().zip(&x[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            assert!((d.get(i, j) - naive).abs() < 1e-12);
            assert_eq!(d.get(i, j), d.get(j, i));
        }
        assert_eq!(d.get(i, i), 0.0);
    }
}

#[test]
fn sigma_grows_with_perplexity() {
    let x = points(60, 5, 2);
    let d = pairwise_sq_dists(&x).unwrap();
    let sigmas: Vec<f64> = [5.0, 10.0, 20.0, 30.0, 45.0]
        .iter()
        .map(|&p| calibrate_affinities(&d, p).unwrap().sigmas[7])
        .collect();
    assert!(sigmas.windows(2).all(|w| w[1] > w[0]), "{sigmas:?}");
}

#[test]
fn joint_matches_elementwise_formula() {
    let x = points(15, 3, 3);
    let cond = calibrate_affinities(&pairwise_sq_dists(&x).unwrap(), 4.0).unwrap();
    let p = symmetrize(&cond);
    for i in 0..15 {
        for j in 0..15 {
            if i != j {
                let want = ((cond.p.get(i, j) + cond.p.get(j, i)) / 30.0).max(1e-12);
                assert!((p.get(i, j) - want).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn gradient_matches_finite_differences() {
    for seed in 0..5 {
        let x = points(12, 4, 100 + seed);
        let p = joint(&x, 3.0);
        let y = coords(12, 200 + seed);
        let (_, grad) = kl_and_gradient(&p, &y).unwrap();
        let h = 1e-5;
        for i in 0..12 {
            for a in 0..2 {
                let mut plus = y.clone();
                let mut minus = y.clone();
                plus[i][a] += h;
                minus[i][a] -= h;
                let fd = (kl_and_gradient(&p, &plus).unwrap().0 - kl_and_gradient(&p, &minus).unwrap().0) / (2.0 * h);
                let rel = (grad[i][a] - fd).abs() / grad[i][a].abs().max(fd.abs()).max(1e-8);
                assert!(rel < 1e-4, "seed {seed} point {i} axis {a}: {} vs {fd}", grad[i][a]);
            }
        }
    }
}

#[test]
fn duplicated_values_form_two_groups() {
    let x: Vec<Vec<f64>> = (0..20).map(|i| vec![if i % 2 == 0 { 0.0 } else { 5.0 }, 1.0]).collect();
    let e = fit_tsne(&x, &TsneConfig::new(2.0).seed(4).learning_rate(20.0)).unwrap();
    let centre = |g: usize| {
        let m: Vec<&[f64; 2]> = e.coords.iter().skip(g).step_by(2).collect();
        let c = [m.iter().map(|p| p[0]).sum::<f64>() / 10.0, m.iter().map(|p| p[1]).sum::<f64>() / 10.0];
        let spread = m.iter().map(|p| ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt()).fold(0.0, f64::max);
        (c, spread)
    };
    let ((a, sa), (b, sb)) = (centre(0), centre(1));
    let between = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
    assert!(sa.max(sb) < 0.01 * between, "{sa} {sb} {between}");
}

#[test]
fn kl_decreases_over_seeds() {
    for seed in 0..20 {
        let x = points(40, 5, 300 + seed);
        let e = fit_tsne(&x, &TsneConfig::new(10.0).seed(seed)).unwrap();
        assert!(e.final_kl < e.initial_kl, "seed {seed}: {} vs {}", e.final_kl, e.initial_kl);
        assert!(e.final_kl >= 0.0 && e.coords.iter().flatten().all(|v| v.is_finite()));
    }
}

#[test]
fn embedding_is_deterministic() {
    let x = points(50, 6, 9);
    let config = TsneConfig::new(12.0).seed(17).iterations(250);
    let a = fit_tsne(&x, &config).unwrap();
    let b = fit_tsne(&x, &config).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_csv(None, b',').unwrap(), b.to_csv(None, b',').unwrap());
}

#[test]
fn translating_the_start_translates_the_result() {
    let x = points(30, 4, 12);
    let mut r = common::rng(13);
    // Start and shifts on a binary grid, so the shifted start is exact.
    let init: Vec<[f64; 2]> =
        (0..30).map(|_| [r.random_range(-512..512) as f64 / 65536.0, r.random_range(-512..512) as f64 / 65536.0]).collect();
    for (config, shift) in [
        (TsneConfig::new(8.0).iterations(400).learning_rate(20.0), [3.25, -1.5]),
        (TsneConfig::new(8.0), [-40.0, 0.125]),
    ] {
        let moved = init.iter().map(|p| [p[0] + shift[0], p[1] + shift[1]]).collect();
        let a = fit_tsne_from(&x, init.clone(), &config).unwrap();
        let b = fit_tsne_from(&x, moved, &config).unwrap();
        assert_eq!(a.kl_trace, b.kl_trace);
        for (p, q) in a.coords.iter().zip(&b.coords) {
            assert!((q[0] - p[0] - shift[0]).abs() < 1e-6 && (q[1] - p[1] - shift[1]).abs() < 1e-6, "{p:?} {q:?}");
        }
    }
}

#[test]
fn planted_blobs_are_recovered() {
    let centers: Vec<Vec<f64>> = (0..3).map(|c| (0..10).map(|j| if j == c * 3 { 8.0 } else { 0.0 }).collect()).collect();
    let (x, labels) = common::blobs(&centers, 100, 1.0, 21);
    let e = fit_tsne(&x, &TsneConfig::new(30.0).seed(5)).unwrap();
    let mut cent = [[0.0f64; 2]; 3];
    for (p, &l) in e.coords.iter().zip(&labels) {
        cent[l][0] += p[0] / 100.0;
        cent[l][1] += p[1] / 100.0;
    }
    let hits = e
        .coords
        .iter()
        .zip(&labels)
        .filter(|(p, &l)| {
            let d = |c: &[f64; 2]| (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2);
            (0..3).min_by(|&a, &b| d(&cent[a]).total_cmp(&d(&cent[b]))).unwrap() == l
        })
        .count();
    assert!(hits >= 285, "{hits}/300");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn affinity_rows_are_calibrated(seed in any::<u64>(), n in 8usize..40, perplexity in 2.0f64..6.0) {
        let x = points(n, 3, seed);
        let aff = calibrate_affinities(&pairwise_sq_dists(&x).unwrap(), perplexity).unwrap();
        for i in 0..n {
            let row = aff.p.row(i);
            prop_assert_eq!(row[i], 0.0);
            prop_assert!(row.iter().all(|&v| v >= 0.0));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let h: f64 = -row.iter().filter(|&&v| v > 0.0).map(|&v| v * v.log2()).sum::<f64>();
            prop_assert!((h.exp2() - perplexity).abs() < 1e-4, "row {}: {}", i, h.exp2());
            prop_assert!((aff.row_perplexity(i) - perplexity).abs() < 1e-4);
        }
    }

    #[test]
    fn p_and_q_are_distributions(seed in any::<u64>(), n in 4usize..30) {
        let x = points(n, 3, seed);
        let p = joint(&x, 2.5);
        prop_assert!((p.sum() - 1.0).abs() < 1e-9);
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(p.get(i, j), p.get(j, i));
            }
        }
        let y = coords(n, seed ^ 1);
        let (q, num) = low_dim_affinities(&y);
        prop_assert!((q.sum() - 1.0).abs() < 1e-9);
        for i in 0..n {
            prop_assert_eq!(num.get(i, i), 0.0);
            for j in 0..n {
                if i != j {
                    let d2 = (y[i][0] - y[j][0]).powi(2) + (y[i][1] - y[j][1]).powi(2);
                    prop_assert!((num.get(i, j) - 1.0 / (1.0 + d2)).abs() < 1e-15);
                }
            }
        }
        let (kl, _) = kl_and_gradient(&p, &y).unwrap();
        prop_assert!(kl >= 0.0);
    }
}
