mod common;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use strata_core::kmodes::{column_modes, hamming, InitMethod};
use strata_core::kprototypes::{mixed_distance, Prototype};
use strata_core::{
    centroid_table, demo, elbow_sweep, fit_kmodes, fit_kprototypes, CategoricalMatrix, KModesConfig,
    KPrototypesConfig, MixedMatrix,
};

type Code = i64;

fn codes(max_n: usize, max_m: usize, max_code: Code) -> impl Strategy<Value = Vec<Vec<Code>>> {
    (2..=max_n, 1..=max_m)
        .prop_flat_map(move |(n, m)| prop::collection::vec(prop::collection::vec(1..=max_code, m), n))
}

fn mixed(max_n: usize) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Vec<Code>>)> {
    (3..=max_n, 1usize..=3, 1usize..=3).prop_flat_map(|(n, p, q)| {
        (
            prop::collection::vec(prop::collection::vec(-50.0f64..50.0, p), n),
            prop::collection::vec(prop::collection::vec(1i64..=3, q), n),
        )
    })
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|j| format!("{prefix}{j}")).collect()
}

fn matrix(num: &[Vec<f64>], cat: &[Vec<Code>]) -> MixedMatrix {
    MixedMatrix::new(num.to_vec(), cat.to_vec(), names("x", num[0].len()), names("c", cat[0].len())).unwrap()
}

fn modes_oracle(rows: &[Vec<Code>], members: &[usize]) -> Vec<Code> {
    // Most frequent code per column, earliest member first among ties.
    (0..rows[0].len())
        .map(|j| {
            let count = |c: Code| members.iter().filter(|&&i| rows[i][j] == c).count();
            let best = members.iter().map(|&i| count(rows[i][j])).max().unwrap();
            members.iter().map(|&i| rows[i][j]).find(|&c| count(c) == best).unwrap()
        })
        .collect()
}

proptest! {
    #[test]
    fn hamming_is_a_metric(rows in prop::collection::vec(prop::collection::vec(1i64..=4, 6), 3)) {
        let (x, y, z) = (&rows[0], &rows[1], &rows[2]);
        let d = |a: &[Code], b: &[Code]| hamming(a, b).unwrap();
        prop_assert_eq!(d(x, y), d(y, x));
        prop_assert_eq!(d(x, y) == 0, x == y);
        prop_assert!(d(x, z) <= d(x, y) + d(y, z));
        prop_assert_eq!(d(x, y), x.iter().zip(y).filter(|(a, b)| a != b).count());
    }

    #[test]
    fn kmodes_fit_is_self_consistent(rows in codes(30, 5, 4), k in 1usize..5, seed in any::<u64>()) {
        prop_assume!(k <= rows.len());
        let points = CategoricalMatrix::new(rows.clone()).unwrap();
        let model = fit_kmodes(&points, &KModesConfig::new(k).seed(seed).restarts(3)).unwrap();
        prop_assert!(model.assignments.iter().all(|&a| a < k));
        prop_assert_eq!(model.cost, model.recompute_cost(&points));
        let direct: usize = rows.iter().zip(&model.assignments).map(|(r, &a)| hamming(r, &model.modes[a]).unwrap()).sum();
        prop_assert_eq!(model.cost, direct as f64);
        prop_assert!(model.cost_trace.windows(2).all(|w| w[1] <= w[0]), "{:?}", model.cost_trace);
        if model.converged {
            for (r, &a) in rows.iter().zip(&model.assignments) {
                let own = hamming(r, &model.modes[a]).unwrap();
                prop_assert!(model.modes.iter().all(|m| hamming(r, m).unwrap() >= own));
            }
        }
    }

    #[test]
    fn modes_follow_frequency_then_first_seen(rows in codes(20, 4, 3)) {
        let points = CategoricalMatrix::new(rows.clone()).unwrap();
        let members: Vec<usize> = (0..rows.len()).filter(|i| i % 3 != 1).collect();
        prop_assert_eq!(column_modes(&points, &members).unwrap(), modes_oracle(&rows, &members));
        prop_assert_eq!(column_modes(&points, &[1]).unwrap(), rows[1].clone());
    }

    #[test]
    fn relabeling_codes_keeps_the_partition(rows in codes(40, 4, 4), k in 2usize..5, seed in any::<u64>(), shuffle in any::<u64>()) {
        prop_assume!(k <= rows.len());
        let mut r = common::rng(shuffle);
        let maps: Vec<Vec<Code>> = (0..rows[0].len())
            .map(|_| {
                let mut m: Vec<Code> = (10..14).collect();
                m.shuffle(&mut r);
                m
            })
            .collect();
        let relabeled: Vec<Vec<Code>> = rows
            .iter()
            .map(|row| row.iter().enumerate().map(|(j, &c)| maps[j][(c - 1) as usize]).collect())
            .collect();
        let config = KModesConfig::new(k).seed(seed).restarts(4).init(InitMethod::RandomPoints);
        let a = fit_kmodes(&CategoricalMatrix::new(rows).unwrap(), &config).unwrap();
        let b = fit_kmodes(&CategoricalMatrix::new(relabeled).unwrap(), &config).unwrap();
        prop_assert_eq!(a.cost, b.cost);
        prop_assert!(common::same_partition(&a.assignments, &b.assignments));
    }

    #[test]
    fn elbow_is_non_increasing(rows in codes(25, 4, 3), seed in any::<u64>()) {
        let points = CategoricalMatrix::new(rows.clone()).unwrap();
        let hi = rows.len().min(6);
        let curve = elbow_sweep(&points, 1..=hi, seed, 2).unwrap();
        prop_assert_eq!(curve.len(), hi);
        prop_assert!(curve.windows(2).all(|w| w[1].1 <= w[0].1), "{:?}", curve);
        let all: Vec<usize> = (0..rows.len()).collect();
        let global = modes_oracle(&rows, &all);
        let one: usize = rows.iter().map(|r| hamming(r, &global).unwrap()).sum();
        prop_assert_eq!(curve[0].1, one as f64);
    }

    #[test]
    fn kproto_fit_is_self_consistent((num, cat) in mixed(25), k in 1usize..4, seed in any::<u64>(), standardize in any::<bool>()) {
        prop_assume!(k <= num.len());
        let points = matrix(&num, &cat);
        let config = KPrototypesConfig::new(k).seed(seed).restarts(2).standardize(standardize);
        let model = fit_kprototypes(&points, &config).unwrap();
        prop_assert!(model.assignments.iter().all(|&a| a < k));
        prop_assert!((model.cost - model.recompute_cost(&points)).abs() <= 1e-9 * model.cost.max(1.0));
        prop_assert!(model.cost_trace.windows(2).all(|w| w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0)), "{:?}", model.cost_trace);
        let cat_points = CategoricalMatrix::new(cat.clone()).unwrap();
        for l in 0..k {
            let members: Vec<usize> = (0..num.len()).filter(|&i| model.assignments[i] == l).collect();
            prop_assert!(!members.is_empty());
            for j in 0..num[0].len() {
                let mean = members.iter().map(|&i| num[i][j]).sum::<f64>() / members.len() as f64;
                let got = model.prototypes[l].numeric[j];
                prop_assert!((got - mean).abs() <= 1e-9 * mean.abs().max(1.0), "{} vs {}", got, mean);
            }
            prop_assert_eq!(&model.prototypes[l].categorical, &column_modes(&cat_points, &members).unwrap());
        }
        if model.converged {
            for i in 0..num.len() {
                let d = model.distances(&points, i);
                let min = d.iter().cloned().fold(f64::INFINITY, f64::min);
                prop_assert!(d[model.assignments[i]] <= min + 1e-9 * min.max(1.0));
            }
        }
    }

    #[test]
    fn zero_gamma_leaves_numeric_wcss((num, cat) in mixed(20), seed in any::<u64>()) {
        let points = matrix(&num, &cat);
        let model = fit_kprototypes(&points, &KPrototypesConfig::new(2).seed(seed).gamma(0.0).standardize(false).restarts(2)).unwrap();
        let mut wcss = 0.0;
        for (row, &a) in num.iter().zip(&model.assignments) {
            wcss += row.iter().zip(&model.prototypes[a].numeric).map(|(x, m)| (x - m).powi(2)).sum::<f64>();
        }
        prop_assert!((model.cost - wcss).abs() <= 1e-9 * wcss.max(1.0), "{} vs {}", model.cost, wcss);
    }

    #[test]
    fn scaling_a_column_keeps_the_partition((num, cat) in mixed(25), seed in any::<u64>(), e in -3i32..=3) {
        let c = 2f64.powi(e);
        let scaled: Vec<Vec<f64>> = num.iter().map(|r| { let mut r = r.clone(); r[0] *= c; r }).collect();
        let config = KPrototypesConfig::new(3).seed(seed).restarts(2);
        let a = fit_kprototypes(&matrix(&num, &cat), &config).unwrap();
        let b = fit_kprototypes(&matrix(&scaled, &cat), &config).unwrap();
        prop_assert!(common::same_partition(&a.assignments, &b.assignments));
        for (pa, pb) in a.prototypes.iter().zip(&b.prototypes) {
            prop_assert!((pb.numeric[0] - c * pa.numeric[0]).abs() <= 1e-9 * pb.numeric[0].abs().max(1.0));
        }
    }
}

#[test]
fn scaling_by_three_keeps_the_partition() {
    let mut r = common::rng(3);
    let num: Vec<Vec<f64>> = (0..60).map(|_| vec![r.random_range(0.0..40.0), r.random_range(0.0..9.0)]).collect();
    let cat: Vec<Vec<Code>> = (0..60).map(|_| vec![r.random_range(1..=2), r.random_range(1..=3)]).collect();
    let scaled: Vec<Vec<f64>> = num.iter().map(|v| vec![3.0 * v[0], v[1]]).collect();
    let config = KPrototypesConfig::new(4).seed(9);
    let a = fit_kprototypes(&matrix(&num, &cat), &config).unwrap();
    let b = fit_kprototypes(&matrix(&scaled, &cat), &config).unwrap();
    assert!(common::same_partition(&a.assignments, &b.assignments));
    for (pa, pb) in a.prototypes.iter().zip(&b.prototypes) {
        assert!((pb.numeric[0] - 3.0 * pa.numeric[0]).abs() < 1e-9 * pb.numeric[0].abs().max(1.0));
    }
}

#[test]
fn kmodes_matches_exhaustive_optimum() {
    let mut r = common::rng(2024);
    let mut hits = 0;
    for _ in 0..50 {
        let rows = common::small_codes(&mut r);
        let best = common::kmodes_optimum(&rows);
        let model = fit_kmodes(&CategoricalMatrix::new(rows).unwrap(), &KModesConfig::new(2).seed(1).restarts(50)).unwrap();
        assert!(model.cost >= best);
        hits += (model.cost == best) as usize;
    }
    assert!(hits >= 48, "{hits}/50");
}

#[test]
fn numeric_only_kproto_matches_exhaustive_kmeans() {
    let mut r = common::rng(77);
    for _ in 0..30 {
        let rows = common::small_reals(&mut r);
        let (best, partition) = common::kmeans_optimum(&rows);
        let points = MixedMatrix::numeric_only(rows).unwrap();
        let model = fit_kprototypes(&points, &KPrototypesConfig::new(2).seed(1).restarts(50).standardize(false)).unwrap();
        assert!((model.cost - best).abs() <= 1e-9 * best.max(1.0), "{} vs {best}", model.cost);
        assert!(common::same_partition(&model.assignments, &partition));
    }
}

#[test]
fn categorical_only_kproto_is_scaled_kmodes() {
    let mut r = common::rng(5);
    for seed in 0..20u64 {
        let n = r.random_range(10..60);
        let rows: Vec<Vec<Code>> = (0..n).map(|_| (0..4).map(|_| r.random_range(1..=3)).collect()).collect();
        let k = r.random_range(1..=4);
        let gamma = [0.5, 1.0, 2.5][seed as usize % 3];
        let kp = fit_kprototypes(
            &MixedMatrix::categorical_only(rows.clone()).unwrap(),
            &KPrototypesConfig::new(k).seed(seed).gamma(gamma),
        )
        .unwrap();
        let km = fit_kmodes(&CategoricalMatrix::new(rows).unwrap(), &KModesConfig::new(k).seed(seed)).unwrap();
        assert_eq!(kp.assignments, km.assignments);
        assert_eq!(kp.cost, gamma * km.cost);
    }
}

#[test]
fn planted_groups_flatten_after_three() {
    let groups: [[Code; 6]; 3] = [[1, 1, 1, 1, 1, 1], [2, 2, 2, 1, 1, 1], [1, 1, 2, 2, 2, 2]];
    let mut r = common::rng(8);
    let rows: Vec<Vec<Code>> = (0..300)
        .map(|i| {
            groups[i % 3]
                .iter()
                .map(|&c| if r.random_bool(0.05) { r.random_range(1..=2) } else { c })
                .collect()
        })
        .collect();
    let curve = elbow_sweep(&CategoricalMatrix::new(rows).unwrap(), 1..=6, 3, 5).unwrap();
    let drops: Vec<f64> = curve.windows(2).map(|w| (w[0].1 - w[1].1) / w[0].1).collect();
    let biggest = drops.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0 + 2;
    assert!(biggest <= 3, "{curve:?}");
    assert!(drops[2..].iter().all(|&d| d < 0.2), "{curve:?}");
}

#[test]
fn distance_examples() {
    let proto = Prototype { numeric: vec![1.0, 2.0], categorical: vec![1, 2, 3] };
    assert_eq!(mixed_distance(&[1.0, 2.0], &[1, 2, 3], &proto, 0.7).unwrap(), 0.0);
    assert_eq!(mixed_distance(&[4.0, 2.0], &[1, 2, 3], &proto, 123.0).unwrap(), 9.0);
    assert_eq!(mixed_distance(&[1.0, 2.0], &[2, 1, 3], &proto, 0.5).unwrap(), 1.0);
    assert!(mixed_distance(&[1.0], &[1, 2, 3], &proto, 0.5).is_err());
}

#[test]
fn demo_centroid_table_has_the_expected_shape() {
    let spec = demo::spec(1500, 3);
    let (data, _) = strata_core::synth::generate(&spec, &demo::schema()).unwrap();
    let (data, _) = strata_core::ingest::complete_cases(&data, &demo::CLUSTER_COLUMNS).unwrap();
    let points = MixedMatrix::from_dataset(&data, &demo::CLUSTER_COLUMNS).unwrap();
    let model = fit_kprototypes(&points, &KPrototypesConfig::new(5).seed(42)).unwrap();
    let table = centroid_table(&model, &demo::schema()).unwrap();
    assert_eq!(table.rows.len(), 5);
    assert_eq!(table.header.len(), 2 + 10);
    assert_eq!(table.rows.iter().map(|r| r.size).sum::<usize>(), data.n_rows());
    for row in &table.rows {
        assert_eq!((row.numeric.len(), row.codes.len(), row.cells.len()), (2, 8, 10));
    }
    let citizen = table.header.iter().position(|h| h == demo::CITIZEN).unwrap() - 2;
    let yes = table.rows.iter().find(|r| r.codes[citizen - 2] == 1).unwrap();
    assert!(yes.cells[citizen].starts_with("1 (Yes"), "{}", yes.cells[citizen]);

    // Recomputing means and modes from the assignments reproduces the table.
    let cats = CategoricalMatrix::from_dataset(&data, &demo::CATEGORICAL_COLUMNS).unwrap();
    for row in &table.rows {
        let members: Vec<usize> = (0..data.n_rows()).filter(|&i| model.assignments[i] == row.cluster).collect();
        assert_eq!(row.codes, column_modes(&cats, &members).unwrap());
        for (j, name) in [demo::HOURS, demo::DAYS_MISSED].iter().enumerate() {
            let col = data.reals(name).unwrap();
            let mean = members.iter().map(|&i| col[i].unwrap()).sum::<f64>() / members.len() as f64;
            assert!((row.numeric[j] - mean).abs() < 1e-9 * mean.abs().max(1.0));
            assert!(row.cells[j].starts_with(&format!("{mean:.2}")));
        }
    }
}
