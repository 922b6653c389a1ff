//! Contingency-table inference: the chi-square test of independence and the
//! pooled two-proportion z-test.
//!
//! Neither test applies a continuity correction. Condition checks never
//! block a computation; they are attached to the result so callers can
//! decide whether to warn or fail.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Dataset;
use crate::special::{chi_square_sf, normal_sf};

/// Minimum expected count per cell for the chi-square approximation.
pub const MIN_EXPECTED_COUNT: f64 = 5.0;
/// Minimum `n p_c` and `n (1 - p_c)` per group for the z-test.
pub const MIN_SUCCESS_FAILURE: f64 = 10.0;
/// Largest sample fraction of the population for the independence condition.
pub const MAX_SAMPLE_FRACTION: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub observed: Vec<Vec<u64>>,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
}

impl ContingencyTable {
    pub fn new(observed: Vec<Vec<u64>>, row_labels: Vec<String>, col_labels: Vec<String>) -> Result<Self> {
        let r = observed.len();
        let c = observed.first().map_or(0, Vec::len);
        if r < 2 || c < 2 {
            return Err(Error::InvalidTable(format!("need at least 2x2, got {r}x{c}")));
        }
        if observed.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidTable("ragged rows".into()));
        }
        if row_labels.len() != r || col_labels.len() != c {
            return Err(Error::InvalidTable("label count does not match table shape".into()));
        }
        Ok(ContingencyTable { observed, row_labels, col_labels })
    }

    /// Table with generated labels `r1..`, `c1..`.
    pub fn from_counts(observed: Vec<Vec<u64>>) -> Result<Self> {
        let r = observed.len();
        let c = observed.first().map_or(0, Vec::len);
        Self::new(
            observed,
            (1..=r).map(|i| format!("r{i}")).collect(),
            (1..=c).map(|j| format!("c{j}")).collect(),
        )
    }

    pub fn n_rows(&self) -> usize {
        self.observed.len()
    }

    pub fn n_cols(&self) -> usize {
        self.observed[0].len()
    }

    pub fn row_totals(&self) -> Vec<u64> {
        self.observed.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_totals(&self) -> Vec<u64> {
        (0..self.n_cols()).map(|j| self.observed.iter().map(|r| r[j]).sum()).collect()
    }

    pub fn total(&self) -> u64 {
        self.observed.iter().flatten().sum()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// Asserted by the caller; the data cannot show how it was sampled.
    pub random_ok: bool,
    pub counts_ok: bool,
    /// Cells (or `(group, outcome)` pairs for the z-test) under the threshold.
    pub offending_cells: Vec<(usize, usize)>,
    /// `None` when no population size was supplied.
    pub independence_ok: Option<bool>,
    pub details: Vec<String>,
}

impl ConditionReport {
    pub fn all_pass(&self) -> bool {
        self.random_ok && self.counts_ok && self.independence_ok.unwrap_or(true)
    }

    fn check_independence(&mut self, sample_n: u64, population_n: Option<u64>) {
        if let Some(pop) = population_n {
            let limit = MAX_SAMPLE_FRACTION * pop as f64;
            let ok = sample_n as f64 <= limit;
            self.independence_ok = Some(ok);
            self.details.push(format!(
                "independence: n = {sample_n} {} 10% of N = {limit}",
                if ok { "<=" } else { ">" }
            ));
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
    pub alpha: f64,
    pub reject_null: bool,
    pub expected: Vec<Vec<f64>>,
    pub conditions: ConditionReport,
}

impl ChiSquareResult {
    pub fn verdict(&self) -> String {
        verdict(self.reject_null, self.alpha)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    Greater,
    Less,
    TwoSided,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoPropZResult {
    pub p1: f64,
    pub p2: f64,
    pub pooled: f64,
    pub z: f64,
    pub p_value: f64,
    pub alternative: Alternative,
    pub alpha: f64,
    pub reject_null: bool,
    pub conditions: ConditionReport,
}

impl TwoPropZResult {
    pub fn verdict(&self) -> String {
        verdict(self.reject_null, self.alpha)
    }
}

fn verdict(reject: bool, alpha: f64) -> String {
    if reject {
        format!("reject H0 at alpha={alpha}")
    } else {
        format!("fail to reject H0 at alpha={alpha}")
    }
}

/// Cross-tabulates two categorical columns. Rows and columns follow the
/// schema's category order; missing cells are skipped.
pub fn crosstab(data: &Dataset, row_col: &str, col_col: &str) -> Result<ContingencyTable> {
    let rs = data.column(row_col)?;
    let cs = data.column(col_col)?;
    let row_codes = data.codes(row_col)?;
    let col_codes = data.codes(col_col)?;
    let mut observed = vec![vec![0u64; cs.categories.len()]; rs.categories.len()];
    for (a, b) in row_codes.iter().zip(&col_codes) {
        if let (Some(a), Some(b)) = (a, b) {
            // Dataset construction guarantees every code is declared.
            let i = rs.code_index(*a).expect("declared code");
            let j = cs.code_index(*b).expect("declared code");
            observed[i][j] += 1;
        }
    }
    ContingencyTable::new(
        observed,
        rs.categories.iter().map(|c| c.label.clone()).collect(),
        cs.categories.iter().map(|c| c.label.clone()).collect(),
    )
}

/// `E_ij = row_i * col_j / total`.
pub fn expected_counts(table: &ContingencyTable) -> Result<Vec<Vec<f64>>> {
    let total = table.total();
    if total == 0 {
        return Err(Error::EmptyTable);
    }
    let rows = table.row_totals();
    let cols = table.col_totals();
    Ok(rows
        .iter()
        .map(|&r| cols.iter().map(|&c| r as f64 * c as f64 / total as f64).collect())
        .collect())
}

pub fn chi_square_independence(
    table: &ContingencyTable,
    alpha: f64,
    population_n: Option<u64>,
) -> Result<ChiSquareResult> {
    let expected = expected_counts(table)?;
    if let Some(i) = table.row_totals().iter().position(|&t| t == 0) {
        return Err(Error::DegenerateMargins(format!("row `{}` has zero total", table.row_labels[i])));
    }
    if let Some(j) = table.col_totals().iter().position(|&t| t == 0) {
        return Err(Error::DegenerateMargins(format!("column `{}` has zero total", table.col_labels[j])));
    }

    let mut statistic = 0.0;
    for (obs_row, exp_row) in table.observed.iter().zip(&expected) {
        for (&o, &e) in obs_row.iter().zip(exp_row) {
            let d = o as f64 - e;
            statistic += d * d / e;
        }
    }
    let df = ((table.n_rows() - 1) * (table.n_cols() - 1)) as u32;
    let p_value = chi_square_sf(statistic, df);

    let mut conditions = ConditionReport { random_ok: true, counts_ok: true, ..Default::default() };
    for (i, row) in expected.iter().enumerate() {
        for (j, &e) in row.iter().enumerate() {
            if e < MIN_EXPECTED_COUNT {
                conditions.counts_ok = false;
                conditions.offending_cells.push((i, j));
            }
        }
    }
    conditions.details.push(format!(
        "expected counts >= {MIN_EXPECTED_COUNT}: {}",
        if conditions.counts_ok { "satisfied" } else { "violated" }
    ));
    conditions.check_independence(table.total(), population_n);

    Ok(ChiSquareResult {
        statistic,
        df,
        p_value,
        alpha,
        reject_null: p_value < alpha,
        expected,
        conditions,
    })
}

/// Pooled two-proportion z-test of `p1 - p2` against zero.
pub fn two_prop_z(
    x1: u64,
    n1: u64,
    x2: u64,
    n2: u64,
    alternative: Alternative,
    alpha: f64,
    population_n: Option<u64>,
) -> Result<TwoPropZResult> {
    if n1 == 0 || n2 == 0 || x1 > n1 || x2 > n2 {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= x <= n and n > 0, got {x1}/{n1} and {x2}/{n2}"
        )));
    }
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let p1 = x1 as f64 / n1f;
    let p2 = x2 as f64 / n2f;
    let pooled = (x1 + x2) as f64 / (n1 + n2) as f64;
    if pooled == 0.0 || pooled == 1.0 {
        return Err(Error::DegeneratePool(pooled));
    }
    let se = (pooled * (1.0 - pooled) * (1.0 / n1f + 1.0 / n2f)).sqrt();
    let z = (p1 - p2) / se;
    let p_value = match alternative {
        Alternative::Greater => normal_sf(z),
        Alternative::Less => normal_sf(-z),
        Alternative::TwoSided => (2.0 * normal_sf(z.abs())).min(1.0),
    };

    let mut conditions = ConditionReport { random_ok: true, counts_ok: true, ..Default::default() };
    for (g, n) in [n1f, n2f].into_iter().enumerate() {
        for (o, v) in [n * pooled, n * (1.0 - pooled)].into_iter().enumerate() {
            if v < MIN_SUCCESS_FAILURE {
                conditions.counts_ok = false;
                conditions.offending_cells.push((g, o));
            }
        }
        conditions.details.push(format!(
            "group {}: n p_c = {:.1}, n (1 - p_c) = {:.1}",
            g + 1,
            n * pooled,
            n * (1.0 - pooled)
        ));
    }
    conditions.check_independence(n1 + n2, population_n);

    Ok(TwoPropZResult {
        p1,
        p2,
        pooled,
        z,
        p_value,
        alternative,
        alpha,
        reject_null: p_value < alpha,
        conditions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Cell, ColumnSchema};
    use approx::assert_abs_diff_eq;

    fn table(counts: &[&[u64]]) -> ContingencyTable {
        ContingencyTable::from_counts(counts.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn table3_expected_counts() {
        let e = expected_counts(&table(&[&[1217, 164], &[109, 10]])).unwrap();
        let rounded: Vec<Vec<f64>> = e.iter().map(|r| r.iter().map(|v| v.round()).collect()).collect();
        assert_eq!(rounded, vec![vec![1221.0, 160.0], vec![105.0, 14.0]]);
        assert_abs_diff_eq!(e[0][0], 1220.802, epsilon = 5e-3);
        assert_abs_diff_eq!(e[1][1], 13.802, epsilon = 5e-3);
    }

    #[test]
    fn uniform_expected() {
        let e = expected_counts(&table(&[&[5, 5], &[5, 5]])).unwrap();
        assert!(e.iter().flatten().all(|&v| v == 5.0));
    }

    #[test]
    fn empty_table() {
        assert!(matches!(expected_counts(&table(&[&[0, 0], &[0, 0]])), Err(Error::EmptyTable)));
    }

    #[test]
    fn table3_chi_square() {
        let res = chi_square_independence(&table(&[&[1217, 164], &[109, 10]]), 0.05, Some(29_500)).unwrap();
        assert_abs_diff_eq!(res.statistic, 1.288, epsilon = 5e-3);
        assert_eq!(res.df, 1);
        assert_abs_diff_eq!(res.p_value, 0.2564, epsilon = 1e-3);
        assert!(res.conditions.all_pass());
        assert!(!res.reject_null);
        assert!(res.verdict().starts_with("fail to reject"));
    }

    #[test]
    fn perfect_independence() {
        let res = chi_square_independence(&table(&[&[10, 20], &[30, 60]]), 0.05, None).unwrap();
        assert_eq!(res.statistic, 0.0);
        assert_eq!(res.p_value, 1.0);
    }

    #[test]
    fn hand_computed_statistic() {
        // All E = 15, each cell contributes 25/15.
        let res = chi_square_independence(&table(&[&[20, 10], &[10, 20]]), 0.05, None).unwrap();
        assert_abs_diff_eq!(res.statistic, 100.0 / 15.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_margin_is_an_error() {
        let res = chi_square_independence(&table(&[&[3, 0], &[4, 0]]), 0.05, None);
        assert!(matches!(res, Err(Error::DegenerateMargins(_))));
    }

    #[test]
    fn low_expected_counts_are_flagged() {
        let res = chi_square_independence(&table(&[&[30, 2], &[30, 1]]), 0.05, Some(100)).unwrap();
        assert!(!res.conditions.counts_ok);
        assert_eq!(res.conditions.offending_cells, vec![(0, 1), (1, 1)]);
        assert_eq!(res.conditions.independence_ok, Some(false));
    }

    #[test]
    fn table5_z_test() {
        let res = two_prop_z(1008, 1388, 63, 112, Alternative::Greater, 0.05, Some(29_500)).unwrap();
        assert_abs_diff_eq!(res.pooled, 0.714, epsilon = 5e-4);
        assert_abs_diff_eq!(res.z, 3.6884, epsilon = 1e-3);
        assert_abs_diff_eq!(res.p_value, 0.00011, epsilon = 2e-5);
        assert!(res.reject_null);
        assert!(res.conditions.all_pass());
    }

    #[test]
    fn equal_proportions() {
        let res = two_prop_z(10, 20, 5, 10, Alternative::Greater, 0.05, None).unwrap();
        assert_eq!(res.z, 0.0);
        assert_eq!(res.p_value, 0.5);
        let res = two_prop_z(10, 20, 5, 10, Alternative::Less, 0.05, None).unwrap();
        assert_eq!(res.p_value, 0.5);
    }

    #[test]
    fn small_groups_fail_count_condition() {
        let res = two_prop_z(8, 10, 2, 10, Alternative::Greater, 0.05, None).unwrap();
        assert!(!res.conditions.counts_ok);
        // pooled = 0.5, so every n p_c = 5 < 10.
        assert_eq!(res.conditions.offending_cells.len(), 4);
    }

    #[test]
    fn degenerate_pool() {
        assert!(matches!(
            two_prop_z(0, 10, 0, 5, Alternative::Greater, 0.05, None),
            Err(Error::DegeneratePool(p)) if p == 0.0
        ));
        assert!(matches!(
            two_prop_z(10, 10, 5, 5, Alternative::TwoSided, 0.05, None),
            Err(Error::DegeneratePool(p)) if p == 1.0
        ));
        assert!(two_prop_z(11, 10, 5, 5, Alternative::TwoSided, 0.05, None).is_err());
    }

    #[test]
    fn crosstab_single_row_and_labels() {
        let schema = vec![
            ColumnSchema::categorical("R", &[(1, "a"), (2, "b")], &[]),
            ColumnSchema::categorical("C", &[(1, "x"), (2, "y"), (3, "z")], &[9]),
            ColumnSchema::numeric("N", &[]),
        ];
        let d = Dataset::new(schema.clone(), vec![vec![Cell::Code(2), Cell::Code(3), Cell::Real(1.0)]]).unwrap();
        let t = crosstab(&d, "R", "C").unwrap();
        assert_eq!(t.observed, vec![vec![0, 0, 0], vec![0, 0, 1]]);
        assert_eq!(t.col_labels, vec!["x", "y", "z"]);
        assert!(matches!(crosstab(&d, "R", "N"), Err(Error::NotCategorical(_))));
        assert!(matches!(crosstab(&d, "R", "Q"), Err(Error::UnknownColumn(_))));
    }

    #[test]
    fn invalid_shapes() {
        assert!(ContingencyTable::from_counts(vec![vec![1, 2]]).is_err());
        assert!(ContingencyTable::from_counts(vec![vec![1, 2], vec![1]]).is_err());
    }
}
