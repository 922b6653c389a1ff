//! A bundled survey-like dataset: an employment and health-insurance schema,
//! a five-profile generator spec and published population count tables.

use crate::error::Result;
use crate::inference::ContingencyTable;
use crate::ingest::{Cell, Code, ColumnSchema, Dataset};
use crate::synth::{Blueprint, GeneratorSpec, NumericDist};

pub const HOURS: &str = "EMPWKHRS3_A";
pub const DAYS_MISSED: &str = "EMPDYSMSS3_A";
pub const EDUCATION: &str = "EDUCP_A";
pub const NOT_COVERED: &str = "NOTCOV_A";
pub const WORKS_FOR_PAY: &str = "EMPWRKLSW1_A";
pub const CITIZEN: &str = "CITZNSTP_A";
pub const US_BORN: &str = "NATUSBORN_A";
pub const WORKED_LAST_WEEK: &str = "EMPLASTWK_A";
pub const EMPLOYER_INSURANCE: &str = "EMPHEALINS_A";
pub const SICK_LEAVE: &str = "EMPSICKLV_A";
pub const FULL_TIME_ADULTS: &str = "EMPWRKFT1_A";

/// Columns clustered by the demo pipeline: two numeric, eight categorical.
pub const CLUSTER_COLUMNS: [&str; 10] = [
    HOURS,
    DAYS_MISSED,
    EDUCATION,
    NOT_COVERED,
    WORKS_FOR_PAY,
    CITIZEN,
    US_BORN,
    WORKED_LAST_WEEK,
    EMPLOYER_INSURANCE,
    SICK_LEAVE,
];

pub const CATEGORICAL_COLUMNS: [&str; 8] = [
    EDUCATION,
    NOT_COVERED,
    WORKS_FOR_PAY,
    CITIZEN,
    US_BORN,
    WORKED_LAST_WEEK,
    EMPLOYER_INSURANCE,
    SICK_LEAVE,
];

/// Features used to predict cluster membership.
pub const VALIDATION_FEATURES: [&str; 9] = [
    EDUCATION,
    EMPLOYER_INSURANCE,
    HOURS,
    DAYS_MISSED,
    SICK_LEAVE,
    CITIZEN,
    US_BORN,
    WORKED_LAST_WEEK,
    FULL_TIME_ADULTS,
];

const REFUSED_ETC: [Code; 3] = [7, 8, 9];

fn yes_no(name: &str, description: &str) -> ColumnSchema {
    ColumnSchema::categorical(name, &[(1, "Yes"), (2, "No")], &REFUSED_ETC).with_description(description)
}

pub fn schema() -> Vec<ColumnSchema> {
    vec![
        ColumnSchema::numeric(HOURS, &[97, 98, 99]).with_description("Hours worked per week"),
        ColumnSchema::numeric(DAYS_MISSED, &[997, 998, 999])
            .with_description("Days missed work due to illness or injury, past 12 months"),
        ColumnSchema::categorical(EDUCATION, &[(1, "Less than HS"), (2, "HS Grad+")], &[97, 98, 99])
            .with_description("Educational level"),
        ColumnSchema::categorical(NOT_COVERED, &[(1, "Not Covered"), (2, "Covered")], &REFUSED_ETC)
            .with_description("Health coverage status"),
        yes_no(WORKS_FOR_PAY, "Worked for pay last week"),
        ColumnSchema::categorical(
            CITIZEN,
            &[(1, "Yes, a citizen of the United States"), (2, "No, not a citizen of the United States")],
            &REFUSED_ETC,
        )
        .with_description("Citizenship status"),
        yes_no(US_BORN, "Born in the U.S. or a U.S. territory"),
        yes_no(WORKED_LAST_WEEK, "Worked last week"),
        yes_no(EMPLOYER_INSURANCE, "Health insurance offered at last job"),
        yes_no(SICK_LEAVE, "Paid sick leave at last job"),
        ColumnSchema::numeric(FULL_TIME_ADULTS, &[7, 8, 9])
            .with_description("Adults in the family working full-time"),
    ]
}

/// Probability of each blueprint's dominant code in every categorical column.
pub const PURITY: f64 = 0.92;

struct Profile {
    name: &'static str,
    weight: f64,
    hours: NumericDist,
    days: NumericDist,
    full_time: NumericDist,
    /// Dominant codes in `CATEGORICAL_COLUMNS` order.
    codes: [Code; 8],
    /// Probability of the dominant code, per column.
    purity: [f64; 8],
}

fn hours(m: f64, s: f64) -> NumericDist {
    NumericDist::new(m, s).bounded(0.0, 96.0).integer()
}

fn days(m: f64, s: f64) -> NumericDist {
    NumericDist::new(m, s).bounded(0.0, 365.0).integer()
}

fn adults(m: f64) -> NumericDist {
    NumericDist::new(m, 0.8).bounded(0.0, 4.0).integer()
}

// Every profile differs from the integrated-native profile in its own pair
// of categorical columns.
fn profiles() -> Vec<Profile> {
    vec![
        Profile {
            name: "Hardworking challengers",
            weight: 0.20,
            hours: hours(38.0, 5.0),
            days: days(109.0, 15.0),
            full_time: adults(1.2),
            codes: [1, 2, 1, 1, 1, 1, 2, 1],
            purity: [PURITY; 8],
        },
        Profile {
            name: "Healthy integrated native",
            weight: 0.20,
            hours: hours(40.0, 5.0),
            days: days(35.0, 8.0),
            full_time: adults(1.6),
            codes: [2, 2, 1, 1, 1, 1, 1, 1],
            purity: [PURITY; 8],
        },
        Profile {
            name: "Uninsured immigrant",
            weight: 0.20,
            hours: hours(40.0, 5.0),
            days: days(2.0, 1.5),
            full_time: adults(1.6),
            codes: [2, 1, 1, 1, 2, 1, 1, 1],
            purity: [PURITY; 8],
        },
        Profile {
            name: "Precarious non-citizen",
            weight: 0.20,
            hours: hours(17.5, 5.0),
            days: days(2.0, 1.5),
            full_time: adults(0.8),
            codes: [2, 2, 1, 2, 1, 1, 1, 2],
            purity: [PURITY; 8],
        },
        Profile {
            name: "Healthy retiree",
            weight: 0.20,
            hours: hours(20.0, 4.0),
            days: days(2.0, 1.5),
            full_time: adults(0.6),
            codes: [2, 2, 2, 1, 1, 2, 1, 1],
            purity: [PURITY; 8],
        },
    ]
}

// Education and employer insurance split the profiles into three groups;
// the remaining columns only tell apart profiles within a group, and less
// reliably.
fn validation_profiles() -> Vec<Profile> {
    const WEAK: f64 = 0.75;
    const STRONG: f64 = 0.97;
    let purity = [STRONG, WEAK, WEAK, WEAK, WEAK, WEAK, STRONG, WEAK];
    let flat = || (hours(38.0, 10.0), days(5.0, 4.0), adults(1.2));
    [
        ("Less educated, employed, no employer plan", [1, 2, 1, 1, 1, 1, 2, 1]),
        ("Educated native with employer plan", [2, 2, 1, 1, 1, 1, 1, 1]),
        ("Educated immigrant with employer plan", [2, 2, 1, 1, 2, 1, 1, 1]),
        ("Educated non-citizen, no employer plan", [2, 2, 1, 2, 1, 1, 2, 2]),
        ("Less educated, not working, no employer plan", [1, 2, 2, 1, 1, 2, 2, 1]),
    ]
    .into_iter()
    .map(|(name, codes)| {
        let (hours, days, full_time) = flat();
        Profile { name, weight: 0.2, hours, days, full_time, codes, purity }
    })
    .collect()
}

fn build(profiles: Vec<Profile>, n_rows: usize, seed: u64) -> GeneratorSpec {
    let blueprints = profiles
        .into_iter()
        .map(|p| {
            let categorical = CATEGORICAL_COLUMNS
                .iter()
                .zip(p.codes.iter().zip(p.purity))
                .map(|(col, (&code, pur))| (col.to_string(), vec![(code, pur), (3 - code, 1.0 - pur)]))
                .collect();
            let numeric = [(HOURS, p.hours), (DAYS_MISSED, p.days), (FULL_TIME_ADULTS, p.full_time)]
                .into_iter()
                .map(|(c, d)| (c.to_string(), d))
                .collect();
            Blueprint { name: p.name.to_string(), weight: p.weight, categorical, numeric }
        })
        .collect();
    GeneratorSpec { n_rows, blueprints, noise_rate: 0.02, missing_rate: 0.01, seed }
}

/// Five planted profiles over [`schema`].
pub fn spec(n_rows: usize, seed: u64) -> GeneratorSpec {
    build(profiles(), n_rows, seed)
}

/// Five profiles whose membership is driven by education and employer
/// insurance.
pub fn validation_spec(n_rows: usize, seed: u64) -> GeneratorSpec {
    build(validation_profiles(), n_rows, seed)
}

/// Population size of the survey the count tables come from.
pub const POPULATION_N: u64 = 29_500;

fn table(counts: [[u64; 2]; 2], cols: [&str; 2]) -> Result<ContingencyTable> {
    ContingencyTable::new(
        counts.iter().map(|r| r.to_vec()).collect(),
        vec!["Citizen".to_string(), "Non-Citizen".to_string()],
        cols.iter().map(|c| c.to_string()).collect(),
    )
}

/// Worked for pay last week, by citizenship, whole population.
pub fn worked_last_week_population() -> ContingencyTable {
    table([[14360, 11950], [1256, 649]], ["Worked for pay", "Did not work for pay"]).expect("valid")
}

/// Offered health insurance at last job, by citizenship, whole population.
pub fn insurance_offered_population() -> ContingencyTable {
    table([[11644, 4607], [760, 662]], ["Offered", "Not offered"]).expect("valid")
}

/// Worked for pay last week, by citizenship, in a sample of 1500.
pub fn worked_last_week_sample() -> ContingencyTable {
    table([[1217, 164], [109, 10]], ["Worked for pay", "Did not work for pay"]).expect("valid")
}

/// One record per person behind the two population tables: citizenship,
/// worked for pay and, where asked, employer insurance. Cross-tabulating
/// the columns reproduces the tables exactly.
pub fn population_dataset() -> Dataset {
    let all = schema();
    let cols: Vec<ColumnSchema> = [CITIZEN, WORKS_FOR_PAY, EMPLOYER_INSURANCE]
        .iter()
        .map(|n| all.iter().find(|c| c.name == *n).expect("demo column").clone())
        .collect();
    let work = worked_last_week_population().observed;
    let offer = insurance_offered_population().observed;
    let mut rows = Vec::new();
    for (ci, citizen) in [1, 2].into_iter().enumerate() {
        let mut insurance: Vec<Cell> = offer[ci]
            .iter()
            .zip([1, 2])
            .flat_map(|(&n, code)| std::iter::repeat_n(Cell::Code(code), n as usize))
            .collect();
        for (&n, code) in work[ci].iter().zip([1, 2]) {
            for _ in 0..n {
                rows.push(vec![Cell::Code(citizen), Cell::Code(code), insurance.pop().unwrap_or(Cell::Missing)]);
            }
        }
    }
    Dataset::new(cols, rows).expect("valid fixture")
}

/// `(x1, n1, x2, n2)`: citizens and non-citizens offered insurance in the sample.
pub const INSURANCE_SAMPLE: (u64, u64, u64, u64) = (1008, 1388, 63, 112);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::validate_schema;
    use crate::synth::generate;

    #[test]
    fn schema_and_spec_are_consistent() {
        validate_schema(&schema()).unwrap();
        let (data, labels) = generate(&spec(500, 1), &schema()).unwrap();
        assert_eq!(data.n_rows(), 500);
        assert_eq!(labels.iter().max(), Some(&4));
    }

    #[test]
    fn population_records_cross_tabulate_to_the_tables() {
        let data = population_dataset();
        let work = crate::inference::crosstab(&data, CITIZEN, WORKS_FOR_PAY).unwrap();
        assert_eq!(work.observed, worked_last_week_population().observed);
        let offer = crate::inference::crosstab(&data, CITIZEN, EMPLOYER_INSURANCE).unwrap();
        assert_eq!(offer.observed, insurance_offered_population().observed);
    }
}
