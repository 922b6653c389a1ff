//! Presentation artifacts: cluster profiles, typical-member tables, percent
//! formatting and deterministic SVG charts (segmented bars, elbow curves and
//! embedding scatter plots).

pub mod svg;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::ContingencyTable;
use crate::ingest::{Code, ColumnSchema, Dataset};
use svg::{color, scale, tick, Svg};

/// `num / den` as a percentage rounded half-up to 2 decimals, computed in
/// integers so that e.g. `11644 / 16251` renders exactly `"71.65"`.
pub fn format_percent(num: u64, den: u64) -> String {
    let h = round_half_up(num, den, 10_000);
    format!("{}.{:02}", h / 100, h % 100)
}

/// Whole-number percentage, rounded half-up.
pub fn format_percent_whole(num: u64, den: u64) -> String {
    round_half_up(num, den, 100).to_string()
}

fn round_half_up(num: u64, den: u64, factor: u128) -> u128 {
    assert!(den > 0, "percent of an empty total");
    let scaled = u128::from(num) * factor * 2 + u128::from(den);
    scaled / (2 * u128::from(den))
}

/// Pipe-separated table with padded columns.
pub fn align_table(header: &[String], rows: &[Vec<String>]) -> String {
    let ncol = header.len();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let render = |cells: &[String]| {
        let mut line = String::from("|");
        for (j, w) in widths.iter().enumerate() {
            let cell = cells.get(j).map_or("", String::as_str);
            line.push(' ');
            line.push_str(cell);
            line.push_str(&" ".repeat(w - cell.chars().count()));
            line.push_str(" |");
        }
        line.push('\n');
        line
    };
    let mut out = render(header);
    out.push('|');
    for w in &widths {
        out.push_str(&"-".repeat(w + 2));
        out.push('|');
    }
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), ncol);
        out.push_str(&render(row));
    }
    out
}

fn split_row(line: &str) -> Vec<String> {
    let inner = line.trim().trim_start_matches('|').trim_end_matches('|');
    inner.split('|').map(|c| c.trim().to_string()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VariableProfile {
    Categorical {
        name: String,
        /// `(code, count)` in schema order; missing cells are not counted.
        counts: Vec<(Code, u64)>,
        proportions: Vec<f64>,
        majority: Code,
    },
    Numeric {
        name: String,
        mean: f64,
        observed: u64,
    },
}

impl VariableProfile {
    pub fn name(&self) -> &str {
        match self {
            VariableProfile::Categorical { name, .. } | VariableProfile::Numeric { name, .. } => name,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterProfile {
    pub cluster: usize,
    pub size: usize,
    pub variables: Vec<VariableProfile>,
}

impl ClusterProfile {
    /// Majority codes of the categorical variables, in order.
    pub fn majority_vector(&self) -> Vec<Code> {
        self.variables
            .iter()
            .filter_map(|v| match v {
                VariableProfile::Categorical { majority, .. } => Some(*majority),
                VariableProfile::Numeric { .. } => None,
            })
            .collect()
    }
}

/// Per-cluster distributions of `variables`. Clusters without members are
/// omitted. Majority ties go to the smallest code.
pub fn cluster_profiles(data: &Dataset, assignments: &[usize], variables: &[&str]) -> Result<Vec<ClusterProfile>> {
    if assignments.len() != data.n_rows() {
        return Err(Error::LengthMismatch { left: assignments.len(), right: data.n_rows() });
    }
    let k = assignments.iter().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &a) in assignments.iter().enumerate() {
        members[a].push(i);
    }
    let cols = variables
        .iter()
        .map(|v| Ok((data.column_index(v)?, data.column(v)?)))
        .collect::<Result<Vec<_>>>()?;

    let mut out = Vec::new();
    for (cluster, rows) in members.iter().enumerate() {
        if rows.is_empty() {
            continue;
        }
        let variables = cols
            .iter()
            .map(|&(j, col)| {
                if col.is_categorical() {
                    let mut tally: BTreeMap<Code, u64> = col.categories.iter().map(|c| (c.code, 0)).collect();
                    for &i in rows {
                        if let Some(code) = data.cell(i, j).code() {
                            *tally.entry(code).or_insert(0) += 1;
                        }
                    }
                    let mut counts: Vec<(Code, u64)> =
                        col.categories.iter().map(|c| (c.code, tally[&c.code])).collect();
                    for (&code, &n) in &tally {
                        if !counts.iter().any(|(c, _)| *c == code) {
                            counts.push((code, n));
                        }
                    }
                    let total: u64 = counts.iter().map(|c| c.1).sum();
                    let proportions =
                        counts.iter().map(|c| if total > 0 { c.1 as f64 / total as f64 } else { 0.0 }).collect();
                    let top = counts.iter().map(|c| c.1).max().unwrap_or(0);
                    let majority = counts.iter().filter(|c| c.1 == top).map(|c| c.0).min().unwrap_or_default();
                    VariableProfile::Categorical { name: col.name.clone(), counts, proportions, majority }
                } else {
                    let vals: Vec<f64> = rows.iter().filter_map(|&i| data.cell(i, j).real()).collect();
                    let mean = if vals.is_empty() { f64::NAN } else { vals.iter().sum::<f64>() / vals.len() as f64 };
                    VariableProfile::Numeric { name: col.name.clone(), mean, observed: vals.len() as u64 }
                }
            })
            .collect();
        out.push(ClusterProfile { cluster, size: rows.len(), variables });
    }
    Ok(out)
}

/// Aligned table of each cluster's typical member: the majority code with
/// its label and whole-percent share, e.g. `2 (Covered) (85%)`.
pub fn typical_member_table(profiles: &[ClusterProfile], schema: &[ColumnSchema]) -> String {
    let Some(first) = profiles.first() else {
        return String::new();
    };
    let mut header = vec!["Cluster".to_string(), "Size".to_string()];
    header.extend(first.variables.iter().map(|v| v.name().to_string()));
    let rows: Vec<Vec<String>> = profiles
        .iter()
        .map(|p| {
            let mut row = vec![p.cluster.to_string(), p.size.to_string()];
            for v in &p.variables {
                row.push(match v {
                    VariableProfile::Categorical { name, counts, majority, .. } => {
                        let total: u64 = counts.iter().map(|c| c.1).sum();
                        let n = counts.iter().find(|c| c.0 == *majority).map_or(0, |c| c.1);
                        let label = schema
                            .iter()
                            .find(|c| &c.name == name)
                            .and_then(|c| c.label(*majority))
                            .unwrap_or("?");
                        let pct = if total > 0 { format_percent_whole(n, total) } else { "0".into() };
                        format!("{majority} ({label}) ({pct}%)")
                    }
                    VariableProfile::Numeric { mean, .. } => format!("mean {mean:.2}"),
                });
            }
            row
        })
        .collect();
    align_table(&header, &rows)
}

/// Recovers `(cluster, majority codes)` from a rendered typical-member table.
pub fn parse_typical_member_table(text: &str) -> Result<Vec<(usize, Vec<Code>)>> {
    let bad = |line: &str| Error::InvalidArgument(format!("unparseable table line `{line}`"));
    let mut out = Vec::new();
    for line in text.lines().skip(2).filter(|l| l.starts_with('|')) {
        let cells = split_row(line);
        let cluster = cells.first().and_then(|c| c.parse().ok()).ok_or_else(|| bad(line))?;
        let mut codes = Vec::new();
        for cell in cells.iter().skip(2) {
            if cell.starts_with("mean ") {
                continue;
            }
            let head = cell.split_whitespace().next().ok_or_else(|| bad(line))?;
            codes.push(head.parse().map_err(|_| bad(line))?);
        }
        out.push((cluster, codes));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartKind {
    SegmentedBar,
    Elbow,
    Scatter,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    #[default]
    Vertical,
    Horizontal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
}

/// The data behind a chart; `to_csv` mirrors it as a table with one column
/// per series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartSpec {
    pub kind: ChartKind,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub categories: Vec<String>,
    pub series: Vec<Series>,
    pub annotation: Option<String>,
}

impl ChartSpec {
    pub fn to_csv(&self, delimiter: u8) -> Result<String> {
        let mut wtr = csv::WriterBuilder::new().delimiter(delimiter).from_writer(Vec::new());
        let mut header = vec![self.x_label.clone()];
        header.extend(self.series.iter().map(|s| s.name.clone()));
        wtr.write_record(&header)?;
        for (i, cat) in self.categories.iter().enumerate() {
            let mut rec = vec![cat.clone()];
            rec.extend(self.series.iter().map(|s| format!("{}", s.values[i])));
            wtr.write_record(&rec)?;
        }
        let bytes = wtr.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("utf-8 input"))
    }
}

/// Within-row proportions of a contingency table plus an overall bar, with
/// each segment labelled by its exact 2-decimal percentage.
pub fn segmented_bar(table: &ContingencyTable, orientation: Orientation) -> Result<(ChartSpec, String)> {
    let total = table.total();
    if total == 0 {
        return Err(Error::EmptyTable);
    }
    let row_totals = table.row_totals();
    if let Some(i) = row_totals.iter().position(|&t| t == 0) {
        return Err(Error::DegenerateMargins(format!("row `{}` has no observations", table.row_labels[i])));
    }
    let mut bars: Vec<(String, Vec<u64>, u64)> = table
        .observed
        .iter()
        .zip(&table.row_labels)
        .zip(&row_totals)
        .map(|((r, l), &t)| (l.clone(), r.clone(), t))
        .collect();
    bars.push(("Overall".to_string(), table.col_totals(), total));

    let series = table
        .col_labels
        .iter()
        .enumerate()
        .map(|(j, name)| Series {
            name: name.clone(),
            values: bars.iter().map(|(_, counts, t)| counts[j] as f64 / *t as f64).collect(),
        })
        .collect();
    let spec = ChartSpec {
        kind: ChartKind::SegmentedBar,
        title: "Proportions within each group".to_string(),
        x_label: "group".to_string(),
        y_label: "proportion".to_string(),
        categories: bars.iter().map(|b| b.0.clone()).collect(),
        series,
        annotation: None,
    };

    let (w, h) = (640.0, 420.0);
    let mut doc = Svg::new(w, h);
    doc.text(w / 2.0, 24.0, 16.0, "middle", &spec.title);
    let (x0, y0, x1, y1) = match orientation {
        Orientation::Vertical => (70.0, 50.0, 470.0, 340.0),
        Orientation::Horizontal => (140.0, 50.0, 470.0, 370.0),
    };
    let nb = bars.len() as f64;
    let band = match orientation {
        Orientation::Vertical => (x1 - x0) / nb,
        Orientation::Horizontal => (y1 - y0) / nb,
    };
    for (b, (label, counts, t)) in bars.iter().enumerate() {
        let mut acc = 0u64;
        for (j, &c) in counts.iter().enumerate() {
            let start = acc as f64 / *t as f64;
            acc += c;
            let end = acc as f64 / *t as f64;
            let pct = format!("{}%", format_percent(c, *t));
            match orientation {
                Orientation::Vertical => {
                    let bx = x0 + b as f64 * band + band * 0.15;
                    let bw = band * 0.7;
                    let top = y1 - end * (y1 - y0);
                    let height = (end - start) * (y1 - y0);
                    doc.rect(bx, top, bw, height, color(j));
                    if height >= 14.0 {
                        doc.text(bx + bw / 2.0, top + height / 2.0 + 4.0, 11.0, "middle", &pct);
                    }
                }
                Orientation::Horizontal => {
                    let by = y0 + b as f64 * band + band * 0.15;
                    let bh = band * 0.7;
                    let left = x0 + start * (x1 - x0);
                    let width = (end - start) * (x1 - x0);
                    doc.rect(left, by, width, bh, color(j));
                    if width >= 40.0 {
                        doc.text(left + width / 2.0, by + bh / 2.0 + 4.0, 11.0, "middle", &pct);
                    }
                }
            }
        }
        let lines = wrap(label, 18);
        for (i, line) in lines.iter().enumerate() {
            let dy = i as f64 * 14.0;
            match orientation {
                Orientation::Vertical => doc.text(x0 + (b as f64 + 0.5) * band, y1 + 18.0 + dy, 12.0, "middle", line),
                Orientation::Horizontal => {
                    let mid = y0 + (b as f64 + 0.5) * band + 4.0 - (lines.len() - 1) as f64 * 7.0;
                    doc.text(x0 - 6.0, mid + dy, 12.0, "end", line)
                }
            }
        }
    }
    for (j, name) in table.col_labels.iter().enumerate() {
        let ly = y0 + j as f64 * 22.0;
        doc.rect(490.0, ly, 14.0, 14.0, color(j));
        doc.text(510.0, ly + 12.0, 12.0, "start", name);
    }
    Ok((spec, doc.finish()))
}

/// Greedy word wrap; words longer than `width` stay whole.
fn wrap(text: &str, width: usize) -> Vec<String> {
    let mut lines: Vec<String> = Vec::new();
    for word in text.split_whitespace() {
        match lines.last_mut() {
            Some(line) if line.chars().count() + 1 + word.chars().count() <= width => {
                line.push(' ');
                line.push_str(word);
            }
            _ => lines.push(word.to_string()),
        }
    }
    if lines.is_empty() {
        lines.push(String::new());
    }
    lines
}

/// Location of the sharpest bend in a cost curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Knee {
    pub k: usize,
    /// Second difference `(c[k-1] - c[k]) - (c[k] - c[k+1])` at the knee.
    pub score: f64,
}

fn check_curve(points: &[(usize, f64)]) -> Result<()> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, found: points.len() });
    }
    for pair in points.windows(2) {
        if pair[1].0 <= pair[0].0 {
            return Err(Error::InvalidArgument(format!("k must increase strictly, got {} after {}", pair[1].0, pair[0].0)));
        }
        let slack = 1e-9 * pair[0].1.abs().max(1.0);
        if pair[1].1 > pair[0].1 + slack {
            return Err(Error::NonMonotoneCost(pair[1].0));
        }
    }
    Ok(())
}

/// Interior point maximising the discrete second difference of cost; the
/// first point when there is no interior. Ties go to the smaller `k`.
pub fn knee(points: &[(usize, f64)]) -> Result<Knee> {
    check_curve(points)?;
    let mut best = Knee { k: points[0].0, score: 0.0 };
    let mut found = false;
    for i in 1..points.len() - 1 {
        let d2 = (points[i - 1].1 - points[i].1) - (points[i].1 - points[i + 1].1);
        if !found || d2 > best.score {
            best = Knee { k: points[i].0, score: d2 };
            found = true;
        }
    }
    Ok(best)
}

/// 1, 2 or 5 times a power of ten, at least `raw`.
fn nice_step(raw: f64) -> f64 {
    if !(raw.is_finite() && raw > 0.0) {
        return 1.0;
    }
    let base = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * base).find(|&s| s >= raw).unwrap_or(10.0 * base)
}

/// Cost-versus-k line chart with the knee annotated.
pub fn elbow_chart(points: &[(usize, f64)]) -> Result<(ChartSpec, Knee, String)> {
    let kn = knee(points)?;
    let spec = ChartSpec {
        kind: ChartKind::Elbow,
        title: "K vs clustering cost".to_string(),
        x_label: "k".to_string(),
        y_label: "cost".to_string(),
        categories: points.iter().map(|p| p.0.to_string()).collect(),
        series: vec![Series { name: "cost".to_string(), values: points.iter().map(|p| p.1).collect() }],
        annotation: Some(format!("knee at k = {} (second difference {})", kn.k, tick(kn.score))),
    };
    let (w, h) = (640.0, 420.0);
    let (x0, y0, x1, y1) = (80.0, 50.0, 600.0, 360.0);
    let kmin = points[0].0 as f64;
    let kmax = points[points.len() - 1].0 as f64;
    let top = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let cmin = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min).min(0.0);
    let step = nice_step((top - cmin) / 4.0);
    let cmax = cmin + step * ((top - cmin) / step).ceil().max(1.0);
    let px = |k: usize| scale(k as f64, kmin, kmax, x0, x1);
    let py = |c: f64| scale(c, cmin, cmax, y1, y0);

    let mut doc = Svg::new(w, h);
    doc.text(w / 2.0, 24.0, 16.0, "middle", &spec.title);
    doc.line(x0, y1, x1, y1, "#000000", 1.0);
    doc.line(x0, y0, x0, y1, "#000000", 1.0);
    for &(k, _) in points {
        doc.text(px(k), y1 + 18.0, 12.0, "middle", &k.to_string());
    }
    let mut c = cmin;
    while c <= cmax + step * 1e-9 {
        doc.text(x0 - 6.0, py(c) + 4.0, 11.0, "end", &tick(c));
        c += step;
    }
    doc.text((x0 + x1) / 2.0, h - 20.0, 13.0, "middle", "Number of clusters (k)");
    doc.vertical_text(24.0, (y0 + y1) / 2.0, 13.0, "Cost");
    let line: Vec<(f64, f64)> = points.iter().map(|&(k, c)| (px(k), py(c))).collect();
    doc.polyline(&line, color(0));
    for &(k, c) in points {
        doc.circle(px(k), py(c), 4.0, color(0));
    }
    let kc = points.iter().find(|p| p.0 == kn.k).map_or(0.0, |p| p.1);
    doc.circle(px(kn.k), py(kc), 7.0, color(3));
    doc.text(px(kn.k) + 10.0, py(kc) - 10.0, 12.0, "start", spec.annotation.as_deref().unwrap_or_default());
    Ok((spec, kn, doc.finish()))
}

/// 2-D scatter coloured by cluster, with each cluster's mean position marked
/// by an "X".
pub fn scatter_chart(coords: &[[f64; 2]], labels: &[usize], title: &str) -> Result<(ChartSpec, String)> {
    if coords.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, found: 0 });
    }
    if labels.len() != coords.len() {
        return Err(Error::LengthMismatch { left: coords.len(), right: labels.len() });
    }
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut sums = vec![[0.0f64; 2]; k];
    let mut counts = vec![0usize; k];
    for (c, &l) in coords.iter().zip(labels) {
        sums[l][0] += c[0];
        sums[l][1] += c[1];
        counts[l] += 1;
    }
    let centroids: Vec<Option<[f64; 2]>> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &n)| (n > 0).then(|| [s[0] / n as f64, s[1] / n as f64]))
        .collect();

    let spec = ChartSpec {
        kind: ChartKind::Scatter,
        title: title.to_string(),
        x_label: "point".to_string(),
        y_label: "y2".to_string(),
        categories: (0..coords.len()).map(|i| i.to_string()).collect(),
        series: vec![
            Series { name: "y1".to_string(), values: coords.iter().map(|c| c[0]).collect() },
            Series { name: "y2".to_string(), values: coords.iter().map(|c| c[1]).collect() },
            Series { name: "cluster".to_string(), values: labels.iter().map(|&l| l as f64).collect() },
        ],
        annotation: Some("X marks the centroid of each cluster".to_string()),
    };

    let (w, h) = (720.0, 560.0);
    let (x0, y0, x1, y1) = (40.0, 50.0, 500.0, 510.0);
    let (mut lo0, mut hi0, mut lo1, mut hi1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for c in coords {
        lo0 = lo0.min(c[0]);
        hi0 = hi0.max(c[0]);
        lo1 = lo1.min(c[1]);
        hi1 = hi1.max(c[1]);
    }
    let mut doc = Svg::new(w, h);
    doc.text(w / 2.0, 24.0, 16.0, "middle", title);
    doc.rect(x0, y0, x1 - x0, y1 - y0, "#f7f7f7");
    for (c, &l) in coords.iter().zip(labels) {
        doc.circle(scale(c[0], lo0, hi0, x0 + 10.0, x1 - 10.0), scale(c[1], lo1, hi1, y1 - 10.0, y0 + 10.0), 2.5, color(l));
    }
    for (l, cen) in centroids.iter().enumerate() {
        if let Some(c) = cen {
            let cx = scale(c[0], lo0, hi0, x0 + 10.0, x1 - 10.0);
            let cy = scale(c[1], lo1, hi1, y1 - 10.0, y0 + 10.0);
            doc.cross(cx, cy, 8.0, "#000000");
            doc.text(cx + 10.0, cy - 8.0, 12.0, "start", &format!("{l}"));
        }
    }
    for l in 0..k {
        let ly = y0 + l as f64 * 22.0;
        doc.circle(527.0, ly + 7.0, 6.0, color(l));
        doc.text(540.0, ly + 12.0, 12.0, "start", &format!("Cluster {l} (n = {})", counts[l]));
    }
    Ok((spec, doc.finish()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Cell;

    #[test]
    fn percent_rounding() {
        assert_eq!(format_percent(11644, 16251), "71.65");
        assert_eq!(format_percent(1, 8), "12.50");
        assert_eq!(format_percent(1, 3), "33.33");
        assert_eq!(format_percent(2, 3), "66.67");
        assert_eq!(format_percent(5, 5), "100.00");
        assert_eq!(format_percent_whole(1025, 1206), "85");
        assert_eq!(format_percent_whole(1, 200), "1");
    }

    #[test]
    fn knee_from_second_differences() {
        let pts = [(1, 100.0), (2, 40.0), (3, 35.0), (4, 33.0)];
        let kn = knee(&pts).unwrap();
        assert_eq!(kn.k, 2);
        assert_eq!(kn.score, 55.0);
        let linear = [(1, 40.0), (2, 30.0), (3, 20.0), (4, 10.0)];
        let kn = knee(&linear).unwrap();
        assert_eq!(kn.score, 0.0);
        let (spec, _, svg) = elbow_chart(&linear).unwrap();
        assert!(spec.annotation.unwrap().contains("second difference 0"));
        assert!(svg.contains("knee at k = 2"));
    }

    #[test]
    fn label_wrapping_and_ticks() {
        assert_eq!(wrap("Yes, a citizen of the United States", 18), vec!["Yes, a citizen of", "the United States"]);
        assert_eq!(wrap("", 18), vec![""]);
        assert_eq!(nice_step(906.75), 1000.0);
        assert_eq!(nice_step(0.3), 0.5);
        assert_eq!(nice_step(20.0), 20.0);
    }

    #[test]
    fn elbow_errors() {
        assert!(matches!(knee(&[(1, 3.0)]), Err(Error::TooFewPoints { .. })));
        assert!(matches!(knee(&[(1, 3.0), (2, 2.0), (3, 2.5)]), Err(Error::NonMonotoneCost(3))));
        assert!(matches!(knee(&[(2, 3.0), (2, 2.0)]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn uniform_table_gives_half_segments() {
        let t = ContingencyTable::from_counts(vec![vec![1, 1], vec![1, 1]]).unwrap();
        let (spec, svg) = segmented_bar(&t, Orientation::Vertical).unwrap();
        for s in &spec.series {
            assert!(s.values.iter().all(|&v| v == 0.5));
        }
        assert!(svg.contains("50.00%"));
        assert_eq!(spec.categories.last().unwrap(), "Overall");
    }

    #[test]
    fn empty_table_rejected() {
        let t = ContingencyTable::from_counts(vec![vec![0, 0], vec![0, 0]]).unwrap();
        assert!(matches!(segmented_bar(&t, Orientation::Vertical), Err(Error::EmptyTable)));
    }

    fn fixture() -> Dataset {
        let schema = vec![
            ColumnSchema::categorical("A", &[(1, "One"), (2, "Two")], &[9]),
            ColumnSchema::numeric("H", &[]),
        ];
        let rows = [(1, 10.0), (1, 20.0), (2, 30.0), (1, 40.0), (2, 50.0)]
            .iter()
            .map(|&(a, h)| vec![Cell::Code(a), Cell::Real(h)])
            .collect();
        Dataset::new(schema, rows).unwrap()
    }

    #[test]
    fn profiles_and_typical_member_round_trip() {
        let data = fixture();
        let profiles = cluster_profiles(&data, &[0, 0, 1, 0, 1], &["A", "H"]).unwrap();
        assert_eq!(profiles.len(), 2);
        assert_eq!(profiles[0].size, 3);
        match &profiles[0].variables[1] {
            VariableProfile::Numeric { mean, .. } => assert!((mean - 70.0 / 3.0).abs() < 1e-12),
            _ => panic!("expected numeric"),
        }
        let text = typical_member_table(&profiles, data.schema());
        assert!(text.contains("1 (One) (100%)"));
        assert!(text.contains("2 (Two) (100%)"));
        let parsed = parse_typical_member_table(&text).unwrap();
        assert_eq!(parsed, vec![(0, vec![1]), (1, vec![2])]);
    }

    #[test]
    fn majority_tie_takes_smallest_code() {
        let data = fixture();
        let profiles = cluster_profiles(&data, &[1, 0, 0, 1, 1], &["A"]).unwrap();
        assert_eq!(profiles[0].majority_vector(), vec![1]);
    }

    #[test]
    fn scatter_marks_centroids() {
        let coords = [[0.0, 0.0], [1.0, 1.0], [5.0, 5.0]];
        let (_, svg) = scatter_chart(&coords, &[0, 0, 1], "t").unwrap();
        assert_eq!(svg.matches("class=\"centroid\"").count(), 2);
    }
}
