//! Typed mixed tables: loading, validation and the two summary tabulations
//! (cell counts and per-level moments) that every pairwise statistic needs.
//!
//! Discrete columns are stored as level codes `0..levels.len()`, continuous
//! columns as finite `f64`. Tables are immutable once built.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cell contents treated as missing when reading CSV input.
const MISSING_TOKENS: &[&str] = &["", "NA", "N/A", "?", "NaN", "nan", "null"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum VariableKind {
    Discrete { levels: Vec<String> },
    Continuous,
}

impl VariableKind {
    pub fn is_discrete(&self) -> bool {
        matches!(self, VariableKind::Discrete { .. })
    }

    pub fn n_levels(&self) -> Option<usize> {
        match self {
            VariableKind::Discrete { levels } => Some(levels.len()),
            VariableKind::Continuous => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            VariableKind::Discrete { .. } => "discrete",
            VariableKind::Continuous => "continuous",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableSpec {
    pub name: String,
    pub kind: VariableKind,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Discrete(Vec<u32>),
    Continuous(Vec<f64>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Discrete(c) => c.len(),
            Column::Continuous(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Values as reals; discrete codes are cast to `f64`.
    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            Column::Discrete(c) => c.iter().map(|&v| v as f64).collect(),
            Column::Continuous(c) => c.clone(),
        }
    }

    fn select(&self, rows: &[usize]) -> Column {
        match self {
            Column::Discrete(c) => Column::Discrete(rows.iter().map(|&r| c[r]).collect()),
            Column::Continuous(c) => Column::Continuous(rows.iter().map(|&r| c[r]).collect()),
        }
    }
}

/// One entry of a schema file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaEntry {
    pub name: String,
    pub kind: SchemaKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemaKind {
    Discrete,
    Continuous,
}

/// What to do with rows that contain a missing cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NaPolicy {
    #[default]
    DropRow,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub rows_read: usize,
    pub dropped_rows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedDataTable {
    specs: Vec<VariableSpec>,
    columns: Vec<Column>,
    n_rows: usize,
    load_report: LoadReport,
}

impl MixedDataTable {
    /// Build a table from specs and columns, validating every invariant.
    pub fn new(specs: Vec<VariableSpec>, columns: Vec<Column>) -> Result<Self> {
        if specs.len() != columns.len() {
            return Err(Error::InvalidArgument(format!(
                "{} specs for {} columns",
                specs.len(),
                columns.len()
            )));
        }
        let n_rows = columns.first().map(Column::len).unwrap_or(0);
        if n_rows == 0 {
            return Err(Error::EmptyTable);
        }
        if n_rows < 2 {
            return Err(Error::TooFewRows {
                rows: n_rows,
                needed: 2,
            });
        }
        let mut seen = HashSet::new();
        for (i, (spec, col)) in specs.iter().zip(&columns).enumerate() {
            if !seen.insert(spec.name.as_str()) {
                return Err(Error::DuplicateHeader(spec.name.clone()));
            }
            if spec.index != i {
                return Err(Error::InvalidArgument(format!(
                    "spec `{}` has index {} at position {i}",
                    spec.name, spec.index
                )));
            }
            if col.len() != n_rows {
                return Err(Error::InvalidArgument(format!(
                    "column `{}` has {} rows, expected {n_rows}",
                    spec.name,
                    col.len()
                )));
            }
            match (&spec.kind, col) {
                (VariableKind::Discrete { levels }, Column::Discrete(codes)) => {
                    if levels.is_empty() {
                        return Err(Error::InvalidArgument(format!(
                            "discrete `{}` has no levels",
                            spec.name
                        )));
                    }
                    let distinct: HashSet<&String> = levels.iter().collect();
                    if distinct.len() != levels.len() {
                        return Err(Error::InvalidArgument(format!(
                            "discrete `{}` repeats a level label",
                            spec.name
                        )));
                    }
                    if codes.iter().any(|&c| c as usize >= levels.len()) {
                        return Err(Error::InvalidArgument(format!(
                            "discrete `{}` has a code outside its levels",
                            spec.name
                        )));
                    }
                }
                (VariableKind::Continuous, Column::Continuous(vals)) => {
                    if let Some(row) = vals.iter().position(|v| !v.is_finite()) {
                        return Err(Error::Parse {
                            column: spec.name.clone(),
                            row,
                            value: vals[row].to_string(),
                        });
                    }
                }
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "column storage for `{}` does not match its kind",
                        spec.name
                    )))
                }
            }
        }
        Ok(MixedDataTable {
            specs,
            columns,
            n_rows,
            load_report: LoadReport {
                rows_read: n_rows,
                dropped_rows: 0,
            },
        })
    }

    /// Convenience constructor from `(name, column)` pairs. Discrete columns
    /// get levels `"0"..` in code order.
    pub fn from_columns(cols: Vec<(&str, Column)>) -> Result<Self> {
        let mut specs = Vec::with_capacity(cols.len());
        let mut columns = Vec::with_capacity(cols.len());
        for (index, (name, col)) in cols.into_iter().enumerate() {
            let kind = match &col {
                Column::Discrete(codes) => {
                    let n = codes.iter().copied().max().map_or(1, |m| m as usize + 1);
                    VariableKind::Discrete {
                        levels: (0..n).map(|l| l.to_string()).collect(),
                    }
                }
                Column::Continuous(_) => VariableKind::Continuous,
            };
            specs.push(VariableSpec {
                name: name.to_string(),
                kind,
                index,
            });
            columns.push(col);
        }
        MixedDataTable::new(specs, columns)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_vars(&self) -> usize {
        self.specs.len()
    }

    pub fn specs(&self) -> &[VariableSpec] {
        &self.specs
    }

    pub fn spec(&self, idx: usize) -> &VariableSpec {
        &self.specs[idx]
    }

    pub fn column(&self, idx: usize) -> &Column {
        &self.columns[idx]
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.specs[idx].name
    }

    pub fn is_discrete(&self, idx: usize) -> bool {
        self.specs[idx].kind.is_discrete()
    }

    pub fn load_report(&self) -> &LoadReport {
        &self.load_report
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.specs
            .iter()
            .position(|s| s.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn reals(&self, idx: usize) -> Result<&[f64]> {
        match &self.columns[idx] {
            Column::Continuous(v) => Ok(v),
            Column::Discrete(_) => Err(Error::WrongKind {
                name: self.specs[idx].name.clone(),
                expected: "continuous",
            }),
        }
    }

    pub fn codes(&self, idx: usize) -> Result<&[u32]> {
        match &self.columns[idx] {
            Column::Discrete(v) => Ok(v),
            Column::Continuous(_) => Err(Error::WrongKind {
                name: self.specs[idx].name.clone(),
                expected: "discrete",
            }),
        }
    }

    /// A new table holding only the given rows (in the given order).
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let columns = self.columns.iter().map(|c| c.select(rows)).collect();
        MixedDataTable::new(self.specs.clone(), columns)
    }

    pub fn with_load_report(mut self, report: LoadReport) -> Self {
        self.load_report = report;
        self
    }

    /// The schema that reproduces this table's typing exactly.
    pub fn schema(&self) -> Vec<SchemaEntry> {
        self.specs
            .iter()
            .map(|s| match &s.kind {
                VariableKind::Discrete { levels } => SchemaEntry {
                    name: s.name.clone(),
                    kind: SchemaKind::Discrete,
                    levels: Some(levels.clone()),
                },
                VariableKind::Continuous => SchemaEntry {
                    name: s.name.clone(),
                    kind: SchemaKind::Continuous,
                    levels: None,
                },
            })
            .collect()
    }

    /// Write as CSV. Reals use 17 significant digits so a reload with
    /// [`MixedDataTable::schema`] is bit-exact.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.specs.iter().map(|s| s.name.as_str()))?;
        let mut record = Vec::with_capacity(self.n_vars());
        for r in 0..self.n_rows {
            record.clear();
            for (spec, col) in self.specs.iter().zip(&self.columns) {
                match (col, &spec.kind) {
                    (Column::Discrete(c), VariableKind::Discrete { levels }) => {
                        record.push(levels[c[r] as usize].clone())
                    }
                    (Column::Continuous(c), _) => record.push(format!("{:.16e}", c[r])),
                    _ => unreachable!("validated at construction"),
                }
            }
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

pub fn read_schema(path: &Path) -> Result<Vec<SchemaEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn load_csv(
    path: &Path,
    schema: Option<&[SchemaEntry]>,
    na_policy: NaPolicy,
) -> Result<MixedDataTable> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    load_csv_from_reader(file, schema, na_policy)
}

fn is_missing(cell: &str) -> bool {
    MISSING_TOKENS.contains(&cell)
}

fn parse_real(cell: &str) -> Option<f64> {
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

pub fn load_csv_from_reader<R: Read>(
    reader: R,
    schema: Option<&[SchemaEntry]>,
    na_policy: NaPolicy,
) -> Result<MixedDataTable> {
    let NaPolicy::DropRow = na_policy;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut seen = HashSet::new();
    for h in &headers {
        if !seen.insert(h.as_str()) {
            return Err(Error::DuplicateHeader(h.clone()));
        }
    }
    let schema_map: HashMap<&str, &SchemaEntry> = schema
        .unwrap_or(&[])
        .iter()
        .map(|e| (e.name.as_str(), e))
        .collect();
    for name in schema_map.keys() {
        if !seen.contains(name) {
            return Err(Error::SchemaColumnMissing(name.to_string()));
        }
    }

    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut rows_read = 0usize;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        rows_read += 1;
        if rec.len() != headers.len() {
            return Err(Error::RaggedRow {
                row: i + 1,
                found: rec.len(),
                expected: headers.len(),
            });
        }
        if rec.iter().any(is_missing) {
            continue;
        }
        rows.push(rec.iter().map(str::to_string).collect());
    }
    if rows.is_empty() {
        return Err(Error::EmptyTable);
    }
    let n = rows.len();
    let distinct_threshold = (10.0f64).max((n as f64).sqrt());

    let mut specs = Vec::with_capacity(headers.len());
    let mut columns = Vec::with_capacity(headers.len());
    for (j, name) in headers.iter().enumerate() {
        let cells: Vec<&str> = rows.iter().map(|r| r[j].as_str()).collect();
        let (kind, column) = match schema_map.get(name.as_str()) {
            Some(entry) => typed_column(name, &cells, entry)?,
            None => inferred_column(name, &cells, distinct_threshold)?,
        };
        specs.push(VariableSpec {
            name: name.clone(),
            kind,
            index: j,
        });
        columns.push(column);
    }
    let table = MixedDataTable::new(specs, columns)?;
    Ok(table.with_load_report(LoadReport {
        rows_read,
        dropped_rows: rows_read - n,
    }))
}

fn continuous_column(name: &str, cells: &[&str]) -> Result<Column> {
    cells
        .iter()
        .enumerate()
        .map(|(row, c)| {
            parse_real(c).ok_or_else(|| Error::Parse {
                column: name.to_string(),
                row,
                value: c.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()
        .map(Column::Continuous)
}

fn discrete_first_appearance(cells: &[&str]) -> (Vec<String>, Vec<u32>) {
    let mut levels: Vec<String> = Vec::new();
    let mut lookup: HashMap<&str, u32> = HashMap::new();
    let codes = cells
        .iter()
        .map(|&c| {
            *lookup.entry(c).or_insert_with(|| {
                levels.push(c.to_string());
                (levels.len() - 1) as u32
            })
        })
        .collect();
    (levels, codes)
}

fn typed_column(name: &str, cells: &[&str], entry: &SchemaEntry) -> Result<(VariableKind, Column)> {
    match entry.kind {
        SchemaKind::Continuous => Ok((VariableKind::Continuous, continuous_column(name, cells)?)),
        SchemaKind::Discrete => match &entry.levels {
            None => {
                let (levels, codes) = discrete_first_appearance(cells);
                Ok((VariableKind::Discrete { levels }, Column::Discrete(codes)))
            }
            Some(levels) => {
                let lookup: HashMap<&str, u32> = levels
                    .iter()
                    .enumerate()
                    .map(|(i, l)| (l.as_str(), i as u32))
                    .collect();
                let codes = cells
                    .iter()
                    .map(|c| {
                        lookup.get(c).copied().ok_or_else(|| Error::UnknownLevel {
                            column: name.to_string(),
                            level: c.to_string(),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok((
                    VariableKind::Discrete {
                        levels: levels.clone(),
                    },
                    Column::Discrete(codes),
                ))
            }
        },
    }
}

fn inferred_column(name: &str, cells: &[&str], threshold: f64) -> Result<(VariableKind, Column)> {
    let parsed: Vec<Option<f64>> = cells.iter().map(|c| parse_real(c)).collect();
    let numeric = parsed.iter().filter(|p| p.is_some()).count();
    if numeric > 0 && numeric < cells.len() {
        let row = if parsed[0].is_some() {
            parsed.iter().position(Option::is_none).unwrap_or(0)
        } else {
            parsed.iter().position(Option::is_some).unwrap_or(0)
        };
        return Err(Error::MixedTypesInColumn {
            column: name.to_string(),
            row,
            value: cells[row].to_string(),
        });
    }
    if numeric == cells.len() {
        let distinct: HashSet<u64> = parsed.iter().map(|p| p.unwrap().to_bits()).collect();
        if distinct.len() as f64 > threshold {
            let vals = parsed.into_iter().map(Option::unwrap).collect();
            return Ok((VariableKind::Continuous, Column::Continuous(vals)));
        }
    }
    let (levels, codes) = discrete_first_appearance(cells);
    Ok((VariableKind::Discrete { levels }, Column::Discrete(codes)))
}

/// Contingency table of two discrete variables with cached margins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellCounts {
    pub rows: usize,
    pub cols: usize,
    /// Row-major counts, `rows * cols` entries.
    pub counts: Vec<u64>,
    pub row_margins: Vec<u64>,
    pub col_margins: Vec<u64>,
    pub total: u64,
}

impl CellCounts {
    /// Build from a dense row-major matrix.
    pub fn from_matrix(rows: usize, cols: usize, counts: Vec<u64>) -> Self {
        assert_eq!(counts.len(), rows * cols, "count matrix has the wrong size");
        let mut row_margins = vec![0u64; rows];
        let mut col_margins = vec![0u64; cols];
        for i in 0..rows {
            for j in 0..cols {
                let c = counts[i * cols + j];
                row_margins[i] += c;
                col_margins[j] += c;
            }
        }
        let total = row_margins.iter().sum();
        CellCounts {
            rows,
            cols,
            counts,
            row_margins,
            col_margins,
            total,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.cols + j]
    }
}

pub fn cross_tabulate(table: &MixedDataTable, u: usize, v: usize) -> Result<CellCounts> {
    let (cu, cv) = (table.codes(u)?, table.codes(v)?);
    let rows = table.spec(u).kind.n_levels().unwrap_or(0);
    let cols = table.spec(v).kind.n_levels().unwrap_or(0);
    Ok(tabulate_codes(cu, cv, rows, cols))
}

pub(crate) fn tabulate_codes(cu: &[u32], cv: &[u32], rows: usize, cols: usize) -> CellCounts {
    let mut counts = vec![0u64; rows * cols];
    for (&a, &b) in cu.iter().zip(cv) {
        counts[a as usize * cols + b as usize] += 1;
    }
    CellCounts::from_matrix(rows, cols, counts)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupStat {
    pub n: usize,
    pub mean: f64,
    /// Maximum-likelihood variance (denominator `n`); zero for empty groups.
    pub var: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupStats {
    pub groups: Vec<GroupStat>,
    pub n: usize,
    pub grand_mean: f64,
    /// Overall ML variance of the continuous variable.
    pub s0: f64,
    /// Some declared level has no observations.
    pub has_empty_group: bool,
    /// Some observed level has a single observation (variance zero).
    pub has_degenerate_group: bool,
}

pub fn group_stats(table: &MixedDataTable, u: usize, v: usize) -> Result<GroupStats> {
    let codes = table.codes(u)?;
    let vals = table.reals(v)?;
    let n_levels = table.spec(u).kind.n_levels().unwrap_or(0);
    Ok(group_stats_raw(codes, vals, n_levels))
}

/// Per-level moments using two-pass (mean then squared deviation) sums.
pub fn group_stats_raw(codes: &[u32], vals: &[f64], n_levels: usize) -> GroupStats {
    let n = vals.len();
    let mut counts = vec![0usize; n_levels];
    let mut sums = vec![0.0f64; n_levels];
    for (&c, &x) in codes.iter().zip(vals) {
        counts[c as usize] += 1;
        sums[c as usize] += x;
    }
    let means: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    let mut ss = vec![0.0f64; n_levels];
    for (&c, &x) in codes.iter().zip(vals) {
        let d = x - means[c as usize];
        ss[c as usize] += d * d;
    }
    let grand_mean = vals.iter().sum::<f64>() / n as f64;
    let s0 = vals.iter().map(|x| (x - grand_mean).powi(2)).sum::<f64>() / n as f64;
    let groups: Vec<GroupStat> = (0..n_levels)
        .map(|l| GroupStat {
            n: counts[l],
            mean: means[l],
            var: if counts[l] > 0 {
                ss[l] / counts[l] as f64
            } else {
                0.0
            },
        })
        .collect();
    GroupStats {
        has_empty_group: groups.iter().any(|g| g.n == 0),
        has_degenerate_group: groups.iter().any(|g| g.n == 1),
        groups,
        n,
        grand_mean,
        s0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn load(text: &str) -> Result<MixedDataTable> {
        load_csv_from_reader(text.as_bytes(), None, NaPolicy::DropRow)
    }

    #[test]
    fn drops_rows_with_missing_cells() {
        let t = load("a,b,c\n1,x,2.5\n2,,3.5\n3,y,4.5\n").unwrap();
        assert_eq!(t.n_rows(), 2);
        assert_eq!(t.load_report().dropped_rows, 1);
        assert_eq!(t.load_report().rows_read, 3);
    }

    #[test]
    fn string_column_becomes_two_level_discrete() {
        let t = load("division,x\nE,1\nW,2\nE,3\nW,4\n").unwrap();
        assert_eq!(
            t.spec(0).kind,
            VariableKind::Discrete {
                levels: vec!["E".into(), "W".into()]
            }
        );
        assert_eq!(t.codes(0).unwrap(), &[0, 1, 0, 1]);
    }

    #[test]
    fn many_distinct_reals_become_continuous() {
        let mut text = String::from("x\n");
        for i in 0..500 {
            text.push_str(&format!("{}\n", i as f64 * 0.37 + 0.001));
        }
        let t = load(&text).unwrap();
        assert_eq!(t.spec(0).kind, VariableKind::Continuous);
    }

    #[test]
    fn few_distinct_numbers_become_discrete_in_first_appearance_order() {
        let t = load("g\n7\n6\n6\n9\n7\n").unwrap();
        assert_eq!(
            t.spec(0).kind,
            VariableKind::Discrete {
                levels: vec!["7".into(), "6".into(), "9".into()]
            }
        );
        assert_eq!(t.codes(0).unwrap(), &[0, 1, 1, 2, 0]);
    }

    #[test]
    fn mixed_numeric_and_text_is_rejected() {
        let err = load("a\n1\n2\nthree\n").unwrap_err();
        assert!(matches!(err, Error::MixedTypesInColumn { row: 2, .. }), "{err}");
    }

    #[test]
    fn duplicate_header_is_rejected() {
        assert!(matches!(load("a,a\n1,2\n3,4\n"), Err(Error::DuplicateHeader(_))));
    }

    #[test]
    fn all_rows_missing_is_empty_table() {
        assert!(matches!(load("a,b\n1,\n,2\n"), Err(Error::EmptyTable)));
    }

    #[test]
    fn schema_overrides_inference_and_fixes_level_order() {
        let schema = vec![
            SchemaEntry {
                name: "g".into(),
                kind: SchemaKind::Discrete,
                levels: Some(vec!["1".into(), "0".into()]),
            },
            SchemaEntry {
                name: "x".into(),
                kind: SchemaKind::Continuous,
                levels: None,
            },
        ];
        let t = load_csv_from_reader("g,x\n0,1\n1,2\n0,3\n".as_bytes(), Some(&schema), NaPolicy::DropRow)
            .unwrap();
        assert_eq!(t.codes(0).unwrap(), &[1, 0, 1]);
        assert_eq!(t.reals(1).unwrap(), &[1.0, 2.0, 3.0]);

        let bad = vec![SchemaEntry {
            name: "g".into(),
            kind: SchemaKind::Discrete,
            levels: Some(vec!["0".into()]),
        }];
        let err = load_csv_from_reader("g\n0\n1\n".as_bytes(), Some(&bad), NaPolicy::DropRow).unwrap_err();
        assert!(matches!(err, Error::UnknownLevel { .. }));
    }

    #[test]
    fn cross_tabulate_examples() {
        let t = MixedDataTable::from_columns(vec![
            ("u", Column::Discrete(vec![0, 0, 1, 1])),
            ("v", Column::Discrete(vec![0, 1, 0, 1])),
        ])
        .unwrap();
        let c = cross_tabulate(&t, 0, 1).unwrap();
        assert_eq!(c.counts, vec![1, 1, 1, 1]);

        let mut u = vec![0u32; 20];
        u.extend(vec![1u32; 20]);
        let t = MixedDataTable::from_columns(vec![
            ("u", Column::Discrete(u.clone())),
            ("v", Column::Discrete(u)),
        ])
        .unwrap();
        let c = cross_tabulate(&t, 0, 1).unwrap();
        assert_eq!(c.counts, vec![20, 0, 0, 20]);
        assert_eq!(c.row_margins, vec![20, 20]);
    }

    #[test]
    fn unobserved_level_keeps_zero_row() {
        let specs = vec![
            VariableSpec {
                name: "u".into(),
                kind: VariableKind::Discrete {
                    levels: vec!["a".into(), "b".into(), "c".into()],
                },
                index: 0,
            },
            VariableSpec {
                name: "v".into(),
                kind: VariableKind::Discrete {
                    levels: vec!["x".into(), "y".into()],
                },
                index: 1,
            },
        ];
        let t = MixedDataTable::new(
            specs,
            vec![Column::Discrete(vec![0, 2, 2]), Column::Discrete(vec![0, 1, 0])],
        )
        .unwrap();
        let c = cross_tabulate(&t, 0, 1).unwrap();
        assert_eq!((c.rows, c.cols), (3, 2));
        assert_eq!(c.row_margins, vec![1, 0, 2]);
    }

    #[test]
    fn cross_tabulate_rejects_continuous() {
        let t = MixedDataTable::from_columns(vec![
            ("u", Column::Discrete(vec![0, 1])),
            ("v", Column::Continuous(vec![0.5, 1.5])),
        ])
        .unwrap();
        assert!(matches!(cross_tabulate(&t, 0, 1), Err(Error::WrongKind { .. })));
    }

    #[test]
    fn group_stats_examples() {
        let g = group_stats_raw(&[0, 0, 0, 1, 1, 1], &[1.0, 2.0, 3.0, 1.0, 2.0, 3.0], 2);
        assert_eq!(g.groups[0].mean, 2.0);
        assert_eq!(g.groups[1].mean, 2.0);
        assert!((g.s0 - g.groups[0].var).abs() < 1e-15);

        let g = group_stats_raw(&[0, 0, 1, 1], &[0.0, 1.0, 2.0, 3.0], 2);
        assert!((g.s0 - 1.25).abs() < 1e-15);
        assert!((g.groups[0].var - 0.25).abs() < 1e-15);
        assert!((g.groups[1].var - 0.25).abs() < 1e-15);

        let vals = [0.3, -1.2, 4.4, 0.0];
        let g = group_stats_raw(&[0, 0, 0, 0], &vals, 1);
        assert!((g.s0 - g.groups[0].var).abs() < 1e-15);
    }

    #[test]
    fn group_stats_flags_empty_and_singleton_groups() {
        let g = group_stats_raw(&[0, 0, 2], &[1.0, 2.0, 5.0], 3);
        assert!(g.has_empty_group);
        assert!(g.has_degenerate_group);
        assert_eq!(g.groups[2].var, 0.0);
    }

    fn table_strategy() -> impl Strategy<Value = (Vec<u32>, Vec<u32>, Vec<f64>)> {
        (2usize..60).prop_flat_map(|n| {
            (
                proptest::collection::vec(0u32..3, n),
                proptest::collection::vec(0u32..4, n),
                proptest::collection::vec(-1e6f64..1e6, n),
            )
        })
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_bit_exact((a, b, x) in table_strategy()) {
            let t = MixedDataTable::from_columns(vec![
                ("a", Column::Discrete(a)),
                ("b", Column::Discrete(b)),
                ("x", Column::Continuous(x)),
            ]).unwrap();
            let mut buf = Vec::new();
            t.write_csv(&mut buf).unwrap();
            let schema = t.schema();
            let back = load_csv_from_reader(buf.as_slice(), Some(&schema), NaPolicy::DropRow).unwrap();
            prop_assert_eq!(back.column(0), t.column(0));
            prop_assert_eq!(back.column(1), t.column(1));
            let (x0, x1) = (t.reals(2).unwrap(), back.reals(2).unwrap());
            for (p, q) in x0.iter().zip(x1) {
                prop_assert_eq!(p.to_bits(), q.to_bits());
            }
        }

        #[test]
        fn margins_match_level_counts((a, b, _x) in table_strategy()) {
            let c = tabulate_codes(&a, &b, 3, 4);
            for l in 0..3u32 {
                prop_assert_eq!(c.row_margins[l as usize], a.iter().filter(|&&v| v == l).count() as u64);
            }
            for l in 0..4u32 {
                prop_assert_eq!(c.col_margins[l as usize], b.iter().filter(|&&v| v == l).count() as u64);
            }
            prop_assert_eq!(c.total, a.len() as u64);
        }

        #[test]
        fn anova_decomposition_holds((a, _b, x) in table_strategy()) {
            let g = group_stats_raw(&a, &x, 3);
            let n = x.len() as f64;
            let within: f64 = g.groups.iter().map(|s| s.n as f64 * s.var).sum();
            let between: f64 = g.groups.iter().map(|s| s.n as f64 * (s.mean - g.grand_mean).powi(2)).sum();
            let lhs = n * g.s0;
            prop_assert!((lhs - within - between).abs() <= 1e-10 * lhs.abs().max(1.0));
        }
    }
}
