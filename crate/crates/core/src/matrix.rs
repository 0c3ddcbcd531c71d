//! The datasets-by-methods metric matrix consumed by aggregation.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `d × m` values of one quality metric: rows are datasets, columns methods.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricMatrix {
    values: Vec<f64>,
    datasets: Vec<String>,
    methods: Vec<String>,
    pub metric: String,
    pub k: Option<usize>,
}

fn check_unique(labels: &[String], what: &str) -> Result<()> {
    let mut seen = HashSet::new();
    for l in labels {
        if !seen.insert(l.as_str()) {
            return Err(Error::invalid(format!("duplicate {what} label {l:?}")));
        }
    }
    Ok(())
}

impl MetricMatrix {
    /// Builds a matrix from row vectors. Requires `d ≥ 1`, `m ≥ 1`, finite
    /// values and unique labels.
    pub fn new(datasets: Vec<String>, methods: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if datasets.is_empty() || methods.is_empty() {
            return Err(Error::invalid("metric matrix needs at least one dataset and one method"));
        }
        if rows.len() != datasets.len() {
            return Err(Error::invalid(format!(
                "{} rows for {} datasets",
                rows.len(),
                datasets.len()
            )));
        }
        check_unique(&datasets, "dataset")?;
        check_unique(&methods, "method")?;
        let m = methods.len();
        let mut values = Vec::with_capacity(rows.len() * m);
        for (t, row) in rows.into_iter().enumerate() {
            if row.len() != m {
                return Err(Error::invalid(format!(
                    "row {:?} has {} values, expected {m}",
                    datasets[t],
                    row.len()
                )));
            }
            if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("non-finite value {bad} in row {:?}", datasets[t])));
            }
            values.extend(row);
        }
        Ok(MetricMatrix {
            values,
            datasets,
            methods,
            metric: String::new(),
            k: None,
        })
    }

    /// Convenience constructor with generated labels `d0..`, `m0..`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        MetricMatrix::new(
            (0..d).map(|t| format!("d{t}")).collect(),
            (0..m).map(|i| format!("m{i}")).collect(),
            rows,
        )
    }

    pub fn with_metric(mut self, metric: impl Into<String>, k: Option<usize>) -> Self {
        self.metric = metric.into();
        self.k = k;
        self
    }

    pub fn n_datasets(&self) -> usize {
        self.datasets.len()
    }

    pub fn n_methods(&self) -> usize {
        self.methods.len()
    }

    pub fn datasets(&self) -> &[String] {
        &self.datasets
    }

    pub fn methods(&self) -> &[String] {
        &self.methods
    }

    pub fn get(&self, t: usize, i: usize) -> f64 {
        self.values[t * self.methods.len() + i]
    }

    pub fn row(&self, t: usize) -> &[f64] {
        let m = self.methods.len();
        &self.values[t * m..(t + 1) * m]
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        (0..self.n_datasets()).map(|t| self.get(t, i)).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.methods.len())
    }

    pub fn method_index(&self, label: &str) -> Option<usize> {
        self.methods.iter().position(|m| m == label)
    }

    /// `<metric>@<k>` or just the metric name.
    pub fn name(&self) -> String {
        match self.k {
            Some(k) => format!("{}@{k}", self.metric),
            None => self.metric.clone(),
        }
    }

    fn rebuild(&self, datasets: Vec<String>, methods: Vec<String>, rows: Vec<Vec<f64>>) -> MetricMatrix {
        let mut out = MetricMatrix::new(datasets, methods, rows).expect("derived from a valid matrix");
        out.metric = self.metric.clone();
        out.k = self.k;
        out
    }

    /// Sub-matrix with the given dataset rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> MetricMatrix {
        self.rebuild(
            rows.iter().map(|&t| self.datasets[t].clone()).collect(),
            self.methods.clone(),
            rows.iter().map(|&t| self.row(t).to_vec()).collect(),
        )
    }

    /// Sub-matrix with the given method columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> MetricMatrix {
        self.rebuild(
            self.datasets.clone(),
            cols.iter().map(|&i| self.methods[i].clone()).collect(),
            (0..self.n_datasets())
                .map(|t| cols.iter().map(|&i| self.get(t, i)).collect())
                .collect(),
        )
    }

    /// Appends one method column.
    pub fn with_column(&self, label: &str, column: &[f64]) -> Result<MetricMatrix> {
        if column.len() != self.n_datasets() {
            return Err(Error::invalid("new column length differs from dataset count"));
        }
        let mut methods = self.methods.clone();
        methods.push(label.to_owned());
        let rows = (0..self.n_datasets())
            .map(|t| {
                let mut r = self.row(t).to_vec();
                r.push(column[t]);
                r
            })
            .collect();
        let mut out = MetricMatrix::new(self.datasets.clone(), methods, rows)?;
        out.metric = self.metric.clone();
        out.k = self.k;
        Ok(out)
    }

    /// Copy with every row value replaced through `f(t, i, q)`.
    pub fn map(&self, f: impl Fn(usize, usize, f64) -> f64) -> Result<MetricMatrix> {
        let rows = (0..self.n_datasets())
            .map(|t| (0..self.n_methods()).map(|i| f(t, i, self.get(t, i))).collect())
            .collect();
        let mut out = MetricMatrix::new(self.datasets.clone(), self.methods.clone(), rows)?;
        out.metric = self.metric.clone();
        out.k = self.k;
        Ok(out)
    }

    /// Delimited form: `dataset,<method1>,...` then one row per dataset.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["dataset".to_owned()];
        header.extend(self.methods.iter().cloned());
        w.write_record(&header)?;
        for (t, label) in self.datasets.iter().enumerate() {
            let mut rec = vec![label.clone()];
            rec.extend(self.row(t).iter().map(|v| crate::io::fmt_f64(*v)));
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("utf-8"))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, self.to_csv()?.as_bytes())
    }
}

/// Parses a metric matrix from delimited text (header of method names,
/// first column of dataset names).
pub fn import_metric_matrix<R: Read>(source: R) -> Result<MetricMatrix> {
    let mut text = String::new();
    let mut source = source;
    source
        .read_to_string(&mut text)
        .map_err(|e| Error::io("<metric matrix>", e))?;
    let first = text.lines().next().unwrap_or("");
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(crate::io::sniff_delimiter(first))
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = records
        .next()
        .ok_or_else(|| Error::Empty("metric matrix has no header".into()))??;
    if header.len() < 2 {
        return Err(Error::Parse {
            line: 1,
            message: "header needs a dataset column and at least one method".into(),
        });
    }
    let methods: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_owned()).collect();
    let mut datasets = Vec::new();
    let mut rows = Vec::new();
    for (n, rec) in records.enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(n + 2, |p| p.line() as usize);
        if rec.len() != header.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        datasets.push(rec[0].trim().to_owned());
        let mut row = Vec::with_capacity(methods.len());
        for cell in rec.iter().skip(1) {
            let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                line,
                message: format!("unparsable value {cell:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("non-finite value {cell:?}"),
                });
            }
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Empty("metric matrix has no dataset rows".into()));
    }
    MetricMatrix::new(datasets, methods, rows)
}

/// Splits a `<metric>@<k>` stem.
pub fn parse_matrix_name(stem: &str) -> (String, Option<usize>) {
    match stem.rsplit_once('@') {
        Some((metric, k)) => match k.parse() {
            Ok(k) => (metric.to_owned(), Some(k)),
            Err(_) => (stem.to_owned(), None),
        },
        None => (stem.to_owned(), None),
    }
}

/// Reads a matrix file, taking metric name and cutoff from `<metric>@<k>.csv`.
pub fn read_metric_matrix(path: &Path) -> Result<MetricMatrix> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let q = import_metric_matrix(file)?;
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let (metric, k) = parse_matrix_name(&stem);
    Ok(q.with_metric(metric, k))
}
