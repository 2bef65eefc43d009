use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub metric: String,
    pub mean: f64,
    pub std_error: f64,
    pub count: usize,
}

/// A named pass/fail assertion evaluated by the harness itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Tabular experiment output. `rows` holds one record per run (or per grid
/// point / step / coordinate); `aggregates` summarize the `aggregate_columns`.
///
/// Wall-clock time is deliberately absent so reruns are byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub seed: u64,
    pub parameters: serde_json::Value,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub aggregate_columns: Vec<String>,
    pub aggregates: Vec<Aggregate>,
    pub checks: Vec<Check>,
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}

impl ExperimentReport {
    pub fn new(name: &str, seed: u64, parameters: serde_json::Value, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            seed,
            parameters,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            aggregate_columns: Vec::new(),
            aggregates: Vec::new(),
            checks: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    /// Recompute `aggregates` from `rows` for the given columns.
    pub fn aggregate(&mut self, columns: &[&str]) {
        self.aggregate_columns = columns.iter().map(|c| c.to_string()).collect();
        self.aggregates = self.recompute_aggregates();
    }

    pub fn recompute_aggregates(&self) -> Vec<Aggregate> {
        self.aggregate_columns
            .iter()
            .map(|c| {
                let v = self.column(c).unwrap_or_default();
                let (mean, std_error) = mean_and_se(&v);
                Aggregate { metric: c.clone(), mean, std_error, count: v.len() }
            })
            .collect()
    }

    pub fn aggregate_of(&self, metric: &str) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.metric == metric)
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check { name: name.to_string(), passed, detail });
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Rows as CSV, followed by a blank line and `metric,mean,std_error,count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{}", self.columns.join(",")).unwrap();
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", cells.join(",")).unwrap();
        }
        if !self.aggregates.is_empty() {
            writeln!(out).unwrap();
            writeln!(out, "metric,mean,std_error,count").unwrap();
            for a in &self.aggregates {
                writeln!(out, "{},{},{},{}", a.metric, a.mean, a.std_error, a.count).unwrap();
            }
        }
        out
    }
}
