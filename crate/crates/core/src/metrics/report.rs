use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

/// Per-sample metric values in insertion order, plus mean ± std per metric.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricReport {
    metrics: Vec<String>,
    samples: Vec<(String, Vec<f64>)>,
}

impl MetricReport {
    pub fn new(metrics: &[&str]) -> Self {
        MetricReport {
            metrics: metrics.iter().map(|m| m.to_string()).collect(),
            samples: Vec::new(),
        }
    }

    pub fn metrics(&self) -> &[String] {
        &self.metrics
    }

    pub fn samples(&self) -> &[(String, Vec<f64>)] {
        &self.samples
    }

    /// Adds one sample; `values` follow the order given to [`MetricReport::new`].
    pub fn push(&mut self, sample_id: impl Into<String>, values: Vec<f64>) -> Result<()> {
        if values.len() != self.metrics.len() {
            return Err(Error::Shape(format!(
                "report expects {} metric values, got {}",
                self.metrics.len(),
                values.len()
            )));
        }
        self.samples.push((sample_id.into(), values));
        Ok(())
    }

    pub fn value(&self, sample: usize, metric: &str) -> Option<f64> {
        let m = self.metrics.iter().position(|x| x == metric)?;
        self.samples.get(sample).map(|(_, v)| v[m])
    }

    pub fn summary(&self, metric: &str) -> Option<Summary> {
        let m = self.metrics.iter().position(|x| x == metric)?;
        if self.samples.is_empty() {
            return None;
        }
        let n = self.samples.len() as f64;
        let mean = self.samples.iter().map(|(_, v)| v[m]).sum::<f64>() / n;
        let var = self.samples.iter().map(|(_, v)| (v[m] - mean).powi(2)).sum::<f64>() / n;
        Some(Summary { mean, std: var.sqrt() })
    }

    /// `sample_id,metric,value` rows, then `mean` and `std` rows per metric.
    /// Values use the shortest representation that round-trips.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("sample_id,metric,value\n");
        for (id, values) in &self.samples {
            for (m, v) in self.metrics.iter().zip(values) {
                let _ = writeln!(s, "{id},{m},{v}");
            }
        }
        for m in &self.metrics {
            if let Some(sum) = self.summary(m) {
                let _ = writeln!(s, "mean,{m},{}", sum.mean);
                let _ = writeln!(s, "std,{m},{}", sum.std);
            }
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// One `metric  mean ± std` line per metric.
    pub fn summary_table(&self) -> String {
        let mut s = String::new();
        for m in &self.metrics {
            if let Some(sum) = self.summary(m) {
                let _ = writeln!(s, "{m:<8} {:.4} ± {:.4}", sum.mean, sum.std);
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_and_csv() {
        let mut r = MetricReport::new(&["SAM", "ERGAS"]);
        r.push("a", vec![1.0, 10.0]).unwrap();
        r.push("b", vec![3.0, 10.0]).unwrap();
        assert!(r.push("c", vec![1.0]).is_err());
        assert_eq!(r.summary("SAM"), Some(Summary { mean: 2.0, std: 1.0 }));
        assert_eq!(r.summary("ERGAS").unwrap().std, 0.0);
        assert_eq!(r.summary("nope"), None);
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "sample_id,metric,value");
        assert_eq!(lines[1], "a,SAM,1");
        assert!(lines.contains(&"mean,SAM,2"));
        assert!(lines.contains(&"std,SAM,1"));
        assert_eq!(lines.len(), 1 + 4 + 4);
        assert!(r.summary_table().contains("SAM      2.0000 ± 1.0000"));
    }

    #[test]
    fn csv_values_round_trip() {
        let mut r = MetricReport::new(&["Q"]);
        let v = 0.1 + 0.2;
        r.push("x", vec![v]).unwrap();
        let line = r.to_csv().lines().nth(1).unwrap().to_string();
        assert_eq!(line.rsplit(',').next().unwrap().parse::<f64>().unwrap(), v);
    }
}
