//! Record tables: one row per replicate and method.
//!
//! CSV columns: `method,replicate,estimate,r_or_level,cost,seed,error`.
//! `estimate` is empty and `error` holds the message when a replicate failed.
//! JSON lines carry the same fields, one object per line.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub method: String,
    pub replicate: u64,
    pub estimate: Option<f64>,
    /// Truncation index `R` (Taylor methods) or `R~` (MLMC), summed over data.
    pub r_or_level: u64,
    /// Samples drawn, summed over data.
    pub cost: u64,
    pub seed: u64,
    pub error: Option<String>,
}

impl Record {
    pub fn ok(method: impl Into<String>, replicate: u64, estimate: f64, r_or_level: u64, cost: u64, seed: u64) -> Self {
        Self { method: method.into(), replicate, estimate: Some(estimate), r_or_level, cost, seed, error: None }
    }

    pub fn failed(method: impl Into<String>, replicate: u64, seed: u64, error: impl ToString) -> Self {
        Self {
            method: method.into(),
            replicate,
            estimate: None,
            r_or_level: 0,
            cost: 0,
            seed,
            error: Some(error.to_string()),
        }
    }
}

pub fn write_csv<W: Write, S: Serialize>(out: W, rows: &[S]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(io::Error::other)?;
    }
    w.flush()
}

pub fn write_jsonl<W: Write, S: Serialize>(mut out: W, rows: &[S]) -> io::Result<()> {
    for row in rows {
        serde_json::to_writer(&mut out, row)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_csv(input: impl io::Read) -> io::Result<Vec<Record>> {
    csv::Reader::from_reader(input).deserialize().collect::<Result<_, _>>().map_err(io::Error::other)
}

/// Mean and standard error of the successful estimates of one method.
pub fn summarize(records: &[Record], method: &str) -> Option<(f64, f64, usize)> {
    let vals: Vec<f64> = records.iter().filter(|r| r.method == method).filter_map(|r| r.estimate).collect();
    if vals.len() < 2 {
        return None;
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, (var / n).sqrt(), vals.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let rows = vec![Record::ok("cycling", 0, -2.5, 3, 3, 42), Record::failed("mlmc", 1, 43, "cap exceeded")];
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("method,replicate,estimate,r_or_level,cost,seed,error\n"));
        assert_eq!(read_csv(&buf[..]).unwrap(), rows);
    }

    #[test]
    fn jsonl_lines() {
        let rows = vec![Record::ok("simple", 0, 1.0, 0, 0, 1), Record::ok("simple", 1, 2.0, 1, 1, 2)];
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        let back: Record = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(back, rows[0]);
    }

    #[test]
    fn summary_ignores_failures() {
        let rows = vec![
            Record::ok("a", 0, 1.0, 0, 0, 0),
            Record::ok("a", 1, 3.0, 0, 0, 0),
            Record::failed("a", 2, 0, "x"),
            Record::ok("b", 0, 100.0, 0, 0, 0),
        ];
        let (mean, se, n) = summarize(&rows, "a").unwrap();
        assert_eq!((mean, n), (2.0, 2));
        assert!((se - 1.0).abs() < 1e-15);
    }
}
