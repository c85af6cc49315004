//! Samples, datasets, and the CSV dataset format.
//!
//! The CSV header is `x0,...,x{d-1},y,domain`; `y` and `domain` may be
//! empty on any row. Rows keep their file order, which every reduction in
//! this crate relies on for bit-reproducible results.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: Vec<f64>,
    /// Real target (regression model) or class index stored as a float
    /// (probability model).
    pub y: Option<f64>,
    pub domain: Option<usize>,
}

impl Sample {
    pub fn new(x: Vec<f64>, y: Option<f64>, domain: Option<usize>) -> Self {
        Self { x, y, domain }
    }

    pub fn unlabeled(x: Vec<f64>) -> Self {
        Self { x, y: None, domain: None }
    }

    /// Label interpreted as a class index.
    pub fn class(&self) -> Option<usize> {
        self.y
            .filter(|y| *y >= 0.0 && y.fract() == 0.0)
            .map(|y| y as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    samples: Vec<Sample>,
    p: usize,
    d: usize,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>, p: usize) -> Result<Self> {
        let first = samples.first().ok_or(Error::NoSamples)?;
        let d = first.x.len();
        if p == 0 {
            return Err(invalid("number of domains must be positive"));
        }
        for s in &samples {
            if s.x.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: s.x.len(),
                });
            }
            if let Some(k) = s.domain {
                if k >= p {
                    return Err(invalid(format!("domain index {k} out of range for p = {p}")));
                }
            }
            if s.x.iter().any(|v| !v.is_finite()) || s.y.is_some_and(|y| !y.is_finite()) {
                return Err(Error::NonFinite("sample value".into()));
            }
        }
        Ok(Self { samples, p, d })
    }

    /// Builds a dataset with `p` inferred as one past the largest domain id
    /// (or 1 when no sample carries a domain).
    pub fn infer(samples: Vec<Sample>) -> Result<Self> {
        let p = samples
            .iter()
            .filter_map(|s| s.domain)
            .max()
            .map_or(1, |k| k + 1);
        Self::new(samples, p)
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn num_domains(&self) -> usize {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Sample> {
        self.samples.iter()
    }

    /// Samples carrying domain id `k`, in order.
    pub fn domain_subset(&self, k: usize) -> Result<Dataset> {
        let picked: Vec<Sample> = self
            .samples
            .iter()
            .filter(|s| s.domain == Some(k))
            .cloned()
            .collect();
        Dataset::new(picked, self.p)
    }

    pub fn domain_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.p];
        for k in self.samples.iter().filter_map(|s| s.domain) {
            counts[k] += 1;
        }
        counts
    }

    pub fn require_labels(&self) -> Result<()> {
        match self.samples.iter().position(|s| s.y.is_none()) {
            Some(index) => Err(Error::MissingField { index, what: "label" }),
            None => Ok(()),
        }
    }

    pub fn require_domains(&self) -> Result<()> {
        match self.samples.iter().position(|s| s.domain.is_none()) {
            Some(index) => Err(Error::MissingField { index, what: "domain" }),
            None => Ok(()),
        }
    }

    pub fn from_csv_reader<R: Read>(reader: R, p: Option<usize>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let n = headers.len();
        if n < 3 || &headers[n - 2] != "y" || &headers[n - 1] != "domain" {
            return Err(invalid("csv header must be x0,...,x{d-1},y,domain"));
        }
        for (j, h) in headers.iter().take(n - 2).enumerate() {
            if h != format!("x{j}") {
                return Err(invalid(format!("csv header column {j} is `{h}`, expected `x{j}`")));
            }
        }
        let d = n - 2;
        let mut samples = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            let parse = |s: &str, what: &str| -> Result<f64> {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| invalid(format!("row {}: cannot parse {what} `{s}`", row + 1)))
            };
            let mut x = Vec::with_capacity(d);
            for j in 0..d {
                x.push(parse(&record[j], "feature")?);
            }
            let y = match record[d].trim() {
                "" => None,
                s => Some(parse(s, "label")?),
            };
            let domain = match record[d + 1].trim() {
                "" => None,
                s => Some(
                    s.parse::<usize>()
                        .map_err(|_| invalid(format!("row {}: bad domain `{s}`", row + 1)))?,
                ),
            };
            samples.push(Sample { x, y, domain });
        }
        match p {
            Some(p) => Self::new(samples, p),
            None => Self::infer(samples),
        }
    }

    pub fn from_csv_path(path: impl AsRef<Path>, p: Option<usize>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(std::io::BufReader::new(file), p)
    }

    pub fn to_csv_writer<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (0..self.d).map(|j| format!("x{j}")).collect();
        header.push("y".into());
        header.push("domain".into());
        wtr.write_record(&header)?;
        for s in &self.samples {
            let mut row: Vec<String> = s.x.iter().map(|v| v.to_string()).collect();
            row.push(s.y.map(|v| v.to_string()).unwrap_or_default());
            row.push(s.domain.map(|k| k.to_string()).unwrap_or_default());
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a Sample;
    type IntoIter = std::slice::Iter<'a, Sample>;

    fn into_iter(self) -> Self::IntoIter {
        self.samples.iter()
    }
}
