use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::LinearModel;
use crate::error::{Error, Result};
use crate::linalg::argmax;
use crate::rng::{rng_from_seed, unit_vector};

/// Ordered points in `R^dim`, optionally labelled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    dim: usize,
    points: Vec<Vec<f64>>,
    labels: Option<Vec<usize>>,
}

impl Dataset {
    pub fn new(dim: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("dataset point"));
            }
        }
        Ok(Self {
            dim,
            points,
            labels: None,
        })
    }

    /// Attaches labels; every label must lie in `[0, k)`.
    pub fn with_labels(mut self, labels: Vec<usize>, k: usize) -> Result<Self> {
        if labels.len() != self.points.len() {
            return Err(Error::DimensionMismatch {
                expected: self.points.len(),
                actual: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::ClassOutOfRange { index: bad, k });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.points.iter().map(Vec::as_slice)
    }

    /// First-coordinate values, for 1D data.
    pub fn scalars(&self) -> Vec<f64> {
        self.points.iter().map(|p| p[0]).collect()
    }

    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(1, values.iter().map(|&v| vec![v]).collect())
    }

    /// Appends the points of `other`; labels are dropped unless both sides carry them.
    pub fn extend(&mut self, other: &Dataset) -> Result<()> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: other.dim,
            });
        }
        self.points.extend(other.points.iter().cloned());
        self.labels = match (self.labels.take(), &other.labels) {
            (Some(mut a), Some(b)) => {
                a.extend(b);
                Some(a)
            }
            _ => None,
        };
        Ok(())
    }

    /// Reads comma-delimited rows. With `label_column`, the last field of
    /// each row is an integer class label.
    pub fn from_csv(path: impl AsRef<Path>, label_column: bool) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file, label_column)
    }

    pub fn read_csv(reader: impl std::io::Read, label_column: bool) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(true)
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut points = Vec::new();
        let mut labels = Vec::new();
        let mut dim = None;
        for record in rdr.records() {
            let record = record.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line() as usize);
                Error::parse(line, e.to_string())
            })?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            if record.iter().all(str::is_empty) {
                continue;
            }
            let mut fields: Vec<&str> = record.iter().collect();
            if label_column {
                let raw = fields
                    .pop()
                    .ok_or_else(|| Error::parse(line, "missing label"))?;
                let label = raw
                    .parse::<usize>()
                    .map_err(|e| Error::parse(line, format!("bad label {raw:?}: {e}")))?;
                labels.push(label);
            }
            let row: Vec<f64> = fields
                .iter()
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|e| Error::parse(line, format!("bad value {f:?}: {e}")))
                })
                .collect::<Result<_>>()?;
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::parse(line, "non-finite value"));
            }
            match dim {
                None => dim = Some(row.len()),
                Some(d) if d != row.len() => {
                    return Err(Error::parse(
                        line,
                        format!("expected {d} values, found {}", row.len()),
                    ))
                }
                _ => {}
            }
            points.push(row);
        }
        let dim = dim.ok_or_else(|| Error::parse(0, "no data rows"))?;
        let ds = Self::new(dim, points)?;
        if label_column {
            let k = labels.iter().max().map_or(0, |m| m + 1);
            ds.with_labels(labels, k)
        } else {
            Ok(ds)
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (i, p) in self.points.iter().enumerate() {
            let mut fields: Vec<String> = p.iter().map(|v| format!("{v:e}")).collect();
            if let Some(labels) = &self.labels {
                fields.push(labels[i].to_string());
            }
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

/// `n` i.i.d. uniform points on the unit sphere in `R^d` (normalized Gaussians).
pub fn sample_sphere(d: usize, n: usize, seed: u64) -> Result<Dataset> {
    if d < 1 {
        return Err(Error::invalid("sphere dimension must be at least 1"));
    }
    let mut rng = rng_from_seed(seed);
    let points = (0..n).map(|_| unit_vector(&mut rng, d)).collect();
    Dataset::new(d, points)
}

/// Classes attained as argmax over the dataset. Internal bookkeeping; no
/// oracle is charged.
pub fn effective_classes(model: &LinearModel, dataset: &Dataset) -> Result<BTreeSet<usize>> {
    if dataset.dim() != model.d() {
        return Err(Error::DimensionMismatch {
            expected: model.d(),
            actual: dataset.dim(),
        });
    }
    Ok(dataset
        .iter()
        .map(|x| argmax(&model.scores_unchecked(x)))
        .collect())
}
