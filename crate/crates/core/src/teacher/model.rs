use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::dot;

/// Homogeneous linear multiclass model `x ↦ Wx`, row `i` holding the score
/// vector of class `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    k: usize,
    d: usize,
    weights: Vec<f64>,
}

impl LinearModel {
    /// Builds a model from row-major weights.
    pub fn new(k: usize, d: usize, weights: Vec<f64>) -> Result<Self> {
        if k < 2 {
            return Err(Error::invalid(format!("need at least 2 classes, got {k}")));
        }
        if d < 1 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if weights.len() != k * d {
            return Err(Error::DimensionMismatch {
                expected: k * d,
                actual: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("model weights"));
        }
        Ok(Self { k, d, weights })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: bad.len(),
            });
        }
        Self::new(k, d, rows.concat())
    }

    pub fn zeros(k: usize, d: usize) -> Result<Self> {
        Self::new(k, d, vec![0.0; k * d])
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.weights.chunks_exact(self.d)
    }

    pub(crate) fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                actual: x.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_class(&self, i: usize) -> Result<()> {
        if i >= self.k {
            return Err(Error::ClassOutOfRange {
                index: i,
                k: self.k,
            });
        }
        Ok(())
    }

    /// Score vector `Wx`.
    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(self.scores_unchecked(x))
    }

    pub(crate) fn scores_unchecked(&self, x: &[f64]) -> Vec<f64> {
        self.rows().map(|w| dot(w, x)).collect()
    }

    pub(crate) fn score_unchecked(&self, i: usize, x: &[f64]) -> f64 {
        dot(self.row(i), x)
    }

    /// `(w_i − w_j)·x`, computed as the difference of the two scores so that it
    /// agrees in sign with the oracle's comparison.
    pub(crate) fn margin_unchecked(&self, x: &[f64], i: usize, j: usize) -> f64 {
        self.score_unchecked(i, x) - self.score_unchecked(j, x)
    }

    /// Predicted class, lowest index on ties. Does not touch any ledger.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(crate::linalg::argmax(&self.scores(x)?))
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.k,
            self.d,
            self.weights.iter().map(|w| w * factor).collect(),
        )
    }

    /// Model whose class `perm[i]` has the row of class `i`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                actual: perm.len(),
            });
        }
        let mut weights = vec![0.0; self.weights.len()];
        for (i, &p) in perm.iter().enumerate() {
            self.check_class(p)?;
            weights[p * self.d..(p + 1) * self.d].copy_from_slice(self.row(i));
        }
        Self::new(self.k, self.d, weights)
    }

    /// Plain-text matrix: header line `k d`, then one whitespace-delimited row
    /// per class.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.k, self.d);
        for row in self.rows() {
            let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (hline, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "missing header"))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::parse(hline + 1, format!("bad header: {e}")))?;
        let [k, d] = dims[..] else {
            return Err(Error::parse(hline + 1, "header must be `k d`"));
        };
        let mut weights = Vec::with_capacity(k * d);
        let mut rows = 0;
        for (lineno, line) in lines {
            let row: Vec<f64> = line
                .split_whitespace()
                .map(str::parse::<f64>)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::parse(lineno + 1, e.to_string()))?;
            if row.len() != d {
                return Err(Error::parse(
                    lineno + 1,
                    format!("expected {d} values, found {}", row.len()),
                ));
            }
            weights.extend(row);
            rows += 1;
        }
        if rows != k {
            return Err(Error::parse(0, format!("expected {k} rows, found {rows}")));
        }
        Self::new(k, d, weights)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{gaussian_vec, rng_from_seed};

    #[test]
    fn identity_scores() {
        let m = LinearModel::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(m.scores(&[1.0, 0.0]).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn zero_model_scores_zero() {
        let m = LinearModel::zeros(3, 4).unwrap();
        assert_eq!(m.scores(&[0.3, -2.0, 1.0, 9.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn unit_input_gives_row_sums() {
        let mut rng = rng_from_seed(42);
        let m = LinearModel::new(3, 2, gaussian_vec(&mut rng, 6)).unwrap();
        let s = m.scores(&[1.0, 1.0]).unwrap();
        let w = m.weights();
        for i in 0..3 {
            let by_hand = w[2 * i] + w[2 * i + 1];
            assert_eq!(s[i], by_hand);
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let m = LinearModel::zeros(2, 3).unwrap();
        assert!(matches!(
            m.scores(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 3,
                actual: 1
            })
        ));
    }

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(LinearModel::new(1, 2, vec![0.0; 2]).is_err());
        assert!(LinearModel::new(2, 2, vec![0.0; 3]).is_err());
        assert!(LinearModel::new(2, 1, vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn text_round_trip_is_exact() {
        let mut rng = rng_from_seed(3);
        let m = LinearModel::new(4, 3, gaussian_vec(&mut rng, 12)).unwrap();
        let text = m.to_text();
        assert!(text.starts_with("4 3\n"));
        assert_eq!(LinearModel::from_text(&text).unwrap(), m);
    }

    #[test]
    fn text_parse_reports_line() {
        let err = LinearModel::from_text("2 2\n1 2\n3 x\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn relabel_moves_rows() {
        let m = LinearModel::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let r = m.relabeled(&[2, 0, 1]).unwrap();
        assert_eq!(r.weights(), &[2.0, 3.0, 1.0]);
    }
}
