use std::slice::ChunksExact;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::utility::row_max;

/// `n x d` matrix of strictly positive price relatives, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ReturnsMatrix<T> {
    rows: usize,
    cols: usize,
    values: Vec<T>,
    labels: Option<Vec<String>>,
}

/// Smallest and largest entry of a returns matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnRange<T> {
    pub min: T,
    pub max: T,
}

impl<T: Scalar> ReturnsMatrix<T> {
    pub fn new(rows: usize, cols: usize, values: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Empty("returns matrix"));
        }
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|x| !(*x > T::zero()) || !x.is_finite()) {
            return Err(Error::NonPositive {
                line: pos / cols + 1,
                column: pos % cols + 1,
                value: values[pos].as_f64(),
            });
        }
        Ok(Self {
            rows,
            cols,
            values,
            labels: None,
        })
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(n * d);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != d {
                return Err(Error::Ragged {
                    line: i + 1,
                    expected: d,
                    found: row.len(),
                });
            }
            values.extend(row);
        }
        Self::new(n, d, values)
    }

    /// Attaches column labels (tickers).
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Label of column `j`, falling back to its 0-based index.
    pub fn label(&self, j: usize) -> String {
        self.labels
            .as_ref()
            .map_or_else(|| format!("asset{j}"), |l| l[j].clone())
    }

    /// Column index of `label`, if labels are attached.
    pub fn column_index(&self, label: &str) -> Option<usize> {
        self.labels.as_ref()?.iter().position(|l| l == label)
    }

    #[inline]
    pub fn row(&self, k: usize) -> &[T] {
        &self.values[k * self.cols..(k + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, k: usize, j: usize) -> T {
        self.values[k * self.cols + j]
    }

    pub fn iter_rows(&self) -> ChunksExact<'_, T> {
        self.values.chunks_exact(self.cols)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        self.iter_rows().map(|r| r[j]).collect()
    }

    /// Divides every row by its maximum so each row's best entry is exactly 1.
    pub fn normalize_by_best(&self) -> Self {
        let mut values = self.values.clone();
        for row in values.chunks_exact_mut(self.cols) {
            let best = row_max(row);
            for x in row.iter_mut() {
                *x = *x / best;
            }
        }
        Self {
            rows: self.rows,
            cols: self.cols,
            values,
            labels: self.labels.clone(),
        }
    }

    pub fn return_range(&self) -> ReturnRange<T> {
        let (min, max) = self
            .values
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            });
        ReturnRange { min, max }
    }

    /// Keeps only the listed rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(indices.len() * self.cols);
        for &k in indices {
            values.extend_from_slice(self.row(k));
        }
        let mut out = Self::new(indices.len(), self.cols, values)?;
        out.labels = self.labels.clone();
        Ok(out)
    }

    pub fn cast<U: Scalar>(&self) -> ReturnsMatrix<U> {
        ReturnsMatrix {
            rows: self.rows,
            cols: self.cols,
            values: self.values.iter().map(|x| U::lit(x.as_f64())).collect(),
            labels: self.labels.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ReturnsMatrix<f64> {
        ReturnsMatrix::from_rows(vec![vec![1.0, 2.0], vec![0.5, 1.0]]).unwrap()
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            ReturnsMatrix::from_rows(vec![vec![1.0, 2.0], vec![1.0]]),
            Err(Error::Ragged { line: 2, .. })
        ));
        assert!(matches!(
            ReturnsMatrix::from_rows(vec![vec![1.0, 2.0], vec![1.0, -3.0]]),
            Err(Error::NonPositive { line: 2, column: 2, .. })
        ));
        assert!(ReturnsMatrix::<f64>::from_rows(vec![]).is_err());
    }

    #[test]
    fn normalize_examples() {
        let n = small().normalize_by_best();
        assert_eq!(n.row(0), &[0.5, 1.0]);
        assert_eq!(n.row(1), &[0.5, 1.0]);
        let flat = ReturnsMatrix::from_rows(vec![vec![1.3, 1.3, 1.3]])
            .unwrap()
            .normalize_by_best();
        assert_eq!(flat.row(0), &[1.0, 1.0, 1.0]);
        assert_eq!(n.normalize_by_best(), n);
    }

    #[test]
    fn range_examples() {
        let ones = ReturnsMatrix::new(3, 2, vec![1.0; 6]).unwrap();
        assert_eq!(ones.return_range(), ReturnRange { min: 1.0, max: 1.0 });
        assert_eq!(small().return_range(), ReturnRange { min: 0.5, max: 2.0 });
        let swapped = small().select_rows(&[1, 0]).unwrap();
        assert_eq!(swapped.return_range(), small().return_range());
    }

    #[test]
    fn labels_must_match_columns() {
        assert!(small().with_labels(vec!["a".into()]).is_err());
        let m = small().with_labels(vec!["a".into(), "b".into()]).unwrap();
        assert_eq!(m.column_index("b"), Some(1));
        assert_eq!(m.label(0), "a");
    }
}
