//! Dense row-major tables of per-instance class scores.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logspace::ln_or_neg_inf;

/// An `rows x cols` row-major matrix of reals.
///
/// Used for probability tables (`L x K`, rows sum to one), their logs, EM
/// targets and logit gradients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// Tolerance on row sums accepted by [`Table::check_row_stochastic`].
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

impl Table {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Table {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    /// Uniform distribution `1/K` in every row.
    pub fn uniform(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 1.0 / cols as f64)
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                format!("{} values ({rows}x{cols})", rows * cols),
                format!("{} values", data.len()),
            ));
        }
        Ok(Table { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (j, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::shape(
                    format!("{cols} columns"),
                    format!("{} columns in row {j}", row.len()),
                ));
            }
            data.extend_from_slice(row);
        }
        Ok(Table {
            rows: rows.len(),
            cols,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, row: usize) -> &mut [f64] {
        &mut self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.cols.max(1)).take(self.rows)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter_rows().map(<[f64]>::to_vec).collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Table {
        Table {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise natural log, with `ln 0 = -inf`.
    pub fn ln(&self) -> Table {
        self.map(ln_or_neg_inf)
    }

    pub fn exp(&self) -> Table {
        self.map(f64::exp)
    }

    /// Rows stacked vertically, all with the same column count.
    pub fn vstack<'a>(tables: impl IntoIterator<Item = &'a Table>, cols: usize) -> Result<Table> {
        let mut data = Vec::new();
        let mut rows = 0;
        for t in tables {
            if t.cols != cols {
                return Err(Error::shape(
                    format!("{cols} columns"),
                    format!("{} columns", t.cols),
                ));
            }
            rows += t.rows;
            data.extend_from_slice(&t.data);
        }
        Ok(Table { rows, cols, data })
    }

    /// Copy of rows `start..start + len`.
    pub fn slice_rows(&self, start: usize, len: usize) -> Table {
        Table {
            rows: len,
            cols: self.cols,
            data: self.data[start * self.cols..(start + len) * self.cols].to_vec(),
        }
    }

    pub fn max_abs_diff(&self, other: &Table) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| if a == b { 0.0 } else { (a - b).abs() })
            .fold(0.0, f64::max)
    }

    /// Checks that every entry is in `[0, 1]` and every row sums to one.
    pub fn check_row_stochastic(&self) -> Result<()> {
        for (j, row) in self.iter_rows().enumerate() {
            if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::InvalidProbs(format!(
                    "entry {v} in row {j} is not a probability"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::InvalidProbs(format!("row {j} sums to {sum}")));
            }
        }
        Ok(())
    }

    /// Checks that every entry lies strictly inside `(0, 1)`.
    pub fn check_open_unit(&self) -> Result<()> {
        match self.data.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
            Some(v) => Err(Error::InvalidProbs(format!("entry {v} is not in (0,1)"))),
            None => Ok(()),
        }
    }
}

/// Row-wise `log_softmax`.
pub fn log_softmax_rows(logits: &Table) -> Table {
    let mut out = logits.clone();
    for j in 0..out.rows() {
        let row = out.row_mut(j);
        let lse = crate::logspace::log_sum_exp(row.iter().copied());
        row.iter_mut().for_each(|v| *v -= lse);
    }
    out
}

/// Numerically stable `ln(sigmoid(x))`.
#[inline]
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
