//! Row-major storage for `n` points in `ℝ^d`.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// `n` points of dimension `d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Points {
    dim: usize,
    data: Vec<f64>,
}

impl Points {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("dimension must be positive".into()));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: data.len() % dim,
            });
        }
        Ok(Self { dim, data })
    }

    pub fn zeros(n: usize, dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; n * dim],
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or_else(|| Error::Domain("no rows".into()))?;
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(dim, data)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Applies `f` to every row, producing points of dimension `out_dim`.
    pub fn map_rows<F>(&self, out_dim: usize, mut f: F) -> Points
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        let mut out = Points::zeros(self.len(), out_dim);
        for (i, row) in self.rows().enumerate() {
            f(row, out.row_mut(i));
        }
        out
    }

    /// Keeps columns `start..end`.
    pub fn columns(&self, start: usize, end: usize) -> Result<Points> {
        if start >= end || end > self.dim {
            return Err(Error::Domain(format!(
                "column range {start}..{end} outside 0..{}",
                self.dim
            )));
        }
        let data = self
            .rows()
            .flat_map(|r| r[start..end].iter().copied())
            .collect();
        Points::new(end - start, data)
    }

    /// Concatenates two point sets of equal length column-wise.
    pub fn hstack(&self, other: &Points) -> Result<Points> {
        if self.len() != other.len() {
            return Err(Error::SizeMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        let mut data = Vec::with_capacity(self.data.len() + other.data.len());
        for (a, b) in self.rows().zip(other.rows()) {
            data.extend_from_slice(a);
            data.extend_from_slice(b);
        }
        Points::new(self.dim + other.dim, data)
    }

    /// Index of the first non-finite coordinate, if any.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.data.iter().position(|x| !x.is_finite())
    }

    /// First pair of rows (in sorted order) that are exactly equal.
    pub fn find_duplicate(&self) -> Option<(usize, usize)> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            self.row(a)
                .iter()
                .zip(self.row(b))
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        order.windows(2).find_map(|w| {
            let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
            (self.row(a) == self.row(b)).then_some((a, b))
        })
    }

    /// Writes one point per line, comma separated, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for row in self.rows() {
            let line: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// Reads headerless comma-separated rows of equal width.
    pub fn read_csv<R: BufRead>(input: R) -> Result<Points> {
        let mut rows = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|cell| {
                    cell.trim().parse::<f64>().map_err(|_| {
                        Error::Parse(format!("line {}: not a number: {cell:?}", lineno + 1))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Points::from_rows(&rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_rows_are_found() {
        let p = Points::from_rows(&[[1.0, 2.0], [0.0, 1.0], [1.0, 2.0]]).unwrap();
        assert_eq!(p.find_duplicate(), Some((0, 2)));
        let q = Points::from_rows(&[[1.0, 2.0], [1.0, 2.5]]).unwrap();
        assert_eq!(q.find_duplicate(), None);
    }

    #[test]
    fn ragged_rows_rejected() {
        let rows: Vec<Vec<f64>> = vec![vec![1.0, 2.0], vec![3.0]];
        assert!(Points::from_rows(&rows).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let p = Points::from_rows(&[[0.1, -1.0 / 3.0], [1e-300, 7.0]]).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let q = Points::read_csv(buf.as_slice()).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn hstack_and_columns_invert() {
        let a = Points::from_rows(&[[1.0], [2.0]]).unwrap();
        let b = Points::from_rows(&[[3.0, 4.0], [5.0, 6.0]]).unwrap();
        let ab = a.hstack(&b).unwrap();
        assert_eq!(ab.row(1), &[2.0, 5.0, 6.0]);
        assert_eq!(ab.columns(1, 3).unwrap(), b);
    }
}
