use crate::error::{Error, Result};

/// An n x p sample of finite observations, stored column-major.
///
/// Rows are i.i.d. replications, columns are variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMatrix {
    columns: Vec<Vec<f64>>,
    n: usize,
    names: Option<Vec<String>>,
}

impl ObservationMatrix {
    /// Builds a matrix from columns. Requires n >= 2, p >= 1 and finite entries.
    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::Config("at least one column is required".into()));
        }
        let n = columns[0].len();
        for col in &columns {
            if col.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    actual: col.len(),
                });
            }
        }
        if n < 2 {
            return Err(Error::DegenerateSample {
                required: 2,
                actual: n,
            });
        }
        for (j, col) in columns.iter().enumerate() {
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { row: i, column: j });
            }
        }
        Ok(Self {
            columns,
            n,
            names: None,
        })
    }

    /// Builds a matrix from row vectors of equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map(Vec::len).unwrap_or(0);
        let mut columns = vec![Vec::with_capacity(rows.len()); p];
        for row in rows {
            if row.len() != p {
                return Err(Error::LengthMismatch {
                    expected: p,
                    actual: row.len(),
                });
            }
            for (col, &v) in columns.iter_mut().zip(row) {
                col.push(v);
            }
        }
        Self::from_columns(columns)
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p() {
            return Err(Error::LengthMismatch {
                expected: self.p(),
                actual: names.len(),
            });
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.columns[j][i]
    }

    pub(crate) fn check_column(&self, j: usize) -> Result<()> {
        if j >= self.p() {
            return Err(Error::ColumnOutOfRange {
                index: j,
                p: self.p(),
            });
        }
        Ok(())
    }

    /// Sub-matrix made of the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        let mut out = Vec::with_capacity(cols.len());
        for &j in cols {
            self.check_column(j)?;
            out.push(self.columns[j].clone());
        }
        let names = self
            .names
            .as_ref()
            .map(|names| cols.iter().map(|&j| names[j].clone()).collect());
        let mut m = Self::from_columns(out)?;
        m.names = names;
        Ok(m)
    }

    /// Sub-matrix made of the first `m` rows.
    pub fn head(&self, m: usize) -> Result<Self> {
        let m = m.min(self.n);
        let cols = self.columns.iter().map(|c| c[..m].to_vec()).collect();
        let mut out = Self::from_columns(cols)?;
        out.names = self.names.clone();
        Ok(out)
    }

    pub fn column_means(&self) -> Vec<f64> {
        self.columns
            .iter()
            .map(|c| c.iter().sum::<f64>() / self.n as f64)
            .collect()
    }

    /// Sample standard deviations with the n - 1 denominator.
    pub fn column_std_devs(&self) -> Vec<f64> {
        self.columns
            .iter()
            .map(|c| {
                let mean = c.iter().sum::<f64>() / self.n as f64;
                let ss: f64 = c.iter().map(|v| (v - mean).powi(2)).sum();
                (ss / (self.n as f64 - 1.0)).sqrt()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_short_and_non_finite() {
        assert!(matches!(
            ObservationMatrix::from_columns(vec![vec![1.0]]),
            Err(Error::DegenerateSample { .. })
        ));
        assert!(matches!(
            ObservationMatrix::from_columns(vec![vec![1.0, f64::NAN]]),
            Err(Error::NonFinite { row: 1, column: 0 })
        ));
        assert!(matches!(
            ObservationMatrix::from_columns(vec![vec![1.0, 2.0], vec![1.0]]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn rows_and_columns_agree() {
        let m = ObservationMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]])
            .unwrap();
        assert_eq!(m.n(), 3);
        assert_eq!(m.p(), 2);
        assert_eq!(m.column(1), &[2.0, 4.0, 6.0]);
        assert_eq!(m.row(2), vec![5.0, 6.0]);
        assert_eq!(m.column_means(), vec![3.0, 4.0]);
    }
}
