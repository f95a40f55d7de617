use nalgebra::DMatrix;

use crate::block::{EstimatorScheme, Partition};

/// A symmetric p x p matrix of Kendall's taus with unit diagonal, tagged with
/// the scheme (and partition) that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct KendallMatrix {
    values: DMatrix<f64>,
    scheme: EstimatorScheme,
    partition: Option<Partition>,
}

impl KendallMatrix {
    /// Wraps a matrix produced without any averaging.
    pub fn naive(values: DMatrix<f64>) -> Self {
        Self {
            values,
            scheme: EstimatorScheme::naive(),
            partition: None,
        }
    }

    pub fn new(values: DMatrix<f64>, scheme: EstimatorScheme, partition: Option<Partition>) -> Self {
        Self {
            values,
            scheme,
            partition,
        }
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn p(&self) -> usize {
        self.values.nrows()
    }

    pub fn scheme(&self) -> &EstimatorScheme {
        &self.scheme
    }

    pub fn partition(&self) -> Option<&Partition> {
        self.partition.as_ref()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }
}
