use serde::{Deserialize, Serialize};

use super::sampling::{
    block_correlation, min_eigenvalue, AffineFn, ConditionalModel, EllipticalFamily, QuadraticFn, TauCurve,
};
use crate::block::{AveragingCount, EstimatorScheme, Partition, SchemeKind};
use crate::conditional::{ConditioningGrid, KernelFamily, KernelSpec};
use crate::error::{Error, Result};

/// Data-generating process of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelSpec {
    GaussianBlock,
    StudentTBlock {
        nu: f64,
    },
    ConditionalGaussian {
        tau_off: TauCurve,
        #[serde(default)]
        mean: AffineFn,
        #[serde(default)]
        variance: QuadraticFn,
    },
}

impl ModelSpec {
    pub fn is_conditional(&self) -> bool {
        matches!(self, ModelSpec::ConditionalGaussian { .. })
    }

    pub fn family(&self) -> EllipticalFamily {
        match *self {
            ModelSpec::StudentTBlock { nu } => EllipticalFamily::StudentT { nu },
            _ => EllipticalFamily::Gaussian,
        }
    }
}

/// `start:stop:step` grid of covariate values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            start: 0.0,
            stop: 1.0,
            step: 0.1,
        }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<ConditioningGrid> {
        ConditioningGrid::range(self.start, self.stop, self.step)
    }
}

fn default_groups() -> usize {
    2
}

fn default_kernel() -> KernelFamily {
    KernelFamily::Epanechnikov
}

/// A simulation study: every combination of sample size and block size is
/// one sweep point, replicated `replications` times. Groups have equal
/// size and the reported estimate is the block between the first two
/// groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    #[serde(default = "default_groups")]
    pub groups: usize,
    pub block_sizes: Vec<usize>,
    pub sample_sizes: Vec<usize>,
    pub tau_diag: f64,
    /// Cross-group tau of the unconditional models.
    #[serde(default)]
    pub tau_off: f64,
    #[serde(default)]
    pub bandwidths: Vec<f64>,
    pub replications: usize,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub seed: u64,
    pub schemes: Vec<SchemeKind>,
    /// Averaging count N; defaults to the block size.
    #[serde(default)]
    pub count: Option<usize>,
    #[serde(default = "default_kernel")]
    pub kernel: KernelFamily,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.replications < 2 {
            return fail(format!("replications must be at least 2, got {}", self.replications));
        }
        if self.groups < 2 {
            return fail(format!("need at least 2 groups, got {}", self.groups));
        }
        if self.block_sizes.is_empty() || self.sample_sizes.is_empty() {
            return fail("block_sizes and sample_sizes must be non-empty".into());
        }
        if self.schemes.is_empty() {
            return fail("no schemes to compare".into());
        }
        if let Some(&b) = self.block_sizes.iter().find(|&&b| b < 1) {
            return fail(format!("block size {b} must be positive"));
        }
        if let Some(&n) = self.sample_sizes.iter().find(|&&n| n < 3) {
            return fail(format!("sample size {n} must be at least 3"));
        }
        if let Some(n) = self.count {
            let smallest = *self.block_sizes.iter().min().unwrap();
            if n == 0 || n > smallest {
                return fail(format!("count {n} outside [1, {smallest}]"));
            }
        }
        if let ModelSpec::StudentTBlock { nu } = self.model {
            if !(nu > 0.0 && nu.is_finite()) {
                return fail(format!("degrees of freedom {nu} must be positive"));
            }
        }
        if self.model.is_conditional() {
            if self.bandwidths.is_empty() {
                return fail("conditional experiments need bandwidths".into());
            }
            for &h in &self.bandwidths {
                KernelSpec::new(self.kernel.clone(), h).map_err(|e| Error::Config(e.to_string()))?;
            }
            self.grid.build()?;
        }
        for &b in &self.block_sizes {
            let partition = self.partition(b)?;
            match &self.model {
                ModelSpec::ConditionalGaussian { .. } => {
                    self.conditional_model(b)
                        .map_err(|e| Error::Config(format!("block size {b}: {e}")))?;
                }
                _ => {
                    let r = block_correlation(&partition, self.tau_diag, self.tau_off)
                        .map_err(|e| Error::Config(e.to_string()))?;
                    let low = min_eigenvalue(&r);
                    if low < -1e-10 {
                        return fail(format!(
                            "block size {b}: correlation matrix not positive semi-definite (min eigenvalue {low:.3e})"
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn partition(&self, block_size: usize) -> Result<Partition> {
        Partition::contiguous(&vec![block_size; self.groups])
    }

    pub fn conditional_model(&self, block_size: usize) -> Result<ConditionalModel> {
        match &self.model {
            ModelSpec::ConditionalGaussian {
                tau_off,
                mean,
                variance,
            } => ConditionalModel::new(self.partition(block_size)?, self.tau_diag, *tau_off, *mean, *variance),
            _ => Err(Error::Config("model is not conditional".into())),
        }
    }

    /// Estimator of `kind` under this configuration; the random scheme gets
    /// a fresh seed per replication.
    pub fn scheme(&self, kind: SchemeKind, seed: u64) -> EstimatorScheme {
        let count = match self.count {
            Some(n) => AveragingCount::Fixed(n),
            None => AveragingCount::MinGroupSize,
        };
        EstimatorScheme::new(kind).with_count(count).with_seed(seed)
    }
}
