use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Partition;
use crate::error::{Error, Result};

/// Which averaging rule is applied to off-diagonal blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Naive,
    Block,
    Row,
    #[serde(alias = "diag")]
    Diagonal,
    Random,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 5] = [
        SchemeKind::Naive,
        SchemeKind::Block,
        SchemeKind::Row,
        SchemeKind::Diagonal,
        SchemeKind::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Naive => "naive",
            SchemeKind::Block => "block",
            SchemeKind::Row => "row",
            SchemeKind::Diagonal => "diagonal",
            SchemeKind::Random => "random",
        }
    }

    /// Whether the averaging count N is meaningful for this kind.
    pub fn uses_count(self) -> bool {
        matches!(self, SchemeKind::Row | SchemeKind::Diagonal | SchemeKind::Random)
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "naive" => Ok(SchemeKind::Naive),
            "block" => Ok(SchemeKind::Block),
            "row" => Ok(SchemeKind::Row),
            "diag" | "diagonal" => Ok(SchemeKind::Diagonal),
            "random" => Ok(SchemeKind::Random),
            other => Err(Error::Config(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Averaging count N per off-diagonal block.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum AveragingCount {
    /// min(|G_k1|, |G_k2|) for every block.
    #[default]
    MinGroupSize,
    /// The same N for every block.
    Fixed(usize),
    /// Explicit N per unordered block (k1 < k2); missing blocks fall back
    /// to the group-size minimum.
    PerBlock(BTreeMap<(usize, usize), usize>),
}

/// An estimator kind together with its tuning (N and seed).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EstimatorScheme {
    pub kind: SchemeKind,
    pub count: AveragingCount,
    pub seed: u64,
}

impl EstimatorScheme {
    pub fn new(kind: SchemeKind) -> Self {
        Self {
            kind,
            count: AveragingCount::MinGroupSize,
            seed: 0,
        }
    }

    pub fn naive() -> Self {
        Self::new(SchemeKind::Naive)
    }

    pub fn block() -> Self {
        Self::new(SchemeKind::Block)
    }

    pub fn row(count: AveragingCount) -> Self {
        Self::new(SchemeKind::Row).with_count(count)
    }

    pub fn diagonal(count: AveragingCount) -> Self {
        Self::new(SchemeKind::Diagonal).with_count(count)
    }

    pub fn random(count: AveragingCount, seed: u64) -> Self {
        Self::new(SchemeKind::Random).with_count(count).with_seed(seed)
    }

    pub fn with_count(mut self, count: AveragingCount) -> Self {
        self.count = count;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Largest admissible N for the block (k1, k2) under this kind.
    pub fn max_count(&self, g1: usize, g2: usize) -> usize {
        match self.kind {
            SchemeKind::Row => g1.max(g2),
            SchemeKind::Diagonal => g1.min(g2),
            _ => g1 * g2,
        }
    }

    /// The validated N of block (k1, k2). Naive and Block always average
    /// (or keep) the full block.
    pub fn count_for(&self, partition: &Partition, k1: usize, k2: usize) -> Result<usize> {
        let (g1, g2) = (partition.group(k1).len(), partition.group(k2).len());
        if !self.kind.uses_count() {
            return Ok(g1 * g2);
        }
        let n = match &self.count {
            AveragingCount::MinGroupSize => g1.min(g2),
            AveragingCount::Fixed(n) => *n,
            AveragingCount::PerBlock(map) => *map
                .get(&(k1.min(k2), k1.max(k2)))
                .unwrap_or(&g1.min(g2)),
        };
        let max = self.max_count(g1, g2);
        if n == 0 || n > max {
            return Err(Error::InvalidN { k1, k2, n, max });
        }
        Ok(n)
    }
}
