//! Kernel-smoothed conditional Kendall's tau given a covariate Z = z, and
//! the averaged conditional matrix estimators.
//!
//! Observations are weighted by Nadaraya-Watson weights around z. Three
//! weighted double sums estimate the conditional tau; they differ in how
//! the diagonal terms i = k enter, which shifts them by s_n = sum w_i^2.
//! The rescaled version divides the sign-based sum by the off-diagonal
//! weight mass and takes values in [-1, 1].

mod kernel;

pub use kernel::{KernelFamily, KernelSpec, TabulatedKernel};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::block::{averaged_matrix_with, EstimatorScheme, Partition};
use crate::concordance::{column_ranks, ColumnRanks};
use crate::data::ObservationMatrix;
use crate::error::{Error, Result};
use crate::matrix::KendallMatrix;

/// Largest number of points a range grid may have.
pub const MAX_GRID_POINTS: usize = 1_000_000;

/// Distinct, finite points of the covariate space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditioningGrid {
    points: Vec<Vec<f64>>,
}

impl ConditioningGrid {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let d = points.first().map(Vec::len).unwrap_or(0);
        if points.is_empty() || d == 0 {
            return Err(Error::Config("empty conditioning grid".into()));
        }
        for pt in &points {
            if pt.len() != d {
                return Err(Error::LengthMismatch {
                    expected: d,
                    actual: pt.len(),
                });
            }
            if let Some(&v) = pt.iter().find(|v| !v.is_finite()) {
                return Err(Error::OutOfRange(v));
            }
        }
        for (i, a) in points.iter().enumerate() {
            if points[i + 1..].contains(a) {
                return Err(Error::Config(format!("duplicate grid point {a:?}")));
            }
        }
        Ok(Self { points })
    }

    /// One-dimensional grid start, start + step, ... up to `stop` (inclusive
    /// up to rounding).
    pub fn range(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
            return Err(Error::Config(format!("invalid grid {start}:{stop}:{step}")));
        }
        let span = ((stop - start) / step + 1e-9).floor();
        if !(span < MAX_GRID_POINTS as f64) {
            return Err(Error::Config(format!(
                "grid {start}:{stop}:{step} has more than {MAX_GRID_POINTS} points"
            )));
        }
        let count = span as usize + 1;
        Self::new((0..count).map(|i| vec![start + i as f64 * step]).collect())
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }
}

/// Normalised kernel weights at one conditioning point.
#[derive(Debug, Clone, PartialEq)]
pub struct NwWeights {
    pub weights: Vec<f64>,
    /// Sum of squared weights, in [1/n, 1].
    pub s_n: f64,
}

/// Nadaraya-Watson weights of the rows of `z_samples` (n x d) at `z`.
pub fn nw_weights(z_samples: &ObservationMatrix, z: &[f64], kernel: &KernelSpec) -> Result<NwWeights> {
    if z.len() != z_samples.p() {
        return Err(Error::LengthMismatch {
            expected: z_samples.p(),
            actual: z.len(),
        });
    }
    let n = z_samples.n();
    let mut diff = vec![0.0; z.len()];
    let raw: Vec<f64> = (0..n)
        .map(|i| {
            for (j, d) in diff.iter_mut().enumerate() {
                *d = z_samples.get(i, j) - z[j];
            }
            kernel.eval(&diff)
        })
        .collect();
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) {
        return Err(Error::NoLocalData);
    }
    let weights: Vec<f64> = raw.iter().map(|k| k / total).collect();
    let s_n = weights.iter().map(|w| w * w).sum();
    Ok(NwWeights { weights, s_n })
}

/// Which smoothed estimator to return.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CktVariant {
    /// Weighted sign sum; in [-(1 - s_n), 1 - s_n].
    V1,
    /// 4 x weighted concordance mass - 1; in [-1, 1 - 2 s_n].
    V2,
    /// 1 - 4 x weighted discordance mass; in [-1 + 2 s_n, 1].
    V3,
    /// V1 divided by the off-diagonal weight mass; in [-1, 1].
    Rescaled,
}

impl std::str::FromStr for CktVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "v1" | "1" => Ok(CktVariant::V1),
            "v2" | "2" => Ok(CktVariant::V2),
            "v3" | "3" => Ok(CktVariant::V3),
            "rescaled" => Ok(CktVariant::Rescaled),
            other => Err(Error::Config(format!("unknown variant '{other}'"))),
        }
    }
}

/// Weighted pair masses of one column pair.
#[derive(Debug, Clone, Copy, PartialEq)]
struct PairMass {
    /// sum over ordered (i, k) of w_i w_k 1{x_i < x_k, y_i < y_k}
    concordant: f64,
    /// sum over ordered (i, k) of w_i w_k 1{x_i < x_k, y_i > y_k}
    discordant: f64,
    /// weight of unordered pairs tied in x or y
    tied: f64,
}

impl PairMass {
    fn value(&self, variant: CktVariant, s_n: f64) -> Result<f64> {
        let (c, d) = (self.concordant, self.discordant);
        Ok(match variant {
            CktVariant::V1 => 2.0 * c - 2.0 * d,
            CktVariant::V2 => 4.0 * c - 1.0,
            CktVariant::V3 => 1.0 - 4.0 * d,
            CktVariant::Rescaled => {
                // sum over i != k of w_i w_k, i.e. 1 - s_n
                let off = 2.0 * (c + d + self.tied);
                if s_n >= 1.0 || !(off > 0.0) {
                    return Err(Error::DegenerateWeights);
                }
                (2.0 * c - 2.0 * d) / off
            }
        })
    }
}

struct WeightTree {
    tree: Vec<f64>,
}

impl WeightTree {
    fn new(n: usize) -> Self {
        Self {
            tree: vec![0.0; n + 1],
        }
    }

    fn add(&mut self, idx: usize, w: f64) {
        let mut i = idx + 1;
        while i < self.tree.len() {
            self.tree[i] += w;
            i += i & i.wrapping_neg();
        }
    }

    /// Weight inserted at indices strictly below `idx`.
    fn prefix(&self, idx: usize) -> f64 {
        let mut i = idx;
        let mut s = 0.0;
        while i > 0 {
            s += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        s
    }
}

/// O(m log m) sweep over the rows in increasing x with two weight trees:
/// one indexed by y rank, one by reversed y rank.
fn pair_mass(x: &ColumnRanks, y: &ColumnRanks, w: &[f64]) -> PairMass {
    let m = x.order.len();
    let levels = y.levels();
    let mut below = WeightTree::new(levels);
    let mut above = WeightTree::new(levels);
    let y_ties = y.has_ties();
    let mut at_level = vec![0.0; if y_ties { levels } else { 0 }];
    let (mut concordant, mut discordant, mut tied) = (0.0, 0.0, 0.0);
    let mut start = 0;
    while start < m {
        let rank = x.rank[x.order[start] as usize];
        let mut end = start;
        while end < m && x.rank[x.order[end] as usize] == rank {
            end += 1;
        }
        let group = &x.order[start..end];
        for &i in group {
            let (i, yr) = (i as usize, y.rank[i as usize] as usize);
            concordant += w[i] * below.prefix(yr);
            discordant += w[i] * above.prefix(levels - 1 - yr);
            if y_ties {
                tied += w[i] * at_level[yr];
            }
        }
        if group.len() > 1 {
            let (sum, sq) = group
                .iter()
                .fold((0.0, 0.0), |(s, q), &i| (s + w[i as usize], q + w[i as usize] * w[i as usize]));
            tied += 0.5 * (sum * sum - sq);
        }
        for &i in group {
            let (i, yr) = (i as usize, y.rank[i as usize] as usize);
            below.add(yr, w[i]);
            above.add(levels - 1 - yr, w[i]);
            if y_ties {
                at_level[yr] += w[i];
            }
        }
        start = end;
    }
    PairMass {
        concordant,
        discordant,
        tied,
    }
}

/// Rows with positive weight at one conditioning point, with the rank
/// structure of every column restricted to them.
struct LocalSample {
    weights: Vec<f64>,
    s_n: f64,
    ranks: Vec<ColumnRanks>,
}

impl LocalSample {
    fn new(data: &ObservationMatrix, weights: &NwWeights, columns: &[usize]) -> Self {
        let rows: Vec<usize> = (0..weights.weights.len())
            .filter(|&i| weights.weights[i] > 0.0)
            .collect();
        let mut ranks = Vec::with_capacity(data.p());
        for j in 0..data.p() {
            if columns.contains(&j) {
                let col = data.column(j);
                let local: Vec<f64> = rows.iter().map(|&i| col[i]).collect();
                ranks.push(column_ranks(&local));
            } else {
                ranks.push(column_ranks(&[]));
            }
        }
        Self {
            weights: rows.iter().map(|&i| weights.weights[i]).collect(),
            s_n: weights.s_n,
            ranks,
        }
    }

    fn value(&self, a: usize, b: usize, variant: CktVariant) -> Result<f64> {
        pair_mass(&self.ranks[a], &self.ranks[b], &self.weights).value(variant, self.s_n)
    }
}

/// Conditional Kendall's tau of two equally long samples under given
/// weights.
pub fn conditional_kendall_weighted(
    x: &[f64],
    y: &[f64],
    weights: &NwWeights,
    variant: CktVariant,
) -> Result<f64> {
    let n = weights.weights.len();
    for len in [x.len(), y.len()] {
        if len != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: len,
            });
        }
    }
    if n < 2 {
        return Err(Error::DegenerateSample {
            required: 2,
            actual: n,
        });
    }
    let data = ObservationMatrix::from_columns(vec![x.to_vec(), y.to_vec()])?;
    LocalSample::new(&data, weights, &[0, 1]).value(0, 1, variant)
}

/// Conditional Kendall's tau of columns `cols` given Z = z.
pub fn conditional_kendall_pair(
    data: &ObservationMatrix,
    cols: (usize, usize),
    z_samples: &ObservationMatrix,
    z: &[f64],
    kernel: &KernelSpec,
    variant: CktVariant,
) -> Result<f64> {
    data.check_column(cols.0)?;
    data.check_column(cols.1)?;
    check_rows(data, z_samples)?;
    let weights = nw_weights(z_samples, z, kernel)?;
    LocalSample::new(data, &weights, &[cols.0, cols.1]).value(cols.0, cols.1, variant)
}

/// Reference implementation of the three double sums by enumeration, O(n^2).
pub fn conditional_kendall_brute(
    x: &[f64],
    y: &[f64],
    weights: &NwWeights,
    variant: CktVariant,
) -> Result<f64> {
    let w = &weights.weights;
    let (mut c, mut d, mut t) = (0.0, 0.0, 0.0);
    for i in 0..w.len() {
        for k in 0..w.len() {
            if i == k {
                continue;
            }
            let ww = w[i] * w[k];
            if x[i] < x[k] && y[i] < y[k] {
                c += ww;
            } else if x[i] < x[k] && y[i] > y[k] {
                d += ww;
            } else if i < k && (x[i] == x[k] || y[i] == y[k]) {
                t += ww;
            }
        }
    }
    PairMass {
        concordant: c,
        discordant: d,
        tied: t,
    }
    .value(variant, weights.s_n)
}

fn check_rows(data: &ObservationMatrix, z_samples: &ObservationMatrix) -> Result<()> {
    if data.n() != z_samples.n() {
        return Err(Error::LengthMismatch {
            expected: data.n(),
            actual: z_samples.n(),
        });
    }
    Ok(())
}

/// Rescaled conditional taus of the listed column pairs at every grid point,
/// evaluated serially. A grid point without local data yields an error in
/// its own slot only.
pub fn conditional_pair_values(
    data: &ObservationMatrix,
    pairs: &[(usize, usize)],
    z_samples: &ObservationMatrix,
    grid: &ConditioningGrid,
    kernel: &KernelSpec,
) -> Result<Vec<Result<Vec<f64>>>> {
    check_rows(data, z_samples)?;
    if grid.dim() != z_samples.p() {
        return Err(Error::LengthMismatch {
            expected: z_samples.p(),
            actual: grid.dim(),
        });
    }
    let mut columns = Vec::new();
    for &(a, b) in pairs {
        data.check_column(a)?;
        data.check_column(b)?;
        if a == b {
            return Err(Error::InvalidPair(a, b));
        }
        columns.extend([a, b]);
    }
    columns.sort_unstable();
    columns.dedup();
    Ok(grid
        .points()
        .iter()
        .map(|z| {
            let weights = nw_weights(z_samples, z, kernel)?;
            let local = LocalSample::new(data, &weights, &columns);
            pairs
                .iter()
                .map(|&(a, b)| local.value(a, b, CktVariant::Rescaled))
                .collect()
        })
        .collect())
}

/// Averaged conditional Kendall's tau matrices, one per grid point.
///
/// Every entry uses the rescaled estimator. Weights and per-column ranks
/// are computed once per grid point and shared by all pairs. A grid point
/// without local data yields an error in its own slot only.
pub fn conditional_kendall_matrix(
    data: &ObservationMatrix,
    partition: &Partition,
    scheme: &EstimatorScheme,
    z_samples: &ObservationMatrix,
    grid: &ConditioningGrid,
    kernel: &KernelSpec,
) -> Result<Vec<Result<KendallMatrix>>> {
    if partition.p() != data.p() {
        return Err(Error::LengthMismatch {
            expected: data.p(),
            actual: partition.p(),
        });
    }
    check_rows(data, z_samples)?;
    if grid.dim() != z_samples.p() {
        return Err(Error::LengthMismatch {
            expected: z_samples.p(),
            actual: grid.dim(),
        });
    }
    let columns: Vec<usize> = (0..data.p()).collect();
    Ok(grid
        .points()
        .par_iter()
        .map(|z| {
            let weights = nw_weights(z_samples, z, kernel)?;
            let local = LocalSample::new(data, &weights, &columns);
            averaged_matrix_with(partition, scheme, |a, b| local.value(a, b, CktVariant::Rescaled))
        })
        .collect())
}
