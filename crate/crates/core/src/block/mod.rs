//! Partitions of the columns into groups and the averaging estimators of
//! the Kendall's tau matrix under a block structure.
//!
//! Within-group entries are always plain pairwise taus. Each off-diagonal
//! block (k1, k2) is filled with the mean of the pairwise taus over a pair
//! set chosen by the scheme: the whole block, the first N pairs of its first
//! line, the first N pairs of its diagonal, or N pairs drawn at random.

mod partition;
mod scheme;

pub use partition::Partition;
pub use scheme::{AveragingCount, EstimatorScheme, SchemeKind};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::concordance::pairwise_kendall;
use crate::data::ObservationMatrix;
use crate::error::{Error, Result};
use crate::matrix::KendallMatrix;
use crate::seed::derive_seed;

/// Column pairs whose taus are averaged for the block (k1, k2). The first
/// element of each pair lies in group k1.
pub fn block_pair_set(
    partition: &Partition,
    k1: usize,
    k2: usize,
    scheme: &EstimatorScheme,
) -> Result<Vec<(usize, usize)>> {
    if k1 >= partition.k() || k2 >= partition.k() {
        return Err(Error::InvalidPartition(format!(
            "block ({}, {}) outside {} groups",
            k1 + 1,
            k2 + 1,
            partition.k()
        )));
    }
    if k1 == k2 {
        return Err(Error::InvalidPartition(
            "averaging applies to off-diagonal blocks only".into(),
        ));
    }
    let (g1, g2) = (partition.group(k1), partition.group(k2));
    let n = scheme.count_for(partition, k1, k2)?;
    let pairs = match scheme.kind {
        SchemeKind::Naive | SchemeKind::Block => full_block(g1, g2),
        SchemeKind::Row => {
            if g1.len() >= g2.len() {
                g1[..n].iter().map(|&a| (a, g2[0])).collect()
            } else {
                g2[..n].iter().map(|&b| (g1[0], b)).collect()
            }
        }
        SchemeKind::Diagonal => (0..n).map(|i| (g1[i], g2[i])).collect(),
        SchemeKind::Random => {
            // draw on the ordered block so (k1, k2) and (k2, k1) agree
            let (lo, hi) = if k1 < k2 { (g1, g2) } else { (g2, g1) };
            let stream = derive_seed(scheme.seed, &[k1.min(k2) as u64, k1.max(k2) as u64]);
            let mut rng = ChaCha8Rng::seed_from_u64(stream);
            let mut picks = rand::seq::index::sample(&mut rng, lo.len() * hi.len(), n).into_vec();
            picks.sort_unstable();
            picks
                .into_iter()
                .map(|idx| {
                    let (a, b) = (lo[idx / hi.len()], hi[idx % hi.len()]);
                    if k1 < k2 {
                        (a, b)
                    } else {
                        (b, a)
                    }
                })
                .collect()
        }
    };
    Ok(pairs)
}

fn full_block(g1: &[usize], g2: &[usize]) -> Vec<(usize, usize)> {
    g1.iter()
        .flat_map(|&a| g2.iter().map(move |&b| (a, b)))
        .collect()
}

/// Averaged Kendall's tau matrix of `data` under `partition` and `scheme`.
///
/// Only the pairwise taus the scheme needs are computed.
pub fn averaged_kendall_matrix(
    data: &ObservationMatrix,
    partition: &Partition,
    scheme: &EstimatorScheme,
) -> Result<KendallMatrix> {
    if partition.p() != data.p() {
        return Err(Error::LengthMismatch {
            expected: data.p(),
            actual: partition.p(),
        });
    }
    averaged_matrix_with(partition, scheme, |a, b| {
        pairwise_kendall(data.column(a), data.column(b))
    })
}

/// Assembles an averaged matrix from an arbitrary pairwise estimator.
///
/// `pair_value(a, b)` is called exactly once for every pair the scheme
/// needs: all within-group pairs plus the union of the off-diagonal pair
/// sets.
pub fn averaged_matrix_with<F>(
    partition: &Partition,
    scheme: &EstimatorScheme,
    pair_value: F,
) -> Result<KendallMatrix>
where
    F: Fn(usize, usize) -> Result<f64> + Sync,
{
    let p = partition.p();
    let k = partition.k();

    let mut work: Vec<(usize, usize)> = Vec::new();
    for g in 0..k {
        let members = partition.group(g);
        for (i, &a) in members.iter().enumerate() {
            work.extend(members[i + 1..].iter().map(|&b| (a, b)));
        }
    }
    let mut block_sets = Vec::new();
    for k1 in 0..k {
        for k2 in (k1 + 1)..k {
            let set = block_pair_set(partition, k1, k2, scheme)?;
            let start = work.len();
            work.extend_from_slice(&set);
            block_sets.push((k1, k2, start..work.len()));
        }
    }

    let values = work
        .par_iter()
        .map(|&(a, b)| pair_value(a, b))
        .collect::<Result<Vec<f64>>>()?;

    let mut m = DMatrix::identity(p, p);
    let within = work.len() - block_sets.iter().map(|(_, _, r)| r.len()).sum::<usize>();
    for (&(a, b), &v) in work[..within].iter().zip(&values) {
        m[(a, b)] = v;
        m[(b, a)] = v;
    }
    for (k1, k2, range) in block_sets {
        if scheme.kind == SchemeKind::Naive {
            for (&(a, b), &v) in work[range.clone()].iter().zip(&values[range]) {
                m[(a, b)] = v;
                m[(b, a)] = v;
            }
            continue;
        }
        let mean = values[range.clone()].iter().sum::<f64>() / range.len() as f64;
        for &a in partition.group(k1) {
            for &b in partition.group(k2) {
                m[(a, b)] = mean;
                m[(b, a)] = mean;
            }
        }
    }
    Ok(KendallMatrix::new(m, scheme.clone(), Some(partition.clone())))
}

/// Spread of the entries of one off-diagonal block around their mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockResidual {
    pub k1: usize,
    pub k2: usize,
    pub mean: f64,
    /// max |tau_ij - mean| over the block.
    pub residual: f64,
}

/// Per off-diagonal block, the largest deviation of a (naive) matrix entry
/// from the block mean. Small values support the block structure.
pub fn structure_residual(naive: &KendallMatrix, partition: &Partition) -> Result<Vec<BlockResidual>> {
    if naive.p() != partition.p() {
        return Err(Error::LengthMismatch {
            expected: naive.p(),
            actual: partition.p(),
        });
    }
    let mut out = Vec::new();
    for k1 in 0..partition.k() {
        for k2 in (k1 + 1)..partition.k() {
            let entries: Vec<f64> = full_block(partition.group(k1), partition.group(k2))
                .into_iter()
                .map(|(a, b)| naive.get(a, b))
                .collect();
            let mean = entries.iter().sum::<f64>() / entries.len() as f64;
            let residual = entries.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
            out.push(BlockResidual {
                k1,
                k2,
                mean,
                residual,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn paper_partition() -> Partition {
        // columns 1..4 in the first group, 5..7 in the second (0-based here)
        Partition::contiguous(&[4, 3]).unwrap()
    }

    #[test]
    fn row_and_diagonal_sets() {
        let p = paper_partition();
        let row = block_pair_set(&p, 0, 1, &EstimatorScheme::row(AveragingCount::Fixed(3))).unwrap();
        assert_eq!(row, vec![(0, 4), (1, 4), (2, 4)]);
        let diag =
            block_pair_set(&p, 0, 1, &EstimatorScheme::diagonal(AveragingCount::Fixed(3))).unwrap();
        assert_eq!(diag, vec![(0, 4), (1, 5), (2, 6)]);
        // smaller first group: iterate along the second
        let row = block_pair_set(&p, 1, 0, &EstimatorScheme::row(AveragingCount::Fixed(2))).unwrap();
        assert_eq!(row, vec![(4, 0), (4, 1)]);
    }

    #[test]
    fn row_tie_iterates_first_group() {
        let p = Partition::contiguous(&[2, 2]).unwrap();
        let row = block_pair_set(&p, 0, 1, &EstimatorScheme::row(AveragingCount::Fixed(2))).unwrap();
        assert_eq!(row, vec![(0, 2), (1, 2)]);
    }

    #[test]
    fn count_bounds() {
        let p = paper_partition();
        for (scheme, bad) in [
            (EstimatorScheme::row(AveragingCount::Fixed(5)), 5),
            (EstimatorScheme::diagonal(AveragingCount::Fixed(4)), 4),
            (EstimatorScheme::random(AveragingCount::Fixed(13), 1), 13),
            (EstimatorScheme::random(AveragingCount::Fixed(0), 1), 0),
        ] {
            assert!(matches!(
                block_pair_set(&p, 0, 1, &scheme),
                Err(Error::InvalidN { n, .. }) if n == bad
            ));
        }
        assert!(block_pair_set(&p, 0, 1, &EstimatorScheme::row(AveragingCount::Fixed(4))).is_ok());
    }

    #[test]
    fn exhaustive_random_is_full_block() {
        let p = paper_partition();
        let mut set =
            block_pair_set(&p, 0, 1, &EstimatorScheme::random(AveragingCount::Fixed(12), 9)).unwrap();
        set.sort_unstable();
        assert_eq!(set, block_pair_set(&p, 0, 1, &EstimatorScheme::block()).unwrap());
    }

    #[test]
    fn random_is_deterministic_and_symmetric() {
        let p = paper_partition();
        let s = EstimatorScheme::random(AveragingCount::Fixed(5), 42);
        let a = block_pair_set(&p, 0, 1, &s).unwrap();
        assert_eq!(a, block_pair_set(&p, 0, 1, &s).unwrap());
        let b: Vec<_> = block_pair_set(&p, 1, 0, &s)
            .unwrap()
            .into_iter()
            .map(|(x, y)| (y, x))
            .collect();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
    }

    #[test]
    fn call_accounting() {
        let p = Partition::contiguous(&[4, 3, 5]).unwrap();
        for scheme in [
            EstimatorScheme::row(AveragingCount::MinGroupSize),
            EstimatorScheme::diagonal(AveragingCount::MinGroupSize),
        ] {
            let calls = AtomicUsize::new(0);
            averaged_matrix_with(&p, &scheme, |_, _| {
                calls.fetch_add(1, Ordering::Relaxed);
                Ok(0.0)
            })
            .unwrap();
            // N = min sizes: 3 + 4 + 3, within: 6 + 3 + 10
            assert_eq!(calls.into_inner(), 10 + 19);
        }
    }

    #[test]
    fn residuals() {
        let p = Partition::contiguous(&[1, 2]).unwrap();
        let mut m = DMatrix::identity(3, 3);
        for (a, b, v) in [(0, 1, 0.1), (0, 2, 0.3), (1, 2, 0.5)] {
            m[(a, b)] = v;
            m[(b, a)] = v;
        }
        let r = structure_residual(&KendallMatrix::naive(m), &p).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0].mean - 0.2).abs() < 1e-15);
        assert!((r[0].residual - 0.1).abs() < 1e-15);
    }
}
