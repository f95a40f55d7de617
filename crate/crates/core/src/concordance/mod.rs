//! Pairwise Kendall's tau, the concordance sign kernel and U-statistic
//! estimators of the auxiliary concordance probabilities.
//!
//! Kendall's tau follows the tau-a convention: tied pairs contribute zero
//! and the denominator is always n(n-1)/2. Counts are accumulated as
//! integers and divided once, so the result does not depend on summation
//! order.

mod merge;
mod quantities;

pub use merge::{concordance_balance_merge, row_concordance_counts};
pub(crate) use merge::{column_ranks, ColumnRanks};
pub use quantities::{
    averaged_quantities, concordance_quantities, AveragingSet, ConcordanceQuantities,
    QuantityOptions,
};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::data::ObservationMatrix;
use crate::error::{Error, Result};
use crate::matrix::KendallMatrix;

/// Sign of `(a.0 - b.0) * (a.1 - b.1)`: +1 concordant, -1 discordant, 0 tied.
///
/// `pair_a` holds the two coordinates of one observation, `pair_b` those of
/// another.
#[inline]
pub fn concordance_sign(pair_a: (f64, f64), pair_b: (f64, f64)) -> i8 {
    let sx = sign(pair_a.0 - pair_b.0);
    let sy = sign(pair_a.1 - pair_b.1);
    sx * sy
}

#[inline]
fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Concordant minus discordant pair count by direct enumeration, O(n^2).
pub fn concordance_balance_brute(x: &[f64], y: &[f64]) -> i64 {
    let n = x.len().min(y.len());
    let mut balance = 0i64;
    for i in 0..n {
        for k in (i + 1)..n {
            balance += concordance_sign((x[i], y[i]), (x[k], y[k])) as i64;
        }
    }
    balance
}

/// True when some value occurs more than once.
pub fn has_ties(v: &[f64]) -> bool {
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    sorted.windows(2).any(|w| w[0] == w[1])
}

fn validate_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::DegenerateSample {
            required: 2,
            actual: x.len(),
        });
    }
    Ok(())
}

/// Number of unordered pairs n(n-1)/2.
#[inline]
pub(crate) fn pair_count(n: usize) -> u64 {
    let n = n as u64;
    n * (n - 1) / 2
}

/// Sample Kendall's tau (tau-a) of two equally long samples.
///
/// Tie-free inputs take the O(n log n) merge-sort route; anything with a
/// tie in either margin is counted by enumeration.
pub fn pairwise_kendall(x: &[f64], y: &[f64]) -> Result<f64> {
    validate_pair(x, y)?;
    let balance = if has_ties(x) || has_ties(y) {
        concordance_balance_brute(x, y)
    } else {
        concordance_balance_merge(x, y)
    };
    Ok(balance as f64 / pair_count(x.len()) as f64)
}

/// Sample Kendall's tau by direct enumeration only.
pub fn pairwise_kendall_brute(x: &[f64], y: &[f64]) -> Result<f64> {
    validate_pair(x, y)?;
    Ok(concordance_balance_brute(x, y) as f64 / pair_count(x.len()) as f64)
}

/// The naive p x p sample Kendall's tau matrix. Only the strict upper
/// triangle is computed.
pub fn kendall_matrix(data: &ObservationMatrix) -> Result<KendallMatrix> {
    let p = data.p();
    let pairs: Vec<(usize, usize)> = (0..p)
        .flat_map(|a| ((a + 1)..p).map(move |b| (a, b)))
        .collect();
    let taus = pairs
        .par_iter()
        .map(|&(a, b)| pairwise_kendall(data.column(a), data.column(b)))
        .collect::<Result<Vec<_>>>()?;
    let mut values = DMatrix::identity(p, p);
    for (&(a, b), tau) in pairs.iter().zip(taus) {
        values[(a, b)] = tau;
        values[(b, a)] = tau;
    }
    Ok(KendallMatrix::naive(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sign_kernel_cases() {
        assert_eq!(concordance_sign((0.0, 0.0), (1.0, 1.0)), 1);
        assert_eq!(concordance_sign((0.0, 1.0), (1.0, 0.0)), -1);
        assert_eq!(concordance_sign((0.0, 0.0), (0.0, 1.0)), 0);
    }

    #[test]
    fn small_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(pairwise_kendall(&x, &[1.0, 2.0, 3.0, 4.0]).unwrap(), 1.0);
        assert_eq!(pairwise_kendall(&x, &[4.0, 3.0, 2.0, 1.0]).unwrap(), -1.0);
        // 5 concordant, 1 discordant pair out of 6
        let tau = pairwise_kendall(&x, &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert_eq!(tau, 4.0 / 6.0);
        assert!((tau - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ties_use_tau_a() {
        // pairs: (1,2):+1 (1,3):+1 (2,3): tie in x -> 0
        let tau = pairwise_kendall(&[1.0, 2.0, 2.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(tau, 2.0 / 3.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            pairwise_kendall(&[1.0], &[1.0]),
            Err(Error::DegenerateSample { .. })
        ));
        assert!(matches!(
            pairwise_kendall(&[1.0, 2.0], &[1.0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn matrix_examples() {
        let same = ObservationMatrix::from_columns(vec![vec![1.0, 2.0, 3.0, 4.0]; 2]).unwrap();
        let m = kendall_matrix(&same).unwrap();
        assert_eq!(m.values(), &DMatrix::from_element(2, 2, 1.0));

        let d = ObservationMatrix::from_columns(vec![
            vec![1.0, 2.0, 3.0, 4.0],
            vec![1.0, 3.0, 2.0, 4.0],
        ])
        .unwrap();
        let m = kendall_matrix(&d).unwrap();
        assert_eq!(m.values()[(0, 1)], 4.0 / 6.0);
        assert_eq!(m.values()[(1, 0)], 4.0 / 6.0);

        let single = ObservationMatrix::from_columns(vec![vec![1.0, 2.0]]).unwrap();
        assert_eq!(kendall_matrix(&single).unwrap().values(), &DMatrix::identity(1, 1));
    }

    fn distinct_sample(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        let pool: Vec<i32> = (0..1000).collect();
        let xs = proptest::sample::subsequence(pool.clone(), n).prop_shuffle();
        let ys = proptest::sample::subsequence(pool, n).prop_shuffle();
        (xs, ys).prop_map(|(xs, ys)| {
            (
                xs.into_iter().map(f64::from).collect(),
                ys.into_iter().map(f64::from).collect(),
            )
        })
    }

    proptest! {
        #[test]
        fn merge_matches_brute((x, y) in (2usize..60).prop_flat_map(distinct_sample)) {
            prop_assert_eq!(concordance_balance_merge(&x, &y), concordance_balance_brute(&x, &y));
        }

        #[test]
        fn symmetric_and_invariant((x, y) in (2usize..40).prop_flat_map(distinct_sample)) {
            let t = pairwise_kendall(&x, &y).unwrap();
            prop_assert_eq!(t, pairwise_kendall(&y, &x).unwrap());
            let cubed: Vec<f64> = x.iter().map(|v| v * v * v + 3.0).collect();
            prop_assert_eq!(t, pairwise_kendall(&cubed, &y).unwrap());
            let neg: Vec<f64> = y.iter().map(|v| -v).collect();
            prop_assert_eq!(-t, pairwise_kendall(&x, &neg).unwrap());
        }
    }
}
