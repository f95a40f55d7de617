use serde::{Deserialize, Serialize};

use super::merge::{column_ranks, row_counts_ranked, ColumnRanks};
use super::{concordance_sign, pair_count};
use crate::data::ObservationMatrix;
use crate::error::{Error, Result};

/// Set of column pairs over which quantities were averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AveragingSet {
    /// A single pair (or a single pair of pairs).
    #[default]
    Pair,
    Block,
    Row,
    Diagonal,
}

/// Concordance probabilities P, Q, R, S, T, U.
///
/// * `p`: concordance of one pair between two replications.
/// * `q`: both (1,2) and (1,3) concordant on the same pair.
/// * `r`, `s`: as P and Q but across two pairs sharing one variable.
/// * `t`, `u`: as P and Q but across two pairs with no common variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcordanceQuantities {
    #[serde(rename = "P")]
    pub p: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(rename = "S", default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(rename = "U", default, skip_serializing_if = "Option::is_none")]
    pub u: Option<f64>,
    #[serde(default)]
    pub set: AveragingSet,
}

impl ConcordanceQuantities {
    pub fn new(p: f64, q: f64) -> Self {
        Self {
            p,
            q,
            r: None,
            s: None,
            t: None,
            u: None,
            set: AveragingSet::Pair,
        }
    }

    /// Every quantity set to the same value.
    pub fn constant(v: f64, set: AveragingSet) -> Self {
        Self {
            p: v,
            q: v,
            r: Some(v),
            s: Some(v),
            t: Some(v),
            u: Some(v),
            set,
        }
    }
}

fn check_pair(data: &ObservationMatrix, pair: (usize, usize)) -> Result<()> {
    data.check_column(pair.0)?;
    data.check_column(pair.1)?;
    if pair.0 == pair.1 {
        return Err(Error::InvalidPair(pair.0, pair.1));
    }
    Ok(())
}

fn shared_columns(a: (usize, usize), b: (usize, usize)) -> usize {
    [a.0, a.1]
        .iter()
        .filter(|&&j| j == b.0 || j == b.1)
        .count()
}

/// Brute-force U-statistic estimates by exhaustive enumeration of row
/// subsets, O(n^3).
///
/// Without `pair2` only P and Q of `pair1` are produced. With `pair2`,
/// R and S are produced when the pairs share one column, T and U when they
/// share none.
pub fn concordance_quantities(
    data: &ObservationMatrix,
    pair1: (usize, usize),
    pair2: Option<(usize, usize)>,
) -> Result<ConcordanceQuantities> {
    let n = data.n();
    if n < 3 {
        return Err(Error::DegenerateSample {
            required: 3,
            actual: n,
        });
    }
    check_pair(data, pair1)?;
    if let Some(p2) = pair2 {
        check_pair(data, p2)?;
        if shared_columns(pair1, p2) == 2 {
            return Err(Error::InvalidPair(p2.0, p2.1));
        }
    }

    let concordant = |pair: (usize, usize)| -> Vec<bool> {
        let (x, y) = (data.column(pair.0), data.column(pair.1));
        let mut m = vec![false; n * n];
        for i in 0..n {
            for k in 0..n {
                m[i * n + k] = i != k && concordance_sign((x[i], y[i]), (x[k], y[k])) > 0;
            }
        }
        m
    };

    let pairs_total = pair_count(n) as f64;
    let triples_total = (n * (n - 1) * (n - 2)) as f64;

    let first = concordant(pair1);
    let mut c = 0u64;
    for i in 0..n {
        for k in (i + 1)..n {
            c += first[i * n + k] as u64;
        }
    }
    let q_count = ordered_triples(n, &first, &first);
    let mut out = ConcordanceQuantities::new(c as f64 / pairs_total, q_count as f64 / triples_total);

    if let Some(p2) = pair2 {
        let second = concordant(p2);
        let mut both = 0u64;
        for i in 0..n {
            for k in (i + 1)..n {
                both += (first[i * n + k] && second[i * n + k]) as u64;
            }
        }
        let joint = both as f64 / pairs_total;
        let triple = ordered_triples(n, &first, &second) as f64 / triples_total;
        if shared_columns(pair1, p2) == 1 {
            out.r = Some(joint);
            out.s = Some(triple);
        } else {
            out.t = Some(joint);
            out.u = Some(triple);
        }
    }
    Ok(out)
}

/// Number of ordered distinct triples (i, k, l) with a(i,k) and b(i,l).
fn ordered_triples(n: usize, a: &[bool], b: &[bool]) -> u64 {
    let mut count = 0u64;
    for i in 0..n {
        for k in 0..n {
            if k == i || !a[i * n + k] {
                continue;
            }
            for l in 0..n {
                if l != i && l != k && b[i * n + l] {
                    count += 1;
                }
            }
        }
    }
    count
}

/// Options for [`averaged_quantities`].
#[derive(Debug, Clone, Copy, Default)]
pub struct QuantityOptions {
    /// Use only the first `m` rows for the pair-level counts (R, T and the
    /// k = l correction of S, U). `None` uses every row and gives the exact
    /// U-statistics; a cap keeps very large samples tractable.
    pub pair_rows: Option<usize>,
}

/// Quantities averaged over a set of column pairs.
///
/// P and Q are averaged over the pairs; R and S over ordered combinations
/// of distinct pairs sharing one column; T and U over ordered combinations
/// with no shared column. Per-row concordance counts make P, Q, S and U cost
/// O(n log n) per pair; R and T need O(m^2) work over row pairs.
pub fn averaged_quantities(
    data: &ObservationMatrix,
    pairs: &[(usize, usize)],
    set: AveragingSet,
    options: QuantityOptions,
) -> Result<ConcordanceQuantities> {
    let n = data.n();
    if n < 3 {
        return Err(Error::DegenerateSample {
            required: 3,
            actual: n,
        });
    }
    if pairs.is_empty() {
        return Err(Error::Config("empty pair set".into()));
    }
    for &p in pairs {
        check_pair(data, p)?;
    }
    for (i, &a) in pairs.iter().enumerate() {
        for &b in &pairs[i + 1..] {
            if shared_columns(a, b) == 2 {
                return Err(Error::InvalidPair(b.0, b.1));
            }
        }
    }

    // compact variable indexing
    let mut vars: Vec<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    vars.sort_unstable();
    vars.dedup();
    let var_index = |j: usize| vars.binary_search(&j).expect("column listed in vars");
    let ranks: Vec<ColumnRanks> = vars.iter().map(|&j| column_ranks(data.column(j))).collect();

    let l = pairs.len();
    let mut multiplicity = vec![0u64; vars.len()];
    for &(a, b) in pairs {
        multiplicity[var_index(a)] += 1;
        multiplicity[var_index(b)] += 1;
    }
    let n_overlap: u64 = multiplicity.iter().map(|m| m * m.saturating_sub(1)).sum();
    let n_combos = (l * (l - 1)) as u64;
    let n_disjoint = n_combos - n_overlap;

    let mut conc_total = 0u64;
    let mut q_num = 0u128;
    let mut self_sq = 0u128;
    let mut all_sum = vec![0u64; if l > 1 { n } else { 0 }];
    let mut var_sum = vec![vec![0u64; n]; if n_overlap > 0 { vars.len() } else { 0 }];

    for &(a, b) in pairs {
        let counts = row_counts_ranked(&ranks[var_index(a)], &ranks[var_index(b)]);
        for (i, &c) in counts.iter().enumerate() {
            let c64 = c as u64;
            conc_total += c64;
            q_num += (c64 * c64.saturating_sub(1)) as u128;
            self_sq += (c64 * c64) as u128;
            if l > 1 {
                all_sum[i] += c64;
            }
        }
        if n_overlap > 0 {
            for v in [var_index(a), var_index(b)] {
                for (acc, &c) in var_sum[v].iter_mut().zip(&counts) {
                    *acc += c as u64;
                }
            }
        }
    }

    let nn = n as f64;
    let pairs_ordered = nn * (nn - 1.0);
    let triples = nn * (nn - 1.0) * (nn - 2.0);
    let mut out = ConcordanceQuantities::new(
        conc_total as f64 / (pairs_ordered * l as f64),
        q_num as f64 / (triples * l as f64),
    );
    out.set = set;
    if l == 1 {
        return Ok(out);
    }

    let total_sq: u128 = all_sum.iter().map(|&s| (s as u128) * (s as u128)).sum();
    let var_sq: u128 = var_sum
        .iter()
        .flat_map(|v| v.iter().map(|&s| (s as u128) * (s as u128)))
        .sum();
    let overlap_prod = if n_overlap > 0 { var_sq - 2 * self_sq } else { 0 };
    let disjoint_prod = total_sq - self_sq - overlap_prod;

    let m = options.pair_rows.unwrap_or(n).min(n);
    if m < 2 {
        return Err(Error::Config("pair_rows must be at least 2".into()));
    }
    let (overlap_pairs, disjoint_pairs) = pair_level_counts(data, pairs, &vars, m);
    let row_pairs = pair_count(m) as f64;

    // Sum over i of c_i^a c_i^b counts k = l; remove those with the
    // pair-level count (2 per unordered row pair).
    let triple_numerator = |prod: u128, both: u64| -> f64 {
        if m == n {
            (prod as i128 - 2 * both as i128) as f64
        } else {
            let scale = (nn * (nn - 1.0)) / (m as f64 * (m as f64 - 1.0));
            prod as f64 - 2.0 * both as f64 * scale
        }
    };

    if n_overlap > 0 {
        out.r = Some(overlap_pairs as f64 / (row_pairs * n_overlap as f64));
        out.s = Some(triple_numerator(overlap_prod, overlap_pairs) / (triples * n_overlap as f64));
    }
    if n_disjoint > 0 {
        out.t = Some(disjoint_pairs as f64 / (row_pairs * n_disjoint as f64));
        out.u =
            Some(triple_numerator(disjoint_prod, disjoint_pairs) / (triples * n_disjoint as f64));
    }
    Ok(out)
}

/// Over unordered row pairs among the first `m` rows, the number of
/// (row pair, ordered pair-combination) incidences where both column pairs
/// are concordant, split into overlapping and disjoint combinations.
fn pair_level_counts(
    data: &ObservationMatrix,
    pairs: &[(usize, usize)],
    vars: &[usize],
    m: usize,
) -> (u64, u64) {
    let idx: Vec<(usize, usize)> = pairs
        .iter()
        .map(|&(a, b)| {
            (
                vars.binary_search(&a).unwrap(),
                vars.binary_search(&b).unwrap(),
            )
        })
        .collect();
    let cols: Vec<&[f64]> = vars.iter().map(|&j| &data.column(j)[..m]).collect();
    let mut signs = vec![0i8; vars.len()];
    let mut per_var = vec![0u64; vars.len()];
    let (mut overlap, mut disjoint) = (0u64, 0u64);
    for i in 0..m {
        for k in (i + 1)..m {
            for (v, col) in cols.iter().enumerate() {
                let d = col[i] - col[k];
                signs[v] = if d > 0.0 {
                    1
                } else if d < 0.0 {
                    -1
                } else {
                    0
                };
                per_var[v] = 0;
            }
            let mut tot = 0u64;
            for &(a, b) in &idx {
                if signs[a] * signs[b] > 0 {
                    tot += 1;
                    per_var[a] += 1;
                    per_var[b] += 1;
                }
            }
            if tot < 2 {
                continue;
            }
            let var_sq: u64 = per_var.iter().map(|s| s * s).sum();
            let ov = var_sq - 2 * tot;
            overlap += ov;
            disjoint += tot * tot - tot - ov;
        }
    }
    (overlap, disjoint)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concordance::pairwise_kendall;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_data(n: usize, p: usize, seed: u64, ties: bool) -> ObservationMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shared: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let cols = (0..p)
            .map(|_| {
                (0..n)
                    .map(|i| {
                        let v = shared[i] + rng.random::<f64>();
                        if ties {
                            (v * 3.0).round()
                        } else {
                            v
                        }
                    })
                    .collect()
            })
            .collect();
        ObservationMatrix::from_columns(cols).unwrap()
    }

    #[test]
    fn comonotone_block_is_certain() {
        let col: Vec<f64> = (0..8).map(f64::from).collect();
        let data = ObservationMatrix::from_columns(vec![col; 4]).unwrap();
        let q = concordance_quantities(&data, (0, 1), Some((0, 2))).unwrap();
        assert_eq!((q.p, q.q, q.r, q.s), (1.0, 1.0, Some(1.0), Some(1.0)));
        let q = concordance_quantities(&data, (0, 1), Some((2, 3))).unwrap();
        assert_eq!((q.t, q.u), (Some(1.0), Some(1.0)));
    }

    #[test]
    fn errors() {
        let data = random_data(5, 3, 1, false);
        assert!(matches!(
            concordance_quantities(&data, (1, 1), None),
            Err(Error::InvalidPair(1, 1))
        ));
        assert!(matches!(
            concordance_quantities(&data, (0, 1), Some((1, 0))),
            Err(Error::InvalidPair(..))
        ));
        let tiny = random_data(2, 2, 1, false);
        assert!(matches!(
            concordance_quantities(&tiny, (0, 1), None),
            Err(Error::DegenerateSample { .. })
        ));
    }

    #[test]
    fn p_matches_kendall_and_q_bounded() {
        for seed in 0..20 {
            let data = random_data(12, 2, seed, false);
            let q = concordance_quantities(&data, (0, 1), None).unwrap();
            let tau = pairwise_kendall(data.column(0), data.column(1)).unwrap();
            assert!(((1.0 + tau) / 2.0 - q.p).abs() <= f64::EPSILON);
            assert!(q.q <= q.p);
        }
    }

    #[test]
    fn fast_path_matches_enumeration_exactly() {
        for (seed, ties) in [(3, false), (4, true), (5, false)] {
            let data = random_data(11, 4, seed, ties);
            let single = averaged_quantities(&data, &[(0, 1)], AveragingSet::Pair, Default::default())
                .unwrap();
            let brute = concordance_quantities(&data, (0, 1), None).unwrap();
            assert_eq!((single.p, single.q), (brute.p, brute.q));

            let overlap =
                averaged_quantities(&data, &[(0, 1), (0, 2)], AveragingSet::Pair, Default::default())
                    .unwrap();
            let brute = concordance_quantities(&data, (0, 1), Some((0, 2))).unwrap();
            assert_eq!((overlap.r, overlap.s), (brute.r, brute.s));
            assert_eq!((overlap.t, overlap.u), (None, None));

            let disjoint =
                averaged_quantities(&data, &[(0, 1), (2, 3)], AveragingSet::Pair, Default::default())
                    .unwrap();
            let brute = concordance_quantities(&data, (0, 1), Some((2, 3))).unwrap();
            assert_eq!((disjoint.t, disjoint.u), (brute.t, brute.u));
        }
    }

    #[test]
    fn block_average_matches_mean_of_enumerations() {
        let data = random_data(9, 5, 11, false);
        // block {0,1} x {2,3,4}
        let pairs: Vec<(usize, usize)> = [0, 1]
            .iter()
            .flat_map(|&a| [2, 3, 4].map(|b| (a, b)))
            .collect();
        let fast = averaged_quantities(&data, &pairs, AveragingSet::Block, Default::default()).unwrap();

        let (mut p, mut q) = (0.0, 0.0);
        let (mut r, mut s, mut n_ov) = (0.0, 0.0, 0.0);
        let (mut t, mut u, mut n_dj) = (0.0, 0.0, 0.0);
        for &a in &pairs {
            let single = concordance_quantities(&data, a, None).unwrap();
            p += single.p;
            q += single.q;
            for &b in &pairs {
                if a == b {
                    continue;
                }
                let c = concordance_quantities(&data, a, Some(b)).unwrap();
                if let (Some(rv), Some(sv)) = (c.r, c.s) {
                    r += rv;
                    s += sv;
                    n_ov += 1.0;
                } else {
                    t += c.t.unwrap();
                    u += c.u.unwrap();
                    n_dj += 1.0;
                }
            }
        }
        let k = pairs.len() as f64;
        assert_eq!(n_ov, 6.0 * 3.0);
        assert_eq!(n_dj, 6.0 * 2.0);
        let close = |a: f64, b: f64| assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        close(fast.p, p / k);
        close(fast.q, q / k);
        close(fast.r.unwrap(), r / n_ov);
        close(fast.s.unwrap(), s / n_ov);
        close(fast.t.unwrap(), t / n_dj);
        close(fast.u.unwrap(), u / n_dj);
    }

    #[test]
    fn capped_pair_rows_stay_close() {
        let data = random_data(300, 4, 2, false);
        let pairs = [(0, 2), (1, 3), (0, 3)];
        let exact = averaged_quantities(&data, &pairs, AveragingSet::Block, Default::default()).unwrap();
        let capped = averaged_quantities(
            &data,
            &pairs,
            AveragingSet::Block,
            QuantityOptions {
                pair_rows: Some(150),
            },
        )
        .unwrap();
        assert_eq!(exact.q, capped.q);
        assert!((exact.u.unwrap() - capped.u.unwrap()).abs() < 1e-3);
        assert!((exact.t.unwrap() - capped.t.unwrap()).abs() < 0.05);
    }
}
