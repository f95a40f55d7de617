use blocktau::block::{averaged_kendall_matrix, block_pair_set, AveragingCount, EstimatorScheme, Partition, SchemeKind};
use blocktau::concordance::{kendall_matrix, pairwise_kendall};
use blocktau::conditional::{conditional_kendall_weighted, nw_weights, CktVariant, KernelSpec};
use blocktau::data::ObservationMatrix;
use proptest::prelude::*;

/// tau-a by enumeration; ties count as neither concordant nor discordant.
fn tau_a(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let mut s = 0i64;
    for i in 0..n {
        for k in i + 1..n {
            let v = (x[i] - x[k]).signum() * (y[i] - y[k]).signum();
            if x[i] != x[k] && y[i] != y[k] {
                s += v as i64;
            }
        }
    }
    s as f64 / (n * (n - 1) / 2) as f64
}

fn columns(p: usize, n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    // small integer support keeps ties frequent
    prop::collection::vec(prop::collection::vec((-6i32..6).prop_map(f64::from), n), p)
}

fn scheme_for(kind: SchemeKind, seed: u64) -> EstimatorScheme {
    match kind {
        SchemeKind::Row | SchemeKind::Diagonal => EstimatorScheme::new(kind).with_count(AveragingCount::Fixed(2)),
        SchemeKind::Random => EstimatorScheme::random(AveragingCount::Fixed(3), seed),
        _ => EstimatorScheme::new(kind),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fast_tau_equals_enumeration_with_ties(cols in columns(2, 37)) {
        let fast = pairwise_kendall(&cols[0], &cols[1]).unwrap();
        prop_assert!((fast - tau_a(&cols[0], &cols[1])).abs() < 1e-15);
    }

    #[test]
    fn naive_matrix_is_a_valid_tau_matrix(cols in columns(5, 12)) {
        let m = kendall_matrix(&ObservationMatrix::from_columns(cols).unwrap()).unwrap();
        let v = m.values();
        for i in 0..5 {
            prop_assert_eq!(v[(i, i)], 1.0);
            for j in 0..5 {
                prop_assert_eq!(v[(i, j)], v[(j, i)]);
                prop_assert!(v[(i, j)].abs() <= 1.0);
            }
        }
    }

    #[test]
    fn naive_matrix_follows_any_column_permutation(cols in columns(5, 15), perm in Just((0..5).collect::<Vec<usize>>()).prop_shuffle()) {
        let data = ObservationMatrix::from_columns(cols.clone()).unwrap();
        let permuted = ObservationMatrix::from_columns(perm.iter().map(|&j| cols[j].clone()).collect()).unwrap();
        let (a, b) = (kendall_matrix(&data).unwrap(), kendall_matrix(&permuted).unwrap());
        for i in 0..5 {
            for j in 0..5 {
                prop_assert_eq!(b.get(i, j), a.get(perm[i], perm[j]));
            }
        }
    }

    #[test]
    fn averaged_matrix_follows_order_preserving_interleaving(
        cols in columns(7, 14),
        scheme_idx in 0usize..5,
        seed in any::<u64>(),
        mask in prop::collection::vec(any::<bool>(), 7),
    ) {
        // groups {0,1,2} and {3,4,5,6}; interleave them without reordering
        // the members of either group
        let (mut g1, mut g2) = ((0..3).collect::<Vec<_>>().into_iter(), (3..7).collect::<Vec<_>>().into_iter());
        let mut order = Vec::new();
        for &take_first in &mask {
            match if take_first { g1.next().or_else(|| g2.next()) } else { g2.next().or_else(|| g1.next()) } {
                Some(j) => order.push(j),
                None => break,
            }
        }
        let kind = SchemeKind::ALL[scheme_idx];
        let scheme = scheme_for(kind, seed);

        let data = ObservationMatrix::from_columns(cols.clone()).unwrap();
        let base = averaged_kendall_matrix(&data, &Partition::contiguous(&[3, 4]).unwrap(), &scheme).unwrap();

        let shuffled = ObservationMatrix::from_columns(order.iter().map(|&j| cols[j].clone()).collect()).unwrap();
        let membership: Vec<usize> = order.iter().map(|&j| usize::from(j >= 3)).collect();
        let partition = Partition::new(membership).unwrap();
        let moved = averaged_kendall_matrix(&shuffled, &partition, &scheme).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                prop_assert!((moved.get(i, j) - base.get(order[i], order[j])).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn off_diagonal_entries_are_means_of_their_pair_sets(cols in columns(6, 10), scheme_idx in 0usize..5, seed in any::<u64>()) {
        let data = ObservationMatrix::from_columns(cols.clone()).unwrap();
        let partition = Partition::contiguous(&[2, 4]).unwrap();
        let scheme = scheme_for(SchemeKind::ALL[scheme_idx], seed);
        let m = averaged_kendall_matrix(&data, &partition, &scheme).unwrap();
        if scheme.kind != SchemeKind::Naive {
            let pairs = block_pair_set(&partition, 0, 1, &scheme).unwrap();
            let mean = pairs.iter().map(|&(a, b)| tau_a(&cols[a], &cols[b])).sum::<f64>() / pairs.len() as f64;
            for a in partition.group(0) {
                for b in partition.group(1) {
                    prop_assert!((m.get(*a, *b) - mean).abs() < 1e-14);
                }
            }
        }
        for i in [2usize, 3, 4, 5] {
            for j in [2usize, 3, 4, 5] {
                if i != j {
                    prop_assert!((m.get(i, j) - tau_a(&cols[i], &cols[j])).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn conditional_variants_are_bounded(
        xs in prop::collection::vec(-100.0f64..100.0, 25),
        ys in prop::collection::vec(-100.0f64..100.0, 25),
        zs in prop::collection::vec(0.0f64..1.0, 25),
        z in 0.0f64..1.0,
        h in 0.1f64..1.0,
    ) {
        let z_samples = ObservationMatrix::from_columns(vec![zs]).unwrap();
        let Ok(w) = nw_weights(&z_samples, &[z], &KernelSpec::epanechnikov(h).unwrap()) else {
            return Ok(());
        };
        let eps = 1e-12;
        let s = w.s_n;
        let v1 = conditional_kendall_weighted(&xs, &ys, &w, CktVariant::V1).unwrap();
        let v2 = conditional_kendall_weighted(&xs, &ys, &w, CktVariant::V2).unwrap();
        let v3 = conditional_kendall_weighted(&xs, &ys, &w, CktVariant::V3).unwrap();
        prop_assert!(v1.abs() <= 1.0 - s + eps);
        prop_assert!(v2 >= -1.0 - eps && v2 <= 1.0 - 2.0 * s + eps);
        prop_assert!(v3 >= -1.0 + 2.0 * s - eps && v3 <= 1.0 + eps);
        if let Ok(r) = conditional_kendall_weighted(&xs, &ys, &w, CktVariant::Rescaled) {
            prop_assert!(r.abs() <= 1.0 + eps);
        }
    }
}

#[test]
fn constant_block_value_is_kept_by_every_scheme() {
    // every cross pair is the same permutation, so all pairwise taus agree
    let base: Vec<f64> = vec![3.0, 1.0, 4.0, 1.5, 5.0, 9.0, 2.0, 6.0];
    let other: Vec<f64> = vec![2.0, 7.0, 1.0, 8.0, 2.5, 8.5, 4.5, 0.5];
    let cols = vec![base.clone(), base.clone(), base, other.clone(), other.clone(), other];
    let data = ObservationMatrix::from_columns(cols.clone()).unwrap();
    let partition = Partition::contiguous(&[3, 3]).unwrap();
    let c = tau_a(&cols[0], &cols[3]);
    for (i, kind) in SchemeKind::ALL.into_iter().enumerate() {
        let m = averaged_kendall_matrix(&data, &partition, &scheme_for(kind, i as u64)).unwrap();
        for a in 0..3 {
            for b in 3..6 {
                assert!((m.get(a, b) - c).abs() < 1e-15, "{kind:?}");
            }
        }
    }
}
