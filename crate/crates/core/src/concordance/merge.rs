#[cfg(test)]
use super::concordance_sign;

/// Concordant minus discordant count in O(n log n).
///
/// Sorts by `x` and counts inversions of `y` with a bottom-up merge sort.
/// Both margins must be free of ties; `pairwise_kendall` routes tied
/// inputs to the enumeration path instead.
pub fn concordance_balance_merge(x: &[f64], y: &[f64]) -> i64 {
    let n = x.len().min(y.len());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let inversions = count_inversions(&mut ys);
    let total = (n as i64) * (n as i64 - 1) / 2;
    total - 2 * inversions as i64
}

fn count_inversions(v: &mut [f64]) -> u64 {
    let n = v.len();
    let mut buf = vec![0.0; n];
    let mut inversions = 0u64;
    let mut width = 1;
    while width < n {
        let mut lo = 0;
        while lo < n {
            let mid = (lo + width).min(n);
            let hi = (lo + 2 * width).min(n);
            if mid < hi {
                let (mut i, mut j, mut k) = (lo, mid, lo);
                while i < mid && j < hi {
                    if v[j] < v[i] {
                        // v[j] jumps over every remaining element of the left run
                        inversions += (mid - i) as u64;
                        buf[k] = v[j];
                        j += 1;
                    } else {
                        buf[k] = v[i];
                        i += 1;
                    }
                    k += 1;
                }
                buf[k..k + (mid - i)].copy_from_slice(&v[i..mid]);
                k += mid - i;
                buf[k..k + (hi - j)].copy_from_slice(&v[j..hi]);
                v[lo..hi].copy_from_slice(&buf[lo..hi]);
            }
            lo += 2 * width;
        }
        width *= 2;
    }
    inversions
}

struct Fenwick {
    tree: Vec<u32>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Self {
            tree: vec![0; n + 1],
        }
    }

    fn add(&mut self, idx: usize) {
        let mut i = idx + 1;
        while i < self.tree.len() {
            self.tree[i] += 1;
            i += i & i.wrapping_neg();
        }
    }

    /// Number of inserted indices strictly below `idx`.
    fn prefix(&self, idx: usize) -> u32 {
        let mut i = idx;
        let mut s = 0;
        while i > 0 {
            s += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        s
    }
}

/// Dense ranks of one column, reusable across every pair it appears in.
pub(crate) struct ColumnRanks {
    /// Row indices sorted by value.
    pub(crate) order: Vec<u32>,
    /// Dense rank of each row (equal values share a rank).
    pub(crate) rank: Vec<u32>,
    /// For each dense rank r, the number of rows with rank <= r.
    pub(crate) at_most: Vec<u32>,
}

impl ColumnRanks {
    /// Number of distinct values.
    pub(crate) fn levels(&self) -> usize {
        self.at_most.len()
    }

    pub(crate) fn has_ties(&self) -> bool {
        self.at_most.len() < self.order.len()
    }
}

pub(crate) fn column_ranks(v: &[f64]) -> ColumnRanks {
    let n = v.len();
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_unstable_by(|&a, &b| v[a as usize].total_cmp(&v[b as usize]));
    let mut rank = vec![0u32; n];
    let mut at_most = Vec::with_capacity(n);
    let mut r = 0u32;
    for (pos, &i) in order.iter().enumerate() {
        if pos > 0 && v[i as usize] != v[order[pos - 1] as usize] {
            at_most.push(pos as u32);
            r += 1;
        }
        rank[i as usize] = r;
    }
    at_most.push(n as u32);
    ColumnRanks {
        order,
        rank,
        at_most,
    }
}

/// For every row i, the number of rows k != i that are strictly concordant
/// with row i on the pair `(x, y)`. O(n log n), ties included.
pub fn row_concordance_counts(x: &[f64], y: &[f64]) -> Vec<u32> {
    let n = x.len().min(y.len());
    row_counts_ranked(&column_ranks(&x[..n]), &column_ranks(&y[..n]))
}

pub(crate) fn row_counts_ranked(x: &ColumnRanks, y: &ColumnRanks) -> Vec<u32> {
    let n = x.order.len();
    let mut fenwick = Fenwick::new(y.at_most.len());
    let mut counts = vec![0u32; n];
    let mut start = 0;
    while start < n {
        let group_rank = x.rank[x.order[start] as usize];
        let mut end = start;
        while end < n && x.rank[x.order[end] as usize] == group_rank {
            end += 1;
        }
        let group = &x.order[start..end];
        // strictly smaller x and strictly smaller y
        for &i in group {
            counts[i as usize] = fenwick.prefix(y.rank[i as usize] as usize);
        }
        for &i in group {
            fenwick.add(y.rank[i as usize] as usize);
        }
        // strictly larger x and y: rows above in y minus those with x <= x_i
        for &i in group {
            let yr = y.rank[i as usize] as usize;
            let x_le_y_le = fenwick.prefix(yr + 1);
            let x_le_y_gt = end as u32 - x_le_y_le;
            let y_gt = n as u32 - y.at_most[yr];
            counts[i as usize] += y_gt - x_le_y_gt;
        }
        start = end;
    }
    counts
}
