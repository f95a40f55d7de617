use crate::error::{Error, Result};

/// Assignment of p columns to K non-empty groups.
///
/// Group ids are 0-based internally; file formats and the CLI use 1-based
/// ids. Members of each group are kept sorted by column index, so "the first
/// element" of a group is its smallest column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    membership: Vec<usize>,
    groups: Vec<Vec<usize>>,
}

impl Partition {
    /// From a length-p membership vector with ids in `0..K`, every id used.
    pub fn new(membership: Vec<usize>) -> Result<Self> {
        if membership.is_empty() {
            return Err(Error::InvalidPartition("no columns".into()));
        }
        let k = membership.iter().max().unwrap() + 1;
        let mut groups = vec![Vec::new(); k];
        for (j, &g) in membership.iter().enumerate() {
            groups[g].push(j);
        }
        if let Some(empty) = groups.iter().position(Vec::is_empty) {
            return Err(Error::InvalidPartition(format!("group {} is empty", empty + 1)));
        }
        Ok(Self { membership, groups })
    }

    /// From 1-based group ids as found in group files.
    pub fn from_one_based(membership: &[usize]) -> Result<Self> {
        if membership.contains(&0) {
            return Err(Error::InvalidPartition("group ids start at 1".into()));
        }
        Self::new(membership.iter().map(|g| g - 1).collect())
    }

    /// From explicit groups of column indices covering `0..p` exactly once.
    pub fn from_groups(groups: &[Vec<usize>], p: usize) -> Result<Self> {
        let mut membership = vec![usize::MAX; p];
        for (g, members) in groups.iter().enumerate() {
            for &j in members {
                if j >= p {
                    return Err(Error::ColumnOutOfRange { index: j, p });
                }
                if membership[j] != usize::MAX {
                    return Err(Error::InvalidPartition(format!(
                        "column {j} assigned twice"
                    )));
                }
                membership[j] = g;
            }
        }
        if let Some(j) = membership.iter().position(|&g| g == usize::MAX) {
            return Err(Error::InvalidPartition(format!("column {j} unassigned")));
        }
        Self::new(membership)
    }

    /// Consecutive groups of the given sizes.
    pub fn contiguous(sizes: &[usize]) -> Result<Self> {
        let membership = sizes
            .iter()
            .enumerate()
            .flat_map(|(g, &s)| std::iter::repeat_n(g, s))
            .collect();
        Self::new(membership)
    }

    pub fn p(&self) -> usize {
        self.membership.len()
    }

    pub fn k(&self) -> usize {
        self.groups.len()
    }

    pub fn group_of(&self, column: usize) -> usize {
        self.membership[column]
    }

    pub fn membership(&self) -> &[usize] {
        &self.membership
    }

    /// Sorted column indices of group `k`.
    pub fn group(&self, k: usize) -> &[usize] {
        &self.groups[k]
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }

    /// Column order that places the groups one after another.
    pub fn grouped_order(&self) -> Vec<usize> {
        self.groups.iter().flatten().copied().collect()
    }

    /// The partition seen after relabelling column `j` as `perm[j]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.p() {
            return Err(Error::LengthMismatch {
                expected: self.p(),
                actual: perm.len(),
            });
        }
        let mut membership = vec![0; self.p()];
        for (j, &to) in perm.iter().enumerate() {
            membership[to] = self.membership[j];
        }
        Self::new(membership)
    }
}
