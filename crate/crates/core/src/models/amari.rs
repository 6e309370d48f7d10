use alloc::vec;
use alloc::vec::Vec;

use super::{check_space, AssociativeMemory, ModelError, ModelKind, StoredSet};
use crate::bits::BitVec;
use crate::patterns::{NeuronSpace, Pattern};

/// Integer co-activation counts `J_ij = sum_mu xi_i xi_j` for `i != j`.
///
/// Rows are kept in full (both triangles, zero diagonal) so that a local
/// field is a sum of contiguous rows.
#[derive(Debug, Clone, PartialEq)]
pub struct AmariNetwork {
    space: NeuronSpace,
    counts: Vec<u32>,
    row_sums: Vec<u64>,
    stored: u64,
    stored_set: Option<StoredSet>,
}

impl AmariNetwork {
    pub fn new(space: NeuronSpace) -> Self {
        Self::with_retention(space, true)
    }

    pub fn without_stored_set(space: NeuronSpace) -> Self {
        Self::with_retention(space, false)
    }

    pub fn with_retention(space: NeuronSpace, retain: bool) -> Self {
        let n = space.n();
        Self {
            space,
            counts: vec![0; n * n],
            row_sums: vec![0; n],
            stored: 0,
            stored_set: retain.then(StoredSet::default),
        }
    }

    /// Rebuilds a network from its upper-triangle counts (`i < j`, row-major).
    pub(crate) fn from_upper_triangle(
        space: NeuronSpace,
        stored: u64,
        upper: impl IntoIterator<Item = u32>,
        stored_set: Option<StoredSet>,
    ) -> Self {
        let mut net = Self::with_retention(space, false);
        let n = space.n();
        let mut values = upper.into_iter();
        for i in 0..n {
            for j in i + 1..n {
                let v = values.next().expect("triangle length checked by caller");
                net.counts[i * n + j] = v;
                net.counts[j * n + i] = v;
                net.row_sums[i] += u64::from(v);
                net.row_sums[j] += u64::from(v);
            }
        }
        net.stored = stored;
        net.stored_set = stored_set;
        net
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> u32 {
        self.counts[i * self.space.n() + j]
    }

    #[inline]
    fn row(&self, i: usize) -> &[u32] {
        let n = self.space.n();
        &self.counts[i * n..(i + 1) * n]
    }

    /// Local field `S_i = sum_{j != i} J_ij sigma_j`.
    pub fn field(&self, state: &Pattern, i: usize) -> u64 {
        let row = self.row(i);
        state.iter().map(|j| u64::from(row[j])).sum()
    }

    /// All local fields at once.
    pub fn fields(&self, state: &Pattern) -> Vec<u64> {
        let mut out = vec![0; self.space.n()];
        self.fields_into(&state.to_bits(), state.len(), &mut out);
        out
    }

    /// Sums the rows of the active neurons, or subtracts the rows of the
    /// inactive ones from the row totals when that is shorter.
    pub(crate) fn fields_into(&self, state: &BitVec, active: usize, out: &mut [u64]) {
        let n = self.space.n();
        if active <= n / 2 {
            out.fill(0);
            for j in state.iter_ones() {
                for (o, &w) in out.iter_mut().zip(self.row(j)) {
                    *o += u64::from(w);
                }
            }
        } else {
            out.copy_from_slice(&self.row_sums);
            for j in 0..n {
                if !state.get(j) {
                    for (o, &w) in out.iter_mut().zip(self.row(j)) {
                        *o -= u64::from(w);
                    }
                }
            }
        }
    }

    pub(crate) fn set_stored_set(&mut self, set: StoredSet) {
        self.stored_set = Some(set);
    }
}

impl AssociativeMemory for AmariNetwork {
    fn kind(&self) -> ModelKind {
        ModelKind::Amari
    }

    fn space(&self) -> NeuronSpace {
        self.space
    }

    fn stored_count(&self) -> u64 {
        self.stored
    }

    fn stored_set(&self) -> Option<&StoredSet> {
        self.stored_set.as_ref()
    }

    fn store(&mut self, pattern: &Pattern) -> Result<(), ModelError> {
        check_space(self.space, pattern)?;
        let n = self.space.n();
        let others = pattern.len().saturating_sub(1) as u64;
        for i in pattern.iter() {
            for j in pattern.iter() {
                if i != j {
                    self.counts[i * n + j] += 1;
                }
            }
            self.row_sums[i] += others;
        }
        self.stored += 1;
        if let Some(set) = &mut self.stored_set {
            set.push(pattern.clone());
        }
        Ok(())
    }

    fn connected(&self, i: usize, j: usize) -> bool {
        self.weight(i, j) > 0
    }
}
