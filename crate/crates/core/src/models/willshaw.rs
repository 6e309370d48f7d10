use alloc::vec;
use alloc::vec::Vec;

use super::{check_space, AssociativeMemory, ModelError, ModelKind, StoredSet};
use crate::bits::{and_count, BitMatrix, BitVec};
use crate::patterns::{NeuronSpace, Pattern};

/// Clipped weights `J_ij = 1` iff some stored message activates both `i`
/// and `j`. The diagonal is kept: `J_ii = 1` iff `i` was ever used.
#[derive(Debug, Clone, PartialEq)]
pub struct WillshawNetwork {
    space: NeuronSpace,
    weights: BitMatrix,
    stored: u64,
    stored_set: Option<StoredSet>,
}

impl WillshawNetwork {
    pub fn new(space: NeuronSpace) -> Self {
        Self::with_retention(space, true)
    }

    pub fn without_stored_set(space: NeuronSpace) -> Self {
        Self::with_retention(space, false)
    }

    pub fn with_retention(space: NeuronSpace, retain: bool) -> Self {
        Self {
            space,
            weights: BitMatrix::new(space.n()),
            stored: 0,
            stored_set: retain.then(StoredSet::default),
        }
    }

    pub(crate) fn from_weights(
        space: NeuronSpace,
        weights: BitMatrix,
        stored: u64,
        stored_set: Option<StoredSet>,
    ) -> Self {
        Self {
            space,
            weights,
            stored,
            stored_set,
        }
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> bool {
        self.weights.get(i, j)
    }

    pub fn weights(&self) -> &BitMatrix {
        &self.weights
    }

    /// Score `S_i = sum_j J_ij sigma_j`, own activity included.
    pub fn score(&self, state: &Pattern, i: usize) -> u32 {
        and_count(self.weights.row(i), state.to_bits().words())
    }

    pub fn scores(&self, state: &Pattern) -> Vec<u32> {
        let mut out = vec![0; self.space.n()];
        self.weights
            .symmetric_scores(&state.to_bits(), state.len(), &mut out);
        out
    }

    pub(crate) fn scores_into(&self, state: &BitVec, active: usize, out: &mut [u32]) {
        self.weights.symmetric_scores(state, active, out);
    }

    pub(crate) fn set_stored_set(&mut self, set: StoredSet) {
        self.stored_set = Some(set);
    }
}

impl AssociativeMemory for WillshawNetwork {
    fn kind(&self) -> ModelKind {
        ModelKind::Willshaw
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
        for (x, i) in pattern.iter().enumerate() {
            for j in pattern.iter().skip(x) {
                self.weights.set_sym(i, j);
            }
        }
        self.stored += 1;
        if let Some(set) = &mut self.stored_set {
            set.push(pattern.clone());
        }
        Ok(())
    }

    fn connected(&self, i: usize, j: usize) -> bool {
        self.weights.get(i, j)
    }
}
