use alloc::vec;
use alloc::vec::Vec;

use super::{check_space, AssociativeMemory, ModelError, ModelKind, StoredSet};
use crate::bits::{and_count, any_in_range, BitMatrix, BitVec};
use crate::patterns::{ClusterLayout, NeuronSpace, Pattern};

/// Clustered clique network.
///
/// `W[(a,k),(b,r)] = 1` for `a != b` iff some message activates both
/// neurons; inside a cluster only the diagonal can be set, and it records
/// whether the neuron appears in any stored message.
#[derive(Debug, Clone, PartialEq)]
pub struct GbNetwork {
    space: NeuronSpace,
    layout: ClusterLayout,
    weights: BitMatrix,
    stored: u64,
    stored_set: Option<StoredSet>,
}

impl GbNetwork {
    pub fn new(space: NeuronSpace) -> Result<Self, ModelError> {
        Self::with_retention(space, true)
    }

    pub fn without_stored_set(space: NeuronSpace) -> Result<Self, ModelError> {
        Self::with_retention(space, false)
    }

    pub fn with_retention(space: NeuronSpace, retain: bool) -> Result<Self, ModelError> {
        let layout = space.layout().ok_or(ModelError::NeedsLayout)?;
        Ok(Self {
            space,
            layout,
            weights: BitMatrix::new(space.n()),
            stored: 0,
            stored_set: retain.then(StoredSet::default),
        })
    }

    pub(crate) fn from_weights(
        space: NeuronSpace,
        weights: BitMatrix,
        stored: u64,
        stored_set: Option<StoredSet>,
    ) -> Result<Self, ModelError> {
        let mut net = Self::with_retention(space, false)?;
        net.weights = weights;
        net.stored = stored;
        net.stored_set = stored_set;
        Ok(net)
    }

    #[inline]
    pub fn layout(&self) -> ClusterLayout {
        self.layout
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> bool {
        self.weights.get(i, j)
    }

    /// Whether neuron `i` belongs to at least one stored message.
    #[inline]
    pub fn is_used(&self, i: usize) -> bool {
        self.weights.get(i, i)
    }

    /// `S_(a,k)`: number of active neurons joined to `i`, itself included.
    pub fn field(&self, state: &Pattern, i: usize) -> u32 {
        and_count(self.weights.row(i), state.to_bits().words())
    }

    pub fn fields(&self, state: &Pattern) -> Vec<u32> {
        let mut out = vec![0; self.space.n()];
        self.fields_into(&state.to_bits(), state.len(), &mut out);
        out
    }

    pub(crate) fn fields_into(&self, state: &BitVec, active: usize, out: &mut [u32]) {
        self.weights.symmetric_scores(state, active, out);
    }

    /// SUM-OF-MAX score `s_(a,k)`: clusters holding at least one active
    /// neuron joined to `i`.
    pub fn som_score(&self, state: &Pattern, i: usize) -> u32 {
        let bits = state.to_bits();
        let joint: Vec<u64> = self
            .weights
            .row(i)
            .iter()
            .zip(bits.words())
            .map(|(w, s)| w & s)
            .collect();
        (0..self.layout.clusters())
            .filter(|&b| {
                let block = self.layout.block(b);
                any_in_range(&joint, block.start, block.end)
            })
            .count() as u32
    }

    pub fn som_scores(&self, state: &Pattern) -> Vec<u32> {
        let mut out = vec![0; self.space.n()];
        let mut reach = BitVec::zeros(self.space.n());
        self.som_scores_into(&state.to_bits(), &mut reach, &mut out);
        out
    }

    /// For every cluster, ORs the rows of its active neurons into `reach`
    /// (the neurons joined to that cluster's activity) and counts one per
    /// reached neuron.
    pub(crate) fn som_scores_into(&self, state: &BitVec, reach: &mut BitVec, out: &mut [u32]) {
        out.fill(0);
        let mut active = state.iter_ones().peekable();
        while let Some(&first) = active.peek() {
            let cluster = first / self.layout.per_cluster();
            reach.clear();
            while let Some(&j) = active.peek() {
                if j / self.layout.per_cluster() != cluster {
                    break;
                }
                reach.or_assign(self.weights.row(j));
                active.next();
            }
            for i in reach.iter_ones() {
                out[i] += 1;
            }
        }
    }

    pub(crate) fn set_stored_set(&mut self, set: StoredSet) {
        self.stored_set = Some(set);
    }
}

impl AssociativeMemory for GbNetwork {
    fn kind(&self) -> ModelKind {
        ModelKind::Gb
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
        if !pattern.is_gb_valid() {
            return Err(ModelError::NotGbValid);
        }
        // One active neuron per cluster, so every distinct pair crosses clusters.
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
        i != j && self.weights.get(i, j)
    }
}
