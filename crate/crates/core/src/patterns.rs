//! Neuron spaces, sparse messages, random message generators and erasure.

use alloc::vec::Vec;
use core::fmt;

use rand::seq::index;
use rand::Rng;
use thiserror::Error;

use crate::bits::BitVec;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PatternError {
    #[error("neuron space needs at least 2 neurons, got {0}")]
    TooFewNeurons(usize),
    #[error("cluster layout needs at least 2 clusters and 1 neuron per cluster, got {clusters}x{per_cluster}")]
    BadLayout { clusters: usize, per_cluster: usize },
    #[error("neuron index {index} out of range for {n} neurons")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("neuron index {0} listed twice")]
    DuplicateIndex(usize),
    #[error("activation probability must lie in (0, 1), got {0}")]
    BadProbability(f64),
    #[error("active count {count} outside 1..={n}")]
    BadActiveCount { count: usize, n: usize },
    #[error("operation needs a clustered neuron space")]
    NoLayout,
    #[error("cannot erase {requested} of {available} active neurons")]
    EraseTooMany { requested: usize, available: usize },
    #[error("erasure fraction must lie in [0, 1), got {0}")]
    BadFraction(f64),
    #[error("patterns live in different neuron spaces")]
    SpaceMismatch,
}

/// `clusters` blocks of `per_cluster` consecutive neurons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ClusterLayout {
    clusters: usize,
    per_cluster: usize,
}

impl ClusterLayout {
    #[inline]
    pub fn clusters(&self) -> usize {
        self.clusters
    }

    #[inline]
    pub fn per_cluster(&self) -> usize {
        self.per_cluster
    }

    /// Neuron range of cluster `a`.
    #[inline]
    pub fn block(&self, a: usize) -> core::ops::Range<usize> {
        a * self.per_cluster..(a + 1) * self.per_cluster
    }
}

/// The neuron universe `0..n`, optionally split into clusters so that neuron
/// `(a, k)` has flat index `a * l + k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NeuronSpace {
    n: usize,
    layout: Option<ClusterLayout>,
}

impl NeuronSpace {
    pub fn flat(n: usize) -> Result<Self, PatternError> {
        if n < 2 {
            return Err(PatternError::TooFewNeurons(n));
        }
        Ok(Self { n, layout: None })
    }

    pub fn clustered(clusters: usize, per_cluster: usize) -> Result<Self, PatternError> {
        if clusters < 2 || per_cluster < 1 {
            return Err(PatternError::BadLayout {
                clusters,
                per_cluster,
            });
        }
        Ok(Self {
            n: clusters * per_cluster,
            layout: Some(ClusterLayout {
                clusters,
                per_cluster,
            }),
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn layout(&self) -> Option<ClusterLayout> {
        self.layout
    }

    pub fn require_layout(&self) -> Result<ClusterLayout, PatternError> {
        self.layout.ok_or(PatternError::NoLayout)
    }

    /// Flat index of `(cluster, offset)`. Panics without a layout.
    #[inline]
    pub fn index(&self, cluster: usize, offset: usize) -> usize {
        let layout = self.layout.expect("clustered space");
        debug_assert!(cluster < layout.clusters && offset < layout.per_cluster);
        cluster * layout.per_cluster + offset
    }

    /// `(cluster, offset)` of a flat index. Panics without a layout.
    #[inline]
    pub fn coords(&self, i: usize) -> (usize, usize) {
        let l = self.layout.expect("clustered space").per_cluster;
        (i / l, i % l)
    }

    #[inline]
    pub fn cluster_of(&self, i: usize) -> Option<usize> {
        self.layout.map(|layout| i / layout.per_cluster)
    }
}

/// A binary message given by its sorted set of active neurons.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Pattern {
    space: NeuronSpace,
    active: Vec<u32>,
}

impl Pattern {
    pub fn empty(space: NeuronSpace) -> Self {
        Self {
            space,
            active: Vec::new(),
        }
    }

    /// Builds a pattern from unsorted, distinct indices.
    pub fn from_indices(
        space: NeuronSpace,
        indices: impl IntoIterator<Item = usize>,
    ) -> Result<Self, PatternError> {
        let mut active = Vec::new();
        for i in indices {
            if i >= space.n {
                return Err(PatternError::IndexOutOfRange {
                    index: i,
                    n: space.n,
                });
            }
            active.push(i as u32);
        }
        active.sort_unstable();
        if let Some(w) = active.windows(2).find(|w| w[0] == w[1]) {
            return Err(PatternError::DuplicateIndex(w[0] as usize));
        }
        Ok(Self { space, active })
    }

    /// Builds a clustered pattern from `(cluster, offset)` pairs.
    pub fn from_coords(
        space: NeuronSpace,
        coords: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, PatternError> {
        let layout = space.require_layout()?;
        let mut flat = Vec::new();
        for (a, k) in coords {
            if a >= layout.clusters || k >= layout.per_cluster {
                return Err(PatternError::IndexOutOfRange {
                    index: a * layout.per_cluster + k,
                    n: space.n,
                });
            }
            flat.push(a * layout.per_cluster + k);
        }
        Self::from_indices(space, flat)
    }

    pub(crate) fn from_bits(space: NeuronSpace, bits: &BitVec) -> Self {
        Self {
            space,
            active: bits.iter_ones().map(|i| i as u32).collect(),
        }
    }

    pub(crate) fn from_sorted_unchecked(space: NeuronSpace, active: Vec<u32>) -> Self {
        debug_assert!(active.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(active.last().is_none_or(|&i| (i as usize) < space.n));
        Self { space, active }
    }

    #[inline]
    pub fn space(&self) -> NeuronSpace {
        self.space
    }

    /// Active neurons in ascending order.
    #[inline]
    pub fn active(&self) -> &[u32] {
        &self.active
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.active.iter().map(|&i| i as usize)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.active.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.active.binary_search(&(i as u32)).is_ok()
    }

    pub fn is_subset_of(&self, other: &Pattern) -> bool {
        self.active
            .iter()
            .all(|i| other.active.binary_search(i).is_ok())
    }

    /// Exactly one active neuron in every cluster.
    pub fn is_gb_valid(&self) -> bool {
        let Some(layout) = self.space.layout else {
            return false;
        };
        self.active.len() == layout.clusters
            && self
                .active
                .iter()
                .enumerate()
                .all(|(a, &i)| i as usize / layout.per_cluster == a)
    }

    pub fn to_bits(&self) -> BitVec {
        BitVec::from_indices(self.space.n, self.iter())
    }
}

impl fmt::Debug for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pattern(n={}, ", self.space.n)?;
        f.debug_set().entries(self.active.iter()).finish()?;
        f.write_str(")")
    }
}

/// Each neuron active independently with probability `p`.
///
/// An all-zero draw is a legal result.
pub fn gen_iid<R: Rng + ?Sized>(
    space: NeuronSpace,
    p: f64,
    rng: &mut R,
) -> Result<Pattern, PatternError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(PatternError::BadProbability(p));
    }
    // Geometric gaps between successive active neurons.
    let log_q = libm::log1p(-p);
    let mut active = Vec::new();
    let mut i = 0usize;
    loop {
        let u: f64 = rng.gen();
        let gap = libm::floor(libm::log1p(-u) / log_q);
        if gap >= (space.n - i) as f64 {
            break;
        }
        i += gap as usize;
        active.push(i as u32);
        i += 1;
        if i >= space.n {
            break;
        }
    }
    Ok(Pattern::from_sorted_unchecked(space, active))
}

/// Uniformly random `count`-subset of the neurons.
pub fn gen_exact_c<R: Rng + ?Sized>(
    space: NeuronSpace,
    count: usize,
    rng: &mut R,
) -> Result<Pattern, PatternError> {
    if count == 0 || count > space.n {
        return Err(PatternError::BadActiveCount { count, n: space.n });
    }
    let mut active: Vec<u32> = index::sample(rng, space.n, count)
        .into_iter()
        .map(|i| i as u32)
        .collect();
    active.sort_unstable();
    Ok(Pattern::from_sorted_unchecked(space, active))
}

/// One uniformly random active neuron per cluster.
pub fn gen_gb<R: Rng + ?Sized>(space: NeuronSpace, rng: &mut R) -> Result<Pattern, PatternError> {
    let layout = space.require_layout()?;
    let active = (0..layout.clusters)
        .map(|a| (a * layout.per_cluster + rng.gen_range(0..layout.per_cluster)) as u32)
        .collect();
    Ok(Pattern::from_sorted_unchecked(space, active))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErasureMode {
    /// Delete uniformly chosen active neurons.
    UniformOverActive,
    /// Empty uniformly chosen non-empty clusters.
    UniformOverClusters,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErasureAmount {
    Count(usize),
    /// Fraction of the active neurons; the count is `round(fraction * active)`.
    Fraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErasureSpec {
    pub amount: ErasureAmount,
    pub mode: ErasureMode,
}

impl ErasureSpec {
    pub fn count(count: usize) -> Self {
        Self {
            amount: ErasureAmount::Count(count),
            mode: ErasureMode::UniformOverActive,
        }
    }

    pub fn fraction(rho: f64) -> Result<Self, PatternError> {
        if !(0.0..1.0).contains(&rho) {
            return Err(PatternError::BadFraction(rho));
        }
        Ok(Self {
            amount: ErasureAmount::Fraction(rho),
            mode: ErasureMode::UniformOverActive,
        })
    }

    pub fn clusters(self) -> Self {
        Self {
            mode: ErasureMode::UniformOverClusters,
            ..self
        }
    }

    /// Number of units (neurons or clusters) removed from a pattern with
    /// `available` of them.
    pub fn resolve(&self, available: usize) -> usize {
        match self.amount {
            ErasureAmount::Count(f) => f,
            ErasureAmount::Fraction(rho) => libm::round(rho * available as f64) as usize,
        }
    }
}

/// Removes `spec`'s share of the active neurons, uniformly at random.
pub fn erase<R: Rng + ?Sized>(
    pattern: &Pattern,
    spec: &ErasureSpec,
    rng: &mut R,
) -> Result<Pattern, PatternError> {
    match spec.mode {
        ErasureMode::UniformOverActive => {
            let available = pattern.len();
            let f = spec.resolve(available);
            if f > available {
                return Err(PatternError::EraseTooMany {
                    requested: f,
                    available,
                });
            }
            let mut keep: Vec<u32> = index::sample(rng, available, available - f)
                .into_iter()
                .map(|k| pattern.active[k])
                .collect();
            keep.sort_unstable();
            Ok(Pattern::from_sorted_unchecked(pattern.space, keep))
        }
        ErasureMode::UniformOverClusters => {
            let layout = pattern.space.require_layout()?;
            let mut occupied: Vec<usize> = pattern.iter().map(|i| i / layout.per_cluster).collect();
            occupied.dedup();
            let available = occupied.len();
            let f = spec.resolve(available);
            if f > available {
                return Err(PatternError::EraseTooMany {
                    requested: f,
                    available,
                });
            }
            let mut dropped: Vec<usize> = index::sample(rng, available, f)
                .into_iter()
                .map(|k| occupied[k])
                .collect();
            dropped.sort_unstable();
            let keep = pattern
                .active
                .iter()
                .copied()
                .filter(|&i| {
                    dropped
                        .binary_search(&(i as usize / layout.per_cluster))
                        .is_err()
                })
                .collect();
            Ok(Pattern::from_sorted_unchecked(pattern.space, keep))
        }
    }
}
