//! The three storage rules and their read-only score kernels.
//!
//! Networks are built by repeated [`AssociativeMemory::store`] calls and are
//! afterwards only read; `&Network` can be shared between retrieval workers.

use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::patterns::{NeuronSpace, Pattern, PatternError};

mod amari;
pub mod codec;
mod gb;
mod willshaw;

pub use amari::AmariNetwork;
pub use gb::GbNetwork;
pub use willshaw::WillshawNetwork;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("pattern belongs to a different neuron space")]
    SpaceMismatch,
    #[error("pattern does not have exactly one active neuron per cluster")]
    NotGbValid,
    #[error("clustered model needs a clustered neuron space")]
    NeedsLayout,
    #[error(transparent)]
    Pattern(#[from] PatternError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Amari,
    Willshaw,
    Gb,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Amari => "amari",
            ModelKind::Willshaw => "willshaw",
            ModelKind::Gb => "gb",
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            ModelKind::Amari => 0,
            ModelKind::Willshaw => 1,
            ModelKind::Gb => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(ModelKind::Amari),
            1 => Some(ModelKind::Willshaw),
            2 => Some(ModelKind::Gb),
            _ => None,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Messages kept next to a network for ground-truth comparisons.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StoredSet {
    patterns: Vec<Pattern>,
}

impl StoredSet {
    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&Pattern> {
        self.patterns.get(index)
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Pattern> {
        self.patterns.iter()
    }

    pub(crate) fn push(&mut self, pattern: Pattern) {
        self.patterns.push(pattern);
    }
}

pub trait AssociativeMemory {
    fn kind(&self) -> ModelKind;

    fn space(&self) -> NeuronSpace;

    /// Number of messages stored so far (M).
    fn stored_count(&self) -> u64;

    /// The retained messages, if the network keeps them.
    fn stored_set(&self) -> Option<&StoredSet>;

    fn store(&mut self, pattern: &Pattern) -> Result<(), ModelError>;

    /// Whether two distinct neurons share an edge of the binary weight graph.
    fn connected(&self, i: usize, j: usize) -> bool;

    fn store_all<'a, I>(&mut self, patterns: I) -> Result<(), ModelError>
    where
        I: IntoIterator<Item = &'a Pattern>,
        Self: Sized,
    {
        patterns.into_iter().try_for_each(|p| self.store(p))
    }
}

pub(crate) fn check_space(expected: NeuronSpace, pattern: &Pattern) -> Result<(), ModelError> {
    if pattern.space() != expected {
        return Err(ModelError::SpaceMismatch);
    }
    Ok(())
}

/// Any of the three networks.
#[derive(Debug, Clone, PartialEq)]
pub enum Network {
    Amari(AmariNetwork),
    Willshaw(WillshawNetwork),
    Gb(GbNetwork),
}

impl Network {
    /// Empty network of the given kind, keeping stored messages when `retain`.
    pub fn new(kind: ModelKind, space: NeuronSpace, retain: bool) -> Result<Self, ModelError> {
        Ok(match kind {
            ModelKind::Amari => Network::Amari(AmariNetwork::with_retention(space, retain)),
            ModelKind::Willshaw => {
                Network::Willshaw(WillshawNetwork::with_retention(space, retain))
            }
            ModelKind::Gb => Network::Gb(GbNetwork::with_retention(space, retain)?),
        })
    }

    fn inner(&self) -> &dyn AssociativeMemory {
        match self {
            Network::Amari(n) => n,
            Network::Willshaw(n) => n,
            Network::Gb(n) => n,
        }
    }
}

impl AssociativeMemory for Network {
    fn kind(&self) -> ModelKind {
        self.inner().kind()
    }

    fn space(&self) -> NeuronSpace {
        self.inner().space()
    }

    fn stored_count(&self) -> u64 {
        self.inner().stored_count()
    }

    fn stored_set(&self) -> Option<&StoredSet> {
        self.inner().stored_set()
    }

    fn store(&mut self, pattern: &Pattern) -> Result<(), ModelError> {
        match self {
            Network::Amari(n) => n.store(pattern),
            Network::Willshaw(n) => n.store(pattern),
            Network::Gb(n) => n.store(pattern),
        }
    }

    fn connected(&self, i: usize, j: usize) -> bool {
        self.inner().connected(i, j)
    }
}

impl From<AmariNetwork> for Network {
    fn from(n: AmariNetwork) -> Self {
        Network::Amari(n)
    }
}

impl From<WillshawNetwork> for Network {
    fn from(n: WillshawNetwork) -> Self {
        Network::Willshaw(n)
    }
}

impl From<GbNetwork> for Network {
    fn from(n: GbNetwork) -> Self {
        Network::Gb(n)
    }
}

/// True iff every pair of distinct active neurons is joined in the weight
/// graph. For the clustered model only pairs from different clusters count.
pub fn recognize<M: AssociativeMemory + ?Sized>(network: &M, pattern: &Pattern) -> bool {
    let space = network.space();
    let clustered = network.kind() == ModelKind::Gb;
    let active = pattern.active();
    active.iter().enumerate().all(|(x, &i)| {
        active[x + 1..].iter().all(|&j| {
            let (i, j) = (i as usize, j as usize);
            (clustered && space.cluster_of(i) == space.cluster_of(j)) || network.connected(i, j)
        })
    })
}


#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::dense::Dense;
    use super::*;
    use crate::patterns::{gen_exact_c, gen_gb, gen_iid};
    use crate::rng::substream;
    use alloc::vec;
    use proptest::prelude::*;

    fn flat(n: usize) -> NeuronSpace {
        NeuronSpace::flat(n).unwrap()
    }

    fn pat(space: NeuronSpace, idx: &[usize]) -> Pattern {
        Pattern::from_indices(space, idx.iter().copied()).unwrap()
    }

    #[test]
    fn willshaw_single_message() {
        let s = flat(5);
        let mut w = WillshawNetwork::new(s);
        w.store(&pat(s, &[0, 1])).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let expected = i < 2 && j < 2;
                assert_eq!(w.weight(i, j), expected, "({i},{j})");
            }
        }
        assert_eq!(w.stored_count(), 1);
        assert_eq!(w.stored_set().unwrap().len(), 1);
    }

    #[test]
    fn amari_counts_accumulate() {
        let s = flat(5);
        let mut a = AmariNetwork::new(s);
        a.store(&pat(s, &[0, 1])).unwrap();
        a.store(&pat(s, &[0, 1])).unwrap();
        assert_eq!(a.weight(0, 1), 2);
        assert_eq!(a.weight(1, 0), 2);
        assert_eq!(a.weight(0, 0), 0);
    }

    #[test]
    fn willshaw_two_overlapping_messages() {
        let s = flat(5);
        let mut w = WillshawNetwork::new(s);
        w.store(&pat(s, &[0, 1])).unwrap();
        w.store(&pat(s, &[1, 2])).unwrap();
        assert!(w.weight(0, 1) && w.weight(1, 2));
        assert!(!w.weight(0, 2));
        assert!(w.weight(0, 0) && w.weight(1, 1) && w.weight(2, 2));
        assert!(!w.weight(3, 3));
    }

    #[test]
    fn store_rejects_wrong_space_and_invalid_gb() {
        let mut w = WillshawNetwork::new(flat(5));
        assert_eq!(w.store(&pat(flat(6), &[0])), Err(ModelError::SpaceMismatch));
        let s = NeuronSpace::clustered(2, 2).unwrap();
        let mut g = GbNetwork::new(s).unwrap();
        assert_eq!(g.store(&pat(s, &[0, 1])), Err(ModelError::NotGbValid));
        assert_eq!(
            GbNetwork::new(flat(4)).map(|_| ()),
            Err(ModelError::NeedsLayout)
        );
        assert_eq!(g.stored_count(), 0);
    }

    #[test]
    fn amari_field_examples() {
        let s = flat(5);
        let mut a = AmariNetwork::new(s);
        assert_eq!(a.field(&pat(s, &[1, 2, 3]), 0), 0);
        a.store(&pat(s, &[0, 1])).unwrap();
        assert_eq!(a.field(&pat(s, &[1]), 0), 1);
        a.store(&pat(s, &[0, 1])).unwrap();
        assert_eq!(a.field(&pat(s, &[1]), 0), 2);
        // Own activity never counts.
        assert_eq!(a.field(&pat(s, &[0]), 0), 0);
    }

    #[test]
    fn willshaw_score_examples() {
        let s = flat(5);
        let mut w = WillshawNetwork::new(s);
        w.store(&pat(s, &[0, 1])).unwrap();
        assert_eq!(w.score(&pat(s, &[0]), 0), 1);
        assert_eq!(w.score(&pat(s, &[0, 1]), 0), 2);
        w.store(&pat(s, &[1, 2])).unwrap();
        assert_eq!(w.score(&pat(s, &[0, 2]), 1), 2);
    }

    #[test]
    fn gb_field_examples() {
        let s = NeuronSpace::clustered(2, 2).unwrap();
        let mut g = GbNetwork::new(s).unwrap();
        let all = pat(s, &[0, 1, 2, 3]);
        for i in 0..4 {
            assert_eq!(g.field(&all, i), 0);
        }
        let m1 = Pattern::from_coords(s, [(0, 0), (1, 0)]).unwrap();
        let m2 = Pattern::from_coords(s, [(0, 0), (1, 1)]).unwrap();
        g.store(&m1).unwrap();
        for i in m1.iter() {
            assert_eq!(g.field(&m1, i), 2);
        }
        g.store(&m2).unwrap();
        // (0,0) is joined to (1,0), (1,1) and itself; (0,1) was never stored.
        assert_eq!(g.field(&all, s.index(0, 0)), 3);
        assert_eq!(g.field(&all, s.index(0, 1)), 0);
        assert_eq!(g.field(&all, s.index(1, 0)), 2);
        // State without (0,0): (1,1) only sees itself.
        assert_eq!(g.field(&pat(s, &[1, 2, 3]), s.index(1, 1)), 1);
    }

    #[test]
    fn gb_som_examples() {
        let s = NeuronSpace::clustered(2, 2).unwrap();
        let mut g = GbNetwork::new(s).unwrap();
        g.store(&Pattern::from_coords(s, [(0, 0), (1, 0)]).unwrap())
            .unwrap();
        let all = pat(s, &[0, 1, 2, 3]);
        assert_eq!(g.som_score(&all, s.index(0, 0)), 2);
        assert_eq!(g.som_score(&all, s.index(1, 1)), 0);
        let empty = Pattern::empty(s);
        for i in 0..4 {
            assert_eq!(g.som_score(&empty, i), 0);
        }
    }

    #[test]
    fn recognize_examples() {
        let s = NeuronSpace::clustered(2, 2).unwrap();
        let mut g = GbNetwork::new(s).unwrap();
        let m = Pattern::from_coords(s, [(0, 0), (1, 0)]).unwrap();
        g.store(&m).unwrap();
        assert!(recognize(&g, &m));
        assert!(recognize(&g, &Pattern::empty(s)));
        assert!(!recognize(
            &g,
            &Pattern::from_coords(s, [(0, 0), (1, 1)]).unwrap()
        ));

        let f = flat(6);
        let mut w = WillshawNetwork::new(f);
        w.store(&pat(f, &[0, 1, 2])).unwrap();
        w.store(&pat(f, &[2, 3])).unwrap();
        assert!(recognize(&w, &pat(f, &[0, 2])));
        assert!(!recognize(&w, &pat(f, &[0, 3])));
    }

    fn random_flat_instance(seed: u64, n: usize, m: usize) -> (NeuronSpace, Vec<Pattern>) {
        let s = flat(n);
        let mut rng = substream(seed, &[]);
        let stored = (0..m)
            .map(|k| {
                if k % 2 == 0 {
                    gen_iid(s, 0.15, &mut rng).unwrap()
                } else {
                    gen_exact_c(s, (1 + k % 5).min(n), &mut rng).unwrap()
                }
            })
            .collect();
        (s, stored)
    }

    #[test]
    fn dense_reference_equivalence() {
        // 200 random instances with n <= 64, every kernel against the naive sums.
        for seed in 0..200u64 {
            let n = 2 + (seed as usize * 7) % 63;
            let m = (seed as usize * 3) % 30;
            let (s, stored) = random_flat_instance(seed, n, m);
            let dense = Dense::build(n, &stored);
            let mut a = AmariNetwork::new(s);
            let mut w = WillshawNetwork::new(s);
            a.store_all(&stored).unwrap();
            w.store_all(&stored).unwrap();
            let mut rng = substream(seed, &[1]);
            let p = 0.05 + 0.9 * (seed % 10) as f64 / 10.0;
            let state = gen_iid(s, p, &mut rng).unwrap();
            let fields = a.fields(&state);
            let scores = w.scores(&state);
            for i in 0..n {
                assert_eq!(
                    a.field(&state, i),
                    dense.amari_field(&state, i),
                    "seed {seed}"
                );
                assert_eq!(fields[i], dense.amari_field(&state, i), "seed {seed}");
                assert_eq!(
                    u64::from(w.score(&state, i)),
                    dense.willshaw_score(&state, i)
                );
                assert_eq!(u64::from(scores[i]), dense.willshaw_score(&state, i));
            }

            let c = 2 + seed as usize % 4;
            let l = 1 + (seed as usize * 5) % (64 / c);
            let gs = NeuronSpace::clustered(c, l).unwrap();
            let mut rng = substream(seed, &[2]);
            let gstored: Vec<Pattern> = (0..m).map(|_| gen_gb(gs, &mut rng).unwrap()).collect();
            let gdense = Dense::build(gs.n(), &gstored);
            let mut g = GbNetwork::new(gs).unwrap();
            g.store_all(&gstored).unwrap();
            let gstate = gen_iid(gs, p, &mut rng).unwrap();
            let gfields = g.fields(&gstate);
            let soms = g.som_scores(&gstate);
            for i in 0..gs.n() {
                assert_eq!(
                    u64::from(g.field(&gstate, i)),
                    gdense.gb_field(l, &gstate, i)
                );
                assert_eq!(u64::from(gfields[i]), gdense.gb_field(l, &gstate, i));
                assert_eq!(
                    u64::from(g.som_score(&gstate, i)),
                    gdense.gb_som(l, &gstate, i)
                );
                assert_eq!(
                    u64::from(soms[i]),
                    gdense.gb_som(l, &gstate, i),
                    "seed {seed}"
                );
            }
        }
    }

    #[test]
    fn dense_state_paths_match() {
        // Large states take the complement path in the Amari kernel.
        let (s, stored) = random_flat_instance(77, 64, 40);
        let dense = Dense::build(64, &stored);
        let mut a = AmariNetwork::new(s);
        a.store_all(&stored).unwrap();
        let state = Pattern::from_indices(s, (0..64).filter(|i| i % 9 != 0)).unwrap();
        let fields = a.fields(&state);
        for i in 0..64 {
            assert_eq!(fields[i], dense.amari_field(&state, i));
        }
    }

    proptest! {
        #[test]
        fn clipping_equivalence(seed: u64, n in 2usize..40, m in 0usize..25) {
            let (s, stored) = random_flat_instance(seed, n, m);
            let mut a = AmariNetwork::new(s);
            let mut w = WillshawNetwork::new(s);
            a.store_all(&stored).unwrap();
            w.store_all(&stored).unwrap();
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        prop_assert_eq!(w.weight(i, j), a.weight(i, j) > 0);
                    }
                }
                let used = stored.iter().any(|p| p.contains(i));
                prop_assert_eq!(w.weight(i, i), used);
            }
        }

        #[test]
        fn gb_is_restricted_willshaw(seed: u64, c in 2usize..6, l in 1usize..10, m in 0usize..30) {
            let s = NeuronSpace::clustered(c, l).unwrap();
            let mut rng = substream(seed, &[]);
            let stored: Vec<Pattern> = (0..m).map(|_| gen_gb(s, &mut rng).unwrap()).collect();
            let mut g = GbNetwork::new(s).unwrap();
            let mut w = WillshawNetwork::new(s);
            g.store_all(&stored).unwrap();
            w.store_all(&stored).unwrap();
            for i in 0..s.n() {
                for j in 0..s.n() {
                    if i / l != j / l {
                        prop_assert_eq!(g.weight(i, j), w.weight(i, j));
                    } else if i != j {
                        prop_assert!(!g.weight(i, j));
                    } else {
                        prop_assert_eq!(g.weight(i, i), w.weight(i, i));
                    }
                }
            }
        }

        #[test]
        fn store_is_order_independent(seed: u64, n in 2usize..40, m in 0usize..20) {
            let (s, stored) = random_flat_instance(seed, n, m);
            let mut reversed = stored.clone();
            reversed.reverse();
            let build = |ps: &[Pattern]| {
                let mut a = AmariNetwork::without_stored_set(s);
                let mut w = WillshawNetwork::without_stored_set(s);
                a.store_all(ps).unwrap();
                w.store_all(ps).unwrap();
                (a, w)
            };
            prop_assert_eq!(build(&stored), build(&reversed));
        }

        #[test]
        fn stored_messages_are_recognized(seed: u64, c in 2usize..6, l in 1usize..10, m in 1usize..40) {
            let s = NeuronSpace::clustered(c, l).unwrap();
            let mut rng = substream(seed, &[]);
            let stored: Vec<Pattern> = (0..m).map(|_| gen_gb(s, &mut rng).unwrap()).collect();
            let mut g = GbNetwork::new(s).unwrap();
            g.store_all(&stored).unwrap();
            let (fs, fstored) = random_flat_instance(seed, 30, m);
            let mut w = WillshawNetwork::new(fs);
            w.store_all(&fstored).unwrap();
            for p in &stored {
                prop_assert!(recognize(&g, p));
            }
            for p in &fstored {
                prop_assert!(recognize(&w, p));
            }
        }

        #[test]
        fn willshaw_weights_are_monotone(seed: u64, n in 2usize..30, m in 1usize..20) {
            let (s, stored) = random_flat_instance(seed, n, m);
            let mut w = WillshawNetwork::new(s);
            let mut before = vec![false; n * n];
            for p in &stored {
                w.store(p).unwrap();
                for i in 0..n {
                    for j in 0..n {
                        let now = w.weight(i, j);
                        prop_assert!(now || !before[i * n + j]);
                        before[i * n + j] = now;
                    }
                }
            }
        }
    }
}
