//! Exhaustive clique completion of an erased message.

use alloc::vec::Vec;

use rand::Rng;

use super::DynamicsError;
use crate::models::{AssociativeMemory, Network};
use crate::patterns::Pattern;

/// Work allowed per enumerated completion before the search gives up.
const NODES_PER_CANDIDATE: u64 = 64;

/// Completes `partial` (whose active neurons are trusted) to a clique of the
/// weight graph.
///
/// Flat models add `target - |partial|` neurons joined to every kept neuron
/// and to each other; the clustered model adds one neuron to each empty
/// cluster and ignores `target`. Willshaw and GB return a completion chosen
/// uniformly at random; Amari returns one maximising the summed counts over
/// all internal pairs, uniformly among the maximisers.
pub fn retrieve_exhaustive<R: Rng + ?Sized>(
    network: &Network,
    partial: &Pattern,
    target: usize,
    max_candidates: u64,
    rng: &mut R,
) -> Result<Pattern, DynamicsError> {
    if network.space() != partial.space() {
        return Err(DynamicsError::SpaceMismatch);
    }
    if max_candidates == 0 {
        return Err(DynamicsError::InvalidParameter(
            "max_candidates must be positive",
        ));
    }
    let kept: Vec<usize> = partial.iter().collect();
    let joined_to_kept = |j: usize| kept.iter().all(|&i| network.connected(i, j));

    // Candidate lists, one per slot to fill.
    let slots: Vec<Vec<usize>> = match network {
        Network::Gb(net) => {
            let layout = net.layout();
            (0..layout.clusters())
                .filter(|&a| !partial.iter().any(|i| i / layout.per_cluster() == a))
                .map(|a| layout.block(a).filter(|&j| joined_to_kept(j)).collect())
                .collect()
        }
        _ => {
            if partial.len() > target {
                return Err(DynamicsError::InvalidParameter(
                    "partial larger than target",
                ));
            }
            let pool: Vec<usize> = (0..partial.space().n())
                .filter(|&j| !partial.contains(j) && joined_to_kept(j))
                .collect();
            let missing = target - partial.len();
            if missing > pool.len() {
                return Err(DynamicsError::NotFound);
            }
            // Flat slots share one pool; ascending order removes permutations.
            (0..missing).map(|_| pool.clone()).collect()
        }
    };
    let ordered = !matches!(network, Network::Gb(_));

    let mut search = Search {
        network,
        slots: &slots,
        ordered,
        kept: &kept,
        chosen: Vec::with_capacity(slots.len()),
        best: Vec::new(),
        best_weight: 0,
        ties: 0,
        completions: 0,
        nodes: 0,
        max_candidates,
        node_budget: max_candidates.saturating_mul(NODES_PER_CANDIDATE),
        rng,
    };
    search.descend(0, 0, 0)?;
    if search.ties == 0 {
        return Err(DynamicsError::NotFound);
    }
    let best = search.best;
    Ok(
        Pattern::from_indices(partial.space(), kept.iter().copied().chain(best))
            .expect("completion neurons are distinct and in range"),
    )
}

struct Search<'a, R: ?Sized> {
    network: &'a Network,
    slots: &'a [Vec<usize>],
    ordered: bool,
    kept: &'a [usize],
    chosen: Vec<usize>,
    best: Vec<usize>,
    best_weight: u64,
    ties: u64,
    completions: u64,
    nodes: u64,
    max_candidates: u64,
    node_budget: u64,
    rng: &'a mut R,
}

impl<R: Rng + ?Sized> Search<'_, R> {
    fn descend(&mut self, depth: usize, start: usize, weight: u64) -> Result<(), DynamicsError> {
        self.nodes += 1;
        if self.nodes > self.node_budget {
            return Err(DynamicsError::CapacityExceeded {
                limit: self.max_candidates,
            });
        }
        if depth == self.slots.len() {
            return self.complete(weight);
        }
        let from = if self.ordered { start } else { 0 };
        for pos in from..self.slots[depth].len() {
            let j = self.slots[depth][pos];
            if !self.chosen.iter().all(|&i| self.network.connected(i, j)) {
                continue;
            }
            let added = match self.network {
                Network::Amari(net) => self
                    .kept
                    .iter()
                    .chain(&self.chosen)
                    .map(|&i| u64::from(net.weight(i, j)))
                    .sum(),
                _ => 0,
            };
            self.chosen.push(j);
            let result = self.descend(depth + 1, pos + 1, weight + added);
            self.chosen.pop();
            result?;
        }
        Ok(())
    }

    fn complete(&mut self, weight: u64) -> Result<(), DynamicsError> {
        self.completions += 1;
        if self.completions > self.max_candidates {
            return Err(DynamicsError::CapacityExceeded {
                limit: self.max_candidates,
            });
        }
        if self.ties == 0 || weight > self.best_weight {
            self.best_weight = weight;
            self.ties = 0;
        } else if weight < self.best_weight {
            return Ok(());
        }
        // Reservoir sampling over the current maximisers.
        self.ties += 1;
        if self.rng.gen_range(0..self.ties) == 0 {
            self.best.clear();
            self.best.extend_from_slice(&self.chosen);
        }
        Ok(())
    }
}
