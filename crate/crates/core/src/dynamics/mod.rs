//! Synchronous retrieval dynamics.
//!
//! Every rule maps a state to the next state by reading only the previous
//! state. [`iterate`] repeats a rule until the state repeats (fixed point or
//! cycle) or the iteration budget runs out.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::bits::BitVec;
use crate::models::{AmariNetwork, GbNetwork, ModelKind, Network, WillshawNetwork};
use crate::patterns::Pattern;

mod exhaustive;

pub use exhaustive::retrieve_exhaustive;

/// Default cap on enumerated completions for exhaustive retrieval.
pub const DEFAULT_MAX_CANDIDATES: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("policy {policy} cannot drive a {model} network")]
    Incompatible {
        policy: &'static str,
        model: ModelKind,
    },
    #[error("exhaustive retrieval is a single search, not an iterated map")]
    NotIterative,
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("state belongs to a different neuron space")]
    SpaceMismatch,
    #[error("no completion of the partial message forms a clique")]
    NotFound,
    #[error("more than {limit} candidate completions")]
    CapacityExceeded { limit: u64 },
}

/// Which retrieval rule to run, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RetrievalPolicy {
    /// Threshold `h` fixed in advance.
    FixedThreshold(u32),
    /// Threshold equal to the number of active neurons in the input, fixed
    /// for all iterations.
    InputCountThreshold,
    /// Keep the neurons reaching the maximal score.
    WtaMax,
    /// Keep the neurons reaching the k-th largest score.
    WtaKth(u32),
    /// Per-cluster winner-take-all on the SUM-OF-MAX score.
    GbClusterWta,
    /// Fill empty clusters, then keep neurons whose SUM-OF-MAX score is `c`.
    GbSumOfMax,
    /// Enumerate clique completions of the input.
    Exhaustive { max_candidates: u64 },
}

impl RetrievalPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            RetrievalPolicy::FixedThreshold(_) => "fixed",
            RetrievalPolicy::InputCountThreshold => "input-count",
            RetrievalPolicy::WtaMax => "wta-max",
            RetrievalPolicy::WtaKth(_) => "wta-kth",
            RetrievalPolicy::GbClusterWta => "cluster-wta",
            RetrievalPolicy::GbSumOfMax => "som",
            RetrievalPolicy::Exhaustive { .. } => "exhaustive",
        }
    }

    pub fn supports(&self, model: ModelKind) -> bool {
        use RetrievalPolicy::*;
        match self {
            FixedThreshold(_) | InputCountThreshold | Exhaustive { .. } => true,
            WtaMax | WtaKth(_) => model != ModelKind::Gb,
            GbClusterWta | GbSumOfMax => model == ModelKind::Gb,
        }
    }

    pub fn check(&self, model: ModelKind) -> Result<(), DynamicsError> {
        if !self.supports(model) {
            return Err(DynamicsError::Incompatible {
                policy: self.name(),
                model,
            });
        }
        match self {
            RetrievalPolicy::WtaKth(0) => {
                Err(DynamicsError::InvalidParameter("k must be positive"))
            }
            RetrievalPolicy::Exhaustive { max_candidates: 0 } => Err(
                DynamicsError::InvalidParameter("max_candidates must be positive"),
            ),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for RetrievalPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RetrievalPolicy::FixedThreshold(h) => write!(f, "fixed({h})"),
            RetrievalPolicy::WtaKth(k) => write!(f, "wta-kth({k})"),
            RetrievalPolicy::Exhaustive { max_candidates } => {
                write!(f, "exhaustive({max_candidates})")
            }
            other => f.write_str(other.name()),
        }
    }
}

/// Global winner-take-all threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WtaRule {
    /// `h(1)`, the largest score.
    Max,
    /// `h(k)`, the k-th largest score counted with multiplicity.
    Kth(u32),
}

/// Score used by the clustered winner-take-all.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GbScore {
    /// `S_(a,k)`, active neurons joined to the neuron.
    Field,
    /// `s_(a,k)`, clusters holding an active neuron joined to the neuron.
    SumOfMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// `states[step] == states[step - 1]`.
    Converged { step: usize },
    /// The last state equals `states[entry]`, `period >= 2` steps earlier.
    Cycle { entry: usize, period: usize },
    /// No repeat within the iteration budget.
    Truncated { max_iters: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `states[0]` is the input; each later entry is one synchronous step.
    pub states: Vec<Pattern>,
    pub verdict: Verdict,
}

impl Trajectory {
    /// The state the dynamics stopped on.
    pub fn final_state(&self) -> &Pattern {
        self.states.last().expect("trajectory holds the input")
    }

    /// Number of steps applied.
    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn converged(&self) -> bool {
        matches!(self.verdict, Verdict::Converged { .. })
    }
}

/// One synchronous update rule with its threshold resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Rule {
    Threshold(u64),
    Wta(WtaRule),
    ClusterWta(GbScore),
    SumOfMax,
}

/// Reusable scratch space for stepping one network.
struct Stepper<'a> {
    network: &'a Network,
    wide: Vec<u64>,
    narrow: Vec<u32>,
    reach: BitVec,
}

impl<'a> Stepper<'a> {
    fn new(network: &'a Network) -> Self {
        let n = crate::models::AssociativeMemory::space(network).n();
        Self {
            network,
            wide: vec![0; n],
            narrow: vec![0; n],
            reach: BitVec::zeros(n),
        }
    }

    fn step(&mut self, state: &BitVec, rule: Rule) -> BitVec {
        let active = state.count_ones();
        match (self.network, rule) {
            (Network::Amari(net), Rule::Threshold(h)) => {
                net.fields_into(state, active, &mut self.wide);
                threshold(&self.wide, h)
            }
            (Network::Amari(net), Rule::Wta(wta)) => {
                net.fields_into(state, active, &mut self.wide);
                winner_take_all(&self.wide, wta, active)
            }
            (Network::Willshaw(net), Rule::Threshold(h)) => {
                net.scores_into(state, active, &mut self.narrow);
                threshold(&self.narrow, h)
            }
            (Network::Willshaw(net), Rule::Wta(wta)) => {
                net.scores_into(state, active, &mut self.narrow);
                winner_take_all(&self.narrow, wta, active)
            }
            (Network::Gb(net), Rule::Threshold(h)) => {
                net.fields_into(state, active, &mut self.narrow);
                threshold(&self.narrow, h)
            }
            (Network::Gb(net), Rule::ClusterWta(score)) => {
                match score {
                    GbScore::Field => net.fields_into(state, active, &mut self.narrow),
                    GbScore::SumOfMax => {
                        net.som_scores_into(state, &mut self.reach, &mut self.narrow)
                    }
                }
                cluster_winners(net, &self.narrow)
            }
            (Network::Gb(net), Rule::SumOfMax) => {
                let filled = fill_empty_clusters(net, state);
                net.som_scores_into(&filled, &mut self.reach, &mut self.narrow);
                threshold(&self.narrow, net.layout().clusters() as u64)
            }
            _ => unreachable!("rule checked against the model before stepping"),
        }
    }
}

fn threshold<T: Copy + Into<u64>>(scores: &[T], h: u64) -> BitVec {
    BitVec::from_indices(
        scores.len(),
        (0..scores.len()).filter(|&i| scores[i].into() >= h),
    )
}

fn winner_take_all<T: Copy + Ord + Into<u64>>(
    scores: &[T],
    rule: WtaRule,
    active: usize,
) -> BitVec {
    let h = match rule {
        WtaRule::Max => {
            let max = scores.iter().copied().max().map_or(0, Into::into);
            if active == 0 || max == 0 {
                return BitVec::zeros(scores.len());
            }
            max
        }
        WtaRule::Kth(k) => kth_largest(scores, k as usize),
    };
    threshold(scores, h)
}

/// k-th largest value with multiplicity (the minimum when `k > len`).
fn kth_largest<T: Copy + Ord + Into<u64>>(scores: &[T], k: usize) -> u64 {
    let mut sorted: Vec<T> = scores.to_vec();
    let k = k.clamp(1, sorted.len());
    let (_, kth, _) = sorted.select_nth_unstable_by(k - 1, |a, b| b.cmp(a));
    (*kth).into()
}

fn cluster_winners(net: &GbNetwork, scores: &[u32]) -> BitVec {
    let layout = net.layout();
    let mut out = BitVec::zeros(scores.len());
    for a in 0..layout.clusters() {
        let block = layout.block(a);
        let best = scores[block.clone()].iter().copied().max().unwrap_or(0);
        for i in block {
            if scores[i] == best {
                out.set(i);
            }
        }
    }
    out
}

fn fill_empty_clusters(net: &GbNetwork, state: &BitVec) -> BitVec {
    let layout = net.layout();
    let mut filled = state.clone();
    for a in 0..layout.clusters() {
        let block = layout.block(a);
        if !state.any_in_range(block.start, block.end) {
            filled.set_range(block.start, block.end);
        }
    }
    filled
}

fn check_state(network: &Network, state: &Pattern) -> Result<(), DynamicsError> {
    if crate::models::AssociativeMemory::space(network) != state.space() {
        return Err(DynamicsError::SpaceMismatch);
    }
    Ok(())
}

fn single_step(network: &Network, state: &Pattern, rule: Rule) -> Pattern {
    let mut stepper = Stepper::new(network);
    Pattern::from_bits(state.space(), &stepper.step(&state.to_bits(), rule))
}

/// Amari threshold map: `i` active iff `S_i >= h`.
pub fn step_amari(network: &AmariNetwork, state: &Pattern, h: u64) -> Pattern {
    let fields = network.fields(state);
    Pattern::from_bits(state.space(), &threshold(&fields, h))
}

/// Amari winner-take-all on the local fields.
pub fn step_amari_wta(network: &AmariNetwork, state: &Pattern, rule: WtaRule) -> Pattern {
    let fields = network.fields(state);
    Pattern::from_bits(state.space(), &winner_take_all(&fields, rule, state.len()))
}

/// Willshaw threshold map on scores that include the neuron's own activity.
pub fn step_willshaw_threshold(network: &WillshawNetwork, state: &Pattern, h: u64) -> Pattern {
    let scores = network.scores(state);
    Pattern::from_bits(state.space(), &threshold(&scores, h))
}

/// Willshaw winner-take-all; ties at the threshold are all kept. An empty
/// state or all-zero scores give an empty output under [`WtaRule::Max`].
pub fn step_willshaw_wta(network: &WillshawNetwork, state: &Pattern, rule: WtaRule) -> Pattern {
    let scores = network.scores(state);
    Pattern::from_bits(state.space(), &winner_take_all(&scores, rule, state.len()))
}

/// GB threshold map on `S_(a,k)`.
pub fn step_gb_threshold(network: &GbNetwork, state: &Pattern, h: u64) -> Pattern {
    let fields = network.fields(state);
    Pattern::from_bits(state.space(), &threshold(&fields, h))
}

/// Per-cluster argmax of the chosen score, ties kept.
pub fn step_gb_wta(network: &GbNetwork, state: &Pattern, score: GbScore) -> Pattern {
    let scores = match score {
        GbScore::Field => network.fields(state),
        GbScore::SumOfMax => network.som_scores(state),
    };
    Pattern::from_bits(state.space(), &cluster_winners(network, &scores))
}

/// SUM-OF-MAX step: activate every neuron of each empty cluster, then keep
/// the neurons that see an active partner in all `c` clusters.
pub fn step_gb_som(network: &GbNetwork, state: &Pattern) -> Pattern {
    let filled = fill_empty_clusters(network, &state.to_bits());
    let scores = network.som_scores(&Pattern::from_bits(state.space(), &filled));
    Pattern::from_bits(
        state.space(),
        &threshold(&scores, network.layout().clusters() as u64),
    )
}

fn resolve_rule(policy: &RetrievalPolicy, input: &Pattern) -> Result<Rule, DynamicsError> {
    Ok(match *policy {
        RetrievalPolicy::FixedThreshold(h) => Rule::Threshold(u64::from(h)),
        RetrievalPolicy::InputCountThreshold => Rule::Threshold(input.len() as u64),
        RetrievalPolicy::WtaMax => Rule::Wta(WtaRule::Max),
        RetrievalPolicy::WtaKth(k) => Rule::Wta(WtaRule::Kth(k)),
        RetrievalPolicy::GbClusterWta => Rule::ClusterWta(GbScore::SumOfMax),
        RetrievalPolicy::GbSumOfMax => Rule::SumOfMax,
        RetrievalPolicy::Exhaustive { .. } => return Err(DynamicsError::NotIterative),
    })
}

/// Applies one step of `policy` to `state`.
pub fn step(
    network: &Network,
    state: &Pattern,
    policy: &RetrievalPolicy,
) -> Result<Pattern, DynamicsError> {
    use crate::models::AssociativeMemory;
    policy.check(network.kind())?;
    check_state(network, state)?;
    let rule = resolve_rule(policy, state)?;
    Ok(single_step(network, state, rule))
}

/// Runs `policy` from `input` until a state repeats or `max_iters` steps
/// have been applied.
pub fn iterate(
    network: &Network,
    input: &Pattern,
    policy: &RetrievalPolicy,
    max_iters: usize,
) -> Result<Trajectory, DynamicsError> {
    use crate::models::AssociativeMemory;
    policy.check(network.kind())?;
    check_state(network, input)?;
    if max_iters == 0 {
        return Err(DynamicsError::InvalidParameter(
            "max_iters must be at least 1",
        ));
    }
    let rule = resolve_rule(policy, input)?;
    let mut stepper = Stepper::new(network);
    let mut history = vec![input.to_bits()];
    let mut verdict = Verdict::Truncated { max_iters };
    for t in 0..max_iters {
        let next = stepper.step(&history[t], rule);
        let repeat = history.iter().rposition(|s| *s == next);
        history.push(next);
        if let Some(k) = repeat {
            verdict = if k == t {
                Verdict::Converged { step: t + 1 }
            } else {
                Verdict::Cycle {
                    entry: k,
                    period: t + 1 - k,
                }
            };
            break;
        }
    }
    let states = history
        .iter()
        .map(|b| Pattern::from_bits(input.space(), b))
        .collect();
    Ok(Trajectory { states, verdict })
}

/// Applies `policy` exactly `steps` times without repeat detection.
pub fn run_steps(
    network: &Network,
    input: &Pattern,
    policy: &RetrievalPolicy,
    steps: usize,
) -> Result<Vec<Pattern>, DynamicsError> {
    use crate::models::AssociativeMemory;
    policy.check(network.kind())?;
    check_state(network, input)?;
    let rule = resolve_rule(policy, input)?;
    let mut stepper = Stepper::new(network);
    let mut state = input.to_bits();
    let mut out = vec![input.clone()];
    for _ in 0..steps {
        state = stepper.step(&state, rule);
        out.push(Pattern::from_bits(input.space(), &state));
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
