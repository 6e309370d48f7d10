//! Monte Carlo harness: retrieval sweeps and recognition probes.
//!
//! Randomness is addressed, never shared: the network for batch `b` at load
//! `M` comes from stream `[TAG_NET, M, b]` and trial `t` from
//! `[TAG_TRIAL, M, t]`. Per-batch tallies are integer counters, so any
//! worker count and any scheduling give identical results.

use std::fmt;
use std::ops::{Add, Range};
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use samn_core::dynamics::{iterate, step, DEFAULT_MAX_CANDIDATES};
use samn_core::rng::substream;
use samn_core::theory::log2_binomial;
use samn_core::{
    erase, gen_exact_c, gen_gb, gen_iid, recognize, retrieve_exhaustive, AssociativeMemory,
    DynamicsError, ErasureSpec, GbNetwork, ModelError, ModelKind, Network, NeuronSpace, Pattern,
    PatternError, RetrievalPolicy, Verdict,
};
use thiserror::Error;

pub const TAG_NET: u64 = 0x006e_6574;
pub const TAG_TRIAL: u64 = 0x0074_7269;
pub const TAG_STABILITY: u64 = 0x0073_7461;
pub const TAG_WRONG: u64 = 0x0077_726f;
pub const TAG_SUBCLIQUE: u64 = 0x0073_7562;

pub const DEFAULT_TRIALS: u64 = 2000;
pub const DEFAULT_BATCH: u64 = 100;
pub const DEFAULT_MAX_ITERS: usize = 20;
pub const DEFAULT_MEMORY_LIMIT: u64 = 4 << 30;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment: {0}")]
    Invalid(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("run needs about {needed} bytes of network state, limit is {limit}")]
    ResourceLimit { needed: u64, limit: u64 },
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ExperimentError> {
    Err(ExperimentError::Invalid(msg.into()))
}

/// How stored messages are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    /// Each neuron active independently with probability `p`.
    Iid { p: f64 },
    /// Exactly `c` active neurons, uniform.
    ExactC { c: usize },
    /// One uniform neuron per cluster.
    Gb,
}

impl Distribution {
    pub fn sample<R: Rng + ?Sized>(
        &self,
        space: NeuronSpace,
        rng: &mut R,
    ) -> Result<Pattern, PatternError> {
        match *self {
            Distribution::Iid { p } => gen_iid(space, p, rng),
            Distribution::ExactC { c } => gen_exact_c(space, c, rng),
            Distribution::Gb => gen_gb(space, rng),
        }
    }

    /// Expected number of active neurons.
    pub fn sparsity(&self, space: NeuronSpace) -> f64 {
        match *self {
            Distribution::Iid { p } => p * space.n() as f64,
            Distribution::ExactC { c } => c as f64,
            Distribution::Gb => space.layout().map_or(0, |l| l.clusters()) as f64,
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distribution::Iid { p } => write!(f, "iid(p={p})"),
            Distribution::ExactC { c } => write!(f, "exact(c={c})"),
            Distribution::Gb => f.write_str("gb"),
        }
    }
}

/// Model, neuron space and message distribution of a network ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkSetup {
    pub model: ModelKind,
    pub space: NeuronSpace,
    pub distribution: Distribution,
}

impl NetworkSetup {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        match (self.model, self.distribution, self.space.layout()) {
            (ModelKind::Gb, Distribution::Gb, Some(_)) => {}
            (ModelKind::Gb, _, _) => {
                return invalid("gb model needs clustered space and gb messages")
            }
            (_, Distribution::Gb, None) => return invalid("gb messages need a clustered space"),
            (_, Distribution::ExactC { c }, _) if c == 0 || c > self.space.n() => {
                return invalid(format!("active count {c} outside 1..={}", self.space.n()))
            }
            (_, Distribution::Iid { p }, _) if !(p > 0.0 && p < 1.0) => {
                return invalid(format!("density {p} outside (0, 1)"))
            }
            _ => {}
        }
        Ok(())
    }

    pub fn sparsity(&self) -> f64 {
        self.distribution.sparsity(self.space)
    }

    /// Unit of the load `alpha`: `(N/c)^2`, or `l^2/c^2` for the clustered model.
    pub fn load_scale(&self) -> f64 {
        let c = self.sparsity();
        match (self.model, self.space.layout()) {
            (ModelKind::Gb, Some(layout)) => {
                let l = layout.per_cluster() as f64;
                l * l / (c * c)
            }
            _ => {
                let r = self.space.n() as f64 / c;
                r * r
            }
        }
    }

    /// Bytes held by one network with `m` messages, stored set included.
    pub fn footprint(&self, m: u64) -> u64 {
        let n = self.space.n() as u64;
        let weights = match self.model {
            ModelKind::Amari => n * n * 4 + n * 8,
            _ => n * n.div_ceil(64) * 8,
        };
        weights + m * (self.sparsity().ceil() as u64 * 4 + 48)
    }

    /// Draws `m` messages from `rng` and stores them in a fresh network.
    pub fn build<R: Rng + ?Sized>(
        &self,
        m: u64,
        rng: &mut R,
    ) -> Result<(Network, Vec<Pattern>), ExperimentError> {
        let mut net = Network::new(self.model, self.space, false)?;
        let mut stored = Vec::with_capacity(m as usize);
        for _ in 0..m {
            let p = self.distribution.sample(self.space, rng)?;
            net.store(&p)?;
            stored.push(p);
        }
        Ok((net, stored))
    }
}

/// A point of the load sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Load {
    Count(u64),
    /// Multiple of [`NetworkSetup::load_scale`], rounded to the nearest count.
    Alpha(f64),
}

impl Load {
    pub fn resolve(&self, setup: &NetworkSetup) -> u64 {
        match *self {
            Load::Count(m) => m,
            Load::Alpha(a) => (a * setup.load_scale()).round() as u64,
        }
    }
}

/// Scheduling and randomness shared by every run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub trials: u64,
    /// Trials sharing one network.
    pub batch: u64,
    pub max_iters: usize,
    pub seed: u64,
    /// Worker cap; `None` uses the global pool.
    pub threads: Option<usize>,
    pub memory_limit: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            trials: DEFAULT_TRIALS,
            batch: DEFAULT_BATCH,
            max_iters: DEFAULT_MAX_ITERS,
            seed: 0,
            threads: None,
            memory_limit: DEFAULT_MEMORY_LIMIT,
        }
    }
}

impl RunOptions {
    fn validate(&self) -> Result<(), ExperimentError> {
        if self.trials == 0 {
            return invalid("trials must be at least 1");
        }
        if self.batch == 0 {
            return invalid("batch must be at least 1");
        }
        if self.max_iters == 0 {
            return invalid("max_iters must be at least 1");
        }
        if self.threads == Some(0) {
            return invalid("threads must be at least 1");
        }
        Ok(())
    }

    fn workers(&self) -> usize {
        self.threads.unwrap_or_else(rayon::current_num_threads)
    }

    fn check_memory(&self, setup: &NetworkSetup, m: u64) -> Result<(), ExperimentError> {
        let in_flight = self
            .workers()
            .min(self.trials.div_ceil(self.batch) as usize)
            .max(1);
        let needed = setup.footprint(m).saturating_mul(in_flight as u64);
        if needed > self.memory_limit {
            return Err(ExperimentError::ResourceLimit {
                needed,
                limit: self.memory_limit,
            });
        }
        Ok(())
    }

    /// Runs `f` inside a pool capped at `threads` workers.
    fn install<T: Send>(
        &self,
        f: impl FnOnce() -> Result<T, ExperimentError> + Send,
    ) -> Result<T, ExperimentError> {
        match self.threads {
            None => f(),
            Some(t) => rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| ExperimentError::ThreadPool(e.to_string()))?
                .install(f),
        }
    }

    /// Splits the trials into batches, runs them in parallel and sums the
    /// tallies.
    fn run_batches<T, F>(&self, f: F) -> Result<T, ExperimentError>
    where
        T: Default + Add<Output = T> + Send,
        F: Fn(u64, Range<u64>) -> Result<T, ExperimentError> + Sync + Send,
    {
        let batches = self.trials.div_ceil(self.batch);
        self.install(|| {
            (0..batches)
                .into_par_iter()
                .map(|b| f(b, b * self.batch..((b + 1) * self.batch).min(self.trials)))
                .try_reduce(T::default, |a, b| Ok(a + b))
        })
    }
}

/// Full description of a retrieval sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub setup: NetworkSetup,
    pub loads: Vec<Load>,
    pub erasure: ErasureSpec,
    pub policy: RetrievalPolicy,
    pub run: RunOptions,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.setup.validate()?;
        self.run.validate()?;
        self.policy.check(self.setup.model)?;
        if self.loads.is_empty() {
            return invalid("load sweep is empty");
        }
        if self.resolved_loads().iter().any(|&(m, _)| m == 0) {
            return invalid("retrieval needs at least one stored message");
        }
        Ok(())
    }

    /// `(M, alpha)` per sweep point, sorted by `M`.
    pub fn resolved_loads(&self) -> Vec<(u64, f64)> {
        let scale = self.setup.load_scale();
        let mut out: Vec<(u64, f64)> = self
            .loads
            .iter()
            .map(|load| {
                let m = load.resolve(&self.setup);
                (m, m as f64 / scale)
            })
            .collect();
        out.sort_by_key(|&(m, _)| m);
        out
    }
}

/// Integer counters summed over trials.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub trials: u64,
    pub errors: u64,
    pub cycles: u64,
    pub truncated: u64,
    pub not_found: u64,
    pub capacity_exceeded: u64,
    pub iterations: u64,
    pub erased: u64,
    pub active: u64,
}

impl Add for Tally {
    type Output = Tally;

    fn add(self, o: Tally) -> Tally {
        Tally {
            trials: self.trials + o.trials,
            errors: self.errors + o.errors,
            cycles: self.cycles + o.cycles,
            truncated: self.truncated + o.truncated,
            not_found: self.not_found + o.not_found,
            capacity_exceeded: self.capacity_exceeded + o.capacity_exceeded,
            iterations: self.iterations + o.iterations,
            erased: self.erased + o.erased,
            active: self.active + o.active,
        }
    }
}

/// Outcome of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub m: u64,
    pub alpha: f64,
    pub tally: Tally,
    pub efficiency: f64,
    pub wall_time: Duration,
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

impl PointResult {
    pub fn trials(&self) -> u64 {
        self.tally.trials
    }

    pub fn error_rate(&self) -> f64 {
        ratio(self.tally.errors, self.tally.trials)
    }

    pub fn stderr(&self) -> f64 {
        binomial_stderr(self.error_rate(), self.tally.trials)
    }

    pub fn mean_iters(&self) -> f64 {
        ratio(self.tally.iterations, self.tally.trials)
    }

    pub fn cycle_rate(&self) -> f64 {
        ratio(self.tally.cycles, self.tally.trials)
    }

    /// Exhaustive searches that found nothing or hit their cap.
    pub fn notfound_rate(&self) -> f64 {
        ratio(
            self.tally.not_found + self.tally.capacity_exceeded,
            self.tally.trials,
        )
    }

    /// Realized fraction of erased active neurons.
    pub fn rho(&self) -> f64 {
        ratio(self.tally.erased, self.tally.active)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub points: Vec<PointResult>,
}

pub fn binomial_stderr(p: f64, trials: u64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Message entropy in bits: `log2 C(n, c)`, or `c log2 l` when clustered.
pub fn message_entropy(model: ModelKind, space: NeuronSpace, c: usize) -> f64 {
    match (model, space.layout()) {
        (ModelKind::Gb, Some(layout)) => {
            layout.clusters() as f64 * (layout.per_cluster() as f64).log2()
        }
        _ => log2_binomial(space.n() as u64, c as u64),
    }
}

/// Bits needed for the synaptic weights after `m` messages.
pub fn model_bits(model: ModelKind, space: NeuronSpace, m: u64) -> f64 {
    let n = space.n() as f64;
    let pairs = n * (n - 1.0) / 2.0;
    match (model, space.layout()) {
        (ModelKind::Amari, _) => pairs * (m as f64 + 1.0).log2(),
        (ModelKind::Gb, Some(layout)) => {
            let c = layout.clusters() as f64;
            let l = layout.per_cluster() as f64;
            c * (c - 1.0) / 2.0 * l * l
        }
        _ => pairs,
    }
}

/// Stored entropy over weight bits, `M * H / C`. Zero when nothing is stored.
pub fn efficiency(model: ModelKind, space: NeuronSpace, c: usize, m: u64) -> f64 {
    if m == 0 {
        return 0.0;
    }
    m as f64 * message_entropy(model, space, c) / model_bits(model, space, m)
}

/// Runs the retrieval protocol at every load of `spec`.
///
/// Each batch of trials shares one network built from fresh messages. A
/// trial erases a uniformly chosen stored message, runs the policy and
/// succeeds when the dynamics settle exactly on the original.
pub fn run_retrieval_sweep(spec: &ExperimentSpec) -> Result<ExperimentResult, ExperimentError> {
    spec.validate()?;
    let setup = spec.setup;
    let run = spec.run;
    let mut points = Vec::new();
    for (m, alpha) in spec.resolved_loads() {
        run.check_memory(&setup, m)?;
        let start = Instant::now();
        let tally = run.run_batches(|b, trials| {
            let mut net_rng = substream(run.seed, &[TAG_NET, m, b]);
            let (net, stored) = setup.build(m, &mut net_rng)?;
            let mut tally = Tally::default();
            for t in trials {
                let mut rng = substream(run.seed, &[TAG_TRIAL, m, t]);
                tally = tally + retrieval_trial(&net, &stored, spec, &mut rng)?;
            }
            Ok(tally)
        })?;
        let c = setup.sparsity().round() as usize;
        points.push(PointResult {
            m,
            alpha,
            tally,
            efficiency: efficiency(setup.model, setup.space, c, m),
            wall_time: start.elapsed(),
        });
    }
    Ok(ExperimentResult {
        spec: spec.clone(),
        points,
    })
}

fn retrieval_trial<R: Rng>(
    net: &Network,
    stored: &[Pattern],
    spec: &ExperimentSpec,
    rng: &mut R,
) -> Result<Tally, ExperimentError> {
    let original = &stored[rng.gen_range(0..stored.len())];
    let cue = erase(original, &spec.erasure, rng)?;
    let mut tally = Tally {
        trials: 1,
        erased: (original.len() - cue.len()) as u64,
        active: original.len() as u64,
        ..Tally::default()
    };
    let success = match spec.policy {
        RetrievalPolicy::Exhaustive { max_candidates } => {
            tally.iterations = 1;
            match retrieve_exhaustive(net, &cue, original.len(), max_candidates, rng) {
                Ok(found) => found == *original,
                Err(DynamicsError::NotFound) => {
                    tally.not_found = 1;
                    false
                }
                Err(DynamicsError::CapacityExceeded { .. }) => {
                    tally.capacity_exceeded = 1;
                    false
                }
                Err(e) => return Err(e.into()),
            }
        }
        ref policy => {
            let traj = iterate(net, &cue, policy, spec.run.max_iters)?;
            tally.iterations = traj.steps() as u64;
            match traj.verdict {
                Verdict::Converged { .. } => traj.final_state() == original,
                Verdict::Cycle { .. } => {
                    tally.cycles = 1;
                    false
                }
                Verdict::Truncated { .. } => {
                    tally.truncated = 1;
                    false
                }
            }
        }
    };
    tally.errors = u64::from(!success);
    Ok(tally)
}

/// Success count over trials.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Estimate {
    pub hits: u64,
    pub trials: u64,
}

impl Add for Estimate {
    type Output = Estimate;

    fn add(self, o: Estimate) -> Estimate {
        Estimate {
            hits: self.hits + o.hits,
            trials: self.trials + o.trials,
        }
    }
}

impl Estimate {
    pub fn probability(&self) -> f64 {
        ratio(self.hits, self.trials)
    }

    pub fn stderr(&self) -> f64 {
        binomial_stderr(self.probability(), self.trials)
    }
}

/// Fraction of trials in which one step of `policy` maps an intact stored
/// message to itself.
pub fn stability_probe(
    setup: &NetworkSetup,
    m: u64,
    policy: &RetrievalPolicy,
    run: &RunOptions,
) -> Result<Estimate, ExperimentError> {
    setup.validate()?;
    run.validate()?;
    policy.check(setup.model)?;
    if matches!(policy, RetrievalPolicy::Exhaustive { .. }) {
        return Err(DynamicsError::NotIterative.into());
    }
    if m == 0 {
        return invalid("stability needs at least one stored message");
    }
    run.check_memory(setup, m)?;
    run.run_batches(|b, trials| {
        let mut net_rng = substream(run.seed, &[TAG_STABILITY, TAG_NET, m, b]);
        let (net, stored) = setup.build(m, &mut net_rng)?;
        let mut est = Estimate::default();
        for t in trials {
            let mut rng = substream(run.seed, &[TAG_STABILITY, TAG_TRIAL, m, t]);
            let msg = &stored[rng.gen_range(0..stored.len())];
            let next = step(&net, msg, policy)?;
            est = est
                + Estimate {
                    hits: u64::from(next == *msg),
                    trials: 1,
                };
        }
        Ok(est)
    })
}

/// `M = alpha l^2 ln c`, the load unit of the recognition probes.
pub fn recognition_load(l: usize, c: usize, alpha: f64) -> u64 {
    (alpha * (l * l) as f64 * (c as f64).ln()).round() as u64
}

fn clustered(c: usize, l: usize) -> Result<NeuronSpace, ExperimentError> {
    Ok(NeuronSpace::clustered(c, l)?)
}

/// Fills a clustered network with `m` random messages, the first one
/// returned. The network is reused across trials.
fn refill<R: Rng + ?Sized>(
    net: &mut GbNetwork,
    space: NeuronSpace,
    m: u64,
    first: &Pattern,
    rng: &mut R,
) -> Result<(), ExperimentError> {
    *net = GbNetwork::without_stored_set(space)?;
    if m > 0 {
        net.store(first)?;
    }
    for _ in 1..m {
        net.store(&gen_gb(space, rng)?)?;
    }
    Ok(())
}

/// Probability that a fresh random message is recognized by a clustered
/// network holding `m` random messages. Every trial draws a new network.
pub fn wrong_message_probe(
    l: usize,
    c: usize,
    m: u64,
    run: &RunOptions,
) -> Result<Estimate, ExperimentError> {
    run.validate()?;
    let space = clustered(c, l)?;
    let setup = NetworkSetup {
        model: ModelKind::Gb,
        space,
        distribution: Distribution::Gb,
    };
    run.check_memory(&setup, 0)?;
    run.run_batches(|_, trials| {
        let mut net = GbNetwork::without_stored_set(space)?;
        let mut est = Estimate::default();
        for t in trials {
            let mut rng = substream(run.seed, &[TAG_WRONG, l as u64, c as u64, m, t]);
            let first = gen_gb(space, &mut rng)?;
            refill(&mut net, space, m, &first, &mut rng)?;
            let probe = gen_gb(space, &mut rng)?;
            est = est
                + Estimate {
                    hits: u64::from(recognize(&net, &probe)),
                    trials: 1,
                };
        }
        Ok(est)
    })
}

/// Result of [`subclique_probe`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubcliqueEstimate {
    pub estimate: Estimate,
    /// Clusters keeping their true neuron, `round(rho c)`.
    pub kept: usize,
    /// `kept / c`.
    pub rho: f64,
}

/// Probability that a stored message with `round(rho c)` true neurons kept
/// (in the first clusters) and a wrong neuron drawn in every other cluster
/// is still recognized. Every trial draws a new network.
pub fn subclique_probe(
    l: usize,
    c: usize,
    m: u64,
    rho: f64,
    run: &RunOptions,
) -> Result<SubcliqueEstimate, ExperimentError> {
    run.validate()?;
    if !(0.0..=1.0).contains(&rho) {
        return invalid(format!("rho {rho} outside [0, 1]"));
    }
    if l < 2 && rho < 1.0 {
        return invalid("wrong neurons need at least two neurons per cluster");
    }
    let space = clustered(c, l)?;
    let kept = (rho * c as f64).round() as usize;
    let setup = NetworkSetup {
        model: ModelKind::Gb,
        space,
        distribution: Distribution::Gb,
    };
    run.check_memory(&setup, 0)?;
    let estimate = run.run_batches(|_, trials| {
        let mut net = GbNetwork::without_stored_set(space)?;
        let mut est = Estimate::default();
        for t in trials {
            let mut rng = substream(run.seed, &[TAG_SUBCLIQUE, l as u64, c as u64, m, t]);
            let first = gen_gb(space, &mut rng)?;
            refill(&mut net, space, m, &first, &mut rng)?;
            let probe = Pattern::from_coords(
                space,
                first.iter().enumerate().map(|(a, i)| {
                    let k = i - a * l;
                    if a < kept {
                        (a, k)
                    } else {
                        // Uniform over the l - 1 other neurons of the cluster.
                        let w = rng.gen_range(0..l - 1);
                        (a, if w >= k { w + 1 } else { w })
                    }
                }),
            )?;
            est = est
                + Estimate {
                    hits: u64::from(recognize(&net, &probe)),
                    trials: 1,
                };
        }
        Ok(est)
    })?;
    Ok(SubcliqueEstimate {
        estimate,
        kept,
        rho: kept as f64 / c as f64,
    })
}

/// Default exhaustive budget, re-exported for front ends.
pub const DEFAULT_EXHAUSTIVE_CANDIDATES: u64 = DEFAULT_MAX_CANDIDATES;
