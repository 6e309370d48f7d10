//! Command-line front end.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use samn_core::dynamics::{iterate, DEFAULT_MAX_CANDIDATES};
use samn_core::rng::substream;
use samn_core::theory::{
    edge_count, edge_probability, eval_constant, exact_recognition_probability,
    recognition_lower_bound, subclique_edges, subclique_lower_bound, CapacityConstant,
    RecognitionMode,
};
use samn_core::{
    erase, retrieve_exhaustive, AssociativeMemory, ErasureSpec, ModelKind, Network, NeuronSpace,
    Pattern, RetrievalPolicy,
};

use crate::experiments::{
    recognition_load, run_retrieval_sweep, stability_probe, subclique_probe, wrong_message_probe,
    Distribution, ExperimentSpec, Load, NetworkSetup, RunOptions, DEFAULT_BATCH, DEFAULT_MAX_ITERS,
    DEFAULT_MEMORY_LIMIT, DEFAULT_TRIALS,
};
use crate::io::{load_network, result_rows, save_network, write_results, write_table};
use crate::plot::emit_plot_script;
use crate::selftest;

#[derive(Debug, Parser)]
#[command(
    name = "samn",
    version,
    about = "Sparse associative memory simulations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Error rate of erased-message retrieval over a load sweep.
    Sweep(SweepArgs),
    /// Probability that stored messages are one-step fixed points.
    Stability(StabilityArgs),
    /// Probability that a random message is recognized.
    WrongMessage(RecognitionArgs),
    /// Probability that a partly wrong stored message is recognized.
    Subclique(SubcliqueArgs),
    /// Capacity constants and recognition bounds.
    Theory(TheoryArgs),
    /// Build a network from random messages and save it.
    Store(StoreArgs),
    /// Run retrieval dynamics on a saved network.
    Recall(RecallArgs),
    /// Run the built-in property suites.
    Selftest(SelftestArgs),
    /// Write a gnuplot script for result tables.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Amari,
    Willshaw,
    Gb,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Amari => ModelKind::Amari,
            ModelArg::Willshaw => ModelKind::Willshaw,
            ModelArg::Gb => ModelKind::Gb,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistributionArg {
    /// Independent neurons with probability --density.
    Iid,
    /// Exactly --active neurons.
    Exact,
    /// One neuron per cluster.
    Gb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Fixed,
    InputCount,
    WtaMax,
    WtaKth,
    ClusterWta,
    Som,
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EraseModeArg {
    Neurons,
    Clusters,
}

#[derive(Debug, Clone, Args)]
pub struct SpaceArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// Neuron count for flat spaces.
    #[arg(long)]
    pub neurons: Option<usize>,
    /// Cluster count c (clustered spaces).
    #[arg(long)]
    pub clusters: Option<usize>,
    /// Neurons per cluster l (clustered spaces).
    #[arg(long)]
    pub per_cluster: Option<usize>,
    /// Message distribution [default: gb with clusters, exact otherwise].
    #[arg(long, value_enum)]
    pub distribution: Option<DistributionArg>,
    /// Active neurons per message for exact messages.
    #[arg(long)]
    pub active: Option<usize>,
    /// Activation probability for iid messages.
    #[arg(long)]
    pub density: Option<f64>,
}

impl SpaceArgs {
    pub fn resolve(&self) -> Result<NetworkSetup> {
        let model: ModelKind = self.model.into();
        let space = match (self.neurons, self.clusters, self.per_cluster) {
            (None, Some(c), Some(l)) => NeuronSpace::clustered(c, l)?,
            (Some(n), None, None) => NeuronSpace::flat(n)?,
            (Some(_), _, _) => bail!("--neurons cannot be combined with --clusters/--per-cluster"),
            (None, Some(_), None) | (None, None, Some(_)) => {
                bail!("clustered spaces need both --clusters and --per-cluster")
            }
            (None, None, None) => bail!("give --neurons, or --clusters with --per-cluster"),
        };
        if model == ModelKind::Gb && space.layout().is_none() {
            bail!("model gb needs --clusters and --per-cluster");
        }
        let kind = self.distribution.unwrap_or(if space.layout().is_some() {
            DistributionArg::Gb
        } else {
            DistributionArg::Exact
        });
        let distribution = match kind {
            DistributionArg::Gb => Distribution::Gb,
            DistributionArg::Exact => Distribution::ExactC {
                c: self.active.context("exact messages need --active")?,
            },
            DistributionArg::Iid => Distribution::Iid {
                p: self.density.context("iid messages need --density")?,
            },
        };
        if kind != DistributionArg::Exact && self.active.is_some() {
            bail!("--active only applies to exact messages");
        }
        if kind != DistributionArg::Iid && self.density.is_some() {
            bail!("--density only applies to iid messages");
        }
        let setup = NetworkSetup {
            model,
            space,
            distribution,
        };
        setup.validate()?;
        Ok(setup)
    }
}

#[derive(Debug, Clone, Args)]
pub struct PolicyArgs {
    #[arg(long, value_enum)]
    pub policy: PolicyArg,
    /// Threshold h for the fixed policy.
    #[arg(long)]
    pub threshold: Option<u32>,
    /// Rank k for wta-kth [default: message sparsity].
    #[arg(long)]
    pub kth: Option<u32>,
    /// Completion cap for exhaustive retrieval.
    #[arg(long, default_value_t = DEFAULT_MAX_CANDIDATES)]
    pub max_candidates: u64,
}

impl PolicyArgs {
    pub fn resolve(&self, setup: &NetworkSetup) -> Result<RetrievalPolicy> {
        if self.threshold.is_some() && self.policy != PolicyArg::Fixed {
            bail!("--threshold only applies to --policy fixed");
        }
        if self.kth.is_some() && self.policy != PolicyArg::WtaKth {
            bail!("--kth only applies to --policy wta-kth");
        }
        let policy = match self.policy {
            PolicyArg::Fixed => RetrievalPolicy::FixedThreshold(
                self.threshold.context("--policy fixed needs --threshold")?,
            ),
            PolicyArg::InputCount => RetrievalPolicy::InputCountThreshold,
            PolicyArg::WtaMax => RetrievalPolicy::WtaMax,
            PolicyArg::WtaKth => RetrievalPolicy::WtaKth(
                self.kth.unwrap_or(setup.sparsity().round().max(1.0) as u32),
            ),
            PolicyArg::ClusterWta => RetrievalPolicy::GbClusterWta,
            PolicyArg::Som => RetrievalPolicy::GbSumOfMax,
            PolicyArg::Exhaustive => RetrievalPolicy::Exhaustive {
                max_candidates: self.max_candidates,
            },
        };
        policy.check(setup.model)?;
        Ok(policy)
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Trials per point.
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: u64,
    /// Trials sharing one network.
    #[arg(long, default_value_t = DEFAULT_BATCH)]
    pub batch: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads [default: all cores].
    #[arg(long, env = "SAMN_THREADS")]
    pub threads: Option<usize>,
    /// Byte budget for networks held at once.
    #[arg(long, default_value_t = DEFAULT_MEMORY_LIMIT)]
    pub memory_limit: u64,
}

impl RunArgs {
    pub fn resolve(&self) -> RunOptions {
        RunOptions {
            trials: self.trials,
            batch: self.batch,
            max_iters: self.max_iters,
            seed: self.seed,
            threads: self.threads,
            memory_limit: self.memory_limit,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct LoadArgs {
    /// Stored message counts: `start:stop:step` (inclusive) or a comma list.
    #[arg(long, conflicts_with = "alpha_range")]
    pub patterns: Option<String>,
    /// Loads as multiples of the model scale: `start:stop:step` or a comma list.
    #[arg(long)]
    pub alpha_range: Option<String>,
}

impl LoadArgs {
    pub fn resolve(&self) -> Result<Vec<Load>> {
        match (&self.patterns, &self.alpha_range) {
            (Some(p), None) => Ok(parse_counts(p)?.into_iter().map(Load::Count).collect()),
            (None, Some(a)) => Ok(parse_reals(a)?.into_iter().map(Load::Alpha).collect()),
            _ => bail!("give --patterns or --alpha-range"),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EraseArgs {
    /// Erased units per message.
    #[arg(long, conflicts_with = "erase_rate")]
    pub erase: Option<usize>,
    /// Erased fraction rho; the count is round(rho * units).
    #[arg(long)]
    pub erase_rate: Option<f64>,
    /// Unit of erasure [default: clusters for gb messages, neurons otherwise].
    #[arg(long, value_enum)]
    pub erase_mode: Option<EraseModeArg>,
}

impl EraseArgs {
    pub fn resolve(&self, setup: &NetworkSetup) -> Result<ErasureSpec> {
        let spec = match (self.erase, self.erase_rate) {
            (Some(f), None) => ErasureSpec::count(f),
            (None, Some(r)) => ErasureSpec::fraction(r)?,
            (None, None) => ErasureSpec::count(0),
            (Some(_), Some(_)) => unreachable!("clap rejects both"),
        };
        let default = if setup.distribution == Distribution::Gb {
            EraseModeArg::Clusters
        } else {
            EraseModeArg::Neurons
        };
        Ok(match self.erase_mode.unwrap_or(default) {
            EraseModeArg::Clusters => {
                if setup.space.layout().is_none() {
                    bail!("--erase-mode clusters needs a clustered space");
                }
                spec.clusters()
            }
            EraseModeArg::Neurons => spec,
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub space: SpaceArgs,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[command(flatten)]
    pub loads: LoadArgs,
    #[command(flatten)]
    pub erase: EraseArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// CSV output [default: standard output].
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Add rows to an existing CSV instead of replacing it.
    #[arg(long, requires = "output")]
    pub append: bool,
}

#[derive(Debug, Clone, Args)]
pub struct StabilityArgs {
    #[command(flatten)]
    pub space: SpaceArgs,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[command(flatten)]
    pub loads: LoadArgs,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct RecognitionArgs {
    #[arg(long)]
    pub clusters: usize,
    #[arg(long)]
    pub per_cluster: usize,
    /// Stored message counts: `start:stop:step` or a comma list.
    #[arg(long, conflicts_with = "alpha_range")]
    pub patterns: Option<String>,
    /// Loads alpha with M = alpha l^2 ln c.
    #[arg(long)]
    pub alpha_range: Option<String>,
    #[command(flatten)]
    pub run: RunArgs,
}

impl RecognitionArgs {
    fn loads(&self) -> Result<Vec<u64>> {
        match (&self.patterns, &self.alpha_range) {
            (Some(p), None) => parse_counts(p),
            (None, Some(a)) => Ok(parse_reals(a)?
                .into_iter()
                .map(|alpha| recognition_load(self.per_cluster, self.clusters, alpha))
                .collect()),
            _ => bail!("give --patterns or --alpha-range"),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SubcliqueArgs {
    #[command(flatten)]
    pub recognition: RecognitionArgs,
    /// Fraction of clusters keeping their true neuron.
    #[arg(long)]
    pub rho: f64,
}

#[derive(Debug, Clone, Args)]
pub struct TheoryArgs {
    /// Named constant.
    #[arg(long, value_parser = parse_constant, required_unless_present = "clusters")]
    pub constant: Option<CapacityConstant>,
    /// Erasure rate for rate-dependent constants and subclique bounds.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Cluster count c for recognition bounds.
    #[arg(long, requires_all = ["per_cluster", "patterns"], conflicts_with = "constant")]
    pub clusters: Option<u64>,
    #[arg(long)]
    pub per_cluster: Option<u64>,
    #[arg(long)]
    pub patterns: Option<u64>,
    /// Also compute the recognition probability by full enumeration.
    #[arg(long, requires = "clusters")]
    pub exact: bool,
}

fn parse_constant(s: &str) -> Result<CapacityConstant, String> {
    s.parse().map_err(|e: samn_core::theory::TheoryError| {
        let names: Vec<&str> = CapacityConstant::ALL.iter().map(|k| k.name()).collect();
        format!("{e}; expected one of {}", names.join(", "))
    })
}

#[derive(Debug, Clone, Args)]
pub struct StoreArgs {
    #[command(flatten)]
    pub space: SpaceArgs,
    /// Number of messages to store.
    #[arg(long)]
    pub patterns: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Leave the stored messages out of the file.
    #[arg(long)]
    pub no_stored_set: bool,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct RecallArgs {
    /// Network file written by `store`.
    #[arg(long)]
    pub network: PathBuf,
    /// Input state as comma-separated neuron indices.
    #[arg(long, conflicts_with = "message")]
    pub input: Option<String>,
    /// Use stored message k (needs a stored set in the file), erased per --erase.
    #[arg(long)]
    pub message: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub erase: usize,
    #[arg(long, value_enum)]
    pub policy: PolicyArg,
    #[arg(long)]
    pub threshold: Option<u32>,
    #[arg(long)]
    pub kth: Option<u32>,
    #[arg(long, default_value_t = DEFAULT_MAX_CANDIDATES)]
    pub max_candidates: u64,
    /// Completion size for exhaustive retrieval [default: the message size].
    #[arg(long)]
    pub target: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct SelftestArgs {
    /// Randomized instances per suite.
    #[arg(long, default_value_t = 500)]
    pub instances: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct PlotArgs {
    /// Result tables.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Script path; the image is written next to it as .png.
    #[arg(long)]
    pub output: PathBuf,
}

/// `start:stop:step` (inclusive) or `a,b,c`.
pub fn parse_counts(s: &str) -> Result<Vec<u64>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step): (u64, u64, u64) = (
                start
                    .trim()
                    .parse()
                    .with_context(|| format!("bad range start {start:?}"))?,
                stop.trim()
                    .parse()
                    .with_context(|| format!("bad range stop {stop:?}"))?,
                step.trim()
                    .parse()
                    .with_context(|| format!("bad range step {step:?}"))?,
            );
            if step == 0 || stop < start {
                bail!("range {s:?} needs step > 0 and stop >= start");
            }
            Ok((start..=stop).step_by(step as usize).collect())
        }
        [list] => list
            .split(',')
            .map(|x| x.trim().parse().with_context(|| format!("bad count {x:?}")))
            .collect(),
        _ => bail!("expected start:stop:step or a comma list, got {s:?}"),
    }
}

/// Real-valued variant of [`parse_counts`]; range points are `start + k step`.
pub fn parse_reals(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step): (f64, f64, f64) = (
                start
                    .trim()
                    .parse()
                    .with_context(|| format!("bad range start {start:?}"))?,
                stop.trim()
                    .parse()
                    .with_context(|| format!("bad range stop {stop:?}"))?,
                step.trim()
                    .parse()
                    .with_context(|| format!("bad range step {step:?}"))?,
            );
            if step.is_nan() || step <= 0.0 || stop < start {
                bail!("range {s:?} needs step > 0 and stop >= start");
            }
            let count = ((stop - start) / step + 1e-9).floor() as u64;
            Ok((0..=count).map(|k| start + k as f64 * step).collect())
        }
        [list] => list
            .split(',')
            .map(|x| {
                x.trim()
                    .parse()
                    .with_context(|| format!("bad number {x:?}"))
            })
            .collect(),
        _ => bail!("expected start:stop:step or a comma list, got {s:?}"),
    }
}

fn describe_setup(out: &mut String, setup: &NetworkSetup) {
    let _ = write!(out, "model={} n={}", setup.model, setup.space.n());
    if let Some(layout) = setup.space.layout() {
        let _ = write!(
            out,
            " clusters={} per_cluster={}",
            layout.clusters(),
            layout.per_cluster()
        );
    }
    let _ = write!(
        out,
        " distribution={} load_scale={}",
        setup.distribution,
        setup.load_scale()
    );
}

fn describe_run(out: &mut String, run: &RunOptions) {
    let threads = run
        .threads
        .map_or_else(|| "auto".to_string(), |t| t.to_string());
    let _ = write!(
        out,
        " trials={} batch={} max_iters={} seed={} threads={threads} memory_limit={}",
        run.trials, run.batch, run.max_iters, run.seed, run.memory_limit
    );
}

/// One-line resolved configuration of a sweep.
pub fn sweep_config(spec: &ExperimentSpec) -> String {
    let mut s = String::from("sweep ");
    describe_setup(&mut s, &spec.setup);
    let _ = write!(
        s,
        " policy={} erasure={:?}/{:?}",
        spec.policy, spec.erasure.amount, spec.erasure.mode
    );
    let loads: Vec<String> = spec
        .resolved_loads()
        .iter()
        .map(|(m, _)| m.to_string())
        .collect();
    let _ = write!(s, " M=[{}]", loads.join(","));
    describe_run(&mut s, &spec.run);
    s
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sweep(args) => sweep(args),
        Command::Stability(args) => stability(args),
        Command::WrongMessage(args) => wrong_message(args),
        Command::Subclique(args) => subclique(args),
        Command::Theory(args) => theory(args),
        Command::Store(args) => store(args),
        Command::Recall(args) => recall(args),
        Command::Selftest(args) => self_test(args),
        Command::Plot(args) => {
            emit_plot_script(&args.inputs, &args.output)?;
            println!("wrote {}", args.output.display());
            Ok(())
        }
    }
}

pub fn sweep_spec(args: &SweepArgs) -> Result<ExperimentSpec> {
    let setup = args.space.resolve()?;
    let spec = ExperimentSpec {
        policy: args.policy.resolve(&setup)?,
        loads: args.loads.resolve()?,
        erasure: args.erase.resolve(&setup)?,
        run: args.run.resolve(),
        setup,
    };
    spec.validate()?;
    Ok(spec)
}

fn sweep(args: SweepArgs) -> Result<()> {
    let spec = sweep_spec(&args)?;
    let config = sweep_config(&spec);
    eprintln!("{config}");
    let result = run_retrieval_sweep(&spec)?;
    match &args.output {
        Some(path) => {
            write_results(&result, &config, path, args.append)?;
            eprintln!("wrote {} rows to {}", result.points.len(), path.display());
        }
        None => {
            write_table(
                std::io::stdout().lock(),
                &config,
                &result_rows(&result),
                true,
            )?;
        }
    }
    Ok(())
}

fn stability(args: StabilityArgs) -> Result<()> {
    let setup = args.space.resolve()?;
    let policy = args.policy.resolve(&setup)?;
    let run = args.run.resolve();
    let loads = args.loads.resolve()?;
    let mut config = String::from("stability ");
    describe_setup(&mut config, &setup);
    let _ = write!(config, " policy={policy}");
    describe_run(&mut config, &run);
    println!("# {config}");
    println!("M,alpha,trials,probability,stderr");
    for load in loads {
        let m = load.resolve(&setup);
        let est = stability_probe(&setup, m, &policy, &run)?;
        println!(
            "{m},{},{},{},{}",
            crate::io::format_g9(m as f64 / setup.load_scale()),
            est.trials,
            crate::io::format_g9(est.probability()),
            crate::io::format_g9(est.stderr())
        );
    }
    Ok(())
}

fn recognition_header(kind: &str, args: &RecognitionArgs, run: &RunOptions) -> String {
    let mut config = format!(
        "{kind} clusters={} per_cluster={}",
        args.clusters, args.per_cluster
    );
    describe_run(&mut config, run);
    config
}

fn wrong_message(args: RecognitionArgs) -> Result<()> {
    let run = args.run.resolve();
    println!("# {}", recognition_header("wrong-message", &args, &run));
    println!("M,trials,probability,stderr,lower_bound");
    for m in args.loads()? {
        let est = wrong_message_probe(args.per_cluster, args.clusters, m, &run)?;
        let bound = recognition_lower_bound(args.per_cluster as u64, args.clusters as u64, m);
        println!(
            "{m},{},{},{},{}",
            est.trials,
            crate::io::format_g9(est.probability()),
            crate::io::format_g9(est.stderr()),
            crate::io::format_g9(bound)
        );
    }
    Ok(())
}

fn subclique(args: SubcliqueArgs) -> Result<()> {
    let rec = &args.recognition;
    let run = rec.run.resolve();
    println!(
        "# {} rho={}",
        recognition_header("subclique", rec, &run),
        args.rho
    );
    println!("M,trials,kept,rho,probability,stderr,lower_bound");
    for m in rec.loads()? {
        let est = subclique_probe(rec.per_cluster, rec.clusters, m, args.rho, &run)?;
        let bound = subclique_lower_bound(rec.per_cluster as u64, rec.clusters as u64, m, est.rho);
        println!(
            "{m},{},{},{},{},{},{}",
            est.estimate.trials,
            est.kept,
            crate::io::format_g9(est.rho),
            crate::io::format_g9(est.estimate.probability()),
            crate::io::format_g9(est.estimate.stderr()),
            crate::io::format_g9(bound)
        );
    }
    Ok(())
}

fn theory(args: TheoryArgs) -> Result<()> {
    if let Some(k) = args.constant {
        let value = eval_constant(k, args.rho)?;
        println!("{value:.17}");
        return Ok(());
    }
    let (c, l, m) = (
        args.clusters.context("--clusters")?,
        args.per_cluster
            .context("--per-cluster needed with --clusters")?,
        args.patterns.context("--patterns needed with --clusters")?,
    );
    println!("d = {:.17}", edge_probability(l, m as f64));
    println!("L = {}", edge_count(c));
    println!("d^L = {:.17}", recognition_lower_bound(l, c, m));
    if let Some(rho) = args.rho {
        println!("r(c,rho) = {:.17}", subclique_edges(c, rho));
        println!("d^r = {:.17}", subclique_lower_bound(l, c, m, rho));
    }
    if args.exact {
        let e = exact_recognition_probability(l, c, m, RecognitionMode::Enumerate)?;
        let (num, den) = e
            .exact
            .ok_or_else(|| anyhow!("enumeration returned no fraction"))?;
        println!("P = {num}/{den} = {:.17}", e.probability);
    }
    Ok(())
}

fn store(args: StoreArgs) -> Result<()> {
    let setup = args.space.resolve()?;
    let mut rng = substream(args.seed, &[crate::experiments::TAG_NET, args.patterns, 0]);
    let mut net = Network::new(setup.model, setup.space, !args.no_stored_set)?;
    for _ in 0..args.patterns {
        let p = setup.distribution.sample(setup.space, &mut rng)?;
        net.store(&p)?;
    }
    save_network(&args.output, &net, !args.no_stored_set)?;
    println!(
        "stored {} messages in {}",
        args.patterns,
        args.output.display()
    );
    Ok(())
}

fn parse_indices(space: NeuronSpace, s: &str) -> Result<Pattern> {
    let idx: Vec<usize> = if s.trim().is_empty() {
        Vec::new()
    } else {
        s.split(',')
            .map(|x| {
                x.trim()
                    .parse()
                    .with_context(|| format!("bad neuron index {x:?}"))
            })
            .collect::<Result<_>>()?
    };
    Ok(Pattern::from_indices(space, idx)?)
}

fn recall(args: RecallArgs) -> Result<()> {
    let net = load_network(&args.network)?;
    let space = net.space();
    let mut rng = substream(args.seed, &[crate::experiments::TAG_TRIAL, 0, 0]);
    let (cue, original) = match (&args.input, args.message) {
        (Some(s), None) => (parse_indices(space, s)?, None),
        (None, Some(k)) => {
            let set = net.stored_set().context("network file has no stored set")?;
            let msg = set
                .get(k)
                .with_context(|| format!("no stored message {k}"))?
                .clone();
            let mut spec = ErasureSpec::count(args.erase);
            if net.kind() == ModelKind::Gb {
                spec = spec.clusters();
            }
            (erase(&msg, &spec, &mut rng)?, Some(msg))
        }
        _ => bail!("give --input or --message"),
    };
    let c = original.as_ref().map_or(cue.len(), Pattern::len);
    let setup = NetworkSetup {
        model: net.kind(),
        space,
        distribution: if net.kind() == ModelKind::Gb {
            Distribution::Gb
        } else {
            Distribution::ExactC { c: c.max(1) }
        },
    };
    let policy = PolicyArgs {
        policy: args.policy,
        threshold: args.threshold,
        kth: args.kth,
        max_candidates: args.max_candidates,
    }
    .resolve(&setup)?;
    println!(
        "# recall model={} n={} policy={policy} input={:?}",
        net.kind(),
        space.n(),
        cue.active()
    );
    let result = match policy {
        RetrievalPolicy::Exhaustive { max_candidates } => {
            let target = args.target.unwrap_or(c);
            let found = retrieve_exhaustive(&net, &cue, target, max_candidates, &mut rng)?;
            println!("completion {:?}", found.active());
            found
        }
        ref p => {
            let t = iterate(&net, &cue, p, args.max_iters)?;
            for (k, s) in t.states.iter().enumerate() {
                println!("{k}: {:?}", s.active());
            }
            println!("verdict {:?}", t.verdict);
            t.final_state().clone()
        }
    };
    if let Some(msg) = original {
        println!(
            "retrieved {}",
            if result == msg { "exactly" } else { "wrongly" }
        );
    }
    Ok(())
}

fn self_test(args: SelftestArgs) -> Result<()> {
    println!("# selftest instances={} seed={}", args.instances, args.seed);
    let outcomes = selftest::run_all(args.instances, args.seed);
    for o in &outcomes {
        println!("{o}");
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    if failed > 0 {
        bail!("{failed} of {} suites failed", outcomes.len());
    }
    Ok(())
}
