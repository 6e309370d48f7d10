//! Built-in property suites, shared by the `selftest` subcommand and the
//! acceptance tests.

use std::fmt;

use rand::Rng;
use samn_core::codec;
use samn_core::dynamics::{iterate, run_steps, step};
use samn_core::rng::substream;
use samn_core::theory::{
    eval_constant, exact_recognition_probability, CapacityConstant, RecognitionMode,
};
use samn_core::{
    erase, gen_exact_c, gen_gb, gen_iid, AmariNetwork, AssociativeMemory, ErasureSpec, GbNetwork,
    ModelKind, Network, NeuronSpace, Pattern, RetrievalPolicy, Verdict, WillshawNetwork,
};

use crate::experiments::{efficiency, model_bits, wrong_message_probe, RunOptions};

const TAG_SELFTEST: u64 = 0x7365_6c66;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for SuiteOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{mark} {}: {}", self.name, self.detail)
    }
}

fn outcome(name: &'static str, result: Result<String, String>) -> SuiteOutcome {
    match result {
        Ok(detail) => SuiteOutcome {
            name,
            passed: true,
            detail,
        },
        Err(detail) => SuiteOutcome {
            name,
            passed: false,
            detail,
        },
    }
}

fn pat(space: NeuronSpace, idx: &[usize]) -> Pattern {
    Pattern::from_indices(space, idx.iter().copied()).expect("valid indices")
}

/// The five-neuron instance whose max-score dynamics alternate forever.
pub fn oscillation_network() -> WillshawNetwork {
    let s = NeuronSpace::flat(5).expect("n >= 2");
    let mut w = WillshawNetwork::new(s);
    for m in [[0, 1], [0, 2], [0, 3], [1, 4], [2, 4], [3, 4]] {
        w.store(&pat(s, &m)).expect("same space");
    }
    w
}

pub fn oscillation() -> Result<String, String> {
    let w = oscillation_network();
    let s = w.space();
    let net: Network = w.into();
    let t =
        iterate(&net, &pat(s, &[0]), &RetrievalPolicy::WtaMax, 20).map_err(|e| e.to_string())?;
    let a = pat(s, &[0]);
    let b = pat(s, &[0, 1, 2, 3]);
    let alternates = t
        .states
        .iter()
        .enumerate()
        .all(|(k, x)| *x == if k % 2 == 0 { &a } else { &b }.clone());
    match t.verdict {
        Verdict::Cycle { period: 2, .. } if alternates => Ok(format!("{:?}", t.verdict)),
        v => Err(format!("verdict {v:?}, states {:?}", t.states)),
    }
}

fn random_willshaw<R: Rng>(
    rng: &mut R,
    max_n: usize,
    max_m: usize,
) -> (WillshawNetwork, Vec<Pattern>) {
    let n = rng.gen_range(8..=max_n);
    let s = NeuronSpace::flat(n).expect("n >= 2");
    let m = rng.gen_range(1..=max_m);
    let c = rng.gen_range(2..=8.min(n - 1));
    let iid = rng.gen_bool(0.3);
    let mut w = WillshawNetwork::without_stored_set(s);
    let mut stored = Vec::with_capacity(m);
    for _ in 0..m {
        let p = if iid {
            gen_iid(s, c as f64 / n as f64, rng).expect("p in (0,1)")
        } else {
            gen_exact_c(s, c, rng).expect("c <= n")
        };
        w.store(&p).expect("same space");
        stored.push(p);
    }
    (w, stored)
}

fn erased_cue<R: Rng>(stored: &[Pattern], rng: &mut R) -> Pattern {
    let msg = &stored[rng.gen_range(0..stored.len())];
    let f = if msg.is_empty() {
        0
    } else {
        rng.gen_range(0..msg.len())
    };
    erase(msg, &ErasureSpec::count(f), rng).expect("f < |msg|")
}

/// Threshold dynamics with `h <= |input|` grow monotonically and settle
/// within `N` steps.
pub fn fixed_threshold_convergence(instances: u64, seed: u64) -> Result<String, String> {
    for k in 0..instances {
        let mut rng = substream(seed, &[TAG_SELFTEST, 2, k]);
        let (w, stored) = random_willshaw(&mut rng, 256, 200);
        let n = w.space().n();
        let cue = erased_cue(&stored, &mut rng);
        let h = rng.gen_range(0..=cue.len()) as u32;
        let net: Network = w.into();
        let t = iterate(&net, &cue, &RetrievalPolicy::FixedThreshold(h), n)
            .map_err(|e| e.to_string())?;
        if !t.converged() {
            return Err(format!("instance {k}: {:?}", t.verdict));
        }
        if let Some(p) = t.states.windows(2).position(|w| !w[0].is_subset_of(&w[1])) {
            return Err(format!("instance {k}: active set shrank at step {}", p + 1));
        }
    }
    Ok(format!("{instances} instances converged monotonically"))
}

/// Max-score dynamics either freeze after one step or alternate with
/// period two from step one.
pub fn wta_one_iteration(instances: u64, seed: u64) -> Result<String, String> {
    let (mut fixed, mut alternating) = (0, 0);
    for k in 0..instances {
        let mut rng = substream(seed, &[TAG_SELFTEST, 3, k]);
        let (w, stored) = random_willshaw(&mut rng, 256, 200);
        let cue = erased_cue(&stored, &mut rng);
        let net: Network = w.into();
        let s = run_steps(&net, &cue, &RetrievalPolicy::WtaMax, 10).map_err(|e| e.to_string())?;
        let is_fixed = s[1..].iter().all(|x| *x == s[1]);
        let is_alt = s[1] != s[2] && (1..s.len() - 2).all(|t| s[t] == s[t + 2]);
        match (is_fixed, is_alt) {
            (true, false) => fixed += 1,
            (false, true) => alternating += 1,
            _ => return Err(format!("instance {k}: neither fixed nor alternating")),
        }
    }
    Ok(format!("{fixed} fixed, {alternating} alternating"))
}

/// Every stored message is a one-step fixed point of clustered
/// threshold-`c` dynamics and of clipped max-score dynamics.
pub fn stored_messages_stable(max_m: u64, seed: u64) -> Result<String, String> {
    let (c, l, n) = (6, 85, 512);
    let gs = NeuronSpace::clustered(c, l).expect("c, l >= 2");
    let fs = NeuronSpace::flat(n).expect("n >= 2");
    let mut checks = 0;
    for m in 1..=max_m {
        let mut rng = substream(seed, &[TAG_SELFTEST, 4, m]);
        let mut g = GbNetwork::new(gs).expect("clustered");
        let mut w = WillshawNetwork::new(fs);
        for _ in 0..m {
            g.store(&gen_gb(gs, &mut rng).expect("clustered"))
                .expect("valid");
            w.store(&gen_exact_c(fs, c, &mut rng).expect("c <= n"))
                .expect("valid");
        }
        let g: Network = g.into();
        let w: Network = w.into();
        for (net, policy) in [
            (&g, RetrievalPolicy::FixedThreshold(c as u32)),
            (&w, RetrievalPolicy::WtaMax),
        ] {
            for msg in net.stored_set().expect("retained").iter() {
                checks += 1;
                if step(net, msg, &policy).map_err(|e| e.to_string())? != *msg {
                    return Err(format!("M={m}: {policy} moved {msg:?}"));
                }
            }
        }
    }
    Ok(format!("{checks} checks"))
}

/// Exact enumeration at `l = c = 2`, `M = 1` and Monte Carlo agreement.
pub fn tiny_exact_oracle(trials: u64, seed: u64) -> Result<String, String> {
    let exact = exact_recognition_probability(2, 2, 1, RecognitionMode::Enumerate)
        .map_err(|e| e.to_string())?;
    if exact.exact != Some((1, 4)) {
        return Err(format!("enumeration gave {:?}", exact.exact));
    }
    let run = RunOptions {
        trials,
        batch: 1000,
        seed,
        ..RunOptions::default()
    };
    let mc = wrong_message_probe(2, 2, 1, &run).map_err(|e| e.to_string())?;
    let gap = (mc.probability() - 0.25).abs();
    if gap > 3.0 * mc.stderr() {
        return Err(format!("MC {} +- {} vs 1/4", mc.probability(), mc.stderr()));
    }
    Ok(format!(
        "exact 1/4, MC {:.4} +- {:.4}",
        mc.probability(),
        mc.stderr()
    ))
}

pub fn efficiency_formulas() -> Result<String, String> {
    let flat = NeuronSpace::flat(2048).map_err(|e| e.to_string())?;
    let gb = NeuronSpace::clustered(8, 256).map_err(|e| e.to_string())?;
    let checks = [
        (
            "C_Willshaw(2048)",
            model_bits(ModelKind::Willshaw, flat, 1),
            2_096_128.0,
        ),
        ("C_GB(8,256)", model_bits(ModelKind::Gb, gb, 1), 1_835_008.0),
        (
            "C_Amari(2048,3)",
            model_bits(ModelKind::Amari, flat, 3),
            2_096_128.0 * 2.0,
        ),
        (
            "eff_GB(M=1)",
            efficiency(ModelKind::Gb, gb, 8, 1),
            64.0 / 1_835_008.0,
        ),
    ];
    for (name, got, want) in checks {
        if (got - want).abs() > 1e-12 * want {
            return Err(format!("{name} = {got}, expected {want}"));
        }
    }
    Ok("closed forms exact".into())
}

pub fn constants_identity() -> Result<String, String> {
    let upper = eval_constant(CapacityConstant::AmariUpper, None).map_err(|e| e.to_string())?;
    let wta0 =
        eval_constant(CapacityConstant::WillshawWta, Some(0.0)).map_err(|e| e.to_string())?;
    if upper.to_bits() != wta0.to_bits() {
        return Err(format!("{upper} != {wta0}"));
    }
    Ok(format!("willshaw-wta(0) = amari-upper = {upper:.10}"))
}

/// Encode/decode equality for all three models, stored set included.
pub fn codec_round_trip(seed: u64) -> Result<String, String> {
    let mut rng = substream(seed, &[TAG_SELFTEST, 10]);
    let flat = NeuronSpace::flat(97).map_err(|e| e.to_string())?;
    let gs = NeuronSpace::clustered(5, 13).map_err(|e| e.to_string())?;
    let mut nets = vec![
        Network::new(ModelKind::Amari, flat, true).map_err(|e| e.to_string())?,
        Network::new(ModelKind::Willshaw, flat, true).map_err(|e| e.to_string())?,
        Network::new(ModelKind::Gb, gs, true).map_err(|e| e.to_string())?,
    ];
    for net in &mut nets {
        for _ in 0..40 {
            let p = match net {
                Network::Gb(_) => gen_gb(gs, &mut rng),
                _ => gen_exact_c(flat, 7, &mut rng),
            }
            .map_err(|e| e.to_string())?;
            net.store(&p).map_err(|e| e.to_string())?;
        }
    }
    for net in &nets {
        for with_set in [false, true] {
            let back = codec::decode(&codec::encode(net, with_set)).map_err(|e| e.to_string())?;
            let same_weights = match (net, &back) {
                (Network::Amari(a), Network::Amari(b)) => amari_equal(a, b),
                (Network::Willshaw(a), Network::Willshaw(b)) => a.weights() == b.weights(),
                (Network::Gb(a), Network::Gb(b)) => gb_equal(a, b),
                _ => false,
            };
            let same_set = !with_set || back.stored_set() == net.stored_set();
            if !same_weights || !same_set || back.stored_count() != net.stored_count() {
                return Err(format!("{} round trip differs", net.kind()));
            }
        }
    }
    Ok("amari, willshaw, gb".into())
}

fn amari_equal(a: &AmariNetwork, b: &AmariNetwork) -> bool {
    let n = a.space().n();
    (0..n).all(|i| (0..n).all(|j| a.weight(i, j) == b.weight(i, j)))
}

fn gb_equal(a: &GbNetwork, b: &GbNetwork) -> bool {
    let n = a.space().n();
    (0..n).all(|i| (0..n).all(|j| a.weight(i, j) == b.weight(i, j)))
}

/// Bit-packed scores against naive double loops over the weights.
pub fn dense_reference(instances: u64, seed: u64) -> Result<String, String> {
    for k in 0..instances {
        let mut rng = substream(seed, &[TAG_SELFTEST, 11, k]);
        let n = rng.gen_range(2..=64);
        let flat = NeuronSpace::flat(n).map_err(|e| e.to_string())?;
        let m = rng.gen_range(0..30);
        let mut a = AmariNetwork::new(flat);
        let mut w = WillshawNetwork::new(flat);
        for _ in 0..m {
            let p = gen_iid(flat, 0.2, &mut rng).map_err(|e| e.to_string())?;
            a.store(&p).map_err(|e| e.to_string())?;
            w.store(&p).map_err(|e| e.to_string())?;
        }
        let state = gen_iid(flat, rng.gen_range(0.05..0.9), &mut rng).map_err(|e| e.to_string())?;
        let on = |j: usize| state.contains(j);
        let amari: Vec<u64> = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| j != i && on(j))
                    .map(|j| u64::from(a.weight(i, j)))
                    .sum()
            })
            .collect();
        let willshaw: Vec<u32> = (0..n)
            .map(|i| (0..n).filter(|&j| on(j) && w.weight(i, j)).count() as u32)
            .collect();
        if a.fields(&state) != amari || w.scores(&state) != willshaw {
            return Err(format!("instance {k}: flat scores differ"));
        }

        let (c, l) = (rng.gen_range(2..=6), rng.gen_range(1..=10));
        let gs = NeuronSpace::clustered(c, l).map_err(|e| e.to_string())?;
        let mut g = GbNetwork::new(gs).map_err(|e| e.to_string())?;
        for _ in 0..rng.gen_range(0..20) {
            g.store(&gen_gb(gs, &mut rng).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
        }
        let st = gen_iid(gs, 0.3, &mut rng).map_err(|e| e.to_string())?;
        let gn = gs.n();
        let field: Vec<u32> = (0..gn)
            .map(|i| {
                (0..gn)
                    .filter(|&j| st.contains(j) && g.weight(i, j))
                    .count() as u32
            })
            .collect();
        let som: Vec<u32> = (0..gn)
            .map(|i| {
                (0..c)
                    .filter(|&b| (b * l..(b + 1) * l).any(|j| st.contains(j) && g.weight(i, j)))
                    .count() as u32
            })
            .collect();
        if g.fields(&st) != field || g.som_scores(&st) != som {
            return Err(format!("instance {k}: clustered scores differ"));
        }
    }
    Ok(format!("{instances} instances"))
}

/// Runs every suite at the given size.
pub fn run_all(instances: u64, seed: u64) -> Vec<SuiteOutcome> {
    vec![
        outcome("oscillation", oscillation()),
        outcome(
            "fixed-threshold-convergence",
            fixed_threshold_convergence(instances, seed),
        ),
        outcome("wta-one-iteration", wta_one_iteration(instances, seed)),
        outcome("stored-messages-stable", stored_messages_stable(50, seed)),
        outcome("tiny-exact-oracle", tiny_exact_oracle(20_000, seed)),
        outcome("efficiency-formulas", efficiency_formulas()),
        outcome("constants-identity", constants_identity()),
        outcome("codec-round-trip", codec_round_trip(seed)),
        outcome("dense-reference", dense_reference(instances.min(200), seed)),
    ]
}
