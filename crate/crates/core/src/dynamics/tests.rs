use alloc::vec;
use alloc::vec::Vec;

use proptest::prelude::*;
use rand::Rng;

use super::*;
use crate::models::{AssociativeMemory, GbNetwork, WillshawNetwork};
use crate::patterns::{erase, gen_exact_c, gen_gb, ErasureSpec, NeuronSpace};
use crate::rng::substream;

fn flat(n: usize) -> NeuronSpace {
    NeuronSpace::flat(n).unwrap()
}

fn pat(space: NeuronSpace, idx: &[usize]) -> Pattern {
    Pattern::from_indices(space, idx.iter().copied()).unwrap()
}

fn willshaw(n: usize, stored: &[&[usize]]) -> WillshawNetwork {
    let s = flat(n);
    let mut w = WillshawNetwork::new(s);
    for m in stored {
        w.store(&pat(s, m)).unwrap();
    }
    w
}

fn amari(n: usize, stored: &[&[usize]]) -> AmariNetwork {
    let s = flat(n);
    let mut a = AmariNetwork::new(s);
    for m in stored {
        a.store(&pat(s, m)).unwrap();
    }
    a
}

/// Six pair messages on five neurons: 0 and 4 are each joined to 1, 2, 3.
fn oscillation_instance() -> WillshawNetwork {
    willshaw(5, &[&[0, 1], &[0, 2], &[0, 3], &[1, 4], &[2, 4], &[3, 4]])
}

#[test]
fn oscillation_under_max_threshold() {
    let w = oscillation_instance();
    let s = w.space();
    assert_eq!(
        step_willshaw_wta(&w, &pat(s, &[0]), WtaRule::Max),
        pat(s, &[0, 1, 2, 3])
    );
    assert_eq!(
        step_willshaw_wta(&w, &pat(s, &[0, 1, 2, 3]), WtaRule::Max),
        pat(s, &[0])
    );
    let traj = iterate(
        &w.clone().into(),
        &pat(s, &[0]),
        &RetrievalPolicy::WtaMax,
        20,
    )
    .unwrap();
    assert_eq!(
        traj.verdict,
        Verdict::Cycle {
            entry: 0,
            period: 2
        }
    );
    assert_eq!(
        traj.states,
        vec![pat(s, &[0]), pat(s, &[0, 1, 2, 3]), pat(s, &[0])]
    );
}

#[test]
fn oscillation_instance_under_fixed_threshold() {
    let w = oscillation_instance();
    let s = w.space();
    assert_eq!(
        step_willshaw_threshold(&w, &pat(s, &[0]), 1),
        pat(s, &[0, 1, 2, 3])
    );
    let traj = iterate(
        &w.clone().into(),
        &pat(s, &[0]),
        &RetrievalPolicy::FixedThreshold(1),
        20,
    )
    .unwrap();
    assert!(traj.converged());
    assert_eq!(*traj.final_state(), pat(s, &[0, 1, 2, 3, 4]));
}

#[test]
fn willshaw_threshold_examples() {
    let w = willshaw(5, &[&[0, 1]]);
    let s = w.space();
    assert_eq!(
        step_willshaw_threshold(&w, &pat(s, &[0, 1]), 2),
        pat(s, &[0, 1])
    );
    let empty = willshaw(5, &[]);
    assert!(step_willshaw_threshold(&empty, &pat(s, &[0, 1]), 3).is_empty());
}

#[test]
fn willshaw_wta_examples() {
    let w = willshaw(5, &[&[0, 1]]);
    let s = w.space();
    assert_eq!(
        step_willshaw_wta(&w, &pat(s, &[0]), WtaRule::Max),
        pat(s, &[0, 1])
    );
    let w = willshaw(5, &[&[0, 1], &[1, 2]]);
    assert_eq!(
        step_willshaw_wta(&w, &pat(s, &[1]), WtaRule::Max),
        pat(s, &[0, 1, 2])
    );
    // Max over an empty state is empty by convention.
    assert!(step_willshaw_wta(&w, &Pattern::empty(s), WtaRule::Max).is_empty());
    assert!(step_willshaw_wta(&w, &pat(s, &[4]), WtaRule::Max).is_empty());
}

#[test]
fn wta_kth_keeps_ties() {
    // Scores from state {1}: 0,1,2 score 1, the rest 0. k = 2 keeps all three.
    let w = willshaw(5, &[&[0, 1], &[1, 2]]);
    let s = w.space();
    assert_eq!(
        step_willshaw_wta(&w, &pat(s, &[1]), WtaRule::Kth(2)),
        pat(s, &[0, 1, 2])
    );
    // k beyond the positive scores lowers the threshold to 0: everyone fires.
    assert_eq!(
        step_willshaw_wta(&w, &pat(s, &[1]), WtaRule::Kth(4)).len(),
        5
    );
}

#[test]
fn amari_threshold_examples() {
    let a = amari(5, &[&[0, 1, 2]]);
    let s = a.space();
    assert_eq!(step_amari(&a, &pat(s, &[0, 1, 2]), 2), pat(s, &[0, 1, 2]));
    assert!(step_amari(&a, &pat(s, &[0, 1]), 3).is_empty());
    // h = 1: the neurons with an active weighted neighbour.
    assert_eq!(step_amari(&a, &pat(s, &[0]), 1), pat(s, &[1, 2]));
    // h = 0 passes every neuron since the threshold test is inclusive.
    assert_eq!(step_amari(&a, &pat(s, &[0]), 0).len(), 5);
    let empty = amari(5, &[]);
    assert!(step_amari(&empty, &pat(s, &[0, 3]), 1).is_empty());
}

#[test]
fn amari_wta_uses_fields() {
    let a = amari(6, &[&[0, 1, 2], &[0, 1, 3], &[0, 2]]);
    let s = a.space();
    // J01 = J02 = 2, J12 = J03 = J13 = 1. Fields from {0,1}: 2, 2, 3, 2, 0, 0.
    assert_eq!(
        step_amari_wta(&a, &pat(s, &[0, 1]), WtaRule::Max),
        pat(s, &[2])
    );
    let fields = a.fields(&pat(s, &[0, 2]));
    assert_eq!(fields, vec![2, 3, 2, 1, 0, 0]);
    assert_eq!(
        step_amari_wta(&a, &pat(s, &[0, 2]), WtaRule::Kth(3)),
        pat(s, &[0, 1, 2])
    );
    assert_eq!(
        step_amari_wta(&a, &pat(s, &[0, 2]), WtaRule::Kth(4)),
        pat(s, &[0, 1, 2, 3])
    );
}

fn gb_pair_network() -> (NeuronSpace, GbNetwork) {
    let s = NeuronSpace::clustered(2, 2).unwrap();
    let mut g = GbNetwork::new(s).unwrap();
    g.store(&Pattern::from_coords(s, [(0, 0), (1, 0)]).unwrap())
        .unwrap();
    (s, g)
}

#[test]
fn gb_cluster_wta_examples() {
    let (s, g) = gb_pair_network();
    let msg = Pattern::from_coords(s, [(0, 0), (1, 0)]).unwrap();
    for score in [GbScore::Field, GbScore::SumOfMax] {
        assert_eq!(step_gb_wta(&g, &msg, score), msg);
        assert_eq!(step_gb_wta(&g, &pat(s, &[s.index(0, 0)]), score), msg);
    }
    let empty = GbNetwork::new(s).unwrap();
    assert_eq!(step_gb_wta(&empty, &msg, GbScore::SumOfMax).len(), 4);
}

#[test]
fn gb_som_examples() {
    let (s, g) = gb_pair_network();
    let msg = Pattern::from_coords(s, [(0, 0), (1, 0)]).unwrap();
    assert_eq!(step_gb_som(&g, &pat(s, &[s.index(0, 0)])), msg);
    assert_eq!(step_gb_som(&g, &msg), msg);
    let empty = GbNetwork::new(s).unwrap();
    assert!(step_gb_som(&empty, &Pattern::empty(s)).is_empty());
}

#[test]
fn gb_fixed_threshold_c_keeps_stored_messages() {
    let s = NeuronSpace::clustered(5, 12).unwrap();
    let mut rng = substream(3, &[]);
    let mut g = GbNetwork::new(s).unwrap();
    for _ in 0..60 {
        g.store(&gen_gb(s, &mut rng).unwrap()).unwrap();
    }
    for m in g.stored_set().unwrap().iter() {
        assert_eq!(step_gb_threshold(&g, m, 5), *m);
    }
}

#[test]
fn update_is_synchronous() {
    // In-place sequential updates would switch 2 on after 1; the
    // synchronous step reads only the previous state.
    let w = willshaw(4, &[&[0, 1], &[1, 2]]);
    let s = w.space();
    let sequential = {
        let mut state = vec![true, false, false, false];
        for i in 0..4 {
            let score = (0..4).filter(|&j| state[j] && w.weight(i, j)).count();
            state[i] = score >= 1;
        }
        state
    };
    assert_eq!(sequential, [true, true, true, false]);
    assert_eq!(
        step_willshaw_threshold(&w, &pat(s, &[0]), 1),
        pat(s, &[0, 1])
    );
    assert_eq!(
        step(
            &w.into(),
            &pat(s, &[0]),
            &RetrievalPolicy::FixedThreshold(1)
        )
        .unwrap(),
        pat(s, &[0, 1])
    );
}

#[test]
fn stored_message_converges_at_first_step() {
    let w = willshaw(8, &[&[0, 1, 2], &[2, 3, 4]]);
    let s = w.space();
    let net: Network = w.into();
    for policy in [
        RetrievalPolicy::WtaMax,
        RetrievalPolicy::WtaKth(3),
        RetrievalPolicy::InputCountThreshold,
    ] {
        let t = iterate(&net, &pat(s, &[0, 1, 2]), &policy, 20).unwrap();
        assert_eq!(t.verdict, Verdict::Converged { step: 1 }, "{policy}");
        assert_eq!(t.steps(), 1);
    }
}

#[test]
fn iterate_rejects_bad_requests() {
    let net: Network = willshaw(5, &[&[0, 1]]).into();
    let s = flat(5);
    let input = pat(s, &[0]);
    assert_eq!(
        iterate(&net, &input, &RetrievalPolicy::GbSumOfMax, 5),
        Err(DynamicsError::Incompatible {
            policy: "som",
            model: ModelKind::Willshaw
        })
    );
    assert_eq!(
        iterate(
            &net,
            &input,
            &RetrievalPolicy::Exhaustive { max_candidates: 10 },
            5
        ),
        Err(DynamicsError::NotIterative)
    );
    assert!(matches!(
        iterate(&net, &input, &RetrievalPolicy::WtaMax, 0),
        Err(DynamicsError::InvalidParameter(_))
    ));
    assert!(matches!(
        iterate(&net, &input, &RetrievalPolicy::WtaKth(0), 5),
        Err(DynamicsError::InvalidParameter(_))
    ));
    assert_eq!(
        iterate(&net, &pat(flat(6), &[0]), &RetrievalPolicy::WtaMax, 5),
        Err(DynamicsError::SpaceMismatch)
    );
    let (gs, g) = gb_pair_network();
    assert!(matches!(
        iterate(&g.into(), &Pattern::empty(gs), &RetrievalPolicy::WtaMax, 5),
        Err(DynamicsError::Incompatible { .. })
    ));
}

#[test]
fn truncation_is_reported() {
    let net: Network = oscillation_instance().into();
    let t = iterate(&net, &pat(flat(5), &[0]), &RetrievalPolicy::WtaMax, 1).unwrap();
    assert_eq!(t.verdict, Verdict::Truncated { max_iters: 1 });
    assert_eq!(t.states.len(), 2);
}

#[test]
fn exhaustive_unique_gb_completion() {
    let s = NeuronSpace::clustered(8, 256).unwrap();
    let mut rng = substream(1, &[]);
    let msg = gen_gb(s, &mut rng).unwrap();
    let mut g = GbNetwork::new(s).unwrap();
    g.store(&msg).unwrap();
    let net: Network = g.into();
    let partial = erase(&msg, &ErasureSpec::count(4).clusters(), &mut rng).unwrap();
    let got = retrieve_exhaustive(&net, &partial, 8, DEFAULT_MAX_CANDIDATES, &mut rng).unwrap();
    assert_eq!(got, msg);
}

#[test]
fn exhaustive_picks_uniformly_between_two_completions() {
    let net: Network = willshaw(6, &[&[0, 1, 2], &[0, 1, 3]]).into();
    let s = flat(6);
    let partial = pat(s, &[0, 1]);
    let mut rng = substream(2, &[]);
    let runs = 10_000;
    let mut with_two = 0;
    for _ in 0..runs {
        let got = retrieve_exhaustive(&net, &partial, 3, 100, &mut rng).unwrap();
        assert!(got == pat(s, &[0, 1, 2]) || got == pat(s, &[0, 1, 3]));
        with_two += usize::from(got.contains(2));
    }
    let sd = libm::sqrt(0.25 / runs as f64);
    assert!(
        (with_two as f64 / runs as f64 - 0.5).abs() < 3.0 * sd,
        "{with_two}"
    );
}

#[test]
fn exhaustive_amari_prefers_heavier_clique() {
    // {0,1,2} carries 2 + 2 + 1 = 5, {0,1,3} carries 2 + 1 + 1 = 4.
    let net: Network = amari(6, &[&[0, 1, 2], &[0, 1, 3], &[0, 2]]).into();
    let s = flat(6);
    let mut rng = substream(3, &[]);
    for _ in 0..200 {
        let got = retrieve_exhaustive(&net, &pat(s, &[0, 1]), 3, 100, &mut rng).unwrap();
        assert_eq!(got, pat(s, &[0, 1, 2]));
    }
}

#[test]
fn exhaustive_errors() {
    let net: Network = willshaw(6, &[&[0, 1, 2], &[0, 1, 3]]).into();
    let s = flat(6);
    let mut rng = substream(4, &[]);
    assert_eq!(
        retrieve_exhaustive(&net, &pat(s, &[0, 1]), 3, 1, &mut rng),
        Err(DynamicsError::CapacityExceeded { limit: 1 })
    );
    assert_eq!(
        retrieve_exhaustive(&net, &pat(s, &[0, 1]), 5, 100, &mut rng),
        Err(DynamicsError::NotFound)
    );
    assert_eq!(
        retrieve_exhaustive(&net, &pat(s, &[2, 4]), 3, 100, &mut rng),
        Err(DynamicsError::NotFound)
    );
    assert_eq!(
        retrieve_exhaustive(&net, &pat(s, &[0, 1, 2]), 3, 100, &mut rng),
        Ok(pat(s, &[0, 1, 2]))
    );
}

/// All size-`target` cliques of the weight graph that contain `partial`.
fn brute_force_completions(w: &WillshawNetwork, partial: &Pattern, target: usize) -> Vec<Pattern> {
    let n = w.space().n();
    let mut out = Vec::new();
    for mask in 0u64..(1 << n) {
        if mask.count_ones() as usize != target {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        if !partial.iter().all(|i| members.contains(&i)) {
            continue;
        }
        let clique = members
            .iter()
            .all(|&i| members.iter().all(|&j| i == j || w.weight(i, j)));
        if clique {
            out.push(pat(w.space(), &members));
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kth_threshold_matches_downward_scan(scores in proptest::collection::vec(0u32..12, 1..40), k in 1u32..45) {
        let kth = kth_largest(&scores, k as usize);
        let max = u64::from(*scores.iter().max().unwrap());
        let count = |h: u64| scores.iter().filter(|&&s| u64::from(s) >= h).count();
        let scanned = (0..=max).rev().find(|&h| count(h) >= k as usize).unwrap_or(0);
        // Past the population size both rules let every neuron through.
        prop_assert_eq!(count(kth), count(scanned));
    }

    #[test]
    fn exhaustive_agrees_with_brute_force(seed: u64, n in 6usize..17, m in 1usize..12, target in 2usize..5) {
        let s = flat(n);
        let mut rng = substream(seed, &[]);
        let mut w = WillshawNetwork::new(s);
        for _ in 0..m {
            w.store(&gen_exact_c(s, target, &mut rng).unwrap()).unwrap();
        }
        let msg = w.stored_set().unwrap().get(0).unwrap().clone();
        let partial = erase(&msg, &ErasureSpec::count(1 + seed as usize % (target - 1)), &mut rng).unwrap();
        let truth = brute_force_completions(&w, &partial, target);
        let net: Network = w.into();
        let got = retrieve_exhaustive(&net, &partial, target, DEFAULT_MAX_CANDIDATES, &mut rng);
        match truth.len() {
            0 => prop_assert_eq!(got, Err(DynamicsError::NotFound)),
            1 => prop_assert_eq!(got.unwrap(), truth[0].clone()),
            _ => prop_assert!(truth.contains(&got.unwrap())),
        }
    }

    #[test]
    fn fixed_threshold_grows_and_converges(seed: u64, n in 8usize..120, m in 1usize..60, c in 2usize..7, f in 1usize..6) {
        let s = flat(n);
        let c = c.min(n);
        let mut rng = substream(seed, &[]);
        let mut w = WillshawNetwork::new(s);
        for _ in 0..m {
            w.store(&gen_exact_c(s, c, &mut rng).unwrap()).unwrap();
        }
        let msg = w.stored_set().unwrap().get(0).unwrap().clone();
        let input = erase(&msg, &ErasureSpec::count(f.min(c - 1)), &mut rng).unwrap();
        let h = rng.gen_range(0..=input.len()) as u32;
        let t = iterate(&w.into(), &input, &RetrievalPolicy::FixedThreshold(h), n).unwrap();
        prop_assert!(t.converged(), "{:?}", t.verdict);
        for pair in t.states.windows(2) {
            prop_assert!(pair[0].is_subset_of(&pair[1]));
        }
    }

    #[test]
    fn max_wta_settles_in_one_step_or_alternates(seed: u64, n in 8usize..120, m in 1usize..80, c in 2usize..7) {
        let s = flat(n);
        let c = c.min(n);
        let mut rng = substream(seed, &[]);
        let mut w = WillshawNetwork::new(s);
        for _ in 0..m {
            w.store(&gen_exact_c(s, c, &mut rng).unwrap()).unwrap();
        }
        let msg = w.stored_set().unwrap().get(0).unwrap().clone();
        let f = rng.gen_range(1..c);
        let input = erase(&msg, &ErasureSpec::count(f), &mut rng).unwrap();
        let states = run_steps(&w.into(), &input, &RetrievalPolicy::WtaMax, 8).unwrap();
        let fixed = states[1..].iter().all(|x| *x == states[1]);
        let alternating = states[1] != states[2]
            && (1..states.len() - 2).all(|t| states[t] == states[t + 2]);
        prop_assert!(fixed ^ alternating);
    }

    #[test]
    fn som_shrinks_within_filled_state(seed: u64, c in 2usize..7, l in 2usize..20, m in 1usize..80, f in 0usize..7) {
        let s = NeuronSpace::clustered(c, l).unwrap();
        let mut rng = substream(seed, &[]);
        let mut g = GbNetwork::new(s).unwrap();
        for _ in 0..m {
            g.store(&gen_gb(s, &mut rng).unwrap()).unwrap();
        }
        let msg = g.stored_set().unwrap().get(0).unwrap().clone();
        let input = erase(&msg, &ErasureSpec::count(f.min(c)).clusters(), &mut rng).unwrap();
        let net: Network = g.clone().into();
        let t = iterate(&net, &input, &RetrievalPolicy::GbSumOfMax, c * l).unwrap();
        prop_assert!(t.converged(), "{:?}", t.verdict);
        for pair in t.states.windows(2) {
            let filled = Pattern::from_bits(s, &fill_empty_clusters(&g, &pair[0].to_bits()));
            prop_assert!(pair[1].is_subset_of(&filled));
        }
        // The stored message survives every step.
        for state in &t.states[1..] {
            prop_assert!(msg.is_subset_of(state));
        }
    }
}
