use posscond::logic::{Formula, Frame, Literal, World};
use posscond::network::{alarm_net, joint_density, oracle_conditional, oracle_marginal, PossibilisticNet};
use posscond::propagation::{
    build_markov_tree, check_markov_property, collect, combine_all, query_target, MarkovTree, Potential,
    PropagationError, VariableSet,
};
use posscond::random;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn frame5() -> Frame {
    Frame::new(["A", "B", "C", "D", "E"]).unwrap()
}

fn potential(max_vars: usize) -> impl Strategy<Value = Potential> {
    prop::sample::subsequence((0..5).collect::<Vec<usize>>(), 1..=max_vars).prop_flat_map(|vars| {
        let scope = VariableSet::from_vars(vars);
        prop::collection::vec(
            prop_oneof![1 => Just(0.0), 1 => Just(1.0), 4 => 0.0..=1.0f64],
            1 << scope.len(),
        )
        .prop_map(move |mut values| {
            values[0] = 1.0;
            Potential::new(&frame5(), scope, values).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn combination_commutes_and_associates(g in potential(4), h in potential(4), k in potential(4)) {
        let (Ok(gh), Ok(hg)) = (g.combine(&h), h.combine(&g)) else { return Ok(()) };
        prop_assert_eq!(&gh, &hg);
        let (Ok(left), Ok(right)) = (gh.combine(&k), g.combine(&h.combine(&k).unwrap())) else {
            return Ok(());
        };
        prop_assert_eq!(left.scope(), right.scope());
        for (x, y) in left.values().iter().zip(right.values()) {
            prop_assert!((x - y).abs() <= 1e-15);
        }
    }

    #[test]
    fn marginalization_composes(g in potential(4), a in any::<u32>(), b in any::<u32>()) {
        let h = VariableSet::from_vars(g.scope().iter().filter(|v| a >> v & 1 == 1));
        let h2 = VariableSet::from_vars(h.iter().filter(|v| b >> v & 1 == 1));
        let stepwise = g.marginalize(h).unwrap().marginalize(h2).unwrap();
        prop_assert_eq!(stepwise, g.marginalize(h2).unwrap());
    }

    #[test]
    fn marginalization_distributes_over_combination(g in potential(4), k in potential(3)) {
        let Ok(gk) = g.combine(&k) else { return Ok(()) };
        // Drop variables that only g mentions.
        let only_g: Vec<usize> = g.scope().iter().filter(|&v| !k.scope().contains(v)).collect();
        for &x in &only_g {
            let target = gk.scope().without(x);
            let direct = gk.marginalize(target).unwrap();
            let local = g.marginalize(g.scope().without(x)).unwrap().combine(&k).unwrap();
            prop_assert_eq!(direct, local);
        }
    }

    #[test]
    fn built_trees_have_the_markov_property(
        families in prop::collection::vec(prop::sample::subsequence((0..6).collect::<Vec<usize>>(), 1..=3), 1..8)
    ) {
        let frame = Frame::new(["A", "B", "C", "D", "E", "F"]).unwrap();
        let sets: Vec<VariableSet> = families.into_iter().map(VariableSet::from_vars).collect();
        let tree = build_markov_tree(&frame, &sets).unwrap();
        prop_assert!(check_markov_property(&tree));
        for (i, set) in sets.iter().enumerate() {
            prop_assert_eq!(tree.scope(i), *set);
        }
        prop_assert_eq!(tree.edges().len(), tree.len() - 1);
    }
}

/// The alarm joint written out by hand from the model's tables, without the
/// loader or the library's product.
fn alarm_by_hand(vals: [bool; 6]) -> f64 {
    let [b, e, a, r, w, g] = vals;
    let pick = |t: bool, pos: f64, neg: f64| if t { pos } else { neg };
    let pa = match (b, e) {
        (true, true) => pick(a, 1.0, 0.05),
        (true, false) => pick(a, 1.0, 0.4),
        (false, true) => pick(a, 1.0, 0.85),
        (false, false) => pick(a, 0.05, 1.0),
    };
    let pr = if e { pick(r, 1.0, 0.05) } else { pick(r, 0.0, 1.0) };
    let pw = if a { pick(w, 1.0, 0.8) } else { 1.0 };
    let pg = if a { pick(g, 1.0, 0.8) } else { 1.0 };
    pa * pr * pw * pg
}

fn by_hand_conditional(target: (usize, bool), evidence: &[(usize, bool)]) -> f64 {
    let mut both = 0.0f64;
    let mut ev = 0.0f64;
    for index in 0..64u32 {
        let vals: [bool; 6] = std::array::from_fn(|i| index >> (5 - i) & 1 == 0);
        if evidence.iter().all(|&(v, t)| vals[v] == t) {
            let p = alarm_by_hand(vals);
            ev = ev.max(p);
            if vals[target.0] == target.1 {
                both = both.max(p);
            }
        }
    }
    both / ev
}

#[test]
fn alarm_queries_match_hand_enumeration() {
    let net = alarm_net();
    let tree = MarkovTree::from_net(&net).unwrap();
    let joint = joint_density(&net);
    for w in net.frame().worlds() {
        let vals: [bool; 6] = std::array::from_fn(|v| net.frame().holds(w, v));
        assert!((joint.value(w) - alarm_by_hand(vals)).abs() <= 1e-15);
    }
    let evidences: [&[(usize, bool)]; 2] = [&[(4, true), (3, true)], &[(4, false)]];
    for evidence in evidences {
        let literals: Vec<Literal> = evidence.iter().map(|&(v, t)| Literal::new(v, t)).collect();
        for target in 0..6 {
            let (t, f) = query_target(&tree, target, &literals).unwrap();
            assert!((t - by_hand_conditional((target, true), evidence)).abs() <= 1e-12);
            assert!((f - by_hand_conditional((target, false), evidence)).abs() <= 1e-12);
        }
    }
    assert_eq!(query_target(&tree, 1, &[Literal::new(3, true)]).unwrap(), (1.0, 0.0));
    assert_eq!(query_target(&tree, 2, &[Literal::new(4, false)]).unwrap(), (0.8, 1.0));
}

fn random_nets(seed: u64, count: usize) -> impl Iterator<Item = (PossibilisticNet, Vec<Literal>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(move |_| {
        let net = random::net(&mut rng, 8, 3);
        let evidence = random::satisfiable_evidence(&mut rng, &net, 3);
        (net, evidence)
    })
}

#[test]
fn propagation_matches_the_oracle_on_random_nets() {
    for (net, evidence) in random_nets(41, 200) {
        let tree = MarkovTree::from_net(&net).unwrap();
        assert!(check_markov_property(&tree));
        let ev = Formula::conjunction(&evidence);
        for target in 0..net.frame().len() {
            let propagated = query_target(&tree, target, &evidence).unwrap();
            let oracle = oracle_marginal(&net, target, &ev).unwrap();
            assert!(
                (propagated.0 - oracle.0).abs() <= 1e-12 && (propagated.1 - oracle.1).abs() <= 1e-12,
                "{}\nevidence {evidence:?} target {target}: {propagated:?} vs {oracle:?}",
                net.to_model_text()
            );
        }
    }
}

#[test]
fn collect_agrees_with_combining_everything() {
    for (net, evidence) in random_nets(42, 60) {
        let tree = MarkovTree::from_net(&net).unwrap();
        let mut all: Vec<Potential> = tree.potentials().to_vec();
        all.extend(evidence.iter().map(|&l| Potential::observation(net.frame(), l).unwrap()));
        let global = combine_all(&all).unwrap();
        let extended = posscond::propagation::attach_evidence(&tree, &evidence).unwrap();
        for target in 0..net.frame().len() {
            let set = VariableSet::singleton(target);
            let root = extended.smallest_containing(set).unwrap();
            let local = collect(&extended, root).unwrap().marginalize(set).unwrap();
            let reference = global.marginalize(set).unwrap();
            for (x, y) in local.values().iter().zip(reference.values()) {
                assert!((x - y).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn joints_are_normalized_and_factor_over_prefixes() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for _ in 0..300 {
        let net = random::net(&mut rng, 7, 3);
        let joint = joint_density(&net);
        assert!(joint.validate().is_ok());
        let f = net.frame();
        let order = net.topological_order();
        let k = rng.gen_range(1..=order.len());
        let prefix = &order[..k];
        // Max over the worlds agreeing on the prefix equals the prefix product.
        for w in f.worlds() {
            let agree = |u: World| prefix.iter().all(|&v| f.holds(u, v) == f.holds(w, v));
            let marginal = f.worlds().filter(|&u| agree(u)).map(|u| joint.value(u)).fold(0.0, f64::max);
            assert!((marginal - net.partial_product(prefix, w)).abs() <= 1e-15);
        }
    }
}

#[test]
fn oracle_identities() {
    let net = alarm_net();
    let f = net.frame();
    for root in [0, 1] {
        let spec = net.node(root).rows[0];
        let (t, nt) = oracle_marginal(&net, root, &Formula::True).unwrap();
        assert_eq!([t, nt], spec);
    }
    let joint = joint_density(&net);
    for (net, evidence) in random_nets(44, 100) {
        let joint = joint_density(&net);
        let ev = Formula::conjunction(&evidence);
        let pi_ev = joint.measure(&ev.models(net.frame())).unwrap();
        for target in 0..net.frame().len() {
            let t = Formula::atom(target);
            let both = joint.measure(&Formula::and(t.clone(), ev.clone()).models(net.frame())).unwrap();
            let c = oracle_conditional(&net, &t, &ev).unwrap();
            // Division then multiplication may move the last bit.
            assert!((c * pi_ev - both).abs() <= f64::EPSILON * both);
        }
    }
    let r = Formula::atom(f.index_of("R").unwrap());
    let e = Formula::atom(f.index_of("E").unwrap());
    assert_eq!(oracle_conditional(&net, &r, &r).unwrap(), 1.0);
    assert_eq!(joint.measure(&Formula::and(e.clone(), r.clone()).models(f)).unwrap(), 1.0);
    assert!(matches!(
        query_target(&MarkovTree::from_net(&net).unwrap(), 0, &[Literal::new(3, true), Literal::new(3, false)]),
        Err(PropagationError::ImpossibleEvidence)
    ));
}
