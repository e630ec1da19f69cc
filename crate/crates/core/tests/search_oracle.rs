use std::cmp::Ordering;
use std::collections::BTreeSet;

use msetlex::{
    fixpoint, solve, solve_all, AlphaInterval, Domain, Limits, Model, Multiset, Objective, OrderingId, Propagator,
    Representation, Status, Store, Universe,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn all_values(u: &Universe) -> Vec<Multiset> {
    let mut out: Vec<Vec<u32>> = vec![vec![]];
    for &m in u.max_occ() {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..=m).map(move |o| {
                    let mut w = v.clone();
                    w.push(o);
                    w
                })
            })
            .collect();
    }
    out.into_iter().map(Multiset::from_occurrences).collect()
}

fn precedes(repr: Representation, x: &Multiset, y: &Multiset) -> bool {
    match repr {
        Representation::Interval(o) => o.cmp(x, y) != Ordering::Greater,
        Representation::SubsetBounds => x.occurrences() <= y.occurrences(),
    }
}

/// Small random model with up to three variables over a tiny universe.
fn random_model(seed: u64) -> Model {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=3);
    let u = Universe::new((0..n).map(|_| rng.gen_range(1..=2)).collect()).unwrap();
    let repr = Representation::ALL[rng.gen_range(0..9)];
    let mut m = Model::new(u.clone(), repr);
    let nvars = rng.gen_range(2..=3);
    for i in 0..nvars {
        let x = m.add_var(format!("x{i}"));
        if rng.gen_bool(0.3) {
            let e = rng.gen_range(1..=n);
            let hi = rng.gen_range(0..=u.max_occ()[e - 1]);
            m.vars[x].initial = m.vars[x].initial.clone().with_occ(e, 0, hi);
        }
    }
    for _ in 0..rng.gen_range(1..=3) {
        let x = rng.gen_range(0..nvars);
        let y = (x + rng.gen_range(1..nvars)) % nvars;
        let z = (0..nvars).find(|&v| v != x && v != y);
        let c = rng.gen_range(0..=u.max_cardinality());
        let p = match (rng.gen_range(0..6), z) {
            (0, _) => Propagator::Cardinality { x, lo: c, hi: rng.gen_range(c..=u.max_cardinality()) },
            (1, _) => Propagator::Variety { x, lo: 1, hi: rng.gen_range(1..=n as u32) },
            (2, Some(z)) => Propagator::Intersection { x, y, z },
            (3, Some(z)) => Propagator::UnionPlus { x, y, z },
            (4, _) => Propagator::IntersectCardAtMost { x, y, limit: rng.gen_range(0..=2) },
            _ => Propagator::AlphaLess { x, y },
        };
        m.post(p);
    }
    m
}

/// Brute-force solutions in lexicographic order of the assignment.
fn brute_solutions(m: &Model) -> BTreeSet<Vec<Vec<u32>>> {
    let values = all_values(&m.universe);
    let mut out = BTreeSet::new();
    let mut idx = vec![0usize; m.vars.len()];
    loop {
        let vals: Vec<Multiset> = idx.iter().map(|&i| values[i].clone()).collect();
        let ok = vals.iter().zip(&m.vars).all(|(v, d)| d.initial.contains(v))
            && m.propagators.iter().all(|p| match p {
                Propagator::AlphaLess { x, y } => precedes(m.representation, &vals[*x], &vals[*y]),
                other => other.check(&vals, None),
            });
        if ok {
            out.insert(vals.iter().map(|v| v.occurrences().to_vec()).collect());
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return out;
            }
            idx[k] += 1;
            if idx[k] < values.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn search_finds_exactly_the_solutions(seed in any::<u64>()) {
        let m = random_model(seed);
        let want = brute_solutions(&m);
        let (all, stats) = solve_all(&m, Limits::default()).unwrap();
        let got: BTreeSet<Vec<Vec<u32>>> =
            all.iter().map(|s| s.iter().map(|v| v.occurrences().to_vec()).collect()).collect();
        prop_assert_eq!(got.len(), all.len(), "duplicate solutions");
        prop_assert_eq!(&got, &want);
        let expect = if want.is_empty() { Status::Unsatisfiable } else { Status::Satisfiable };
        prop_assert_eq!(stats.status, expect);
    }

    #[test]
    fn branch_and_bound_reaches_the_optimum(seed in any::<u64>()) {
        let mut m = random_model(seed);
        let vars: Vec<usize> = (0..m.vars.len()).collect();
        m.objective = Objective::MaximizeVarietySum(vars.clone());
        let best = brute_solutions(&m)
            .iter()
            .map(|s| s.iter().map(|o| o.iter().filter(|&&c| c > 0).count() as i64).sum::<i64>())
            .max();
        let (sol, stats) = solve(&m, Limits::default()).unwrap();
        match best {
            None => prop_assert_eq!(stats.status, Status::Unsatisfiable),
            Some(b) => {
                prop_assert_eq!(stats.status, Status::Optimal);
                prop_assert_eq!(stats.best_objective, Some(b));
                let sol = sol.unwrap();
                prop_assert!(m.satisfied_by(&sol));
                prop_assert_eq!(m.objective_value(&sol), Some(b));
            }
        }
    }

    #[test]
    fn fixpoint_keeps_every_solution(seed in any::<u64>()) {
        let m = random_model(seed);
        let u = &m.universe;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        // Start from random sub-intervals so propagation works on partial domains.
        let domains: Vec<Domain> = m
            .vars
            .iter()
            .map(|d| match m.representation {
                Representation::Interval(o) => {
                    let mut vals: Vec<Multiset> = all_values(u).into_iter().filter(|v| d.initial.contains(v)).collect();
                    vals.sort_by(|a, b| o.cmp(a, b));
                    let a = rng.gen_range(0..vals.len());
                    let b = rng.gen_range(a..vals.len());
                    Domain::interval(u, AlphaInterval::new(u, o, vals[a].clone(), vals[b].clone()).unwrap())
                }
                Representation::SubsetBounds => {
                    Domain::Bounds(msetlex::SubsetBoundsCV::new(u, d.initial.clone()).unwrap())
                }
            })
            .collect();
        let sols: Vec<_> = brute_solutions(&m)
            .into_iter()
            .filter(|s| s.iter().zip(&domains).all(|(o, d)| d.contains(&Multiset::from_occurrences(o.clone()))))
            .collect();
        let mut store = Store::new(u.clone(), domains);
        match fixpoint(&mut store, &m.propagators) {
            Err(_) => prop_assert!(sols.is_empty()),
            Ok(()) => {
                for s in &sols {
                    for (o, d) in s.iter().zip(&store.domains) {
                        prop_assert!(d.contains(&Multiset::from_occurrences(o.clone())));
                    }
                }
            }
        }
    }
}

#[test]
fn searches_are_deterministic() {
    for seed in 0..50 {
        let mut m = random_model(seed);
        m.objective = Objective::MaximizeVarietySum((0..m.vars.len()).collect());
        let (a, sa) = solve(&m, Limits::default()).unwrap();
        let (b, sb) = solve(&m, Limits::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!((sa.fails, sa.nodes, sa.best_objective), (sb.fails, sb.nodes, sb.best_objective));
    }
}

#[test]
fn representations_agree_on_optimum() {
    for seed in 100..160 {
        let mut base = random_model(seed);
        base.objective = Objective::MaximizeVarietySum((0..base.vars.len()).collect());
        // AlphaLess depends on the ordering, so compare only models without it.
        if base.propagators.iter().any(|p| matches!(p, Propagator::AlphaLess { .. })) {
            continue;
        }
        let optima: BTreeSet<Option<i64>> = OrderingId::ALL
            .iter()
            .map(|&o| Representation::Interval(o))
            .chain([Representation::SubsetBounds])
            .map(|r| solve(&base.clone().with_representation(r), Limits::default()).unwrap().1.best_objective)
            .collect();
        assert_eq!(optima.len(), 1, "seed {seed}: {optima:?}");
    }
}

