use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use capexp::combs::{comb_value, enumerate_combs, penalties_dominate, separate, separate_all, SEPARATION_TOL};
use capexp::cutting_plane::{solve_cpm, CpmOptions};
use capexp::flow::solve_relaxed;
use capexp::formulations::{build_agg_lin, build_bbcap_main, build_nonagg_lin, relax};
use capexp::generate::generate_random;
use capexp::heuristics::{greedy, lph};
use capexp::io::{instance_from_json, instance_to_json};
use capexp::lp::{solve_lp, solve_mip, LpStatus, MipOptions, MipStatus};
use capexp::matching::{
    blocking_pairs, da_school_optimal, da_student_optimal, da_student_optimal_traced, f_of_t,
    fractional_blocking_pairs, objective_value,
};
use capexp::oracle::{enumerate_allocations, solve_exhaustive, solve_pruned};
use capexp::{CapacityAllocation, FractionalAssignment, Instance, Matching, PenaltySpec};

fn penalty() -> impl Strategy<Value = PenaltySpec> {
    prop_oneof![
        Just(PenaltySpec::Access),
        Just(PenaltySpec::Improve),
        Just(PenaltySpec::MinCardinality),
        (-3i32..6).prop_map(|v| PenaltySpec::Constant(v as f64)),
    ]
}

fn market(max_n: usize, max_m: usize) -> impl Strategy<Value = Instance> {
    (1..=max_m, any::<u64>(), any::<bool>(), penalty()).prop_flat_map(move |(m, seed, complete, pen)| {
        (m..=max_n.max(m))
            .prop_map(move |n| generate_random(n, m, seed, complete).unwrap().with_penalties(pen.clone()).unwrap())
    })
}

fn monotone_market(max_n: usize, max_m: usize) -> impl Strategy<Value = Instance> {
    (1..=max_m, any::<u64>(), any::<bool>(), prop_oneof![Just(PenaltySpec::Access), Just(PenaltySpec::Improve)])
        .prop_flat_map(move |(m, seed, complete, pen)| {
            (m..=max_n.max(m))
                .prop_map(move |n| generate_random(n, m, seed, complete).unwrap().with_penalties(pen.clone()).unwrap())
        })
}

fn allocation(inst: &Instance, budget: usize, seed: u64) -> CapacityAllocation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = CapacityAllocation::zero(inst.n_schools());
    for _ in 0..budget {
        t = t.plus_one(rng.gen_range(0..inst.n_schools()));
    }
    t
}

/// Some feasible matching under `t`, built by random first-fit.
fn random_matching(inst: &Instance, t: &CapacityAllocation, seed: u64) -> Matching {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..inst.n_students()).collect();
    order.shuffle(&mut rng);
    let mut load = vec![0; inst.n_schools()];
    let mut assign = vec![None; inst.n_students()];
    for s in order {
        let mut opts: Vec<usize> = inst.prefs(s).iter().copied().filter(|&c| load[c] < t.capacity(inst, c)).collect();
        opts.push(usize::MAX);
        let c = *opts.choose(&mut rng).unwrap();
        if c != usize::MAX {
            load[c] += 1;
            assign[s] = Some(c);
        }
    }
    Matching::new(assign)
}

fn mix(inst: &Instance, a: &Matching, b: &Matching, lambda: f64) -> FractionalAssignment {
    let xa = FractionalAssignment::from_matching(inst, a);
    let xb = FractionalAssignment::from_matching(inst, b);
    let mut x = FractionalAssignment::zeros(inst);
    for s in 0..inst.n_students() {
        for c in inst.prefs(s).iter().map(|&c| Some(c)).chain([None]) {
            x.set(inst, s, c, lambda * xa.get(inst, s, c) + (1.0 - lambda) * xb.get(inst, s, c));
        }
    }
    x
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generator_laws(n in 1usize..40, m in 1usize..8, seed: u64, complete: bool) {
        prop_assume!(n >= m);
        let a = generate_random(n, m, seed, complete).unwrap();
        prop_assert_eq!(instance_to_json(&a), instance_to_json(&generate_random(n, m, seed, complete).unwrap()));
        prop_assert_eq!(a.capacities().iter().sum::<usize>(), n);
        prop_assert!(a.capacities().iter().all(|&q| q >= 1));
        for s in 0..n {
            if complete {
                prop_assert_eq!(a.prefs(s).len(), m);
            }
            for c in 0..m {
                prop_assert_eq!(a.prefs(s).contains(&c), a.applicants(c).contains(&s));
            }
        }
    }

    #[test]
    fn json_round_trip(inst in market(20, 5)) {
        let text = instance_to_json(&inst);
        let back = instance_from_json(&text).unwrap();
        prop_assert_eq!(instance_to_json(&back), text);
    }

    #[test]
    fn da_is_stable_optimal_and_bounded(inst in market(30, 6), b in 0usize..4, seed: u64) {
        let t = allocation(&inst, b, seed);
        let run = da_student_optimal_traced(&inst, &t);
        prop_assert!(blocking_pairs(&inst, &t, &run.matching).is_empty());
        prop_assert!(run.proposals <= inst.all_prefs().iter().map(Vec::len).sum::<usize>());
        let school = da_school_optimal(&inst, &t);
        prop_assert!(blocking_pairs(&inst, &t, &school).is_empty());
        prop_assert_eq!(run.matching.assigned_set(), school.assigned_set());
        for s in 0..inst.n_students() {
            prop_assert!(!inst.student_prefers(s, school.school_of(s), run.matching.school_of(s)));
        }
    }

    #[test]
    fn one_more_seat_helps_everybody(inst in market(30, 6), b in 0usize..4, seed: u64, c in 0usize..6) {
        let t = allocation(&inst, b, seed);
        let c = c % inst.n_schools();
        let before = da_student_optimal(&inst, &t);
        let after = da_student_optimal(&inst, &t.plus_one(c));
        for s in 0..inst.n_students() {
            prop_assert!(!inst.student_prefers(s, before.school_of(s), after.school_of(s)), "student {}", s);
        }
    }

    #[test]
    fn relaxed_flow_lies_in_the_integer_polytope(inst in market(25, 5), b in 0usize..5) {
        let r = solve_relaxed(&inst, b).unwrap();
        r.t.check(&inst, b).unwrap();
        r.assignment.check(&inst, &r.t).unwrap();
        prop_assert!((objective_value(&inst, &r.assignment) - r.objective).abs() < 1e-9);
        prop_assert!((r.x.objective(&inst) - r.objective).abs() < 1e-9);
    }

    #[test]
    fn heuristics_are_stable_and_bounded(inst in monotone_market(14, 3), b in 0usize..4) {
        let opt = solve_exhaustive(&inst, b).unwrap().objective;
        let g = greedy(&inst, b);
        let (l, lower) = lph(&inst, b).unwrap();
        for h in [&g, &l] {
            h.allocation.check(&inst, b).unwrap();
            prop_assert!(blocking_pairs(&inst, &h.allocation, &h.matching).is_empty());
            prop_assert!(objective_value(&inst, &h.matching) >= opt - 1e-9);
        }
        prop_assert!(lower <= opt + 1e-9);
        for w in g.trajectory.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn pruned_search_is_exact(inst in monotone_market(16, 4), b in 0usize..5) {
        let full = solve_exhaustive(&inst, b).unwrap();
        let (pruned, _) = solve_pruned(&inst, b).unwrap();
        prop_assert_eq!(full.objective, pruned.objective);
        prop_assert_eq!(f_of_t(&inst, &pruned.allocation), pruned.objective);
        pruned.allocation.check(&inst, b).unwrap();
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn separation_is_exact_and_sound(inst in market(9, 3), b in 0usize..3, seed: u64, lambda in 0.05f64..0.95) {
        let t = allocation(&inst, b, seed);
        let mu = da_student_optimal(&inst, &t);
        let other = random_matching(&inst, &t, seed ^ 0x5eed);
        let x = mix(&inst, &mu, &other, lambda);
        x.check(&inst, &t, 1e-9).unwrap();

        let cuts = separate(&inst, &x, &t, &mu);
        for comb in &cuts {
            comb.check(&inst).unwrap();
            prop_assert_eq!(comb.k, t.t[comb.school]);
            prop_assert!(comb_value(&inst, &x, comb) < t.capacity(&inst, comb.school) as f64 - SEPARATION_TOL);
        }
        // the scan finds the minimum over all combs of every school
        let scanned = separate_all(&inst, &x, &t);
        let mut comb_free = false;
        for c in 0..inst.n_schools() {
            let size = t.capacity(&inst, c);
            comb_free |= inst.applicants(c).len() < size;
            let Ok(all) = enumerate_combs(&inst, c, t.t[c], 20_000) else { continue };
            let best = all.iter().map(|k| comb_value(&inst, &x, k)).fold(f64::INFINITY, f64::min);
            match scanned.iter().find(|k| k.school == c) {
                Some(k) => prop_assert!((comb_value(&inst, &x, k) - best).abs() < 1e-9),
                None => prop_assert!(best >= size as f64 - SEPARATION_TOL),
            }
        }
        if !comb_free && !fractional_blocking_pairs(&inst, &t, &x).is_empty() {
            prop_assert!(!scanned.is_empty());
        }
    }

    #[test]
    fn main_program_optima_block_only_at_full_schools(inst in monotone_market(10, 3), b in 0usize..3) {
        prop_assert!(penalties_dominate(&inst));
        let (model, map) = build_bbcap_main(&inst, b, &BTreeSet::new()).unwrap();
        let sol = solve_mip(&model, &MipOptions::default()).unwrap();
        let x = map.assignment(&inst, &sol.values);
        let t = map.allocation(&sol.values);
        let fbp = fractional_blocking_pairs(&inst, &t, &x);
        for &(_, c) in &fbp {
            prop_assert!((x.column_sum(&inst, c) - t.capacity(&inst, c) as f64).abs() <= 1e-6, "school {} not full", c);
        }
        let mu = da_student_optimal(&inst, &t);
        if !fbp.is_empty() {
            prop_assert!(!separate(&inst, &x, &t, &mu).is_empty(), "blocking pairs {:?} but no cut", fbp);
        }
    }

    #[test]
    fn aggregated_relaxation_dominates(inst in market(8, 3), b in 0usize..3) {
        let (agg, _) = build_agg_lin(&inst, b);
        let (non, _) = build_nonagg_lin(&inst, b);
        let ra = solve_lp(&relax(&agg)).unwrap();
        let rn = solve_lp(&relax(&non)).unwrap();
        prop_assert_eq!(ra.status, LpStatus::Optimal);
        prop_assert_eq!(rn.status, LpStatus::Optimal);
        prop_assert!(ra.objective >= rn.objective - 1e-6);
        prop_assert!((ra.objective - ra.dual_bound).abs() < 1e-6);
        let mip = solve_mip(&agg, &MipOptions::default()).unwrap();
        prop_assert!(mip.objective >= ra.objective - 1e-6);
        let again = solve_mip(&agg, &MipOptions::default()).unwrap();
        prop_assert_eq!(mip.nodes, again.nodes);
        prop_assert_eq!(mip.values, again.values);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn exact_methods_agree(inst in market(9, 3), b in 0usize..3) {
        let opt = solve_exhaustive(&inst, b).unwrap().objective;
        for model in [build_agg_lin(&inst, b), build_nonagg_lin(&inst, b)] {
            let sol = solve_mip(&model.0, &MipOptions::default()).unwrap();
            prop_assert_eq!(sol.status, MipStatus::Optimal);
            let t = model.1.allocation(&sol.values);
            prop_assert_eq!(f_of_t(&inst, &t), opt);
            prop_assert!((sol.objective - opt).abs() < 1e-6);
        }
        for opts in [CpmOptions::default(), CpmOptions::plain()] {
            let r = solve_cpm(&inst, b, &opts).unwrap();
            prop_assert!(r.stats.optimal);
            prop_assert_eq!(r.stats.final_objective, opt);
            prop_assert!(blocking_pairs(&inst, &r.allocation, &r.matching).is_empty());
            for w in r.stats.mp_bounds.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-6);
            }
            prop_assert!(r.stats.mp_bounds.iter().all(|&v| v <= opt + 1e-6));
        }
    }

    #[test]
    fn main_program_unary_expansion(inst in market(8, 3), b in 0usize..3) {
        let (model, map) = build_bbcap_main(&inst, b, &BTreeSet::new()).unwrap();
        let sol = solve_mip(&model, &MipOptions::default()).unwrap();
        for c in 0..inst.n_schools() {
            let ones = map.y[c].iter().filter(|&&v| sol.values[v] > 0.5).count();
            prop_assert_eq!(ones, 1);
        }
        map.allocation(&sol.values).check(&inst, b).unwrap();
    }

    #[test]
    fn increments_never_hurt_under_improve(seed: u64, n in 4usize..14, m in 1usize..4) {
        prop_assume!(n >= m);
        let inst = generate_random(n, m, seed, false).unwrap().with_penalties(PenaltySpec::Improve).unwrap();
        for t in enumerate_allocations(&inst, 2) {
            let f = f_of_t(&inst, &t);
            for c in 0..m {
                prop_assert!(f_of_t(&inst, &t.plus_one(c)) <= f);
            }
        }
    }
}
