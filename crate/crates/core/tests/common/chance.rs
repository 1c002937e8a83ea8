//! Coverage LP, mixing separation and the two chance-constrained solvers.

use lotsizing::cuts::{q_membership, separate_mixing, ChanceCutSeparator, DualRay, MixingFamily, VIOLATION_TOL};
use lotsizing::milp::{solve_milp, MilpOptions, MilpStatus};
use lotsizing::models::{build_cc_extensive, build_cc_master, cardinality_rhs};
use lotsizing::policy::{cc_tail, decide, make_scenarios, stockout_step, DecideOptions, PolicyKind, PolicyRule};
use lotsizing::{Instance, ScenarioSet, SubstitutionGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::oracles::{brute_force_mixing, coverage_shortfall};
use super::{close, instance, random_state, substitution};

/// Random graph where every product serves itself and each other class
/// with probability one half.
fn random_graph<R: Rng>(rng: &mut R, products: usize) -> SubstitutionGraph {
    let k_plus = (0..products)
        .map(|k| {
            let mut served = vec![k];
            served.extend((0..products).filter(|&j| j != k && rng.random_bool(0.5)));
            served
        })
        .collect();
    SubstitutionGraph::new(k_plus).unwrap()
}

fn with_graph(graph: SubstitutionGraph) -> Instance {
    let mut inst = instance(graph.products(), 2, 0.9, lotsizing::instance::Substitution::None, 1.0);
    inst.c_sub = vec![vec![0.0; graph.num_arcs()]; inst.horizon];
    inst.graph = graph;
    inst
}

fn amounts<R: Rng>(rng: &mut R, n: usize, hi: i32) -> Vec<f64> {
    (0..n)
        .map(|_| if rng.random_bool(0.2) { 0.0 } else { f64::from(rng.random_range(0..=hi)) / 2.0 })
        .collect()
}

/// Coverage LP against max flow on 500 random triples with up to three
/// products, with a dual certificate for every answer.
pub fn membership_matches_max_flow() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut members = 0;
    for case in 0..500 {
        let kk = rng.random_range(1..=3);
        let inst = with_graph(random_graph(&mut rng, kk));
        let v = amounts(&mut rng, kk, 40);
        let b = amounts(&mut rng, kk, 10);
        let d = amounts(&mut rng, kk, 30);
        let mem = q_membership(&inst, &v, &b, &d);
        let shortfall = coverage_shortfall(&inst.graph, &v, &b, &d);
        assert!(close(mem.value, shortfall, 1e-9), "case {case}: LP {} vs flow {shortfall}", mem.value);
        assert_eq!(mem.is_member, shortfall <= 1e-6, "case {case}");
        assert!(mem.duals.is_dual_feasible(&inst.graph, 1e-9), "case {case}: {:?}", mem.duals);
        assert!(close(mem.duals.value(&v, &b, &d), mem.value, 1e-9), "case {case}: duality gap");
        members += usize::from(mem.is_member);
    }
    assert!((50..450).contains(&members), "unbalanced sample: {members} members");
}

fn random_family<R: Rng>(rng: &mut R) -> (MixingFamily, DualRay, Vec<f64>, Vec<f64>, Vec<f64>) {
    let p = rng.random_range(0..=12);
    let n = p + rng.random_range(1..=10);
    // Coarse values produce ties in h and in z.
    let coarse = rng.random_bool(0.3);
    let h: Vec<f64> = (0..n)
        .map(|_| if coarse { f64::from(rng.random_range(-3..=3)) } else { rng.random_range(-50.0..50.0) })
        .collect();
    let z: Vec<f64> = (0..n)
        .map(|_| match rng.random_range(0..4) {
            0 => 0.0,
            1 => 1.0,
            2 if coarse => 0.5,
            _ => rng.random_range(0.0..1.0),
        })
        .collect();
    let kk = rng.random_range(1..=4);
    let duals = DualRay {
        pi: (0..kk).map(|_| rng.random_range(-1.0..1.0)).collect(),
        beta: (0..kk).map(|_| -rng.random_range(0.0..1.0)).collect(),
    };
    let v = (0..kk).map(|_| rng.random_range(0.0..40.0)).collect();
    let b = (0..kk).map(|_| rng.random_range(0.0..10.0)).collect();
    (MixingFamily::new(h, p), duals, z, v, b)
}

/// The linear-time separation finds the maximum violation over all subsets
/// of the `p` largest scenarios, on 1000 random families.
pub fn separation_matches_subset_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut found = 0;
    for case in 0..1000 {
        let (fam, duals, z, v, b) = random_family(&mut rng);
        let best = brute_force_mixing(&fam.h, fam.p, &duals, &z, &v, &b);
        match separate_mixing(&fam, &duals, &z, &v, &b) {
            Some(cut) => {
                found += 1;
                assert!((cut.violation - best).abs() <= 1e-9, "case {case}: {} vs {best}", cut.violation);
                assert!((cut.evaluate(&duals, &v, &b, &z) - cut.violation).abs() <= 1e-12);
                for pair in cut.t.windows(2) {
                    assert!(fam.h[pair[0]] >= fam.h[pair[1]], "case {case}: t out of order");
                }
                assert!(cut.z_coeffs.iter().all(|&(_, c)| c >= 0.0), "case {case}: negative coefficient");
                assert!(cut.t.iter().all(|w| fam.sigma[..fam.p].contains(w)), "case {case}");
            }
            None => assert!(best <= VIOLATION_TOL + 1e-9, "case {case}: missed violation {best}"),
        }
    }
    assert!((100..900).contains(&found), "unbalanced sample: {found} cuts");
}

/// Mixing cuts hold at every point of the chance-constrained set: stock
/// and backlog that leave at most `p` scenarios uncovered, with `z`
/// switched on for each uncovered one.
pub fn mixing_cuts_are_valid() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let mut checked = 0;
    for case in 0..600 {
        let kk = rng.random_range(1..=3);
        let inst = with_graph(random_graph(&mut rng, kk));
        let n = rng.random_range(2..=20);
        let scen = ScenarioSet::new((0..n).map(|_| amounts(&mut rng, kk, 40)).collect());
        let p = rng.random_range(0..n.min(8));
        // Dual vectors from arbitrary points generate the families.
        let probe_v = amounts(&mut rng, kk, 40);
        let probe_b = amounts(&mut rng, kk, 10);
        let duals = q_membership(&inst, &probe_v, &probe_b, &scen.demands[rng.random_range(0..n)]).duals;
        let h = lotsizing::cuts::compute_h(&duals, &scen);
        let v = amounts(&mut rng, kk, 80);
        let b = amounts(&mut rng, kk, 10);
        let mut z: Vec<f64> = scen
            .demands
            .iter()
            .map(|d| f64::from(!q_membership(&inst, &v, &b, d).is_member))
            .collect();
        let open: usize = z.iter().map(|&x| x as usize).sum();
        if open > p {
            continue;
        }
        for w in 0..n {
            if z[w] == 0.0 && z.iter().sum::<f64>() < p as f64 && rng.random_bool(0.3) {
                z[w] = 1.0;
            }
        }
        checked += 1;
        let worst = brute_force_mixing(&h, p, &duals, &z, &v, &b);
        assert!(worst <= 1e-7, "case {case}: valid point violates a mixing cut by {worst}");
    }
    assert!(checked >= 100, "only {checked} feasible points sampled");
}

/// A scenario left uncovered with its indicator at zero always yields a
/// cut violated by at least the coverage gap.
pub fn uncovered_scenarios_are_cut_off() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut seen = 0;
    for case in 0..300 {
        let kk = rng.random_range(1..=3);
        let inst = with_graph(random_graph(&mut rng, kk));
        let n = rng.random_range(2..=20);
        let scen = ScenarioSet::new((0..n).map(|_| amounts(&mut rng, kk, 40)).collect());
        let p = rng.random_range(0..n);
        let v = amounts(&mut rng, kk, 40);
        let b = amounts(&mut rng, kk, 10);
        let z: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.5) { 0.0 } else { rng.random_range(0.0..1.0) }).collect();
        for w in (0..n).filter(|&w| z[w] == 0.0) {
            let mem = q_membership(&inst, &v, &b, &scen.demands[w]);
            if mem.is_member {
                continue;
            }
            seen += 1;
            let fam = MixingFamily::new(lotsizing::cuts::compute_h(&mem.duals, &scen), p);
            let cut = separate_mixing(&fam, &mem.duals, &z, &v, &b)
                .unwrap_or_else(|| panic!("case {case}: scenario {w} uncovered but not separated"));
            assert!(cut.violation >= mem.value - 1e-7, "case {case}: {} < {}", cut.violation, mem.value);
        }
    }
    assert!(seen >= 100, "only {seen} uncovered scenarios sampled");
}

fn cc_case(rng: &mut ChaCha8Rng) -> (Instance, lotsizing::SystemState, Vec<f64>, ScenarioSet) {
    let kk = rng.random_range(1..=4);
    let horizon = rng.random_range(2..=4);
    let alpha = [0.8, 0.9, 0.95][rng.random_range(0..3)];
    let tbo = [1.0, 1.5, 2.0][rng.random_range(0..3)];
    let inst = instance(kk, horizon, alpha, substitution(rng.random_range(0..3)), tbo);
    let (state, d_hat1) = random_state(rng, kk);
    let n = rng.random_range(5..=30);
    let scen = make_scenarios(&inst.demand, &state.d_last, n, rng);
    (inst, state, d_hat1, scen)
}

/// Branch-and-cut on the master problem and the extensive form agree on 25
/// random instances with up to four products, four periods and thirty
/// scenarios.
pub fn branch_and_cut_matches_extensive_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    let opts = MilpOptions {
        rel_gap: 1e-9,
        ..MilpOptions::default()
    };
    for case in 0..25 {
        let (inst, state, d_hat1, scen) = cc_case(&mut rng);
        let k_hat = stockout_step(&inst, &state, &d_hat1).unwrap().k_hat;
        let tail = cc_tail(&inst, &state);
        let ext = build_cc_extensive(&inst, &state, &d_hat1, &scen, &tail, &k_hat);
        let ext_res = solve_milp(&ext.milp, None, &opts).unwrap();
        let master = build_cc_master(&inst, &state, &d_hat1, &scen, &tail, &k_hat);
        let mut sep = ChanceCutSeparator::new(&inst, &scen, &master.vars);
        let bc_res = solve_milp(&master.milp, Some(&mut sep), &opts).unwrap();
        assert_eq!(ext_res.status, MilpStatus::Optimal, "case {case}: extensive form");
        assert_eq!(bc_res.status, MilpStatus::Optimal, "case {case}: branch-and-cut");
        assert!(
            close(bc_res.objective, ext_res.objective, 1e-6),
            "case {case}: branch-and-cut {} vs extensive {}",
            bc_res.objective,
            ext_res.objective
        );
        let x = bc_res.x.unwrap();
        let v: Vec<f64> = master.vars.v[0].iter().map(|&j| x[j]).collect();
        let b: Vec<f64> = master.vars.b[0].iter().map(|&j| x[j].max(0.0)).collect();
        let uncovered = scen
            .demands
            .iter()
            .filter(|d| coverage_shortfall(&inst.graph, &v, &b, d) > 1e-5)
            .count();
        assert!(uncovered <= cardinality_rhs(inst.alpha, scen.len()), "case {case}: {uncovered} uncovered");
    }
}

/// The chance-constrained rule leaves at most `p` of its own scenarios
/// uncovered; the scenarios are regenerated from a copy of its generator.
pub fn cc_decisions_respect_the_cardinality() {
    let mut rng = ChaCha8Rng::seed_from_u64(46);
    for case in 0..30 {
        let kk = rng.random_range(1..=3);
        let horizon = rng.random_range(2..=4);
        let inst = instance(kk, horizon, 0.9, substitution(rng.random_range(0..3)), 1.5);
        let (state, d_hat1) = random_state(&mut rng, kk);
        let count = rng.random_range(10..=30);
        let kind = PolicyKind::new(PolicyRule::ChanceConstrained { scenario_count: count });
        let mut scen_rng = ChaCha8Rng::seed_from_u64(rng.random());
        let mut replay = scen_rng.clone();
        let dec = decide(&inst, &state, &d_hat1, kind, &mut scen_rng, &DecideOptions::default()).unwrap();
        assert!(!dec.stats.fell_back, "case {case}");
        assert!(dec.residual(&inst, &state, &d_hat1) <= 1e-6, "case {case}");
        let scen = make_scenarios(&inst.demand, &state.d_last, count, &mut replay);
        let uncovered = scen
            .demands
            .iter()
            .filter(|d| coverage_shortfall(&inst.graph, &dec.v, &dec.b, d) > 1e-5)
            .count();
        assert!(uncovered <= cardinality_rhs(inst.alpha, count), "case {case}: {uncovered} uncovered");
    }
}
