//! Generated instances, big-M bounds and the look-ahead models.

use lotsizing::instance::{generate, GeneratorConfig, Substitution};
use lotsizing::lp::LpModel;
use lotsizing::milp::{solve_milp, MilpModel, MilpOptions, MilpStatus};
use lotsizing::models::{build_cc_extensive, build_deterministic, BuiltModel, RowKind};
use lotsizing::policy::{cc_tail, deterministic_estimates, make_scenarios, stockout_step, PolicyRule};
use lotsizing::{backlog_cost, big_m_cc, big_m_deterministic, validate_instance, Instance, SystemState};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::oracles::enumerate_binaries;
use super::{check, close, instance, random_state, substitution};

fn config_strategy() -> impl Strategy<Value = GeneratorConfig> {
    (1usize..=8, 0.05..0.5f64, 1.0..3.0f64, 0.01..0.2f64, 0.5..3.0f64, 0u8..3, 2usize..=6, any::<u64>()).prop_map(
        |(products, eta, tau, rho, tbo, sub, horizon, seed)| GeneratorConfig {
            products,
            eta,
            tau,
            rho,
            tbo,
            substitution: substitution(sub),
            horizon,
            seed,
            pool_size: 50,
            ..GeneratorConfig::default()
        },
    )
}

pub fn generated_instances_are_consistent() {
    check("generated instances", 200, config_strategy(), |cfg| {
        let inst = generate(&cfg).unwrap();
        prop_assert!(validate_instance(&inst).is_empty());
        prop_assert_eq!(&inst, &generate(&cfg).unwrap());
        let json = serde_json::to_string(&inst).unwrap();
        prop_assert_eq!(&serde_json::from_str::<Instance>(&json).unwrap(), &inst);
        let mean = inst.demand.stationary_mean();
        for t in 0..cfg.horizon {
            for (a, &(from, to)) in inst.graph.arcs().iter().enumerate() {
                let c = inst.c_sub[t][a];
                if from == to {
                    prop_assert_eq!(c, 0.0);
                } else {
                    prop_assert!(c > 0.0, "arc {from}->{to} costs {c}");
                }
            }
            for k in 0..cfg.products {
                // Economic order interval sqrt(2 A / (h D)).
                let eoi = (2.0 * inst.c_setup[t][k] / (inst.c_hold[t][k] * mean)).sqrt();
                prop_assert!(close(eoi, cfg.tbo, 1e-12));
                prop_assert_eq!(inst.c_prod[t][k], 0.0);
            }
        }
        // Higher quality is worth more to hold.
        for pair in inst.c_hold[0].windows(2) {
            prop_assert!(pair[0] > pair[1]);
        }
        Ok(())
    });
}

pub fn seed_only_changes_the_noise_pool() {
    check("seed changes only the pool", 100, (config_strategy(), any::<u64>()), |(cfg, other)| {
        prop_assume!(other != cfg.seed);
        let a = generate(&cfg).unwrap();
        let b = generate(&GeneratorConfig { seed: other, ..cfg.clone() }).unwrap();
        prop_assert_ne!(&a.demand.noise_pool, &b.demand.noise_pool);
        let mut b = b;
        b.demand.noise_pool = a.demand.noise_pool.clone();
        b.demand.seed = a.demand.seed;
        prop_assert_eq!(a, b);
        Ok(())
    });
}

pub fn substitution_levels_are_nested() {
    check("nested graphs", 50, 1usize..=12, |products| {
        let none = Substitution::None.graph(products);
        let partial = Substitution::PARTIAL.graph(products);
        let full = Substitution::Full.graph(products);
        prop_assert!(none.is_identity());
        prop_assert!(none.is_subgraph_of(&partial) && partial.is_subgraph_of(&full));
        prop_assert_eq!(full.num_arcs(), products * (products + 1) / 2);
        for &(from, to) in full.arcs() {
            prop_assert!(from <= to, "substitution only flows downward");
        }
        Ok(())
    });
}

/// Under full substitution the top product serves every class, so every
/// class gets the same period-2 backlog penalty, the largest arc cost.
pub fn full_substitution_has_uniform_backlog_cost() {
    check("uniform backlog cost", 100, config_strategy(), |cfg| {
        let inst = generate(&GeneratorConfig {
            substitution: Substitution::Full,
            ..cfg
        })
        .unwrap();
        let top = inst.c_sub[1].iter().copied().fold(0.0, f64::max);
        prop_assert!(backlog_cost(&inst).iter().all(|&c| c == top));
        prop_assert_eq!(&inst.c_back2, &backlog_cost(&inst));
        Ok(())
    });
}

fn grow(x: &[f64], by: &[f64]) -> Vec<f64> {
    x.iter().zip(by).map(|(a, b)| a + b).collect()
}

pub fn big_m_bounds_are_monotone() {
    let strategy = (1usize..=5, 2usize..=5, 0u8..3, any::<u64>(), prop::collection::vec(0.0..30.0f64, 5));
    check("big-M monotonicity", 150, strategy, |(kk, horizon, sub, seed, extra)| {
        let inst = instance(kk, horizon, 0.95, substitution(sub), 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (state, d_hat1) = random_state(&mut rng, kk);
        let d_bar = deterministic_estimates(&inst, &state, PolicyRule::Average);
        let base = big_m_deterministic(&inst, &state, &d_hat1, &d_bar);
        let extra = &extra[..kk];
        let more_backlog = SystemState {
            b: grow(&state.b, extra),
            ..state.clone()
        };
        let bigger = [
            big_m_deterministic(&inst, &more_backlog, &d_hat1, &d_bar),
            big_m_deterministic(&inst, &state, &grow(&d_hat1, extra), &d_bar),
        ];
        for m in &bigger {
            for t in 0..horizon {
                for k in 0..kk {
                    prop_assert!(m[t][k] >= base[t][k] - 1e-12);
                }
            }
        }
        // The scenario maximum dominates the scenario mean used as the
        // deterministic estimate of the next period.
        let scen = make_scenarios(&inst.demand, &state.d_last, 20, &mut rng);
        let tail = cc_tail(&inst, &state);
        let mut mean_path = vec![(0..kk)
            .map(|k| scen.demands.iter().map(|d| d[k]).sum::<f64>() / scen.len() as f64)
            .collect::<Vec<f64>>()];
        mean_path.extend(tail.iter().cloned());
        let det = big_m_deterministic(&inst, &state, &d_hat1, &mean_path);
        let cc = big_m_cc(&inst, &state, &d_hat1, &scen, &tail);
        for t in 0..horizon {
            for k in 0..kk {
                prop_assert!(cc[t][k] >= det[t][k] - 1e-9);
            }
        }
        Ok(())
    });
}

fn value(x: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&j| x[j]).collect()
}

/// Stock and flow identities of a solved look-ahead plan, recomputed from
/// the variable map.
fn assert_flows(inst: &Instance, state: &SystemState, built: &BuiltModel, x: &[f64]) -> Result<(), TestCaseError> {
    let g = &inst.graph;
    let vars = &built.vars;
    let tol = 1e-6;
    prop_assert!(built.lp().max_violation(x) <= tol);
    for t in 0..inst.horizon {
        for k in 0..inst.products {
            let (v, i, p) = (x[vars.v[t][k]], x[vars.i[t][k]], x[vars.x[t][k]]);
            prop_assert!((v - i - p).abs() <= tol, "v = i + x fails at t={t}, k={k}");
            if p > tol {
                prop_assert!(x[vars.y[t][k]] > 0.5, "production without setup");
            }
            let start = if t == 0 { state.v[k] } else { x[vars.v[t - 1][k]] };
            if !vars.s[t].is_empty() {
                let used: f64 = g.out_arcs(k).iter().map(|&a| x[vars.s[t][a]]).sum();
                prop_assert!((used + i - start).abs() <= tol, "inventory use fails at t={t}, k={k}");
            }
        }
    }
    for (w, s) in vars.s_scen.iter().enumerate() {
        for k in 0..inst.products {
            let used: f64 = g.out_arcs(k).iter().map(|&a| x[s[a]]).sum();
            let start = x[vars.v[0][k]];
            prop_assert!((used + x[vars.i_scen[w][k]] - start).abs() <= tol, "scenario {w} inventory");
        }
    }
    if !vars.s_scen.is_empty() {
        let n = vars.s_scen.len() as f64;
        for k in 0..inst.products {
            let i_mean = vars.i_scen.iter().map(|row| x[row[k]]).sum::<f64>() / n;
            let b_mean = vars.b_scen.iter().map(|row| x[row[k]]).sum::<f64>() / n;
            prop_assert!((x[vars.i[1][k]] - i_mean).abs() <= tol, "averaged inventory");
            prop_assert!((x[vars.b[1][k]] - b_mean).abs() <= tol, "averaged backlog");
        }
    }
    Ok(())
}

fn without_cover_rows(built: &BuiltModel) -> MilpModel {
    let mut milp = built.milp.clone();
    let lp: &mut LpModel = &mut milp.lp;
    lp.rows = lp
        .rows
        .drain(..)
        .zip(&built.rows)
        .filter(|(_, kind)| !matches!(kind, RowKind::LeadCover { .. }))
        .map(|(row, _)| row)
        .collect();
    milp
}

fn small_case() -> impl Strategy<Value = (usize, usize, u8, bool, u64)> {
    (1usize..=3, 2usize..=4, 0u8..3, any::<bool>(), any::<u64>())
}

/// Deterministic plans conserve stock, and the cover rows cut off no
/// integer solution: the optimum with and without them matches
/// enumeration of the setups.
pub fn deterministic_model_is_sound() {
    check("deterministic model", 60, small_case(), |(kk, horizon, sub, quantile, seed)| {
        prop_assume!(kk * horizon <= 9);
        let inst = instance(kk, horizon, 0.95, substitution(sub), 1.5);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (state, d_hat1) = random_state(&mut rng, kk);
        let rule = if quantile { PolicyRule::Quantile } else { PolicyRule::Average };
        let k_hat = stockout_step(&inst, &state, &d_hat1).unwrap().k_hat;
        let d_bar = deterministic_estimates(&inst, &state, rule);
        let built = build_deterministic(&inst, &state, &d_hat1, &d_bar, &k_hat);
        prop_assert!(built.vars.is_bijection());
        let res = solve_milp(&built.milp, None, &MilpOptions::default()).unwrap();
        prop_assert_eq!(res.status, MilpStatus::Optimal);
        assert_flows(&inst, &state, &built, res.x.as_ref().unwrap())?;
        let stripped = solve_milp(&without_cover_rows(&built), None, &MilpOptions::default()).unwrap();
        let best = enumerate_binaries(&built.milp).unwrap();
        prop_assert!(close(res.objective, best, 1e-7), "{} vs enumeration {best}", res.objective);
        prop_assert!(close(stripped.objective, best, 1e-7), "{} vs enumeration {best}", stripped.objective);
        Ok(())
    });
}

/// Extensive-form plans conserve stock per scenario and average the
/// scenario copies into the period-1 inventory and backlog; cover rows do
/// not change the optimum.
pub fn chance_model_is_sound() {
    check("chance-constrained model", 25, (small_case(), 4usize..=15), |((kk, horizon, sub, _, seed), n)| {
        let inst = instance(kk, horizon, 0.9, substitution(sub), 1.5);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (state, d_hat1) = random_state(&mut rng, kk);
        let scen = make_scenarios(&inst.demand, &state.d_last, n, &mut rng);
        let k_hat = stockout_step(&inst, &state, &d_hat1).unwrap().k_hat;
        let built = build_cc_extensive(&inst, &state, &d_hat1, &scen, &cc_tail(&inst, &state), &k_hat);
        prop_assert!(built.vars.is_bijection());
        let opts = MilpOptions {
            rel_gap: 1e-9,
            ..MilpOptions::default()
        };
        let res = solve_milp(&built.milp, None, &opts).unwrap();
        prop_assert_eq!(res.status, MilpStatus::Optimal);
        let x = res.x.as_ref().unwrap();
        assert_flows(&inst, &state, &built, x)?;
        let z = value(x, &built.vars.z);
        prop_assert!(z.iter().sum::<f64>() <= lotsizing::models::cardinality_rhs(inst.alpha, n) as f64 + 1e-6);
        let stripped = solve_milp(&without_cover_rows(&built), None, &opts).unwrap();
        prop_assert!(close(stripped.objective, res.objective, 1e-6), "{} vs {}", stripped.objective, res.objective);
        Ok(())
    });
}
