//! Simulated trajectories and the batch-means estimator.

use lotsizing::instance::Substitution;
use lotsizing::policy::{stockout_step, PolicyKind, PolicyRule, BACKLOG_TOL};
use lotsizing::sim::{batch_ci, roll, SimConfig, SimulationReport};
use lotsizing::{Instance, SystemState};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use super::{check, instance};

const PERIODS: usize = 4000;

fn trajectory(rule: PolicyRule) -> (Instance, SimulationReport) {
    let inst = instance(3, 4, 0.95, Substitution::PARTIAL, 1.0);
    let cfg = SimConfig::new(PolicyKind::new(rule), 7).with_batches(0, 160, PERIODS / 160);
    let report = roll(&inst, &cfg).unwrap();
    (inst, report)
}

/// Nonnegative state, per-period and cumulative mass balance, and stock-outs
/// only where the stock-out LP says they cannot be avoided, over 4000
/// periods of each deterministic rule.
pub fn trajectories_conserve_mass() {
    for rule in [PolicyRule::Quantile, PolicyRule::Average] {
        let (inst, report) = trajectory(rule);
        let kk = inst.products;
        assert_eq!(report.records.len(), PERIODS);
        let mut v_prev = vec![0.0; kk];
        let mut b_prev = vec![0.0; kk];
        let mut produced = vec![0.0; kk];
        let mut used = vec![0.0; kk];
        for r in &report.records {
            let t = r.period;
            for k in 0..kk {
                for q in [r.v[k], r.b[k], r.produced[k], r.used[k], r.demand[k]] {
                    assert!(q >= -1e-9, "{rule:?} period {t}: negative quantity {q}");
                }
                let expect = v_prev[k] - r.used[k] + r.produced[k];
                assert!((r.v[k] - expect).abs() <= 1e-5, "{rule:?} period {t}: stock balance of {k}");
                produced[k] += r.produced[k];
                used[k] += r.used[k];
                assert!((r.v[k] - (produced[k] - used[k])).abs() <= 1e-5, "{rule:?} period {t}: cumulative balance of {k}");
            }
            // Stock used this period serves this period's demand and old
            // backlog, minus what is backlogged again.
            let served: f64 = (0..kk).map(|k| r.demand[k] + b_prev[k] - r.b[k]).sum();
            assert!((served - r.used.iter().sum::<f64>()).abs() <= 1e-5, "{rule:?} period {t}: service balance");
            let cost = r.cost;
            assert!(cost.setup >= 0.0 && cost.holding >= 0.0 && cost.substitution >= -1e-9);
            let state = SystemState {
                v: v_prev.clone(),
                b: b_prev.clone(),
                d_last: r.demand.clone(),
            };
            let min_backlog = stockout_step(&inst, &state, &r.demand).unwrap().total;
            if r.stockout {
                assert!(min_backlog > BACKLOG_TOL, "{rule:?} period {t}: avoidable stock-out");
            }
            if min_backlog > kk as f64 * BACKLOG_TOL {
                assert!(r.stockout, "{rule:?} period {t}: unavoidable stock-out not recorded");
            }
            v_prev.clone_from(&r.v);
            b_prev.clone_from(&r.b);
        }
        let stockouts = report.records.iter().filter(|r| r.stockout).count();
        assert!(stockouts > 0 && stockouts < PERIODS, "{rule:?}: {stockouts} stock-outs");
    }
}

/// Demand seen by the simulation has the long-run mean of the AR process,
/// `(C + ar2 · mean(pool)) / (1 − ar1)`. The sample mean of each product's
/// series has a standard deviation near 0.8 % of the mean over 4000 periods,
/// hence the 3 % bound per product and 1 % for the product average.
pub fn demand_has_the_stationary_mean() {
    let (inst, report) = trajectory(PolicyRule::Quantile);
    let dm = &inst.demand;
    let target = (dm.intercept + dm.ar2 * dm.pool_mean()) / (1.0 - dm.ar1);
    let kk = inst.products;
    // Period 0 observes no demand.
    let observed = &report.records[1..];
    let n = observed.len() as f64;
    let means: Vec<f64> = (0..kk).map(|k| observed.iter().map(|r| r.demand[k]).sum::<f64>() / n).collect();
    for (k, m) in means.iter().enumerate() {
        assert!((m / target - 1.0).abs() <= 0.03, "product {k}: mean {m} vs {target}");
    }
    let overall = means.iter().sum::<f64>() / kk as f64;
    assert!((overall / target - 1.0).abs() <= 0.01, "overall mean {overall} vs {target}");
    assert!(observed.iter().all(|r| r.demand.iter().all(|&d| d >= 0.0)));
}

/// Batch means on i.i.d. uniform series: the estimate is within 0.03 of 0.5
/// for every seed and the 95 % interval covers 0.5 at close to its nominal
/// rate.
pub fn batch_intervals_are_calibrated() {
    let seeds = 400;
    let mut close_enough = 0;
    let mut covered = 0;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let values: Vec<f64> = (0..160 * 25).map(|_| rng.random::<f64>()).collect();
        let ci = batch_ci(&values, 160, 25).unwrap();
        close_enough += usize::from((ci.mean - 0.5).abs() <= 0.03);
        covered += usize::from((ci.mean - 0.5).abs() <= ci.half_width);
    }
    assert!(close_enough as f64 >= 0.95 * seeds as f64, "{close_enough} of {seeds} means within 0.03");
    // Binomial(400, 0.95) has standard deviation 4.4; allow four of them.
    let rate = covered as f64 / seeds as f64;
    assert!((rate - 0.95).abs() <= 4.0 * (0.95f64 * 0.05 / seeds as f64).sqrt(), "coverage {rate}");
}

/// The half-width matches the Student-t formula on arbitrary series and
/// vanishes when every batch has the same mean.
pub fn batch_intervals_match_their_formula() {
    let strategy = (2usize..40, 1usize..10, any::<u64>());
    check("batch interval formula", 200, strategy, |(count, len, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..count * len).map(|_| rng.random_range(-5.0..5.0)).collect();
        let ci = batch_ci(&values, count, len).unwrap();
        let means: Vec<f64> = values.chunks(len).map(|c| c.iter().sum::<f64>() / len as f64).collect();
        let mean = means.iter().sum::<f64>() / count as f64;
        prop_assert!((ci.mean - mean).abs() <= 1e-12);
        let sd = (means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt();
        let half = ci.half_width / (sd / (count as f64).sqrt());
        // The t quantile lies above the normal one and approaches it.
        let z = Normal::new(0.0, 1.0).unwrap().inverse_cdf(0.975);
        prop_assert!(half >= z - 1e-9 && half <= 12.71 + 1e-6, "t quantile {half}");
        let flat: Vec<f64> = values.chunks(len).flat_map(|_| std::iter::repeat_n(3.0, len)).collect();
        prop_assert_eq!(batch_ci(&flat, count, len).unwrap().half_width, 0.0);
        Ok(())
    });
}
