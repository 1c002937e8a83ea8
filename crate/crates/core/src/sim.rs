//! Rolling-horizon simulation with batch-means confidence intervals.

use rand::Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::domain::{DemandModel, Instance, SystemState};
use crate::milp::MilpStatus;
use crate::policy::{decide, CostBreakdown, DecideOptions, PolicyError, PolicyKind, SolveStats};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub t_sim: usize,
    pub t_warm: usize,
    pub batch_count: usize,
    pub batch_len: usize,
    pub seed: u64,
    pub policy: PolicyKind,
    pub budget: DecideOptions,
}

impl SimConfig {
    pub fn new(policy: PolicyKind, seed: u64) -> Self {
        Self {
            t_sim: 4010,
            t_warm: 10,
            batch_count: 160,
            batch_len: 25,
            seed,
            policy,
            budget: DecideOptions::default(),
        }
    }

    /// `batch_count` batches of `batch_len` periods after `t_warm`.
    pub fn with_batches(mut self, t_warm: usize, batch_count: usize, batch_len: usize) -> Self {
        self.t_warm = t_warm;
        self.batch_count = batch_count;
        self.batch_len = batch_len;
        self.t_sim = t_warm + batch_count * batch_len;
        self
    }

    pub fn check(&self) -> Result<(), SimError> {
        if self.t_sim < self.t_warm || self.t_sim - self.t_warm != self.batch_count * self.batch_len {
            return Err(SimError::Config(format!(
                "t_sim - t_warm = {} - {} must equal batch_count * batch_len = {} * {}",
                self.t_sim, self.t_warm, self.batch_count, self.batch_len
            )));
        }
        if self.batch_count == 0 || self.batch_len == 0 {
            return Err(SimError::Config("batches must be nonempty".into()));
        }
        if !self.policy.is_valid() {
            return Err(SimError::Config("scenario_count must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("series of length {len} does not split into {batch_count} batches of {batch_len}")]
    BatchShape {
        len: usize,
        batch_count: usize,
        batch_len: usize,
    },
    #[error("cost of the quantile policy must be positive, got {0}")]
    NonPositiveCost(f64),
    #[error("period {period}: {source}")]
    Policy {
        period: usize,
        #[source]
        source: PolicyError,
    },
}

/// One simulated period.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodRecord {
    pub period: usize,
    /// Demand observed and served (or backlogged) this period.
    pub demand: Vec<f64>,
    pub stockout: bool,
    pub cost: CostBreakdown,
    pub k_hat_size: usize,
    pub n_setups: usize,
    pub produced: Vec<f64>,
    /// Stock of each product used to serve any class this period.
    pub used: Vec<f64>,
    /// State handed to the next period.
    pub v: Vec<f64>,
    pub b: Vec<f64>,
    pub stats: SolveStats,
}

impl PeriodRecord {
    /// Period objective: setup, holding and substitution cost.
    pub fn objective(&self) -> f64 {
        self.cost.setup + self.cost.holding + self.cost.substitution
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchCi {
    pub mean: f64,
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub config: SimConfig,
    pub records: Vec<PeriodRecord>,
    pub mean_cost: f64,
    pub cost_ci: f64,
    pub service_pct: f64,
    pub sl_ci: f64,
    pub fallbacks: usize,
    /// Periods whose plan came from a solve stopped by a budget.
    pub budget_stops: usize,
}

/// One AR step per product, clamped at zero.
pub fn ar_next<R: Rng>(dm: &DemandModel, d_prev: &[f64], rng: &mut R) -> Vec<f64> {
    let m = dm.noise_pool.len();
    d_prev
        .iter()
        .map(|d| {
            let eps = dm.noise_pool[rng.random_range(0..m)];
            (dm.intercept + dm.ar1 * d + dm.ar2 * eps).max(0.0)
        })
        .collect()
}

/// Mean of batch means and the 95% Student-t half-width.
pub fn batch_ci(values: &[f64], batch_count: usize, batch_len: usize) -> Result<BatchCi, SimError> {
    if batch_count == 0 || batch_len == 0 || values.len() != batch_count * batch_len {
        return Err(SimError::BatchShape {
            len: values.len(),
            batch_count,
            batch_len,
        });
    }
    let means: Vec<f64> = values
        .chunks(batch_len)
        .map(|c| c.iter().sum::<f64>() / batch_len as f64)
        .collect();
    let n = batch_count as f64;
    let mean = means.iter().sum::<f64>() / n;
    if batch_count < 2 {
        return Ok(BatchCi {
            mean,
            half_width: f64::INFINITY,
        });
    }
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let t = StudentsT::new(0.0, 1.0, n - 1.0)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975);
    Ok(BatchCi {
        mean,
        half_width: t * var.sqrt() / n.sqrt(),
    })
}

/// Percent cost advantage of the chance-constrained policy.
pub fn delta_cost(cost_quantile: f64, cost_cc: f64) -> Result<f64, SimError> {
    if !(cost_quantile > 0.0) {
        return Err(SimError::NonPositiveCost(cost_quantile));
    }
    Ok(100.0 * (cost_quantile - cost_cc) / cost_quantile)
}

/// Runs the policy from an empty system. The first period observes zero
/// demand while the AR chain starts from its stationary mean.
pub fn roll(inst: &Instance, cfg: &SimConfig) -> Result<SimulationReport, SimError> {
    cfg.check()?;
    let (records, _, _) = run_periods(inst, cfg, cfg.t_sim)?;
    let steady = &records[cfg.t_warm..];
    let costs: Vec<f64> = steady.iter().map(PeriodRecord::objective).collect();
    let served: Vec<f64> = steady
        .iter()
        .map(|r| if r.stockout { 0.0 } else { 100.0 })
        .collect();
    let cost = batch_ci(&costs, cfg.batch_count, cfg.batch_len)?;
    let sl = batch_ci(&served, cfg.batch_count, cfg.batch_len)?;
    let fallbacks = records.iter().filter(|r| r.stats.fell_back).count();
    let budget_stops = records
        .iter()
        .filter(|r| matches!(r.stats.status, Some(MilpStatus::TimeLimit | MilpStatus::NodeLimit)))
        .count();
    Ok(SimulationReport {
        config: cfg.clone(),
        records,
        mean_cost: cost.mean,
        cost_ci: cost.half_width,
        service_pct: sl.mean,
        sl_ci: sl.half_width,
        fallbacks,
        budget_stops,
    })
}

/// State and observed demand at the start of period `cfg.t_warm`, after
/// running the warm-up periods of `cfg`.
pub fn warm_state(inst: &Instance, cfg: &SimConfig) -> Result<(SystemState, Vec<f64>), SimError> {
    cfg.check()?;
    let (_, state, demand) = run_periods(inst, cfg, cfg.t_warm)?;
    Ok((state, demand))
}

fn run_periods(
    inst: &Instance,
    cfg: &SimConfig,
    periods: usize,
) -> Result<(Vec<PeriodRecord>, SystemState, Vec<f64>), SimError> {
    let kk = inst.products;
    let dm = &inst.demand;
    let mut state = SystemState::empty(kk, vec![dm.stationary_mean(); kk]);
    let mut demand = vec![0.0; kk];
    let mut records = Vec::with_capacity(periods);
    for period in 0..periods {
        let mut scen_rng = rng::stream(cfg.seed, &[rng::SCENARIOS, period as u64]);
        let dec = decide(inst, &state, &demand, cfg.policy, &mut scen_rng, &cfg.budget)
            .map_err(|source| SimError::Policy { period, source })?;
        let used = (0..kk)
            .map(|k| inst.graph.out_arcs(k).iter().map(|&a| dec.s[a]).sum())
            .collect();
        records.push(PeriodRecord {
            period,
            demand: demand.clone(),
            stockout: dec.stocked_out(),
            cost: dec.cost,
            k_hat_size: dec.k_hat.iter().filter(|&&k| k).count(),
            n_setups: dec.y.iter().filter(|&&y| y).count(),
            produced: dec.x.clone(),
            used,
            v: dec.v.clone(),
            b: dec.b.clone(),
            stats: dec.stats.clone(),
        });
        state.v = dec.v;
        state.b = dec.b;
        let mut demand_rng = rng::stream(cfg.seed, &[rng::DEMAND, period as u64]);
        demand = ar_next(dm, &state.d_last, &mut demand_rng);
        state.d_last = demand.clone();
    }
    Ok((records, state, demand))
}
