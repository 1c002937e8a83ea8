//! Rolling-horizon decision rules.
//!
//! Each period the stock-out LP first finds which products can be kept
//! backlog-free, then a look-ahead model (deterministic or chance
//! constrained) is solved and only its current-period slice is returned.

use std::time::{Duration, Instant};

use log::{debug, warn};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cuts::ChanceCutSeparator;
use crate::domain::{DemandModel, Instance, ScenarioSet, SystemState};
use crate::lp::{self, LpStatus, Sense};
use crate::milp::{solve_milp, Backend, MilpError, MilpOptions, MilpResult, MilpStatus};
use crate::models::{self, build_cc_master, build_deterministic, build_stockout_lp, BuiltModel};

/// Backlog at or below this counts as zero.
pub const BACKLOG_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyRule {
    Average,
    Quantile,
    ChanceConstrained { scenario_count: usize },
}

impl PolicyRule {
    pub const CC: PolicyRule = PolicyRule::ChanceConstrained { scenario_count: 100 };

    pub fn name(&self) -> &'static str {
        match self {
            PolicyRule::Average => "average",
            PolicyRule::Quantile => "quantile",
            PolicyRule::ChanceConstrained { .. } => "cc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyKind {
    pub rule: PolicyRule,
    pub skip_stockout_step: bool,
}

impl PolicyKind {
    pub fn new(rule: PolicyRule) -> Self {
        Self {
            rule,
            skip_stockout_step: false,
        }
    }

    pub fn is_valid(&self) -> bool {
        !matches!(self.rule, PolicyRule::ChanceConstrained { scenario_count: 0 })
    }
}

/// Solver budget per period.
#[derive(Debug, Clone, PartialEq)]
pub struct DecideOptions {
    pub time_limit: Duration,
    pub node_limit: Option<usize>,
    pub backend: Backend,
}

impl Default for DecideOptions {
    fn default() -> Self {
        Self {
            time_limit: Duration::from_secs(60),
            node_limit: None,
            backend: Backend::Highs,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub setup: f64,
    pub production: f64,
    pub holding: f64,
    pub substitution: f64,
}

impl CostBreakdown {
    pub fn total(&self) -> f64 {
        self.setup + self.production + self.holding + self.substitution
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveStats {
    pub status: Option<MilpStatus>,
    pub objective: f64,
    pub nodes: usize,
    pub cuts: usize,
    pub lp_solves: usize,
    pub elapsed: Duration,
    /// The chance-constrained model gave no usable plan and the quantile
    /// rule decided instead.
    pub fell_back: bool,
}

/// Current-period decisions.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodDecision {
    pub y: Vec<bool>,
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub i: Vec<f64>,
    pub b: Vec<f64>,
    pub v: Vec<f64>,
    pub cost: CostBreakdown,
    pub k_hat: Vec<bool>,
    /// Optimal value of the stock-out LP, `None` when the step was skipped.
    pub min_backlog: Option<f64>,
    pub stats: SolveStats,
}

impl PeriodDecision {
    pub fn stocked_out(&self) -> bool {
        self.b.iter().any(|&b| b > BACKLOG_TOL)
    }

    /// Largest violation of the balance identities and sign constraints.
    pub fn residual(&self, inst: &Instance, state: &SystemState, d_hat1: &[f64]) -> f64 {
        let g = &inst.graph;
        let mut worst: f64 = 0.0;
        for k in 0..inst.products {
            let served: f64 = g.in_arcs(k).iter().map(|&a| self.s[a]).sum();
            worst = worst.max((served + self.b[k] - d_hat1[k] - state.b[k]).abs());
            let used: f64 = g.out_arcs(k).iter().map(|&a| self.s[a]).sum();
            worst = worst.max((used + self.i[k] - state.v[k]).abs());
            worst = worst.max((self.v[k] - self.i[k] - self.x[k]).abs());
            if self.x[k] > 0.0 && !self.y[k] {
                worst = worst.max(self.x[k]);
            }
        }
        for q in self.x.iter().chain(&self.s).chain(&self.i).chain(&self.b).chain(&self.v) {
            worst = worst.max(-q);
        }
        worst
    }
}

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("look-ahead model is infeasible")]
    Infeasible,
    #[error("no plan within the solver budget ({status:?} after {nodes} nodes)")]
    Budget { status: MilpStatus, nodes: usize },
    #[error("stock-out LP failed: {0}")]
    StockOut(String),
    #[error(transparent)]
    Milp(#[from] MilpError),
}

/// `E[D_{t+s} | D_t = d_last]` for `s = 1..=steps`.
pub fn conditional_mean_path(dm: &DemandModel, d_last: &[f64], steps: usize) -> Vec<Vec<f64>> {
    let drift = dm.intercept + dm.ar2 * dm.pool_mean();
    let mut cur = d_last.to_vec();
    (0..steps)
        .map(|_| {
            for d in cur.iter_mut() {
                *d = drift + dm.ar1 * *d;
            }
            cur.clone()
        })
        .collect()
}

/// Smallest pool value whose empirical CDF reaches `alpha`.
pub fn pool_quantile(pool: &[f64], alpha: f64) -> f64 {
    let mut sorted = pool.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (alpha * sorted.len() as f64 - 1e-9).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

pub fn quantile_next(dm: &DemandModel, d_last: &[f64], alpha: f64) -> Vec<f64> {
    let q = pool_quantile(&dm.noise_pool, alpha);
    d_last
        .iter()
        .map(|d| (dm.intercept + dm.ar1 * d + dm.ar2 * q).max(0.0))
        .collect()
}

/// `count` joint next-period scenarios; products and scenarios draw
/// independently from the pool.
pub fn make_scenarios<R: Rng>(dm: &DemandModel, d_last: &[f64], count: usize, rng: &mut R) -> ScenarioSet {
    let m = dm.noise_pool.len();
    ScenarioSet::new(
        (0..count)
            .map(|_| {
                d_last
                    .iter()
                    .map(|d| {
                        let eps = dm.noise_pool[rng.random_range(0..m)];
                        (dm.intercept + dm.ar1 * d + dm.ar2 * eps).max(0.0)
                    })
                    .collect()
            })
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct StockOut {
    pub k_hat: Vec<bool>,
    pub backlog: Vec<f64>,
    pub total: f64,
}

/// Minimum-backlog allocation of the stock on hand. Among allocations
/// reaching the minimum, the cheapest in substitution cost is reported.
pub fn stockout_step(inst: &Instance, state: &SystemState, d_hat1: &[f64]) -> Result<StockOut, PolicyError> {
    let built = build_stockout_lp(inst, state, d_hat1);
    let first = lp::solve_lp(built.lp()).map_err(|e| PolicyError::StockOut(e.to_string()))?;
    if first.status != LpStatus::Optimal {
        return Err(PolicyError::StockOut(format!("{:?}", first.status)));
    }
    let total = first.objective.max(0.0);
    let mut second = built.lp().clone();
    second.add_row(
        built.vars.b[0].iter().map(|&j| (j, 1.0)).collect(),
        Sense::Le,
        total + 1e-9 * (1.0 + total),
    );
    second.objective = vec![0.0; second.n_vars()];
    for (a, &j) in built.vars.s[0].iter().enumerate() {
        second.objective[j] = inst.c_sub[0][a];
    }
    let tie = lp::solve_lp(&second).map_err(|e| PolicyError::StockOut(e.to_string()))?;
    let primal = if tie.status == LpStatus::Optimal {
        tie.primal
    } else {
        first.primal
    };
    let backlog: Vec<f64> = built.vars.b[0].iter().map(|&j| primal[j].max(0.0)).collect();
    let k_hat = if total <= BACKLOG_TOL {
        vec![true; inst.products]
    } else {
        backlog.iter().map(|&b| b <= BACKLOG_TOL).collect()
    };
    Ok(StockOut { k_hat, backlog, total })
}

/// Demand estimates for periods `1..T` of the deterministic rules.
pub fn deterministic_estimates(inst: &Instance, state: &SystemState, rule: PolicyRule) -> Vec<Vec<f64>> {
    let mut path = conditional_mean_path(&inst.demand, &state.d_last, inst.horizon.saturating_sub(1));
    if rule == PolicyRule::Quantile && !path.is_empty() {
        path[0] = quantile_next(&inst.demand, &state.d_last, inst.alpha);
    }
    path
}

fn extract(inst: &Instance, built: &BuiltModel, x: &[f64]) -> PeriodDecision {
    let vars = &built.vars;
    let val = |j: usize| {
        let v = x[j];
        if v.abs() < 1e-9 {
            0.0
        } else {
            v
        }
    };
    let y: Vec<bool> = vars.y[0].iter().map(|&j| x[j] > 0.5).collect();
    let xs: Vec<f64> = vars.x[0]
        .iter()
        .zip(&y)
        .map(|(&j, &open)| if open { val(j).max(0.0) } else { 0.0 })
        .collect();
    let s: Vec<f64> = vars.s[0].iter().map(|&j| val(j).max(0.0)).collect();
    let i: Vec<f64> = vars.i[0].iter().map(|&j| val(j).max(0.0)).collect();
    let b: Vec<f64> = vars.b[0].iter().map(|&j| val(j).max(0.0)).collect();
    let v: Vec<f64> = vars.v[0].iter().map(|&j| val(j).max(0.0)).collect();
    let cost = CostBreakdown {
        setup: (0..inst.products).filter(|&k| y[k]).map(|k| inst.c_setup[0][k]).sum(),
        production: (0..inst.products).map(|k| inst.c_prod[0][k] * xs[k]).sum(),
        holding: (0..inst.products).map(|k| inst.c_hold[0][k] * i[k]).sum(),
        substitution: s.iter().zip(&inst.c_sub[0]).map(|(q, c)| q * c).sum(),
    };
    PeriodDecision {
        y,
        x: xs,
        s,
        i,
        b,
        v,
        cost,
        k_hat: Vec::new(),
        min_backlog: None,
        stats: SolveStats::default(),
    }
}

fn milp_options(opts: &DecideOptions) -> MilpOptions {
    MilpOptions {
        time_limit: Some(opts.time_limit),
        node_limit: opts.node_limit,
        backend: opts.backend,
        ..MilpOptions::default()
    }
}

fn stats_of(res: &MilpResult, started: Instant) -> SolveStats {
    SolveStats {
        status: Some(res.status),
        objective: res.objective,
        nodes: res.nodes,
        cuts: res.cuts_added,
        lp_solves: res.lp_solves,
        elapsed: started.elapsed(),
        fell_back: false,
    }
}

fn solve_deterministic(
    inst: &Instance,
    state: &SystemState,
    d_hat1: &[f64],
    rule: PolicyRule,
    k_hat: &[bool],
    opts: &DecideOptions,
) -> Result<PeriodDecision, PolicyError> {
    let started = Instant::now();
    let d_bar = deterministic_estimates(inst, state, rule);
    let built = build_deterministic(inst, state, d_hat1, &d_bar, k_hat);
    let res = solve_milp(&built.milp, None, &milp_options(opts))?;
    finish(inst, &built, &res, started)
}

fn finish(
    inst: &Instance,
    built: &BuiltModel,
    res: &MilpResult,
    started: Instant,
) -> Result<PeriodDecision, PolicyError> {
    match (&res.x, res.status) {
        (_, MilpStatus::Infeasible) => Err(PolicyError::Infeasible),
        (Some(x), _) => {
            let mut dec = extract(inst, built, x);
            dec.stats = stats_of(res, started);
            Ok(dec)
        }
        (None, status) => Err(PolicyError::Budget {
            status,
            nodes: res.nodes,
        }),
    }
}

/// Point forecasts for the periods after the scenario period.
pub fn cc_tail(inst: &Instance, state: &SystemState) -> Vec<Vec<f64>> {
    let tail = conditional_mean_path(&inst.demand, &state.d_last, inst.horizon.saturating_sub(1));
    tail.get(1..).map(<[_]>::to_vec).unwrap_or_default()
}

fn solve_chance(
    inst: &Instance,
    state: &SystemState,
    d_hat1: &[f64],
    scen: &ScenarioSet,
    k_hat: &[bool],
    opts: &DecideOptions,
) -> Result<PeriodDecision, PolicyError> {
    let started = Instant::now();
    let built = build_cc_master(inst, state, d_hat1, scen, &cc_tail(inst, state), k_hat);
    let mut sep = ChanceCutSeparator::new(inst, scen, &built.vars);
    let res = solve_milp(&built.milp, Some(&mut sep), &milp_options(opts))?;
    if let Some(x) = &res.x {
        let open = built.vars.z.iter().filter(|&&j| x[j] > 0.5).count();
        debug_assert!(open <= models::cardinality_rhs(inst.alpha, scen.len()));
    }
    finish(inst, &built, &res, started)
}

/// Runs the stock-out step (unless skipped) and the rule's look-ahead
/// model, returning the current-period plan. `rng` drives scenario
/// sampling for the chance-constrained rule only.
pub fn decide<R: Rng>(
    inst: &Instance,
    state: &SystemState,
    d_hat1: &[f64],
    kind: PolicyKind,
    rng: &mut R,
    opts: &DecideOptions,
) -> Result<PeriodDecision, PolicyError> {
    let (k_hat, min_backlog) = if kind.skip_stockout_step {
        (vec![false; inst.products], None)
    } else {
        let so = stockout_step(inst, state, d_hat1)?;
        (so.k_hat, Some(so.total))
    };
    let mut dec = match kind.rule {
        PolicyRule::Average | PolicyRule::Quantile => {
            solve_deterministic(inst, state, d_hat1, kind.rule, &k_hat, opts)?
        }
        PolicyRule::ChanceConstrained { scenario_count } => {
            let scen = make_scenarios(&inst.demand, &state.d_last, scenario_count, rng);
            match solve_chance(inst, state, d_hat1, &scen, &k_hat, opts) {
                Ok(dec) => dec,
                Err(PolicyError::Budget { status, nodes }) => {
                    warn!("chance-constrained model gave no plan ({status:?}, {nodes} nodes); using the quantile rule");
                    let mut dec =
                        solve_deterministic(inst, state, d_hat1, PolicyRule::Quantile, &k_hat, opts)?;
                    dec.stats.fell_back = true;
                    dec
                }
                Err(e) => return Err(e),
            }
        }
    };
    if let Some(status) = dec.stats.status.filter(|s| *s != MilpStatus::Optimal) {
        debug!("{} plan accepted with status {status:?}", kind.rule.name());
    }
    dec.k_hat = k_hat;
    dec.min_backlog = min_backlog;
    Ok(dec)
}
