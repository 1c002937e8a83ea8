//! Synthetic benchmark instances.
//!
//! Costs derive from a per-product reference value
//! `c̄[k] = 1 + eta·(K − k)` (1-based `k`, so product 1 is the most valuable):
//! substitution costs `tau` times the value gap, holding `rho·c̄`, and a
//! setup cost chosen so the economic time between orders equals `tbo`.
//! Production costs are zero.

use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    backlog_cost, validate_instance, DemandModel, Instance, SubstitutionGraph, Violation,
};
use crate::rng;

pub const INTERCEPT: f64 = 20.0;
pub const AR1: f64 = 0.8;
pub const AR2: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Substitution {
    None,
    /// A product may serve classes at most `width` levels below it.
    Partial { width: usize },
    Full,
}

impl Substitution {
    pub const PARTIAL: Substitution = Substitution::Partial { width: 3 };

    pub fn graph(self, products: usize) -> SubstitutionGraph {
        match self {
            Substitution::None => SubstitutionGraph::identity(products),
            Substitution::Partial { width } => SubstitutionGraph::downward(products, Some(width)),
            Substitution::Full => SubstitutionGraph::downward(products, None),
        }
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Substitution::None => write!(f, "none"),
            Substitution::Partial { width: 3 } => write!(f, "partial"),
            Substitution::Partial { width } => write!(f, "partial{width}"),
            Substitution::Full => write!(f, "full"),
        }
    }
}

impl FromStr for Substitution {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "none" => Ok(Substitution::None),
            "partial" => Ok(Substitution::PARTIAL),
            "full" => Ok(Substitution::Full),
            other => other
                .strip_prefix("partial")
                .and_then(|w| w.parse().ok())
                .map(|width| Substitution::Partial { width })
                .ok_or_else(|| format!("unknown substitution level `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub products: usize,
    pub eta: f64,
    pub tau: f64,
    pub rho: f64,
    pub tbo: f64,
    pub alpha: f64,
    pub substitution: Substitution,
    pub horizon: usize,
    pub scenario_count: usize,
    pub seed: u64,
    pub pool_size: usize,
    /// Accept `tau < 1`.
    pub allow_nonstandard: bool,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            products: 10,
            eta: 0.2,
            tau: 1.5,
            rho: 0.05,
            tbo: 1.0,
            alpha: 0.95,
            substitution: Substitution::PARTIAL,
            horizon: 6,
            scenario_count: 100,
            seed: 1,
            pool_size: 1000,
            allow_nonstandard: false,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("tau = {0} is below 1; pass the non-standard override to allow it")]
    TauBelowOne(f64),
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("generated instance is invalid: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

impl GeneratorConfig {
    pub fn check(&self) -> Result<(), GenError> {
        for (name, v) in [("eta", self.eta), ("rho", self.rho), ("tbo", self.tbo)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(GenError::NonPositive(name));
            }
        }
        if self.products == 0 {
            return Err(GenError::NonPositive("products"));
        }
        if self.pool_size == 0 {
            return Err(GenError::NonPositive("pool_size"));
        }
        if self.scenario_count == 0 {
            return Err(GenError::NonPositive("scenario_count"));
        }
        if !(self.tau >= 0.0) {
            return Err(GenError::NonPositive("tau"));
        }
        if self.tau < 1.0 && !self.allow_nonstandard {
            return Err(GenError::TauBelowOne(self.tau));
        }
        Ok(())
    }
}

/// `m` standard-normal draws determined by `seed`.
pub fn noise_pool(seed: u64, m: usize) -> Vec<f64> {
    let mut rng = rng::stream(seed, &[rng::NOISE_POOL]);
    (0..m).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Reference product values `c̄`, index 0 being the most valuable product.
pub fn reference_values(products: usize, eta: f64) -> Vec<f64> {
    (0..products)
        .map(|k| 1.0 + eta * (products - 1 - k) as f64)
        .collect()
}

pub fn generate(cfg: &GeneratorConfig) -> Result<Instance, GenError> {
    cfg.check()?;
    let k = cfg.products;
    let t = cfg.horizon;
    let graph = cfg.substitution.graph(k);
    let value = reference_values(k, cfg.eta);
    let demand = DemandModel {
        intercept: INTERCEPT,
        ar1: AR1,
        ar2: AR2,
        noise_pool: noise_pool(cfg.seed, cfg.pool_size),
        seed: cfg.seed,
    };
    let mean_demand = demand.stationary_mean();
    let hold: Vec<f64> = value.iter().map(|c| cfg.rho * c).collect();
    let setup: Vec<f64> = hold
        .iter()
        .map(|h| mean_demand * cfg.tbo * cfg.tbo * h / 2.0)
        .collect();
    let sub: Vec<f64> = graph
        .arcs()
        .iter()
        .map(|&(from, to)| (cfg.tau * (value[from] - value[to])).max(0.0))
        .collect();
    let mut inst = Instance {
        products: k,
        horizon: t,
        alpha: cfg.alpha,
        graph,
        c_setup: vec![setup; t],
        c_prod: vec![vec![0.0; k]; t],
        c_hold: vec![hold; t],
        c_sub: vec![sub; t],
        c_back2: vec![0.0; k],
        cap: vec![vec![None; k]; t],
        demand,
    };
    inst.c_back2 = backlog_cost(&inst);
    let violations = validate_instance(&inst);
    if violations.is_empty() {
        Ok(inst)
    } else {
        Err(GenError::Invalid(violations))
    }
}
