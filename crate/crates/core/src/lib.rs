//! Rolling-horizon lot-sizing with supplier-driven product substitution and
//! a joint service-level (chance) constraint.

pub mod cuts;
pub mod domain;
pub mod instance;
pub mod lp;
pub mod milp;
pub mod models;
pub mod policy;
pub mod rng;
pub mod sim;

pub use domain::{
    backlog_cost, big_m_cc, big_m_child, big_m_deterministic, validate_instance, DemandModel,
    Instance, ScenarioSet, SubstitutionGraph, SystemState, Violation,
};
