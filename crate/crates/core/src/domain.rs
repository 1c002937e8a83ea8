//! Domain types shared by every other module: the substitution graph, the
//! static instance data, the rolling-horizon system state and the demand
//! model, plus the big-M and backlog-cost helpers the model builders use.
//!
//! Products are indexed `0..K` with product `0` the highest quality. Which
//! product may serve which demand class is encoded only by the graph.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used for the "cost must be zero" style checks.
const ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("product {product} is missing its self-loop")]
    MissingSelfLoop { product: usize },
    #[error("product index {index} out of range for {products} products")]
    OutOfRange { index: usize, products: usize },
    #[error("arc ({from}, {to}) listed twice")]
    DuplicateArc { from: usize, to: usize },
    #[error("graph must contain at least one product")]
    Empty,
}

/// Which demand classes each product may serve.
///
/// `k_plus[k]` lists the classes product `k` can fill (always including `k`);
/// `k_minus[j]` is the exact transpose. Arcs are numbered by source product,
/// then by their position in `k_plus[k]`; substitution variables and costs
/// follow that numbering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphRepr", into = "GraphRepr")]
pub struct SubstitutionGraph {
    k_plus: Vec<Vec<usize>>,
    k_minus: Vec<Vec<usize>>,
    arcs: Vec<(usize, usize)>,
    out_arcs: Vec<Vec<usize>>,
    in_arcs: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    k_plus: Vec<Vec<usize>>,
}

impl TryFrom<GraphRepr> for SubstitutionGraph {
    type Error = GraphError;

    fn try_from(repr: GraphRepr) -> Result<Self, Self::Error> {
        SubstitutionGraph::new(repr.k_plus)
    }
}

impl From<SubstitutionGraph> for GraphRepr {
    fn from(graph: SubstitutionGraph) -> Self {
        GraphRepr {
            k_plus: graph.k_plus,
        }
    }
}

impl SubstitutionGraph {
    pub fn new(k_plus: Vec<Vec<usize>>) -> Result<Self, GraphError> {
        let products = k_plus.len();
        if products == 0 {
            return Err(GraphError::Empty);
        }
        let mut k_minus = vec![Vec::new(); products];
        let mut arcs = Vec::new();
        let mut out_arcs = vec![Vec::new(); products];
        let mut in_arcs = vec![Vec::new(); products];
        for (k, served) in k_plus.iter().enumerate() {
            if !served.contains(&k) {
                return Err(GraphError::MissingSelfLoop { product: k });
            }
            for (pos, &j) in served.iter().enumerate() {
                if j >= products {
                    return Err(GraphError::OutOfRange { index: j, products });
                }
                if served[..pos].contains(&j) {
                    return Err(GraphError::DuplicateArc { from: k, to: j });
                }
                let a = arcs.len();
                arcs.push((k, j));
                out_arcs[k].push(a);
                in_arcs[j].push(a);
                k_minus[j].push(k);
            }
        }
        Ok(Self {
            k_plus,
            k_minus,
            arcs,
            out_arcs,
            in_arcs,
        })
    }

    /// Self-loops only.
    pub fn identity(products: usize) -> Self {
        Self::new((0..products).map(|k| vec![k]).collect()).expect("identity graph is valid")
    }

    /// Product `k` serves class `j` iff `j` is in `[k, k + width]`.
    /// `width = None` gives full downward substitution.
    pub fn downward(products: usize, width: Option<usize>) -> Self {
        let k_plus = (0..products)
            .map(|k| {
                let last = match width {
                    Some(w) => (k + w).min(products - 1),
                    None => products - 1,
                };
                (k..=last).collect()
            })
            .collect();
        Self::new(k_plus).expect("downward graph is valid")
    }

    pub fn products(&self) -> usize {
        self.k_plus.len()
    }

    pub fn k_plus(&self, k: usize) -> &[usize] {
        &self.k_plus[k]
    }

    pub fn k_minus(&self, j: usize) -> &[usize] {
        &self.k_minus[j]
    }

    pub fn num_arcs(&self) -> usize {
        self.arcs.len()
    }

    /// `(from, to)` for every arc, in arc-index order.
    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.arcs
    }

    /// Arc indices leaving product `k` (uses of `k`'s inventory).
    pub fn out_arcs(&self, k: usize) -> &[usize] {
        &self.out_arcs[k]
    }

    /// Arc indices entering class `j` (ways to fill `j`'s demand).
    pub fn in_arcs(&self, j: usize) -> &[usize] {
        &self.in_arcs[j]
    }

    pub fn arc_index(&self, from: usize, to: usize) -> Option<usize> {
        self.out_arcs
            .get(from)?
            .iter()
            .copied()
            .find(|&a| self.arcs[a].1 == to)
    }

    /// True when every arc is a self-loop.
    pub fn is_identity(&self) -> bool {
        self.arcs.iter().all(|&(k, j)| k == j)
    }

    /// True when every arc of `self` is also an arc of `other`.
    pub fn is_subgraph_of(&self, other: &SubstitutionGraph) -> bool {
        self.products() == other.products()
            && self
                .arcs
                .iter()
                .all(|&(k, j)| other.arc_index(k, j).is_some())
    }
}

/// AR(1) demand process `D' = C + ar1 * D + ar2 * eps`, with `eps` drawn
/// uniformly from a fixed pool of standard-normal values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandModel {
    pub intercept: f64,
    pub ar1: f64,
    pub ar2: f64,
    pub noise_pool: Vec<f64>,
    pub seed: u64,
}

impl DemandModel {
    /// Long-run mean `C / (1 - ar1)`.
    pub fn stationary_mean(&self) -> f64 {
        self.intercept / (1.0 - self.ar1)
    }

    pub fn pool_mean(&self) -> f64 {
        self.noise_pool.iter().sum::<f64>() / self.noise_pool.len() as f64
    }
}

/// All static problem data for one look-ahead model.
///
/// Cost tables are indexed `[period][product]` with period `0` the current
/// period; `c_sub` is indexed `[period][arc]` following the graph's arc order.
/// `cap[t][k] = None` means uncapacitated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub products: usize,
    pub horizon: usize,
    pub alpha: f64,
    pub graph: SubstitutionGraph,
    pub c_setup: Vec<Vec<f64>>,
    pub c_prod: Vec<Vec<f64>>,
    pub c_hold: Vec<Vec<f64>>,
    pub c_sub: Vec<Vec<f64>>,
    /// Backlog penalty on the averaged period-2 backlog of the chance-constrained model.
    pub c_back2: Vec<f64>,
    pub cap: Vec<Vec<Option<f64>>>,
    pub demand: DemandModel,
}

/// A broken instance invariant. Reported as data by [`validate_instance`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl Violation {
    fn new(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            rule: rule.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

fn check_table(
    out: &mut Vec<Violation>,
    name: &str,
    table: &[Vec<f64>],
    rows: usize,
    cols: usize,
) -> bool {
    if table.len() != rows || table.iter().any(|r| r.len() != cols) {
        out.push(Violation::new(
            name,
            format!("must have {rows} periods of {cols} entries"),
        ));
        return false;
    }
    for (t, row) in table.iter().enumerate() {
        if let Some(k) = row.iter().position(|c| !c.is_finite() || *c < 0.0) {
            out.push(Violation::new(
                format!("{name}[{t}][{k}]"),
                "costs must be finite and nonnegative",
            ));
        }
    }
    true
}

/// Checks every [`Instance`] invariant. An empty list means the instance is
/// well formed.
pub fn validate_instance(inst: &Instance) -> Vec<Violation> {
    let mut out = Vec::new();
    let k = inst.products;
    let t = inst.horizon;
    if k == 0 {
        out.push(Violation::new("products", "must be at least 1"));
    }
    if t < 2 {
        out.push(Violation::new("horizon", "must be at least 2"));
    }
    if !(inst.alpha > 0.0 && inst.alpha < 1.0) {
        out.push(Violation::new("alpha", "alpha must lie in (0,1)"));
    }
    if inst.graph.products() != k {
        out.push(Violation::new("graph", "must cover exactly K products"));
        return out;
    }
    check_table(&mut out, "c_setup", &inst.c_setup, t, k);
    check_table(&mut out, "c_prod", &inst.c_prod, t, k);
    check_table(&mut out, "c_hold", &inst.c_hold, t, k);
    if check_table(&mut out, "c_sub", &inst.c_sub, t, inst.graph.num_arcs()) {
        for (period, row) in inst.c_sub.iter().enumerate() {
            for (a, &(from, to)) in inst.graph.arcs().iter().enumerate() {
                if from == to && row[a].abs() > ZERO_TOL {
                    out.push(Violation::new(
                        format!("c_sub[{period}][({from},{to})]"),
                        "self-substitution cost must be 0",
                    ));
                }
            }
        }
    }
    if inst.c_back2.len() != k {
        out.push(Violation::new("c_back2", format!("must have {k} entries")));
    } else if inst.c_back2.iter().any(|c| !c.is_finite() || *c < 0.0) {
        out.push(Violation::new(
            "c_back2",
            "costs must be finite and nonnegative",
        ));
    }
    if inst.cap.len() != t || inst.cap.iter().any(|r| r.len() != k) {
        out.push(Violation::new(
            "cap",
            format!("must have {t} periods of {k} entries"),
        ));
    } else {
        if inst
            .cap
            .iter()
            .flatten()
            .flatten()
            .any(|c| c.is_nan() || *c < 0.0)
        {
            out.push(Violation::new("cap", "capacities must be nonnegative"));
        }
        for j in 0..k {
            let covered = inst
                .graph
                .k_minus(j)
                .iter()
                .any(|&p| inst.cap.iter().all(|row| row[p].is_none()));
            if !covered {
                out.push(Violation::new(
                    format!("cap[*][{j}]"),
                    "some supplier of every product must be uncapacitated",
                ));
            }
        }
    }
    let dm = &inst.demand;
    if dm.noise_pool.is_empty() {
        out.push(Violation::new("demand.noise_pool", "must be nonempty"));
    } else if dm.noise_pool.iter().any(|e| !e.is_finite()) {
        out.push(Violation::new("demand.noise_pool", "must be finite"));
    }
    if !(dm.ar1 >= 0.0 && dm.ar1 < 1.0) {
        out.push(Violation::new("demand.ar1", "must lie in [0,1)"));
    }
    if !(dm.ar2 > 0.0 && dm.ar2.is_finite()) {
        out.push(Violation::new("demand.ar2", "must be positive"));
    }
    if !dm.intercept.is_finite() {
        out.push(Violation::new("demand.intercept", "must be finite"));
    }
    out
}

/// Rolling-horizon state carried between periods.
///
/// `d_last` is the demand level the AR forecast conditions on. It differs
/// from the demand being served only in the very first simulated period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub v: Vec<f64>,
    pub b: Vec<f64>,
    pub d_last: Vec<f64>,
}

impl SystemState {
    pub fn empty(products: usize, d_last: Vec<f64>) -> Self {
        Self {
            v: vec![0.0; products],
            b: vec![0.0; products],
            d_last,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.v
            .iter()
            .chain(&self.b)
            .chain(&self.d_last)
            .all(|x| x.is_finite() && *x >= 0.0)
    }
}

/// Equally weighted joint demand scenarios for the next period,
/// `demands[scenario][product]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub demands: Vec<Vec<f64>>,
}

impl ScenarioSet {
    pub fn new(demands: Vec<Vec<f64>>) -> Self {
        Self { demands }
    }

    pub fn len(&self) -> usize {
        self.demands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demands.is_empty()
    }

    pub fn max_per_product(&self, products: usize) -> Vec<f64> {
        (0..products)
            .map(|k| {
                self.demands
                    .iter()
                    .map(|d| d[k])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    }
}

fn clip_by_cap(inst: &Instance, per_product: &[f64]) -> Vec<Vec<f64>> {
    (0..inst.horizon)
        .map(|t| {
            per_product
                .iter()
                .enumerate()
                .map(|(k, &m)| match inst.cap.get(t).and_then(|row| row[k]) {
                    Some(cap) => m.min(cap),
                    None => m,
                })
                .collect()
        })
        .collect()
}

fn sum_over_served(inst: &Instance, per_class: &[f64]) -> Vec<f64> {
    (0..inst.products)
        .map(|k| inst.graph.k_plus(k).iter().map(|&j| per_class[j]).sum())
        .collect()
}

/// Setup big-M for the deterministic model, `[period][product]`.
///
/// `d_bar` holds the estimates for periods 2..T (so `T - 1` rows).
pub fn big_m_deterministic(
    inst: &Instance,
    state: &SystemState,
    d_hat1: &[f64],
    d_bar: &[Vec<f64>],
) -> Vec<Vec<f64>> {
    let per_class: Vec<f64> = (0..inst.products)
        .map(|j| state.b[j] + d_hat1[j] + d_bar.iter().map(|row| row[j]).sum::<f64>())
        .collect();
    clip_by_cap(inst, &sum_over_served(inst, &per_class))
}

/// Setup big-M for the chance-constrained model: the next period contributes
/// the largest scenario demand; `d_bar_tail` covers periods 3..T.
pub fn big_m_cc(
    inst: &Instance,
    state: &SystemState,
    d_hat1: &[f64],
    scen: &ScenarioSet,
    d_bar_tail: &[Vec<f64>],
) -> Vec<Vec<f64>> {
    let max_next = scen.max_per_product(inst.products);
    let per_class: Vec<f64> = (0..inst.products)
        .map(|j| {
            state.b[j] + d_hat1[j] + max_next[j] + d_bar_tail.iter().map(|row| row[j]).sum::<f64>()
        })
        .collect();
    clip_by_cap(inst, &sum_over_served(inst, &per_class))
}

/// Per-scenario bound on the next-period backlog, `[scenario][product]`.
pub fn big_m_child(
    inst: &Instance,
    state: &SystemState,
    d_hat1: &[f64],
    scen: &ScenarioSet,
) -> Vec<Vec<f64>> {
    scen.demands
        .iter()
        .map(|d| {
            (0..inst.products)
                .map(|k| d[k] + d_hat1[k] + state.b[k])
                .collect()
        })
        .collect()
}

/// Period-2 backlog penalty: for each product, the most expensive
/// substitution available to any product that can supply it.
pub fn backlog_cost(inst: &Instance) -> Vec<f64> {
    // Period 2 of the look-ahead is index 1.
    let costs = &inst.c_sub[1.min(inst.c_sub.len() - 1)];
    (0..inst.products)
        .map(|k| {
            inst.graph
                .k_minus(k)
                .iter()
                .flat_map(|&j| inst.graph.out_arcs(j).iter().map(|&a| costs[a]))
                .fold(0.0, f64::max)
        })
        .collect()
}
