//! Builders for the stock-out LP, the deterministic look-ahead model and the
//! two chance-constrained variants (extensive form and cut-driven master).
//!
//! Periods are 0-based: period 0 is the current period, whose demand
//! `d_hat1` has just been observed, and period 1 is the first period whose
//! demand is still uncertain. Production in period `t` becomes available in
//! period `t + 1`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::domain::{
    big_m_cc, big_m_child, big_m_deterministic, Instance, ScenarioSet, SystemState,
};
use crate::lp::{LpModel, Sense};
use crate::milp::{MilpModel, Rounding};

/// What a constraint row encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RowKind {
    /// `x ≤ M·y`.
    SetupLink { t: usize, k: usize },
    /// Current-period demand plus old backlog is served or backlogged.
    CurrentBalance { k: usize },
    /// Future demand (plus carried backlog) is served in full.
    DemandBalance { t: usize, k: usize },
    /// Substitutions out of a product plus leftover equal available stock.
    InventoryUse { t: usize, k: usize },
    /// `v = i + x`.
    StockAfterProduction { t: usize, k: usize },
    ScenarioBalance { w: usize, k: usize },
    ScenarioInventory { w: usize, k: usize },
    AverageInventory { k: usize },
    AverageBacklog { k: usize },
    /// `Σ z ≤ p`.
    Cardinality,
    ChildBalance { w: usize, k: usize },
    ChildInventory { w: usize, k: usize },
    ChildIndicator { w: usize, k: usize },
    /// Production in `t` is bounded by own demand up to `l` when set up,
    /// plus what leaves through substitution, carried backlog or stock.
    /// `set` marks which periods after `t` belong to the production set;
    /// `folded` rows bound carried backlog by a constant instead.
    LeadCover { t: usize, l: usize, k: usize, set: u32, folded: bool },
}

impl RowKind {
    pub fn tag(&self) -> &'static str {
        match self {
            RowKind::SetupLink { .. } => "setup_link",
            RowKind::CurrentBalance { .. } => "current_balance",
            RowKind::DemandBalance { .. } => "demand_balance",
            RowKind::InventoryUse { .. } => "inventory_use",
            RowKind::StockAfterProduction { .. } => "stock_after_production",
            RowKind::ScenarioBalance { .. } => "scenario_balance",
            RowKind::ScenarioInventory { .. } => "scenario_inventory",
            RowKind::AverageInventory { .. } => "average_inventory",
            RowKind::AverageBacklog { .. } => "average_backlog",
            RowKind::Cardinality => "cardinality",
            RowKind::ChildBalance { .. } => "child_balance",
            RowKind::ChildInventory { .. } => "child_inventory",
            RowKind::ChildIndicator { .. } => "child_indicator",
            RowKind::LeadCover { .. } => "lead_cover",
        }
    }
}

/// Variable indices of a built model. Absent symbols are empty vectors;
/// `b` has one row per period that carries a backlog variable.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VarMap {
    pub y: Vec<Vec<usize>>,
    pub x: Vec<Vec<usize>>,
    pub s: Vec<Vec<usize>>,
    pub i: Vec<Vec<usize>>,
    pub b: Vec<Vec<usize>>,
    pub v: Vec<Vec<usize>>,
    pub s_scen: Vec<Vec<usize>>,
    pub i_scen: Vec<Vec<usize>>,
    pub b_scen: Vec<Vec<usize>>,
    pub z: Vec<usize>,
    pub b_child: Vec<Vec<usize>>,
    pub s_child: Vec<Vec<usize>>,
    pub n_vars: usize,
}

impl VarMap {
    /// `(name, index)` for every variable, in symbol order.
    pub fn named(&self) -> Vec<(String, usize)> {
        let mut out = Vec::with_capacity(self.n_vars);
        let tables: [(&str, &Vec<Vec<usize>>); 11] = [
            ("y", &self.y),
            ("x", &self.x),
            ("s", &self.s),
            ("i", &self.i),
            ("b", &self.b),
            ("v", &self.v),
            ("s_scen", &self.s_scen),
            ("i_scen", &self.i_scen),
            ("b_scen", &self.b_scen),
            ("b_child", &self.b_child),
            ("s_child", &self.s_child),
        ];
        for (name, table) in tables {
            for (r, row) in table.iter().enumerate() {
                for (c, &j) in row.iter().enumerate() {
                    out.push((format!("{name}[{r}][{c}]"), j));
                }
            }
        }
        for (w, &j) in self.z.iter().enumerate() {
            out.push((format!("z[{w}]"), j));
        }
        out
    }

    /// True when the symbols cover `0..n_vars` exactly once.
    pub fn is_bijection(&self) -> bool {
        let mut seen = vec![false; self.n_vars];
        for (_, j) in self.named() {
            if j >= self.n_vars || seen[j] {
                return false;
            }
            seen[j] = true;
        }
        seen.into_iter().all(|s| s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuiltModel {
    pub milp: MilpModel,
    pub vars: VarMap,
    pub rows: Vec<RowKind>,
}

impl BuiltModel {
    pub fn lp(&self) -> &LpModel {
        &self.milp.lp
    }

    /// Number of rows per tag.
    pub fn row_counts(&self) -> BTreeMap<&'static str, usize> {
        let mut counts = BTreeMap::new();
        for kind in &self.rows {
            *counts.entry(kind.tag()).or_insert(0) += 1;
        }
        counts
    }

    /// Text dump of the model.
    ///
    /// ```text
    /// minimize
    ///  obj: <coef> <var> + ...
    /// subject to
    ///  <tag>_<row>: <coef> <var> + ... (<=|=|>=) <rhs>
    /// bounds
    ///  <lo> <= <var> <= <hi>
    /// binary
    ///  <var> ...
    /// end
    /// ```
    /// Variable names are `symbol[r][c]` with 0-based indices.
    pub fn to_lp_text(&self) -> String {
        let lp = self.lp();
        let mut names = vec![String::new(); lp.n_vars()];
        for (name, j) in self.vars.named() {
            names[j] = name;
        }
        let term_list = |terms: &mut dyn Iterator<Item = (usize, f64)>| {
            let parts: Vec<String> = terms
                .filter(|t| t.1 != 0.0)
                .map(|(j, a)| format!("{a} {}", names[j]))
                .collect();
            if parts.is_empty() {
                "0".to_string()
            } else {
                parts.join(" + ")
            }
        };
        let mut out = String::from("minimize\n obj: ");
        out += &term_list(&mut lp.objective.iter().copied().enumerate());
        out += "\nsubject to\n";
        for (r, (row, kind)) in lp.rows.iter().zip(&self.rows).enumerate() {
            let sense = match row.sense {
                Sense::Le => "<=",
                Sense::Eq => "=",
                Sense::Ge => ">=",
            };
            let _ = writeln!(
                out,
                " {}_{r}: {} {sense} {}",
                kind.tag(),
                term_list(&mut row.coeffs.iter().copied()),
                row.rhs
            );
        }
        out += "bounds\n";
        for (j, name) in names.iter().enumerate() {
            let _ = writeln!(out, " {} <= {name} <= {}", lp.lower[j], lp.upper[j]);
        }
        out += "binary\n";
        for &j in &self.milp.binaries {
            let _ = writeln!(out, " {}", names[j]);
        }
        out += "end\n";
        out
    }
}

/// Longest horizon for which every production set gets a cover row.
pub const FULL_COVER_HORIZON: usize = 8;

/// `⌊(1 − alpha)·n⌋`, robust to the representation error in `1 − alpha`.
pub fn cardinality_rhs(alpha: f64, n: usize) -> usize {
    ((1.0 - alpha) * n as f64 + 1e-9).floor().max(0.0) as usize
}

struct Builder {
    lp: LpModel,
    rows: Vec<RowKind>,
    binaries: Vec<usize>,
    /// Outflow of each product's stock per future period, indexed by period.
    outflow: Vec<Option<Outflow>>,
}

/// How the stock available at the start of a future period leaves it.
struct Outflow {
    /// Bound on own-class demand served by the product itself.
    own: Vec<f64>,
    /// Backlog variables adding to the own-class requirement, with an
    /// upper bound on each.
    carried: Option<(Vec<usize>, Vec<f64>)>,
    /// Substitution terms towards other classes, per product.
    other: Vec<Vec<(usize, f64)>>,
}

impl Builder {
    fn new() -> Self {
        Self {
            lp: LpModel::new(0),
            rows: Vec::new(),
            binaries: Vec::new(),
            outflow: vec![None],
        }
    }

    fn var(&mut self, cost: f64) -> usize {
        self.lp.add_var(cost, 0.0, f64::INFINITY)
    }

    fn vars(&mut self, costs: impl IntoIterator<Item = f64>) -> Vec<usize> {
        costs.into_iter().map(|c| self.var(c)).collect()
    }

    fn binary(&mut self, cost: f64) -> usize {
        let j = self.lp.add_var(cost, 0.0, 1.0);
        self.binaries.push(j);
        j
    }

    fn row(&mut self, kind: RowKind, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.lp.add_row(coeffs, sense, rhs);
        self.rows.push(kind);
    }

    fn finish(self, mut vars: VarMap) -> BuiltModel {
        vars.n_vars = self.lp.n_vars();
        let mut milp = MilpModel::new(self.lp, self.binaries);
        milp.branch_first = vars.y.iter().flatten().copied().collect();
        milp.rounding = Rounding {
            round_up: vars.y.iter().flatten().copied().collect(),
            budgets: if vars.z.is_empty() {
                Vec::new()
            } else {
                let card = self
                    .rows
                    .iter()
                    .position(|r| *r == RowKind::Cardinality)
                    .expect("indicator models carry a cardinality row");
                let p = milp.lp.rows[card].rhs as usize;
                vec![(vars.z.clone(), p)]
            },
        };
        BuiltModel {
            milp,
            vars,
            rows: self.rows,
        }
    }
}

/// Minimum total current backlog given the stock on hand.
pub fn build_stockout_lp(inst: &Instance, state: &SystemState, d_hat1: &[f64]) -> BuiltModel {
    let g = &inst.graph;
    let mut bld = Builder::new();
    let s = bld.vars((0..g.num_arcs()).map(|_| 0.0));
    let b = bld.vars((0..inst.products).map(|_| 1.0));
    for k in 0..inst.products {
        let mut coeffs: Vec<(usize, f64)> = g.in_arcs(k).iter().map(|&a| (s[a], 1.0)).collect();
        coeffs.push((b[k], 1.0));
        bld.row(
            RowKind::CurrentBalance { k },
            coeffs,
            Sense::Eq,
            d_hat1[k] + state.b[k],
        );
    }
    for k in 0..inst.products {
        let coeffs = g.out_arcs(k).iter().map(|&a| (s[a], 1.0)).collect();
        bld.row(RowKind::InventoryUse { t: 0, k }, coeffs, Sense::Le, state.v[k]);
    }
    bld.finish(VarMap {
        s: vec![s],
        b: vec![b],
        ..VarMap::default()
    })
}

/// Period-0 block shared by all look-ahead models: variables for the
/// current period plus the balance and inventory-use rows.
fn current_period(
    bld: &mut Builder,
    inst: &Instance,
    state: &SystemState,
    d_hat1: &[f64],
    k_hat: &[bool],
    vars: &mut VarMap,
) {
    let kk = inst.products;
    let g = &inst.graph;
    let y = (0..kk).map(|k| bld.binary(inst.c_setup[0][k])).collect();
    let x = bld.vars((0..kk).map(|k| inst.c_prod[0][k]));
    let s = bld.vars((0..g.num_arcs()).map(|a| inst.c_sub[0][a]));
    let i = bld.vars((0..kk).map(|k| inst.c_hold[0][k]));
    let b = bld.vars((0..kk).map(|_| 0.0));
    for (k, &fixed) in k_hat.iter().enumerate() {
        if fixed {
            bld.lp.upper[b[k]] = 0.0;
        }
    }
    let v = bld.vars((0..kk).map(|_| 0.0));
    for k in 0..kk {
        let mut coeffs: Vec<(usize, f64)> = g.in_arcs(k).iter().map(|&a| (s[a], 1.0)).collect();
        coeffs.push((b[k], 1.0));
        bld.row(
            RowKind::CurrentBalance { k },
            coeffs,
            Sense::Eq,
            d_hat1[k] + state.b[k],
        );
    }
    for k in 0..kk {
        let mut coeffs: Vec<(usize, f64)> = g.out_arcs(k).iter().map(|&a| (s[a], 1.0)).collect();
        coeffs.push((i[k], 1.0));
        bld.row(RowKind::InventoryUse { t: 0, k }, coeffs, Sense::Eq, state.v[k]);
    }
    vars.y.push(y);
    vars.x.push(x);
    vars.s.push(s);
    vars.i.push(i);
    vars.b.push(b);
    vars.v.push(v);
}

fn stock_rows(bld: &mut Builder, t: usize, vars: &VarMap, products: usize) {
    for k in 0..products {
        bld.row(
            RowKind::StockAfterProduction { t, k },
            vec![(vars.v[t][k], 1.0), (vars.i[t][k], -1.0), (vars.x[t][k], -1.0)],
            Sense::Eq,
            0.0,
        );
    }
}

fn setup_rows(bld: &mut Builder, vars: &VarMap, big_m: &[Vec<f64>], products: usize) {
    for (t, row) in big_m.iter().enumerate() {
        for k in 0..products {
            bld.row(
                RowKind::SetupLink { t, k },
                vec![(vars.x[t][k], 1.0), (vars.y[t][k], -row[k])],
                Sense::Le,
                0.0,
            );
        }
    }
}

/// Plain future period `t ≥ 1`: serve `demand` (plus `carried` backlog) in
/// full from the stock available at the start of the period.
fn future_period(
    bld: &mut Builder,
    inst: &Instance,
    t: usize,
    demand: &[f64],
    carried: Option<(&[usize], &[f64])>,
    vars: &mut VarMap,
) {
    let kk = inst.products;
    let g = &inst.graph;
    let y = (0..kk).map(|k| bld.binary(inst.c_setup[t][k])).collect();
    let x = bld.vars((0..kk).map(|k| inst.c_prod[t][k]));
    let s = bld.vars((0..g.num_arcs()).map(|a| inst.c_sub[t][a]));
    let i = bld.vars((0..kk).map(|k| inst.c_hold[t][k]));
    let v = bld.vars((0..kk).map(|_| 0.0));
    for k in 0..kk {
        let mut coeffs: Vec<(usize, f64)> = g.in_arcs(k).iter().map(|&a| (s[a], 1.0)).collect();
        if let Some((back, _)) = carried {
            coeffs.push((back[k], -1.0));
        }
        bld.row(RowKind::DemandBalance { t, k }, coeffs, Sense::Eq, demand[k]);
    }
    for k in 0..kk {
        let mut coeffs: Vec<(usize, f64)> = g.out_arcs(k).iter().map(|&a| (s[a], 1.0)).collect();
        coeffs.push((i[k], 1.0));
        coeffs.push((vars.v[t - 1][k], -1.0));
        bld.row(RowKind::InventoryUse { t, k }, coeffs, Sense::Eq, 0.0);
    }
    let other = (0..kk)
        .map(|k| {
            g.out_arcs(k)
                .iter()
                .filter(|&&a| g.arcs()[a].1 != k)
                .map(|&a| (s[a], 1.0))
                .collect()
        })
        .collect();
    bld.outflow.push(Some(Outflow {
        own: demand.to_vec(),
        carried: carried.map(|(c, cap)| (c.to_vec(), cap.to_vec())),
        other,
    }));
    vars.y.push(y);
    vars.x.push(x);
    vars.s.push(s);
    vars.i.push(i);
    vars.v.push(v);
}

/// Valid inequalities tying setups to the demand they can serve. For a
/// product, a window `t..=l` and a set `S ⊆ [t, l)` containing `t`:
///
/// `Σ_{u∈S} x[u] ≤ Σ_{u∈S} own(u+1..l)·y[u] + Σ_{q=t+1..l} (carried + other)[q] + i[l]`.
///
/// If `u*` is the first period of `S` with a setup, everything produced
/// from `u*` on leaves through periods `u*+1..l` or is still held in `l`,
/// and own-class outflow per period is bounded by `own`. A window that
/// meets carried backlog gets a second row with the backlog bound folded
/// into `own` instead. Horizons above [`FULL_COVER_HORIZON`] only get the
/// singleton sets.
fn lead_cover_rows(bld: &mut Builder, vars: &VarMap, products: usize, horizon: usize) {
    for k in 0..products {
        for l in 1..horizon {
            for t in 0..l {
                let flows: Vec<&Outflow> = (t + 1..=l)
                    .map(|q| bld.outflow[q].as_ref().expect("future periods record outflow"))
                    .collect();
                let meets_backlog = flows.iter().any(|f| f.carried.is_some());
                let mut variants = vec![false];
                if meets_backlog {
                    variants.push(true);
                }
                let mut rows = Vec::new();
                for folded in variants {
                    let mut slack: Vec<(usize, f64)> = vec![(vars.i[l][k], 1.0)];
                    // own[q - t - 1] is the own-class bound of period q.
                    let mut own: Vec<f64> = Vec::with_capacity(flows.len());
                    for flow in &flows {
                        let mut o = flow.own[k];
                        if let Some((c, cap)) = &flow.carried {
                            if folded {
                                o += cap[k];
                            } else {
                                slack.push((c[k], 1.0));
                            }
                        }
                        own.push(o);
                        slack.extend(flow.other[k].iter().copied());
                    }
                    let own_until_l = |u: usize| -> f64 { own[u - t..].iter().sum() };
                    let free = l - t - 1;
                    let masks = if horizon <= FULL_COVER_HORIZON { 1u32 << free } else { 1 };
                    for mask in 0..masks {
                        let set = std::iter::once(t)
                            .chain((0..free).filter(|b| mask >> b & 1 == 1).map(|b| t + 1 + b));
                        let mut coeffs: Vec<(usize, f64)> = Vec::new();
                        for u in set {
                            coeffs.push((vars.x[u][k], 1.0));
                            coeffs.push((vars.y[u][k], -own_until_l(u)));
                        }
                        coeffs.extend(slack.iter().map(|&(j, a)| (j, -a)));
                        rows.push((RowKind::LeadCover { t, l, k, set: mask, folded }, coeffs));
                    }
                }
                for (kind, coeffs) in rows {
                    bld.row(kind, coeffs, Sense::Le, 0.0);
                }
            }
        }
    }
}

/// Largest possible current backlog per product.
fn carry_cap(d_hat1: &[f64], backlog: &[f64]) -> Vec<f64> {
    d_hat1.iter().zip(backlog).map(|(d, b)| d + b).collect()
}

/// Deterministic look-ahead model. `d_bar[t - 1]` is the demand estimate for
/// period `t = 1..T`; `k_hat[k]` forbids current backlog of product `k`.
pub fn build_deterministic(
    inst: &Instance,
    state: &SystemState,
    d_hat1: &[f64],
    d_bar: &[Vec<f64>],
    k_hat: &[bool],
) -> BuiltModel {
    let kk = inst.products;
    let mut bld = Builder::new();
    let mut vars = VarMap::default();
    current_period(&mut bld, inst, state, d_hat1, k_hat, &mut vars);
    for t in 1..inst.horizon {
        let carried = (t == 1).then(|| vars.b[0].clone());
        let cap = carry_cap(d_hat1, &state.b);
        let carried = carried.as_deref().map(|c| (c, cap.as_slice()));
        future_period(&mut bld, inst, t, &d_bar[t - 1], carried, &mut vars);
    }
    for t in 0..inst.horizon {
        stock_rows(&mut bld, t, &vars, kk);
    }
    let m = big_m_deterministic(inst, state, d_hat1, d_bar);
    setup_rows(&mut bld, &vars, &m, kk);
    lead_cover_rows(&mut bld, &vars, kk, inst.horizon);
    bld.finish(vars)
}

/// Shared part of both chance-constrained models. Returns the builder with
/// the scenario recourse, the averaging rows, the indicators and the
/// cardinality row in place.
fn cc_common(
    inst: &Instance,
    state: &SystemState,
    d_hat1: &[f64],
    scen: &ScenarioSet,
    d_bar_tail: &[Vec<f64>],
    k_hat: &[bool],
) -> (Builder, VarMap) {
    let kk = inst.products;
    let g = &inst.graph;
    let n_scen = scen.len();
    let weight = 1.0 / n_scen as f64;
    let mut bld = Builder::new();
    let mut vars = VarMap::default();
    current_period(&mut bld, inst, state, d_hat1, k_hat, &mut vars);

    // Period 1: averaged inventory and backlog, per-scenario recourse.
    let y = (0..kk).map(|k| bld.binary(inst.c_setup[1][k])).collect();
    let x = bld.vars((0..kk).map(|k| inst.c_prod[1][k]));
    let i = bld.vars((0..kk).map(|k| inst.c_hold[1][k]));
    let b = bld.vars((0..kk).map(|k| inst.c_back2[k]));
    let v = bld.vars((0..kk).map(|_| 0.0));
    vars.y.push(y);
    vars.x.push(x);
    vars.s.push(Vec::new());
    vars.i.push(i);
    vars.b.push(b);
    vars.v.push(v);
    // Outflow entry for period 1 is filled once the scenario copies exist.
    bld.outflow.push(None);
    let mean_demand: Vec<f64> = (0..kk)
        .map(|k| scen.demands.iter().map(|d| d[k]).sum::<f64>() * weight)
        .collect();
    let cap0 = carry_cap(d_hat1, &state.b);
    // Each scenario backlog is at most that scenario's demand plus b[0].
    let cap1: Vec<f64> = mean_demand.iter().zip(&cap0).map(|(m, c)| m + c).collect();
    for t in 2..inst.horizon {
        let carried = (t == 2).then(|| vars.b[1].clone());
        let carried = carried.as_deref().map(|c| (c, cap1.as_slice()));
        future_period(&mut bld, inst, t, &d_bar_tail[t - 2], carried, &mut vars);
    }
    for _ in 0..n_scen {
        let s = bld.vars((0..g.num_arcs()).map(|a| weight * inst.c_sub[1][a]));
        let i = bld.vars((0..kk).map(|_| 0.0));
        let b = bld.vars((0..kk).map(|_| 0.0));
        vars.s_scen.push(s);
        vars.i_scen.push(i);
        vars.b_scen.push(b);
    }
    vars.z = (0..n_scen).map(|_| bld.binary(0.0)).collect();
    let other = (0..kk)
        .map(|k| {
            let offdiag: Vec<usize> = g
                .out_arcs(k)
                .iter()
                .copied()
                .filter(|&a| g.arcs()[a].1 != k)
                .collect();
            vars.s_scen
                .iter()
                .flat_map(|s| offdiag.iter().map(move |&a| (s[a], weight)))
                .collect()
        })
        .collect();
    bld.outflow[1] = Some(Outflow {
        own: mean_demand,
        carried: Some((vars.b[0].clone(), cap0)),
        other,
    });

    for t in 0..inst.horizon {
        stock_rows(&mut bld, t, &vars, kk);
    }
    let m = big_m_cc(inst, state, d_hat1, scen, d_bar_tail);
    setup_rows(&mut bld, &vars, &m, kk);
    for w in 0..n_scen {
        for k in 0..kk {
            let mut coeffs: Vec<(usize, f64)> = g
                .in_arcs(k)
                .iter()
                .map(|&a| (vars.s_scen[w][a], 1.0))
                .collect();
            coeffs.push((vars.b_scen[w][k], 1.0));
            coeffs.push((vars.b[0][k], -1.0));
            bld.row(
                RowKind::ScenarioBalance { w, k },
                coeffs,
                Sense::Eq,
                scen.demands[w][k],
            );
        }
        for k in 0..kk {
            let mut coeffs: Vec<(usize, f64)> = g
                .out_arcs(k)
                .iter()
                .map(|&a| (vars.s_scen[w][a], 1.0))
                .collect();
            coeffs.push((vars.i_scen[w][k], 1.0));
            coeffs.push((vars.v[0][k], -1.0));
            bld.row(RowKind::ScenarioInventory { w, k }, coeffs, Sense::Eq, 0.0);
        }
    }
    for k in 0..kk {
        let mut coeffs = vec![(vars.i[1][k], 1.0)];
        coeffs.extend((0..n_scen).map(|w| (vars.i_scen[w][k], -weight)));
        bld.row(RowKind::AverageInventory { k }, coeffs, Sense::Eq, 0.0);
    }
    for k in 0..kk {
        let mut coeffs = vec![(vars.b[1][k], 1.0)];
        coeffs.extend((0..n_scen).map(|w| (vars.b_scen[w][k], -weight)));
        bld.row(RowKind::AverageBacklog { k }, coeffs, Sense::Eq, 0.0);
    }
    let p = cardinality_rhs(inst.alpha, n_scen);
    bld.row(
        RowKind::Cardinality,
        vars.z.iter().map(|&j| (j, 1.0)).collect(),
        Sense::Le,
        p as f64,
    );
    lead_cover_rows(&mut bld, &vars, kk, inst.horizon);
    (bld, vars)
}

/// Chance-constrained model with the coverage condition written out per
/// scenario through `b_child`/`s_child` and big-M indicator rows.
pub fn build_cc_extensive(
    inst: &Instance,
    state: &SystemState,
    d_hat1: &[f64],
    scen: &ScenarioSet,
    d_bar_tail: &[Vec<f64>],
    k_hat: &[bool],
) -> BuiltModel {
    let (mut bld, mut vars) = cc_common(inst, state, d_hat1, scen, d_bar_tail, k_hat);
    let kk = inst.products;
    let g = &inst.graph;
    let m_child = big_m_child(inst, state, d_hat1, scen);
    for _ in 0..scen.len() {
        let b = bld.vars((0..kk).map(|_| 0.0));
        let s = bld.vars((0..g.num_arcs()).map(|_| 0.0));
        vars.b_child.push(b);
        vars.s_child.push(s);
    }
    for w in 0..scen.len() {
        for k in 0..kk {
            let mut coeffs: Vec<(usize, f64)> = g
                .in_arcs(k)
                .iter()
                .map(|&a| (vars.s_child[w][a], 1.0))
                .collect();
            coeffs.push((vars.b_child[w][k], 1.0));
            coeffs.push((vars.b[0][k], -1.0));
            bld.row(
                RowKind::ChildBalance { w, k },
                coeffs,
                Sense::Eq,
                scen.demands[w][k],
            );
        }
        for k in 0..kk {
            let mut coeffs: Vec<(usize, f64)> = g
                .out_arcs(k)
                .iter()
                .map(|&a| (vars.s_child[w][a], 1.0))
                .collect();
            coeffs.push((vars.v[0][k], -1.0));
            bld.row(RowKind::ChildInventory { w, k }, coeffs, Sense::Le, 0.0);
        }
        for k in 0..kk {
            bld.row(
                RowKind::ChildIndicator { w, k },
                vec![(vars.b_child[w][k], 1.0), (vars.z[w], -m_child[w][k])],
                Sense::Le,
                0.0,
            );
        }
    }
    bld.finish(vars)
}

/// Chance-constrained master problem: the coverage condition behind each
/// `z[w] = 0` must be supplied by a cut callback.
pub fn build_cc_master(
    inst: &Instance,
    state: &SystemState,
    d_hat1: &[f64],
    scen: &ScenarioSet,
    d_bar_tail: &[Vec<f64>],
    k_hat: &[bool],
) -> BuiltModel {
    let (bld, vars) = cc_common(inst, state, d_hat1, scen, d_bar_tail, k_hat);
    bld.finish(vars)
}
