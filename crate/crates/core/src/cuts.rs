//! Cuts enforcing the joint service-level constraint in the master problem.
//!
//! For a scenario demand `D`, the pair `(v, b)` of period-0 stock and
//! backlog can cover `D + b` without shortage iff the coverage LP
//!
//! ```text
//! min Σ w   s.t.  Σ_{j→k} S_jk + w_k = D_k + b_k   (π_k)
//!                 Σ_{k→j} S_kj       ≤ v_k         (β_k ≤ 0)
//! ```
//!
//! has value 0. Its dual feasible region does not depend on `D`, so one dual
//! vector yields the inequality `π·b + β·v ≤ −π·D^w` for every scenario at
//! once. Sorting those right-hand sides gives the mixing inequalities that
//! [`separate_mixing`] separates exactly.

use std::collections::HashMap;

use log::trace;

use crate::domain::{Instance, ScenarioSet, SubstitutionGraph};
use crate::lp::{solve_lp, LpModel, LpStatus, Sense};
use crate::milp::{Candidate, CandidateKind, Cut, CutCallback};
use crate::models::VarMap;

/// A coverage value at or below this counts as "no shortage".
pub const MEMBER_TOL: f64 = 1e-6;
pub const VIOLATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct DualRay {
    pub pi: Vec<f64>,
    pub beta: Vec<f64>,
}

impl DualRay {
    /// Checks the reduced costs of the `w` and `S` columns.
    pub fn is_dual_feasible(&self, graph: &SubstitutionGraph, tol: f64) -> bool {
        self.pi.iter().all(|&p| p <= 1.0 + tol)
            && self.beta.iter().all(|&b| b <= tol)
            && graph
                .arcs()
                .iter()
                .all(|&(k, j)| self.pi[j] + self.beta[k] <= tol)
    }

    /// Dual objective at `(v, b, d)`.
    pub fn value(&self, v: &[f64], b: &[f64], d: &[f64]) -> f64 {
        (0..self.pi.len())
            .map(|k| self.pi[k] * (d[k] + b[k]) + self.beta[k] * v[k])
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Membership {
    pub value: f64,
    pub duals: DualRay,
    pub is_member: bool,
}

/// Solves the coverage LP for `(v1, b1)` against demand `d`.
pub fn q_membership(inst: &Instance, v1: &[f64], b1: &[f64], d: &[f64]) -> Membership {
    let g = &inst.graph;
    let kk = inst.products;
    let mut lp = LpModel::new(0);
    let s: Vec<usize> = (0..g.num_arcs())
        .map(|_| lp.add_var(0.0, 0.0, f64::INFINITY))
        .collect();
    let w: Vec<usize> = (0..kk).map(|_| lp.add_var(1.0, 0.0, f64::INFINITY)).collect();
    for k in 0..kk {
        let mut coeffs: Vec<(usize, f64)> = g.in_arcs(k).iter().map(|&a| (s[a], 1.0)).collect();
        coeffs.push((w[k], 1.0));
        lp.add_row(coeffs, Sense::Eq, d[k] + b1[k]);
    }
    for k in 0..kk {
        let coeffs = g.out_arcs(k).iter().map(|&a| (s[a], 1.0)).collect();
        // Tiny negative stock from solver noise would make the LP infeasible.
        lp.add_row(coeffs, Sense::Le, v1[k].max(0.0));
    }
    let sol = solve_lp(&lp).expect("coverage LP is well formed");
    assert_eq!(
        sol.status,
        LpStatus::Optimal,
        "coverage LP is always feasible and bounded"
    );
    let duals = DualRay {
        pi: sol.duals[..kk].to_vec(),
        beta: sol.duals[kk..].iter().map(|&b| b.min(0.0)).collect(),
    };
    let value = sol.objective.max(0.0);
    Membership {
        value,
        is_member: value <= MEMBER_TOL,
        duals,
    }
}

/// `h[w] = π · D^w`.
pub fn compute_h(duals: &DualRay, scen: &ScenarioSet) -> Vec<f64> {
    scen.demands
        .iter()
        .map(|d| duals.pi.iter().zip(d).map(|(p, x)| p * x).sum())
        .collect()
}

/// Scenario bounds sorted in descending order together with the number `p`
/// of scenarios allowed to go uncovered.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingFamily {
    pub h: Vec<f64>,
    pub sigma: Vec<usize>,
    pub p: usize,
}

impl MixingFamily {
    /// Ties in `h` are ordered by scenario index.
    pub fn new(h: Vec<f64>, p: usize) -> Self {
        assert!(p < h.len(), "need p < number of scenarios");
        let mut sigma: Vec<usize> = (0..h.len()).collect();
        sigma.sort_by(|&a, &b| h[b].total_cmp(&h[a]).then(a.cmp(&b)));
        Self { h, sigma, p }
    }

    /// `h` of the `(p + 1)`-th largest scenario.
    pub fn floor_value(&self) -> f64 {
        self.h[self.sigma[self.p]]
    }
}

/// `Σ β v + Σ π b − Σ_i coef_i z_{t_i} ≤ rhs` in scenario space.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingCut {
    /// Chosen scenarios in descending `h` order.
    pub t: Vec<usize>,
    /// `(scenario, h_{t_i} − h_{t_{i+1}})`.
    pub z_coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
    pub violation: f64,
}

impl MixingCut {
    pub fn evaluate(&self, duals: &DualRay, v: &[f64], b: &[f64], z: &[f64]) -> f64 {
        let lhs: f64 = (0..duals.pi.len())
            .map(|k| duals.beta[k] * v[k] + duals.pi[k] * b[k])
            .sum::<f64>()
            - self.z_coeffs.iter().map(|&(w, c)| c * z[w]).sum::<f64>();
        lhs - self.rhs
    }
}

/// Builds the mixing inequality for scenario set `t` (any order).
pub fn mixing_cut_for(fam: &MixingFamily, mut t: Vec<usize>) -> MixingCut {
    t.sort_by(|&a, &b| fam.h[b].total_cmp(&fam.h[a]).then(a.cmp(&b)));
    let floor = fam.floor_value();
    let mut z_coeffs = Vec::with_capacity(t.len());
    for (idx, &w) in t.iter().enumerate() {
        let next = t.get(idx + 1).map_or(floor, |&n| fam.h[n]);
        z_coeffs.push((w, fam.h[w] - next));
    }
    let rhs = -t.first().map_or(floor, |&w| fam.h[w]);
    MixingCut {
        t,
        z_coeffs,
        rhs,
        violation: 0.0,
    }
}

/// Most violated mixing inequality at `(z_hat, v_hat, b_hat)`, or `None`
/// if no inequality is violated by more than [`VIOLATION_TOL`].
pub fn separate_mixing(
    fam: &MixingFamily,
    duals: &DualRay,
    z_hat: &[f64],
    v_hat: &[f64],
    b_hat: &[f64],
) -> Option<MixingCut> {
    let top = &fam.sigma[..fam.p];
    let mut order: Vec<usize> = top.to_vec();
    order.sort_by(|&a, &b| {
        z_hat[a]
            .total_cmp(&z_hat[b])
            .then(fam.h[b].total_cmp(&fam.h[a]))
            .then(a.cmp(&b))
    });
    let h_max = fam.h[fam.sigma[0]];
    let mut level = fam.floor_value();
    let mut chosen = Vec::new();
    for w in order {
        if level >= h_max {
            break;
        }
        if fam.h[w] > level {
            chosen.push(w);
            level = fam.h[w];
        }
    }
    let mut cut = mixing_cut_for(fam, chosen);
    cut.violation = cut.evaluate(duals, v_hat, b_hat, z_hat);
    (cut.violation > VIOLATION_TOL).then_some(cut)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutLogEntry {
    pub node: usize,
    pub scenario: usize,
    pub violation: f64,
    pub t_size: usize,
}

/// Cut callback for a master problem built by
/// [`crate::models::build_cc_master`].
pub struct ChanceCutSeparator<'a> {
    inst: &'a Instance,
    scen: &'a ScenarioSet,
    v_idx: Vec<usize>,
    b_idx: Vec<usize>,
    z_idx: Vec<usize>,
    p: usize,
    families: HashMap<Vec<i64>, MixingFamily>,
    pub log: Option<Vec<CutLogEntry>>,
    pub lp_solves: usize,
}

impl<'a> ChanceCutSeparator<'a> {
    pub fn new(inst: &'a Instance, scen: &'a ScenarioSet, vars: &VarMap) -> Self {
        Self {
            inst,
            scen,
            v_idx: vars.v[0].clone(),
            b_idx: vars.b[0].clone(),
            z_idx: vars.z.clone(),
            p: crate::models::cardinality_rhs(inst.alpha, scen.len()),
            families: HashMap::new(),
            log: None,
            lp_solves: 0,
        }
    }

    pub fn with_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    fn family(&mut self, duals: &DualRay) -> &MixingFamily {
        let key: Vec<i64> = duals
            .pi
            .iter()
            .chain(&duals.beta)
            .map(|v| (v / 1e-9).round() as i64)
            .collect();
        let (scen, p) = (self.scen, self.p);
        self.families
            .entry(key)
            .or_insert_with(|| MixingFamily::new(compute_h(duals, scen), p))
    }

    fn to_cut(&self, duals: &DualRay, mc: &MixingCut) -> Cut {
        let mut coeffs = Vec::with_capacity(2 * self.v_idx.len() + mc.z_coeffs.len());
        for k in 0..self.v_idx.len() {
            if duals.beta[k] != 0.0 {
                coeffs.push((self.v_idx[k], duals.beta[k]));
            }
            if duals.pi[k] != 0.0 {
                coeffs.push((self.b_idx[k], duals.pi[k]));
            }
        }
        for &(w, c) in &mc.z_coeffs {
            if c != 0.0 {
                coeffs.push((self.z_idx[w], -c));
            }
        }
        Cut {
            coeffs,
            rhs: mc.rhs,
        }
    }
}

impl CutCallback for ChanceCutSeparator<'_> {
    fn cuts(&mut self, cand: &Candidate<'_>) -> Vec<Cut> {
        let x = cand.x;
        let v_hat: Vec<f64> = self.v_idx.iter().map(|&j| x[j]).collect();
        let b_hat: Vec<f64> = self.b_idx.iter().map(|&j| x[j].max(0.0)).collect();
        let z_hat: Vec<f64> = self.z_idx.iter().map(|&j| x[j].clamp(0.0, 1.0)).collect();
        let mut out = Vec::new();
        for w in 0..self.scen.len() {
            let open = match cand.kind {
                CandidateKind::Fractional => z_hat[w] < 1.0 - 1e-6,
                CandidateKind::Integer => z_hat[w] < 0.5,
            };
            if !open {
                continue;
            }
            self.lp_solves += 1;
            let mem = q_membership(self.inst, &v_hat, &b_hat, &self.scen.demands[w]);
            if mem.is_member {
                continue;
            }
            let fam = self.family(&mem.duals).clone();
            if let Some(mc) = separate_mixing(&fam, &mem.duals, &z_hat, &v_hat, &b_hat) {
                trace!(
                    "node {} scenario {w}: coverage gap {:.3e}, cut violation {:.3e}, |T| = {}",
                    cand.node,
                    mem.value,
                    mc.violation,
                    mc.t.len()
                );
                if let Some(log) = self.log.as_mut() {
                    log.push(CutLogEntry {
                        node: cand.node,
                        scenario: w,
                        violation: mc.violation,
                        t_size: mc.t.len(),
                    });
                }
                out.push(self.to_cut(&mem.duals, &mc));
                if cand.kind == CandidateKind::Integer {
                    break;
                }
            }
        }
        out
    }
}
