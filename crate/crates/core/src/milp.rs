//! Best-bound branch-and-bound over binary variables with a lazy-cut hook.
//!
//! Relaxations are solved either by HiGHS (warm-started across nodes) or by
//! the dense simplex in [`crate::lp`]. The callback sees fractional root
//! solutions for a bounded number of rounds and every integer candidate
//! anywhere in the tree; an integer candidate becomes the incumbent only
//! once the callback has no violated cut left for it.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::num::NonZeroU32;
use std::time::{Duration, Instant};

use log::{debug, trace};
use thiserror::Error;

use crate::lp::{self, LpError, LpModel, LpStatus, Sense};

#[derive(Debug, Clone, PartialEq)]
pub struct MilpModel {
    pub lp: LpModel,
    pub binaries: Vec<usize>,
    /// Binaries branched on before any other fractional binary.
    pub branch_first: Vec<usize>,
    pub rounding: Rounding,
}

/// How the rounding heuristic turns a fractional point into binary fixings.
/// Binaries in `round_up` become 1 whenever positive; within each budget
/// group only the `k` largest positive values become 1; all remaining
/// binaries are rounded to the nearest value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Rounding {
    pub round_up: Vec<usize>,
    pub budgets: Vec<(Vec<usize>, usize)>,
}

impl MilpModel {
    pub fn new(lp: LpModel, binaries: Vec<usize>) -> Self {
        Self {
            lp,
            binaries,
            branch_first: Vec::new(),
            rounding: Rounding::default(),
        }
    }

    pub fn validate(&self) -> Result<(), MilpError> {
        self.lp.validate()?;
        let n = self.lp.n_vars();
        let mut seen = HashSet::new();
        for &j in &self.binaries {
            if j >= n || !seen.insert(j) {
                return Err(MilpError::BadBinary(j));
            }
            if self.lp.lower[j] < 0.0 || self.lp.upper[j] > 1.0 {
                return Err(MilpError::BadBinary(j));
            }
        }
        if let Some(&j) = self.branch_first.iter().find(|j| !seen.contains(j)) {
            return Err(MilpError::BadBinary(j));
        }
        Ok(())
    }
}

/// A lazily generated inequality `coeffs · x ≤ rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl Cut {
    pub fn violation(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum::<f64>() - self.rhs
    }

    fn key(&self) -> Vec<i64> {
        let grid = |v: f64| (v / 1e-9).round() as i64;
        let mut coeffs: Vec<(usize, f64)> = self.coeffs.iter().copied().filter(|c| c.1 != 0.0).collect();
        coeffs.sort_by_key(|c| c.0);
        let mut key = Vec::with_capacity(2 * coeffs.len() + 1);
        for (j, a) in coeffs {
            key.push(j as i64);
            key.push(grid(a));
        }
        key.push(grid(self.rhs));
        key
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateKind {
    /// Root relaxation optimum with some fractional binary.
    Fractional,
    /// Relaxation optimum with every binary integral.
    Integer,
}

#[derive(Debug, Clone, Copy)]
pub struct Candidate<'a> {
    pub x: &'a [f64],
    pub kind: CandidateKind,
    pub node: usize,
}

/// Separation hook. Returned cuts must be valid for every solution of the
/// full logical model.
pub trait CutCallback {
    fn cuts(&mut self, cand: &Candidate<'_>) -> Vec<Cut>;
}

impl<F> CutCallback for F
where
    F: FnMut(&Candidate<'_>) -> Vec<Cut>,
{
    fn cuts(&mut self, cand: &Candidate<'_>) -> Vec<Cut> {
        self(cand)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Highs,
    Dense,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpOptions {
    pub int_tol: f64,
    pub rel_gap: f64,
    pub root_cut_rounds: usize,
    pub violation_tol: f64,
    pub time_limit: Option<Duration>,
    /// Stop after processing this many nodes. Unlike the time limit this
    /// budget gives the same answer on every machine.
    pub node_limit: Option<usize>,
    pub backend: Backend,
}

impl Default for MilpOptions {
    fn default() -> Self {
        Self {
            int_tol: 1e-6,
            rel_gap: 1e-6,
            root_cut_rounds: 50,
            violation_tol: 1e-6,
            time_limit: None,
            node_limit: None,
            backend: Backend::Highs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    TimeLimit,
    NodeLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpResult {
    pub status: MilpStatus,
    pub x: Option<Vec<f64>>,
    /// Incumbent objective, `+∞` without one.
    pub objective: f64,
    pub bound: f64,
    pub gap: f64,
    pub nodes: usize,
    pub cuts_added: usize,
    pub lp_solves: usize,
    pub root_bound: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MilpError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("variable {0} cannot be binary")]
    BadBinary(usize),
    #[error("relaxation is unbounded")]
    Unbounded,
    #[error("relaxation solver failed: {0}")]
    Backend(String),
    #[error("node {0} exceeded the cut round limit without accepting or pruning")]
    CutLoop(usize),
}

enum Relaxed {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    TimeLimit,
}

trait Relaxation {
    fn set_bounds(&mut self, j: usize, lo: f64, hi: f64);
    fn add_cut(&mut self, cut: &Cut);
    fn solve(&mut self, time_left: Option<Duration>) -> Result<Relaxed, MilpError>;
}

struct DenseRelaxation {
    lp: LpModel,
}

impl Relaxation for DenseRelaxation {
    fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        self.lp.lower[j] = lo;
        self.lp.upper[j] = hi;
    }

    fn add_cut(&mut self, cut: &Cut) {
        self.lp.add_row(cut.coeffs.clone(), Sense::Le, cut.rhs);
    }

    fn solve(&mut self, _time_left: Option<Duration>) -> Result<Relaxed, MilpError> {
        let sol = lp::solve_lp(&self.lp)?;
        match sol.status {
            LpStatus::Optimal => Ok(Relaxed::Optimal {
                objective: sol.objective,
                x: sol.primal,
            }),
            LpStatus::Infeasible => Ok(Relaxed::Infeasible),
            LpStatus::Unbounded => Err(MilpError::Unbounded),
        }
    }
}

struct HighsRelaxation {
    model: Option<highs::Model>,
    cols: Vec<highs::Col>,
    objective: Vec<f64>,
    offset_free: bool,
    /// HiGHS measures its time limit against the run clock summed over
    /// every solve of the same model.
    spent: Duration,
}

fn finite_or(v: f64, inf: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        inf
    }
}

impl HighsRelaxation {
    fn new(lp: &LpModel) -> Self {
        let mut problem = highs::RowProblem::default();
        let cols: Vec<highs::Col> = (0..lp.n_vars())
            .map(|j| {
                problem.add_column(
                    lp.objective[j],
                    finite_or(lp.lower[j], f64::NEG_INFINITY)..=finite_or(lp.upper[j], f64::INFINITY),
                )
            })
            .collect();
        for row in &lp.rows {
            let factors: Vec<(highs::Col, f64)> = row.coeffs.iter().map(|&(j, a)| (cols[j], a)).collect();
            match row.sense {
                Sense::Le => problem.add_row(..=row.rhs, factors),
                Sense::Ge => problem.add_row(row.rhs.., factors),
                Sense::Eq => problem.add_row(row.rhs..=row.rhs, factors),
            };
        }
        let mut model = highs::Model::new(problem);
        model.make_quiet();
        model.set_sense(highs::Sense::Minimise);
        model.set_option("presolve", "off");
        model.set_option("random_seed", 0);
        model.set_threads(NonZeroU32::new(1).expect("nonzero"));
        Self {
            model: Some(model),
            cols,
            objective: lp.objective.clone(),
            offset_free: lp.n_vars() == 0,
            spent: Duration::ZERO,
        }
    }
}

impl Relaxation for HighsRelaxation {
    fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        if let Some(m) = self.model.as_mut() {
            m.change_column_bounds(self.cols[j], lo..=hi);
        }
    }

    fn add_cut(&mut self, cut: &Cut) {
        if let Some(m) = self.model.as_mut() {
            let factors: Vec<(highs::Col, f64)> = cut.coeffs.iter().map(|&(j, a)| (self.cols[j], a)).collect();
            m.add_row(..=cut.rhs, factors);
        }
    }

    fn solve(&mut self, time_left: Option<Duration>) -> Result<Relaxed, MilpError> {
        if self.offset_free {
            return Ok(Relaxed::Optimal {
                x: Vec::new(),
                objective: 0.0,
            });
        }
        let mut model = self.model.take().expect("model present between solves");
        let limit = time_left.map_or(f64::INFINITY, |d| (self.spent + d).as_secs_f64().max(1e-3));
        model.set_option("time_limit", limit);
        let started = Instant::now();
        let solved = model
            .try_solve()
            .map_err(|e| MilpError::Backend(format!("{e:?}")))?;
        self.spent += started.elapsed();
        let status = solved.status();
        let out = match status {
            highs::HighsModelStatus::Optimal => {
                let x = solved.get_solution().columns().to_vec();
                let objective = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
                Relaxed::Optimal { x, objective }
            }
            highs::HighsModelStatus::Infeasible => Relaxed::Infeasible,
            highs::HighsModelStatus::ReachedTimeLimit => Relaxed::TimeLimit,
            highs::HighsModelStatus::Unbounded | highs::HighsModelStatus::UnboundedOrInfeasible => {
                return Err(MilpError::Unbounded)
            }
            other => return Err(MilpError::Backend(format!("{other:?}"))),
        };
        self.model = Some(highs::Model::from(solved));
        Ok(out)
    }
}

/// Run the rounding heuristic at the root and then every this many nodes.
const HEURISTIC_EVERY: usize = 20;

struct Node {
    id: usize,
    depth: usize,
    bound: f64,
    fixes: Vec<(usize, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // BinaryHeap pops the maximum: lowest bound, then deepest, then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.id.cmp(&self.id))
    }
}

/// Solves `model` to optimality (or until the time limit).
pub fn solve_milp(
    model: &MilpModel,
    cb: Option<&mut dyn CutCallback>,
    opts: &MilpOptions,
) -> Result<MilpResult, MilpError> {
    model.validate()?;
    let relax: Box<dyn Relaxation> = match opts.backend {
        Backend::Highs => Box::new(HighsRelaxation::new(&model.lp)),
        Backend::Dense => Box::new(DenseRelaxation { lp: model.lp.clone() }),
    };
    Search {
        model,
        cb,
        opts,
        relax,
        start: Instant::now(),
        applied: model
            .binaries
            .iter()
            .map(|&j| (model.lp.lower[j], model.lp.upper[j]))
            .collect(),
        pos_in_binaries: {
            let mut pos = vec![usize::MAX; model.lp.n_vars()];
            for (p, &j) in model.binaries.iter().enumerate() {
                pos[j] = p;
            }
            pos
        },
        seen_cuts: HashSet::new(),
        cuts_added: 0,
        lp_solves: 0,
    }
    .run()
}

struct Search<'a, 'c> {
    model: &'a MilpModel,
    cb: Option<&'c mut dyn CutCallback>,
    opts: &'a MilpOptions,
    relax: Box<dyn Relaxation>,
    start: Instant,
    applied: Vec<(f64, f64)>,
    pos_in_binaries: Vec<usize>,
    seen_cuts: HashSet<Vec<i64>>,
    cuts_added: usize,
    lp_solves: usize,
}

enum NodeOutcome {
    Pruned,
    Infeasible,
    Integer { x: Vec<f64>, objective: f64 },
    Branch {
        var: usize,
        value: f64,
        objective: f64,
        x: Vec<f64>,
    },
    TimeLimit,
}

impl Search<'_, '_> {
    fn time_left(&self) -> Option<Duration> {
        self.opts
            .time_limit
            .map(|limit| limit.saturating_sub(self.start.elapsed()))
    }

    fn out_of_time(&self) -> bool {
        self.time_left().is_some_and(|d| d.is_zero())
    }

    fn apply(&mut self, fixes: &[(usize, f64)]) {
        let lp = &self.model.lp;
        let mut target: Vec<(f64, f64)> = self
            .model
            .binaries
            .iter()
            .map(|&j| (lp.lower[j], lp.upper[j]))
            .collect();
        for &(j, v) in fixes {
            target[self.pos_in_binaries[j]] = (v, v);
        }
        for (p, &j) in self.model.binaries.iter().enumerate() {
            if target[p] != self.applied[p] {
                self.relax.set_bounds(j, target[p].0, target[p].1);
                self.applied[p] = target[p];
            }
        }
    }

    /// Adds the new violated cuts among `cuts`; returns how many were added.
    fn add_cuts(&mut self, cuts: Vec<Cut>, x: &[f64]) -> usize {
        let mut added = 0;
        for cut in cuts {
            if cut.violation(x) <= self.opts.violation_tol {
                continue;
            }
            if !self.seen_cuts.insert(cut.key()) {
                continue;
            }
            self.relax.add_cut(&cut);
            added += 1;
        }
        self.cuts_added += added;
        added
    }

    /// Rounds the binaries of `x`, fixes them and solves the remaining LP,
    /// letting the callback reject the result as usual.
    fn round_and_fix(&mut self, x: &[f64], incumbent: f64) -> Result<Option<(Vec<f64>, f64)>, MilpError> {
        let tol = self.opts.int_tol;
        let mut value: Vec<Option<f64>> = vec![None; self.model.lp.n_vars()];
        let rounding = &self.model.rounding;
        for &j in &rounding.round_up {
            value[j] = Some(if x[j] > tol { 1.0 } else { 0.0 });
        }
        for (group, k) in &rounding.budgets {
            let mut ranked: Vec<usize> = group.iter().copied().filter(|&j| x[j] > tol).collect();
            ranked.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
            for &j in group {
                value[j] = Some(0.0);
            }
            for &j in ranked.iter().take(*k) {
                value[j] = Some(1.0);
            }
        }
        let fixes: Vec<(usize, f64)> = self
            .model
            .binaries
            .iter()
            .map(|&j| (j, value[j].unwrap_or(x[j].round())))
            .collect();
        self.apply(&fixes);
        for _ in 0..10_000 {
            if self.out_of_time() {
                return Ok(None);
            }
            self.lp_solves += 1;
            let (hx, objective) = match self.relax.solve(self.time_left())? {
                Relaxed::Optimal { x, objective } => (x, objective),
                _ => return Ok(None),
            };
            if objective >= self.prune_level(incumbent) {
                return Ok(None);
            }
            let Some(cb) = self.cb.as_deref_mut() else {
                return Ok(Some((hx, objective)));
            };
            let cuts = cb.cuts(&Candidate {
                x: &hx,
                kind: CandidateKind::Integer,
                node: usize::MAX,
            });
            if self.add_cuts(cuts, &hx) == 0 {
                return Ok(Some((hx, objective)));
            }
        }
        Ok(None)
    }

    /// Fractional binary fixed next while diving: the one closest to
    /// integrality, `branch_first` before the rest.
    fn dive_choice(&self, x: &[f64], fixed: &[bool]) -> Option<(usize, f64)> {
        let tol = self.opts.int_tol;
        for pass in [&self.model.branch_first, &self.model.binaries] {
            let mut best: Option<(usize, f64)> = None;
            let mut best_dist = f64::INFINITY;
            for &j in pass {
                let f = x[j] - x[j].floor();
                if fixed[j] || f <= tol || f >= 1.0 - tol {
                    continue;
                }
                let dist = f.min(1.0 - f);
                if dist < best_dist {
                    best_dist = dist;
                    best = Some((j, x[j].round()));
                }
            }
            if best.is_some() {
                return best;
            }
        }
        None
    }

    /// Repeatedly fixes one fractional binary at its rounded value and
    /// re-solves until the relaxation is integral and accepted by the
    /// callback, or turns infeasible or worse than `incumbent`.
    fn dive(
        &mut self,
        base: &[(usize, f64)],
        x: &[f64],
        objective: f64,
        incumbent: f64,
    ) -> Result<Option<(Vec<f64>, f64)>, MilpError> {
        let mut fixes = base.to_vec();
        let mut fixed = vec![false; self.model.lp.n_vars()];
        for &(j, _) in base {
            fixed[j] = true;
        }
        let (mut x, mut objective) = (x.to_vec(), objective);
        // A fix is flipped once when it makes the relaxation infeasible.
        let mut flipped = false;
        for _ in 0..4 * self.model.binaries.len() + 16 {
            if self.out_of_time() {
                return Ok(None);
            }
            match self.dive_choice(&x, &fixed) {
                Some((j, v)) => {
                    fixes.push((j, v));
                    fixed[j] = true;
                    flipped = false;
                    self.apply(&fixes);
                }
                None => {
                    let Some(cb) = self.cb.as_deref_mut() else {
                        return Ok(Some((x, objective)));
                    };
                    let cuts = cb.cuts(&Candidate {
                        x: &x,
                        kind: CandidateKind::Integer,
                        node: usize::MAX,
                    });
                    if self.add_cuts(cuts, &x) == 0 {
                        return Ok(Some((x, objective)));
                    }
                }
            }
            loop {
                self.lp_solves += 1;
                match self.relax.solve(self.time_left())? {
                    Relaxed::Optimal { x: nx, objective: nobj } => {
                        if nobj >= self.prune_level(incumbent) {
                            return Ok(None);
                        }
                        x = nx;
                        objective = nobj;
                        break;
                    }
                    _ if !flipped && fixes.len() > base.len() => {
                        let last = fixes.last_mut().expect("dive fix");
                        last.1 = 1.0 - last.1;
                        flipped = true;
                        self.apply(&fixes);
                    }
                    _ => return Ok(None),
                }
            }
        }
        Ok(None)
    }

    /// Branching variable among the fractional binaries, looking at
    /// `branch_first` before the rest.
    fn select_branch(&self, x: &[f64]) -> Option<(usize, f64)> {
        let tol = self.opts.int_tol;
        for pass in [&self.model.branch_first, &self.model.binaries] {
            let mut best: Option<(usize, f64)> = None;
            let mut best_score = f64::NEG_INFINITY;
            for &j in pass {
                let f = x[j] - x[j].floor();
                if f <= tol || f >= 1.0 - tol {
                    continue;
                }
                let score = -(f - 0.5).abs();
                if score > best_score {
                    best_score = score;
                    best = Some((j, x[j]));
                }
            }
            if best.is_some() {
                return best;
            }
        }
        None
    }

    fn prune_level(&self, incumbent: f64) -> f64 {
        incumbent - self.opts.rel_gap * incumbent.abs().max(1.0)
    }

    fn process(&mut self, node: &Node, incumbent: f64) -> Result<NodeOutcome, MilpError> {
        self.apply(&node.fixes);
        let mut root_rounds = 0;
        let mut rounds = 0;
        loop {
            rounds += 1;
            if rounds > 10_000 {
                return Err(MilpError::CutLoop(node.id));
            }
            if self.out_of_time() {
                return Ok(NodeOutcome::TimeLimit);
            }
            self.lp_solves += 1;
            let (x, objective) = match self.relax.solve(self.time_left())? {
                Relaxed::Optimal { x, objective } => (x, objective),
                Relaxed::Infeasible => return Ok(NodeOutcome::Infeasible),
                Relaxed::TimeLimit => return Ok(NodeOutcome::TimeLimit),
            };
            if objective >= self.prune_level(incumbent) {
                return Ok(NodeOutcome::Pruned);
            }
            let branch = self.select_branch(&x);
            let kind = if branch.is_some() {
                CandidateKind::Fractional
            } else {
                CandidateKind::Integer
            };
            let ask = match kind {
                CandidateKind::Fractional => node.id == 0 && root_rounds < self.opts.root_cut_rounds,
                CandidateKind::Integer => true,
            };
            if ask {
                if let Some(cb) = self.cb.as_deref_mut() {
                    let cuts = cb.cuts(&Candidate {
                        x: &x,
                        kind,
                        node: node.id,
                    });
                    let added = self.add_cuts(cuts, &x);
                    trace!("node {} {:?}: {} cuts added", node.id, kind, added);
                    if kind == CandidateKind::Fractional {
                        root_rounds += 1;
                    }
                    if added > 0 {
                        continue;
                    }
                }
            }
            return Ok(match branch {
                Some((var, value)) => NodeOutcome::Branch {
                    var,
                    value,
                    objective,
                    x,
                },
                None => NodeOutcome::Integer { x, objective },
            });
        }
    }

    fn run(mut self) -> Result<MilpResult, MilpError> {
        let mut heap = BinaryHeap::new();
        heap.push(Node {
            id: 0,
            depth: 0,
            bound: f64::NEG_INFINITY,
            fixes: Vec::new(),
        });
        let mut next_id = 1;
        let mut incumbent = f64::INFINITY;
        let mut best_x: Option<Vec<f64>> = None;
        let mut nodes = 0;
        let mut root_bound = f64::NEG_INFINITY;
        let mut timed_out = false;
        let mut node_capped = false;
        // Bound of the node being processed, kept for the time-limit report.
        let mut open_bound = f64::INFINITY;

        while let Some(node) = heap.pop() {
            if node.bound >= self.prune_level(incumbent) {
                continue;
            }
            if self.opts.node_limit.is_some_and(|cap| nodes >= cap) {
                heap.push(node);
                node_capped = true;
                break;
            }
            nodes += 1;
            let outcome = self.process(&node, incumbent)?;
            match outcome {
                NodeOutcome::TimeLimit => {
                    open_bound = node.bound;
                    timed_out = true;
                    break;
                }
                NodeOutcome::Pruned | NodeOutcome::Infeasible => {}
                NodeOutcome::Integer { x, objective } => {
                    if node.id == 0 {
                        root_bound = objective;
                    }
                    if objective < incumbent {
                        debug!("node {}: incumbent {objective}", node.id);
                        incumbent = objective;
                        best_x = Some(x);
                    }
                }
                NodeOutcome::Branch {
                    var,
                    value,
                    objective,
                    x,
                } => {
                    if node.id == 0 {
                        root_bound = objective;
                    }
                    if node.id == 0 || nodes % HEURISTIC_EVERY == 0 {
                        match self.round_and_fix(&x, incumbent)? {
                            Some((hx, hobj)) if hobj < incumbent => {
                                debug!("node {}: rounding found {hobj}", node.id);
                                incumbent = hobj;
                                best_x = Some(hx);
                            }
                            _ => {}
                        }
                        match self.dive(&node.fixes, &x, objective, incumbent)? {
                            Some((hx, hobj)) if hobj < incumbent => {
                                debug!("node {}: diving found {hobj}", node.id);
                                incumbent = hobj;
                                best_x = Some(hx);
                            }
                            _ => {}
                        }
                        if self.out_of_time() {
                            open_bound = objective;
                            timed_out = true;
                            break;
                        }
                    }
                    trace!("node {}: branch on {var} = {value}", node.id);
                    for v in [0.0, 1.0] {
                        let mut fixes = node.fixes.clone();
                        fixes.push((var, v));
                        heap.push(Node {
                            id: next_id,
                            depth: node.depth + 1,
                            bound: objective,
                            fixes,
                        });
                        next_id += 1;
                    }
                }
            }
        }

        let remaining = heap
            .iter()
            .filter(|n| n.bound < self.prune_level(incumbent))
            .map(|n| n.bound)
            .fold(open_bound, f64::min);
        let (status, bound) = if timed_out {
            (MilpStatus::TimeLimit, remaining.min(incumbent))
        } else if node_capped {
            (MilpStatus::NodeLimit, remaining.min(incumbent))
        } else if best_x.is_some() {
            (MilpStatus::Optimal, incumbent.min(remaining))
        } else {
            (MilpStatus::Infeasible, f64::INFINITY)
        };
        let gap = if best_x.is_some() && status == MilpStatus::Optimal {
            0.0
        } else if incumbent.is_finite() && bound.is_finite() {
            ((incumbent - bound) / incumbent.abs().max(1.0)).max(0.0)
        } else {
            f64::INFINITY
        };
        Ok(MilpResult {
            status,
            x: best_x,
            objective: incumbent,
            bound,
            gap,
            nodes,
            cuts_added: self.cuts_added,
            lp_solves: self.lp_solves,
            root_bound,
        })
    }
}
