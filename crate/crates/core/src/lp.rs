//! Dense two-phase tableau simplex with primal and dual solutions.
//!
//! Models are minimisation problems with sparse rows and per-variable
//! bounds. Finite bounds are folded into the constraint matrix, so the
//! solver is meant for small LPs (stock-out determination, the coverage LP
//! behind the chance-constraint cuts, test oracles).
//!
//! Dual sign convention: for a minimisation problem a `≤` row has a dual
//! `≤ 0`, a `≥` row a dual `≥ 0`, and `objective = Σ duals·rhs` plus the
//! contribution of active variable bounds.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn new(coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> Self {
        Self { coeffs, sense, rhs }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates the row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// Minimise `objective · x` subject to `rows` and `lower ≤ x ≤ upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpModel {
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpModel {
    /// `n_vars` variables with bounds `[0, ∞)` and zero cost.
    pub fn new(n_vars: usize) -> Self {
        Self {
            objective: vec![0.0; n_vars],
            rows: Vec::new(),
            lower: vec![0.0; n_vars],
            upper: vec![f64::INFINITY; n_vars],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    /// Appends a variable and returns its index.
    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> usize {
        self.rows.push(Row::new(coeffs, sense, rhs));
        self.rows.len() - 1
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest row or bound violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|r| r.violation(x));
        let bounds = (0..self.n_vars())
            .map(|j| (self.lower[j] - x[j]).max(x[j] - self.upper[j]).max(0.0));
        rows.chain(bounds).fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.n_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::Dimension(format!(
                "{} costs but {} lower and {} upper bounds",
                n,
                self.lower.len(),
                self.upper.len()
            )));
        }
        for j in 0..n {
            if !self.objective[j].is_finite() {
                return Err(LpError::NonFinite(format!("objective[{j}]")));
            }
            if self.lower[j].is_nan() || self.upper[j].is_nan() || self.lower[j] > self.upper[j] {
                return Err(LpError::InvalidBounds(j));
            }
            if self.lower[j] == f64::INFINITY || self.upper[j] == f64::NEG_INFINITY {
                return Err(LpError::InvalidBounds(j));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(LpError::NonFinite(format!("rhs of row {i}")));
            }
            for &(j, a) in &row.coeffs {
                if j >= n {
                    return Err(LpError::Dimension(format!(
                        "row {i} references variable {j} of {n}"
                    )));
                }
                if !a.is_finite() {
                    return Err(LpError::NonFinite(format!("row {i}, variable {j}")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid bounds on variable {0}")]
    InvalidBounds(usize),
    #[error("non-finite coefficient in {0}")]
    NonFinite(String),
    #[error("simplex iteration limit reached after {0} pivots")]
    IterationLimit(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    /// One entry per model row.
    pub duals: Vec<f64>,
    /// `c - Aᵀy` for every variable.
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpOptions {
    pub tol_feas: f64,
    pub tol_gap: f64,
    /// Rebuild the tableau from the original matrix after this many pivots.
    pub refactor_every: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            tol_feas: 1e-7,
            tol_gap: 1e-6,
            refactor_every: 50,
        }
    }
}

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;

pub fn solve_lp(model: &LpModel) -> Result<LpSolution, LpError> {
    solve_lp_with(model, &LpOptions::default())
}

#[derive(Clone, Copy)]
enum ColMap {
    /// x = lo + x'
    Shift { col: usize, lo: f64 },
    /// x = hi - x'
    Flip { col: usize, hi: f64 },
    /// x = x'⁺ - x'⁻
    Split { pos: usize, neg: usize },
}

struct Standard {
    a: Vec<f64>,
    rhs: Vec<f64>,
    m: usize,
    ncols: usize,
    cost: Vec<f64>,
    artificial: Vec<bool>,
    /// Column holding `e_i` for row `i` (slack or artificial).
    unit_col: Vec<usize>,
    negated: Vec<bool>,
    maps: Vec<ColMap>,
    obj_offset: f64,
}

fn standardise(model: &LpModel) -> Standard {
    let n = model.n_vars();
    let mut maps = Vec::with_capacity(n);
    let mut n_struct = 0;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        let (lo, hi) = (model.lower[j], model.upper[j]);
        if lo.is_finite() {
            maps.push(ColMap::Shift { col: n_struct, lo });
            if hi.is_finite() {
                bound_rows.push((n_struct, hi - lo));
            }
            n_struct += 1;
        } else if hi.is_finite() {
            maps.push(ColMap::Flip { col: n_struct, hi });
            n_struct += 1;
        } else {
            maps.push(ColMap::Split {
                pos: n_struct,
                neg: n_struct + 1,
            });
            n_struct += 2;
        }
    }

    // Dense rows over structural columns, then sign-normalised.
    let m_orig = model.rows.len();
    let m = m_orig + bound_rows.len();
    let mut rows: Vec<(Vec<f64>, Sense, f64)> = Vec::with_capacity(m);
    for row in &model.rows {
        let mut dense = vec![0.0; n_struct];
        let mut rhs = row.rhs;
        for &(j, a) in &row.coeffs {
            match maps[j] {
                ColMap::Shift { col, lo } => {
                    dense[col] += a;
                    rhs -= a * lo;
                }
                ColMap::Flip { col, hi } => {
                    dense[col] -= a;
                    rhs -= a * hi;
                }
                ColMap::Split { pos, neg } => {
                    dense[pos] += a;
                    dense[neg] -= a;
                }
            }
        }
        rows.push((dense, row.sense, rhs));
    }
    for &(col, width) in &bound_rows {
        let mut dense = vec![0.0; n_struct];
        dense[col] = 1.0;
        rows.push((dense, Sense::Le, width));
    }

    let mut negated = vec![false; m];
    for (i, (dense, sense, rhs)) in rows.iter_mut().enumerate() {
        if *rhs < 0.0 {
            negated[i] = true;
            *rhs = -*rhs;
            dense.iter_mut().for_each(|a| *a = -*a);
            *sense = match *sense {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
    }

    let n_slack = rows.iter().filter(|r| r.1 != Sense::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Sense::Le).count();
    let ncols = n_struct + n_slack + n_art;
    let mut a = vec![0.0; m * ncols];
    let mut rhs = vec![0.0; m];
    let mut artificial = vec![false; ncols];
    let mut unit_col = vec![0; m];
    let mut next_slack = n_struct;
    let mut next_art = n_struct + n_slack;
    for (i, (dense, sense, b)) in rows.iter().enumerate() {
        a[i * ncols..i * ncols + n_struct].copy_from_slice(dense);
        rhs[i] = *b;
        match sense {
            Sense::Le => {
                a[i * ncols + next_slack] = 1.0;
                unit_col[i] = next_slack;
                next_slack += 1;
            }
            Sense::Ge => {
                a[i * ncols + next_slack] = -1.0;
                next_slack += 1;
                a[i * ncols + next_art] = 1.0;
                artificial[next_art] = true;
                unit_col[i] = next_art;
                next_art += 1;
            }
            Sense::Eq => {
                a[i * ncols + next_art] = 1.0;
                artificial[next_art] = true;
                unit_col[i] = next_art;
                next_art += 1;
            }
        }
    }

    let mut cost = vec![0.0; ncols];
    let mut obj_offset = 0.0;
    for j in 0..n {
        let c = model.objective[j];
        match maps[j] {
            ColMap::Shift { col, lo } => {
                cost[col] += c;
                obj_offset += c * lo;
            }
            ColMap::Flip { col, hi } => {
                cost[col] -= c;
                obj_offset += c * hi;
            }
            ColMap::Split { pos, neg } => {
                cost[pos] += c;
                cost[neg] -= c;
            }
        }
    }

    Standard {
        a,
        rhs,
        m,
        ncols,
        cost,
        artificial,
        unit_col,
        negated,
        maps,
        obj_offset,
    }
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

struct Tableau<'a> {
    std: &'a Standard,
    /// `m × (ncols + 1)`, last column is the basic solution.
    t: Vec<f64>,
    basis: Vec<usize>,
    d: Vec<f64>,
    pivots: usize,
    since_refactor: usize,
    opts: LpOptions,
    max_pivots: usize,
}

impl<'a> Tableau<'a> {
    fn new(std: &'a Standard, opts: LpOptions) -> Self {
        let w = std.ncols + 1;
        let mut t = vec![0.0; std.m * w];
        for i in 0..std.m {
            t[i * w..i * w + std.ncols].copy_from_slice(&std.a[i * std.ncols..(i + 1) * std.ncols]);
            t[i * w + std.ncols] = std.rhs[i];
        }
        let max_pivots = 20_000 + 200 * (std.m + std.ncols);
        Self {
            std,
            t,
            basis: std.unit_col.clone(),
            d: vec![0.0; std.ncols],
            pivots: 0,
            since_refactor: 0,
            opts,
            max_pivots,
        }
    }

    fn width(&self) -> usize {
        self.std.ncols + 1
    }

    fn value(&self, i: usize) -> f64 {
        self.t[i * self.width() + self.std.ncols]
    }

    fn price(&mut self, cost: &[f64]) {
        let w = self.width();
        let n = self.std.ncols;
        self.d.copy_from_slice(&cost[..n]);
        for i in 0..self.std.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * w..i * w + n];
                for (dj, tij) in self.d.iter_mut().zip(row) {
                    *dj -= cb * tij;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width();
        let p = self.t[r * w + c];
        for v in &mut self.t[r * w..(r + 1) * w] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.t[r * w..(r + 1) * w].to_vec();
        for i in 0..self.std.m {
            if i == r {
                continue;
            }
            let f = self.t[i * w + c];
            if f != 0.0 {
                for (v, pv) in self.t[i * w..(i + 1) * w].iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                self.t[i * w + c] = 0.0;
            }
        }
        let f = self.d[c];
        if f != 0.0 {
            for (dj, pv) in self.d.iter_mut().zip(&pivot_row) {
                *dj -= f * pv;
            }
            self.d[c] = 0.0;
        }
        self.basis[r] = c;
        self.pivots += 1;
        self.since_refactor += 1;
    }

    /// Rebuilds `B⁻¹[A | b]` from the original matrix for the current basis.
    /// Leaves the tableau untouched if the basis looks singular.
    fn refactor(&mut self, cost: &[f64]) {
        let std = self.std;
        let (m, n) = (std.m, std.ncols);
        let w = n + 1;
        let mut t = vec![0.0; m * w];
        for i in 0..m {
            t[i * w..i * w + n].copy_from_slice(&std.a[i * n..(i + 1) * n]);
            t[i * w + n] = std.rhs[i];
        }
        let mut used = vec![false; m];
        let mut basis = vec![usize::MAX; m];
        let mut order = self.basis.clone();
        order.sort_unstable();
        for &c in &order {
            let mut best = None;
            let mut best_abs = 1e-11;
            for i in 0..m {
                if !used[i] && t[i * w + c].abs() > best_abs {
                    best_abs = t[i * w + c].abs();
                    best = Some(i);
                }
            }
            let Some(r) = best else {
                return;
            };
            used[r] = true;
            basis[r] = c;
            let p = t[r * w + c];
            for v in &mut t[r * w..(r + 1) * w] {
                *v /= p;
            }
            let pivot_row: Vec<f64> = t[r * w..(r + 1) * w].to_vec();
            for i in 0..m {
                if i != r {
                    let f = t[i * w + c];
                    if f != 0.0 {
                        for (v, pv) in t[i * w..(i + 1) * w].iter_mut().zip(&pivot_row) {
                            *v -= f * pv;
                        }
                    }
                }
            }
        }
        // Refactoring must not turn a feasible basis into an infeasible one.
        if (0..m).any(|i| t[i * w + n] < -self.opts.tol_feas) {
            return;
        }
        for i in 0..m {
            let v = &mut t[i * w + n];
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        self.t = t;
        self.basis = basis;
        self.since_refactor = 0;
        self.price(cost);
    }

    fn run(&mut self, cost: &[f64], allowed: &[bool]) -> Result<PhaseEnd, LpError> {
        let (m, n) = (self.std.m, self.std.ncols);
        let w = self.width();
        self.price(cost);
        let mut degenerate = 0usize;
        let mut bland = false;
        let bland_after = 5 * (m + n);
        loop {
            if self.pivots >= self.max_pivots {
                return Err(LpError::IterationLimit(self.pivots));
            }
            if self.since_refactor >= self.opts.refactor_every {
                self.refactor(cost);
            }
            let mut enter = None;
            let mut best = -COST_TOL;
            for j in 0..n {
                if !allowed[j] {
                    continue;
                }
                if self.d[j] < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = self.d[j];
                }
            }
            let Some(c) = enter else {
                return Ok(PhaseEnd::Optimal);
            };
            let mut leave: Option<usize> = None;
            let mut ratio = f64::INFINITY;
            for i in 0..m {
                let a = self.t[i * w + c];
                if a > PIVOT_TOL {
                    let q = self.t[i * w + n].max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            q < ratio - 1e-12
                                || ((q - ratio).abs() <= 1e-12 && self.basis[i] < self.basis[l])
                        }
                    };
                    if better {
                        ratio = q;
                        leave = Some(i);
                    }
                }
            }
            let Some(r) = leave else {
                return Ok(PhaseEnd::Unbounded);
            };
            if ratio <= 1e-12 {
                degenerate += 1;
                if degenerate > bland_after {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }
            self.pivot(r, c);
        }
    }
}

pub fn solve_lp_with(model: &LpModel, opts: &LpOptions) -> Result<LpSolution, LpError> {
    model.validate()?;
    let std = standardise(model);
    let (m, n) = (std.m, std.ncols);
    let mut tab = Tableau::new(&std, *opts);

    let phase1_cost: Vec<f64> = std
        .artificial
        .iter()
        .map(|&a| if a { 1.0 } else { 0.0 })
        .collect();
    let all = vec![true; n];
    let scale = 1.0 + std.rhs.iter().fold(0.0f64, |acc, b| acc.max(b.abs()));
    if std.artificial.iter().any(|&a| a) {
        tab.run(&phase1_cost, &all)?;
        tab.refactor(&phase1_cost);
        let infeas: f64 = (0..m)
            .filter(|&i| std.artificial[tab.basis[i]])
            .map(|i| tab.value(i).max(0.0))
            .sum();
        if infeas > opts.tol_feas * scale {
            return Ok(infeasible_solution(model, tab.pivots));
        }
        // Move zero-valued artificials out of the basis where possible.
        let w = tab.width();
        for i in 0..m {
            if std.artificial[tab.basis[i]] {
                let c = (0..n).find(|&j| !std.artificial[j] && tab.t[i * w + j].abs() > 1e-7);
                if let Some(c) = c {
                    tab.pivot(i, c);
                }
            }
        }
    }

    let allowed: Vec<bool> = std.artificial.iter().map(|a| !a).collect();
    if let PhaseEnd::Unbounded = tab.run(&std.cost, &allowed)? {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            primal: vec![0.0; model.n_vars()],
            duals: vec![0.0; model.rows.len()],
            reduced_costs: vec![0.0; model.n_vars()],
            objective: f64::NEG_INFINITY,
            iterations: tab.pivots,
        });
    }
    tab.refactor(&std.cost);

    let mut xs = vec![0.0; n];
    for i in 0..m {
        xs[tab.basis[i]] = tab.value(i).max(0.0);
    }
    let primal: Vec<f64> = std
        .maps
        .iter()
        .enumerate()
        .map(|(j, map)| {
            let v = match *map {
                ColMap::Shift { col, lo } => lo + xs[col],
                ColMap::Flip { col, hi } => hi - xs[col],
                ColMap::Split { pos, neg } => xs[pos] - xs[neg],
            };
            v.clamp(model.lower[j], model.upper[j])
        })
        .collect();
    let duals: Vec<f64> = (0..model.rows.len())
        .map(|i| {
            let y = -tab.d[std.unit_col[i]];
            let y = if std.negated[i] { -y } else { y };
            // Normalise -0.0 and sub-tolerance noise.
            if y.abs() < 1e-13 {
                0.0
            } else {
                y
            }
        })
        .collect();
    let mut reduced_costs = model.objective.clone();
    for (row, &y) in model.rows.iter().zip(&duals) {
        for &(j, a) in &row.coeffs {
            reduced_costs[j] -= y * a;
        }
    }
    let objective = model.objective_value(&primal);
    debug_assert!((objective - (std.obj_offset + xs.iter().zip(&std.cost).map(|(x, c)| x * c).sum::<f64>())).abs()
        <= opts.tol_gap * (1.0 + objective.abs()));
    Ok(LpSolution {
        status: LpStatus::Optimal,
        primal,
        duals,
        reduced_costs,
        objective,
        iterations: tab.pivots,
    })
}

fn infeasible_solution(model: &LpModel, iterations: usize) -> LpSolution {
    LpSolution {
        status: LpStatus::Infeasible,
        primal: vec![0.0; model.n_vars()],
        duals: vec![0.0; model.rows.len()],
        reduced_costs: vec![0.0; model.n_vars()],
        objective: f64::INFINITY,
        iterations,
    }
}
