//! Brute-force reference implementations.

use std::collections::VecDeque;

use lotsizing::cuts::DualRay;
use lotsizing::lp::{solve_lp, LpModel, LpStatus, Sense};
use lotsizing::milp::MilpModel;
use lotsizing::{Instance, SubstitutionGraph};
use rand::Rng;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for c in col..n {
                        a[r][c] -= f * a[col][c];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Minimum of the objective over the vertices of a box-bounded LP, found by
/// trying every set of `n` active constraints. `None` if no vertex is
/// feasible.
pub fn vertex_minimum(lp: &LpModel, tol: f64) -> Option<f64> {
    let n = lp.n_vars();
    // Each candidate hyperplane: coefficients and right-hand side.
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for row in &lp.rows {
        let mut a = vec![0.0; n];
        for &(j, c) in &row.coeffs {
            a[j] += c;
        }
        planes.push((a, row.rhs));
    }
    for j in 0..n {
        for bound in [lp.lower[j], lp.upper[j]] {
            assert!(bound.is_finite(), "vertex enumeration needs finite bounds");
            let mut a = vec![0.0; n];
            a[j] = 1.0;
            planes.push((a, bound));
        }
    }
    let mut best: Option<f64> = None;
    let mut pick = Vec::with_capacity(n);
    let mut visit = |set: &[usize]| {
        let a = set.iter().map(|&i| planes[i].0.clone()).collect();
        let b = set.iter().map(|&i| planes[i].1).collect();
        if let Some(x) = solve_square(a, b) {
            if lp.max_violation(&x) <= tol {
                let obj = lp.objective_value(&x);
                best = Some(best.map_or(obj, |o: f64| o.min(obj)));
            }
        }
    };
    if n == 0 {
        return (lp.max_violation(&[]) <= tol).then_some(0.0);
    }
    // Every vertex has n linearly independent active constraints, so the
    // n-subsets of all planes cover every vertex.
    let all: Vec<usize> = (0..planes.len()).collect();
    combinations(&all, n, &mut pick, 0, &mut visit);
    best
}

fn combinations<F: FnMut(&[usize])>(items: &[usize], k: usize, pick: &mut Vec<usize>, from: usize, f: &mut F) {
    if pick.len() == k {
        f(pick);
        return;
    }
    let need = k - pick.len();
    for i in from..=items.len().saturating_sub(need) {
        pick.push(items[i]);
        combinations(items, k, pick, i + 1, f);
        pick.pop();
    }
}

/// Random LP with `n` box-bounded variables and `m` rows of mixed sense.
pub fn random_lp<R: Rng>(rng: &mut R, n: usize, m: usize) -> LpModel {
    let mut lp = LpModel::new(0);
    for _ in 0..n {
        let lo = f64::from(rng.random_range(-3..=1));
        let hi = lo + f64::from(rng.random_range(0..=5));
        lp.add_var(f64::from(rng.random_range(-5..=5)), lo, hi);
    }
    for _ in 0..m {
        let mut coeffs = Vec::new();
        for j in 0..n {
            if rng.random_bool(0.7) {
                coeffs.push((j, f64::from(rng.random_range(-4..=4))));
            }
        }
        let sense = match rng.random_range(0..5) {
            0 => Sense::Eq,
            1 | 2 => Sense::Le,
            _ => Sense::Ge,
        };
        lp.add_row(coeffs, sense, f64::from(rng.random_range(-6..=6)));
    }
    lp
}

/// Optimum over every 0/1 assignment of the binaries, the continuous part
/// solved as an LP.
pub fn enumerate_binaries(model: &MilpModel) -> Option<f64> {
    let nb = model.binaries.len();
    assert!(nb <= 16, "enumeration is exponential");
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << nb) {
        let mut lp = model.lp.clone();
        let mut ok = true;
        for (bit, &j) in model.binaries.iter().enumerate() {
            let v = f64::from((mask >> bit) & 1);
            if v < lp.lower[j] || v > lp.upper[j] {
                ok = false;
                break;
            }
            lp.lower[j] = v;
            lp.upper[j] = v;
        }
        if !ok {
            continue;
        }
        let sol = solve_lp(&lp).expect("well formed");
        if sol.status == LpStatus::Optimal {
            best = Some(best.map_or(sol.objective, |b: f64| b.min(sol.objective)));
        }
    }
    best
}

/// Edmonds–Karp maximum flow on a dense capacity matrix.
pub fn max_flow(cap: &[Vec<f64>], s: usize, t: usize) -> f64 {
    let n = cap.len();
    let mut res: Vec<Vec<f64>> = cap.to_vec();
    let mut flow = 0.0;
    loop {
        let mut prev = vec![usize::MAX; n];
        prev[s] = s;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for v in 0..n {
                if prev[v] == usize::MAX && res[u][v] > 1e-12 {
                    prev[v] = u;
                    q.push_back(v);
                }
            }
        }
        if prev[t] == usize::MAX {
            return flow;
        }
        let mut push = f64::INFINITY;
        let mut v = t;
        while v != s {
            push = push.min(res[prev[v]][v]);
            v = prev[v];
        }
        let mut v = t;
        while v != s {
            let u = prev[v];
            res[u][v] -= push;
            res[v][u] += push;
            v = u;
        }
        flow += push;
    }
}

/// Uncovered requirement `Σ(d + b) − max flow` in the network
/// source → supply k (cap v_k) → class j on each arc → sink (cap d_j + b_j).
pub fn coverage_shortfall(graph: &SubstitutionGraph, v: &[f64], b: &[f64], d: &[f64]) -> f64 {
    let kk = graph.products();
    let (s, t) = (2 * kk, 2 * kk + 1);
    let mut cap = vec![vec![0.0; 2 * kk + 2]; 2 * kk + 2];
    let big: f64 = v.iter().sum::<f64>() + 1.0;
    for k in 0..kk {
        cap[s][k] = v[k];
        cap[kk + k][t] = d[k] + b[k];
    }
    for &(k, j) in graph.arcs() {
        cap[k][kk + j] = big;
    }
    let need: f64 = d.iter().zip(b).map(|(x, y)| x + y).sum();
    need - max_flow(&cap, s, t)
}

/// Largest violation of the mixing inequality over every subset of the `p`
/// largest scenarios, evaluated from its closed form.
pub fn brute_force_mixing(h: &[f64], p: usize, duals: &DualRay, z: &[f64], v: &[f64], b: &[f64]) -> f64 {
    let base: f64 = (0..duals.pi.len()).map(|k| duals.beta[k] * v[k] + duals.pi[k] * b[k]).sum();
    let mut order: Vec<usize> = (0..h.len()).collect();
    order.sort_by(|&x, &y| h[y].total_cmp(&h[x]).then(x.cmp(&y)));
    let floor = h[order[p]];
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1 << p) {
        let t: Vec<usize> = (0..p).filter(|i| mask >> i & 1 == 1).map(|i| order[i]).collect();
        let lead = t.first().map_or(floor, |&w| h[w]);
        let mut z_term = 0.0;
        for (i, &w) in t.iter().enumerate() {
            let next = t.get(i + 1).map_or(floor, |&n| h[n]);
            z_term += (h[w] - next) * z[w];
        }
        best = best.max(base + lead - z_term);
    }
    best
}

/// Small instance with generated costs.
pub fn small_instance(products: usize, horizon: usize, alpha: f64, sub: lotsizing::instance::Substitution) -> Instance {
    lotsizing::instance::generate(&lotsizing::instance::GeneratorConfig {
        products,
        horizon,
        alpha,
        substitution: sub,
        pool_size: 200,
        ..Default::default()
    })
    .expect("valid config")
}
