//! Brute-force reference solvers shared by the integration tests. None of
//! them call into the library's solvers.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

pub const ORACLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum OracleLp {
    Optimal { value: f64, x: Vec<f64> },
    Infeasible,
    Unbounded,
}

/// Calls `f` on every `k`-subset of `0..n` in lexicographic order.
pub fn for_each_subset(n: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, acc: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if acc.len() == k {
            f(acc);
            return;
        }
        for i in start..n {
            if n - i < k - acc.len() {
                break;
            }
            acc.push(i);
            rec(i + 1, n, k, acc, f);
            acc.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), f);
}

/// Solves the square system `rows · x = rhs`; `None` when singular.
fn solve_square(rows: &[&[f64]], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rhs.len();
    let m = DMatrix::from_fn(n, n, |r, c| rows[r][c]);
    let lu = m.full_piv_lu();
    if !lu.is_invertible() {
        return None;
    }
    let x = lu.solve(&DVector::from_column_slice(rhs))?;
    let residual = rows.iter().zip(rhs).map(|(r, b)| (dot(r, x.as_slice()) - b).abs()).fold(0.0, f64::max);
    (residual <= 1e-9 && x.iter().all(|v| v.is_finite())).then(|| x.as_slice().to_vec())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Maximizes `cᵀx` over the vertices of `{x : g x ≤ h}` with the extra
/// equalities `e x = f`. The polyhedron must be pointed.
fn best_vertex(c: &[f64], g: &[Vec<f64>], h: &[f64], e: &[Vec<f64>], f: &[f64]) -> Option<(f64, Vec<f64>)> {
    let n = c.len();
    let free = n - e.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for_each_subset(g.len(), free, &mut |idx| {
        let mut rows: Vec<&[f64]> = idx.iter().map(|&i| g[i].as_slice()).collect();
        let mut rhs: Vec<f64> = idx.iter().map(|&i| h[i]).collect();
        rows.extend(e.iter().map(Vec::as_slice));
        rhs.extend_from_slice(f);
        let Some(x) = solve_square(&rows, &rhs) else { return };
        if g.iter().zip(h).any(|(row, b)| dot(row, &x) > b + ORACLE_TOL) {
            return;
        }
        let value = dot(c, &x);
        if best.as_ref().is_none_or(|(v, _)| value > *v + 1e-12) {
            best = Some((value, x));
        }
    });
    best
}

/// `maximize cᵀx` subject to `a x ≤ b`, `x ≥ 0`, by vertex enumeration.
/// Unboundedness is detected as a feasible problem with an improving
/// extreme ray of `{d ≥ 0 : a d ≤ 0, Σd = 1}`.
pub fn vertex_enumeration_lp(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> OracleLp {
    let n = c.len();
    let mut g: Vec<Vec<f64>> = a.to_vec();
    let mut h: Vec<f64> = b.to_vec();
    for j in 0..n {
        let mut row = vec![0.0; n];
        row[j] = -1.0;
        g.push(row);
        h.push(0.0);
    }
    let Some((value, x)) = best_vertex(c, &g, &h, &[], &[]) else {
        return OracleLp::Infeasible;
    };
    let zeros = vec![0.0; g.len()];
    if let Some((ray, _)) = best_vertex(c, &g, &zeros, &[vec![1.0; n]], &[1.0]) {
        if ray > ORACLE_TOL {
            return OracleLp::Unbounded;
        }
    }
    OracleLp::Optimal { value, x }
}

/// Mixed equilibria of the bimatrix game `(a, b)` found by enumerating
/// equal-size support pairs and solving the indifference equations.
/// Complete for nondegenerate games.
pub fn bimatrix_support_enumeration(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<(Vec<f64>, Vec<f64>)> {
    let (m, n) = (a.len(), a[0].len());
    let mut out = Vec::new();
    for k in 1..=m.min(n) {
        let mut row_supports = Vec::new();
        for_each_subset(m, k, &mut |s| row_supports.push(s.to_vec()));
        let mut col_supports = Vec::new();
        for_each_subset(n, k, &mut |s| col_supports.push(s.to_vec()));
        for rs in &row_supports {
            for cs in &col_supports {
                // Column mix `y` on `cs` equalizes the row player's payoffs on `rs`.
                let Some(y) = indifferent_mix(rs.len(), |r, c| a[rs[r]][cs[c]]) else { continue };
                // Row mix `x` on `rs` equalizes the column player's payoffs on `cs`.
                let Some(x) = indifferent_mix(cs.len(), |c, r| b[rs[r]][cs[c]]) else { continue };
                if x.iter().chain(&y).any(|p| *p < -ORACLE_TOL) {
                    continue;
                }
                let mut full_x = vec![0.0; m];
                rs.iter().zip(&x).for_each(|(&i, p)| full_x[i] = p.max(0.0));
                let mut full_y = vec![0.0; n];
                cs.iter().zip(&y).for_each(|(&j, p)| full_y[j] = p.max(0.0));
                let row_pay: Vec<f64> = (0..m).map(|i| dot(&a[i], &full_y)).collect();
                let col_pay: Vec<f64> = (0..n).map(|j| (0..m).map(|i| full_x[i] * b[i][j]).sum()).collect();
                let v = dot(&row_pay, &full_x);
                let w = dot(&col_pay, &full_y);
                if row_pay.iter().all(|p| *p <= v + 1e-9) && col_pay.iter().all(|p| *p <= w + 1e-9) {
                    out.push((full_x, full_y));
                }
            }
        }
    }
    out
}

/// Distribution `p` over `k` opponent actions with `Σ_c u(r, c) p_c` equal for all `r < k`.
fn indifferent_mix(k: usize, u: impl Fn(usize, usize) -> f64) -> Option<Vec<f64>> {
    // Unknowns (p_0..p_{k-1}, v): Σ_c u(r, c) p_c − v = 0 and Σ p = 1.
    let mut rows: Vec<Vec<f64>> = (0..k)
        .map(|r| {
            let mut row: Vec<f64> = (0..k).map(|c| u(r, c)).collect();
            row.push(-1.0);
            row
        })
        .collect();
    let mut last = vec![1.0; k];
    last.push(0.0);
    rows.push(last);
    let mut rhs = vec![0.0; k];
    rhs.push(1.0);
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    let mut sol = solve_square(&refs, &rhs)?;
    sol.pop();
    Some(sol)
}

/// Value of the zero-sum game with row payoffs `[[a, b], [c, d]]` in closed form.
pub fn zero_sum_2x2_value(m: [[f64; 2]; 2]) -> f64 {
    let [[a, b], [c, d]] = m;
    let lower = a.min(b).max(c.min(d));
    let upper = a.max(c).min(b.max(d));
    if (upper - lower).abs() <= 1e-15 {
        return lower;
    }
    (a * d - b * c) / (a + d - b - c)
}

/// Row player's value of a zero-sum matrix game via the LP oracle.
pub fn zero_sum_value(rows: &[Vec<f64>]) -> f64 {
    // Shift payoffs positive, then `min Σu` s.t. `A'ᵀu ≥ 1`, `u ≥ 0`; value = 1 / Σu.
    let (m, n) = (rows.len(), rows[0].len());
    let min = rows.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let shift = 1.0 - min;
    let a: Vec<Vec<f64>> = (0..n).map(|j| (0..m).map(|i| -(rows[i][j] + shift)).collect()).collect();
    match vertex_enumeration_lp(&vec![-1.0; m], &a, &vec![-1.0; n]) {
        OracleLp::Optimal { value, .. } => 1.0 / -value - shift,
        other => panic!("shifted matrix game LP must be optimal, got {other:?}"),
    }
}

/// Best correlated equilibrium of a two-player game under the objective
/// `weights · λ`, by vertex enumeration of the incentive polytope.
pub fn ce_oracle(payoffs: [&[Vec<f64>]; 2], weights: &[f64]) -> (f64, Vec<f64>) {
    let (m, n) = (payoffs[0].len(), payoffs[0][0].len());
    let idx = |i: usize, j: usize| i * n + j;
    let mut g = Vec::new();
    for rec in 0..m {
        for dev in (0..m).filter(|&d| d != rec) {
            let mut row = vec![0.0; m * n];
            for j in 0..n {
                row[idx(rec, j)] = payoffs[0][dev][j] - payoffs[0][rec][j];
            }
            g.push(row);
        }
    }
    for rec in 0..n {
        for dev in (0..n).filter(|&d| d != rec) {
            let mut row = vec![0.0; m * n];
            for i in 0..m {
                row[idx(i, rec)] = payoffs[1][i][dev] - payoffs[1][i][rec];
            }
            g.push(row);
        }
    }
    let mut h = vec![0.0; g.len()];
    for k in 0..m * n {
        let mut row = vec![0.0; m * n];
        row[k] = -1.0;
        g.push(row);
        h.push(0.0);
    }
    best_vertex(weights, &g, &h, &[vec![1.0; m * n]], &[1.0]).expect("the CE polytope is nonempty")
}

/// Optimal values of a single-agent MDP by value iteration.
/// `p[s][a][s']`, `r[s][a]`.
pub fn mdp_value_iteration(p: &[Vec<Vec<f64>>], r: &[Vec<f64>], gamma: f64) -> Vec<f64> {
    let mut v = vec![0.0; r.len()];
    loop {
        let next: Vec<f64> = (0..r.len())
            .map(|s| (0..r[s].len()).map(|a| r[s][a] + gamma * dot(&p[s][a], &v)).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let change = next.iter().zip(&v).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        v = next;
        if change < 1e-13 {
            return v;
        }
    }
}

/// Values of a 2×2 zero-sum stochastic game by value iteration with
/// closed-form stage values. `p[s][joint][s']`, `r[s][joint]` row payoffs.
pub fn zero_sum_2x2_shapley(p: &[Vec<Vec<f64>>], r: &[Vec<f64>], gamma: f64) -> Vec<f64> {
    let mut v = vec![0.0; r.len()];
    loop {
        let next: Vec<f64> = (0..r.len())
            .map(|s| {
                let q = |j: usize| r[s][j] + gamma * dot(&p[s][j], &v);
                zero_sum_2x2_value([[q(0), q(1)], [q(2), q(3)]])
            })
            .collect();
        let change = next.iter().zip(&v).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        v = next;
        if change < 1e-13 {
            return v;
        }
    }
}
