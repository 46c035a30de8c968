//! Dense two-phase primal simplex with Bland's anti-cycling rule.
//!
//! Problems are stated as `maximize cᵀx` subject to `≤ / = / ≥` rows and
//! per-variable bounds `l ≤ x ≤ u`. Lower bounds default to zero and may be
//! `-∞` (free variable); upper bounds are optional. Bounds are folded into
//! the tableau: finite lower bounds by shifting, free variables by splitting
//! `x = x⁺ − x⁻`, upper bounds as extra `≤` rows.

use std::fmt;

use nalgebra::DMatrix;
use thiserror::Error;

/// Smallest pivot element accepted in the ratio test, relative to the
/// largest entry of the entering column (at least 1).
pub const PIVOT_TOL: f64 = 1e-10;
/// Primal feasibility tolerance (phase-1 residual and the solution postcondition).
pub const FEAS_TOL: f64 = 1e-9;
/// A column enters while its reduced cost exceeds this.
pub const REDUCED_COST_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITERATIONS: usize = 50_000;
/// Pivots between refactorizations of the basis.
const REFACTOR_PERIOD: usize = 50;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite coefficient in {0}")]
    NonFinite(String),
    #[error("iteration cap of {iterations} pivots exceeded")]
    IterationLimit { iterations: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `maximize cᵀx` subject to rows and bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    /// Per-variable lower bound; `f64::NEG_INFINITY` marks a free variable.
    pub lower: Vec<f64>,
    pub upper: Vec<Option<f64>>,
}

impl LinearProgram {
    /// Nonnegative variables, no rows yet.
    pub fn maximize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self { objective, constraints: Vec::new(), lower: vec![0.0; n], upper: vec![None; n] }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn constrain(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> &mut Self {
        self.constraints.push(Constraint { coeffs, relation, rhs });
        self
    }

    pub fn add_le(&mut self, coeffs: Vec<f64>, rhs: f64) -> &mut Self {
        self.constrain(coeffs, Relation::Le, rhs)
    }

    pub fn add_ge(&mut self, coeffs: Vec<f64>, rhs: f64) -> &mut Self {
        self.constrain(coeffs, Relation::Ge, rhs)
    }

    pub fn add_eq(&mut self, coeffs: Vec<f64>, rhs: f64) -> &mut Self {
        self.constrain(coeffs, Relation::Eq, rhs)
    }

    pub fn free(&mut self, var: usize) -> &mut Self {
        self.lower[var] = f64::NEG_INFINITY;
        self
    }

    pub fn bounds(&mut self, var: usize, lower: f64, upper: Option<f64>) -> &mut Self {
        self.lower[var] = lower;
        self.upper[var] = upper;
        self
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::Dimension(format!(
                "{n} objective coefficients but {} lower / {} upper bounds",
                self.lower.len(),
                self.upper.len()
            )));
        }
        if let Some(j) = self.objective.iter().position(|c| !c.is_finite()) {
            return Err(LpError::NonFinite(format!("objective[{j}]")));
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if row.coeffs.len() != n {
                return Err(LpError::Dimension(format!(
                    "constraint {i} has {} coefficients, expected {n}",
                    row.coeffs.len()
                )));
            }
            if let Some(j) = row.coeffs.iter().position(|c| !c.is_finite()) {
                return Err(LpError::NonFinite(format!("constraint {i} coefficient {j}")));
            }
            if !row.rhs.is_finite() {
                return Err(LpError::NonFinite(format!("constraint {i} right-hand side")));
            }
        }
        for j in 0..n {
            if self.lower[j].is_nan() || self.lower[j] == f64::INFINITY {
                return Err(LpError::NonFinite(format!("lower bound {j}")));
            }
            if matches!(self.upper[j], Some(u) if !u.is_finite()) {
                return Err(LpError::NonFinite(format!("upper bound {j}")));
            }
        }
        Ok(())
    }
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
    /// Optimal point; the last basic feasible point when unbounded; empty when infeasible.
    pub x: Vec<f64>,
    /// `+∞` when unbounded, `-∞` when infeasible.
    pub objective_value: f64,
    pub iterations: usize,
}

/// Which constraint a [`FeasibilityViolation`] refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintRef {
    Row(usize),
    Lower(usize),
    Upper(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityViolation {
    pub constraint: ConstraintRef,
    pub magnitude: f64,
}

/// Every constraint of `lp` violated by more than `tol` at `x`.
///
/// A point exactly `tol` outside a constraint is not reported.
pub fn check_feasible(lp: &LinearProgram, x: &[f64], tol: f64) -> Vec<FeasibilityViolation> {
    assert_eq!(x.len(), lp.num_vars(), "point dimension must match the program");
    let mut out = Vec::new();
    for (i, row) in lp.constraints.iter().enumerate() {
        let lhs: f64 = row.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
        let magnitude = match row.relation {
            Relation::Le => lhs - row.rhs,
            Relation::Ge => row.rhs - lhs,
            Relation::Eq => (lhs - row.rhs).abs(),
        };
        if magnitude > tol {
            out.push(FeasibilityViolation { constraint: ConstraintRef::Row(i), magnitude });
        }
    }
    for (j, &v) in x.iter().enumerate() {
        if lp.lower[j] - v > tol {
            out.push(FeasibilityViolation { constraint: ConstraintRef::Lower(j), magnitude: lp.lower[j] - v });
        }
        if let Some(u) = lp.upper[j] {
            if v - u > tol {
                out.push(FeasibilityViolation { constraint: ConstraintRef::Upper(j), magnitude: v - u });
            }
        }
    }
    out
}

/// Solves with the default iteration cap.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    solve_lp_with_limit(lp, DEFAULT_MAX_ITERATIONS)
}

pub fn solve_lp_with_limit(lp: &LinearProgram, max_iterations: usize) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let n = lp.num_vars();

    // Trivially infeasible bounds.
    for j in 0..n {
        if matches!(lp.upper[j], Some(u) if u < lp.lower[j]) {
            return Ok(infeasible(0));
        }
    }

    // Structural columns: one per bounded-below variable, two per free one.
    let mut column_of = Vec::with_capacity(n);
    let mut structural = 0;
    for j in 0..n {
        column_of.push(structural);
        structural += if lp.lower[j].is_finite() { 1 } else { 2 };
    }
    let expand = |coeffs: &[f64]| -> (Vec<f64>, f64) {
        let mut row = vec![0.0; structural];
        let mut shift = 0.0;
        for j in 0..n {
            let c = column_of[j];
            row[c] = coeffs[j];
            if lp.lower[j].is_finite() {
                shift += coeffs[j] * lp.lower[j];
            } else {
                row[c + 1] = -coeffs[j];
            }
        }
        (row, shift)
    };

    let mut rows: Vec<(Vec<f64>, Relation, f64)> = Vec::new();
    for c in &lp.constraints {
        let (row, shift) = expand(&c.coeffs);
        rows.push((row, c.relation, c.rhs - shift));
    }
    for j in 0..n {
        if let Some(u) = lp.upper[j] {
            let mut unit = vec![0.0; n];
            unit[j] = 1.0;
            let (row, shift) = expand(&unit);
            rows.push((row, Relation::Le, u - shift));
        }
    }
    let (cost, cost_shift) = expand(&lp.objective);

    let mut tableau = Tableau::build(structural, rows);
    let mut iterations = 0;

    // Phase 1: maximize −Σ artificials.
    if tableau.num_artificial > 0 {
        let mut phase1 = vec![0.0; tableau.cols];
        phase1[tableau.artificial_start..].fill(-1.0);
        tableau.set_costs(&phase1);
        match tableau.run(false, max_iterations, &mut iterations)? {
            Outcome::Optimal => {}
            Outcome::Unbounded => unreachable!("phase 1 never reports unboundedness"),
        }
        if tableau.objective_value() < -FEAS_TOL {
            return Ok(infeasible(iterations));
        }
        tableau.drive_out_artificials();
    }

    // Phase 2 on the original objective, artificials barred from entering.
    let mut phase2 = vec![0.0; tableau.cols];
    phase2[..structural].copy_from_slice(&cost);
    tableau.set_costs(&phase2);
    let outcome = tableau.run(true, max_iterations, &mut iterations)?;

    let y = tableau.primal();
    let x: Vec<f64> = (0..n)
        .map(|j| {
            let c = column_of[j];
            if lp.lower[j].is_finite() {
                lp.lower[j] + y[c]
            } else {
                y[c] - y[c + 1]
            }
        })
        .collect();
    Ok(match outcome {
        Outcome::Optimal => LpSolution {
            status: LpStatus::Optimal,
            objective_value: tableau.objective_value() + cost_shift,
            x,
            iterations,
        },
        Outcome::Unbounded => LpSolution { status: LpStatus::Unbounded, objective_value: f64::INFINITY, x, iterations },
    })
}

fn infeasible(iterations: usize) -> LpSolution {
    LpSolution { status: LpStatus::Infeasible, x: Vec::new(), objective_value: f64::NEG_INFINITY, iterations }
}

enum Outcome {
    Optimal,
    Unbounded,
}

/// Row-major dense tableau with right-hand sides in the last column.
struct Tableau {
    rows: usize,
    cols: usize,
    structural: usize,
    artificial_start: usize,
    num_artificial: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
    active: Vec<bool>,
    costs: Vec<f64>,
    reduced: Vec<f64>,
    /// The tableau as built, used to refactor the current basis.
    original: Vec<f64>,
    /// Pivots since the last refactorization.
    stale: usize,
}

impl Tableau {
    fn build(structural: usize, mut rows: Vec<(Vec<f64>, Relation, f64)>) -> Self {
        for (coeffs, rel, rhs) in rows.iter_mut() {
            // Negate rows with a negative right-hand side, and `≥ 0` rows so that
            // their slack can start in the basis.
            if *rhs < 0.0 || *rhs == 0.0 && *rel == Relation::Ge {
                coeffs.iter_mut().for_each(|c| *c = -*c);
                *rhs = -*rhs;
                *rel = match rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
        }
        let num_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let num_artificial = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let artificial_start = structural + num_slack;
        let cols = artificial_start + num_artificial;
        let width = cols + 1;
        let m = rows.len();
        let mut data = vec![0.0; m * width];
        let mut basis = vec![0; m];
        let (mut slack, mut art) = (structural, artificial_start);
        for (r, (coeffs, rel, rhs)) in rows.into_iter().enumerate() {
            let row = &mut data[r * width..(r + 1) * width];
            row[..structural].copy_from_slice(&coeffs);
            row[cols] = rhs;
            match rel {
                Relation::Le => {
                    row[slack] = 1.0;
                    basis[r] = slack;
                    slack += 1;
                }
                Relation::Ge => {
                    row[slack] = -1.0;
                    slack += 1;
                    row[art] = 1.0;
                    basis[r] = art;
                    art += 1;
                }
                Relation::Eq => {
                    row[art] = 1.0;
                    basis[r] = art;
                    art += 1;
                }
            }
        }
        Self {
            rows: m,
            cols,
            structural,
            artificial_start,
            num_artificial,
            basis,
            active: vec![true; m],
            costs: vec![0.0; cols],
            reduced: vec![0.0; cols],
            original: data.clone(),
            data,
            stale: 0,
        }
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * (self.cols + 1) + c]
    }

    #[inline]
    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    /// Installs a cost vector and recomputes reduced costs `c_j − c_Bᵀ B⁻¹ A_j`.
    fn set_costs(&mut self, costs: &[f64]) {
        self.costs.copy_from_slice(costs);
        self.reduced.copy_from_slice(costs);
        for r in 0..self.rows {
            if !self.active[r] {
                continue;
            }
            let cb = self.costs[self.basis[r]];
            if cb != 0.0 {
                for c in 0..self.cols {
                    self.reduced[c] -= cb * self.at(r, c);
                }
            }
        }
    }

    fn objective_value(&self) -> f64 {
        (0..self.rows).filter(|&r| self.active[r]).map(|r| self.costs[self.basis[r]] * self.rhs(r)).sum()
    }

    fn run(
        &mut self,
        bar_artificials: bool,
        max_iterations: usize,
        iterations: &mut usize,
    ) -> Result<Outcome, LpError> {
        let limit = if bar_artificials { self.artificial_start } else { self.cols };
        // Phase-1 columns whose only positive entries are below the pivot tolerance.
        let mut blocked = vec![false; limit];
        loop {
            if self.stale >= REFACTOR_PERIOD {
                self.refactor();
            }
            // Bland: lowest-index improving column.
            let Some(enter) = (0..limit).find(|&c| !blocked[c] && self.reduced[c] > REDUCED_COST_TOL) else {
                if self.stale > 0 && self.refactor() {
                    continue;
                }
                return Ok(Outcome::Optimal);
            };
            // Bland: minimum ratio, ties to the lowest basic variable index.
            let scale = (0..self.rows).filter(|&r| self.active[r]).map(|r| self.at(r, enter).abs()).fold(1.0, f64::max);
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                if !self.active[r] {
                    continue;
                }
                let a = self.at(r, enter);
                if a <= PIVOT_TOL * scale {
                    continue;
                }
                let ratio = self.rhs(r) / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((br, best)) => {
                        let tie = (ratio - best).abs() <= 1e-12 * best.abs().max(1.0);
                        if ratio < best && !tie || tie && self.basis[r] < self.basis[br] {
                            Some((r, ratio))
                        } else {
                            Some((br, best))
                        }
                    }
                };
            }
            let Some((row, _)) = leave else {
                if self.stale > 0 && self.refactor() {
                    continue;
                }
                if bar_artificials {
                    return Ok(Outcome::Unbounded);
                }
                // The phase-1 objective is bounded, so this is rounding noise.
                blocked[enter] = true;
                continue;
            };
            if *iterations >= max_iterations {
                return Err(LpError::IterationLimit { iterations: max_iterations });
            }
            *iterations += 1;
            self.pivot(row, enter);
            self.stale += 1;
            blocked.iter_mut().for_each(|b| *b = false);
        }
    }

    /// Recomputes `B⁻¹ [A | b]` and the reduced costs from the original rows,
    /// discarding rounding error accumulated by pivoting. Returns false when
    /// rows have been dropped or the basis matrix is singular.
    fn refactor(&mut self) -> bool {
        self.stale = 0;
        if self.active.iter().any(|&a| !a) {
            return false;
        }
        let (m, width) = (self.rows, self.cols + 1);
        let b = DMatrix::from_fn(m, m, |r, k| self.original[r * width + self.basis[k]]);
        let a = DMatrix::from_row_slice(m, width, &self.original);
        let Some(x) = b.lu().solve(&a) else {
            return false;
        };
        for r in 0..m {
            for c in 0..width {
                self.data[r * width + c] = x[(r, c)];
            }
            for (k, &basic) in self.basis.iter().enumerate() {
                self.data[r * width + basic] = if r == k { 1.0 } else { 0.0 };
            }
            let idx = r * width + self.cols;
            if self.data[idx] < 0.0 && self.data[idx] > -FEAS_TOL {
                self.data[idx] = 0.0;
            }
        }
        let costs = self.costs.clone();
        self.set_costs(&costs);
        true
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let width = self.cols + 1;
        let p = self.at(row, col);
        let (before, rest) = self.data.split_at_mut(row * width);
        let (pivot_row, after) = rest.split_at_mut(width);
        pivot_row.iter_mut().for_each(|v| *v /= p);
        pivot_row[col] = 1.0;
        let eliminate = |other: &mut [f64]| {
            let f = other[col];
            if f != 0.0 {
                for (o, &v) in other.iter_mut().zip(pivot_row.iter()) {
                    *o -= f * v;
                }
                other[col] = 0.0;
            }
        };
        before.chunks_mut(width).for_each(eliminate);
        after.chunks_mut(width).for_each(eliminate);
        let f = self.reduced[col];
        if f != 0.0 {
            for (c, rc) in self.reduced.iter_mut().enumerate() {
                *rc -= f * pivot_row[c];
            }
            self.reduced[col] = 0.0;
        }
        // Keep right-hand sides nonnegative against rounding.
        for r in 0..self.rows {
            let idx = r * width + self.cols;
            if self.data[idx] < 0.0 && self.data[idx] > -FEAS_TOL {
                self.data[idx] = 0.0;
            }
        }
        self.basis[row] = col;
    }

    /// Pivots zero-level artificials out of the basis; rows where that is
    /// impossible are linearly dependent and get dropped.
    fn drive_out_artificials(&mut self) {
        for r in 0..self.rows {
            if !self.active[r] || self.basis[r] < self.artificial_start {
                continue;
            }
            match (0..self.artificial_start).find(|&c| self.at(r, c).abs() > PIVOT_TOL) {
                Some(c) => self.pivot(r, c),
                None => self.active[r] = false,
            }
        }
    }

    fn primal(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.structural];
        for r in 0..self.rows {
            if self.active[r] && self.basis[r] < self.structural {
                y[self.basis[r]] = self.rhs(r);
            }
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_upper_bound() {
        let mut lp = LinearProgram::maximize(vec![1.0]);
        lp.add_le(vec![1.0], 1.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 1.0).abs() < 1e-12 && (s.objective_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let mut lp = LinearProgram::maximize(vec![1.0]);
        lp.add_ge(vec![1.0], 2.0).add_le(vec![1.0], 1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unit_square() {
        let mut lp = LinearProgram::maximize(vec![1.0, 1.0]);
        lp.bounds(0, 0.0, Some(1.0)).bounds(1, 0.0, Some(1.0));
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value - 2.0).abs() < 1e-12);
        assert!(check_feasible(&lp, &s.x, 1e-9).is_empty());
    }

    #[test]
    fn unbounded_detected() {
        let mut lp = LinearProgram::maximize(vec![1.0, 0.0]);
        lp.add_ge(vec![1.0, -1.0], 0.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn free_variable_and_equality() {
        // max −|t| style: max −x subject to x = −3 with x free.
        let mut lp = LinearProgram::maximize(vec![-1.0]);
        lp.free(0).add_eq(vec![1.0], -3.0);
        let s = solve_lp(&lp).unwrap();
        assert!((s.x[0] + 3.0).abs() < 1e-12);
        assert!((s.objective_value - 3.0).abs() < 1e-12);
    }

    #[test]
    fn shifted_lower_bound() {
        let mut lp = LinearProgram::maximize(vec![-1.0, -1.0]);
        lp.bounds(0, 2.0, None).bounds(1, -1.0, Some(4.0)).add_ge(vec![1.0, 1.0], 3.0);
        let s = solve_lp(&lp).unwrap();
        assert!((s.objective_value + 3.0).abs() < 1e-12, "{s:?}");
        assert!(check_feasible(&lp, &s.x, 1e-9).is_empty());
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::maximize(vec![1.0, 2.0]);
        lp.add_eq(vec![1.0, 1.0], 1.0).add_eq(vec![2.0, 2.0], 2.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn crossed_bounds_are_infeasible() {
        let mut lp = LinearProgram::maximize(vec![1.0]);
        lp.bounds(0, 2.0, Some(1.0));
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn dimension_and_finiteness_errors() {
        let mut lp = LinearProgram::maximize(vec![1.0, 1.0]);
        lp.add_le(vec![1.0], 1.0);
        assert!(matches!(solve_lp(&lp), Err(LpError::Dimension(_))));
        let mut lp = LinearProgram::maximize(vec![f64::NAN]);
        lp.add_le(vec![1.0], 1.0);
        assert!(matches!(solve_lp(&lp), Err(LpError::NonFinite(_))));
    }

    #[test]
    fn iteration_cap_reported() {
        let mut lp = LinearProgram::maximize(vec![1.0, 1.0]);
        lp.add_le(vec![1.0, 0.0], 1.0).add_le(vec![0.0, 1.0], 1.0);
        assert_eq!(solve_lp_with_limit(&lp, 1), Err(LpError::IterationLimit { iterations: 1 }));
    }

    #[test]
    fn feasibility_report() {
        let lp = LinearProgram::maximize(vec![1.0]);
        assert!(check_feasible(&lp, &[0.5], 1e-9).is_empty());
        let v = check_feasible(&lp, &[-1.0], 1e-9);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].constraint, ConstraintRef::Lower(0));
        assert!((v[0].magnitude - 1.0).abs() < 1e-15);
        // exactly at tolerance is feasible
        assert!(check_feasible(&lp, &[-0.25], 0.25).is_empty());
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's classic cycling example (cycles under Dantzig's rule).
        let mut lp = LinearProgram::maximize(vec![0.75, -150.0, 0.02, -6.0]);
        lp.add_le(vec![0.25, -60.0, -0.04, 9.0], 0.0)
            .add_le(vec![0.5, -90.0, -0.02, 3.0], 0.0)
            .add_le(vec![0.0, 0.0, 1.0, 0.0], 1.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value - 0.05).abs() < 1e-9, "{}", s.objective_value);
    }
}
