//! Equilibrium solvers and verifiers for matrix games.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{normalize_simplex, MatrixGame, MixedProfile};
use crate::linprog::{solve_lp, LinearProgram, LpStatus};

/// Payoff gaps smaller than this count as ties in best responses.
pub const TIE_TOL: f64 = 1e-12;
/// Largest per-agent action count accepted by [`support_enumeration_nash`].
pub const SUPPORT_ENUM_MAX_ACTIONS: usize = 4;
/// Largest joint action space accepted by [`correlated_eq_solve`].
pub const CE_MAX_JOINT_ACTIONS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimaxSolution {
    /// Game value to agent 0 (max-min of the row LP).
    pub value: f64,
    /// Min-max of the column LP; equals `value` up to solver tolerance.
    pub dual_value: f64,
    /// Maximin strategy for agent 0, minimax strategy for agent 1.
    pub strategies: MixedProfile,
}

impl MinimaxSolution {
    pub fn duality_gap(&self) -> f64 {
        (self.value - self.dual_value).abs()
    }
}

/// Solves a two-player zero-sum game by its row LP and the column LP.
pub fn minimax_solve(game: &MatrixGame) -> Result<MinimaxSolution> {
    if game.num_agents() != 2 {
        return Err(Error::Unsupported(format!("minimax needs 2 agents, game has {}", game.num_agents())));
    }
    if !game.is_zero_sum() {
        return Err(Error::Unsupported("minimax needs a zero-sum game".into()));
    }
    let (m, n) = (game.actions()[0], game.actions()[1]);
    solve_matrix_game(m, n, game.payoffs(0))
}

/// Minimax solution of the zero-sum game with row-player payoffs `payoff`
/// (row-major `m × n`).
pub fn solve_matrix_game(m: usize, n: usize, payoff: &[f64]) -> Result<MinimaxSolution> {
    debug_assert_eq!(payoff.len(), m * n);
    let a = |i: usize, j: usize| payoff[i * n + j];

    // Row player: max v  s.t.  Σ_i p_i A_ij ≥ v  ∀j,  Σ p = 1.
    let mut objective = vec![0.0; m + 1];
    objective[m] = 1.0;
    let mut row_lp = LinearProgram::maximize(objective);
    row_lp.free(m);
    for j in 0..n {
        let mut coeffs: Vec<f64> = (0..m).map(|i| a(i, j)).collect();
        coeffs.push(-1.0);
        row_lp.add_ge(coeffs, 0.0);
    }
    let mut simplex = vec![1.0; m];
    simplex.push(0.0);
    row_lp.add_eq(simplex, 1.0);

    // Column player: min w  s.t.  Σ_j A_ij q_j ≤ w  ∀i,  Σ q = 1.
    let mut objective = vec![0.0; n + 1];
    objective[n] = -1.0;
    let mut col_lp = LinearProgram::maximize(objective);
    col_lp.free(n);
    for i in 0..m {
        let mut coeffs: Vec<f64> = (0..n).map(|j| a(i, j)).collect();
        coeffs.push(-1.0);
        col_lp.add_le(coeffs, 0.0);
    }
    let mut simplex = vec![1.0; n];
    simplex.push(0.0);
    col_lp.add_eq(simplex, 1.0);

    let row = solve_lp(&row_lp)?;
    let col = solve_lp(&col_lp)?;
    if row.status != LpStatus::Optimal || col.status != LpStatus::Optimal {
        return Err(Error::Numerical(format!("minimax LPs returned {:?}/{:?}", row.status, col.status)));
    }
    let mut p = row.x[..m].to_vec();
    let mut q = col.x[..n].to_vec();
    normalize_simplex(&mut p);
    normalize_simplex(&mut q);
    Ok(MinimaxSolution { value: row.x[m], dual_value: col.x[n], strategies: MixedProfile { strategies: vec![p, q] } })
}

/// Best pure reply of `agent` to the others' mixtures; ties go to the lowest index.
pub fn best_response(game: &MatrixGame, profile: &MixedProfile, agent: usize) -> Result<(usize, f64)> {
    let values = game.deviation_payoffs(profile, agent)?;
    Ok(argmax_lowest(&values))
}

pub(crate) fn argmax_lowest(values: &[f64]) -> (usize, f64) {
    let mut best = (0, values[0]);
    for (k, &v) in values.iter().enumerate().skip(1) {
        if v > best.1 + TIE_TOL {
            best = (k, v);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NashReport {
    /// Best-response gain `δ_i` per agent.
    pub gains: Vec<f64>,
    pub max_gain: f64,
    pub eps: f64,
    pub passes: bool,
}

/// Computes `δ_i = max_{s_i} u_i(s_i, s_{-i}) − u_i(s)` for every agent.
pub fn epsilon_nash_check(game: &MatrixGame, profile: &MixedProfile, eps: f64) -> Result<NashReport> {
    let mut gains = Vec::with_capacity(game.num_agents());
    for agent in 0..game.num_agents() {
        let values = game.deviation_payoffs(profile, agent)?;
        let current: f64 = values.iter().zip(profile.strategy(agent)).map(|(v, p)| v * p).sum();
        let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        gains.push(best - current);
    }
    let max_gain = gains.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(NashReport { passes: max_gain <= eps, gains, max_gain, eps })
}

/// Selection criterion among correlated equilibria.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CeObjective {
    /// Maximize the sum of expected payoffs.
    Utilitarian,
    /// Maximize the minimum expected payoff.
    Egalitarian,
    /// Maximize the maximum expected payoff.
    Plutocratic,
}

impl CeObjective {
    pub const ALL: [CeObjective; 3] = [CeObjective::Utilitarian, CeObjective::Egalitarian, CeObjective::Plutocratic];
}

impl fmt::Display for CeObjective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CeObjective::Utilitarian => "utilitarian",
            CeObjective::Egalitarian => "egalitarian",
            CeObjective::Plutocratic => "plutocratic",
        })
    }
}

impl FromStr for CeObjective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "utilitarian" | "utilitarian_sum" => Ok(CeObjective::Utilitarian),
            "egalitarian" | "egalitarian_min" => Ok(CeObjective::Egalitarian),
            "plutocratic" | "plutocratic_max" => Ok(CeObjective::Plutocratic),
            other => Err(Error::InvalidParameter(format!("unknown CE objective {other:?}"))),
        }
    }
}

/// Distribution `λ` over joint actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatedPolicy {
    pub lambda: Vec<f64>,
}

impl CorrelatedPolicy {
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        crate::game::check_distribution(&lambda, 1e-9)
            .map_err(|msg| Error::InvalidParameter(format!("lambda {msg}")))?;
        Ok(Self { lambda })
    }

    pub fn point(joint_count: usize, joint: usize) -> Self {
        let mut lambda = vec![0.0; joint_count];
        lambda[joint] = 1.0;
        Self { lambda }
    }

    pub fn expected_payoffs(&self, game: &MatrixGame) -> Vec<f64> {
        (0..game.num_agents()).map(|i| self.lambda.iter().zip(game.payoffs(i)).map(|(l, u)| l * u).sum()).collect()
    }

    pub fn welfare(&self, game: &MatrixGame) -> f64 {
        self.expected_payoffs(game).iter().sum()
    }
}

/// Coefficients of every incentive constraint
/// `Σ_{a_{-i}} λ(a_i, a_{-i}) [u_i(a_i, a_{-i}) − u_i(a_i', a_{-i})] ≥ 0`
/// for ordered pairs `a_i ≠ a_i'`, keyed by `(agent, a_i, a_i')`.
fn incentive_rows(game: &MatrixGame) -> Vec<((usize, usize, usize), Vec<f64>)> {
    let space = game.space();
    let joint = game.joint_action_count();
    let mut rows = Vec::new();
    for agent in 0..game.num_agents() {
        let k = game.actions()[agent];
        for rec in 0..k {
            for dev in (0..k).filter(|&d| d != rec) {
                let mut coeffs = vec![0.0; joint];
                for (a, c) in coeffs.iter_mut().enumerate() {
                    if space.action_of(a, agent) == rec {
                        let deviated = space.with_action(a, agent, dev);
                        *c = game.payoff(agent, a) - game.payoff(agent, deviated);
                    }
                }
                rows.push(((agent, rec, dev), coeffs));
            }
        }
    }
    rows
}

/// Correlated equilibrium maximizing `objective`, by linear programming.
pub fn correlated_eq_solve(game: &MatrixGame, objective: CeObjective) -> Result<CorrelatedPolicy> {
    let joint = game.joint_action_count();
    if joint > CE_MAX_JOINT_ACTIONS {
        return Err(Error::Unsupported(format!("{joint} joint actions exceed the CE cap of {CE_MAX_JOINT_ACTIONS}")));
    }
    let incentives = incentive_rows(game);
    let n = game.num_agents();

    // Variables λ(a) for every joint action, plus z for the egalitarian objective.
    let build = |weights: Vec<f64>, with_z: bool| -> LinearProgram {
        let vars = joint + usize::from(with_z);
        let mut lp = LinearProgram::maximize(weights);
        let pad = |mut row: Vec<f64>| {
            row.resize(vars, 0.0);
            row
        };
        lp.add_eq(pad(vec![1.0; joint]), 1.0);
        for (_, coeffs) in &incentives {
            lp.add_ge(pad(coeffs.clone()), 0.0);
        }
        if with_z {
            // No expected payoff falls below the smallest entry, so z needs no split.
            let floor = (0..n).flat_map(|i| game.payoffs(i).iter().copied()).fold(f64::INFINITY, f64::min);
            lp.bounds(joint, floor, None);
            for i in 0..n {
                let mut row = game.payoffs(i).to_vec();
                row.push(-1.0);
                lp.add_ge(row, 0.0);
            }
        }
        lp
    };
    let solve = |lp: &LinearProgram| -> Result<(Vec<f64>, f64)> {
        let sol = solve_lp(lp)?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::Numerical(format!(
                "correlated-equilibrium LP returned {:?}; the CE polytope is never empty",
                sol.status
            )));
        }
        let mut lambda = sol.x[..joint].to_vec();
        normalize_simplex(&mut lambda);
        Ok((lambda, sol.objective_value))
    };

    let lambda = match objective {
        CeObjective::Utilitarian => {
            let weights = (0..joint).map(|a| (0..n).map(|i| game.payoff(i, a)).sum()).collect();
            solve(&build(weights, false))?.0
        }
        CeObjective::Egalitarian => {
            let mut weights = vec![0.0; joint + 1];
            weights[joint] = 1.0;
            solve(&build(weights, true))?.0
        }
        CeObjective::Plutocratic => {
            let mut best: Option<(Vec<f64>, f64)> = None;
            for i in 0..n {
                let (lambda, value) = solve(&build(game.payoffs(i).to_vec(), false))?;
                if best.as_ref().is_none_or(|(_, v)| value > v + TIE_TOL) {
                    best = Some((lambda, value));
                }
            }
            best.expect("at least one agent").0
        }
    };
    Ok(CorrelatedPolicy { lambda })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CeViolation {
    pub agent: usize,
    pub recommended: usize,
    pub deviation: usize,
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CeReport {
    /// Every incentive constraint with positive violation.
    pub violations: Vec<CeViolation>,
    /// Largest violation, zero when all constraints hold.
    pub worst: f64,
    pub eps: f64,
    pub passes: bool,
}

/// Evaluates every incentive constraint of `lambda`.
pub fn ce_check(game: &MatrixGame, lambda: &CorrelatedPolicy, eps: f64) -> Result<CeReport> {
    if lambda.lambda.len() != game.joint_action_count() {
        return Err(Error::Shape(format!(
            "lambda has {} entries, game has {} joint actions",
            lambda.lambda.len(),
            game.joint_action_count()
        )));
    }
    let mut violations = Vec::new();
    let mut worst: f64 = 0.0;
    for ((agent, recommended, deviation), coeffs) in incentive_rows(game) {
        let gain: f64 = coeffs.iter().zip(&lambda.lambda).map(|(c, l)| c * l).sum();
        if gain < 0.0 {
            worst = worst.max(-gain);
            violations.push(CeViolation { agent, recommended, deviation, violation: -gain });
        }
    }
    Ok(CeReport { violations, worst, eps, passes: worst <= eps })
}

/// All Nash equilibria of a small bimatrix game found by enumerating
/// equal-size support pairs and solving the indifference systems.
pub fn support_enumeration_nash(game: &MatrixGame) -> Result<Vec<MixedProfile>> {
    if game.num_agents() != 2 {
        return Err(Error::Unsupported("support enumeration needs 2 agents".into()));
    }
    let (m, n) = (game.actions()[0], game.actions()[1]);
    if m > SUPPORT_ENUM_MAX_ACTIONS || n > SUPPORT_ENUM_MAX_ACTIONS {
        return Err(Error::Unsupported(format!(
            "support enumeration is capped at {SUPPORT_ENUM_MAX_ACTIONS} actions per agent"
        )));
    }
    let a = |i: usize, j: usize| game.payoff(0, i * n + j);
    let b = |i: usize, j: usize| game.payoff(1, i * n + j);
    const TOL: f64 = 1e-9;

    let mut found: Vec<MixedProfile> = Vec::new();
    for size in 1..=m.min(n) {
        for rows in subsets(m, size) {
            for cols in subsets(n, size) {
                // Column mixture makes the row player indifferent over `rows`.
                let Some((q_support, v)) = indifference(&rows, &cols, a) else {
                    continue;
                };
                // Row mixture makes the column player indifferent over `cols`.
                let Some((p_support, w)) = indifference(&cols, &rows, |j, i| b(i, j)) else {
                    continue;
                };
                if q_support.iter().chain(&p_support).any(|&x| x < -TOL) {
                    continue;
                }
                let mut p = vec![0.0; m];
                let mut q = vec![0.0; n];
                rows.iter().zip(&p_support).for_each(|(&i, &x)| p[i] = x);
                cols.iter().zip(&q_support).for_each(|(&j, &x)| q[j] = x);
                normalize_simplex(&mut p);
                normalize_simplex(&mut q);
                let row_ok = (0..m).all(|i| (0..n).map(|j| a(i, j) * q[j]).sum::<f64>() <= v + TOL);
                let col_ok = (0..n).all(|j| (0..m).map(|i| b(i, j) * p[i]).sum::<f64>() <= w + TOL);
                if !row_ok || !col_ok {
                    continue;
                }
                let candidate = MixedProfile { strategies: vec![p, q] };
                let duplicate = found.iter().any(|f| {
                    f.strategies
                        .iter()
                        .flatten()
                        .zip(candidate.strategies.iter().flatten())
                        .all(|(x, y)| (x - y).abs() <= TOL)
                });
                if !duplicate {
                    found.push(candidate);
                }
            }
        }
    }
    Ok(found)
}

/// Solves `Σ_{c ∈ mix} payoff(r, c) y_c = v  ∀ r ∈ indifferent`, `Σ y = 1`
/// for the mixture `y` over `mix` and the common value `v`.
fn indifference(indifferent: &[usize], mix: &[usize], payoff: impl Fn(usize, usize) -> f64) -> Option<(Vec<f64>, f64)> {
    let k = mix.len();
    let mut mat = DMatrix::<f64>::zeros(k + 1, k + 1);
    let mut rhs = DVector::<f64>::zeros(k + 1);
    for (r, &row) in indifferent.iter().enumerate() {
        for (c, &col) in mix.iter().enumerate() {
            mat[(r, c)] = payoff(row, col);
        }
        mat[(r, k)] = -1.0;
    }
    for c in 0..k {
        mat[(k, c)] = 1.0;
    }
    rhs[k] = 1.0;
    let sol = mat.clone().lu().solve(&rhs)?;
    let residual = (&mat * &sol - &rhs).amax();
    if !sol.iter().all(|x| x.is_finite()) || residual > 1e-9 {
        return None;
    }
    Some((sol.as_slice()[..k].to_vec(), sol[k]))
}

/// All `size`-element subsets of `0..n` in lexicographic order.
fn subsets(n: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(size);
    fn rec(start: usize, n: usize, size: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == size {
            out.push(current.clone());
            return;
        }
        for i in start..n {
            current.push(i);
            rec(i + 1, n, size, current, out);
            current.pop();
        }
    }
    rec(0, n, size, &mut current, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::classic_game;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn minimax_of_symmetric_games() {
        let s = minimax_solve(&classic_game("matching_pennies").unwrap()).unwrap();
        assert!(s.value.abs() < 1e-12);
        assert!(close(s.strategies.strategy(0), &[0.5, 0.5], 1e-12));
        assert!(close(s.strategies.strategy(1), &[0.5, 0.5], 1e-12));

        let s = minimax_solve(&classic_game("rps").unwrap()).unwrap();
        assert!(s.value.abs() < 1e-12);
        for agent in 0..2 {
            assert!(close(s.strategies.strategy(agent), &[1. / 3.; 3], 1e-12));
        }
    }

    #[test]
    fn minimax_rejects_general_sum() {
        let pd = classic_game("prisoners_dilemma").unwrap();
        assert!(matches!(minimax_solve(&pd), Err(Error::Unsupported(_))));
        let three = MatrixGame::new(vec![1, 1, 1], vec![vec![0.0]; 3]).unwrap();
        assert!(matches!(minimax_solve(&three), Err(Error::Unsupported(_))));
    }

    #[test]
    fn best_responses() {
        let pd = classic_game("prisoners_dilemma").unwrap();
        for p in [0.0, 0.3, 1.0] {
            let prof = MixedProfile::new(vec![vec![0.5, 0.5], vec![p, 1.0 - p]]).unwrap();
            assert_eq!(best_response(&pd, &prof, 0).unwrap().0, 1);
        }
        let mp = classic_game("matching_pennies").unwrap();
        assert_eq!(best_response(&mp, &MixedProfile::uniform(&[2, 2]), 0).unwrap(), (0, 0.0));
        let rps = classic_game("rps").unwrap();
        let rock = MixedProfile::pure(&[3, 3], &[0, 0]);
        assert_eq!(best_response(&rps, &rock, 1).unwrap(), (1, 1.0));
    }

    #[test]
    fn nash_checks() {
        let pd = classic_game("prisoners_dilemma").unwrap();
        assert!(epsilon_nash_check(&pd, &MixedProfile::pure(&[2, 2], &[1, 1]), 0.0).unwrap().passes);
        let cc = epsilon_nash_check(&pd, &MixedProfile::pure(&[2, 2], &[0, 0]), 0.0).unwrap();
        assert!(!cc.passes);
        assert_eq!(cc.gains, vec![2.0, 2.0]);
        let rps = classic_game("rps").unwrap();
        assert!(epsilon_nash_check(&rps, &MixedProfile::uniform(&[3, 3]), 1e-12).unwrap().passes);
    }

    #[test]
    fn ce_of_prisoners_dilemma_is_mutual_defection() {
        let pd = classic_game("prisoners_dilemma").unwrap();
        for obj in CeObjective::ALL {
            let ce = correlated_eq_solve(&pd, obj).unwrap();
            assert!(close(&ce.lambda, &[0., 0., 0., 1.], 1e-9), "{obj}: {:?}", ce.lambda);
            assert!(ce_check(&pd, &ce, 1e-9).unwrap().passes);
        }
    }

    #[test]
    fn ce_check_chicken_point_mass() {
        let g = classic_game("chicken").unwrap();
        let r = ce_check(&g, &CorrelatedPolicy::point(4, 0), 0.0).unwrap();
        assert!(!r.passes);
        assert_eq!(r.worst, 1.0);
        let per_agent: Vec<_> = r.violations.iter().map(|v| (v.agent, v.violation)).collect();
        assert_eq!(per_agent, vec![(0, 1.0), (1, 1.0)]);
    }

    #[test]
    fn plutocratic_and_egalitarian_on_chicken() {
        let g = classic_game("chicken").unwrap();
        let e = correlated_eq_solve(&g, CeObjective::Egalitarian).unwrap();
        let u = e.expected_payoffs(&g);
        assert!((u[0] - u[1]).abs() < 1e-9 && (u[0] - 5.25).abs() < 1e-9, "{u:?}");
        let p = correlated_eq_solve(&g, CeObjective::Plutocratic).unwrap();
        // Agent 0's best CE is the pure equilibrium (D, C).
        assert!((p.expected_payoffs(&g)[0] - 7.0).abs() < 1e-9);
        assert!(ce_check(&g, &p, 1e-9).unwrap().passes);
    }

    #[test]
    fn support_enumeration_classics() {
        let mp = support_enumeration_nash(&classic_game("matching_pennies").unwrap()).unwrap();
        assert_eq!(mp.len(), 1);
        assert!(close(mp[0].strategy(0), &[0.5, 0.5], 1e-12));

        let pd = support_enumeration_nash(&classic_game("prisoners_dilemma").unwrap()).unwrap();
        assert_eq!(pd, vec![MixedProfile::pure(&[2, 2], &[1, 1])]);

        let big = MatrixGame::zero_sum(&vec![vec![0.0; 5]; 5]).unwrap();
        assert!(support_enumeration_nash(&big).is_err());
    }

    #[test]
    fn objective_parsing() {
        assert_eq!("egalitarian".parse::<CeObjective>().unwrap(), CeObjective::Egalitarian);
        assert_eq!("plutocratic_max".parse::<CeObjective>().unwrap(), CeObjective::Plutocratic);
        assert!("greedy".parse::<CeObjective>().is_err());
    }
}
