//! Exact-gradient LOLA and naive learners on iterated 2×2 games with
//! memory-1 policies.
//!
//! Outcomes are indexed `CC, CD, DC, DD` from agent 0's point of view
//! (action 0 is "cooperate"), matching the joint-action encoding of the
//! stage game. Both agents condition on the same global outcome index.

use nalgebra::{Matrix4, Vector4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::MatrixGame;
use crate::output::CsvTable;

/// Logit magnitude beyond which training counts as diverged.
pub const DIVERGENCE_LOGIT: f64 = 50.0;
/// Coordinate step of the finite-difference shaping term.
pub const SHAPING_FD_STEP: f64 = 1e-6;

/// Cooperation logits for the first round and after each previous outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Memory1Policy {
    pub theta: [f64; 5],
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Memory1Policy {
    pub fn new(theta: [f64; 5]) -> Result<Self> {
        if let Some(k) = theta.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("theta[{k}]")));
        }
        Ok(Self { theta })
    }

    pub fn constant(logit: f64) -> Self {
        Self { theta: [logit; 5] }
    }

    /// Cooperation probabilities `σ(θ)`.
    pub fn probs(&self) -> [f64; 5] {
        self.theta.map(sigmoid)
    }

    /// The same behaviour seen from the other seat: swaps the `CD` and `DC` entries.
    pub fn mirrored(&self) -> Self {
        let t = self.theta;
        Self { theta: [t[0], t[1], t[3], t[2], t[4]] }
    }

    fn check(&self) -> Result<()> {
        Self::new(self.theta).map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IteratedGame {
    stage: MatrixGame,
    gamma: f64,
}

impl IteratedGame {
    pub fn new(stage: MatrixGame, gamma: f64) -> Result<Self> {
        if stage.actions() != [2, 2] {
            return Err(Error::Unsupported(format!(
                "iterated games need a 2x2 stage game, got {:?}",
                stage.actions()
            )));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidParameter(format!("gamma must lie in (0, 1), got {gamma}")));
        }
        Ok(Self { stage, gamma })
    }

    pub fn stage(&self) -> &MatrixGame {
        &self.stage
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    fn reward(&self, agent: usize) -> Vector4<f64> {
        Vector4::from_column_slice(self.stage.payoffs(agent))
    }
}

/// Outcome distribution when agent 0 cooperates w.p. `a` and agent 1 w.p. `b`.
fn outcome(a: f64, b: f64) -> [f64; 4] {
    [a * b, a * (1.0 - b), (1.0 - a) * b, (1.0 - a) * (1.0 - b)]
}

/// Derivative of [`outcome`] with respect to `a` (`own == 0`) or `b`.
fn outcome_derivative(own: usize, a: f64, b: f64) -> [f64; 4] {
    if own == 0 {
        [b, 1.0 - b, -b, -(1.0 - b)]
    } else {
        [a, -a, 1.0 - a, -(1.0 - a)]
    }
}

/// Chain quantities shared by values, gradients and cooperation rates.
struct Chain {
    p0: Vector4<f64>,
    /// `x_i = (I − γM)⁻¹ r_i`.
    x: [Vector4<f64>; 2],
    /// `(I − γM)ᵀ y = p0`, the discounted outcome occupancy.
    y: Vector4<f64>,
    q: [[f64; 5]; 2],
}

impl Chain {
    fn build(game: &IteratedGame, p1: &Memory1Policy, p2: &Memory1Policy) -> Result<Self> {
        p1.check()?;
        p2.check()?;
        let q = [p1.probs(), p2.probs()];
        let p0 = Vector4::from(outcome(q[0][0], q[1][0]));
        // Row-stochastic `M[s][s']`.
        let mut m = Matrix4::zeros();
        for s in 0..4 {
            let row = outcome(q[0][s + 1], q[1][s + 1]);
            for (t, v) in row.into_iter().enumerate() {
                m[(s, t)] = v;
            }
        }
        let a = Matrix4::identity() - m * game.gamma;
        let lu = a.lu();
        let singular = || Error::Numerical("I - γM is singular".into());
        let x0 = lu.solve(&game.reward(0)).ok_or_else(singular)?;
        let x1 = lu.solve(&game.reward(1)).ok_or_else(singular)?;
        let y = a.transpose().lu().solve(&p0).ok_or_else(singular)?;
        let chain = Self { p0, x: [x0, x1], y, q };
        if chain.x.iter().chain([&chain.y]).any(|v| v.iter().any(|e| !e.is_finite())) {
            return Err(Error::Numerical("non-finite value solve".into()));
        }
        Ok(chain)
    }

    fn value(&self, agent: usize) -> f64 {
        self.p0.dot(&self.x[agent])
    }

    /// `∂V_agent / ∂θ_wrt`.
    fn gradient(&self, gamma: f64, agent: usize, wrt: usize) -> [f64; 5] {
        let x = &self.x[agent];
        let mut g = [0.0; 5];
        let (a, b) = (self.q[0][0], self.q[1][0]);
        let dq = self.q[wrt][0] * (1.0 - self.q[wrt][0]);
        let d = outcome_derivative(wrt, a, b);
        g[0] = dq * (0..4).map(|t| d[t] * x[t]).sum::<f64>();
        for s in 0..4 {
            let (a, b) = (self.q[0][s + 1], self.q[1][s + 1]);
            let dq = self.q[wrt][s + 1] * (1.0 - self.q[wrt][s + 1]);
            let d = outcome_derivative(wrt, a, b);
            g[s + 1] = gamma * self.y[s] * dq * (0..4).map(|t| d[t] * x[t]).sum::<f64>();
        }
        g
    }
}

/// Discounted values `V_i = p0ᵀ (I − γM)⁻¹ r_i` of both agents.
pub fn exact_values(game: &IteratedGame, p1: &Memory1Policy, p2: &Memory1Policy) -> Result<(f64, f64)> {
    let chain = Chain::build(game, p1, p2)?;
    Ok((chain.value(0), chain.value(1)))
}

/// Gradients of both values with respect to both parameter vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValueGradients {
    /// `∇_{θ1} V1`.
    pub v1_theta1: [f64; 5],
    /// `∇_{θ2} V1`.
    pub v1_theta2: [f64; 5],
    /// `∇_{θ1} V2`.
    pub v2_theta1: [f64; 5],
    /// `∇_{θ2} V2`.
    pub v2_theta2: [f64; 5],
}

/// Exact gradients by differentiating the linear solve:
/// `dV = dp0ᵀ x + γ yᵀ dM x` with `(I − γM)ᵀ y = p0`.
pub fn value_gradients(game: &IteratedGame, p1: &Memory1Policy, p2: &Memory1Policy) -> Result<ValueGradients> {
    let chain = Chain::build(game, p1, p2)?;
    let g = game.gamma;
    Ok(ValueGradients {
        v1_theta1: chain.gradient(g, 0, 0),
        v1_theta2: chain.gradient(g, 0, 1),
        v2_theta1: chain.gradient(g, 1, 0),
        v2_theta2: chain.gradient(g, 1, 1),
    })
}

/// Discounted-occupancy probability that each agent cooperates,
/// `(1 − γ) Σ_t γ^t P(cooperate at t)`.
pub fn cooperation_rates(game: &IteratedGame, p1: &Memory1Policy, p2: &Memory1Policy) -> Result<[f64; 2]> {
    let chain = Chain::build(game, p1, p2)?;
    let z = chain.y * (1.0 - game.gamma);
    Ok([z[0] + z[1], z[0] + z[2]])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LolaConfig {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub steps: usize,
    pub seed: u64,
}

impl Default for LolaConfig {
    fn default() -> Self {
        Self { alpha: 1.0, beta: 1.0, gamma: 0.9, steps: 500, seed: 0 }
    }
}

impl LolaConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidParameter(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        Ok(())
    }
}

fn ascend(theta: &[f64; 5], grad: &[f64; 5], rate: f64) -> [f64; 5] {
    std::array::from_fn(|k| theta[k] + rate * grad[k])
}

fn finite_policy(theta: [f64; 5], what: &str) -> Result<Memory1Policy> {
    Memory1Policy::new(theta).map_err(|_| Error::Numerical(format!("non-finite {what} update")))
}

/// `θ_i ← θ_i + α ∇_{θ_i} V_i` for both agents simultaneously.
pub fn naive_step(
    game: &IteratedGame,
    p1: &Memory1Policy,
    p2: &Memory1Policy,
    alpha: f64,
) -> Result<(Memory1Policy, Memory1Policy)> {
    let g = value_gradients(game, p1, p2)?;
    Ok((
        finite_policy(ascend(&p1.theta, &g.v1_theta1, alpha), "naive")?,
        finite_policy(ascend(&p2.theta, &g.v2_theta2, alpha), "naive")?,
    ))
}

/// `∇_{θ_i} [(∇_{θ_j} V_j)ᵀ (∇_{θ_i} V_i)]` by central differences over exact gradients.
fn shaping_term(game: &IteratedGame, p1: &Memory1Policy, p2: &Memory1Policy, agent: usize) -> Result<[f64; 5]> {
    let inner = |a: &Memory1Policy, b: &Memory1Policy| -> Result<f64> {
        let g = value_gradients(game, a, b)?;
        let (own, other) = if agent == 0 { (g.v1_theta1, g.v2_theta2) } else { (g.v2_theta2, g.v1_theta1) };
        Ok(own.iter().zip(&other).map(|(u, v)| u * v).sum())
    };
    let mut out = [0.0; 5];
    for (k, slot) in out.iter_mut().enumerate() {
        let shifted = |delta: f64| {
            let mut p = if agent == 0 { *p1 } else { *p2 };
            p.theta[k] += delta;
            if agent == 0 { inner(&p, p2) } else { inner(p1, &p) }
        };
        *slot = (shifted(SHAPING_FD_STEP)? - shifted(-SHAPING_FD_STEP)?) / (2.0 * SHAPING_FD_STEP);
    }
    Ok(out)
}

/// `θ_i ← θ_i + α ∇V_i + β ∇_{θ_i}(∇_{θ_j}V_j · ∇_{θ_i}V_i)` for both agents
/// simultaneously; with `β = 0` this is exactly [`naive_step`].
pub fn lola_step(
    game: &IteratedGame,
    p1: &Memory1Policy,
    p2: &Memory1Policy,
    config: &LolaConfig,
) -> Result<(Memory1Policy, Memory1Policy)> {
    let (n1, n2) = naive_step(game, p1, p2, config.alpha)?;
    if config.beta == 0.0 {
        return Ok((n1, n2));
    }
    let s1 = shaping_term(game, p1, p2, 0)?;
    let s2 = shaping_term(game, p1, p2, 1)?;
    Ok((
        finite_policy(ascend(&n1.theta, &s1, config.beta), "LOLA")?,
        finite_policy(ascend(&n2.theta, &s2, config.beta), "LOLA")?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShaperKind {
    Lola,
    Naive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShaperRecord {
    pub step: usize,
    pub p1: Memory1Policy,
    pub p2: Memory1Policy,
    pub v1: f64,
    pub v2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShaperTrajectory {
    pub records: Vec<ShaperRecord>,
}

impl ShaperTrajectory {
    pub fn last(&self) -> &ShaperRecord {
        self.records.last().expect("trajectory holds the initialization")
    }

    /// CSV with columns `step, V1, V2` and the ten cooperation probabilities.
    pub fn to_csv(&self) -> String {
        let mut header = vec!["step".to_owned(), "V1".to_owned(), "V2".to_owned()];
        for agent in 1..=2 {
            for slot in ["init", "CC", "CD", "DC", "DD"] {
                header.push(format!("p{agent}_{slot}"));
            }
        }
        let mut table = CsvTable::new(header);
        for r in &self.records {
            let mut row = vec![r.step as f64, r.v1, r.v2];
            row.extend(r.p1.probs());
            row.extend(r.p2.probs());
            table.push(&row);
        }
        table.render()
    }
}

/// Random `N(0, 1)` initial logits for both agents.
pub fn initial_policies(seed: u64) -> (Memory1Policy, Memory1Policy) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || Memory1Policy { theta: std::array::from_fn(|_| StandardNormal.sample(&mut rng)) };
    let p1 = draw();
    let p2 = draw();
    (p1, p2)
}

/// Trains two learners of the same kind for `config.steps` steps, recording
/// policies and exact values after every step.
pub fn train_shapers(stage: &MatrixGame, config: &LolaConfig, kind: ShaperKind) -> Result<ShaperTrajectory> {
    config.validate()?;
    let game = IteratedGame::new(stage.clone(), config.gamma)?;
    let (mut p1, mut p2) = initial_policies(config.seed);
    let record = |step: usize, p1: &Memory1Policy, p2: &Memory1Policy| -> Result<ShaperRecord> {
        let (v1, v2) = exact_values(&game, p1, p2)?;
        Ok(ShaperRecord { step, p1: *p1, p2: *p2, v1, v2 })
    };
    let mut records = vec![record(0, &p1, &p2)?];
    for step in 1..=config.steps {
        let next = match kind {
            ShaperKind::Naive => naive_step(&game, &p1, &p2, config.alpha),
            ShaperKind::Lola => lola_step(&game, &p1, &p2, config),
        };
        (p1, p2) = next.map_err(|e| match e {
            Error::Numerical(reason) => Error::Diverged { step, reason },
            other => other,
        })?;
        if p1.theta.iter().chain(&p2.theta).any(|t| t.abs() > DIVERGENCE_LOGIT) {
            return Err(Error::Diverged { step, reason: format!("a logit exceeded {DIVERGENCE_LOGIT}") });
        }
        records.push(record(step, &p1, &p2)?);
    }
    Ok(ShaperTrajectory { records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::classic_game;

    fn pd(gamma: f64) -> IteratedGame {
        IteratedGame::new(classic_game("prisoners_dilemma").unwrap(), gamma).unwrap()
    }

    #[test]
    fn saturated_values() {
        let g = pd(0.9);
        let (c, d) = (Memory1Policy::constant(20.0), Memory1Policy::constant(-20.0));
        let (v1, v2) = exact_values(&g, &c, &c).unwrap();
        assert!((v1 - 30.0).abs() < 1e-6 && (v2 - 30.0).abs() < 1e-6);
        let (v1, v2) = exact_values(&g, &d, &d).unwrap();
        assert!((v1 - 10.0).abs() < 1e-6 && (v2 - 10.0).abs() < 1e-6);
        let grads = value_gradients(&g, &d, &d).unwrap();
        for v in [grads.v1_theta1, grads.v1_theta2, grads.v2_theta1, grads.v2_theta2] {
            assert!(v.iter().all(|x| x.abs() <= 1e-6));
        }
    }

    #[test]
    fn gradients_match_central_differences() {
        let g = pd(0.8);
        for seed in 0..5 {
            let (p1, p2) = initial_policies(seed);
            let grads = value_gradients(&g, &p1, &p2).unwrap();
            let h = 1e-5;
            for k in 0..5 {
                let fd = |agent: usize, wrt: usize| {
                    let eval = |delta: f64| {
                        let (mut a, mut b) = (p1, p2);
                        if wrt == 0 { a.theta[k] += delta } else { b.theta[k] += delta }
                        let (v1, v2) = exact_values(&g, &a, &b).unwrap();
                        if agent == 0 { v1 } else { v2 }
                    };
                    (eval(h) - eval(-h)) / (2.0 * h)
                };
                for (analytic, agent, wrt) in [
                    (grads.v1_theta1[k], 0, 0),
                    (grads.v1_theta2[k], 0, 1),
                    (grads.v2_theta1[k], 1, 0),
                    (grads.v2_theta2[k], 1, 1),
                ] {
                    let numeric = fd(agent, wrt);
                    let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
                    assert!(rel <= 1e-5, "seed {seed} k {k}: {analytic} vs {numeric}");
                }
            }
        }
    }

    #[test]
    fn mirrored_symmetry() {
        let g = pd(0.9);
        let (p, _) = initial_policies(3);
        let grads = value_gradients(&g, &p, &p.mirrored()).unwrap();
        let mirrored = Memory1Policy { theta: grads.v2_theta2 }.mirrored().theta;
        for (a, b) in grads.v1_theta1.iter().zip(&mirrored) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_beta_is_naive() {
        let g = pd(0.9);
        let (p1, p2) = initial_policies(5);
        let config = LolaConfig { alpha: 0.3, beta: 0.0, ..Default::default() };
        assert_eq!(lola_step(&g, &p1, &p2, &config).unwrap(), naive_step(&g, &p1, &p2, 0.3).unwrap());
        let still = LolaConfig { alpha: 0.0, beta: 0.0, ..config };
        assert_eq!(lola_step(&g, &p1, &p2, &still).unwrap(), (p1, p2));
    }

    #[test]
    fn shaping_changes_welfare() {
        let g = pd(0.9);
        let (p1, p2) = initial_policies(1);
        let config = LolaConfig { alpha: 0.1, beta: 0.1, ..Default::default() };
        let (l1, l2) = lola_step(&g, &p1, &p2, &config).unwrap();
        let (n1, n2) = naive_step(&g, &p1, &p2, 0.1).unwrap();
        let (a, b) = exact_values(&g, &l1, &l2).unwrap();
        let (c, d) = exact_values(&g, &n1, &n2).unwrap();
        assert!(((a + b) - (c + d)).abs() > 1e-12);
    }

    #[test]
    fn single_agent_ascent() {
        let g = pd(0.9);
        for seed in 0..5 {
            let (p1, p2) = initial_policies(seed);
            let (v1, _) = exact_values(&g, &p1, &p2).unwrap();
            let (n1, _) = naive_step(&g, &p1, &p2, 1e-3).unwrap();
            let (w1, _) = exact_values(&g, &n1, &p2).unwrap();
            assert!(w1 >= v1 - 1e-8);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let stage = classic_game("prisoners_dilemma").unwrap();
        let config = LolaConfig { steps: 20, seed: 4, alpha: 0.5, beta: 0.5, ..Default::default() };
        let a = train_shapers(&stage, &config, ShaperKind::Lola).unwrap();
        assert_eq!(a, train_shapers(&stage, &config, ShaperKind::Lola).unwrap());
        assert_eq!(a.records.len(), 21);
        let empty = train_shapers(&stage, &LolaConfig { steps: 0, ..config }, ShaperKind::Naive).unwrap();
        assert_eq!(empty.records.len(), 1);
        assert_eq!((empty.records[0].p1, empty.records[0].p2), initial_policies(4));
    }

    #[test]
    fn cooperation_rates_are_probabilities() {
        let g = pd(0.9);
        let (p1, p2) = initial_policies(2);
        let c = cooperation_rates(&g, &p1, &p2).unwrap();
        assert!(c.iter().all(|v| (0.0..=1.0).contains(v)));
        let all_c = cooperation_rates(&g, &Memory1Policy::constant(30.0), &Memory1Policy::constant(-30.0)).unwrap();
        assert!((all_c[0] - 1.0).abs() < 1e-9 && all_c[1].abs() < 1e-9);
    }
}
