//! Replicator dynamics, Boltzmann action selection and the selection–mutation
//! dynamics of Boltzmann Q-learning.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::check_distribution;

/// Simplex tolerance for population states.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Mixture over `m` strategies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationState {
    x: Vec<f64>,
}

impl PopulationState {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        check_distribution(&x, SIMPLEX_TOL)
            .map_err(|msg| Error::InvalidParameter(format!("population state {msg}")))?;
        Ok(Self { x })
    }

    pub fn uniform(m: usize) -> Self {
        Self { x: vec![1.0 / m as f64; m] }
    }

    pub fn vertex(m: usize, k: usize) -> Self {
        let mut x = vec![0.0; m];
        x[k] = 1.0;
        Self { x }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.x
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsParams {
    /// Learning intensity `α`.
    pub alpha: f64,
    /// Boltzmann temperature parameter `τ` (larger is greedier).
    pub tau: f64,
    pub dt: f64,
    pub steps: usize,
}

impl Default for DynamicsParams {
    fn default() -> Self {
        Self { alpha: 1.0, tau: 1.0, dt: 0.01, steps: 10_000 }
    }
}

impl DynamicsParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if !(self.tau >= 0.0) || !self.tau.is_finite() {
            return Err(Error::InvalidParameter(format!("tau must be >= 0, got {}", self.tau)));
        }
        if !(self.dt > 0.0) || !(self.dt * self.steps as f64).is_finite() {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {}", self.dt)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    Rk4,
    Euler,
}

/// Square payoff matrix `A`, `A[i][j]` = payoff of strategy `i` against `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffMatrix {
    m: usize,
    data: Vec<f64>,
}

impl PayoffMatrix {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        if m == 0 || rows.iter().any(|r| r.len() != m) {
            return Err(Error::Shape("payoff matrix must be square and nonempty".into()));
        }
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("payoff[{}][{}]", k / m, k % m)));
        }
        Ok(Self { m, data })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.m + j]
    }

    /// `(A y)_i` for every `i`.
    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        self.data.chunks(self.m).map(|row| row.iter().zip(y).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.m).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.m {
            return Err(Error::Shape(format!(
                "state has {} strategies, payoff matrix is {}x{}",
                x.len(),
                self.m,
                self.m
            )));
        }
        Ok(())
    }
}

/// Mean fitness `xᵀ A x`.
pub fn mean_fitness(a: &PayoffMatrix, x: &[f64]) -> f64 {
    a.apply(x).iter().zip(x).map(|(f, p)| f * p).sum()
}

fn replicator_field(a: &PayoffMatrix, x: &[f64]) -> Vec<f64> {
    let fitness = a.apply(x);
    let mean: f64 = fitness.iter().zip(x).map(|(f, p)| f * p).sum();
    x.iter().zip(&fitness).map(|(p, f)| p * (f - mean)).collect()
}

/// `ẋ_i = x_i [(Ax)_i − xᵀAx]`.
pub fn replicator_derivative(a: &PayoffMatrix, x: &PopulationState) -> Result<Vec<f64>> {
    a.check_dim(&x.x)?;
    Ok(replicator_field(a, &x.x))
}

/// Sequence of states at times `0, dt, 2dt, …`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub dt: f64,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.states.len()).map(move |k| k as f64 * self.dt)
    }
}

/// Clips negative components to zero and renormalizes.
fn simplex_guard(x: &mut [f64]) {
    for p in x.iter_mut() {
        if *p < 0.0 {
            *p = 0.0;
        }
    }
    let sum: f64 = x.iter().sum();
    x.iter_mut().for_each(|p| *p /= sum);
}

fn step_field(
    field: &dyn Fn(&[f64]) -> Vec<f64>,
    x: &[f64],
    dt: f64,
    method: Integrator,
) -> Vec<f64> {
    let axpy = |base: &[f64], k: &[f64], h: f64| -> Vec<f64> {
        base.iter().zip(k).map(|(b, d)| b + h * d).collect()
    };
    match method {
        Integrator::Euler => axpy(x, &field(x), dt),
        Integrator::Rk4 => {
            let k1 = field(x);
            let k2 = field(&axpy(x, &k1, dt / 2.0));
            let k3 = field(&axpy(x, &k2, dt / 2.0));
            let k4 = field(&axpy(x, &k3, dt));
            x.iter()
                .enumerate()
                .map(|(i, p)| p + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                .collect()
        }
    }
}

fn integrate(
    field: &dyn Fn(&[f64]) -> Vec<f64>,
    x0: &[f64],
    params: &DynamicsParams,
    method: Integrator,
) -> Result<Trajectory> {
    let mut states = Vec::with_capacity(params.steps + 1);
    states.push(x0.to_vec());
    let mut x = x0.to_vec();
    for step in 1..=params.steps {
        x = step_field(field, &x, params.dt, method);
        if x.iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged { step, reason: "non-finite population state".into() });
        }
        simplex_guard(&mut x);
        states.push(x.clone());
    }
    Ok(Trajectory { dt: params.dt, states })
}

/// Fixed-step integration of the replicator equation; every state is recorded.
pub fn integrate_replicator(
    a: &PayoffMatrix,
    x0: &PopulationState,
    params: &DynamicsParams,
    method: Integrator,
) -> Result<Trajectory> {
    params.validate()?;
    a.check_dim(&x0.x)?;
    integrate(&|x| replicator_field(a, x), &x0.x, params, method)
}

/// `x_i' = x_i ((Ax)_i + shift) / (xᵀAx + shift)`.
pub fn discrete_replicator_step(a: &PayoffMatrix, x: &PopulationState, shift: f64) -> Result<PopulationState> {
    a.check_dim(&x.x)?;
    let fitness = a.apply(&x.x);
    if let Some(i) = fitness.iter().position(|f| !(f + shift > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "shifted fitness of strategy {i} is {} (must be positive)",
            fitness[i] + shift
        )));
    }
    let mean: f64 = fitness.iter().zip(&x.x).map(|(f, p)| f * p).sum::<f64>() + shift;
    let mut next: Vec<f64> = x.x.iter().zip(&fitness).map(|(p, f)| p * (f + shift) / mean).collect();
    simplex_guard(&mut next);
    Ok(PopulationState { x: next })
}

/// `x_i = e^{τ q_i} / Σ_j e^{τ q_j}`, evaluated after subtracting `max q`.
pub fn boltzmann_policy(q: &[f64], tau: f64) -> Result<Vec<f64>> {
    if q.is_empty() {
        return Err(Error::Shape("boltzmann policy of an empty q vector".into()));
    }
    if let Some(k) = q.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("q[{k}]")));
    }
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::InvalidParameter(format!("tau must be >= 0, got {tau}")));
    }
    let max = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = q.iter().map(|v| (tau * (v - max)).exp()).collect();
    let z: f64 = w.iter().sum();
    Ok(w.into_iter().map(|v| v / z).collect())
}

/// `x_i α [Σ_j x_j ln x_j − ln x_i]` with `0 ln 0 = 0`.
pub fn mutation_term(x: &[f64], alpha: f64) -> Vec<f64> {
    let neg_entropy: f64 = x.iter().filter(|&&p| p > 0.0).map(|p| p * p.ln()).sum();
    x.iter()
        .map(|&p| if p > 0.0 { p * alpha * (neg_entropy - p.ln()) } else { 0.0 })
        .collect()
}

/// Two-population selection–mutation field for the row population `x`
/// playing against `y`:
/// `ẋ_i = x_i α τ [(Ay)_i − xᵀAy] + x_i α [Σ_j x_j ln x_j − ln x_i]`.
pub fn selection_mutation_derivative(
    a: &PayoffMatrix,
    x: &PopulationState,
    opponent: &PopulationState,
    params: &DynamicsParams,
) -> Result<Vec<f64>> {
    a.check_dim(&x.x)?;
    a.check_dim(&opponent.x)?;
    Ok(selection_mutation_field(a, &x.x, &opponent.x, params.alpha, params.tau))
}

fn selection_mutation_field(a: &PayoffMatrix, x: &[f64], y: &[f64], alpha: f64, tau: f64) -> Vec<f64> {
    let fitness = a.apply(y);
    let mean: f64 = fitness.iter().zip(x).map(|(f, p)| f * p).sum();
    let mutation = mutation_term(x, alpha);
    x.iter()
        .zip(&fitness)
        .zip(mutation)
        .map(|((p, f), m)| p * alpha * tau * (f - mean) + m)
        .collect()
}

/// Joint integration of the two coupled populations; `a` is the row
/// player's matrix and `b` the column player's, both indexed `[own][other]`.
pub fn integrate_selection_mutation(
    a: &PayoffMatrix,
    b: &PayoffMatrix,
    x0: &PopulationState,
    y0: &PopulationState,
    params: &DynamicsParams,
    method: Integrator,
) -> Result<(Trajectory, Trajectory)> {
    params.validate()?;
    a.check_dim(&x0.x)?;
    b.check_dim(&y0.x)?;
    let m = a.dim();
    let field = |z: &[f64]| -> Vec<f64> {
        let (x, y) = z.split_at(m);
        let mut out = selection_mutation_field(a, x, y, params.alpha, params.tau);
        out.extend(selection_mutation_field(b, y, x, params.alpha, params.tau));
        out
    };
    let mut z0 = x0.x.clone();
    z0.extend_from_slice(&y0.x);
    let mut states = vec![z0.clone()];
    let mut z = z0;
    for step in 1..=params.steps {
        z = step_field(&field, &z, params.dt, method);
        if z.iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged { step, reason: "non-finite population state".into() });
        }
        let (x, y) = z.split_at_mut(m);
        simplex_guard(x);
        simplex_guard(y);
        states.push(z.clone());
    }
    let split = |part: std::ops::Range<usize>| Trajectory {
        dt: params.dt,
        states: states.iter().map(|s| s[part.clone()].to_vec()).collect(),
    };
    Ok((split(0..m), split(m..m + b.dim())))
}

/// True iff `‖ẋ‖_∞ ≤ tol` under the replicator field.
pub fn fixed_point_check(a: &PayoffMatrix, x: &PopulationState, tol: f64) -> Result<bool> {
    let d = replicator_derivative(a, x)?;
    Ok(d.iter().all(|v| v.abs() <= tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rps() -> PayoffMatrix {
        PayoffMatrix::new(&[vec![0., -1., 1.], vec![1., 0., -1.], vec![-1., 1., 0.]]).unwrap()
    }

    fn pd() -> PayoffMatrix {
        PayoffMatrix::new(&[vec![3., 0.], vec![5., 1.]]).unwrap()
    }

    #[test]
    fn fixed_points() {
        let d = replicator_derivative(&rps(), &PopulationState::uniform(3)).unwrap();
        assert!(d.iter().all(|v| v.abs() < 1e-15));
        for k in 0..3 {
            assert!(replicator_derivative(&rps(), &PopulationState::vertex(3, k))
                .unwrap()
                .iter()
                .all(|&v| v == 0.0));
            assert!(fixed_point_check(&rps(), &PopulationState::vertex(3, k), 0.0).unwrap());
        }
        assert!(fixed_point_check(&rps(), &PopulationState::uniform(3), 1e-10).unwrap());
        assert!(!fixed_point_check(&pd(), &PopulationState::uniform(2), 1e-3).unwrap());
    }

    #[test]
    fn defection_grows() {
        let d = replicator_derivative(&pd(), &PopulationState::uniform(2)).unwrap();
        assert!(d[0] < 0.0 && d[1] > 0.0);
        let next = discrete_replicator_step(&pd(), &PopulationState::uniform(2), 10.0).unwrap();
        assert!(next.as_slice()[1] > 0.5);
    }

    #[test]
    fn discrete_step_fixed_points_and_errors() {
        let u = PopulationState::uniform(3);
        let next = discrete_replicator_step(&rps(), &u, 2.0).unwrap();
        assert!(next.as_slice().iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-15));
        let v = PopulationState::vertex(3, 1);
        assert_eq!(discrete_replicator_step(&rps(), &v, 2.0).unwrap(), v);
        assert!(discrete_replicator_step(&rps(), &u, 0.0).is_err());
    }

    #[test]
    fn vertex_trajectory_is_constant() {
        let params = DynamicsParams { steps: 100, ..Default::default() };
        let x0 = PopulationState::vertex(3, 2);
        let t = integrate_replicator(&rps(), &x0, &params, Integrator::Rk4).unwrap();
        assert!(t.states.iter().all(|s| s == x0.as_slice()));
    }

    #[test]
    fn euler_and_rk4_agree_for_small_steps() {
        let params = DynamicsParams { dt: 1e-4, steps: 1000, ..Default::default() };
        let x0 = PopulationState::new(vec![0.2, 0.3, 0.5]).unwrap();
        let a = integrate_replicator(&rps(), &x0, &params, Integrator::Euler).unwrap();
        let b = integrate_replicator(&rps(), &x0, &params, Integrator::Rk4).unwrap();
        for (p, q) in a.last().iter().zip(b.last()) {
            assert!((p - q).abs() < 1e-4);
        }
    }

    #[test]
    fn boltzmann_limits() {
        assert_eq!(boltzmann_policy(&[3.0, -1.0, 2.0], 0.0).unwrap(), vec![1.0 / 3.0; 3]);
        assert_eq!(boltzmann_policy(&[0.7; 4], 5.0).unwrap(), vec![0.25; 4]);
        assert!(boltzmann_policy(&[1.0, 0.0], 1000.0).unwrap()[0] > 1.0 - 1e-9);
        assert!(boltzmann_policy(&[], 1.0).is_err());
        // huge values stay finite thanks to max subtraction
        let p = boltzmann_policy(&[1e6, 1e6 - 1.0], 1.0).unwrap();
        assert!(p.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn mutation_term_behaviour() {
        let uniform = PopulationState::uniform(3);
        let params = DynamicsParams { alpha: 0.7, tau: 2.0, ..Default::default() };
        assert!(mutation_term(uniform.as_slice(), 0.7).iter().all(|v| v.abs() < 1e-12));
        let d = selection_mutation_derivative(&rps(), &uniform, &uniform, &params).unwrap();
        assert!(d.iter().all(|v| v.abs() < 1e-12));

        // Near a vertex the mutation pushes mass back towards the interior.
        let m = mutation_term(&[0.99, 0.01], 1.0);
        let neg_entropy = 0.99f64 * 0.99f64.ln() + 0.01f64 * 0.01f64.ln();
        assert!((m[1] - 0.01 * (neg_entropy - 0.01f64.ln())).abs() < 1e-15);
        assert!(m[0] < 0.0 && m[1] > 0.0);

        // 0 ln 0 = 0 on the boundary.
        assert_eq!(mutation_term(&[1.0, 0.0], 1.0), vec![0.0, 0.0]);
    }

    #[test]
    fn alpha_zero_gives_zero_derivative() {
        let x = PopulationState::new(vec![0.2, 0.8]).unwrap();
        let d = selection_mutation_field(&pd(), x.as_slice(), &[0.5, 0.5], 0.0, 3.0);
        assert_eq!(d, vec![0.0, 0.0]);
    }

    #[test]
    fn coupled_populations_stay_on_simplex() {
        let a = pd();
        let params = DynamicsParams { alpha: 1.0, tau: 1.0, dt: 0.01, steps: 2000 };
        let (x, y) = integrate_selection_mutation(
            &a,
            &a,
            &PopulationState::new(vec![0.9, 0.1]).unwrap(),
            &PopulationState::new(vec![0.3, 0.7]).unwrap(),
            &params,
            Integrator::Rk4,
        )
        .unwrap();
        for s in x.states.iter().chain(&y.states) {
            assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        // Defection dominates but mutation keeps cooperation alive.
        assert!(x.last()[1] > 0.5 && x.last()[0] > 0.0);
    }

    #[test]
    fn invalid_inputs() {
        assert!(PayoffMatrix::new(&[vec![1.0, 2.0]]).is_err());
        assert!(PopulationState::new(vec![0.5, 0.6]).is_err());
        let bad = DynamicsParams { dt: 0.0, ..Default::default() };
        assert!(integrate_replicator(&rps(), &PopulationState::uniform(3), &bad, Integrator::Rk4).is_err());
        assert!(replicator_derivative(&pd(), &PopulationState::uniform(3)).is_err());
    }
}
