use gtmarl_core::equilibrium::{
    ce_check, correlated_eq_solve, epsilon_nash_check, minimax_solve, support_enumeration_nash, CeObjective,
    CeReport, NashReport,
};
use gtmarl_core::evo::{
    fixed_point_check, integrate_replicator, integrate_selection_mutation, mean_fitness, DynamicsParams,
    Integrator, PayoffMatrix, PopulationState,
};
use gtmarl_core::game::schema::{GameDocument, Violation};
use gtmarl_core::game::{MatrixGame, MixedProfile, StochasticGame};
use gtmarl_core::merl::{merl_train, MerlConfig};
use gtmarl_core::output::CsvTable;
use gtmarl_core::shaping::{cooperation_rates, train_shapers, IteratedGame, LolaConfig, ShaperKind};
use gtmarl_core::tabular::{
    fictitious_play, regret_matching_play, shapley_value_iteration, CorrelatedQ, LearningSchedule, MinimaxQ,
    RegretMode,
};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::failure::Failure;
use crate::manifest::{Artifact, RunManifest, MANIFEST_NAME};

pub const NASH_EPS: f64 = 1e-8;
pub const CE_EPS: f64 = 1e-9;
/// Tolerance of the incentive check on learned stage policies.
pub const LEARNED_CE_EPS: f64 = 1e-3;
/// Tolerance of the incentive check on empirical play.
pub const EMPIRICAL_CE_EPS: f64 = 0.05;
pub const SHAPLEY_TOL: f64 = 1e-12;
pub const FIXED_POINT_TOL: f64 = 1e-9;
pub const DEFAULT_DISCOUNT: f64 = 0.9;
pub const DEFAULT_REGRET_ROUNDS: usize = 100_000;
pub const DEFAULT_FP_ROUNDS: usize = 10_000;

/// Emitted files plus a failure to report after they are written.
#[derive(Debug)]
pub struct RunOutput {
    pub artifacts: Vec<Artifact>,
    pub failure: Option<Failure>,
}

impl RunOutput {
    fn ok(artifacts: Vec<Artifact>) -> Self {
        Self { artifacts, failure: None }
    }

    fn checked(artifacts: Vec<Artifact>, passes: bool, what: &str) -> Self {
        let failure = (!passes).then(|| Failure::numerical(format!("{what} failed verification")));
        Self { artifacts, failure }
    }
}

fn matrix_game(cfg: &ExperimentConfig) -> Result<MatrixGame, Failure> {
    Ok(cfg.load_game()?.into_matrix()?)
}

fn joint_labels(game: &MatrixGame) -> Vec<Vec<usize>> {
    (0..game.joint_action_count()).map(|j| game.space().decode(j)).collect()
}

fn reject_oracle(cfg: &ExperimentConfig, command: &str) -> Result<(), Failure> {
    if cfg.oracle {
        return Err(Failure::usage(format!("--oracle is not available for {command}")));
    }
    Ok(())
}

fn reject_mode(cfg: &ExperimentConfig, command: &str) -> Result<(), Failure> {
    if let Some(mode) = &cfg.mode {
        return Err(Failure::usage(format!("--mode {mode:?} is not available for {command}")));
    }
    Ok(())
}

#[derive(Serialize)]
struct MinimaxFile {
    solver: &'static str,
    value: f64,
    dual_value: f64,
    duality_gap: f64,
    strategies: Vec<Vec<f64>>,
}

pub fn solve_minimax(cfg: &mut ExperimentConfig) -> Result<RunOutput, Failure> {
    reject_mode(cfg, "solve minimax")?;
    let game = matrix_game(cfg)?;
    let sol = minimax_solve(&game)?;
    let report = epsilon_nash_check(&game, &sol.strategies, NASH_EPS)?;
    let file = MinimaxFile {
        solver: "minimax",
        value: sol.value,
        dual_value: sol.dual_value,
        duality_gap: sol.duality_gap(),
        strategies: sol.strategies.strategies.clone(),
    };
    let passes = report.passes;
    Ok(RunOutput::checked(
        vec![Artifact::json("solution.json", &file), Artifact::json("verification.json", &report)],
        passes,
        "minimax solution",
    ))
}

#[derive(Serialize)]
struct Equilibrium {
    strategies: Vec<Vec<f64>>,
    payoffs: Vec<f64>,
}

#[derive(Serialize)]
struct NashFile {
    solver: &'static str,
    equilibria: Vec<Equilibrium>,
}

#[derive(Serialize)]
struct NashVerification {
    eps: f64,
    passes: bool,
    reports: Vec<NashReport>,
}

pub fn solve_nash_enum(cfg: &mut ExperimentConfig) -> Result<RunOutput, Failure> {
    reject_mode(cfg, "solve nash-enum")?;
    let game = matrix_game(cfg)?;
    let profiles = support_enumeration_nash(&game)?;
    let mut equilibria = Vec::with_capacity(profiles.len());
    let mut reports = Vec::with_capacity(profiles.len());
    for p in &profiles {
        equilibria.push(Equilibrium { strategies: p.strategies.clone(), payoffs: game.expected_payoff(p)? });
        reports.push(epsilon_nash_check(&game, p, NASH_EPS)?);
    }
    let passes = reports.iter().all(|r| r.passes);
    let verification = NashVerification { eps: NASH_EPS, passes, reports };
    Ok(RunOutput::checked(
        vec![
            Artifact::json("solution.json", &NashFile { solver: "nash-enum", equilibria }),
            Artifact::json("verification.json", &verification),
        ],
        passes,
        "support enumeration",
    ))
}

#[derive(Serialize)]
struct CeFile {
    solver: &'static str,
    objective: CeObjective,
    joint_actions: Vec<Vec<usize>>,
    lambda: Vec<f64>,
    expected_payoffs: Vec<f64>,
    welfare: f64,
}

pub fn solve_ce(cfg: &mut ExperimentConfig) -> Result<RunOutput, Failure> {
    reject_mode(cfg, "solve ce")?;
    let game = matrix_game(cfg)?;
    let objective = *cfg.objective.get_or_insert(CeObjective::Utilitarian);
    let policy = correlated_eq_solve(&game, objective)?;
    let report = ce_check(&game, &policy, CE_EPS)?;
    let file = CeFile {
        solver: "ce",
        objective,
        joint_actions: joint_labels(&game),
        expected_payoffs: policy.expected_payoffs(&game),
        welfare: policy.welfare(&game),
        lambda: policy.lambda,
    };
    let passes = report.passes;
    Ok(RunOutput::checked(
        vec![Artifact::json("solution.json", &file), Artifact::json("verification.json", &report)],
        passes,
        "correlated equilibrium",
    ))
}

fn schedule(cfg: &mut ExperimentConfig, seed: u64) -> LearningSchedule {
    let mut s = cfg.schedule.clone().unwrap_or_default();
    s.seed = seed;
    if let Some(steps) = cfg.steps {
        s.max_steps = steps;
    }
    cfg.schedule = Some(s.clone());
    s
}

/// Matrix games become one-state repeated games.
fn stochastic_game(cfg: &ExperimentConfig) -> Result<StochasticGame, Failure> {
    let promote = cfg.discount.filter(|d| *d > 0.0 && *d < 1.0).unwrap_or(DEFAULT_DISCOUNT);
    Ok(cfg.load_game()?.into_stochastic(promote)?)
}

fn with_discount(game: StochasticGame, discount: f64) -> Result<StochasticGame, Failure> {
    if discount == game.discount() {
        return Ok(game);
    }
    let rewards = (0..game.num_agents()).map(|i| game.rewards(i).to_vec()).collect();
    Ok(StochasticGame::new(
        game.num_states(),
        game.actions().to_vec(),
        game.transition().to_vec(),
        rewards,
        discount,
    )?)
}

fn record_every(steps: usize) -> usize {
    (steps / 100).max(1)
}

#[derive(Serialize)]
struct OracleSummary {
    values: Vec<f64>,
    sweeps: usize,
    sup_error: f64,
}

#[derive(Serialize)]
struct MinimaxQFile {
    algorithm: &'static str,
    steps: usize,
    discount: f64,
    values: Vec<f64>,
    policies: Vec<MixedProfile>,
    /// `q[s][joint]` for agent 0.
    q: Vec<Vec<f64>>,
    oracle: Option<OracleSummary>,
}

fn sup_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn learn_minimax_q(cfg: &mut ExperimentConfig) -> Result<RunOutput, Failure> {
    reject_mode(cfg, "learn minimax-q")?;
    let seed = cfg.require_seed()?;
    let game = stochastic_game(cfg)?;
    let schedule = schedule(cfg, seed);
    let discount = cfg.discount.unwrap_or(game.discount());
    let oracle = if cfg.oracle {
        Some(shapley_value_iteration(&with_discount(game.clone(), discount)?, SHAPLEY_TOL)?)
    } else {
        None
    };
    let result = MinimaxQ::new(&game, schedule.clone())?.with_discount(discount)?.run(record_every(schedule.max_steps))?;

    let states = game.num_states();
    let mut header = vec!["step".to_owned()];
    header.extend((0..states).map(|s| format!("v_s{s}")));
    if oracle.is_some() {
        header.extend((0..states).map(|s| format!("err_s{s}")));
        header.push("sup_error".to_owned());
    }
    let mut table = CsvTable::new(header);
    for point in &result.curve {
        let values = &point.values[0];
        let mut row = vec![point.step as f64];
        row.extend(values);
        if let Some(o) = &oracle {
            row.extend(values.iter().zip(&o.values).map(|(v, w)| (v - w).abs()));
            row.push(sup_error(values, &o.values));
        }
        table.push(&row);
    }
    let q = (0..states).map(|s| result.q.state_row(0, s).to_vec()).collect();
    let file = MinimaxQFile {
        algorithm: "minimax-q",
        steps: schedule.max_steps,
        discount,
        oracle: oracle.map(|o| OracleSummary { sup_error: sup_error(&result.values, &o.values), values: o.values, sweeps: o.sweeps }),
        values: result.values,
        policies: result.policies,
        q,
    };
    Ok(RunOutput::ok(vec![Artifact::text("curve.csv", table.render()), Artifact::json("result.json", &file)]))
}

#[derive(Serialize)]
struct StagePolicyFile {
    state: usize,
    lambda: Vec<f64>,
    check: CeReport,
}

#[derive(Serialize)]
struct CorrelatedQFile {
    algorithm: &'static str,
    objective: CeObjective,
    steps: usize,
    discount: f64,
    joint_actions: Vec<Vec<usize>>,
    values: Vec<Vec<f64>>,
    policies: Vec<StagePolicyFile>,
    q: Vec<Vec<Vec<f64>>>,
}

pub fn learn_ce_q(cfg: &mut ExperimentConfig) -> Result<RunOutput, Failure> {
    reject_mode(cfg, "learn ce-q")?;
    reject_oracle(cfg, "learn ce-q")?;
    let seed = cfg.require_seed()?;
    let game = stochastic_game(cfg)?;
    let objective = *cfg.objective.get_or_insert(CeObjective::Utilitarian);
    let schedule = schedule(cfg, seed);
    let discount = cfg.discount.unwrap_or(game.discount());
    let result = CorrelatedQ::new(&game, objective, schedule.clone())?
        .with_discount(discount)?
        .run(record_every(schedule.max_steps))?;

    let (agents, states) = (game.num_agents(), game.num_states());
    let mut header = vec!["step".to_owned()];
    for i in 0..agents {
        header.extend((0..states).map(|s| format!("v{i}_s{s}")));
    }
    let mut table = CsvTable::new(header);
    for point in &result.curve {
        let mut row = vec![point.step as f64];
        row.extend(point.values.iter().flatten());
        table.push(&row);
    }

    let mut policies = Vec::with_capacity(states);
    let mut passes = true;
    for (s, policy) in result.policies.iter().enumerate() {
        let payoffs = (0..agents).map(|i| result.q.state_row(i, s).to_vec()).collect();
        let stage = MatrixGame::new(game.actions().to_vec(), payoffs)?;
        let check = ce_check(&stage, policy, LEARNED_CE_EPS)?;
        passes &= check.passes;
        policies.push(StagePolicyFile { state: s, lambda: policy.lambda.clone(), check });
    }
    let q = (0..agents).map(|i| (0..states).map(|s| result.q.state_row(i, s).to_vec()).collect()).collect();
    let file = CorrelatedQFile {
        algorithm: "ce-q",
        objective,
        steps: schedule.max_steps,
        discount,
        joint_actions: (0..game.joint_action_count()).map(|j| game.space().decode(j)).collect(),
        values: result.values,
        policies,
        q,
    };
    Ok(RunOutput::checked(
        vec![Artifact::text("curve.csv", table.render()), Artifact::json("result.json", &file)],
        passes,
        "learned stage policies",
    ))
}

#[derive(Serialize)]
struct RegretFile {
    algorithm: &'static str,
    mode: RegretMode,
    rounds: u64,
    joint_actions: Vec<Vec<usize>>,
    empirical: Vec<f64>,
    marginals: Vec<Vec<f64>>,
    average_regret: Vec<f64>,
    ce_check: CeReport,
}

pub fn learn_regret(cfg: &mut ExperimentConfig) -> Result<RunOutput, Failure> {
    reject_oracle(cfg, "learn regret")?;
    let seed = cfg.require_seed()?;
    let game = matrix_game(cfg)?;
    let mode: RegretMode = cfg
        .mode
        .get_or_insert_with(|| "external".into())
        .parse()
        .map_err(|e: gtmarl_core::Error| Failure::usage(e.to_string()))?;
    let rounds = *cfg.steps.get_or_insert(DEFAULT_REGRET_ROUNDS);
    let result = regret_matching_play(&game, rounds, mode, seed)?;

    let agents = game.num_agents();
    let mut header = vec!["round".to_owned()];
    header.extend((0..agents).map(|i| format!("regret_{i}")));
    let mut table = CsvTable::new(header);
    for (t, regrets) in &result.curve {
        let mut row = vec![*t as f64];
        row.extend(regrets);
        table.push(&row);
    }
    let total = result.state.rounds.max(1) as f64;
    let marginals = result
        .state
        .play_counts
        .iter()
        .map(|counts| counts.iter().map(|&c| c as f64 / total).collect())
        .collect();
    let empirical = gtmarl_core::equilibrium::CorrelatedPolicy { lambda: result.empirical.clone() };
    let file = RegretFile {
        algorithm: "regret",
        mode,
        rounds: result.state.rounds,
        joint_actions: joint_labels(&game),
        marginals,
        average_regret: (0..agents).map(|i| result.state.average_regret(i)).collect(),
        ce_check: ce_check(&game, &empirical, EMPIRICAL_CE_EPS)?,
        empirical: result.empirical,
    };
    Ok(RunOutput::ok(vec![Artifact::text("curve.csv", table.render()), Artifact::json("result.json", &file)]))
}

#[derive(Serialize)]
struct FictitiousPlayFile {
    algorithm: &'static str,
    rounds: usize,
    strategies: Vec<Vec<f64>>,
    exploitability: f64,
}

pub fn learn_fp(cfg: &mut ExperimentConfig) -> Result<RunOutput, Failure> {
    reject_mode(cfg, "learn fp")?;
    reject_oracle(cfg, "learn fp")?;
    cfg.require_seed()?;
    let game = matrix_game(cfg)?;
    let rounds = *cfg.steps.get_or_insert(DEFAULT_FP_ROUNDS);
    let result = fictitious_play(&game, rounds)?;
    let mut table = CsvTable::new(["round", "exploitability"]);
    for (t, e) in result.exploitability.iter().enumerate() {
        table.push(&[(t + 1) as f64, *e]);
    }
    let file = FictitiousPlayFile {
        algorithm: "fp",
        rounds,
        exploitability: result.exploitability.last().copied().unwrap_or(0.0),
        strategies: result.strategies.strategies,
    };
    Ok(RunOutput::ok(vec![Artifact::text("curve.csv", table.render()), Artifact::json("result.json", &file)]))
}

fn population(x: Option<&Vec<f64>>, m: usize, what: &str) -> Result<PopulationState, Failure> {
    match x {
        None => Ok(PopulationState::uniform(m)),
        Some(x) if x.len() != m => {
            Err(Failure::precondition(format!("{what} has {} entries, the game has {m} strategies", x.len())))
        }
        Some(x) => Ok(PopulationState::new(x.clone()).map_err(|e| Failure::from(e).context(what))?),
    }
}

fn transpose(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (0..rows.first().map_or(0, Vec::len)).map(|j| rows.iter().map(|r| r[j]).collect()).collect()
}

#[derive(Serialize)]
struct ReplicatorFile {
    algorithm: &'static str,
    mode: String,
    integrator: Integrator,
    params: DynamicsParams,
    final_state: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_opponent_state: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_fitness: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fixed_point: Option<bool>,
}

pub fn learn_replicator(cfg: &mut ExperimentConfig) -> Result<RunOutput, Failure> {
    reject_oracle(cfg, "learn replicator")?;
    cfg.require_seed()?;
    let game = matrix_game(cfg)?;
    if game.num_agents() != 2 {
        return Err(Failure::precondition("replicator dynamics need a 2-agent game"));
    }
    let mut params = cfg.dynamics.unwrap_or_default();
    if let Some(steps) = cfg.steps {
        params.steps = steps;
    }
    cfg.dynamics = Some(params);
    let method = *cfg.integrator.get_or_insert(Integrator::Rk4);
    let mode = cfg.mode.get_or_insert_with(|| "single".into()).clone();
    let a = PayoffMatrix::new(&game.matrix(0)?)?;
    let x0 = population(cfg.x0.as_ref(), a.dim(), "x0")?;
    match mode.as_str() {
        "single" => {
            let traj = integrate_replicator(&a, &x0, &params, method)?;
            let last = PopulationState::new(traj.last().to_vec())?;
            let file = ReplicatorFile {
                algorithm: "replicator",
                mode,
                integrator: method,
                params,
                mean_fitness: Some(mean_fitness(&a, last.as_slice())),
                fixed_point: Some(fixed_point_check(&a, &last, FIXED_POINT_TOL)?),
                final_state: last.into_vec(),
                final_opponent_state: None,
            };
            Ok(RunOutput::ok(vec![Artifact::text("curve.csv", traj.to_csv()), Artifact::json("result.json", &file)]))
        }
        "two-population" => {
            let b = PayoffMatrix::new(&transpose(&game.matrix(1)?))?;
            if b.dim() != a.dim() {
                return Err(Failure::precondition("two-population dynamics need a square game"));
            }
            let y0 = population(cfg.y0.as_ref(), b.dim(), "y0")?;
            let (tx, ty) = integrate_selection_mutation(&a, &b, &x0, &y0, &params, method)?;
            let file = ReplicatorFile {
                algorithm: "replicator",
                mode,
                integrator: method,
                params,
                final_state: tx.last().to_vec(),
                final_opponent_state: Some(ty.last().to_vec()),
                mean_fitness: None,
                fixed_point: None,
            };
            Ok(RunOutput::ok(vec![
                Artifact::text("curve_x.csv", tx.to_csv()),
                Artifact::text("curve_y.csv", ty.to_csv()),
                Artifact::json("result.json", &file),
            ]))
        }
        other => Err(Failure::usage(format!("unknown replicator mode {other:?}; use single or two-population"))),
    }
}

#[derive(Serialize)]
struct ShaperFile {
    algorithm: &'static str,
    learner: ShaperKind,
    config: LolaConfig,
    v1: f64,
    v2: f64,
    cooperation: [f64; 2],
    p1: [f64; 5],
    p2: [f64; 5],
    theta1: [f64; 5],
    theta2: [f64; 5],
}

pub fn learn_lola(cfg: &mut ExperimentConfig) -> Result<RunOutput, Failure> {
    reject_oracle(cfg, "learn lola")?;
    let seed = cfg.require_seed()?;
    let game = matrix_game(cfg)?;
    let kind = match cfg.mode.get_or_insert_with(|| "lola".into()).as_str() {
        "lola" => ShaperKind::Lola,
        "naive" => ShaperKind::Naive,
        other => return Err(Failure::usage(format!("unknown learner {other:?}; use lola or naive"))),
    };
    let mut config = cfg.lola.unwrap_or_default();
    config.seed = seed;
    if let Some(steps) = cfg.steps {
        config.steps = steps;
    }
    cfg.lola = Some(config);
    let traj = train_shapers(&game, &config, kind)?;
    let last = traj.last();
    let iterated = IteratedGame::new(game, config.gamma)?;
    let file = ShaperFile {
        algorithm: "lola",
        learner: kind,
        config,
        v1: last.v1,
        v2: last.v2,
        cooperation: cooperation_rates(&iterated, &last.p1, &last.p2)?,
        p1: last.p1.probs(),
        p2: last.p2.probs(),
        theta1: last.p1.theta,
        theta2: last.p2.theta,
    };
    Ok(RunOutput::ok(vec![Artifact::text("curve.csv", traj.to_csv()), Artifact::json("result.json", &file)]))
}

#[derive(Serialize)]
struct MerlFile<'a> {
    algorithm: &'static str,
    config: &'a MerlConfig,
    best_fitness: f64,
    best_ever: f64,
    best_genome: &'a [f64],
    result: &'a gtmarl_core::merl::MerlResult,
}

pub fn learn_merl(cfg: &mut ExperimentConfig) -> Result<RunOutput, Failure> {
    reject_mode(cfg, "learn merl")?;
    reject_oracle(cfg, "learn merl")?;
    if cfg.game.is_some() {
        return Err(Failure::usage("merl runs on its built-in rendezvous task and takes no game"));
    }
    let seed = cfg.require_seed()?;
    let mut config = cfg.merl.clone().unwrap_or_default();
    config.seed = seed;
    if let Some(generations) = cfg.steps {
        config.generations = generations;
    }
    cfg.merl = Some(config.clone());
    let result = merl_train(&config)?;
    let echo = serde_json::to_string(&config).expect("config serializes");
    let csv = format!("# config {echo}\n{}", result.curve_csv());
    let last = result.curve.last().expect("at least one generation");
    let file = MerlFile {
        algorithm: "merl",
        config: &config,
        best_fitness: last.best_fitness,
        best_ever: last.best_ever,
        best_genome: result.best_genomes.last().expect("at least one generation"),
        result: &result,
    };
    Ok(RunOutput::ok(vec![Artifact::text("curve.csv", csv), Artifact::json("result.json", &file)]))
}

#[derive(Debug, Serialize)]
pub struct ValidationReport {
    pub path: String,
    pub valid: bool,
    pub violations: Vec<Violation>,
}

/// Runs every game invariant on the file at `path`.
pub fn validate_file(path: &std::path::Path) -> Result<ValidationReport, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    let doc = GameDocument::from_json(&text).map_err(|e| Failure::from(e).context(&path.display().to_string()))?;
    let mut violations = doc.validate();
    if violations.is_empty() {
        if let Err(e) = doc.to_game() {
            violations.push(Violation { path: "$".into(), message: e.to_string() });
        }
    }
    Ok(ValidationReport { path: path.display().to_string(), valid: violations.is_empty(), violations })
}

#[derive(Debug, Serialize)]
pub struct RunVerification {
    pub dir: String,
    pub files: usize,
    pub mismatched: Vec<String>,
}

/// Recomputes the digest of every file listed in the run's manifest.
pub fn verify_run(dir: &std::path::Path) -> Result<RunVerification, Failure> {
    let path = dir.join(MANIFEST_NAME);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    let manifest: RunManifest =
        serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    Ok(RunVerification {
        dir: dir.display().to_string(),
        files: manifest.files.len(),
        mismatched: manifest.verify(dir),
    })
}
