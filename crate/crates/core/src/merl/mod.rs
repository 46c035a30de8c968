//! Evolutionary team search on a sparse team reward combined with per-agent
//! deterministic policy gradients on dense local rewards, on a 1-D
//! rendezvous task with linear actors and quadratic critics.

mod ea;
mod env;
mod model;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::output::CsvTable;

pub use ea::{actors_genome, ea_generation, genome_actors, rank, EaParams, Genome, TeamPopulation};
pub use env::{env_step, EnvConfig, RendezvousEnv, StepOutcome};
pub use model::{
    actor_objective, critic_loss, critic_loss_gradient, critic_td_update, dpg_actor_update, dpg_gradient,
    soft_update, td_targets, AgentTransition, LinearActor, QuadraticCritic, ReplayBuffer, CRITIC_WEIGHTS,
    FEATURES,
};

/// One team episode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TeamRollout {
    /// `Σ_t r_t^team`.
    pub fitness: f64,
    /// `transitions[i]` holds agent `i`'s experience in order.
    pub transitions: Vec<Vec<AgentTransition>>,
}

fn rollout(
    config: &EnvConfig,
    actors: &[LinearActor],
    seed: u64,
    noise: Option<(&mut ChaCha8Rng, &Normal<f64>)>,
) -> Result<TeamRollout> {
    let mut env = RendezvousEnv::new(config.clone(), seed)?;
    let n = config.num_agents;
    let mut transitions = vec![Vec::new(); n];
    let mut fitness = 0.0;
    let mut noise = noise;
    while !env.is_done() {
        let phis: Vec<[f64; FEATURES]> = (0..n).map(|i| env.features(i)).collect();
        let actions: Vec<f64> = actors
            .iter()
            .zip(&phis)
            .map(|(actor, phi)| {
                let a = actor.act(phi);
                match noise.as_mut() {
                    Some((rng, dist)) => (a + dist.sample(&mut **rng)).clamp(-1.0, 1.0),
                    None => a,
                }
            })
            .collect();
        let out = env.step(&actions)?;
        fitness += out.team_reward;
        for i in 0..n {
            transitions[i].push(AgentTransition {
                phi: phis[i],
                action: actions[i],
                reward: out.local_rewards[i],
                next_phi: env.features(i),
            });
        }
    }
    Ok(TeamRollout { fitness, transitions })
}

/// One noise-free episode of the team encoded by `genome`.
pub fn rollout_team(config: &EnvConfig, genome: &[f64], seed: u64) -> Result<TeamRollout> {
    let dim = config.num_agents * FEATURES;
    if genome.len() != dim {
        return Err(Error::Shape(format!("genome has {} weights, expected {dim}", genome.len())));
    }
    rollout(config, &genome_actors(genome), seed, None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MerlConfig {
    pub env: EnvConfig,
    pub population: usize,
    pub elites: usize,
    pub generations: usize,
    pub eval_episodes: usize,
    pub init_sigma: f64,
    pub mutation_sigma: f64,
    pub crossover: bool,
    /// Generations between migrations; `None` disables migration.
    pub migration_period: Option<usize>,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    /// Policy-gradient updates per agent per generation; `0` gives a pure EA.
    pub pg_updates: usize,
    pub alpha_q: f64,
    pub alpha_pi: f64,
    pub gamma: f64,
    pub tau: f64,
    pub exploration_sigma: f64,
    pub seed: u64,
}

impl Default for MerlConfig {
    fn default() -> Self {
        Self {
            env: EnvConfig::default(),
            population: 10,
            elites: 2,
            generations: 50,
            eval_episodes: 5,
            init_sigma: 0.5,
            mutation_sigma: 0.1,
            crossover: true,
            migration_period: Some(5),
            buffer_capacity: 20_000,
            batch_size: 64,
            pg_updates: 50,
            alpha_q: 1e-4,
            alpha_pi: 1e-3,
            gamma: 0.95,
            tau: 0.05,
            exploration_sigma: 0.2,
            seed: 0,
        }
    }
}

impl MerlConfig {
    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.population < 2 {
            return bad(format!("population must be at least 2, got {}", self.population));
        }
        if self.elites == 0 || self.elites >= self.population {
            return bad(format!("elites must lie in [1, {}), got {}", self.population, self.elites));
        }
        if self.eval_episodes == 0 || self.buffer_capacity == 0 || self.batch_size == 0 {
            return bad("eval_episodes, buffer_capacity and batch_size must be positive".into());
        }
        if self.migration_period == Some(0) {
            return bad("migration_period must be positive (use null to disable)".into());
        }
        for (name, v) in [
            ("init_sigma", self.init_sigma),
            ("mutation_sigma", self.mutation_sigma),
            ("alpha_q", self.alpha_q),
            ("alpha_pi", self.alpha_pi),
            ("exploration_sigma", self.exploration_sigma),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return bad(format!("{name} must be >= 0, got {v}"));
            }
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0, 1), got {}", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return bad(format!("tau must lie in [0, 1], got {}", self.tau));
        }
        Ok(())
    }

    /// Fixed episode seeds used for every fitness evaluation.
    pub fn eval_seeds(&self) -> Vec<u64> {
        (0..self.eval_episodes as u64)
            .map(|k| self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k + 1))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub pg_fitness: f64,
    pub best_ever: f64,
    pub migrated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MerlResult {
    pub curve: Vec<GenerationRecord>,
    /// Top-ranked genome of every generation.
    pub best_genomes: Vec<Genome>,
    pub final_population: TeamPopulation,
    pub pg_actors: Vec<LinearActor>,
    pub pg_critics: Vec<QuadraticCritic>,
}

impl MerlResult {
    /// CSV with columns `generation, best_fitness, mean_fitness, pg_fitness`.
    pub fn curve_csv(&self) -> String {
        let mut table = CsvTable::new(["generation", "best_fitness", "mean_fitness", "pg_fitness"]);
        for r in &self.curve {
            table.push_cells(vec![
                r.generation.to_string(),
                crate::output::fmt_num(r.best_fitness),
                crate::output::fmt_num(r.mean_fitness),
                crate::output::fmt_num(r.pg_fitness),
            ]);
        }
        table.render()
    }
}

/// Per-agent policy-gradient learners with target networks.
struct PgTeam {
    actors: Vec<LinearActor>,
    target_actors: Vec<LinearActor>,
    critics: Vec<QuadraticCritic>,
    target_critics: Vec<QuadraticCritic>,
    buffers: Vec<ReplayBuffer>,
}

impl PgTeam {
    fn new(config: &MerlConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        let n = config.env.num_agents;
        let normal = Normal::new(0.0, config.init_sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let actors: Vec<LinearActor> =
            (0..n).map(|_| LinearActor { theta: std::array::from_fn(|_| normal.sample(rng)) }).collect();
        Ok(Self {
            target_actors: actors.clone(),
            actors,
            critics: vec![QuadraticCritic::default(); n],
            target_critics: vec![QuadraticCritic::default(); n],
            buffers: (0..n).map(|_| ReplayBuffer::new(config.buffer_capacity)).collect::<Result<_>>()?,
        })
    }

    fn store(&mut self, rollout: &TeamRollout) {
        for (buffer, transitions) in self.buffers.iter_mut().zip(&rollout.transitions) {
            for t in transitions {
                buffer.push(*t);
            }
        }
    }

    fn update(&mut self, config: &MerlConfig, rng: &mut ChaCha8Rng) -> Result<()> {
        for i in 0..self.actors.len() {
            for _ in 0..config.pg_updates {
                let batch = self.buffers[i].sample(rng, config.batch_size);
                if batch.is_empty() {
                    return Ok(());
                }
                self.critics[i] = critic_td_update(
                    &self.critics[i],
                    &self.target_actors[i],
                    &self.target_critics[i],
                    &batch,
                    config.alpha_q,
                    config.gamma,
                )?;
                self.actors[i] = dpg_actor_update(&self.actors[i], &self.critics[i], &batch, config.alpha_pi)?;
                let ta = soft_update(&self.target_actors[i].theta, &self.actors[i].theta, config.tau)?;
                self.target_actors[i].theta.copy_from_slice(&ta);
                let tc = soft_update(&self.target_critics[i].w, &self.critics[i].w, config.tau)?;
                self.target_critics[i].w.copy_from_slice(&tc);
            }
        }
        Ok(())
    }
}

fn evaluate(config: &MerlConfig, genome: &[f64], seeds: &[u64]) -> Result<(f64, Vec<TeamRollout>)> {
    let rollouts = seeds.iter().map(|&s| rollout_team(&config.env, genome, s)).collect::<Result<Vec<_>>>()?;
    let fitness = rollouts.iter().map(|r| r.fitness).sum::<f64>() / seeds.len() as f64;
    Ok((fitness, rollouts))
}

/// Runs `config.generations` generations of the coupled EA / policy-gradient scheme.
pub fn merl_train(config: &MerlConfig) -> Result<MerlResult> {
    config.validate()?;
    let seeds = config.eval_seeds();
    let mut ea_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut pg_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5DEE_CE66_D1CE_4E5B);
    let mut pop = TeamPopulation::random(
        &mut ea_rng,
        config.population,
        config.elites,
        config.env.num_agents,
        config.init_sigma,
    )?;
    let mut pg = PgTeam::new(config, &mut pg_rng)?;
    let exploration = Normal::new(0.0, config.exploration_sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let params = EaParams { mutation_sigma: config.mutation_sigma, crossover: config.crossover };

    let mut curve = Vec::with_capacity(config.generations);
    let mut best_genomes = Vec::with_capacity(config.generations);
    let mut best_ever = f64::NEG_INFINITY;
    for generation in 0..config.generations {
        let mut fitnesses = Vec::with_capacity(pop.len());
        for genome in &pop.genomes {
            let (f, rollouts) = evaluate(config, genome, &seeds)?;
            rollouts.iter().for_each(|r| pg.store(r));
            fitnesses.push(f);
        }

        let migrated = matches!(config.migration_period, Some(p) if generation > 0 && generation % p == 0);
        if migrated {
            let worst = rank(&fitnesses).last().copied().expect("population is nonempty");
            let genome = actors_genome(&pg.actors);
            let (f, rollouts) = evaluate(config, &genome, &seeds)?;
            rollouts.iter().for_each(|r| pg.store(r));
            pop.genomes[worst] = genome;
            fitnesses[worst] = f;
        }
        pop.fitness = fitnesses.iter().copied().map(Some).collect();

        let order = rank(&fitnesses);
        let best = fitnesses[order[0]];
        best_ever = best_ever.max(best);
        let (pg_fitness, _) = evaluate(config, &actors_genome(&pg.actors), &seeds)?;
        curve.push(GenerationRecord {
            generation,
            best_fitness: best,
            mean_fitness: fitnesses.iter().sum::<f64>() / fitnesses.len() as f64,
            pg_fitness,
            best_ever,
            migrated,
        });
        best_genomes.push(pop.genomes[order[0]].clone());

        if config.pg_updates > 0 {
            let episode_seed = pg_rng.random::<u64>();
            let explore = rollout(&config.env, &pg.actors, episode_seed, Some((&mut pg_rng, &exploration)))?;
            pg.store(&explore);
            pg.update(config, &mut pg_rng)
                .map_err(|e| Error::Diverged { step: generation, reason: e.to_string() })?;
        }

        if generation + 1 < config.generations {
            pop = ea_generation(&pop, &fitnesses, &params, ea_rng.random::<u64>())?;
        }
    }
    Ok(MerlResult {
        curve,
        best_genomes,
        final_population: pop,
        pg_actors: pg.actors,
        pg_critics: pg.critics,
    })
}
