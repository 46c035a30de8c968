use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use super::model::{LinearActor, FEATURES};
use crate::error::{Error, Result};
use crate::tabular::sample_categorical;

/// Concatenated actor weights of a whole team, one block of `FEATURES` per agent.
pub type Genome = Vec<f64>;

pub fn genome_actors(genome: &[f64]) -> Vec<LinearActor> {
    genome
        .chunks_exact(FEATURES)
        .map(|c| LinearActor { theta: std::array::from_fn(|k| c[k]) })
        .collect()
}

pub fn actors_genome(actors: &[LinearActor]) -> Genome {
    actors.iter().flat_map(|a| a.theta).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TeamPopulation {
    pub genomes: Vec<Genome>,
    /// Fitness of each genome, once evaluated.
    pub fitness: Vec<Option<f64>>,
    pub generation: usize,
    pub elites: usize,
    pub num_agents: usize,
}

impl TeamPopulation {
    pub fn new(genomes: Vec<Genome>, elites: usize, num_agents: usize) -> Result<Self> {
        let m = genomes.len();
        if m < 2 {
            return Err(Error::InvalidParameter(format!("population needs at least 2 genomes, got {m}")));
        }
        if elites == 0 || elites >= m {
            return Err(Error::InvalidParameter(format!("elite count must lie in [1, {m}), got {elites}")));
        }
        let dim = num_agents * FEATURES;
        if let Some(k) = genomes.iter().position(|g| g.len() != dim) {
            return Err(Error::Shape(format!("genome {k} has {} weights, expected {dim}", genomes[k].len())));
        }
        Ok(Self { fitness: vec![None; m], genomes, generation: 0, elites, num_agents })
    }

    /// `size` genomes with `N(0, sigma²)` weights.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, size: usize, elites: usize, num_agents: usize, sigma: f64) -> Result<Self> {
        let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(format!("init sigma: {e}")))?;
        let genomes = (0..size).map(|_| (0..num_agents * FEATURES).map(|_| normal.sample(rng)).collect()).collect();
        Self::new(genomes, elites, num_agents)
    }

    pub fn len(&self) -> usize {
        self.genomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genomes.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EaParams {
    pub mutation_sigma: f64,
    /// Uniform agent-block crossover between two parents.
    pub crossover: bool,
}

/// Genome indices by descending fitness, ties to the lower index.
pub fn rank(fitnesses: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitnesses.len()).collect();
    order.sort_by(|&a, &b| fitnesses[b].total_cmp(&fitnesses[a]));
    order
}

/// Fitness-proportional weights on `f − min f`, uniform when they all vanish.
fn selection_weights(fitnesses: &[f64]) -> Vec<f64> {
    let min = fitnesses.iter().copied().fold(f64::INFINITY, f64::min);
    let shifted: Vec<f64> = fitnesses.iter().map(|f| f - min).collect();
    let total: f64 = shifted.iter().sum();
    if total > 0.0 && total.is_finite() {
        shifted.iter().map(|s| s / total).collect()
    } else {
        vec![1.0 / fitnesses.len() as f64; fitnesses.len()]
    }
}

/// Next generation: elites copied unchanged, the rest bred by
/// fitness-proportional selection, block crossover and Gaussian mutation.
pub fn ea_generation(pop: &TeamPopulation, fitnesses: &[f64], params: &EaParams, seed: u64) -> Result<TeamPopulation> {
    let m = pop.len();
    if fitnesses.len() != m {
        return Err(Error::Shape(format!("{} fitnesses for {m} genomes", fitnesses.len())));
    }
    if let Some(k) = fitnesses.iter().position(|f| !f.is_finite()) {
        return Err(Error::NonFinite(format!("fitness[{k}]")));
    }
    if pop.elites == 0 || pop.elites >= m {
        return Err(Error::InvalidParameter(format!("elite count must lie in [1, {m}), got {}", pop.elites)));
    }
    if !(params.mutation_sigma >= 0.0) || !params.mutation_sigma.is_finite() {
        return Err(Error::InvalidParameter(format!("mutation sigma must be >= 0, got {}", params.mutation_sigma)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order = rank(fitnesses);
    let weights = selection_weights(fitnesses);
    let normal = Normal::new(0.0, params.mutation_sigma).expect("validated sigma");

    let mut genomes: Vec<Genome> = order[..pop.elites].iter().map(|&k| pop.genomes[k].clone()).collect();
    let mut fitness: Vec<Option<f64>> = order[..pop.elites].iter().map(|&k| Some(fitnesses[k])).collect();
    while genomes.len() < m {
        let first = &pop.genomes[sample_categorical(&mut rng, &weights)];
        let mut child = first.clone();
        if params.crossover {
            let second = &pop.genomes[sample_categorical(&mut rng, &weights)];
            for (block, other) in child.chunks_exact_mut(FEATURES).zip(second.chunks_exact(FEATURES)) {
                if rng.random::<bool>() {
                    block.copy_from_slice(other);
                }
            }
        }
        if params.mutation_sigma > 0.0 {
            for w in child.iter_mut() {
                *w += normal.sample(&mut rng);
            }
        }
        genomes.push(child);
        fitness.push(None);
    }
    Ok(TeamPopulation { genomes, fitness, generation: pop.generation + 1, elites: pop.elites, num_agents: pop.num_agents })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn population() -> TeamPopulation {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        TeamPopulation::random(&mut rng, 6, 2, 2, 1.0).unwrap()
    }

    #[test]
    fn elites_survive_bitwise() {
        let pop = population();
        let fitness = [0.1, 0.9, 0.3, 0.9, 0.0, 0.5];
        let next = ea_generation(&pop, &fitness, &EaParams { mutation_sigma: 0.5, crossover: true }, 3).unwrap();
        // Tie between genomes 1 and 3 goes to the lower index.
        assert_eq!(next.genomes[0], pop.genomes[1]);
        assert_eq!(next.genomes[1], pop.genomes[3]);
        assert_eq!(next.fitness[0], Some(0.9));
        assert_eq!(next.generation, 1);
    }

    #[test]
    fn noiseless_offspring_copy_parents() {
        let pop = population();
        let params = EaParams { mutation_sigma: 0.0, crossover: false };
        let next = ea_generation(&pop, &[1.0; 6], &params, 9).unwrap();
        for child in &next.genomes {
            assert!(pop.genomes.contains(child));
        }
        // Equal fitness: uniform fallback still reaches beyond the best genome.
        let mut picked = std::collections::BTreeSet::new();
        for seed in 0..40 {
            for child in &ea_generation(&pop, &[1.0; 6], &params, seed).unwrap().genomes[2..] {
                picked.insert(pop.genomes.iter().position(|g| g == child).unwrap());
            }
        }
        assert_eq!(picked.len(), 6);
    }

    #[test]
    fn zero_weight_genomes_never_parent() {
        let pop = population();
        let params = EaParams { mutation_sigma: 0.0, crossover: false };
        let fitness = [0.0, 0.0, 0.0, 0.0, 0.0, 1.0];
        let next = ea_generation(&pop, &fitness, &params, 2).unwrap();
        assert!(next.genomes[2..].iter().all(|g| *g == pop.genomes[5]));
    }

    #[test]
    fn crossover_mixes_agent_blocks() {
        let genomes = vec![vec![0.0; 6], vec![1.0; 6], vec![2.0; 6]];
        let pop = TeamPopulation::new(genomes, 1, 2).unwrap();
        let params = EaParams { mutation_sigma: 0.0, crossover: true };
        let next = ea_generation(&pop, &[1.0, 2.0, 3.0], &params, 5).unwrap();
        for child in &next.genomes {
            for block in child.chunks(FEATURES) {
                assert!(block.iter().all(|w| *w == block[0]));
            }
        }
    }

    #[test]
    fn invalid_populations() {
        assert!(TeamPopulation::new(vec![vec![0.0; 3]], 1, 1).is_err());
        assert!(TeamPopulation::new(vec![vec![0.0; 3]; 3], 3, 1).is_err());
        assert!(TeamPopulation::new(vec![vec![0.0; 3]; 3], 0, 1).is_err());
        assert!(TeamPopulation::new(vec![vec![0.0; 4]; 3], 1, 1).is_err());
    }

    #[test]
    fn genome_round_trip() {
        let g = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert_eq!(actors_genome(&genome_actors(&g)), g);
    }
}
