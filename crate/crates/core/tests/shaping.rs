use gtmarl_core::game::classic_game;
use gtmarl_core::shaping::{
    cooperation_rates, exact_values, initial_policies, lola_step, naive_step, train_shapers, value_gradients,
    IteratedGame, LolaConfig, Memory1Policy, ShaperKind,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GAMMA: f64 = 0.9;
const FD_STEP: f64 = 1e-5;

fn pd() -> IteratedGame {
    IteratedGame::new(classic_game("prisoners_dilemma").unwrap(), GAMMA).unwrap()
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Episodes of the iterated game that stop after each round with
/// probability `1 − γ`; the undiscounted return is an unbiased sample of `V`.
/// Returns mean and standard error per agent.
fn monte_carlo(
    game: &IteratedGame,
    p1: &Memory1Policy,
    p2: &Memory1Policy,
    budget: usize,
    seed: u64,
) -> [(f64, f64); 2] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (q1, q2) = (p1.probs(), p2.probs());
    let payoff = |agent: usize, outcome: usize| game.stage().payoff(agent, outcome);
    let mut sums = [0.0; 2];
    let mut squares = [0.0; 2];
    let mut episodes = 0usize;
    let mut steps = 0usize;
    while steps < budget {
        let mut slot = 0;
        let mut ret = [0.0; 2];
        loop {
            let c1 = rng.random::<f64>() < q1[slot];
            let c2 = rng.random::<f64>() < q2[slot];
            let outcome = 2 * usize::from(!c1) + usize::from(!c2);
            ret[0] += payoff(0, outcome);
            ret[1] += payoff(1, outcome);
            steps += 1;
            slot = outcome + 1;
            if rng.random::<f64>() >= game.gamma() {
                break;
            }
        }
        for i in 0..2 {
            sums[i] += ret[i];
            squares[i] += ret[i] * ret[i];
        }
        episodes += 1;
    }
    let n = episodes as f64;
    std::array::from_fn(|i| {
        let mean = sums[i] / n;
        let var = (squares[i] / n - mean * mean) * n / (n - 1.0);
        (mean, (var / n).sqrt())
    })
}

#[test]
fn exact_values_match_rollouts() {
    let game = pd();
    for seed in 0..10 {
        let (p1, p2) = initial_policies(seed);
        let (v1, v2) = exact_values(&game, &p1, &p2).unwrap();
        let [(m1, se1), (m2, se2)] = monte_carlo(&game, &p1, &p2, 100_000, 1000 + seed);
        assert!((v1 - m1).abs() <= 3.0 * se1, "seed {seed}: V1 {v1} vs {m1} ± {se1}");
        assert!((v2 - m2).abs() <= 3.0 * se2, "seed {seed}: V2 {v2} vs {m2} ± {se2}");
    }
}

#[test]
fn analytic_gradients_match_central_differences() {
    for (name, seed) in [("prisoners_dilemma", 0), ("prisoners_dilemma", 1), ("chicken", 2), ("matching_pennies", 3)] {
        let game = IteratedGame::new(classic_game(name).unwrap(), GAMMA).unwrap();
        let (p1, p2) = initial_policies(seed);
        let g = value_gradients(&game, &p1, &p2).unwrap();
        let analytic = [[g.v1_theta1, g.v1_theta2], [g.v2_theta1, g.v2_theta2]];
        for wrt in 0..2 {
            for k in 0..5 {
                let shifted = |delta: f64| {
                    let (mut a, mut b) = (p1, p2);
                    if wrt == 0 {
                        a.theta[k] += delta
                    } else {
                        b.theta[k] += delta
                    }
                    exact_values(&game, &a, &b).unwrap()
                };
                let (plus, minus) = (shifted(FD_STEP), shifted(-FD_STEP));
                let fd = [(plus.0 - minus.0) / (2.0 * FD_STEP), (plus.1 - minus.1) / (2.0 * FD_STEP)];
                for agent in 0..2 {
                    let err = relative(analytic[agent][wrt][k], fd[agent]);
                    assert!(err <= 1e-5, "{name}: dV{}/dθ{}[{k}] rel error {err}", agent + 1, wrt + 1);
                }
            }
        }
    }
}

#[test]
fn zero_beta_is_the_naive_step() {
    let game = pd();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let p1 = Memory1Policy::new(std::array::from_fn(|_| rng.random_range(-3.0..3.0))).unwrap();
        let p2 = Memory1Policy::new(std::array::from_fn(|_| rng.random_range(-3.0..3.0))).unwrap();
        let config = LolaConfig { alpha: 0.7, beta: 0.0, ..Default::default() };
        let lola = lola_step(&game, &p1, &p2, &config).unwrap();
        let naive = naive_step(&game, &p1, &p2, 0.7).unwrap();
        for (a, b) in lola.0.theta.iter().chain(&lola.1.theta).zip(naive.0.theta.iter().chain(&naive.1.theta)) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
    let config = LolaConfig { beta: 0.0, steps: 50, seed: 3, ..Default::default() };
    let stage = classic_game("prisoners_dilemma").unwrap();
    assert_eq!(
        train_shapers(&stage, &config, ShaperKind::Lola).unwrap(),
        train_shapers(&stage, &config, ShaperKind::Naive).unwrap()
    );
}

#[test]
fn naive_learners_defect() {
    let stage = classic_game("prisoners_dilemma").unwrap();
    let game = pd();
    let mut defecting = 0;
    for seed in 0..10 {
        let config = LolaConfig { alpha: 1.0, gamma: GAMMA, steps: 500, seed, ..Default::default() };
        let traj = train_shapers(&stage, &config, ShaperKind::Naive).unwrap();
        let last = traj.last();
        let rates = cooperation_rates(&game, &last.p1, &last.p2).unwrap();
        if (rates[0] + rates[1]) / 2.0 < 0.05 {
            defecting += 1;
        }
    }
    assert!(defecting >= 8, "{defecting} of 10 seeds");
}

#[test]
fn cooperation_rates_of_pure_policies() {
    let game = pd();
    let (c, d) = (Memory1Policy::constant(40.0), Memory1Policy::constant(-40.0));
    let rates = cooperation_rates(&game, &c, &d).unwrap();
    assert!((rates[0] - 1.0).abs() < 1e-12 && rates[1].abs() < 1e-12);
    // Tit-for-tat against itself keeps cooperating from the first round on.
    let tft = Memory1Policy::new([40.0, 40.0, -40.0, 40.0, -40.0]).unwrap();
    let tft2 = tft.mirrored();
    let (v1, v2) = exact_values(&game, &tft, &tft2).unwrap();
    assert!((v1 - 30.0).abs() < 1e-9 && (v2 - 30.0).abs() < 1e-9);
}
