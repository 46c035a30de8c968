use gtmarl_core::game::{belief_update, random_stochastic_game, BeliefState, PosgGame, StochasticGame};
use gtmarl_core::Error;
use proptest::prelude::*;

fn posg(seed: u64, states: usize, obs: Vec<usize>, obs_count: usize) -> PosgGame {
    let base = random_stochastic_game(seed, &[2, 2], false, states, 0.9).unwrap();
    PosgGame::new(base, vec![obs_count, 1], vec![obs, vec![0; states]]).unwrap()
}

/// `b'(s') ∝ 1[O(s') = o] Σ_s P(s' | s, a) b(s)`, written out directly.
fn bayes(game: &PosgGame, prior: &[f64], joint: usize, obs: usize, agent: usize) -> Option<Vec<f64>> {
    let base = game.base();
    let n = base.num_states();
    let post: Vec<f64> = (0..n)
        .map(|next| {
            if game.observe(agent, next) != obs {
                return 0.0;
            }
            (0..n).map(|s| prior[s] * base.transition_row(s, joint)[next]).sum()
        })
        .collect();
    let total: f64 = post.iter().sum();
    (total > 0.0).then(|| post.iter().map(|p| p / total).collect())
}

fn distribution(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, n).prop_map(|w| {
        let s: f64 = w.iter().sum();
        if s == 0.0 {
            vec![1.0 / w.len() as f64; w.len()]
        } else {
            w.iter().map(|v| v / s).collect()
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn posteriors_stay_normalized(
        seed in 0u64..1_000_000,
        prior in distribution(4),
        obs_map in prop::collection::vec(0usize..3, 4),
        steps in prop::collection::vec((0usize..4, 0usize..3), 1..12),
    ) {
        let game = posg(seed, 4, obs_map, 3);
        let mut belief = BeliefState::new(prior).unwrap();
        for (joint, obs) in steps {
            match belief_update(&game, &belief, joint, obs, 0) {
                Ok(next) => {
                    prop_assert!((next.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                    prop_assert!(next.probs().iter().all(|p| *p >= 0.0));
                    let reference = bayes(&game, belief.probs(), joint, obs, 0).unwrap();
                    for (a, b) in next.probs().iter().zip(&reference) {
                        prop_assert!((a - b).abs() <= 1e-12);
                    }
                    belief = next;
                }
                Err(Error::InconsistentObservation { .. }) => {
                    prop_assert!(bayes(&game, belief.probs(), joint, obs, 0).is_none());
                }
                Err(other) => return Err(TestCaseError::fail(format!("unexpected error {other}"))),
            }
        }
    }

    #[test]
    fn revealing_observations_give_point_masses(seed in 0u64..1_000_000, prior in distribution(3), joint in 0usize..4) {
        let game = posg(seed, 3, vec![0, 1, 2], 3);
        for obs in 0..3 {
            let next = belief_update(&game, &BeliefState::new(prior.clone()).unwrap(), joint, obs, 0).unwrap();
            for (s, p) in next.probs().iter().enumerate() {
                prop_assert_eq!(*p, if s == obs { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn blind_agents_only_propagate(seed in 0u64..1_000_000, prior in distribution(3), joint in 0usize..4) {
        let game = posg(seed, 3, vec![0, 1, 2], 3);
        let next = belief_update(&game, &BeliefState::new(prior.clone()).unwrap(), joint, 0, 1).unwrap();
        for (s, p) in next.probs().iter().enumerate() {
            let pushed: f64 = (0..3).map(|from| prior[from] * game.base().transition_row(from, joint)[s]).sum();
            prop_assert!((p - pushed).abs() <= 1e-12);
        }
    }
}

#[test]
fn impossible_observation_is_reported() {
    // Every joint action moves to state 1, which agent 0 sees as observation 1.
    let transition = [0.0, 1.0].repeat(2 * 4);
    let base = StochasticGame::new(2, vec![2, 2], transition, vec![vec![0.0; 8]; 2], 0.9).unwrap();
    let game = PosgGame::new(base, vec![2, 2], vec![vec![0, 1], vec![0, 0]]).unwrap();
    let err = belief_update(&game, &BeliefState::uniform(2), 3, 0, 0).unwrap_err();
    assert!(matches!(err, Error::InconsistentObservation { agent: 0, observation: 0 }));
    assert_eq!(err.category(), gtmarl_core::ErrorCategory::Precondition);
}

#[test]
fn filter_depends_on_the_partner_action() {
    // The partner's action decides where the state goes.
    let mut transition = Vec::new();
    for _ in 0..2 {
        for joint in 0..4 {
            transition.extend(if joint % 2 == 0 { [1.0, 0.0] } else { [0.0, 1.0] });
        }
    }
    let base = StochasticGame::new(2, vec![2, 2], transition, vec![vec![0.0; 8]; 2], 0.9).unwrap();
    let game = PosgGame::new(base, vec![1, 1], vec![vec![0, 0], vec![0, 0]]).unwrap();
    let prior = BeliefState::uniform(2);
    assert_eq!(belief_update(&game, &prior, 0, 0, 0).unwrap().probs(), &[1.0, 0.0]);
    assert_eq!(belief_update(&game, &prior, 1, 0, 0).unwrap().probs(), &[0.0, 1.0]);
}
