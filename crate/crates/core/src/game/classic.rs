use super::MatrixGame;
use crate::error::{Error, Result};

/// Names accepted by [`classic_game`].
pub const CLASSIC_GAMES: [&str; 4] = ["matching_pennies", "rps", "prisoners_dilemma", "chicken"];

fn transpose(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (0..m[0].len()).map(|j| m.iter().map(|row| row[j]).collect()).collect()
}

/// Canonical bimatrix games.
///
/// Action 0 is heads / rock / cooperate / swerve. Prisoner's dilemma uses
/// `(R, S, T, P) = (3, 0, 5, 1)`; chicken uses row payoffs
/// `(C,C)=6, (C,D)=2, (D,C)=7, (D,D)=0`. Symmetric games give the column
/// player the transposed matrix.
pub fn classic_game(name: &str) -> Result<MatrixGame> {
    let game = match name {
        "matching_pennies" => MatrixGame::zero_sum(&[vec![1., -1.], vec![-1., 1.]]),
        "rps" => MatrixGame::zero_sum(&[
            vec![0., -1., 1.],
            vec![1., 0., -1.],
            vec![-1., 1., 0.],
        ]),
        "prisoners_dilemma" => {
            let row = vec![vec![3., 0.], vec![5., 1.]];
            MatrixGame::from_bimatrix(&row, &transpose(&row))
        }
        "chicken" => {
            let row = vec![vec![6., 2.], vec![7., 0.]];
            MatrixGame::from_bimatrix(&row, &transpose(&row))
        }
        other => return Err(Error::UnknownGame(other.to_string())),
    };
    Ok(game.expect("classic payoffs are valid"))
}
