use std::path::{Path, PathBuf};

use gtmarl_core::equilibrium::CeObjective;
use gtmarl_core::evo::{DynamicsParams, Integrator};
use gtmarl_core::game::schema::load_game;
use gtmarl_core::game::{classic_game, random_game, Game, RandomGameSpec};
use gtmarl_core::merl::MerlConfig;
use gtmarl_core::shaping::LolaConfig;
use gtmarl_core::tabular::LearningSchedule;
use serde::{Deserialize, Serialize};

use crate::failure::Failure;

/// One run, as read from `--config` and completed by command-line flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    /// `classic:NAME`, `random:SPEC` or a path to a game file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub game: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<CeObjective>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    /// Training steps, rounds, integration steps or generations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub oracle: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discount: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y0: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integrator: Option<Integrator>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<LearningSchedule>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<DynamicsParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lola: Option<LolaConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub merl: Option<MerlConfig>,
}

/// Values given on the command line; each one overrides the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub game: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub objective: Option<CeObjective>,
    pub mode: Option<String>,
    pub steps: Option<usize>,
    pub oracle: bool,
    pub x0: Option<Vec<f64>>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::usage(format!("config {}: {e}", path.display())))
    }

    /// Merges `overrides` into `self` and tags the run with `command`.
    pub fn resolve(mut self, command: &str, overrides: Overrides) -> Result<Self, Failure> {
        match &self.command {
            Some(c) if c != command => {
                return Err(Failure::usage(format!("config is for {c:?}, not {command:?}")));
            }
            _ => self.command = Some(command.to_owned()),
        }
        if let Some(game) = overrides.game {
            if self.game.is_some() {
                return Err(Failure::usage("game given both in the config and with --game"));
            }
            self.game = Some(game);
        }
        self.seed = overrides.seed.or(self.seed);
        self.out = overrides.out.or(self.out);
        self.objective = overrides.objective.or(self.objective);
        self.mode = overrides.mode.or(self.mode);
        self.steps = overrides.steps.or(self.steps);
        self.oracle |= overrides.oracle;
        self.x0 = overrides.x0.or(self.x0);
        Ok(self)
    }

    pub fn require_seed(&self) -> Result<u64, Failure> {
        self.seed.ok_or_else(|| Failure::usage("a seed is required: pass --seed or set \"seed\" in the config"))
    }

    pub fn output_dir(&self) -> Result<PathBuf, Failure> {
        if let Some(out) = &self.out {
            return Ok(out.clone());
        }
        match std::env::var_os("GTMARL_OUT") {
            Some(dir) if !dir.is_empty() => Ok(PathBuf::from(dir)),
            _ => Err(Failure::usage("no output directory: pass --out or set GTMARL_OUT")),
        }
    }

    pub fn load_game(&self) -> Result<Game, Failure> {
        let source = self.game.as_deref().ok_or_else(|| Failure::usage("a game is required: pass --game"))?;
        GameSource::parse(source)?.load(self.seed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GameSource {
    Classic(String),
    Random(RandomGameSpec),
    File(PathBuf),
}

impl GameSource {
    /// `classic:NAME`, `random:AxB[,zero_sum][,states=K][,discount=G]`, or a file path.
    pub fn parse(source: &str) -> Result<Self, Failure> {
        if let Some(name) = source.strip_prefix("classic:") {
            return Ok(GameSource::Classic(name.to_owned()));
        }
        if let Some(spec) = source.strip_prefix("random:") {
            return parse_random(spec).map(GameSource::Random);
        }
        Ok(GameSource::File(PathBuf::from(source)))
    }

    pub fn load(&self, seed: Option<u64>) -> Result<Game, Failure> {
        match self {
            GameSource::Classic(name) => Ok(Game::Matrix(classic_game(name)?)),
            GameSource::Random(spec) => {
                let seed = seed.ok_or_else(|| Failure::usage("random games need --seed"))?;
                Ok(random_game(seed, spec)?)
            }
            GameSource::File(path) => {
                load_game(path).map_err(|e| Failure::from(e).context(&format!("game file {}", path.display())))
            }
        }
    }
}

fn parse_random(spec: &str) -> Result<RandomGameSpec, Failure> {
    let bad = |what: &str| Failure::usage(format!("random game spec {spec:?}: {what}"));
    let mut parts = spec.split(',');
    let shape = parts.next().unwrap_or_default();
    let actions = shape
        .split('x')
        .map(|n| n.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| bad("expected action counts like 3x3"))?;
    let mut out = RandomGameSpec::matrix(actions, false);
    for part in parts {
        match part.trim().split_once('=') {
            None if part.trim() == "zero_sum" => out.zero_sum = true,
            Some(("states", k)) => out.states = Some(k.parse().map_err(|_| bad("states must be an integer"))?),
            Some(("discount", g)) => out.discount = g.parse().map_err(|_| bad("discount must be a number"))?,
            _ => return Err(bad(&format!("unknown option {part:?}"))),
        }
    }
    Ok(out)
}

pub fn parse_vector(text: &str) -> Result<Vec<f64>, String> {
    text.split(',').map(|v| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"))).collect()
}
