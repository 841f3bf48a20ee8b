//! Straightforward per-automaton machine used as an oracle for the packed one.

use crate::automaton::TaState;
use crate::clause::{ClauseTeam, EvalMode, LiteralVector, Polarity};
use crate::datasets::BinaryDataset;
use crate::error::{Error, Result};
use crate::feedback::{apply_type_i_team, apply_type_ii_team, FeedbackParams};
use crate::rng::{FeedbackRng, TrainRng};

use super::{
    activation_probability, check_binary, epoch_order, initial_states, select_feedback, Activation, MachineConfig,
};

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarMachine {
    config: MachineConfig,
    params: FeedbackParams,
    teams: Vec<ClauseTeam>,
}

impl ScalarMachine {
    /// Same start-up states as `TsetlinMachine::new` for the same config.
    pub fn new(config: MachineConfig) -> Result<Self> {
        config.validate()?;
        let states = initial_states(&config, 0);
        Self::from_states(config, &states)
    }

    pub fn from_states(config: MachineConfig, states: &[Vec<u16>]) -> Result<Self> {
        config.validate()?;
        if states.len() != config.clauses {
            return Err(Error::config("clause count does not match the config"));
        }
        let half = config.half_range();
        let teams = states
            .iter()
            .enumerate()
            .map(|(j, s)| {
                if s.len() != 2 * config.inputs || s.iter().any(|&v| u32::from(v) >= 2 * u32::from(half)) {
                    return Err(Error::config(format!("clause {j} has malformed states")));
                }
                let tas = s.iter().map(|&v| TaState::new(v, half)).collect();
                ClauseTeam::new(tas, Polarity::for_position(j))
            })
            .collect::<Result<_>>()?;
        Ok(ScalarMachine {
            params: config.params(),
            config,
            teams,
        })
    }

    pub fn config(&self) -> &MachineConfig {
        &self.config
    }

    pub fn states(&self) -> Vec<Vec<u16>> {
        self.teams
            .iter()
            .map(|t| t.states.iter().map(|s| s.value()).collect())
            .collect()
    }

    pub fn clause_sum(&self, x: &LiteralVector, mode: EvalMode) -> Result<i32> {
        let mut f = 0;
        for t in &self.teams {
            if t.evaluate(x, mode)? {
                f += t.polarity.sign();
            }
        }
        Ok(f)
    }

    pub fn predict(&self, x: &LiteralVector) -> Result<bool> {
        Ok(self.clause_sum(x, EvalMode::Inference)? >= 0)
    }

    pub fn train_example<R: FeedbackRng>(&mut self, x: &LiteralVector, y: bool, rngs: &mut [R]) -> Result<()> {
        if rngs.len() != self.teams.len() {
            return Err(Error::config("one stream per clause is required"));
        }
        let outputs = self
            .teams
            .iter()
            .map(|t| t.evaluate(x, EvalMode::Training))
            .collect::<Result<Vec<bool>>>()?;
        let f: i32 = self
            .teams
            .iter()
            .zip(&outputs)
            .filter(|(_, &o)| o)
            .map(|(t, _)| t.polarity.sign())
            .sum();
        let t = self.config.threshold;
        let p1 = activation_probability(f, t, Activation::TypeI);
        let p2 = activation_probability(f, t, Activation::TypeII);
        for ((team, &out), rng) in self.teams.iter_mut().zip(&outputs).zip(rngs.iter_mut()) {
            match select_feedback(team.polarity, y, p1, p2, rng) {
                None => {}
                Some(true) => apply_type_i_team(team, x, out, &self.params, rng),
                Some(false) => apply_type_ii_team(team, x, out, rng),
            }
        }
        Ok(())
    }

    pub fn fit(&mut self, train: &BinaryDataset) -> Result<()> {
        let mut rng = TrainRng::new(self.config.seed, 1, self.config.clauses);
        self.fit_with(train, &mut rng)
    }

    pub fn fit_with(&mut self, train: &BinaryDataset, rng: &mut TrainRng) -> Result<()> {
        check_binary(train, self.config.inputs)?;
        if train.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let lits = train.literals();
        let mut order: Vec<usize> = (0..lits.len()).collect();
        let m = self.teams.len();
        for _ in 0..self.config.epochs {
            epoch_order(&mut order, &mut rng.shuffle);
            for &i in &order {
                self.train_example(&lits[i], train.labels()[i] == 1, &mut rng.clauses[..m])?;
            }
        }
        Ok(())
    }
}
