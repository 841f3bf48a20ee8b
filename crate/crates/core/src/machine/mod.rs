//! Single-output Tsetlin Machine over the packed clause core.

mod export;
mod model_file;
mod reference;

pub use export::{expression_of, prune, ClauseExpression};
pub use model_file::{read_machine, read_multiclass, write_machine, write_multiclass};
pub use reference::ScalarMachine;

use rand::seq::SliceRandom;

use crate::automaton::TaState;
use crate::clause::{EvalMode, LiteralVector, PlaneBlock, Polarity};
use crate::datasets::BinaryDataset;
use crate::error::{Error, Result};
use crate::feedback::{apply_type_i_block_with, apply_type_ii_block, FeedbackParams, MaskScratch, TypeITable};
use crate::rng::{fires, Domain, FeedbackRng, StreamRng, TrainRng};

/// Hyperparameters of one clause bank plus the training schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineConfig {
    /// Number of boolean inputs `o`.
    pub inputs: usize,
    /// Clauses `m`, even; half vote for and half against.
    pub clauses: usize,
    /// Vote margin `T`.
    pub threshold: u32,
    /// Specificity `s`.
    pub s: f64,
    /// Bits per automaton state, so `2N = 2^state_bits`.
    pub state_bits: u8,
    /// Reward true-positive includes with probability 1 instead of `(s-1)/s`.
    pub boost: bool,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for MachineConfig {
    fn default() -> Self {
        MachineConfig {
            inputs: 2,
            clauses: 10,
            threshold: 15,
            s: 3.9,
            state_bits: 7,
            boost: false,
            epochs: 200,
            seed: 0,
        }
    }
}

impl MachineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.inputs == 0 {
            return Err(Error::config("need at least one input"));
        }
        if self.clauses == 0 || self.clauses % 2 != 0 {
            return Err(Error::config(format!(
                "clause count must be even and positive, got {}",
                self.clauses
            )));
        }
        if self.threshold == 0 {
            return Err(Error::config("threshold T must be at least 1"));
        }
        FeedbackParams::new(self.s, self.boost)?;
        if !(1..=16).contains(&self.state_bits) {
            return Err(Error::config(format!(
                "state bits must be in 1..=16, got {}",
                self.state_bits
            )));
        }
        Ok(())
    }

    /// States per action, `N`.
    pub fn half_range(&self) -> u16 {
        1u16 << (self.state_bits - 1)
    }

    pub fn params(&self) -> FeedbackParams {
        FeedbackParams::new(self.s, self.boost).expect("validated config")
    }

    /// Hyperparameters that define a trained model, ignoring the schedule.
    pub fn same_model_shape(&self, other: &MachineConfig) -> bool {
        self.inputs == other.inputs
            && self.clauses == other.clauses
            && self.threshold == other.threshold
            && self.s == other.s
            && self.state_bits == other.state_bits
            && self.boost == other.boost
    }
}

/// Which activation probability a clause draws against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    /// Used when `y = 1`: `(T - clamp(f)) / 2T`.
    TypeI,
    /// Used when `y = 0`: `(T + clamp(f)) / 2T`.
    TypeII,
}

pub fn activation_probability(f: i32, threshold: u32, kind: Activation) -> f64 {
    let t = threshold as i64;
    let f = i64::from(f).clamp(-t, t);
    let num = match kind {
        Activation::TypeI => t - f,
        Activation::TypeII => t + f,
    };
    num as f64 / (2 * t) as f64
}

/// Accuracy per epoch, measured in inference mode after the epoch ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_accuracy: f64,
    pub test_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
}

impl TrainReport {
    pub fn last(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }

    pub fn final_train_accuracy(&self) -> Option<f64> {
        self.last().map(|r| r.train_accuracy)
    }

    pub fn final_test_accuracy(&self) -> Option<f64> {
        self.last().and_then(|r| r.test_accuracy)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_accuracy,test_accuracy\n");
        for r in &self.epochs {
            let test = r.test_accuracy.map(|a| format!("{a:.6}")).unwrap_or_default();
            out.push_str(&format!("{},{:.6},{}\n", r.epoch, r.train_accuracy, test));
        }
        out
    }
}

/// Order in which one epoch visits the training rows.
pub(crate) fn epoch_order(order: &mut [usize], shuffle: &mut StreamRng) {
    order.shuffle(shuffle);
}

/// Per-clause feedback decision for one example; shared with the reference.
/// Returns `None` when the clause is not selected, else whether it gets
/// Type I (`true`) or Type II (`false`) feedback.
#[inline]
pub(crate) fn select_feedback<R: FeedbackRng + ?Sized>(
    polarity: Polarity,
    y: bool,
    p_type_i: f64,
    p_type_ii: f64,
    rng: &mut R,
) -> Option<bool> {
    let p = if y { p_type_i } else { p_type_ii };
    if !fires(rng, p) {
        return None;
    }
    Some(match polarity {
        Polarity::Positive => y,
        Polarity::Negative => !y,
    })
}

pub(crate) fn check_binary(data: &BinaryDataset, inputs: usize) -> Result<()> {
    if data.input_width() != inputs {
        return Err(Error::WidthMismatch {
            expected: inputs,
            actual: data.input_width(),
        });
    }
    if data.n_classes() > 2 {
        return Err(Error::config(format!(
            "a single machine needs binary labels, dataset has {} classes",
            data.n_classes()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TsetlinMachine {
    config: MachineConfig,
    clauses: Vec<PlaneBlock>,
    table: TypeITable,
    scratch: MaskScratch,
    outputs: Vec<bool>,
}

impl PartialEq for TsetlinMachine {
    fn eq(&self, other: &Self) -> bool {
        self.config.same_model_shape(&other.config) && self.clauses == other.clauses
    }
}

impl TsetlinMachine {
    /// Fresh machine with every automaton on the action boundary.
    pub fn new(config: MachineConfig) -> Result<Self> {
        Self::with_init_stream(config, 0)
    }

    /// Like [`new`](Self::new) but drawing the start-up states from init
    /// stream `index`, so that several banks sharing a seed differ.
    pub fn with_init_stream(config: MachineConfig, index: u64) -> Result<Self> {
        config.validate()?;
        let states = initial_states(&config, index);
        Self::from_states(config, &states)
    }

    /// Builds a machine from per-clause states in interleaved literal order
    /// (`x1, ~x1, x2, ~x2, ...`).
    pub fn from_states(config: MachineConfig, states: &[Vec<u16>]) -> Result<Self> {
        config.validate()?;
        if states.len() != config.clauses {
            return Err(Error::config(format!(
                "expected {} clauses, got {}",
                config.clauses,
                states.len()
            )));
        }
        let two_n = 2 * u32::from(config.half_range());
        let mut clauses = Vec::with_capacity(states.len());
        for (j, s) in states.iter().enumerate() {
            if s.len() != 2 * config.inputs {
                return Err(Error::config(format!(
                    "clause {j} has {} automata, expected {}",
                    s.len(),
                    2 * config.inputs
                )));
            }
            if let Some(v) = s.iter().find(|&&v| u32::from(v) >= two_n) {
                return Err(Error::config(format!("clause {j} has state {v} outside 0..{two_n}")));
            }
            let planar: Vec<u16> = (0..2 * config.inputs)
                .map(|i| if i < config.inputs { s[2 * i] } else { s[2 * (i - config.inputs) + 1] })
                .collect();
            clauses.push(PlaneBlock::from_states(&planar, config.state_bits, Polarity::for_position(j))?);
        }
        Ok(Self::assemble(config, clauses))
    }

    /// Builds a machine whose clauses are exactly the given conjunctions.
    /// Included literals sit at state `N`, everything else at `N - 1`.
    /// Clause `j` must carry the polarity of position `j`.
    pub fn from_expressions(config: MachineConfig, exprs: &[ClauseExpression]) -> Result<Self> {
        config.validate()?;
        let n = config.half_range();
        let mut states = Vec::with_capacity(exprs.len());
        for (j, e) in exprs.iter().enumerate() {
            if e.polarity != Polarity::for_position(j) {
                return Err(Error::config(format!("clause {j} has the wrong polarity")));
            }
            if let Some(&k) = e.positive.iter().chain(&e.negated).find(|&&k| k >= config.inputs) {
                return Err(Error::config(format!("clause {j} refers to input {}", k + 1)));
            }
            let mut s = vec![n - 1; 2 * config.inputs];
            for &k in &e.positive {
                s[2 * k] = n;
            }
            for &k in &e.negated {
                s[2 * k + 1] = n;
            }
            states.push(s);
        }
        Self::from_states(config, &states)
    }

    fn assemble(config: MachineConfig, clauses: Vec<PlaneBlock>) -> Self {
        let table = TypeITable::new(&config.params());
        let m = clauses.len();
        TsetlinMachine {
            config,
            clauses,
            table,
            scratch: MaskScratch::default(),
            outputs: vec![false; m],
        }
    }

    pub fn config(&self) -> &MachineConfig {
        &self.config
    }

    /// Replaces the training schedule (epochs, seed); the model is untouched.
    pub fn set_schedule(&mut self, epochs: usize, seed: u64) {
        self.config.epochs = epochs;
        self.config.seed = seed;
    }

    pub fn blocks(&self) -> &[PlaneBlock] {
        &self.clauses
    }

    /// Per-clause states in interleaved literal order.
    pub fn states(&self) -> Vec<Vec<u16>> {
        self.clauses
            .iter()
            .map(|b| b.unpack().states.iter().map(|t| t.value()).collect())
            .collect()
    }

    fn check_width(&self, x: &LiteralVector) -> Result<()> {
        if x.input_width() != self.config.inputs {
            return Err(Error::WidthMismatch {
                expected: self.config.inputs,
                actual: x.input_width(),
            });
        }
        Ok(())
    }

    /// Signed vote sum `f(X)`.
    pub fn clause_sum(&self, x: &LiteralVector, mode: EvalMode) -> Result<i32> {
        self.check_width(x)?;
        Ok(self.sum_unchecked(x, mode))
    }

    pub(crate) fn sum_unchecked(&self, x: &LiteralVector, mode: EvalMode) -> i32 {
        self.clauses
            .iter()
            .filter(|c| c.evaluate(x, mode))
            .map(|c| c.polarity().sign())
            .sum()
    }

    /// `f(X) >= 0` in inference mode.
    pub fn predict(&self, x: &LiteralVector) -> Result<bool> {
        Ok(self.clause_sum(x, EvalMode::Inference)? >= 0)
    }

    pub fn predict_bits(&self, x: &[u8]) -> Result<bool> {
        self.predict(&LiteralVector::new(x))
    }

    /// Fraction of rows predicted correctly.
    pub fn accuracy(&self, data: &BinaryDataset) -> Result<f64> {
        check_binary(data, self.config.inputs)?;
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let lits = data.literals();
        Ok(self.accuracy_on(&lits, data.labels()))
    }

    pub(crate) fn accuracy_on(&self, lits: &[LiteralVector], labels: &[usize]) -> f64 {
        let correct = lits
            .iter()
            .zip(labels)
            .filter(|(x, &y)| (self.sum_unchecked(x, EvalMode::Inference) >= 0) == (y == 1))
            .count();
        correct as f64 / labels.len() as f64
    }

    /// One training step. `rngs` holds one stream per clause.
    pub fn train_example<R: FeedbackRng>(&mut self, x: &LiteralVector, y: bool, rngs: &mut [R]) -> Result<()> {
        self.check_width(x)?;
        if rngs.len() != self.clauses.len() {
            return Err(Error::config(format!(
                "need {} clause streams, got {}",
                self.clauses.len(),
                rngs.len()
            )));
        }
        self.train_unchecked(x, y, rngs);
        Ok(())
    }

    pub(crate) fn train_unchecked<R: FeedbackRng>(&mut self, x: &LiteralVector, y: bool, rngs: &mut [R]) {
        let mut f = 0;
        for (out, c) in self.outputs.iter_mut().zip(&self.clauses) {
            *out = c.evaluate(x, EvalMode::Training);
            if *out {
                f += c.polarity().sign();
            }
        }
        let t = self.config.threshold;
        let p1 = activation_probability(f, t, Activation::TypeI);
        let p2 = activation_probability(f, t, Activation::TypeII);
        for ((block, &out), rng) in self.clauses.iter_mut().zip(&self.outputs).zip(rngs.iter_mut()) {
            match select_feedback(block.polarity(), y, p1, p2, rng) {
                None => {}
                Some(true) => apply_type_i_block_with(block, x, out, &self.table, rng, &mut self.scratch),
                Some(false) => apply_type_ii_block(block, x, out),
            }
        }
    }

    /// Trains for `config.epochs` epochs with streams derived from `config.seed`.
    pub fn fit(&mut self, train: &BinaryDataset, eval: Option<&BinaryDataset>) -> Result<TrainReport> {
        let mut rng = TrainRng::new(self.config.seed, 1, self.config.clauses);
        self.fit_with(train, eval, &mut rng, |_| {})
    }

    /// Trains with caller-supplied streams, calling `on_epoch` after each epoch.
    pub fn fit_with(
        &mut self,
        train: &BinaryDataset,
        eval: Option<&BinaryDataset>,
        rng: &mut TrainRng,
        mut on_epoch: impl FnMut(&EpochRecord),
    ) -> Result<TrainReport> {
        check_binary(train, self.config.inputs)?;
        if let Some(e) = eval {
            check_binary(e, self.config.inputs)?;
        }
        if train.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if rng.clauses.len() < self.clauses.len() {
            return Err(Error::config("not enough clause streams"));
        }
        let lits = train.literals();
        let eval_lits = eval.filter(|e| !e.is_empty()).map(|e| (e.literals(), e.labels()));
        let mut order: Vec<usize> = (0..lits.len()).collect();
        let mut report = TrainReport::default();
        let m = self.clauses.len();
        for epoch in 1..=self.config.epochs {
            epoch_order(&mut order, &mut rng.shuffle);
            for &i in &order {
                self.train_unchecked(&lits[i], train.labels()[i] == 1, &mut rng.clauses[..m]);
            }
            let record = EpochRecord {
                epoch,
                train_accuracy: self.accuracy_on(&lits, train.labels()),
                test_accuracy: eval_lits.as_ref().map(|(l, y)| self.accuracy_on(l, y)),
            };
            on_epoch(&record);
            report.epochs.push(record);
        }
        Ok(report)
    }

    /// Clauses that include at least one literal.
    pub fn prune(&self) -> Vec<ClauseExpression> {
        prune(self)
    }
}

/// Start-up states in interleaved order, drawn clause by clause.
pub(crate) fn initial_states(config: &MachineConfig, index: u64) -> Vec<Vec<u16>> {
    let mut rng = StreamRng::new(config.seed, Domain::Init, index);
    let half = config.half_range();
    (0..config.clauses)
        .map(|_| {
            (0..2 * config.inputs)
                .map(|_| TaState::boundary(half, &mut rng).value())
                .collect()
        })
        .collect()
}
