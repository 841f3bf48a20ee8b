//! One clause bank per class, argmax over vote sums.

use rand::Rng;

use crate::clause::{EvalMode, LiteralVector};
use crate::datasets::BinaryDataset;
use crate::error::{Error, Result};
use crate::machine::{EpochRecord, MachineConfig, TrainReport, TsetlinMachine};
use crate::rng::{FeedbackRng, TrainRng};

/// Index of the largest value; ties go to the lowest index.
pub fn argmax_lowest(values: &[i32]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiClassMachine {
    banks: Vec<TsetlinMachine>,
}

impl MultiClassMachine {
    /// `n_classes` banks; bank `i` draws its start-up states from init stream `i`.
    pub fn new(config: MachineConfig, n_classes: usize) -> Result<Self> {
        if n_classes < 2 {
            return Err(Error::config(format!("need at least 2 classes, got {n_classes}")));
        }
        let banks = (0..n_classes)
            .map(|i| TsetlinMachine::with_init_stream(config.clone(), i as u64))
            .collect::<Result<_>>()?;
        Ok(MultiClassMachine { banks })
    }

    pub fn from_banks(banks: Vec<TsetlinMachine>) -> Result<Self> {
        if banks.len() < 2 {
            return Err(Error::config(format!("need at least 2 classes, got {}", banks.len())));
        }
        let first = banks[0].config();
        if banks.iter().any(|b| !b.config().same_model_shape(first)) {
            return Err(Error::config("all banks must share one configuration"));
        }
        Ok(MultiClassMachine { banks })
    }

    pub fn n_classes(&self) -> usize {
        self.banks.len()
    }

    pub fn config(&self) -> &MachineConfig {
        self.banks[0].config()
    }

    pub fn set_schedule(&mut self, epochs: usize, seed: u64) {
        for b in &mut self.banks {
            b.set_schedule(epochs, seed);
        }
    }

    pub fn banks(&self) -> &[TsetlinMachine] {
        &self.banks
    }

    pub fn class_sums(&self, x: &LiteralVector) -> Result<Vec<i32>> {
        self.banks.iter().map(|b| b.clause_sum(x, EvalMode::Inference)).collect()
    }

    pub fn predict(&self, x: &LiteralVector) -> Result<usize> {
        Ok(argmax_lowest(&self.class_sums(x)?))
    }

    fn predict_unchecked(&self, x: &LiteralVector) -> usize {
        let sums: Vec<i32> = self.banks.iter().map(|b| b.sum_unchecked(x, EvalMode::Inference)).collect();
        argmax_lowest(&sums)
    }

    pub fn accuracy(&self, data: &BinaryDataset) -> Result<f64> {
        self.check(data)?;
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(self.accuracy_on(&data.literals(), data.labels()))
    }

    fn accuracy_on(&self, lits: &[LiteralVector], labels: &[usize]) -> f64 {
        let correct = lits
            .iter()
            .zip(labels)
            .filter(|(x, &y)| self.predict_unchecked(x) == y)
            .count();
        correct as f64 / labels.len() as f64
    }

    fn check(&self, data: &BinaryDataset) -> Result<()> {
        let inputs = self.config().inputs;
        if data.input_width() != inputs {
            return Err(Error::WidthMismatch {
                expected: inputs,
                actual: data.input_width(),
            });
        }
        if data.n_classes() > self.n_classes() {
            return Err(Error::config(format!(
                "dataset has {} classes, model has {}",
                data.n_classes(),
                self.n_classes()
            )));
        }
        Ok(())
    }

    /// Trains bank `y` toward 1 and one uniformly drawn other bank toward 0.
    /// `rngs` holds `n * m` clause streams, bank-major. Returns the negative class.
    pub fn train_example<R: FeedbackRng, G: Rng + ?Sized>(
        &mut self,
        x: &LiteralVector,
        y: usize,
        rngs: &mut [R],
        negative: &mut G,
    ) -> Result<usize> {
        let n = self.banks.len();
        if y >= n {
            return Err(Error::config(format!("label {y} out of range for {n} classes")));
        }
        let m = self.config().clauses;
        if rngs.len() != n * m {
            return Err(Error::config(format!("need {} clause streams, got {}", n * m, rngs.len())));
        }
        let mut q = negative.random_range(0..n - 1);
        if q >= y {
            q += 1;
        }
        self.banks[y].train_example(x, true, &mut rngs[y * m..(y + 1) * m])?;
        self.banks[q].train_example(x, false, &mut rngs[q * m..(q + 1) * m])?;
        Ok(q)
    }

    pub fn fit(&mut self, train: &BinaryDataset, eval: Option<&BinaryDataset>) -> Result<TrainReport> {
        let c = self.config();
        let mut rng = TrainRng::new(c.seed, self.banks.len(), c.clauses);
        self.fit_with(train, eval, &mut rng, |_| {})
    }

    pub fn fit_with(
        &mut self,
        train: &BinaryDataset,
        eval: Option<&BinaryDataset>,
        rng: &mut TrainRng,
        mut on_epoch: impl FnMut(&EpochRecord),
    ) -> Result<TrainReport> {
        self.check(train)?;
        if let Some(e) = eval {
            self.check(e)?;
        }
        if train.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let lits = train.literals();
        let eval_lits = eval.filter(|e| !e.is_empty()).map(|e| (e.literals(), e.labels()));
        let mut order: Vec<usize> = (0..lits.len()).collect();
        let mut report = TrainReport::default();
        for epoch in 1..=self.config().epochs {
            crate::machine::epoch_order(&mut order, &mut rng.shuffle);
            for &i in &order {
                self.train_example(&lits[i], train.labels()[i], &mut rng.clauses, &mut rng.negative)?;
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
}
