//! Named benchmark experiments and replication statistics.

use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::datasets::{NoisyXor, Quantizer, RealTable};
use crate::error::{Error, Result};
use crate::machine::{MachineConfig, TsetlinMachine};
use crate::multiclass::MultiClassMachine;
use crate::rng::{derive_seed, Domain};

/// Bundled Iris measurements (150 rows, 4 features, labels 0..3).
pub const IRIS_CSV: &str = include_str!("../data/iris.csv");

pub fn iris() -> Result<RealTable> {
    RealTable::parse_csv(IRIS_CSV, Path::new("iris.csv"))
}

/// Summary over replications: mean, 95% Student-t interval half-width,
/// 5th/95th percentiles, min and max.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// `None` with a single replication.
    pub ci95: Option<f64>,
    pub p5: f64,
    pub p95: f64,
    pub min: f64,
    pub max: f64,
}

/// Linear interpolation between closest ranks on sorted data.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let rank = p * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (rank - lo as f64)
}

impl Summary {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::NoEstimate("no replications".into()));
        }
        let n = values.len();
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mean = values.iter().sum::<f64>() / n as f64;
        let ci95 = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
                .map_err(|e| Error::NoEstimate(e.to_string()))?
                .inverse_cdf(0.975);
            Some(t * (var / n as f64).sqrt())
        } else {
            None
        };
        Ok(Summary {
            n,
            mean,
            ci95,
            p5: percentile(&sorted, 0.05),
            p95: percentile(&sorted, 0.95),
            min: sorted[0],
            max: sorted[n - 1],
        })
    }

    pub const CSV_HEADER: &'static str = "experiment,replications,mean,ci95,p5,p95,min,max";

    pub fn csv_row(&self, name: &str) -> String {
        let ci = self.ci95.map(|c| format!("{c:.6}")).unwrap_or_default();
        format!(
            "{name},{},{:.6},{ci},{:.6},{:.6},{:.6},{:.6}",
            self.n, self.mean, self.p5, self.p95, self.min, self.max
        )
    }
}

impl fmt::Display for Summary {
    /// Percent values, e.g. `99.30 ± 0.30  5%ile 95.90  95%ile 100.00  min 91.60  max 100.00`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "mean {:.2}", 100.0 * self.mean)?;
        if let Some(ci) = self.ci95 {
            write!(f, " ± {:.2}", 100.0 * ci)?;
        }
        write!(
            f,
            "  5%ile {:.2}  95%ile {:.2}  min {:.2}  max {:.2}",
            100.0 * self.p5,
            100.0 * self.p95,
            100.0 * self.min,
            100.0 * self.max
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct XorExperiment {
    /// With `multiclass`, `machine.clauses` counts clauses per class.
    pub machine: MachineConfig,
    /// Train two class banks instead of one signed machine.
    pub multiclass: bool,
    pub data: NoisyXor,
    pub train_rows: usize,
    pub test_rows: usize,
    /// Label noise on the test rows; 0 scores against the clean XOR.
    pub test_noise: f64,
}

impl Default for XorExperiment {
    fn default() -> Self {
        XorExperiment {
            machine: MachineConfig {
                inputs: 12,
                clauses: 10,
                threshold: 15,
                s: 3.9,
                state_bits: 7,
                boost: false,
                epochs: 200,
                seed: 0,
            },
            multiclass: true,
            data: NoisyXor::default(),
            train_rows: 5000,
            test_rows: 5000,
            test_noise: 0.0,
        }
    }
}

impl XorExperiment {
    /// Test accuracy after the final epoch.
    pub fn run(&self, seed: u64) -> Result<f64> {
        let train = self.data.generate(self.train_rows, derive_seed(seed, Domain::Data, 0))?;
        let test_spec = NoisyXor {
            noise: self.test_noise,
            ..self.data.clone()
        };
        let test = test_spec.generate(self.test_rows, derive_seed(seed, Domain::Data, 1))?;
        let config = MachineConfig {
            inputs: self.data.inputs,
            seed,
            ..self.machine.clone()
        };
        if self.multiclass {
            let mut mc = MultiClassMachine::new(config, 2)?;
            mc.fit(&train, None)?;
            mc.accuracy(&test)
        } else {
            let mut tm = TsetlinMachine::new(config)?;
            tm.fit(&train, None)?;
            tm.accuracy(&test)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrisExperiment {
    /// Per-class bank settings; `inputs` is replaced by the encoded width.
    pub machine: MachineConfig,
    pub bits_per_feature: u32,
    pub train_fraction: f64,
}

impl Default for IrisExperiment {
    fn default() -> Self {
        IrisExperiment {
            machine: MachineConfig {
                inputs: 16,
                clauses: 100,
                threshold: 10,
                s: 3.0,
                state_bits: 7,
                boost: true,
                epochs: 500,
                seed: 0,
            },
            bits_per_feature: 4,
            train_fraction: 0.8,
        }
    }
}

impl IrisExperiment {
    pub fn run(&self, table: &RealTable, seed: u64) -> Result<f64> {
        let (train, test) = table.split(self.train_fraction, derive_seed(seed, Domain::Data, 0))?;
        if train.is_empty() || test.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let q = Quantizer::fit(&train.values, self.bits_per_feature)?;
        let (train, test) = (train.quantize(&q)?, test.quantize(&q)?);
        let config = MachineConfig {
            inputs: q.output_width(),
            seed,
            ..self.machine.clone()
        };
        let mut mc = MultiClassMachine::new(config, table.n_classes())?;
        mc.fit(&train, None)?;
        mc.accuracy(&test)
    }
}

/// Multi-class run on a thresholded real-valued CSV, e.g. MNIST pixels in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdExperiment {
    pub train: PathBuf,
    pub test: PathBuf,
    pub threshold: f64,
    pub machine: MachineConfig,
}

impl ThresholdExperiment {
    pub fn mnist(train: PathBuf, test: PathBuf) -> Self {
        ThresholdExperiment {
            train,
            test,
            threshold: 0.3,
            machine: MachineConfig {
                inputs: 784,
                clauses: 2000,
                threshold: 50,
                s: 10.0,
                state_bits: 8,
                boost: true,
                epochs: 20,
                seed: 0,
            },
        }
    }

    pub fn run(&self, seed: u64) -> Result<f64> {
        let train = RealTable::read_csv(&self.train)?.threshold(self.threshold)?;
        let test = RealTable::read_csv(&self.test)?.threshold(self.threshold)?;
        let n = train.n_classes().max(test.n_classes());
        let train = crate::datasets::BinaryDataset::new(
            train.input_width(),
            n,
            train.inputs().to_vec(),
            train.labels().to_vec(),
        )?;
        let config = MachineConfig {
            inputs: train.input_width(),
            seed,
            ..self.machine.clone()
        };
        let mut mc = MultiClassMachine::new(config, n)?;
        mc.fit(&train, None)?;
        mc.accuracy(&test)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    Xor(XorExperiment),
    Iris(IrisExperiment),
    Threshold(ThresholdExperiment),
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Xor(_) => "xor",
            Experiment::Iris(_) => "iris",
            Experiment::Threshold(_) => "mnist",
        }
    }

    pub fn run(&self, seed: u64) -> Result<f64> {
        match self {
            Experiment::Xor(e) => e.run(seed),
            Experiment::Iris(e) => e.run(&iris()?, seed),
            Experiment::Threshold(e) => e.run(seed),
        }
    }

    /// Test accuracies of `replications` independent runs, in parallel.
    /// Replication `r` uses a seed derived from `(seed, r)`, so results do
    /// not depend on the thread count.
    pub fn replicate(&self, replications: usize, seed: u64) -> Result<Vec<f64>> {
        (0..replications)
            .into_par_iter()
            .map(|r| self.run(derive_seed(seed, Domain::Replication, r as u64)))
            .collect()
    }
}
