//! Binary datasets: generation, binarization, splitting and text I/O.
//!
//! The on-disk format is plain ASCII. The first line is `o n_classes count`;
//! each following line holds `o` space-separated bits and then the 0-based
//! class label.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::clause::LiteralVector;
use crate::error::{Error, Result};
use crate::rng::{Domain, StreamRng};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryDataset {
    o: usize,
    n_classes: usize,
    inputs: Vec<Vec<u8>>,
    labels: Vec<usize>,
}

impl BinaryDataset {
    pub fn new(o: usize, n_classes: usize, inputs: Vec<Vec<u8>>, labels: Vec<usize>) -> Result<Self> {
        if n_classes < 1 {
            return Err(Error::config("a dataset needs at least one class"));
        }
        if inputs.len() != labels.len() {
            return Err(Error::config(format!(
                "{} input rows but {} labels",
                inputs.len(),
                labels.len()
            )));
        }
        for (i, (x, &y)) in inputs.iter().zip(&labels).enumerate() {
            if x.len() != o {
                return Err(Error::WidthMismatch {
                    expected: o,
                    actual: x.len(),
                });
            }
            if x.iter().any(|&b| b > 1) {
                return Err(Error::config(format!("row {i} has a value other than 0/1")));
            }
            if y >= n_classes {
                return Err(Error::config(format!(
                    "row {i} has label {y} but there are {n_classes} classes"
                )));
            }
        }
        Ok(BinaryDataset {
            o,
            n_classes,
            inputs,
            labels,
        })
    }

    pub fn input_width(&self) -> usize {
        self.o
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn inputs(&self) -> &[Vec<u8>] {
        &self.inputs
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[u8], usize)> {
        self.inputs.iter().map(Vec::as_slice).zip(self.labels.iter().copied())
    }

    pub fn literals(&self) -> Vec<LiteralVector> {
        self.inputs.iter().map(|x| LiteralVector::new(x)).collect()
    }

    fn subset(&self, idx: &[usize]) -> BinaryDataset {
        BinaryDataset {
            o: self.o,
            n_classes: self.n_classes,
            inputs: idx.iter().map(|&i| self.inputs[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.len() * (2 * self.o + 4));
        let _ = writeln!(out, "{} {} {}", self.o, self.n_classes, self.len());
        for (x, y) in self.rows() {
            for b in x {
                out.push(if *b == 1 { '1' } else { '0' });
                out.push(' ');
            }
            let _ = writeln!(out, "{y}");
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        Self::parse(&text, path)
    }

    /// Parses the ASCII format. `origin` only labels error messages.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            message,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or_else(|| err(1, "missing header".into()))?;
        let fields: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| err(hline, format!("bad header `{header}`: {e}")))?;
        let [o, n_classes, count] = fields[..] else {
            return Err(err(hline, format!("header needs `o n_classes count`, got `{header}`")));
        };
        let mut inputs = Vec::with_capacity(count);
        let mut labels = Vec::with_capacity(count);
        for (ln, line) in lines {
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() != o + 1 {
                return Err(err(ln, format!("expected {} fields, found {}", o + 1, tokens.len())));
            }
            let mut x = Vec::with_capacity(o);
            for t in &tokens[..o] {
                match *t {
                    "0" => x.push(0),
                    "1" => x.push(1),
                    other => return Err(err(ln, format!("malformed bit `{other}`"))),
                }
            }
            let y: usize = tokens[o]
                .parse()
                .map_err(|_| err(ln, format!("malformed label `{}`", tokens[o])))?;
            if y >= n_classes {
                return Err(err(ln, format!("label {y} out of range for {n_classes} classes")));
            }
            inputs.push(x);
            labels.push(y);
        }
        if labels.len() != count {
            return Err(err(hline, format!("header promises {count} rows, found {}", labels.len())));
        }
        BinaryDataset::new(o, n_classes, inputs, labels)
    }
}

/// Noisy XOR generator settings.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyXor {
    pub inputs: usize,
    pub noise: f64,
    /// 0-based positions of the two informative inputs.
    pub informative: (usize, usize),
}

impl Default for NoisyXor {
    fn default() -> Self {
        NoisyXor {
            inputs: 12,
            noise: 0.4,
            informative: (0, 1),
        }
    }
}

impl NoisyXor {
    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.informative;
        if a == b || a >= self.inputs || b >= self.inputs {
            return Err(Error::config(format!(
                "informative inputs ({a}, {b}) must be distinct and below {}",
                self.inputs
            )));
        }
        if !(0.0..0.5).contains(&self.noise) {
            return Err(Error::config(format!("noise must be in [0, 0.5), got {}", self.noise)));
        }
        Ok(())
    }

    /// `count` rows of uniform bits labelled by the XOR of the informative
    /// pair, each label flipped with probability `noise`.
    pub fn generate(&self, count: usize, seed: u64) -> Result<BinaryDataset> {
        self.validate()?;
        let mut rng = StreamRng::new(seed, Domain::Data, 0);
        let mut inputs = Vec::with_capacity(count);
        let mut labels = Vec::with_capacity(count);
        for _ in 0..count {
            let x: Vec<u8> = (0..self.inputs).map(|_| rng.random_range(0..2u8)).collect();
            let mut y = (x[self.informative.0] ^ x[self.informative.1]) as usize;
            if rng.unit() < self.noise {
                y ^= 1;
            }
            inputs.push(x);
            labels.push(y);
        }
        BinaryDataset::new(self.inputs, 2, inputs, labels)
    }
}

pub fn gen_noisy_xor(count: usize, spec: &NoisyXor, seed: u64) -> Result<BinaryDataset> {
    spec.generate(count, seed)
}

/// Strict threshold binarization: `v > threshold` maps to 1.
pub fn binarize_threshold(values: &[Vec<f64>], threshold: f64) -> Vec<Vec<u8>> {
    values
        .iter()
        .map(|row| row.iter().map(|&v| u8::from(v > threshold)).collect())
        .collect()
}

/// Per-feature min-max quantizer emitting big-endian binary level codes.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantizer {
    bits: u32,
    ranges: Vec<(f64, f64)>,
}

impl Quantizer {
    /// Learns per-feature ranges from the training rows.
    pub fn fit(train: &[Vec<f64>], bits: u32) -> Result<Self> {
        if !(1..=16).contains(&bits) {
            return Err(Error::config(format!("bits per feature must be in 1..=16, got {bits}")));
        }
        let first = train.first().ok_or(Error::EmptyDataset)?;
        let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); first.len()];
        for row in train {
            if row.len() != ranges.len() {
                return Err(Error::WidthMismatch {
                    expected: ranges.len(),
                    actual: row.len(),
                });
            }
            for (r, &v) in ranges.iter_mut().zip(row) {
                r.0 = r.0.min(v);
                r.1 = r.1.max(v);
            }
        }
        Ok(Quantizer { bits, ranges })
    }

    pub fn output_width(&self) -> usize {
        self.ranges.len() * self.bits as usize
    }

    /// Level in `0..2^bits` for feature `f`; values outside the fitted range
    /// clamp to the end levels.
    pub fn level(&self, f: usize, v: f64) -> u32 {
        let levels = 1u32 << self.bits;
        let (lo, hi) = self.ranges[f];
        if hi <= lo {
            return 0;
        }
        let t = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
        ((t * f64::from(levels)) as u32).min(levels - 1)
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.output_width());
        for (f, &v) in row.iter().enumerate() {
            let level = self.level(f, v);
            for b in (0..self.bits).rev() {
                out.push(((level >> b) & 1) as u8);
            }
        }
        out
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Vec<Vec<u8>> {
        rows.iter().map(|r| self.transform_row(r)).collect()
    }
}

/// Fits a [`Quantizer`] on `values` and applies it to them.
pub fn quantize_bits(values: &[Vec<f64>], bits_per_feature: u32) -> Result<Vec<Vec<u8>>> {
    Ok(Quantizer::fit(values, bits_per_feature)?.transform(values))
}

/// Seeded shuffle then prefix split; `round(fraction * len)` rows train.
pub fn split(dataset: &BinaryDataset, train_fraction: f64, seed: u64) -> Result<(BinaryDataset, BinaryDataset)> {
    let idx = split_indices(dataset.len(), train_fraction, seed)?;
    Ok((dataset.subset(&idx.0), dataset.subset(&idx.1)))
}

pub(crate) fn split_indices(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..=1.0).contains(&train_fraction) {
        return Err(Error::config(format!("train fraction must be in [0, 1], got {train_fraction}")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut StreamRng::new(seed, Domain::Data, 1));
    let cut = (train_fraction * n as f64).round() as usize;
    let test = idx.split_off(cut);
    Ok((idx, test))
}

/// Real-valued table read from CSV: features then a trailing label column.
#[derive(Debug, Clone, PartialEq)]
pub struct RealTable {
    pub values: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// Label names in class-index order.
    pub classes: Vec<String>,
}

impl RealTable {
    /// Comma-separated, last column is the label. Numeric labels are used as
    /// class indices; otherwise distinct names are numbered in order of first
    /// appearance. A non-numeric first line is treated as a header.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        Self::parse_csv(&text, path)
    }

    pub fn parse_csv(text: &str, origin: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: PathBuf::from(origin),
            line,
            message,
        };
        let mut values = Vec::new();
        let mut raw_labels = Vec::new();
        let mut width = None;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() < 2 {
                return Err(err(i + 1, "need at least one feature and a label".into()));
            }
            let (feat, label) = cells.split_at(cells.len() - 1);
            let parsed: std::result::Result<Vec<f64>, _> = feat.iter().map(|c| c.parse::<f64>()).collect();
            let row = match parsed {
                Ok(r) => r,
                Err(_) if values.is_empty() && width.is_none() => {
                    width = Some(feat.len());
                    continue;
                }
                Err(e) => return Err(err(i + 1, format!("bad number: {e}"))),
            };
            match width {
                Some(w) if w != row.len() => {
                    return Err(err(i + 1, format!("expected {w} features, found {}", row.len())))
                }
                _ => width = Some(row.len()),
            }
            values.push(row);
            raw_labels.push(label[0].to_string());
        }
        if values.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let numeric: Option<Vec<usize>> = raw_labels.iter().map(|l| l.parse().ok()).collect();
        let (labels, classes) = match numeric {
            Some(labels) => {
                let n = labels.iter().max().map_or(0, |m| m + 1);
                (labels, (0..n).map(|c| c.to_string()).collect())
            }
            None => {
                let mut classes: Vec<String> = Vec::new();
                let labels = raw_labels
                    .iter()
                    .map(|l| match classes.iter().position(|c| c == l) {
                        Some(i) => i,
                        None => {
                            classes.push(l.clone());
                            classes.len() - 1
                        }
                    })
                    .collect();
                (labels, classes)
            }
        };
        Ok(RealTable {
            values,
            labels,
            classes,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Split rows into train/test index sets, same rule as [`split`].
    pub fn split(&self, train_fraction: f64, seed: u64) -> Result<(RealTable, RealTable)> {
        let (a, b) = split_indices(self.len(), train_fraction, seed)?;
        let pick = |idx: &[usize]| RealTable {
            values: idx.iter().map(|&i| self.values[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes.clone(),
        };
        Ok((pick(&a), pick(&b)))
    }

    /// Binarizes with a fixed threshold.
    pub fn threshold(&self, threshold: f64) -> Result<BinaryDataset> {
        let width = self.values[0].len();
        BinaryDataset::new(
            width,
            self.n_classes(),
            binarize_threshold(&self.values, threshold),
            self.labels.clone(),
        )
    }

    /// Binarizes with a quantizer fitted elsewhere (normally on the training split).
    pub fn quantize(&self, q: &Quantizer) -> Result<BinaryDataset> {
        BinaryDataset::new(q.output_width(), self.n_classes(), q.transform(&self.values), self.labels.clone())
    }
}
