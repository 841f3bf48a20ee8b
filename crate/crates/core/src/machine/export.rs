//! Readable clause extraction.

use std::collections::BTreeSet;
use std::fmt;

use crate::clause::{get_bit, PlaneBlock, Polarity};

use super::TsetlinMachine;

/// Conjunction of the literals a clause includes. Input indices are 0-based;
/// rendering uses 1-based names (`x1`, `~x1`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClauseExpression {
    /// Position of the clause in its bank.
    pub clause: usize,
    pub polarity: Polarity,
    pub positive: BTreeSet<usize>,
    pub negated: BTreeSet<usize>,
}

impl ClauseExpression {
    pub fn is_empty(&self) -> bool {
        self.positive.is_empty() && self.negated.is_empty()
    }

    /// Includes both `x_k` and `~x_k` for some `k`, so it can never fire.
    pub fn is_contradictory(&self) -> bool {
        self.positive.intersection(&self.negated).next().is_some()
    }

    /// Inference-mode output on `x`.
    pub fn evaluate(&self, x: &[u8]) -> bool {
        !self.is_empty()
            && self.positive.iter().all(|&k| x[k] != 0)
            && self.negated.iter().all(|&k| x[k] == 0)
    }

    /// Conjunction text, e.g. `~x1 & x2`, ordered by input.
    pub fn conjunction(&self) -> String {
        let max = self.positive.iter().chain(&self.negated).copied().max();
        let mut terms = Vec::new();
        for k in 0..=max.unwrap_or(0) {
            if self.positive.contains(&k) {
                terms.push(format!("x{}", k + 1));
            }
            if self.negated.contains(&k) {
                terms.push(format!("~x{}", k + 1));
            }
        }
        if terms.is_empty() {
            "TRUE".to_string()
        } else {
            terms.join(" & ")
        }
    }

    /// Per-input mask: `1` for `x_k`, `0` for `~x_k`, `*` for neither and
    /// `X` when both are included.
    pub fn mask(&self, inputs: usize) -> String {
        (0..inputs)
            .map(|k| match (self.positive.contains(&k), self.negated.contains(&k)) {
                (true, true) => "X",
                (true, false) => "1",
                (false, true) => "0",
                (false, false) => "*",
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for ClauseExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = match self.polarity {
            Polarity::Positive => '+',
            Polarity::Negative => '-',
        };
        write!(f, "{sign} {}", self.conjunction())
    }
}

/// Included literals of one packed clause.
pub fn expression_of(block: &PlaneBlock, clause: usize) -> ClauseExpression {
    let o = block.input_width();
    let action = block.action_plane();
    ClauseExpression {
        clause,
        polarity: block.polarity(),
        positive: (0..o).filter(|&k| get_bit(action, k)).collect(),
        negated: (0..o).filter(|&k| get_bit(action, k + o)).collect(),
    }
}

/// Non-empty clauses of `tm`, in bank order.
pub fn prune(tm: &TsetlinMachine) -> Vec<ClauseExpression> {
    tm.blocks()
        .iter()
        .enumerate()
        .map(|(j, b)| expression_of(b, j))
        .filter(|e| !e.is_empty())
        .collect()
}
