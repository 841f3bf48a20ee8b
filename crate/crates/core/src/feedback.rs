//! Type I and Type II feedback tables and their application to one clause.
//!
//! Type I combats false negatives: it rewards Include on true literals of a
//! firing clause with probability `(s-1)/s` and otherwise nudges automata
//! toward Exclude with probability `1/s`. Type II combats false positives:
//! every excluded false literal of a firing clause is penalized toward
//! Include, which is enough to switch the clause off.
//!
//! Each automaton draws its reward test first and its penalty test only when
//! the reward did not fire. Probabilities of exactly 0 or 1 consume no
//! randomness (see [`crate::rng::fires`]).

use crate::automaton::{Action, Event};
use crate::clause::{get_bit, set_bit, ClauseTeam, LiteralVector, PlaneBlock};
use crate::error::{Error, Result};
use crate::rng::{fires, FeedbackRng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackParams {
    s: f64,
    boost: bool,
}

impl FeedbackParams {
    pub fn new(s: f64, boost: bool) -> Result<Self> {
        if !(s > 1.0) || !s.is_finite() {
            return Err(Error::config(format!("s must be a finite value > 1, got {s}")));
        }
        Ok(FeedbackParams { s, boost })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn boost(&self) -> bool {
        self.boost
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackTriple {
    pub reward: f64,
    pub inaction: f64,
    pub penalty: f64,
}

impl FeedbackTriple {
    pub const INACTION: FeedbackTriple = FeedbackTriple {
        reward: 0.0,
        inaction: 1.0,
        penalty: 0.0,
    };

    fn new(reward: f64, inaction: f64, penalty: f64) -> Self {
        FeedbackTriple {
            reward,
            inaction,
            penalty,
        }
    }

    /// Samples an event: reward test first, penalty test only if the reward
    /// test failed.
    #[inline]
    pub fn sample<R: FeedbackRng + ?Sized>(&self, rng: &mut R) -> Event {
        if fires(rng, self.reward) {
            Event::Reward
        } else if fires(rng, self.penalty) {
            Event::Penalty
        } else {
            Event::Inaction
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeedbackKind {
    TypeI,
    TypeII,
}

/// Type I table cell for an automaton with `action`, whose literal has value
/// `literal`, in a clause that evaluated to `clause`.
pub fn type_i_probs(action: Action, literal: bool, clause: bool, params: &FeedbackParams) -> FeedbackTriple {
    let hi = (params.s - 1.0) / params.s;
    let lo = 1.0 / params.s;
    match (action, clause, literal) {
        (Action::Include, true, true) if params.boost => FeedbackTriple::new(1.0, 0.0, 0.0),
        (Action::Include, true, true) => FeedbackTriple::new(hi, lo, 0.0),
        // unreachable: an included false literal forces the clause to 0
        (Action::Include, true, false) => FeedbackTriple::INACTION,
        (Action::Include, false, _) => FeedbackTriple::new(0.0, hi, lo),
        (Action::Exclude, true, true) if params.boost => FeedbackTriple::new(0.0, 0.0, 1.0),
        (Action::Exclude, true, true) => FeedbackTriple::new(0.0, lo, hi),
        (Action::Exclude, _, _) => FeedbackTriple::new(lo, hi, 0.0),
    }
}

/// Type II table cell. Only an excluded false literal in a firing clause is
/// penalized; everything else is inaction.
pub fn type_ii_probs(action: Action, literal: bool, clause: bool) -> FeedbackTriple {
    match (action, clause, literal) {
        (Action::Exclude, true, false) => FeedbackTriple::new(0.0, 0.0, 1.0),
        _ => FeedbackTriple::INACTION,
    }
}

/// Type I cells indexed by `(action, literal, clause)`, computed once.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TypeITable([FeedbackTriple; 8]);

impl TypeITable {
    pub(crate) fn new(params: &FeedbackParams) -> Self {
        let mut cells = [FeedbackTriple::INACTION; 8];
        for (i, cell) in cells.iter_mut().enumerate() {
            let action = if i & 4 != 0 { Action::Include } else { Action::Exclude };
            *cell = type_i_probs(action, i & 2 != 0, i & 1 != 0, params);
        }
        TypeITable(cells)
    }

    #[inline]
    pub(crate) fn get(&self, include: bool, literal: bool, clause: bool) -> &FeedbackTriple {
        &self.0[(include as usize) << 2 | (literal as usize) << 1 | clause as usize]
    }
}

/// Scalar Type I: every automaton samples its own cell, in interleaved order.
pub fn apply_type_i_team<R: FeedbackRng + ?Sized>(
    team: &mut ClauseTeam,
    literals: &LiteralVector,
    clause_out: bool,
    params: &FeedbackParams,
    rng: &mut R,
) {
    for i in 0..team.states.len() {
        let ta = team.states[i];
        let literal = ClauseTeam::literal_for(literals, i);
        let event = type_i_probs(ta.action(), literal, clause_out, params).sample(rng);
        team.states[i] = ta.apply(event);
    }
}

/// Scalar Type II.
pub fn apply_type_ii_team<R: FeedbackRng + ?Sized>(
    team: &mut ClauseTeam,
    literals: &LiteralVector,
    clause_out: bool,
    rng: &mut R,
) {
    for i in 0..team.states.len() {
        let ta = team.states[i];
        let literal = ClauseTeam::literal_for(literals, i);
        let event = type_ii_probs(ta.action(), literal, clause_out).sample(rng);
        team.states[i] = ta.apply(event);
    }
}

/// Reusable increment/decrement masks for packed updates.
#[derive(Debug, Clone, Default)]
pub(crate) struct MaskScratch {
    inc: Vec<u64>,
    dec: Vec<u64>,
}

impl MaskScratch {
    fn reset(&mut self, words: usize) {
        self.inc.clear();
        self.inc.resize(words, 0);
        self.dec.clear();
        self.dec.resize(words, 0);
    }
}

/// Packed Type I. Draws are taken in the same interleaved order as the
/// scalar path, collected into increment/decrement masks, then applied with
/// word-parallel saturating arithmetic.
pub fn apply_type_i_block<R: FeedbackRng + ?Sized>(
    block: &mut PlaneBlock,
    literals: &LiteralVector,
    clause_out: bool,
    params: &FeedbackParams,
    rng: &mut R,
) {
    let table = TypeITable::new(params);
    apply_type_i_block_with(block, literals, clause_out, &table, rng, &mut MaskScratch::default());
}

pub(crate) fn apply_type_i_block_with<R: FeedbackRng + ?Sized>(
    block: &mut PlaneBlock,
    literals: &LiteralVector,
    clause_out: bool,
    table: &TypeITable,
    rng: &mut R,
    scratch: &mut MaskScratch,
) {
    let o = block.input_width();
    scratch.reset(block.word_count());
    let action = block.action_plane();
    let lits = literals.words();
    for k in 0..o {
        for pos in [k, k + o] {
            let include = get_bit(action, pos);
            let cell = table.get(include, get_bit(lits, pos), clause_out);
            match cell.sample(rng) {
                Event::Inaction => {}
                // reward deepens, penalty moves toward the boundary
                Event::Reward if include => set_bit(&mut scratch.inc, pos),
                Event::Penalty if !include => set_bit(&mut scratch.inc, pos),
                _ => set_bit(&mut scratch.dec, pos),
            }
        }
    }
    block.increment(&scratch.inc);
    block.decrement(&scratch.dec);
}

/// Packed Type II: with the clause firing, every excluded automaton whose
/// literal is 0 steps toward Include. No randomness is consumed.
pub fn apply_type_ii_block(block: &mut PlaneBlock, literals: &LiteralVector, clause_out: bool) {
    if !clause_out {
        return;
    }
    let mask: Vec<u64> = block
        .action_plane()
        .iter()
        .zip(literals.words())
        .map(|(a, l)| !a & !l)
        .collect();
    // increment() masks off the tail bits
    block.increment(&mask);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::TaState;
    use crate::clause::Polarity;
    use crate::rng::{AlwaysFire, Domain, NeverFire, StreamRng};

    fn params(s: f64, boost: bool) -> FeedbackParams {
        FeedbackParams::new(s, boost).unwrap()
    }

    fn triple(t: FeedbackTriple) -> (f64, f64, f64) {
        (t.reward, t.inaction, t.penalty)
    }

    #[test]
    fn type_i_cells() {
        let p = params(4.0, false);
        assert_eq!(triple(type_i_probs(Action::Include, true, true, &p)), (0.75, 0.25, 0.0));
        assert_eq!(triple(type_i_probs(Action::Exclude, true, true, &p)), (0.0, 0.25, 0.75));
        assert_eq!(
            triple(type_i_probs(Action::Include, true, true, &params(4.0, true))),
            (1.0, 0.0, 0.0)
        );
        assert_eq!(triple(type_i_probs(Action::Exclude, false, false, &p)), (0.25, 0.75, 0.0));
        assert_eq!(triple(type_i_probs(Action::Include, false, false, &p)), (0.0, 0.75, 0.25));
        assert_eq!(triple(type_i_probs(Action::Include, true, false, &p)), (0.0, 0.75, 0.25));
        assert_eq!(triple(type_i_probs(Action::Exclude, false, true, &p)), (0.25, 0.75, 0.0));
        assert_eq!(type_i_probs(Action::Include, false, true, &p), FeedbackTriple::INACTION);
    }

    #[test]
    fn type_ii_cells() {
        assert_eq!(triple(type_ii_probs(Action::Exclude, false, true)), (0.0, 0.0, 1.0));
        assert_eq!(triple(type_ii_probs(Action::Include, true, true)), (0.0, 1.0, 0.0));
        assert_eq!(triple(type_ii_probs(Action::Exclude, true, false)), (0.0, 1.0, 0.0));
        assert_eq!(type_ii_probs(Action::Include, false, true), FeedbackTriple::INACTION);
    }

    #[test]
    fn triples_sum_to_one_and_boost_is_local() {
        for s in [1.5, 3.0, 3.9, 10.0, 40.0] {
            let off = params(s, false);
            let on = params(s, true);
            for action in [Action::Include, Action::Exclude] {
                for literal in [false, true] {
                    for clause in [false, true] {
                        for t in [
                            type_i_probs(action, literal, clause, &off),
                            type_i_probs(action, literal, clause, &on),
                            type_ii_probs(action, literal, clause),
                        ] {
                            assert!((t.reward + t.inaction + t.penalty - 1.0).abs() < 1e-12);
                        }
                        let a = type_i_probs(action, literal, clause, &off);
                        let b = type_i_probs(action, literal, clause, &on);
                        if !(literal && clause) {
                            assert_eq!(a, b);
                        }
                        let t2 = type_ii_probs(action, literal, clause);
                        assert_eq!(t2.reward, 0.0);
                        if action == Action::Include {
                            assert_eq!(t2, FeedbackTriple::INACTION);
                        }
                        if literal && clause && action == Action::Include {
                            assert_eq!(a.penalty, 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_s() {
        assert!(FeedbackParams::new(1.0, false).is_err());
        assert!(FeedbackParams::new(f64::NAN, false).is_err());
        assert!(FeedbackParams::new(0.5, false).is_err());
    }

    fn team(values: &[u16], half: u16) -> ClauseTeam {
        ClauseTeam::new(
            values.iter().map(|&v| TaState::new(v, half)).collect(),
            Polarity::Positive,
        )
        .unwrap()
    }

    #[test]
    fn forced_type_i_boosted_increments_true_includes() {
        let p = params(3.0, true);
        let lits = LiteralVector::new(&[1, 1, 1]);
        let before = team(&[4, 5, 6, 7, 7, 4], 4);
        let mut t = before.clone();
        apply_type_i_team(&mut t, &lits, true, &p, &mut AlwaysFire);
        for (i, (a, b)) in before.states.iter().zip(&t.states).enumerate() {
            if i % 2 == 0 {
                // x_k = 1: column 1 reward, saturating at 2N - 1
                assert_eq!(b.value(), (a.value() + 1).min(7));
            } else {
                // ~x_k = 0 while included: unreachable cell, inaction
                assert_eq!(b, a);
            }
        }
        let mut blk = PlaneBlock::pack(&before).unwrap();
        apply_type_i_block(&mut blk, &lits, true, &p, &mut AlwaysFire);
        assert_eq!(blk.unpack(), t);
    }

    #[test]
    fn never_fire_leaves_type_i_unchanged() {
        let p = params(3.9, false);
        let lits = LiteralVector::new(&[1, 0, 1]);
        let t0 = team(&[3, 4, 0, 7, 4, 2], 4);
        for clause in [false, true] {
            let mut t = t0.clone();
            apply_type_i_team(&mut t, &lits, clause, &p, &mut NeverFire);
            assert_eq!(t, t0);
            let mut b = PlaneBlock::pack(&t0).unwrap();
            apply_type_i_block(&mut b, &lits, clause, &p, &mut NeverFire);
            assert_eq!(b.unpack(), t0);
        }
    }

    #[test]
    fn type_ii_examples() {
        let n = 64;
        let lits = LiteralVector::new(&[1, 0]);
        let t0 = team(&[n - 1; 4], n);
        let mut rng = StreamRng::new(0, Domain::Clause, 0);

        let mut t = t0.clone();
        apply_type_ii_team(&mut t, &lits, false, &mut rng);
        assert_eq!(t, t0);

        let mut t = t0.clone();
        apply_type_ii_team(&mut t, &lits, true, &mut rng);
        // x1 = 1 and ~x2 = 1 untouched; ~x1 and x2 are false and flip
        let values: Vec<u16> = t.states.iter().map(|s| s.value()).collect();
        assert_eq!(values, vec![n - 1, n, n, n - 1]);
        assert_eq!(t.states[1].action(), Action::Include);

        let mut b = PlaneBlock::pack(&t0).unwrap();
        apply_type_ii_block(&mut b, &lits, true);
        assert_eq!(b.unpack(), t);
        let mut b = PlaneBlock::pack(&t0).unwrap();
        apply_type_ii_block(&mut b, &lits, false);
        assert_eq!(b.unpack(), t0);
    }

    #[test]
    fn type_ii_without_offending_literals_is_noop() {
        // every automaton includes; no excluded literal can be false
        let lits = LiteralVector::new(&[1, 0]);
        let t0 = team(&[5, 5, 5, 5], 4);
        let mut t = t0.clone();
        apply_type_ii_team(&mut t, &lits, true, &mut NeverFire);
        assert_eq!(t, t0);
        // excluded literals that are all true
        let t0 = team(&[2, 5, 5, 2], 4);
        let mut b = PlaneBlock::pack(&t0).unwrap();
        apply_type_ii_block(&mut b, &lits, true);
        assert_eq!(b.unpack(), t0);
    }
}
