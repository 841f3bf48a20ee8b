//! Conjunctive clauses: the scalar team of automata, the literal vector, and
//! the bit-plane packed block used by the training engine.
//!
//! Two automaton orders exist. [`ClauseTeam`] is interleaved
//! (`x1, ~x1, x2, ~x2, ...`). [`PlaneBlock`] and [`LiteralVector`] are
//! planar (`x1..xo, ~x1..~xo`), so a clause output is a word-wise test of the
//! action plane against the literal bits. [`PlaneBlock::pack`] and
//! [`PlaneBlock::unpack`] perform the permutation.

use crate::automaton::{Action, TaState};
use crate::error::{Error, Result};

pub(crate) const WORD_BITS: usize = 64;

#[inline]
pub(crate) const fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD_BITS)
}

/// Mask of the live bits in the last word of an `n`-bit sequence.
#[inline]
pub(crate) const fn tail_mask(n: usize) -> u64 {
    let r = n % WORD_BITS;
    if r == 0 {
        u64::MAX
    } else {
        (1u64 << r) - 1
    }
}

#[inline]
pub(crate) fn get_bit(words: &[u64], i: usize) -> bool {
    (words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
}

#[inline]
pub(crate) fn set_bit(words: &mut [u64], i: usize) {
    words[i / WORD_BITS] |= 1u64 << (i % WORD_BITS);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    /// Polarity of the clause at 0-based position `j`: even positions (odd in
    /// 1-based numbering) vote for output 1.
    #[inline]
    pub fn for_position(j: usize) -> Self {
        if j % 2 == 0 {
            Polarity::Positive
        } else {
            Polarity::Negative
        }
    }

    #[inline]
    pub fn sign(self) -> i32 {
        match self {
            Polarity::Positive => 1,
            Polarity::Negative => -1,
        }
    }
}

/// How an all-exclude clause evaluates.
///
/// Training follows the conjunction with a leading `1`, so an empty clause
/// outputs 1. Inference outputs 0 so that predictions agree with the pruned
/// model, where empty clauses are removed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    Training,
    Inference,
}

/// The input `X` extended with its negation: bits `0..o` are `X`, bits
/// `o..2o` are `NOT X`. Bits beyond `2o` are zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LiteralVector {
    o: usize,
    words: Vec<u64>,
}

impl LiteralVector {
    /// Builds the literal vector from 0/1 input values. Any non-zero value
    /// counts as 1.
    pub fn new(x: &[u8]) -> Self {
        let o = x.len();
        let mut words = vec![0u64; words_for(2 * o)];
        for (k, &v) in x.iter().enumerate() {
            if v != 0 {
                set_bit(&mut words, k);
            } else {
                set_bit(&mut words, k + o);
            }
        }
        LiteralVector { o, words }
    }

    #[inline]
    pub fn input_width(&self) -> usize {
        self.o
    }

    /// Literal value at planar position `i` in `0..2o`.
    #[inline]
    pub fn literal(&self, i: usize) -> bool {
        get_bit(&self.words, i)
    }

    /// Value of `x_k` (0-based).
    #[inline]
    pub fn input(&self, k: usize) -> bool {
        self.literal(k)
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }
}

/// Scalar reference for one clause: `2o` automata in interleaved order,
/// index `2k` guarding `x_k` and `2k + 1` guarding `NOT x_k` (0-based `k`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClauseTeam {
    pub states: Vec<TaState>,
    pub polarity: Polarity,
}

impl ClauseTeam {
    pub fn new(states: Vec<TaState>, polarity: Polarity) -> Result<Self> {
        if states.is_empty() || states.len() % 2 != 0 {
            return Err(Error::config(format!(
                "a clause team needs 2o automata, got {}",
                states.len()
            )));
        }
        Ok(ClauseTeam { states, polarity })
    }

    #[inline]
    pub fn input_width(&self) -> usize {
        self.states.len() / 2
    }

    /// Literal value seen by interleaved automaton `i`.
    #[inline]
    pub fn literal_for(literals: &LiteralVector, i: usize) -> bool {
        let k = i / 2;
        if i % 2 == 0 {
            literals.literal(k)
        } else {
            literals.literal(k + literals.input_width())
        }
    }

    pub fn evaluate(&self, literals: &LiteralVector, mode: EvalMode) -> Result<bool> {
        if literals.input_width() != self.input_width() {
            return Err(Error::WidthMismatch {
                expected: self.input_width(),
                actual: literals.input_width(),
            });
        }
        let mut any_included = false;
        for (i, ta) in self.states.iter().enumerate() {
            if ta.action() == Action::Include {
                any_included = true;
                if !Self::literal_for(literals, i) {
                    return Ok(false);
                }
            }
        }
        Ok(any_included || mode == EvalMode::Training)
    }
}

/// Bit-plane transposition of a clause team's states.
///
/// Plane `p` holds bit `p` of every automaton's state value; plane `b - 1`
/// is the action plane (Include where set). Planes are stored back to back,
/// `words` words each.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PlaneBlock {
    o: usize,
    bits: u8,
    words: usize,
    polarity: Polarity,
    planes: Vec<u64>,
}

impl PlaneBlock {
    /// Transposes raw state values, kept in the given order, into planes.
    pub fn from_states(states: &[u16], bits: u8, polarity: Polarity) -> Result<Self> {
        check_bits(bits)?;
        if states.is_empty() || states.len() % 2 != 0 {
            return Err(Error::config(format!(
                "a plane block needs 2o automata, got {}",
                states.len()
            )));
        }
        let n = states.len();
        let words = words_for(n);
        let mut planes = vec![0u64; bits as usize * words];
        for (i, &v) in states.iter().enumerate() {
            if u32::from(v) >> bits != 0 {
                return Err(Error::config(format!("state {v} does not fit in {bits} bits")));
            }
            for p in 0..bits as usize {
                if (v >> p) & 1 == 1 {
                    set_bit(&mut planes[p * words..(p + 1) * words], i);
                }
            }
        }
        Ok(PlaneBlock {
            o: n / 2,
            bits,
            words,
            polarity,
            planes,
        })
    }

    /// Inverse of [`PlaneBlock::from_states`].
    pub fn states(&self) -> Vec<u16> {
        (0..2 * self.o).map(|i| self.state(i)).collect()
    }

    /// State value of the automaton at planar position `i`.
    #[inline]
    pub fn state(&self, i: usize) -> u16 {
        let mut v = 0u16;
        for p in 0..self.bits as usize {
            if get_bit(self.plane(p), i) {
                v |= 1 << p;
            }
        }
        v
    }

    /// Packs a scalar team. Requires `2N = 2^b`.
    pub fn pack(team: &ClauseTeam) -> Result<Self> {
        let half = team.states[0].half_range();
        let bits = bits_for_half(half)?;
        if team.states.iter().any(|s| s.half_range() != half) {
            return Err(Error::config("automata of one clause disagree on N"));
        }
        let o = team.input_width();
        let mut planar = vec![0u16; 2 * o];
        for k in 0..o {
            planar[k] = team.states[2 * k].value();
            planar[k + o] = team.states[2 * k + 1].value();
        }
        Self::from_states(&planar, bits, team.polarity)
    }

    pub fn unpack(&self) -> ClauseTeam {
        let half = 1u16 << (self.bits - 1);
        let o = self.o;
        let mut states = Vec::with_capacity(2 * o);
        for k in 0..o {
            states.push(TaState::new(self.state(k), half));
            states.push(TaState::new(self.state(k + o), half));
        }
        ClauseTeam {
            states,
            polarity: self.polarity,
        }
    }

    #[inline]
    pub fn input_width(&self) -> usize {
        self.o
    }

    #[inline]
    pub fn bits(&self) -> u8 {
        self.bits
    }

    #[inline]
    pub fn polarity(&self) -> Polarity {
        self.polarity
    }

    #[inline]
    pub fn word_count(&self) -> usize {
        self.words
    }

    #[inline]
    pub fn plane(&self, p: usize) -> &[u64] {
        &self.planes[p * self.words..(p + 1) * self.words]
    }

    /// Include mask in planar order.
    #[inline]
    pub fn action_plane(&self) -> &[u64] {
        self.plane(self.bits as usize - 1)
    }

    #[inline]
    fn live_mask(&self, w: usize) -> u64 {
        if w + 1 == self.words {
            tail_mask(2 * self.o)
        } else {
            u64::MAX
        }
    }

    /// Saturating +1 of every masked automaton, as a ripple carry over planes.
    pub fn increment(&mut self, mask: &[u64]) {
        let (bits, words) = (self.bits as usize, self.words);
        for w in 0..words {
            let m = mask[w] & self.live_mask(w);
            if m == 0 {
                continue;
            }
            let mut saturated = u64::MAX;
            for p in 0..bits {
                saturated &= self.planes[p * words + w];
            }
            let mut carry = m & !saturated;
            for p in 0..bits {
                let plane = &mut self.planes[p * words + w];
                let next = *plane & carry;
                *plane ^= carry;
                carry = next;
                if carry == 0 {
                    break;
                }
            }
        }
    }

    /// Saturating -1 of every masked automaton, as a ripple borrow over planes.
    pub fn decrement(&mut self, mask: &[u64]) {
        let (bits, words) = (self.bits as usize, self.words);
        for w in 0..words {
            let m = mask[w] & self.live_mask(w);
            if m == 0 {
                continue;
            }
            let mut nonzero = 0u64;
            for p in 0..bits {
                nonzero |= self.planes[p * words + w];
            }
            let mut borrow = m & nonzero;
            for p in 0..bits {
                let plane = &mut self.planes[p * words + w];
                let next = !*plane & borrow;
                *plane ^= borrow;
                borrow = next;
                if borrow == 0 {
                    break;
                }
            }
        }
    }

    /// Clause output: no included literal may be false. In inference mode an
    /// all-exclude clause outputs 0.
    #[inline]
    pub fn evaluate(&self, literals: &LiteralVector, mode: EvalMode) -> bool {
        debug_assert_eq!(literals.input_width(), self.o);
        let action = self.action_plane();
        let lits = literals.words();
        let mut any_included = false;
        for (a, l) in action.iter().zip(lits) {
            if a & !l != 0 {
                return false;
            }
            any_included |= *a != 0;
        }
        any_included || mode == EvalMode::Training
    }

    /// True when every automaton selects Exclude.
    pub fn is_empty_clause(&self) -> bool {
        self.action_plane().iter().all(|&w| w == 0)
    }
}

fn check_bits(bits: u8) -> Result<()> {
    if !(1..=16).contains(&bits) {
        return Err(Error::config(format!("state bits must be in 1..=16, got {bits}")));
    }
    Ok(())
}

/// `b` such that `2N = 2^b`.
pub fn bits_for_half(half: u16) -> Result<u8> {
    if !half.is_power_of_two() {
        return Err(Error::config(format!(
            "packed automata need N a power of two, got N = {half}"
        )));
    }
    Ok(half.trailing_zeros() as u8 + 1)
}
